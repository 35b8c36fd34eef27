//! Exact small-tensor algebra on 3x3 and 3x3x3 objects.
//!
//! Symmetry is structural: `SymTensor3` stores six independent components
//! (ordering 11, 22, 33, 23, 13, 12) and `DevTensor3` stores five, so
//! symmetry and tracelessness cannot drift during time stepping. All
//! operations are pure and allocation-free.

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};

pub type Vec3 = [f64; 3];

pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3(a: &Vec3) -> f64 {
    dot3(a, a).sqrt()
}

/// Component order of a stored symmetric tensor: (i, j) index pairs.
pub const SYM_INDEX: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

/// Position of the stored component holding entry (i, j) of a symmetric tensor.
pub const fn sym_slot(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) | (2, 1) => 3,
        (0, 2) | (2, 0) => 4,
        (0, 1) | (1, 0) => 5,
        _ => usize::MAX,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorError {
    /// The spin argument was not antisymmetric to tolerance.
    NotAntisymmetric { defect: f64 },
}

impl fmt::Display for TensorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorError::NotAntisymmetric { defect } => {
                write!(f, "spin tensor is not antisymmetric (defect {defect:.3e})")
            }
        }
    }
}

impl std::error::Error for TensorError {}

/// Symmetric 3x3 tensor, six stored components in the order 11, 22, 33, 23, 13, 12.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor3 {
    pub c: [f64; 6],
}

impl SymTensor3 {
    pub const ZERO: SymTensor3 = SymTensor3 { c: [0.0; 6] };

    pub fn new(c: [f64; 6]) -> Self {
        SymTensor3 { c }
    }

    pub fn identity() -> Self {
        SymTensor3 {
            c: [1.0, 1.0, 1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        SymTensor3 {
            c: [a, b, c, 0.0, 0.0, 0.0],
        }
    }

    /// Spherical tensor s * I.
    pub fn spherical(s: f64) -> Self {
        SymTensor3 {
            c: [s, s, s, 0.0, 0.0, 0.0],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[sym_slot(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.c[0] + self.c[1] + self.c[2]
    }

    pub fn sph(&self) -> SymTensor3 {
        SymTensor3::spherical(self.trace() / 3.0)
    }

    pub fn dev(&self) -> DevTensor3 {
        let s = self.trace() / 3.0;
        DevTensor3 {
            d: [self.c[0] - s, self.c[1] - s, self.c[3], self.c[4], self.c[5]],
        }
    }

    /// Full contraction A : B (off-diagonal entries counted twice).
    pub fn dot(&self, o: &SymTensor3) -> f64 {
        self.c[0] * o.c[0]
            + self.c[1] * o.c[1]
            + self.c[2] * o.c[2]
            + 2.0 * (self.c[3] * o.c[3] + self.c[4] * o.c[4] + self.c[5] * o.c[5])
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn scale(&self, s: f64) -> SymTensor3 {
        let mut c = self.c;
        for v in &mut c {
            *v *= s;
        }
        SymTensor3 { c }
    }

    pub fn to_full(&self) -> Tensor3 {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.get(i, j);
            }
        }
        Tensor3 { m }
    }

    /// Matrix product with a general tensor (result is generally not symmetric).
    pub fn mul_full(&self, o: &Tensor3) -> Tensor3 {
        self.to_full().mul(&o.clone())
    }

    /// A v (matrix-vector product).
    pub fn apply(&self, v: &Vec3) -> Vec3 {
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = self.get(i, 0) * v[0] + self.get(i, 1) * v[1] + self.get(i, 2) * v[2];
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }
}

impl Add for SymTensor3 {
    type Output = SymTensor3;
    fn add(self, o: SymTensor3) -> SymTensor3 {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c.iter()) {
            *a += b;
        }
        SymTensor3 { c }
    }
}

impl AddAssign for SymTensor3 {
    fn add_assign(&mut self, o: SymTensor3) {
        for (a, b) in self.c.iter_mut().zip(o.c.iter()) {
            *a += b;
        }
    }
}

impl Sub for SymTensor3 {
    type Output = SymTensor3;
    fn sub(self, o: SymTensor3) -> SymTensor3 {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c.iter()) {
            *a -= b;
        }
        SymTensor3 { c }
    }
}

impl Neg for SymTensor3 {
    type Output = SymTensor3;
    fn neg(self) -> SymTensor3 {
        self.scale(-1.0)
    }
}

/// Trace-free symmetric 3x3 tensor; five stored components 11, 22, 23, 13, 12
/// with the 33 entry reconstructed as -(11 + 22).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DevTensor3 {
    pub d: [f64; 5],
}

impl DevTensor3 {
    pub const ZERO: DevTensor3 = DevTensor3 { d: [0.0; 5] };

    pub fn t33(&self) -> f64 {
        -(self.d[0] + self.d[1])
    }

    pub fn to_sym(&self) -> SymTensor3 {
        SymTensor3 {
            c: [self.d[0], self.d[1], self.t33(), self.d[2], self.d[3], self.d[4]],
        }
    }

    pub fn dot(&self, o: &DevTensor3) -> f64 {
        self.to_sym().dot(&o.to_sym())
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }

    pub fn scale(&self, s: f64) -> DevTensor3 {
        let mut d = self.d;
        for v in &mut d {
            *v *= s;
        }
        DevTensor3 { d }
    }
}

/// General 3x3 tensor (row-major), e.g. a velocity gradient.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tensor3 {
    pub m: [[f64; 3]; 3],
}

impl Tensor3 {
    pub const ZERO: Tensor3 = Tensor3 { m: [[0.0; 3]; 3] };

    pub fn new(m: [[f64; 3]; 3]) -> Self {
        Tensor3 { m }
    }

    pub fn transpose(&self) -> Tensor3 {
        let mut t = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                t[i][j] = self.m[j][i];
            }
        }
        Tensor3 { m: t }
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn mul(&self, o: &Tensor3) -> Tensor3 {
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += self.m[i][k] * o.m[k][j];
                }
                r[i][j] = s;
            }
        }
        Tensor3 { m: r }
    }

    pub fn sym_part(&self) -> SymTensor3 {
        SymTensor3 {
            c: [
                self.m[0][0],
                self.m[1][1],
                self.m[2][2],
                0.5 * (self.m[1][2] + self.m[2][1]),
                0.5 * (self.m[0][2] + self.m[2][0]),
                0.5 * (self.m[0][1] + self.m[1][0]),
            ],
        }
    }

    pub fn skw_part(&self) -> Tensor3 {
        let mut t = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                t[i][j] = 0.5 * (self.m[i][j] - self.m[j][i]);
            }
        }
        Tensor3 { m: t }
    }

    pub fn norm2(&self) -> f64 {
        let mut s = 0.0;
        for row in &self.m {
            for v in row {
                s += v * v;
            }
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }
}

/// Third-order tensor with 27 components, index (i, j, k) -> 9i + 3j + k.
/// Holds second velocity gradients and hyperstress values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThirdOrderTensor {
    pub t: [f64; 27],
}

impl Default for ThirdOrderTensor {
    fn default() -> Self {
        ThirdOrderTensor { t: [0.0; 27] }
    }
}

impl ThirdOrderTensor {
    pub const ZERO: ThirdOrderTensor = ThirdOrderTensor { t: [0.0; 27] };

    pub const fn idx(i: usize, j: usize, k: usize) -> usize {
        9 * i + 3 * j + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.t[Self::idx(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.t[Self::idx(i, j, k)] = v;
    }

    pub fn norm2(&self) -> f64 {
        self.t.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn scale(&self, s: f64) -> ThirdOrderTensor {
        let mut t = self.t;
        for v in &mut t {
            *v *= s;
        }
        ThirdOrderTensor { t }
    }

    pub fn is_finite(&self) -> bool {
        self.t.iter().all(|v| v.is_finite())
    }
}

/// Splits a symmetric tensor into (trace, spherical part, deviatoric part).
pub fn trace_sph_dev(a: &SymTensor3) -> (f64, SymTensor3, DevTensor3) {
    (a.trace(), a.sph(), a.dev())
}

/// Splits a general tensor into its symmetric and antisymmetric parts.
pub fn sym_skw(l: &Tensor3) -> (SymTensor3, Tensor3) {
    (l.sym_part(), l.skw_part())
}

/// The non-advective part E W - W E of the corotational transport operator.
///
/// Requires an antisymmetric spin `w` (checked against a 1e-12 relative
/// tolerance); the result is symmetric by construction.
pub fn jaumann_spin_term(w: &Tensor3, e: &SymTensor3) -> Result<SymTensor3, TensorError> {
    let mut defect: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            defect = defect.max((w.m[i][j] + w.m[j][i]).abs());
        }
    }
    let scale = 1.0 + w.norm();
    if defect > 1e-12 * scale {
        return Err(TensorError::NotAntisymmetric { defect });
    }
    Ok(spin_product(w, e))
}

/// E W - W E without the antisymmetry check; used in inner loops where the
/// spin was just produced by `skw_part`.
pub fn spin_product(w: &Tensor3, e: &SymTensor3) -> SymTensor3 {
    // (EW - WE)_{ij} = sum_k E_ik W_kj - W_ik E_kj; fill the six stored slots.
    let mut out = [0.0; 6];
    for (slot, &(i, j)) in SYM_INDEX.iter().enumerate() {
        let mut s = 0.0;
        for k in 0..3 {
            s += e.get(i, k) * w.m[k][j] - w.m[i][k] * e.get(k, j);
        }
        out[slot] = s;
    }
    SymTensor3 { c: out }
}

/// S : (W E - E W) with W = skw(L); vanishes whenever S and E commute.
pub fn commutator_contraction(s: &SymTensor3, e: &SymTensor3, l: &Tensor3) -> f64 {
    let w = l.skw_part();
    // W E - E W = -(E W - W E)
    let t = spin_product(&w, e);
    -s.dot(&t)
}

/// Full contraction of two third-order tensors.
pub fn triple_contraction(h1: &ThirdOrderTensor, h2: &ThirdOrderTensor) -> f64 {
    let mut s = 0.0;
    for i in 0..27 {
        s += h1.t[i] * h2.t[i];
    }
    s
}

/// [G box G]_{ij} = sum_{kl} G_{ikl} G_{jkl}; symmetric positive semi-definite
/// with trace |G|^2.
pub fn boxtimes(g: &ThirdOrderTensor) -> SymTensor3 {
    let mut out = [0.0; 6];
    for (slot, &(i, j)) in SYM_INDEX.iter().enumerate() {
        let mut s = 0.0;
        for k in 0..3 {
            for l in 0..3 {
                s += g.get(i, k, l) * g.get(j, k, l);
            }
        }
        out[slot] = s;
    }
    SymTensor3 { c: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::SplitMix64;

    fn rand_sym(rng: &mut SplitMix64) -> SymTensor3 {
        let mut c = [0.0; 6];
        for v in &mut c {
            *v = rng.next_signed();
        }
        SymTensor3 { c }
    }

    fn rand_full(rng: &mut SplitMix64) -> Tensor3 {
        let mut m = [[0.0; 3]; 3];
        for row in &mut m {
            for v in row {
                *v = rng.next_signed();
            }
        }
        Tensor3 { m }
    }

    #[test]
    fn sph_dev_identity_and_zero() {
        let (tr, sph, dev) = trace_sph_dev(&SymTensor3::identity());
        assert_eq!(tr, 3.0);
        assert_eq!(sph, SymTensor3::identity());
        assert_eq!(dev.to_sym(), SymTensor3::ZERO);

        let (tr0, sph0, dev0) = trace_sph_dev(&SymTensor3::ZERO);
        assert_eq!(tr0, 0.0);
        assert_eq!(sph0, SymTensor3::ZERO);
        assert_eq!(dev0.to_sym(), SymTensor3::ZERO);
    }

    #[test]
    fn sph_dev_hand_case() {
        let a = SymTensor3::diag(1.0, 0.0, 0.0);
        let (tr, sph, dev) = trace_sph_dev(&a);
        assert!((tr - 1.0).abs() < 1e-15);
        let third = 1.0 / 3.0;
        for (got, want) in sph.c.iter().zip([third, third, third, 0.0, 0.0, 0.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        let ds = dev.to_sym();
        for (got, want) in ds.c.iter().zip([2.0 * third, -third, -third, 0.0, 0.0, 0.0]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn dev_projection_properties() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..200 {
            let a = rand_sym(&mut rng);
            let d = a.dev().to_sym();
            // dev of dev is dev, trace of dev is zero, sph + dev reconstructs.
            assert!((d.dev().to_sym() - d).norm() <= 1e-14 * (1.0 + d.norm()));
            assert!(d.trace().abs() <= 1e-14 * (1.0 + a.norm()));
            assert!((a.sph() + d - a).norm() <= 1e-14 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn sym_skw_cases() {
        let mut l = Tensor3::ZERO;
        l.m[0][1] = 1.0;
        let (s, w) = sym_skw(&l);
        assert!((s.get(0, 1) - 0.5).abs() < 1e-15);
        assert!((s.get(1, 0) - 0.5).abs() < 1e-15);
        assert!((w.m[0][1] - 0.5).abs() < 1e-15);
        assert!((w.m[1][0] + 0.5).abs() < 1e-15);

        let mut rng = SplitMix64::new(3);
        let sym_input = rand_sym(&mut rng).to_full();
        let (s2, w2) = sym_skw(&sym_input);
        assert!((s2.to_full().norm() - sym_input.norm()).abs() < 1e-13);
        assert!(w2.norm() < 1e-15);

        let (s0, w0) = sym_skw(&Tensor3::ZERO);
        assert_eq!(s0, SymTensor3::ZERO);
        assert_eq!(w0, Tensor3::ZERO);
    }

    #[test]
    fn jaumann_spin_hand_case() {
        // planar rotation spin, strain along the first axis
        let w = Tensor3::new([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let e = SymTensor3::diag(1.0, 0.0, 0.0);
        let r = jaumann_spin_term(&w, &e).unwrap();
        let want = Tensor3::new([[0.0, -1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert!((r.to_full().m[0][1] - want.m[0][1]).abs() < 1e-15);
        assert!((r.to_full().m[1][0] - want.m[1][0]).abs() < 1e-15);
        assert!(r.get(0, 0).abs() < 1e-15 && r.get(2, 2).abs() < 1e-15);
    }

    #[test]
    fn jaumann_spin_trivials() {
        let mut rng = SplitMix64::new(11);
        let e = rand_sym(&mut rng);
        assert_eq!(jaumann_spin_term(&Tensor3::ZERO, &e).unwrap(), SymTensor3::ZERO);

        let l = rand_full(&mut rng);
        let w = l.skw_part();
        let r = jaumann_spin_term(&w, &SymTensor3::identity()).unwrap();
        assert!(r.norm() < 1e-14);
    }

    #[test]
    fn jaumann_spin_rejects_nonantisymmetric() {
        let w = Tensor3::new([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert!(matches!(
            jaumann_spin_term(&w, &SymTensor3::identity()),
            Err(TensorError::NotAntisymmetric { .. })
        ));
    }

    #[test]
    fn jaumann_spin_result_symmetric_randomized() {
        // structural symmetry claim: output is a SymTensor3 whose full form
        // has zero antisymmetric part for arbitrary inputs
        let mut rng = SplitMix64::new(23);
        for _ in 0..500 {
            let w = rand_full(&mut rng).skw_part();
            let e = rand_sym(&mut rng);
            let r = spin_product(&w, &e).to_full();
            assert!(r.skw_part().norm() == 0.0);
        }
    }

    #[test]
    fn commutator_contraction_vanishes_for_commuting_pairs() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..500 {
            // S = aI + bE + cE^2 commutes with E
            let e = rand_sym(&mut rng);
            let e2 = e.to_full().mul(&e.to_full()).sym_part();
            let (a, b, c) = (rng.next_signed(), rng.next_signed(), rng.next_signed());
            let s = SymTensor3::spherical(a) + e.scale(b) + e2.scale(c);
            let l = rand_full(&mut rng);
            let v = commutator_contraction(&s, &e, &l);
            let bound = 1e-12 * (1.0 + s.norm()) * (1.0 + e.norm()) * (1.0 + l.norm());
            assert!(v.abs() <= bound, "contraction {v} exceeds {bound}");
        }
    }

    #[test]
    fn commutator_contraction_trivials() {
        let mut rng = SplitMix64::new(17);
        let s = rand_sym(&mut rng);
        let e = rand_sym(&mut rng);
        // symmetric L means zero spin
        let l = rand_sym(&mut rng).to_full();
        assert!(commutator_contraction(&s, &e, &l).abs() < 1e-14);

        // commuting diagonal pair
        let s = SymTensor3::diag(1.0, 2.0, 3.0);
        let e = SymTensor3::diag(1.0, 2.0, 3.0);
        let l = rand_full(&mut rng);
        assert!(commutator_contraction(&s, &e, &l).abs() <= 1e-13);
    }

    #[test]
    fn triple_contraction_cases() {
        let mut h = ThirdOrderTensor::ZERO;
        assert_eq!(triple_contraction(&h, &h), 0.0);
        h.set(0, 1, 2, 2.0);
        assert_eq!(triple_contraction(&h, &h), 4.0);

        // (|H|^{p-2} H) ... H = |H|^p
        let mut rng = SplitMix64::new(31);
        for &p in &[3.5, 4.0, 5.0] {
            let mut g = ThirdOrderTensor::ZERO;
            for v in &mut g.t {
                *v = rng.next_signed();
            }
            let n = g.norm();
            let scaled = g.scale(n.powf(p - 2.0));
            let lhs = triple_contraction(&scaled, &g);
            let rhs = n.powf(p);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn boxtimes_cases() {
        assert_eq!(boxtimes(&ThirdOrderTensor::ZERO), SymTensor3::ZERO);

        let mut g = ThirdOrderTensor::ZERO;
        g.set(0, 1, 2, 2.0);
        let b = boxtimes(&g);
        assert_eq!(b.get(0, 0), 4.0);
        assert_eq!(b.get(1, 1), 0.0);
        assert_eq!(b.get(0, 1), 0.0);

        let mut rng = SplitMix64::new(41);
        for _ in 0..200 {
            let mut g = ThirdOrderTensor::ZERO;
            for v in &mut g.t {
                *v = rng.next_signed();
            }
            let b = boxtimes(&g);
            // trace identity
            let tr = b.trace();
            let n2 = triple_contraction(&g, &g);
            assert!((tr - n2).abs() <= 1e-13 * n2.max(1.0));
            // positive semi-definite along random directions
            let x = [rng.next_signed(), rng.next_signed(), rng.next_signed()];
            let bx = b.apply(&x);
            assert!(dot3(&x, &bx) >= -1e-13 * n2.max(1.0));
        }
    }
}
