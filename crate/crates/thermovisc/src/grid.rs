//! Structured box grid with cell-centered collocated fields.
//!
//! The domain is a rectangular box split into `nx * ny * nz` equal cells.
//! An axis with a single cell is inactive: the solution is invariant along it
//! and all derivatives in that direction vanish (pseudo-2D / pseudo-1D modes).
//! Boundary handling uses mirror ghost cells: values reflect tensorially
//! across each face (scalars even, the normal vector component odd, tensor
//! components picking up one sign flip per normal index). This encodes free
//! slip with zero normal velocity and zero normal gradients for scalars.

use crate::tensor::{SymTensor3, Vec3, SYM_INDEX};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    /// Active directions need at least four cells for the second-gradient stencils.
    TooFewCells { axis: usize, n: usize },
    NonPositiveExtent { axis: usize, l: f64 },
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::TooFewCells { axis, n } => write!(
                f,
                "axis {axis} has {n} cells; active directions need at least 4"
            ),
            GridError::NonPositiveExtent { axis, l } => {
                write!(f, "axis {axis} has nonpositive extent {l}")
            }
        }
    }
}

impl std::error::Error for GridError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub n: [usize; 3],
    pub l: [f64; 3],
    pub h: [f64; 3],
}

impl Grid {
    pub fn new(n: [usize; 3], l: [f64; 3]) -> Result<Grid, GridError> {
        for a in 0..3 {
            if n[a] == 0 || (n[a] > 1 && n[a] < 4) {
                return Err(GridError::TooFewCells { axis: a, n: n[a] });
            }
            if l[a] <= 0.0 || !l[a].is_finite() {
                return Err(GridError::NonPositiveExtent { axis: a, l: l[a] });
            }
        }
        let h = [l[0] / n[0] as f64, l[1] / n[1] as f64, l[2] / n[2] as f64];
        Ok(Grid { n, l, h })
    }

    pub fn n_cells(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn active(&self, axis: usize) -> bool {
        self.n[axis] > 1
    }

    pub fn cell_volume(&self) -> f64 {
        self.h[0] * self.h[1] * self.h[2]
    }

    /// Area of a face orthogonal to `axis`.
    pub fn face_area(&self, axis: usize) -> f64 {
        self.cell_volume() / self.h[axis]
    }

    pub fn domain_volume(&self) -> f64 {
        self.l[0] * self.l[1] * self.l[2]
    }

    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    pub fn coords(&self, c: usize) -> [usize; 3] {
        let i = c % self.n[0];
        let j = (c / self.n[0]) % self.n[1];
        let k = c / (self.n[0] * self.n[1]);
        [i, j, k]
    }

    pub fn cell_center(&self, c: usize) -> Vec3 {
        let ijk = self.coords(c);
        [
            (ijk[0] as f64 + 0.5) * self.h[0],
            (ijk[1] as f64 + 0.5) * self.h[1],
            (ijk[2] as f64 + 0.5) * self.h[2],
        ]
    }

    /// Mirror-folds possibly out-of-range indices back into the grid.
    /// Returns the interior cell and which axes were reflected.
    pub fn fold(&self, raw: [i64; 3]) -> (usize, [bool; 3]) {
        let mut idx = [0usize; 3];
        let mut flipped = [false; 3];
        for a in 0..3 {
            let n = self.n[a] as i64;
            let mut v = raw[a];
            if v < 0 {
                v = -1 - v;
                flipped[a] = true;
            } else if v >= n {
                v = 2 * n - 1 - v;
                flipped[a] = true;
            }
            debug_assert!(v >= 0 && v < n, "stencil reach exceeds grid width");
            idx[a] = v as usize;
        }
        (self.idx(idx[0], idx[1], idx[2]), flipped)
    }

    /// Whether the raw index is inside the grid (no reflection needed).
    pub fn in_bounds(&self, raw: [i64; 3]) -> bool {
        (0..3).all(|a| raw[a] >= 0 && raw[a] < self.n[a] as i64)
    }
}

/// Sign a vector component picks up under a mirror fold.
pub fn vec_sign(comp: usize, flipped: [bool; 3]) -> f64 {
    if flipped[comp] {
        -1.0
    } else {
        1.0
    }
}

/// Sign a stored symmetric-tensor component picks up under a mirror fold.
pub fn sym_sign(slot: usize, flipped: [bool; 3]) -> f64 {
    let (i, j) = SYM_INDEX[slot];
    let mut s = 1.0;
    if flipped[i] {
        s = -s;
    }
    if flipped[j] {
        s = -s;
    }
    s
}

/// One value per cell, layout matching `Grid::idx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<V> {
    pub data: Vec<V>,
}

impl<V: Clone> Field<V> {
    pub fn fill(grid: &Grid, v: V) -> Field<V> {
        Field {
            data: vec![v; grid.n_cells()],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl FnMut(usize) -> V) -> Field<V> {
        Field {
            data: (0..grid.n_cells()).map(f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

impl<V> std::ops::Index<usize> for Field<V> {
    type Output = V;
    fn index(&self, i: usize) -> &V {
        &self.data[i]
    }
}

impl<V> std::ops::IndexMut<usize> for Field<V> {
    fn index_mut(&mut self, i: usize) -> &mut V {
        &mut self.data[i]
    }
}

/// Scalar value at a possibly-reflected position (even extension).
pub fn scalar_at(grid: &Grid, f: &Field<f64>, raw: [i64; 3]) -> f64 {
    let (c, _) = grid.fold(raw);
    f.data[c]
}

/// Vector value at a possibly-reflected position (normal component odd).
pub fn vec_at(grid: &Grid, f: &Field<Vec3>, raw: [i64; 3]) -> Vec3 {
    let (c, flipped) = grid.fold(raw);
    let v = f.data[c];
    [
        v[0] * vec_sign(0, flipped),
        v[1] * vec_sign(1, flipped),
        v[2] * vec_sign(2, flipped),
    ]
}

/// Symmetric-tensor value at a possibly-reflected position (tensorial mirror).
pub fn sym_at(grid: &Grid, f: &Field<SymTensor3>, raw: [i64; 3]) -> SymTensor3 {
    let (c, flipped) = grid.fold(raw);
    let mut t = f.data[c];
    for slot in 0..6 {
        t.c[slot] *= sym_sign(slot, flipped);
    }
    t
}
