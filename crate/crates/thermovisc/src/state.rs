//! One Rothe time level of the primal unknowns (rho, v, E, theta).

use crate::grid::{Field, Grid};
use crate::tensor::{SymTensor3, Vec3};

/// Unknown components per cell: rho, v (3), E (6 stored), theta.
pub const N_COMP: usize = 11;
pub const C_RHO: usize = 0;
pub const C_V: usize = 1; // ..=3
pub const C_E: usize = 4; // ..=9
pub const C_TH: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub rho: Field<f64>,
    pub v: Field<Vec3>,
    pub e: Field<SymTensor3>,
    pub theta: Field<f64>,
    pub t: f64,
}

impl State {
    pub fn uniform(grid: &Grid, rho: f64, theta: f64) -> State {
        State {
            rho: Field::fill(grid, rho),
            v: Field::fill(grid, [0.0; 3]),
            e: Field::fill(grid, SymTensor3::ZERO),
            theta: Field::fill(grid, theta),
            t: 0.0,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.rho.len()
    }

    /// Linear momentum p = rho v at a cell.
    pub fn momentum(&self, c: usize) -> Vec3 {
        let r = self.rho[c];
        let v = self.v[c];
        [r * v[0], r * v[1], r * v[2]]
    }

    /// Kinetic energy density evaluated from (rho, p) as |p|^2 / (2 rho);
    /// the convex form in the momentum variable.
    pub fn kinetic_density(&self, c: usize) -> f64 {
        let p = self.momentum(c);
        0.5 * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / self.rho[c]
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn min_theta(&self) -> f64 {
        self.theta.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn positive(&self) -> bool {
        self.min_rho() > 0.0 && self.min_theta() > 0.0
    }

    pub fn all_finite(&self) -> bool {
        self.rho.data.iter().all(|v| v.is_finite())
            && self.v.data.iter().all(|v| v.iter().all(|x| x.is_finite()))
            && self.e.data.iter().all(|t| t.is_finite())
            && self.theta.data.iter().all(|v| v.is_finite())
    }

    pub fn dof(&self, cell: usize, comp: usize) -> f64 {
        match comp {
            C_RHO => self.rho[cell],
            c if (C_V..C_V + 3).contains(&c) => self.v[cell][c - C_V],
            c if (C_E..C_E + 6).contains(&c) => self.e[cell].c[c - C_E],
            C_TH => self.theta[cell],
            _ => unreachable!("component {comp} out of range"),
        }
    }

    pub fn add_dof(&mut self, cell: usize, comp: usize, delta: f64) {
        match comp {
            C_RHO => self.rho[cell] += delta,
            c if (C_V..C_V + 3).contains(&c) => self.v[cell][c - C_V] += delta,
            c if (C_E..C_E + 6).contains(&c) => self.e[cell].c[c - C_E] += delta,
            C_TH => self.theta[cell] += delta,
            _ => unreachable!("component {comp} out of range"),
        }
    }

    /// Linear interpolation toward `other` with weight `w` in [0, 1].
    pub fn lerp(&self, other: &State, w: f64) -> State {
        let n = self.n_cells();
        let mut out = self.clone();
        for c in 0..n {
            out.rho[c] += w * (other.rho[c] - self.rho[c]);
            for i in 0..3 {
                out.v[c][i] += w * (other.v[c][i] - self.v[c][i]);
            }
            for s in 0..6 {
                out.e[c].c[s] += w * (other.e[c].c[s] - self.e[c].c[s]);
            }
            out.theta[c] += w * (other.theta[c] - self.theta[c]);
        }
        out.t = self.t + w * (other.t - self.t);
        out
    }
}
