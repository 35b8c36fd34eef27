//! Discrete differential operators on the structured grid.
//!
//! Interior operators are second-order central differences; divergences are
//! written in flux form with arithmetic face means (identical to central
//! differences in the interior) so that mass-type quantities telescope to
//! pure boundary terms. Together with the tensorial mirror ghosts this makes
//! the discrete Green identities exact: summing `v . div(S)` against
//! `S : grad(v)` leaves no boundary residue for any admissible symmetry pair,
//! which is what the energy ledger relies on.

use crate::grid::{scalar_at, sym_at, vec_at, Field, Grid};
use crate::material::HeatModel;
use crate::par::{map_cells, Exec};
use crate::tensor::{SymTensor3, Tensor3, ThirdOrderTensor, Vec3};

/// Advection discretization for the transport terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Advection {
    #[default]
    Central,
    Upwind,
}

/// Second-derivative stencil entries: `H_{i, (j,k)}(c) += coef * v_i(c + off)`.
#[derive(Debug, Clone)]
pub struct SecondGradStencil {
    pub entries: Vec<([i64; 3], usize, usize, f64)>,
}

impl SecondGradStencil {
    pub fn build(grid: &Grid) -> SecondGradStencil {
        let mut entries = Vec::new();
        for a in 0..3 {
            if !grid.active(a) {
                continue;
            }
            let w = 1.0 / (grid.h[a] * grid.h[a]);
            let mut off = [0i64; 3];
            off[a] = 1;
            entries.push((off, a, a, w));
            entries.push(([0, 0, 0], a, a, -2.0 * w));
            off[a] = -1;
            entries.push((off, a, a, w));
        }
        for a in 0..3 {
            for b in (a + 1)..3 {
                if !grid.active(a) || !grid.active(b) {
                    continue;
                }
                let w = 1.0 / (4.0 * grid.h[a] * grid.h[b]);
                for (sa, sb) in [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
                    let mut off = [0i64; 3];
                    off[a] = sa;
                    off[b] = sb;
                    let coef = w * (sa * sb) as f64;
                    // both index orders of the mixed derivative
                    entries.push((off, a, b, coef));
                    entries.push((off, b, a, coef));
                }
            }
        }
        SecondGradStencil { entries }
    }
}

fn raw_of(grid: &Grid, c: usize) -> [i64; 3] {
    let ijk = grid.coords(c);
    [ijk[0] as i64, ijk[1] as i64, ijk[2] as i64]
}

fn shifted(raw: [i64; 3], axis: usize, by: i64) -> [i64; 3] {
    let mut r = raw;
    r[axis] += by;
    r
}

/// Gradient of a scalar field at one cell (central, even ghosts).
pub fn grad_scalar_at(grid: &Grid, f: &Field<f64>, c: usize) -> Vec3 {
    let raw = raw_of(grid, c);
    let mut g = [0.0; 3];
    for a in 0..3 {
        if !grid.active(a) {
            continue;
        }
        let fp = scalar_at(grid, f, shifted(raw, a, 1));
        let fm = scalar_at(grid, f, shifted(raw, a, -1));
        g[a] = (fp - fm) / (2.0 * grid.h[a]);
    }
    g
}

/// Velocity gradient at one cell: `(i, a) = d v_i / d x_a`.
pub fn grad_v_at(grid: &Grid, v: &Field<Vec3>, c: usize) -> Tensor3 {
    let raw = raw_of(grid, c);
    let mut m = [[0.0; 3]; 3];
    for a in 0..3 {
        if !grid.active(a) {
            continue;
        }
        let vp = vec_at(grid, v, shifted(raw, a, 1));
        let vm = vec_at(grid, v, shifted(raw, a, -1));
        let w = 1.0 / (2.0 * grid.h[a]);
        for i in 0..3 {
            m[i][a] = (vp[i] - vm[i]) * w;
        }
    }
    Tensor3 { m }
}

/// Gradient of one stored component of a symmetric-tensor field.
pub fn grad_sym_comp_at(grid: &Grid, f: &Field<SymTensor3>, c: usize, slot: usize) -> Vec3 {
    let raw = raw_of(grid, c);
    let mut g = [0.0; 3];
    for a in 0..3 {
        if !grid.active(a) {
            continue;
        }
        let fp = sym_at(grid, f, shifted(raw, a, 1));
        let fm = sym_at(grid, f, shifted(raw, a, -1));
        g[a] = (fp.c[slot] - fm.c[slot]) / (2.0 * grid.h[a]);
    }
    g
}

/// Second velocity gradient `H_{ijk} = d^2 v_i / dx_j dx_k` at one cell.
pub fn second_grad_at(
    grid: &Grid,
    stencil: &SecondGradStencil,
    v: &Field<Vec3>,
    c: usize,
) -> ThirdOrderTensor {
    let raw = raw_of(grid, c);
    let mut h = ThirdOrderTensor::ZERO;
    for &(off, j, k, coef) in &stencil.entries {
        let val = vec_at(grid, v, [raw[0] + off[0], raw[1] + off[1], raw[2] + off[2]]);
        for i in 0..3 {
            h.t[ThirdOrderTensor::idx(i, j, k)] += coef * val[i];
        }
    }
    h
}

/// Advection `(v . grad) f` of a scalar at one cell.
pub fn advect_scalar_at(
    grid: &Grid,
    v: &Field<Vec3>,
    f: &Field<f64>,
    c: usize,
    mode: Advection,
) -> f64 {
    let raw = raw_of(grid, c);
    let vel = v.data[c];
    let mut out = 0.0;
    for a in 0..3 {
        if !grid.active(a) {
            continue;
        }
        let d = match mode {
            Advection::Central => {
                (scalar_at(grid, f, shifted(raw, a, 1)) - scalar_at(grid, f, shifted(raw, a, -1)))
                    / (2.0 * grid.h[a])
            }
            Advection::Upwind => {
                if vel[a] >= 0.0 {
                    (f.data[c] - scalar_at(grid, f, shifted(raw, a, -1))) / grid.h[a]
                } else {
                    (scalar_at(grid, f, shifted(raw, a, 1)) - f.data[c]) / grid.h[a]
                }
            }
        };
        out += vel[a] * d;
    }
    out
}

/// Advection `(v . grad) E` of a symmetric-tensor field at one cell.
pub fn advect_sym_at(
    grid: &Grid,
    v: &Field<Vec3>,
    e: &Field<SymTensor3>,
    c: usize,
    mode: Advection,
) -> SymTensor3 {
    let raw = raw_of(grid, c);
    let vel = v.data[c];
    let mut out = SymTensor3::ZERO;
    for a in 0..3 {
        if !grid.active(a) {
            continue;
        }
        match mode {
            Advection::Central => {
                let ep = sym_at(grid, e, shifted(raw, a, 1));
                let em = sym_at(grid, e, shifted(raw, a, -1));
                let w = vel[a] / (2.0 * grid.h[a]);
                for s in 0..6 {
                    out.c[s] += w * (ep.c[s] - em.c[s]);
                }
            }
            Advection::Upwind => {
                let w = vel[a] / grid.h[a];
                if vel[a] >= 0.0 {
                    let em = sym_at(grid, e, shifted(raw, a, -1));
                    for s in 0..6 {
                        out.c[s] += w * (e.data[c].c[s] - em.c[s]);
                    }
                } else {
                    let ep = sym_at(grid, e, shifted(raw, a, 1));
                    for s in 0..6 {
                        out.c[s] += w * (ep.c[s] - e.data[c].c[s]);
                    }
                }
            }
        }
    }
    out
}

/// Flux-form divergence of a vector field with zero normal flux through the
/// boundary; the total over the grid telescopes to zero exactly.
pub fn div_flux_at(grid: &Grid, p: &Field<Vec3>, c: usize) -> f64 {
    let raw = raw_of(grid, c);
    let mut out = 0.0;
    for a in 0..3 {
        if !grid.active(a) {
            continue;
        }
        let flux = |side: i64| -> f64 {
            let nb = shifted(raw, a, side);
            if !grid.in_bounds(nb) {
                return 0.0;
            }
            let (n, _) = grid.fold(nb);
            0.5 * (p.data[c][a] + p.data[n][a])
        };
        out += (flux(1) - flux(-1)) / grid.h[a];
    }
    out
}

/// Whole-field wrappers.
pub fn gradient(grid: &Grid, f: &Field<f64>, exec: Exec) -> Field<Vec3> {
    Field {
        data: map_cells(exec, grid.n_cells(), |c| grad_scalar_at(grid, f, c)),
    }
}

pub fn sym_gradient(grid: &Grid, v: &Field<Vec3>, exec: Exec) -> Field<SymTensor3> {
    Field {
        data: map_cells(exec, grid.n_cells(), |c| grad_v_at(grid, v, c).sym_part()),
    }
}

pub fn divergence_v(grid: &Grid, v: &Field<Vec3>, exec: Exec) -> Field<f64> {
    Field {
        data: map_cells(exec, grid.n_cells(), |c| grad_v_at(grid, v, c).trace()),
    }
}

/// Divergence of a symmetric-tensor field, `(div T)_i = d T_{ia} / d x_a`.
pub fn divergence_t(grid: &Grid, t: &Field<SymTensor3>, exec: Exec) -> Field<Vec3> {
    Field {
        data: map_cells(exec, grid.n_cells(), |c| {
            let raw = raw_of(grid, c);
            let mut out = [0.0; 3];
            for a in 0..3 {
                if !grid.active(a) {
                    continue;
                }
                let tp = sym_at(grid, t, shifted(raw, a, 1));
                let tm = sym_at(grid, t, shifted(raw, a, -1));
                let w = 1.0 / (2.0 * grid.h[a]);
                for i in 0..3 {
                    out[i] += (tp.get(i, a) - tm.get(i, a)) * w;
                }
            }
            out
        }),
    }
}

pub fn second_gradient(grid: &Grid, v: &Field<Vec3>, exec: Exec) -> Field<ThirdOrderTensor> {
    let stencil = SecondGradStencil::build(grid);
    Field {
        data: map_cells(exec, grid.n_cells(), |c| second_grad_at(grid, &stencil, v, c)),
    }
}

pub fn advect_scalar(
    grid: &Grid,
    v: &Field<Vec3>,
    f: &Field<f64>,
    mode: Advection,
    exec: Exec,
) -> Field<f64> {
    Field {
        data: map_cells(exec, grid.n_cells(), |c| advect_scalar_at(grid, v, f, c, mode)),
    }
}

pub fn advect_sym(
    grid: &Grid,
    v: &Field<Vec3>,
    e: &Field<SymTensor3>,
    mode: Advection,
    exec: Exec,
) -> Field<SymTensor3> {
    Field {
        data: map_cells(exec, grid.n_cells(), |c| advect_sym_at(grid, v, e, c, mode)),
    }
}

pub fn conservative_div_flux(grid: &Grid, p: &Field<Vec3>, exec: Exec) -> Field<f64> {
    Field {
        data: map_cells(exec, grid.n_cells(), |c| div_flux_at(grid, p, c)),
    }
}

/// Midpoint-rule volume integral with a fixed sequential summation order.
pub fn integrate(grid: &Grid, f: &Field<f64>) -> f64 {
    let vol = grid.cell_volume();
    let mut s = 0.0;
    for v in &f.data {
        s += v;
    }
    s * vol
}

/// Midpoint-rule surface integral over the boundary of the active directions;
/// the integrand receives (cell, axis, side).
pub fn surface_integrate(grid: &Grid, g: impl Fn(usize, usize, i64) -> f64) -> f64 {
    let mut s = 0.0;
    for a in 0..3 {
        if !grid.active(a) {
            continue;
        }
        let area = grid.face_area(a);
        for c in 0..grid.n_cells() {
            let ijk = grid.coords(c);
            if ijk[a] == 0 {
                s += g(c, a, -1) * area;
            }
            if ijk[a] == grid.n[a] - 1 {
                s += g(c, a, 1) * area;
            }
        }
    }
    s
}

/// Robin boundary contribution to the heat operator:
/// adds `(h_ext - h(theta)) * faceArea / cellVol` at each boundary cell.
pub fn robin_heat_flux(
    grid: &Grid,
    theta: &Field<f64>,
    hm: &HeatModel,
    _t: f64,
    exec: Exec,
) -> Result<Field<f64>, crate::material::MaterialError> {
    for a in 0..3 {
        if !grid.active(a) {
            continue;
        }
        for c in 0..grid.n_cells() {
            let ijk = grid.coords(c);
            if (ijk[a] == 0 || ijk[a] == grid.n[a] - 1) && theta.data[c] < 0.0 {
                return Err(crate::material::MaterialError::NegativeTemperature(theta.data[c]));
            }
        }
    }
    Ok(Field {
        data: map_cells(exec, grid.n_cells(), |c| {
            robin_heat_flux_at(grid, theta, hm, c)
        }),
    })
}

pub fn robin_heat_flux_at(grid: &Grid, theta: &Field<f64>, hm: &HeatModel, c: usize) -> f64 {
    let ijk = grid.coords(c);
    let mut out = 0.0;
    for a in 0..3 {
        if !grid.active(a) {
            continue;
        }
        let n_faces = (ijk[a] == 0) as usize + (ijk[a] == grid.n[a] - 1) as usize;
        if n_faces > 0 {
            let q = hm.external_flux - hm.boundary_outflux_unchecked(theta.data[c]);
            out += n_faces as f64 * q / grid.h[a];
        }
    }
    out
}

/// Diffusive heat divergence `div(kappa(theta) grad theta)` in flux form over
/// interior faces only; the Robin contribution supplies the boundary faces.
pub fn kappa_div_at(grid: &Grid, theta: &Field<f64>, hm: &HeatModel, c: usize) -> f64 {
    let raw = raw_of(grid, c);
    let mut out = 0.0;
    for a in 0..3 {
        if !grid.active(a) {
            continue;
        }
        let flux = |side: i64| -> f64 {
            let nb = shifted(raw, a, side);
            if !grid.in_bounds(nb) {
                return 0.0;
            }
            let (n, _) = grid.fold(nb);
            let kappa = hm.conductivity_unchecked(0.5 * (theta.data[c] + theta.data[n]));
            kappa * (theta.data[n] - theta.data[c]) * side as f64 / grid.h[a]
        };
        out += (flux(1) - flux(-1)) / grid.h[a];
    }
    out
}

/// Flux-form advective divergence `div(u v)` of a scalar density u.
pub fn scalar_adv_div_at(grid: &Grid, u: &Field<f64>, v: &Field<Vec3>, c: usize) -> f64 {
    let raw = raw_of(grid, c);
    let mut out = 0.0;
    for a in 0..3 {
        if !grid.active(a) {
            continue;
        }
        let flux = |side: i64| -> f64 {
            let nb = shifted(raw, a, side);
            if !grid.in_bounds(nb) {
                return 0.0;
            }
            let (n, _) = grid.fold(nb);
            0.25 * (u.data[c] + u.data[n]) * (v.data[c][a] + v.data[n][a])
        };
        out += (flux(1) - flux(-1)) / grid.h[a];
    }
    out
}

/// Flux-form momentum advection `div(p (x) v)` with the mass flux of the
/// continuity equation and arithmetic face velocities; this pairing keeps the
/// discrete kinetic-energy transport identity exact.
pub fn momentum_adv_div_at(
    grid: &Grid,
    rho: &Field<f64>,
    v: &Field<Vec3>,
    c: usize,
) -> Vec3 {
    let raw = raw_of(grid, c);
    let mut out = [0.0; 3];
    for a in 0..3 {
        if !grid.active(a) {
            continue;
        }
        for side in [1i64, -1] {
            let nb = shifted(raw, a, side);
            if !grid.in_bounds(nb) {
                continue;
            }
            let (n, _) = grid.fold(nb);
            let mass_flux = 0.5 * (rho.data[c] * v.data[c][a] + rho.data[n] * v.data[n][a]);
            let w = side as f64 / grid.h[a];
            for i in 0..3 {
                out[i] += w * mass_flux * 0.5 * (v.data[c][i] + v.data[n][i]);
            }
        }
    }
    out
}

/// Variational pairing of the second-grade viscous stress:
/// `sum_c mu |H(v)|^{p-2} H(v) ... H(w) * cellVol`.
pub fn hyperstress_pairing(
    grid: &Grid,
    v: &Field<Vec3>,
    w: &Field<Vec3>,
    mu: f64,
    p: f64,
) -> Result<f64, crate::material::MaterialError> {
    if mu < 0.0 {
        return Err(crate::material::MaterialError::InvalidParameter(
            "hyper-viscosity coefficient must be nonnegative".into(),
        ));
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    let stencil = SecondGradStencil::build(grid);
    let vol = grid.cell_volume();
    let mut s = 0.0;
    for c in 0..grid.n_cells() {
        let hv = second_grad_at(grid, &stencil, v, c);
        let n2 = hv.norm2();
        if n2 == 0.0 {
            continue;
        }
        let hw = second_grad_at(grid, &stencil, w, c);
        s += mu * n2.powf(0.5 * p - 1.0) * crate::tensor::triple_contraction(&hv, &hw) * vol;
    }
    Ok(s)
}

/// Variational derivative of `sum_c (mu/p) |H(v)|^p cellVol` with respect to v,
/// as a per-volume force density. The natural boundary conditions of the
/// fourth-order operator are encoded by the mirror folds of the stencil.
pub fn hyperstress_residual(
    grid: &Grid,
    stencil: &SecondGradStencil,
    v: &Field<Vec3>,
    mu: f64,
    p: f64,
) -> Result<Field<Vec3>, crate::material::MaterialError> {
    if mu < 0.0 {
        return Err(crate::material::MaterialError::InvalidParameter(
            "hyper-viscosity coefficient must be nonnegative".into(),
        ));
    }
    let h2: Vec<ThirdOrderTensor> = (0..grid.n_cells())
        .map(|c| second_grad_at(grid, stencil, v, c))
        .collect();
    Ok(hyperstress_force(grid, stencil, &h2, mu, p))
}

/// Same force assembled from precomputed second gradients.
pub fn hyperstress_force(
    grid: &Grid,
    stencil: &SecondGradStencil,
    h2: &[ThirdOrderTensor],
    mu: f64,
    p: f64,
) -> Field<Vec3> {
    let mut out = Field::fill(grid, [0.0f64; 3]);
    if mu == 0.0 {
        return out;
    }
    for c in 0..grid.n_cells() {
        let h = &h2[c];
        let n2 = h.norm2();
        if n2 == 0.0 {
            continue;
        }
        let scale = mu * n2.powf(0.5 * p - 1.0);
        let raw = raw_of(grid, c);
        for &(off, j, k, coef) in &stencil.entries {
            let (target, flipped) = grid.fold([raw[0] + off[0], raw[1] + off[1], raw[2] + off[2]]);
            for i in 0..3 {
                let sign = crate::grid::vec_sign(i, flipped);
                out.data[target][i] += scale * h.get(i, j, k) * coef * sign;
            }
        }
    }
    out
}
