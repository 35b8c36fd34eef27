//! Analytic sparse Jacobian of the block residual.
//!
//! Every term of `residual.rs` is differentiated by hand with the same
//! stencils and mirror folds, so the Jacobian is exact to rounding; a
//! finite-difference comparison backs this up in the test suite. Triplets are
//! emitted per cell in a fixed order and summed deterministically.

use crate::grid::{sym_sign, vec_sign, Grid};
use crate::ops::Advection;
use crate::par::map_cells;
use crate::state::{State, C_E, C_RHO, C_TH, C_V};
use crate::stepper::residual::Derived;
use crate::stepper::{Model, StepConfig};
use crate::tensor::{sym_slot, SymTensor3, Tensor3};

pub type Triplet = (usize, usize, f64);

fn raw_of(grid: &Grid, c: usize) -> [i64; 3] {
    let ijk = grid.coords(c);
    [ijk[0] as i64, ijk[1] as i64, ijk[2] as i64]
}

fn shifted(raw: [i64; 3], axis: usize, by: i64) -> [i64; 3] {
    let mut r = raw;
    r[axis] += by;
    r
}

/// Stored-slot increment of eps(v) caused by a unit change of `d v_j / d x_b`.
/// Returns (slot, value): the diagonal slot takes the full derivative, an
/// off-diagonal slot half of it.
fn eps_slot_increment(j: usize, b: usize) -> (usize, f64) {
    let slot = sym_slot(j, b);
    if j == b {
        (slot, 1.0)
    } else {
        (slot, 0.5)
    }
}

/// Full contraction of a symmetric tensor with the stored-basis direction
/// `slot` (accounts for the doubled off-diagonal weight).
fn dot_basis(t: &SymTensor3, slot: usize) -> f64 {
    if slot < 3 {
        t.c[slot]
    } else {
        2.0 * t.c[slot]
    }
}

/// Assembles the Jacobian of `residual` at (`prev`, `cur`) as triplets in the
/// full dof numbering `cell * N_COMP + comp`.
pub fn jacobian(
    model: &Model,
    cfg: &StepConfig,
    _prev: &State,
    cur: &State,
    der: &Derived,
    tau: f64,
) -> Vec<Triplet> {
    let grid = &model.grid;
    let n = grid.n_cells();
    let inv_tau = 1.0 / tau;
    let stab = &cfg.stabilizers;
    let mu = model.dissipation.hyper_mu;
    let p_exp = model.dissipation.hyper_p;
    let n_comp = crate::state::N_COMP;

    // per-cell stress sensitivities
    let d_stress_e: Vec<[SymTensor3; 6]> = map_cells(model.exec, n, |c| {
        model.material.stress_d_e(&cur.e[c], cur.theta[c])
    });
    let d_stress_th: Vec<f64> = (0..n)
        .map(|c| model.material.stress_d_theta(&cur.e[c], cur.theta[c]))
        .collect();
    // Stokes response to each stored strain-basis direction
    let mut stokes_resp = [SymTensor3::ZERO; 6];
    for (m, resp) in stokes_resp.iter_mut().enumerate() {
        let mut basis = SymTensor3::ZERO;
        basis.c[m] = 1.0;
        *resp = model.dissipation.stokes_apply(&basis);
    }

    let per_cell: Vec<Vec<Triplet>> = map_cells(model.exec, n, |c| {
        let mut out: Vec<Triplet> = Vec::with_capacity(256);
        let raw = raw_of(grid, c);
        let rho = cur.rho[c];
        let theta = cur.theta[c];
        let mut add = |row_cell: usize, row_comp: usize, col_cell: usize, col_comp: usize, v: f64| {
            if v != 0.0 {
                out.push((row_cell * n_comp + row_comp, col_cell * n_comp + col_comp, v));
            }
        };

        // ================= mass block =================
        add(c, C_RHO, c, C_RHO, inv_tau);
        for a in 0..3 {
            if !grid.active(a) {
                continue;
            }
            for side in [1i64, -1] {
                let nb = shifted(raw, a, side);
                if !grid.in_bounds(nb) {
                    continue;
                }
                let (m, _) = grid.fold(nb);
                let w = side as f64 / grid.h[a];
                add(c, C_RHO, c, C_RHO, w * 0.5 * cur.v[c][a]);
                add(c, C_RHO, c, C_V + a, w * 0.5 * rho);
                add(c, C_RHO, m, C_RHO, w * 0.5 * cur.v[m][a]);
                add(c, C_RHO, m, C_V + a, w * 0.5 * cur.rho[m]);
            }
        }
        if stab.delta > 0.0 {
            for a in 0..3 {
                if !grid.active(a) {
                    continue;
                }
                for side in [1i64, -1] {
                    let nb = shifted(raw, a, side);
                    if !grid.in_bounds(nb) {
                        continue;
                    }
                    let (m, _) = grid.fold(nb);
                    let g = (cur.rho[m] - rho) * side as f64 / grid.h[a];
                    if g == 0.0 {
                        continue;
                    }
                    let dq = (stab.r_exp - 1.0) * g.abs().powf(stab.r_exp - 2.0);
                    // residual -= delta/tau * (face(+) - face(-)) / h
                    let outer = -stab.delta * inv_tau * side as f64 / grid.h[a];
                    let dg = side as f64 / grid.h[a];
                    add(c, C_RHO, m, C_RHO, outer * dq * dg);
                    add(c, C_RHO, c, C_RHO, -outer * dq * dg);
                }
            }
        }

        // ================= momentum block =================
        for i in 0..3 {
            add(c, C_V + i, c, C_RHO, cur.v[c][i] * inv_tau - model.gravity[i]);
            add(c, C_V + i, c, C_V + i, rho * inv_tau);
        }
        // -div(T + D eps) over faces with mirror folds
        for a in 0..3 {
            if !grid.active(a) {
                continue;
            }
            for side in [1i64, -1] {
                let nb = shifted(raw, a, side);
                let (m, flipped) = grid.fold(nb);
                let coef_side = -(side as f64) / grid.h[a];
                for i in 0..3 {
                    let row = C_V + i;
                    let par = sym_sign(sym_slot(i, a), flipped);
                    // face mean: 1/2 S(c) + 1/2 par * S(m)
                    for (q, factor) in [(c, 0.5 * coef_side), (m, 0.5 * par * coef_side)] {
                        // elastic stress: E and theta sensitivities at q
                        for mm in 0..6 {
                            add(c, row, q, C_E + mm, factor * d_stress_e[q][mm].get(i, a));
                        }
                        if i == a {
                            add(c, row, q, C_TH, factor * d_stress_th[q]);
                        }
                        // Stokes stress: chain through eps(v) at q
                        let raw_q = raw_of(grid, q);
                        for b in 0..3 {
                            if !grid.active(b) {
                                continue;
                            }
                            for side2 in [1i64, -1] {
                                let nb2 = shifted(raw_q, b, side2);
                                let (m2, flip2) = grid.fold(nb2);
                                for j in 0..3 {
                                    let sj = vec_sign(j, flip2);
                                    let dgrad = side2 as f64 * sj / (2.0 * grid.h[b]);
                                    let (slot, w_eps) = eps_slot_increment(j, b);
                                    let val =
                                        factor * stokes_resp[slot].get(i, a) * w_eps * dgrad;
                                    add(c, row, m2, C_V + j, val);
                                }
                            }
                        }
                    }
                }
            }
        }
        // +div(p (x) v) advective flux (interior faces only)
        for a in 0..3 {
            if !grid.active(a) {
                continue;
            }
            for side in [1i64, -1] {
                let nb = shifted(raw, a, side);
                if !grid.in_bounds(nb) {
                    continue;
                }
                let (m, _) = grid.fold(nb);
                let w = side as f64 / grid.h[a];
                let mass_flux = 0.5 * (rho * cur.v[c][a] + cur.rho[m] * cur.v[m][a]);
                for i in 0..3 {
                    let vbar = 0.5 * (cur.v[c][i] + cur.v[m][i]);
                    add(c, C_V + i, c, C_RHO, w * 0.5 * cur.v[c][a] * vbar);
                    add(c, C_V + i, m, C_RHO, w * 0.5 * cur.v[m][a] * vbar);
                    add(c, C_V + i, c, C_V + a, w * 0.5 * rho * vbar);
                    add(c, C_V + i, m, C_V + a, w * 0.5 * cur.rho[m] * vbar);
                    add(c, C_V + i, c, C_V + i, w * mass_flux * 0.5);
                    add(c, C_V + i, m, C_V + i, w * mass_flux * 0.5);
                }
            }
        }
        // second-grade viscous force: rows scatter over the stencil of cell c
        if mu > 0.0 {
            let h2 = &der.h2[c];
            let n2 = h2.norm2();
            if n2 > 0.0 {
                let scale1 = mu * n2.powf(0.5 * p_exp - 1.0);
                let scale2 = mu * (p_exp - 2.0) * n2.powf(0.5 * p_exp - 2.0);
                // dof list: (cell, vector component, jk pattern, weight)
                let mut dofs: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
                for &(off, j, k, coef) in &model.stencil.entries {
                    let (cell2, flip) =
                        grid.fold([raw[0] + off[0], raw[1] + off[1], raw[2] + off[2]]);
                    for i in 0..3 {
                        dofs.push((cell2, i, j, k, coef * vec_sign(i, flip)));
                    }
                }
                for &(rc, ri, rj, rk, rw) in &dofs {
                    for &(cc, ci, cj, ck, cw) in &dofs {
                        let mut val = scale2 * h2.get(ri, rj, rk) * h2.get(ci, cj, ck);
                        if ri == ci && rj == cj && rk == ck {
                            val += scale1;
                        }
                        add(rc, C_V + ri, cc, C_V + ci, rw * cw * val);
                    }
                }
            }
        }
        // velocity damping stabilizer
        if stab.eps_v > 0.0 {
            let vn2 = crate::tensor::dot3(&cur.v[c], &cur.v[c]);
            if vn2 > 0.0 {
                let w1 = stab.eps_v * inv_tau * vn2.powf(0.5 * p_exp - 1.0);
                let w2 = stab.eps_v * inv_tau * (p_exp - 2.0) * vn2.powf(0.5 * p_exp - 2.0);
                for i in 0..3 {
                    for j in 0..3 {
                        let mut val = w2 * cur.v[c][i] * cur.v[c][j];
                        if i == j {
                            val += w1;
                        }
                        add(c, C_V + i, c, C_V + j, val);
                    }
                }
            }
        }
        // density-gradient compensating force
        if stab.delta > 0.0 {
            let g_rho = crate::ops::grad_scalar_at(grid, &cur.rho, c);
            let gn2 = crate::tensor::dot3(&g_rho, &g_rho);
            if gn2 > 0.0 {
                let gn = gn2.sqrt();
                let phi = gn.powf(stab.r_exp - 2.0);
                let dphi = (stab.r_exp - 2.0) * gn.powf(stab.r_exp - 4.0);
                let gv = &der.grad_v[c];
                // velocity part: phi * G_b on the gradient stencil
                for b in 0..3 {
                    if !grid.active(b) {
                        continue;
                    }
                    for side2 in [1i64, -1] {
                        let nb2 = shifted(raw, b, side2);
                        let (m2, flip2) = grid.fold(nb2);
                        for i in 0..3 {
                            let si = vec_sign(i, flip2);
                            let dgrad = side2 as f64 * si / (2.0 * grid.h[b]);
                            add(
                                c,
                                C_V + i,
                                m2,
                                C_V + i,
                                stab.delta * inv_tau * phi * g_rho[b] * dgrad,
                            );
                        }
                        // density part through G (even ghosts, sign +1)
                        let dgb = side2 as f64 / (2.0 * grid.h[b]);
                        for i in 0..3 {
                            let mut gv_dot = 0.0;
                            for a2 in 0..3 {
                                gv_dot += gv.m[i][a2] * g_rho[a2];
                            }
                            let val = stab.delta
                                * inv_tau
                                * (dphi * g_rho[b] * gv_dot + phi * gv.m[i][b])
                                * dgb;
                            add(c, C_V + i, m2, C_RHO, val);
                        }
                    }
                }
            }
        }

        // ================= strain block =================
        for s in 0..6 {
            add(c, C_E + s, c, C_E + s, inv_tau);
        }
        // -eps(v)
        for b in 0..3 {
            if !grid.active(b) {
                continue;
            }
            for side2 in [1i64, -1] {
                let nb2 = shifted(raw, b, side2);
                let (m2, flip2) = grid.fold(nb2);
                for j in 0..3 {
                    let sj = vec_sign(j, flip2);
                    let dgrad = side2 as f64 * sj / (2.0 * grid.h[b]);
                    let (slot, w_eps) = eps_slot_increment(j, b);
                    add(c, C_E + slot, m2, C_V + j, -w_eps * dgrad);
                }
            }
        }
        // +Pi = flow(dev T, theta)
        if let Some(law) = &model.dissipation.creep {
            let dev_t = der.stress[c].dev();
            for mm in 0..6 {
                let dir = d_stress_e[c][mm].dev();
                let dpi = law.flow_d_stress(&dev_t, theta, &dir).to_sym();
                for s in 0..6 {
                    add(c, C_E + s, c, C_E + mm, dpi.c[s]);
                }
            }
            let dpi_th = law.flow_d_theta(&dev_t, theta).to_sym();
            for s in 0..6 {
                add(c, C_E + s, c, C_TH, dpi_th.c[s]);
            }
        }
        // +advection of E
        for a in 0..3 {
            if !grid.active(a) {
                continue;
            }
            let va = cur.v[c][a];
            match cfg.advection {
                Advection::Central => {
                    for side in [1i64, -1] {
                        let nb = shifted(raw, a, side);
                        let (m, flipped) = grid.fold(nb);
                        let w = side as f64 * va / (2.0 * grid.h[a]);
                        for s in 0..6 {
                            add(c, C_E + s, m, C_E + s, w * sym_sign(s, flipped));
                        }
                    }
                    // velocity sensitivity: the central derivative value
                    let ep = crate::grid::sym_at(grid, &cur.e, shifted(raw, a, 1));
                    let em = crate::grid::sym_at(grid, &cur.e, shifted(raw, a, -1));
                    for s in 0..6 {
                        let d = (ep.c[s] - em.c[s]) / (2.0 * grid.h[a]);
                        add(c, C_E + s, c, C_V + a, d);
                    }
                }
                Advection::Upwind => {
                    let side = if va >= 0.0 { -1i64 } else { 1 };
                    let nb = shifted(raw, a, side);
                    let (m, flipped) = grid.fold(nb);
                    let w = va / grid.h[a] * (-side as f64);
                    // d/dE(c) and d/dE(m)
                    for s in 0..6 {
                        add(c, C_E + s, c, C_E + s, w);
                        add(c, C_E + s, m, C_E + s, -w * sym_sign(s, flipped));
                    }
                    let eo = crate::grid::sym_at(grid, &cur.e, nb);
                    for s in 0..6 {
                        let d = (cur.e[c].c[s] - eo.c[s]) * (-side as f64) / grid.h[a];
                        add(c, C_E + s, c, C_V + a, d);
                    }
                }
            }
        }
        // +spin term E W - W E
        let w_spin = der.grad_v[c].skw_part();
        for mm in 0..6 {
            let mut basis = SymTensor3::ZERO;
            basis.c[mm] = 1.0;
            let dspin = crate::tensor::spin_product(&w_spin, &basis);
            for s in 0..6 {
                add(c, C_E + s, c, C_E + mm, dspin.c[s]);
            }
        }
        for b in 0..3 {
            if !grid.active(b) {
                continue;
            }
            for side2 in [1i64, -1] {
                let nb2 = shifted(raw, b, side2);
                let (m2, flip2) = grid.fold(nb2);
                for j in 0..3 {
                    if j == b {
                        continue; // skew part has no diagonal contribution
                    }
                    let sj = vec_sign(j, flip2);
                    let dgrad = side2 as f64 * sj / (2.0 * grid.h[b]);
                    // dW = skw(d grad v): (j,b) gets +dgrad/2, (b,j) -dgrad/2
                    let mut dw = Tensor3::ZERO;
                    dw.m[j][b] = 0.5 * dgrad;
                    dw.m[b][j] = -0.5 * dgrad;
                    let dspin = crate::tensor::spin_product(&dw, &cur.e[c]);
                    for s in 0..6 {
                        add(c, C_E + s, m2, C_V + j, dspin.c[s]);
                    }
                }
            }
        }
        // strain-diffusion stabilizer
        if stab.eps_e > 0.0 {
            for a in 0..3 {
                if !grid.active(a) {
                    continue;
                }
                for side in [1i64, -1] {
                    let nb = shifted(raw, a, side);
                    if !grid.in_bounds(nb) {
                        continue;
                    }
                    let (m, _) = grid.fold(nb);
                    let mut g = SymTensor3::ZERO;
                    for s in 0..6 {
                        g.c[s] = (cur.e[m].c[s] - cur.e[c].c[s]) * side as f64 / grid.h[a];
                    }
                    let gn = g.norm();
                    if gn == 0.0 {
                        continue;
                    }
                    let w1 = gn.powf(stab.s_exp - 2.0);
                    let w2 = (stab.s_exp - 2.0) * gn.powf(stab.s_exp - 4.0);
                    // residual -= eps_e/tau * (face(+) - face(-)) / h
                    let outer = -stab.eps_e * inv_tau * side as f64 / grid.h[a];
                    for t in 0..6 {
                        let dg = side as f64 / grid.h[a];
                        // dQ/dg[t] column applied to basis t
                        for s in 0..6 {
                            let mut dq = w2 * dot_basis(&g, t) * g.c[s];
                            if s == t {
                                dq += w1;
                            }
                            add(c, C_E + s, m, C_E + t, outer * dq * dg);
                            add(c, C_E + s, c, C_E + t, -outer * dq * dg);
                        }
                    }
                }
            }
        }

        // ================= heat block =================
        add(c, C_TH, c, C_TH, model.material.heat_capacity_unchecked(theta) * inv_tau);
        // -div(kappa grad theta) over interior faces
        for a in 0..3 {
            if !grid.active(a) {
                continue;
            }
            for side in [1i64, -1] {
                let nb = shifted(raw, a, side);
                if !grid.in_bounds(nb) {
                    continue;
                }
                let (m, _) = grid.fold(nb);
                let tbar = 0.5 * (theta + cur.theta[m]);
                let kappa = model.heat.conductivity_unchecked(tbar);
                let dkappa = model.heat.conductivity_d(tbar);
                let grad = (cur.theta[m] - theta) * side as f64 / grid.h[a];
                let outer = -(side as f64) / grid.h[a];
                let dflux_dc = 0.5 * dkappa * grad - kappa * side as f64 / grid.h[a];
                let dflux_dm = 0.5 * dkappa * grad + kappa * side as f64 / grid.h[a];
                add(c, C_TH, c, C_TH, outer * dflux_dc);
                add(c, C_TH, m, C_TH, outer * dflux_dm);
            }
        }
        // -Robin boundary contribution
        {
            let ijk = grid.coords(c);
            for a in 0..3 {
                if !grid.active(a) {
                    continue;
                }
                let n_faces =
                    (ijk[a] == 0) as usize + (ijk[a] == grid.n[a] - 1) as usize;
                if n_faces > 0 {
                    let dh = model.heat.boundary_outflux_d(theta);
                    add(c, C_TH, c, C_TH, n_faces as f64 * dh / grid.h[a]);
                }
            }
        }
        // +div(u v) advective flux
        for a in 0..3 {
            if !grid.active(a) {
                continue;
            }
            for side in [1i64, -1] {
                let nb = shifted(raw, a, side);
                if !grid.in_bounds(nb) {
                    continue;
                }
                let (m, _) = grid.fold(nb);
                let w = side as f64 / grid.h[a];
                let ubar = 0.5 * (der.u[c] + der.u[m]);
                let vbar = 0.5 * (cur.v[c][a] + cur.v[m][a]);
                let cap_c = model.material.heat_capacity_unchecked(theta);
                let cap_m = model.material.heat_capacity_unchecked(cur.theta[m]);
                add(c, C_TH, c, C_TH, w * 0.5 * cap_c * vbar);
                add(c, C_TH, m, C_TH, w * 0.5 * cap_m * vbar);
                add(c, C_TH, c, C_V + a, w * ubar * 0.5);
                add(c, C_TH, m, C_V + a, w * ubar * 0.5);
            }
        }
        // -xi: Stokes part (2 D eps : d eps)
        {
            let s_eps = model.dissipation.stokes_apply(&der.eps[c]);
            for b in 0..3 {
                if !grid.active(b) {
                    continue;
                }
                for side2 in [1i64, -1] {
                    let nb2 = shifted(raw, b, side2);
                    let (m2, flip2) = grid.fold(nb2);
                    for j in 0..3 {
                        let sj = vec_sign(j, flip2);
                        let dgrad = side2 as f64 * sj / (2.0 * grid.h[b]);
                        let (slot, w_eps) = eps_slot_increment(j, b);
                        let val = 2.0 * dot_basis(&s_eps, slot) * w_eps * dgrad;
                        add(c, C_TH, m2, C_V + j, -val);
                    }
                }
            }
        }
        // -xi: Maxwell part
        if let Some(law) = &model.dissipation.creep {
            let dev_t = der.stress[c].dev();
            for mm in 0..6 {
                let dir = d_stress_e[c][mm].dev();
                let val = law.dissipation_d_stress(&dev_t, theta, &dir);
                add(c, C_TH, c, C_E + mm, -val);
            }
            add(c, C_TH, c, C_TH, -law.dissipation_d_theta(&dev_t, theta));
        }
        // -xi: hyper part (mu p |H|^{p-2} H ... dH)
        if mu > 0.0 {
            let n2 = der.h2[c].norm2();
            if n2 > 0.0 {
                let scale = mu * p_exp * n2.powf(0.5 * p_exp - 1.0);
                for &(off, j, k, coef) in &model.stencil.entries {
                    let (m2, flip) =
                        grid.fold([raw[0] + off[0], raw[1] + off[1], raw[2] + off[2]]);
                    for i in 0..3 {
                        let si = vec_sign(i, flip);
                        add(c, C_TH, m2, C_V + i, -scale * der.h2[c].get(i, j, k) * coef * si);
                    }
                }
            }
        }
        // -adiabatic coupling A * div v
        {
            let div_v = der.div_v[c];
            let da_dth = model.material.adiabatic_coeff_d_theta(&cur.e[c], theta);
            add(c, C_TH, c, C_TH, -da_dth * div_v);
            let da_dtre = model.material.adiabatic_coeff_d_tre(&cur.e[c], theta);
            for mm in 0..3 {
                add(c, C_TH, c, C_E + mm, -da_dtre * div_v);
            }
            let a_coef = der.adiab[c];
            for b in 0..3 {
                if !grid.active(b) {
                    continue;
                }
                for side2 in [1i64, -1] {
                    let nb2 = shifted(raw, b, side2);
                    let (m2, flip2) = grid.fold(nb2);
                    let sb = vec_sign(b, flip2);
                    let dgrad = side2 as f64 * sb / (2.0 * grid.h[b]);
                    add(c, C_TH, m2, C_V + b, -a_coef * dgrad);
                }
            }
        }

        out
    });

    let mut triplets = Vec::with_capacity(per_cell.iter().map(Vec::len).sum());
    for v in per_cell {
        triplets.extend(v);
    }
    triplets
}
