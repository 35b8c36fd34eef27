//! Block residual of the fully implicit step.
//!
//! With all stabilizers off the four blocks are exactly the backward-Euler
//! system: mass transport in flux form, momentum with elastic/viscous stress,
//! momentum advection and the second-grade viscous force, corotational strain
//! transport with creep, and the heat equation in the conserved variable
//! u = U(theta) with viscous dissipation and volumetric coupling as sources.

use crate::grid::Grid;
use crate::ops;
use crate::par::map_cells;
use crate::state::{State, C_E, C_RHO, C_TH, C_V, N_COMP};
use crate::stepper::{Model, StepConfig};
use crate::tensor::{DevTensor3, SymTensor3, Tensor3, ThirdOrderTensor};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    NonPositiveDensity { min: f64 },
    NonPositiveTemperature { min: f64 },
    NonFinite,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::NonPositiveDensity { min } => {
                write!(f, "density reached nonpositive minimum {min:.3e}")
            }
            EvalError::NonPositiveTemperature { min } => {
                write!(f, "temperature reached nonpositive minimum {min:.3e}")
            }
            EvalError::NonFinite => write!(f, "state contains non-finite values"),
        }
    }
}

impl std::error::Error for EvalError {}

/// Pointwise quantities derived from a state, shared between the residual,
/// the Jacobian, and the diagnostics ledger.
pub struct Derived {
    pub grad_v: Vec<Tensor3>,
    pub eps: Vec<SymTensor3>,
    pub div_v: Vec<f64>,
    pub h2: Vec<ThirdOrderTensor>,
    /// elastic stress T(E, theta)
    pub stress: Vec<SymTensor3>,
    /// T + Stokes viscous stress (the symmetric face flux of the momentum eq)
    pub total_stress: Vec<SymTensor3>,
    pub pi: Vec<DevTensor3>,
    /// extended dissipation rate xi
    pub xi: Vec<f64>,
    /// heat energy u = U(theta)
    pub u: Vec<f64>,
    /// volumetric coupling coefficient A(E, theta)
    pub adiab: Vec<f64>,
}

pub fn check_state(state: &State) -> Result<(), EvalError> {
    if !state.all_finite() {
        return Err(EvalError::NonFinite);
    }
    let min_rho = state.min_rho();
    if min_rho <= 0.0 {
        return Err(EvalError::NonPositiveDensity { min: min_rho });
    }
    let min_theta = state.min_theta();
    if min_theta <= 0.0 {
        return Err(EvalError::NonPositiveTemperature { min: min_theta });
    }
    Ok(())
}

pub fn derive(model: &Model, state: &State) -> Result<Derived, EvalError> {
    check_state(state)?;
    let grid = &model.grid;
    let n = grid.n_cells();
    let (grad_v, h2) = match model.kinematic_spin {
        None => {
            let grad_v = map_cells(model.exec, n, |c| ops::grad_v_at(grid, &state.v, c));
            let h2 = map_cells(model.exec, n, |c| {
                ops::second_grad_at(grid, &model.stencil, &state.v, c)
            });
            (grad_v, h2)
        }
        Some(omega) => {
            let mut spin = Tensor3::ZERO;
            spin.m[0][1] = -omega;
            spin.m[1][0] = omega;
            (vec![spin; n], vec![ThirdOrderTensor::ZERO; n])
        }
    };
    let eps: Vec<SymTensor3> = grad_v.iter().map(|g| g.sym_part()).collect();
    let div_v: Vec<f64> = grad_v.iter().map(|g| g.trace()).collect();
    let stress = map_cells(model.exec, n, |c| {
        model.material.stress_unchecked(&state.e[c], state.theta[c])
    });
    let total_stress: Vec<SymTensor3> = (0..n)
        .map(|c| stress[c] + model.dissipation.stokes_apply(&eps[c]))
        .collect();
    let pi = map_cells(model.exec, n, |c| match &model.dissipation.creep {
        None => DevTensor3::ZERO,
        Some(law) => law.flow(&stress[c].dev(), state.theta[c]),
    });
    let mu = model.dissipation.hyper_mu;
    let p_exp = model.dissipation.hyper_p;
    let xi: Vec<f64> = (0..n)
        .map(|c| {
            let stokes = model.dissipation.stokes_apply(&eps[c]).dot(&eps[c]);
            let creep = match &model.dissipation.creep {
                None => 0.0,
                Some(law) => law.dissipation_of_stress(&stress[c].dev(), state.theta[c]),
            };
            stokes + creep + mu * h2[c].norm2().powf(0.5 * p_exp)
        })
        .collect();
    let u: Vec<f64> = state
        .theta
        .data
        .iter()
        .map(|&th| model.material.thermal_energy_unchecked(th))
        .collect();
    let adiab: Vec<f64> = (0..n)
        .map(|c| model.material.adiabatic_coeff(&state.e[c], state.theta[c]))
        .collect();
    let out = Derived {
        grad_v,
        eps,
        div_v,
        h2,
        stress,
        total_stress,
        pi,
        xi,
        u,
        adiab,
    };
    if !out.xi.iter().all(|v| v.is_finite()) || !out.u.iter().all(|v| v.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    Ok(out)
}

fn raw_of(grid: &Grid, c: usize) -> [i64; 3] {
    let ijk = grid.coords(c);
    [ijk[0] as i64, ijk[1] as i64, ijk[2] as i64]
}

/// Power-law face diffusion |g|^{q-2} g used by the stabilizers.
fn power_flux(g: f64, q: f64) -> f64 {
    if g == 0.0 {
        0.0
    } else {
        g.abs().powf(q - 2.0) * g
    }
}

fn sym_power_flux(g: &SymTensor3, q: f64) -> SymTensor3 {
    let n = g.norm();
    if n == 0.0 {
        SymTensor3::ZERO
    } else {
        g.scale(n.powf(q - 2.0))
    }
}

/// Assembles the full block residual at the trial state `cur`.
/// Layout: dof (cell, comp) at index `cell * N_COMP + comp`.
pub fn residual(
    model: &Model,
    cfg: &StepConfig,
    prev: &State,
    cur: &State,
    tau: f64,
) -> Result<Vec<f64>, EvalError> {
    let der = derive(model, cur)?;
    residual_with_derived(model, cfg, prev, cur, &der, tau)
}

pub fn residual_with_derived(
    model: &Model,
    cfg: &StepConfig,
    prev: &State,
    cur: &State,
    der: &Derived,
    tau: f64,
) -> Result<Vec<f64>, EvalError> {
    let grid = &model.grid;
    let n = grid.n_cells();
    let inv_tau = 1.0 / tau;
    let stab = &cfg.stabilizers;
    let mu = model.dissipation.hyper_mu;
    let p_exp = model.dissipation.hyper_p;

    // second-grade viscous force (variational adjoint of the H-stencil)
    let hyper = ops::hyperstress_force(grid, &model.stencil, &der.h2, mu, p_exp);

    let out = map_cells(model.exec, n, |c| {
        let mut r = [0.0f64; N_COMP];
        let raw = raw_of(grid, c);
        let rho = cur.rho[c];

        // ---- mass ----
        let mut div_p = 0.0;
        for a in 0..3 {
            if !grid.active(a) {
                continue;
            }
            for side in [1i64, -1] {
                let nb = {
                    let mut rr = raw;
                    rr[a] += side;
                    rr
                };
                if !grid.in_bounds(nb) {
                    continue;
                }
                let (m, _) = grid.fold(nb);
                let flux = 0.5 * (rho * cur.v[c][a] + cur.rho[m] * cur.v[m][a]);
                div_p += side as f64 * flux / grid.h[a];
            }
        }
        r[C_RHO] = (rho - prev.rho[c]) * inv_tau + div_p;
        if stab.delta > 0.0 {
            let mut flux_div = 0.0;
            for a in 0..3 {
                if !grid.active(a) {
                    continue;
                }
                let face = |side: i64| -> f64 {
                    let nb = {
                        let mut rr = raw;
                        rr[a] += side;
                        rr
                    };
                    if !grid.in_bounds(nb) {
                        return 0.0;
                    }
                    let (m, _) = grid.fold(nb);
                    // one-sided normal gradient oriented along +a
                    let g = (cur.rho[m] - rho) * side as f64 / grid.h[a];
                    power_flux(g, stab.r_exp)
                };
                flux_div += (face(1) - face(-1)) / grid.h[a];
            }
            r[C_RHO] -= stab.delta * inv_tau * flux_div;
        }

        // ---- momentum ----
        let adv = ops::momentum_adv_div_at(grid, &cur.rho, &cur.v, c);
        let mut div_s = [0.0f64; 3];
        for a in 0..3 {
            if !grid.active(a) {
                continue;
            }
            let sp = sym_face(grid, &der.total_stress, raw, a, 1);
            let sm = sym_face(grid, &der.total_stress, raw, a, -1);
            let w = 1.0 / grid.h[a];
            for i in 0..3 {
                div_s[i] += (sp.get(i, a) - sm.get(i, a)) * w;
            }
        }
        for i in 0..3 {
            r[C_V + i] = (rho * cur.v[c][i] - prev.rho[c] * prev.v[c][i]) * inv_tau
                - div_s[i]
                + adv[i]
                + hyper[c][i]
                - rho * model.gravity[i];
        }
        if stab.eps_v > 0.0 {
            let vn2 = crate::tensor::dot3(&cur.v[c], &cur.v[c]);
            if vn2 > 0.0 {
                let w = stab.eps_v * inv_tau * vn2.powf(0.5 * p_exp - 1.0);
                for i in 0..3 {
                    r[C_V + i] += w * cur.v[c][i];
                }
            }
        }
        if stab.delta > 0.0 {
            let g_rho = ops::grad_scalar_at(grid, &cur.rho, c);
            let gn = crate::tensor::norm3(&g_rho);
            if gn > 0.0 {
                let w = stab.delta * inv_tau * gn.powf(stab.r_exp - 2.0);
                for i in 0..3 {
                    let mut gv_dot = 0.0;
                    for a in 0..3 {
                        gv_dot += der.grad_v[c].m[i][a] * g_rho[a];
                    }
                    r[C_V + i] += w * gv_dot;
                }
            }
        }

        // ---- strain transport ----
        let w_spin = der.grad_v[c].skw_part();
        let spin = crate::tensor::spin_product(&w_spin, &cur.e[c]);
        let adv_e = ops::advect_sym_at(grid, &cur.v, &cur.e, c, cfg.advection);
        let pi_sym = der.pi[c].to_sym();
        for s in 0..6 {
            r[C_E + s] = (cur.e[c].c[s] - prev.e[c].c[s]) * inv_tau - der.eps[c].c[s]
                + pi_sym.c[s]
                + adv_e.c[s]
                + spin.c[s];
        }
        if stab.eps_e > 0.0 {
            let mut flux_div = SymTensor3::ZERO;
            for a in 0..3 {
                if !grid.active(a) {
                    continue;
                }
                let face = |side: i64| -> SymTensor3 {
                    let nb = {
                        let mut rr = raw;
                        rr[a] += side;
                        rr
                    };
                    if !grid.in_bounds(nb) {
                        return SymTensor3::ZERO;
                    }
                    let (m, _) = grid.fold(nb);
                    let mut g = SymTensor3::ZERO;
                    for s in 0..6 {
                        g.c[s] = (cur.e[m].c[s] - cur.e[c].c[s]) * side as f64 / grid.h[a];
                    }
                    sym_power_flux(&g, stab.s_exp)
                };
                let fp = face(1);
                let fm = face(-1);
                for s in 0..6 {
                    flux_div.c[s] += (fp.c[s] - fm.c[s]) / grid.h[a];
                }
            }
            for s in 0..6 {
                r[C_E + s] -= stab.eps_e * inv_tau * flux_div.c[s];
            }
        }

        // ---- heat ----
        let kappa_div = ops::kappa_div_at(grid, &cur.theta, &model.heat, c);
        let robin = ops::robin_heat_flux_at(grid, &cur.theta, &model.heat, c);
        let mut u_adv = 0.0;
        for a in 0..3 {
            if !grid.active(a) {
                continue;
            }
            let face = |side: i64| -> f64 {
                let nb = {
                    let mut rr = raw;
                    rr[a] += side;
                    rr
                };
                if !grid.in_bounds(nb) {
                    return 0.0;
                }
                let (m, _) = grid.fold(nb);
                0.25 * (der.u[c] + der.u[m]) * (cur.v[c][a] + cur.v[m][a])
            };
            u_adv += (face(1) - face(-1)) / grid.h[a];
        }
        r[C_TH] = (der.u[c] - model.material.thermal_energy_unchecked(prev.theta[c])) * inv_tau
            - kappa_div
            - robin
            + u_adv
            - der.xi[c]
            - der.adiab[c] * der.div_v[c]
            - model.heat.bulk_source;
        r
    });

    let mut flat = vec![0.0; n * N_COMP];
    for (c, r) in out.iter().enumerate() {
        flat[c * N_COMP..(c + 1) * N_COMP].copy_from_slice(r);
    }
    if !flat.iter().all(|v| v.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    Ok(flat)
}

/// Face value of a symmetric-tensor field: arithmetic mean with the mirror
/// fold supplying the ghost at boundary faces.
fn sym_face(
    grid: &Grid,
    field: &[SymTensor3],
    raw: [i64; 3],
    axis: usize,
    side: i64,
) -> SymTensor3 {
    let mut nb = raw;
    nb[axis] += side;
    let (m, flipped) = grid.fold(nb);
    let mut t = field[m];
    for s in 0..6 {
        t.c[s] *= crate::grid::sym_sign(s, flipped);
    }
    let (c, _) = grid.fold(raw);
    let mut out = SymTensor3::ZERO;
    for s in 0..6 {
        out.c[s] = 0.5 * (field[c].c[s] + t.c[s]);
    }
    out
}

/// The residual with the time-difference terms removed: the pure spatial
/// operator applied to `state` (equals `residual(state, state, ..)`).
pub fn spatial_residual(
    model: &Model,
    cfg: &StepConfig,
    state: &State,
) -> Result<Vec<f64>, EvalError> {
    residual(model, cfg, state, state, 1.0)
}

/// Infinity norm over the active components of a residual vector.
pub fn residual_norm(res: &[f64], comps: &[usize]) -> f64 {
    let n = res.len() / N_COMP;
    let mut m = 0.0f64;
    for c in 0..n {
        for &comp in comps {
            m = m.max(res[c * N_COMP + comp].abs());
        }
    }
    m
}
