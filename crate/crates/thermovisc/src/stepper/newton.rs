//! Damped Newton iteration for one implicit step.
//!
//! The line search backtracks on the residual infinity norm; trial states
//! with nonpositive density or temperature fail evaluation and shorten the
//! step, so every accepted state is positivity-preserving by construction.

use crate::linsolve::solve_sparse;
use crate::state::{State, N_COMP};
use crate::stepper::residual::{residual_norm, residual_with_derived};
use crate::stepper::{jacobian, residual, Model, SolveMask, SolverMode, StepConfig, StepError, StepReport};

/// Mapping between full dof ids and the compact active system.
pub struct DofMap {
    pub comps: Vec<usize>,
    slot: [usize; N_COMP],
    pub n_cells: usize,
}

impl DofMap {
    pub fn new(mask: SolveMask, n_cells: usize) -> DofMap {
        let comps = mask.active_comps();
        let mut slot = [usize::MAX; N_COMP];
        for (s, &comp) in comps.iter().enumerate() {
            slot[comp] = s;
        }
        DofMap {
            comps,
            slot,
            n_cells,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_cells * self.comps.len()
    }

    pub fn compact(&self, full: usize) -> Option<usize> {
        let cell = full / N_COMP;
        let comp = full % N_COMP;
        let s = self.slot[comp];
        if s == usize::MAX {
            None
        } else {
            Some(cell * self.comps.len() + s)
        }
    }

    pub fn cell_comp(&self, compact: usize) -> (usize, usize) {
        let w = self.comps.len();
        (compact / w, self.comps[compact % w])
    }
}

fn gather_rhs(res: &[f64], map: &DofMap) -> Vec<f64> {
    let mut rhs = vec![0.0; map.n_dofs()];
    for cell in 0..map.n_cells {
        for (s, &comp) in map.comps.iter().enumerate() {
            rhs[cell * map.comps.len() + s] = -res[cell * N_COMP + comp];
        }
    }
    rhs
}

fn filter_triplets(
    trips: &[(usize, usize, f64)],
    map: &DofMap,
) -> Vec<(usize, usize, f64)> {
    trips
        .iter()
        .filter_map(|&(r, c, v)| match (map.compact(r), map.compact(c)) {
            (Some(rr), Some(cc)) => Some((rr, cc, v)),
            _ => None,
        })
        .collect()
}

fn apply_update(state: &State, delta: &[f64], sigma: f64, map: &DofMap) -> State {
    let mut out = state.clone();
    for (k, &d) in delta.iter().enumerate() {
        let (cell, comp) = map.cell_comp(k);
        out.add_dof(cell, comp, sigma * d);
    }
    out
}

/// One implicit solve over an interval of length `dt` starting from `prev`.
pub fn newton_solve(
    model: &Model,
    cfg: &StepConfig,
    prev: &State,
    dt: f64,
    mask: SolveMask,
) -> Result<(State, StepReport), StepError> {
    match cfg.solver {
        SolverMode::Monolithic => newton_solve_masked(model, cfg, prev, dt, mask),
        SolverMode::Staggered => staggered_solve(model, cfg, prev, dt, mask),
    }
}

fn newton_solve_masked(
    model: &Model,
    cfg: &StepConfig,
    prev: &State,
    dt: f64,
    mask: SolveMask,
) -> Result<(State, StepReport), StepError> {
    let map = DofMap::new(mask, model.grid.n_cells());
    let mut report = StepReport::default();
    let mut cur = prev.clone();
    cur.t = prev.t + dt;

    let mut der = residual::derive(model, &cur)
        .map_err(|e| StepError::Evaluation(e.to_string()))?;
    let mut res = residual_with_derived(model, cfg, prev, &cur, &der, dt)
        .map_err(|e| StepError::Evaluation(e.to_string()))?;
    let mut norm = residual_norm(&res, &map.comps);
    report.residual_history.push(norm);

    let mut polish_left = if cfg.polish { 1 } else { 0 };
    let mut it = 0;
    while it < cfg.max_newton {
        if norm <= cfg.tol_newton {
            if polish_left == 0 {
                break;
            }
            polish_left -= 1;
        }
        it += 1;

        let trips = jacobian::jacobian(model, cfg, prev, &cur, &der, dt);
        let active = filter_triplets(&trips, &map);
        let rhs = gather_rhs(&res, &map);
        let delta = solve_sparse(map.n_dofs(), &active, &rhs)
            .map_err(|e| StepError::LinearSolve(e.to_string()))?;

        // backtracking line search on the residual norm
        let mut sigma = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = apply_update(&cur, &delta, sigma, &map);
            match residual::derive(model, &cand) {
                Err(_) => {}
                Ok(der_new) => {
                    match residual_with_derived(model, cfg, prev, &cand, &der_new, dt) {
                        Err(_) => {}
                        Ok(res_new) => {
                            let norm_new = residual_norm(&res_new, &map.comps);
                            if norm_new <= cfg.tol_newton
                                || norm_new < norm * (1.0 - 1e-4 * sigma)
                            {
                                cur = cand;
                                der = der_new;
                                res = res_new;
                                norm = norm_new;
                                accepted = true;
                                break;
                            }
                        }
                    }
                }
            }
            sigma *= 0.5;
            report.backtracks += 1;
        }
        report.iterations = it;
        if !accepted {
            if norm <= cfg.tol_newton {
                // already converged; the polish attempt hit the rounding floor
                break;
            }
            return Err(StepError::NonConvergence {
                residual: norm,
                iterations: it,
            });
        }
        report.residual_history.push(norm);
    }

    report.final_residual = norm;
    if norm > cfg.tol_newton {
        return Err(StepError::NonConvergence {
            residual: norm,
            iterations: report.iterations,
        });
    }
    debug_assert!(cur.positive());
    Ok((cur, report))
}

/// Debugging mode: block sweeps rho -> (v, E) -> theta until the fully
/// coupled residual meets tolerance.
fn staggered_solve(
    model: &Model,
    cfg: &StepConfig,
    prev: &State,
    dt: f64,
    mask: SolveMask,
) -> Result<(State, StepReport), StepError> {
    let sub_masks = [
        SolveMask { rho: mask.rho, v: false, e: false, theta: false },
        SolveMask { rho: false, v: mask.v, e: mask.e, theta: false },
        SolveMask { rho: false, v: false, e: false, theta: mask.theta },
    ];
    let sub_cfg = StepConfig {
        solver: SolverMode::Monolithic,
        max_newton: 8,
        polish: false,
        ..cfg.clone()
    };
    let full_map = DofMap::new(mask, model.grid.n_cells());
    let mut report = StepReport::default();
    let mut cur = prev.clone();
    cur.t = prev.t + dt;
    for _sweep in 0..cfg.max_newton {
        for sub in sub_masks.iter().filter(|m| !m.active_comps().is_empty()) {
            // solve the sub-block holding the other fields at `cur`
            let (next, sub_rep) = sub_block_solve(model, &sub_cfg, prev, &cur, dt, *sub)?;
            report.iterations += sub_rep.iterations;
            report.backtracks += sub_rep.backtracks;
            cur = next;
        }
        let res = residual::residual(model, cfg, prev, &cur, dt)
            .map_err(|e| StepError::Evaluation(e.to_string()))?;
        let norm = residual_norm(&res, &full_map.comps);
        report.residual_history.push(norm);
        report.final_residual = norm;
        if norm <= cfg.tol_newton {
            return Ok((cur, report));
        }
    }
    Err(StepError::NonConvergence {
        residual: report.final_residual,
        iterations: report.iterations,
    })
}

/// Newton on one sub-block starting from the current iterate.
fn sub_block_solve(
    model: &Model,
    cfg: &StepConfig,
    prev: &State,
    start: &State,
    dt: f64,
    mask: SolveMask,
) -> Result<(State, StepReport), StepError> {
    let map = DofMap::new(mask, model.grid.n_cells());
    let mut report = StepReport::default();
    let mut cur = start.clone();
    cur.t = prev.t + dt;
    let mut der = residual::derive(model, &cur)
        .map_err(|e| StepError::Evaluation(e.to_string()))?;
    let mut res = residual_with_derived(model, cfg, prev, &cur, &der, dt)
        .map_err(|e| StepError::Evaluation(e.to_string()))?;
    let mut norm = residual_norm(&res, &map.comps);
    for it in 1..=cfg.max_newton {
        if norm <= cfg.tol_newton {
            break;
        }
        let trips = jacobian::jacobian(model, cfg, prev, &cur, &der, dt);
        let active = filter_triplets(&trips, &map);
        let rhs = gather_rhs(&res, &map);
        let delta = solve_sparse(map.n_dofs(), &active, &rhs)
            .map_err(|e| StepError::LinearSolve(e.to_string()))?;
        let mut sigma = 1.0;
        let mut accepted = false;
        for _ in 0..25 {
            let cand = apply_update(&cur, &delta, sigma, &map);
            if let Ok(der_new) = residual::derive(model, &cand) {
                if let Ok(res_new) = residual_with_derived(model, cfg, prev, &cand, &der_new, dt) {
                    let norm_new = residual_norm(&res_new, &map.comps);
                    if norm_new <= cfg.tol_newton || norm_new < norm {
                        cur = cand;
                        der = der_new;
                        res = res_new;
                        norm = norm_new;
                        accepted = true;
                        break;
                    }
                }
            }
            sigma *= 0.5;
            report.backtracks += 1;
        }
        report.iterations = it;
        if !accepted {
            break;
        }
    }
    report.final_residual = norm;
    Ok((cur, report))
}
