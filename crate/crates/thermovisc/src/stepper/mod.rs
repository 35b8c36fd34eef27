//! Backward-Euler (Rothe) time stepping of the coupled system.
//!
//! Each step solves the fully implicit nonlinear system for the next
//! quadruple (rho, v, E, theta) by a damped Newton iteration with an
//! analytically assembled sparse Jacobian. A step that fails to converge or
//! would lose positivity is re-attempted on a bisected interval, so the
//! global output grid t = k tau is always hit exactly.

pub mod jacobian;
pub mod newton;
pub mod residual;

use crate::diagnostics::LedgerRow;
use crate::grid::Grid;
use crate::material::{DissipationModel, HeatModel, MaterialModel};
use crate::ops::{Advection, SecondGradStencil};
use crate::par::Exec;
use crate::state::State;
use crate::tensor::Vec3;
use std::fmt;

/// Optional regularizing terms mirroring the elliptic-stage stabilizers:
/// nonlinear density diffusion (delta, r), velocity damping (eps_v with the
/// hyper exponent), and strain diffusion (eps_e, s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stabilizers {
    pub delta: f64,
    pub r_exp: f64,
    pub eps_v: f64,
    pub eps_e: f64,
    pub s_exp: f64,
}

impl Default for Stabilizers {
    fn default() -> Self {
        Stabilizers {
            delta: 0.0,
            r_exp: 4.0,
            eps_v: 0.0,
            eps_e: 0.0,
            s_exp: 4.0,
        }
    }
}

impl Stabilizers {
    pub fn validate(&self) -> Result<(), String> {
        if self.delta < 0.0 || self.eps_v < 0.0 || self.eps_e < 0.0 {
            return Err("stabilizer coefficients must be nonnegative".into());
        }
        if self.delta > 0.0 && self.r_exp <= 3.0 {
            return Err("density-diffusion exponent r must exceed 3 when delta > 0".into());
        }
        if self.eps_e > 0.0 && self.s_exp <= 3.0 {
            return Err("strain-diffusion exponent s must exceed 3 when eps_e > 0".into());
        }
        Ok(())
    }

    pub fn any_active(&self) -> bool {
        self.delta > 0.0 || self.eps_v > 0.0 || self.eps_e > 0.0
    }
}

/// Which unknown blocks the nonlinear solve updates; pinned blocks keep their
/// current values (used by kinematic test scenarios and the staggered mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveMask {
    pub rho: bool,
    pub v: bool,
    pub e: bool,
    pub theta: bool,
}

impl SolveMask {
    pub const ALL: SolveMask = SolveMask {
        rho: true,
        v: true,
        e: true,
        theta: true,
    };

    pub fn active_comps(&self) -> Vec<usize> {
        use crate::state::{C_E, C_RHO, C_TH, C_V};
        let mut comps = Vec::new();
        if self.rho {
            comps.push(C_RHO);
        }
        if self.v {
            comps.extend([C_V, C_V + 1, C_V + 2]);
        }
        if self.e {
            comps.extend((0..6).map(|m| C_E + m));
        }
        if self.theta {
            comps.push(C_TH);
        }
        comps
    }
}

impl Default for SolveMask {
    fn default() -> Self {
        SolveMask::ALL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMode {
    /// All unknown blocks coupled in one Newton iteration.
    #[default]
    Monolithic,
    /// Debugging mode: rho -> (v, E) -> theta sweeps until the coupled
    /// residual converges.
    Staggered,
}

/// Per-step solver configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepConfig {
    pub tau: f64,
    /// Newton tolerance on the residual infinity norm.
    pub tol_newton: f64,
    pub max_newton: usize,
    /// Bisection cap per global step.
    pub max_halvings: u32,
    pub advection: Advection,
    pub stabilizers: Stabilizers,
    /// Entropy-ledger exponent lambda.
    pub lambda: f64,
    pub solver: SolverMode,
    /// Take one extra Newton iteration after reaching tolerance; tightens the
    /// conservation ledgers at little cost.
    pub polish: bool,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            tau: 0.05,
            tol_newton: 1e-12,
            max_newton: 25,
            max_halvings: 10,
            advection: Advection::Central,
            stabilizers: Stabilizers::default(),
            lambda: 1.0,
            solver: SolverMode::Monolithic,
            polish: true,
        }
    }
}

/// Immutable problem description shared by residual, Jacobian, and ledgers.
pub struct Model {
    pub grid: Grid,
    pub material: MaterialModel,
    pub dissipation: DissipationModel,
    pub heat: HeatModel,
    pub gravity: Vec3,
    pub stencil: SecondGradStencil,
    pub exec: Exec,
    /// Kinematic test mode: the velocity gradient is replaced by a uniform
    /// rigid spin of this rate about the z axis (strain rate and second
    /// gradients vanish). Used with a pinned velocity block; a rigid rotation
    /// cannot satisfy the impenetrable-wall mirror conditions of a box, so
    /// the corotational transport is exercised with exact prescribed spin.
    pub kinematic_spin: Option<f64>,
}

impl Model {
    pub fn new(
        grid: Grid,
        material: MaterialModel,
        dissipation: DissipationModel,
        heat: HeatModel,
        gravity: Vec3,
    ) -> Model {
        let stencil = SecondGradStencil::build(&grid);
        Model {
            grid,
            material,
            dissipation,
            heat,
            gravity,
            stencil,
            exec: Exec::Auto,
            kinematic_spin: None,
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Model {
        self.exec = exec;
        self
    }
}

/// Newton statistics and subdivision record for one accepted global step.
#[derive(Debug, Clone, Default)]
pub struct StepReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub backtracks: usize,
    pub residual_history: Vec<f64>,
    /// Number of interval bisections needed within the global step.
    pub subdivisions: u32,
    /// Smallest substep actually taken.
    pub tau_min: f64,
}

#[derive(Debug, Clone)]
pub enum StepError {
    /// Newton did not reach tolerance within the iteration budget.
    NonConvergence { residual: f64, iterations: usize },
    /// The linear solver failed (singular or badly conditioned system).
    LinearSolve(String),
    /// Residual evaluation failed (nonpositive density or temperature, or
    /// non-finite values) for every trial step length.
    Evaluation(String),
    /// The bisection cap was exceeded; carries a diagnostic summary.
    HalvingCapExceeded { cap: u32, detail: String },
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepError::NonConvergence { residual, iterations } => write!(
                f,
                "Newton stalled at residual {residual:.3e} after {iterations} iterations"
            ),
            StepError::LinearSolve(msg) => write!(f, "linear solve failed: {msg}"),
            StepError::Evaluation(msg) => write!(f, "residual evaluation failed: {msg}"),
            StepError::HalvingCapExceeded { cap, detail } => {
                write!(f, "step failed after {cap} halvings; {detail}")
            }
        }
    }
}

impl std::error::Error for StepError {}

/// Advances one global step of length `cfg.tau`, bisecting on failure.
/// Returns the accepted end state, the report, and every accepted substate
/// (prev/next pairs are consecutive entries, starting from `prev`).
pub fn advance(
    model: &Model,
    cfg: &StepConfig,
    prev: &State,
    mask: SolveMask,
) -> Result<(State, StepReport, Vec<State>), StepError> {
    let mut report = StepReport {
        tau_min: cfg.tau,
        ..StepReport::default()
    };
    let mut accepted: Vec<State> = Vec::new();
    // worklist of (state, dt, depth); solve intervals left to right
    let mut current = prev.clone();
    let mut stack: Vec<(f64, u32)> = vec![(cfg.tau, 0)];
    while let Some((dt, depth)) = stack.pop() {
        match newton::newton_solve(model, cfg, &current, dt, mask) {
            Ok((next, sub)) => {
                report.iterations += sub.iterations;
                report.backtracks += sub.backtracks;
                report.final_residual = sub.final_residual;
                if report.residual_history.is_empty() {
                    report.residual_history = sub.residual_history;
                }
                report.tau_min = report.tau_min.min(dt);
                current = next.clone();
                accepted.push(next);
            }
            Err(err) => {
                if depth >= cfg.max_halvings {
                    let detail = format!(
                        "last failure: {err}; min rho {:.3e}, min theta {:.3e}, t = {:.6e}",
                        current.min_rho(),
                        current.min_theta(),
                        current.t
                    );
                    return Err(StepError::HalvingCapExceeded {
                        cap: cfg.max_halvings,
                        detail,
                    });
                }
                report.subdivisions += 1;
                stack.push((0.5 * dt, depth + 1));
                stack.push((0.5 * dt, depth + 1));
            }
        }
    }
    Ok((current, report, accepted))
}

/// A completed run: states at the global output nodes plus per-substep ledgers.
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub ledger: Vec<LedgerRow>,
    pub reports: Vec<StepReport>,
}

impl Trajectory {
    /// Piecewise-constant interpolant (right-continuous at nodes).
    pub fn eval_constant(&self, t: f64) -> &State {
        let k = self.node_below(t);
        if t <= self.times[0] {
            return &self.states[0];
        }
        let idx = if (t - self.times[k]).abs() < 1e-14 * self.times.last().unwrap().max(1.0) {
            k
        } else {
            (k + 1).min(self.states.len() - 1)
        };
        &self.states[idx]
    }

    /// Piecewise-affine interpolant.
    pub fn eval_affine(&self, t: f64) -> State {
        if t <= self.times[0] {
            return self.states[0].clone();
        }
        let last = *self.times.last().unwrap();
        if t >= last {
            return self.states.last().unwrap().clone();
        }
        let k = self.node_below(t);
        let t0 = self.times[k];
        let t1 = self.times[k + 1];
        let w = (t - t0) / (t1 - t0);
        self.states[k].lerp(&self.states[k + 1], w)
    }

    fn node_below(&self, t: f64) -> usize {
        match self
            .times
            .binary_search_by(|x| x.partial_cmp(&t).unwrap())
        {
            Ok(k) => k,
            Err(0) => 0,
            Err(k) => (k - 1).min(self.times.len().saturating_sub(2)),
        }
    }

    pub fn final_state(&self) -> &State {
        self.states.last().unwrap()
    }
}

/// Runs from `initial` to `t_end`, producing the trajectory and ledgers.
pub fn run(
    model: &Model,
    cfg: &StepConfig,
    initial: &State,
    t_end: f64,
    mask: SolveMask,
) -> Result<Trajectory, StepError> {
    assert!(initial.positive(), "initial state must have positive rho and theta");
    let mut times = vec![initial.t];
    let mut states = vec![initial.clone()];
    let mut ledger = Vec::new();
    let mut reports = Vec::new();
    if t_end <= initial.t {
        return Ok(Trajectory {
            times,
            states,
            ledger,
            reports,
        });
    }
    let n_steps = ((t_end - initial.t) / cfg.tau).ceil() as usize;
    let mut current = initial.clone();
    let mut accum = crate::diagnostics::LedgerAccum::default();
    for k in 1..=n_steps {
        let target = (initial.t + k as f64 * cfg.tau).min(t_end);
        let dt = target - current.t;
        if dt <= 0.0 {
            break;
        }
        let step_cfg = StepConfig { tau: dt, ..cfg.clone() };
        let (next, report, accepted) = advance(model, &step_cfg, &current, mask)?;
        let mut prev_sub = current.clone();
        for sub in &accepted {
            let row = crate::diagnostics::ledger_row(model, cfg, &prev_sub, sub, &mut accum);
            ledger.push(row);
            prev_sub = sub.clone();
        }
        reports.push(report);
        times.push(next.t);
        states.push(next.clone());
        current = next;
    }
    Ok(Trajectory {
        times,
        states,
        ledger,
        reports,
    })
}
