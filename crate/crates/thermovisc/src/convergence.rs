//! Time-step halving study: runs the same problem at tau, tau/2, ... and
//! measures distances between the piecewise-affine interpolants of
//! consecutive levels. Backward Euler should show first-order decay.

use crate::ops;
use crate::state::State;
use crate::stepper::{self, Model, SolveMask, StepConfig, StepError, Trajectory};

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub taus: Vec<f64>,
    /// sup over time of the L2(Omega) distance of E between adjacent levels
    pub d_e: Vec<f64>,
    pub d_theta: Vec<f64>,
    /// L2-in-time H1-in-space distance of v
    pub d_v: Vec<f64>,
    pub order_e: Vec<f64>,
    pub order_theta: Vec<f64>,
    pub order_v: Vec<f64>,
}

impl ConvergenceTable {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("tau            d_E            d_theta        d_v\n");
        for j in 0..self.d_e.len() {
            out.push_str(&format!(
                "{:<14.6e} {:<14.6e} {:<14.6e} {:<14.6e}\n",
                self.taus[j], self.d_e[j], self.d_theta[j], self.d_v[j]
            ));
        }
        out.push_str("observed orders (log2 of successive distance ratios):\n");
        out.push_str("  E:     ");
        for o in &self.order_e {
            out.push_str(&format!("{o:.3} "));
        }
        out.push_str("\n  theta: ");
        for o in &self.order_theta {
            out.push_str(&format!("{o:.3} "));
        }
        out.push_str("\n  v:     ");
        for o in &self.order_v {
            out.push_str(&format!("{o:.3} "));
        }
        out.push('\n');
        out
    }
}

fn l2_diff_e(model: &Model, a: &State, b: &State) -> f64 {
    let mut acc = 0.0;
    for c in 0..a.n_cells() {
        let mut d = a.e[c];
        for s in 0..6 {
            d.c[s] -= b.e[c].c[s];
        }
        acc += d.norm2();
    }
    (acc * model.grid.cell_volume()).sqrt()
}

fn l2_diff_theta(model: &Model, a: &State, b: &State) -> f64 {
    let mut acc = 0.0;
    for c in 0..a.n_cells() {
        let d = a.theta[c] - b.theta[c];
        acc += d * d;
    }
    (acc * model.grid.cell_volume()).sqrt()
}

fn h1_diff_v_sq(model: &Model, a: &State, b: &State) -> f64 {
    let grid = &model.grid;
    let diff = crate::grid::Field::from_fn(grid, |c| {
        [
            a.v[c][0] - b.v[c][0],
            a.v[c][1] - b.v[c][1],
            a.v[c][2] - b.v[c][2],
        ]
    });
    let mut acc = 0.0;
    for c in 0..grid.n_cells() {
        acc += crate::tensor::dot3(&diff[c], &diff[c]);
        acc += ops::grad_v_at(grid, &diff, c).norm2();
    }
    acc * grid.cell_volume()
}

/// Distance between the affine interpolants of two trajectories sharing the
/// global time window; `fine` has twice the nodes of `coarse`.
fn interpolant_distances(model: &Model, coarse: &Trajectory, fine: &Trajectory) -> (f64, f64, f64) {
    let mut d_e = 0.0f64;
    let mut d_th = 0.0f64;
    let mut d_v2 = 0.0f64;
    // the difference is affine between consecutive fine nodes, so the sup
    // norms are attained at fine nodes and Simpson is exact for the v-metric
    for w in fine.times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let sc0 = coarse.eval_affine(t0);
        let sf0 = fine.eval_affine(t0);
        let sc1 = coarse.eval_affine(t1);
        let sf1 = fine.eval_affine(t1);
        d_e = d_e.max(l2_diff_e(model, &sc0, &sf0));
        d_e = d_e.max(l2_diff_e(model, &sc1, &sf1));
        d_th = d_th.max(l2_diff_theta(model, &sc0, &sf0));
        d_th = d_th.max(l2_diff_theta(model, &sc1, &sf1));
        let tm = 0.5 * (t0 + t1);
        let scm = coarse.eval_affine(tm);
        let sfm = fine.eval_affine(tm);
        let f0 = h1_diff_v_sq(model, &sc0, &sf0);
        let fm = h1_diff_v_sq(model, &scm, &sfm);
        let f1 = h1_diff_v_sq(model, &sc1, &sf1);
        d_v2 += (t1 - t0) / 6.0 * (f0 + 4.0 * fm + f1);
    }
    (d_e, d_th, d_v2.sqrt())
}

/// Runs `levels` trajectories at tau, tau/2, ..., tau/2^{levels-1} and
/// reports distances between consecutive levels and the observed orders.
pub fn convergence_study(
    model: &Model,
    cfg: &StepConfig,
    initial: &State,
    t_end: f64,
    mask: SolveMask,
    levels: usize,
) -> Result<ConvergenceTable, StepError> {
    assert!(levels >= 3, "a convergence study needs at least 3 levels");
    let mut trajectories = Vec::with_capacity(levels);
    let mut taus = Vec::new();
    for j in 0..levels {
        let tau_j = cfg.tau / (1u64 << j) as f64;
        taus.push(tau_j);
        let cfg_j = StepConfig {
            tau: tau_j,
            ..cfg.clone()
        };
        trajectories.push(stepper::run(model, &cfg_j, initial, t_end, mask)?);
    }
    let mut d_e = Vec::new();
    let mut d_theta = Vec::new();
    let mut d_v = Vec::new();
    for j in 0..levels - 1 {
        let (de, dth, dv) = interpolant_distances(model, &trajectories[j], &trajectories[j + 1]);
        d_e.push(de);
        d_theta.push(dth);
        d_v.push(dv);
    }
    let orders = |d: &[f64]| -> Vec<f64> {
        d.windows(2)
            .map(|w| {
                if w[0] > 0.0 && w[1] > 0.0 {
                    (w[0] / w[1]).log2()
                } else {
                    f64::NAN
                }
            })
            .collect()
    };
    Ok(ConvergenceTable {
        order_e: orders(&d_e),
        order_theta: orders(&d_theta),
        order_v: orders(&d_v),
        taus: taus[..levels - 1].to_vec(),
        d_e,
        d_theta,
        d_v,
    })
}

