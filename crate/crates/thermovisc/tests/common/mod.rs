//! Shared helpers for the integration tests: deterministic RNG, random
//! states, model builders, and the dense finite-difference Jacobian used to
//! verify the analytic assembly.
#![allow(dead_code)]

use std::sync::Arc;
use thermovisc::stepper::{jacobian, residual, StepConfig};
use thermovisc::grid::{Field, Grid};
use thermovisc::material::{
    DissipationModel, HeatModel, MaterialModel, MaxwellLaw, QuadraticCreep, ThermoCreepMaterial,
};
use thermovisc::state::State;
use thermovisc::stepper::Model;
use thermovisc::tensor::SymTensor3;
use thermovisc::util::SplitMix64;

pub fn builtin_material(
    k: f64,
    g: f64,
    alpha_v: f64,
    c_v: f64,
    alpha: f64,
    m0: f64,
) -> (MaterialModel, MaxwellLaw) {
    let tc = ThermoCreepMaterial {
        bulk_modulus: k,
        shear_modulus: g,
        expansivity: alpha_v,
        heat_capacity_coeff: c_v,
        heat_capacity_exponent: alpha,
        maxwell: MaxwellLaw::constant(m0),
    };
    (tc.material(), tc.maxwell)
}

pub struct ModelSpec {
    pub alpha_v: f64,
    pub creep: bool,
    pub arrhenius: bool,
    pub stokes: (f64, f64),
    pub hyper: (f64, f64),
    pub heat: HeatModel,
    pub gravity: [f64; 3],
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            alpha_v: 0.5,
            creep: true,
            arrhenius: false,
            stokes: (0.5, 0.5),
            hyper: (0.01, 4.0),
            heat: HeatModel::insulated(0.5, 1.5),
            gravity: [0.0; 3],
        }
    }
}

pub fn build_model(grid: Grid, spec: &ModelSpec) -> Model {
    let mut maxwell = MaxwellLaw::constant(2.0);
    if spec.arrhenius {
        maxwell.arrhenius = Some(thermovisc::material::ArrheniusParams {
            theta_star: 0.8,
            theta_floor: 1e-6,
        });
    }
    let tc = ThermoCreepMaterial {
        bulk_modulus: 1.0,
        shear_modulus: 1.0,
        expansivity: spec.alpha_v,
        heat_capacity_coeff: 1.0,
        heat_capacity_exponent: 1.0,
        maxwell,
    };
    let dissipation = DissipationModel {
        stokes_bulk: spec.stokes.0,
        stokes_shear: spec.stokes.1,
        hyper_mu: spec.hyper.0,
        hyper_p: spec.hyper.1,
        creep: if spec.creep {
            Some(Arc::new(QuadraticCreep { maxwell }))
        } else {
            None
        },
    };
    Model::new(grid, tc.material(), dissipation, spec.heat.clone(), spec.gravity)
}

/// Random positive state with bounded velocity/strain magnitudes.
pub fn random_state(grid: &Grid, rng: &mut SplitMix64, v_scale: f64, e_scale: f64) -> State {
    State {
        rho: Field::from_fn(grid, |_| rng.next_range(0.6, 1.8)),
        v: Field::from_fn(grid, |_| {
            [
                v_scale * rng.next_signed(),
                v_scale * rng.next_signed(),
                v_scale * rng.next_signed(),
            ]
        }),
        e: Field::from_fn(grid, |_| {
            let mut t = SymTensor3::ZERO;
            for s in 0..6 {
                t.c[s] = e_scale * rng.next_signed();
            }
            t
        }),
        theta: Field::from_fn(grid, |_| rng.next_range(0.6, 1.8)),
        t: 0.0,
    }
}

use thermovisc::state::N_COMP;

pub fn dense_jacobian_fd(
    model: &Model,
    cfg: &StepConfig,
    prev: &State,
    cur: &State,
    tau: f64,
) -> Vec<Vec<f64>> {
    let n = model.grid.n_cells() * N_COMP;
    let mut out = vec![vec![0.0; n]; n];
    for col in 0..n {
        let (cell, comp) = (col / N_COMP, col % N_COMP);
        let base = cur.dof(cell, comp);
        let h = 1e-6 * base.abs().max(1.0);
        let mut plus = cur.clone();
        plus.add_dof(cell, comp, h);
        let mut minus = cur.clone();
        minus.add_dof(cell, comp, -h);
        let rp = residual::residual(model, cfg, prev, &plus, tau).expect("positive state");
        let rm = residual::residual(model, cfg, prev, &minus, tau).expect("positive state");
        for row in 0..n {
            out[row][col] = (rp[row] - rm[row]) / (2.0 * h);
        }
    }
    out
}

pub fn dense_jacobian_analytic(
    model: &Model,
    cfg: &StepConfig,
    prev: &State,
    cur: &State,
    tau: f64,
) -> Vec<Vec<f64>> {
    let n = model.grid.n_cells() * N_COMP;
    let der = residual::derive(model, cur).unwrap();
    let trips = jacobian::jacobian(model, cfg, prev, cur, &der, tau);
    let mut out = vec![vec![0.0; n]; n];
    for (r, c, v) in trips {
        out[r][c] += v;
    }
    out
}

/// Frobenius-norm comparison restricted to one (equation, unknown) block.
pub fn block_error(
    an: &[Vec<f64>],
    fd: &[Vec<f64>],
    n_cells: usize,
    rows: &[usize],
    cols: &[usize],
) -> (f64, f64) {
    let mut diff2 = 0.0;
    let mut norm2 = 0.0;
    for rc in 0..n_cells {
        for &r in rows {
            for cc in 0..n_cells {
                for &c in cols {
                    let a = an[rc * N_COMP + r][cc * N_COMP + c];
                    let f = fd[rc * N_COMP + r][cc * N_COMP + c];
                    diff2 += (a - f) * (a - f);
                    norm2 += f * f;
                }
            }
        }
    }
    (diff2.sqrt(), norm2.sqrt())
}
