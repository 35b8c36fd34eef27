//! Built-in initial-value scenarios.
//!
//! Each scenario constructs a positive, admissible initial state and says
//! which unknown blocks the solver should update. Two of them pin blocks to
//! isolate a mechanism with an exact oracle: `rigid_rotation` evolves only
//! the strain under a prescribed uniform spin (a true rigid rotation cannot
//! satisfy the impenetrable-wall conditions of a box), and `heat_bump`
//! evolves only the temperature (pure conduction).

use crate::grid::{Field, Grid};
use crate::state::State;
use crate::stepper::SolveMask;
use crate::tensor::SymTensor3;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    RestEquilibrium,
    RigidRotation,
    UniformCreep,
    ThermalExpansion,
    HeatBump,
    GravitySettle,
    WaveAttenuation,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::RestEquilibrium,
        ScenarioKind::RigidRotation,
        ScenarioKind::UniformCreep,
        ScenarioKind::ThermalExpansion,
        ScenarioKind::HeatBump,
        ScenarioKind::GravitySettle,
        ScenarioKind::WaveAttenuation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::RestEquilibrium => "rest_equilibrium",
            ScenarioKind::RigidRotation => "rigid_rotation",
            ScenarioKind::UniformCreep => "uniform_creep",
            ScenarioKind::ThermalExpansion => "thermal_expansion",
            ScenarioKind::HeatBump => "heat_bump",
            ScenarioKind::GravitySettle => "gravity_settle",
            ScenarioKind::WaveAttenuation => "wave_attenuation",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioKind::ALL
            .iter()
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| {
                format!(
                    "unknown scenario '{s}'; expected one of {}",
                    ScenarioKind::ALL.map(|k| k.name()).join(", ")
                )
            })
    }
}

/// Scenario selector plus its shape parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// perturbation amplitude (strain, temperature bump, or wave velocity)
    pub amplitude: f64,
    /// Gaussian width of localized perturbations, relative to the domain
    pub width: f64,
    /// spin rate of the rigid-rotation scenario
    pub omega: f64,
    pub rho0: f64,
    pub theta0: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            kind: ScenarioKind::RestEquilibrium,
            amplitude: 0.1,
            width: 0.2,
            omega: 1.0,
            rho0: 1.0,
            theta0: 1.0,
        }
    }
}

/// The constructed initial data and solver pinning for one scenario.
pub struct BuiltScenario {
    pub state: State,
    pub mask: SolveMask,
    /// prescribed uniform spin rate for the kinematic rotation test
    pub kinematic_spin: Option<f64>,
}

pub fn build_scenario(grid: &Grid, spec: &ScenarioSpec) -> Result<BuiltScenario, String> {
    if spec.rho0 <= 0.0 {
        return Err("initial density must be positive everywhere".into());
    }
    if spec.theta0 <= 0.0 {
        return Err("initial temperature must be positive everywhere".into());
    }
    let base = State::uniform(grid, spec.rho0, spec.theta0);
    let center = [0.5 * grid.l[0], 0.5 * grid.l[1], 0.5 * grid.l[2]];
    let gauss = |grid: &Grid, c: usize| -> f64 {
        let x = grid.cell_center(c);
        let mut r2 = 0.0;
        for a in 0..3 {
            if grid.active(a) {
                let d = x[a] - center[a];
                r2 += d * d;
            }
        }
        let w = spec.width * grid.l[0];
        (-r2 / (w * w)).exp()
    };

    let built = match spec.kind {
        ScenarioKind::RestEquilibrium => BuiltScenario {
            state: base,
            mask: SolveMask::ALL,
            kinematic_spin: None,
        },
        ScenarioKind::UniformCreep => {
            let mut state = base;
            let a = spec.amplitude;
            state.e = Field::fill(grid, SymTensor3::diag(a, -0.5 * a, -0.5 * a));
            BuiltScenario {
                state,
                mask: SolveMask::ALL,
                kinematic_spin: None,
            }
        }
        ScenarioKind::RigidRotation => {
            let mut state = base;
            // distinct eigenvalues make the drift metric sensitive; the
            // velocity stays zero and the spin is prescribed, so the strain
            // transport is exercised with no spatial error at all
            let a = spec.amplitude;
            state.e = Field::fill(grid, SymTensor3::diag(0.8 * a, -0.3 * a, -0.5 * a));
            BuiltScenario {
                state,
                mask: SolveMask {
                    rho: false,
                    v: false,
                    e: true,
                    theta: false,
                },
                kinematic_spin: Some(spec.omega),
            }
        }
        ScenarioKind::ThermalExpansion => {
            let mut state = base;
            state.theta = Field::from_fn(grid, |c| spec.theta0 + spec.amplitude * gauss(grid, c));
            BuiltScenario {
                state,
                mask: SolveMask::ALL,
                kinematic_spin: None,
            }
        }
        ScenarioKind::HeatBump => {
            let mut state = base;
            state.theta = Field::from_fn(grid, |c| spec.theta0 + spec.amplitude * gauss(grid, c));
            BuiltScenario {
                state,
                mask: SolveMask {
                    rho: false,
                    v: false,
                    e: false,
                    theta: true,
                },
                kinematic_spin: None,
            }
        }
        ScenarioKind::GravitySettle => BuiltScenario {
            state: base,
            mask: SolveMask::ALL,
            kinematic_spin: None,
        },
        ScenarioKind::WaveAttenuation => {
            let mut state = base;
            state.v = Field::from_fn(grid, |c| {
                let x = grid.cell_center(c);
                [
                    0.0,
                    spec.amplitude * (std::f64::consts::PI * x[0] / grid.l[0]).cos(),
                    0.0,
                ]
            });
            BuiltScenario {
                state,
                mask: SolveMask::ALL,
                kinematic_spin: None,
            }
        }
    };
    debug_assert!(built.state.positive());
    Ok(built)
}

/// Analytic rotation of the initial strain for the corotation oracle:
/// Q(t) E0 Q(t)^T with Q the rotation by omega t about z.
pub fn rotated_strain(e0: &SymTensor3, omega: f64, t: f64) -> SymTensor3 {
    let (s, c) = (omega * t).sin_cos();
    let q = crate::tensor::Tensor3::new([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]);
    let full = q.mul(&e0.to_full()).mul(&q.transpose());
    full.sym_part()
}

/// Sorted eigenvalues of a symmetric tensor via Jacobi rotations (test oracle
/// quality; the fields here are well-conditioned 3x3 tensors).
pub fn sym_eigenvalues(t: &SymTensor3) -> [f64; 3] {
    let mut a = t.to_full().m;
    for _sweep in 0..64 {
        // largest off-diagonal entry
        let mut p = 0;
        let mut q = 1;
        let mut max = 0.0f64;
        for i in 0..3 {
            for j in (i + 1)..3 {
                if a[i][j].abs() > max {
                    max = a[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if max < 1e-15 {
            break;
        }
        let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
        let t_rot = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
        let c = 1.0 / (t_rot * t_rot + 1.0).sqrt();
        let s = t_rot * c;
        let mut b = a;
        for k in 0..3 {
            b[p][k] = c * a[p][k] - s * a[q][k];
            b[q][k] = s * a[p][k] + c * a[q][k];
        }
        let mut out = b;
        for k in 0..3 {
            out[k][p] = c * b[k][p] - s * b[k][q];
            out[k][q] = s * b[k][p] + c * b[k][q];
        }
        a = out;
    }
    let mut eig = [a[0][0], a[1][1], a[2][2]];
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}
