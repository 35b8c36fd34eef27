//! Run configuration: a small INI-style format with `[section]` and
//! `key = value` lines. Omitted keys take defaults, unknown keys are hard
//! errors, and every physical invariant is validated with the violated
//! requirement named. `dump` emits a canonical file that parses back to an
//! identical configuration.

use crate::grid::Grid;
use crate::material::{
    admissible_exponents, ArrheniusParams, DissipationModel, HeatModel, MaterialModel, MaxwellLaw,
    QuadraticCreep, ThermoCreepMaterial,
};
use crate::ops::Advection;
use crate::scenario::{ScenarioKind, ScenarioSpec};
use crate::stepper::{Model, SolverMode, Stabilizers, StepConfig};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, col: usize, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line,
            col,
            message: message.into(),
        }
    }

    fn global(message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: 0,
            col: 0,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}, column {}: {}", self.line, self.col, self.message)
        } else {
            write!(f, "{}", self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialSection {
    pub bulk_modulus: f64,
    pub shear_modulus: f64,
    pub expansivity: f64,
    pub heat_capacity_coeff: f64,
    pub heat_capacity_exponent: f64,
    pub maxwell_modulus: f64,
    /// 0 disables the Arrhenius temperature dependence of the Maxwell modulus
    pub arrhenius_theta: f64,
    pub arrhenius_floor: f64,
    pub creep: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipationSection {
    pub bulk_viscosity: f64,
    pub shear_viscosity: f64,
    pub hyper_coefficient: f64,
    pub hyper_exponent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatSection {
    pub conductivity_coeff: f64,
    pub conductivity_exponent: f64,
    pub outflux_linear: f64,
    pub outflux_quartic: f64,
    pub external_flux: f64,
    pub bulk_source: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub tau: f64,
    pub t_end: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub max_halvings: u32,
    pub advection: Advection,
    pub lambda: f64,
    pub gravity: [f64; 3],
    pub override_admissibility: bool,
    pub solver: SolverMode,
    pub polish: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerSection {
    pub delta: f64,
    pub delta_exponent: f64,
    pub eps_v: f64,
    pub eps_e: f64,
    pub eps_e_exponent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub csv: String,
    pub vtk_every: usize,
    pub out_dir: String,
}

/// Full run configuration; one-to-one with the config file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSection,
    pub material: MaterialSection,
    pub dissipation: DissipationSection,
    pub heat: HeatSection,
    pub run: RunSection,
    pub stabilizer: StabilizerSection,
    pub scenario: ScenarioSpec,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridSection {
                nx: 16,
                ny: 16,
                nz: 1,
                lx: 1.0,
                ly: 1.0,
                lz: 1.0,
            },
            material: MaterialSection {
                bulk_modulus: 1.0,
                shear_modulus: 1.0,
                expansivity: 0.0,
                heat_capacity_coeff: 1.0,
                heat_capacity_exponent: 1.0,
                maxwell_modulus: 2.0,
                arrhenius_theta: 0.0,
                arrhenius_floor: 1e-6,
                creep: true,
            },
            dissipation: DissipationSection {
                bulk_viscosity: 0.5,
                shear_viscosity: 0.5,
                hyper_coefficient: 0.01,
                hyper_exponent: 4.0,
            },
            heat: HeatSection {
                conductivity_coeff: 0.5,
                conductivity_exponent: 1.5,
                outflux_linear: 0.0,
                outflux_quartic: 0.0,
                external_flux: 0.0,
                bulk_source: 0.0,
            },
            run: RunSection {
                tau: 0.05,
                t_end: 1.0,
                newton_tol: 1e-12,
                newton_max_iter: 25,
                max_halvings: 10,
                advection: Advection::Central,
                lambda: 1.0,
                gravity: [0.0; 3],
                override_admissibility: false,
                solver: SolverMode::Monolithic,
                polish: true,
            },
            stabilizer: StabilizerSection {
                delta: 0.0,
                delta_exponent: 4.0,
                eps_v: 0.0,
                eps_e: 0.0,
                eps_e_exponent: 4.0,
            },
            scenario: ScenarioSpec::default(),
            output: OutputSection {
                csv: String::new(),
                vtk_every: 0,
                out_dir: ".".to_string(),
            },
        }
    }
}

impl RunConfig {
    /// Ready-to-run defaults for each built-in scenario, tuned to finish in
    /// seconds on a small grid while keeping every ledger check meaningful.
    pub fn scenario_defaults(kind: ScenarioKind) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.scenario.kind = kind;
        match kind {
            ScenarioKind::RestEquilibrium => {
                cfg.grid.nx = 8;
                cfg.grid.ny = 8;
                cfg.material.expansivity = 0.5;
                cfg.run.tau = 0.1;
                cfg.run.t_end = 1.0;
            }
            ScenarioKind::UniformCreep => {
                cfg.grid.nx = 4;
                cfg.grid.ny = 4;
                cfg.material.expansivity = 0.0;
                cfg.dissipation.bulk_viscosity = 0.1;
                cfg.dissipation.shear_viscosity = 0.1;
                cfg.dissipation.hyper_coefficient = 0.1;
                cfg.run.tau = 0.1;
                cfg.run.t_end = 5.0;
                cfg.scenario.amplitude = 0.1;
            }
            ScenarioKind::RigidRotation => {
                cfg.grid.nx = 4;
                cfg.grid.ny = 4;
                cfg.material.creep = false;
                cfg.scenario.omega = 1.0;
                cfg.scenario.amplitude = 0.1;
                cfg.run.tau = std::f64::consts::TAU / 64.0;
                cfg.run.t_end = std::f64::consts::TAU;
            }
            ScenarioKind::ThermalExpansion => {
                cfg.grid.nx = 8;
                cfg.grid.ny = 8;
                cfg.material.expansivity = 0.5;
                cfg.scenario.amplitude = 0.2;
                cfg.scenario.width = 0.25;
                cfg.run.tau = 0.05;
                cfg.run.t_end = 0.5;
            }
            ScenarioKind::HeatBump => {
                cfg.grid.nx = 16;
                cfg.grid.ny = 16;
                cfg.scenario.amplitude = 0.5;
                cfg.scenario.width = 0.2;
                cfg.run.tau = 0.01;
                cfg.run.t_end = 0.25;
            }
            ScenarioKind::GravitySettle => {
                cfg.grid.nx = 8;
                cfg.grid.ny = 8;
                cfg.material.expansivity = 0.2;
                cfg.run.gravity = [0.0, -0.1, 0.0];
                cfg.dissipation.bulk_viscosity = 1.0;
                cfg.dissipation.shear_viscosity = 1.0;
                cfg.run.tau = 0.05;
                cfg.run.t_end = 1.0;
            }
            ScenarioKind::WaveAttenuation => {
                cfg.grid.nx = 32;
                cfg.grid.ny = 1;
                cfg.dissipation.bulk_viscosity = 0.05;
                cfg.dissipation.shear_viscosity = 0.05;
                cfg.dissipation.hyper_coefficient = 1e-3;
                cfg.scenario.amplitude = 1e-3;
                cfg.run.tau = 0.02;
                cfg.run.t_end = 1.0;
            }
        }
        cfg
    }

    /// Validates all invariants and constructs the model, solver config, and
    /// initial scenario.
    pub fn build(&self) -> Result<Built, ConfigError> {
        let grid = Grid::new(
            [self.grid.nx, self.grid.ny, self.grid.nz],
            [self.grid.lx, self.grid.ly, self.grid.lz],
        )
        .map_err(|e| ConfigError::global(format!("[grid] {e}")))?;

        let maxwell = MaxwellLaw {
            m0: self.material.maxwell_modulus,
            arrhenius: if self.material.arrhenius_theta > 0.0 {
                Some(ArrheniusParams {
                    theta_star: self.material.arrhenius_theta,
                    theta_floor: self.material.arrhenius_floor,
                })
            } else {
                None
            },
        };
        let tc = ThermoCreepMaterial {
            bulk_modulus: self.material.bulk_modulus,
            shear_modulus: self.material.shear_modulus,
            expansivity: self.material.expansivity,
            heat_capacity_coeff: self.material.heat_capacity_coeff,
            heat_capacity_exponent: self.material.heat_capacity_exponent,
            maxwell,
        };
        tc.validate()
            .map_err(|e| ConfigError::global(format!("[material] {e}")))?;
        let material: MaterialModel = tc.material();

        let dissipation = DissipationModel {
            stokes_bulk: self.dissipation.bulk_viscosity,
            stokes_shear: self.dissipation.shear_viscosity,
            hyper_mu: self.dissipation.hyper_coefficient,
            hyper_p: self.dissipation.hyper_exponent,
            creep: if self.material.creep {
                Some(Arc::new(QuadraticCreep { maxwell }))
            } else {
                None
            },
        };
        dissipation
            .validate()
            .map_err(|e| ConfigError::global(format!("[dissipation] {e}")))?;

        let heat = HeatModel {
            kappa0: self.heat.conductivity_coeff,
            beta: self.heat.conductivity_exponent,
            h_linear: self.heat.outflux_linear,
            h_quartic: self.heat.outflux_quartic,
            external_flux: self.heat.external_flux,
            bulk_source: self.heat.bulk_source,
        };
        heat.validate()
            .map_err(|e| ConfigError::global(format!("[heat] {e}")))?;
        if heat.external_flux > 0.0 && heat.h_linear == 0.0 && heat.h_quartic == 0.0 {
            return Err(ConfigError::global(
                "[heat] a positive external flux requires a nonzero boundary outflux law \
                 (outflux_linear + outflux_quartic > 0)",
            ));
        }

        if self.run.tau <= 0.0 || self.run.newton_tol <= 0.0 {
            return Err(ConfigError::global(
                "[run] tau and newton_tol must be positive",
            ));
        }
        if !(0.0 < self.run.lambda && self.run.lambda < 2.0) {
            return Err(ConfigError::global(
                "[run] the entropy exponent lambda must lie in the open interval (0, 2)",
            ));
        }
        if self.run.lambda >= 1.0 + self.material.heat_capacity_exponent {
            return Err(ConfigError::global(format!(
                "[run] lambda = {} must stay below 1 + alpha = {} for the generalized entropy",
                self.run.lambda,
                1.0 + self.material.heat_capacity_exponent
            )));
        }
        let check = admissible_exponents(
            self.material.heat_capacity_exponent,
            self.heat.conductivity_exponent,
            self.run.lambda,
        );
        let mut warnings = Vec::new();
        if !check.admissible {
            let reason = check.reason.clone().unwrap_or_default();
            if self.run.override_admissibility {
                warnings.push(format!(
                    "exponents (alpha = {}, beta = {}, lambda = {}) are outside the admissible \
                     region ({reason}); proceeding because override_admissibility = true",
                    self.material.heat_capacity_exponent,
                    self.heat.conductivity_exponent,
                    self.run.lambda
                ));
            } else {
                return Err(ConfigError::global(format!(
                    "[run] exponents (alpha = {}, beta = {}, lambda = {}) violate the \
                     admissibility conditions 1 + lambda > beta^+ >= (2/3) alpha + lambda - 1/3 \
                     and alpha >= ((3/2) lambda - 1)^+ ({reason}); set \
                     run.override_admissibility = true to proceed",
                    self.material.heat_capacity_exponent,
                    self.heat.conductivity_exponent,
                    self.run.lambda
                )));
            }
        }

        let stabilizers = Stabilizers {
            delta: self.stabilizer.delta,
            r_exp: self.stabilizer.delta_exponent,
            eps_v: self.stabilizer.eps_v,
            eps_e: self.stabilizer.eps_e,
            s_exp: self.stabilizer.eps_e_exponent,
        };
        stabilizers
            .validate()
            .map_err(|e| ConfigError::global(format!("[stabilizer] {e}")))?;

        let built_scenario = crate::scenario::build_scenario(&grid, &self.scenario)
            .map_err(|e| ConfigError::global(format!("[scenario] {e}")))?;

        let step = StepConfig {
            tau: self.run.tau,
            tol_newton: self.run.newton_tol,
            max_newton: self.run.newton_max_iter,
            max_halvings: self.run.max_halvings,
            advection: self.run.advection,
            stabilizers,
            lambda: self.run.lambda,
            solver: self.run.solver,
            polish: self.run.polish,
        };
        let mut model = Model::new(grid, material, dissipation, heat, self.run.gravity);
        model.kinematic_spin = built_scenario.kinematic_spin;

        // growth-bound spot checks for the material laws (warn only)
        warnings.extend(model.material.spot_check(64));

        Ok(Built {
            model,
            step,
            scenario: built_scenario,
            t_end: self.run.t_end,
            warnings,
        })
    }

    /// Canonical text form; `parse_config(dump(cfg))` reproduces `cfg`.
    pub fn dump(&self) -> String {
        let advection = match self.run.advection {
            Advection::Central => "central",
            Advection::Upwind => "upwind",
        };
        let solver = match self.run.solver {
            SolverMode::Monolithic => "monolithic",
            SolverMode::Staggered => "staggered",
        };
        format!(
            "[grid]\nnx = {}\nny = {}\nnz = {}\nlx = {}\nly = {}\nlz = {}\n\n\
             [material]\nbulk_modulus = {}\nshear_modulus = {}\nexpansivity = {}\n\
             heat_capacity_coeff = {}\nheat_capacity_exponent = {}\nmaxwell_modulus = {}\n\
             arrhenius_theta = {}\narrhenius_floor = {}\ncreep = {}\n\n\
             [dissipation]\nbulk_viscosity = {}\nshear_viscosity = {}\n\
             hyper_coefficient = {}\nhyper_exponent = {}\n\n\
             [heat]\nconductivity_coeff = {}\nconductivity_exponent = {}\n\
             outflux_linear = {}\noutflux_quartic = {}\nexternal_flux = {}\nbulk_source = {}\n\n\
             [run]\ntau = {}\nt_end = {}\nnewton_tol = {}\nnewton_max_iter = {}\n\
             max_halvings = {}\nadvection = {}\nlambda = {}\ngravity = {} {} {}\n\
             override_admissibility = {}\nsolver = {}\npolish = {}\n\n\
             [stabilizer]\ndelta = {}\ndelta_exponent = {}\neps_v = {}\neps_e = {}\n\
             eps_e_exponent = {}\n\n\
             [scenario]\nname = {}\namplitude = {}\nwidth = {}\nomega = {}\nrho0 = {}\n\
             theta0 = {}\n\n\
             [output]\ncsv = {}\nvtk_every = {}\nout_dir = {}\n",
            self.grid.nx,
            self.grid.ny,
            self.grid.nz,
            self.grid.lx,
            self.grid.ly,
            self.grid.lz,
            self.material.bulk_modulus,
            self.material.shear_modulus,
            self.material.expansivity,
            self.material.heat_capacity_coeff,
            self.material.heat_capacity_exponent,
            self.material.maxwell_modulus,
            self.material.arrhenius_theta,
            self.material.arrhenius_floor,
            self.material.creep,
            self.dissipation.bulk_viscosity,
            self.dissipation.shear_viscosity,
            self.dissipation.hyper_coefficient,
            self.dissipation.hyper_exponent,
            self.heat.conductivity_coeff,
            self.heat.conductivity_exponent,
            self.heat.outflux_linear,
            self.heat.outflux_quartic,
            self.heat.external_flux,
            self.heat.bulk_source,
            self.run.tau,
            self.run.t_end,
            self.run.newton_tol,
            self.run.newton_max_iter,
            self.run.max_halvings,
            advection,
            self.run.lambda,
            self.run.gravity[0],
            self.run.gravity[1],
            self.run.gravity[2],
            self.run.override_admissibility,
            solver,
            self.run.polish,
            self.stabilizer.delta,
            self.stabilizer.delta_exponent,
            self.stabilizer.eps_v,
            self.stabilizer.eps_e,
            self.stabilizer.eps_e_exponent,
            self.scenario.kind.name(),
            self.scenario.amplitude,
            self.scenario.width,
            self.scenario.omega,
            self.scenario.rho0,
            self.scenario.theta0,
            self.output.csv,
            self.output.vtk_every,
            self.output.out_dir,
        )
    }
}

/// Everything needed to run: model, step config, scenario, and warnings
/// gathered during validation.
pub struct Built {
    pub model: Model,
    pub step: StepConfig,
    pub scenario: crate::scenario::BuiltScenario,
    pub t_end: f64,
    pub warnings: Vec<String>,
}

/// Parses the INI-style configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut section = String::new();
    for (lineno, raw_line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = match raw_line.find(['#', ';']) {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| {
                ConfigError::at(line_no, trimmed.len(), "missing ']' after section name")
            })?;
            section = name.trim().to_string();
            const SECTIONS: [&str; 8] = [
                "grid",
                "material",
                "dissipation",
                "heat",
                "run",
                "stabilizer",
                "scenario",
                "output",
            ];
            if !SECTIONS.contains(&section.as_str()) {
                return Err(ConfigError::at(
                    line_no,
                    1,
                    format!("unknown section '[{section}]'"),
                ));
            }
            continue;
        }
        let eq = trimmed.find('=').ok_or_else(|| {
            ConfigError::at(line_no, 1, format!("expected 'key = value', got '{trimmed}'"))
        })?;
        let key = trimmed[..eq].trim();
        let value = trimmed[eq + 1..].trim();
        let col = line.find(key).map(|p| p + 1).unwrap_or(1);
        if section.is_empty() {
            return Err(ConfigError::at(
                line_no,
                col,
                format!("key '{key}' appears before any [section]"),
            ));
        }
        apply_key(&mut cfg, &section, key, value)
            .map_err(|msg| ConfigError::at(line_no, col, msg))?;
    }
    Ok(cfg)
}

fn parse_val<T: FromStr>(value: &str, what: &str) -> Result<T, String> {
    value
        .parse::<T>()
        .map_err(|_| format!("cannot parse '{value}' as {what}"))
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("cannot parse '{value}' as a boolean")),
    }
}

fn apply_key(cfg: &mut RunConfig, section: &str, key: &str, value: &str) -> Result<(), String> {
    let unknown = || Err(format!("unknown key '{key}' in section [{section}]"));
    match section {
        "grid" => match key {
            "nx" => cfg.grid.nx = parse_val(value, "an integer")?,
            "ny" => cfg.grid.ny = parse_val(value, "an integer")?,
            "nz" => cfg.grid.nz = parse_val(value, "an integer")?,
            "lx" => cfg.grid.lx = parse_val(value, "a number")?,
            "ly" => cfg.grid.ly = parse_val(value, "a number")?,
            "lz" => cfg.grid.lz = parse_val(value, "a number")?,
            _ => return unknown(),
        },
        "material" => match key {
            "bulk_modulus" => cfg.material.bulk_modulus = parse_val(value, "a number")?,
            "shear_modulus" => cfg.material.shear_modulus = parse_val(value, "a number")?,
            "expansivity" => cfg.material.expansivity = parse_val(value, "a number")?,
            "heat_capacity_coeff" => {
                cfg.material.heat_capacity_coeff = parse_val(value, "a number")?
            }
            "heat_capacity_exponent" => {
                cfg.material.heat_capacity_exponent = parse_val(value, "a number")?
            }
            "maxwell_modulus" => cfg.material.maxwell_modulus = parse_val(value, "a number")?,
            "arrhenius_theta" => cfg.material.arrhenius_theta = parse_val(value, "a number")?,
            "arrhenius_floor" => cfg.material.arrhenius_floor = parse_val(value, "a number")?,
            "creep" => cfg.material.creep = parse_bool(value)?,
            _ => return unknown(),
        },
        "dissipation" => match key {
            "bulk_viscosity" => cfg.dissipation.bulk_viscosity = parse_val(value, "a number")?,
            "shear_viscosity" => cfg.dissipation.shear_viscosity = parse_val(value, "a number")?,
            "hyper_coefficient" => {
                cfg.dissipation.hyper_coefficient = parse_val(value, "a number")?
            }
            "hyper_exponent" => {
                let p: f64 = parse_val(value, "a number")?;
                if p <= 3.0 {
                    return Err(format!(
                        "hyper_exponent = {p} is invalid: the hyper-viscosity exponent p must \
                         exceed 3"
                    ));
                }
                cfg.dissipation.hyper_exponent = p;
            }
            _ => return unknown(),
        },
        "heat" => match key {
            "conductivity_coeff" => cfg.heat.conductivity_coeff = parse_val(value, "a number")?,
            "conductivity_exponent" => {
                cfg.heat.conductivity_exponent = parse_val(value, "a number")?
            }
            "outflux_linear" => cfg.heat.outflux_linear = parse_val(value, "a number")?,
            "outflux_quartic" => cfg.heat.outflux_quartic = parse_val(value, "a number")?,
            "external_flux" => cfg.heat.external_flux = parse_val(value, "a number")?,
            "bulk_source" => cfg.heat.bulk_source = parse_val(value, "a number")?,
            _ => return unknown(),
        },
        "run" => match key {
            "tau" => cfg.run.tau = parse_val(value, "a number")?,
            "t_end" => cfg.run.t_end = parse_val(value, "a number")?,
            "newton_tol" => cfg.run.newton_tol = parse_val(value, "a number")?,
            "newton_max_iter" => cfg.run.newton_max_iter = parse_val(value, "an integer")?,
            "max_halvings" => cfg.run.max_halvings = parse_val(value, "an integer")?,
            "advection" => {
                cfg.run.advection = match value {
                    "central" => Advection::Central,
                    "upwind" => Advection::Upwind,
                    _ => return Err(format!("advection must be 'central' or 'upwind', got '{value}'")),
                }
            }
            "lambda" => cfg.run.lambda = parse_val(value, "a number")?,
            "gravity" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(format!("gravity needs three components, got '{value}'"));
                }
                for (i, p) in parts.iter().enumerate() {
                    cfg.run.gravity[i] = parse_val(p, "a number")?;
                }
            }
            "override_admissibility" => cfg.run.override_admissibility = parse_bool(value)?,
            "solver" => {
                cfg.run.solver = match value {
                    "monolithic" => SolverMode::Monolithic,
                    "staggered" => SolverMode::Staggered,
                    _ => {
                        return Err(format!(
                            "solver must be 'monolithic' or 'staggered', got '{value}'"
                        ))
                    }
                }
            }
            "polish" => cfg.run.polish = parse_bool(value)?,
            _ => return unknown(),
        },
        "stabilizer" => match key {
            "delta" => cfg.stabilizer.delta = parse_val(value, "a number")?,
            "delta_exponent" => cfg.stabilizer.delta_exponent = parse_val(value, "a number")?,
            "eps_v" => cfg.stabilizer.eps_v = parse_val(value, "a number")?,
            "eps_e" => cfg.stabilizer.eps_e = parse_val(value, "a number")?,
            "eps_e_exponent" => cfg.stabilizer.eps_e_exponent = parse_val(value, "a number")?,
            _ => return unknown(),
        },
        "scenario" => match key {
            "name" => cfg.scenario.kind = value.parse::<ScenarioKind>()?,
            "amplitude" => cfg.scenario.amplitude = parse_val(value, "a number")?,
            "width" => cfg.scenario.width = parse_val(value, "a number")?,
            "omega" => cfg.scenario.omega = parse_val(value, "a number")?,
            "rho0" => cfg.scenario.rho0 = parse_val(value, "a number")?,
            "theta0" => cfg.scenario.theta0 = parse_val(value, "a number")?,
            _ => return unknown(),
        },
        "output" => match key {
            "csv" => cfg.output.csv = value.to_string(),
            "vtk_every" => cfg.output.vtk_every = parse_val(value, "an integer")?,
            "out_dir" => cfg.output.out_dir = value.to_string(),
            _ => return unknown(),
        },
        _ => return Err(format!("unknown section [{section}]")),
    }
    Ok(())
}
