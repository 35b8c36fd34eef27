//! Acceptance suite: every stated criterion at its stated tolerance, one
//! pass/fail line per criterion. Run with `cargo test --test acceptance`.

mod common;

use common::{block_error, build_model, dense_jacobian_analytic, dense_jacobian_fd, random_state, ModelSpec};
use std::time::Instant;
use thermovisc::config::RunConfig;
use thermovisc::diagnostics;
use thermovisc::grid::Grid;
use thermovisc::material::{admissible_exponents, MaxwellLaw, QuadraticCreep, ThermoCreepMaterial};
use thermovisc::output;
use thermovisc::scenario::{rotated_strain, sym_eigenvalues, ScenarioKind};
use thermovisc::state::{C_E, C_RHO, C_TH, C_V};
use thermovisc::stepper::{self, StepConfig, Trajectory};
use thermovisc::tensor::{
    boxtimes, commutator_contraction, trace_sph_dev, triple_contraction, SymTensor3, Tensor3,
    ThirdOrderTensor,
};
use thermovisc::util::SplitMix64;

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn report(&mut self, idx: usize, name: &str, started: Instant, outcome: Result<String, String>) {
        let dt = started.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {idx:2} {name}: PASS ({detail}; {dt:.2?})"),
            Err(why) => {
                println!("criterion {idx:2} {name}: FAIL ({why}; {dt:.2?})");
                self.failures.push(format!("{idx} {name}: {why}"));
            }
        }
    }
}

fn run_scenario(kind: ScenarioKind) -> (thermovisc::config::Built, Trajectory, std::time::Duration) {
    let cfg = RunConfig::scenario_defaults(kind);
    let built = cfg.build().unwrap();
    let t0 = Instant::now();
    let traj = stepper::run(
        &built.model,
        &built.step,
        &built.scenario.state,
        built.t_end,
        built.scenario.mask,
    )
    .unwrap_or_else(|e| panic!("{kind}: {e}"));
    (built, traj, t0.elapsed())
}

fn criterion_1_tensor_identities() -> Result<String, String> {
    let mut rng = SplitMix64::new(0xace1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        // commuting pair: S = aI + bE + cE^2
        let mut e = SymTensor3::ZERO;
        for s in 0..6 {
            e.c[s] = rng.next_signed();
        }
        let e2 = e.to_full().mul(&e.to_full()).sym_part();
        let s = SymTensor3::spherical(rng.next_signed())
            + e.scale(rng.next_signed())
            + e2.scale(rng.next_signed());
        let mut l = Tensor3::ZERO;
        for row in &mut l.m {
            for v in row {
                *v = rng.next_signed();
            }
        }
        let scale = (1.0 + s.norm()) * (1.0 + e.norm()) * (1.0 + l.norm());
        worst = worst.max(commutator_contraction(&s, &e, &l).abs() / scale);

        // dev/sph decomposition
        let (_, sph, dev) = trace_sph_dev(&s);
        let recon = sph + dev.to_sym() - s;
        worst = worst.max(recon.norm() / (1.0 + s.norm()));
        worst = worst.max(dev.to_sym().trace().abs() / (1.0 + s.norm()));

        // boxtimes trace identity
        let mut g = ThirdOrderTensor::ZERO;
        for v in &mut g.t {
            *v = rng.next_signed();
        }
        let tr = boxtimes(&g).trace();
        let n2 = triple_contraction(&g, &g);
        worst = worst.max((tr - n2).abs() / (1.0 + n2));
    }
    if worst <= 1e-12 {
        Ok(format!("max violation {worst:.2e} over 1e4 trials"))
    } else {
        Err(format!("max violation {worst:.2e} > 1e-12"))
    }
}

fn criterion_2_gibbs_suite() -> Result<String, String> {
    let mut rng = SplitMix64::new(0xbeef);
    let mut worst_fd: f64 = 0.0;
    let mut worst_alg: f64 = 0.0;
    for _ in 0..100 {
        let tc = ThermoCreepMaterial {
            bulk_modulus: rng.next_range(0.5, 2.0),
            shear_modulus: rng.next_range(0.5, 2.0),
            expansivity: rng.next_range(0.0, 1.0),
            heat_capacity_coeff: rng.next_range(0.5, 2.0),
            heat_capacity_exponent: rng.next_range(0.6, 1.4),
            maxwell: MaxwellLaw::constant(rng.next_range(0.5, 4.0)),
        };
        let mat = tc.material();
        let creep = QuadraticCreep { maxwell: tc.maxwell };
        let mut e = SymTensor3::ZERO;
        for s in 0..6 {
            e.c[s] = 0.3 * rng.next_signed();
        }
        let theta = rng.next_range(0.2, 4.0);
        let d = 1e-5;

        // entropy = -d psi / d theta
        let eta = mat.entropy(&e, theta).unwrap();
        let fd = -(mat.free_energy(&e, theta + d).unwrap() - mat.free_energy(&e, theta - d).unwrap())
            / (2.0 * d);
        worst_fd = worst_fd.max((eta - fd).abs() / fd.abs().max(1.0));

        // heat capacity = U'
        let c = mat.heat_capacity(theta).unwrap();
        let fd = (mat.thermal_energy(theta + d).unwrap() - mat.thermal_energy(theta - d).unwrap())
            / (2.0 * d);
        worst_fd = worst_fd.max((c - fd).abs() / fd.abs().max(1.0));

        // energy = psi + theta eta
        let lhs = mat.internal_energy(&e, theta).unwrap();
        let rhs = mat.free_energy(&e, theta).unwrap() + theta * eta;
        worst_alg = worst_alg.max((lhs - rhs).abs() / lhs.abs().max(1.0));

        // deviatoric stress is temperature independent
        let dev_t = mat.cauchy_stress(&e, theta).unwrap().dev().to_sym();
        let dev_0 = mat.cauchy_stress(&e, 0.0).unwrap().dev().to_sym();
        worst_alg = worst_alg.max((dev_t - dev_0).norm() / (1.0 + dev_0.norm()));

        // flow rule: stress_of_rate(flow(dev T)) = dev T
        use thermovisc::material::CreepPotential;
        let pi = creep.flow(&mat.cauchy_stress(&e, theta).unwrap().dev(), theta);
        let back = creep.stress_of_rate(&pi, theta).to_sym();
        worst_alg = worst_alg.max((back - dev_t).norm() / (1.0 + dev_t.norm()));
    }
    if worst_fd <= 1e-6 && worst_alg <= 1e-10 {
        Ok(format!("fd {worst_fd:.2e}, algebraic {worst_alg:.2e}, 100 samples each"))
    } else {
        Err(format!("fd {worst_fd:.2e} (tol 1e-6), algebraic {worst_alg:.2e} (tol 1e-10)"))
    }
}

fn criterion_3_exponent_region() -> Result<String, String> {
    let lambda = 1e-9;
    for i in 0..=1000 {
        let alpha = i as f64 * 1e-3;
        let got = admissible_exponents(alpha, 0.0, lambda).admissible;
        let want = alpha < 0.5;
        if got != want {
            return Err(format!("scan mismatch at alpha = {alpha}"));
        }
    }
    let c = admissible_exponents(1.0, 1.5, 1.0);
    if !c.admissible {
        return Err("(1, 1.5, 1) must be admissible".into());
    }
    let mu = c.mu_max.unwrap();
    if (mu - 1.7).abs() > 1e-14 {
        return Err(format!("mu_max = {mu}, expected 1.7"));
    }
    Ok("region boundary at alpha = 1/2 exact on the 1e-3 scan; mu_max(1, 1.5, 1) = 1.7".into())
}

fn criterion_7_creep_closed_form(
    built: &thermovisc::config::Built,
    traj: &Trajectory,
) -> Result<String, String> {
    if traj.states.len() != 51 {
        return Err(format!("expected 51 states, got {}", traj.states.len()));
    }
    let e0 = built.scenario.state.e[0];
    let mut worst: f64 = 0.0;
    for (k, state) in traj.states.iter().enumerate() {
        let factor = 1.1f64.powi(k as i32);
        for c in 0..state.n_cells() {
            for s in 0..6 {
                worst = worst.max((state.e[c].c[s] - e0.c[s] / factor).abs());
            }
        }
    }
    if worst <= 1e-10 {
        Ok(format!("max deviation {worst:.2e} over 50 steps"))
    } else {
        Err(format!("max deviation {worst:.2e} > 1e-10"))
    }
}

fn criterion_8_corotation() -> Result<String, String> {
    let base = RunConfig::scenario_defaults(ScenarioKind::RigidRotation);
    let t_end = std::f64::consts::TAU;
    let mut drifts = Vec::new();
    for level in 0..3u32 {
        let mut cfg = base.clone();
        cfg.run.tau = t_end / (512u32 << level) as f64;
        let built = cfg.build().unwrap();
        let e0 = built.scenario.state.e[0];
        let traj = stepper::run(
            &built.model,
            &built.step,
            &built.scenario.state,
            t_end,
            built.scenario.mask,
        )
        .map_err(|e| e.to_string())?;
        let want = sym_eigenvalues(&rotated_strain(&e0, cfg.scenario.omega, t_end));
        let mut drift = 0.0f64;
        let last = traj.final_state();
        for c in 0..last.n_cells() {
            let got = sym_eigenvalues(&last.e[c]);
            for i in 0..3 {
                drift = drift.max((got[i] - want[i]).abs());
            }
        }
        drifts.push(drift);
    }
    let orders: Vec<f64> = drifts.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    if orders.iter().all(|&o| o >= 0.9) {
        Ok(format!(
            "drifts [{}], orders [{}]",
            drifts.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(", "),
            orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join(", ")
        ))
    } else {
        Err(format!("orders {orders:?} below 0.9 (drifts {drifts:?})"))
    }
}

fn criterion_9_temporal_convergence() -> Result<String, String> {
    // creep: exact first order
    let cfg = RunConfig::scenario_defaults(ScenarioKind::UniformCreep);
    let built = cfg.build().unwrap();
    let creep = thermovisc::convergence::convergence_study(
        &built.model,
        &built.step,
        &built.scenario.state,
        2.0,
        built.scenario.mask,
        4,
    )
    .map_err(|e| e.to_string())?;
    for &o in &creep.order_e {
        if !(0.95..=1.05).contains(&o) {
            return Err(format!("creep strain orders {:?} outside 1.00 +/- 0.05", creep.order_e));
        }
    }
    // heat bump on 16x16x1
    let cfg = RunConfig::scenario_defaults(ScenarioKind::HeatBump);
    assert_eq!((cfg.grid.nx, cfg.grid.ny, cfg.grid.nz), (16, 16, 1));
    let built = cfg.build().unwrap();
    let heat = thermovisc::convergence::convergence_study(
        &built.model,
        &built.step,
        &built.scenario.state,
        built.t_end,
        built.scenario.mask,
        3,
    )
    .map_err(|e| e.to_string())?;
    for &o in &heat.order_theta {
        if !(0.7..=1.3).contains(&o) {
            return Err(format!("heat orders {:?} outside [0.7, 1.3]", heat.order_theta));
        }
    }
    let fmt = |v: &[f64]| v.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join(", ");
    Ok(format!(
        "creep orders [{}], heat orders [{}]",
        fmt(&creep.order_e),
        fmt(&heat.order_theta)
    ))
}

fn criterion_10_jacobian() -> Result<String, String> {
    let cfg = StepConfig {
        tau: 0.07,
        ..StepConfig::default()
    };
    let mut worst: f64 = 0.0;
    let mut rng = SplitMix64::new(0xfeed);
    for state_idx in 0..20 {
        let grid = Grid::new([4, 4, 1], [1.0, 1.0, 1.0]).unwrap();
        let model = build_model(
            grid,
            &ModelSpec {
                alpha_v: if state_idx % 2 == 0 { 0.5 } else { 0.0 },
                creep: state_idx % 3 != 0,
                ..ModelSpec::default()
            },
        );
        let prev = random_state(&model.grid, &mut rng, 0.3, 0.3);
        let cur = random_state(&model.grid, &mut rng, 0.3, 0.3);
        let an = dense_jacobian_analytic(&model, &cfg, &prev, &cur, cfg.tau);
        let fd = dense_jacobian_fd(&model, &cfg, &prev, &cur, cfg.tau);
        let groups: [Vec<usize>; 4] = [
            vec![C_RHO],
            vec![C_V, C_V + 1, C_V + 2],
            (0..6).map(|m| C_E + m).collect(),
            vec![C_TH],
        ];
        for rows in &groups {
            for cols in &groups {
                let (diff, norm) = block_error(&an, &fd, model.grid.n_cells(), rows, cols);
                worst = worst.max(diff / norm.max(1e-2));
            }
        }
    }
    if worst <= 1e-5 {
        Ok(format!("max block deviation {worst:.2e} over 20 states"))
    } else {
        Err(format!("max block deviation {worst:.2e} > 1e-5"))
    }
}

fn criterion_11_determinism() -> Result<String, String> {
    let render = || -> String {
        let cfg = RunConfig::scenario_defaults(ScenarioKind::ThermalExpansion);
        let built = cfg.build().unwrap();
        let traj = stepper::run(
            &built.model,
            &built.step,
            &built.scenario.state,
            built.t_end,
            built.scenario.mask,
        )
        .unwrap();
        output::csv_text(&traj.ledger)
    };
    let a = render();
    let b = render();
    if a != b {
        return Err("repeat run differs".into());
    }
    #[cfg(feature = "parallel")]
    {
        let pool = |n: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(render)
        };
        if pool(1) != pool(4) {
            return Err("thread count changed the CSV".into());
        }
        Ok("byte-identical across repeats and 1- vs 4-thread pools".into())
    }
    #[cfg(not(feature = "parallel"))]
    Ok("byte-identical across repeats (sequential build)".into())
}

#[test]
fn acceptance() {
    let mut gate = Gate { failures: Vec::new() };

    let t = Instant::now();
    gate.report(1, "tensor identities", t, criterion_1_tensor_identities());
    let t = Instant::now();
    gate.report(2, "constitutive Gibbs suite", t, criterion_2_gibbs_suite());
    let t = Instant::now();
    gate.report(3, "exponent region", t, criterion_3_exponent_region());

    // shared scenario runs for criteria 4, 5, 6, 7
    let runs: Vec<(ScenarioKind, thermovisc::config::Built, Trajectory, std::time::Duration)> =
        ScenarioKind::ALL
            .into_iter()
            .map(|kind| {
                let (built, traj, dt) = run_scenario(kind);
                (kind, built, traj, dt)
            })
            .collect();

    // 4: mass conservation per step and over each run
    let t = Instant::now();
    let mut outcome: Result<String, String> = Ok(String::new());
    let mut worst_drift: f64 = 0.0;
    let mut slowest = std::time::Duration::ZERO;
    for (kind, built, traj, dt) in &runs {
        slowest = slowest.max(*dt);
        if *dt > std::time::Duration::from_secs(60) {
            outcome = Err(format!("{kind} took {dt:.2?} (> 60 s)"));
        }
        let mass0 = diagnostics::mass_and_positivity(&built.model, &built.scenario.state).0;
        for row in &traj.ledger {
            let drift = ((row.mass - mass0) / mass0).abs();
            worst_drift = worst_drift.max(drift);
            if drift > 1e-12 {
                outcome = Err(format!("{kind}: mass drift {drift:.2e} at t = {:.3e}", row.t));
            }
        }
    }
    if outcome.is_ok() {
        outcome = Ok(format!(
            "worst relative drift {worst_drift:.2e} across 7 scenarios (slowest run {slowest:.2?})"
        ));
    }
    gate.report(4, "mass conservation", t, outcome);

    // 5: positivity everywhere plus bisection on the engineered stress case
    let t = Instant::now();
    let mut outcome: Result<String, String> = Ok(String::new());
    let mut min_rho = f64::INFINITY;
    let mut min_theta = f64::INFINITY;
    for (kind, _, traj, _) in &runs {
        for row in &traj.ledger {
            min_rho = min_rho.min(row.min_rho);
            min_theta = min_theta.min(row.min_theta);
            if row.min_rho <= 0.0 || row.min_theta <= 0.0 {
                outcome = Err(format!("{kind}: nonpositive state at t = {:.3e}", row.t));
            }
        }
    }
    let stress = stress_scenario();
    match stress {
        Ok((subdivisions, pos)) => {
            if subdivisions == 0 {
                outcome = Err("stress scenario did not trigger bisection".into());
            } else if !pos {
                outcome = Err("stress scenario produced a nonpositive state".into());
            } else if outcome.is_ok() {
                outcome = Ok(format!(
                    "min rho {min_rho:.3e}, min theta {min_theta:.3e}; stress case bisected {subdivisions}x and stayed positive"
                ));
            }
        }
        Err(e) => outcome = Err(format!("stress scenario failed: {e}")),
    }
    gate.report(5, "positivity and bisection", t, outcome);

    // 6: energy ledgers
    let t = Instant::now();
    let mut outcome: Result<String, String> = Ok(String::new());
    let mut worst_slack = f64::NEG_INFINITY;
    let mut worst_prod = f64::INFINITY;
    for (kind, built, traj, _) in &runs {
        let tol = diagnostics::balance_tolerance(&built.step, &built.model);
        let insulated_g0 = built.model.heat.external_flux == 0.0
            && built.model.heat.h_linear == 0.0
            && built.model.heat.h_quartic == 0.0
            && built.model.gravity == [0.0; 3];
        for row in &traj.ledger {
            if insulated_g0 {
                worst_slack = worst_slack.max(row.slack_total);
                if row.slack_total > tol {
                    outcome = Err(format!(
                        "{kind}: total-energy slack {:.2e} > tol {:.2e}",
                        row.slack_total, tol
                    ));
                }
            }
            worst_prod = worst_prod.min(row.entropy_prod);
            if row.entropy_prod < -1e-10 {
                outcome = Err(format!("{kind}: entropy production {:.2e}", row.entropy_prod));
            }
        }
    }
    if outcome.is_ok() {
        outcome = Ok(format!(
            "worst insulated total-energy slack {worst_slack:.2e}, min entropy production {worst_prod:.2e}"
        ));
    }
    gate.report(6, "energy and entropy ledgers", t, outcome);

    // 7: creep closed form (uses the shared uniform_creep run)
    let t = Instant::now();
    let (_, built_creep, traj_creep, _) = runs
        .iter()
        .find(|(k, _, _, _)| *k == ScenarioKind::UniformCreep)
        .map(|(k, b, tr, d)| (*k, b, tr, d))
        .unwrap();
    gate.report(7, "creep closed form", t, criterion_7_creep_closed_form(built_creep, traj_creep));

    let t = Instant::now();
    gate.report(8, "corotational eigenvalue drift", t, criterion_8_corotation());
    let t = Instant::now();
    gate.report(9, "temporal convergence", t, criterion_9_temporal_convergence());
    let t = Instant::now();
    gate.report(10, "analytic Jacobian vs finite differences", t, criterion_10_jacobian());
    let t = Instant::now();
    gate.report(11, "deterministic ledgers", t, criterion_11_determinism());

    assert!(
        gate.failures.is_empty(),
        "acceptance failures:\n{}",
        gate.failures.join("\n")
    );
}

/// Violent compression against a density trough: must bisect, not go negative.
fn stress_scenario() -> Result<(u32, bool), String> {
    let grid = Grid::new([8, 1, 1], [1.0, 1.0, 1.0]).map_err(|e| e.to_string())?;
    let model = build_model(
        grid,
        &ModelSpec {
            alpha_v: 0.0,
            stokes: (0.05, 0.05),
            hyper: (1e-4, 4.0),
            ..ModelSpec::default()
        },
    );
    let mut state = thermovisc::state::State::uniform(&model.grid, 1.0, 1.0);
    for c in 0..state.n_cells() {
        let x = model.grid.cell_center(c)[0];
        state.v[c][0] = -4.0 * (2.0 * std::f64::consts::PI * x).sin();
        state.rho[c] = 0.15 + (std::f64::consts::PI * x).sin().powi(2);
    }
    let cfg = StepConfig {
        tau: 0.2,
        max_newton: 16,
        tol_newton: 1e-10,
        ..StepConfig::default()
    };
    let (next, report, _) = stepper::advance(&model, &cfg, &state, stepper::SolveMask::ALL)
        .map_err(|e| e.to_string())?;
    Ok((report.subdivisions, next.positive()))
}
