//! Benchmarks comparing the data-parallel cell loops against the sequential
//! fallback: residual assembly, Jacobian assembly, and one full Newton step.

use criterion::{criterion_group, criterion_main, Criterion};
use thermovisc::config::RunConfig;
use thermovisc::par::Exec;
use thermovisc::scenario::ScenarioKind;
use thermovisc::stepper::{newton, residual};

fn setup(n: usize) -> (thermovisc::stepper::Model, thermovisc::stepper::StepConfig, thermovisc::State, thermovisc::stepper::SolveMask) {
    let mut cfg = RunConfig::scenario_defaults(ScenarioKind::ThermalExpansion);
    cfg.grid.nx = n;
    cfg.grid.ny = n;
    let built = cfg.build().expect("valid defaults");
    (built.model, built.step, built.scenario.state, built.scenario.mask)
}

fn bench_assembly(c: &mut Criterion) {
    let (model, step, state, _) = setup(16);
    let prev = state.clone();
    let der = residual::derive(&model, &state).unwrap();

    let mut group = c.benchmark_group("residual_16x16");
    for (name, exec) in [("parallel", Exec::Auto), ("sequential", Exec::Sequential)] {
        let m = thermovisc::stepper::Model {
            exec,
            ..rebuild(&model)
        };
        group.bench_function(name, |b| {
            b.iter(|| residual::residual(&m, &step, &prev, &state, step.tau).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("jacobian_16x16");
    for (name, exec) in [("parallel", Exec::Auto), ("sequential", Exec::Sequential)] {
        let m = thermovisc::stepper::Model {
            exec,
            ..rebuild(&model)
        };
        group.bench_function(name, |b| {
            b.iter(|| {
                thermovisc::stepper::jacobian::jacobian(&m, &step, &prev, &state, &der, step.tau)
            })
        });
    }
    group.finish();
}

fn bench_newton_step(c: &mut Criterion) {
    let (model, step, state, mask) = setup(12);
    let mut group = c.benchmark_group("newton_step_12x12");
    group.sample_size(10);
    for (name, exec) in [("parallel", Exec::Auto), ("sequential", Exec::Sequential)] {
        let m = thermovisc::stepper::Model {
            exec,
            ..rebuild(&model)
        };
        group.bench_function(name, |b| {
            b.iter(|| newton::newton_solve(&m, &step, &state, step.tau, mask).unwrap())
        });
    }
    group.finish();
}

/// Clone a model by rebuilding (Model holds trait objects shared via Arc).
fn rebuild(model: &thermovisc::stepper::Model) -> thermovisc::stepper::Model {
    let mut m = thermovisc::stepper::Model::new(
        model.grid.clone(),
        model.material.clone(),
        model.dissipation.clone(),
        model.heat.clone(),
        model.gravity,
    );
    m.kinematic_spin = model.kinematic_spin;
    m
}

criterion_group!(benches, bench_assembly, bench_newton_step);
criterion_main!(benches);
