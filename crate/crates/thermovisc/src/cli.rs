//! Command-line driver: `run`, `check`, and `converge` subcommands.
//!
//! Exit codes: 0 success, 1 configuration error, 2 step failure, 3 a balance
//! check failed beyond tolerance.

use crate::config::{parse_config, RunConfig};
use crate::diagnostics;
use crate::output;
use crate::stepper;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_STEP: i32 = 2;
pub const EXIT_BALANCE: i32 = 3;

const USAGE: &str = "\
thermovisc: implicit Eulerian thermo-visco-elastodynamics on a structured grid

USAGE:
    thermovisc run --config FILE [--tau X] [--tend X] [--out DIR]
                   [--vtk-every K] [--threads N]
    thermovisc check --config FILE
    thermovisc converge --config FILE --levels N

SUBCOMMANDS:
    run        time-step the configured scenario, writing the ledger CSV and
               optional VTK snapshots
    check      parse and validate the configuration, then exit
    converge   tau-halving study: run at tau, tau/2, ... and report observed
               convergence orders

EXIT CODES:
    0 success, 1 configuration error, 2 step failure, 3 balance violation
";

struct Args {
    config: Option<PathBuf>,
    tau: Option<f64>,
    tend: Option<f64>,
    out: Option<PathBuf>,
    vtk_every: Option<usize>,
    threads: Option<usize>,
    levels: usize,
}

fn parse_args(args: &[String]) -> Result<Args, String> {
    let mut out = Args {
        config: None,
        tau: None,
        tend: None,
        out: None,
        vtk_every: None,
        threads: None,
        levels: 3,
    };
    let mut i = 0;
    while i < args.len() {
        let take = |i: &mut usize| -> Result<String, String> {
            *i += 1;
            args.get(*i)
                .cloned()
                .ok_or_else(|| format!("flag {} needs a value", args[*i - 1]))
        };
        match args[i].as_str() {
            "--config" => out.config = Some(PathBuf::from(take(&mut i)?)),
            "--tau" => out.tau = Some(take(&mut i)?.parse().map_err(|_| "bad --tau value")?),
            "--tend" => out.tend = Some(take(&mut i)?.parse().map_err(|_| "bad --tend value")?),
            "--out" => out.out = Some(PathBuf::from(take(&mut i)?)),
            "--vtk-every" => {
                out.vtk_every = Some(take(&mut i)?.parse().map_err(|_| "bad --vtk-every value")?)
            }
            "--threads" => {
                out.threads = Some(take(&mut i)?.parse().map_err(|_| "bad --threads value")?)
            }
            "--levels" => out.levels = take(&mut i)?.parse().map_err(|_| "bad --levels value")?,
            other => return Err(format!("unknown flag '{other}'")),
        }
        i += 1;
    }
    Ok(out)
}

fn load_config(args: &Args) -> Result<RunConfig, String> {
    let path = args.config.as_ref().ok_or("missing --config FILE")?;
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(tau) = args.tau {
        cfg.run.tau = tau;
    }
    if let Some(tend) = args.tend {
        cfg.run.t_end = tend;
    }
    if let Some(dir) = &args.out {
        cfg.output.out_dir = dir.display().to_string();
    }
    if let Some(k) = args.vtk_every {
        cfg.output.vtk_every = k;
    }
    Ok(cfg)
}

/// Entry point; returns the process exit code.
pub fn main_with_args(argv: &[String]) -> i32 {
    if argv.is_empty() || argv[0] == "--help" || argv[0] == "-h" {
        print!("{USAGE}");
        return EXIT_OK;
    }
    let sub = argv[0].as_str();
    let args = match parse_args(&argv[1..]) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let run_it = || -> i32 {
        match sub {
            "run" => cmd_run(&args),
            "check" => cmd_check(&args),
            "converge" => cmd_converge(&args),
            other => {
                eprintln!("error: unknown subcommand '{other}'");
                eprint!("{USAGE}");
                EXIT_CONFIG
            }
        }
    };
    #[cfg(feature = "parallel")]
    if let Some(n) = args.threads {
        return rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(run_it))
            .unwrap_or_else(|e| {
                eprintln!("error: cannot build thread pool: {e}");
                EXIT_CONFIG
            });
    }
    #[cfg(not(feature = "parallel"))]
    if args.threads.is_some() {
        eprintln!("note: built without the 'parallel' feature; --threads ignored");
    }
    run_it()
}

fn cmd_check(args: &Args) -> i32 {
    let cfg = match load_config(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match cfg.build() {
        Ok(built) => {
            for w in &built.warnings {
                println!("warning: {w}");
            }
            println!(
                "configuration ok: scenario '{}', grid {}x{}x{}, tau = {}, t_end = {}",
                cfg.scenario.kind,
                cfg.grid.nx,
                cfg.grid.ny,
                cfg.grid.nz,
                cfg.run.tau,
                cfg.run.t_end
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn cmd_run(args: &Args) -> i32 {
    let cfg = match load_config(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let built = match cfg.build() {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    for w in &built.warnings {
        eprintln!("warning: {w}");
    }
    let out_dir = PathBuf::from(&cfg.output.out_dir);
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create output directory: {e}");
        return EXIT_CONFIG;
    }

    let traj = match stepper::run(
        &built.model,
        &built.step,
        &built.scenario.state,
        built.t_end,
        built.scenario.mask,
    ) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: step failure: {e}");
            return EXIT_STEP;
        }
    };

    let csv_name = if cfg.output.csv.is_empty() {
        format!("{}.csv", cfg.scenario.kind)
    } else {
        cfg.output.csv.clone()
    };
    let csv_path = out_dir.join(csv_name);
    if let Err(e) = output::write_csv(&traj.ledger, &csv_path) {
        eprintln!("error: cannot write {}: {e}", csv_path.display());
        return EXIT_CONFIG;
    }
    if cfg.output.vtk_every > 0 {
        for (k, state) in traj.states.iter().enumerate() {
            if k % cfg.output.vtk_every != 0 && k != traj.states.len() - 1 {
                continue;
            }
            let path = out_dir.join(format!("{}_{k:05}.vtk", cfg.scenario.kind));
            let title = format!("{} t={:.6e}", cfg.scenario.kind, state.t);
            if let Err(e) = output::write_vtk(&built.model.grid, state, &title, &path) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_CONFIG;
            }
        }
    }

    let initial_mass = diagnostics::mass_and_positivity(&built.model, &built.scenario.state).0;
    let reports = diagnostics::check_ledger(&built.model, &built.step, initial_mass, &traj.ledger);
    let total_subdiv: u32 = traj.reports.iter().map(|r| r.subdivisions).sum();
    println!(
        "{}: {} steps to t = {:.6e} ({} bisections), ledger written to {}",
        cfg.scenario.kind,
        traj.states.len() - 1,
        traj.final_state().t,
        total_subdiv,
        csv_path.display()
    );
    if !diagnostics::all_pass(&reports) {
        for r in reports.iter().filter(|r| {
            !(r.pass_mass && r.pass_positivity && r.pass_total_energy && r.pass_entropy)
        }) {
            eprintln!(
                "balance violation at t = {:.6e}: mass drift {:.3e}, total-energy slack {:.3e}, \
                 entropy production {:.3e}, min rho {:.3e}, min theta {:.3e}",
                r.t, r.mass_drift_rel, r.slack_total, r.entropy_prod, r.min_rho, r.min_theta
            );
        }
        return EXIT_BALANCE;
    }
    for r in reports.iter().filter(|r| r.mech_finding) {
        println!(
            "finding: mechanical-energy slack {:.3e} below -tolerance at t = {:.6e}",
            r.slack_mech, r.t
        );
    }
    EXIT_OK
}

fn cmd_converge(args: &Args) -> i32 {
    let cfg = match load_config(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if args.levels < 3 {
        eprintln!("error: --levels must be at least 3");
        return EXIT_CONFIG;
    }
    let built = match cfg.build() {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match crate::convergence::convergence_study(
        &built.model,
        &built.step,
        &built.scenario.state,
        built.t_end,
        built.scenario.mask,
        args.levels,
    ) {
        Ok(table) => {
            print!("{}", table.render());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: step failure during study: {e}");
            EXIT_STEP
        }
    }
}
