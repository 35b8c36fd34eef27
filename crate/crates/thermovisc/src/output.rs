//! CSV ledger output and legacy-VTK state snapshots.
//!
//! Both writers format floats with a fixed 16-digit scientific notation, so
//! repeated runs of a deterministic trajectory produce byte-identical files.

use crate::diagnostics::LedgerRow;
use crate::grid::Grid;
use crate::state::State;
use std::io::Write;
use std::path::Path;

pub const CSV_HEADER: &str = "t,mass,E_kin,E_stored,E_therm,diss,grav_power,adiab_power,\
bnd_in,bnd_out,entropy,entropy_prod,min_rho,min_theta,slack_mech,slack_total,\
mom_l2,e_l2,e_max,theta_l1a,eps_v_l2t,grad2_v_lpt,grad_th_lmut,grad_rho_lr,grad_e_ls";

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_text(ledger: &[LedgerRow]) -> String {
    let mut out = String::with_capacity(64 + ledger.len() * 512);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in ledger {
        let cols = [
            row.t,
            row.mass,
            row.e_kin,
            row.e_stored,
            row.e_therm,
            row.diss,
            row.grav_power,
            row.adiab_power,
            row.bnd_in,
            row.bnd_out,
            row.entropy,
            row.entropy_prod,
            row.min_rho,
            row.min_theta,
            row.slack_mech,
            row.slack_total,
            row.mom_l2,
            row.e_l2,
            row.e_max,
            row.theta_l1a,
            row.eps_v_l2t,
            row.grad2_v_lpt,
            row.grad_th_lmut,
            row.grad_rho_lr,
            row.grad_e_ls,
        ];
        let line: Vec<String> = cols.iter().map(|&v| fmt(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(ledger: &[LedgerRow], path: &Path) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(csv_text(ledger).as_bytes())
}

/// Legacy ASCII STRUCTURED_POINTS snapshot with point data sampled at cell
/// centers: scalar `rho`, vector `v`, scalar `theta`, and the six stored
/// strain components as the field array `E` (order 11, 22, 33, 23, 13, 12).
pub fn vtk_text(grid: &Grid, state: &State, title: &str) -> String {
    let n = grid.n_cells();
    let mut out = String::with_capacity(128 + n * 160);
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str(title);
    out.push('\n');
    out.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
    out.push_str(&format!(
        "DIMENSIONS {} {} {}\n",
        grid.n[0], grid.n[1], grid.n[2]
    ));
    out.push_str(&format!(
        "ORIGIN {} {} {}\n",
        fmt(0.5 * grid.h[0]),
        fmt(0.5 * grid.h[1]),
        fmt(0.5 * grid.h[2])
    ));
    out.push_str(&format!(
        "SPACING {} {} {}\n",
        fmt(grid.h[0]),
        fmt(grid.h[1]),
        fmt(grid.h[2])
    ));
    out.push_str(&format!("POINT_DATA {n}\n"));

    out.push_str("SCALARS rho double 1\nLOOKUP_TABLE default\n");
    for c in 0..n {
        out.push_str(&fmt(state.rho[c]));
        out.push('\n');
    }
    out.push_str("VECTORS v double\n");
    for c in 0..n {
        let v = state.v[c];
        out.push_str(&format!("{} {} {}\n", fmt(v[0]), fmt(v[1]), fmt(v[2])));
    }
    out.push_str("SCALARS theta double 1\nLOOKUP_TABLE default\n");
    for c in 0..n {
        out.push_str(&fmt(state.theta[c]));
        out.push('\n');
    }
    out.push_str("FIELD strain 1\n");
    out.push_str(&format!("E 6 {n} double\n"));
    for c in 0..n {
        let e = &state.e[c].c;
        let cols: Vec<String> = e.iter().map(|&v| fmt(v)).collect();
        out.push_str(&cols.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_vtk(grid: &Grid, state: &State, title: &str, path: &Path) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(vtk_text(grid, state, title).as_bytes())
}
