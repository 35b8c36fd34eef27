//! Term-by-term comparison of the production residual against an
//! independently coded reference on a 4x4x4 grid. The reference materializes
//! ghost layers into padded arrays (mirror parity filled axis by axis) and
//! evaluates every block with plain textbook loops, while the production
//! assembly folds indices on the fly. With all stabilizers off the two must
//! agree to rounding.

mod common;

use common::{build_model, random_state, ModelSpec};
use thermovisc::grid::Grid;
use thermovisc::state::{State, C_E, C_RHO, C_TH, C_V, N_COMP};
use thermovisc::stepper::{residual, Model, StepConfig};
use thermovisc::tensor::{spin_product, SymTensor3, Tensor3, ThirdOrderTensor, Vec3};
use thermovisc::util::SplitMix64;

/// Array padded with one ghost layer per side; interior cell (i, j, k) lives
/// at (i + 1, j + 1, k + 1).
struct Padded<T> {
    data: Vec<T>,
    n: [usize; 3],
}

impl<T: Copy + Default> Padded<T> {
    fn new(n: [usize; 3]) -> Self {
        Padded {
            data: vec![T::default(); (n[0] + 2) * (n[1] + 2) * (n[2] + 2)],
            n,
        }
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + (self.n[0] + 2) * (j + (self.n[1] + 2) * k)
    }

    fn get(&self, i: i64, j: i64, k: i64) -> T {
        self.data[self.idx((i + 1) as usize, (j + 1) as usize, (k + 1) as usize)]
    }

    fn set(&mut self, i: i64, j: i64, k: i64, v: T) {
        let id = self.idx((i + 1) as usize, (j + 1) as usize, (k + 1) as usize);
        self.data[id] = v;
    }
}

/// Fills ghost layers axis by axis; `flip(axis, value)` applies the mirror
/// parity for a reflection across that axis.
fn fill_ghosts<T: Copy + Default>(p: &mut Padded<T>, flip: impl Fn(usize, T) -> T) {
    let n = p.n;
    let range = |len: usize| -1i64..=(len as i64);
    for k in 0..n[2] as i64 {
        for j in 0..n[1] as i64 {
            p.set(-1, j, k, flip(0, p.get(0, j, k)));
            p.set(n[0] as i64, j, k, flip(0, p.get(n[0] as i64 - 1, j, k)));
        }
    }
    for k in 0..n[2] as i64 {
        for i in range(n[0]) {
            p.set(i, -1, k, flip(1, p.get(i, 0, k)));
            p.set(i, n[1] as i64, k, flip(1, p.get(i, n[1] as i64 - 1, k)));
        }
    }
    for j in range(n[1]) {
        for i in range(n[0]) {
            p.set(i, j, -1, flip(2, p.get(i, j, 0)));
            p.set(i, j, n[2] as i64, flip(2, p.get(i, j, n[2] as i64 - 1)));
        }
    }
}

fn pad_scalar(grid: &Grid, f: &[f64]) -> Padded<f64> {
    let mut p = Padded::new(grid.n);
    for c in 0..grid.n_cells() {
        let ijk = grid.coords(c);
        p.set(ijk[0] as i64, ijk[1] as i64, ijk[2] as i64, f[c]);
    }
    fill_ghosts(&mut p, |_, v| v);
    p
}

fn pad_vec(grid: &Grid, f: &[Vec3]) -> Padded<Vec3> {
    let mut p = Padded::new(grid.n);
    for c in 0..grid.n_cells() {
        let ijk = grid.coords(c);
        p.set(ijk[0] as i64, ijk[1] as i64, ijk[2] as i64, f[c]);
    }
    fill_ghosts(&mut p, |axis, mut v| {
        v[axis] = -v[axis];
        v
    });
    p
}

fn pad_sym(grid: &Grid, f: &[SymTensor3]) -> Padded<SymTensor3> {
    let mut p = Padded::new(grid.n);
    for c in 0..grid.n_cells() {
        let ijk = grid.coords(c);
        p.set(ijk[0] as i64, ijk[1] as i64, ijk[2] as i64, f[c]);
    }
    fill_ghosts(&mut p, |axis, t| {
        let mut full = t.to_full().m;
        for (i, row) in full.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let mut s = 1.0;
                if i == axis {
                    s = -s;
                }
                if j == axis {
                    s = -s;
                }
                *v *= s;
            }
        }
        Tensor3::new(full).sym_part()
    });
    p
}

/// Reference residual, one block at a time.
fn reference_residual(model: &Model, prev: &State, cur: &State, tau: f64) -> Vec<f64> {
    let grid = &model.grid;
    let n = grid.n;
    assert!(grid.active(0) && grid.active(1) && grid.active(2));
    let h = grid.h;
    let mat = &model.material;
    let dis = &model.dissipation;

    let rho = pad_scalar(grid, &cur.rho.data);
    let theta = pad_scalar(grid, &cur.theta.data);
    let vel = pad_vec(grid, &cur.v.data);
    let strain = pad_sym(grid, &cur.e.data);

    // momentum field p = rho v, padded with vector parity
    let p_mom: Vec<Vec3> = (0..grid.n_cells()).map(|c| cur.momentum(c)).collect();
    let p_pad = pad_vec(grid, &p_mom);

    // pointwise velocity gradient, strain rate, spin, second gradient
    let each = |f: &mut dyn FnMut(i64, i64, i64)| {
        for k in 0..n[2] as i64 {
            for j in 0..n[1] as i64 {
                for i in 0..n[0] as i64 {
                    f(i, j, k);
                }
            }
        }
    };

    let cell = |i: i64, j: i64, k: i64| -> usize {
        grid.idx(i as usize, j as usize, k as usize)
    };

    let mut grad_v = vec![Tensor3::ZERO; grid.n_cells()];
    let mut h2 = vec![ThirdOrderTensor::ZERO; grid.n_cells()];
    each(&mut |i, j, k| {
        let c = cell(i, j, k);
        let mut m = [[0.0; 3]; 3];
        let offs = [[1i64, 0, 0], [0, 1, 0], [0, 0, 1]];
        for (a, off) in offs.iter().enumerate() {
            let vp = vel.get(i + off[0], j + off[1], k + off[2]);
            let vm = vel.get(i - off[0], j - off[1], k - off[2]);
            for comp in 0..3 {
                m[comp][a] = (vp[comp] - vm[comp]) / (2.0 * h[a]);
            }
        }
        grad_v[c] = Tensor3::new(m);
        let mut t = ThirdOrderTensor::ZERO;
        for a in 0..3 {
            let off = offs[a];
            let vp = vel.get(i + off[0], j + off[1], k + off[2]);
            let v0 = vel.get(i, j, k);
            let vm = vel.get(i - off[0], j - off[1], k - off[2]);
            for comp in 0..3 {
                t.set(comp, a, a, (vp[comp] - 2.0 * v0[comp] + vm[comp]) / (h[a] * h[a]));
            }
        }
        for a in 0..3 {
            for b in (a + 1)..3 {
                let mut oa = [0i64; 3];
                oa[a] = 1;
                let mut ob = [0i64; 3];
                ob[b] = 1;
                let pp = vel.get(i + oa[0] + ob[0], j + oa[1] + ob[1], k + oa[2] + ob[2]);
                let pm = vel.get(i + oa[0] - ob[0], j + oa[1] - ob[1], k + oa[2] - ob[2]);
                let mp = vel.get(i - oa[0] + ob[0], j - oa[1] + ob[1], k - oa[2] + ob[2]);
                let mm = vel.get(i - oa[0] - ob[0], j - oa[1] - ob[1], k - oa[2] - ob[2]);
                for comp in 0..3 {
                    let val = (pp[comp] - pm[comp] - mp[comp] + mm[comp]) / (4.0 * h[a] * h[b]);
                    t.set(comp, a, b, val);
                    t.set(comp, b, a, val);
                }
            }
        }
        h2[c] = t;
    });

    // total symmetric stress, padded
    let stress: Vec<SymTensor3> = (0..grid.n_cells())
        .map(|c| {
            mat.stress_unchecked(&cur.e[c], cur.theta[c])
                + dis.stokes_apply(&grad_v[c].sym_part())
        })
        .collect();
    let stress_pad = pad_sym(grid, &stress);

    // second-grade force: accumulate into a padded array, then fold ghosts
    // back with vector parity
    let mu = dis.hyper_mu;
    let p_exp = dis.hyper_p;
    let mut hyper_acc: Padded<Vec3> = Padded::new(grid.n);
    each(&mut |i, j, k| {
        let c = cell(i, j, k);
        let n2 = h2[c].norm2();
        if n2 == 0.0 {
            return;
        }
        let scale = mu * n2.powf(0.5 * p_exp - 1.0);
        // adjoint of the diagonal stencils
        for a in 0..3 {
            let mut off = [0i64; 3];
            off[a] = 1;
            let w = 1.0 / (h[a] * h[a]);
            for comp in 0..3 {
                let t = scale * h2[c].get(comp, a, a);
                let mut add = |ii: i64, jj: i64, kk: i64, coef: f64| {
                    let mut v = hyper_acc.get(ii, jj, kk);
                    v[comp] += coef * t;
                    hyper_acc.set(ii, jj, kk, v);
                };
                add(i + off[0], j + off[1], k + off[2], w);
                add(i, j, k, -2.0 * w);
                add(i - off[0], j - off[1], k - off[2], w);
            }
        }
        for a in 0..3 {
            for b in (a + 1)..3 {
                let w = 1.0 / (4.0 * h[a] * h[b]);
                let mut oa = [0i64; 3];
                oa[a] = 1;
                let mut ob = [0i64; 3];
                ob[b] = 1;
                for comp in 0..3 {
                    let t = scale * (h2[c].get(comp, a, b) + h2[c].get(comp, b, a));
                    let mut add = |ii: i64, jj: i64, kk: i64, coef: f64| {
                        let mut v = hyper_acc.get(ii, jj, kk);
                        v[comp] += coef * t;
                        hyper_acc.set(ii, jj, kk, v);
                    };
                    add(i + oa[0] + ob[0], j + oa[1] + ob[1], k + oa[2] + ob[2], w);
                    add(i + oa[0] - ob[0], j + oa[1] - ob[1], k + oa[2] - ob[2], -w);
                    add(i - oa[0] + ob[0], j - oa[1] + ob[1], k - oa[2] + ob[2], -w);
                    add(i - oa[0] - ob[0], j - oa[1] - ob[1], k - oa[2] - ob[2], w);
                }
            }
        }
    });
    // fold ghost accumulations back into the interior
    let mut hyper = vec![[0.0f64; 3]; grid.n_cells()];
    for gk in -1..=(n[2] as i64) {
        for gj in -1..=(n[1] as i64) {
            for gi in -1..=(n[0] as i64) {
                let v = hyper_acc.get(gi, gj, gk);
                if v == [0.0; 3] {
                    continue;
                }
                let mut ti = gi;
                let mut tj = gj;
                let mut tk = gk;
                let mut sign = [1.0f64; 3];
                if ti < 0 {
                    ti = 0;
                    sign[0] = -sign[0];
                }
                if ti >= n[0] as i64 {
                    ti = n[0] as i64 - 1;
                    sign[0] = -sign[0];
                }
                if tj < 0 {
                    tj = 0;
                    sign[1] = -sign[1];
                }
                if tj >= n[1] as i64 {
                    tj = n[1] as i64 - 1;
                    sign[1] = -sign[1];
                }
                if tk < 0 {
                    tk = 0;
                    sign[2] = -sign[2];
                }
                if tk >= n[2] as i64 {
                    tk = n[2] as i64 - 1;
                    sign[2] = -sign[2];
                }
                let c = cell(ti, tj, tk);
                for comp in 0..3 {
                    hyper[c][comp] += sign[comp] * v[comp];
                }
            }
        }
    }

    let mut out = vec![0.0; grid.n_cells() * N_COMP];
    each(&mut |i, j, k| {
        let c = cell(i, j, k);
        let inv_tau = 1.0 / tau;
        let at_wall = |a: usize, side: i64| -> bool {
            let idx = [i, j, k][a];
            (side < 0 && idx == 0) || (side > 0 && idx == n[a] as i64 - 1)
        };
        let offs = [[1i64, 0, 0], [0, 1, 0], [0, 0, 1]];

        // mass
        let mut div_p = 0.0;
        for a in 0..3 {
            for side in [1i64, -1] {
                if at_wall(a, side) {
                    continue;
                }
                let o = offs[a];
                let pn = p_pad.get(i + side * o[0], j + side * o[1], k + side * o[2]);
                let flux = 0.5 * (p_mom[c][a] + pn[a]);
                div_p += side as f64 * flux / h[a];
            }
        }
        out[c * N_COMP + C_RHO] = (cur.rho[c] - prev.rho[c]) * inv_tau + div_p;

        // momentum
        for comp in 0..3 {
            let mut div_s = 0.0;
            let mut adv = 0.0;
            for a in 0..3 {
                let o = offs[a];
                for side in [1i64, -1] {
                    let sn = stress_pad.get(i + side * o[0], j + side * o[1], k + side * o[2]);
                    let face = 0.5 * (stress[c].get(comp, a) + sn.get(comp, a));
                    div_s += side as f64 * face / h[a];
                    if !at_wall(a, side) {
                        let rn = rho.get(i + side * o[0], j + side * o[1], k + side * o[2]);
                        let vn = vel.get(i + side * o[0], j + side * o[1], k + side * o[2]);
                        let m_flux = 0.5 * (cur.rho[c] * cur.v[c][a] + rn * vn[a]);
                        let vbar = 0.5 * (cur.v[c][comp] + vn[comp]);
                        adv += side as f64 * m_flux * vbar / h[a];
                    }
                }
            }
            out[c * N_COMP + C_V + comp] = (cur.rho[c] * cur.v[c][comp]
                - prev.rho[c] * prev.v[c][comp])
                * inv_tau
                - div_s
                + adv
                + hyper[c][comp]
                - cur.rho[c] * model.gravity[comp];
        }

        // strain
        let eps = grad_v[c].sym_part();
        let w_spin = grad_v[c].skw_part();
        let spin = spin_product(&w_spin, &cur.e[c]);
        let pi = dis
            .creep_rate_unchecked(mat, &cur.e[c], cur.theta[c])
            .to_sym();
        let mut adv_e = SymTensor3::ZERO;
        for a in 0..3 {
            let o = offs[a];
            let ep = strain.get(i + o[0], j + o[1], k + o[2]);
            let em = strain.get(i - o[0], j - o[1], k - o[2]);
            for s in 0..6 {
                adv_e.c[s] += cur.v[c][a] * (ep.c[s] - em.c[s]) / (2.0 * h[a]);
            }
        }
        for s in 0..6 {
            out[c * N_COMP + C_E + s] = (cur.e[c].c[s] - prev.e[c].c[s]) * inv_tau - eps.c[s]
                + pi.c[s]
                + adv_e.c[s]
                + spin.c[s];
        }

        // heat
        let u_now = mat.thermal_energy_unchecked(cur.theta[c]);
        let u_prev = mat.thermal_energy_unchecked(prev.theta[c]);
        let mut kappa_div = 0.0;
        let mut robin = 0.0;
        let mut u_adv = 0.0;
        for a in 0..3 {
            let o = offs[a];
            for side in [1i64, -1] {
                if at_wall(a, side) {
                    robin += (model.heat.external_flux
                        - model.heat.boundary_outflux_unchecked(cur.theta[c]))
                        / h[a];
                    continue;
                }
                let tn = theta.get(i + side * o[0], j + side * o[1], k + side * o[2]);
                let kappa = model.heat.conductivity_unchecked(0.5 * (cur.theta[c] + tn));
                kappa_div += kappa * (tn - cur.theta[c]) / (h[a] * h[a]);
                let vn = vel.get(i + side * o[0], j + side * o[1], k + side * o[2]);
                let un = mat.thermal_energy_unchecked(tn);
                u_adv += side as f64 * 0.25 * (u_now + un) * (cur.v[c][a] + vn[a]) / h[a];
            }
        }
        let div_v = grad_v[c].trace();
        let xi = dis
            .dissipation_rate(
                cur.theta[c],
                &eps,
                &dis.creep_rate_unchecked(mat, &cur.e[c], cur.theta[c]),
                &h2[c],
            )
            .unwrap();
        let adiab = mat.adiabatic_coeff(&cur.e[c], cur.theta[c]) * div_v;
        out[c * N_COMP + C_TH] = (u_now - u_prev) * inv_tau - kappa_div - robin + u_adv
            - xi
            - adiab
            - model.heat.bulk_source;
    });
    out
}

#[test]
fn production_residual_matches_reference_term_by_term() {
    let grid = Grid::new([4, 4, 4], [1.0, 1.3, 0.8]).unwrap();
    let mut rng = SplitMix64::new(41);
    for (round, alpha_v) in [(0usize, 0.5f64), (1, 0.0)] {
        let model = build_model(
            grid.clone(),
            &ModelSpec {
                alpha_v,
                gravity: [0.02, -0.1, 0.01],
                heat: thermovisc::material::HeatModel {
                    h_linear: 0.3,
                    h_quartic: 0.05,
                    external_flux: 0.4,
                    bulk_source: 0.1,
                    ..thermovisc::material::HeatModel::insulated(0.5, 1.5)
                },
                ..ModelSpec::default()
            },
        );
        let prev = random_state(&model.grid, &mut rng, 0.2, 0.2);
        let cur = random_state(&model.grid, &mut rng, 0.2, 0.2);
        let tau = 0.05;
        let cfg = StepConfig::default();
        let got = residual::residual(&model, &cfg, &prev, &cur, tau).unwrap();
        let want = reference_residual(&model, &prev, &cur, tau);
        let blocks: [(&str, Vec<usize>); 4] = [
            ("mass", vec![C_RHO]),
            ("momentum", vec![C_V, C_V + 1, C_V + 2]),
            ("strain", (0..6).map(|m| C_E + m).collect()),
            ("heat", vec![C_TH]),
        ];
        for (name, comps) in &blocks {
            let mut max_err = 0.0f64;
            let mut max_val = 0.0f64;
            for c in 0..model.grid.n_cells() {
                for &comp in comps {
                    let a = got[c * N_COMP + comp];
                    let b = want[c * N_COMP + comp];
                    max_err = max_err.max((a - b).abs());
                    max_val = max_val.max(b.abs());
                }
            }
            assert!(
                max_err <= 1e-12 * max_val.max(1.0),
                "round {round} block {name}: err {max_err:.3e} scale {max_val:.3e}"
            );
        }
    }
}
