use std::path::PathBuf;

use rayon::prelude::*;
use resonance_core::charts::{cartesian_to_delaunay, ChartPoint, DelaunayPoint};
use resonance_core::equilibria::{self, CrossCheck, SweepRow};
use resonance_core::invariants::{self, ThriceReducedPoint};
use resonance_core::model::{self, CartesianState};
use resonance_core::normalform;
use resonance_core::verify::{self, VerifyOptions, CROSS_TOL};
use serde::Serialize;

use crate::config::{Config, Mode};
use crate::output::{num, text, write_json, Csv};

pub enum Failure {
    /// Exit code 2.
    Config(String),
    /// Exit code 1.
    Run(String),
}

pub type Outcome = Result<(), Failure>;

fn cfg_err<E: ToString>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

fn run_err<E: ToString>(e: E) -> Failure {
    Failure::Run(e.to_string())
}

pub struct Ctx {
    pub cfg: Config,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn pool(&self) -> Result<rayon::ThreadPool, Failure> {
        rayon::ThreadPoolBuilder::new().num_threads(self.workers).build().map_err(run_err)
    }

    fn gamma(&self) -> f64 {
        self.cfg.model.as_ref().map_or(0.5, |m| m.gamma)
    }
}

fn to_cartesian(p: &ChartPoint, gamma: f64) -> Result<CartesianState, Failure> {
    let s = p.to_cartesian(gamma).map_err(|e| cfg_err(format!("initial state: {e}")))?;
    if !s.is_finite() {
        return Err(cfg_err("initial state is not finite"));
    }
    Ok(s)
}

pub fn verify(ctx: &Ctx) -> Outcome {
    let sec = ctx.cfg.verify.as_ref().map(|v| v.validate()).transpose().map_err(cfg_err)?;
    let (criteria, fault) = sec.unwrap_or_default();
    let report =
        verify::run(&VerifyOptions { seed: ctx.seed, workers: ctx.workers, criteria, fault }).map_err(run_err)?;
    write_json(&ctx.path("verify_report.json"), &report).map_err(run_err)?;
    for s in &report.suites {
        println!(
            "{} {:<28} max={:.3e} tol={:.0e}",
            if s.passed { "PASS" } else { "FAIL" },
            s.name,
            s.max_residual,
            s.tolerance
        );
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Run(format!("failed suites: {}", report.failed_suites().join(", "))))
    }
}

pub fn integrate(ctx: &Ctx) -> Outcome {
    let sec = ctx.cfg.integrate.as_ref().ok_or_else(|| cfg_err("missing [integrate] section"))?;
    let times = sec.times().map_err(cfg_err)?;
    let p = ctx.cfg.model().map_err(cfg_err)?;
    if sec.surface.is_some() && sec.mode != Mode::Reduced {
        return Err(cfg_err("`surface` start is only valid in reduced mode"));
    }
    match sec.mode {
        Mode::Full => {
            let init = sec.initial.as_ref().ok_or_else(|| cfg_err("missing `initial` state"))?;
            if matches!(init, ChartPoint::Delaunay(_)) {
                p.validate_for_charts().map_err(cfg_err)?;
            }
            let s0 = to_cartesian(init, p.gamma)?;
            let traj = model::integrate_at(&s0, &p, &times, sec.tol).map_err(run_err)?;
            let mut csv = Csv::new(&["t", "q1", "q2", "q3", "q4", "Q1", "Q2", "Q3", "Q4", "H", "Xi", "L1"]);
            for pt in &traj.points {
                let mut row = vec![pt.t];
                row.extend(pt.state.to_array());
                row.extend([pt.h, pt.xi, pt.l1]);
                csv.nums(&row);
            }
            csv.write(&ctx.path("trajectory.csv")).map_err(run_err)?;
            println!(
                "relative H drift {:.3e}, Xi drift {:.3e}, L1 drift {:.3e}",
                traj.max_rel_energy_drift(),
                traj.max_xi_drift(),
                traj.max_l1_drift()
            );
        }
        Mode::Reduced => {
            let pt0 = match (&sec.initial, &sec.surface) {
                (Some(_), Some(_)) => return Err(cfg_err("give either `initial` or `surface`, not both")),
                (None, None) => return Err(cfg_err("missing `initial` or `surface` start")),
                (Some(init), None) => invariants::thrice_reduced_point(&to_cartesian(init, p.gamma)?),
                (None, Some(s)) => {
                    s.integrals().validate().map_err(cfg_err)?;
                    ThriceReducedPoint::on_surface(s.integrals(), s.k, s.angle).map_err(cfg_err)?
                }
            };
            let traj = invariants::reduced_flow_at(&pt0, p.beta, &times, sec.tol).map_err(run_err)?;
            let mut csv = Csv::new(&["t", "K", "N", "S", "H3", "casimir_residual"]);
            for s in &traj.samples {
                csv.nums(&[s.t, s.K, s.N, s.S, s.h3, s.casimir]);
            }
            csv.write(&ctx.path("reduced.csv")).map_err(run_err)?;
            println!(
                "Casimir drift {:.3e}, H3 drift {:.3e}, K drift {:.3e}",
                traj.max_casimir_drift(),
                traj.max_h3_drift(),
                traj.max_k_drift()
            );
        }
        Mode::Normalized => {
            p.validate_for_charts().map_err(cfg_err)?;
            if !(1..=2).contains(&sec.order) {
                return Err(cfg_err(format!("order must be 1 or 2, got {}", sec.order)));
            }
            let dp0 = match sec.initial.as_ref().ok_or_else(|| cfg_err("missing `initial` state"))? {
                ChartPoint::Delaunay(d) => {
                    to_cartesian(&ChartPoint::Delaunay(*d), p.gamma)?;
                    *d
                }
                other => cartesian_to_delaunay(&to_cartesian(other, p.gamma)?, p.gamma)
                    .map_err(|e| cfg_err(format!("initial state: {e}")))?,
            };
            let traj = normalform::integrate_normalized(&dp0, &p, sec.order, &times, sec.tol).map_err(run_err)?;
            let mut csv = Csv::new(&["t", "ell", "g", "u1", "u3", "L", "G", "U1", "U3"]);
            for (t, d) in &traj {
                csv.nums(&[*t, d.ell, d.g, d.u1, d.u3, d.L, d.G, d.U1, d.U3]);
            }
            csv.write(&ctx.path("normalized.csv")).map_err(run_err)?;
            if sec.compare {
                compare_slow_flow(ctx, &dp0, &p, sec.order, sec.checks, sec.tol)?;
            }
        }
    }
    Ok(())
}

fn compare_slow_flow(
    ctx: &Ctx,
    dp0: &DelaunayPoint,
    p: &model::ModelParams,
    order: u8,
    checks: usize,
    tol: f64,
) -> Outcome {
    if !(p.epsilon > 0.0) {
        return Err(cfg_err("compare needs epsilon > 0"));
    }
    let cmp = normalform::slow_flow_comparison(dp0, p, order, checks, tol).map_err(run_err)?;
    let mut csv = Csv::new(&["s", "g_direct", "G_direct", "g_normal", "G_normal"]);
    for s in &cmp.samples {
        csv.nums(&[s.s, s.g_direct, s.G_direct, s.g_normal, s.G_normal]);
    }
    csv.write(&ctx.path("slow_flow.csv")).map_err(run_err)?;
    println!("slow-flow max error {:.3e} at epsilon {:.3e}", cmp.max_error, cmp.epsilon);
    Ok(())
}

#[derive(Serialize)]
struct Reduced<'a> {
    input: &'a ChartPoint,
    cartesian: ChartPoint,
    reduced: ThriceReducedPoint,
}

pub fn reduce(ctx: &Ctx) -> Outcome {
    let sec = ctx.cfg.reduce.as_ref().ok_or_else(|| cfg_err("missing [reduce] section"))?;
    if sec.states.is_empty() {
        return Err(cfg_err("[reduce] needs at least one state"));
    }
    if sec.surface_points < 2 {
        return Err(cfg_err("surface_points must be at least 2"));
    }
    let gamma = ctx.gamma();
    let mut items = Vec::with_capacity(sec.states.len());
    for (i, st) in sec.states.iter().enumerate() {
        let s = to_cartesian(st, gamma).map_err(|f| match f {
            Failure::Config(m) | Failure::Run(m) => cfg_err(format!("state {i}: {m}")),
        })?;
        let pt = invariants::thrice_reduced_point(&s);
        pt.iv.validate().map_err(|e| cfg_err(format!("state {i}: {e}")))?;
        items.push(Reduced { input: st, cartesian: ChartPoint::Cartesian(s), reduced: pt });
    }
    let mut csv = Csv::new(&["index", "n", "xi", "l", "M", "N", "Z", "S", "K", "casimir_residual"]);
    for (i, it) in items.iter().enumerate() {
        let r = &it.reduced;
        let mut row = vec![i.to_string()];
        row.extend([r.iv.n, r.iv.xi, r.iv.l, r.M, r.N, r.Z, r.S, r.K, r.casimir()].map(num));
        csv.row(row);
        let mut surf = Csv::new(&["K", "sqrt_f_over_2"]);
        for (k, h) in invariants::surface_profile(&r.iv, sec.surface_points).map_err(run_err)? {
            surf.nums(&[k, h]);
        }
        surf.write(&ctx.path(&format!("surface_{i}.csv"))).map_err(run_err)?;
    }
    csv.write(&ctx.path("reduce.csv")).map_err(run_err)?;
    write_json(&ctx.path("reduce.json"), &items).map_err(run_err)
}

pub fn nf_table(ctx: &Ctx) -> Outcome {
    let sec = ctx.cfg.nf_table.as_ref().ok_or_else(|| cfg_err("missing [nf_table] section"))?;
    if !(sec.gamma > 0.0 && sec.gamma.is_finite()) {
        return Err(cfg_err(format!("gamma must be > 0, got {}", sec.gamma)));
    }
    let grids =
        [("beta", &sec.beta), ("L", &sec.L), ("G", &sec.G), ("U1", &sec.U1), ("U3", &sec.U3)].map(|(n, g)| g.values(n));
    let [b, l, g, u1, u3] = match grids {
        [Ok(a), Ok(b), Ok(c), Ok(d), Ok(e)] => [a, b, c, d, e],
        other => return Err(cfg_err(other.into_iter().find_map(|r| r.err()).unwrap())),
    };
    let mut points = Vec::with_capacity(b.len() * l.len() * g.len() * u1.len() * u3.len());
    for &b in &b {
        for &l in &l {
            for &g in &g {
                for &u1 in &u1 {
                    for &u3 in &u3 {
                        points.push([b, l, g, u1, u3]);
                    }
                }
            }
        }
    }
    let gamma = sec.gamma;
    let rows: Vec<Option<Vec<f64>>> = ctx.pool()?.install(|| {
        points
            .par_iter()
            .map(|&[b, l, g, u1, u3]| {
                let c1 = normalform::order1_coeffs(l, g, u1, u3, gamma, b).ok()?;
                let c2 = normalform::order2_coeffs(l, g, u1, u3, gamma, b).ok()?;
                let mut row = vec![b, l, g, u1, u3, c1.C01, c1.C11, c1.C21];
                row.extend(c2.as_array());
                Some(row)
            })
            .collect()
    });
    let mut csv = Csv::new(&["beta", "L", "G", "U1", "U3", "C01", "C11", "C21", "C02", "C12", "C22", "C32", "C42"]);
    let mut written = 0;
    for r in rows.iter().flatten() {
        csv.nums(r);
        written += 1;
    }
    csv.write(&ctx.path("nf_table.csv")).map_err(run_err)?;
    println!("{written} of {} grid points inside the Delaunay domain", points.len());
    if written == 0 {
        return Err(Failure::Run("no grid point satisfies |U1|, |U3| <= G <= L".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct Detail<'a> {
    #[serde(flatten)]
    row: &'a SweepRow,
    cross: Option<CrossCheck>,
    cross_error: Option<String>,
}

pub fn equilibria(ctx: &Ctx) -> Outcome {
    let sec = ctx.cfg.equilibria.as_ref().ok_or_else(|| cfg_err("missing [equilibria] section"))?;
    let alphas = sec.alpha.values("alpha").map_err(cfg_err)?;
    let ws = sec.w.values("w").map_err(cfg_err)?;
    let zs = sec.z.values("z").map_err(cfg_err)?;
    let rows = equilibria::sweep(&alphas, &ws, &zs, ctx.workers).map_err(cfg_err)?;
    let checks: Vec<Result<Option<CrossCheck>, String>> = ctx.pool()?.install(|| {
        rows.par_iter()
            .map(|r| match &r.record {
                Some(rec) if r.alpha >= -1.0 => {
                    equilibria::cross_validate(rec, (1.0 + r.alpha).sqrt()).map(Some).map_err(|e| e.to_string())
                }
                _ => Ok(None),
            })
            .collect()
    });

    let mut csv = Csv::new(&["alpha", "w", "z", "kind", "eta", "g", "residual", "flags"]);
    for (r, c) in rows.iter().zip(&checks) {
        let mut flags: Vec<String> = r.record.iter().flat_map(|rec| rec.flags.iter().cloned()).collect();
        flags.extend(r.flags.iter().cloned());
        match c {
            Ok(Some(cc)) if !(cc.residual <= CROSS_TOL) => flags.push("cross_mismatch".into()),
            Err(_) => flags.push("cross_error".into()),
            _ => {}
        }
        let mut fields = vec![num(r.alpha), num(r.w), num(r.z)];
        match &r.record {
            Some(rec) => fields.extend([rec.kind.as_str().to_string(), num(rec.eta), num(rec.g), num(rec.residual)]),
            None => fields.extend(std::iter::repeat_n(String::new(), 4)),
        }
        fields.push(text(&flags.join(";")));
        csv.row(fields);
    }
    csv.write(&ctx.path("equilibria.csv")).map_err(run_err)?;

    if sec.json {
        let detail: Vec<Detail> = rows
            .iter()
            .zip(checks)
            .map(|(row, c)| {
                let (cross, cross_error) = match c {
                    Ok(c) => (c, None),
                    Err(e) => (None, Some(e)),
                };
                Detail { row, cross, cross_error }
            })
            .collect();
        write_json(&ctx.path("equilibria.json"), &detail).map_err(run_err)?;
    }

    let records = rows.iter().filter(|r| r.record.is_some()).count();
    let cells: Vec<&SweepRow> = rows.iter().filter(|r| r.index.1.is_some()).collect();
    let errored = cells.iter().filter(|r| r.flags.iter().any(|f| f.starts_with("error"))).count();
    println!("{} rows, {records} equilibria, {errored} cell errors", rows.len());
    if !cells.is_empty() && errored == cells.len() {
        return Err(Failure::Run("every grid cell failed".into()));
    }
    Ok(())
}
