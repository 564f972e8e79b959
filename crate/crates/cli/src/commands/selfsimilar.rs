use std::f64::consts::PI;

use logspiral::kernel::SpiralParams;
use logspiral::selfsimilar::{
    amplitudes_for, bifurcation_scan, find_roots, prandtl_parameters, solve_general_m, two_dirac_solution,
    NewtonOptions,
};
use serde_json::json;

use super::{header, Context, Failure, Status};
use crate::config::{Key, Kind, Reader, Settings};

pub const ABOUT: &str = "Self-similar sheets: two-branch roots, bifurcation scans and M-branch Newton solves";

pub fn keys() -> Vec<Key> {
    vec![
        Key::new("beta", Kind::Float, None, "spiral pitch for a single solve"),
        Key::new("beta_range", Kind::Text, None, "scan range `lo:hi:count`"),
        Key::new("spacing", Kind::Text, Some("log"), "scan spacing: log or linear"),
        Key::new("scan", Kind::Flag, None, "run a bifurcation scan (default range 0.01:100:41)"),
        Key::new("M", Kind::Int, Some("2"), "number of branches"),
        Key::new("n_seeds", Kind::Int, Some("400"), "grid points of the sign-change search"),
        Key::new("positions", Kind::Text, None, "Newton seed positions for M >= 3 (default j*pi/M)"),
        Key::new("tol", Kind::Float, Some("1e-12"), "Newton residual tolerance"),
        Key::new("max_iter", Kind::Int, Some("100"), "Newton iteration cap"),
    ]
}

fn read_range(r: &mut Reader) -> Option<Vec<f64>> {
    let raw = r.opt_text("beta_range").unwrap_or_else(|| "0.01:100:41".into());
    let spacing = r.text("spacing")?;
    let parts: Vec<&str> = raw.split(':').map(str::trim).collect();
    let parsed = match parts.as_slice() {
        [lo, hi, count] => match (lo.parse::<f64>(), hi.parse::<f64>(), count.parse::<usize>()) {
            (Ok(lo), Ok(hi), Ok(count)) if lo.is_finite() && hi.is_finite() && lo < hi && count >= 2 => {
                Some((lo, hi, count))
            }
            _ => None,
        },
        _ => None,
    };
    let Some((lo, hi, count)) = parsed else {
        r.fail("beta_range", format!("expected `lo:hi:count` with lo < hi and count >= 2, found `{raw}`"));
        return None;
    };
    let betas: Vec<f64> = match spacing.as_str() {
        "log" if lo > 0.0 => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
        }
        "log" => {
            r.fail("beta_range", "log spacing needs lo > 0");
            return None;
        }
        "linear" => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
        other => {
            r.fail("spacing", format!("expected log or linear, found `{other}`"));
            return None;
        }
    };
    if betas.contains(&0.0) {
        r.fail("beta_range", "beta must be nonzero");
        return None;
    }
    Some(betas)
}

fn fmt_opt(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

pub fn run(s: &Settings, ctx: &Context) -> Result<Status, Failure> {
    let mut r = s.reader();
    let scan = r.flag("scan") || r.is_explicit("beta_range");
    let big_m = r.int::<usize>("M");
    let n_seeds = r.int::<usize>("n_seeds");
    let tol = r.positive("tol");
    let max_iter = r.int::<usize>("max_iter");
    if n_seeds.is_some_and(|n| n < 2) {
        r.fail("n_seeds", "must be at least 2");
    }
    if scan {
        if r.is_explicit("beta") {
            r.fail("beta", "give either beta or a scan, not both");
        }
        if big_m.is_some_and(|m| m != 2) {
            r.fail("M", "scans follow the two-branch family; use M = 2");
        }
        let betas = read_range(&mut r);
        r.finish()?;
        return run_scan(s, ctx, &betas.unwrap(), n_seeds.unwrap());
    }
    let params = r.float("beta").and_then(|b| r.check("beta", SpiralParams::new(b, 1)));
    if big_m == Some(0) {
        r.fail("M", "must be at least 1");
    }
    let positions = match (r.opt_text("positions"), big_m) {
        (Some(raw), Some(m)) => {
            let p = r.float_list("positions");
            if let Some(p) = &p {
                if p.len() != m {
                    r.fail("positions", format!("{} positions given for M = {m} (from `{raw}`)", p.len()));
                }
            }
            p
        }
        (None, Some(m)) => Some((0..m).map(|j| j as f64 * PI / m as f64).collect()),
        _ => None,
    };
    r.finish()?;
    let opts = NewtonOptions { tol: tol.unwrap(), max_iter: max_iter.unwrap() };
    run_single(s, ctx, params.unwrap(), big_m.unwrap(), n_seeds.unwrap(), &positions.unwrap(), &opts)
}

fn run_scan(s: &Settings, ctx: &Context, betas: &[f64], n_seeds: usize) -> Result<Status, Failure> {
    let mut run = ctx.open(s)?;
    let scan = bifurcation_scan(betas, n_seeds)?;
    let rows = scan.rows.iter().map(|row| {
        let b = row.branch;
        vec![
            row.beta,
            fmt_opt(b.map(|b| b.d)),
            fmt_opt(b.map(|b| b.a1)),
            fmt_opt(b.map(|b| b.a2)),
            fmt_opt(b.map(|b| b.f)),
            row.n_roots as f64,
        ]
    });
    run.write_csv("branch.csv", &header(&["beta", "d_root", "A1", "A2", "residual", "n_roots"]), rows)?;
    run.write_json(
        "summary.json",
        json!({
            "mode": "scan",
            "betas": betas.len(),
            "beta0_est": scan.beta0_est,
            "beta1_est": scan.beta1_est,
            "rows": scan.rows,
        }),
    )?;
    let status = Status::ok("completed");
    run.finish(&status.outcome, status.code)?;
    Ok(status)
}

fn run_single(
    s: &Settings,
    ctx: &Context,
    params: SpiralParams,
    big_m: usize,
    n_seeds: usize,
    positions: &[f64],
    opts: &NewtonOptions,
) -> Result<Status, Failure> {
    let mut run = ctx.open(s)?;
    let prandtl = prandtl_parameters(params)?;
    let mut solutions = Vec::new();
    let mut failures = Vec::new();
    if big_m == 2 {
        let roots = find_roots(params, 1e-3, PI, n_seeds, true)?;
        let rows: Vec<Vec<f64>> = roots.iter().map(|q| vec![params.beta(), q.d, q.a1, q.a2, q.f]).collect();
        run.write_csv("branch.csv", &header(&["beta", "d_root", "A1", "A2", "residual"]), rows)?;
        for q in &roots {
            match two_dirac_solution(params, q) {
                Ok(sol) => solutions.push(sol),
                Err(e) => failures.push(json!({ "d": q.d, "error": e.to_string() })),
            }
        }
    } else if big_m >= 2 {
        let amps = amplitudes_for(params, positions)?;
        match solve_general_m(params, &amps, positions, opts) {
            Ok(sol) => solutions.push(sol),
            Err(e) => failures.push(json!({ "seed": positions, "error": e.to_string() })),
        }
    }
    for (i, sol) in solutions.iter().enumerate() {
        let rows = sol.positions.iter().zip(&sol.amplitudes).enumerate().map(|(j, (&t, &a))| vec![j as f64, t, a]);
        run.write_csv(&format!("solution_{i}.csv"), &header(&["j", "theta", "A"]), rows)?;
    }
    run.write_json(
        "summary.json",
        json!({
            "mode": "single",
            "beta": params.beta(),
            "M": big_m,
            "prandtl": prandtl,
            "solutions": solutions,
            "failures": failures,
            "beta0_est": null,
            "beta1_est": null,
        }),
    )?;
    let status = if failures.is_empty() { Status::ok("completed") } else { Status::event("newton_failure") };
    run.finish(&status.outcome, status.code)?;
    Ok(status)
}
