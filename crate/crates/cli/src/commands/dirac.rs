use logspiral::dirac::{integrate, DiracOptions};
use serde_json::json;

use super::{read_params, Context, Failure, Status, BETA, M};
use crate::config::{Key, Kind, Settings};
use crate::ic::{random_atoms, read_atoms};

pub const ABOUT: &str = "Integrate a finite logarithmic vortex sheet (Dirac atoms)";

pub fn keys() -> Vec<Key> {
    vec![
        BETA,
        M,
        Key::new("atoms", Kind::Text, None, "atoms as `I:theta,I:theta,...`"),
        Key::new("random_atoms", Kind::Int, None, "draw this many atoms from the seed instead of --atoms"),
        Key::new("t_end", Kind::Float, Some("1"), "final time"),
        Key::new("rtol", Kind::Float, Some("1e-10"), "relative tolerance of the integrator"),
        Key::new("atol", Kind::Float, Some("1e-12"), "absolute tolerance of the integrator"),
        Key::new("gap_tol", Kind::Float, Some("1e-6"), "collision threshold on the smallest gap, radians"),
    ]
}

pub fn run(s: &Settings, ctx: &Context) -> Result<Status, Failure> {
    let mut r = s.reader();
    let params = read_params(&mut r);
    let cfg = match (r.is_explicit("atoms"), r.is_explicit("random_atoms")) {
        (true, true) => {
            r.fail("random_atoms", "give either atoms or random_atoms, not both");
            None
        }
        (false, true) => {
            let count = r.int::<usize>("random_atoms");
            if count == Some(0) {
                r.fail("random_atoms", "must be at least 1");
            }
            match (params, count) {
                (Some(p), Some(c)) if c > 0 => r.check("random_atoms", random_atoms(p, c, ctx.seed)),
                _ => None,
            }
        }
        _ => read_atoms(&mut r, "atoms", params),
    };
    let t_end = r.positive("t_end");
    let (rtol, atol, gap_tol) = (r.positive("rtol"), r.positive("atol"), r.positive("gap_tol"));
    let opts = match (rtol, atol, gap_tol) {
        (Some(rtol), Some(atol), Some(gap_tol)) => {
            Some(DiracOptions { rtol, atol, gap_tol, ..DiracOptions::default() })
        }
        _ => None,
    };
    r.finish()?;
    let (cfg, t_end, opts) = (cfg.unwrap(), t_end.unwrap(), opts.unwrap());

    let mut run = ctx.open(s)?;
    let traj = integrate(&cfg, t_end, &opts)?;
    let n = traj.n_atoms;
    let mut cols: Vec<String> = vec!["t".into()];
    cols.extend((0..n).map(|j| format!("I_{j}")));
    cols.extend((0..n).map(|j| format!("theta_{j}")));
    cols.extend(["sumI", "rate_direct", "rate_identity"].map(String::from));
    let mut rows = Vec::with_capacity(traj.times.len());
    for (step, &t) in traj.times.iter().enumerate() {
        let rate = traj.config(step)?.total_intensity_rate();
        let mut row = vec![t];
        row.extend_from_slice(&traj.states[step]);
        row.extend([traj.sum_intensity(step), rate.direct, rate.identity]);
        rows.push(row);
    }
    run.write_csv("dirac.csv", &cols, rows)?;

    let outcome = match &traj.event {
        None => "completed",
        Some(e) if e.is_singular() => "singular_event",
        Some(_) => "solver_failure",
    };
    run.write_json(
        "dirac.json",
        json!({
            "outcome": outcome,
            "event": traj.event,
            "blowup_time": traj.blowup_time,
            "final_time": traj.final_time(),
            "steps": traj.times.len() - 1,
            "initial_atoms": cfg.atoms(),
            "final_state": traj.states.last(),
            "options": opts,
        }),
    )?;
    let status = if traj.event.is_some() { Status::event(outcome) } else { Status::ok(outcome) };
    run.finish(&status.outcome, status.code)?;
    Ok(status)
}
