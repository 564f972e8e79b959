use logspiral::field::LpNorm;
use logspiral::transport::{
    classify_longtime, run as transport_run, BlowupGuard, ClassifyTolerances, EvolutionConfig, Method, Outcome,
};
use serde_json::json;

use super::{header, read_params, Context, Failure, Status, BETA, M};
use crate::config::{Key, Kind, Settings};
use crate::ic::{InitialData, KEYS as IC_KEYS};

pub const ABOUT: &str = "Evolve angular vorticity data under the transport equation";

pub fn keys() -> Vec<Key> {
    let mut k = vec![
        BETA,
        M,
        Key::new("n", Kind::Int, Some("512"), "grid points on [0, 2pi/m), a power of two"),
        Key::new("method", Kind::Text, Some("semi_lagrangian"), "semi_lagrangian or spectral_rk4"),
        Key::new("t_end", Kind::Float, Some("1"), "final time"),
        Key::new("cfl", Kind::Float, Some("0.5"), "CFL number in (0, 1]"),
        Key::new("dt", Kind::Float, Some("0.05"), "upper bound on the adaptive step"),
        Key::new("record_every", Kind::Float, Some("0"), "snapshot cadence; 0 keeps the initial and final states"),
        Key::new("guard_l1_factor", Kind::Float, Some("50"), "blow-up guard on the running mean of the L1 norm"),
        Key::new("guard_sup_factor", Kind::Float, Some("1e6"), "blow-up guard on the sup norm"),
        Key::new("homogenized_tol", Kind::Float, Some("1e-3"), "relative weak-norm oscillation read as homogenised"),
    ];
    k.extend_from_slice(IC_KEYS);
    k
}

fn lp_name(e: &LpNorm) -> String {
    if e.p.is_infinite() {
        "linf".into()
    } else {
        format!("l{}", e.p)
    }
}

pub fn run(s: &Settings, ctx: &Context) -> Result<Status, Failure> {
    let mut r = s.reader();
    let params = read_params(&mut r);
    let n = r.int::<usize>("n");
    let method = r.text("method").and_then(|m| r.check("method", m.parse::<Method>()));
    let floats: Vec<Option<f64>> =
        ["dt", "t_end", "cfl", "record_every", "guard_l1_factor", "guard_sup_factor", "homogenized_tol"]
            .iter()
            .map(|k| r.float(k))
            .collect();
    let cfg = match (method, floats.iter().copied().collect::<Option<Vec<f64>>>()) {
        (Some(method), Some(f)) => {
            let c = EvolutionConfig {
                dt: f[0],
                t_end: f[1],
                cfl: f[2],
                record_every: f[3],
                method,
                guard: BlowupGuard { l1_factor: f[4], sup_factor: f[5] },
                homogenized_tol: f[6],
            };
            r.check("evolution", c.validate()).map(|_| c)
        }
        _ => None,
    };
    if let Some(n) = n {
        if !(n >= 16 && n.is_power_of_two()) {
            r.fail("n", format!("{n} must be a power of two and at least 16"));
        }
    }
    let ic = InitialData::read(&mut r, params, n);
    r.finish()?;
    let (params, n, cfg, ic) = (params.unwrap(), n.unwrap(), cfg.unwrap(), ic.unwrap());

    let h0 = ic.build(params, n, ctx.seed)?;
    let mut run = ctx.open(s)?;
    let traj = match transport_run(&h0, &cfg) {
        Ok(t) => t,
        Err(logspiral::Error::Aborted(t)) => {
            let t = *t;
            run.write_json("summary.json", json!({ "outcome": "aborted", "final_time": t.final_time() }))?;
            let status = Status::event("aborted");
            run.finish(&status.outcome, status.code)?;
            return Ok(status);
        }
        Err(e) => return Err(e.into()),
    };

    let lp: Vec<String> = traj.diag[0].lp_norms.iter().map(lp_name).collect();
    let mut cols = header(&["t", "intensity", "dissipation"]);
    cols.extend(lp.iter().cloned());
    cols.extend(header(&["l1_time_integral", "h_min", "h_max", "hp_sup"]));
    let rows = traj.times.iter().zip(&traj.diag).map(|(&t, d)| {
        let mut row = vec![t, d.intensity, d.dissipation];
        row.extend(d.lp_norms.iter().map(|e| e.value));
        row.extend([d.l1_time_integral, d.h_min, d.h_max, d.hp_sup]);
        row
    });
    run.write_csv("trajectory.csv", &cols, rows)?;

    let snaps = traj
        .snapshot_times
        .iter()
        .zip(&traj.states)
        .flat_map(|(&t, h)| h.values().iter().enumerate().map(move |(k, &v)| vec![t, h.theta(k), v]));
    run.write_csv("snapshots.csv", &header(&["t", "theta", "h"]), snaps)?;

    let class = classify_longtime(&traj, &ClassifyTolerances::default())?;
    let last = traj.diag.last().expect("non-empty");
    let outcome = match traj.outcome {
        Outcome::Completed => "completed",
        Outcome::BlowupSuspected => "blowup_suspected",
        Outcome::Homogenized => "homogenized",
    };
    run.write_json(
        "summary.json",
        json!({
            "outcome": outcome,
            "guard": traj.guard,
            "longtime": class,
            "final_time": traj.final_time(),
            "steps": traj.times.len() - 1,
            "initial": traj.diag[0],
            "final": last,
            "method": traj.method,
        }),
    )?;
    let status = if traj.outcome == Outcome::BlowupSuspected { Status::event(outcome) } else { Status::ok(outcome) };
    run.finish(&status.outcome, status.code)?;
    Ok(status)
}
