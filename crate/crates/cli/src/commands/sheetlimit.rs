use logspiral::sheet_limit::{convergence_study, MollifierShape, MollifierSpec, StudyOptions};
use logspiral::transport::Method;
use serde_json::json;

use super::{header, read_params, Context, Failure, Status, BETA, M};
use crate::config::{Key, Kind, Settings};
use crate::ic::read_atoms;

pub const ABOUT: &str = "Sheet-limit study: mollified transport runs against the Dirac ODE as epsilon shrinks";

pub fn keys() -> Vec<Key> {
    vec![
        BETA,
        M,
        Key::new("atoms", Kind::Text, Some("1:1,0.5:3.5"), "atoms as `I:theta,I:theta,...`"),
        Key::new("epsilons", Kind::Text, Some("0.1,0.05,0.025"), "strictly decreasing mollifier widths"),
        Key::new("t_end", Kind::Float, Some("0.5"), "final time"),
        Key::new("n", Kind::Int, Some("4096"), "grid points, n >= 64/epsilon for every epsilon"),
        Key::new("shape", Kind::Text, Some("smooth_bump"), "patch or smooth_bump"),
        Key::new("sample_every", Kind::Float, Some("0.05"), "comparison cadence"),
        Key::new("method", Kind::Text, Some("semi_lagrangian"), "semi_lagrangian or spectral_rk4"),
        Key::new("cfl", Kind::Float, Some("0.5"), "CFL number"),
    ]
}

pub fn run(s: &Settings, ctx: &Context) -> Result<Status, Failure> {
    let mut r = s.reader();
    let params = read_params(&mut r);
    let cfg = read_atoms(&mut r, "atoms", params);
    let eps = r.float_list("epsilons");
    let t_end = r.positive("t_end");
    let n = r.int::<usize>("n");
    let shape = r.text("shape").and_then(|v| r.check("shape", v.parse::<MollifierShape>()));
    let sample_every = r.positive("sample_every");
    let method = r.text("method").and_then(|v| r.check("method", v.parse::<Method>()));
    let cfl = r.positive("cfl");
    if let Some(eps) = &eps {
        if eps.len() < 2 || eps.windows(2).any(|w| w[1] >= w[0]) || eps.iter().any(|&e| e <= 0.0) {
            r.fail("epsilons", "need at least two positive, strictly decreasing values");
        } else if let (Some(n), Some(shape)) = (n, shape) {
            for &e in eps {
                if let Some(spec) = r.check("epsilons", MollifierSpec::new(shape, e)) {
                    if r.check("n", spec.check_grid(n)).is_none() {
                        break;
                    }
                }
            }
        }
    }
    r.finish()?;
    let opts = StudyOptions {
        shape: shape.unwrap(),
        n: n.unwrap(),
        sample_every: sample_every.unwrap(),
        method: method.unwrap(),
        cfl: cfl.unwrap(),
    };
    let (cfg, eps, t_end) = (cfg.unwrap(), eps.unwrap(), t_end.unwrap());

    let mut run = ctx.open(s)?;
    let report = convergence_study(&cfg, &eps, t_end, &opts)?;
    let k = cfg.len();
    let mut cols: Vec<String> = vec!["t".into()];
    for prefix in ["theta_eps", "intensity_eps", "theta_dirac", "intensity_dirac"] {
        cols.extend((0..k).map(|j| format!("{prefix}_{j}")));
    }
    cols.push("mass_defect".into());
    for (i, er) in report.runs.iter().enumerate() {
        let rows = er.samples.iter().map(|row| {
            let mut v = vec![row.t];
            v.extend_from_slice(&row.theta_eps);
            v.extend_from_slice(&row.intensity_eps);
            v.extend_from_slice(&row.theta_dirac);
            v.extend_from_slice(&row.intensity_dirac);
            v.push(row.mass_defect);
            v
        });
        run.write_csv(&format!("eps_{i}.csv"), &cols, rows)?;
    }
    let rows = report.runs.iter().map(|er| vec![er.epsilon, er.n as f64, er.angle_error, er.intensity_error]);
    run.write_csv("errors.csv", &header(&["epsilon", "n", "angle_error", "intensity_error"]), rows)?;
    run.write_json(
        "rates.json",
        json!({
            "angle_rate": report.angle_rate,
            "intensity_rate": report.intensity_rate,
            "monotone": report.monotone(0.0),
            "epsilons": eps,
            "t_end": t_end,
            "files": (0..report.runs.len()).map(|i| format!("eps_{i}.csv")).collect::<Vec<_>>(),
        }),
    )?;
    let status = Status::ok("completed");
    run.finish(&status.outcome, status.code)?;
    Ok(status)
}
