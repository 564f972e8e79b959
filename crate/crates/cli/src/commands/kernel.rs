use std::path::Path;

use logspiral::kernel::{identity_residuals, Kernel};
use serde_json::json;

use super::{header, read_params, Context, Failure, Status, BETA, M};
use crate::config::{Key, Kind, Settings};

pub const ABOUT: &str = "Tabulate the kernel K and K' over one period, with boundary data and identity residuals";

pub fn keys() -> Vec<Key> {
    vec![
        BETA,
        M,
        Key::new("samples", Kind::Int, Some("1000"), "number of equispaced samples on [0, 2pi/m)"),
        Key::new("out", Kind::Text, Some("kernel.csv"), "CSV file name inside the output directory"),
        Key::new("shifts", Kind::Int, Some("8"), "number of shifts checked in the shifted identity"),
    ]
}

pub fn run(s: &Settings, ctx: &Context) -> Result<Status, Failure> {
    let mut r = s.reader();
    let params = read_params(&mut r);
    let samples = r.int::<usize>("samples");
    let out = r.text("out");
    let shifts = r.int::<usize>("shifts");
    if samples == Some(0) {
        r.fail("samples", "must be at least 1");
    }
    if let Some(o) = &out {
        if o.is_empty() || Path::new(o).is_absolute() || o.contains("..") {
            r.fail("out", format!("`{o}` must be a relative file name inside the output directory"));
        }
    }
    r.finish()?;
    let (params, samples, out, shifts) = (params.unwrap(), samples.unwrap(), out.unwrap(), shifts.unwrap());

    let mut run = ctx.open(s)?;
    let k = Kernel::new(params);
    let per = params.period();
    let rows = (0..samples).map(|i| {
        let t = per * i as f64 / samples as f64;
        vec![t, k.value_continuous(t), k.deriv_averaged(t)]
    });
    run.write_csv(&out, &header(&["theta", "K", "Kprime"]), rows)?;

    let bd = k.boundary();
    let (plus, minus) = k.one_sided_derivs();
    let res = identity_residuals(params, shifts);
    let sidecar = Path::new(&out).with_extension("json");
    run.write_json(
        &sidecar.to_string_lossy(),
        json!({
            "beta": params.beta(),
            "m": params.m(),
            "k0": bd.k0,
            "kp0": bd.kp0,
            "jump": bd.jump,
            "kp0_plus": plus,
            "kp_period_minus": minus,
            "identity_residuals": res,
            "identity_max_abs": res.max_abs(),
        }),
    )?;
    let status = Status::ok("completed");
    run.finish(&status.outcome, status.code)?;
    Ok(status)
}
