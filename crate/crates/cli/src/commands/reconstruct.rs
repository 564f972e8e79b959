use logspiral::reconstruct::{circulation, pressure_profile, sample_plane, GridSpec, PlaneField};
use serde_json::json;

use super::{header, read_params, Context, Failure, Status, BETA, M};
use crate::config::{Key, Kind, Settings};
use crate::ic::{InitialData, KEYS as IC_KEYS};

pub const ABOUT: &str = "Sample the planar vorticity, velocity and stream function of angular data";

pub fn keys() -> Vec<Key> {
    let mut k = vec![
        BETA,
        M,
        Key::new("n", Kind::Int, Some("512"), "angular grid points, a power of two"),
        Key::new("r_min", Kind::Float, Some("0.1"), "smallest radius, positive"),
        Key::new("r_max", Kind::Float, Some("10"), "largest radius"),
        Key::new("n_r", Kind::Int, Some("64"), "log-uniform radii"),
        Key::new("n_theta", Kind::Int, Some("128"), "uniform angles on [0, 2pi)"),
        Key::new("fields", Kind::Text, Some("omega,u_r,u_theta,psi"), "fields to sample, in order"),
        Key::new("format", Kind::Text, Some("csv"), "csv or binary"),
        Key::new("pressure", Kind::Flag, None, "also write the angular pressure profile"),
        Key::new("radius", Kind::Float, Some("1"), "radius of the reported circulation"),
    ];
    k.extend_from_slice(IC_KEYS);
    k
}

pub fn run(s: &Settings, ctx: &Context) -> Result<Status, Failure> {
    let mut r = s.reader();
    let params = read_params(&mut r);
    let n = r.int::<usize>("n");
    if let Some(n) = n {
        if !(n >= 16 && n.is_power_of_two()) {
            r.fail("n", format!("{n} must be a power of two and at least 16"));
        }
    }
    let (r_min, r_max) = (r.float("r_min"), r.float("r_max"));
    let (n_r, n_theta) = (r.int::<usize>("n_r"), r.int::<usize>("n_theta"));
    let grid = match (r_min, r_max, n_r, n_theta) {
        (Some(r_min), Some(r_max), Some(n_r), Some(n_theta)) => {
            let g = GridSpec { r_min, r_max, n_r, n_theta };
            r.check("r_min", g.validate()).map(|_| g)
        }
        _ => None,
    };
    let fields: Option<Vec<PlaneField>> = r.text("fields").and_then(|raw| {
        raw.split(',').map(|f| r.check("fields", f.trim().parse::<PlaneField>())).collect::<Option<Vec<_>>>()
    });
    let format = r.text("format");
    if let Some(f) = &format {
        if f != "csv" && f != "binary" {
            r.fail("format", format!("expected csv or binary, found `{f}`"));
        }
    }
    let pressure = r.flag("pressure");
    let radius = r.positive("radius");
    let ic = InitialData::read(&mut r, params, n);
    r.finish()?;
    let (params, n, grid, fields, format, radius, ic) =
        (params.unwrap(), n.unwrap(), grid.unwrap(), fields.unwrap(), format.unwrap(), radius.unwrap(), ic.unwrap());

    let h = ic.build(params, n, ctx.seed)?;
    let mut run = ctx.open(s)?;
    let plane = sample_plane(&h, &grid, &fields)?;
    let names: Vec<&str> = fields.iter().map(|f| f.name()).collect();
    if format == "csv" {
        let mut cols = header(&["r", "theta"]);
        cols.extend(names.iter().map(|s| s.to_string()));
        let rows = (0..grid.n_r).flat_map(|i| {
            let plane = &plane;
            (0..grid.n_theta).map(move |j| {
                let mut row = vec![plane.radii[i], plane.thetas[j]];
                row.extend(plane.values.iter().map(|v| v[i * grid.n_theta + j]));
                row
            })
        });
        run.write_csv("plane.csv", &cols, rows)?;
    } else {
        let mut bytes = Vec::with_capacity(8 * fields.len() * grid.n_r * grid.n_theta);
        for v in plane.values.iter().flatten() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        run.write_bytes("plane.bin", &bytes)?;
        run.write_json(
            "plane.json",
            json!({
                "data": "plane.bin",
                "dtype": "float64",
                "byte_order": "little",
                "layout": "[field][r][theta], theta fastest",
                "dims": { "field": fields.len(), "r": grid.n_r, "theta": grid.n_theta },
                "fields": names,
                "r_range": [grid.r_min, grid.r_max],
                "r_spacing": "log",
                "theta_range": [0.0, std::f64::consts::TAU],
                "theta_spacing": "uniform, endpoint excluded",
            }),
        )?;
    }
    if pressure {
        let p = pressure_profile(&h)?;
        let rows = p.values().iter().enumerate().map(|(k, &v)| vec![p.theta(k), v]);
        run.write_csv("pressure.csv", &header(&["theta", "P"]), rows)?;
    }
    run.write_json(
        "summary.json",
        json!({
            "beta": params.beta(),
            "m": params.m(),
            "n": n,
            "intensity": h.integral(),
            "radius": radius,
            "circulation": circulation(&h, radius)?,
            "format": format,
        }),
    )?;
    let status = Status::ok("completed");
    run.finish(&status.outcome, status.code)?;
    Ok(status)
}
