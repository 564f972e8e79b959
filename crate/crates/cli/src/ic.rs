//! Initial data shared by `evolve` and `reconstruct`, and atom lists.

use std::path::PathBuf;

use logspiral::dirac::{Atom, DiracConfig};
use logspiral::field::AngularField;
use logspiral::kernel::SpiralParams;
use logspiral::sheet_limit::{mollify, MollifierShape, MollifierSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Key, Kind, Reader};

pub const KEYS: &[Key] = &[
    Key::new(
        "ic",
        Kind::Text,
        Some("cosine"),
        "initial data: constant, cosine, indicator, mollified_dirac, from_csv or random",
    ),
    Key::new("amplitude", Kind::Float, Some("1"), "value (constant), amplitude (cosine, indicator, random)"),
    Key::new("offset", Kind::Float, Some("0"), "mean added to cosine and random data"),
    Key::new("mode", Kind::Int, Some("1"), "cosine wavenumber in units of m"),
    Key::new("a", Kind::Float, Some("0"), "indicator: start of the interval"),
    Key::new("b", Kind::Float, Some("1"), "indicator: end of the interval"),
    Key::new("atoms", Kind::Text, None, "sheet atoms as `I:theta,I:theta,...`"),
    Key::new("epsilon", Kind::Float, Some("0.1"), "mollified_dirac: support half-width"),
    Key::new("shape", Kind::Text, Some("smooth_bump"), "mollified_dirac: patch or smooth_bump"),
    Key::new("ic_file", Kind::Text, None, "from_csv: file whose last column holds h on the grid"),
    Key::new("modes", Kind::Int, Some("8"), "random: number of Fourier modes"),
];

#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    Constant(f64),
    Cosine { amplitude: f64, offset: f64, mode: u32 },
    Indicator { a: f64, b: f64, amplitude: f64 },
    Mollified { atoms: Vec<Atom>, spec: MollifierSpec },
    Values(Vec<f64>),
    Random { modes: usize, amplitude: f64, offset: f64 },
}

/// Parses `"I:θ,I:θ,..."`.
pub fn parse_atoms(s: &str) -> Result<Vec<Atom>, String> {
    let mut atoms = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (i, t) = part.split_once(':').ok_or_else(|| format!("expected `I:theta`, found `{part}`"))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{x}` in `{part}` is not a finite number"))
        };
        atoms.push(Atom::new(parse(i)?, parse(t)?));
    }
    if atoms.is_empty() {
        return Err("no atoms given".into());
    }
    Ok(atoms)
}

/// Reads and validates `atoms` against `params`.
pub fn read_atoms(r: &mut Reader, key: &str, params: Option<SpiralParams>) -> Option<DiracConfig> {
    let raw = r.text(key)?;
    let atoms = match parse_atoms(&raw) {
        Ok(a) => a,
        Err(e) => {
            r.fail(key, e);
            return None;
        }
    };
    r.check(key, DiracConfig::new(params?, atoms))
}

/// `count` atoms with `I ~ U(−1, 1)` and `θ ~ U(0, 2π/m)`.
pub fn random_atoms(params: SpiralParams, count: usize, seed: u64) -> logspiral::Result<DiracConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = (0..count).map(|_| Atom::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.0..params.period()))).collect();
    DiracConfig::new(params, atoms)
}

fn read_values(path: &str) -> Result<Vec<f64>, String> {
    let text = std::fs::read_to_string(PathBuf::from(path)).map_err(|e| format!("cannot read {path}: {e}"))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let last = line.rsplit(',').next().unwrap_or("").trim();
        match last.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => return Err(format!("{path}:{}: value is not finite", i + 1)),
            // a header row
            Err(_) if out.is_empty() => continue,
            Err(_) => return Err(format!("{path}:{}: `{last}` is not a number", i + 1)),
        }
    }
    Ok(out)
}

impl InitialData {
    /// Reads the `ic` family of keys; `n` is the grid size the data must fit.
    pub fn read(r: &mut Reader, params: Option<SpiralParams>, n: Option<usize>) -> Option<Self> {
        let kind = r.text("ic")?;
        match kind.as_str() {
            "constant" => Some(Self::Constant(r.float("amplitude")?)),
            "cosine" => {
                let amplitude = r.float("amplitude");
                let offset = r.float("offset");
                let mode = r.int::<u32>("mode");
                Some(Self::Cosine { amplitude: amplitude?, offset: offset?, mode: mode? })
            }
            "indicator" => {
                let (a, b, amplitude) = (r.float("a"), r.float("b"), r.float("amplitude"));
                let (a, b) = (a?, b?);
                if b <= a {
                    r.fail("b", format!("indicator needs a < b, found a = {a}, b = {b}"));
                    return None;
                }
                Some(Self::Indicator { a, b, amplitude: amplitude? })
            }
            "mollified_dirac" => {
                let cfg = read_atoms(r, "atoms", params);
                let eps = r.positive("epsilon");
                let shape = r.text("shape").and_then(|s| r.check("shape", s.parse::<MollifierShape>()));
                let spec = r.check("epsilon", MollifierSpec::new(shape?, eps?))?;
                if let Some(n) = n {
                    r.check("n", spec.check_grid(n))?;
                }
                Some(Self::Mollified { atoms: cfg?.atoms().to_vec(), spec })
            }
            "from_csv" => {
                let path = r.text("ic_file")?;
                let values = match read_values(&path) {
                    Ok(v) => v,
                    Err(e) => {
                        r.fail("ic_file", e);
                        return None;
                    }
                };
                if let Some(n) = n {
                    if values.len() != n {
                        r.fail("ic_file", format!("{path} holds {} values but n = {n}", values.len()));
                        return None;
                    }
                }
                Some(Self::Values(values))
            }
            "random" => {
                let modes = r.int::<usize>("modes");
                let amplitude = r.float("amplitude");
                let offset = r.float("offset");
                Some(Self::Random { modes: modes?, amplitude: amplitude?, offset: offset? })
            }
            other => {
                r.fail(
                    "ic",
                    format!(
                        "unknown initial data `{other}` \
                         (expected constant, cosine, indicator, mollified_dirac, from_csv or random)"
                    ),
                );
                None
            }
        }
    }

    /// Samples the data on `n` points of `[0, 2π/m)`.
    pub fn build(&self, params: SpiralParams, n: usize, seed: u64) -> logspiral::Result<AngularField> {
        let m = params.m() as f64;
        match self {
            Self::Constant(c) => AngularField::constant(params, n, *c),
            Self::Cosine { amplitude, offset, mode } => {
                let k = *mode as f64 * m;
                AngularField::from_fn(params, n, |t| offset + amplitude * (k * t).cos())
            }
            Self::Indicator { a, b, amplitude } => {
                let len = b - a;
                AngularField::from_fn(params, n, |t| {
                    let full = len >= params.period();
                    if full || params.reduce(t - a) < len {
                        *amplitude
                    } else {
                        0.0
                    }
                })
            }
            Self::Mollified { atoms, spec } => mollify(&DiracConfig::new(params, atoms.clone())?, spec, n),
            Self::Values(v) => AngularField::new(params, v.clone()),
            Self::Random { modes, amplitude, offset } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let coeffs: Vec<(f64, f64)> = (1..=*modes)
                    .map(|k| {
                        let s = 1.0 / (k * k) as f64;
                        (s * rng.gen_range(-1.0..1.0), s * rng.gen_range(-1.0..1.0))
                    })
                    .collect();
                AngularField::from_fn(params, n, |t| {
                    offset
                        + amplitude
                            * coeffs
                                .iter()
                                .enumerate()
                                .map(|(k, (a, b))| {
                                    let x = (k + 1) as f64 * m * t;
                                    a * x.cos() + b * x.sin()
                                })
                                .sum::<f64>()
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn atom_lists_parse() {
        let a = parse_atoms("1:0.0, -0.5:3").unwrap();
        assert_eq!(a, vec![Atom::new(1.0, 0.0), Atom::new(-0.5, 3.0)]);
        assert!(parse_atoms("1").unwrap_err().contains("I:theta"));
        assert!(parse_atoms("1:x").unwrap_err().contains("`x`"));
        assert!(parse_atoms("").is_err());
    }

    #[test]
    fn random_atoms_are_seeded() {
        let p = SpiralParams::new(1.0, 1).unwrap();
        let a = random_atoms(p, 3, 42).unwrap();
        assert_eq!(a, random_atoms(p, 3, 42).unwrap());
        assert_ne!(a, random_atoms(p, 3, 43).unwrap());
        assert!(a.atoms().iter().all(|x| x.intensity.abs() < 1.0 && x.theta < 2.0 * PI));
    }

    #[test]
    fn indicator_wraps_around() {
        let p = SpiralParams::new(1.0, 1).unwrap();
        let h =
            InitialData::Indicator { a: 2.0 * PI - 0.5, b: 2.0 * PI + 0.5, amplitude: 2.0 }.build(p, 1024, 0).unwrap();
        assert!((h.integral() - 2.0).abs() < 2.0 * h.dtheta() * 2.0);
        assert_eq!(h.values()[0], 2.0);
        assert_eq!(h.values()[512], 0.0);
    }
}
