//! Lifting a profile to the plane: `ω = h(φ)`, `Ψ = r²H(φ)`,
//! `u^r = −rH'(φ)`, `u^θ = r(2H − βH')(φ)` with `φ = θ − β ln r`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirac::DiracConfig;
use crate::error::{invalid, Error, Result};
use crate::field::{transform, AngularField, EllipticSolver, SpectralField};
use crate::kernel::SpiralParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneField {
    Omega,
    #[serde(rename = "u_r")]
    URadial,
    #[serde(rename = "u_theta")]
    UAngular,
    Psi,
}

impl PlaneField {
    pub const ALL: [PlaneField; 4] = [Self::Omega, Self::URadial, Self::UAngular, Self::Psi];

    pub fn name(self) -> &'static str {
        match self {
            Self::Omega => "omega",
            Self::URadial => "u_r",
            Self::UAngular => "u_theta",
            Self::Psi => "psi",
        }
    }
}

impl std::str::FromStr for PlaneField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| invalid(format!("unknown field `{s}` (expected omega, u_r, u_theta or psi)")))
    }
}

/// Pointwise values of the lifted flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub omega: f64,
    pub u_r: f64,
    pub u_theta: f64,
    pub psi: f64,
}

impl FlowSample {
    pub fn get(&self, f: PlaneField) -> f64 {
        match f {
            PlaneField::Omega => self.omega,
            PlaneField::URadial => self.u_r,
            PlaneField::UAngular => self.u_theta,
            PlaneField::Psi => self.psi,
        }
    }
}

/// Trigonometric interpolant evaluated by repeated rotation.
fn eval_series(c: &SpectralField, phi: f64) -> f64 {
    let n = c.n();
    let coeffs = c.coeffs();
    let step = Complex64::from_polar(1.0, c.params().m() as f64 * phi);
    let mut e = step;
    let mut s = coeffs[0].re;
    for c in &coeffs[1..n / 2] {
        s += 2.0 * (c * e).re;
        e *= step;
    }
    s + coeffs[n / 2].re * e.re
}

/// Spectral interpolants of `h`, `H` and `H'` for pointwise evaluation.
#[derive(Clone, Debug)]
pub struct FlowSampler {
    params: SpiralParams,
    h: SpectralField,
    big_h: SpectralField,
    hp: SpectralField,
}

impl FlowSampler {
    pub fn new(h: &AngularField) -> Result<Self> {
        let params = h.params();
        let solver = EllipticSolver::new(params, h.n())?;
        let sol = solver.solve(h)?;
        let spec = |v: Vec<f64>| transform(&AngularField::new(params, v)?);
        Ok(Self { params, h: transform(h)?, big_h: spec(sol.big_h)?, hp: spec(sol.hp)? })
    }

    pub fn params(&self) -> SpiralParams {
        self.params
    }

    pub fn at(&self, r: f64, theta: f64) -> Result<FlowSample> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid(format!("radius r = {r} must be positive")));
        }
        let beta = self.params.beta();
        let phi = theta - beta * r.ln();
        let big_h = eval_series(&self.big_h, phi);
        let hp = eval_series(&self.hp, phi);
        Ok(FlowSample {
            omega: eval_series(&self.h, phi),
            u_r: -r * hp,
            u_theta: r * (2.0 * big_h - beta * hp),
            psi: r * r * big_h,
        })
    }

    /// `(1/r)(∂r(r u^r) + ∂θ u^θ)` by fourth-order central differences of the
    /// interpolant with step `δ` (relative in `r`).
    pub fn divergence(&self, r: f64, theta: f64, delta: f64) -> Result<f64> {
        let dr = delta * r;
        let rur = |s: f64| self.at(r + s * dr, theta).map(|p| (r + s * dr) * p.u_r);
        let uth = |s: f64| self.at(r, theta + s * delta).map(|p| p.u_theta);
        let d_r = central(rur, dr)?;
        let d_t = central(uth, delta)?;
        Ok((d_r + d_t) / r)
    }

    /// `(1/r)(∂r(r u^θ) − ∂θ u^r)` by the same differences.
    pub fn curl(&self, r: f64, theta: f64, delta: f64) -> Result<f64> {
        let dr = delta * r;
        let ruth = |s: f64| self.at(r + s * dr, theta).map(|p| (r + s * dr) * p.u_theta);
        let ur = |s: f64| self.at(r, theta + s * delta).map(|p| p.u_r);
        Ok((central(ruth, dr)? - central(ur, delta)?) / r)
    }
}

fn central(f: impl Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    Ok((f(-2.0)? - 8.0 * f(-1.0)? + 8.0 * f(1.0)? - f(2.0)?) / (12.0 * h))
}

/// Log-uniform radii and uniform angles on `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_min.is_finite()) {
            return Err(invalid(format!("r_min = {} must be positive", self.r_min)));
        }
        if !(self.r_max >= self.r_min && self.r_max.is_finite()) {
            return Err(invalid(format!("r_max = {} must be at least r_min", self.r_max)));
        }
        if self.n_r == 0 || self.n_theta == 0 {
            return Err(invalid("grid resolutions must be positive"));
        }
        Ok(())
    }

    pub fn radii(&self) -> Vec<f64> {
        if self.n_r == 1 {
            return vec![self.r_min];
        }
        let (a, b) = (self.r_min.ln(), self.r_max.ln());
        (0..self.n_r).map(|i| (a + (b - a) * i as f64 / (self.n_r - 1) as f64).exp()).collect()
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.n_theta).map(|j| 2.0 * PI * j as f64 / self.n_theta as f64).collect()
    }
}

/// Samples on a polar grid; each field is stored row-major by radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub radii: Vec<f64>,
    pub thetas: Vec<f64>,
    pub fields: Vec<PlaneField>,
    /// `values[f][i * n_theta + j]` at `(radii[i], thetas[j])`.
    pub values: Vec<Vec<f64>>,
}

impl PlaneGrid {
    pub fn field(&self, f: PlaneField) -> Option<&[f64]> {
        self.fields.iter().position(|&g| g == f).map(|k| self.values[k].as_slice())
    }

    pub fn value(&self, f: PlaneField, i: usize, j: usize) -> Option<f64> {
        self.field(f).map(|v| v[i * self.n_theta + j])
    }
}

/// Evaluates the requested fields on `grid`, rows in parallel.
pub fn sample_plane(h: &AngularField, grid: &GridSpec, fields: &[PlaneField]) -> Result<PlaneGrid> {
    grid.validate()?;
    if fields.is_empty() {
        return Err(invalid("no fields requested"));
    }
    let sampler = FlowSampler::new(h)?;
    let radii = grid.radii();
    let thetas = grid.thetas();
    let rows: Vec<Vec<FlowSample>> = radii
        .par_iter()
        .map(|&r| thetas.iter().map(|&t| sampler.at(r, t)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let values =
        fields.iter().map(|&f| rows.iter().flat_map(|row| row.iter().map(move |s| s.get(f))).collect()).collect();
    Ok(PlaneGrid {
        r_min: grid.r_min,
        r_max: grid.r_max,
        n_r: grid.n_r,
        n_theta: grid.n_theta,
        radii,
        thetas,
        fields: fields.to_vec(),
        values,
    })
}

/// `Γ(R) = (R²/2) ∫₀^{2π} h`.
pub fn circulation(h: &AngularField, radius: f64) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid(format!("radius R = {radius} must be positive")));
    }
    Ok(0.5 * radius * radius * h.integral())
}

/// Pressure profile `P` (with `p = r²P`) in the reduced form
///
/// ```text
/// 2P = 2β K(8β − 3(1+β²)∂)[(H')²] − 4(1+β²) K(3 − β∂)[(H')²] + 4H².
/// ```
///
/// Only `H` and `H'` enter, so the profile stays bounded for sheet data. `P`
/// carries no additive freedom: a constant `c` would add `c r²` to `p`.
pub fn pressure_profile(h: &AngularField) -> Result<AngularField> {
    let params = h.params();
    let beta = params.beta();
    let b2 = 1.0 + beta * beta;
    let solver = EllipticSolver::new(params, h.n())?;
    let sol = solver.solve(h)?;
    let fft = solver.fft();
    let g: Vec<f64> = sol.hp.iter().map(|v| v * v).collect();
    let g_hat = fft.forward(&g);
    let mult = solver.multipliers();
    let ik = solver.ik();
    let combo: Vec<Complex64> = (0..h.n())
        .map(|k| {
            let a = mult[k] * (8.0 * beta - 3.0 * b2 * ik[k]) * g_hat[k];
            let b = mult[k] * (3.0 - beta * ik[k]) * g_hat[k];
            2.0 * beta * a - 4.0 * b2 * b
        })
        .collect();
    let smooth = fft.inverse(&combo);
    let values = (0..h.n()).map(|i| 0.5 * smooth[i] + 2.0 * sol.big_h[i] * sol.big_h[i]).collect();
    AngularField::new(params, values)
}

/// Pressure profile straight from the radial-plus-β-angular momentum balance
///
/// ```text
/// 2P = −∂t Q + H'Q − 2HQ' + 2H(2H − βH'),   Q = 2βH − (1+β²)H',
/// ```
///
/// with `∂t H = K[−2H h']`. Needs a differentiable `h`; used to cross-check
/// [`pressure_profile`].
pub fn pressure_from_momentum(h: &AngularField) -> Result<AngularField> {
    let params = h.params();
    let beta = params.beta();
    let b2 = 1.0 + beta * beta;
    let solver = EllipticSolver::new(params, h.n())?;
    let sol = solver.solve(h)?;
    let fft = solver.fft();
    let ik = solver.ik();
    let deriv = |v: &[Complex64]| -> Vec<Complex64> { v.iter().zip(ik).map(|(a, b)| a * b).collect() };
    let dh = fft.inverse(&deriv(&fft.forward(h.values())));
    let ht: Vec<f64> = sol.big_h.iter().zip(&dh).map(|(a, b)| -2.0 * a * b).collect();
    let big_ht_hat = solver.apply(&fft.forward(&ht));
    let big_ht = fft.inverse(&big_ht_hat);
    let big_htp = fft.inverse(&deriv(&big_ht_hat));
    let values = (0..h.n())
        .map(|i| {
            let (hh, hp) = (sol.big_h[i], sol.hp[i]);
            let q_t = 2.0 * beta * big_ht[i] - b2 * big_htp[i];
            let q = 2.0 * beta * hh - b2 * hp;
            let qp = 2.0 * beta * hp - b2 * sol.hpp[i];
            0.5 * (-q_t + hp * q - 2.0 * hh * qp + 2.0 * hh * (2.0 * hh - beta * hp))
        })
        .collect();
    AngularField::new(params, values)
}

/// One branch of a sheet's support: `θ − β ln r ≡ θ_j` on the `copy`-th
/// rotated image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportCurve {
    pub atom: usize,
    pub copy: u32,
    pub r: Vec<f64>,
    /// Continuous (unwrapped) polar angle.
    pub theta: Vec<f64>,
}

impl SupportCurve {
    pub fn xy(&self) -> Vec<(f64, f64)> {
        self.r.iter().zip(&self.theta).map(|(r, t)| (r * t.cos(), r * t.sin())).collect()
    }
}

/// Support spirals of every atom and its `m` rotated copies, sampled at
/// `samples` log-uniform radii in `[r_min, r_max]`.
pub fn spiral_support_curves(cfg: &DiracConfig, r_min: f64, r_max: f64, samples: usize) -> Result<Vec<SupportCurve>> {
    let spec = GridSpec { r_min, r_max, n_r: samples, n_theta: 1 };
    spec.validate()?;
    let params = cfg.params();
    let beta = params.beta();
    let radii = spec.radii();
    let mut out = Vec::with_capacity(cfg.len() * params.m() as usize);
    for (j, a) in cfg.atoms().iter().enumerate() {
        for copy in 0..params.m() {
            let base = a.theta + copy as f64 * params.period();
            out.push(SupportCurve {
                atom: j,
                copy,
                r: radii.clone(),
                theta: radii.iter().map(|r| base + beta * r.ln()).collect(),
            });
        }
    }
    Ok(out)
}
