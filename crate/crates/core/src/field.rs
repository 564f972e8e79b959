//! Periodic fields on the reduced domain `[0, 2π/m)` and the spectral
//! elliptic solve `H = K * h`.
//!
//! Fourier coefficients are stored in FFT order and normalised so that
//! `h(θ) = Σ_k c_k e^{i k m θ}`; index `k` is the reduced wavenumber and
//! `k m` the physical one. Every integral reported by [`Diagnostics`] is
//! taken over the full circle `[0, 2π)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{multiplier, SpiralParams};

/// Samples of `h` at `θ_k = 2πk/(mn)`, `k = 0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularField {
    params: SpiralParams,
    values: Vec<f64>,
}

fn check_size(n: usize) -> Result<()> {
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::GridSize(n));
    }
    Ok(())
}

impl AngularField {
    pub fn new(params: SpiralParams, values: Vec<f64>) -> Result<Self> {
        check_size(values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { params, values })
    }

    /// Samples `f` on the grid.
    pub fn from_fn(params: SpiralParams, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_size(n)?;
        let dt = params.period() / n as f64;
        Self::new(params, (0..n).map(|k| f(k as f64 * dt)).collect())
    }

    pub fn constant(params: SpiralParams, n: usize, c: f64) -> Result<Self> {
        Self::from_fn(params, n, |_| c)
    }

    pub fn params(&self) -> SpiralParams {
        self.params
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Grid spacing `2π/(mn)`.
    pub fn dtheta(&self) -> f64 {
        self.params.period() / self.n() as f64
    }

    pub fn theta(&self, k: usize) -> f64 {
        k as f64 * self.dtheta()
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.n()).map(|k| self.theta(k)).collect()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `∫₀^{2π} h` by the trapezoidal rule (spectrally accurate).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * 2.0 * PI / self.n() as f64
    }

    /// `‖h‖_{L^p}` over the full circle; `p = ∞` gives the sup norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.sup_norm();
        }
        let w = 2.0 * PI / self.n() as f64;
        (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * w).powf(1.0 / p)
    }

    /// Pointwise map, keeping the grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.params, self.values.iter().map(|&v| f(v)).collect())
    }
}

/// Fourier coefficients of a real field, FFT order, length `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    params: SpiralParams,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    /// Builds from coefficients, checking Hermitian symmetry.
    pub fn new(params: SpiralParams, coeffs: Vec<Complex64>) -> Result<Self> {
        let n = coeffs.len();
        check_size(n)?;
        let scale = coeffs.iter().fold(0.0f64, |a, c| a.max(c.norm())).max(1e-300);
        for k in 0..=n / 2 {
            let a = coeffs[k];
            let b = coeffs[(n - k) % n].conj();
            if (a - b).norm() > 1e-12 * scale {
                return Err(Error::Spectral(format!("coefficient {k} breaks Hermitian symmetry")));
            }
        }
        if coeffs[0].im.abs() > 1e-12 * scale || coeffs[n / 2].im.abs() > 1e-12 * scale {
            return Err(Error::Spectral("mean and Nyquist modes must be real".into()));
        }
        Ok(Self { params, coeffs })
    }

    pub fn params(&self) -> SpiralParams {
        self.params
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Signed reduced index of FFT slot `k`; the Nyquist slot maps to `+n/2`.
    pub fn index(&self, k: usize) -> i64 {
        signed_index(k, self.n())
    }

    /// Coefficient of `e^{i k m θ}` for signed `k`; zero outside the band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let n = self.n() as i64;
        if k.abs() > n / 2 {
            return Complex64::new(0.0, 0.0);
        }
        let c = self.coeffs[k.rem_euclid(n) as usize];
        if k.abs() == n / 2 {
            // split the Nyquist mode evenly between ±n/2
            c * 0.5
        } else {
            c
        }
    }

    /// Trigonometric interpolant at an arbitrary angle.
    pub fn eval(&self, theta: f64) -> f64 {
        let n = self.n();
        let m = self.params.m() as f64;
        let mut s = self.coeffs[0].re;
        for k in 1..n / 2 {
            let e = Complex64::from_polar(1.0, k as f64 * m * theta);
            s += 2.0 * (self.coeffs[k] * e).re;
        }
        s + self.coeffs[n / 2].re * ((n / 2) as f64 * m * theta).cos()
    }

    /// Spectral derivative `∂θ`; the Nyquist mode is dropped.
    pub fn derivative(&self) -> SpectralField {
        let n = self.n();
        let m = self.params.m() as f64;
        let coeffs = (0..n)
            .map(|k| {
                if k == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    self.coeffs[k] * Complex64::new(0.0, signed_index(k, n) as f64 * m)
                }
            })
            .collect();
        SpectralField { params: self.params, coeffs }
    }

    /// `2π Σ |c_k|²`, equal to `∫₀^{2π} h²`.
    pub fn energy(&self) -> f64 {
        2.0 * PI * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }
}

#[inline]
pub(crate) fn signed_index(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Forward/inverse FFT plans for one grid size.
#[derive(Clone)]
pub struct FftPair {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for FftPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FftPair").field("n", &self.n).finish()
    }
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Normalised coefficients `c_k = (1/n) Σ_j h_j e^{-2πijk/n}`.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.n);
        let scale = 1.0 / self.n as f64;
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v * scale, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Real part of `Σ_k c_k e^{2πijk/n}`.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inv.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

pub fn transform(field: &AngularField) -> Result<SpectralField> {
    if let Some(i) = field.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let coeffs = FftPair::new(field.n()).forward(&field.values);
    Ok(SpectralField { params: field.params, coeffs })
}

pub fn inverse_transform(spec: &SpectralField) -> AngularField {
    let values = FftPair::new(spec.n()).inverse(&spec.coeffs);
    AngularField { params: spec.params, values }
}

/// `H`, `H'` and `H''` on the grid, plus the spectrum of `H`.
#[derive(Clone, Debug)]
pub struct EllipticSolution {
    pub h_hat: Vec<Complex64>,
    pub big_h: Vec<f64>,
    pub hp: Vec<f64>,
    pub hpp: Vec<f64>,
}

/// Cached multipliers and FFT plans for repeated solves at one `(β, m, n)`.
#[derive(Clone, Debug)]
pub struct EllipticSolver {
    params: SpiralParams,
    fft: FftPair,
    /// `1/d(km)` per FFT slot; real part only at Nyquist.
    mult: Vec<Complex64>,
    /// `i k m` per FFT slot; zero at Nyquist.
    ik: Vec<Complex64>,
}

impl EllipticSolver {
    pub fn new(params: SpiralParams, n: usize) -> Result<Self> {
        check_size(n)?;
        let m = params.m() as f64;
        let beta = params.beta();
        let mut mult = Vec::with_capacity(n);
        let mut ik = Vec::with_capacity(n);
        for k in 0..n {
            let wn = signed_index(k, n) as f64 * m;
            if k == n / 2 {
                mult.push(Complex64::new(multiplier(beta, wn).re, 0.0));
                ik.push(Complex64::new(0.0, 0.0));
            } else {
                mult.push(multiplier(beta, wn));
                ik.push(Complex64::new(0.0, wn));
            }
        }
        Ok(Self { params, fft: FftPair::new(n), mult, ik })
    }

    pub fn params(&self) -> SpiralParams {
        self.params
    }

    pub fn n(&self) -> usize {
        self.fft.n
    }

    pub fn fft(&self) -> &FftPair {
        &self.fft
    }

    /// Physical derivative factor `i k m` for slot `k` (zero at Nyquist).
    pub fn ik(&self) -> &[Complex64] {
        &self.ik
    }

    pub fn multipliers(&self) -> &[Complex64] {
        &self.mult
    }

    /// Spectrum of `H` from the spectrum of `h`.
    pub fn apply(&self, h_hat: &[Complex64]) -> Vec<Complex64> {
        h_hat.iter().zip(&self.mult).map(|(a, b)| a * b).collect()
    }

    /// `(H, H')` on the grid from raw samples of `h`.
    pub fn velocity(&self, h: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let hh = self.apply(&self.fft.forward(h));
        let dh: Vec<Complex64> = hh.iter().zip(&self.ik).map(|(a, b)| a * b).collect();
        (self.fft.inverse(&hh), self.fft.inverse(&dh))
    }

    pub fn solve(&self, h: &AngularField) -> Result<EllipticSolution> {
        if h.n() != self.n() || h.params != self.params {
            return Err(Error::InvalidArgument(format!(
                "field (n = {}) does not match the solver (n = {})",
                h.n(),
                self.n()
            )));
        }
        let h_hat = self.apply(&self.fft.forward(&h.values));
        let d1: Vec<Complex64> = h_hat.iter().zip(&self.ik).map(|(a, b)| a * b).collect();
        let d2: Vec<Complex64> = d1.iter().zip(&self.ik).map(|(a, b)| a * b).collect();
        // Nyquist: H'' of the cosine mode is -(n/2 m)^2 H, not zero
        let mut d2 = d2;
        let n = self.n();
        let kn = (n / 2) as f64 * self.params.m() as f64;
        d2[n / 2] = -h_hat[n / 2] * kn * kn;
        Ok(EllipticSolution {
            big_h: self.fft.inverse(&h_hat),
            hp: self.fft.inverse(&d1),
            hpp: self.fft.inverse(&d2),
            h_hat,
        })
    }

    /// Diagnostics of `h`, reusing the cached plans.
    pub fn diagnostics(&self, h: &AngularField) -> Result<Diagnostics> {
        let sol = self.solve(h)?;
        let beta = self.params.beta();
        let dhat_energy: f64 = sol.h_hat.iter().zip(&self.ik).map(|(a, b)| (a * b).norm_sqr()).sum();
        let c0 = h.values.iter().sum::<f64>() / h.n() as f64;
        Ok(Diagnostics {
            intensity: 2.0 * PI * c0,
            dissipation: 8.0 * beta * 2.0 * PI * dhat_energy,
            lp_norms: [1.0, 2.0, f64::INFINITY].iter().map(|&p| LpNorm { p, value: h.lp_norm(p) }).collect(),
            l1_time_integral: 0.0,
            h_min: h.min(),
            h_max: h.max(),
            hp_sup: sol.hp.iter().fold(0.0, |a, v| a.max(v.abs())),
        })
    }
}

/// `(H, H')` with `Ĥ_k = ĥ_k / (4 − 4β i k m − (1+β²) k² m²)`.
pub fn solve_elliptic(h: &AngularField) -> Result<(AngularField, AngularField)> {
    let sol = EllipticSolver::new(h.params, h.n())?.solve(h)?;
    Ok((AngularField { params: h.params, values: sol.big_h }, AngularField { params: h.params, values: sol.hp }))
}

/// One entry of [`Diagnostics::lp_norms`]; `p` may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpNorm {
    #[serde(with = "inf_as_string")]
    pub p: f64,
    pub value: f64,
}

mod inf_as_string {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            Repr::Text("inf".into()).serialize(s)
        } else {
            Repr::Num(*p).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad exponent {t}"))),
        }
    }
}

/// Scalar diagnostics, all integrals over the full circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `I = ∫ h`.
    pub intensity: f64,
    /// `8β ∫ (H')²`, so that `dI/dt = −dissipation`.
    pub dissipation: f64,
    pub lp_norms: Vec<LpNorm>,
    /// `∫₀ᵗ ‖h‖_{L¹} ds`; zero for a standalone field.
    pub l1_time_integral: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub hp_sup: f64,
}

impl Diagnostics {
    pub fn lp(&self, p: f64) -> Option<f64> {
        self.lp_norms.iter().find(|e| e.p == p).map(|e| e.value)
    }

    pub fn l1(&self) -> f64 {
        self.lp(1.0).unwrap_or(f64::NAN)
    }
}

pub fn diagnostics(h: &AngularField) -> Result<Diagnostics> {
    EllipticSolver::new(h.params, h.n())?.diagnostics(h)
}

/// `(2π Σ_k (1 + (km)²)^{−a} |ĥ_k|²)^{1/2}`.
pub fn hminus_norm(h: &AngularField, a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("Sobolev index a must be positive, got {a}")));
    }
    let spec = transform(h)?;
    let m = h.params.m() as f64;
    let s: f64 = spec
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let wn = spec.index(k) as f64 * m;
            (1.0 + wn * wn).powf(-a) * c.norm_sqr()
        })
        .sum();
    Ok((2.0 * PI * s).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Kernel;
    use crate::quadrature::integrate_piecewise;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(beta: f64, m: u32) -> SpiralParams {
        SpiralParams::new(beta, m).unwrap()
    }

    fn smooth_random(params: SpiralParams, n: usize, rng: &mut ChaCha8Rng) -> AngularField {
        let modes: Vec<(f64, f64)> = (0..24)
            .map(|k| {
                let d = (-(k as f64) / 4.0).exp();
                (d * rng.gen_range(-1.0..1.0), d * rng.gen_range(-1.0..1.0))
            })
            .collect();
        let m = params.m() as f64;
        AngularField::from_fn(params, n, |t| {
            modes
                .iter()
                .enumerate()
                .map(|(k, (a, b))| a * (k as f64 * m * t).cos() + b * (k as f64 * m * t).sin())
                .sum()
        })
        .unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(AngularField::new(p(1.0, 1), vec![0.0; 12]), Err(Error::GridSize(12))));
        assert!(matches!(AngularField::new(p(1.0, 1), vec![0.0; 48]), Err(Error::GridSize(48))));
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(matches!(AngularField::new(p(1.0, 1), v), Err(Error::NonFinite(3))));
    }

    #[test]
    fn transform_examples() {
        let c = transform(&AngularField::constant(p(1.0, 1), 32, 2.5).unwrap()).unwrap();
        assert_relative_eq!(c.coeffs()[0].re, 2.5, max_relative = 1e-15);
        assert!(c.coeffs()[1..].iter().all(|z| z.norm() < 1e-15));

        let s = transform(&AngularField::from_fn(p(1.0, 1), 32, f64::cos).unwrap()).unwrap();
        assert_relative_eq!(s.coeff(1).re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(s.coeff(-1).re, 0.5, epsilon = 1e-15);
        for k in 2..16 {
            assert!(s.coeff(k).norm() < 1e-15);
        }
        assert_relative_eq!(s.eval(0.3), 0.3f64.cos(), epsilon = 1e-14);
    }

    #[test]
    fn hermitian_check() {
        let mut c = vec![Complex64::new(0.0, 0.0); 16];
        c[1] = Complex64::new(1.0, 1.0);
        assert!(SpectralField::new(p(1.0, 1), c.clone()).is_err());
        c[15] = Complex64::new(1.0, -1.0);
        let s = SpectralField::new(p(1.0, 1), c).unwrap();
        let f = inverse_transform(&s);
        assert_relative_eq!(f.values()[0], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn elliptic_constant_and_single_mode() {
        let (hh, hp) = solve_elliptic(&AngularField::constant(p(0.7, 2), 64, 3.0).unwrap()).unwrap();
        assert!(hh.values().iter().all(|v| (v - 0.75).abs() < 1e-14));
        assert!(hp.values().iter().all(|v| v.abs() < 1e-14));

        // h = cos(kθ) physical → H = Re(e^{ikθ}/d(k)) for k a multiple of m
        for &(beta, m, k) in &[(1.0, 1, 3), (0.3, 2, 4), (-2.0, 3, 6)] {
            let params = p(beta, m);
            let f = AngularField::from_fn(params, 128, |t| (k as f64 * t).cos()).unwrap();
            let (hh, hp) = solve_elliptic(&f).unwrap();
            let d = multiplier(beta, k as f64);
            for (i, t) in f.grid().into_iter().enumerate() {
                let e = Complex64::from_polar(1.0, k as f64 * t);
                assert_relative_eq!(hh.values()[i], (d * e).re, epsilon = 1e-14);
                let de = Complex64::new(0.0, k as f64) * e;
                assert_relative_eq!(hp.values()[i], (d * de).re, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn elliptic_residual_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(beta, m) in &[(1.0, 1), (0.1, 1), (5.0, 2), (-0.5, 3)] {
            let params = p(beta, m);
            let solver = EllipticSolver::new(params, 256).unwrap();
            for _ in 0..5 {
                let h = smooth_random(params, 256, &mut rng);
                let s = solver.solve(&h).unwrap();
                let res = (0..256)
                    .map(|i| {
                        (4.0 * s.big_h[i] - 4.0 * beta * s.hp[i] + (1.0 + beta * beta) * s.hpp[i] - h.values()[i]).abs()
                    })
                    .fold(0.0, f64::max);
                assert!(res <= 1e-10 * h.sup_norm(), "{beta} {m}: {res}");
            }
        }
    }

    #[test]
    fn convolution_matches_kernel_quadrature() {
        for &(beta, m) in &[(1.0, 1), (0.5, 2), (3.0, 1)] {
            let params = p(beta, m);
            let k = Kernel::new(params);
            let per = params.period();
            let mm = m as f64;
            let hfun = move |t: f64| (mm * t).sin().exp() + 0.3 * (2.0 * mm * t).cos();
            let h = AngularField::from_fn(params, 128, hfun).unwrap();
            let (hh, _) = solve_elliptic(&h).unwrap();
            for i in (0..128).step_by(9) {
                let t = h.theta(i);
                let brk = [params.reduce(t)];
                let direct = integrate_piecewise(&|s| k.value_continuous(t - s) * hfun(s), 0.0, per, &brk, 1e-12);
                assert!((direct.value - hh.values()[i]).abs() < 1e-9, "{beta} {m} {t}");
            }
        }
    }

    #[test]
    fn lipschitz_bound_from_l1() {
        let params = p(1.0, 1);
        let k = Kernel::new(params);
        let c = (1..2000)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 2000.0;
                k.value(t).unwrap().abs() + k.deriv(t).unwrap().abs()
            })
            .fold(0.0, f64::max);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let h = smooth_random(params, 256, &mut rng);
            let (hh, hp) = solve_elliptic(&h).unwrap();
            let lhs = hh.sup_norm().max(hp.sup_norm());
            assert!(lhs <= c * h.lp_norm(1.0) * (1.0 + 1e-6));
        }
    }

    #[test]
    fn diagnostics_examples() {
        let d = diagnostics(&AngularField::constant(p(1.0, 1), 64, 1.5).unwrap()).unwrap();
        assert_relative_eq!(d.intensity, 3.0 * PI, max_relative = 1e-14);
        assert!(d.dissipation.abs() < 1e-28);

        // cos θ, β=1: dissipation = 8β · 2π · 2|i Ĥ₁|² with Ĥ₁ = ½/d(1)
        let d = diagnostics(&AngularField::from_fn(p(1.0, 1), 64, f64::cos).unwrap()).unwrap();
        let h1 = multiplier(1.0, 1.0) * 0.5;
        assert_relative_eq!(d.dissipation, 8.0 * 2.0 * PI * 2.0 * h1.norm_sqr(), max_relative = 1e-13);
        assert_relative_eq!(d.lp(2.0).unwrap(), PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(d.lp(f64::INFINITY).unwrap(), 1.0, max_relative = 1e-13);

        // m-fold: the full-circle integral of a bump replicated m times
        let params = p(2.0, 3);
        let bump = AngularField::from_fn(params, 256, |t| (-(t - 1.0).powi(2) * 40.0).exp()).unwrap();
        let d = diagnostics(&bump).unwrap();
        assert!(d.dissipation > 0.0);
        assert_relative_eq!(d.intensity, 3.0 * (PI / 40.0).sqrt(), max_relative = 1e-6);
        assert_relative_eq!(d.l1(), d.intensity, max_relative = 1e-6);
    }

    #[test]
    fn dissipation_matches_grid_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = p(0.8, 2);
        let h = smooth_random(params, 128, &mut rng);
        let (_, hp) = solve_elliptic(&h).unwrap();
        let grid = hp.values().iter().map(|v| v * v).sum::<f64>() * 2.0 * PI / 128.0;
        let d = diagnostics(&h).unwrap();
        assert_relative_eq!(d.dissipation, 8.0 * 0.8 * grid, max_relative = 1e-12);
    }

    #[test]
    fn hminus_examples() {
        let params = p(1.0, 1);
        assert_eq!(hminus_norm(&AngularField::constant(params, 32, 0.0).unwrap(), 1.0).unwrap(), 0.0);
        let c = hminus_norm(&AngularField::constant(params, 32, -2.0).unwrap(), 0.5).unwrap();
        assert_relative_eq!(c, 2.0 * (2.0 * PI).sqrt(), max_relative = 1e-14);
        let f = AngularField::from_fn(params, 64, |t| (8.0 * t).cos()).unwrap();
        let got = hminus_norm(&f, 1.0).unwrap();
        assert_relative_eq!(got, (1.0f64 / 65.0).sqrt() * PI.sqrt(), max_relative = 1e-13);
        assert!(hminus_norm(&f, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_and_parseval(vals in proptest::collection::vec(-10.0f64..10.0, 64), m in 1u32..4) {
            let f = AngularField::new(p(1.0, m), vals).unwrap();
            let s = transform(&f).unwrap();
            let back = inverse_transform(&s);
            let scale = f.sup_norm().max(1e-300);
            for (a, b) in f.values().iter().zip(back.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * scale);
            }
            let grid_energy = f.values().iter().map(|v| v * v).sum::<f64>() * 2.0 * PI / 64.0;
            prop_assert!((s.energy() - grid_energy).abs() <= 1e-12 * grid_energy.max(1e-300));
        }

        #[test]
        fn dissipation_sign_follows_beta(beta in prop_oneof![-5.0f64..-0.01, 0.01f64..5.0], a in -1.0f64..1.0, b in 0.1f64..1.0) {
            let f = AngularField::from_fn(p(beta, 1), 64, |t| a + b * (2.0 * t).sin()).unwrap();
            let d = diagnostics(&f).unwrap();
            prop_assert!(d.dissipation * beta.signum() > 0.0);
        }
    }
}
