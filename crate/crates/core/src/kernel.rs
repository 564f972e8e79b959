//! The elliptic kernel `K^m_β`.
//!
//! `K^m_β` is the Green function of `4 − 4β∂θ + (1+β²)∂θ²` on the circle of
//! length `2π/m`, so that `H = K^m_β * h` solves the elliptic problem for
//! m-fold symmetric `h`. On the open fundamental domain `(0, 2π/m)` it has
//! the closed form
//!
//! ```text
//! K(θ) = ¼ Re[ exp(c (θ − π/m)) / sin(w) ],   c = 2(β − i)/(1+β²),
//!                                             w = 2π(1 + iβ)/(m(1+β²)),
//! ```
//!
//! which coincides with `Σ_{j<m} K¹_β(θ + 2πj/m)` and with the inverse
//! Fourier transform of the multiplier `1/(4 − 4βin − (1+β²)n²)` restricted
//! to multiples of `m`. `K` is continuous and periodic; `K'` jumps by
//! `1/(1+β²)` across every lattice point `2πk/m`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate_piecewise;

/// Spiral pitch `β` and fold symmetry `m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpiralParams {
    beta: f64,
    m: u32,
}

impl SpiralParams {
    pub fn new(beta: f64, m: u32) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::NonFiniteBeta(beta));
        }
        if beta == 0.0 {
            return Err(Error::ZeroBeta);
        }
        if m == 0 {
            return Err(Error::InvalidFold);
        }
        Ok(Self { beta, m })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Length `2π/m` of the fundamental domain.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.m as f64
    }

    /// Same pitch, different symmetry.
    pub fn with_m(&self, m: u32) -> Result<Self> {
        Self::new(self.beta, m)
    }

    /// Reduces `theta` to the representative in `[0, 2π/m)`.
    pub fn reduce(&self, theta: f64) -> f64 {
        let p = self.period();
        let r = theta.rem_euclid(p);
        // snap values within rounding of the lattice onto 0
        let tol = 4.0 * f64::EPSILON * p.max(theta.abs());
        if r <= tol || p - r <= tol {
            0.0
        } else {
            r
        }
    }

    /// Signed representative of `theta` in `[−π/m, π/m)`.
    pub fn wrap_symmetric(&self, theta: f64) -> f64 {
        let p = self.period();
        let r = self.reduce(theta);
        if r >= 0.5 * p {
            r - p
        } else {
            r
        }
    }
}

/// Values of the kernel at the singular lattice point `θ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundaryData {
    /// `K(0)`; the kernel itself is continuous.
    pub k0: f64,
    /// Symmetric average `(K'(0+) + K'(0−))/2`.
    pub kp0: f64,
    /// `K'(0+) − K'(0−)`, equal to `1/(1+β²)` for every `m`.
    pub jump: f64,
}

/// Even/odd split of the kernel about `θ = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OddEvenSplit {
    pub even: f64,
    pub odd: f64,
    /// Derivative of the odd part; continuous across `θ = 0`.
    pub odd_deriv: f64,
}

/// Regime selector for [`kernel_asymptotic`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AsymptoticRegime {
    SmallBeta,
    LargeBeta,
}

/// Closed-form evaluator for `K^m_β` with the complex constants cached.
#[derive(Clone, Copy, Debug)]
pub struct Kernel {
    params: SpiralParams,
    /// `2(β − i)/(1+β²)`: the exponential rate, also `d/dθ` of the phase.
    rate: Complex64,
    /// `1/sin(w)`.
    inv_sin: Complex64,
    /// `cot(w)`.
    cot: Complex64,
}

impl Kernel {
    pub fn new(params: SpiralParams) -> Self {
        let b = params.beta;
        let m = params.m as f64;
        let denom = 1.0 + b * b;
        let rate = Complex64::new(2.0 * b / denom, -2.0 / denom);
        let w = Complex64::new(1.0, b) * (2.0 * PI / (m * denom));
        let s = w.sin();
        Self { params, rate, inv_sin: s.inv(), cot: w.cos() / s }
    }

    pub fn params(&self) -> SpiralParams {
        self.params
    }

    #[inline]
    fn phase(&self, r: f64) -> Complex64 {
        (self.rate * (r - 0.5 * self.params.period())).exp() * self.inv_sin
    }

    fn reduce_open(&self, theta: f64) -> Result<f64> {
        let r = self.params.reduce(theta);
        if r == 0.0 {
            Err(Error::OnSingularity { theta })
        } else {
            Ok(r)
        }
    }

    /// `K(θ)` for `θ` off the lattice `2πk/m`.
    pub fn value(&self, theta: f64) -> Result<f64> {
        let r = self.reduce_open(theta)?;
        Ok(0.25 * self.phase(r).re)
    }

    /// `K'(θ)` for `θ` off the lattice.
    pub fn deriv(&self, theta: f64) -> Result<f64> {
        let r = self.reduce_open(theta)?;
        Ok(0.25 * (self.rate * self.phase(r)).re)
    }

    /// `K''(θ)` for `θ` off the lattice.
    pub fn second_deriv(&self, theta: f64) -> Result<f64> {
        let r = self.reduce_open(theta)?;
        Ok(0.25 * (self.rate * self.rate * self.phase(r)).re)
    }

    /// `K(θ)` everywhere; on the lattice this is the continuous value `K(0)`.
    #[inline]
    pub fn value_continuous(&self, theta: f64) -> f64 {
        let r = self.params.reduce(theta);
        if r == 0.0 {
            self.k0()
        } else {
            0.25 * self.phase(r).re
        }
    }

    /// `K'(θ)` everywhere, with the symmetric average on the lattice.
    #[inline]
    pub fn deriv_averaged(&self, theta: f64) -> f64 {
        let r = self.params.reduce(theta);
        if r == 0.0 {
            self.kp0()
        } else {
            0.25 * (self.rate * self.phase(r)).re
        }
    }

    /// `K''(θ)` off the lattice; on the lattice returns the average of the
    /// one-sided limits (the distributional part is dropped).
    pub fn second_deriv_averaged(&self, theta: f64) -> f64 {
        let r = self.params.reduce(theta);
        if r == 0.0 {
            let (a, b) = self.one_sided_second_derivs();
            0.5 * (a + b)
        } else {
            0.25 * (self.rate * self.rate * self.phase(r)).re
        }
    }

    fn k0(&self) -> f64 {
        0.25 * self.cot.re
    }

    fn kp0(&self) -> f64 {
        let b = self.params.beta;
        (Complex64::new(b, -1.0) * self.cot).re / (2.0 * (1.0 + b * b))
    }

    /// Boundary data from the complex-cotangent formulas.
    pub fn boundary(&self) -> KernelBoundaryData {
        let b = self.params.beta;
        KernelBoundaryData { k0: self.k0(), kp0: self.kp0(), jump: 1.0 / (1.0 + b * b) }
    }

    /// `(K'(0+), K'(2π/m −))` from the closed form. Exposed for testing;
    /// dynamics only ever uses the averaged value.
    pub fn one_sided_derivs(&self) -> (f64, f64) {
        let p = self.params.period();
        let plus = 0.25 * (self.rate * self.phase(0.0)).re;
        let minus = 0.25 * (self.rate * self.phase(p)).re;
        (plus, minus)
    }

    fn one_sided_second_derivs(&self) -> (f64, f64) {
        let p = self.params.period();
        let r2 = self.rate * self.rate;
        (0.25 * (r2 * self.phase(0.0)).re, 0.25 * (r2 * self.phase(p)).re)
    }

    /// Even/odd parts about `0` for `θ` in `[−π/m, π/m]`.
    pub fn odd_even(&self, theta: f64) -> Result<OddEvenSplit> {
        let half = 0.5 * self.params.period();
        if !(theta.abs() <= half) {
            return Err(Error::InvalidArgument(format!(
                "theta = {theta} outside the symmetric interval [-{half}, {half}]"
            )));
        }
        let kp = self.value_continuous(theta);
        let km = self.value_continuous(-theta);
        let dp = self.deriv_averaged(theta);
        let dm = self.deriv_averaged(-theta);
        Ok(OddEvenSplit { even: 0.5 * (kp + km), odd: 0.5 * (kp - km), odd_deriv: 0.5 * (dp + dm) })
    }

    /// Residual of `4K − 4βK' + (1+β²)K''` at an off-lattice point.
    pub fn ode_residual(&self, theta: f64) -> Result<f64> {
        let b = self.params.beta;
        let k = self.value(theta)?;
        let kp = self.deriv(theta)?;
        let kpp = self.second_deriv(theta)?;
        Ok(4.0 * k - 4.0 * b * kp + (1.0 + b * b) * kpp)
    }
}

/// `K^m_β(θ)` for `θ` off the lattice `2πk/m`.
pub fn kernel_eval(params: SpiralParams, theta: f64) -> Result<f64> {
    Kernel::new(params).value(theta)
}

/// `K^m_β'(θ)` for `θ` off the lattice.
pub fn kernel_deriv(params: SpiralParams, theta: f64) -> Result<f64> {
    Kernel::new(params).deriv(theta)
}

pub fn kernel_boundary(params: SpiralParams) -> KernelBoundaryData {
    Kernel::new(params).boundary()
}

pub fn kernel_odd_even(params: SpiralParams, theta: f64) -> Result<OddEvenSplit> {
    Kernel::new(params).odd_even(theta)
}

/// Leading-order expansions of `K¹_β` for small and large `β`.
///
/// * small β: `−sin(2θ)/(8πβ)`; the remainder is `O(1)`, so only the
///   relative error vanishes (like `β`).
/// * large β: `1/(8π) + (2π−θ)θ/(4πβ²)`; this omits the constant
///   `−π/(6β²)`, so the absolute error is `O(β⁻²)`.
pub fn kernel_asymptotic(params: SpiralParams, theta: f64, regime: AsymptoticRegime) -> Result<f64> {
    if params.m != 1 {
        return Err(Error::AsymptoticFold(params.m));
    }
    let b = params.beta;
    let th = params.reduce(theta);
    Ok(match regime {
        AsymptoticRegime::SmallBeta => -(2.0 * th).sin() / (8.0 * PI * b),
        AsymptoticRegime::LargeBeta => 1.0 / (8.0 * PI) + (2.0 * PI - th) * th / (4.0 * PI * b * b),
    })
}

/// Residuals of the quadratic kernel identities, each evaluated by
/// piecewise Gauss-Legendre quadrature over one period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// `∫(K')² − 4/(1+β²)∫K² + K(0)/(1+β²)`.
    pub energy: f64,
    /// `∫(K')² + 4/(1+β²)∫K² − K(0)/(1+β²)`; nonzero in general, kept for
    /// comparison with the sign-flipped form of the energy identity.
    pub energy_flipped: f64,
    /// `K'(0) + 4β∫(K')²`.
    pub kp0: f64,
    /// Largest `|K'(a) + K'(−a) + 4β∫K'(θ)(K'(θ+a) + K'(θ−a))|` over the
    /// sampled shifts `a`.
    pub shifted: f64,
}

impl IdentityResiduals {
    /// Largest of the residuals that vanish exactly.
    pub fn max_abs(&self) -> f64 {
        self.energy.abs().max(self.kp0.abs()).max(self.shifted.abs())
    }
}

/// Evaluates [`IdentityResiduals`] with `shifts` equispaced shifts
/// `a ∈ (0, 2π/m)`, offset so none lands on the lattice.
pub fn identity_residuals(params: SpiralParams, shifts: usize) -> IdentityResiduals {
    let k = Kernel::new(params);
    let b = params.beta;
    let per = params.period();
    let quad = |f: &dyn Fn(f64) -> f64, breaks: &[f64]| integrate_piecewise(&f, 0.0, per, breaks, 1e-13).value;
    let bd = k.boundary();
    let dk2 = quad(&|t| k.deriv_averaged(t).powi(2), &[]);
    let k2 = quad(&|t| k.value_continuous(t).powi(2), &[]);
    let c = 1.0 + b * b;
    let mut shifted: f64 = 0.0;
    for i in 1..=shifts {
        let a = per * (i as f64 - 0.5) / shifts as f64;
        let f = |t: f64| k.deriv_averaged(t) * (k.deriv_averaged(t + a) + k.deriv_averaged(t - a));
        let brk = [params.reduce(a), params.reduce(-a)];
        let lhs = k.deriv_averaged(a) + k.deriv_averaged(-a);
        let r = lhs + 4.0 * b * quad(&f, &brk);
        if r.abs() > shifted.abs() {
            shifted = r;
        }
    }
    IdentityResiduals {
        energy: dk2 - 4.0 / c * k2 + bd.k0 / c,
        energy_flipped: dk2 + 4.0 / c * k2 - bd.k0 / c,
        kp0: bd.kp0 + 4.0 * b * dk2,
        shifted,
    }
}

/// Fourier multiplier `1/(4 − 4βin − (1+β²)n²)` at a physical wavenumber.
#[inline]
pub fn multiplier(beta: f64, n: f64) -> Complex64 {
    Complex64::new(4.0 - (1.0 + beta * beta) * n * n, -4.0 * beta * n).inv()
}
