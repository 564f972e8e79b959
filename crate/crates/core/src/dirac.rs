//! Logarithmic vortex sheets: `h = Σ_j I_j δ(θ − θ_j)` evolving by
//!
//! ```text
//! dI_j/dt = 2 H'(θ_j) I_j,    dθ_j/dt = 2 H(θ_j),
//! H(θ_j)  = Σ_ℓ I_ℓ K(θ_j − θ_ℓ),   H'(θ_j) = Σ_ℓ I_ℓ K'(θ_j − θ_ℓ),
//! ```
//!
//! where the self term of `H'` uses the averaged `K'(0)`. For m-fold data
//! the atoms live on the reduced domain and `K = K^m_β` accounts for the
//! images.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, SpiralParams};
use crate::ode::{dp45, Control, OdeEnd, OdeOptions, Segment};
use crate::quadrature::integrate_piecewise;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub intensity: f64,
    pub theta: f64,
}

impl Atom {
    pub fn new(intensity: f64, theta: f64) -> Self {
        Self { intensity, theta }
    }
}

/// A finite sheet configuration with pairwise distinct angles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiracConfig {
    params: SpiralParams,
    atoms: Vec<Atom>,
}

fn circular_gap(params: &SpiralParams, a: f64, b: f64) -> f64 {
    params.wrap_symmetric(a - b).abs()
}

impl DiracConfig {
    /// Validates and normalises angles into `[0, 2π/m)`.
    pub fn new(params: SpiralParams, atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidArgument("a sheet needs at least one atom".into()));
        }
        let mut atoms = atoms;
        for a in &mut atoms {
            if !a.intensity.is_finite() || !a.theta.is_finite() {
                return Err(Error::InvalidArgument(format!("atom {a:?} is not finite")));
            }
            a.theta = params.reduce(a.theta);
        }
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                if circular_gap(&params, atoms[i].theta, atoms[j].theta) == 0.0 {
                    return Err(Error::CoincidentAtoms(i, j));
                }
            }
        }
        Ok(Self { params, atoms })
    }

    pub fn params(&self) -> SpiralParams {
        self.params
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_intensity(&self) -> f64 {
        self.atoms.iter().map(|a| a.intensity).sum()
    }

    /// Smallest circular distance between two atoms; `2π/m` for one atom.
    pub fn min_gap(&self) -> f64 {
        min_gap(&self.params, &self.atoms.iter().map(|a| a.theta).collect::<Vec<_>>())
    }

    /// `(H(θ_j), H'(θ_j))` with the averaged self-interaction.
    pub fn sheet_velocity(&self, j: usize) -> Result<(f64, f64)> {
        if j >= self.atoms.len() {
            return Err(Error::AtomIndex { index: j, len: self.atoms.len() });
        }
        let k = Kernel::new(self.params);
        Ok(velocity_at(&k, &self.atoms, j))
    }

    /// `(dI_j/dt, dθ_j/dt)` for every atom.
    pub fn rhs(&self) -> Vec<(f64, f64)> {
        let k = Kernel::new(self.params);
        (0..self.atoms.len())
            .map(|j| {
                let (hj, hpj) = velocity_at(&k, &self.atoms, j);
                (2.0 * hpj * self.atoms[j].intensity, 2.0 * hj)
            })
            .collect()
    }

    /// Both sides of the circulation identity on the reduced domain.
    pub fn total_intensity_rate(&self) -> IntensityRate {
        let k = Kernel::new(self.params);
        let direct: f64 =
            (0..self.atoms.len()).map(|j| 2.0 * velocity_at(&k, &self.atoms, j).1 * self.atoms[j].intensity).sum();
        // −8β∫(H')² = Σ_{jℓ} I_j I_ℓ [K'(θ_j−θ_ℓ) + K'(θ_ℓ−θ_j)]
        let mut identity = 0.0;
        for a in &self.atoms {
            for b in &self.atoms {
                let d = a.theta - b.theta;
                identity += a.intensity * b.intensity * (k.deriv_averaged(d) + k.deriv_averaged(-d));
            }
        }
        let beta = self.params.beta();
        IntensityRate { direct, identity, dissipation_integral: -identity / (8.0 * beta) }
    }

    /// `∫₀^{2π/m} (H')²` by Gauss–Legendre quadrature split at the atoms;
    /// independent of the kernel identities.
    pub fn dissipation_quadrature(&self, tol: f64) -> f64 {
        let k = Kernel::new(self.params);
        let breaks: Vec<f64> = self.atoms.iter().map(|a| a.theta).collect();
        let hp = |t: f64| -> f64 {
            self.atoms.iter().map(|a| a.intensity * k.deriv_averaged(t - a.theta)).sum::<f64>().powi(2)
        };
        integrate_piecewise(&hp, 0.0, self.params.period(), &breaks, tol).value
    }
}

/// See [`DiracConfig::total_intensity_rate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityRate {
    /// `Σ_j dI_j/dt` from the equations of motion.
    pub direct: f64,
    /// `−8β ∫(H')²` evaluated through the kernel identities.
    pub identity: f64,
    /// `∫₀^{2π/m} (H')²` implied by the identity.
    pub dissipation_integral: f64,
}

fn min_gap(params: &SpiralParams, thetas: &[f64]) -> f64 {
    let mut g = params.period();
    for i in 0..thetas.len() {
        for j in i + 1..thetas.len() {
            g = g.min(circular_gap(params, thetas[i], thetas[j]));
        }
    }
    g
}

fn velocity_at(k: &Kernel, atoms: &[Atom], j: usize) -> (f64, f64) {
    let tj = atoms[j].theta;
    let mut h = 0.0;
    let mut hp = 0.0;
    for a in atoms {
        let d = tj - a.theta;
        h += a.intensity * k.value_continuous(d);
        hp += a.intensity * k.deriv_averaged(d);
    }
    (h, hp)
}

/// State layout: `[I_0..I_{N-1}, θ_0..θ_{N-1}]` with unwrapped angles.
fn ode_rhs(k: &Kernel, y: &[f64], dy: &mut [f64]) {
    let n = y.len() / 2;
    let (int, th) = y.split_at(n);
    for j in 0..n {
        let mut h = 0.0;
        let mut hp = 0.0;
        for l in 0..n {
            let d = th[j] - th[l];
            h += int[l] * k.value_continuous(d);
            hp += int[l] * k.deriv_averaged(d);
        }
        dy[j] = 2.0 * hp * int[j];
        dy[n + j] = 2.0 * h;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiracOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Collision threshold on the smallest circular gap, radians.
    pub gap_tol: f64,
    /// Escape fires once `β ΣI < −escape_factor · |β| · Σ|I_j(0)|`.
    pub escape_factor: f64,
    /// Overflow fires once some `|I_j| > overflow_factor · max(Σ|I_j(0)|, 1)`.
    pub overflow_factor: f64,
    pub max_steps: usize,
}

impl Default for DiracOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, gap_tol: 1e-6, escape_factor: 1e4, overflow_factor: 1e8, max_steps: 2_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiracEvent {
    Collision { t: f64, i: usize, j: usize, gap: f64 },
    RiccatiEscape { t: f64, sum_intensity: f64 },
    Overflow { t: f64, index: usize, intensity: f64 },
    Stiff { t: f64 },
    MaxSteps { t: f64 },
}

impl DiracEvent {
    pub fn time(&self) -> f64 {
        match *self {
            DiracEvent::Collision { t, .. }
            | DiracEvent::RiccatiEscape { t, .. }
            | DiracEvent::Overflow { t, .. }
            | DiracEvent::Stiff { t }
            | DiracEvent::MaxSteps { t } => t,
        }
    }

    /// Collision, escape and overflow are singular; the rest are solver
    /// failures.
    pub fn is_singular(&self) -> bool {
        matches!(self, DiracEvent::Collision { .. } | DiracEvent::RiccatiEscape { .. } | DiracEvent::Overflow { .. })
    }
}

/// Accepted steps with dense output and the terminating event, if any.
#[derive(Clone, Debug)]
pub struct DiracTrajectory {
    pub params: SpiralParams,
    pub n_atoms: usize,
    pub times: Vec<f64>,
    /// `[I.., θ..]` per accepted step, angles unwrapped.
    pub states: Vec<Vec<f64>>,
    pub event: Option<DiracEvent>,
    /// Pole of the linear fit of `1/|ΣI|` near an escape/overflow event.
    pub blowup_time: Option<f64>,
    segments: Vec<Segment>,
}

impl DiracTrajectory {
    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    pub fn intensities(&self, step: usize) -> &[f64] {
        &self.states[step][..self.n_atoms]
    }

    pub fn thetas(&self, step: usize) -> &[f64] {
        &self.states[step][self.n_atoms..]
    }

    pub fn sum_intensity(&self, step: usize) -> f64 {
        self.intensities(step).iter().sum()
    }

    /// Dense-output state at `t` inside the integrated interval.
    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        if t < self.times[0] || t > self.final_time() {
            return None;
        }
        if t == self.times[0] {
            return Some(self.states[0].clone());
        }
        let idx = self.segments.partition_point(|s| s.t1() < t);
        self.segments.get(idx).map(|s| s.eval(t))
    }

    /// Configuration at step `i` (angles reduced).
    pub fn config(&self, step: usize) -> Result<DiracConfig> {
        let atoms = self.intensities(step).iter().zip(self.thetas(step)).map(|(&i, &t)| Atom::new(i, t)).collect();
        DiracConfig::new(self.params, atoms)
    }
}

/// Linear least-squares fit of `1/|S|` against `t` over the tail where `|S|`
/// exceeds a twentieth of its final value; returns the zero crossing.
fn fit_pole(times: &[f64], sums: &[f64]) -> Option<f64> {
    let s_end = sums.last()?.abs();
    let pts: Vec<(f64, f64)> =
        times.iter().zip(sums).filter(|(_, s)| s.abs() >= 0.05 * s_end).map(|(&t, s)| (t, 1.0 / s.abs())).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mr = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mr)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 || sxy >= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(mt - mr / slope)
}

/// Integrates the sheet ODE with adaptive DP5(4) until `t_end` or an event.
pub fn integrate(cfg0: &DiracConfig, t_end: f64, opts: &DiracOptions) -> Result<DiracTrajectory> {
    integrate_from(cfg0, 0.0, t_end, opts)
}

/// As [`integrate`], starting the clock at `t0`.
pub fn integrate_from(cfg0: &DiracConfig, t0: f64, t_end: f64, opts: &DiracOptions) -> Result<DiracTrajectory> {
    if !(t_end > t0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("t_end = {t_end} must exceed t0 = {t0}")));
    }
    let params = cfg0.params;
    let k = Kernel::new(params);
    let n = cfg0.len();
    let y0: Vec<f64> = cfg0.atoms.iter().map(|a| a.intensity).chain(cfg0.atoms.iter().map(|a| a.theta)).collect();
    let beta = params.beta();
    let l1_0: f64 = cfg0.atoms.iter().map(|a| a.intensity.abs()).sum();
    let escape_level = -opts.escape_factor * beta.abs() * l1_0;
    let overflow = opts.overflow_factor * l1_0.max(1.0);

    let mut traj = DiracTrajectory {
        params,
        n_atoms: n,
        times: vec![t0],
        states: vec![y0.clone()],
        event: None,
        blowup_time: None,
        segments: Vec::new(),
    };
    let ode_opts = OdeOptions { rtol: opts.rtol, atol: opts.atol, max_steps: opts.max_steps, ..Default::default() };
    let mut event = None;
    let end = dp45(
        |_, y, dy| ode_rhs(&k, y, dy),
        t0,
        &y0,
        t_end,
        &ode_opts,
        |seg, y| {
            let t = seg.t1();
            traj.times.push(t);
            traj.states.push(y.to_vec());
            traj.segments.push(seg.clone());
            let (int, th) = y.split_at(n);
            for i in 0..n {
                for j in i + 1..n {
                    let gap = circular_gap(&params, th[i], th[j]);
                    if gap < opts.gap_tol {
                        event = Some(DiracEvent::Collision { t, i, j, gap });
                        return Control::Stop;
                    }
                }
            }
            let s: f64 = int.iter().sum();
            if beta * s < escape_level {
                event = Some(DiracEvent::RiccatiEscape { t, sum_intensity: s });
                return Control::Stop;
            }
            if let Some((index, &v)) = int.iter().enumerate().find(|(_, v)| v.abs() > overflow) {
                event = Some(DiracEvent::Overflow { t, index, intensity: v });
                return Control::Stop;
            }
            Control::Continue
        },
    );
    let t_last = traj.final_time();
    traj.event = match end {
        OdeEnd::StepUnderflow => Some(DiracEvent::Stiff { t: t_last }),
        OdeEnd::MaxSteps => Some(DiracEvent::MaxSteps { t: t_last }),
        _ => event,
    };
    if matches!(
        traj.event,
        Some(DiracEvent::RiccatiEscape { .. }) | Some(DiracEvent::Overflow { .. }) | Some(DiracEvent::Stiff { .. })
    ) {
        let sums: Vec<f64> = (0..traj.times.len()).map(|i| traj.sum_intensity(i)).collect();
        traj.blowup_time = fit_pole(&traj.times, &sums);
    }
    Ok(traj)
}

/// Closed-form single m-fold orbit: `(I(t), θ(t) − θ(0))`.
///
/// `I = I₀/(1 − 2K'(0) I₀ t)` and `θ − θ₀ = −(K(0)/K'(0)) ln(1 − 2K'(0) I₀ t)`.
pub fn mfold_orbit(params: SpiralParams, i0: f64, t: f64) -> Result<(f64, f64)> {
    let b = Kernel::new(params).boundary();
    let q = 1.0 - 2.0 * b.kp0 * i0 * t;
    if q <= 0.0 {
        return Err(Error::PastPole { t, pole: 1.0 / (2.0 * b.kp0 * i0) });
    }
    Ok((i0 / q, -(b.k0 / b.kp0) * q.ln()))
}
