//! Time integration of `∂t h + 2H ∂θ h = 0`.
//!
//! Two schemes share the [`Stepper`]:
//!
//! * semi-Lagrangian (default): midpoint characteristics with a
//!   predictor-corrector velocity, cubic Lagrange interpolation of `2H` at
//!   departure points and monotone Hermite interpolation of `h`. Every new
//!   value is a convex-like combination bounded by its two neighbours, so the
//!   discrete maximum principle holds exactly.
//! * spectral RK4 with two-thirds dealiasing, for smooth-data cross-checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{hminus_norm, AngularField, Diagnostics, EllipticSolver};
use crate::kernel::SpiralParams;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    SemiLagrangian,
    SpectralRk4,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi_lagrangian" | "sl" => Ok(Method::SemiLagrangian),
            "spectral_rk4" | "rk4" => Ok(Method::SpectralRk4),
            other => Err(Error::InvalidArgument(format!(
                "unknown method {other:?} (expected semi_lagrangian or spectral_rk4)"
            ))),
        }
    }
}

/// Scale-free blow-up monitor.
///
/// Trips when the running mean `(1/max(t,1)) ∫₀ᵗ ‖h‖_{L¹}` exceeds
/// `l1_factor · ‖h₀‖_{L¹}`, or when `max|h|` exceeds `sup_factor · max|h₀|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupGuard {
    pub l1_factor: f64,
    pub sup_factor: f64,
}

impl Default for BlowupGuard {
    fn default() -> Self {
        Self { l1_factor: 50.0, sup_factor: 1e6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    /// Upper bound on the adaptive step.
    pub dt: f64,
    pub t_end: f64,
    pub cfl: f64,
    /// Snapshot cadence in time units; steps are clipped to land on every
    /// multiple. Zero keeps only the initial and final states.
    pub record_every: f64,
    pub method: Method,
    pub guard: BlowupGuard,
    /// Relative `H^{-1}` oscillation below which a completed run is
    /// reported as homogenised.
    pub homogenized_tol: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            t_end: 1.0,
            cfl: 0.5,
            record_every: 0.0,
            method: Method::SemiLagrangian,
            guard: BlowupGuard::default(),
            homogenized_tol: 1e-3,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidArgument(format!("{what} = {v} is invalid")));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", self.dt);
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end", self.t_end);
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad("cfl", self.cfl);
        }
        if !(self.record_every >= 0.0 && self.record_every.is_finite()) {
            return bad("record_every", self.record_every);
        }
        if !(self.guard.l1_factor > 1.0 && self.guard.sup_factor > 1.0) {
            return bad("guard factor", self.guard.l1_factor.min(self.guard.sup_factor));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    BlowupSuspected,
    Homogenized,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardReason {
    L1TimeIntegral,
    SupNorm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuardTrip {
    pub time: f64,
    pub reason: GuardReason,
}

/// Output of [`run`]. `times`/`diag` hold every accepted step; `states`
/// holds snapshots at `snapshot_times`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub params: SpiralParams,
    pub method: Method,
    pub times: Vec<f64>,
    pub diag: Vec<Diagnostics>,
    pub snapshot_times: Vec<f64>,
    pub states: Vec<AngularField>,
    pub outcome: Outcome,
    pub guard: Option<GuardTrip>,
}

impl Trajectory {
    pub fn initial_state(&self) -> &AngularField {
        &self.states[0]
    }

    pub fn final_state(&self) -> &AngularField {
        self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory always holds t = 0")
    }

    /// Step sizes between consecutive recorded times.
    pub fn steps(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// State at `t` if `t` is a snapshot time.
    pub fn state_at(&self, t: f64) -> Option<&AngularField> {
        self.snapshot_times.iter().position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0)).map(|i| &self.states[i])
    }
}

/// Cubic Lagrange interpolation of periodic samples at fractional index `x`.
#[inline]
fn lagrange4(v: &[f64], x: f64) -> f64 {
    let n = v.len() as i64;
    let j = x.floor();
    let s = x - j;
    let j = j as i64;
    let at = |o: i64| v[(j + o).rem_euclid(n) as usize];
    let wm = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let w0 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let w1 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let w2 = (s + 1.0) * s * (s - 1.0) / 6.0;
    wm * at(-1) + w0 * at(0) + w1 * at(1) + w2 * at(2)
}

/// Fourth-order slopes (per cell) with the monotone limiter: zero at
/// discrete extrema, clipped to three times the smaller one-sided
/// difference otherwise.
fn limited_slopes(h: &[f64]) -> Vec<f64> {
    let n = h.len();
    (0..n)
        .map(|i| {
            let at = |o: isize| h[(i as isize + o).rem_euclid(n as isize) as usize];
            let dm = at(0) - at(-1);
            let dp = at(1) - at(0);
            if dm * dp <= 0.0 {
                return 0.0;
            }
            let d = (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / 12.0;
            if d * dp <= 0.0 {
                return 0.0;
            }
            let lim = 3.0 * dm.abs().min(dp.abs());
            d.signum() * d.abs().min(lim)
        })
        .collect()
}

#[inline]
fn hermite(h: &[f64], slopes: &[f64], x: f64) -> f64 {
    let n = h.len() as i64;
    let j = x.floor();
    let s = x - j;
    let j0 = (j as i64).rem_euclid(n) as usize;
    let j1 = (j0 + 1) % h.len();
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let v = h00 * h[j0] + h10 * slopes[j0] + h01 * h[j1] + h11 * slopes[j1];
    // guard against rounding just outside the cell's range
    let (lo, hi) = if h[j0] <= h[j1] { (h[j0], h[j1]) } else { (h[j1], h[j0]) };
    v.clamp(lo, hi)
}

/// Reusable stepping machinery for one `(β, m, n, method)`.
#[derive(Clone, Debug)]
pub struct Stepper {
    solver: EllipticSolver,
    method: Method,
    dealias: Vec<f64>,
}

impl Stepper {
    pub fn new(params: SpiralParams, n: usize, method: Method) -> Result<Self> {
        let solver = EllipticSolver::new(params, n)?;
        let cut = n / 3;
        let dealias = (0..n)
            .map(|k| {
                let kk = if k <= n / 2 { k } else { n - k };
                if kk <= cut {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self { solver, method, dealias })
    }

    pub fn solver(&self) -> &EllipticSolver {
        &self.solver
    }

    pub fn method(&self) -> Method {
        self.method
    }

    fn dtheta(&self) -> f64 {
        self.solver.params().period() / self.solver.n() as f64
    }

    /// `cfl · Δθ / max|2H|` for the given samples.
    pub fn max_dt(&self, h: &[f64], cfl: f64) -> f64 {
        let (big_h, _) = self.solver.velocity(h);
        let vmax = big_h.iter().fold(0.0f64, |a, v| a.max(2.0 * v.abs()));
        if vmax == 0.0 {
            f64::INFINITY
        } else {
            cfl * self.dtheta() / vmax
        }
    }

    /// Advances by `dt`, checking `dt` against the Courant limit with
    /// Courant number one.
    pub fn step(&self, h: &AngularField, dt: f64) -> Result<AngularField> {
        let max_dt = self.max_dt(h.values(), 1.0);
        if !(dt > 0.0) || dt > max_dt * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, max_dt });
        }
        let out = self.advance(h.values(), dt);
        AngularField::new(h.params(), out)
    }

    fn advance(&self, h: &[f64], dt: f64) -> Vec<f64> {
        match self.method {
            Method::SemiLagrangian => self.sl_step(h, dt),
            Method::SpectralRk4 => self.rk4_step(h, dt),
        }
    }

    fn departure_advect(&self, h: &[f64], v: &[f64], dt: f64) -> Vec<f64> {
        let dx = self.dtheta();
        let c = dt / dx;
        let slopes = limited_slopes(h);
        (0..h.len())
            .map(|i| {
                let xi = i as f64;
                let mid = xi - 0.5 * c * v[i];
                let xd = xi - c * lagrange4(v, mid);
                hermite(h, &slopes, xd)
            })
            .collect()
    }

    fn sl_step(&self, h: &[f64], dt: f64) -> Vec<f64> {
        let (big_h, _) = self.solver.velocity(h);
        let v0: Vec<f64> = big_h.iter().map(|x| 2.0 * x).collect();
        let pred = self.departure_advect(h, &v0, dt);
        let (big_h1, _) = self.solver.velocity(&pred);
        let vmid: Vec<f64> = v0.iter().zip(&big_h1).map(|(a, b)| 0.5 * (a + 2.0 * b)).collect();
        self.departure_advect(h, &vmid, dt)
    }

    fn rk4_rhs(&self, hat: &[Complex64]) -> Vec<Complex64> {
        let fft = self.solver.fft();
        let big_h = fft.inverse(&self.solver.apply(hat));
        let dh: Vec<Complex64> = hat.iter().zip(self.solver.ik()).map(|(a, b)| a * b).collect();
        let dh = fft.inverse(&dh);
        let prod: Vec<f64> = big_h.iter().zip(&dh).map(|(a, b)| -2.0 * a * b).collect();
        fft.forward(&prod).into_iter().zip(&self.dealias).map(|(c, m)| c * *m).collect()
    }

    fn rk4_step(&self, h: &[f64], dt: f64) -> Vec<f64> {
        let fft = self.solver.fft();
        let y: Vec<Complex64> = fft.forward(h).into_iter().zip(&self.dealias).map(|(c, m)| c * *m).collect();
        let axpy = |a: &[Complex64], k: &[Complex64], s: f64| -> Vec<Complex64> {
            a.iter().zip(k).map(|(x, y)| x + y * s).collect()
        };
        let k1 = self.rk4_rhs(&y);
        let k2 = self.rk4_rhs(&axpy(&y, &k1, 0.5 * dt));
        let k3 = self.rk4_rhs(&axpy(&y, &k2, 0.5 * dt));
        let k4 = self.rk4_rhs(&axpy(&y, &k3, dt));
        let next: Vec<Complex64> =
            (0..y.len()).map(|i| y[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0)).collect();
        fft.inverse(&next)
    }
}

/// One step of size `dt` (rejected above the Courant limit).
pub fn step(h: &AngularField, dt: f64, method: Method) -> Result<AngularField> {
    Stepper::new(h.params(), h.n(), method)?.step(h, dt)
}

/// Integrates from `h0` to `cfg.t_end` or until the guard trips.
pub fn run(h0: &AngularField, cfg: &EvolutionConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let params = h0.params();
    let stepper = Stepper::new(params, h0.n(), cfg.method)?;
    let solver = stepper.solver();

    let d0 = solver.diagnostics(h0)?;
    let l1_0 = d0.l1();
    let sup_0 = h0.sup_norm();
    let mut traj = Trajectory {
        params,
        method: cfg.method,
        times: vec![0.0],
        diag: vec![d0],
        snapshot_times: vec![0.0],
        states: vec![h0.clone()],
        outcome: Outcome::Completed,
        guard: None,
    };

    let mut h = h0.values().to_vec();
    let mut t = 0.0;
    let mut l1_int = 0.0;
    let mut next_record = if cfg.record_every > 0.0 { cfg.record_every } else { f64::INFINITY };
    let t_tol = 1e-12 * cfg.t_end.max(1.0);

    while t < cfg.t_end - t_tol {
        let mut dt = stepper.max_dt(&h, cfg.cfl).min(cfg.dt).min(cfg.t_end - t);
        let mut recording = false;
        if next_record <= t + dt + t_tol && next_record < cfg.t_end - t_tol {
            dt = next_record - t;
            recording = true;
        }
        let next = stepper.advance(&h, dt);
        if let Some(i) = next.iter().position(|v| !v.is_finite()) {
            let _ = i;
            return Err(Error::Aborted(Box::new(traj)));
        }
        t = if t + dt >= cfg.t_end - t_tol { cfg.t_end } else { t + dt };
        h = next;
        let field = AngularField::new(params, h.clone())?;
        let mut d = solver.diagnostics(&field)?;
        l1_int += 0.5 * dt * (traj.diag.last().map(|p| p.l1()).unwrap_or(0.0) + d.l1());
        d.l1_time_integral = l1_int;
        traj.times.push(t);
        traj.diag.push(d);
        if recording {
            traj.snapshot_times.push(t);
            traj.states.push(field.clone());
            next_record += cfg.record_every;
        }

        let reason = if l1_int > cfg.guard.l1_factor * t.max(1.0) * l1_0 && l1_0 > 0.0 {
            Some(GuardReason::L1TimeIntegral)
        } else if field.sup_norm() > cfg.guard.sup_factor * sup_0 && sup_0 > 0.0 {
            Some(GuardReason::SupNorm)
        } else {
            None
        };
        if let Some(reason) = reason {
            traj.guard = Some(GuardTrip { time: t, reason });
            traj.outcome = Outcome::BlowupSuspected;
            if !recording {
                traj.snapshot_times.push(t);
                traj.states.push(field);
            }
            return Ok(traj);
        }
        if t >= cfg.t_end && !recording {
            traj.snapshot_times.push(t);
            traj.states.push(field);
        }
    }

    let last = traj.final_state();
    let mean = last.integral() / (2.0 * PI);
    let osc = hminus_norm(&last.map(|v| v - mean)?, 1.0)?;
    let mean0 = h0.integral() / (2.0 * PI);
    let osc0 = hminus_norm(&h0.map(|v| v - mean0)?, 1.0)?;
    if osc <= cfg.homogenized_tol * osc0 || osc0 <= 1e-13 * h0.sup_norm() {
        traj.outcome = Outcome::Homogenized;
    }
    Ok(traj)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyTolerances {
    /// Sobolev index of the weak norm.
    pub a: f64,
    /// Absolute `H^{-a}` threshold for convergence.
    pub hminus_tol: f64,
    /// `‖h‖_{L²}` growth factor flagged as infinite-time blow-up.
    pub growth_factor: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        Self { a: 1.0, hminus_tol: 1e-2, growth_factor: 1e3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum LongTimeClass {
    Converged { i_plus: f64 },
    FiniteBlowup,
    InfiniteBlowup,
    Undecided,
}

/// Heuristic reading of a finished trajectory into the three long-time
/// scenarios. Anything not clearly one of them is `Undecided`.
pub fn classify_longtime(traj: &Trajectory, tol: &ClassifyTolerances) -> Result<LongTimeClass> {
    if traj.outcome == Outcome::BlowupSuspected {
        return Ok(LongTimeClass::FiniteBlowup);
    }
    let first = &traj.diag[0];
    let last = traj.diag.last().expect("non-empty");
    let l2_0 = first.lp(2.0).unwrap_or(0.0);
    let l2_t = last.lp(2.0).unwrap_or(0.0);
    if l2_0 > 0.0 && l2_t > tol.growth_factor * l2_0 {
        return Ok(LongTimeClass::InfiniteBlowup);
    }
    let i_plus = last.intensity;
    let h = traj.final_state();
    let dev = hminus_norm(&h.map(|v| v - i_plus / (2.0 * PI))?, tol.a)?;
    if dev < tol.hminus_tol {
        Ok(LongTimeClass::Converged { i_plus })
    } else {
        Ok(LongTimeClass::Undecided)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p(beta: f64, m: u32) -> SpiralParams {
        SpiralParams::new(beta, m).unwrap()
    }

    fn bump(params: SpiralParams, n: usize) -> AngularField {
        AngularField::from_fn(params, n, |t| 0.5 + (-(t - 2.0).powi(2) * 4.0).exp()).unwrap()
    }

    #[test]
    fn lagrange_reproduces_cubics() {
        let v: Vec<f64> = (0..32).map(|i| (i as f64).powi(3) * 1e-3 - i as f64).collect();
        let x = 10.37;
        assert_relative_eq!(lagrange4(&v, x), x.powi(3) * 1e-3 - x, max_relative = 1e-12);
    }

    #[test]
    fn hermite_stays_in_cell_range() {
        let h: Vec<f64> = (0..64).map(|i| if (20..30).contains(&i) { 1.0 } else { 0.0 }).collect();
        let s = limited_slopes(&h);
        for k in 0..640 {
            let v = hermite(&h, &s, k as f64 / 10.0);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn constants_are_steady() {
        for method in [Method::SemiLagrangian, Method::SpectralRk4] {
            let h = AngularField::constant(p(1.0, 1), 64, 2.0).unwrap();
            let max_dt = Stepper::new(h.params(), 64, method).unwrap().max_dt(h.values(), 1.0);
            let out = step(&h, 0.9 * max_dt, method).unwrap();
            for v in out.values() {
                assert!((v - 2.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cfl_violation_reports_admissible_dt() {
        let h = bump(p(1.0, 1), 64);
        match step(&h, 10.0, Method::SemiLagrangian) {
            Err(Error::Cfl { dt, max_dt }) => {
                assert_eq!(dt, 10.0);
                assert!(max_dt > 0.0 && max_dt < 10.0);
            }
            other => panic!("expected CFL error, got {other:?}"),
        }
    }

    #[test]
    fn one_step_decreases_intensity() {
        for method in [Method::SemiLagrangian, Method::SpectralRk4] {
            let h = bump(p(1.0, 1), 256);
            let st = Stepper::new(h.params(), 256, method).unwrap();
            let dt = st.max_dt(h.values(), 0.5);
            let d0 = st.solver().diagnostics(&h).unwrap();
            let h1 = st.step(&h, dt).unwrap();
            let d1 = st.solver().diagnostics(&h1).unwrap();
            let predicted = -0.5 * dt * (d0.dissipation + d1.dissipation);
            assert!(d1.intensity < d0.intensity);
            let err = (d1.intensity - d0.intensity - predicted).abs();
            assert!(err < 1e-4 * dt, "{method:?}: {err} vs dt {dt}");
        }
    }

    fn self_convergence(method: Method, n: usize) -> (f64, f64) {
        let params = p(1.0, 1);
        let h = AngularField::from_fn(params, n, |t| t.sin() + 0.5 * (2.0 * t).cos()).unwrap();
        let st = Stepper::new(params, n, method).unwrap();
        let diff = |dt: f64| {
            let one = st.step(&h, dt).unwrap();
            let half = st.step(&st.step(&h, dt / 2.0).unwrap(), dt / 2.0).unwrap();
            one.values().iter().zip(half.values()).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
        };
        let dt = 0.4 * st.max_dt(h.values(), 1.0);
        (diff(dt), diff(dt / 2.0))
    }

    #[test]
    fn richardson_orders() {
        // one step vs two half steps: local error O(dt^3) for the
        // second-order scheme, O(dt^5) for RK4
        let (a, b) = self_convergence(Method::SpectralRk4, 64);
        assert!(a / b > 16.0, "rk4 ratio {}", a / b);
        let (a, b) = self_convergence(Method::SemiLagrangian, 1024);
        assert!(a / b > 3.5, "sl ratio {}", a / b);
    }

    #[test]
    fn run_constant_data_is_steady_and_homogenized() {
        let h = AngularField::constant(p(1.0, 2), 32, 0.7).unwrap();
        let cfg = EvolutionConfig { t_end: 2.0, dt: 0.25, ..Default::default() };
        let traj = run(&h, &cfg).unwrap();
        assert_eq!(traj.outcome, Outcome::Homogenized);
        for d in &traj.diag {
            assert_relative_eq!(d.intensity, 1.4 * PI, max_relative = 1e-14);
        }
        let class = classify_longtime(&traj, &ClassifyTolerances::default()).unwrap();
        match class {
            LongTimeClass::Converged { i_plus } => assert_relative_eq!(i_plus, 1.4 * PI, max_relative = 1e-14),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn snapshots_land_on_cadence() {
        let h = bump(p(1.0, 1), 64);
        let cfg = EvolutionConfig { t_end: 1.0, dt: 0.03, record_every: 0.25, ..Default::default() };
        let traj = run(&h, &cfg).unwrap();
        assert_eq!(traj.snapshot_times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert!(traj.state_at(0.5).is_some());
    }

    #[test]
    fn methods_agree_on_smooth_data() {
        let params = p(1.0, 1);
        let n = 1024;
        let h = AngularField::from_fn(params, n, |t| 0.3 * t.cos() + 0.2 * (2.0 * t).sin()).unwrap();
        let base = EvolutionConfig { t_end: 1.0, dt: 0.01, cfl: 0.4, ..Default::default() };
        let sl = run(&h, &base).unwrap();
        let rk = run(&h, &EvolutionConfig { method: Method::SpectralRk4, ..base }).unwrap();
        let l2 =
            sl.final_state().values().iter().zip(rk.final_state().values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                * 2.0
                * PI
                / n as f64;
        assert!(l2.sqrt() < 1e-4, "L2 difference {}", l2.sqrt());
    }

    #[test]
    fn lp_growth_bound() {
        let params = p(1.0, 1);
        let h = bump(params, 256);
        let traj = run(&h, &EvolutionConfig { t_end: 2.0, ..Default::default() }).unwrap();
        for pexp in [1.0, 2.0] {
            for w in traj.diag.windows(2).zip(traj.steps()) {
                let ((a, b), dt) = ((&w.0[0], &w.0[1]), w.1);
                let rate = (b.lp(pexp).unwrap() - a.lp(pexp).unwrap()) / dt;
                let bound = 2.0 / pexp * a.hp_sup.max(b.hp_sup) * a.lp(pexp).unwrap().max(b.lp(pexp).unwrap());
                assert!(rate <= bound * 1.01 + 1e-6, "p={pexp}: {rate} > {bound}");
            }
        }
    }

    #[test]
    fn negative_beta_indicator_fills_circle() {
        let params = p(-1.0, 1);
        let n = 512;
        let h = AngularField::from_fn(params, n, |t| {
            0.5 * (1.0 + ((t - 2.0) * 20.0).tanh()) * 0.5 * (1.0 + ((4.0 - t) * 20.0).tanh())
        })
        .unwrap();
        let traj = run(&h, &EvolutionConfig { t_end: 30.0, dt: 0.1, ..Default::default() }).unwrap();
        let i: Vec<f64> = traj.diag.iter().map(|d| d.intensity).collect();
        assert!(i.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(*i.last().unwrap() > 0.9 * 2.0 * PI, "{}", i.last().unwrap());
    }

    #[test]
    fn guard_trips_on_factor() {
        let params = p(1.0, 1);
        // a narrow negative bump: the sheet limit blows up at 2 tanh(π)
        let neg = AngularField::from_fn(params, 1024, |t| {
            let x = (t - PI) / 0.1;
            if x.abs() < 1.0 {
                -5.0 * (1.0 - x * x)
            } else {
                0.0
            }
        })
        .unwrap();
        let cfg = EvolutionConfig {
            t_end: 4.0,
            guard: BlowupGuard { l1_factor: 1.5, sup_factor: 1e6 },
            ..Default::default()
        };
        let traj = run(&neg, &cfg).unwrap();
        assert_eq!(traj.outcome, Outcome::BlowupSuspected);
        let trip = traj.guard.unwrap();
        assert_eq!(trip.reason, GuardReason::L1TimeIntegral);
        assert!(trip.time < 4.0);
        assert_eq!(traj.final_time(), trip.time);
        // the same data with positive mass only loses L1
        let pos = neg.map(|v| -v).unwrap();
        assert_eq!(run(&pos, &cfg).unwrap().outcome, Outcome::Completed);
        let sup = EvolutionConfig { guard: BlowupGuard { l1_factor: 50.0, sup_factor: 1.0 + 1e-12 }, ..cfg };
        assert!(sup.validate().is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn max_principle_holds(seed_a in -1.0f64..1.0, seed_b in -1.0f64..1.0, beta in prop_oneof![-3.0f64..-0.2, 0.2f64..3.0], m in 1u32..3) {
            let params = p(beta, m);
            let mm = m as f64;
            let h = AngularField::from_fn(params, 128, |t| {
                seed_a * (mm * t).cos() + seed_b * (2.0 * mm * t).sin() + if (mm * t).sin() > 0.6 { 1.0 } else { 0.0 }
            }).unwrap();
            let (lo, hi) = (h.min(), h.max());
            let traj = run(&h, &EvolutionConfig { t_end: 1.0, dt: 0.1, record_every: 0.5, ..Default::default() }).unwrap();
            for s in &traj.states {
                prop_assert!(s.min() >= lo - 1e-12 && s.max() <= hi + 1e-12);
            }
        }
    }
}
