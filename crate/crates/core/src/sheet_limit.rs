//! Sheet limit: mollify a Dirac configuration, transport the smooth field
//! and compare window masses and centres of mass with the sheet ODE.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirac::{integrate, DiracConfig, DiracOptions};
use crate::error::{invalid, Error, Result};
use crate::field::AngularField;
use crate::kernel::SpiralParams;
use crate::quadrature::GaussLegendre;
use crate::transport::{run, EvolutionConfig, Method, Outcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierShape {
    /// `1/(2ε)` on `(−ε, ε)`.
    Patch,
    /// `C exp(−1/(1 − (θ/ε)²))`.
    #[default]
    SmoothBump,
}

impl std::str::FromStr for MollifierShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "patch" => Ok(Self::Patch),
            "smooth_bump" | "bump" => Ok(Self::SmoothBump),
            _ => Err(invalid(format!("unknown mollifier shape `{s}` (expected patch or smooth_bump)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub shape: MollifierShape,
    /// Half-width of the support.
    pub epsilon: f64,
}

impl MollifierSpec {
    pub fn new(shape: MollifierShape, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid(format!("epsilon = {epsilon} must be positive")));
        }
        Ok(Self { shape, epsilon })
    }

    /// Smallest grid size accepted by [`mollify`].
    pub fn min_grid(&self) -> usize {
        (64.0 / self.epsilon).ceil() as usize
    }

    /// Errors with [`Error::Resolution`] unless `n ≥ 64/ε`.
    pub fn check_grid(&self, n: usize) -> Result<()> {
        let required = 64.0 / self.epsilon;
        if (n as f64) < required {
            return Err(Error::Resolution { n, required });
        }
        Ok(())
    }
}

fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

/// Cell averages of the unit-mass profile over `[a, b]` in units of `ε`.
fn cell_average(shape: MollifierShape, a: f64, b: f64, gl: &GaussLegendre) -> f64 {
    let (lo, hi) = (a.max(-1.0), b.min(1.0));
    if hi <= lo {
        return 0.0;
    }
    match shape {
        MollifierShape::Patch => 0.5 * (hi - lo) / (b - a),
        MollifierShape::SmoothBump => gl.integrate(&bump, lo, hi) / (b - a),
    }
}

/// Replaces every atom by `I_j φ^ε(θ − θ_j)` sampled as cell averages, so
/// each window carries exactly the mass `I_j` on the reduced period.
pub fn mollify(cfg: &DiracConfig, spec: &MollifierSpec, n: usize) -> Result<AngularField> {
    spec.check_grid(n)?;
    let params = cfg.params();
    let p = params.period();
    if 2.0 * spec.epsilon >= p {
        return Err(Error::OverlappingSupports(0, 0));
    }
    let atoms = cfg.atoms();
    for i in 0..atoms.len() {
        for j in i + 1..atoms.len() {
            if params.wrap_symmetric(atoms[i].theta - atoms[j].theta).abs() <= 2.0 * spec.epsilon {
                return Err(Error::OverlappingSupports(i, j));
            }
        }
    }
    let dx = p / n as f64;
    let gl = GaussLegendre::new(12);
    let mut values = vec![0.0; n];
    for atom in cfg.atoms() {
        let mut profile = vec![0.0; n];
        let reach = (spec.epsilon / dx).ceil() as i64 + 1;
        let centre = (atom.theta / dx).round() as i64;
        for k in centre - reach..=centre + reach {
            let x = (k as f64 * dx - atom.theta) / spec.epsilon;
            let half = 0.5 * dx / spec.epsilon;
            let avg = cell_average(spec.shape, x - half, x + half, &gl);
            profile[k.rem_euclid(n as i64) as usize] += avg / spec.epsilon;
        }
        // exact discrete normalisation
        let mass: f64 = profile.iter().sum::<f64>() * dx;
        for (v, q) in values.iter_mut().zip(&profile) {
            *v += atom.intensity * q / mass;
        }
    }
    AngularField::new(params, values)
}

/// Angular window `[centre − half_width, centre + half_width]` on the reduced
/// circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub centre: f64,
    pub half_width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractedAtom {
    /// Centre of mass, continuous across the reduced period around the window centre.
    pub theta: f64,
    pub intensity: f64,
    /// `|mass| < min_mass`: the support has left the window.
    pub low_mass: bool,
    /// `|h|` at the outermost window cells exceeds `1e-8 · sup|h|`.
    pub touches_edge: bool,
}

/// Window masses and mass-weighted mean angles.
pub fn extract_atoms(h: &AngularField, windows: &[Window], min_mass: f64) -> Result<Vec<ExtractedAtom>> {
    let params = h.params();
    let p = params.period();
    for (i, a) in windows.iter().enumerate() {
        if !(a.half_width > 0.0 && 2.0 * a.half_width < p) {
            return Err(invalid(format!("window {i} has invalid half-width {}", a.half_width)));
        }
        for (j, b) in windows.iter().enumerate().skip(i + 1) {
            if params.wrap_symmetric(a.centre - b.centre).abs() < a.half_width + b.half_width {
                return Err(invalid(format!("windows {i} and {j} overlap")));
            }
        }
    }
    let dx = h.dtheta();
    let n = h.n() as i64;
    let v = h.values();
    let sup = h.sup_norm();
    Ok(windows
        .iter()
        .map(|w| {
            let lo = ((w.centre - w.half_width) / dx).ceil() as i64;
            let hi = ((w.centre + w.half_width) / dx).floor() as i64;
            let mut mass = 0.0;
            let mut moment = 0.0;
            for k in lo..=hi {
                let hv = v[k.rem_euclid(n) as usize];
                mass += hv;
                moment += hv * (k as f64 * dx - w.centre);
            }
            let edge = v[lo.rem_euclid(n) as usize].abs().max(v[hi.rem_euclid(n) as usize].abs());
            let intensity = mass * dx;
            ExtractedAtom {
                theta: w.centre + if mass != 0.0 { moment / mass } else { 0.0 },
                intensity,
                low_mass: intensity.abs() < min_mass,
                touches_edge: edge > 1e-8 * sup,
            }
        })
        .collect())
}

/// Windows of half-width one third of the minimal gap around every atom.
pub fn default_windows(cfg: &DiracConfig) -> Vec<Window> {
    let half_width = if cfg.len() > 1 { cfg.min_gap() / 3.0 } else { cfg.params().period() / 3.0 };
    cfg.atoms().iter().map(|a| Window { centre: a.theta, half_width }).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyOptions {
    pub shape: MollifierShape,
    /// Grid size used for every `ε`; must satisfy `n ≥ 64/ε`.
    pub n: usize,
    pub sample_every: f64,
    pub method: Method,
    pub cfl: f64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            shape: MollifierShape::SmoothBump,
            n: 4096,
            sample_every: 0.05,
            method: Method::SemiLagrangian,
            cfl: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub t: f64,
    pub theta_eps: Vec<f64>,
    pub intensity_eps: Vec<f64>,
    pub theta_dirac: Vec<f64>,
    pub intensity_dirac: Vec<f64>,
    /// `ΣI_eps − ∫h` over the reduced period.
    pub mass_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRun {
    pub epsilon: f64,
    pub n: usize,
    pub angle_error: f64,
    pub intensity_error: f64,
    pub samples: Vec<SampleRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Fitted order `q` in `error ≈ C ε^q`.
    pub order: f64,
    pub constant: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub params: SpiralParams,
    pub t_end: f64,
    pub runs: Vec<EpsilonRun>,
    pub angle_rate: RateFit,
    pub intensity_rate: RateFit,
}

impl ConvergenceReport {
    /// Each halving of `ε` does not increase either error beyond `1 + slack`.
    pub fn monotone(&self, slack: f64) -> bool {
        self.runs.windows(2).all(|w| {
            w[1].angle_error <= (1.0 + slack) * w[0].angle_error
                && w[1].intensity_error <= (1.0 + slack) * w[0].intensity_error
        })
    }
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_rate(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(invalid("rate fit needs at least two positive points"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let order = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit { order, constant: (my - order * mx).exp(), r_squared })
}

/// Evolves one mollified field and tracks its windows against the sheet ODE.
pub fn run_epsilon(cfg: &DiracConfig, spec: &MollifierSpec, t_end: f64, opts: &StudyOptions) -> Result<EpsilonRun> {
    let params = cfg.params();
    let h0 = mollify(cfg, spec, opts.n)?;
    let dirac = integrate(cfg, t_end, &DiracOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() })?;
    if let Some(ev) = dirac.event {
        return Err(invalid(format!("t_end = {t_end} is past a sheet singularity at t = {}", ev.time())));
    }
    let evo = EvolutionConfig {
        dt: opts.sample_every,
        t_end,
        cfl: opts.cfl,
        record_every: opts.sample_every,
        method: opts.method,
        ..Default::default()
    };
    let traj = run(&h0, &evo)?;
    if traj.outcome == Outcome::BlowupSuspected {
        return Err(invalid(format!("smooth run tripped the blow-up guard at t = {}", traj.final_time())));
    }
    let k = cfg.len();
    let mut windows = default_windows(cfg);
    let min_mass = 1e-3 * cfg.atoms().iter().map(|a| a.intensity.abs()).fold(f64::INFINITY, f64::min);
    let mut samples = Vec::with_capacity(traj.states.len());
    let (mut angle_error, mut intensity_error) = (0.0f64, 0.0f64);
    for (&t, state) in traj.snapshot_times.iter().zip(&traj.states) {
        let atoms = extract_atoms(state, &windows, min_mass)?;
        if let Some(j) = atoms.iter().position(|a| a.low_mass || a.touches_edge) {
            return Err(invalid(format!("support of atom {j} left its window at t = {t}")));
        }
        let y = dirac.eval(t).expect("sample times lie inside the sheet trajectory");
        let mut theta_dirac = Vec::with_capacity(k);
        for (j, a) in atoms.iter().enumerate() {
            let dth = params.wrap_symmetric(a.theta - y[k + j]);
            angle_error = angle_error.max(dth.abs());
            intensity_error = intensity_error.max((a.intensity - y[j]).abs());
            theta_dirac.push(a.theta - dth);
            windows[j].centre = params.reduce(a.theta);
        }
        let total: f64 = atoms.iter().map(|a| a.intensity).sum();
        samples.push(SampleRow {
            t,
            theta_eps: atoms.iter().map(|a| a.theta).collect(),
            intensity_eps: atoms.iter().map(|a| a.intensity).collect(),
            theta_dirac,
            intensity_dirac: y[..k].to_vec(),
            mass_defect: total - state.values().iter().sum::<f64>() * state.dtheta(),
        });
    }
    Ok(EpsilonRun { epsilon: spec.epsilon, n: opts.n, angle_error, intensity_error, samples })
}

/// Runs every `ε` concurrently and fits `error ≈ C ε^q` for angles and
/// intensities.
pub fn convergence_study(
    cfg: &DiracConfig,
    eps_list: &[f64],
    t_end: f64,
    opts: &StudyOptions,
) -> Result<ConvergenceReport> {
    if eps_list.len() < 2 || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("eps_list must hold at least two strictly decreasing values"));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(invalid(format!("t_end = {t_end} must be positive")));
    }
    let specs: Vec<MollifierSpec> =
        eps_list.iter().map(|&e| MollifierSpec::new(opts.shape, e)).collect::<Result<_>>()?;
    for s in &specs {
        s.check_grid(opts.n)?;
    }
    let runs: Vec<EpsilonRun> = specs.par_iter().map(|s| run_epsilon(cfg, s, t_end, opts)).collect::<Result<_>>()?;
    let eps: Vec<f64> = runs.iter().map(|r| r.epsilon).collect();
    let ang: Vec<f64> = runs.iter().map(|r| r.angle_error.max(f64::MIN_POSITIVE)).collect();
    let int: Vec<f64> = runs.iter().map(|r| r.intensity_error.max(f64::MIN_POSITIVE)).collect();
    Ok(ConvergenceReport {
        params: cfg.params(),
        t_end,
        angle_rate: fit_rate(&eps, &ang)?,
        intensity_rate: fit_rate(&eps, &int)?,
        runs,
    })
}

/// Measure of `{θ : |h(θ)| > threshold}` on the reduced period.
pub fn support_length(h: &AngularField, threshold: f64) -> f64 {
    h.values().iter().filter(|v| v.abs() > threshold).count() as f64 * h.dtheta()
}
