//! Self-similar sheets: `I_j(t) = A_j/t` with fixed gaps and a common
//! logarithmic drift `θ_j(t) = θ_j + c ln t`.
//!
//! Substituting into the sheet equations gives, for every atom,
//!
//! ```text
//! −1 = 2 Σ_ℓ A_ℓ K'(θ_j − θ_ℓ),      c = 2 Σ_ℓ A_ℓ K(θ_j − θ_ℓ),
//! ```
//!
//! so the drifts must agree. For two atoms the solvability of this linear
//! system in `(A_1, A_2, 1)` reduces to the scalar condition `F(β, d) = 0`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirac::{mfold_orbit, Atom, DiracConfig};
use crate::error::{invalid, Error, Result};
use crate::kernel::{Kernel, SpiralParams};

/// `(I(t), θ(t) − θ(0))` for a single m-fold orbit; rejects `t` at or past
/// the pole `1/(2K'(0) I₀)`.
pub fn mfold_closed_form(i0: f64, t: f64, params: SpiralParams) -> Result<(f64, f64)> {
    mfold_orbit(params, i0, t)
}

/// Pole time of the m-fold orbit, if the data blows up.
pub fn mfold_pole(i0: f64, params: SpiralParams) -> Option<f64> {
    let q = 2.0 * Kernel::new(params).boundary().kp0 * i0;
    (q > 0.0).then(|| 1.0 / q)
}

fn require_m1(params: &SpiralParams) -> Result<()> {
    if params.m() != 1 {
        return Err(invalid(format!("non-symmetric branches are computed with m = 1 (got m = {})", params.m())));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoDiracResidual {
    pub f: f64,
    pub a1: f64,
    pub a2: f64,
    /// False when the 2×2 amplitude system is singular; `a1`, `a2` are NaN.
    pub solvable: bool,
}

/// Evaluates `F(β, d)` and the amplitudes for atoms at `θ₁ = d`, `θ₂ = 0`.
pub fn two_dirac_residual(params: SpiralParams, d: f64) -> Result<TwoDiracResidual> {
    require_m1(&params)?;
    if !(d > 0.0 && d <= PI) {
        return Err(invalid(format!("gap d = {d} must lie in (0, pi]")));
    }
    let k = Kernel::new(params);
    Ok(two_dirac_with(&k, d))
}

fn two_dirac_with(k: &Kernel, d: f64) -> TwoDiracResidual {
    let bd = k.boundary();
    let (k0, kp0) = (bd.k0, bd.kp0);
    let kd = k.value_continuous(d);
    let kmd = k.value_continuous(-d);
    let kpd = k.deriv_averaged(d);
    let kpmd = k.deriv_averaged(-d);
    let f = k0 * (kpmd - kpd) + kd * (kp0 - kpmd) + kmd * (kpd - kp0);
    let det = 4.0 * (kp0 * kp0 - kpd * kpmd);
    let scale = 4.0 * (kp0 * kp0 + (kpd * kpmd).abs());
    if det.abs() <= 1e-14 * scale {
        return TwoDiracResidual { f, a1: f64::NAN, a2: f64::NAN, solvable: false };
    }
    // [2K'(0) 2K'(d); 2K'(−d) 2K'(0)] (A1, A2) = (−1, −1)
    let a1 = (-2.0 * kp0 + 2.0 * kpd) / det;
    let a2 = (-2.0 * kp0 + 2.0 * kpmd) / det;
    TwoDiracResidual { f, a1, a2, solvable: true }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoDiracRoot {
    pub d: f64,
    pub a1: f64,
    pub a2: f64,
    pub f: f64,
}

/// Width of the window around `d = π` excluded from bracketing.
pub const SYMMETRIC_EXCLUSION: f64 = 1e-6;

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Roots of `F(β, ·)` in `[d_lo, d_hi] ⊂ (0, π]` by sign changes on an
/// `n_seeds` grid refined by bisection to `1e-12`. The symmetric root
/// `d = π` is appended only when `include_symmetric` is set.
pub fn find_roots(
    params: SpiralParams,
    d_lo: f64,
    d_hi: f64,
    n_seeds: usize,
    include_symmetric: bool,
) -> Result<Vec<TwoDiracRoot>> {
    require_m1(&params)?;
    if !(d_lo > 0.0 && d_hi <= PI && d_lo < d_hi) || n_seeds < 2 {
        return Err(invalid(format!("invalid root search range [{d_lo}, {d_hi}] with {n_seeds} seeds")));
    }
    let k = Kernel::new(params);
    let f = |d: f64| two_dirac_with(&k, d).f;
    let hi = d_hi.min(PI - SYMMETRIC_EXCLUSION);
    let grid: Vec<f64> = (0..n_seeds).map(|i| d_lo + (hi - d_lo) * i as f64 / (n_seeds - 1) as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&d| f(d)).collect();
    let mut roots = Vec::new();
    for i in 0..n_seeds - 1 {
        let (a, b) = (vals[i], vals[i + 1]);
        if a == 0.0 {
            roots.push(grid[i]);
        } else if a * b < 0.0 {
            roots.push(bisect(f, grid[i], grid[i + 1], a));
        }
    }
    if include_symmetric && d_hi >= PI {
        roots.push(PI);
    }
    Ok(roots
        .into_iter()
        .map(|d| {
            let r = two_dirac_with(&k, d);
            TwoDiracRoot { d, a1: r.a1, a2: r.a2, f: r.f }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub beta: f64,
    pub n_roots: usize,
    pub roots: Vec<f64>,
    /// Continued non-symmetric branch point, if any.
    pub branch: Option<TwoDiracRoot>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationScan {
    pub rows: Vec<BranchRow>,
    /// Largest scanned `β` with an interior root.
    pub beta0_est: Option<f64>,
    /// Smallest scanned `β` without one.
    pub beta1_est: Option<f64>,
}

/// Interior-root counts over `betas` (evaluated in parallel) and the
/// non-symmetric branch `d(β)` followed by warm-started bisection.
pub fn bifurcation_scan(betas: &[f64], n_seeds: usize) -> Result<BifurcationScan> {
    let params: Vec<SpiralParams> = betas.iter().map(|&b| SpiralParams::new(b, 1)).collect::<Result<_>>()?;
    let counts: Vec<Vec<TwoDiracRoot>> =
        params.par_iter().map(|p| find_roots(*p, 1e-3, PI, n_seeds, false)).collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(betas.len());
    let mut prev: Option<f64> = None;
    for (p, roots) in params.iter().zip(&counts) {
        let k = Kernel::new(*p);
        let branch = match prev {
            Some(d0) => continue_branch(&k, d0).or_else(|| nearest(roots, d0)),
            None => roots.first().copied(),
        };
        prev = branch.map(|b| b.d).or(prev);
        rows.push(BranchRow {
            beta: p.beta(),
            n_roots: roots.len(),
            roots: roots.iter().map(|r| r.d).collect(),
            branch: if roots.is_empty() { None } else { branch },
        });
    }
    let beta0_est = rows
        .iter()
        .filter(|r| r.n_roots > 0)
        .map(|r| r.beta)
        .fold(None, |a: Option<f64>, b| Some(a.map_or(b, |a| a.max(b))));
    let beta1_est = rows
        .iter()
        .filter(|r| r.n_roots == 0)
        .map(|r| r.beta)
        .fold(None, |a: Option<f64>, b| Some(a.map_or(b, |a| a.min(b))));
    Ok(BifurcationScan { rows, beta0_est, beta1_est })
}

fn nearest(roots: &[TwoDiracRoot], d0: f64) -> Option<TwoDiracRoot> {
    roots.iter().min_by(|a, b| (a.d - d0).abs().partial_cmp(&(b.d - d0).abs()).unwrap()).copied()
}

/// Brackets a root near `d0`, widening the window geometrically.
fn continue_branch(k: &Kernel, d0: f64) -> Option<TwoDiracRoot> {
    let f = |d: f64| two_dirac_with(k, d).f;
    let cap = PI - SYMMETRIC_EXCLUSION;
    let mut w = 0.02;
    while w < PI {
        let lo = (d0 - w).max(1e-3);
        let hi = (d0 + w).min(cap);
        let n = 16;
        let mut best: Option<f64> = None;
        let mut prev = (lo, f(lo));
        for i in 1..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            let fx = f(x);
            if prev.1 * fx < 0.0 {
                let r = bisect(f, prev.0, x, prev.1);
                if best.is_none_or(|b| (r - d0).abs() < (b - d0).abs()) {
                    best = Some(r);
                }
            }
            prev = (x, fx);
        }
        if let Some(d) = best {
            let r = two_dirac_with(k, d);
            return Some(TwoDiracRoot { d, a1: r.a1, a2: r.a2, f: r.f });
        }
        w *= 2.0;
    }
    None
}

/// Residual of the M-atom self-similar system (length `2M − 1`): the `M`
/// amplitude equations `1 + 2Σ_ℓ A_ℓ K'(θ_j − θ_ℓ)` followed by the `M − 1`
/// drift differences `H_j − H_1`.
pub fn general_m_residual(params: SpiralParams, amplitudes: &[f64], positions: &[f64]) -> Result<Vec<f64>> {
    require_m1(&params)?;
    check_system(amplitudes, positions)?;
    Ok(residual_with(&Kernel::new(params), amplitudes, positions))
}

fn check_system(a: &[f64], th: &[f64]) -> Result<()> {
    if a.len() != th.len() || a.len() < 2 {
        return Err(invalid("need M >= 2 amplitudes and as many positions"));
    }
    for i in 0..th.len() {
        for j in i + 1..th.len() {
            if (th[i] - th[j]).rem_euclid(2.0 * PI) == 0.0 {
                return Err(Error::CoincidentAtoms(i, j));
            }
        }
    }
    Ok(())
}

fn residual_with(k: &Kernel, a: &[f64], th: &[f64]) -> Vec<f64> {
    let m = a.len();
    let h = |j: usize| (0..m).map(|l| a[l] * k.value_continuous(th[j] - th[l])).sum::<f64>();
    let mut r: Vec<f64> =
        (0..m).map(|j| 1.0 + 2.0 * (0..m).map(|l| a[l] * k.deriv_averaged(th[j] - th[l])).sum::<f64>()).collect();
    let h1 = h(0);
    r.extend((1..m).map(|j| h(j) - h1));
    r
}

/// Jacobian in the unknowns `(A_1..A_M, θ_2..θ_M)`.
fn jacobian(k: &Kernel, a: &[f64], th: &[f64]) -> DMatrix<f64> {
    let m = a.len();
    let n = 2 * m - 1;
    let mut jac = DMatrix::zeros(n, n);
    let kp = |x: f64| k.deriv_averaged(x);
    let kpp = |x: f64| k.second_deriv_averaged(x);
    for j in 0..m {
        for l in 0..m {
            jac[(j, l)] = 2.0 * kp(th[j] - th[l]);
        }
        for q in 1..m {
            let col = m + q - 1;
            jac[(j, col)] = if q == j {
                (0..m).filter(|&l| l != j).map(|l| 2.0 * a[l] * kpp(th[j] - th[l])).sum()
            } else {
                -2.0 * a[q] * kpp(th[j] - th[q])
            };
        }
    }
    // dH_j/dA_l = K(θ_j − θ_l); dH_j/dθ_q = −A_q K'(θ_j − θ_q) (q ≠ j),
    // Σ_{l≠j} A_l K'(θ_j − θ_l) (q = j)
    let dh = |j: usize| -> Vec<f64> {
        let mut row = vec![0.0; n];
        for l in 0..m {
            row[l] = k.value_continuous(th[j] - th[l]);
        }
        for q in 1..m {
            row[m + q - 1] = if q == j {
                (0..m).filter(|&l| l != j).map(|l| a[l] * kp(th[j] - th[l])).sum()
            } else {
                -a[q] * kp(th[j] - th[q])
            };
        }
        row
    };
    let d1 = dh(0);
    for j in 1..m {
        let dj = dh(j);
        for c in 0..n {
            jac[(m + j - 1, c)] = dj[c] - d1[c];
        }
    }
    jac
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarSolution {
    pub params: SpiralParams,
    pub amplitudes: Vec<f64>,
    /// Cumulative positions `0 = θ_1 < θ_2 < … < 2π`.
    pub positions: Vec<f64>,
    pub residual_norm: f64,
    /// `c = dθ_j/d(ln t) = 2 Σ_ℓ A_ℓ K(θ_j − θ_ℓ)`.
    pub drift: f64,
    /// `μ = −c/(4β)`, the convention in which a single atom has `gK(0) = −βμ`.
    pub mu: f64,
    pub iterations: usize,
}

impl SelfSimilarSolution {
    /// Consecutive gaps `θ_{k+1} − θ_k`.
    pub fn gaps(&self) -> Vec<f64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// The sheet at time `t`: `I_j = A_j/t`, `θ_j + c ln t`.
    pub fn config_at(&self, t: f64) -> Result<DiracConfig> {
        let shift = self.drift * t.ln();
        DiracConfig::new(
            self.params,
            self.amplitudes.iter().zip(&self.positions).map(|(&a, &th)| Atom::new(a / t, th + shift)).collect(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 100 }
    }
}

/// Amplitudes solving the linear amplitude equations for fixed positions.
pub fn amplitudes_for(params: SpiralParams, positions: &[f64]) -> Result<Vec<f64>> {
    let k = Kernel::new(params);
    let m = positions.len();
    let mat = DMatrix::from_fn(m, m, |j, l| 2.0 * k.deriv_averaged(positions[j] - positions[l]));
    let rhs = DVector::from_element(m, -1.0);
    mat.lu()
        .solve(&rhs)
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| invalid("amplitude system is singular for these positions"))
}

/// Damped Newton on [`general_m_residual`] with `θ_1` fixed to the first
/// seed position. Singular Jacobians are reported, not regularised.
pub fn solve_general_m(
    params: SpiralParams,
    seed_amplitudes: &[f64],
    seed_positions: &[f64],
    opts: &NewtonOptions,
) -> Result<SelfSimilarSolution> {
    require_m1(&params)?;
    check_system(seed_amplitudes, seed_positions)?;
    let k = Kernel::new(params);
    let m = seed_amplitudes.len();
    let origin = seed_positions[0];
    let mut a = seed_amplitudes.to_vec();
    let mut th: Vec<f64> = seed_positions.iter().map(|t| t - origin).collect();
    let norm = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut r = residual_with(&k, &a, &th);
    let mut iterations = 0;
    while norm(&r) > opts.tol {
        if iterations >= opts.max_iter {
            return Err(invalid(format!(
                "Newton did not converge in {} iterations (residual {:e})",
                opts.max_iter,
                norm(&r)
            )));
        }
        iterations += 1;
        let jac = jacobian(&k, &a, &th);
        let sv = jac.clone().singular_values();
        let (smin, smax) = (sv.min(), sv.max());
        if smin <= 1e-13 * smax {
            return Err(invalid(format!("singular Jacobian (condition {:e})", smax / smin.max(1e-300))));
        }
        let dx = jac
            .lu()
            .solve(&DVector::from_vec(r.iter().map(|v| -v).collect()))
            .ok_or_else(|| invalid("singular Jacobian"))?;
        let mut lambda = 1.0;
        let r0 = norm(&r);
        loop {
            let na: Vec<f64> = (0..m).map(|i| a[i] + lambda * dx[i]).collect();
            let mut nt = th.clone();
            for q in 1..m {
                nt[q] += lambda * dx[m + q - 1];
            }
            let distinct = check_system(&na, &nt).is_ok();
            let nr = if distinct { residual_with(&k, &na, &nt) } else { vec![f64::INFINITY] };
            if distinct && norm(&nr) < (1.0 - 0.25 * lambda) * r0 {
                a = na;
                th = nt;
                r = nr;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(invalid(format!("line search stalled at residual {r0:e}")));
            }
        }
    }
    // order atoms by position in [0, 2π) from θ_1
    let mut idx: Vec<usize> = (0..m).collect();
    let pos: Vec<f64> = th.iter().map(|t| t.rem_euclid(2.0 * PI)).collect();
    idx.sort_by(|&i, &j| pos[i].partial_cmp(&pos[j]).unwrap());
    let amplitudes: Vec<f64> = idx.iter().map(|&i| a[i]).collect();
    let positions: Vec<f64> = idx.iter().map(|&i| pos[i] + origin).collect();
    let h1: f64 = (0..m).map(|l| a[l] * k.value_continuous(th[0] - th[l])).sum();
    let drift = 2.0 * h1;
    Ok(SelfSimilarSolution {
        params,
        residual_norm: norm(&r),
        amplitudes,
        positions: positions.iter().map(|p| p - positions[0]).collect(),
        drift,
        mu: -drift / (4.0 * params.beta()),
        iterations,
    })
}

/// A two-atom root as a [`SelfSimilarSolution`].
pub fn two_dirac_solution(params: SpiralParams, root: &TwoDiracRoot) -> Result<SelfSimilarSolution> {
    solve_general_m(params, &[root.a2, root.a1], &[0.0, root.d], &NewtonOptions::default())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrandtlParameters {
    pub g: f64,
    pub mu: f64,
}

/// `g = −1/(4K'(0))`, `μ = −gK(0)/β`.
pub fn prandtl_parameters(params: SpiralParams) -> Result<PrandtlParameters> {
    let bd = Kernel::new(params).boundary();
    if bd.kp0 == 0.0 {
        return Err(invalid("K'(0) vanishes; the single-branch spiral is undefined"));
    }
    let g = -1.0 / (4.0 * bd.kp0);
    Ok(PrandtlParameters { g, mu: -g * bd.k0 / params.beta() })
}

/// `16π²β² F(β, d)`, whose small-β limit is `sin(2d)(1 − cos(2d))`.
pub fn rescaled_small_beta_residual(beta: f64, d: f64) -> Result<f64> {
    let r = two_dirac_residual(SpiralParams::new(beta, 1)?, d)?;
    Ok(16.0 * PI * PI * beta * beta * r.f)
}
