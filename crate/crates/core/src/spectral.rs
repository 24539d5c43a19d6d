//! Dirichlet spectra on `[0, n−1]`, Sturm counts, the integrated density of
//! states and its local Hölder exponent, and eigenvectors.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Frequency, Potential};
use crate::numeric::{fit_line, mean_and_stderr};

/// Absolute tolerance of the eigenvalue bisection.
pub const EIGEN_TOL: f64 = 1e-12;
/// Default number of phases for θ-averaged counts.
pub const DEFAULT_IDS_PHASES: usize = 8;

/// Diagonal `f(θ + jα)`, `j = 0..n`.
pub fn diagonal(p: &Potential, freq: &Frequency, theta: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| p.eval_phase(theta + freq.frac_multiple(j as i64))).collect()
}

/// `#{eigenvalues < E}` of the tridiagonal matrix with the given diagonal and
/// unit off-diagonals, from the signs of the `LDLᵀ` pivots of `H − E`.
pub fn sturm_count(diag: &[f64], energy: f64) -> usize {
    let pivmin = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut d = 1.0f64;
    for (j, &v) in diag.iter().enumerate() {
        d = if j == 0 { v - energy } else { (v - energy) - 1.0 / d };
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Sorted Dirichlet eigenvalues of one finite volume.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirichletSpectrum {
    pub n: usize,
    pub theta: f64,
    pub eigenvalues: Vec<f64>,
}

fn gershgorin(diag: &[f64]) -> (f64, f64) {
    let lo = diag.iter().copied().fold(f64::INFINITY, f64::min) - 2.0;
    let hi = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 2.0;
    (lo, hi)
}

/// Eigenvalue `k` (0-based, ascending) by bisection on the Sturm count.
fn kth_eigenvalue(diag: &[f64], k: usize, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    while b - a > EIGEN_TOL {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if sturm_count(diag, mid) > k {
            b = mid;
        } else {
            a = mid;
        }
    }
    0.5 * (a + b)
}

/// Eigenvalues of `H_{α,θ}` restricted to `[0, n−1]` with Dirichlet
/// boundary conditions.
pub fn dirichlet_eigenvalues(p: &Potential, freq: &Frequency, theta: f64, n: usize) -> Result<DirichletSpectrum> {
    if n == 0 {
        return Err(Error::Validation("volume must be at least 1".into()));
    }
    let diag = diagonal(p, freq, theta, n);
    let (lo, hi) = gershgorin(&diag);
    let eigenvalues: Vec<f64> = (0..n).into_par_iter().map(|k| kth_eigenvalue(&diag, k, lo, hi)).collect();
    Ok(DirichletSpectrum { n, theta, eigenvalues })
}

/// `|D_n(θ, E)| / |∂_E D_n(θ, E)|`, the Newton distance from `E` to the
/// nearest root of the determinant.
pub fn determinant_newton_step(diag: &[f64], energy: f64) -> f64 {
    // (D_{j−1}, D_{j−2}) and their E-derivatives, rescaled together
    let (mut d1, mut d2) = (1.0f64, 0.0f64);
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for &v in diag {
        let d = (energy - v) * d1 - d2;
        let e = d1 + (energy - v) * e1 - e2;
        d2 = d1;
        d1 = d;
        e2 = e1;
        e1 = e;
        let m = d1.abs().max(d2.abs()).max(e1.abs()).max(e2.abs());
        if m > 1e100 || (m < 1e-100 && m > 0.0) {
            let s = 1.0 / m;
            d1 *= s;
            d2 *= s;
            e1 *= s;
            e2 *= s;
        }
    }
    if e1 == 0.0 {
        f64::INFINITY
    } else {
        (d1 / e1).abs()
    }
}

/// θ-averaged eigenvalue counting function `k_n(E)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdsValue {
    pub energy: f64,
    pub value: f64,
    /// Standard error over the phases.
    pub spread: f64,
    pub n: usize,
    pub phases: usize,
}

pub const MIN_IDS_VOLUME: usize = 100;

/// Phases `θ_j = j/K` and their diagonals.
pub struct IdsSampler {
    diagonals: Vec<Vec<f64>>,
    n: usize,
}

impl IdsSampler {
    pub fn new(p: &Potential, freq: &Frequency, n: usize, phases: usize) -> Result<Self> {
        if n < MIN_IDS_VOLUME {
            return Err(Error::Validation(format!("IDS volume must be at least {MIN_IDS_VOLUME}, got {n}")));
        }
        if phases == 0 {
            return Err(Error::Validation("at least one phase is required".into()));
        }
        let diagonals = (0..phases).into_par_iter().map(|j| diagonal(p, freq, j as f64 / phases as f64, n)).collect();
        Ok(IdsSampler { diagonals, n })
    }

    /// Per-phase fractions `#{λ < E}/n`.
    pub fn fractions(&self, energy: f64) -> Vec<f64> {
        self.diagonals.par_iter().map(|d| sturm_count(d, energy) as f64 / self.n as f64).collect()
    }

    pub fn ids(&self, energy: f64) -> IdsValue {
        let f = self.fractions(energy);
        let (value, spread) = mean_and_stderr(&f);
        IdsValue { energy, value, spread, n: self.n, phases: self.diagonals.len() }
    }

    /// Per-phase increments `(#{λ < b} − #{λ < a})/n`, averaged.
    pub fn increment(&self, a: f64, b: f64) -> f64 {
        let v: Vec<f64> = self
            .diagonals
            .par_iter()
            .map(|d| (sturm_count(d, b) as f64 - sturm_count(d, a) as f64) / self.n as f64)
            .collect();
        crate::numeric::mean(&v)
    }

    /// Smallest E with `k_n(E) ≥ q`, by bisection on the averaged count.
    pub fn quantile(&self, q: f64) -> f64 {
        let lo = self.diagonals.iter().flatten().copied().fold(f64::INFINITY, f64::min) - 2.0;
        let hi = self.diagonals.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max) + 2.0;
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.ids(mid).value >= q {
                b = mid;
            } else {
                a = mid;
            }
        }
        b
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// `k_n(E)` averaged over `θ_samples` equispaced phases.
pub fn ids(p: &Potential, freq: &Frequency, energy: f64, n: usize, theta_samples: usize) -> Result<IdsValue> {
    Ok(IdsSampler::new(p, freq, n, theta_samples)?.ids(energy))
}

/// Local Hölder fit of the IDS at `E0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderFit {
    pub energy: f64,
    /// `(δ, k(E0+δ) − k(E0−δ))` along the ladder.
    pub increments: Vec<(f64, f64)>,
    /// Fitted exponent; `None` in a gap.
    pub beta: Option<f64>,
    /// Two-standard-error half width of the fitted exponent.
    pub band: f64,
    pub in_gap: bool,
}

/// Slope of `log(k(E0+δ) − k(E0−δ))` against `log δ`.
///
/// The ladder must span two decades with `δ ≥ 10/n²`. When every increment
/// is at or below `2/n` (the weight of the boundary states a finite volume
/// can place inside a gap) or fewer than two increments are positive, the
/// IDS is reported as locally constant.
pub fn holder_exponent(sampler: &IdsSampler, e0: f64, deltas: &[f64]) -> Result<HolderFit> {
    let n = sampler.n() as f64;
    if deltas.len() < 2 {
        return Err(Error::Validation("δ-ladder needs at least two entries".into()));
    }
    let (dmin, dmax) = deltas.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    if !(dmin > 0.0) || dmax / dmin < 100.0 * (1.0 - 1e-12) {
        return Err(Error::Validation("δ-ladder must be positive and span at least two decades".into()));
    }
    if dmin < 10.0 / (n * n) {
        return Err(Error::Validation(format!("δ = {dmin} is below the resolution 10/n² = {:.3e}", 10.0 / (n * n))));
    }
    let increments: Vec<(f64, f64)> = deltas.iter().map(|&d| (d, sampler.increment(e0 - d, e0 + d))).collect();
    let floor = 2.0 / n;
    let positive: Vec<&(f64, f64)> = increments.iter().filter(|x| x.1 > 0.0).collect();
    let in_gap = increments.iter().all(|x| x.1 <= floor) || positive.len() < 2;
    if in_gap {
        return Ok(HolderFit { energy: e0, increments, beta: None, band: 0.0, in_gap });
    }
    let xs: Vec<f64> = positive.iter().map(|x| x.0.ln()).collect();
    let ys: Vec<f64> = positive.iter().map(|x| x.1.ln()).collect();
    let fit = fit_line(&xs, &ys).ok_or_else(|| Error::NoConvergence("degenerate Hölder fit".into()))?;
    Ok(HolderFit { energy: e0, increments, beta: Some(fit.slope), band: 2.0 * fit.slope_stderr, in_gap })
}

/// Midpoint of the widest spacing between consecutive eigenvalues.
pub fn widest_gap_midpoint(spec: &DirichletSpectrum) -> Option<(f64, f64)> {
    spec.eigenvalues
        .windows(2)
        .map(|w| (w[1] - w[0], 0.5 * (w[0] + w[1])))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(width, mid)| (mid, width))
}

/// Marks each grid energy whose cell (midpoints to its neighbours) contains
/// an eigenvalue. The grid must be sorted.
pub fn spectrum_cells(grid: &[f64], eigenvalues: &[f64]) -> Vec<bool> {
    let n = grid.len();
    (0..n)
        .map(|i| {
            let lo = if i > 0 { 0.5 * (grid[i - 1] + grid[i]) } else { f64::NEG_INFINITY };
            let hi = if i + 1 < n { 0.5 * (grid[i] + grid[i + 1]) } else { f64::INFINITY };
            let k = eigenvalues.partition_point(|&e| e < lo);
            k < eigenvalues.len() && eigenvalues[k] < hi
        })
        .collect()
}

/// Eigenvector for a (refined) eigenvalue by a twisted factorization:
/// the top-down and bottom-up `LDLᵀ` pivots of `H − λ` are joined at the
/// index where the twist is smallest, and the vector is generated outward by
/// ratio recurrences. Tails keep their relative accuracy far below the
/// normwise rounding level. Normalized to unit Euclidean norm.
pub fn eigenvector(diag: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Err(Error::Validation("empty matrix".into()));
    }
    let tiny = f64::MIN_POSITIVE.sqrt();
    let guard = |d: f64| if d.abs() < tiny { tiny.copysign(if d == 0.0 { 1.0 } else { d }) } else { d };
    let mut top = vec![0.0; n];
    let mut bot = vec![0.0; n];
    for j in 0..n {
        let a = diag[j] - lambda;
        top[j] = guard(if j == 0 { a } else { a - 1.0 / top[j - 1] });
    }
    for j in (0..n).rev() {
        let a = diag[j] - lambda;
        bot[j] = guard(if j == n - 1 { a } else { a - 1.0 / bot[j + 1] });
    }
    let gamma = |r: usize| top[r] + bot[r] - (diag[r] - lambda);
    let r = (0..n).min_by(|&a, &b| gamma(a).abs().total_cmp(&gamma(b).abs())).unwrap();
    let mut v = vec![0.0; n];
    v[r] = 1.0;
    // (H − λ)v = γ_r e_r: v_j = −v_{j+1}/top_j above r, v_{j} = −v_{j−1}/bot_j below
    for j in (0..r).rev() {
        v[j] = -v[j + 1] / top[j];
    }
    for j in r + 1..n {
        v[j] = -v[j - 1] / bot[j];
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::NoConvergence(format!("eigenvector for λ = {lambda} did not form")));
    }
    for x in &mut v {
        *x /= norm;
    }
    Ok(v)
}

/// `‖(H − λ)v‖_∞` for the tridiagonal operator.
pub fn eigen_residual(diag: &[f64], lambda: f64, v: &[f64]) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|j| {
            let mut s = (diag[j] - lambda) * v[j];
            if j > 0 {
                s += v[j - 1];
            }
            if j + 1 < n {
                s += v[j + 1];
            }
            s.abs()
        })
        .fold(0.0, f64::max)
}
