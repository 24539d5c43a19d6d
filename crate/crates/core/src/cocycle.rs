//! Transfer-matrix products at complexified phases, the finite-volume
//! Lyapunov exponents `L_n(E, ε)`, the acceleration and stratum labels.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::CocycleParams;
use crate::numeric::{fit_line, mean_and_stderr, median};

/// Row-major 2×2 complex matrix.
pub type Mat2 = [[Complex64; 2]; 2];

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Slope-break threshold for acceleration windows.
pub const AFFINE_RESIDUAL_MAX: f64 = 0.25;
/// Default threshold for a positive Lyapunov exponent.
pub const TAU_POS: f64 = 0.05;

/// One step `[[E − f, −1], [1, 0]]`.
pub fn transfer_step(energy: f64, fz: Complex64) -> Mat2 {
    [[energy - fz, -ONE], [ONE, ZERO]]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn mat_det(a: &Mat2) -> Complex64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

fn sup_norm(a: &Mat2) -> f64 {
    a.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn op_norm(a: &Mat2) -> f64 {
    let fro2: f64 = a.iter().flatten().map(|c| c.norm_sqr()).sum();
    let det = mat_det(a).norm();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    ((fro2 + disc) / 2.0).sqrt()
}

/// `M_n = A_{n−1} ⋯ A_0` at phase `θ + iε`, kept as `e^{log_scale} · matrix`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferProduct {
    /// `log ‖M_n‖` (operator norm).
    pub log_norm: f64,
    /// Renormalized product, `M_n = e^{log_scale} · matrix`.
    pub matrix: Mat2,
    pub log_scale: f64,
    /// `Σ_j log |det A_j|` accumulated over the steps; zero in exact arithmetic.
    pub log_det: f64,
}

/// Multiplies out `M_n(θ + iε)` for `params.n` steps, renormalizing by the
/// sup-norm after every step.
pub fn transfer_product(params: &CocycleParams, theta: f64) -> TransferProduct {
    transfer_product_from(params, theta, 0)
}

/// Same as [`transfer_product`] but starting at site `start`, i.e. the product
/// `A_{start+n−1} ⋯ A_{start}`.
pub fn transfer_product_from(params: &CocycleParams, theta: f64, start: i64) -> TransferProduct {
    let radius = (-TAU * params.eps).exp();
    let mut m: Mat2 = [[ONE, ZERO], [ZERO, ONE]];
    let mut acc = 0.0f64;
    let mut log_det = 0.0f64;
    for j in 0..params.n as i64 {
        let phase = theta + params.frequency.frac_multiple(start + j);
        let z = Complex64::from_polar(radius, TAU * phase);
        let step = transfer_step(params.energy, params.potential.eval_unchecked(z));
        log_det += mat_det(&step).norm().ln();
        m = mat_mul(&step, &m);
        let s = sup_norm(&m);
        if s > 0.0 {
            for c in m.iter_mut().flatten() {
                *c /= s;
            }
            acc += s.ln();
        }
    }
    TransferProduct { log_norm: acc + op_norm(&m).ln(), matrix: m, log_scale: acc, log_det }
}

/// `v_n(θ + iε) = (1/n) log ‖M_n‖`.
pub fn v_n(params: &CocycleParams, theta: f64) -> f64 {
    transfer_product(params, theta).log_norm / params.n as f64
}

/// Quadrature estimate of `L_n(E, ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    pub value: f64,
    pub n: usize,
    pub quadrature_points: usize,
    pub std_error: f64,
}

pub const MIN_QUADRATURE: usize = 64;

/// Trapezoidal average of `v_n` over `θ_j = j/K`.
pub fn lyapunov_n(params: &CocycleParams, k: usize) -> Result<LyapunovEstimate> {
    if k < MIN_QUADRATURE {
        return Err(Error::Validation(format!("quadrature size {k} below {MIN_QUADRATURE}")));
    }
    params.validate()?;
    let samples: Vec<f64> = (0..k).into_par_iter().map(|j| v_n(params, j as f64 / k as f64)).collect();
    let (value, std_error) = mean_and_stderr(&samples);
    Ok(LyapunovEstimate { value, n: params.n, quadrature_points: k, std_error })
}

/// Doubles `K` from `k_start` until successive estimates differ by less than
/// `max(1e−4, std_error)` or `k_max` is reached.
pub fn lyapunov_adaptive(params: &CocycleParams, k_start: usize, k_max: usize) -> Result<LyapunovEstimate> {
    let mut k = k_start.max(MIN_QUADRATURE).next_power_of_two();
    let mut prev = lyapunov_n(params, k)?;
    while 2 * k <= k_max {
        k *= 2;
        let cur = lyapunov_n(params, k)?;
        if (cur.value - prev.value).abs() < 1e-4_f64.max(cur.std_error) {
            return Ok(cur);
        }
        prev = cur;
    }
    Ok(prev)
}

/// Richardson step from estimates at `n` and `2n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrapolation {
    pub value: f64,
    pub l_n: f64,
    pub l_2n: f64,
    /// `L_n ≥ L_{2n}` up to twice the combined standard error.
    pub monotone: bool,
}

pub fn lyapunov_extrapolate(at_n: &LyapunovEstimate, at_2n: &LyapunovEstimate) -> Result<Extrapolation> {
    if at_2n.n != 2 * at_n.n {
        return Err(Error::Precondition(format!(
            "extrapolation needs volumes n and 2n, got {} and {}",
            at_n.n, at_2n.n
        )));
    }
    let noise = 2.0 * (at_n.std_error.powi(2) + at_2n.std_error.powi(2)).sqrt();
    Ok(Extrapolation {
        value: 2.0 * at_2n.value - at_n.value,
        l_n: at_n.value,
        l_2n: at_2n.value,
        monotone: at_n.value + noise >= at_2n.value,
    })
}

/// Slope of `ε ↦ L(E, ε)/(2π)` over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccelerationEstimate {
    pub raw_slope: f64,
    pub rounded: i64,
    pub residual: f64,
    pub window: (f64, f64),
}

impl AccelerationEstimate {
    fn from_slope(raw_slope: f64, window: (f64, f64)) -> Self {
        let rounded = raw_slope.round();
        AccelerationEstimate { raw_slope, rounded: rounded as i64, residual: (raw_slope - rounded).abs(), window }
    }
}

/// Acceleration over a whole ε-grid together with per-interval slopes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccelerationReport {
    pub energy: f64,
    /// `(ε, L_n(E, ε))` samples.
    pub samples: Vec<(f64, LyapunovEstimate)>,
    /// Least-squares slope over the whole grid.
    pub overall: AccelerationEstimate,
    /// Slope over each consecutive pair of grid points.
    pub intervals: Vec<AccelerationEstimate>,
    /// True when the overall residual exceeds the threshold or the
    /// per-interval slopes round to different integers.
    pub non_affine: bool,
}

impl AccelerationReport {
    /// The overall estimate, or a non-affine-window error.
    pub fn require_affine(&self) -> Result<AccelerationEstimate> {
        if self.non_affine {
            Err(Error::NonAffineWindow {
                lo: self.overall.window.0,
                hi: self.overall.window.1,
                slope: self.overall.raw_slope,
                residual: self.overall.residual,
            })
        } else {
            Ok(self.overall)
        }
    }
}

/// Default ε-grid `{0.01, 0.02, ..., 0.10}·η`.
pub fn default_eps_grid(eta: f64) -> Vec<f64> {
    (1..=10).map(|j| j as f64 * 0.01 * eta).collect()
}

/// Estimates the acceleration from `L_n(E, ε)` on a grid of nonnegative ε
/// (evenness in ε makes negative shifts redundant). `params.eps` is ignored.
pub fn acceleration(params: &CocycleParams, eps_grid: &[f64], k: usize) -> Result<AccelerationReport> {
    if eps_grid.len() < 2 {
        return Err(Error::Validation("acceleration needs at least two ε values".into()));
    }
    if eps_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("ε-grid must be strictly increasing".into()));
    }
    let eta = params.potential.eta();
    if eps_grid[0] <= 0.0 || *eps_grid.last().unwrap() >= eta {
        return Err(Error::Validation(format!("ε-grid must lie inside (0, {eta})")));
    }
    let samples =
        eps_grid.iter().map(|&e| Ok((e, lyapunov_n(&params.with_eps(e)?, k)?))).collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.value / TAU).collect();
    let fit = fit_line(&xs, &ys).expect("grid has distinct points");
    let window = (xs[0], *xs.last().unwrap());
    let overall = AccelerationEstimate::from_slope(fit.slope, window);
    let intervals: Vec<AccelerationEstimate> = (0..xs.len() - 1)
        .map(|i| AccelerationEstimate::from_slope((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]), (xs[i], xs[i + 1])))
        .collect();
    let non_affine = overall.residual > AFFINE_RESIDUAL_MAX || intervals.iter().any(|iv| iv.rounded != overall.rounded);
    Ok(AccelerationReport { energy: params.energy, samples, overall, intervals, non_affine })
}

/// Stratum label of an energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum StratumLabel {
    /// `S_ℓ^+`: acceleration `ℓ − 1 ≥ 1` and positive Lyapunov exponent.
    Supercritical(u32),
    /// `S_ℓ^0`: acceleration `ℓ − 1 ≥ 1` and vanishing Lyapunov exponent.
    Critical(u32),
    /// `S_1`: zero acceleration and zero exponent.
    Subcritical,
    /// Not in the spectrum (or zero acceleration with a positive exponent).
    OffSpectrum,
    /// The acceleration window was not affine.
    Unclassified,
}

impl fmt::Display for StratumLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StratumLabel::Supercritical(l) => write!(f, "S_{l}^+"),
            StratumLabel::Critical(l) => write!(f, "S_{l}^0"),
            StratumLabel::Subcritical => write!(f, "subcritical"),
            StratumLabel::OffSpectrum => write!(f, "off-spectrum"),
            StratumLabel::Unclassified => write!(f, "unclassified"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StratumRecord {
    pub energy: f64,
    pub l0: f64,
    pub kappa0: i64,
    pub in_spectrum: bool,
    pub label: StratumLabel,
}

/// Labels an energy from `L(E, 0)` and the acceleration at zero shift.
pub fn classify_stratum(
    energy: f64,
    l0: f64,
    kappa: &AccelerationEstimate,
    tau_pos: f64,
    in_spectrum: bool,
) -> StratumRecord {
    let kappa0 = kappa.rounded;
    let label = if kappa.residual > AFFINE_RESIDUAL_MAX {
        StratumLabel::Unclassified
    } else if !in_spectrum {
        StratumLabel::OffSpectrum
    } else if kappa0 <= 0 {
        if l0 > tau_pos {
            StratumLabel::OffSpectrum
        } else {
            StratumLabel::Subcritical
        }
    } else if l0 > tau_pos {
        StratumLabel::Supercritical(kappa0 as u32 + 1)
    } else {
        StratumLabel::Critical(kappa0 as u32 + 1)
    };
    StratumRecord { energy, l0, kappa0, in_spectrum, label }
}

/// Lebesgue measure of each label from grid-cell counting: every grid point
/// owns the cell between the midpoints to its neighbours. Off-spectrum cells
/// are not counted. Records must be sorted by energy.
pub fn strata_measure_estimate(records: &[StratumRecord]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    let n = records.len();
    for i in 0..n {
        let e = records[i].energy;
        let left = if i > 0 { 0.5 * (e - records[i - 1].energy) } else { 0.0 };
        let right = if i + 1 < n { 0.5 * (records[i + 1].energy - e) } else { 0.0 };
        let w = if n == 1 { 0.0 } else { left + right };
        if records[i].in_spectrum {
            *out.entry(records[i].label.to_string()).or_insert(0.0) += w;
        }
    }
    out
}

/// Median of the overall residuals, a quantization summary for a sweep.
pub fn median_residual(reports: &[AccelerationReport]) -> f64 {
    let r: Vec<f64> = reports.iter().map(|r| r.overall.residual).collect();
    median(&r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Frequency, Potential};

    fn params(p: Potential, e: f64, eps: f64, n: usize) -> CocycleParams {
        CocycleParams::new(p, Frequency::golden(), e, eps, n).unwrap()
    }

    #[test]
    fn single_free_step() {
        let tp = transfer_product(&params(Potential::zero(), 2.0, 0.0, 1), 0.3);
        let m = tp.matrix;
        let s = tp.log_scale.exp();
        assert!((m[0][0] * s - 2.0).norm() < 1e-15);
        assert!((m[0][1] * s + 1.0).norm() < 1e-15);
        assert!((m[1][0] * s - 1.0).norm() < 1e-15);
        assert!((m[1][1] * s).norm() < 1e-15);
        let expected = ((6.0 + 32f64.sqrt()) / 2.0).sqrt().ln();
        assert!((tp.log_norm - expected).abs() < 1e-14);
    }

    #[test]
    fn free_rotation_period_four() {
        let tp = transfer_product(&params(Potential::zero(), 0.0, 0.0, 4), 0.1);
        assert!(tp.log_norm.abs() < 1e-12);
    }

    #[test]
    fn free_lyapunov_outside_band() {
        let p = params(Potential::zero(), 3.0, 0.0, 300);
        let l = lyapunov_n(&p, 64).unwrap();
        let exact = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((l.value - exact).abs() < 2e-3, "{}", l.value);
        // finite-n bias is O(1/n); the limit is exact
        let l2 = lyapunov_n(&p.with_n(600).unwrap(), 64).unwrap();
        let ex = lyapunov_extrapolate(&l, &l2).unwrap();
        assert!((ex.value - exact).abs() < 1e-8);
    }

    #[test]
    fn free_lyapunov_at_zero() {
        let l = lyapunov_n(&params(Potential::zero(), 0.0, 0.0, 400), 64).unwrap();
        assert!(l.value.abs() < 1e-10);
    }

    #[test]
    fn quadrature_guard() {
        assert!(lyapunov_n(&params(Potential::zero(), 0.0, 0.0, 4), 32).is_err());
    }

    #[test]
    fn amo_long_product_near_log_lambda() {
        let tp = transfer_product(&params(Potential::amo(2.0), 0.5, 0.0, 1000), 0.3);
        assert!((tp.log_norm / 1000.0 - 2f64.ln()).abs() < 0.05);
        assert!(tp.log_det.abs() < 1e-10 * 1000.0);
    }

    #[test]
    fn renormalized_matches_naive() {
        let p = params(Potential::amo(1.5), 0.7, 0.03, 25);
        let theta = 0.21;
        let mut m: Mat2 = [[ONE, ZERO], [ZERO, ONE]];
        let r = (-TAU * p.eps).exp();
        for j in 0..25 {
            let z = Complex64::from_polar(r, TAU * (theta + j as f64 * p.frequency.alpha()));
            m = mat_mul(&transfer_step(p.energy, p.potential.eval_unchecked(z)), &m);
        }
        let naive = op_norm(&m).ln();
        let tp = transfer_product(&p, theta);
        assert!((tp.log_norm - naive).abs() < 1e-9 * naive.abs().max(1.0));
    }

    #[test]
    fn free_acceleration_is_zero() {
        let p = params(Potential::zero(), 0.5, 0.0, 50);
        let rep = acceleration(&p, &default_eps_grid(1.0), 64).unwrap();
        assert_eq!(rep.overall.rounded, 0);
        assert!(rep.overall.raw_slope.abs() < 1e-12);
        assert!(!rep.non_affine);
    }

    #[test]
    fn acceleration_grid_validation() {
        let p = params(Potential::zero(), 0.5, 0.0, 10);
        assert!(acceleration(&p, &[0.02, 0.01], 64).is_err());
        assert!(acceleration(&p, &[0.0, 0.01], 64).is_err());
        assert!(acceleration(&p, &[0.5, 1.0], 64).is_err());
    }

    fn est(slope: f64) -> AccelerationEstimate {
        AccelerationEstimate::from_slope(slope, (0.01, 0.1))
    }

    #[test]
    fn stratum_labels() {
        let r = classify_stratum(0.0, 2f64.ln(), &est(1.0), TAU_POS, true);
        assert_eq!(r.label.to_string(), "S_2^+");
        let r = classify_stratum(0.0, 0.0, &est(0.0), TAU_POS, true);
        assert_eq!(r.label, StratumLabel::Subcritical);
        let r = classify_stratum(0.0, 0.7, &est(2.0), TAU_POS, true);
        assert_eq!(r.label.to_string(), "S_3^+");
        let r = classify_stratum(0.0, 0.7, &est(1.4), TAU_POS, true);
        assert_eq!(r.label, StratumLabel::Unclassified);
        let r = classify_stratum(0.0, 0.7, &est(1.0), TAU_POS, false);
        assert_eq!(r.label, StratumLabel::OffSpectrum);
    }

    #[test]
    fn measure_estimate() {
        assert!(strata_measure_estimate(&[]).is_empty());
        let recs: Vec<StratumRecord> =
            (0..5).map(|i| classify_stratum(i as f64 * 0.5, 0.0, &est(0.0), TAU_POS, true)).collect();
        let m = strata_measure_estimate(&recs);
        assert!((m["subcritical"] - 2.0).abs() < 1e-15);
    }
}
