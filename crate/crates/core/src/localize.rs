//! Localization diagnostics: eigenfunction decay rates, the geometry of the
//! large-deviation set of `u_n`, the double-resonance scan and the
//! determinant expansion of solutions on a window.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::determinant::{determinant_poly, determinant_poly_shifted, DeterminantFamily, DEFAULT_DEGREE_CAP};
use crate::error::{Error, Result};
use crate::model::{Frequency, Potential};
use crate::numeric::{fit_line, pairwise_sum, torus_norm, wrap_unit};
use crate::spectral::{diagonal, dirichlet_eigenvalues, eigen_residual, eigenvector};
use crate::zeros::{find_zeros, DEFAULT_TOL};

/// Entries below this modulus are treated as underflowed in decay fits.
const UNDERFLOW: f64 = 1e-290;

/// Exponential decay of one eigenvector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayProfile {
    pub eigenvalue: f64,
    pub eigenvector: Vec<f64>,
    /// Index of the largest component.
    pub center: usize,
    /// Decay rates `−d log|φ_j| / d|j − c|` on each side (None when too few sites).
    pub left_slope: Option<f64>,
    pub right_slope: Option<f64>,
    /// RMS residuals of the two fits.
    pub left_residual: Option<f64>,
    pub right_residual: Option<f64>,
    /// Point-count weighted mean of the available side slopes.
    pub slope: f64,
    /// `‖(H − λ)φ‖_∞`.
    pub residual: f64,
}

impl DecayProfile {
    /// Decay slower than `tau` or a poor fit.
    pub fn delocalized(&self, tau: f64) -> bool {
        let res = self.left_residual.unwrap_or(0.0).max(self.right_residual.unwrap_or(0.0));
        self.slope < tau || res > 1.0
    }
}

fn side_fit(v: &[f64], idx: impl Iterator<Item = usize>, center: usize) -> Option<(f64, f64, usize)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in idx {
        let a = v[j].abs();
        if a > UNDERFLOW {
            xs.push((j as f64 - center as f64).abs());
            ys.push(a.ln());
        }
    }
    if xs.len() < 8 {
        return None;
    }
    fit_line(&xs, &ys).map(|f| (-f.slope, f.rms_residual, xs.len()))
}

/// Fits the decay of an eigenvector outside a central window of width n/8.
pub fn decay_profile(eigenvalue: f64, v: Vec<f64>, residual: f64) -> DecayProfile {
    let n = v.len();
    let center = (0..n).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
    let half = n / 16;
    let left = side_fit(&v, 0..center.saturating_sub(half), center);
    let right = side_fit(&v, (center + half + 1).min(n)..n, center);
    let (mut wsum, mut total) = (0.0, 0usize);
    for s in [left, right].iter().flatten() {
        wsum += s.0 * s.2 as f64;
        total += s.2;
    }
    DecayProfile {
        eigenvalue,
        center,
        left_slope: left.map(|s| s.0),
        right_slope: right.map(|s| s.0),
        left_residual: left.map(|s| s.1),
        right_residual: right.map(|s| s.1),
        slope: if total > 0 { wsum / total as f64 } else { 0.0 },
        residual,
        eigenvector: v,
    }
}

pub const MIN_DECAY_VOLUME: usize = 500;

/// Eigenpair `which` (ascending order) of the Dirichlet problem on
/// `[0, n−1]` and its decay profile.
pub fn eigenfunction_decay(
    p: &Potential,
    freq: &Frequency,
    theta: f64,
    n: usize,
    which: usize,
) -> Result<DecayProfile> {
    if n < MIN_DECAY_VOLUME {
        return Err(Error::Validation(format!("decay fits need n ≥ {MIN_DECAY_VOLUME}, got {n}")));
    }
    if which >= n {
        return Err(Error::Validation(format!("eigenvalue index {which} out of range for n = {n}")));
    }
    let spec = dirichlet_eigenvalues(p, freq, theta, n)?;
    let diag = diagonal(p, freq, theta, n);
    let lambda = spec.eigenvalues[which];
    let v = eigenvector(&diag, lambda)?;
    let residual = eigen_residual(&diag, lambda, &v);
    Ok(decay_profile(lambda, v, residual))
}

/// Decay profiles for several eigenvalue indices sharing one spectrum.
pub fn eigenfunction_decays(
    p: &Potential,
    freq: &Frequency,
    theta: f64,
    n: usize,
    which: &[usize],
) -> Result<Vec<DecayProfile>> {
    if n < MIN_DECAY_VOLUME {
        return Err(Error::Validation(format!("decay fits need n ≥ {MIN_DECAY_VOLUME}, got {n}")));
    }
    let spec = dirichlet_eigenvalues(p, freq, theta, n)?;
    let diag = diagonal(p, freq, theta, n);
    which
        .par_iter()
        .map(|&k| {
            let lambda = *spec
                .eigenvalues
                .get(k)
                .ok_or_else(|| Error::Validation(format!("eigenvalue index {k} out of range")))?;
            let v = eigenvector(&diag, lambda)?;
            let residual = eigen_residual(&diag, lambda, &v);
            Ok(decay_profile(lambda, v, residual))
        })
        .collect()
}

/// Sublevel arcs `{θ : u_n(θ) < ū_n − threshold}`, `ū_n` the circle mean of
/// `u_n`, and their reflections.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationSetGeometry {
    pub n: usize,
    pub energy: f64,
    pub threshold: f64,
    /// Circle mean of `u_n` on the grid.
    pub mean: f64,
    /// `mean − threshold`.
    pub level: f64,
    /// Disjoint sorted arcs `[left, right]` in `[0, 1)`; an arc through 0
    /// has `left > right`.
    pub intervals: Vec<(f64, f64)>,
    /// For each arc, the arc containing its image under `θ ↦ −(n−1)α − θ`
    /// (even potentials only).
    pub pair_map: Vec<Option<usize>>,
    /// Total length of the arcs.
    pub measure: f64,
    pub alpha: f64,
}

fn arc_len(a: (f64, f64)) -> f64 {
    if a.0 <= a.1 {
        a.1 - a.0
    } else {
        1.0 - a.0 + a.1
    }
}

fn arc_contains(a: (f64, f64), x: f64, tol: f64) -> bool {
    let x = wrap_unit(x);
    if a.0 <= a.1 {
        (x >= a.0 - tol && x <= a.1 + tol) || x + 1.0 <= a.1 + tol || x - 1.0 >= a.0 - tol
    } else {
        x >= a.0 - tol || x <= a.1 + tol
    }
}

/// Torus distance between two arcs (zero when they overlap).
fn arc_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    if arc_contains(a, b.0, 0.0) || arc_contains(b, a.0, 0.0) {
        return 0.0;
    }
    [torus_norm(a.0 - b.1), torus_norm(a.1 - b.0), torus_norm(a.0 - b.0), torus_norm(a.1 - b.1)]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Bisection for the crossing of `g` between an inside point (`g < 0`) and an
/// outside point, to `1e−14` in θ.
fn refine_crossing<F: Fn(f64) -> f64>(g: &F, mut inside: f64, mut outside: f64) -> f64 {
    for _ in 0..200 {
        if (outside - inside).abs() <= 1e-14 {
            break;
        }
        let mid = 0.5 * (inside + outside);
        if g(mid) < 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    0.5 * (inside + outside)
}

/// Extracts the deviation set of `u_n` at level `ū_n − threshold` from a
/// grid of `grid_size` phases plus one candidate per determinant zero on the
/// unit circle (the arcs around such zeros are far narrower than any
/// practical grid), then refines every endpoint by bisection.
pub fn deviation_set(
    p: &Potential,
    freq: &Frequency,
    energy: f64,
    n: usize,
    threshold: f64,
    grid_size: usize,
) -> Result<DeviationSetGeometry> {
    if grid_size < 64 * n {
        return Err(Error::Validation(format!("grid size {grid_size} below 64·n = {}", 64 * n)));
    }
    if !(threshold > 0.0) {
        return Err(Error::Validation("threshold must be positive".into()));
    }
    let d = determinant_poly(p, freq, energy, n)?;
    let un = |t: f64| d.poly.log_abs(Complex64::from_polar(1.0, TAU * t)) / n as f64;
    let h = 1.0 / grid_size as f64;
    let mut samples: Vec<f64> = (0..grid_size).into_par_iter().map(|j| un(j as f64 * h)).collect();
    let finite: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
    let mean = pairwise_sum(&finite) / finite.len().max(1) as f64;
    let level = mean - threshold;
    let g = |t: f64| un(t) - level;
    for s in &mut samples {
        *s -= level;
    }
    if samples.iter().all(|&s| s < 0.0) {
        return Err(Error::Domain(format!("deviation set at threshold {threshold} covers the whole circle")));
    }
    let mut arcs: Vec<(f64, f64)> = Vec::new();
    // grid runs, starting just after a sample outside the set
    let start = samples.iter().position(|&s| s >= 0.0).unwrap();
    let mut j = 0;
    while j < grid_size {
        let i = (start + j) % grid_size;
        if samples[i] < 0.0 {
            let first = start + j;
            let mut last = first;
            while samples[(last + 1) % grid_size] < 0.0 {
                last += 1;
            }
            let left = refine_crossing(&g, first as f64 * h, (first - 1) as f64 * h);
            let right = refine_crossing(&g, last as f64 * h, (last + 1) as f64 * h);
            arcs.push((wrap_unit(left), wrap_unit(right)));
            j += last - first + 1;
        } else {
            j += 1;
        }
    }
    // zero-seeded candidates
    let inv = find_zeros(&d, DEFAULT_TOL)?;
    let seeds: Vec<f64> =
        inv.zeros.iter().filter(|z| (z.z.norm() - 1.0).abs() < 1e-6).map(|z| wrap_unit(z.z.arg() / TAU)).collect();
    let seeded: Vec<(f64, f64)> = seeds
        .par_iter()
        .filter_map(|&t| {
            if g(t) >= 0.0 {
                return None;
            }
            let mut step = 1e-15;
            let mut right = t + step;
            while g(right) < 0.0 && step < h {
                step *= 2.0;
                right = t + step;
            }
            let mut step = 1e-15;
            let mut left = t - step;
            while g(left) < 0.0 && step < h {
                step *= 2.0;
                left = t - step;
            }
            let r = refine_crossing(&g, t, right);
            let l = refine_crossing(&g, t, left);
            Some((wrap_unit(l), wrap_unit(r)))
        })
        .collect();
    arcs.extend(seeded);
    let intervals = merge_arcs(arcs);
    let measure = intervals.iter().fold(0.0, |acc, &a| acc + arc_len(a));
    let pair_map = if p.is_even() { reflection_pairs(&intervals, n, freq) } else { vec![None; intervals.len()] };
    Ok(DeviationSetGeometry { n, energy, threshold, mean, level, intervals, pair_map, measure, alpha: freq.alpha() })
}

fn merge_arcs(mut arcs: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    if arcs.is_empty() {
        return arcs;
    }
    // unwrap arcs through 0 to [left, right + 1]
    let mut lin: Vec<(f64, f64)> = arcs.drain(..).map(|(l, r)| if l <= r { (l, r) } else { (l, r + 1.0) }).collect();
    lin.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for a in lin {
        match out.last_mut() {
            Some(last) if a.0 <= last.1 => last.1 = last.1.max(a.1),
            _ => out.push(a),
        }
    }
    // an arc running past 1 may swallow arcs at the start
    if out.len() > 1 {
        let end = out.last().unwrap().1;
        if end > 1.0 {
            while out.len() > 1 && out[0].0 + 1.0 <= end {
                let first = out.remove(0);
                let last = out.last_mut().unwrap();
                last.1 = last.1.max(first.1 + 1.0);
            }
        }
    }
    out.into_iter().map(|(l, r)| (wrap_unit(l), if r >= 1.0 { wrap_unit(r) } else { r })).collect()
}

/// Index of the arc that meets the reflection of each arc, within a tolerance
/// of `1e−9` in θ.
fn reflection_pairs(arcs: &[(f64, f64)], n: usize, freq: &Frequency) -> Vec<Option<usize>> {
    let shift = freq.frac_multiple(n as i64 - 1);
    arcs.iter()
        .map(|&(l, r)| {
            let img = (wrap_unit(-shift - r), wrap_unit(-shift - l));
            arcs.iter()
                .enumerate()
                .map(|(k, &b)| (arc_distance(img, b), k))
                .filter(|x| x.0 <= 1e-9)
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map(|x| x.1)
        })
        .collect()
}

/// A pair `U_j ∪ R(U_j)` holding two orbit points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonanceViolation {
    pub interval: usize,
    pub first: i64,
    pub second: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoubleResonanceScan {
    pub y: i64,
    pub violation: Option<ResonanceViolation>,
    /// Orbit points that fell in the deviation set.
    pub hits: usize,
    /// Whether the orbit contains a mirror pair `θ+ℓα = R(θ+ℓ'α)`, which
    /// happens for resonant phases and makes violations possible.
    pub mirror_pair: Option<(i64, i64)>,
}

/// Checks that each pair `U_j ∪ R(U_j)` contains at most one of the points
/// `θ + ℓα`, `ℓ ∈ I_1 ∪ I_2`, with `I_1 = [−⌊7n/8⌋, −⌊n/8⌋]` and
/// `I_2 = y + I_1`.
pub fn double_resonance_scan(
    geom: &DeviationSetGeometry,
    theta: f64,
    freq: &Frequency,
    y: i64,
) -> Result<DoubleResonanceScan> {
    let n = geom.n as i64;
    if !(y > n && y < 10 * n) {
        return Err(Error::Validation(format!("window offset y = {y} must satisfy n < y < 10n")));
    }
    let (a, b) = (-(7 * n / 8), -(n / 8));
    let ells: Vec<i64> = (a..=b).chain(y + a..=y + b).collect();
    let pts: Vec<f64> = ells.iter().map(|&l| wrap_unit(theta + freq.frac_multiple(l))).collect();
    let shift = freq.frac_multiple(n - 1);
    let mut owner: Vec<Option<usize>> = vec![None; pts.len()];
    let mut hits = 0;
    for (i, &x) in pts.iter().enumerate() {
        let xr = wrap_unit(-shift - x);
        for (j, &arc) in geom.intervals.iter().enumerate() {
            if arc_contains(arc, x, 0.0) || arc_contains(arc, xr, 0.0) {
                // an arc and its reflection form one pair; label by the smaller index
                let label = geom.pair_map.get(j).copied().flatten().map_or(j, |k| k.min(j));
                owner[i] = Some(label);
                hits += 1;
                break;
            }
        }
    }
    let mut violation = None;
    'outer: for i in 0..pts.len() {
        if let Some(li) = owner[i] {
            for k in i + 1..pts.len() {
                if owner[k] == Some(li) {
                    violation = Some(ResonanceViolation { interval: li, first: ells[i], second: ells[k] });
                    break 'outer;
                }
            }
        }
    }
    let mut mirror_pair = None;
    'mirror: for (i, &l1) in ells.iter().enumerate() {
        for &l2 in &ells[i + 1..] {
            // θ + ℓ1 α = −(n−1)α − θ − ℓ2 α  ⇔  ‖2θ + (ℓ1 + ℓ2 + n − 1)α‖ = 0
            if torus_norm(2.0 * theta + freq.frac_multiple(l1 + l2 + n - 1)) < 1e-9 {
                mirror_pair = Some((l1, l2));
                break 'mirror;
            }
        }
    }
    Ok(DoubleResonanceScan { y, violation, hits, mirror_pair })
}

/// Value of `D_m(θ + sα, E)` at a real phase as `(mantissa, log_offset)`.
fn det_value(p: &Potential, freq: &Frequency, theta: f64, energy: f64, m: usize, s: i64) -> Result<(f64, f64)> {
    if m == 0 {
        return Ok((1.0, 0.0));
    }
    let d: DeterminantFamily = determinant_poly_shifted(p, freq, energy, m, s, DEFAULT_DEGREE_CAP)?;
    let (v, off) = d.poly.eval_scaled(Complex64::from_polar(1.0, TAU * theta));
    Ok((v.re, off))
}

/// Result of the expansion identity at one site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionCheck {
    pub y: i64,
    pub phi_y: f64,
    pub expansion: f64,
    /// `|φ_y − expansion| / ‖φ‖_2`.
    pub residual: f64,
    /// `‖(H − E)φ‖_∞ / ‖φ‖_2` on the window.
    pub equation_residual: f64,
}

/// Rebuilds `φ_y`, `ℓ1 ≤ y ≤ ℓ2`, from the boundary values `φ_{ℓ1−1}` and
/// `φ_{ℓ2+1}` with `D' = det(E − H)`:
///
/// `φ_y = [D'_{ℓ2−y}(θ+(y+1)α) φ_{ℓ1−1} + D'_{y−ℓ1}(θ+ℓ1α) φ_{ℓ2+1}] / D'_{ℓ2−ℓ1+1}(θ+ℓ1α)`.
///
/// `phi[j]` is the solution at site `j`; the window must satisfy
/// `1 ≤ ℓ1 ≤ ℓ2 ≤ phi.len() − 2`.
#[allow(clippy::too_many_arguments)]
pub fn expansion_identity_check(
    p: &Potential,
    freq: &Frequency,
    theta: f64,
    energy: f64,
    phi: &[f64],
    l1: usize,
    l2: usize,
    y: usize,
) -> Result<ExpansionCheck> {
    if !(l1 >= 1 && l1 <= l2 && l2 + 2 <= phi.len() && (l1..=l2).contains(&y)) {
        return Err(Error::Validation(format!(
            "need 1 ≤ ℓ1 ≤ y ≤ ℓ2 ≤ len − 2 (ℓ1 = {l1}, y = {y}, ℓ2 = {l2}, len = {})",
            phi.len()
        )));
    }
    let norm = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Validation("solution vector is zero".into()));
    }
    let eq = (l1..=l2)
        .map(|j| {
            let v = p.eval_phase(theta + freq.frac_multiple(j as i64));
            (phi[j + 1] + phi[j - 1] + (v - energy) * phi[j]).abs()
        })
        .fold(0.0, f64::max)
        / norm;
    if eq > 1e-8 {
        return Err(Error::Precondition(format!("Hφ = Eφ fails on the window (residual {eq:.3e})")));
    }
    let m = l2 - l1 + 1;
    let (dm, om) = det_value(p, freq, theta, energy, m, l1 as i64)?;
    if dm == 0.0 {
        return Err(Error::Precondition(format!("E = {energy} is a Dirichlet eigenvalue of the window")));
    }
    let (a, oa) = det_value(p, freq, theta, energy, l2 - y, y as i64 + 1)?;
    let (b, ob) = det_value(p, freq, theta, energy, y - l1, l1 as i64)?;
    let expansion = a / dm * (oa - om).exp() * phi[l1 - 1] + b / dm * (ob - om).exp() * phi[l2 + 1];
    Ok(ExpansionCheck {
        y: y as i64,
        phi_y: phi[y],
        expansion,
        residual: (phi[y] - expansion).abs() / norm,
        equation_residual: eq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GOLDEN_MEAN;

    #[test]
    fn free_sine_expansion_exact() {
        let g = Frequency::golden();
        let k: f64 = 0.7;
        let e = 2.0 * k.cos();
        let phi: Vec<f64> = (0..60).map(|j| (k * (j as f64 + 1.0)).sin()).collect();
        for y in [10, 11, 25, 40] {
            let c = expansion_identity_check(&Potential::zero(), &g, 0.0, e, &phi, 10, 40, y).unwrap();
            assert!(c.residual < 1e-10, "{c:?}");
        }
    }

    #[test]
    fn expansion_on_two_site_window() {
        // sign check on the smallest nontrivial window
        let g = Frequency::golden();
        let p = Potential::amo(1.0);
        let theta = 0.11;
        let e = 0.37;
        let mut phi = vec![0.3, -0.8];
        for j in 1..5 {
            let v = p.eval_phase(theta + g.frac_multiple(j as i64));
            let next = (e - v) * phi[j] - phi[j - 1];
            phi.push(next);
        }
        let c = expansion_identity_check(&p, &g, theta, e, &phi, 1, 2, 1).unwrap();
        assert!(c.residual < 1e-13, "{c:?}");
        let c = expansion_identity_check(&p, &g, theta, e, &phi, 1, 2, 2).unwrap();
        assert!(c.residual < 1e-13, "{c:?}");
    }

    #[test]
    fn non_solution_rejected() {
        let g = Frequency::golden();
        let phi = vec![1.0; 10];
        let r = expansion_identity_check(&Potential::zero(), &g, 0.0, 0.5, &phi, 2, 6, 3);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn free_eigenvectors_do_not_decay() {
        let g = Frequency::golden();
        let prof = eigenfunction_decay(&Potential::zero(), &g, 0.0, 500, 250).unwrap();
        assert!(prof.delocalized(0.05), "{:?} {:?}", prof.slope, prof.left_residual);
    }

    #[test]
    fn amo_eigenvector_decays_at_log_lambda() {
        let g = Frequency::golden();
        let prof = eigenfunction_decay(&Potential::amo(2.0), &g, 0.0, 600, 300).unwrap();
        assert!(prof.residual < 1e-10);
        assert!((prof.slope - 2f64.ln()).abs() < 0.15 * 2f64.ln(), "{}", prof.slope);
    }

    #[test]
    fn synthetic_violation_detected() {
        let g = Frequency::golden();
        let n = 100;
        // one wide arc catches several orbit points
        let geom = DeviationSetGeometry {
            n,
            energy: 0.0,
            threshold: 0.1,
            mean: 0.1,
            level: 0.0,
            intervals: vec![(0.0, 0.3)],
            pair_map: vec![None],
            measure: 0.3,
            alpha: GOLDEN_MEAN,
        };
        let scan = double_resonance_scan(&geom, 0.0, &g, 300).unwrap();
        assert!(scan.violation.is_some());
        assert!(double_resonance_scan(&geom, 0.0, &g, 50).is_err());
    }

    #[test]
    fn resonant_phase_has_mirror_pair() {
        let g = Frequency::golden();
        let n = 100;
        let geom = DeviationSetGeometry {
            n,
            energy: 0.0,
            threshold: 0.1,
            mean: 0.1,
            level: 0.0,
            intervals: vec![],
            pair_map: vec![],
            measure: 0.0,
            alpha: GOLDEN_MEAN,
        };
        // 2θ = α pairs ℓ1, ℓ2 ∈ I_1 with ℓ1 + ℓ2 = −n
        let theta = GOLDEN_MEAN / 2.0;
        let scan = double_resonance_scan(&geom, theta, &g, 300).unwrap();
        assert!(scan.mirror_pair.is_some());
        let clean = double_resonance_scan(&geom, 0.3, &g, 300).unwrap();
        assert!(clean.mirror_pair.is_none() && clean.violation.is_none());
    }

    #[test]
    fn arc_merging_wraps() {
        let m = merge_arcs(vec![(0.9, 0.05), (0.01, 0.02), (0.5, 0.6), (0.55, 0.7)]);
        assert_eq!(m.len(), 2);
        assert!(m.iter().any(|a| (a.0 - 0.5).abs() < 1e-15 && (a.1 - 0.7).abs() < 1e-15));
        assert!(m.iter().any(|a| (a.0 - 0.9).abs() < 1e-15 && (a.1 - 0.05).abs() < 1e-12));
    }

    #[test]
    fn empty_deviation_set_for_free() {
        let g = Frequency::golden();
        // u_n is constant, so nothing lies below its mean
        let geom = deviation_set(&Potential::zero(), &g, 3.0, 100, 0.1, 6400).unwrap();
        assert!(geom.intervals.is_empty());
        assert_eq!(geom.measure, 0.0);
    }
}
