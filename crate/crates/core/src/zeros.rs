//! Zeros of Dirichlet determinants: simultaneous root finding, symmetry
//! pairing, annulus counts `N_n(E, ε)` and the zero-count characterization
//! of the acceleration.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::cocycle::{acceleration, lyapunov_n, AccelerationEstimate};
use crate::determinant::{center_poly, determinant_poly, DeterminantFamily};
use crate::error::{Error, Result};
use crate::model::{CocycleParams, Frequency};
use crate::numeric::fit_line;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Iteration cap for the simultaneous iteration.
pub const MAX_ITERATIONS: usize = 500;
/// Default relative residual for certifying a root.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Roots this close to `|z| = 1` are treated as lying on the unit circle.
pub const ON_CIRCLE_TOL: f64 = 1e-8;
/// Roots this close to a query circle are counted inside and flagged.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Ordinary polynomial `Σ a_k z^k`, `k = 0..=d`, with certified roots.
#[derive(Debug, Clone)]
pub struct RootReport {
    pub roots: Vec<Complex64>,
    /// `|p(w)| / (‖a‖₁ max(1,|w|)^d)` per root.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Evaluates `p(z)/p'(z)` and the relative residual of `p(z)`.
fn newton_ratio(a: &[Complex64], norm1: f64, z: Complex64) -> (Complex64, f64) {
    let d = a.len() - 1;
    if z.norm() <= 1.0 {
        let mut p = a[d];
        let mut dp = ZERO;
        for k in (0..d).rev() {
            dp = dp * z + p;
            p = p * z + a[k];
        }
        (p / dp, p.norm() / norm1)
    } else {
        // p(z) = z^d q(y), y = 1/z, q(y) = Σ a_k y^{d−k}
        let y = z.inv();
        let mut q = a[0];
        let mut dq = ZERO;
        for &ak in &a[1..=d] {
            dq = dq * y + q;
            q = q * y + ak;
        }
        let denom = d as f64 - y * dq / q;
        (z / denom, q.norm() / norm1)
    }
}

/// Initial guesses on the circles of the Newton polygon of `log |a_k|`.
fn initial_guesses(a: &[Complex64]) -> Vec<Complex64> {
    let d = a.len() - 1;
    let pts: Vec<(usize, f64)> =
        a.iter().enumerate().filter(|(_, c)| c.norm() > 0.0).map(|(k, c)| (k, c.norm().ln())).collect();
    // upper convex hull
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (i1, y1) = hull[hull.len() - 2];
            let (i2, y2) = hull[hull.len() - 1];
            let cross = (i2 as f64 - i1 as f64) * (p.1 - y1) - (y2 - y1) * (p.0 as f64 - i1 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut out = Vec::with_capacity(d);
    for (seg, w) in hull.windows(2).enumerate() {
        let (i, yi) = w[0];
        let (j, yj) = w[1];
        let m = j - i;
        let r = ((yi - yj) / m as f64).exp();
        let offset = 0.25 + 0.618_033_988_749_895 * seg as f64;
        for t in 0..m {
            let ang = TAU * (t as f64 + offset) / m as f64;
            out.push(Complex64::from_polar(r, ang));
        }
    }
    out
}

/// All roots of `Σ a_k z^k` by Aberth–Ehrlich iteration followed by a Newton
/// polish. Leading zero coefficients are removed; trailing ones contribute
/// roots at the origin.
pub fn polynomial_roots(coeffs: &[Complex64], tol: f64) -> Result<RootReport> {
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1] == ZERO {
        hi -= 1;
    }
    if hi == 0 {
        return Err(Error::Precondition("polynomial is identically zero".into()));
    }
    let lo = coeffs[..hi].iter().position(|c| *c != ZERO).unwrap();
    let scale = coeffs[lo..hi].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let a: Vec<Complex64> = coeffs[lo..hi].iter().map(|c| c / scale).collect();
    let d = a.len() - 1;
    let mut roots = vec![ZERO; lo];
    if d == 0 {
        let residuals = vec![0.0; roots.len()];
        return Ok(RootReport { roots, residuals, iterations: 0 });
    }
    let norm1: f64 = a.iter().map(|c| c.norm()).sum();
    let mut z = initial_guesses(&a);
    let mut done = vec![false; d];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && done.iter().any(|x| !x) {
        iterations += 1;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (ratio, _) = newton_ratio(&a, norm1, z[i]);
            if !ratio.re.is_finite() || !ratio.im.is_finite() {
                // exact zero of p: p/p' = 0
                done[i] = ratio == ZERO;
                continue;
            }
            let mut s = ZERO;
            for j in 0..d {
                if j != i {
                    s += (z[i] - z[j]).inv();
                }
            }
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            z[i] -= w;
            if w.norm() <= 1e-15 * z[i].norm().max(f64::MIN_POSITIVE) {
                done[i] = true;
            }
        }
    }
    let mut residuals = Vec::with_capacity(d);
    let mut failed = Vec::new();
    for (i, zi) in z.iter_mut().enumerate() {
        for _ in 0..3 {
            let (ratio, _) = newton_ratio(&a, norm1, *zi);
            if ratio.re.is_finite() && ratio.im.is_finite() && ratio.norm() < 1e-3 * zi.norm().max(1e-300) {
                *zi -= ratio;
            }
        }
        let (_, res) = newton_ratio(&a, norm1, *zi);
        if !(res <= tol) {
            failed.push(i);
        }
        residuals.push(res);
    }
    if !failed.is_empty() {
        return Err(Error::NoConvergence(format!(
            "{} of {} roots not certified after {} iterations (indices {:?})",
            failed.len(),
            d,
            iterations,
            &failed[..failed.len().min(20)]
        )));
    }
    roots.extend(z);
    let mut all_res = vec![0.0; lo];
    all_res.extend(residuals);
    Ok(RootReport { roots, residuals: all_res, iterations })
}

/// One root (cluster) of the inventory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Zero {
    pub z: Complex64,
    pub multiplicity: usize,
}

/// A matching of roots under an involutive map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pairing {
    /// Partner index per root (a root may be its own partner).
    pub partner: Vec<usize>,
    /// `|w_partner − map(w)|` per root.
    pub error: Vec<f64>,
}

impl Pairing {
    pub fn is_involution(&self) -> bool {
        self.partner.iter().enumerate().all(|(i, &j)| self.partner[j] == i)
    }

    pub fn max_error(&self) -> f64 {
        self.error.iter().copied().fold(0.0, f64::max)
    }
}

/// Greedy matching under `map`, smallest symmetric mismatch first.
pub fn pair_roots<F: Fn(Complex64) -> Complex64>(zs: &[Complex64], map: F) -> Pairing {
    let n = zs.len();
    let images: Vec<Complex64> = zs.iter().map(|&z| map(z)).collect();
    const NEAREST: usize = 6;
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        let mut best: Vec<(f64, usize)> = (0..n).map(|j| ((zs[j] - images[i]).norm(), j)).collect();
        let k = NEAREST.min(n);
        best.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
        for &(_, j) in &best[..k] {
            let dist = (zs[j] - images[i]).norm().max((zs[i] - images[j]).norm());
            cand.push((dist, i.min(j), i.max(j)));
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut partner = vec![usize::MAX; n];
    for (_, i, j) in cand {
        if partner[i] == usize::MAX && partner[j] == usize::MAX {
            partner[i] = j;
            partner[j] = i;
        }
    }
    // anything left over pairs with itself
    for (i, p) in partner.iter_mut().enumerate() {
        if *p == usize::MAX {
            *p = i;
        }
    }
    let error = (0..n).map(|i| (zs[partner[i]] - images[i]).norm()).collect();
    Pairing { partner, error }
}

/// Roots of one determinant with their symmetry pairings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroInventory {
    pub zeros: Vec<Zero>,
    /// Pairing under `w ↦ 1/w̄`.
    pub inversive: Pairing,
    /// Pairing under the reflection `w ↦ e^{−2πi(n−1)α}/w` (or `1/w` once
    /// centered); even potentials only.
    pub reflection: Option<Pairing>,
    pub centered: bool,
    pub max_residual: f64,
}

/// Result of an annulus count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnulusCount {
    pub count: usize,
    /// Roots within the boundary tolerance of either circle.
    pub boundary: usize,
    /// Smallest distance `||w| − ρ|` to either boundary circle.
    pub margin: f64,
}

impl ZeroInventory {
    pub fn total(&self) -> usize {
        self.zeros.iter().map(|z| z.multiplicity).sum()
    }

    pub fn roots(&self) -> Vec<Complex64> {
        self.zeros.iter().map(|z| z.z).collect()
    }

    /// Number of off-circle roots and the largest inversive mismatch among them.
    pub fn off_circle_pairing(&self) -> (usize, f64) {
        let mut count = 0;
        let mut worst = 0.0f64;
        for (i, z) in self.zeros.iter().enumerate() {
            if (z.z.norm() - 1.0).abs() > ON_CIRCLE_TOL {
                count += 1;
                let j = self.inversive.partner[i];
                let err = if j == i { f64::INFINITY } else { self.inversive.error[i] };
                worst = worst.max(err);
            }
        }
        (count, worst)
    }

    /// `N(ε)`: roots in the closed annulus `e^{−2πε} ≤ |z| ≤ e^{2πε}`.
    pub fn count_annulus(&self, eps: f64) -> Result<AnnulusCount> {
        if !(eps >= 0.0) {
            return Err(Error::Validation(format!("annulus half-width must be nonnegative, got {eps}")));
        }
        let outer = (TAU * eps).exp();
        let inner = 1.0 / outer;
        let mut count = 0;
        let mut boundary = 0;
        let mut margin = f64::INFINITY;
        for z in &self.zeros {
            let r = z.z.norm();
            let m = (r - outer).abs().min((r - inner).abs());
            margin = margin.min(m);
            if m <= BOUNDARY_TOL {
                boundary += z.multiplicity;
                count += z.multiplicity;
            } else if r >= inner && r <= outer {
                count += z.multiplicity;
            }
        }
        Ok(AnnulusCount { count, boundary, margin })
    }
}

/// Finds the zeros of `D_n(·, E)` and pairs them.
pub fn find_zeros(d: &DeterminantFamily, tol: f64) -> Result<ZeroInventory> {
    if d.poly.is_zero() {
        return Err(Error::Precondition("determinant is identically zero".into()));
    }
    let report = polynomial_roots(&d.poly.coeffs, tol)?;
    let max_residual = report.residuals.iter().copied().fold(0.0, f64::max);
    let zeros = cluster(&report.roots);
    let zs: Vec<Complex64> = zeros.iter().map(|z| z.z).collect();
    let inversive = pair_roots(&zs, |w| w.conj().inv());
    let reflection = if d.even_potential {
        if d.centered {
            Some(pair_roots(&zs, |w| w.inv()))
        } else {
            let rot = Complex64::from_polar(1.0, -TAU * (d.n as f64 - 1.0) * d.alpha);
            Some(pair_roots(&zs, |w| rot / w))
        }
    } else {
        None
    };
    Ok(ZeroInventory { zeros, inversive, reflection, centered: d.centered, max_residual })
}

/// Groups numerically coincident roots.
fn cluster(roots: &[Complex64]) -> Vec<Zero> {
    let mut out: Vec<Zero> = Vec::with_capacity(roots.len());
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut sum = roots[i];
        let mut m = 1;
        for j in i + 1..roots.len() {
            if !used[j] && (roots[j] - roots[i]).norm() <= 1e-9 * roots[i].norm().max(1.0) {
                used[j] = true;
                sum += roots[j];
                m += 1;
            }
        }
        out.push(Zero { z: sum / m as f64, multiplicity: m });
    }
    out.sort_by(|a, b| a.z.norm().total_cmp(&b.z.norm()).then(a.z.arg().total_cmp(&b.z.arg())));
    out
}

/// Zero inventory of `D_n(·, E)` and of its centered form (even potentials).
pub fn inventory_for(params: &CocycleParams, centered: bool) -> Result<ZeroInventory> {
    let d = determinant_poly(&params.potential, &params.frequency, params.energy, params.n)?;
    let d = if centered { center_poly(&d, &params.frequency)? } else { d };
    find_zeros(&d, DEFAULT_TOL)
}

/// Outcome of one zero-count check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroCountCheck {
    pub n: usize,
    pub energy: f64,
    /// The ε actually used (shifted away from boundary zeros if needed).
    pub eps: f64,
    /// `N_n(E, ε/2)`.
    pub count: usize,
    pub kappa: i64,
    /// `|N/(2n) − κ|`.
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub l0: f64,
    pub boundary_margin: f64,
}

/// Tolerance schedule `0.15 (n/100)^{−0.4535}`: 0.15 at n = 100, 0.08 at n = 400.
pub fn default_count_tolerance(n: usize) -> f64 {
    0.15 * (n as f64 / 100.0).powf(-(0.15f64 / 0.08).ln() / 4f64.ln())
}

/// Shift applied to ε when a zero sits on a query circle.
const BOUNDARY_SHIFT: f64 = 1e-3;

/// Checks `|(1/2n) N_n(E, ε/2) − κ(E, 0)|` against `tolerance`.
///
/// κ is measured from `L_n(E, ·)` on ten equispaced points in `(0, ε]`;
/// a slope break there is a precondition violation, as is a Lyapunov
/// exponent below `tau_pos`.
pub fn verify_zero_count_theorem(
    params: &CocycleParams,
    eps: f64,
    tau_pos: f64,
    tolerance: f64,
    quadrature: usize,
) -> Result<ZeroCountCheck> {
    let p0 = params.with_eps(0.0)?;
    let l0 = lyapunov_n(&p0, quadrature)?.value;
    if !(l0 >= tau_pos) {
        return Err(Error::Precondition(format!(
            "Lyapunov exponent {l0:.4} at E = {} is below the positivity threshold {tau_pos}",
            params.energy
        )));
    }
    let kappa = kappa_on(&p0, eps, quadrature)?;
    let inv = inventory_for(&p0, false)?;
    let mut e = eps;
    let mut count = inv.count_annulus(e / 2.0)?;
    let mut tries = 0;
    while count.boundary > 0 && tries < 4 {
        tries += 1;
        e = if tries % 2 == 1 { eps + BOUNDARY_SHIFT * tries as f64 } else { eps - BOUNDARY_SHIFT * tries as f64 };
        count = inv.count_annulus(e / 2.0)?;
    }
    let deviation = (count.count as f64 / (2.0 * params.n as f64) - kappa.rounded as f64).abs();
    Ok(ZeroCountCheck {
        n: params.n,
        energy: params.energy,
        eps: e,
        count: count.count,
        kappa: kappa.rounded,
        deviation,
        tolerance,
        pass: deviation <= tolerance,
        l0,
        boundary_margin: count.margin,
    })
}

/// Acceleration measured on `(0, eps]`, failing on a slope break.
pub fn kappa_on(params: &CocycleParams, eps: f64, quadrature: usize) -> Result<AccelerationEstimate> {
    let grid: Vec<f64> = (1..=10).map(|j| eps * j as f64 / 10.0).collect();
    let rep = acceleration(params, &grid, quadrature)?;
    rep.require_affine().map_err(|e| Error::Precondition(format!("acceleration window (0, {eps}]: {e}")))
}

/// Zero-count checks along a ladder of volumes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroCountLadder {
    pub checks: Vec<ZeroCountCheck>,
    /// Whether the deviation is nonincreasing along the ladder.
    pub nonincreasing: bool,
    /// Log–log slope of deviation against n (None when a deviation is zero).
    pub decay_exponent: Option<f64>,
}

pub fn zero_count_ladder(
    params: &CocycleParams,
    eps: f64,
    ns: &[usize],
    tau_pos: f64,
    quadrature: usize,
) -> Result<ZeroCountLadder> {
    let checks = ns
        .iter()
        .map(|&n| verify_zero_count_theorem(&params.with_n(n)?, eps, tau_pos, default_count_tolerance(n), quadrature))
        .collect::<Result<Vec<_>>>()?;
    let nonincreasing = checks.windows(2).all(|w| w[1].deviation <= w[0].deviation);
    let decay_exponent = if checks.len() >= 2 && checks.iter().all(|c| c.deviation > 0.0) {
        let xs: Vec<f64> = checks.iter().map(|c| (c.n as f64).ln()).collect();
        let ys: Vec<f64> = checks.iter().map(|c| c.deviation.ln()).collect();
        fit_line(&xs, &ys).map(|f| f.slope)
    } else {
        None
    };
    Ok(ZeroCountLadder { checks, nonincreasing, decay_exponent })
}

/// The reflection partner `e^{−2πi(n−1)α}/w` of an uncentered root.
pub fn reflection_partner(w: Complex64, n: usize, freq: &Frequency) -> Complex64 {
    Complex64::from_polar(1.0, -TAU * freq.frac_multiple(n as i64 - 1)) / w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Potential;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn from_roots(roots: &[Complex64]) -> Vec<Complex64> {
        let mut a = vec![c(1.0, 0.0)];
        for &r in roots {
            let mut b = vec![ZERO; a.len() + 1];
            for (k, &ak) in a.iter().enumerate() {
                b[k + 1] += ak;
                b[k] -= ak * r;
            }
            a = b;
        }
        a
    }

    #[test]
    fn amo_n1_zeros_are_plus_minus_i() {
        let g = Frequency::golden();
        let d = determinant_poly(&Potential::amo(2.0), &g, 0.0, 1).unwrap();
        let inv = find_zeros(&d, DEFAULT_TOL).unwrap();
        assert_eq!(inv.total(), 2);
        let mut rs = inv.roots();
        rs.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((rs[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((rs[1] - c(0.0, 1.0)).norm() < 1e-14);
        assert_eq!(inv.count_annulus(0.0).unwrap().count, 2);
    }

    #[test]
    fn free_determinant_has_no_zeros() {
        let g = Frequency::golden();
        let d = determinant_poly(&Potential::zero(), &g, 0.3, 7).unwrap();
        let inv = find_zeros(&d, DEFAULT_TOL).unwrap();
        assert_eq!(inv.total(), 0);
        assert_eq!(inv.count_annulus(0.5).unwrap().count, 0);
    }

    #[test]
    fn planted_roots_recovered() {
        let planted: Vec<Complex64> = (0..30)
            .map(|k| {
                let r = 0.6 + 0.03 * k as f64;
                Complex64::from_polar(r, 0.7 + 2.1 * k as f64)
            })
            .collect();
        let a = from_roots(&planted);
        let rep = polynomial_roots(&a, DEFAULT_TOL).unwrap();
        for p in &planted {
            let best = rep.roots.iter().map(|r| (r - p).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9, "{p} missed by {best}");
        }
    }

    #[test]
    fn roots_at_origin_from_trailing_zeros() {
        let a = [ZERO, ZERO, c(-1.0, 0.0), c(1.0, 0.0)];
        let rep = polynomial_roots(&a, DEFAULT_TOL).unwrap();
        assert_eq!(rep.roots.iter().filter(|r| r.norm() == 0.0).count(), 2);
        assert!(rep.roots.iter().any(|r| (r - c(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn amo_inventory_pairs() {
        let g = Frequency::golden();
        let p = CocycleParams::new(Potential::amo(2.0), g, 0.37, 0.0, 60).unwrap();
        let inv = inventory_for(&p, false).unwrap();
        assert_eq!(inv.total(), 120);
        assert!(inv.inversive.is_involution());
        let (_, worst) = inv.off_circle_pairing();
        assert!(worst <= 1e-7, "{worst}");
        let refl = inv.reflection.as_ref().unwrap();
        assert!(refl.max_error() < 1e-6);
        let cinv = inventory_for(&p, true).unwrap();
        assert!(cinv.reflection.as_ref().unwrap().max_error() < 1e-6);
    }

    #[test]
    fn count_contains_everything_for_large_eps() {
        let g = Frequency::golden();
        let p = CocycleParams::new(Potential::amo(2.0), g, 0.1, 0.0, 30).unwrap();
        let inv = inventory_for(&p, false).unwrap();
        assert_eq!(inv.count_annulus(0.9).unwrap().count, 60);
    }

    #[test]
    fn free_potential_fails_precondition() {
        let p = CocycleParams::new(Potential::zero(), Frequency::golden(), 0.5, 0.0, 50).unwrap();
        let r = verify_zero_count_theorem(&p, 0.05, 0.05, 0.1, 64);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn tolerance_schedule_endpoints() {
        assert!((default_count_tolerance(100) - 0.15).abs() < 1e-12);
        assert!((default_count_tolerance(400) - 0.08).abs() < 1e-12);
    }
}
