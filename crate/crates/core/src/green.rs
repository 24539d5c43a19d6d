//! Green's function of the annulus `A_R = {1/R < |z| < R}` by the method of
//! images, and its closed-form circle integrals.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest number of image factors used by [`truncation_terms`].
pub const MAX_TRUNCATION: usize = 256;
/// Target truncation error of [`truncation_terms`].
pub const TRUNCATION_TARGET: f64 = 1e-12;

/// Bound on the error from keeping `k` factors of each image product.
pub fn truncation_bound(r_outer: f64, k: usize) -> f64 {
    let q = r_outer.powi(-4);
    let qk = q.powi(k as i32);
    // four tails Σ_{j>k} |log|1 − x_j||, x_j ≤ R^{4−4j}, scaled by 1/2π
    4.0 / TAU * qk / ((1.0 - q) * (1.0 - qk.min(0.5)))
}

/// Smallest factor count whose truncation bound is below `1e−12`, capped at
/// [`MAX_TRUNCATION`].
pub fn truncation_terms(r_outer: f64) -> usize {
    let mut k = 1;
    while k < MAX_TRUNCATION && truncation_bound(r_outer, k) > TRUNCATION_TARGET {
        k += 1;
    }
    k
}

fn check_annulus(z: Complex64, r_outer: f64, what: &str) -> Result<()> {
    let r = z.norm();
    let slack = 1e-12;
    if !(r * (1.0 + slack) >= 1.0 / r_outer && r <= r_outer * (1.0 + slack)) {
        return Err(Error::Domain(format!("{what} = {z} has modulus {r} outside [1/R, R] with R = {r_outer}")));
    }
    Ok(())
}

/// `G_R(z, w)`, zero on both boundary circles and `(1/2π) log|z − w|` plus a
/// harmonic function near `w`.
pub fn green_annulus(z: Complex64, w: Complex64, r_outer: f64, k_trunc: usize) -> Result<f64> {
    if !(r_outer > 1.0) || k_trunc == 0 {
        return Err(Error::Validation(format!("need R > 1 and K ≥ 1 (got R = {r_outer}, K = {k_trunc})")));
    }
    check_annulus(z, r_outer, "z")?;
    check_annulus(w, r_outer, "w")?;
    if z == w {
        return Err(Error::Domain(format!("Green's function is singular at z = w = {z}")));
    }
    Ok(green_unchecked(z, w, r_outer, k_trunc))
}

/// [`green_annulus`] without argument checks.
pub fn green_unchecked(z: Complex64, w: Complex64, r_outer: f64, k_trunc: usize) -> f64 {
    let log_r = r_outer.ln();
    let first = (z.norm() / r_outer).ln() * (w.norm() / r_outer).ln() / (4.0 * PI * log_r);
    let zw = z / w;
    let wz = w / z;
    let wzbar = w * z.conj();
    let inv_wzbar = wzbar.inv();
    let q4 = r_outer.powi(-4);
    let mut a = q4; // R^{−4k}
    let mut b = r_outer.powi(-2); // R^{−(4k−2)}
    let mut num = 1.0f64;
    let mut den = 1.0f64;
    for _ in 0..k_trunc {
        num *= (1.0 - zw * a).norm() * (1.0 - wz * a).norm();
        den *= (1.0 - wzbar * b).norm() * (1.0 - inv_wzbar * b).norm();
        a *= q4;
        b *= q4;
    }
    let base = ((z - w) / r_outer).norm();
    first + (base * num / den).ln() / TAU
}

/// `∫_0^{2π} G_R(r e^{iφ}, w) dφ` in closed form.
pub fn circle_average_green(r: f64, r_outer: f64, w: Complex64) -> Result<f64> {
    if !(r_outer > 1.0) {
        return Err(Error::Validation(format!("need R > 1, got {r_outer}")));
    }
    let slack = 1e-12;
    if !(r * (1.0 + slack) >= 1.0 / r_outer && r <= r_outer * (1.0 + slack)) {
        return Err(Error::Domain(format!("radius {r} outside [1/R, R]")));
    }
    check_annulus(w, r_outer, "w")?;
    Ok(circle_average_unchecked(r, r_outer, w.norm()))
}

pub(crate) fn circle_average_unchecked(r: f64, r_outer: f64, w_abs: f64) -> f64 {
    let two_log_r = 2.0 * r_outer.ln();
    if w_abs >= r {
        (r * r_outer).ln() * (w_abs / r_outer).ln() / two_log_r
    } else {
        (r / r_outer).ln() * (w_abs * r_outer).ln() / two_log_r
    }
}

/// `(2π/M) Σ_j G_R(r e^{2πij/M}, w)`, the quadrature counterpart of
/// [`circle_average_green`].
pub fn circle_average_quadrature(r: f64, r_outer: f64, w: Complex64, m: usize, k_trunc: usize) -> f64 {
    let vals: Vec<f64> = (0..m)
        .map(|j| green_unchecked(Complex64::from_polar(r, TAU * j as f64 / m as f64), w, r_outer, k_trunc))
        .collect();
    TAU * crate::numeric::pairwise_sum(&vals) / m as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r_outer() -> f64 {
        (TAU * 0.05).exp()
    }

    #[test]
    fn truncation_count() {
        let k = truncation_terms(r_outer());
        assert!(truncation_bound(r_outer(), k) <= 1e-12);
        assert!(k > 10 && k < 40);
        assert_eq!(truncation_terms((TAU * 1e-4).exp()), MAX_TRUNCATION);
    }

    #[test]
    fn vanishes_on_boundary() {
        let r = r_outer();
        let k = truncation_terms(r);
        let w = Complex64::new(1.05, 0.2);
        for j in 0..16 {
            let ph = TAU * j as f64 / 16.0;
            assert!(green_annulus(Complex64::from_polar(r, ph), w, r, k).unwrap().abs() < 1e-10);
            assert!(green_annulus(Complex64::from_polar(1.0 / r, ph), w, r, k).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn singular_and_domain_errors() {
        let r = r_outer();
        let w = Complex64::new(1.0, 0.0);
        assert!(matches!(green_annulus(w, w, r, 5), Err(Error::Domain(_))));
        assert!(matches!(green_annulus(Complex64::new(2.0, 0.0), w, r, 5), Err(Error::Domain(_))));
    }

    #[test]
    fn log_singularity_near_w() {
        let r = r_outer();
        let k = truncation_terms(r);
        let w = Complex64::new(0.0, 1.02);
        let h = 1e-7;
        let g = green_annulus(w + h, w, r, k).unwrap();
        let g2 = green_annulus(w + 2.0 * h, w, r, k).unwrap();
        assert!(((g2 - g) - 2f64.ln() / TAU).abs() < 1e-6);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let r = r_outer();
        let k = truncation_terms(r);
        let w = Complex64::new(1.1, 0.1);
        for rr in [1.0 / r * 1.01, 1.0, 1.03, r * 0.99] {
            let q = circle_average_quadrature(rr, r, w, 2048, k);
            let c = circle_average_green(rr, r, w).unwrap();
            assert!((q - c).abs() < 1e-9, "{rr}: {q} vs {c}");
        }
    }

    #[test]
    fn closed_form_edges() {
        let r = r_outer();
        let w = Complex64::from_polar(1.1, 0.3);
        assert!(circle_average_green(r, r, w).unwrap().abs() < 1e-15);
        let a = circle_average_unchecked(1.1, r, 1.1);
        let b = circle_average_unchecked(1.1 * (1.0 + 1e-12), r, 1.1);
        assert!((a - b).abs() < 1e-10);
    }
}
