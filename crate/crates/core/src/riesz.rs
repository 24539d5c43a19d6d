//! Riesz decomposition of `u_n` on an annulus, the Jensen-type circle
//! average identity, and flux estimates of the Riesz mass of `u_n` and `v_n`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cocycle::lyapunov_n;
use crate::determinant::DeterminantFamily;
use crate::error::{Error, Result};
use crate::green::{circle_average_unchecked, green_unchecked, truncation_terms};
use crate::model::CocycleParams;
use crate::numeric::{mean, pairwise_sum};
use crate::zeros::{ZeroInventory, BOUNDARY_TOL};

/// Circle mean `(1/M) Σ_j u_n(r e^{2πij/M})`.
pub fn un_circle_mean(d: &DeterminantFamily, r: f64, m: usize) -> f64 {
    let vals: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|j| d.poly.log_abs(Complex64::from_polar(r, TAU * j as f64 / m as f64)) / d.n as f64)
        .collect();
    pairwise_sum(&vals) / m as f64
}

/// Smallest `|log|w| − log r|` over the inventory (infinite when empty).
pub fn log_margin(inv: &ZeroInventory, r: f64) -> f64 {
    let lr = r.ln();
    inv.zeros.iter().map(|z| (z.z.norm().ln() - lr).abs()).fold(f64::INFINITY, f64::min)
}

fn require_zero_free(inv: &ZeroInventory, r: f64) -> Result<()> {
    for z in &inv.zeros {
        if (z.z.norm() - r).abs() <= BOUNDARY_TOL {
            return Err(Error::BoundaryZero { re: z.z.re, im: z.z.im, radius: r });
        }
    }
    Ok(())
}

/// Zeros inside the closed annulus `A_R` with their multiplicities.
fn interior_zeros(inv: &ZeroInventory, r_outer: f64) -> Vec<(Complex64, f64)> {
    inv.zeros
        .iter()
        .filter(|z| {
            let r = z.z.norm();
            r >= 1.0 / r_outer && r <= r_outer
        })
        .map(|z| (z.z, z.multiplicity as f64))
        .collect()
}

/// `2π G_{R,n}(z) = (2π/n) Σ_k G_R(z, w_k)` over the zeros inside `A_R`.
pub fn green_potential(zeros: &[(Complex64, f64)], n: usize, r_outer: f64, k_trunc: usize, z: Complex64) -> f64 {
    let terms: Vec<f64> = zeros.iter().map(|&(w, m)| m * green_unchecked(z, w, r_outer, k_trunc)).collect();
    TAU * pairwise_sum(&terms) / n as f64
}

/// Samples of `u_n = 2πG_{R,n} + h_{R,n}` on concentric circles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RieszDecomposition {
    pub r_outer: f64,
    pub k_trunc: usize,
    pub radii: Vec<f64>,
    pub points_per_circle: usize,
    /// `u_n` samples, one row per radius.
    pub un: Vec<Vec<f64>>,
    /// `2π G_{R,n}` samples.
    pub green_part: Vec<Vec<f64>>,
    /// `h_{R,n} = u_n − 2π G_{R,n}` samples.
    pub harmonic_part: Vec<Vec<f64>>,
}

/// Splits `u_n` into its Green potential on `A_R` and the harmonic rest,
/// sampled at `m` equispaced angles on each radius in `radii`.
pub fn riesz_decompose_un(
    d: &DeterminantFamily,
    inv: &ZeroInventory,
    r_outer: f64,
    radii: &[f64],
    m: usize,
) -> Result<RieszDecomposition> {
    if !(r_outer > 1.0) || m == 0 {
        return Err(Error::Validation(format!("need R > 1 and at least one angle (R = {r_outer})")));
    }
    require_zero_free(inv, r_outer)?;
    require_zero_free(inv, 1.0 / r_outer)?;
    for &r in radii {
        if !(r * (1.0 + 1e-12) >= 1.0 / r_outer && r <= r_outer * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!("sample radius {r} outside [1/R, R]")));
        }
    }
    let k_trunc = truncation_terms(r_outer);
    let zeros = interior_zeros(inv, r_outer);
    let mut un = Vec::with_capacity(radii.len());
    let mut green_part = Vec::with_capacity(radii.len());
    let mut harmonic_part = Vec::with_capacity(radii.len());
    for &r in radii {
        let row: Vec<(f64, f64)> = (0..m)
            .into_par_iter()
            .map(|j| {
                let z = Complex64::from_polar(r, TAU * j as f64 / m as f64);
                let u = d.poly.log_abs(z) / d.n as f64;
                (u, green_potential(&zeros, d.n, r_outer, k_trunc, z))
            })
            .collect();
        un.push(row.iter().map(|x| x.0).collect::<Vec<_>>());
        green_part.push(row.iter().map(|x| x.1).collect::<Vec<_>>());
        harmonic_part.push(row.iter().map(|x| x.0 - x.1).collect::<Vec<_>>());
    }
    Ok(RieszDecomposition {
        r_outer,
        k_trunc,
        radii: radii.to_vec(),
        points_per_circle: m,
        un,
        green_part,
        harmonic_part,
    })
}

/// `h_{R,n}(z)` at a single point.
pub fn harmonic_part_at(d: &DeterminantFamily, inv: &ZeroInventory, r_outer: f64, z: Complex64) -> f64 {
    let k_trunc = truncation_terms(r_outer);
    let zeros = interior_zeros(inv, r_outer);
    d.poly.log_abs(z) / d.n as f64 - green_potential(&zeros, d.n, r_outer, k_trunc, z)
}

/// Diagnostics of a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RieszChecks {
    /// Max `|h − u_n|` over samples on the boundary circles.
    pub boundary_max: f64,
    /// Max `|h(z) − mean of h on a small circle about z|` at interior points.
    pub mean_value_max: f64,
    /// Max `|h − L_n(ε_R)|` over interior samples.
    pub interior_max_dev: f64,
    pub l_n_eps_r: f64,
    /// Smallest and largest `h − L_n(ε_R)` over interior samples.
    pub lower_gap: f64,
    pub upper_gap: f64,
}

/// Checks boundary agreement, the discrete mean-value property at
/// `mv_points` interior points (circle radius `mv_radius`, 64 nodes) and the
/// two-sided bound of `h` against `l_n_eps_r`. Interior samples are the rows
/// whose radius is strictly inside the annulus.
pub fn riesz_checks(
    dec: &RieszDecomposition,
    d: &DeterminantFamily,
    inv: &ZeroInventory,
    l_n_eps_r: f64,
    mv_centres: &[Complex64],
    mv_radius: f64,
) -> RieszChecks {
    let r_outer = dec.r_outer;
    let on_boundary = |r: f64| (r - r_outer).abs() <= 1e-12 * r_outer || (r - 1.0 / r_outer).abs() <= 1e-12;
    let mut boundary_max = 0.0f64;
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for (i, &r) in dec.radii.iter().enumerate() {
        for (j, &h) in dec.harmonic_part[i].iter().enumerate() {
            if on_boundary(r) {
                boundary_max = boundary_max.max((h - dec.un[i][j]).abs());
            } else if h.is_finite() {
                lower = lower.min(h - l_n_eps_r);
                upper = upper.max(h - l_n_eps_r);
            }
        }
    }
    let k_trunc = truncation_terms(r_outer);
    let zeros = interior_zeros(inv, r_outer);
    let h_at = |z: Complex64| d.poly.log_abs(z) / d.n as f64 - green_potential(&zeros, d.n, r_outer, k_trunc, z);
    let mean_value_max = mv_centres
        .par_iter()
        .map(|&c| {
            let ring: Vec<f64> =
                (0..64).map(|j| h_at(c + Complex64::from_polar(mv_radius, TAU * j as f64 / 64.0))).collect();
            (h_at(c) - mean(&ring)).abs()
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max);
    RieszChecks {
        boundary_max,
        mean_value_max,
        interior_max_dev: lower.abs().max(upper.abs()),
        l_n_eps_r,
        lower_gap: lower,
        upper_gap: upper,
    }
}

/// Both sides of the circle-average identity between radii `r1 < r2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JensenCheck {
    /// `Q(u_n)(r2) − Q(u_n)(r1)` by quadrature.
    pub lhs: f64,
    /// `(π/n) ∫_{ε1}^{ε2} N_n(ε) dε` from the inventory.
    pub count_integral: f64,
    /// Harmonic-part difference, interpolated in `log r` from the boundary means.
    pub harmonic_diff: f64,
    /// `|lhs − count_integral − harmonic_diff|`.
    pub residual: f64,
    /// Same identity with the Green part taken from the closed-form circle
    /// integrals of each zero (no symmetry of the zero set assumed).
    pub green_form_residual: f64,
}

/// Compares the quadrature circle means of `u_n` with the exact count
/// integral, for `1 ≤ r1 < r2 ≤ R` with zero-free circles.
pub fn jensen_average_identity_check(
    d: &DeterminantFamily,
    inv: &ZeroInventory,
    r1: f64,
    r2: f64,
    r_outer: f64,
    m: usize,
) -> Result<JensenCheck> {
    if !(1.0 <= r1 && r1 < r2 && r2 <= r_outer) {
        return Err(Error::Validation(format!("need 1 ≤ r1 < r2 ≤ R (got {r1}, {r2}, {r_outer})")));
    }
    for r in [r1, r2, r_outer, 1.0 / r_outer] {
        require_zero_free(inv, r)?;
    }
    let n = d.n as f64;
    let q = |r: f64| un_circle_mean(d, r, m);
    let lhs = q(r2) - q(r1);
    let (e1, e2) = (r1.ln() / TAU, r2.ln() / TAU);
    let count_terms: Vec<f64> = inv
        .zeros
        .iter()
        .map(|z| {
            let ek = z.z.norm().ln().abs() / TAU;
            z.multiplicity as f64 * (e2 - e1.max(ek)).max(0.0)
        })
        .collect();
    let count_integral = std::f64::consts::PI / n * pairwise_sum(&count_terms);
    let boundary_diff = q(r_outer) - q(1.0 / r_outer);
    let harmonic_diff = boundary_diff * (r2.ln() - r1.ln()) / (2.0 * r_outer.ln());
    let zeros = interior_zeros(inv, r_outer);
    let green_terms: Vec<f64> = zeros
        .iter()
        .map(|&(w, mult)| {
            mult * (circle_average_unchecked(r2, r_outer, w.norm()) - circle_average_unchecked(r1, r_outer, w.norm()))
        })
        .collect();
    let green_diff = pairwise_sum(&green_terms) / n;
    Ok(JensenCheck {
        lhs,
        count_integral,
        harmonic_diff,
        residual: (lhs - count_integral - harmonic_diff).abs(),
        green_form_residual: (lhs - green_diff - harmonic_diff).abs(),
    })
}

/// `d/d log ρ` of the circle mean of `v_n` at radius `ρ = e^{−2πε}`, by
/// central differences with step `δ` in ε.
fn vn_flux(params: &CocycleParams, eps: f64, delta: f64, m: usize) -> Result<f64> {
    let hi = lyapunov_n(&params.with_eps(eps + delta)?, m)?.value;
    let lo = lyapunov_n(&params.with_eps(eps - delta)?, m)?.value;
    // dε/dlogρ = −1/2π
    Ok(-(hi - lo) / (2.0 * delta) / TAU)
}

/// Riesz mass of `v_n` on the annulus `A_{r e^{2πδ}}`, as the flux difference
/// through its two boundary circles.
pub fn riesz_mass_vn(params: &CocycleParams, r: f64, delta: f64, m: usize) -> Result<f64> {
    if !(r > 1.0) || !(delta > 0.0) {
        return Err(Error::Validation(format!("need r > 1 and δ > 0 (got r = {r}, δ = {delta})")));
    }
    let eps_o = r.ln() / TAU + delta;
    let eta = params.potential.eta();
    if eps_o + delta >= eta {
        return Err(Error::Validation(format!("annulus radius {r} too large for band radius {eta}")));
    }
    // outer circle ↔ ε = −eps_o, inner circle ↔ ε = +eps_o
    let out = vn_flux(params, -eps_o, delta, m)?;
    let inn = vn_flux(params, eps_o, delta, m)?;
    Ok(out - inn)
}

/// Riesz mass of `u_n` on `A_{r e^{2πδ}}` from circle means of the
/// determinant, with the same flux stencil as [`riesz_mass_vn`].
pub fn riesz_mass_un(d: &DeterminantFamily, r: f64, delta: f64, m: usize) -> Result<f64> {
    if !(r > 1.0) || !(delta > 0.0) {
        return Err(Error::Validation(format!("need r > 1 and δ > 0 (got r = {r}, δ = {delta})")));
    }
    let lo = r.ln() + TAU * delta;
    let h = TAU * delta;
    let flux = |log_rho: f64| {
        (un_circle_mean(d, (log_rho + h).exp(), m) - un_circle_mean(d, (log_rho - h).exp(), m)) / (2.0 * h)
    };
    Ok(flux(lo) - flux(-lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::determinant::{determinant_poly, ScaledLaurentPoly};
    use crate::model::{Frequency, Potential};
    use crate::zeros::{find_zeros, DEFAULT_TOL};

    fn synthetic(roots: &[Complex64]) -> DeterminantFamily {
        let mut a = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut b = vec![Complex64::new(0.0, 0.0); a.len() + 1];
            for (k, &ak) in a.iter().enumerate() {
                b[k + 1] += ak;
                b[k] -= ak * r;
            }
            a = b;
        }
        let lo = -(roots.len() as i64) / 2;
        DeterminantFamily {
            n: roots.len() / 2,
            energy: 0.0,
            poly: ScaledLaurentPoly::new(lo, a, 0.0),
            centered: false,
            start: 0,
            alpha: 0.5,
            even_potential: false,
        }
    }

    #[test]
    fn jensen_on_planted_symmetric_roots() {
        let mut roots = Vec::new();
        for (k, r) in [1.004, 1.02, 1.05, 1.11, 1.4].iter().enumerate() {
            let w = Complex64::from_polar(*r, 0.9 + 1.7 * k as f64);
            roots.push(w);
            roots.push(w.conj().inv());
        }
        let d = synthetic(&roots);
        let inv = find_zeros(&d, DEFAULT_TOL).unwrap();
        let r_outer = (TAU * 0.05).exp();
        let chk = jensen_average_identity_check(&d, &inv, 1.01, 1.08, r_outer, 4096).unwrap();
        assert!(chk.residual < 1e-8, "{chk:?}");
        assert!(chk.green_form_residual < 1e-8, "{chk:?}");
    }

    #[test]
    fn jensen_free_is_exact() {
        let g = Frequency::golden();
        let d = determinant_poly(&Potential::zero(), &g, 0.4, 20).unwrap();
        let inv = find_zeros(&d, DEFAULT_TOL).unwrap();
        let chk = jensen_average_identity_check(&d, &inv, 1.0, 1.2, 1.3, 256).unwrap();
        assert_eq!(chk.residual, 0.0);
    }

    #[test]
    fn boundary_zero_rejected() {
        let d = synthetic(&[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
        let inv = find_zeros(&d, DEFAULT_TOL).unwrap();
        let r = jensen_average_identity_check(&d, &inv, 1.0, 1.1, 1.2, 64);
        assert!(matches!(r, Err(Error::BoundaryZero { .. })));
    }

    #[test]
    fn decomposition_boundary_agreement() {
        let g = Frequency::golden();
        let d = determinant_poly(&Potential::amo(2.0), &g, 0.5, 40).unwrap();
        let inv = find_zeros(&d, DEFAULT_TOL).unwrap();
        let r_outer = (TAU * 0.05).exp();
        let dec = riesz_decompose_un(&d, &inv, r_outer, &[1.0 / r_outer, 1.1, r_outer], 64).unwrap();
        let chk = riesz_checks(&dec, &d, &inv, 0.0, &[Complex64::new(1.2, 0.0)], 0.05);
        assert!(chk.boundary_max < 1e-8);
        assert!(chk.mean_value_max < 1e-5);
    }

    #[test]
    fn free_masses_vanish() {
        let g = Frequency::golden();
        let p = CocycleParams::new(Potential::zero(), g.clone(), 0.3, 0.0, 30).unwrap();
        let r = (TAU * 0.02).exp();
        assert!(riesz_mass_vn(&p, r, 1e-3, 256).unwrap().abs() < 1e-9);
        let d = determinant_poly(&Potential::zero(), &g, 0.3, 30).unwrap();
        assert!(riesz_mass_un(&d, r, 1e-3, 256).unwrap().abs() < 1e-9);
    }
}
