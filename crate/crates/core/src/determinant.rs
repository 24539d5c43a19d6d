//! Dirichlet determinants `D_n(z, E) = det(E − H)|[0, n−1]` as Laurent
//! polynomials in `z = e^{2πiθ}`, stored with a shared logarithmic scale.

use std::f64::consts::{LN_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Frequency, Potential};

/// Default cap on `k0 · n`.
pub const DEFAULT_DEGREE_CAP: usize = 4096;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `e^{log_scale} · Σ_{k=lo}^{hi} coeffs[k − lo] z^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledLaurentPoly {
    pub lo: i64,
    pub coeffs: Vec<Complex64>,
    pub log_scale: f64,
}

/// JSON dump `{"lo": int, "log_scale": real, "coeffs": [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyDump {
    pub lo: i64,
    pub log_scale: f64,
    pub coeffs: Vec<(f64, f64)>,
}

impl ScaledLaurentPoly {
    pub fn new(lo: i64, coeffs: Vec<Complex64>, log_scale: f64) -> Self {
        let mut p = ScaledLaurentPoly { lo, coeffs, log_scale };
        p.normalize();
        p
    }

    pub fn constant(c: f64) -> Self {
        ScaledLaurentPoly::new(0, vec![Complex64::new(c, 0.0)], 0.0)
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    /// Coefficient of `z^k` relative to the scale.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let i = k - self.lo;
        if i < 0 || i >= self.coeffs.len() as i64 {
            ZERO
        } else {
            self.coeffs[i as usize]
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_scale == f64::NEG_INFINITY
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Rescales by a power of two so that `max |coeffs| ∈ [0.5, 2]`.
    pub fn normalize(&mut self) {
        let m = self.max_abs();
        if m == 0.0 || !m.is_finite() {
            if m == 0.0 {
                self.log_scale = f64::NEG_INFINITY;
            }
            return;
        }
        let k = m.log2().round() as i32;
        if k != 0 {
            let f = 2f64.powi(-k);
            for c in &mut self.coeffs {
                *c *= f;
            }
            self.log_scale += k as f64 * LN_2;
        }
    }

    /// Drops zero coefficients at both ends (a zero polynomial keeps one entry).
    pub fn trim(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs[self.coeffs.len() - 1] == ZERO {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().position(|c| *c != ZERO).unwrap_or(self.coeffs.len() - 1);
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.lo += lead as i64;
        }
    }

    /// Value at `z` as `(mantissa, log_offset)` with `p(z) = mantissa · e^{log_offset}`.
    ///
    /// Horner runs in `1/z` from the top for `|z| ≥ 1` and in `z` from the
    /// bottom otherwise, so no power of z larger than one in modulus appears.
    pub fn eval_scaled(&self, z: Complex64) -> (Complex64, f64) {
        let r = z.norm();
        if r >= 1.0 {
            let w = z.inv();
            let mut acc = ZERO;
            for &c in &self.coeffs {
                acc = acc * w + c;
            }
            // acc = Σ c_k w^{hi−k}; multiply by z^hi = |z|^hi e^{i hi arg z}
            let hi = self.hi() as f64;
            let phase = Complex64::from_polar(1.0, hi * z.arg());
            (acc * phase, self.log_scale + hi * r.ln())
        } else {
            let mut acc = ZERO;
            for &c in self.coeffs.iter().rev() {
                acc = acc * z + c;
            }
            let lo = self.lo as f64;
            let phase = Complex64::from_polar(1.0, lo * z.arg());
            (acc * phase, self.log_scale + lo * r.ln())
        }
    }

    /// `log |p(z)|`; `−∞` at an exact zero.
    pub fn log_abs(&self, z: Complex64) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let (m, off) = self.eval_scaled(z);
        let a = m.norm();
        if a == 0.0 {
            f64::NEG_INFINITY
        } else {
            off + a.ln()
        }
    }

    /// Plain evaluation; overflows for large scales.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let (m, off) = self.eval_scaled(z);
        if self.is_zero() {
            ZERO
        } else {
            m * off.exp()
        }
    }

    /// Max over k of `|c_k − conj(c_{−k})| / max |c|`.
    pub fn inversive_deviation(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let span = self.lo.unsigned_abs().max(self.hi().unsigned_abs()) as i64;
        (-span..=span).map(|k| (self.coeff(k) - self.coeff(-k).conj()).norm()).fold(0.0, f64::max) / m
    }

    /// Max over k of `|c_k − c_{−k}| / max |c|`.
    pub fn palindromic_deviation(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let span = self.lo.unsigned_abs().max(self.hi().unsigned_abs()) as i64;
        (-span..=span).map(|k| (self.coeff(k) - self.coeff(-k)).norm()).fold(0.0, f64::max) / m
    }

    pub fn to_dump(&self) -> PolyDump {
        PolyDump { lo: self.lo, log_scale: self.log_scale, coeffs: self.coeffs.iter().map(|c| (c.re, c.im)).collect() }
    }

    pub fn from_dump(d: &PolyDump) -> Self {
        ScaledLaurentPoly {
            lo: d.lo,
            coeffs: d.coeffs.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
            log_scale: d.log_scale,
        }
    }
}

/// `D_n(z, E)` for one energy, optionally recentred by the half-orbit shift.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterminantFamily {
    pub n: usize,
    pub energy: f64,
    pub poly: ScaledLaurentPoly,
    /// Whether `z → z e^{−πi(n−1)α}` has been applied.
    pub centered: bool,
    /// Phase offset: the family is `D_n(θ + start·α)`.
    pub start: i64,
    pub alpha: f64,
    pub even_potential: bool,
}

impl DeterminantFamily {
    /// `u_n(z) = (1/n) log |D_n(z)|`.
    pub fn eval_un(&self, z: Complex64) -> Result<f64> {
        if z == ZERO || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Domain("u_n is evaluated at z = 0".into()));
        }
        Ok(self.poly.log_abs(z) / self.n as f64)
    }

    /// Degree span `hi − lo`.
    pub fn degree(&self) -> usize {
        (self.poly.hi() - self.poly.lo) as usize
    }
}

/// `D_n(z, E)` by the three-term recurrence.
pub fn determinant_poly(p: &Potential, freq: &Frequency, energy: f64, n: usize) -> Result<DeterminantFamily> {
    determinant_poly_shifted(p, freq, energy, n, 0, DEFAULT_DEGREE_CAP)
}

/// `D_n(θ + start·α, E)` as a Laurent polynomial in `z = e^{2πiθ}`:
/// `D_j = (E − f(z e^{2πi(start+j−1)α})) D_{j−1} − D_{j−2}`, `D_0 = 1`, `D_{−1} = 0`.
pub fn determinant_poly_shifted(
    p: &Potential,
    freq: &Frequency,
    energy: f64,
    n: usize,
    start: i64,
    degree_cap: usize,
) -> Result<DeterminantFamily> {
    if n == 0 {
        return Err(Error::Validation("determinant volume must be at least 1".into()));
    }
    if !energy.is_finite() {
        return Err(Error::Validation("energy must be finite".into()));
    }
    let k0 = p.degree();
    if k0 * n > degree_cap {
        return Err(Error::Size(format!("k0·n = {} exceeds the degree cap {degree_cap}", k0 * n)));
    }
    let half = k0 * n;
    let width = 2 * half + 1;
    // dense arrays indexed by exponent + half
    let mut prev = vec![ZERO; width]; // D_{j-2}
    let mut cur = vec![ZERO; width]; // D_{j-1}
    cur[half] = Complex64::new(1.0, 0.0);
    let mut next = vec![ZERO; width];
    let mut log_scale = 0.0f64;
    let fc = p.coeffs();
    let mut shifted = vec![ZERO; 2 * k0 + 1];
    for j in 1..=n {
        // Fourier coefficients of z ↦ f(z e^{2πi s α}), s = start + j − 1
        let s = start + j as i64 - 1;
        for (i, c) in fc.iter().enumerate() {
            let k = i as i64 - k0 as i64;
            let ph = freq.frac_multiple(k * s);
            shifted[i] = c * Complex64::from_polar(1.0, TAU * ph);
        }
        // D_{j−1} occupies exponents within ±k0(j−1)
        let span_prev = k0 * (j - 1);
        let span_new = k0 * j;
        for v in next[half - span_new..=half + span_new].iter_mut() {
            *v = ZERO;
        }
        for e in half - span_prev..=half + span_prev {
            let d = cur[e];
            next[e] += d * energy - prev[e];
            for (i, c) in shifted.iter().enumerate() {
                next[e + i - k0] -= c * d;
            }
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        // rescale both live vectors by a common power of two
        let m = cur[half - span_new..=half + span_new].iter().map(|c| c.norm()).fold(0.0, f64::max);
        if m > 0.0 && m.is_finite() {
            let k = m.log2().round() as i32;
            if k != 0 {
                let f = 2f64.powi(-k);
                for c in cur[half - span_new..=half + span_new].iter_mut() {
                    *c *= f;
                }
                for c in prev[half - span_prev..=half + span_prev].iter_mut() {
                    *c *= f;
                }
                log_scale += k as f64 * LN_2;
            }
        } else if !m.is_finite() {
            return Err(Error::NoConvergence("determinant recurrence overflowed".into()));
        }
    }
    let mut poly = ScaledLaurentPoly { lo: -(half as i64), coeffs: cur, log_scale };
    poly.trim();
    poly.normalize();
    Ok(DeterminantFamily { n, energy, poly, centered: false, start, alpha: freq.alpha(), even_potential: p.is_even() })
}

/// Applies `z → z e^{−πi(n−1)α}`, after which the determinant of an even
/// potential has palindromic coefficients.
pub fn center_poly(d: &DeterminantFamily, freq: &Frequency) -> Result<DeterminantFamily> {
    if !d.even_potential {
        return Err(Error::Contract("centering requires an even potential".into()));
    }
    if d.centered {
        return Err(Error::Contract("determinant is already centered".into()));
    }
    if d.start != 0 {
        return Err(Error::Contract("centering applies to the unshifted determinant".into()));
    }
    if (freq.alpha() - d.alpha).abs() > 0.0 {
        return Err(Error::Contract("frequency does not match the determinant".into()));
    }
    let n1 = d.n as i64 - 1;
    let mut out = d.clone();
    for (i, c) in out.poly.coeffs.iter_mut().enumerate() {
        let k = d.poly.lo + i as i64;
        let ph = freq.frac_half_multiple(n1 * k);
        *c *= Complex64::from_polar(1.0, -TAU * ph);
    }
    out.centered = true;
    Ok(out)
}

/// `max_k |c_k − conj(c_{−k})| / max |c|`.
pub fn verify_inversive_symmetry(d: &DeterminantFamily) -> f64 {
    d.poly.inversive_deviation()
}

/// Scalar determinant `D_n(θ + start·α, E)` at a real phase, as `(sign, log|D|)`
/// together with the preceding determinant `D_{n−1}` in the same form.
pub fn determinant_at_phase(p: &Potential, freq: &Frequency, theta: f64, energy: f64, n: usize) -> ScalarDet {
    let mut prev = 0.0f64;
    let mut cur = 1.0f64;
    let mut log_scale = 0.0f64;
    for j in 0..n {
        let v = p.eval_phase(theta + freq.frac_multiple(j as i64));
        let next = (energy - v) * cur - prev;
        prev = cur;
        cur = next;
        let m = cur.abs().max(prev.abs());
        if m > 0.0 {
            let k = m.log2().round() as i32;
            if k != 0 {
                let f = 2f64.powi(-k);
                cur *= f;
                prev *= f;
                log_scale += k as f64 * LN_2;
            }
        }
    }
    ScalarDet { value: cur, prev, log_scale }
}

/// `D_n = value · e^{log_scale}` and `D_{n−1} = prev · e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarDet {
    pub value: f64,
    pub prev: f64,
    pub log_scale: f64,
}

impl ScalarDet {
    pub fn to_f64(&self) -> f64 {
        self.value * self.log_scale.exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GOLDEN_MEAN;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn coeffs_abs(d: &DeterminantFamily) -> Vec<Complex64> {
        let s = d.poly.log_scale.exp();
        d.poly.coeffs.iter().map(|x| x * s).collect()
    }

    #[test]
    fn base_case_amo() {
        let g = Frequency::golden();
        let d = determinant_poly(&Potential::amo(2.0), &g, 0.7, 1).unwrap();
        assert_eq!(d.poly.lo, -1);
        let cs = coeffs_abs(&d);
        assert!((cs[0] - c(-2.0, 0.0)).norm() < 1e-14);
        assert!((cs[1] - c(0.7, 0.0)).norm() < 1e-14);
        assert!((cs[2] - c(-2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn free_determinant_is_constant() {
        let g = Frequency::golden();
        let d = determinant_poly(&Potential::zero(), &g, 1.5, 2).unwrap();
        assert_eq!(d.degree(), 0);
        assert!((d.poly.eval(c(0.3, 0.8)) - c(1.5 * 1.5 - 1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn three_by_three_matches_direct_expansion() {
        let g = Frequency::golden();
        let p = Potential::amo(2.0);
        let e = 0.0;
        let d = determinant_poly(&p, &g, e, 3).unwrap();
        for z in [c(0.6, 0.9), c(1.3, -0.2), c(-0.4, 0.1)] {
            let f: Vec<Complex64> = (0..3)
                .map(|j| p.eval_unchecked(z * Complex64::from_polar(1.0, TAU * j as f64 * GOLDEN_MEAN)))
                .collect();
            let a: Vec<Complex64> = f.iter().map(|v| e - v).collect();
            // det [[a0,-1,0],[-1,a1,-1],[0,-1,a2]]
            let direct = a[0] * (a[1] * a[2] - 1.0) - a[2];
            let got = d.poly.eval(z);
            assert!((got - direct).norm() < 1e-12 * direct.norm().max(1.0), "{got} vs {direct}");
        }
    }

    #[test]
    fn degree_span_is_two_k0_n() {
        let g = Frequency::golden();
        let d = determinant_poly(&Potential::amo(2.0), &g, 0.3, 50).unwrap();
        assert_eq!(d.poly.lo, -50);
        assert_eq!(d.degree(), 100);
    }

    #[test]
    fn degree_cap_enforced() {
        let g = Frequency::golden();
        let r = determinant_poly_shifted(&Potential::amo(2.0), &g, 0.0, 100, 0, 50);
        assert!(matches!(r, Err(Error::Size(_))));
    }

    #[test]
    fn self_inversive_and_centering() {
        let g = Frequency::golden();
        let d = determinant_poly(&Potential::amo(2.0), &g, 0.4, 120).unwrap();
        assert!(verify_inversive_symmetry(&d) < 1e-10);
        let cd = center_poly(&d, &g).unwrap();
        assert!(cd.poly.palindromic_deviation() < 1e-10);
        assert!(verify_inversive_symmetry(&cd) < 1e-10);
    }

    #[test]
    fn centering_n1_is_identity() {
        let g = Frequency::golden();
        let d = determinant_poly(&Potential::amo(1.0), &g, 0.4, 1).unwrap();
        let cd = center_poly(&d, &g).unwrap();
        assert_eq!(d.poly.coeffs, cd.poly.coeffs);
    }

    #[test]
    fn centering_odd_potential_is_contract_error() {
        let g = Frequency::golden();
        let p = Potential::new(&[(1, c(0.0, -1.0)), (-1, c(0.0, 1.0))], 1.0).unwrap();
        let d = determinant_poly(&p, &g, 0.0, 4).unwrap();
        assert!(matches!(center_poly(&d, &g), Err(Error::Contract(_))));
    }

    #[test]
    fn negative_control_symmetry() {
        let p = ScaledLaurentPoly::new(-1, vec![c(1.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)], 0.0);
        assert!(p.inversive_deviation() > 0.5);
    }

    #[test]
    fn un_of_free_constant() {
        let g = Frequency::golden();
        let d = determinant_poly(&Potential::zero(), &g, 3.0, 1).unwrap();
        assert!((d.eval_un(c(1.0, 0.0)).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert!(d.eval_un(ZERO).is_err());
    }

    #[test]
    fn large_volume_does_not_overflow() {
        let g = Frequency::golden();
        let d = determinant_poly(&Potential::amo(2.0), &g, 0.5, 1500).unwrap();
        let u = d.eval_un(c(1.0, 0.0)).unwrap();
        assert!(u.is_finite() && u < 2.0);
        assert!(d.poly.log_scale / 1500.0 > 0.5);
    }

    #[test]
    fn scalar_determinant_matches_polynomial() {
        let g = Frequency::golden();
        let p = Potential::amo(2.0);
        let theta = 0.37;
        let d = determinant_poly(&p, &g, 0.9, 40).unwrap();
        let s = determinant_at_phase(&p, &g, theta, 0.9, 40);
        let z = Complex64::from_polar(1.0, TAU * theta);
        let lp = d.poly.log_abs(z);
        assert!((lp - (s.value.abs().ln() + s.log_scale)).abs() < 1e-9);
    }

    #[test]
    fn dump_roundtrip() {
        let g = Frequency::golden();
        let d = determinant_poly(&Potential::amo(2.0), &g, 0.9, 5).unwrap();
        let json = serde_json::to_string(&d.poly.to_dump()).unwrap();
        let back: PolyDump = serde_json::from_str(&json).unwrap();
        assert_eq!(ScaledLaurentPoly::from_dump(&back), d.poly);
    }
}
