//! Potentials, frequencies and phases, and the arithmetic conditions
//! (Diophantine frequency, non-resonant phase) attached to them.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::torus_norm;

/// Tolerance for the conjugate-symmetry check `c_{-k} = conj(c_k)`.
const SYMMETRY_TOL: f64 = 1e-12;

/// A real-valued analytic potential given by finitely many Fourier modes,
/// `f(z) = Σ_{|k|≤k0} c_k z^k` with `z = e^{2πiθ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    k0: usize,
    /// Dense coefficients for `k = -k0..=k0`, stored at index `k + k0`.
    coeffs: Vec<Complex64>,
    eta: f64,
}

impl Potential {
    /// Builds a potential from `(k, c_k)` pairs. Modes that are not listed are
    /// zero. The pairs must describe a real-valued function on the circle.
    pub fn new(modes: &[(i32, Complex64)], eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Validation(format!("band radius eta must be positive, got {eta}")));
        }
        let k0 = modes.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * k0 + 1];
        for &(k, c) in modes {
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::Validation(format!("non-finite Fourier coefficient for k={k}")));
            }
            coeffs[(k + k0 as i32) as usize] += c;
        }
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        for k in 0..=k0 {
            let (plus, minus) = (coeffs[k0 + k], coeffs[k0 - k]);
            if (minus - plus.conj()).norm() > SYMMETRY_TOL * scale {
                return Err(Error::Validation(format!(
                    "coefficients for k=±{k} violate c_(-k) = conj(c_k); potential is not real-valued"
                )));
            }
        }
        let mut p = Potential { k0, coeffs, eta };
        p.trim();
        Ok(p)
    }

    /// The almost Mathieu potential `2λ cos 2πθ = λ(z + 1/z)`.
    pub fn amo(lambda: f64) -> Self {
        let c = Complex64::new(lambda, 0.0);
        Potential::new(&[(-1, c), (1, c)], AMO_ETA).expect("valid AMO coefficients")
    }

    /// The zero potential (free Laplacian).
    pub fn zero() -> Self {
        Potential { k0: 0, coeffs: vec![Complex64::new(0.0, 0.0)], eta: AMO_ETA }
    }

    /// Truncates the Fourier series of a real 1-periodic function to modes
    /// `|k| ≤ k0`, using `samples` equispaced samples for the coefficients.
    ///
    /// Returns the potential and the tail estimate `Σ_{k0<|k|<samples/2} |c_k|`,
    /// an estimate of the sup-norm truncation error.
    pub fn from_function<F: Fn(f64) -> f64>(f: F, k0: usize, eta: f64, samples: usize) -> Result<(Self, f64)> {
        if samples < 2 * k0 + 2 {
            return Err(Error::Validation(format!("need at least {} samples to resolve {} modes", 2 * k0 + 2, k0)));
        }
        let values: Vec<f64> = (0..samples).map(|j| f(j as f64 / samples as f64)).collect();
        let coeff = |k: i64| -> Complex64 {
            let terms: Vec<Complex64> = values
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    let phase = -TAU * (k as f64) * (j as f64) / samples as f64;
                    Complex64::from_polar(v, phase)
                })
                .collect();
            let re: Vec<f64> = terms.iter().map(|t| t.re).collect();
            let im: Vec<f64> = terms.iter().map(|t| t.im).collect();
            Complex64::new(crate::numeric::pairwise_sum(&re), crate::numeric::pairwise_sum(&im)) / samples as f64
        };
        let mut modes = Vec::with_capacity(2 * k0 + 1);
        for k in 0..=k0 as i64 {
            let c = coeff(k);
            if k == 0 {
                modes.push((0, Complex64::new(c.re, 0.0)));
            } else {
                modes.push((k as i32, c));
                modes.push((-(k as i32), c.conj()));
            }
        }
        let tail: f64 = ((k0 + 1) as i64..(samples / 2) as i64).map(|k| 2.0 * coeff(k).norm()).sum();
        Ok((Potential::new(&modes, eta)?, tail))
    }

    fn trim(&mut self) {
        while self.k0 > 0 && self.coeffs[0].norm() == 0.0 && self.coeffs[2 * self.k0].norm() == 0.0 {
            self.coeffs.remove(0);
            self.coeffs.pop();
            self.k0 -= 1;
        }
    }

    /// Highest Fourier mode.
    pub fn degree(&self) -> usize {
        self.k0
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Coefficient `c_k`; zero outside `[-k0, k0]`.
    pub fn coeff(&self, k: i32) -> Complex64 {
        let idx = k + self.k0 as i32;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// Dense coefficients for `k = -k0..=k0`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    /// True iff `c_k = c_{-k}` for all k, i.e. `f(θ) = f(-θ)`.
    pub fn is_even(&self) -> bool {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        (1..=self.k0).all(|k| (self.coeffs[self.k0 + k] - self.coeffs[self.k0 - k]).norm() <= SYMMETRY_TOL * scale)
    }

    /// `Σ |c_k|`, an upper bound for `|f|` on the unit circle.
    pub fn sup_bound(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// Evaluates `Σ c_k z^k` on the closed annulus of analyticity.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let r = z.norm();
        let outer = (TAU * self.eta).exp();
        let slack = 1e-12;
        if !(r.is_finite() && r * (1.0 + slack) >= 1.0 / outer && r <= outer * (1.0 + slack)) {
            return Err(Error::Domain(format!("|z| = {r} outside the annulus [{:.6}, {:.6}]", 1.0 / outer, outer)));
        }
        Ok(self.eval_unchecked(z))
    }

    /// Laurent evaluation without the domain check. `z` must be nonzero.
    pub fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        if self.k0 == 0 {
            return self.coeffs[0];
        }
        // Horner outward from the centre in z and 1/z.
        let k0 = self.k0;
        let zi = z.inv();
        let mut pos = Complex64::new(0.0, 0.0);
        for k in (1..=k0).rev() {
            pos = (pos + self.coeffs[k0 + k]) * z;
        }
        let mut neg = Complex64::new(0.0, 0.0);
        for k in (1..=k0).rev() {
            neg = (neg + self.coeffs[k0 - k]) * zi;
        }
        self.coeffs[k0] + pos + neg
    }

    /// Real value `f(θ)` for a real phase.
    pub fn eval_phase(&self, theta: f64) -> f64 {
        // cosine/sine series keeps the result exactly real
        let mut acc = self.coeffs[self.k0].re;
        for k in 1..=self.k0 {
            let c = self.coeffs[self.k0 + k];
            let (s, co) = (TAU * k as f64 * theta).sin_cos();
            acc += 2.0 * (c.re * co - c.im * s);
        }
        acc
    }

    pub fn to_spec(&self) -> PotentialSpec {
        PotentialSpec::Explicit(ExplicitPotential {
            coeffs: (0..self.coeffs.len())
                .filter(|&i| self.coeffs[i].norm() != 0.0)
                .map(|i| (i as i32 - self.k0 as i32, self.coeffs[i].re, self.coeffs[i].im))
                .collect(),
            eta: self.eta,
        })
    }
}

/// Band radius attached to the named presets (their potentials are entire).
pub const AMO_ETA: f64 = 1.0;

/// JSON form `{"coeffs": [[k, re, im], ...], "eta": real}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitPotential {
    pub coeffs: Vec<(i32, f64, f64)>,
    pub eta: f64,
}

/// A potential as written in configuration files: either explicit Fourier
/// data or a named preset (`"zero"`, `"amo(2)"`, `"amo(lambda=2)"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSpec {
    Preset(String),
    Explicit(ExplicitPotential),
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential> {
        match self {
            PotentialSpec::Explicit(e) => {
                let modes: Vec<(i32, Complex64)> =
                    e.coeffs.iter().map(|&(k, re, im)| (k, Complex64::new(re, im))).collect();
                Potential::new(&modes, e.eta)
            }
            PotentialSpec::Preset(name) => parse_preset(name),
        }
    }
}

fn parse_preset(name: &str) -> Result<Potential> {
    let s = name.trim();
    if s == "zero" {
        return Ok(Potential::zero());
    }
    if let Some(arg) = s.strip_prefix("amo(").and_then(|r| r.strip_suffix(')')) {
        let arg = arg.trim();
        let arg = arg.strip_prefix("lambda=").unwrap_or(arg).trim();
        let lambda: f64 =
            arg.parse().map_err(|_| Error::Validation(format!("cannot parse coupling in preset {name:?}")))?;
        if !lambda.is_finite() {
            return Err(Error::Validation(format!("non-finite coupling in {name:?}")));
        }
        return Ok(Potential::amo(lambda));
    }
    Err(Error::Validation(format!("unknown potential preset {name:?}")))
}

/// Frequencies below this are rejected (keeps the exact rational
/// representation of the double inside 128-bit integers).
const MIN_ALPHA: f64 = 1e-9;
/// Convergents are stored until they agree with α to this relative accuracy.
const CF_PRECISION: f64 = 4.0 * f64::EPSILON;
const CF_MAX_DEPTH: usize = 40;
/// A frequency whose continued fraction terminates (at double precision)
/// with a denominator at most this large is treated as rational.
const RATIONAL_HEIGHT: u128 = 1_000_000;

/// An irrational rotation number α ∈ (0, 1) with its continued fraction.
///
/// The continued fraction is that of the exact binary value of the double,
/// computed by the Euclidean algorithm (the Gauss map in exact arithmetic),
/// and truncated once the convergents reproduce α to double precision or
/// after 40 quotients.
#[derive(Debug, Clone, PartialEq)]
pub struct Frequency {
    alpha: f64,
    num: u128,
    den: u128,
    quotients: Vec<u64>,
    convergents: Vec<(u64, u64)>,
    rational: bool,
}

impl Frequency {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Validation(format!("frequency must lie in (0,1), got {alpha}")));
        }
        if alpha < MIN_ALPHA {
            return Err(Error::Validation(format!("frequency {alpha} below supported minimum {MIN_ALPHA}")));
        }
        let (num, den) = exact_fraction(alpha);
        let mut quotients = Vec::new();
        let mut convergents = Vec::new();
        let mut rational = false;
        for (a, p, q) in ConvergentIter::new(num, den) {
            quotients.push(a as u64);
            convergents.push((p as u64, q as u64));
            let err = (alpha - p as f64 / q as f64).abs();
            if err <= CF_PRECISION * alpha || quotients.len() >= CF_MAX_DEPTH || q > u64::MAX as u128 / 4 {
                rational = err <= CF_PRECISION * alpha && q <= RATIONAL_HEIGHT;
                break;
            }
        }
        Ok(Frequency { alpha, num, den, quotients, convergents, rational })
    }

    /// The golden mean `(√5 − 1)/2`.
    pub fn golden() -> Self {
        Frequency::new(GOLDEN_MEAN).expect("golden mean is a valid frequency")
    }

    /// Evaluates `[0; a_1, a_2, ...]` and builds the frequency from it.
    pub fn from_continued_fraction(quotients: &[u64]) -> Result<Self> {
        if quotients.is_empty() || quotients.contains(&0) {
            return Err(Error::Validation("partial quotients must be positive".into()));
        }
        let mut x = 0.0f64;
        for &a in quotients.iter().rev() {
            x = 1.0 / (a as f64 + x);
        }
        Frequency::new(x)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Partial quotients `a_1, ..., a_m`.
    pub fn quotients(&self) -> &[u64] {
        &self.quotients
    }

    /// Convergents `p_k / q_k`, `k = 1..=m`.
    pub fn convergents(&self) -> &[(u64, u64)] {
        &self.convergents
    }

    /// True when α equals a fraction of small height to double precision.
    pub fn is_rational(&self) -> bool {
        self.rational
    }

    /// `‖nα‖_T`, computed exactly from the binary value of α.
    pub fn torus_dist(&self, n: u64) -> f64 {
        let r = (n as u128 % self.den) * self.num % self.den;
        let d = r.min(self.den - r);
        d as f64 / self.den as f64
    }

    /// Fractional part of `nα` in `[0, 1)` for signed n, exact up to the final rounding.
    pub fn frac_multiple(&self, n: i64) -> f64 {
        let r = (n.unsigned_abs() as u128 % self.den) * self.num % self.den;
        let r = if n < 0 && r != 0 { self.den - r } else { r };
        r as f64 / self.den as f64
    }

    /// Fractional part of `nα/2` in `[0, 1)`, exact up to the final rounding.
    pub fn frac_half_multiple(&self, n: i64) -> f64 {
        let m = 2 * self.den;
        let r = (n.unsigned_abs() as u128 % m) * self.num % m;
        let r = if n < 0 && r != 0 { m - r } else { r };
        r as f64 / m as f64
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.alpha)
    }
}

pub const GOLDEN_MEAN: f64 = 0.618_033_988_749_894_9;

/// Exact `num/den` representation of a double in (0,1).
fn exact_fraction(x: f64) -> (u128, u128) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    // x = mant * 2^e with e < 0 for x < 1
    let mut num = mant as u128;
    let mut shift = (-e) as u32;
    while num.is_multiple_of(2) && shift > 0 {
        num /= 2;
        shift -= 1;
    }
    (num, 1u128 << shift)
}

/// Euclid on `num/den`, yielding `(a_k, p_k, q_k)`.
struct ConvergentIter {
    num: u128,
    den: u128,
    p: (u128, u128),
    q: (u128, u128),
}

impl ConvergentIter {
    fn new(num: u128, den: u128) -> Self {
        // α = num/den in (0,1): a_0 = 0, so start from x = den/num
        ConvergentIter { num: den, den: num, p: (1, 0), q: (0, 1) }
    }
}

impl Iterator for ConvergentIter {
    type Item = (u128, u128, u128);

    fn next(&mut self) -> Option<Self::Item> {
        if self.den == 0 {
            return None;
        }
        let a = self.num / self.den;
        let r = self.num % self.den;
        self.num = self.den;
        self.den = r;
        let p = a.checked_mul(self.p.1)?.checked_add(self.p.0)?;
        let q = a.checked_mul(self.q.1)?.checked_add(self.q.0)?;
        self.p = (self.p.1, p);
        self.q = (self.q.1, q);
        Some((a, p, q))
    }
}

/// Outcome of an arithmetic scan: whether the condition holds on the scanned
/// range and the index where it is closest to failing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArithmeticReport {
    pub satisfied: bool,
    /// Index minimizing the ratio `distance / bound`.
    pub worst_n: i64,
    /// `distance / bound` at `worst_n`; the condition holds iff this is ≥ 1.
    pub worst_ratio: f64,
}

/// Exhaustive range for the Diophantine scan before switching to convergents.
const DIOPHANTINE_EXHAUSTIVE: u64 = 1000;

/// Checks `‖nα‖ ≥ c / (n (log n)^a)` for `2 ≤ n ≤ n_max`.
///
/// All `n ≤ 1000` are scanned; beyond that only convergent denominators and
/// their multiples and intermediate fractions are visited. The verdict is
/// exact: if some `n` in `[q_k, q_{k+1})` fails then `q_k` fails, since
/// `‖q_k α‖ ≤ ‖nα‖` there and the bound decreases in n.
pub fn diophantine_check(freq: &Frequency, c: f64, a: f64, n_max: u64) -> Result<ArithmeticReport> {
    if !(c > 0.0) || !(a > 1.0) || n_max < 2 {
        return Err(Error::Validation(format!(
            "Diophantine check needs c > 0, a > 1, n_max ≥ 2 (got c={c}, a={a}, n_max={n_max})"
        )));
    }
    if freq.is_rational() {
        return Err(Error::Domain(format!("frequency {} is rational", freq.alpha)));
    }
    let ratio = |n: u64| {
        let nf = n as f64;
        freq.torus_dist(n) * nf * nf.ln().powf(a) / c
    };
    let mut worst = (2u64, ratio(2));
    let mut visit = |n: u64| {
        if (2..=n_max).contains(&n) {
            let r = ratio(n);
            if r < worst.1 || (r == worst.1 && n < worst.0) {
                worst = (n, r);
            }
        }
    };
    for n in 2..=n_max.min(DIOPHANTINE_EXHAUSTIVE) {
        visit(n);
    }
    if n_max > DIOPHANTINE_EXHAUSTIVE {
        let mut prev_q: u128 = 1;
        let mut iter = ConvergentIter::new(freq.num, freq.den).peekable();
        while let Some((_, _, q)) = iter.next() {
            if q > n_max as u128 {
                break;
            }
            let next_a = iter.peek().map(|&(a, _, _)| a).unwrap_or(1);
            if q as u64 > DIOPHANTINE_EXHAUSTIVE / 4 {
                for j in 1..=4u128 {
                    if let Some(m) = q.checked_mul(j) {
                        if m <= n_max as u128 {
                            visit(m as u64);
                        }
                    }
                }
                for j in 1..next_a.min(64) {
                    let m = prev_q + j * q;
                    if m <= n_max as u128 {
                        visit(m as u64);
                    }
                }
                for m in [q.saturating_sub(1), q + 1] {
                    if m <= n_max as u128 {
                        visit(m as u64);
                    }
                }
            }
            prev_q = q;
        }
    }
    Ok(ArithmeticReport { satisfied: worst.1 >= 1.0, worst_n: worst.0 as i64, worst_ratio: worst.1 })
}

/// Checks that θ is non-resonant up to `n_max`: `‖2θ + nα‖ ≥ c'/|n|^b` for
/// all `1 ≤ |n| ≤ n_max`. Exhaustive over the range.
pub fn phase_resonance_check(
    theta: f64,
    freq: &Frequency,
    c_prime: f64,
    b: f64,
    n_max: u64,
) -> Result<ArithmeticReport> {
    if !(c_prime > 0.0) || !(b > 1.0) || n_max < 1 || !theta.is_finite() {
        return Err(Error::Validation(format!(
            "phase check needs c' > 0, b > 1, n_max ≥ 1 (got c'={c_prime}, b={b}, n_max={n_max})"
        )));
    }
    let two_theta = (2.0 * theta).rem_euclid(1.0);
    let mut worst = (0i64, f64::INFINITY);
    for m in 1..=n_max as i64 {
        for n in [m, -m] {
            let d = torus_norm(two_theta + freq.frac_multiple(n));
            let r = d * (m as f64).powf(b) / c_prime;
            if r < worst.1 {
                worst = (n, r);
            }
        }
    }
    Ok(ArithmeticReport { satisfied: worst.1 >= 1.0, worst_n: worst.0, worst_ratio: worst.1 })
}

/// Bundle `(f, α, E, ε, n)` for transfer matrices and determinants.
#[derive(Debug, Clone, PartialEq)]
pub struct CocycleParams {
    pub potential: Potential,
    pub frequency: Frequency,
    pub energy: f64,
    pub eps: f64,
    pub n: usize,
}

impl CocycleParams {
    pub fn new(potential: Potential, frequency: Frequency, energy: f64, eps: f64, n: usize) -> Result<Self> {
        let p = CocycleParams { potential, frequency, energy, eps, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Validation("volume n must be at least 1".into()));
        }
        if !self.energy.is_finite() {
            return Err(Error::Validation("energy must be finite".into()));
        }
        if !(self.eps.abs() < self.potential.eta()) {
            return Err(Error::Validation(format!(
                "|eps| = {} must be below the band radius eta = {}",
                self.eps.abs(),
                self.potential.eta()
            )));
        }
        Ok(())
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let mut p = self.clone();
        p.eps = eps;
        p.validate()?;
        Ok(p)
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        let mut p = self.clone();
        p.n = n;
        p.validate()?;
        Ok(p)
    }

    pub fn with_energy(&self, energy: f64) -> Self {
        let mut p = self.clone();
        p.energy = energy;
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn amo_values() {
        let p = Potential::amo(2.0);
        assert!((p.eval(c(1.0)).unwrap() - c(4.0)).norm() < 1e-15);
        assert!(p.eval(Complex64::i()).unwrap().norm() < 1e-15);
        assert!(p.is_even());
    }

    #[test]
    fn zero_potential_is_zero_everywhere() {
        let p = Potential::zero();
        for z in [c(1.0), Complex64::new(0.3, 1.1), c(0.5)] {
            assert_eq!(p.eval(z).unwrap(), c(0.0));
        }
    }

    #[test]
    fn rejects_non_real_potential() {
        let err = Potential::new(&[(1, c(1.0)), (-1, c(2.0))], 1.0);
        assert!(err.is_err());
    }

    #[test]
    fn outside_annulus_is_domain_error() {
        let p = Potential::amo(1.0);
        let far = c((TAU * 1.5).exp());
        assert!(matches!(p.eval(far), Err(Error::Domain(_))));
    }

    #[test]
    fn odd_potential_is_not_even() {
        // f = 2 sin 2πθ: c_1 = -i, c_-1 = i
        let p = Potential::new(&[(1, Complex64::new(0.0, -1.0)), (-1, Complex64::new(0.0, 1.0))], 1.0).unwrap();
        assert!(!p.is_even());
        assert!((p.eval_phase(0.25) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn truncation_of_smooth_function() {
        let f = |t: f64| 1.0 / (1.25 - (TAU * t).cos());
        let (p, tail) = Potential::from_function(f, 12, 0.1, 256).unwrap();
        for j in 0..37 {
            let t = j as f64 / 37.0;
            assert!((p.eval_phase(t) - f(t)).abs() <= tail + 1e-12);
        }
        assert!(p.is_even());
    }

    #[test]
    fn presets_parse() {
        let amo = PotentialSpec::Preset("amo(lambda=2)".into()).build().unwrap();
        assert_eq!(amo, Potential::amo(2.0));
        assert!(PotentialSpec::Preset("zero".into()).build().unwrap().is_zero());
        assert!(PotentialSpec::Preset("cosh(1)".into()).build().is_err());
        let json = r#"{"coeffs": [[-1, 2.0, 0.0], [1, 2.0, 0.0]], "eta": 1.0}"#;
        let spec: PotentialSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.build().unwrap(), Potential::amo(2.0));
    }

    #[test]
    fn golden_continued_fraction() {
        let g = Frequency::golden();
        assert!(g.quotients().iter().all(|&a| a == 1));
        assert!(!g.is_rational());
        let fib = g.convergents();
        assert_eq!(fib[0], (1, 1));
        assert_eq!(fib[5], (8, 13));
    }

    #[test]
    fn convergent_approximation_bound() {
        for alpha in [GOLDEN_MEAN, std::f64::consts::SQRT_2 - 1.0, std::f64::consts::PI - 3.0, 0.123456789] {
            let f = Frequency::new(alpha).unwrap();
            let cv = f.convergents();
            for k in 0..cv.len() - 1 {
                let (p, q) = cv[k];
                let q_next = cv[k + 1].1 as f64;
                assert!((alpha - p as f64 / q as f64).abs() < 1.0 / (q as f64 * q_next));
            }
            let rebuilt = Frequency::from_continued_fraction(f.quotients()).unwrap();
            assert!((rebuilt.alpha() - alpha).abs() < 1e-14);
        }
    }

    #[test]
    fn rational_frequency_detected() {
        let f = Frequency::new(0.5).unwrap();
        assert!(f.is_rational());
        assert!(matches!(diophantine_check(&f, 0.1, 2.0, 100), Err(Error::Domain(_))));
        assert!(Frequency::new(0.375).unwrap().is_rational());
    }

    #[test]
    fn diophantine_small_range() {
        let r = diophantine_check(&Frequency::golden(), 0.1, 2.0, 2).unwrap();
        assert!(r.satisfied);
        assert_eq!(r.worst_n, 2);
    }

    #[test]
    fn resonant_phase_detected() {
        let g = Frequency::golden();
        let k = 3;
        let theta = -(k as f64) * g.alpha() / 2.0;
        let r = phase_resonance_check(theta, &g, 0.1, 2.0, 100).unwrap();
        assert!(!r.satisfied);
        assert_eq!(r.worst_n, k);
    }

    #[test]
    fn params_reject_eps_outside_band() {
        let p = CocycleParams::new(Potential::amo(2.0), Frequency::golden(), 0.0, 1.0, 10);
        assert!(p.is_err());
        let p = CocycleParams::new(Potential::amo(2.0), Frequency::golden(), 0.0, 0.5, 0);
        assert!(p.is_err());
    }
}
