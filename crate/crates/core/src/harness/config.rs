//! Experiment configuration: a single JSON file, defaults for every field,
//! and command-line overrides applied on top (flags > file > defaults).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Frequency, Potential, PotentialSpec};

/// Frequency as written in a config: `"golden"`, a number in (0, 1), or
/// `{"continued_fraction": [a1, a2, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Named(String),
    Value(f64),
    ContinuedFraction { continued_fraction: Vec<u64> },
}

impl AlphaSpec {
    pub fn build(&self) -> Result<Frequency> {
        match self {
            AlphaSpec::Named(s) if s == "golden" => Ok(Frequency::golden()),
            AlphaSpec::Named(s) => Err(Error::Validation(format!("unknown frequency {s:?}"))),
            AlphaSpec::Value(a) => Frequency::new(*a),
            AlphaSpec::ContinuedFraction { continued_fraction } => {
                Frequency::from_continued_fraction(continued_fraction)
            }
        }
    }
}

/// Energy samples: an explicit list, an equispaced range, or Dirichlet
/// eigenvalues of `[0, n−1]` at the configured phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnergySpec {
    List(Vec<f64>),
    Range { range: (f64, f64, usize) },
    Eigenvalues { eigenvalues: EigenSample },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenSample {
    pub n: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovConfig {
    /// Volume for acceleration sweeps.
    pub n: usize,
    /// Quadrature points for acceleration sweeps.
    pub quadrature: usize,
    /// Volumes for the `|L_n − L_2n|` convergence study.
    pub ladder: Vec<usize>,
    /// Shifts at which the convergence study runs.
    pub eps: Vec<f64>,
    pub ladder_quadrature: usize,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        LyapunovConfig {
            n: 500,
            quadrature: 256,
            ladder: vec![100, 200, 400, 800, 1600],
            eps: vec![0.0, 0.05],
            ladder_quadrature: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZerosConfig {
    /// Energy for the zero-count ladder; `None` picks the middle Dirichlet
    /// eigenvalue at the largest ladder volume.
    pub energy: Option<f64>,
    pub eps: f64,
    pub ladder: Vec<usize>,
    pub quadrature: usize,
    /// Random `(E, n)` instances for the symmetry checks.
    pub random_instances: usize,
    pub random_max_n: usize,
    /// Energy range for random instances (extends past the spectrum so that
    /// zeros leave the unit circle).
    pub random_energy_range: (f64, f64),
}

impl Default for ZerosConfig {
    fn default() -> Self {
        ZerosConfig {
            energy: None,
            eps: 0.05,
            ladder: vec![100, 200, 400],
            quadrature: 1024,
            random_instances: 10,
            random_max_n: 400,
            random_energy_range: (-7.0, 7.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenConfig {
    /// Outer radius `R = e^{2π eps_r}`.
    pub eps_r: f64,
    pub samples: usize,
}

impl Default for GreenConfig {
    fn default() -> Self {
        GreenConfig { eps_r: 0.05, samples: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RieszConfig {
    pub energy: Option<f64>,
    pub n: usize,
    pub eps_r: f64,
    pub points: usize,
    /// Interior circles `|z| = e^{2πε}` for the decomposition checks.
    pub interior_eps: Vec<f64>,
    pub jensen_n: usize,
    pub jensen_points: usize,
    pub jensen_eps: (f64, f64),
    /// Circle `|z| = e^{2π mass_eps}` and offset for the mass estimate.
    pub mass_eps: f64,
    pub mass_delta: f64,
    pub mass_points: usize,
}

impl Default for RieszConfig {
    fn default() -> Self {
        RieszConfig {
            energy: None,
            n: 400,
            eps_r: 0.05,
            points: 256,
            interior_eps: vec![-0.02, -0.01, 0.0, 0.01, 0.02],
            jensen_n: 200,
            jensen_points: 4096,
            jensen_eps: (0.005, 0.03),
            mass_eps: 0.02,
            mass_delta: 0.005,
            mass_points: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdsConfig {
    pub n: usize,
    pub phases: usize,
    pub curve_points: usize,
    pub deltas: Vec<f64>,
    /// IDS quantiles at which Hölder exponents are fitted.
    pub quantiles: Vec<f64>,
}

impl Default for IdsConfig {
    fn default() -> Self {
        IdsConfig {
            n: 4000,
            phases: 256,
            curve_points: 400,
            deltas: vec![1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4],
            quantiles: vec![0.3, 0.5, 0.7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrataConfig {
    pub energy_points: usize,
    pub n: usize,
    pub quadrature: usize,
    /// Window `(0, eps]` used for the acceleration at zero shift.
    pub eps: f64,
    /// Volume of the Dirichlet spectrum that decides spectral membership.
    pub spectrum_n: usize,
}

impl Default for StrataConfig {
    fn default() -> Self {
        StrataConfig { energy_points: 200, n: 400, quadrature: 256, eps: 0.05, spectrum_n: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizeConfig {
    pub n: usize,
    pub eigenpairs: usize,
    pub deviation_energy: Option<f64>,
    pub deviation_n: usize,
    /// Threshold below the mean of `u_n`; `None` uses `n^{−0.3}`.
    pub deviation_threshold: Option<f64>,
    /// Grid size as a multiple of n.
    pub grid_factor: usize,
    pub resonance_windows: usize,
    pub expansion_n: usize,
    pub expansion_pairs: usize,
    /// Half width of the window around each eigenvector's centre.
    pub expansion_half_width: usize,
}

impl Default for LocalizeConfig {
    fn default() -> Self {
        LocalizeConfig {
            n: 1000,
            eigenpairs: 10,
            deviation_energy: None,
            deviation_n: 100,
            deviation_threshold: None,
            grid_factor: 64,
            resonance_windows: 20,
            expansion_n: 300,
            expansion_pairs: 10,
            expansion_half_width: 40,
        }
    }
}

/// Thresholds used for pass/fail reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tau_pos: f64,
    pub quantization_median: f64,
    pub quantization_max: f64,
    pub zero_count_first: f64,
    pub zero_count_last: f64,
    pub inversive_pairing: f64,
    pub reflection_pairing: f64,
    pub green_boundary: f64,
    pub green_symmetry: f64,
    pub green_average: f64,
    pub riesz_boundary: f64,
    pub riesz_mean_value: f64,
    pub riesz_interior: f64,
    pub jensen: f64,
    pub mass: f64,
    pub mass_agreement: f64,
    pub holder_min: f64,
    pub decay_relative: f64,
    pub convergence_slope: f64,
    pub expansion: f64,
    pub expansion_free: f64,
    /// Arithmetic conditions `‖nα‖ ≥ c/(n (log n)^a)` and
    /// `‖2θ + nα‖ ≥ c'/(|n| (log |n|)^b)`.
    pub diophantine_c: f64,
    pub diophantine_a: f64,
    pub resonance_c: f64,
    pub resonance_b: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tau_pos: 0.05,
            quantization_median: 0.05,
            quantization_max: 0.25,
            zero_count_first: 0.15,
            zero_count_last: 0.08,
            inversive_pairing: 1e-7,
            reflection_pairing: 1e-6,
            green_boundary: 1e-10,
            green_symmetry: 1e-12,
            green_average: 1e-9,
            riesz_boundary: 1e-8,
            riesz_mean_value: 1e-5,
            riesz_interior: 0.05,
            jensen: 1e-6,
            mass: 0.2,
            mass_agreement: 0.05,
            holder_min: 0.4,
            decay_relative: 0.15,
            convergence_slope: -0.8,
            expansion: 1e-8,
            expansion_free: 1e-10,
            diophantine_c: 0.1,
            diophantine_a: 2.0,
            resonance_c: 0.1,
            resonance_b: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialSpec,
    pub alpha: AlphaSpec,
    pub theta: f64,
    /// Energies for the acceleration sweep.
    pub energies: EnergySpec,
    /// ε-grid for the acceleration sweep.
    pub eps_grid: Vec<f64>,
    pub lyapunov: LyapunovConfig,
    pub zeros: ZerosConfig,
    pub green: GreenConfig,
    pub riesz: RieszConfig,
    pub ids: IdsConfig,
    pub strata: StrataConfig,
    pub localize: LocalizeConfig,
    pub tolerances: Tolerances,
    pub output: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            potential: PotentialSpec::Preset("amo(2)".into()),
            alpha: AlphaSpec::Named("golden".into()),
            theta: 0.0,
            energies: EnergySpec::Eigenvalues { eigenvalues: EigenSample { n: 400, count: 50 } },
            eps_grid: (2..=10).map(|j| j as f64 * 0.01).collect(),
            lyapunov: LyapunovConfig::default(),
            zeros: ZerosConfig::default(),
            green: GreenConfig::default(),
            riesz: RieszConfig::default(),
            ids: IdsConfig::default(),
            strata: StrataConfig::default(),
            localize: LocalizeConfig::default(),
            tolerances: Tolerances::default(),
            output: PathBuf::from("out"),
            seed: 20_240_601,
            threads: None,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

/// Raw bytes of the config together with the parsed value.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    /// Hex SHA-256 of the file bytes.
    pub hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path, overrides: &Overrides) -> Result<LoadedConfig> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| Error::Validation(format!("config {} is not UTF-8", path.display())))?;
        let mut config = Self::from_json(&text)?;
        config.apply(overrides);
        config.validate()?;
        Ok(LoadedConfig { config, hash: sha256_hex(&bytes) })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.output {
            self.output = p.clone();
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
    }

    pub fn build_potential(&self) -> Result<Potential> {
        self.potential.build()
    }

    pub fn build_frequency(&self) -> Result<Frequency> {
        self.alpha.build()
    }

    /// Checks every parameter against the preconditions of the operations
    /// it feeds, before any computation.
    pub fn validate(&self) -> Result<()> {
        let p = self.build_potential()?;
        let freq = self.build_frequency()?;
        let eta = p.eta();
        let bad = |msg: String| Err(Error::Validation(msg));
        if freq.is_rational() {
            return bad(format!("frequency {} is rational", freq.alpha()));
        }
        if !self.theta.is_finite() {
            return bad("theta must be finite".into());
        }
        if let Some(0) = self.threads {
            return bad("threads must be at least 1".into());
        }
        match &self.energies {
            EnergySpec::List(v) if v.is_empty() || v.iter().any(|e| !e.is_finite()) => {
                return bad("energy list must be nonempty and finite".into())
            }
            EnergySpec::Range { range: (lo, hi, k) } if !(lo < hi) || *k < 2 => {
                return bad("energy range needs lo < hi and at least two points".into())
            }
            EnergySpec::Eigenvalues { eigenvalues: s } if s.count == 0 || s.count > s.n => {
                return bad("eigenvalue sample needs 1 ≤ count ≤ n".into())
            }
            _ => {}
        }
        check_eps_grid(&self.eps_grid, eta, "eps_grid")?;
        let l = &self.lyapunov;
        if l.n == 0 || l.quadrature < 64 || l.ladder_quadrature < 64 {
            return bad("lyapunov: n ≥ 1 and quadrature ≥ 64 required".into());
        }
        if l.ladder.len() < 2 || l.ladder.contains(&0) {
            return bad("lyapunov.ladder needs at least two positive volumes".into());
        }
        for &e in &l.eps {
            check_shift(e, eta, "lyapunov.eps")?;
        }
        let z = &self.zeros;
        check_shift(z.eps, eta, "zeros.eps")?;
        if !(z.eps > 0.0) {
            return bad("zeros.eps must be positive".into());
        }
        if z.ladder.is_empty() || z.ladder.contains(&0) || z.quadrature < 64 {
            return bad("zeros: nonempty ladder of positive volumes and quadrature ≥ 64 required".into());
        }
        if z.random_max_n < 2 || !(z.random_energy_range.0 < z.random_energy_range.1) {
            return bad("zeros: random_max_n ≥ 2 and an increasing energy range required".into());
        }
        if !(self.green.eps_r > 0.0) || self.green.samples == 0 {
            return bad("green: eps_r > 0 and samples ≥ 1 required".into());
        }
        let r = &self.riesz;
        check_shift(r.eps_r, eta, "riesz.eps_r")?;
        if !(r.eps_r > 0.0) || r.n == 0 || r.jensen_n == 0 || r.points < 16 || r.jensen_points < 16 {
            return bad("riesz: positive volumes, eps_r > 0 and at least 16 points required".into());
        }
        if r.interior_eps.iter().any(|e| e.abs() >= r.eps_r) {
            return bad("riesz.interior_eps must lie inside (−eps_r, eps_r)".into());
        }
        let (j1, j2) = r.jensen_eps;
        if !(0.0 < j1 && j1 < j2 && j2 < r.eps_r) {
            return bad("riesz.jensen_eps needs 0 < ε1 < ε2 < eps_r".into());
        }
        if !(r.mass_delta > 0.0) || r.mass_eps - r.mass_delta <= 0.0 || r.mass_eps + r.mass_delta >= eta {
            return bad(
                "riesz: mass window must satisfy 0 < mass_eps − mass_delta and mass_eps + mass_delta < η".into()
            );
        }
        let i = &self.ids;
        if i.n < 100 || i.phases == 0 || i.curve_points < 2 {
            return bad("ids: n ≥ 100, phases ≥ 1 and curve_points ≥ 2 required".into());
        }
        let dmin = i.deltas.iter().copied().fold(f64::INFINITY, f64::min);
        let dmax = i.deltas.iter().copied().fold(0.0, f64::max);
        if i.deltas.len() < 2 || !(dmin > 0.0) || dmax / dmin < 100.0 * (1.0 - 1e-12) {
            return bad("ids.deltas must be positive and span two decades".into());
        }
        if dmin < 10.0 / (i.n as f64).powi(2) {
            return bad(format!("ids.deltas below the resolution 10/n² for n = {}", i.n));
        }
        if i.quantiles.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return bad("ids.quantiles must lie in (0, 1)".into());
        }
        let s = &self.strata;
        check_shift(s.eps, eta, "strata.eps")?;
        if s.energy_points < 2 || s.n == 0 || s.quadrature < 64 || s.spectrum_n == 0 || !(s.eps > 0.0) {
            return bad("strata: energy_points ≥ 2, positive volumes, eps > 0, quadrature ≥ 64".into());
        }
        let lc = &self.localize;
        if lc.n < 500 || lc.eigenpairs == 0 || lc.eigenpairs > lc.n {
            return bad("localize: n ≥ 500 and 1 ≤ eigenpairs ≤ n required".into());
        }
        if lc.deviation_n < 2 || lc.grid_factor < 64 {
            return bad("localize: deviation_n ≥ 2 and grid_factor ≥ 64 required".into());
        }
        if let Some(t) = lc.deviation_threshold {
            if !(t > 0.0) {
                return bad("localize.deviation_threshold must be positive".into());
            }
        }
        if lc.expansion_pairs == 0 || lc.expansion_half_width == 0 || lc.expansion_n < 2 * lc.expansion_half_width + 3 {
            return bad("localize: expansion window must fit inside expansion_n".into());
        }
        let t = &self.tolerances;
        if !(t.diophantine_c > 0.0 && t.resonance_c > 0.0) {
            return bad("tolerances: arithmetic constants must be positive".into());
        }
        Ok(())
    }
}

fn check_shift(eps: f64, eta: f64, what: &str) -> Result<()> {
    if !(eps.abs() < eta) {
        return Err(Error::Validation(format!("{what} = {eps} must satisfy |ε| < η = {eta}")));
    }
    Ok(())
}

fn check_eps_grid(grid: &[f64], eta: f64, what: &str) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::Validation(format!("{what} needs at least two values")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation(format!("{what} must be strictly increasing")));
    }
    if !(grid[0] > 0.0) {
        return Err(Error::Validation(format!("{what} must be positive")));
    }
    for &e in grid {
        check_shift(e, eta, what)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_roundtrip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let c = ExperimentConfig::from_json(r#"{"potential": "amo(lambda=3)", "zeros": {"eps": 0.04}}"#).unwrap();
        assert_eq!(c.zeros.eps, 0.04);
        assert_eq!(c.zeros.ladder, vec![100, 200, 400]);
        c.validate().unwrap();
    }

    #[test]
    fn shift_beyond_band_rejected() {
        let c = ExperimentConfig::from_json(r#"{"zeros": {"eps": 1.5}}"#).unwrap();
        assert!(matches!(c.validate(), Err(Error::Validation(_))));
        let c = ExperimentConfig::from_json(r#"{"eps_grid": [0.02, 0.5, 1.0]}"#).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_fields_and_specs() {
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        let c = ExperimentConfig::from_json(
            r#"{"alpha": {"continued_fraction": [2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2]}}"#,
        )
        .unwrap();
        assert!((c.build_frequency().unwrap().alpha() - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        let c = ExperimentConfig::from_json(r#"{"alpha": 0.5}"#).unwrap();
        assert!(c.validate().is_err());
        let c = ExperimentConfig::from_json(r#"{"energies": [0.1, 0.2]}"#).unwrap();
        assert_eq!(c.energies, EnergySpec::List(vec![0.1, 0.2]));
        let c = ExperimentConfig::from_json(r#"{"energies": {"range": [-1, 1, 5]}}"#).unwrap();
        c.validate().unwrap();
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = ExperimentConfig::default();
        c.apply(&Overrides { output: Some("x".into()), threads: Some(3), seed: Some(9) });
        assert_eq!((c.output.to_str().unwrap(), c.threads, c.seed), ("x", Some(3), 9));
    }

    #[test]
    fn hash_is_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
