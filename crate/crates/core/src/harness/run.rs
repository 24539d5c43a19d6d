//! Subcommand orchestration: each subcommand is a list of tasks whose
//! tables, JSON documents, plot rows and pass/fail checks are merged in task
//! order and written under the output directory.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::{EnergySpec, ExperimentConfig, LoadedConfig};
use super::emit::{emit_plotdata, Cell, Emitter, FileEntry, PlotData, Table};
use crate::cocycle::{acceleration, classify_stratum, lyapunov_n, strata_measure_estimate, StratumLabel};
use crate::determinant::determinant_poly;
use crate::error::{Error, Result};
use crate::green::{
    circle_average_green, circle_average_quadrature, green_annulus, truncation_bound, truncation_terms,
};
use crate::localize::{
    deviation_set, double_resonance_scan, eigenfunction_decays, expansion_identity_check, DeviationSetGeometry,
};
use crate::model::{diophantine_check, phase_resonance_check, CocycleParams, Frequency, Potential};
use crate::numeric::{fit_line, fmt12, median};
use crate::riesz::{jensen_average_identity_check, riesz_checks, riesz_decompose_un, riesz_mass_un, riesz_mass_vn};
use crate::row;
use crate::spectral::{
    dirichlet_eigenvalues, eigenvector, holder_exponent, spectrum_cells, widest_gap_midpoint, IdsSampler,
};
use crate::zeros::{find_zeros, inventory_for, zero_count_ladder, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Subcommand {
    Lyapunov,
    Acceleration,
    Zeros,
    VerifyAccZeros,
    Green,
    Riesz,
    Ids,
    Holder,
    Strata,
    Ldt,
    Localize,
    All,
}

impl Subcommand {
    pub const TASKS: [Subcommand; 11] = [
        Subcommand::Lyapunov,
        Subcommand::Acceleration,
        Subcommand::Zeros,
        Subcommand::VerifyAccZeros,
        Subcommand::Green,
        Subcommand::Riesz,
        Subcommand::Ids,
        Subcommand::Holder,
        Subcommand::Strata,
        Subcommand::Ldt,
        Subcommand::Localize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Lyapunov => "lyapunov",
            Subcommand::Acceleration => "acceleration",
            Subcommand::Zeros => "zeros",
            Subcommand::VerifyAccZeros => "verify-acc-zeros",
            Subcommand::Green => "green",
            Subcommand::Riesz => "riesz",
            Subcommand::Ids => "ids",
            Subcommand::Holder => "holder",
            Subcommand::Strata => "strata",
            Subcommand::Ldt => "ldt",
            Subcommand::Localize => "localize",
            Subcommand::All => "all",
        }
    }

    fn tasks(self) -> Vec<Subcommand> {
        if self == Subcommand::All {
            Self::TASKS.to_vec()
        } else {
            vec![self]
        }
    }

    fn salt(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::TASKS
            .iter()
            .chain(std::iter::once(&Subcommand::All))
            .find(|c| c.name() == s)
            .copied()
            .ok_or_else(|| Error::Validation(format!("unknown subcommand {s:?}")))
    }
}

/// A pass/fail line of the acceptance suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    /// Criterion number.
    pub criterion: u32,
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(criterion: u32, name: &str, measured: f64, threshold: f64, pass: bool, detail: String) -> Self {
        Check { criterion, name: name.to_string(), measured, threshold, pass, detail }
    }
}

#[derive(Debug, Default)]
struct TaskOutput {
    tables: Vec<Table>,
    json: Vec<(String, serde_json::Value)>,
    checks: Vec<Check>,
    plot: Vec<(&'static str, Vec<Cell>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskStatus {
    pub task: String,
    /// `ok`, `failed` or `planned`.
    pub status: String,
    pub error: Option<String>,
    /// `validation` or `numerical` for failed tasks.
    pub error_kind: Option<String>,
    pub seconds: f64,
    /// Rough work estimate in elementary steps.
    pub estimated_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub dry_run: bool,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub tasks: Vec<TaskStatus>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn failed(&self) -> impl Iterator<Item = &TaskStatus> {
        self.tasks.iter().filter(|t| t.status == "failed")
    }
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Runs a subcommand and writes its outputs plus `manifest.json`.
pub fn run(sub: Subcommand, loaded: &LoadedConfig, dry_run: bool) -> Result<RunManifest> {
    let cfg = &loaded.config;
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    pool.install(|| run_in_pool(sub, loaded, dry_run))
}

fn run_in_pool(sub: Subcommand, loaded: &LoadedConfig, dry_run: bool) -> Result<RunManifest> {
    let cfg = &loaded.config;
    let started = unix_now();
    let mut out = Emitter::new(&cfg.output)?;
    let ctx = Context::new(cfg)?;
    let mut statuses = Vec::new();
    let mut plot = PlotData::default();
    let mut checks: Vec<Check> = Vec::new();
    for task in sub.tasks() {
        let cost = estimate_cost(task, cfg);
        if dry_run {
            statuses.push(TaskStatus {
                task: task.name().into(),
                status: "planned".into(),
                error: None,
                error_kind: None,
                seconds: 0.0,
                estimated_cost: cost,
            });
            continue;
        }
        let t0 = Instant::now();
        let res = run_task(task, &ctx);
        let seconds = t0.elapsed().as_secs_f64();
        match res {
            Ok(o) => {
                for t in &o.tables {
                    out.table(t)?;
                }
                for (name, v) in &o.json {
                    let mut v = v.clone();
                    round_json(&mut v);
                    out.json(name, &v)?;
                }
                for (name, r) in o.plot {
                    plot.get_mut(name).push(r);
                }
                checks.extend(o.checks);
                statuses.push(TaskStatus {
                    task: task.name().into(),
                    status: "ok".into(),
                    error: None,
                    error_kind: None,
                    seconds,
                    estimated_cost: cost,
                });
            }
            Err(e) => statuses.push(TaskStatus {
                task: task.name().into(),
                status: "failed".into(),
                error: Some(format!("{}: {e}", task.name())),
                error_kind: Some(if e.is_validation() { "validation" } else { "numerical" }.into()),
                seconds,
                estimated_cost: cost,
            }),
        }
    }
    if !dry_run {
        emit_plotdata(&plot, &mut out)?;
        if !checks.is_empty() {
            let mut t = Table::new("acceptance", &["criterion", "name", "measured", "threshold", "pass", "detail"]);
            for c in &checks {
                t.push(row![c.criterion as i64, c.name.as_str(), c.measured, c.threshold, c.pass, c.detail.as_str()]);
            }
            out.table(&t)?;
        }
        out.json("arithmetic", &ctx.arithmetic()?)?;
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: sub.name().into(),
        config_hash: loaded.hash.clone(),
        seed: cfg.seed,
        threads: cfg.threads,
        dry_run,
        started_unix: started,
        finished_unix: unix_now(),
        tasks: statuses,
        files: out.files.clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(out.root().join("manifest.json"), text)?;
    Ok(manifest)
}

/// Rough step counts (transfer steps, Sturm pivots, root iterations).
pub fn estimate_cost(task: Subcommand, cfg: &ExperimentConfig) -> f64 {
    let energies = match &cfg.energies {
        EnergySpec::List(v) => v.len(),
        EnergySpec::Range { range } => range.2,
        EnergySpec::Eigenvalues { eigenvalues } => eigenvalues.count,
    } as f64;
    let l = &cfg.lyapunov;
    let sq = |n: usize| (n * n) as f64;
    match task {
        Subcommand::Lyapunov => {
            let s: usize = l.ladder.iter().map(|n| 3 * n).sum();
            (s * l.ladder_quadrature * l.eps.len()) as f64
        }
        Subcommand::Acceleration => energies * (cfg.eps_grid.len() * l.n * l.quadrature) as f64,
        Subcommand::Zeros => {
            let z = &cfg.zeros;
            z.ladder.iter().map(|&n| 40.0 * sq(n)).sum::<f64>() + z.random_instances as f64 * 80.0 * sq(z.random_max_n)
        }
        Subcommand::VerifyAccZeros => {
            let z = &cfg.zeros;
            z.ladder.iter().map(|&n| 40.0 * sq(n) + 11.0 * (n * z.quadrature) as f64).sum()
        }
        Subcommand::Green => cfg.green.samples as f64 * 1e5,
        Subcommand::Riesz => {
            let r = &cfg.riesz;
            40.0 * sq(r.n) + (r.interior_eps.len() + 2) as f64 * (r.points * r.n) as f64 * 50.0
        }
        Subcommand::Ids | Subcommand::Holder => (cfg.ids.n * cfg.ids.phases) as f64 * 300.0,
        Subcommand::Strata => (cfg.strata.energy_points * 11 * cfg.strata.n * cfg.strata.quadrature) as f64,
        Subcommand::Ldt => 40.0 * sq(cfg.localize.deviation_n) * cfg.localize.grid_factor as f64,
        Subcommand::Localize => 60.0 * sq(cfg.localize.n),
        Subcommand::All => Subcommand::TASKS.iter().map(|t| estimate_cost(*t, cfg)).sum(),
    }
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    p: Potential,
    freq: Frequency,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        Ok(Context { cfg, p: cfg.build_potential()?, freq: cfg.build_frequency()? })
    }

    fn params(&self, energy: f64, eps: f64, n: usize) -> Result<CocycleParams> {
        CocycleParams::new(self.p.clone(), self.freq.clone(), energy, eps, n)
    }

    fn rng(&self, task: Subcommand) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ task.salt())
    }

    /// Middle Dirichlet eigenvalue of `[0, n−1]` at the configured phase.
    fn mid_energy(&self, n: usize) -> Result<f64> {
        let s = dirichlet_eigenvalues(&self.p, &self.freq, self.cfg.theta, n)?;
        Ok(s.eigenvalues[n / 2])
    }

    fn energies(&self) -> Result<Vec<f64>> {
        Ok(match &self.cfg.energies {
            EnergySpec::List(v) => v.clone(),
            EnergySpec::Range { range: (lo, hi, k) } => {
                (0..*k).map(|j| lo + (hi - lo) * j as f64 / (*k - 1) as f64).collect()
            }
            EnergySpec::Eigenvalues { eigenvalues: s } => {
                let spec = dirichlet_eigenvalues(&self.p, &self.freq, self.cfg.theta, s.n)?;
                (0..s.count).map(|k| spec.eigenvalues[(2 * k + 1) * s.n / (2 * s.count)]).collect()
            }
        })
    }

    fn arithmetic(&self) -> Result<serde_json::Value> {
        let t = &self.cfg.tolerances;
        let dio = diophantine_check(&self.freq, t.diophantine_c, t.diophantine_a, 1_000_000)?;
        let phase = phase_resonance_check(self.cfg.theta, &self.freq, t.resonance_c, t.resonance_b, 10_000)?;
        Ok(json!({
            "alpha": fmt12(self.freq.alpha()),
            "quotients": self.freq.quotients(),
            "diophantine": {"c": t.diophantine_c, "a": t.diophantine_a, "n_max": 1_000_000,
                "satisfied": dio.satisfied, "worst_n": dio.worst_n, "worst_ratio": fmt12(dio.worst_ratio)},
            "phase": {"theta": fmt12(self.cfg.theta), "c": t.resonance_c, "b": t.resonance_b, "n_max": 10_000,
                "satisfied": phase.satisfied, "worst_n": phase.worst_n, "worst_ratio": fmt12(phase.worst_ratio)},
        }))
    }
}

fn run_task(task: Subcommand, ctx: &Context) -> Result<TaskOutput> {
    match task {
        Subcommand::Lyapunov => task_lyapunov(ctx),
        Subcommand::Acceleration => task_acceleration(ctx),
        Subcommand::Zeros => task_zeros(ctx),
        Subcommand::VerifyAccZeros => task_verify(ctx),
        Subcommand::Green => task_green(ctx),
        Subcommand::Riesz => task_riesz(ctx),
        Subcommand::Ids => task_ids(ctx),
        Subcommand::Holder => task_holder(ctx),
        Subcommand::Strata => task_strata(ctx),
        Subcommand::Ldt => task_ldt(ctx),
        Subcommand::Localize => task_localize(ctx),
        Subcommand::All => unreachable!("expanded by tasks()"),
    }
}

fn task_lyapunov(ctx: &Context) -> Result<TaskOutput> {
    let l = &ctx.cfg.lyapunov;
    let energy = ctx.mid_energy(*l.ladder.iter().max().unwrap())?;
    let mut t = Table::new("lyapunov", &["energy", "eps", "n", "l_n", "std_error", "l_2n", "abs_diff", "richardson"]);
    let mut worst_slope = f64::NEG_INFINITY;
    let mut detail = Vec::new();
    for &eps in &l.eps {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &n in &l.ladder {
            let a = lyapunov_n(&ctx.params(energy, eps, n)?, l.ladder_quadrature)?;
            let b = lyapunov_n(&ctx.params(energy, eps, 2 * n)?, l.ladder_quadrature)?;
            let diff = (a.value - b.value).abs();
            t.push(row![energy, eps, n, a.value, a.std_error, b.value, diff, 2.0 * b.value - a.value]);
            if diff > 0.0 {
                xs.push((n as f64).ln());
                ys.push(diff.ln());
            }
        }
        let slope = fit_line(&xs, &ys).map_or(f64::INFINITY, |f| f.slope);
        worst_slope = worst_slope.max(slope);
        detail.push(format!("eps={} slope={}", fmt12(eps), fmt12(slope)));
    }
    let thr = ctx.cfg.tolerances.convergence_slope;
    let check = Check::new(10, "convergence rate of L_n", worst_slope, thr, worst_slope <= thr, detail.join("; "));
    Ok(TaskOutput { tables: vec![t], checks: vec![check], ..Default::default() })
}

/// Groups consecutive interval slopes with equal rounding into segments.
fn segment_ids(rounded: &[i64]) -> Vec<usize> {
    let mut ids = vec![0];
    for w in rounded.windows(2) {
        let last = *ids.last().unwrap();
        ids.push(if w[1] == w[0] { last } else { last + 1 });
    }
    ids
}

fn task_acceleration(ctx: &Context) -> Result<TaskOutput> {
    let l = &ctx.cfg.lyapunov;
    let energies = ctx.energies()?;
    let reports = energies
        .iter()
        .map(|&e| acceleration(&ctx.params(e, 0.0, l.n)?, &ctx.cfg.eps_grid, l.quadrature))
        .collect::<Result<Vec<_>>>()?;
    let mut summary = Table::new(
        "acceleration",
        &["energy", "raw_slope", "rounded", "residual", "window_lo", "window_hi", "non_affine"],
    );
    let mut samples = Table::new("acceleration_samples", &["energy", "eps", "lyapunov", "std_error"]);
    let mut plot = Vec::new();
    for r in &reports {
        let o = &r.overall;
        summary.push(row![r.energy, o.raw_slope, o.rounded, o.residual, o.window.0, o.window.1, r.non_affine]);
        let rounded: Vec<i64> = r.intervals.iter().map(|iv| iv.rounded).collect();
        let seg = segment_ids(&rounded);
        for (i, (eps, est)) in r.samples.iter().enumerate() {
            samples.push(row![r.energy, *eps, est.value, est.std_error]);
            // a sample belongs to the segment of the interval to its right
            let s = seg[i.min(seg.len() - 1)];
            plot.push(("plot_acceleration", row![r.energy, *eps, est.value, s]));
        }
    }
    let residuals: Vec<f64> = reports.iter().map(|r| r.overall.residual).collect();
    let med = median(&residuals);
    let max = residuals.iter().copied().fold(0.0, f64::max);
    let tol = &ctx.cfg.tolerances;
    let mut kappas: Vec<i64> = reports.iter().map(|r| r.overall.rounded).collect();
    kappas.sort_unstable();
    kappas.dedup();
    let detail = format!(
        "energies={} median={} max={} max_allowed={} rounded={kappas:?}",
        reports.len(),
        fmt12(med),
        fmt12(max),
        fmt12(tol.quantization_max)
    );
    let pass = med <= tol.quantization_median && max <= tol.quantization_max;
    let check = Check::new(1, "acceleration quantization", med, tol.quantization_median, pass, detail);
    Ok(TaskOutput { tables: vec![summary, samples], checks: vec![check], plot, ..Default::default() })
}

fn task_zeros(ctx: &Context) -> Result<TaskOutput> {
    let z = &ctx.cfg.zeros;
    let mut rng = ctx.rng(Subcommand::Zeros);
    let instances: Vec<(f64, usize)> = (0..z.random_instances)
        .map(|_| (rng.gen_range(z.random_energy_range.0..z.random_energy_range.1), rng.gen_range(2..=z.random_max_n)))
        .collect();
    let mut sym = Table::new(
        "zeros_symmetry",
        &["instance", "energy", "n", "roots", "off_circle", "inversive_worst", "reflection_worst", "max_residual"],
    );
    let mut worst_inv = 0.0f64;
    let mut worst_ref = 0.0f64;
    let mut off_total = 0;
    for (i, &(e, n)) in instances.iter().enumerate() {
        let params = ctx.params(e, 0.0, n)?;
        let inv = inventory_for(&params, false)?;
        let (off, w) = inv.off_circle_pairing();
        let refl = if ctx.p.is_even() {
            let c = inventory_for(&params, true)?;
            c.reflection.as_ref().map_or(f64::NAN, |r| r.max_error())
        } else {
            f64::NAN
        };
        worst_inv = worst_inv.max(w);
        if refl.is_finite() {
            worst_ref = worst_ref.max(refl);
        }
        off_total += off;
        sym.push(row![i, e, n, inv.total(), off, w, refl, inv.max_residual]);
    }
    let energy = match z.energy {
        Some(e) => e,
        None => ctx.mid_energy(*z.ladder.iter().max().unwrap())?,
    };
    let mut counts = Table::new("zeros_counts", &["n", "energy", "eps", "count", "ratio", "boundary"]);
    let mut plot = Vec::new();
    for &n in &z.ladder {
        let inv = inventory_for(&ctx.params(energy, 0.0, n)?, false)?;
        for (k, zero) in inv.zeros.iter().enumerate() {
            let pair = inv.inversive.partner[k];
            plot.push(("plot_zero_cloud", row![n, energy, zero.z.re, zero.z.im, zero.z.norm(), pair]));
        }
        for j in 0..=10 {
            let eps = z.eps * j as f64 / 10.0;
            let c = inv.count_annulus(eps / 2.0)?;
            let ratio = c.count as f64 / (2.0 * n as f64);
            counts.push(row![n, energy, eps, c.count, ratio, c.boundary]);
            plot.push(("plot_zero_ratio", row![n, energy, eps, ratio]));
        }
    }
    let tol = &ctx.cfg.tolerances;
    let pass = worst_inv <= tol.inversive_pairing && (!ctx.p.is_even() || worst_ref <= tol.reflection_pairing);
    let detail = format!(
        "instances={} off_circle_roots={off_total} inversive_worst={} reflection_worst={} reflection_allowed={}",
        instances.len(),
        fmt12(worst_inv),
        fmt12(worst_ref),
        fmt12(tol.reflection_pairing)
    );
    let check = Check::new(3, "zero symmetries", worst_inv, tol.inversive_pairing, pass, detail);
    Ok(TaskOutput { tables: vec![sym, counts], checks: vec![check], plot, ..Default::default() })
}

fn task_verify(ctx: &Context) -> Result<TaskOutput> {
    let z = &ctx.cfg.zeros;
    let tol = &ctx.cfg.tolerances;
    let energy = match z.energy {
        Some(e) => e,
        None => ctx.mid_energy(*z.ladder.iter().max().unwrap())?,
    };
    let ladder =
        zero_count_ladder(&ctx.params(energy, 0.0, z.ladder[0])?, z.eps, &z.ladder, tol.tau_pos, z.quadrature)?;
    let mut t = Table::new(
        "zero_count_ladder",
        &["n", "energy", "eps", "count", "kappa", "deviation", "tolerance", "pass", "l0", "boundary_margin"],
    );
    for c in &ladder.checks {
        t.push(row![c.n, c.energy, c.eps, c.count, c.kappa, c.deviation, c.tolerance, c.pass, c.l0, c.boundary_margin]);
    }
    let first = ladder.checks.first().unwrap();
    let last = ladder.checks.last().unwrap();
    let pass = first.deviation <= tol.zero_count_first && ladder.nonincreasing && last.deviation <= tol.zero_count_last;
    let devs: Vec<String> = ladder.checks.iter().map(|c| format!("n={}:{}", c.n, fmt12(c.deviation))).collect();
    let detail = format!(
        "{} nonincreasing={} first_allowed={}",
        devs.join(" "),
        ladder.nonincreasing,
        fmt12(tol.zero_count_first)
    );
    let check = Check::new(2, "zero-count characterization", last.deviation, tol.zero_count_last, pass, detail);
    Ok(TaskOutput {
        tables: vec![t],
        checks: vec![check],
        json: vec![("zero_count_ladder".into(), serde_json::to_value(&ladder)?)],
        ..Default::default()
    })
}

/// Quadrature size resolving the log singularities of `G(r e^{iφ}, w)` at
/// radii `|w|` and `R^{±2}/|w|` to about `e^{−32}`.
fn green_quadrature_points(r: f64, r_outer: f64, w_abs: f64) -> usize {
    let lr = r.ln();
    let gap = [w_abs.ln(), 2.0 * r_outer.ln() - w_abs.ln(), -2.0 * r_outer.ln() - w_abs.ln()]
        .iter()
        .map(|s| (s - lr).abs())
        .fold(f64::INFINITY, f64::min);
    ((32.0 / gap).ceil() as usize).clamp(256, 1 << 22).next_power_of_two()
}

fn task_green(ctx: &Context) -> Result<TaskOutput> {
    let g = &ctx.cfg.green;
    let r_outer = (TAU * g.eps_r).exp();
    let k = truncation_terms(r_outer);
    let lr = r_outer.ln();
    let mut rng = ctx.rng(Subcommand::Green);
    let samples: Vec<[f64; 7]> = (0..g.samples)
        .map(|_| {
            [
                rng.gen_range(-lr..lr),
                rng.gen_range(0.0..TAU),
                rng.gen_range(-lr..lr),
                rng.gen_range(0.0..TAU),
                rng.gen_range(-lr..lr),
                rng.gen_range(0.0..TAU),
                rng.gen_range(0.0..TAU),
            ]
        })
        .collect();
    let rows = samples
        .par_iter()
        .map(|s| {
            let z = Complex64::from_polar(s[0].exp(), s[1]);
            let w = Complex64::from_polar(s[2].exp(), s[3]);
            let r = s[4].exp();
            let outer = green_annulus(Complex64::from_polar(r_outer, s[5]), w, r_outer, k)?.abs();
            let inner = green_annulus(Complex64::from_polar(1.0 / r_outer, s[6]), w, r_outer, k)?.abs();
            let sym = (green_annulus(z, w, r_outer, k)? - green_annulus(w, z, r_outer, k)?).abs();
            let m = green_quadrature_points(r, r_outer, w.norm());
            let quad = circle_average_quadrature(r, r_outer, w, m, k);
            let closed = circle_average_green(r, r_outer, w)?;
            Ok([z.norm(), s[1], w.norm(), s[3], r, outer, inner, sym, quad, closed, (quad - closed).abs(), m as f64])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "green",
        &[
            "sample",
            "z_abs",
            "z_arg",
            "w_abs",
            "w_arg",
            "r",
            "boundary_outer",
            "boundary_inner",
            "symmetry",
            "average_quadrature",
            "average_closed",
            "average_diff",
            "points",
        ],
    );
    let (mut bmax, mut smax, mut amax) = (0.0f64, 0.0f64, 0.0f64);
    for (i, r) in rows.iter().enumerate() {
        bmax = bmax.max(r[5]).max(r[6]);
        smax = smax.max(r[7]);
        amax = amax.max(r[10]);
        let mut cells = vec![Cell::from(i)];
        cells.extend(r[..11].iter().map(|&x| Cell::from(x)));
        cells.push(Cell::from(r[11] as usize));
        t.push(cells);
    }
    let tol = &ctx.cfg.tolerances;
    let pass = bmax <= tol.green_boundary && smax <= tol.green_symmetry && amax <= tol.green_average;
    let detail = format!(
        "samples={} K={k} truncation_bound={} boundary={} symmetry={} average={}",
        g.samples,
        fmt12(truncation_bound(r_outer, k)),
        fmt12(bmax),
        fmt12(smax),
        fmt12(amax)
    );
    let check = Check::new(4, "Green's function suite", bmax, tol.green_boundary, pass, detail);
    Ok(TaskOutput { tables: vec![t], checks: vec![check], ..Default::default() })
}

fn task_riesz(ctx: &Context) -> Result<TaskOutput> {
    let rc = &ctx.cfg.riesz;
    let tol = &ctx.cfg.tolerances;
    let energy = match rc.energy {
        Some(e) => e,
        None => ctx.mid_energy(rc.n)?,
    };
    let r_outer = (TAU * rc.eps_r).exp();
    let d = determinant_poly(&ctx.p, &ctx.freq, energy, rc.n)?;
    let inv = find_zeros(&d, DEFAULT_TOL)?;
    let mut radii = vec![1.0 / r_outer];
    radii.extend(rc.interior_eps.iter().map(|e| (TAU * e).exp()));
    radii.push(r_outer);
    let dec = riesz_decompose_un(&d, &inv, r_outer, &radii, rc.points)?;
    let l_n = lyapunov_n(&ctx.params(energy, rc.eps_r, rc.n)?, 1024)?.value;
    let mv_radius = 0.4 * (r_outer - 1.0);
    let centres: Vec<Complex64> = (0..8).map(|j| Complex64::from_polar(1.0, TAU * (j as f64 + 0.3) / 8.0)).collect();
    let rch = riesz_checks(&dec, &d, &inv, l_n, &centres, mv_radius);
    let mut dt = Table::new("riesz_decomposition", &["radius", "angle", "u_n", "green_part", "harmonic_part"]);
    for (i, &r) in dec.radii.iter().enumerate() {
        for j in 0..dec.points_per_circle {
            let a = TAU * j as f64 / dec.points_per_circle as f64;
            dt.push(row![r, a, dec.un[i][j], dec.green_part[i][j], dec.harmonic_part[i][j]]);
        }
    }
    let pass5 = rch.boundary_max <= tol.riesz_boundary
        && rch.mean_value_max <= tol.riesz_mean_value
        && rch.interior_max_dev <= tol.riesz_interior;
    let detail5 = format!(
        "n={} energy={} boundary={} mean_value={} interior={} l_n_eps_r={}",
        rc.n,
        fmt12(energy),
        fmt12(rch.boundary_max),
        fmt12(rch.mean_value_max),
        fmt12(rch.interior_max_dev),
        fmt12(l_n)
    );
    let c5 = Check::new(5, "Riesz decomposition", rch.interior_max_dev, tol.riesz_interior, pass5, detail5);

    // Jensen identity, then the same with f ≡ 0
    let (e1, e2) = rc.jensen_eps;
    let (r1, r2) = ((TAU * e1).exp(), (TAU * e2).exp());
    let jd = determinant_poly(&ctx.p, &ctx.freq, energy, rc.jensen_n)?;
    let jinv = find_zeros(&jd, DEFAULT_TOL)?;
    let jc = jensen_average_identity_check(&jd, &jinv, r1, r2, r_outer, rc.jensen_points)?;
    let fd = determinant_poly(&Potential::zero(), &ctx.freq, energy, rc.jensen_n)?;
    let finv = find_zeros(&fd, DEFAULT_TOL)?;
    let fc = jensen_average_identity_check(&fd, &finv, r1, r2, r_outer, rc.jensen_points)?;
    let mut jt = Table::new(
        "jensen",
        &["potential", "n", "lhs", "count_integral", "harmonic_diff", "residual", "green_form_residual"],
    );
    jt.push(row![
        "configured",
        rc.jensen_n,
        jc.lhs,
        jc.count_integral,
        jc.harmonic_diff,
        jc.residual,
        jc.green_form_residual
    ]);
    jt.push(row![
        "zero",
        rc.jensen_n,
        fc.lhs,
        fc.count_integral,
        fc.harmonic_diff,
        fc.residual,
        fc.green_form_residual
    ]);
    let pass6 = jc.residual <= tol.jensen && fc.residual == 0.0;
    let detail6 = format!("residual={} free_residual={}", fmt12(jc.residual), fmt12(fc.residual));
    let c6 = Check::new(6, "Jensen identity", jc.residual, tol.jensen, pass6, detail6);

    // Riesz mass on the annulus of radius r
    let r = (TAU * rc.mass_eps).exp();
    let params = ctx.params(energy, 0.0, rc.n)?;
    let mass_v = riesz_mass_vn(&params, r, rc.mass_delta, rc.mass_points)?;
    let mass_u = riesz_mass_un(&d, r, rc.mass_delta, rc.mass_points)?;
    let count = inv.count_annulus(rc.mass_eps)?;
    let direct = count.count as f64 / rc.n as f64;
    let mut mt =
        Table::new("riesz_mass", &["n", "energy", "radius", "mass_vn", "mass_un", "inventory_count", "inventory_mass"]);
    mt.push(row![rc.n, energy, r, mass_v, mass_u, count.count, direct]);
    let pass7 = (mass_v - 2.0).abs() <= tol.mass && (mass_u - direct).abs() <= tol.mass_agreement;
    let detail7 = format!(
        "mass_vn={} mass_un={} inventory={} agreement={}",
        fmt12(mass_v),
        fmt12(mass_u),
        fmt12(direct),
        fmt12((mass_u - direct).abs())
    );
    let c7 = Check::new(7, "Riesz mass", (mass_v - 2.0).abs(), tol.mass, pass7, detail7);
    Ok(TaskOutput {
        tables: vec![dt, jt, mt],
        json: vec![("riesz_checks".into(), serde_json::to_value(rch)?)],
        checks: vec![c5, c6, c7],
        ..Default::default()
    })
}

fn task_ids(ctx: &Context) -> Result<TaskOutput> {
    let ic = &ctx.cfg.ids;
    let s = IdsSampler::new(&ctx.p, &ctx.freq, ic.n, ic.phases)?;
    let b = ctx.p.sup_bound() + 2.5;
    let mut t = Table::new("ids", &["energy", "ids", "spread", "n", "phases"]);
    let mut plot = Vec::new();
    for j in 0..ic.curve_points {
        let e = -b + 2.0 * b * j as f64 / (ic.curve_points - 1) as f64;
        let v = s.ids(e);
        t.push(row![e, v.value, v.spread, v.n, v.phases]);
        plot.push(("plot_ids", row![e, v.value]));
    }
    Ok(TaskOutput { tables: vec![t], plot, ..Default::default() })
}

fn task_holder(ctx: &Context) -> Result<TaskOutput> {
    let ic = &ctx.cfg.ids;
    let s = IdsSampler::new(&ctx.p, &ctx.freq, ic.n, ic.phases)?;
    let mut fits = Vec::new();
    for &q in &ic.quantiles {
        let e0 = s.quantile(q);
        fits.push((format!("quantile {}", fmt12(q)), holder_exponent(&s, e0, &ic.deltas)?));
    }
    let spec = dirichlet_eigenvalues(&ctx.p, &ctx.freq, ctx.cfg.theta, ic.n)?;
    let gap = widest_gap_midpoint(&spec).map(|(mid, _)| mid);
    if let Some(mid) = gap {
        fits.push(("widest gap".into(), holder_exponent(&s, mid, &ic.deltas)?));
    }
    let mut t = Table::new("holder", &["label", "energy", "beta", "band", "in_gap"]);
    let mut inc = Table::new("holder_increments", &["energy", "delta", "increment"]);
    for (label, f) in &fits {
        t.push(row![label.as_str(), f.energy, f.beta.unwrap_or(f64::NAN), f.band, f.in_gap]);
        for &(d, v) in &f.increments {
            inc.push(row![f.energy, d, v]);
        }
    }
    let nq = ic.quantiles.len();
    let min_beta = fits[..nq].iter().map(|(_, f)| f.beta.unwrap_or(f64::NEG_INFINITY)).fold(f64::INFINITY, f64::min);
    let gap_ok = fits.len() > nq && fits[nq].1.in_gap;
    let tol = &ctx.cfg.tolerances;
    let betas: Vec<String> = fits[..nq].iter().map(|(_, f)| f.beta.map_or("none".into(), fmt12)).collect();
    let detail =
        format!("betas=[{}] gap_energy={} gap_reported={gap_ok}", betas.join(" "), gap.map_or("none".into(), fmt12));
    let check =
        Check::new(8, "IDS Hölder exponent", min_beta, tol.holder_min, min_beta >= tol.holder_min && gap_ok, detail);
    Ok(TaskOutput { tables: vec![t, inc], checks: vec![check], ..Default::default() })
}

fn task_strata(ctx: &Context) -> Result<TaskOutput> {
    let sc = &ctx.cfg.strata;
    let tau = ctx.cfg.tolerances.tau_pos;
    let b = ctx.p.sup_bound() + 2.5;
    let energies: Vec<f64> =
        (0..sc.energy_points).map(|j| -b + 2.0 * b * j as f64 / (sc.energy_points - 1) as f64).collect();
    let spec = dirichlet_eigenvalues(&ctx.p, &ctx.freq, ctx.cfg.theta, sc.spectrum_n)?;
    let in_spec = spectrum_cells(&energies, &spec.eigenvalues);
    let grid: Vec<f64> = (1..=10).map(|j| sc.eps * j as f64 / 10.0).collect();
    let mut records = Vec::new();
    let mut t = Table::new(
        "strata",
        &["energy", "l0", "kappa_raw", "kappa0", "residual", "non_affine", "in_spectrum", "label"],
    );
    for (i, &e) in energies.iter().enumerate() {
        let params = ctx.params(e, 0.0, sc.n)?;
        let l0 = lyapunov_n(&params, sc.quadrature)?.value;
        let rep = acceleration(&params, &grid, sc.quadrature)?;
        let mut rec = classify_stratum(e, l0, &rep.overall, tau, in_spec[i]);
        if rep.non_affine {
            rec.label = StratumLabel::Unclassified;
        }
        t.push(row![
            e,
            l0,
            rep.overall.raw_slope,
            rec.kappa0,
            rep.overall.residual,
            rep.non_affine,
            rec.in_spectrum,
            rec.label.to_string()
        ]);
        records.push(rec);
    }
    let measure = strata_measure_estimate(&records);
    let mut mt = Table::new("strata_measure", &["label", "measure"]);
    for (k, v) in &measure {
        mt.push(row![k.as_str(), *v]);
    }
    Ok(TaskOutput { tables: vec![t, mt], ..Default::default() })
}

fn deviation_geometry(ctx: &Context) -> Result<DeviationSetGeometry> {
    let lc = &ctx.cfg.localize;
    let n = lc.deviation_n;
    let energy = match lc.deviation_energy {
        Some(e) => e,
        None => ctx.mid_energy(n)?,
    };
    let threshold = lc.deviation_threshold.unwrap_or((n as f64).powf(-0.3));
    deviation_set(&ctx.p, &ctx.freq, energy, n, threshold, lc.grid_factor * n)
}

fn task_ldt(ctx: &Context) -> Result<TaskOutput> {
    let geom = deviation_geometry(ctx)?;
    let mut t = Table::new("ldt_intervals", &["index", "left", "right", "width", "pair"]);
    for (i, &(l, r)) in geom.intervals.iter().enumerate() {
        let w = if l <= r { r - l } else { 1.0 - l + r };
        let pair = geom.pair_map[i].map_or(-1, |k| k as i64);
        t.push(row![i, l, r, w, pair]);
    }
    let n = geom.n as f64;
    let bound = 2.0 * n + n.powf(0.9);
    let count = geom.intervals.len() as f64;
    let paired = geom.pair_map.iter().filter(|p| p.is_some()).count();
    let detail = format!(
        "n={} threshold={} intervals={} paired={paired} measure={}",
        geom.n,
        fmt12(geom.threshold),
        geom.intervals.len(),
        fmt12(geom.measure)
    );
    let check = Check::new(9, "deviation-set interval count", count, bound, count <= bound, detail);
    let doc = serde_json::to_value(&geom)?;
    Ok(TaskOutput { tables: vec![t], json: vec![("ldt".into(), doc)], checks: vec![check], ..Default::default() })
}

/// Rounds every float in a JSON document to the printed precision.
fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(x) if x.is_f64() => {
            let f = x.as_f64().unwrap();
            if let Ok(r) = fmt12(f).parse::<f64>() {
                if let Some(n) = serde_json::Number::from_f64(r) {
                    *x = n;
                }
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_json),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

fn task_localize(ctx: &Context) -> Result<TaskOutput> {
    let lc = &ctx.cfg.localize;
    let tol = &ctx.cfg.tolerances;
    let theta = ctx.cfg.theta;
    let mut out = TaskOutput::default();

    // decay of mid-spectrum eigenvectors against L(E, 0)
    let n = lc.n;
    let which: Vec<usize> = (0..lc.eigenpairs).map(|k| 2 * n / 5 + k * n / (5 * lc.eigenpairs)).collect();
    let profiles = eigenfunction_decays(&ctx.p, &ctx.freq, theta, n, &which)?;
    let mut t = Table::new(
        "decay",
        &["index", "energy", "center", "left_slope", "right_slope", "slope", "lyapunov", "relative_error", "residual"],
    );
    let mut rel = Vec::new();
    for (k, prof) in which.iter().zip(&profiles) {
        let l = lyapunov_n(&ctx.params(prof.eigenvalue, 0.0, ctx.cfg.lyapunov.n)?, 1024)?.value;
        let e = (prof.slope - l).abs() / l;
        rel.push(e);
        t.push(row![
            *k,
            prof.eigenvalue,
            prof.center,
            prof.left_slope.unwrap_or(f64::NAN),
            prof.right_slope.unwrap_or(f64::NAN),
            prof.slope,
            l,
            e,
            prof.residual
        ]);
        for (site, x) in prof.eigenvector.iter().enumerate() {
            out.plot.push(("plot_decay", row![*k, prof.eigenvalue, site, x.abs().ln()]));
        }
    }
    out.tables.push(t);
    let med = median(&rel);
    out.checks.push(Check::new(
        9,
        "eigenfunction decay vs Lyapunov exponent",
        med,
        tol.decay_relative,
        med <= tol.decay_relative,
        format!("n={n} eigenpairs={} median_relative_error={}", which.len(), fmt12(med)),
    ));

    // double-resonance scan on random windows
    let geom = deviation_geometry(ctx)?;
    let dn = geom.n as i64;
    let mut rng = ctx.rng(Subcommand::Localize);
    let mut rt = Table::new(
        "resonance_scan",
        &["window", "theta", "y", "hits", "violation", "first", "second", "mirror_pair", "phase_ratio"],
    );
    let mut violations = 0;
    for w in 0..lc.resonance_windows {
        let th: f64 = rng.gen_range(0.0..1.0);
        let y: i64 = rng.gen_range(dn + 1..10 * dn);
        let scan = double_resonance_scan(&geom, th, &ctx.freq, y)?;
        let phase = phase_resonance_check(th, &ctx.freq, tol.resonance_c, tol.resonance_b, 10 * dn as u64)?;
        let (f, s) = scan.violation.map_or((0, 0), |v| (v.first, v.second));
        if scan.violation.is_some() {
            violations += 1;
        }
        rt.push(row![
            w,
            th,
            y,
            scan.hits,
            scan.violation.is_some(),
            f,
            s,
            scan.mirror_pair.is_some(),
            phase.worst_ratio
        ]);
    }
    out.tables.push(rt);
    out.checks.push(Check::new(
        9,
        "double-resonance scan",
        violations as f64,
        0.0,
        violations == 0,
        format!("windows={} violations={violations} intervals={}", lc.resonance_windows, geom.intervals.len()),
    ));

    // eigenfunction expansion on sub-windows of computed eigenpairs
    let ne = lc.expansion_n;
    let spec = dirichlet_eigenvalues(&ctx.p, &ctx.freq, theta, ne)?;
    let diag = crate::spectral::diagonal(&ctx.p, &ctx.freq, theta, ne);
    let mut et = Table::new("expansion", &["potential", "energy", "l1", "l2", "y", "phi_y", "expansion", "residual"]);
    let mut worst = 0.0f64;
    for j in 0..lc.expansion_pairs {
        let k = (2 * j + 1) * ne / (2 * lc.expansion_pairs);
        let lambda = spec.eigenvalues[k];
        let v = eigenvector(&diag, lambda)?;
        let c = (0..ne).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap();
        // phi[j] holds site j − 1, with zero Dirichlet values outside [0, ne−1]
        let mut phi = vec![0.0];
        phi.extend_from_slice(&v);
        phi.push(0.0);
        // Windows beside the localization centre: one containing it has a
        // Dirichlet eigenvalue within e^{−2Ld} of λ, far below the accuracy of λ.
        let hw = lc.expansion_half_width;
        let (s1, s2) =
            if c < ne / 2 { (c + 1, (c + 1 + 2 * hw).min(ne - 1)) } else { ((c - 1).saturating_sub(2 * hw), c - 1) };
        let (l1, l2) = (s1 + 1, s2 + 1);
        for y in [l1, l1 + (l2 - l1) / 4, (l1 + l2) / 2, l2] {
            let ch = expansion_identity_check(&ctx.p, &ctx.freq, theta - ctx.freq.alpha(), lambda, &phi, l1, l2, y)?;
            worst = worst.max(ch.residual);
            et.push(row!["configured", lambda, s1, s2, y - 1, ch.phi_y, ch.expansion, ch.residual]);
        }
    }
    let mut worst_free = 0.0f64;
    for kf in [0.3f64, 0.9, 1.7, 2.6] {
        let e = 2.0 * kf.cos();
        let phi: Vec<f64> = (0..80).map(|j| (kf * (j as f64 + 1.0) + 0.2).sin()).collect();
        for y in [10usize, 33, 61, 70] {
            let ch = expansion_identity_check(&Potential::zero(), &ctx.freq, 0.0, e, &phi, 10, 70, y)?;
            worst_free = worst_free.max(ch.residual);
            et.push(row!["zero", e, 10usize, 70usize, y, ch.phi_y, ch.expansion, ch.residual]);
        }
    }
    out.tables.push(et);
    out.checks.push(Check::new(
        11,
        "eigenfunction expansion identity",
        worst,
        tol.expansion,
        worst <= tol.expansion && worst_free <= tol.expansion_free,
        format!("pairs={} residual={} free_residual={}", lc.expansion_pairs, fmt12(worst), fmt12(worst_free)),
    ));
    Ok(out)
}
