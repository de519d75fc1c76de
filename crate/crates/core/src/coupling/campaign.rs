//! Seed-parallel Monte Carlo campaigns: martingale drift, QV identity and
//! constancy of the characteristic functional.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{default_q, functional_value, im_pairing, observable_at, ChainSetup};
use crate::error::{Error, Result};
use crate::gff::{energy_from_images, green_regular_part, QuadratureNodes, TestFunction};
use crate::loewner::{ChainDomain, LoewnerChain, MapEval};
use crate::loggas::{GasDomain, GasParams, Interaction};
use crate::stats::{pairwise_sum, ComplexMeanEstimate, MeanEstimate};

fn default_swallow_eps() -> f64 {
    1e-3
}

fn default_drift_report() -> usize {
    10
}

fn default_coupling_report() -> usize {
    5
}

fn default_thetas() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}

fn default_qv_tolerance() -> f64 {
    0.1
}

/// Falsification arm run next to the driven campaign.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Control {
    #[default]
    None,
    /// Same particles without mutual repulsion (plain `sqrt(kappa)` Brownian motions).
    Free,
    /// Quadrant observable built with this boundary exponent instead of `1 - kappa/4`.
    Q(f64),
}

/// One pass/fail decision with the tolerance and sample count behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    /// Observed statistic (a z-score or a relative error, per `tolerance_kind`).
    pub statistic: f64,
    pub tolerance: f64,
    pub tolerance_kind: String,
    /// `"<="` when the statistic must stay within the tolerance, `">"` when it must exceed it.
    pub comparison: String,
    pub samples: usize,
}

impl Verdict {
    pub(crate) fn at_most(name: impl Into<String>, statistic: f64, tolerance: f64, kind: &str, samples: usize) -> Self {
        Verdict {
            name: name.into(),
            pass: statistic <= tolerance,
            statistic,
            tolerance,
            tolerance_kind: kind.into(),
            comparison: "<=".into(),
            samples,
        }
    }

    fn above(name: impl Into<String>, statistic: f64, tolerance: f64, kind: &str, samples: usize) -> Self {
        Verdict {
            name: name.into(),
            pass: statistic > tolerance,
            statistic,
            tolerance,
            tolerance_kind: kind.into(),
            comparison: ">".into(),
            samples,
        }
    }
}

fn gas_params(domain: GasDomain, kappa: f64, nu: f64, interaction: Interaction) -> GasParams {
    GasParams {
        domain,
        kappa,
        nu,
        interaction,
    }
}

/// Grid indices of `n_report` equally spaced report times (excluding 0).
fn report_indices(n_steps: usize, n_report: usize) -> Result<Vec<usize>> {
    if n_report == 0 || n_report > n_steps {
        return Err(Error::invalid("n_report", format!("must lie in 1..={n_steps}")));
    }
    Ok((1..=n_report).map(|r| r * n_steps / n_report).collect())
}

fn check_seeds(n_seeds: usize) -> Result<()> {
    if n_seeds < 2 {
        return Err(Error::invalid("n_seeds", "need at least two seeds for a standard error"));
    }
    Ok(())
}

fn check_survivors(dead: usize, total: usize) -> Result<()> {
    if 2 * dead > total {
        Err(Error::InsufficientSurvivors { dead, total })
    } else {
        Ok(())
    }
}

/// Per-seed outcome: a value, a lost seed (probe swallowed), or a gas path
/// the integrator could not complete.
enum SeedOutcome<T> {
    Done(T),
    Dead,
    GasFailure,
}

fn run_seeds<T: Send>(
    n_seeds: usize,
    seed: u64,
    work: impl Fn(u64) -> Result<SeedOutcome<T>> + Sync,
) -> Result<(Vec<T>, usize, usize)> {
    let outcomes: Vec<Result<SeedOutcome<T>>> = (0..n_seeds as u64)
        .into_par_iter()
        .map(|i| work(seed.wrapping_add(i)))
        .collect();
    let (mut done, mut dead, mut failed) = (Vec::new(), 0, 0);
    for o in outcomes {
        match o? {
            SeedOutcome::Done(v) => done.push(v),
            SeedOutcome::Dead => dead += 1,
            SeedOutcome::GasFailure => failed += 1,
        }
    }
    Ok((done, dead, failed))
}

fn chain_or_failure(setup: &ChainSetup, seed: u64) -> Result<Option<LoewnerChain>> {
    match setup.chain(seed) {
        Ok(c) => Ok(Some(c)),
        Err(Error::StepFailure { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn check_probes(domain: ChainDomain, probes: &[Complex64]) -> Result<()> {
    for &z in probes {
        if !domain.contains(z) {
            return Err(Error::invalid("probes", format!("{z} lies outside {}", domain.name())));
        }
    }
    Ok(())
}

/// Drift campaign for `M_D(z, t) - M_D(z, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    pub domain: GasDomain,
    pub kappa: f64,
    #[serde(default)]
    pub nu: f64,
    pub initial: Vec<f64>,
    pub probes: Vec<Complex64>,
    pub horizon: f64,
    pub n_steps: usize,
    #[serde(default = "default_drift_report")]
    pub n_report: usize,
    pub n_seeds: usize,
    #[serde(default = "default_swallow_eps")]
    pub swallow_eps: f64,
    #[serde(default)]
    pub control: Control,
}

impl DriftConfig {
    fn setup(&self, interaction: Interaction) -> ChainSetup {
        ChainSetup {
            params: gas_params(self.domain, self.kappa, self.nu, interaction),
            initial: self.initial.clone(),
            horizon: self.horizon,
            n_steps: self.n_steps,
            swallow_eps: self.swallow_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let setup = self.setup(Interaction::LogGas);
        setup.validate()?;
        check_seeds(self.n_seeds)?;
        report_indices(self.n_steps, self.n_report)?;
        if self.probes.is_empty() {
            return Err(Error::invalid("probes", "need at least one probe"));
        }
        check_probes(setup.chain_domain(), &self.probes)?;
        match self.control {
            Control::Free if self.initial.len() < 2 => Err(Error::invalid(
                "control",
                "the interaction-free arm only differs from the driven one for N >= 2",
            )),
            Control::Q(_) if self.domain != GasDomain::HalfLine => {
                Err(Error::invalid("control", "the q arm applies to quadrant chains only"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub probe: Complex64,
    pub t: f64,
    pub mean_re: f64,
    pub mean_im: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    /// Larger componentwise `|mean| / stderr`.
    pub z_score: f64,
}

impl DriftRow {
    fn new(probe: Complex64, t: f64, samples: &[Complex64]) -> Self {
        let est = ComplexMeanEstimate::from_samples(samples);
        DriftRow {
            probe,
            t,
            mean_re: est.re.mean,
            mean_im: est.im.mean,
            stderr_re: est.re.stderr,
            stderr_im: est.im.stderr,
            z_score: est.max_z_score(Complex64::new(0.0, 0.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftTable {
    pub arm: String,
    pub interaction: Interaction,
    pub q: f64,
    pub rows: Vec<DriftRow>,
    pub seeds_used: usize,
    pub dead_seed_count: usize,
    pub gas_failures: usize,
}

impl DriftTable {
    pub fn max_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z_score).fold(0.0, f64::max)
    }

    /// Largest z-score among rows at the final report time.
    pub fn final_z(&self) -> f64 {
        let t_last = self.rows.iter().map(|r| r.t).fold(f64::NEG_INFINITY, f64::max);
        self.rows
            .iter()
            .filter(|r| r.t == t_last)
            .map(|r| r.z_score)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub config: DriftConfig,
    pub seed: u64,
    pub driven: DriftTable,
    pub control: Option<DriftTable>,
    pub verdicts: Vec<Verdict>,
}

impl DriftReport {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

fn drift_arm(config: &DriftConfig, arm: &str, interaction: Interaction, q: f64, seed: u64) -> Result<DriftTable> {
    let setup = config.setup(interaction);
    let ks = report_indices(config.n_steps, config.n_report)?;
    let (samples, dead, failed) = run_seeds(config.n_seeds, seed, |s| {
        let Some(chain) = chain_or_failure(&setup, s)? else {
            return Ok(SeedOutcome::GasFailure);
        };
        let mut per_probe = Vec::with_capacity(config.probes.len());
        for &z in &config.probes {
            let trace = chain.trace(z)?;
            if !trace[config.n_steps].alive {
                return Ok(SeedOutcome::Dead);
            }
            let m = |k: usize| {
                let e = &trace[k];
                observable_at(chain.domain(), chain.kappa(), q, e.g, e.log_gprime, chain.driving().positions(k))
            };
            let m0 = m(0);
            per_probe.push(ks.iter().map(|&k| m(k) - m0).collect::<Vec<_>>());
        }
        Ok(SeedOutcome::Done(per_probe))
    })?;
    check_survivors(dead + failed, config.n_seeds)?;
    let dt = config.horizon / config.n_steps as f64;
    let mut rows = Vec::new();
    for (p, &z) in config.probes.iter().enumerate() {
        for (r, &k) in ks.iter().enumerate() {
            let col: Vec<Complex64> = samples.iter().map(|s| s[p][r]).collect();
            rows.push(DriftRow::new(z, k as f64 * dt, &col));
        }
    }
    Ok(DriftTable {
        arm: arm.into(),
        interaction,
        q,
        rows,
        seeds_used: samples.len(),
        dead_seed_count: dead,
        gas_failures: failed,
    })
}

/// Mean drift of the martingale observables with its falsification arm.
/// The driven arm passes if every row is within 3 standard errors of zero;
/// the control arm must show a drift beyond 5 standard errors at the final time.
pub fn martingale_drift_test(config: &DriftConfig, seed: u64) -> Result<DriftReport> {
    config.validate()?;
    let q0 = default_q(config.kappa);
    let driven = drift_arm(config, "driven", Interaction::LogGas, q0, seed)?;
    let mut verdicts = vec![Verdict::at_most(
        "martingale_drift",
        driven.max_z(),
        3.0,
        "stderr",
        driven.seeds_used,
    )];
    let control = match config.control {
        Control::None => None,
        Control::Free => Some(drift_arm(config, "free", Interaction::Free, q0, seed)?),
        Control::Q(q) => Some(drift_arm(config, &format!("q={q}"), Interaction::LogGas, q, seed)?),
    };
    if let Some(c) = &control {
        verdicts.push(Verdict::above(
            "control_detects_drift",
            c.final_z(),
            5.0,
            "stderr",
            c.seeds_used,
        ));
    }
    Ok(DriftReport {
        config: config.clone(),
        seed,
        driven,
        control,
        verdicts,
    })
}

/// QV campaign: realized covariation of `Im M` against the Green decrement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QvConfig {
    pub domain: GasDomain,
    pub kappa: f64,
    #[serde(default)]
    pub nu: f64,
    pub initial: Vec<f64>,
    pub pairs: Vec<[Complex64; 2]>,
    pub horizon: f64,
    pub n_steps: usize,
    pub n_seeds: usize,
    #[serde(default = "default_swallow_eps")]
    pub swallow_eps: f64,
    #[serde(default = "default_qv_tolerance")]
    pub tolerance: f64,
}

impl QvConfig {
    fn setup(&self) -> ChainSetup {
        ChainSetup {
            params: gas_params(self.domain, self.kappa, self.nu, Interaction::LogGas),
            initial: self.initial.clone(),
            horizon: self.horizon,
            n_steps: self.n_steps,
            swallow_eps: self.swallow_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let setup = self.setup();
        setup.validate()?;
        check_seeds(self.n_seeds)?;
        if self.pairs.is_empty() {
            return Err(Error::invalid("pairs", "need at least one probe pair"));
        }
        let flat: Vec<Complex64> = self.pairs.iter().flatten().copied().collect();
        check_probes(setup.chain_domain(), &flat)?;
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvRow {
    pub z: Complex64,
    pub w: Complex64,
    pub realized_mean: f64,
    pub realized_stderr: f64,
    pub target_mean: f64,
    pub target_stderr: f64,
    pub rel_err: f64,
}

impl QvRow {
    fn new(z: Complex64, w: Complex64, realized: &[f64], target: &[f64]) -> Self {
        let r = MeanEstimate::from_samples(realized);
        let t = MeanEstimate::from_samples(target);
        QvRow {
            z,
            w,
            realized_mean: r.mean,
            realized_stderr: r.stderr,
            target_mean: t.mean,
            target_stderr: t.stderr,
            rel_err: (r.mean - t.mean).abs() / t.mean.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvReport {
    pub config: QvConfig,
    pub seed: u64,
    pub qv_table: Vec<QvRow>,
    pub seeds_used: usize,
    pub dead_seed_count: usize,
    pub gas_failures: usize,
    pub verdicts: Vec<Verdict>,
}

impl QvReport {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// `Im M` along a trace and the regular or off-diagonal Green's function per grid time.
fn im_series(chain: &LoewnerChain, trace: &[MapEval]) -> Vec<f64> {
    let q = default_q(chain.kappa());
    trace
        .iter()
        .enumerate()
        .map(|(k, e)| observable_at(chain.domain(), chain.kappa(), q, e.g, e.log_gprime, chain.driving().positions(k)).im)
        .collect()
}

fn evolved_green(domain: ChainDomain, a: &MapEval, b: &MapEval, diagonal: bool) -> f64 {
    if diagonal {
        green_regular_part(domain, a.g).expect("alive images stay in the domain") - a.log_gprime.re
    } else {
        crate::gff::green_unchecked(domain, a.g, b.g)
    }
}

/// Realized QV and `-(kappa/4) dG` over `[0, t_k]` from two traces.
fn qv_pair(chain: &LoewnerChain, tz: &[MapEval], tw: &[MapEval], diagonal: bool, k: usize) -> (f64, f64) {
    let (mz, mw) = (im_series(chain, &tz[..=k]), im_series(chain, &tw[..=k]));
    let terms: Vec<f64> = (0..k).map(|j| (mz[j + 1] - mz[j]) * (mw[j + 1] - mw[j])).collect();
    let d = chain.domain();
    let dg = evolved_green(d, &tz[k], &tw[k], diagonal) - evolved_green(d, &tz[0], &tw[0], diagonal);
    (pairwise_sum(&terms), -chain.kappa() / 4.0 * dg)
}

/// MC comparison of realized QV with `-(kappa/4) E[dG]` at the horizon.
pub fn qv_campaign(config: &QvConfig, seed: u64) -> Result<QvReport> {
    config.validate()?;
    let setup = config.setup();
    let n = config.n_steps;
    let (samples, dead, failed) = run_seeds(config.n_seeds, seed, |s| {
        let Some(chain) = chain_or_failure(&setup, s)? else {
            return Ok(SeedOutcome::GasFailure);
        };
        let mut out = Vec::with_capacity(config.pairs.len());
        for &[z, w] in &config.pairs {
            let tz = chain.trace(z)?;
            let tw = if z == w { tz.clone() } else { chain.trace(w)? };
            if !tz[n].alive || !tw[n].alive {
                return Ok(SeedOutcome::Dead);
            }
            out.push(qv_pair(&chain, &tz, &tw, z == w, n));
        }
        Ok(SeedOutcome::Done(out))
    })?;
    check_survivors(dead + failed, config.n_seeds)?;
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for (p, &[z, w]) in config.pairs.iter().enumerate() {
        let realized: Vec<f64> = samples.iter().map(|s| s[p].0).collect();
        let target: Vec<f64> = samples.iter().map(|s| s[p].1).collect();
        let row = QvRow::new(z, w, &realized, &target);
        verdicts.push(Verdict::at_most(
            format!("qv_identity z={z} w={w}"),
            row.rel_err,
            config.tolerance,
            "relative",
            samples.len(),
        ));
        rows.push(row);
    }
    Ok(QvReport {
        config: config.clone(),
        seed,
        qv_table: rows,
        seeds_used: samples.len(),
        dead_seed_count: dead,
        gas_failures: failed,
        verdicts,
    })
}

/// Constancy test of the characteristic functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub domain: GasDomain,
    pub kappa: f64,
    #[serde(default)]
    pub nu: f64,
    #[serde(default)]
    pub interaction: Interaction,
    pub initial: Vec<f64>,
    pub f: TestFunction,
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
    pub horizon: f64,
    pub n_steps: usize,
    #[serde(default = "default_coupling_report")]
    pub n_report: usize,
    pub n_seeds: usize,
    pub mesh: f64,
    #[serde(default = "default_swallow_eps")]
    pub swallow_eps: f64,
}

impl CouplingConfig {
    fn setup(&self) -> ChainSetup {
        ChainSetup {
            params: gas_params(self.domain, self.kappa, self.nu, self.interaction),
            initial: self.initial.clone(),
            horizon: self.horizon,
            n_steps: self.n_steps,
            swallow_eps: self.swallow_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let setup = self.setup();
        setup.validate()?;
        check_seeds(self.n_seeds)?;
        report_indices(self.n_steps, self.n_report)?;
        self.f.check_inside(setup.chain_domain())?;
        if self.thetas.is_empty() || self.thetas.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("thetas", "need at least one finite theta"));
        }
        if !(self.mesh.is_finite() && self.mesh > 0.0 && self.mesh < self.f.radius) {
            return Err(Error::invalid("mesh", "must be positive and below the support radius"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalPoint {
    pub t: f64,
    pub mean_re: f64,
    pub mean_im: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    /// Larger componentwise distance to the `t = 0` value in standard errors.
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSeries {
    pub theta: f64,
    pub initial_re: f64,
    pub initial_im: f64,
    pub points: Vec<FunctionalPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub config: CouplingConfig,
    pub seed: u64,
    pub functional: Vec<FunctionalSeries>,
    pub qv_table: Vec<QvRow>,
    pub drift_table: Vec<DriftRow>,
    pub seeds_used: usize,
    /// Seeds stopped before the horizon because a node of `f` was swallowed;
    /// they enter the means with their stopped values.
    pub dead_seed_count: usize,
    pub gas_failures: usize,
    pub verdicts: Vec<Verdict>,
}

impl CouplingReport {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

struct CouplingSample {
    /// `[report][theta]`
    functional: Vec<Vec<Complex64>>,
    drift: Vec<Complex64>,
    qv: (f64, f64),
    stopped: bool,
}

/// Runs the seeds, stops every path at the first grid time a node of `f` is
/// swallowed, and tests that the mean functional stays at its `t = 0` value
/// within 4 standard errors. The report also carries the martingale drift and
/// the QV identity at the centre of `f`.
pub fn verify_coupling(config: &CouplingConfig, seed: u64) -> Result<CouplingReport> {
    config.validate()?;
    let setup = config.setup();
    let domain = setup.chain_domain();
    let kappa = config.kappa;
    let nodes = QuadratureNodes::for_function(&config.f, config.mesh)?;
    let ks = report_indices(config.n_steps, config.n_report)?;
    let center = config.f.center;
    let x0 = &config.initial;

    let identity: Vec<(Complex64, Complex64)> = nodes.points.iter().map(|&z| (z, Complex64::new(1.0, 0.0))).collect();
    let logs0: Vec<(Complex64, Complex64)> = nodes.points.iter().map(|&z| (z, Complex64::new(0.0, 0.0))).collect();
    let energy0 = energy_from_images(domain, &nodes, &identity);
    let pairing0 = im_pairing(domain, kappa, &nodes, &logs0, x0);
    let initial: Vec<Complex64> = config
        .thetas
        .iter()
        .map(|&th| functional_value(kappa, th, pairing0, energy0))
        .collect();

    let (samples, _, failed) = run_seeds(config.n_seeds, seed, |s| {
        let Some(chain) = chain_or_failure(&setup, s)? else {
            return Ok(SeedOutcome::GasFailure);
        };
        let traces: Vec<Vec<MapEval>> = nodes.points.iter().map(|&z| chain.trace(z)).collect::<Result<_>>()?;
        let tc = chain.trace(center)?;
        let mut stop = config.n_steps;
        for tr in traces.iter().chain(std::iter::once(&tc)) {
            if let Some(k) = tr.iter().position(|e| !e.alive) {
                stop = stop.min(k - 1);
            }
        }
        let mut functional = Vec::with_capacity(ks.len());
        let mut cache: Option<(usize, Vec<Complex64>)> = None;
        for &kr in &ks {
            let k = kr.min(stop);
            if let Some((ck, v)) = &cache {
                if *ck == k {
                    functional.push(v.clone());
                    continue;
                }
            }
            let logs: Vec<_> = traces.iter().map(|t| (t[k].g, t[k].log_gprime)).collect();
            let gp: Vec<_> = traces.iter().map(|t| (t[k].g, t[k].gprime)).collect();
            let pairing = im_pairing(domain, kappa, &nodes, &logs, chain.driving().positions(k));
            let energy = energy_from_images(domain, &nodes, &gp);
            let v: Vec<Complex64> = config
                .thetas
                .iter()
                .map(|&th| functional_value(kappa, th, pairing, energy))
                .collect();
            cache = Some((k, v.clone()));
            functional.push(v);
        }
        let q = default_q(kappa);
        let m = |k: usize| {
            let e = &tc[k];
            observable_at(domain, kappa, q, e.g, e.log_gprime, chain.driving().positions(k))
        };
        let drift = ks.iter().map(|&kr| m(kr.min(stop)) - m(0)).collect();
        let qv = qv_pair(&chain, &tc, &tc, true, stop);
        Ok(SeedOutcome::Done(CouplingSample {
            functional,
            drift,
            qv,
            stopped: stop < config.n_steps,
        }))
    })?;
    let stopped = samples.iter().filter(|s| s.stopped).count();
    check_survivors(stopped + failed, config.n_seeds)?;

    let dt = config.horizon / config.n_steps as f64;
    let mut functional = Vec::new();
    let mut verdicts = Vec::new();
    for (j, &theta) in config.thetas.iter().enumerate() {
        let points: Vec<FunctionalPoint> = ks
            .iter()
            .enumerate()
            .map(|(r, &k)| {
                let col: Vec<Complex64> = samples.iter().map(|s| s.functional[r][j]).collect();
                let est = ComplexMeanEstimate::from_samples(&col);
                FunctionalPoint {
                    t: k as f64 * dt,
                    mean_re: est.re.mean,
                    mean_im: est.im.mean,
                    stderr_re: est.re.stderr,
                    stderr_im: est.im.stderr,
                    z_score: est.max_z_score(initial[j]),
                }
            })
            .collect();
        let worst = points.iter().map(|p| p.z_score).fold(0.0, f64::max);
        verdicts.push(Verdict::at_most(
            format!("functional_constancy theta={theta}"),
            worst,
            4.0,
            "stderr",
            samples.len(),
        ));
        functional.push(FunctionalSeries {
            theta,
            initial_re: initial[j].re,
            initial_im: initial[j].im,
            points,
        });
    }
    let drift_table: Vec<DriftRow> = ks
        .iter()
        .enumerate()
        .map(|(r, &k)| {
            let col: Vec<Complex64> = samples.iter().map(|s| s.drift[r]).collect();
            DriftRow::new(center, k as f64 * dt, &col)
        })
        .collect();
    let realized: Vec<f64> = samples.iter().map(|s| s.qv.0).collect();
    let target: Vec<f64> = samples.iter().map(|s| s.qv.1).collect();
    let qv_table = vec![QvRow::new(center, center, &realized, &target)];
    Ok(CouplingReport {
        config: config.clone(),
        seed,
        functional,
        qv_table,
        drift_table,
        seeds_used: samples.len(),
        dead_seed_count: stopped,
        gas_failures: failed,
        verdicts,
    })
}
