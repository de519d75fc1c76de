//! Fully sampled coupling: a lattice field paired against the pushed-forward
//! test function, plus the harmonic term.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::campaign::Verdict;
use super::{functional_value, im_pairing, ChainSetup};
use crate::error::{Error, Result};
use crate::gff::{dirichlet_energy, dirichlet_energy_static, FieldSampler, Pushforward, QuadratureNodes, Rect, TestFunction};
use crate::loewner::{ChainDomain, LoewnerChain};
use crate::loggas::{GasDomain, GasParams, Interaction};
use crate::stats::{ComplexMeanEstimate, MeanEstimate};
use rayon::prelude::*;

/// `[-L, L] x [0, 2L]` for H and `[0, 2L]^2` for O.
pub fn truncation_box(domain: ChainDomain, half_width: f64) -> Rect {
    match domain {
        ChainDomain::H => Rect {
            x0: -half_width,
            x1: half_width,
            y0: 0.0,
            y1: 2.0 * half_width,
        },
        ChainDomain::O => Rect {
            x0: 0.0,
            x1: 2.0 * half_width,
            y0: 0.0,
            y1: 2.0 * half_width,
        },
    }
}

/// Box of half-width `box_scale * 2r` and a power-of-two number of cells per
/// side giving at least `nodes_per_feature` nodes across the support diameter.
fn field_sampler(domain: ChainDomain, f: &TestFunction, box_scale: f64, nodes_per_feature: f64) -> Result<FieldSampler> {
    let diameter = 2.0 * f.radius;
    let half = box_scale * diameter;
    let cells = (2.0 * half * nodes_per_feature / diameter).ceil().max(2.0) as usize;
    let cells = cells.next_power_of_two();
    FieldSampler::new(truncation_box(domain, half), 2.0 * half / cells as f64, diameter)
}

fn default_theta() -> f64 {
    1.0
}

fn default_box_scale() -> f64 {
    8.0
}

fn default_nodes_per_feature() -> f64 {
    16.0
}

fn default_smoke_tolerance() -> f64 {
    0.1
}

fn default_swallow_eps() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmokeConfig {
    pub domain: GasDomain,
    pub kappa: f64,
    #[serde(default)]
    pub nu: f64,
    pub initial: Vec<f64>,
    pub f: TestFunction,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Time at which the field is pulled back; the gas runs up to it.
    pub horizon: f64,
    pub n_steps: usize,
    pub n_seeds: usize,
    /// Quadrature spacing for the harmonic term and the energy.
    pub mesh: f64,
    /// Truncation half-width in units of the support diameter.
    #[serde(default = "default_box_scale")]
    pub box_scale: f64,
    #[serde(default = "default_nodes_per_feature")]
    pub nodes_per_feature: f64,
    #[serde(default = "default_swallow_eps")]
    pub swallow_eps: f64,
    #[serde(default = "default_smoke_tolerance")]
    pub tolerance: f64,
}

impl SmokeConfig {
    fn setup(&self) -> ChainSetup {
        ChainSetup {
            params: GasParams {
                domain: self.domain,
                kappa: self.kappa,
                nu: self.nu,
                interaction: Interaction::LogGas,
            },
            initial: self.initial.clone(),
            horizon: self.horizon,
            n_steps: self.n_steps,
            swallow_eps: self.swallow_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let setup = self.setup();
        setup.validate()?;
        self.f.check_inside(setup.chain_domain())?;
        if self.n_seeds < 2 {
            return Err(Error::invalid("n_seeds", "need at least two seeds for a standard error"));
        }
        if !(self.mesh.is_finite() && self.mesh > 0.0 && self.mesh < self.f.radius) {
            return Err(Error::invalid("mesh", "must be positive and below the support radius"));
        }
        if !(self.box_scale >= 1.0) {
            return Err(Error::invalid("box_scale", "must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmokeReport {
    pub config: SmokeConfig,
    pub seed: u64,
    #[serde(rename = "box")]
    pub rect: Rect,
    pub field_mesh: f64,
    pub mean_re: f64,
    pub mean_im: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    /// `exp(i theta h_0(f) - theta^2 / 2 E_0(f))`.
    pub reference_re: f64,
    pub reference_im: f64,
    pub rel_err: f64,
    pub seeds_used: usize,
    pub dead_seed_count: usize,
    pub gas_failures: usize,
    pub verdicts: Vec<Verdict>,
}

impl SmokeReport {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Mean of `exp(i theta [(H o g_t, f) + (2/sqrt kappa)(Im M_t, f)])` over joint
/// gas and field seeds, against the law of the field at time zero.
pub fn sampled_coupling_smoke(config: &SmokeConfig, seed: u64) -> Result<SmokeReport> {
    config.validate()?;
    let setup = config.setup();
    let domain = setup.chain_domain();
    let kappa = config.kappa;
    let f = config.f;
    let sampler = field_sampler(domain, &f, config.box_scale, config.nodes_per_feature)?;
    let nodes = QuadratureNodes::for_function(&f, config.mesh)?;
    let t = config.horizon;

    let logs0: Vec<_> = nodes.points.iter().map(|&z| (z, Complex64::new(0.0, 0.0))).collect();
    let pairing0 = im_pairing(domain, kappa, &nodes, &logs0, &config.initial);
    let energy0 = dirichlet_energy_static(&f, domain, config.mesh)?;
    let reference = functional_value(kappa, config.theta, pairing0, energy0);

    enum Outcome {
        Done(Complex64),
        Dead,
        GasFailure,
    }
    let outcomes: Vec<Result<Outcome>> = (0..config.n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.wrapping_add(i);
            let chain = match setup.chain(s) {
                Ok(c) => c,
                Err(Error::StepFailure { .. }) => return Ok(Outcome::GasFailure),
                Err(e) => return Err(e),
            };
            let pushed = match Pushforward::new(&chain, t, f) {
                Ok(p) => p,
                Err(Error::SwallowedProbe { .. }) => return Ok(Outcome::Dead),
                Err(e) => return Err(e),
            };
            let mut logs = Vec::with_capacity(nodes.len());
            for &z in &nodes.points {
                let e = chain.evolve(z, t)?;
                if !e.alive {
                    return Ok(Outcome::Dead);
                }
                logs.push((e.g, e.log_gprime));
            }
            let x = chain.driving().positions(chain.driving().n_steps());
            let harmonic = 2.0 / kappa.sqrt() * im_pairing(domain, kappa, &nodes, &logs, x);
            let field = sampler.sample(s).pair_nodal(&sampler.nodal(&pushed)?);
            Ok(Outcome::Done(Complex64::new(0.0, config.theta * (field + harmonic)).exp()))
        })
        .collect();
    let (mut values, mut dead, mut failed) = (Vec::new(), 0, 0);
    for o in outcomes {
        match o? {
            Outcome::Done(v) => values.push(v),
            Outcome::Dead => dead += 1,
            Outcome::GasFailure => failed += 1,
        }
    }
    if 2 * (dead + failed) > config.n_seeds {
        return Err(Error::InsufficientSurvivors {
            dead: dead + failed,
            total: config.n_seeds,
        });
    }
    let est = ComplexMeanEstimate::from_samples(&values);
    let rel_err = (est.mean() - reference).norm() / reference.norm();
    let verdicts = vec![Verdict::at_most(
        "sampled_coupling",
        rel_err,
        config.tolerance,
        "relative",
        values.len(),
    )];
    Ok(SmokeReport {
        config: config.clone(),
        seed,
        rect: sampler.rect(),
        field_mesh: sampler.mesh(),
        mean_re: est.re.mean,
        mean_im: est.im.mean,
        stderr_re: est.re.stderr,
        stderr_im: est.im.stderr,
        reference_re: reference.re,
        reference_im: reference.im,
        rel_err,
        seeds_used: values.len(),
        dead_seed_count: dead,
        gas_failures: failed,
        verdicts,
    })
}

/// Variance of the field paired with a pushed-forward test function on one
/// fixed chain, next to the Dirichlet energy it should reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCheck {
    #[serde(rename = "box")]
    pub rect: Rect,
    pub field_mesh: f64,
    pub sampled_variance: f64,
    pub sampled_stderr: f64,
    /// Exact variance of the lattice pairing on this box.
    pub lattice_variance: f64,
    /// Exact lattice variance on the box of twice the half-width.
    pub doubled_box_variance: f64,
    pub energy: f64,
    /// `|sampled - energy| / energy`.
    pub rel_err: f64,
    pub n_seeds: usize,
}

pub fn pushforward_variance_check(
    chain: &LoewnerChain,
    f: &TestFunction,
    t: f64,
    mesh: f64,
    box_scale: f64,
    n_seeds: usize,
    seed: u64,
) -> Result<VarianceCheck> {
    if n_seeds < 2 {
        return Err(Error::invalid("n_seeds", "need at least two seeds for a standard error"));
    }
    let domain = chain.domain();
    let pushed = Pushforward::new(chain, t, *f)?;
    let sampler = field_sampler(domain, f, box_scale, default_nodes_per_feature())?;
    let nodal = sampler.nodal(&pushed)?;
    let squares: Vec<f64> = (0..n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let p = sampler.sample(seed.wrapping_add(i)).pair_nodal(&nodal);
            p * p
        })
        .collect();
    let est = MeanEstimate::from_samples(&squares);
    let doubled = field_sampler(domain, f, 2.0 * box_scale, default_nodes_per_feature())?;
    let energy = dirichlet_energy(f, chain, t, mesh)?;
    Ok(VarianceCheck {
        rect: sampler.rect(),
        field_mesh: sampler.mesh(),
        sampled_variance: est.mean,
        sampled_stderr: est.stderr,
        lattice_variance: sampler.pairing_variance(&pushed)?,
        doubled_box_variance: doubled.pairing_variance(&pushed)?,
        energy,
        rel_err: (est.mean - energy).abs() / energy,
        n_seeds,
    })
}
