//! Complex log potentials, the martingale observables of a driven chain, and
//! the Monte Carlo campaigns built on them.

mod campaign;
mod smoke;

pub use campaign::{
    martingale_drift_test, qv_campaign, verify_coupling, Control, CouplingConfig, CouplingReport, DriftConfig,
    DriftReport, DriftRow, DriftTable, FunctionalPoint, FunctionalSeries, QvConfig, QvReport, QvRow, Verdict,
};
pub use smoke::{pushforward_variance_check, sampled_coupling_smoke, truncation_box, SmokeConfig, SmokeReport, VarianceCheck};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gff::{energy_from_images, green_evolved, green_evolved_regular_part, QuadratureNodes, TestFunction};
use crate::loewner::{fmt_complex, ChainDomain, LoewnerChain, MapEval};
use crate::loggas::{GasDomain, GasParams, GasPath, GasSimulator, GasState, Integrator};

/// `1 - kappa / 4`, the boundary-term exponent that makes the observables driftless.
pub fn default_q(kappa: f64) -> f64 {
    1.0 - kappa / 4.0
}

/// `sum log(z - x_i)` on H; `sum [log(z - x_i) + log(z + x_i)] + q log z` on O.
/// Principal branches throughout: every factor has its argument in `(0, pi)`.
pub fn complex_potential(domain: ChainDomain, z: Complex64, x: &[f64], q: f64) -> Result<Complex64> {
    if !domain.contains(z) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::DomainViolation {
            point: fmt_complex(z),
            domain: domain.name(),
        });
    }
    Ok(potential_unchecked(domain, z, x, q))
}

fn potential_unchecked(domain: ChainDomain, z: Complex64, x: &[f64], q: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &xi in x {
        acc += (z - xi).ln();
        if domain == ChainDomain::O {
            acc += (z + xi).ln();
        }
    }
    if domain == ChainDomain::O && q != 0.0 {
        acc += q * z.ln();
    }
    acc
}

/// `-Phi(g, x; q) - (1 - kappa/4) log g'` from a tracked image.
pub(crate) fn observable_at(domain: ChainDomain, kappa: f64, q: f64, g: Complex64, log_gprime: Complex64, x: &[f64]) -> Complex64 {
    -potential_unchecked(domain, g, x, q) - (1.0 - kappa / 4.0) * log_gprime
}

/// Largest grid index `k` with `t_k <= t`, the horizon mapping to `n_steps`.
pub(crate) fn grid_index(path: &GasPath, t: f64) -> usize {
    let n = path.n_steps();
    let tol = 1e-12 * path.horizon();
    (0..=n).rev().find(|&k| path.time(k) <= t + tol).unwrap_or(0)
}

fn swallowed(e: &MapEval, t: f64) -> Error {
    Error::SwallowedProbe {
        probe: fmt_complex(e.z0),
        t,
    }
}

/// Martingale observable `M_D(z, t)` with the default `q`.
pub fn martingale_observable(chain: &LoewnerChain, z: Complex64, t: f64) -> Result<Complex64> {
    martingale_observable_with_q(chain, z, t, default_q(chain.kappa()))
}

/// As [`martingale_observable`] with an explicit boundary exponent `q`
/// (only the quadrant potential depends on it).
pub fn martingale_observable_with_q(chain: &LoewnerChain, z: Complex64, t: f64, q: f64) -> Result<Complex64> {
    let e = chain.evolve(z, t)?;
    if !e.alive {
        return Err(swallowed(&e, t));
    }
    let x = chain.driving().positions(grid_index(chain.driving(), t));
    Ok(observable_at(chain.domain(), chain.kappa(), q, e.g, e.log_gprime, x))
}

/// `(2 / sqrt(kappa)) Im M_D(z, t)`, the harmonic term added to the field.
pub fn harmonic_part(chain: &LoewnerChain, z: Complex64, t: f64) -> Result<f64> {
    Ok(2.0 / chain.kappa().sqrt() * martingale_observable(chain, z, t)?.im)
}

/// Chain parameters echoed in traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub domain: ChainDomain,
    pub kappa: f64,
    /// `delta` of a quadrant chain (equal to the gas `nu`); zero on H.
    pub delta: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
}

impl ChainParams {
    pub fn of(chain: &LoewnerChain) -> Self {
        ChainParams {
            domain: chain.domain(),
            kappa: chain.kappa(),
            delta: chain.delta(),
            n: chain.driving().n_particles(),
            seed: chain.driving().seed(),
        }
    }
}

/// `M_D(z, t_k)` at every grid time while the probe is alive.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleTrace {
    pub z: Complex64,
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Last grid time at which the probe was alive.
    pub alive_until: f64,
    pub chain_params: ChainParams,
}

impl MartingaleTrace {
    pub fn new(chain: &LoewnerChain, z: Complex64) -> Result<Self> {
        Self::with_q(chain, z, default_q(chain.kappa()))
    }

    pub fn with_q(chain: &LoewnerChain, z: Complex64, q: f64) -> Result<Self> {
        let trace = chain.trace(z)?;
        let path = chain.driving();
        let mut times = Vec::with_capacity(trace.len());
        let mut values = Vec::with_capacity(trace.len());
        for (k, e) in trace.iter().enumerate() {
            if !e.alive {
                break;
            }
            times.push(path.time(k));
            values.push(observable_at(chain.domain(), chain.kappa(), q, e.g, e.log_gprime, path.positions(k)));
        }
        Ok(MartingaleTrace {
            z,
            alive_until: *times.last().expect("the initial state is alive"),
            times,
            values,
            chain_params: ChainParams::of(chain),
        })
    }

    /// Largest jump of `Im M` between neighbouring grid times; a jump near
    /// `2 pi` would mean a branch was lost.
    pub fn max_im_jump(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| (w[1].im - w[0].im).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,re,im\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            out.push_str(&format!(
                "{},{},{}\n",
                crate::io::fmt_f64(*t),
                crate::io::fmt_f64(v.re),
                crate::io::fmt_f64(v.im)
            ));
        }
        out
    }
}

/// Realized covariation of `Im M(z)` and `Im M(w)` against the Green's
/// function decrement over `[0, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QvCheck {
    pub realized_qv: f64,
    pub minus_quarter_kappa_dg: f64,
}

/// Pathwise QV identity check on the chain's own grid. For `z == w` the
/// Green's function is replaced by its regular part; the singular term is
/// constant in time and drops out of the increment.
pub fn qv_identity_check(chain: &LoewnerChain, z: Complex64, w: Complex64, t_end: f64) -> Result<QvCheck> {
    let last = grid_index(chain.driving(), t_end);
    let tz = chain.trace_until(z, last)?;
    let tw = if z == w { tz.clone() } else { chain.trace_until(w, last)? };
    for e in tz.iter().chain(&tw) {
        if !e.alive {
            return Err(swallowed(e, e.t));
        }
    }
    let im_m = |trace: &[MapEval]| -> Vec<f64> {
        trace
            .iter()
            .enumerate()
            .map(|(k, e)| observable_at(chain.domain(), chain.kappa(), default_q(chain.kappa()), e.g, e.log_gprime, chain.driving().positions(k)).im)
            .collect()
    };
    let (mz, mw) = (im_m(&tz), im_m(&tw));
    let terms: Vec<f64> = (0..last).map(|k| (mz[k + 1] - mz[k]) * (mw[k + 1] - mw[k])).collect();
    let t1 = chain.driving().time(last);
    let dg = if z == w {
        green_evolved_regular_part(chain, t1, z)? - green_evolved_regular_part(chain, 0.0, z)?
    } else {
        green_evolved(chain, t1, z, w)? - green_evolved(chain, 0.0, z, w)?
    };
    Ok(QvCheck {
        realized_qv: crate::stats::pairwise_sum(&terms),
        minus_quarter_kappa_dg: -chain.kappa() / 4.0 * dg,
    })
}

/// `(Im M_D(., t), f)` by midpoint quadrature, from node images and driving positions.
pub(crate) fn im_pairing(
    domain: ChainDomain,
    kappa: f64,
    nodes: &QuadratureNodes,
    images: &[(Complex64, Complex64)],
    x: &[f64],
) -> f64 {
    let q = default_q(kappa);
    let vals: Vec<f64> = images
        .iter()
        .map(|&(g, lgp)| observable_at(domain, kappa, q, g, lgp, x).im)
        .collect();
    nodes.integrate(&vals)
}

/// `exp(i theta (2/sqrt kappa) (Im M(., t), f) - theta^2 / 2 E_t(f))`.
pub(crate) fn functional_value(kappa: f64, theta: f64, pairing: f64, energy: f64) -> Complex64 {
    Complex64::new(-0.5 * theta * theta * energy, theta * 2.0 / kappa.sqrt() * pairing).exp()
}

/// The characteristic functional whose expectation is constant in `t` when
/// the field coupling holds.
pub fn characteristic_functional(chain: &LoewnerChain, f: &TestFunction, theta: f64, t: f64, mesh: f64) -> Result<Complex64> {
    f.check_inside(chain.domain())?;
    let nodes = QuadratureNodes::for_function(f, mesh)?;
    let mut images = Vec::with_capacity(nodes.len());
    let mut gp = Vec::with_capacity(nodes.len());
    for &z in &nodes.points {
        let e = chain.evolve(z, t)?;
        if !e.alive {
            return Err(swallowed(&e, t));
        }
        images.push((e.g, e.log_gprime));
        gp.push((e.g, e.gprime));
    }
    let x = chain.driving().positions(grid_index(chain.driving(), t));
    let pairing = im_pairing(chain.domain(), chain.kappa(), &nodes, &images, x);
    let energy = energy_from_images(chain.domain(), &nodes, &gp);
    Ok(functional_value(chain.kappa(), theta, pairing, energy))
}

/// Driving gas and chain settings shared by the campaigns.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ChainSetup {
    pub params: GasParams,
    pub initial: Vec<f64>,
    pub horizon: f64,
    pub n_steps: usize,
    pub swallow_eps: f64,
}

/// Depth budget for campaign paths; deeper than the integrator default
/// because near-collisions are rarer but not excluded at larger kappa.
const CAMPAIGN_MAX_DEPTH: u32 = 80;

impl ChainSetup {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        GasState::new(self.params, self.initial.clone(), 0.0)?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::invalid("horizon", "must be positive"));
        }
        if self.n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be at least 1"));
        }
        if !(self.swallow_eps.is_finite() && self.swallow_eps > 0.0) {
            return Err(Error::invalid("swallow_eps", "must be positive"));
        }
        Ok(())
    }

    pub fn chain_domain(&self) -> ChainDomain {
        ChainDomain::for_gas(self.params.domain)
    }

    /// Simulates the gas for `seed` and wraps it in a chain (`delta = nu` on O).
    pub fn chain(&self, seed: u64) -> Result<LoewnerChain> {
        let initial = GasState::new(self.params, self.initial.clone(), 0.0)?;
        let sim = GasSimulator {
            integrator: Integrator {
                max_depth: CAMPAIGN_MAX_DEPTH,
                ..Integrator::default()
            },
            noise_scale: 1.0,
        };
        let path = sim.simulate(&initial, self.horizon, self.n_steps, seed)?;
        let delta = match self.params.domain {
            GasDomain::RealLine => 0.0,
            GasDomain::HalfLine => self.params.nu,
        };
        LoewnerChain::new(path, delta)?.with_swallow_eps(self.swallow_eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loggas::{GasParams, GasPath};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn frozen(params: GasParams, x: Vec<f64>, horizon: f64, n: usize, delta: f64) -> LoewnerChain {
        LoewnerChain::new(GasPath::constant(params, x, horizon, n).unwrap(), delta).unwrap()
    }

    #[test]
    fn potential_examples() {
        let v = complex_potential(ChainDomain::H, c(0.0, 1.0), &[0.0], 0.0).unwrap();
        assert!((v - c(0.0, PI / 2.0)).norm() < 1e-15);
        let v = complex_potential(ChainDomain::H, c(0.0, 2.0), &[-1.0, 1.0], 0.0).unwrap();
        assert!((v - c(5f64.ln(), PI)).norm() < 1e-14);
        assert!(complex_potential(ChainDomain::O, c(-1.0, 1.0), &[0.5], 0.0).is_err());
    }

    #[test]
    fn observable_initial_values() {
        let chain = frozen(GasParams::dyson(4.0), vec![0.0], 0.1, 10, 0.0);
        let m = martingale_observable(&chain, c(0.0, 1.0), 0.0).unwrap();
        assert!((m - c(0.0, -PI / 2.0)).norm() < 1e-15);
        let chain = frozen(GasParams::dyson(2.0), vec![-0.3, 0.4], 0.1, 10, 0.0);
        let z = c(0.2, 0.9);
        let m = martingale_observable(&chain, z, 0.0).unwrap();
        assert_eq!(m, -complex_potential(ChainDomain::H, z, &[-0.3, 0.4], 0.0).unwrap());
    }

    #[test]
    fn single_slit_closed_form() {
        let kappa = 2.0;
        let chain = frozen(GasParams::dyson(kappa), vec![0.0], 0.2, 50, 0.0);
        let z = c(0.4, 0.8);
        for t in [0.05, 0.1, 0.2] {
            let g = (z * z + 4.0 * t).sqrt();
            let expect = -g.ln() - (1.0 - kappa / 4.0) * (z / g).ln();
            let m = martingale_observable(&chain, z, t).unwrap();
            assert!((m - expect).norm() < 1e-8, "{m} vs {expect}");
        }
    }

    #[test]
    fn boundary_staircase() {
        let chain = frozen(GasParams::dyson(4.0), vec![-1.0, 1.0], 0.1, 10, 0.0);
        let between = harmonic_part(&chain, c(0.0, 1e-6), 0.0).unwrap();
        assert!((between + PI).abs() < 1e-4);
        let left = harmonic_part(&chain, c(-1e6, 1e-6), 0.0).unwrap();
        assert!((left + 2.0 * PI).abs() < 1e-3);
        let right = harmonic_part(&chain, c(1e6, 1e-6), 0.0).unwrap();
        assert!(right.abs() < 1e-3);
    }

    #[test]
    fn quadrant_potential_exponentiates_to_a_polynomial() {
        let x = [0.3, 1.1, 2.0];
        for z in [c(0.5, 0.5), c(2.0, 0.1), c(0.01, 3.0)] {
            let e = complex_potential(ChainDomain::O, z, &x, 0.0).unwrap().exp();
            let p: Complex64 = x.iter().map(|&xi| z * z - xi * xi).product();
            assert!((e - p).norm() < 1e-12 * p.norm());
        }
    }

    #[test]
    fn deterministic_qv_is_small_and_diagonal_qv_is_nonnegative() {
        let chain = frozen(GasParams::dyson(4.0), vec![0.0], 0.05, 200, 0.0);
        let q = qv_identity_check(&chain, c(0.0, 2.0), c(0.0, 2.0), 0.05).unwrap();
        assert!(q.realized_qv >= 0.0 && q.realized_qv < 1e-12);
        // no noise, but the domain still shrinks
        assert!(q.minus_quarter_kappa_dg > 0.0);
    }

    #[test]
    fn characteristic_functional_examples() {
        let chain = frozen(GasParams::dyson(4.0), vec![0.0], 0.05, 20, 0.0);
        let f = TestFunction::bump(c(0.0, 3.0), 0.5, 1.0).unwrap();
        assert_eq!(characteristic_functional(&chain, &f, 0.0, 0.05, 0.1).unwrap(), c(1.0, 0.0));
        let v = characteristic_functional(&chain, &f, 1.0, 0.05, 0.1).unwrap();
        assert!(v.norm() <= 1.0);
    }

    #[test]
    fn trace_starts_at_minus_potential() {
        let chain = frozen(GasParams::bru_wishart(4.0, 1.0), vec![0.5, 1.5], 0.05, 20, 1.0);
        let z = c(1.0, 1.0);
        let tr = MartingaleTrace::new(&chain, z).unwrap();
        assert_eq!(tr.values[0], -complex_potential(ChainDomain::O, z, &[0.5, 1.5], 0.0).unwrap());
        assert_eq!(tr.times.len(), 21);
        assert!(tr.max_im_jump() < PI / 2.0);
    }

    proptest! {
        #[test]
        fn harmonic_part_lies_between_staircase_extremes(re in -5.0f64..5.0, im in 0.01f64..5.0) {
            let chain = frozen(GasParams::dyson(4.0), vec![-1.0, 0.5, 2.0], 0.1, 10, 0.0);
            let h = harmonic_part(&chain, c(re, im), 0.0).unwrap();
            prop_assert!((-3.0 * PI..=0.0).contains(&h));
        }
    }
}
