//! Stochastic log-gases on the line and the half-line.
//!
//! Two particle systems drive the Loewner chains of this crate:
//!
//! * the `(8/kappa)`-Dyson model on the real line,
//!   `dY_i = sqrt(kappa) dB_i + 4 sum_{j != i} dt / (Y_i - Y_j)`;
//! * the `(8/kappa, nu)`-Bru–Wishart process on the half-line,
//!   `dY_i = sqrt(kappa) dB_i + (8(nu+1) - kappa) / (2 Y_i) dt
//!          + 4 sum_{j != i} [1/(Y_i - Y_j) + 1/(Y_i + Y_j)] dt`.
//!
//! Both drifts are gradients of the logarithmic potentials returned by
//! [`log_potential`]. Paths are produced by an Euler–Maruyama scheme that
//! bisects a macro step along a Brownian bridge whenever the proposal leaves
//! the Weyl chamber or the drift displacement is large against the local gap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// The one-dimensional state space of the gas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GasDomain {
    RealLine,
    HalfLine,
}

impl GasDomain {
    pub fn name(self) -> &'static str {
        match self {
            GasDomain::RealLine => "real_line",
            GasDomain::HalfLine => "half_line",
        }
    }
}

/// Whether particles feel the logarithmic interaction, or move as
/// independent `sqrt(kappa)` Brownian motions (the falsification control).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interaction {
    #[default]
    LogGas,
    Free,
}

/// Parameters shared by every state of one gas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasParams {
    pub domain: GasDomain,
    pub kappa: f64,
    /// Boundary parameter of the half-line gas; ignored on the real line.
    pub nu: f64,
    #[serde(default)]
    pub interaction: Interaction,
}

impl GasParams {
    pub fn dyson(kappa: f64) -> Self {
        GasParams {
            domain: GasDomain::RealLine,
            kappa,
            nu: 0.0,
            interaction: Interaction::LogGas,
        }
    }

    pub fn bru_wishart(kappa: f64, nu: f64) -> Self {
        GasParams {
            domain: GasDomain::HalfLine,
            kappa,
            nu,
            interaction: Interaction::LogGas,
        }
    }

    pub fn with_interaction(mut self, interaction: Interaction) -> Self {
        self.interaction = interaction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::invalid("kappa", format!("must be positive, got {}", self.kappa)));
        }
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(Error::invalid("nu", format!("must be nonnegative, got {}", self.nu)));
        }
        Ok(())
    }

    /// `(8(nu+1) - kappa) / 2`, the strength of the repulsion from the origin.
    pub fn boundary_coefficient(&self) -> f64 {
        (8.0 * (self.nu + 1.0) - self.kappa) / 2.0
    }

    /// False for half-line gases whose drift attracts particles to the origin
    /// (`8(nu+1) < kappa`). Such runs are allowed but reported as untested.
    pub fn in_tested_regime(&self) -> bool {
        self.domain == GasDomain::RealLine || 8.0 * (self.nu + 1.0) >= self.kappa
    }
}

/// Checks the Weyl-chamber invariant (and positivity on the half-line).
pub fn check_configuration(domain: GasDomain, x: &[f64]) -> Result<()> {
    for (i, v) in x.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonOrderedConfiguration { index: i });
        }
    }
    if let Some(i) = x.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonOrderedConfiguration { index: i + 1 });
    }
    if domain == GasDomain::HalfLine {
        if let Some(&first) = x.first() {
            if first <= 0.0 {
                return Err(Error::NonPositive { value: first });
            }
        }
    }
    Ok(())
}

/// The logarithmic potential whose gradient is the drift.
pub fn log_potential(params: &GasParams, x: &[f64]) -> Result<f64> {
    check_configuration(params.domain, x)?;
    if params.interaction == Interaction::Free {
        return Ok(0.0);
    }
    let n = x.len();
    let mut pair = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            pair += (x[j] - x[i]).ln();
            if params.domain == GasDomain::HalfLine {
                pair += (x[j] + x[i]).ln();
            }
        }
    }
    let mut phi = 4.0 * pair;
    if params.domain == GasDomain::HalfLine {
        phi += params.boundary_coefficient() * x.iter().map(|v| v.ln()).sum::<f64>();
    }
    Ok(phi)
}

/// Drift vector `b_i = d phi / d x_i`.
pub fn drift(params: &GasParams, x: &[f64]) -> Result<Vec<f64>> {
    check_configuration(params.domain, x)?;
    let mut out = vec![0.0; x.len()];
    drift_into(params, x, &mut out);
    Ok(out)
}

/// Unchecked drift evaluation for the integrator's inner loop.
pub(crate) fn drift_into(params: &GasParams, x: &[f64], out: &mut [f64]) {
    interaction_drift_into(params, x, out);
    if params.interaction == Interaction::LogGas && params.domain == GasDomain::HalfLine {
        let c = params.boundary_coefficient();
        for (b, v) in out.iter_mut().zip(x) {
            *b += c / v;
        }
    }
}

/// Pairwise part of the drift, without the `c / x_i` boundary term.
fn interaction_drift_into(params: &GasParams, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|b| *b = 0.0);
    if params.interaction == Interaction::Free {
        return;
    }
    let n = x.len();
    for i in 0..n {
        for j in i + 1..n {
            let mut s = 1.0 / (x[i] - x[j]);
            let mut t = -s;
            if params.domain == GasDomain::HalfLine {
                let m = 1.0 / (x[i] + x[j]);
                s += m;
                t += m;
            }
            out[i] += 4.0 * s;
            out[j] += 4.0 * t;
        }
    }
}

/// An ordered particle configuration at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct GasState {
    params: GasParams,
    positions: Vec<f64>,
    time: f64,
}

impl GasState {
    pub fn new(params: GasParams, positions: Vec<f64>, time: f64) -> Result<Self> {
        params.validate()?;
        if positions.is_empty() {
            return Err(Error::invalid("positions", "need at least one particle"));
        }
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::invalid("time", "must be nonnegative"));
        }
        check_configuration(params.domain, &positions)?;
        Ok(GasState {
            params,
            positions,
            time,
        })
    }

    /// Sorts arbitrary labels into the Weyl chamber; the state carries no
    /// memory of the original labelling.
    pub fn from_unsorted(params: GasParams, mut positions: Vec<f64>) -> Result<Self> {
        positions.sort_by(f64::total_cmp);
        GasState::new(params, positions, 0.0)
    }

    pub fn params(&self) -> &GasParams {
        &self.params
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn log_potential(&self) -> f64 {
        log_potential(&self.params, &self.positions).expect("state invariants hold")
    }

    pub fn drift(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        drift_into(&self.params, &self.positions, &mut out);
        out
    }
}

/// Where bridge refinements draw their noise from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeNoise {
    pub seed: u64,
    pub macro_step: u64,
    /// Multiplies every refinement draw; zero for noiseless driving.
    pub scale: f64,
}

impl BridgeNoise {
    fn refinement(&self, particle: usize, depth: u32, node: u64) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        self.scale
            * rng::normal(
                self.seed,
                Purpose::BridgeRefinement,
                &[self.macro_step, particle as u64, depth as u64, node],
            )
    }
}

/// How the `c / x_i` repulsion from the origin enters a half-line step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryScheme {
    /// Plain Euler–Maruyama; positivity is enforced by bisection only.
    Explicit,
    /// The boundary term is taken at the end of the step,
    /// `y = a + c dt / y`, i.e. `y = (a + sqrt(a^2 + 4 c dt)) / 2` with `a` the
    /// explicit part of the update. Positive by construction when `c >= 0`.
    /// Falls back to [`BoundaryScheme::Explicit`] when `c < 0`.
    #[default]
    DriftImplicit,
}

/// Euler–Maruyama with recursive bisection on rejected proposals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    /// Maximum number of successive halvings of one macro step.
    pub max_depth: u32,
    /// Proposals with a gap (or, on the half-line, a first particle) below this are rejected.
    pub min_gap: f64,
    /// Proposals whose drift or total displacement exceeds this fraction of
    /// the particle's distance to its nearest neighbour are rejected. Under
    /// the explicit boundary scheme the origin counts as a neighbour.
    pub max_drift_fraction: f64,
    pub boundary: BoundaryScheme,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator {
            max_depth: 40,
            min_gap: 1e-12,
            max_drift_fraction: 0.5,
            boundary: BoundaryScheme::DriftImplicit,
        }
    }
}

/// Result of one integrator step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: GasState,
    /// Number of accepted sub-steps (1 when no bisection happened).
    pub substeps: usize,
}

struct StepScratch {
    drift: Vec<f64>,
    proposal: Vec<f64>,
}

impl Integrator {
    /// Whether the boundary term is treated implicitly for these parameters.
    fn implicit_boundary(&self, params: &GasParams) -> bool {
        self.boundary == BoundaryScheme::DriftImplicit
            && params.domain == GasDomain::HalfLine
            && params.interaction == Interaction::LogGas
            && params.boundary_coefficient() >= 0.0
    }

    /// Advances `state` by `dt` given `gaussians`, the standard normals of the
    /// macro step's Brownian increments.
    pub fn step(
        &self,
        state: &GasState,
        dt: f64,
        gaussians: &[f64],
        noise: BridgeNoise,
    ) -> Result<StepOutcome> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if gaussians.len() != state.len() {
            return Err(Error::invalid("gaussians", "need one draw per particle"));
        }
        let mut x = state.positions.clone();
        let dw: Vec<f64> = gaussians.iter().map(|g| g * dt.sqrt()).collect();
        let mut scratch = StepScratch {
            drift: vec![0.0; x.len()],
            proposal: vec![0.0; x.len()],
        };
        let mut substeps = 0;
        self.advance(&state.params, &mut x, dt, &dw, 0, 1, noise, &mut scratch, &mut substeps)
            .map_err(|halvings| Error::StepFailure {
                macro_step: noise.macro_step as usize,
                halvings,
            })?;
        Ok(StepOutcome {
            state: GasState {
                params: state.params,
                positions: x,
                time: state.time + dt,
            },
            substeps,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn advance(
        &self,
        params: &GasParams,
        x: &mut Vec<f64>,
        dt: f64,
        dw: &[f64],
        depth: u32,
        node: u64,
        noise: BridgeNoise,
        scratch: &mut StepScratch,
        substeps: &mut usize,
    ) -> std::result::Result<(), u32> {
        let implicit = self.implicit_boundary(params);
        let sigma = params.kappa.sqrt();
        if implicit {
            interaction_drift_into(params, x, &mut scratch.drift);
            let c4dt = 4.0 * params.boundary_coefficient() * dt;
            for i in 0..x.len() {
                let a = x[i] + sigma * dw[i] + scratch.drift[i] * dt;
                scratch.proposal[i] = 0.5 * (a + (a * a + c4dt).sqrt());
            }
        } else {
            drift_into(params, x, &mut scratch.drift);
            for i in 0..x.len() {
                scratch.proposal[i] = x[i] + sigma * dw[i] + scratch.drift[i] * dt;
            }
        }
        if params.interaction == Interaction::Free {
            // independent walkers: crossings are relabellings
            scratch.proposal.sort_by(f64::total_cmp);
        }
        if self.accepts(params, x, &scratch.proposal, &scratch.drift, dt, !implicit) {
            x.copy_from_slice(&scratch.proposal);
            *substeps += 1;
            return Ok(());
        }
        if depth >= self.max_depth {
            return Err(depth);
        }
        // Brownian bridge: W(dt/2) | W(dt) ~ N(W(dt)/2, dt/4)
        let half_sd = 0.5 * dt.sqrt();
        let left: Vec<f64> = dw
            .iter()
            .enumerate()
            .map(|(i, w)| 0.5 * w + half_sd * noise.refinement(i, depth, node))
            .collect();
        let right: Vec<f64> = dw.iter().zip(&left).map(|(w, l)| w - l).collect();
        let (left_node, right_node) = (rng::child_node(depth, node, 0), rng::child_node(depth, node, 1));
        self.advance(params, x, 0.5 * dt, &left, depth + 1, left_node, noise, scratch, substeps)?;
        self.advance(params, x, 0.5 * dt, &right, depth + 1, right_node, noise, scratch, substeps)
    }

    fn accepts(
        &self,
        params: &GasParams,
        x: &[f64],
        y: &[f64],
        drift: &[f64],
        dt: f64,
        origin_is_neighbour: bool,
    ) -> bool {
        if y.iter().any(|v| !v.is_finite()) {
            return false;
        }
        if y.windows(2).any(|w| w[1] - w[0] < self.min_gap) {
            return false;
        }
        if params.domain == GasDomain::HalfLine && y[0] < self.min_gap {
            return false;
        }
        if params.interaction == Interaction::Free {
            return true;
        }
        let n = x.len();
        (0..n).all(|i| {
            let mut gap = f64::INFINITY;
            if i > 0 {
                gap = gap.min(x[i] - x[i - 1]);
            }
            if i + 1 < n {
                gap = gap.min(x[i + 1] - x[i]);
            }
            if origin_is_neighbour && params.domain == GasDomain::HalfLine {
                gap = gap.min(x[i]);
            }
            let limit = self.max_drift_fraction * gap;
            drift[i].abs() * dt <= limit && (y[i] - x[i]).abs() <= limit
        })
    }
}

/// One explicit Euler–Maruyama step, `x + sqrt(kappa dt) g + b(x) dt`, with
/// bisection on rejection. Refinement noise, if needed, comes from stream 0.
pub fn em_step(state: &GasState, dt: f64, gaussians: &[f64]) -> Result<GasState> {
    let noise = BridgeNoise {
        seed: 0,
        macro_step: 0,
        scale: 1.0,
    };
    let integrator = Integrator {
        boundary: BoundaryScheme::Explicit,
        ..Default::default()
    };
    integrator
        .step(state, dt, gaussians, noise)
        .map(|o| o.state)
}

/// A time-ordered sequence of gas states on a uniform macro grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GasPath {
    params: GasParams,
    states: Vec<GasState>,
    seed: u64,
    substep_log: usize,
}

/// Sidecar metadata written next to a path's CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasPathMetadata {
    pub domain: GasDomain,
    pub kappa: f64,
    pub nu: f64,
    pub seed: u64,
    pub n_steps: usize,
}

impl GasPath {
    /// Builds a path from explicit positions, e.g. a deterministic driving function.
    pub fn from_positions(
        params: GasParams,
        times: &[f64],
        positions: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<Self> {
        if times.len() != positions.len() || times.len() < 2 {
            return Err(Error::invalid("times", "need at least two grid points, one per state"));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("times", "must start at 0 and increase strictly"));
        }
        let n = positions[0].len();
        let states = times
            .iter()
            .zip(positions)
            .map(|(&t, x)| {
                if x.len() != n {
                    return Err(Error::invalid("positions", "particle count changes along the path"));
                }
                GasState::new(params, x, t)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GasPath {
            params,
            states,
            seed,
            substep_log: 0,
        })
    }

    /// Driving frozen at `positions` on a uniform grid.
    pub fn constant(params: GasParams, positions: Vec<f64>, horizon: f64, n_steps: usize) -> Result<Self> {
        validate_grid(horizon, n_steps)?;
        let times = uniform_grid(horizon, n_steps);
        let states = vec![positions; n_steps + 1];
        GasPath::from_positions(params, &times, states, 0)
    }

    pub fn params(&self) -> &GasParams {
        &self.params
    }

    pub fn states(&self) -> &[GasState] {
        &self.states
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Total number of accepted sub-steps beyond one per macro step.
    pub fn substep_log(&self) -> usize {
        self.substep_log
    }

    pub fn n_particles(&self) -> usize {
        self.states[0].len()
    }

    /// Number of macro steps (states minus one).
    pub fn n_steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.states.last().map(|s| s.time).unwrap_or(0.0)
    }

    pub fn time(&self, k: usize) -> f64 {
        self.states[k].time
    }

    pub fn positions(&self, k: usize) -> &[f64] {
        &self.states[k].positions
    }

    pub fn initial(&self) -> &GasState {
        &self.states[0]
    }

    pub fn last(&self) -> &GasState {
        self.states.last().expect("paths are nonempty")
    }

    pub fn metadata(&self) -> GasPathMetadata {
        GasPathMetadata {
            domain: self.params.domain,
            kappa: self.params.kappa,
            nu: self.params.nu,
            seed: self.seed,
            n_steps: self.n_steps(),
        }
    }

    /// CSV with header `t,x1,...,xN`.
    pub fn to_csv(&self) -> String {
        let n = self.n_particles();
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for s in &self.states {
            out.push_str(&crate::io::fmt_f64(s.time));
            for v in &s.positions {
                out.push(',');
                out.push_str(&crate::io::fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }
}

fn validate_grid(horizon: f64, n_steps: usize) -> Result<()> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid("horizon", "must be positive"));
    }
    if n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be at least 1"));
    }
    Ok(())
}

/// `horizon * k / n_steps` for `k = 0..=n_steps`.
pub fn uniform_grid(horizon: f64, n_steps: usize) -> Vec<f64> {
    (0..=n_steps)
        .map(|k| horizon * k as f64 / n_steps as f64)
        .collect()
}

/// Path generator; `noise_scale = 0` gives the deterministic drift flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasSimulator {
    pub integrator: Integrator,
    pub noise_scale: f64,
}

impl Default for GasSimulator {
    fn default() -> Self {
        GasSimulator {
            integrator: Integrator::default(),
            noise_scale: 1.0,
        }
    }
}

impl GasSimulator {
    pub fn noiseless() -> Self {
        GasSimulator {
            noise_scale: 0.0,
            ..Default::default()
        }
    }

    pub fn simulate(&self, initial: &GasState, horizon: f64, n_steps: usize, seed: u64) -> Result<GasPath> {
        validate_grid(horizon, n_steps)?;
        let n = initial.len();
        let times = uniform_grid(horizon, n_steps);
        let dt = horizon / n_steps as f64;
        let mut states = Vec::with_capacity(n_steps + 1);
        let mut current = GasState {
            time: 0.0,
            ..initial.clone()
        };
        states.push(current.clone());
        let mut gaussians = vec![0.0; n];
        let mut substep_log = 0;
        for (k, &t_next) in times.iter().enumerate().skip(1) {
            let step = (k - 1) as u64;
            if self.noise_scale != 0.0 {
                rng::fill_normals(seed, Purpose::GasIncrement, &[step], &mut gaussians);
                gaussians.iter_mut().for_each(|g| *g *= self.noise_scale);
            }
            let noise = BridgeNoise {
                seed,
                macro_step: step,
                scale: self.noise_scale,
            };
            let outcome = self.integrator.step(&current, dt, &gaussians, noise)?;
            substep_log += outcome.substeps - 1;
            current = outcome.state;
            current.time = t_next;
            states.push(current.clone());
        }
        Ok(GasPath {
            params: initial.params,
            states,
            seed,
            substep_log,
        })
    }
}

/// Seeded path with default integrator settings.
pub fn simulate_gas(initial: &GasState, horizon: f64, n_steps: usize, seed: u64) -> Result<GasPath> {
    GasSimulator::default().simulate(initial, horizon, n_steps, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn potential_examples() {
        let dyson = GasParams::dyson(4.0);
        assert_eq!(log_potential(&dyson, &[0.0, 1.0]).unwrap(), 0.0);
        let v = log_potential(&dyson, &[0.0, 1.0, 3.0]).unwrap();
        assert!(close(v, 4.0 * 6f64.ln(), 1e-14));
        assert!(close(v, 7.16703, 1e-5));
        let bw = GasParams::bru_wishart(4.0, 0.0);
        assert_eq!(log_potential(&bw, &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn potential_rejects_bad_configurations() {
        let dyson = GasParams::dyson(2.0);
        assert_eq!(
            log_potential(&dyson, &[1.0, 0.5]),
            Err(Error::NonOrderedConfiguration { index: 1 })
        );
        assert_eq!(
            log_potential(&dyson, &[1.0, 1.0]),
            Err(Error::NonOrderedConfiguration { index: 1 })
        );
        let bw = GasParams::bru_wishart(2.0, 1.0);
        assert_eq!(drift(&bw, &[0.0, 1.0]), Err(Error::NonPositive { value: 0.0 }));
        assert!(drift(&bw, &[-1.0, 1.0]).is_err());
    }

    #[test]
    fn drift_examples() {
        let b = drift(&GasParams::dyson(4.0), &[-1.0, 1.0]).unwrap();
        assert_eq!(b, vec![-2.0, 2.0]);
        let b = drift(&GasParams::bru_wishart(4.0, 0.0), &[1.0]).unwrap();
        assert_eq!(b, vec![2.0]);
        let b = drift(&GasParams::dyson(3.0), &[-2.0, 0.3, 0.5, 4.0]).unwrap();
        assert!(b.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn free_interaction_has_no_drift() {
        let p = GasParams::dyson(4.0).with_interaction(Interaction::Free);
        assert_eq!(drift(&p, &[-1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn em_step_examples() {
        let s = GasState::new(GasParams::dyson(4.0), vec![0.0], 0.0).unwrap();
        let next = em_step(&s, 1.0, &[1.0]).unwrap();
        assert_eq!(next.positions(), &[2.0]);
        assert_eq!(next.time(), 1.0);

        let s = GasState::new(GasParams::bru_wishart(4.0, 0.0), vec![1.0], 0.0).unwrap();
        let next = em_step(&s, 0.01, &[0.0]).unwrap();
        assert!(close(next.positions()[0], 1.02, 1e-15));

        let s = GasState::new(GasParams::dyson(4.0), vec![-1.0, 1.0], 0.0).unwrap();
        let dt = 1e-6;
        let next = em_step(&s, dt, &[0.0, 0.0]).unwrap();
        assert!(close(next.positions()[0], -1.0 - 2.0 * dt, 1e-15));
        assert!(close(next.positions()[1], 1.0 + 2.0 * dt, 1e-15));
    }

    #[test]
    fn em_step_bisects_instead_of_crossing() {
        let s = GasState::new(GasParams::dyson(4.0), vec![-0.01, 0.01], 0.0).unwrap();
        // the raw proposal would swap the particles
        let next = em_step(&s, 0.01, &[3.0, -3.0]).unwrap();
        check_configuration(GasDomain::RealLine, next.positions()).unwrap();
    }

    #[test]
    fn em_step_reports_step_failure() {
        let integrator = Integrator {
            max_depth: 2,
            ..Default::default()
        };
        let s = GasState::new(GasParams::dyson(4.0), vec![-1e-3, 1e-3], 0.0).unwrap();
        let noise = BridgeNoise {
            seed: 1,
            macro_step: 5,
            scale: 1.0,
        };
        let err = integrator.step(&s, 1.0, &[50.0, -50.0], noise).unwrap_err();
        assert_eq!(
            err,
            Error::StepFailure {
                macro_step: 5,
                halvings: 2
            }
        );
    }

    #[test]
    fn simulate_is_deterministic_and_ordered() {
        let s = GasState::new(GasParams::dyson(4.0), vec![-1.0, 0.0, 1.0], 0.0).unwrap();
        let a = simulate_gas(&s, 1.0, 200, 42).unwrap();
        let b = simulate_gas(&s, 1.0, 200, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_steps(), 200);
        assert_eq!(a.time(200), 1.0);
        for st in a.states() {
            check_configuration(GasDomain::RealLine, st.positions()).unwrap();
        }
        let c = simulate_gas(&s, 1.0, 200, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn exchange_symmetry() {
        let p = GasParams::bru_wishart(2.0, 1.0);
        let a = GasState::from_unsorted(p, vec![0.5, 1.0, 2.0]).unwrap();
        let b = GasState::from_unsorted(p, vec![2.0, 0.5, 1.0]).unwrap();
        assert_eq!(
            simulate_gas(&a, 0.5, 50, 9).unwrap(),
            simulate_gas(&b, 0.5, 50, 9).unwrap()
        );
    }

    #[test]
    fn noiseless_single_particle_is_static() {
        let s = GasState::new(GasParams::dyson(4.0), vec![0.25], 0.0).unwrap();
        let path = GasSimulator::noiseless().simulate(&s, 1.0, 10, 0).unwrap();
        assert!(path.states().iter().all(|st| st.positions() == [0.25]));
    }

    #[test]
    fn csv_and_metadata() {
        let path = GasPath::constant(GasParams::bru_wishart(4.0, 1.0), vec![0.5, 1.5], 1.0, 2).unwrap();
        let csv = path.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x1,x2"));
        assert_eq!(csv.lines().count(), 4);
        let meta = serde_json::to_value(path.metadata()).unwrap();
        assert_eq!(meta["domain"], "half_line");
        assert_eq!(meta["n_steps"], 2);
    }

    #[test]
    fn invalid_inputs() {
        assert!(GasState::new(GasParams::dyson(-1.0), vec![0.0], 0.0).is_err());
        assert!(GasState::new(GasParams::bru_wishart(4.0, -0.5), vec![1.0], 0.0).is_err());
        let s = GasState::new(GasParams::dyson(4.0), vec![0.0], 0.0).unwrap();
        assert!(simulate_gas(&s, 0.0, 10, 0).is_err());
        assert!(simulate_gas(&s, 1.0, 0, 0).is_err());
        assert!(em_step(&s, -1.0, &[0.0]).is_err());
    }

    #[test]
    fn untested_regime_is_flagged() {
        assert!(GasParams::bru_wishart(4.0, 0.0).in_tested_regime());
        assert!(!GasParams::bru_wishart(9.0, 0.0).in_tested_regime());
        assert!(GasParams::dyson(9.0).in_tested_regime());
    }
}
