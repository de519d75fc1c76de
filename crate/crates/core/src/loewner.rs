//! Multiple Loewner chains on the upper half-plane and the quadrant.
//!
//! A chain is driven by a [`GasPath`]: real-line gases drive
//! `dg/dt = sum_i 2 / (g - x_i)` on `H`, half-line gases drive
//! `dg/dt = sum_i [2 / (g - x_i) + 2 / (g + x_i)] + 4 delta / g` on the
//! quadrant `O`. Each tracked point carries `g_t(z)` together with
//! `log g_t'(z)`, the latter integrated through its own ODE so the branch is
//! continuous.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loggas::{GasDomain, GasPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChainDomain {
    /// Upper half-plane.
    H,
    /// First quadrant.
    O,
}

impl ChainDomain {
    pub fn name(self) -> &'static str {
        match self {
            ChainDomain::H => "H",
            ChainDomain::O => "O",
        }
    }

    pub fn contains(self, z: Complex64) -> bool {
        match self {
            ChainDomain::H => z.im > 0.0,
            ChainDomain::O => z.im > 0.0 && z.re > 0.0,
        }
    }

    pub fn for_gas(domain: GasDomain) -> Self {
        match domain {
            GasDomain::RealLine => ChainDomain::H,
            GasDomain::HalfLine => ChainDomain::O,
        }
    }
}

pub(crate) fn fmt_complex(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

/// Distance from `g` to the nearest singularity of the vector field.
pub fn pole_distance(domain: ChainDomain, g: Complex64, x: &[f64], delta: f64) -> f64 {
    let mut d = f64::INFINITY;
    for &xi in x {
        d = d.min((g - xi).norm());
        if domain == ChainDomain::O {
            d = d.min((g + xi).norm());
        }
    }
    if domain == ChainDomain::O && delta != 0.0 {
        d = d.min(g.norm());
    }
    d
}

/// Right-hand side of the Loewner equation at `g`.
pub fn vector_field(domain: ChainDomain, g: Complex64, x: &[f64], delta: f64) -> Result<Complex64> {
    let d = pole_distance(domain, g, x, delta);
    if d < 1e-14 {
        return Err(Error::PoleHit {
            point: fmt_complex(g),
            distance: d,
        });
    }
    Ok(field_unchecked(domain, g, x, delta).0)
}

/// `d/dg` of the vector field, which drives `log g'`.
pub fn vector_field_derivative(domain: ChainDomain, g: Complex64, x: &[f64], delta: f64) -> Result<Complex64> {
    let d = pole_distance(domain, g, x, delta);
    if d < 1e-14 {
        return Err(Error::PoleHit {
            point: fmt_complex(g),
            distance: d,
        });
    }
    Ok(field_unchecked(domain, g, x, delta).1)
}

/// Vector field and its derivative.
#[inline]
fn field_unchecked(domain: ChainDomain, g: Complex64, x: &[f64], delta: f64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut dv = Complex64::new(0.0, 0.0);
    for &xi in x {
        let r = (g - xi).inv();
        v += 2.0 * r;
        dv -= 2.0 * r * r;
        if domain == ChainDomain::O {
            let s = (g + xi).inv();
            v += 2.0 * s;
            dv -= 2.0 * s * s;
        }
    }
    if domain == ChainDomain::O && delta != 0.0 {
        let s = g.inv();
        v += 4.0 * delta * s;
        dv -= 4.0 * delta * s * s;
    }
    (v, dv)
}

/// Integration controls shared by every point evolved on a chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// A point dies once `g` comes this close to a pole.
    pub swallow_eps: f64,
    /// Local error tolerance per step, relative to `1 + |g - z0|` and `1 + |log g'|`.
    pub rel_tol: f64,
    /// Step size below which a step is forced through regardless of the error estimate.
    pub min_step: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            swallow_eps: 1e-3,
            rel_tol: 1e-10,
            min_step: 1e-14,
        }
    }
}

/// State of one tracked point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapEval {
    pub z0: Complex64,
    pub g: Complex64,
    pub gprime: Complex64,
    pub log_gprime: Complex64,
    pub t: f64,
    pub alive: bool,
}

impl MapEval {
    pub fn initial(z0: Complex64) -> Self {
        MapEval {
            z0,
            g: z0,
            gprime: Complex64::new(1.0, 0.0),
            log_gprime: Complex64::new(0.0, 0.0),
            t: 0.0,
            alive: true,
        }
    }
}

/// `z = g_t^{-1}(w)` together with `log g_t'(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preimage {
    pub w: Complex64,
    pub z: Complex64,
    pub log_gprime: Complex64,
}

/// CSV rows `t,re_g,im_g,re_gp,im_gp,alive` for a trace.
pub fn trace_to_csv(trace: &[MapEval]) -> String {
    use crate::io::fmt_f64;
    let mut out = String::from("t,re_g,im_g,re_gp,im_gp,alive\n");
    for e in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(e.t),
            fmt_f64(e.g.re),
            fmt_f64(e.g.im),
            fmt_f64(e.gprime.re),
            fmt_f64(e.gprime.im),
            e.alive as u8
        ));
    }
    out
}

/// A multiple Loewner chain with piecewise-constant driving.
#[derive(Debug, Clone, PartialEq)]
pub struct LoewnerChain {
    driving: GasPath,
    domain: ChainDomain,
    delta: f64,
    kappa: f64,
    options: EvolveOptions,
}

/// Integration state: displacement `u = g - z0` and `log g'`.
#[derive(Debug, Clone, Copy)]
struct Flow {
    u: Complex64,
    log_gp: Complex64,
}

impl LoewnerChain {
    /// `delta` is ignored (must be zero) for chains on `H`.
    pub fn new(driving: GasPath, delta: f64) -> Result<Self> {
        let domain = ChainDomain::for_gas(driving.params().domain);
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::invalid("delta", "must be nonnegative"));
        }
        if domain == ChainDomain::H && delta != 0.0 {
            return Err(Error::invalid("delta", "only quadrant chains carry a delta term"));
        }
        let kappa = driving.params().kappa;
        Ok(LoewnerChain {
            driving,
            domain,
            delta,
            kappa,
            options: EvolveOptions::default(),
        })
    }

    pub fn with_options(mut self, options: EvolveOptions) -> Result<Self> {
        if !(options.swallow_eps.is_finite() && options.swallow_eps > 0.0) {
            return Err(Error::invalid("swallow_eps", "must be positive"));
        }
        if !(options.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol", "must be positive"));
        }
        self.options = options;
        Ok(self)
    }

    pub fn with_swallow_eps(self, swallow_eps: f64) -> Result<Self> {
        let options = EvolveOptions {
            swallow_eps,
            ..self.options
        };
        self.with_options(options)
    }

    pub fn driving(&self) -> &GasPath {
        &self.driving
    }

    pub fn domain(&self) -> ChainDomain {
        self.domain
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn options(&self) -> &EvolveOptions {
        &self.options
    }

    pub fn horizon(&self) -> f64 {
        self.driving.horizon()
    }

    fn check_start(&self, z0: Complex64) -> Result<()> {
        if !self.domain.contains(z0) || !z0.re.is_finite() || !z0.im.is_finite() {
            return Err(Error::DomainViolation {
                point: fmt_complex(z0),
                domain: self.domain.name(),
            });
        }
        Ok(())
    }

    /// `g_t(z0)` and `g_t'(z0)` at an arbitrary `t` in `[0, horizon]`.
    pub fn evolve(&self, z0: Complex64, t_end: f64) -> Result<MapEval> {
        self.check_start(z0)?;
        let horizon = self.horizon();
        if !(t_end >= 0.0) || t_end > horizon * (1.0 + 1e-12) {
            return Err(Error::GridExceeded { t: t_end, horizon });
        }
        let t_end = t_end.min(horizon);
        let mut state = MapEval::initial(z0);
        let mut flow = Flow {
            u: Complex64::new(0.0, 0.0),
            log_gp: Complex64::new(0.0, 0.0),
        };
        let mut h_hint = f64::INFINITY;
        for k in 0..self.driving.n_steps() {
            let t0 = self.driving.time(k);
            if t0 >= t_end {
                break;
            }
            let t1 = self.driving.time(k + 1).min(t_end);
            self.advance(&mut state, &mut flow, k, t1 - t0, &mut h_hint);
            if !state.alive {
                break;
            }
        }
        state.t = t_end;
        Ok(state)
    }

    /// Preimage `g_t^{-1}(w)` by running the flow backwards from `w`.
    pub fn invert(&self, w: Complex64, t: f64) -> Result<Preimage> {
        self.check_start(w)?;
        let horizon = self.horizon();
        if !(t >= 0.0) || t > horizon * (1.0 + 1e-12) {
            return Err(Error::GridExceeded { t, horizon });
        }
        let t = t.min(horizon);
        let mut state = MapEval::initial(w);
        let mut flow = Flow {
            u: Complex64::new(0.0, 0.0),
            log_gp: Complex64::new(0.0, 0.0),
        };
        let mut h_hint = f64::INFINITY;
        for k in (0..self.driving.n_steps()).rev() {
            let t0 = self.driving.time(k);
            if t0 >= t {
                continue;
            }
            let t1 = self.driving.time(k + 1).min(t);
            self.integrate(&mut state, &mut flow, k, t1 - t0, &mut h_hint, -1.0);
            if !state.alive {
                return Err(Error::DomainViolation {
                    point: fmt_complex(w),
                    domain: self.domain.name(),
                });
            }
        }
        Ok(Preimage {
            w,
            z: state.g,
            log_gprime: -state.log_gprime,
        })
    }

    /// The point's state at every grid time `t_0 = 0, ..., t_n`.
    pub fn trace(&self, z0: Complex64) -> Result<Vec<MapEval>> {
        self.trace_until(z0, self.driving.n_steps())
    }

    /// The point's state at grid times `t_0, ..., t_last`.
    pub fn trace_until(&self, z0: Complex64, last: usize) -> Result<Vec<MapEval>> {
        self.check_start(z0)?;
        if last > self.driving.n_steps() {
            return Err(Error::GridExceeded {
                t: f64::INFINITY,
                horizon: self.horizon(),
            });
        }
        let mut out = Vec::with_capacity(last + 1);
        let mut state = MapEval::initial(z0);
        let mut flow = Flow {
            u: Complex64::new(0.0, 0.0),
            log_gp: Complex64::new(0.0, 0.0),
        };
        out.push(state);
        let mut h_hint = f64::INFINITY;
        for k in 0..last {
            let dt = self.driving.time(k + 1) - self.driving.time(k);
            if state.alive {
                self.advance(&mut state, &mut flow, k, dt, &mut h_hint);
            }
            state.t = self.driving.time(k + 1);
            out.push(state);
        }
        Ok(out)
    }

    /// Integrates one macro segment with driving frozen at grid index `k`.
    fn advance(&self, state: &mut MapEval, flow: &mut Flow, k: usize, span: f64, h_hint: &mut f64) {
        self.integrate(state, flow, k, span, h_hint, 1.0)
    }

    /// Adaptive RK4 over one segment; `sign = -1` runs the flow backwards.
    fn integrate(&self, state: &mut MapEval, flow: &mut Flow, k: usize, span: f64, h_hint: &mut f64, sign: f64) {
        let x = self.driving.positions(k);
        let (domain, delta) = (self.domain, self.delta);
        let z0 = state.z0;
        let rhs = |f: &Flow| -> (Complex64, Complex64) {
            let (v, dv) = field_unchecked(domain, z0 + f.u, x, delta);
            (sign * v, sign * dv)
        };
        let rk4 = |f: &Flow, h: f64| -> Flow {
            let (a1, b1) = rhs(f);
            let f2 = Flow {
                u: f.u + 0.5 * h * a1,
                log_gp: f.log_gp + 0.5 * h * b1,
            };
            let (a2, b2) = rhs(&f2);
            let f3 = Flow {
                u: f.u + 0.5 * h * a2,
                log_gp: f.log_gp + 0.5 * h * b2,
            };
            let (a3, b3) = rhs(&f3);
            let f4 = Flow {
                u: f.u + h * a3,
                log_gp: f.log_gp + h * b3,
            };
            let (a4, b4) = rhs(&f4);
            Flow {
                u: f.u + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
                log_gp: f.log_gp + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
            }
        };
        let opts = &self.options;
        let mut done = 0.0;
        let mut h = h_hint.min(span);
        while done < span {
            let truncated = h >= span - done;
            let step = if truncated { span - done } else { h };
            let full = rk4(flow, step);
            let half = rk4(&rk4(flow, 0.5 * step), 0.5 * step);
            let err_u = (half.u - full.u).norm() / (1.0 + half.u.norm());
            let err_l = (half.log_gp - full.log_gp).norm() / (1.0 + half.log_gp.norm());
            let err = err_u.max(err_l) / 15.0;
            let g_new = z0 + half.u;
            let landed = g_new.re.is_finite() && g_new.im.is_finite() && domain.contains(g_new);
            let factor = if err.is_finite() && err > 0.0 {
                0.9 * (opts.rel_tol / err).powf(0.2)
            } else if err == 0.0 {
                4.0
            } else {
                0.25
            };
            if (err <= opts.rel_tol && landed) || step <= opts.min_step {
                let next = Flow {
                    u: half.u + (half.u - full.u) / 15.0,
                    log_gp: half.log_gp + (half.log_gp - full.log_gp) / 15.0,
                };
                let g_prev = z0 + flow.u;
                let g_next = z0 + next.u;
                debug_assert!(
                    domain != ChainDomain::H || !landed || sign * (g_next.im - g_prev.im) <= 0.0,
                    "Im g must decrease on H: {g_prev} -> {g_next}"
                );
                debug_assert!(
                    domain != ChainDomain::O || !landed || (g_next.re > 0.0 && g_next.im > 0.0),
                    "g must stay in the quadrant: {g_next}"
                );
                *flow = next;
                done = if truncated { span } else { done + step };
                state.g = g_next;
                state.log_gprime = flow.log_gp;
                state.gprime = flow.log_gp.exp();
                if !landed || (sign > 0.0 && pole_distance(domain, g_next, x, delta) < opts.swallow_eps) {
                    state.alive = false;
                    return;
                }
                if !truncated {
                    h = step * factor.clamp(0.2, 4.0);
                }
            } else {
                h = (step * factor.clamp(0.1, 0.5)).max(opts.min_step);
            }
        }
        *h_hint = h;
    }

    /// Coefficient `c_1` of `g_t(z) = z + c_1 / z + ...`, fitted at three
    /// probes on a circle of radius `probe_radius` in the upper half-plane.
    pub fn hcap_coefficient(&self, t: f64, probe_radius: f64) -> Result<f64> {
        let sup = (0..=self.driving.n_steps())
            .take_while(|&k| self.driving.time(k) <= t || k == 0)
            .flat_map(|k| self.driving.positions(k).iter().map(|v| v.abs()))
            .fold(0.0, f64::max);
        if !(probe_radius >= 100.0 * sup) || !(probe_radius > 0.0) {
            return Err(Error::invalid(
                "probe_radius",
                format!("must be at least 100 x sup|driving| = {}", 100.0 * sup),
            ));
        }
        let thetas = match self.domain {
            ChainDomain::H => [0.25, 0.5, 0.75],
            // keep the probes inside the quadrant
            ChainDomain::O => [0.125, 0.25, 0.375],
        };
        let mut acc = 0.0;
        for th in thetas {
            let z = Complex64::from_polar(probe_radius, th * std::f64::consts::PI);
            let e = self.evolve(z, t)?;
            acc += ((e.g - z) * z).re;
        }
        Ok(acc / thetas.len() as f64)
    }

    /// First grid time at which any probe has been swallowed (with the given
    /// `swallow_eps`); the horizon if none is.
    pub fn stopping_time(&self, probes: &[Complex64], swallow_eps: f64) -> Result<f64> {
        let chain = self.clone().with_swallow_eps(swallow_eps)?;
        let mut first = chain.driving.n_steps();
        for &z in probes {
            let trace = chain.trace_until(z, first)?;
            if let Some(k) = trace.iter().position(|e| !e.alive) {
                first = first.min(k);
            }
        }
        Ok(chain.driving.time(first))
    }
}
