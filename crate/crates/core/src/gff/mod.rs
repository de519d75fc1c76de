//! Zero-boundary Gaussian free fields on the half-plane and the quadrant.
//!
//! Covariances are normalized so that `Cov[(H, f), (H, g)] = ∬ f G g` with
//! `G_H(z, w) = log |z - conj(w)| - log |z - w|`, and the Dirichlet inner
//! product carries the matching `1 / (2 pi)`.

mod sampler;

pub use sampler::{pair_field, sample_field, FieldSample, FieldSampleMetadata, FieldSampler, Rect};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loewner::{fmt_complex, ChainDomain, LoewnerChain, MapEval};
use crate::stats::pairwise_sum;

/// Mean of `ln |p - q|` for `p, q` independent and uniform on the unit square.
pub const UNIT_SQUARE_MEAN_LOG_DISTANCE: f64 = -0.805_086_721_950_087;

fn check_in(domain: ChainDomain, z: Complex64) -> Result<()> {
    if domain.contains(z) && z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainViolation {
            point: fmt_complex(z),
            domain: domain.name(),
        })
    }
}

/// Green's function with zero boundary values.
pub fn green(domain: ChainDomain, z: Complex64, w: Complex64) -> Result<f64> {
    check_in(domain, z)?;
    check_in(domain, w)?;
    if z == w {
        return Err(Error::CoincidentPoints { point: fmt_complex(z) });
    }
    Ok(green_unchecked(domain, z, w))
}

/// `0.5 * ln(1 + 4 Im z Im w / |z - w|^2)`, which is `G_H` without cancellation.
#[inline]
fn half_plane_kernel(z: Complex64, w: Complex64) -> f64 {
    0.5 * (4.0 * z.im * w.im / (z - w).norm_sqr()).ln_1p()
}

/// Green's function without domain checks; `+inf` on the diagonal.
#[inline]
pub fn green_unchecked(domain: ChainDomain, z: Complex64, w: Complex64) -> f64 {
    match domain {
        ChainDomain::H => half_plane_kernel(z, w),
        // image charge at -conj(w) enforces zero values on the imaginary axis
        ChainDomain::O => half_plane_kernel(z, w) - half_plane_kernel(z, -w.conj()),
    }
}

/// `lim_{w -> z} [G(z, w) + log |z - w|]`.
pub fn green_regular_part(domain: ChainDomain, z: Complex64) -> Result<f64> {
    check_in(domain, z)?;
    Ok(match domain {
        ChainDomain::H => (2.0 * z.im).ln(),
        ChainDomain::O => (2.0 * z.im).ln() + (2.0 * z.re).ln() - (2.0 * z.norm()).ln(),
    })
}

fn alive_or_swallowed(e: &MapEval, t: f64) -> Result<()> {
    if e.alive {
        Ok(())
    } else {
        Err(Error::SwallowedProbe {
            probe: fmt_complex(e.z0),
            t,
        })
    }
}

/// Green's function of the evolved domain, `G_D(g_t z, g_t w)`.
pub fn green_evolved(chain: &LoewnerChain, t: f64, z: Complex64, w: Complex64) -> Result<f64> {
    if z == w {
        return Err(Error::CoincidentPoints { point: fmt_complex(z) });
    }
    let ez = chain.evolve(z, t)?;
    let ew = chain.evolve(w, t)?;
    alive_or_swallowed(&ez, t)?;
    alive_or_swallowed(&ew, t)?;
    Ok(green_unchecked(chain.domain(), ez.g, ew.g))
}

/// Regular part of the evolved Green's function on the diagonal,
/// `G_D,reg(g_t z) - log |g_t'(z)|`.
pub fn green_evolved_regular_part(chain: &LoewnerChain, t: f64, z: Complex64) -> Result<f64> {
    let e = chain.evolve(z, t)?;
    alive_or_swallowed(&e, t)?;
    Ok(green_regular_part(chain.domain(), e.g)? - e.log_gprime.re)
}

/// Per-particle factor `Im[2/(g - x)]` (H) or `Im[2/(g - x) - 2/(g + x)]` (O).
pub(crate) fn decrement_factor(domain: ChainDomain, g: Complex64, x: f64) -> f64 {
    match domain {
        ChainDomain::H => (2.0 / (g - x)).im,
        ChainDomain::O => (2.0 / (g - x) - 2.0 / (g + x)).im,
    }
}

/// Time derivative of `G_{D_t}(z, w)` from the current images and driving positions.
pub fn green_decrement_at(domain: ChainDomain, gz: Complex64, gw: Complex64, x: &[f64]) -> f64 {
    -x.iter()
        .map(|&xi| decrement_factor(domain, gz, xi) * decrement_factor(domain, gw, xi))
        .sum::<f64>()
}

/// Analytic time derivative of the evolved Green's function at `t`, with the
/// driving taken at its piecewise-constant value on the grid cell containing `t`.
pub fn green_decrement(chain: &LoewnerChain, t: f64, z: Complex64, w: Complex64) -> Result<f64> {
    let ez = chain.evolve(z, t)?;
    let ew = chain.evolve(w, t)?;
    alive_or_swallowed(&ez, t)?;
    alive_or_swallowed(&ew, t)?;
    let x = chain.driving().positions(driving_index(chain, t));
    for g in [ez.g, ew.g] {
        let d = crate::loewner::pole_distance(chain.domain(), g, x, 0.0);
        if d < 1e-14 {
            return Err(Error::PoleHit {
                point: fmt_complex(g),
                distance: d,
            });
        }
    }
    Ok(green_decrement_at(chain.domain(), ez.g, ew.g, x))
}

/// Grid cell `k` with `t_k <= t < t_{k+1}` (the last cell at the horizon).
pub(crate) fn driving_index(chain: &LoewnerChain, t: f64) -> usize {
    let path = chain.driving();
    let n = path.n_steps();
    (0..n).rev().find(|&k| path.time(k) <= t).unwrap_or(0)
}

/// Axis-aligned bounding box used for quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl SupportBox {
    pub fn intersect(&self, other: &SupportBox) -> Option<SupportBox> {
        let b = SupportBox {
            x0: self.x0.max(other.x0),
            x1: self.x1.min(other.x1),
            y0: self.y0.max(other.y0),
            y1: self.y1.min(other.y1),
        };
        (b.x0 < b.x1 && b.y0 < b.y1).then_some(b)
    }

    pub fn diameter(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }

    /// Cell midpoints at spacing about `mesh` (rounded so cells tile the box).
    pub fn midpoints(&self, mesh: f64) -> (Vec<Complex64>, f64, f64) {
        let nx = ((self.x1 - self.x0) / mesh).ceil().max(1.0) as usize;
        let ny = ((self.y1 - self.y0) / mesh).ceil().max(1.0) as usize;
        let hx = (self.x1 - self.x0) / nx as f64;
        let hy = (self.y1 - self.y0) / ny as f64;
        let mut pts = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                pts.push(Complex64::new(
                    self.x0 + (i as f64 + 0.5) * hx,
                    self.y0 + (j as f64 + 0.5) * hy,
                ));
            }
        }
        (pts, hx, hy)
    }
}

/// A smooth real function with analytic gradient and bounded support.
pub trait SmoothFunction: Sync {
    fn value(&self, z: Complex64) -> f64;
    /// Gradient as the complex number `f_x + i f_y`.
    fn gradient(&self, z: Complex64) -> Complex64;
    fn support_box(&self) -> SupportBox;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TestFunctionKind {
    #[default]
    SmoothBump,
}

/// `amplitude * exp(-1 / (1 - r^2))` with `r = |z - center| / radius < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub center: Complex64,
    pub radius: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub kind: TestFunctionKind,
}

impl TestFunction {
    pub fn bump(center: Complex64, radius: f64, amplitude: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid("radius", "must be positive"));
        }
        if !amplitude.is_finite() {
            return Err(Error::invalid("amplitude", "must be finite"));
        }
        Ok(TestFunction {
            center,
            radius,
            amplitude,
            kind: TestFunctionKind::SmoothBump,
        })
    }

    /// Checks that the closed support disk lies in the open domain.
    pub fn check_inside(&self, domain: ChainDomain) -> Result<()> {
        let margin = match domain {
            ChainDomain::H => self.center.im,
            ChainDomain::O => self.center.im.min(self.center.re),
        };
        if margin > self.radius {
            Ok(())
        } else {
            Err(Error::DomainViolation {
                point: format!("support of bump at {}", fmt_complex(self.center)),
                domain: domain.name(),
            })
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        TestFunction {
            amplitude: self.amplitude * c,
            ..*self
        }
    }
}

impl SmoothFunction for TestFunction {
    fn value(&self, z: Complex64) -> f64 {
        let r2 = (z - self.center).norm_sqr() / (self.radius * self.radius);
        if r2 < 1.0 {
            self.amplitude * (-1.0 / (1.0 - r2)).exp()
        } else {
            0.0
        }
    }

    fn gradient(&self, z: Complex64) -> Complex64 {
        let d = z - self.center;
        let r2 = d.norm_sqr() / (self.radius * self.radius);
        if r2 < 1.0 {
            let s = 1.0 - r2;
            let f = self.amplitude * (-1.0 / s).exp();
            d * (-2.0 * f / (self.radius * self.radius * s * s))
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    fn support_box(&self) -> SupportBox {
        SupportBox {
            x0: self.center.re - self.radius,
            x1: self.center.re + self.radius,
            y0: self.center.im - self.radius,
            y1: self.center.im + self.radius,
        }
    }
}

/// `f(z^2)` on the quadrant for `f` supported in the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquarePullback<F>(pub F);

impl<F: SmoothFunction> SmoothFunction for SquarePullback<F> {
    fn value(&self, z: Complex64) -> f64 {
        self.0.value(z * z)
    }

    fn gradient(&self, z: Complex64) -> Complex64 {
        // for holomorphic phi, grad(f o phi) = conj(phi') * (grad f) o phi
        (2.0 * z).conj() * self.0.gradient(z * z)
    }

    fn support_box(&self) -> SupportBox {
        // principal sqrt maps H onto the quadrant; extremes sit on the image of the boundary
        let b = self.0.support_box();
        let corners = [
            Complex64::new(b.x0, b.y0),
            Complex64::new(b.x1, b.y0),
            Complex64::new(b.x1, b.y1),
            Complex64::new(b.x0, b.y1),
        ];
        let mut out = SupportBox {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        let samples = 512;
        for side in 0..4 {
            let (a, c) = (corners[side], corners[(side + 1) % 4]);
            for k in 0..=samples {
                let p = a + (c - a) * (k as f64 / samples as f64);
                let s = p.sqrt();
                out.x0 = out.x0.min(s.re);
                out.x1 = out.x1.max(s.re);
                out.y0 = out.y0.min(s.im);
                out.y1 = out.y1.max(s.im);
            }
        }
        let pad = 1e-3 * out.diameter();
        SupportBox {
            x0: out.x0 - pad,
            x1: out.x1 + pad,
            y0: (out.y0 - pad).max(0.0),
            y1: out.y1 + pad,
        }
    }
}

/// Image of a test function under `g_t`: `w -> f(g_t^{-1} w) / |g_t'(g_t^{-1} w)|^2`,
/// so that pairings against it equal pairings of `H o g_t` against `f`.
#[derive(Debug, Clone)]
pub struct Pushforward<'a, F> {
    chain: &'a LoewnerChain,
    t: f64,
    f: F,
    support: SupportBox,
}

impl<'a, F: SmoothFunction> Pushforward<'a, F> {
    pub fn new(chain: &'a LoewnerChain, t: f64, f: F) -> Result<Self> {
        let b = f.support_box();
        let corners = [
            Complex64::new(b.x0, b.y0),
            Complex64::new(b.x1, b.y0),
            Complex64::new(b.x1, b.y1),
            Complex64::new(b.x0, b.y1),
        ];
        let mut out = SupportBox {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        // Re g and Im g are harmonic, so the box boundary bounds the image
        let samples = 64;
        for side in 0..4 {
            let (a, c) = (corners[side], corners[(side + 1) % 4]);
            for k in 0..samples {
                let z = a + (c - a) * (k as f64 / samples as f64);
                let e = chain.evolve(z, t)?;
                if !e.alive {
                    return Err(Error::SwallowedProbe {
                        probe: fmt_complex(z),
                        t,
                    });
                }
                out.x0 = out.x0.min(e.g.re);
                out.x1 = out.x1.max(e.g.re);
                out.y0 = out.y0.min(e.g.im);
                out.y1 = out.y1.max(e.g.im);
            }
        }
        let pad = 0.02 * out.diameter();
        let support = SupportBox {
            x0: out.x0 - pad,
            x1: out.x1 + pad,
            y0: out.y0 - pad,
            y1: out.y1 + pad,
        };
        Ok(Pushforward { chain, t, f, support })
    }
}

impl<F: SmoothFunction> SmoothFunction for Pushforward<'_, F> {
    fn value(&self, w: Complex64) -> f64 {
        let b = &self.support;
        if w.re < b.x0 || w.re > b.x1 || w.im < b.y0 || w.im > b.y1 || !self.chain.domain().contains(w) {
            return 0.0;
        }
        match self.chain.invert(w, self.t) {
            Ok(p) => self.f.value(p.z) * (-2.0 * p.log_gprime.re).exp(),
            Err(_) => 0.0,
        }
    }

    /// Central differences; the inverse map's second derivative is not tracked.
    fn gradient(&self, w: Complex64) -> Complex64 {
        let h = 1e-6 * (1.0 + w.norm());
        let dx = (self.value(w + h) - self.value(w - h)) / (2.0 * h);
        let dy = (self.value(w + Complex64::new(0.0, h)) - self.value(w - Complex64::new(0.0, h))) / (2.0 * h);
        Complex64::new(dx, dy)
    }

    fn support_box(&self) -> SupportBox {
        self.support
    }
}

/// One Richardson step on meshes `h` and `h / 4` for a second-order rule.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (16.0 * fine - coarse) / 15.0
}

/// Dirichlet inner product `(1 / 2 pi) ∫ grad f · grad g` by the midpoint
/// rule on the intersection of the support boxes.
pub fn dirichlet_inner<F: SmoothFunction, G: SmoothFunction>(f: &F, g: &G, mesh: f64) -> f64 {
    let Some(b) = f.support_box().intersect(&g.support_box()) else {
        return 0.0;
    };
    let (pts, hx, hy) = b.midpoints(mesh);
    let terms: Vec<f64> = pts
        .par_iter()
        .map(|&z| {
            let (a, c) = (f.gradient(z), g.gradient(z));
            a.re * c.re + a.im * c.im
        })
        .collect();
    pairwise_sum(&terms) * hx * hy / (2.0 * std::f64::consts::PI)
}

/// Midpoint nodes of a test function: positions and weights `f(z) * cell area`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureNodes {
    pub points: Vec<Complex64>,
    pub weights: Vec<f64>,
    /// Cell side, used by the diagonal rule.
    pub mesh: f64,
}

impl QuadratureNodes {
    /// Square cells of side `mesh` covering the support; nodes where `f`
    /// vanishes are dropped.
    pub fn for_function<F: SmoothFunction>(f: &F, mesh: f64) -> Result<Self> {
        if !(mesh.is_finite() && mesh > 0.0) {
            return Err(Error::invalid("mesh", "must be positive"));
        }
        let b = f.support_box();
        let nx = ((b.x1 - b.x0) / mesh).ceil() as usize;
        let ny = ((b.y1 - b.y0) / mesh).ceil() as usize;
        // centre the grid on the box so symmetric supports get symmetric nodes
        let ox = 0.5 * (b.x0 + b.x1) - 0.5 * nx as f64 * mesh;
        let oy = 0.5 * (b.y0 + b.y1) - 0.5 * ny as f64 * mesh;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let z = Complex64::new(ox + (i as f64 + 0.5) * mesh, oy + (j as f64 + 0.5) * mesh);
                let v = f.value(z);
                if v != 0.0 {
                    points.push(z);
                    weights.push(v * mesh * mesh);
                }
            }
        }
        Ok(QuadratureNodes {
            points,
            weights,
            mesh,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `∫ f u` for nodal values `u`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = self.weights.iter().zip(values).map(|(w, u)| w * u).collect();
        pairwise_sum(&terms)
    }
}

/// Cell-averaged kernel on a diagonal cell of the image domain. The cell of
/// side `mesh` around `z` maps to a small square of side `mesh |g'|` around
/// `g`; the average of `-log |p - q|` over such a pair of squares equals the
/// kernel at separation `mesh |g'| exp(c)` with `c` the unit-square mean log
/// distance, which we sample at four orientations.
pub fn diagonal_cell_kernel(domain: ChainDomain, g: Complex64, gprime: Complex64, mesh: f64) -> f64 {
    let rho = mesh * UNIT_SQUARE_MEAN_LOG_DISTANCE.exp();
    let mut acc = 0.0;
    for k in 0..4 {
        let dir = Complex64::from_polar(0.5 * rho, k as f64 * std::f64::consts::FRAC_PI_4);
        let step = gprime * dir;
        acc += green_unchecked(domain, g + step, g - step);
    }
    acc / 4.0
}

/// `∬ f G f` from the images `(g, g')` of the quadrature nodes.
pub fn energy_from_images(domain: ChainDomain, nodes: &QuadratureNodes, images: &[(Complex64, Complex64)]) -> f64 {
    let n = nodes.len();
    let rows: Vec<f64> = (0..n)
        .map(|a| {
            let (ga, gpa) = images[a];
            let mut row: Vec<f64> = Vec::with_capacity(n);
            row.push(0.5 * nodes.weights[a] * diagonal_cell_kernel(domain, ga, gpa, nodes.mesh));
            for (wb, (gb, _)) in nodes.weights[a + 1..].iter().zip(&images[a + 1..]) {
                row.push(wb * green_unchecked(domain, ga, *gb));
            }
            2.0 * nodes.weights[a] * pairwise_sum(&row)
        })
        .collect();
    pairwise_sum(&rows)
}

/// Dirichlet energy `E_t(f) = ∬ f(z) G_t(z, w) f(w)` on the domain evolved by `chain`.
pub fn dirichlet_energy(f: &TestFunction, chain: &LoewnerChain, t: f64, mesh: f64) -> Result<f64> {
    f.check_inside(chain.domain())?;
    let nodes = QuadratureNodes::for_function(f, mesh)?;
    let images = nodes
        .points
        .par_iter()
        .map(|&z| {
            let e = chain.evolve(z, t)?;
            alive_or_swallowed(&e, t)?;
            Ok((e.g, e.gprime))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(energy_from_images(chain.domain(), &nodes, &images))
}

/// Dirichlet energy on the undisturbed domain.
pub fn dirichlet_energy_static(f: &TestFunction, domain: ChainDomain, mesh: f64) -> Result<f64> {
    f.check_inside(domain)?;
    let nodes = QuadratureNodes::for_function(f, mesh)?;
    let images: Vec<_> = nodes.points.iter().map(|&z| (z, Complex64::new(1.0, 0.0))).collect();
    Ok(energy_from_images(domain, &nodes, &images))
}
