//! Discrete zero-boundary free field on a rectangular lattice.
//!
//! The field is expanded in the sine eigenbasis of the five-point Dirichlet
//! Laplacian, so one draw costs two passes of length-`2(n+1)` FFTs.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{SmoothFunction, SupportBox};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::stats::pairwise_sum;

/// Sampling box `[x0, x1] x [y0, y1]`; the field vanishes on its boundary.
pub type Rect = SupportBox;

/// Unnormalized DST-I, `y_k = sum_{m=1}^{n} x_m sin(pi k m / (n + 1))`, via
/// an odd extension of length `2(n + 1)`.
struct SineTransform {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl SineTransform {
    fn new(n: usize, planner: &mut FftPlanner<f64>) -> Self {
        SineTransform {
            n,
            fft: planner.plan_fft_forward(2 * (n + 1)),
        }
    }

    fn apply(&self, data: &mut [f64], buf: &mut [Complex64]) {
        let n = self.n;
        buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for m in 1..=n {
            buf[m] = Complex64::new(data[m - 1], 0.0);
            buf[2 * (n + 1) - m] = Complex64::new(-data[m - 1], 0.0);
        }
        self.fft.process(buf);
        for k in 1..=n {
            data[k - 1] = -0.5 * buf[k].im;
        }
    }
}

/// Precomputed plans and mode scales for one box and mesh.
pub struct FieldSampler {
    rect: Rect,
    mesh: f64,
    nx: usize,
    ny: usize,
    /// `sqrt(2 pi) / h * (normalization) / sqrt(lambda_jk)`, row-major in `(k, j)`.
    scales: Vec<f64>,
    lambdas: Vec<f64>,
    row: SineTransform,
    col: SineTransform,
}

impl std::fmt::Debug for FieldSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldSampler")
            .field("rect", &self.rect)
            .field("mesh", &self.mesh)
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

fn cells(len: f64, mesh: f64, name: &str) -> Result<usize> {
    let k = len / mesh;
    let r = k.round();
    if !(r >= 2.0) || (k - r).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::invalid(name, format!("mesh {mesh} must divide the box side {len}")));
    }
    Ok(r as usize)
}

impl FieldSampler {
    /// `min_feature` is the smallest support diameter that will be paired
    /// with the field; at least 16 nodes must fall across it.
    pub fn new(rect: Rect, mesh: f64, min_feature: f64) -> Result<Self> {
        if !(mesh.is_finite() && mesh > 0.0) {
            return Err(Error::invalid("mesh", "must be positive"));
        }
        if !(rect.x1 > rect.x0 && rect.y1 > rect.y0) {
            return Err(Error::invalid("box", "must have positive width and height"));
        }
        let nodes = min_feature / mesh;
        if nodes < 16.0 {
            return Err(Error::MeshTooCoarse {
                mesh,
                nodes,
                feature: min_feature,
            });
        }
        let nx = cells(rect.x1 - rect.x0, mesh, "box")? - 1;
        let ny = cells(rect.y1 - rect.y0, mesh, "box")? - 1;
        let mut planner = FftPlanner::new();
        let row = SineTransform::new(nx, &mut planner);
        let col = SineTransform::new(ny, &mut planner);
        let norm = 2.0 / (((nx + 1) * (ny + 1)) as f64).sqrt();
        let pre = (2.0 * std::f64::consts::PI).sqrt() / mesh * norm;
        let mut scales = Vec::with_capacity(nx * ny);
        let mut lambdas = Vec::with_capacity(nx * ny);
        for k in 1..=ny {
            let sy = (std::f64::consts::PI * k as f64 / (2.0 * (ny + 1) as f64)).sin();
            for j in 1..=nx {
                let sx = (std::f64::consts::PI * j as f64 / (2.0 * (nx + 1) as f64)).sin();
                let lambda = 4.0 / (mesh * mesh) * (sx * sx + sy * sy);
                lambdas.push(lambda);
                scales.push(pre / lambda.sqrt());
            }
        }
        Ok(FieldSampler {
            rect,
            mesh,
            nx,
            ny,
            scales,
            lambdas,
            row,
            col,
        })
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    /// Interior node counts `(nx, ny)`.
    pub fn interior(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    fn synthesize(&self, coeffs: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * (nx.max(ny) + 1)];
        for r in coeffs.chunks_mut(nx) {
            self.row.apply(r, &mut buf[..2 * (nx + 1)]);
        }
        let mut column = vec![0.0; ny];
        for i in 0..nx {
            for (k, c) in column.iter_mut().enumerate() {
                *c = coeffs[k * nx + i];
            }
            self.col.apply(&mut column, &mut buf[..2 * (ny + 1)]);
            for (k, c) in column.iter().enumerate() {
                coeffs[k * nx + i] = *c;
            }
        }
    }

    pub fn sample(&self, seed: u64) -> FieldSample {
        let mut values = vec![0.0; self.nx * self.ny];
        rng::fill_normals(
            seed,
            Purpose::FieldModes,
            &[self.nx as u64, self.ny as u64],
            &mut values,
        );
        for (v, s) in values.iter_mut().zip(&self.scales) {
            *v *= s;
        }
        self.synthesize(&mut values);
        FieldSample {
            rect: self.rect,
            mesh: self.mesh,
            nx: self.nx,
            ny: self.ny,
            values,
            seed,
        }
    }

    /// Nodal values of `f` on the interior lattice (row-major, `iy * nx + ix`).
    pub fn nodal<F: SmoothFunction>(&self, f: &F) -> Result<Vec<f64>> {
        check_support(&self.rect, &f.support_box())?;
        let mut out = vec![0.0; self.nx * self.ny];
        for_each_node_in(&self.rect, self.mesh, self.nx, self.ny, &f.support_box(), |idx, z| {
            out[idx] = f.value(z);
        });
        Ok(out)
    }

    /// Exact variance of the lattice pairing `h^2 sum H f`, i.e.
    /// `2 pi h^2 f^T (-L_h)^{-1} f`, computed in the sine basis.
    pub fn pairing_variance<F: SmoothFunction>(&self, f: &F) -> Result<f64> {
        let mut coeffs = self.nodal(f)?;
        self.synthesize(&mut coeffs);
        let (nx, ny) = (self.nx as f64, self.ny as f64);
        let norm2 = 4.0 / ((nx + 1.0) * (ny + 1.0));
        let terms: Vec<f64> = coeffs
            .iter()
            .zip(&self.lambdas)
            .map(|(c, l)| c * c * norm2 / l)
            .collect();
        Ok(2.0 * std::f64::consts::PI * self.mesh * self.mesh * pairwise_sum(&terms))
    }
}

fn check_support(rect: &Rect, b: &SupportBox) -> Result<()> {
    if b.x0 > rect.x0 && b.x1 < rect.x1 && b.y0 > rect.y0 && b.y1 < rect.y1 {
        Ok(())
    } else {
        Err(Error::SupportOutsideBox)
    }
}

fn for_each_node_in(
    rect: &Rect,
    mesh: f64,
    nx: usize,
    ny: usize,
    b: &SupportBox,
    mut visit: impl FnMut(usize, Complex64),
) {
    let lo_x = (((b.x0 - rect.x0) / mesh).floor().max(1.0)) as usize;
    let hi_x = (((b.x1 - rect.x0) / mesh).ceil() as usize).min(nx);
    let lo_y = (((b.y0 - rect.y0) / mesh).floor().max(1.0)) as usize;
    let hi_y = (((b.y1 - rect.y0) / mesh).ceil() as usize).min(ny);
    for iy in lo_y..=hi_y {
        for ix in lo_x..=hi_x {
            let z = Complex64::new(rect.x0 + ix as f64 * mesh, rect.y0 + iy as f64 * mesh);
            visit((iy - 1) * nx + (ix - 1), z);
        }
    }
}

/// One draw of the lattice field; nodes are `(x0 + ix h, y0 + iy h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub rect: Rect,
    pub mesh: f64,
    nx: usize,
    ny: usize,
    /// Interior values, row-major `iy * nx + ix` for `ix, iy >= 1`.
    values: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSampleMetadata {
    #[serde(rename = "box")]
    pub rect: Rect,
    pub mesh: f64,
    pub seed: u64,
}

impl FieldSample {
    /// Value at lattice index `(ix, iy)`, `0 <= ix <= nx + 1`; zero on the boundary.
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        if ix == 0 || iy == 0 || ix > self.nx || iy > self.ny {
            0.0
        } else {
            self.values[(iy - 1) * self.nx + (ix - 1)]
        }
    }

    /// `h^2 sum H f` for nodal values from [`FieldSampler::nodal`].
    pub fn pair_nodal(&self, nodal: &[f64]) -> f64 {
        let terms: Vec<f64> = self.values.iter().zip(nodal).map(|(a, b)| a * b).collect();
        self.mesh * self.mesh * pairwise_sum(&terms)
    }

    pub fn interior_values(&self) -> &[f64] {
        &self.values
    }

    pub fn interior(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn metadata(&self) -> FieldSampleMetadata {
        FieldSampleMetadata {
            rect: self.rect,
            mesh: self.mesh,
            seed: self.seed,
        }
    }

    /// CSV `ix,iy,value` over all nodes including the zero boundary.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ix,iy,value\n");
        for iy in 0..=self.ny + 1 {
            for ix in 0..=self.nx + 1 {
                out.push_str(&format!("{ix},{iy},{}\n", crate::io::fmt_f64(self.value(ix, iy))));
            }
        }
        out
    }
}

/// Convenience wrapper: a fresh sampler and one draw.
pub fn sample_field(rect: Rect, mesh: f64, seed: u64, min_feature: f64) -> Result<FieldSample> {
    Ok(FieldSampler::new(rect, mesh, min_feature)?.sample(seed))
}

/// Lattice pairing `(H, f) = h^2 sum_nodes H f`.
pub fn pair_field<F: SmoothFunction>(field: &FieldSample, f: &F) -> Result<f64> {
    let b = f.support_box();
    check_support(&field.rect, &b)?;
    let mut terms = Vec::new();
    for_each_node_in(&field.rect, field.mesh, field.nx, field.ny, &b, |idx, z| {
        let v = f.value(z);
        if v != 0.0 {
            terms.push(field.values[idx] * v);
        }
    });
    Ok(field.mesh * field.mesh * pairwise_sum(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gff::TestFunction;
    use crate::stats::MeanEstimate;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_box() -> Rect {
        SupportBox {
            x0: -2.0,
            x1: 2.0,
            y0: 0.0,
            y1: 4.0,
        }
    }

    /// `2 pi h^2 f^T (-L_h)^{-1} f` by conjugate gradients on the five-point stencil.
    fn cg_variance(nx: usize, ny: usize, h: f64, f: &[f64]) -> f64 {
        let apply = |u: &[f64], out: &mut [f64]| {
            for iy in 0..ny {
                for ix in 0..nx {
                    let i = iy * nx + ix;
                    let mut s = 4.0 * u[i];
                    if ix > 0 {
                        s -= u[i - 1];
                    }
                    if ix + 1 < nx {
                        s -= u[i + 1];
                    }
                    if iy > 0 {
                        s -= u[i - nx];
                    }
                    if iy + 1 < ny {
                        s -= u[i + nx];
                    }
                    out[i] = s / (h * h);
                }
            }
        };
        let n = nx * ny;
        let mut x = vec![0.0; n];
        let mut r = f.to_vec();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        for _ in 0..10 * n {
            apply(&p, &mut ap);
            let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new: f64 = r.iter().map(|v| v * v).sum();
            if rr_new.sqrt() < 1e-13 * f.iter().map(|v| v * v).sum::<f64>().sqrt() {
                break;
            }
            for i in 0..n {
                p[i] = r[i] + rr_new / rr * p[i];
            }
            rr = rr_new;
        }
        2.0 * std::f64::consts::PI * h * h * f.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
    }

    #[test]
    fn boundary_is_zero_and_values_finite() {
        let s = sample_field(unit_box(), 0.125, 4, 2.0).unwrap();
        let (nx, ny) = s.interior();
        assert_eq!((nx, ny), (31, 31));
        for k in 0..=nx + 1 {
            assert_eq!(s.value(k, 0), 0.0);
            assert_eq!(s.value(k, ny + 1), 0.0);
            assert_eq!(s.value(0, k), 0.0);
            assert_eq!(s.value(nx + 1, k), 0.0);
        }
        assert!(s.interior_values().iter().all(|v| v.is_finite()));
        assert_eq!(s, sample_field(unit_box(), 0.125, 4, 2.0).unwrap());
    }

    #[test]
    fn rejects_coarse_mesh_and_outside_support() {
        assert!(matches!(
            FieldSampler::new(unit_box(), 0.125, 1.0),
            Err(Error::MeshTooCoarse { .. })
        ));
        assert!(FieldSampler::new(unit_box(), 0.3, 10.0).is_err());
        let s = sample_field(unit_box(), 0.125, 1, 2.0).unwrap();
        let f = TestFunction::bump(c(1.8, 2.0), 0.5, 1.0).unwrap();
        assert_eq!(pair_field(&s, &f), Err(Error::SupportOutsideBox));
    }

    #[test]
    fn pairing_is_linear() {
        let s = sample_field(unit_box(), 0.0625, 9, 1.0).unwrap();
        let f = TestFunction::bump(c(-0.8, 2.0), 0.5, 1.0).unwrap();
        let g = TestFunction::bump(c(0.8, 2.0), 0.5, 1.0).unwrap();
        struct Sum<'a>(&'a TestFunction, &'a TestFunction);
        impl SmoothFunction for Sum<'_> {
            fn value(&self, z: Complex64) -> f64 {
                2.0 * self.0.value(z) - 3.0 * self.1.value(z)
            }
            fn gradient(&self, z: Complex64) -> Complex64 {
                2.0 * self.0.gradient(z) - 3.0 * self.1.gradient(z)
            }
            fn support_box(&self) -> SupportBox {
                SupportBox {
                    x0: -1.3,
                    x1: 1.3,
                    y0: 1.5,
                    y1: 2.5,
                }
            }
        }
        let lhs = pair_field(&s, &Sum(&f, &g)).unwrap();
        let rhs = 2.0 * pair_field(&s, &f).unwrap() - 3.0 * pair_field(&s, &g).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        let sampler = FieldSampler::new(unit_box(), 0.0625, 1.0).unwrap();
        let via_nodes = s.pair_nodal(&sampler.nodal(&f).unwrap());
        assert!((via_nodes - pair_field(&s, &f).unwrap()).abs() < 1e-12);
        let zero = TestFunction::bump(c(0.0, 2.0), 0.5, 0.0).unwrap();
        assert_eq!(pair_field(&s, &zero).unwrap(), 0.0);
    }

    #[test]
    fn spectral_variance_matches_discrete_solve() {
        let sampler = FieldSampler::new(unit_box(), 0.0625, 1.0).unwrap();
        let f = TestFunction::bump(c(0.3, 1.7), 0.5, 1.0).unwrap();
        let (nx, ny) = sampler.interior();
        let exact = cg_variance(nx, ny, 0.0625, &sampler.nodal(&f).unwrap());
        let spectral = sampler.pairing_variance(&f).unwrap();
        assert!((exact - spectral).abs() < 1e-9 * exact, "{exact} vs {spectral}");
    }

    #[test]
    fn sampled_variance_matches_discrete_solve() {
        let sampler = FieldSampler::new(unit_box(), 0.0625, 1.0).unwrap();
        let f = TestFunction::bump(c(0.3, 1.7), 0.5, 1.0).unwrap();
        let (nx, ny) = sampler.interior();
        let exact = cg_variance(nx, ny, 0.0625, &sampler.nodal(&f).unwrap());
        let pairs: Vec<f64> = (0..4000)
            .map(|s| pair_field(&sampler.sample(s), &f).unwrap())
            .collect();
        let mean = MeanEstimate::from_samples(&pairs);
        assert!(mean.z_score(0.0).abs() < 3.0);
        let sq: Vec<f64> = pairs.iter().map(|p| p * p).collect();
        let var = MeanEstimate::from_samples(&sq);
        assert!(var.z_score(exact).abs() < 4.0, "{var:?} vs {exact}");
    }

    #[test]
    fn csv_layout() {
        let s = sample_field(unit_box(), 0.125, 4, 2.0).unwrap();
        let csv = s.to_csv();
        assert_eq!(csv.lines().next(), Some("ix,iy,value"));
        assert_eq!(csv.lines().count(), 1 + 33 * 33);
        let meta = serde_json::to_value(s.metadata()).unwrap();
        assert_eq!(meta["box"]["x0"], -2.0);
    }
}
