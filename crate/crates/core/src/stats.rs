//! Order-stable reductions for Monte Carlo estimates.

use num_complex::Complex64;
use serde::Serialize;

/// Pairwise (cascade) summation. The result depends only on the order of
/// `values`, never on how the caller parallelised their production.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_sum_by<T>(items: &[T], f: impl Fn(&T) -> f64 + Copy) -> f64 {
    const BLOCK: usize = 32;
    if items.len() <= BLOCK {
        return items.iter().map(f).sum();
    }
    let mid = items.len() / 2;
    pairwise_sum_by(&items[..mid], f) + pairwise_sum_by(&items[mid..], f)
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl MeanEstimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanEstimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                count: 0,
            };
        }
        let mean = pairwise_sum(values) / n as f64;
        let var = if n > 1 {
            pairwise_sum_by(values, |v| (v - mean) * (v - mean)) / (n - 1) as f64
        } else {
            0.0
        };
        MeanEstimate {
            mean,
            stderr: (var / n as f64).sqrt(),
            count: n,
        }
    }

    /// |mean - target| in units of the standard error. Zero spread with an
    /// exact hit counts as 0; zero spread with a miss as infinity.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if self.stderr > 0.0 {
            d / self.stderr
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn variance(values: &[f64]) -> f64 {
        let est = MeanEstimate::from_samples(values);
        est.stderr * est.stderr * est.count as f64
    }
}

/// Componentwise estimate for complex samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexMeanEstimate {
    pub re: MeanEstimate,
    pub im: MeanEstimate,
}

impl ComplexMeanEstimate {
    pub fn from_samples(values: &[Complex64]) -> Self {
        let re: Vec<f64> = values.iter().map(|c| c.re).collect();
        let im: Vec<f64> = values.iter().map(|c| c.im).collect();
        ComplexMeanEstimate {
            re: MeanEstimate::from_samples(&re),
            im: MeanEstimate::from_samples(&im),
        }
    }

    pub fn mean(&self) -> Complex64 {
        Complex64::new(self.re.mean, self.im.mean)
    }

    /// Larger of the two componentwise z-scores against `target`.
    pub fn max_z_score(&self, target: Complex64) -> f64 {
        self.re.z_score(target.re).max(self.im.z_score(target.im))
    }
}
