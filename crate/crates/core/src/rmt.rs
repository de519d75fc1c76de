//! Matrix-valued Brownian motions whose spectra follow the `kappa = 4` gases.
//!
//! Eigenvalues of a Hermitian matrix Brownian motion run the Dyson model and
//! singular values of a rectangular complex Gaussian matrix run the
//! Bru–Wishart process, both at matrix time `kappa * t_gas` and both started
//! from the zero matrix. Sampling the matrix at a single time therefore gives
//! an independent reference for the one-time marginals of [`crate::loggas`].

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loggas::{GasParams, GasState, GasSimulator};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ensemble {
    HermitianBM,
    WishartSingular,
}

/// Sorted spectrum of one matrix draw.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSample {
    pub values: Vec<f64>,
    pub t_gas: f64,
    pub ensemble: Ensemble,
    pub nu: u32,
    pub kappa: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSampleMetadata {
    pub ensemble: Ensemble,
    #[serde(rename = "N")]
    pub n: usize,
    pub nu: u32,
    pub t_gas: f64,
    pub kappa: f64,
    pub seed: u64,
}

impl MatrixSample {
    /// Single-column CSV, header `value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value\n");
        for v in &self.values {
            out.push_str(&crate::io::fmt_f64(*v));
            out.push('\n');
        }
        out
    }

    pub fn metadata(&self) -> MatrixSampleMetadata {
        MatrixSampleMetadata {
            ensemble: self.ensemble,
            n: self.values.len(),
            nu: self.nu,
            t_gas: self.t_gas,
            kappa: self.kappa,
            seed: self.seed,
        }
    }
}

fn check_common(n: usize, t_gas: f64, kappa: f64) -> Result<()> {
    if kappa != 4.0 {
        return Err(Error::UnsupportedBeta { kappa });
    }
    if n == 0 {
        return Err(Error::invalid("N", "need at least one particle"));
    }
    if !(t_gas.is_finite() && t_gas > 0.0) {
        return Err(Error::invalid("t_gas", "must be positive"));
    }
    Ok(())
}

/// Eigenvalues of `S + iA` at matrix time `kappa * t_gas`.
pub fn sample_gue_eigs(n: usize, t_gas: f64, kappa: f64, seed: u64) -> Result<MatrixSample> {
    check_common(n, t_gas, kappa)?;
    let time = kappa * t_gas;
    let mut g = vec![0.0; n * n];
    rng::fill_normals(seed, Purpose::HermitianMatrix, &[n as u64], &mut g);
    let diag_sd = time.sqrt();
    let off_sd = (time / 2.0).sqrt();
    let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
    let mut draws = g.into_iter();
    for i in 0..n {
        m[(i, i)] = Complex::new(diag_sd * draws.next().unwrap(), 0.0);
        for j in i + 1..n {
            let s = off_sd * draws.next().unwrap();
            let a = off_sd * draws.next().unwrap();
            m[(i, j)] = Complex::new(s, a);
            m[(j, i)] = Complex::new(s, -a);
        }
    }
    let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(MatrixSample {
        values,
        t_gas,
        ensemble: Ensemble::HermitianBM,
        nu: 0,
        kappa,
        seed,
    })
}

/// Singular values of an `(N+nu) x N` complex Gaussian matrix at matrix time `kappa * t_gas`.
pub fn sample_wishart_singvals(n: usize, nu: i64, t_gas: f64, kappa: f64, seed: u64) -> Result<MatrixSample> {
    check_common(n, t_gas, kappa)?;
    if nu < 0 {
        return Err(Error::NegativeNu { nu: nu as f64 });
    }
    let rows = n + nu as usize;
    let sd = (kappa * t_gas).sqrt();
    let mut g = vec![0.0; 2 * rows * n];
    rng::fill_normals(seed, Purpose::WishartMatrix, &[n as u64, nu as u64], &mut g);
    let k = DMatrix::<Complex<f64>>::from_fn(rows, n, |i, j| {
        let idx = 2 * (i * n + j);
        Complex::new(sd * g[idx], sd * g[idx + 1])
    });
    let mut values: Vec<f64> = k.singular_values().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(MatrixSample {
        values,
        t_gas,
        ensemble: Ensemble::WishartSingular,
        nu: nu as u32,
        kappa,
        seed,
    })
}

/// Two-sample Kolmogorov–Smirnov statistic. Inputs need not be sorted.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Settings of one gas-versus-matrix marginal comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub ensemble: Ensemble,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default)]
    pub nu: i64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    pub t_gas: f64,
    pub n_seeds: usize,
    pub n_steps: usize,
    /// Spacing of the near-collision start used in place of the zero matrix.
    #[serde(default = "default_start_gap")]
    pub start_gap: f64,
    #[serde(default = "default_ks_threshold")]
    pub ks_threshold: f64,
    /// Bisection budget per macro step. The near-collision start needs about
    /// twenty halvings before the first accepted sub-step, so the budget is
    /// larger than the integrator default.
    #[serde(default = "default_oracle_depth")]
    pub max_depth: u32,
}

fn default_oracle_depth() -> u32 {
    80
}

fn default_kappa() -> f64 {
    4.0
}

fn default_start_gap() -> f64 {
    1e-4
}

fn default_ks_threshold() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub config: OracleConfig,
    pub seed: u64,
    /// KS distance between the pooled particle positions of both samplers.
    pub ks_distance: f64,
    /// KS distance of each ordered particle against the matching ordered value.
    pub ks_per_index: Vec<f64>,
    pub gas_mean: f64,
    pub matrix_mean: f64,
    pub total_substeps: usize,
    pub pass: bool,
}

/// Near-zero start for the gas: centred gaps on the line, `i * gap` on the half-line.
pub fn near_zero_start(params: GasParams, n: usize, gap: f64) -> Result<GasState> {
    let positions = match params.domain {
        crate::loggas::GasDomain::RealLine => (0..n)
            .map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * gap)
            .collect(),
        crate::loggas::GasDomain::HalfLine => (1..=n).map(|i| i as f64 * gap).collect(),
    };
    GasState::new(params, positions, 0.0)
}

/// Runs `n_seeds` gas paths and matrix draws (seed indices `seed..seed+n_seeds`)
/// and compares their pooled one-time marginals.
pub fn oracle_compare(config: &OracleConfig, seed: u64) -> Result<OracleReport> {
    check_common(config.n, config.t_gas, config.kappa)?;
    if config.n_seeds == 0 {
        return Err(Error::invalid("n_seeds", "must be at least 1"));
    }
    let params = match config.ensemble {
        Ensemble::HermitianBM => GasParams::dyson(config.kappa),
        Ensemble::WishartSingular => {
            if config.nu < 0 {
                return Err(Error::NegativeNu { nu: config.nu as f64 });
            }
            GasParams::bru_wishart(config.kappa, config.nu as f64)
        }
    };
    let start = near_zero_start(params, config.n, config.start_gap)?;
    let mut simulator = GasSimulator::default();
    simulator.integrator.max_depth = config.max_depth;
    let draws: Vec<(Vec<f64>, Vec<f64>, usize)> = (0..config.n_seeds as u64)
        .into_par_iter()
        .map(|s| {
            let run_seed = seed.wrapping_add(s);
            let path = simulator.simulate(&start, config.t_gas, config.n_steps, run_seed)?;
            let matrix = match config.ensemble {
                Ensemble::HermitianBM => sample_gue_eigs(config.n, config.t_gas, config.kappa, run_seed)?,
                Ensemble::WishartSingular => {
                    sample_wishart_singvals(config.n, config.nu, config.t_gas, config.kappa, run_seed)?
                }
            };
            Ok((path.last().positions().to_vec(), matrix.values, path.substep_log()))
        })
        .collect::<Result<_>>()?;
    let gas: Vec<f64> = draws.iter().flat_map(|d| d.0.iter().copied()).collect();
    let matrix: Vec<f64> = draws.iter().flat_map(|d| d.1.iter().copied()).collect();
    let ks = ks_distance(&gas, &matrix)?;
    let ks_per_index = (0..config.n)
        .map(|i| {
            let a: Vec<f64> = draws.iter().map(|d| d.0[i]).collect();
            let b: Vec<f64> = draws.iter().map(|d| d.1[i]).collect();
            ks_distance(&a, &b)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleReport {
        config: config.clone(),
        seed,
        ks_distance: ks,
        ks_per_index,
        gas_mean: crate::stats::pairwise_sum(&gas) / gas.len() as f64,
        matrix_mean: crate::stats::pairwise_sum(&matrix) / matrix.len() as f64,
        total_substeps: draws.iter().map(|d| d.2).sum(),
        pass: ks < config.ks_threshold,
    })
}
