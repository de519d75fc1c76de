// Compares the simulated `kappa = 4` gases with eigenvalues of a Hermitian
// matrix Brownian motion and singular values of a complex Gaussian matrix.
//
// ```bash
// cargo run --release --example oracle_compare -- 10000
// ```

use loggas_sle::rmt::{oracle_compare, Ensemble, OracleConfig};

pub fn run_example() -> loggas_sle::Result<()> {
    let n_seeds = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(500);
    let cases = [
        (Ensemble::HermitianBM, 2, 0),
        (Ensemble::HermitianBM, 3, 0),
        (Ensemble::WishartSingular, 2, 0),
        (Ensemble::WishartSingular, 2, 1),
    ];
    for (ensemble, n, nu) in cases {
        let config = OracleConfig {
            ensemble,
            n,
            nu,
            kappa: 4.0,
            t_gas: 0.25,
            n_seeds,
            n_steps: 400,
            start_gap: 1e-4,
            ks_threshold: 0.05,
            max_depth: 80,
        };
        let report = oracle_compare(&config, 1)?;
        println!(
            "{ensemble:?} N={n} nu={nu}: KS {:.4} (per index {:?}), means {:.4} vs {:.4}, extra substeps {}",
            report.ks_distance,
            report.ks_per_index.iter().map(|d| (d * 1e4).round() / 1e4).collect::<Vec<_>>(),
            report.gas_mean,
            report.matrix_mean,
            report.total_substeps
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("oracle comparison failed");
}
