// Simulates a Dyson gas on the line and a Bru–Wishart gas on the half-line,
// and checks the single-particle variance `Var Y(t) = kappa t`.
//
// ```bash
// cargo run --release --example gas_simulation
// ```

use loggas_sle::loggas::{simulate_gas, GasParams, GasState};
use loggas_sle::stats::MeanEstimate;

pub fn run_example() -> loggas_sle::Result<()> {
    let dyson = GasState::new(GasParams::dyson(4.0), vec![-1.0, 0.0, 1.0], 0.0)?;
    let path = simulate_gas(&dyson, 1.0, 200, 1)?;
    println!("Dyson kappa=4, N=3: final positions {:?}", path.last().positions());
    println!("  bisection sub-steps beyond the macro grid: {}", path.substep_log());

    let wishart = GasState::new(GasParams::bru_wishart(4.0, 1.0), vec![0.5, 1.5], 0.0)?;
    let path = simulate_gas(&wishart, 1.0, 200, 1)?;
    println!("Bru-Wishart kappa=4, nu=1, N=2: final positions {:?}", path.last().positions());
    let csv = path.to_csv();
    println!("  CSV header: {}", csv.lines().next().unwrap_or_default());

    let single = GasState::new(GasParams::dyson(2.0), vec![0.0], 0.0)?;
    let ends: Vec<f64> = (0..2000)
        .map(|s| simulate_gas(&single, 0.5, 10, s).map(|p| p.last().positions()[0].powi(2)))
        .collect::<loggas_sle::Result<_>>()?;
    let var = MeanEstimate::from_samples(&ends);
    println!(
        "N=1, kappa=2: E[Y(0.5)^2] = {:.4} +- {:.4} (kappa t = 1)",
        var.mean, var.stderr
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("gas simulation failed");
}
