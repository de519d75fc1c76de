// Monte Carlo checks of the coupling: martingale drift with a falsification
// control, and constancy of the characteristic functional in time.
//
// ```bash
// cargo run --release --example verify_coupling -- 10000
// ```

use loggas_sle::coupling::{martingale_drift_test, verify_coupling, Control, CouplingConfig, DriftConfig};
use loggas_sle::gff::TestFunction;
use loggas_sle::loggas::{GasDomain, Interaction};
use num_complex::Complex64;

pub fn run_example() -> loggas_sle::Result<()> {
    let n_seeds = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(200);

    let drift = DriftConfig {
        domain: GasDomain::RealLine,
        kappa: 4.0,
        nu: 0.0,
        initial: vec![-1.0, 0.0, 1.0],
        probes: vec![Complex64::new(0.0, 4.0)],
        horizon: 0.1,
        n_steps: 100,
        n_report: 10,
        n_seeds,
        swallow_eps: 1e-3,
        control: Control::Free,
    };
    let report = martingale_drift_test(&drift, 1)?;
    for v in &report.verdicts {
        println!("{}: {:.2} (needs {} {}) -> {}", v.name, v.statistic, v.comparison, v.tolerance, v.pass);
    }

    let coupling = CouplingConfig {
        domain: GasDomain::RealLine,
        kappa: 4.0,
        nu: 0.0,
        interaction: Interaction::LogGas,
        initial: vec![-1.0, 1.0],
        f: TestFunction::bump(Complex64::new(0.0, 3.0), 0.5, 1.0)?,
        thetas: vec![0.5, 1.0],
        horizon: 0.05,
        n_steps: 50,
        n_report: 5,
        n_seeds,
        mesh: 0.05,
        swallow_eps: 1e-3,
    };
    let report = verify_coupling(&coupling, 1)?;
    for series in &report.functional {
        let last = series.points.last().expect("at least one report time");
        println!(
            "theta {}: start {:.5}{:+.5}i, at t={} {:.5}{:+.5}i (z {:.2})",
            series.theta, series.initial_re, series.initial_im, last.t, last.mean_re, last.mean_im, last.z_score
        );
    }
    println!("all verdicts pass: {}", report.pass());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("coupling verification failed");
}
