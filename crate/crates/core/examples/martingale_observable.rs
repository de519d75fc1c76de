// The martingale observable along one chain, the boundary staircase of its
// imaginary part, and the quadratic-variation identity on a single path.
//
// ```bash
// cargo run --release --example martingale_observable
// ```

use loggas_sle::coupling::{harmonic_part, qv_identity_check, MartingaleTrace};
use loggas_sle::loewner::LoewnerChain;
use loggas_sle::loggas::{simulate_gas, GasParams, GasPath, GasState};
use num_complex::Complex64;

pub fn run_example() -> loggas_sle::Result<()> {
    let start = GasState::new(GasParams::dyson(4.0), vec![-1.0, 1.0], 0.0)?;
    let chain = LoewnerChain::new(simulate_gas(&start, 0.05, 200, 3)?, 0.0)?;
    let trace = MartingaleTrace::new(&chain, Complex64::new(0.0, 2.0))?;
    println!(
        "M(2i): {:.5} at t=0, {:.5} at t=0.05, largest step of Im M {:.2e}",
        trace.values[0],
        trace.values[trace.values.len() - 1],
        trace.max_im_jump()
    );

    let qv = qv_identity_check(&chain, Complex64::new(0.0, 2.0), Complex64::new(1.0, 2.0), 0.05)?;
    println!(
        "one path: realized QV {:.6}, -(kappa/4) dG {:.6}",
        qv.realized_qv, qv.minus_quarter_kappa_dg
    );

    let frozen = LoewnerChain::new(GasPath::constant(GasParams::dyson(4.0), vec![-1.0, 1.0], 0.1, 10)?, 0.0)?;
    for re in [-3.0, 0.0, 3.0] {
        println!(
            "harmonic part just above {re:+}: {:.6}",
            harmonic_part(&frozen, Complex64::new(re, 1e-7), 0.0)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("martingale example failed");
}
