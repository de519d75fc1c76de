// Evolves points under the multiple Loewner chain: the single-slit closed
// form, the half-plane capacity `2Nt`, swallowing, and the inverse map.
//
// ```bash
// cargo run --release --example loewner_chain
// ```

use loggas_sle::loewner::LoewnerChain;
use loggas_sle::loggas::{simulate_gas, GasParams, GasPath, GasState};
use num_complex::Complex64;

pub fn run_example() -> loggas_sle::Result<()> {
    let frozen = GasPath::constant(GasParams::dyson(4.0), vec![0.0], 0.3, 30)?;
    let slit = LoewnerChain::new(frozen, 0.0)?;
    let z = Complex64::new(0.4, 0.3);
    let e = slit.evolve(z, 0.2)?;
    println!("slit: g_0.2({z}) = {:.10}, sqrt(z^2 + 0.8) = {:.10}", e.g, (z * z + 0.8).sqrt());
    let top = slit.trace(Complex64::new(0.0, 1.0))?;
    if let Some(dead) = top.iter().find(|s| !s.alive) {
        println!("slit: the point i is swallowed at t = {:.3} (exact 0.25)", dead.t);
    }

    let start = GasState::new(GasParams::dyson(4.0), vec![-1.0, 0.0, 1.0], 0.0)?;
    let chain = LoewnerChain::new(simulate_gas(&start, 0.1, 100, 5)?, 0.0)?;
    println!("N=3 Dyson chain: hcap coefficient at t=0.1 is {:.5} (2Nt = 0.6)", chain.hcap_coefficient(0.1, 1e3)?);
    let w = chain.evolve(Complex64::new(0.5, 1.0), 0.1)?;
    let back = chain.invert(w.g, 0.1)?;
    println!("inverse map: g^-1(g(0.5+i)) = {:.10}", back.z);

    let start = GasState::new(GasParams::bru_wishart(4.0, 1.0), vec![0.5, 1.5], 0.0)?;
    let quadrant = LoewnerChain::new(simulate_gas(&start, 0.1, 100, 5)?, 1.0)?;
    let e = quadrant.evolve(Complex64::new(1.0, 1.0), 0.1)?;
    println!("quadrant chain: g_0.1(1+i) = {:.6}, alive: {}", e.g, e.alive);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("Loewner example failed");
}
