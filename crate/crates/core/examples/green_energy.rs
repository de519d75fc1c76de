// Green's functions of the half-plane and the quadrant, their decrement along
// a chain, and Dirichlet energies of a bump before and after the flow.
//
// ```bash
// cargo run --release --example green_energy
// ```

use loggas_sle::gff::{
    dirichlet_energy, dirichlet_energy_static, dirichlet_inner, green, green_decrement, green_evolved, richardson,
    SquarePullback, TestFunction,
};
use loggas_sle::loewner::{ChainDomain, LoewnerChain};
use loggas_sle::loggas::{simulate_gas, GasParams, GasState};
use num_complex::Complex64;

pub fn run_example() -> loggas_sle::Result<()> {
    let (z, w) = (Complex64::new(0.6, 0.9), Complex64::new(1.1, 0.4));
    println!(
        "G_O(z, w) = {:.15}, G_H(z^2, w^2) = {:.15}",
        green(ChainDomain::O, z, w)?,
        green(ChainDomain::H, z * z, w * w)?
    );

    let start = GasState::new(GasParams::dyson(4.0), vec![-1.0, 1.0], 0.0)?;
    let chain = LoewnerChain::new(simulate_gas(&start, 0.1, 100, 2)?, 0.0)?;
    let (a, b) = (Complex64::new(0.0, 2.0), Complex64::new(1.0, 2.0));
    for t in [0.0, 0.05, 0.1] {
        println!(
            "t={t:.2}: G_t(2i, 1+2i) = {:.6}, dG/dt = {:.6}",
            green_evolved(&chain, t, a, b)?,
            green_decrement(&chain, t, a, b)?
        );
    }

    let f = TestFunction::bump(Complex64::new(0.0, 3.0), 0.5, 1.0)?;
    println!("E(f) on H: {:.6}", dirichlet_energy_static(&f, ChainDomain::H, 0.05)?);
    for t in [0.05, 0.1] {
        println!("E_t(f) after the flow, t={t}: {:.6}", dirichlet_energy(&f, &chain, t, 0.05)?);
    }

    let (f, g) = (
        TestFunction::bump(Complex64::new(0.5, 2.0), 1.0, 1.0)?,
        TestFunction::bump(Complex64::new(1.0, 2.5), 0.8, 2.0)?,
    );
    let h = 0.01;
    let on_h = richardson(dirichlet_inner(&f, &g, h), dirichlet_inner(&f, &g, h / 4.0));
    let (pf, pg) = (SquarePullback(f), SquarePullback(g));
    let on_o = richardson(dirichlet_inner(&pf, &pg, h), dirichlet_inner(&pf, &pg, h / 4.0));
    println!("Dirichlet inner product on H {on_h:.8}, pulled back to O {on_o:.8}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("Green example failed");
}
