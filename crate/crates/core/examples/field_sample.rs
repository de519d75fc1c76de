// Samples the zero-boundary field on a box and compares the empirical
// variance of a pairing with its exact lattice value.
//
// ```bash
// cargo run --release --example field_sample
// ```

use loggas_sle::gff::{dirichlet_energy_static, FieldSampler, Rect, TestFunction};
use loggas_sle::loewner::ChainDomain;
use loggas_sle::stats::MeanEstimate;
use num_complex::Complex64;

pub fn run_example() -> loggas_sle::Result<()> {
    let rect = Rect {
        x0: -4.0,
        x1: 4.0,
        y0: 0.0,
        y1: 8.0,
    };
    let f = TestFunction::bump(Complex64::new(0.0, 3.0), 0.5, 1.0)?;
    let sampler = FieldSampler::new(rect, 0.0625, 1.0)?;
    let nodal = sampler.nodal(&f)?;
    let squares: Vec<f64> = (0..1000)
        .map(|seed| sampler.sample(seed).pair_nodal(&nodal).powi(2))
        .collect();
    let var = MeanEstimate::from_samples(&squares);
    println!("box {:?}, interior nodes {:?}", sampler.rect(), sampler.interior());
    println!(
        "Var (H, f): sampled {:.5} +- {:.5}, exact lattice {:.5}, half-plane energy {:.5}",
        var.mean,
        var.stderr,
        sampler.pairing_variance(&f)?,
        dirichlet_energy_static(&f, ChainDomain::H, 0.05)?
    );
    let one = sampler.sample(42);
    println!("one sample: value at the box centre {:.4}", one.value(64, 64));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("field example failed");
}
