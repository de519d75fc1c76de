//! Every example must run to completion.

macro_rules! example {
    ($module:ident, $file:literal) => {
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));

            #[test]
            fn runs() {
                run_example().unwrap();
            }
        }
    };
}

example!(gas_simulation, "gas_simulation.rs");
example!(oracle_compare, "oracle_compare.rs");
example!(loewner_chain, "loewner_chain.rs");
example!(green_energy, "green_energy.rs");
example!(field_sample, "field_sample.rs");
example!(martingale_observable, "martingale_observable.rs");
example!(verify_coupling, "verify_coupling.rs");
example!(run_presets, "run_presets.rs");
