//! Named run configurations, one per verification campaign plus small demos.

use serde_json::json;

use super::{Command, RunConfig};

pub const PRESET_NAMES: &[&str] = &[
    "gas-dyson",
    "loewner-slit",
    "field-box",
    "oracle-dyson-2",
    "oracle-dyson-3",
    "oracle-wishart-0",
    "oracle-wishart-1",
    "drift-dyson-k2",
    "drift-dyson-k4",
    "drift-dyson-k6",
    "drift-wishart",
    "qv-n2",
    "qv-n3",
    "coupling-h1",
    "coupling-h2",
    "coupling-o1",
    "coupling-free-control",
    "coupling-smoke",
];

fn config(command: Command, seed: u64, params: serde_json::Value) -> RunConfig {
    RunConfig {
        command,
        seed,
        params,
        out_dir: None,
    }
}

fn oracle(ensemble: &str, n: usize, nu: i64) -> serde_json::Value {
    json!({
        "ensemble": ensemble, "N": n, "nu": nu, "kappa": 4.0, "t_gas": 0.25,
        "n_seeds": 10_000, "n_steps": 400,
    })
}

fn dyson_drift(kappa: f64) -> serde_json::Value {
    json!({
        "domain": "real_line", "kappa": kappa, "initial": [-1.0, 0.0, 1.0], "probes": [[0.0, 4.0]],
        "horizon": 0.1, "n_steps": 100, "n_seeds": 10_000, "control": "free",
    })
}

fn qv(initial: &[f64]) -> serde_json::Value {
    json!({
        "domain": "real_line", "kappa": 4.0, "initial": initial,
        "pairs": [[[0.0, 2.0], [0.0, 2.0]], [[0.0, 2.0], [1.0, 2.0]]],
        "horizon": 0.05, "n_steps": 100, "n_seeds": 1000,
    })
}

fn coupling(domain: &str, nu: f64, interaction: &str, initial: &[f64], center: [f64; 2]) -> serde_json::Value {
    json!({
        "domain": domain, "kappa": 4.0, "nu": nu, "interaction": interaction, "initial": initial,
        "f": { "center": center, "radius": 0.5, "amplitude": 1.0 },
        "thetas": [0.25, 0.5, 1.0], "horizon": 0.05, "n_steps": 50, "n_report": 5,
        "n_seeds": 10_000, "mesh": 0.05,
    })
}

/// Looks up a preset by name.
pub fn preset(name: &str) -> Option<RunConfig> {
    let cfg = match name {
        "gas-dyson" => config(
            Command::Gas,
            1,
            json!({ "domain": "real_line", "kappa": 4.0, "initial": [-1.0, 0.0, 1.0], "horizon": 1.0, "n_steps": 200 }),
        ),
        "loewner-slit" => config(
            Command::LoewnerTrace,
            1,
            json!({
                "domain": "real_line", "kappa": 4.0, "initial": [0.0], "horizon": 0.2, "n_steps": 20,
                "noiseless": true, "probes": [[0.0, 1.0], [1.0, 1.0], [-0.5, 0.25]],
            }),
        ),
        "field-box" => config(
            Command::FieldSample,
            1,
            json!({ "box": { "x0": 0.0, "x1": 4.0, "y0": 0.0, "y1": 4.0 }, "mesh": 0.0625, "min_feature": 1.0 }),
        ),
        "oracle-dyson-2" => config(Command::OracleCompare, 1, oracle("HermitianBM", 2, 0)),
        "oracle-dyson-3" => config(Command::OracleCompare, 1, oracle("HermitianBM", 3, 0)),
        "oracle-wishart-0" => config(Command::OracleCompare, 1, oracle("WishartSingular", 2, 0)),
        "oracle-wishart-1" => config(Command::OracleCompare, 1, oracle("WishartSingular", 2, 1)),
        "drift-dyson-k2" => config(Command::MartingaleDrift, 1, dyson_drift(2.0)),
        "drift-dyson-k4" => config(Command::MartingaleDrift, 1, dyson_drift(4.0)),
        "drift-dyson-k6" => config(Command::MartingaleDrift, 1, dyson_drift(6.0)),
        "drift-wishart" => config(
            Command::MartingaleDrift,
            1,
            json!({
                "domain": "half_line", "kappa": 4.0, "nu": 1.0, "initial": [0.5, 1.5], "probes": [[1.0, 1.0]],
                "horizon": 0.1, "n_steps": 100, "n_seeds": 10_000, "control": { "q": 1.0 },
            }),
        ),
        "qv-n2" => config(Command::QvCheck, 1, qv(&[-1.0, 1.0])),
        "qv-n3" => config(Command::QvCheck, 1, qv(&[-1.0, 0.0, 1.0])),
        "coupling-h1" => config(Command::VerifyCoupling, 1, coupling("real_line", 0.0, "log_gas", &[0.0], [0.0, 3.0])),
        "coupling-h2" => config(
            Command::VerifyCoupling,
            1,
            coupling("real_line", 0.0, "log_gas", &[-1.0, 1.0], [0.0, 3.0]),
        ),
        "coupling-o1" => config(Command::VerifyCoupling, 1, coupling("half_line", 1.0, "log_gas", &[1.0], [1.0, 2.0])),
        // off-axis: a test function symmetric about the imaginary axis cancels
        // the free drift of a symmetric pair
        "coupling-free-control" => config(
            Command::VerifyCoupling,
            1,
            coupling("real_line", 0.0, "free", &[-1.0, 1.0], [1.0, 2.0]),
        ),
        "coupling-smoke" => config(
            Command::SampledCoupling,
            1,
            json!({
                "domain": "real_line", "kappa": 4.0, "initial": [-1.0, 1.0],
                "f": { "center": [0.0, 3.0], "radius": 0.5, "amplitude": 1.0 },
                "theta": 1.0, "horizon": 0.05, "n_steps": 50, "n_seeds": 2000, "mesh": 0.05,
            }),
        ),
        _ => return None,
    };
    Some(cfg)
}
