// Runs shipped presets through the batch front-end and summarizes the
// reports, as `loggas-sle --preset NAME` and `loggas-sle summarize` would.
//
// ```bash
// cargo run --release --example run_presets -- qv-n2 coupling-h1
// ```

use loggas_sle::cli::{execute, preset, summarize, PRESET_NAMES};

pub fn run_example() -> loggas_sle::Result<()> {
    let mut names: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| PRESET_NAMES.contains(&a.as_str()))
        .collect();
    if names.is_empty() {
        names = vec!["loewner-slit".into(), "field-box".into(), "qv-n2".into()];
    }
    let out = std::env::temp_dir().join("loggas-sle-presets");
    let mut reports = Vec::new();
    for name in &names {
        let config = preset(name).expect("listed preset");
        let dir = out.join(name);
        let outcome = execute(&config, &dir)?;
        println!("{name}: pass {:?} in {:.2}s", outcome.pass, outcome.elapsed_seconds);
        reports.push(dir.join(format!("{}.json", config.stem())));
    }
    let summary = summarize(&reports)?;
    println!(
        "{} campaigns, {} pass, {} fail; artifacts in {}",
        summary.campaigns,
        summary.pass,
        summary.fail,
        out.display()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("preset run failed");
}
