//! Batch front-end: one JSON run configuration in, CSV and JSON artifacts out.
//!
//! ```text
//! loggas-sle --config run.json [--out DIR] [--threads N]
//! loggas-sle --preset coupling-h1 [--out DIR] [--threads N]
//! loggas-sle summarize REPORT.json...
//! loggas-sle presets
//! ```
//!
//! Exit codes: 0 when every verdict passes, 2 when one fails, 1 on usage or
//! validation errors.

mod presets;
mod summary;

pub use presets::{preset, PRESET_NAMES};
pub use summary::{summarize, Summary, SummaryEntry};

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::coupling::{
    martingale_drift_test, qv_campaign, sampled_coupling_smoke, verify_coupling, CouplingConfig, DriftConfig,
    QvConfig, SmokeConfig,
};
use crate::error::{Error, Result};
use crate::gff::{sample_field, Rect};
use crate::io::{fmt_f64, to_json_string, write_text};
use crate::loewner::{ChainDomain, LoewnerChain};
use crate::loggas::{GasDomain, GasParams, GasSimulator, GasState, Interaction};
use crate::rmt::{oracle_compare, OracleConfig};

/// Environment variable that overrides the seed of any run.
pub const SEED_ENV: &str = "LOGGAS_SLE_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Gas,
    OracleCompare,
    LoewnerTrace,
    FieldSample,
    VerifyCoupling,
    QvCheck,
    MartingaleDrift,
    SampledCoupling,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Gas => "gas",
            Command::OracleCompare => "oracle-compare",
            Command::LoewnerTrace => "loewner-trace",
            Command::FieldSample => "field-sample",
            Command::VerifyCoupling => "verify-coupling",
            Command::QvCheck => "qv-check",
            Command::MartingaleDrift => "martingale-drift",
            Command::SampledCoupling => "sampled-coupling",
        }
    }
}

/// One run: a command, its parameters and a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.into(),
            reason: e.to_string(),
        })
    }

    /// Applies [`SEED_ENV`] if it is set.
    pub fn with_env_seed(mut self) -> Result<Self> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(SEED_ENV, format!("not an unsigned integer: {v:?}")))?;
        }
        Ok(self)
    }

    /// `<command>-<seed>` stem shared by every artifact of the run.
    pub fn stem(&self) -> String {
        format!("{}-{}", self.command.name(), self.seed)
    }
}

fn parse_params<T: DeserializeOwned>(params: &serde_json::Value) -> Result<T> {
    serde_json::from_value(params.clone()).map_err(|e| Error::Parse {
        path: "params".into(),
        reason: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GasRun {
    domain: GasDomain,
    kappa: f64,
    #[serde(default)]
    nu: f64,
    #[serde(default)]
    interaction: Interaction,
    initial: Vec<f64>,
    horizon: f64,
    n_steps: usize,
    #[serde(default)]
    noiseless: bool,
}

impl GasRun {
    fn path(&self, seed: u64) -> Result<crate::loggas::GasPath> {
        let params = GasParams {
            domain: self.domain,
            kappa: self.kappa,
            nu: self.nu,
            interaction: self.interaction,
        };
        params.validate()?;
        let initial = GasState::new(params, self.initial.clone(), 0.0)?;
        let sim = if self.noiseless {
            GasSimulator::noiseless()
        } else {
            GasSimulator::default()
        };
        sim.simulate(&initial, self.horizon, self.n_steps, seed)
    }
}

fn default_swallow_eps() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceRun {
    #[serde(flatten)]
    gas: GasRun,
    probes: Vec<Complex64>,
    #[serde(default = "default_swallow_eps")]
    swallow_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TraceSidecar {
    domain: ChainDomain,
    kappa: f64,
    delta: f64,
    seed: u64,
    n_steps: usize,
    probes: Vec<Complex64>,
    stopping_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldRun {
    #[serde(rename = "box")]
    rect: Rect,
    mesh: f64,
    /// Smallest support diameter that will be paired with the field.
    min_feature: f64,
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// `None` for runs without verdicts (plain simulations).
    pub pass: Option<bool>,
    pub artifacts: Vec<PathBuf>,
    pub elapsed_seconds: f64,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass == Some(false) {
            2
        } else {
            0
        }
    }
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// Runs `config`, writing `<command>-<seed>.csv`, `<command>-<seed>.json` and a
/// `<command>-<seed>.timing.json` sidecar into `out_dir`.
pub fn execute(config: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    let start = Instant::now();
    let seed = config.seed;
    let (csv_text, json_text, pass) = match config.command {
        Command::Gas => {
            let run: GasRun = parse_params(&config.params)?;
            let path = run.path(seed)?;
            (path.to_csv(), to_json_string(&path.metadata()), None)
        }
        Command::OracleCompare => {
            let cfg: OracleConfig = parse_params(&config.params)?;
            let report = oracle_compare(&cfg, seed)?;
            let rows = report
                .ks_per_index
                .iter()
                .enumerate()
                .map(|(i, ks)| vec![(i + 1).to_string(), fmt_f64(*ks)]);
            (csv("index,ks_distance", rows), to_json_string(&report), Some(report.pass))
        }
        Command::LoewnerTrace => {
            let run: TraceRun = parse_params(&config.params)?;
            let path = run.gas.path(seed)?;
            let delta = if run.gas.domain == GasDomain::HalfLine { run.gas.nu } else { 0.0 };
            let chain = LoewnerChain::new(path, delta)?.with_swallow_eps(run.swallow_eps)?;
            let mut rows = Vec::new();
            for (p, &z) in run.probes.iter().enumerate() {
                for e in chain.trace(z)? {
                    rows.push(vec![
                        p.to_string(),
                        fmt_f64(e.t),
                        fmt_f64(e.g.re),
                        fmt_f64(e.g.im),
                        fmt_f64(e.gprime.re),
                        fmt_f64(e.gprime.im),
                        (e.alive as u8).to_string(),
                    ]);
                }
            }
            let sidecar = TraceSidecar {
                domain: chain.domain(),
                kappa: chain.kappa(),
                delta,
                seed,
                n_steps: chain.driving().n_steps(),
                probes: run.probes.clone(),
                stopping_time: chain.stopping_time(&run.probes, run.swallow_eps)?,
            };
            (
                csv("probe,t,re_g,im_g,re_gp,im_gp,alive", rows),
                to_json_string(&sidecar),
                None,
            )
        }
        Command::FieldSample => {
            let run: FieldRun = parse_params(&config.params)?;
            let field = sample_field(run.rect, run.mesh, seed, run.min_feature)?;
            (field.to_csv(), to_json_string(&field.metadata()), None)
        }
        Command::VerifyCoupling => {
            let cfg: CouplingConfig = parse_params(&config.params)?;
            let report = verify_coupling(&cfg, seed)?;
            let rows = report.functional.iter().flat_map(|s| {
                s.points.iter().map(move |p| {
                    vec![
                        fmt_f64(s.theta),
                        fmt_f64(p.t),
                        fmt_f64(p.mean_re),
                        fmt_f64(p.mean_im),
                        fmt_f64(p.stderr_re),
                        fmt_f64(p.stderr_im),
                        fmt_f64(p.z_score),
                    ]
                })
            });
            let text = csv("theta,t,mean_re,mean_im,stderr_re,stderr_im,z_score", rows);
            (text, to_json_string(&report), Some(report.pass()))
        }
        Command::QvCheck => {
            let cfg: QvConfig = parse_params(&config.params)?;
            let report = qv_campaign(&cfg, seed)?;
            let rows = report.qv_table.iter().map(|r| {
                vec![
                    fmt_f64(r.z.re),
                    fmt_f64(r.z.im),
                    fmt_f64(r.w.re),
                    fmt_f64(r.w.im),
                    fmt_f64(r.realized_mean),
                    fmt_f64(r.realized_stderr),
                    fmt_f64(r.target_mean),
                    fmt_f64(r.target_stderr),
                    fmt_f64(r.rel_err),
                ]
            });
            let text = csv(
                "z_re,z_im,w_re,w_im,realized_mean,realized_stderr,target_mean,target_stderr,rel_err",
                rows,
            );
            (text, to_json_string(&report), Some(report.pass()))
        }
        Command::MartingaleDrift => {
            let cfg: DriftConfig = parse_params(&config.params)?;
            let report = martingale_drift_test(&cfg, seed)?;
            let rows = std::iter::once(&report.driven)
                .chain(report.control.as_ref())
                .flat_map(|table| {
                    table.rows.iter().map(move |r| {
                        vec![
                            table.arm.clone(),
                            fmt_f64(r.probe.re),
                            fmt_f64(r.probe.im),
                            fmt_f64(r.t),
                            fmt_f64(r.mean_re),
                            fmt_f64(r.mean_im),
                            fmt_f64(r.stderr_re),
                            fmt_f64(r.stderr_im),
                            fmt_f64(r.z_score),
                        ]
                    })
                });
            let text = csv(
                "arm,probe_re,probe_im,t,mean_re,mean_im,stderr_re,stderr_im,z_score",
                rows,
            );
            (text, to_json_string(&report), Some(report.pass()))
        }
        Command::SampledCoupling => {
            let cfg: SmokeConfig = parse_params(&config.params)?;
            let report = sampled_coupling_smoke(&cfg, seed)?;
            let row = vec![
                fmt_f64(report.mean_re),
                fmt_f64(report.mean_im),
                fmt_f64(report.stderr_re),
                fmt_f64(report.stderr_im),
                fmt_f64(report.reference_re),
                fmt_f64(report.reference_im),
                fmt_f64(report.rel_err),
            ];
            let text = csv(
                "mean_re,mean_im,stderr_re,stderr_im,reference_re,reference_im,rel_err",
                [row],
            );
            (text, to_json_string(&report), Some(report.pass()))
        }
    };
    let stem = config.stem();
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let json_path = out_dir.join(format!("{stem}.json"));
    let timing_path = out_dir.join(format!("{stem}.timing.json"));
    write_text(&csv_path, &csv_text)?;
    write_text(&json_path, &json_text)?;
    let elapsed_seconds = start.elapsed().as_secs_f64();
    write_text(
        &timing_path,
        &to_json_string(&serde_json::json!({ "elapsed_seconds": elapsed_seconds })),
    )?;
    Ok(RunOutcome {
        pass,
        artifacts: vec![csv_path, json_path, timing_path],
        elapsed_seconds,
    })
}

#[derive(Debug, Parser)]
#[command(name = "loggas-sle", version, about = "Log-gas driven Loewner chains and their field couplings")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named run configuration (see `presets`).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory; overrides `out_dir` in the configuration. Defaults to
    /// `out`, or `out/<preset>` for presets.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    action: Option<Action>,
}

#[derive(Debug, Subcommand)]
enum Action {
    /// Aggregate pass/fail counts over report JSON files.
    Summarize { reports: Vec<PathBuf> },
    /// List the preset names.
    Presets,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let config = match (&cli.config, &cli.preset) {
        (Some(path), None) => RunConfig::from_json(&crate::io::read_text(path)?, &path.display().to_string())?,
        (None, Some(name)) => preset(name).ok_or_else(|| {
            Error::invalid("preset", format!("unknown preset {name:?}; known: {}", PRESET_NAMES.join(", ")))
        })?,
        _ => return Err(Error::invalid("config", "pass exactly one of --config or --preset")),
    };
    config.with_env_seed()
}

fn dispatch(cli: Cli, stdout: &mut (dyn std::io::Write + Send)) -> Result<i32> {
    match cli.action {
        Some(Action::Presets) => {
            for name in PRESET_NAMES {
                let _ = writeln!(stdout, "{name}");
            }
            Ok(0)
        }
        Some(Action::Summarize { reports }) => {
            let summary = summarize(&reports)?;
            let _ = write!(stdout, "{}", to_json_string(&summary));
            Ok(0)
        }
        None => {
            let config = load_config(&cli)?;
            // presets sharing a command and seed would overwrite each other in one directory
            let fallback = match &cli.preset {
                Some(name) => Path::new("out").join(name),
                None => PathBuf::from("out"),
            };
            let out = cli.out.clone().or_else(|| config.out_dir.clone()).unwrap_or(fallback);
            let outcome = execute(&config, &out)?;
            let verdict = match outcome.pass {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "done",
            };
            let _ = writeln!(
                stdout,
                "{} {verdict} ({:.1}s) -> {}",
                config.stem(),
                outcome.elapsed_seconds,
                out.display()
            );
            Ok(outcome.exit_code())
        }
    }
}

/// Errors raised while a campaign runs (as opposed to bad input) count as a
/// failed verdict.
fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::InsufficientSurvivors { .. } | Error::StepFailure { .. } => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut (dyn std::io::Write + Send), stderr: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    let threads = cli.threads;
    let body = move |stdout: &mut (dyn std::io::Write + Send)| dispatch(cli, stdout);
    let result = match threads {
        Some(0) => Err(Error::invalid("threads", "must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| body(stdout)),
            Err(e) => Err(Error::invalid("threads", e.to_string())),
        },
        None => body(stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            error_exit_code(&e)
        }
    }
}

/// Entry point for the binary.
pub fn main_from_env() -> i32 {
    run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn write_config(dir: &Path, json: &str) -> String {
        let p = dir.join("run.json");
        std::fs::write(&p, json).unwrap();
        p.display().to_string()
    }

    #[test]
    fn negative_kappa_is_a_usage_error_naming_the_key() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            r#"{"command":"gas","seed":1,"params":{"domain":"real_line","kappa":-4,"initial":[0,1],"horizon":0.1,"n_steps":10}}"#,
        );
        let (code, _, err) = run_capture(&["loggas-sle", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code, 1);
        assert!(err.contains("kappa"), "{err}");
    }

    #[test]
    fn unsupported_beta_is_relayed() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            r#"{"command":"oracle-compare","params":{"ensemble":"HermitianBM","N":2,"kappa":2,"t_gas":0.25,"n_seeds":10,"n_steps":10}}"#,
        );
        let (code, _, err) = run_capture(&["loggas-sle", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code, 1);
        assert!(err.contains("unsupported beta"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            r#"{"command":"field-sample","params":{"box":{"x0":0,"x1":1,"y0":0,"y1":1},"mesh":0.0625,"min_feature":1,"colour":3}}"#,
        );
        let (code, _, err) = run_capture(&["loggas-sle", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code, 1);
        assert!(err.contains("colour"), "{err}");
        let (code, _, _) = run_capture(&["loggas-sle", "--bogus"]);
        assert_eq!(code, 1);
        let (code, _, _) = run_capture(&["loggas-sle", "--preset", "no-such-preset"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn gas_run_writes_named_reproducible_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            r#"{"command":"gas","seed":5,"params":{"domain":"half_line","kappa":4,"nu":1,"initial":[0.5,1.5],"horizon":0.1,"n_steps":20}}"#,
        );
        let out = dir.path().join("a");
        let (code, stdout, _) = run_capture(&["loggas-sle", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "1"]);
        assert_eq!(code, 0);
        assert!(stdout.contains("gas-5"));
        let first = std::fs::read(out.join("gas-5.csv")).unwrap();
        assert!(out.join("gas-5.json").exists() && out.join("gas-5.timing.json").exists());
        let out2 = dir.path().join("b");
        run_capture(&["loggas-sle", "--config", &cfg, "--out", out2.to_str().unwrap()]);
        assert_eq!(first, std::fs::read(out2.join("gas-5.csv")).unwrap());
        assert_eq!(
            std::fs::read(out.join("gas-5.json")).unwrap(),
            std::fs::read(out2.join("gas-5.json")).unwrap()
        );
    }

    #[test]
    fn presets_parse_and_validate() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            let ok = match cfg.command {
                Command::Gas => parse_params::<GasRun>(&cfg.params).map(|_| ()),
                Command::OracleCompare => parse_params::<OracleConfig>(&cfg.params).map(|_| ()),
                Command::LoewnerTrace => parse_params::<TraceRun>(&cfg.params).map(|_| ()),
                Command::FieldSample => parse_params::<FieldRun>(&cfg.params).map(|_| ()),
                Command::VerifyCoupling => parse_params::<CouplingConfig>(&cfg.params).and_then(|c| c.validate()),
                Command::QvCheck => parse_params::<QvConfig>(&cfg.params).and_then(|c| c.validate()),
                Command::MartingaleDrift => parse_params::<DriftConfig>(&cfg.params).and_then(|c| c.validate()),
                Command::SampledCoupling => parse_params::<SmokeConfig>(&cfg.params).and_then(|c| c.validate()),
            };
            assert!(ok.is_ok(), "{name}: {ok:?}");
        }
        let (code, stdout, _) = run_capture(&["loggas-sle", "presets"]);
        assert_eq!(code, 0);
        assert_eq!(stdout.lines().count(), PRESET_NAMES.len());
    }

    #[test]
    fn trace_and_field_commands() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let (code, _, err) = run_capture(&["loggas-sle", "--preset", "loewner-slit", "--out", out]);
        assert_eq!(code, 0, "{err}");
        let text = std::fs::read_to_string(dir.path().join("loewner-trace-1.csv")).unwrap();
        assert!(text.starts_with("probe,t,re_g,im_g,re_gp,im_gp,alive\n"));
        let (code, _, err) = run_capture(&["loggas-sle", "--preset", "field-box", "--out", out]);
        assert_eq!(code, 0, "{err}");
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("field-sample-1.json")).unwrap()).unwrap();
        assert_eq!(meta["seed"], 1);
    }
}
