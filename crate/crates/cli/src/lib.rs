//! Batch front-end: `layerspec <job> --config <file> [--out <dir>] [--threads N]`.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 numerical or I/O failure.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;
use thiserror::Error;

pub mod config;
pub mod jobs;
pub mod output;
pub mod plot;

use config::{ConfigError, JobKind};
use output::{json_bytes, write_atomic, Manifest};

pub const THREADS_ENV: &str = "LAYERSPEC_THREADS";
pub const MANIFEST: &str = "run-manifest.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure in {context}: {message}")]
    Numerical { context: String, message: String },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Numerical { .. } | Self::Io { .. } => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "layerspec", version, about = "Spectral and time-domain runs for layered dissipative balls")]
pub struct Cli {
    #[arg(value_enum)]
    pub job: JobKind,
    /// Job file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; falls back to LAYERSPEC_THREADS, then all cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

fn thread_count(flag: Option<usize>) -> Result<usize, ConfigError> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| ConfigError::Threads(format!("{THREADS_ENV}={s:?} is not a thread count")))?,
            Err(_) => 0,
        },
    };
    if flag.is_some() && n == 0 {
        return Err(ConfigError::Threads("--threads must be at least 1".into()));
    }
    Ok(n)
}

/// Runs one job and writes its outputs plus the manifest; returns the summary line.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let start = Instant::now();
    let threads = thread_count(cli.threads)?;
    let job = config::load(cli.job, &cli.config)?;
    let io = |path: PathBuf| move |source| CliError::Io { path, source };
    std::fs::create_dir_all(&cli.out).map_err(io(cli.out.clone()))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Numerical { context: "thread pool".into(), message: e.to_string() })?;
    let result = pool.install(|| jobs::execute(&job))?;

    let mut outputs = Vec::with_capacity(result.files.len());
    for (name, bytes) in &result.files {
        write_atomic(&cli.out, name, bytes).map_err(io(cli.out.join(name)))?;
        outputs.push(name.clone());
    }
    let manifest = Manifest {
        tool: "layerspec",
        version: env!("CARGO_PKG_VERSION"),
        job: cli.job.to_string(),
        config: cli.config.clone(),
        parameters: job.parameters(),
        threads: pool.current_num_threads(),
        outputs,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        finished_unix_seconds: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    write_atomic(&cli.out, MANIFEST, &json_bytes(&manifest)).map_err(io(cli.out.join(MANIFEST)))?;
    Ok(result.summary)
}

/// Parses arguments, runs, reports, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            println!("{}: {summary}", cli.job);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn job(dir: &Path, name: &str, body: &str) -> String {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p.to_str().unwrap().to_string()
    }

    fn code(kind: &str, cfg: &str, out: &Path) -> i32 {
        run(["layerspec", kind, "--config", cfg, "--out", out.to_str().unwrap(), "--threads", "1"])
    }

    const MONO: &str = r#"{ "radii": [1, 2, 3], "speeds": [2, 1], "a0": 1, "inner_bc": "dirichlet" }"#;

    #[test]
    fn validate_writes_domain_and_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = job(tmp.path(), "v.json", &format!(r#"{{ "domain": {MONO} }}"#));
        let out = tmp.path().join("out");
        assert_eq!(code("validate", &cfg, &out), 0);
        let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join(MANIFEST)).unwrap()).unwrap();
        assert_eq!(m["job"], "validate");
        assert_eq!(m["threads"], 1);
        assert_eq!(m["outputs"][0], "domain.json");
        let d: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("domain.json")).unwrap()).unwrap();
        assert_eq!(d["speeds_decrease_outward"], true);
    }

    #[test]
    fn configuration_errors_exit_with_one() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("out");
        let cases = [
            ("spectrum", r#"{ "domain": "mono.json", "j": 1, "ells": [0], "box": { "re_min": -1, "re_max": 5, "im_min": -1, "im_max": 1 } }"#),
            ("spectrum", r#"{ "domain": "mono.json", "j": 0, "ells": [0], "box": { "re_min": 0.0, "re_max": 5, "im_min": 0.5, "im_max": 1 } }"#),
            ("validate", r#"{ "domain": "mono.json", "plot": "bars" }"#),
            ("validate", r#"{ "domain": "mono.json", "colour": "red" }"#),
            ("validate", r#"{ "domain": { "radii": [1, 3, 2], "speeds": [1, 1], "a0": 1, "inner_bc": "dirichlet" } }"#),
            ("validate", r#"{ "domain": "missing.json" }"#),
            ("sweep", r#"{ "domain": "mono.json", "j": 1, "lambdas": [10, -1] }"#),
        ];
        job(tmp.path(), "mono.json", MONO);
        for (i, (kind, body)) in cases.iter().enumerate() {
            let cfg = job(tmp.path(), &format!("c{i}.json"), body);
            assert_eq!(code(kind, &cfg, &out), 1, "case {i}: {body}");
        }
        assert!(!out.join(MANIFEST).exists());
        assert_eq!(run(["layerspec", "no-such-job", "--config", "x.json"]), 1);
        assert_eq!(run(["layerspec", "validate", "--config", "x.json", "--threads", "0"]), 1);
        assert_eq!(run(["layerspec", "--help"]), 0);
    }

    #[test]
    fn numerical_failures_exit_with_two() {
        let tmp = tempfile::tempdir().unwrap();
        job(tmp.path(), "mono.json", MONO);
        let cfg = job(
            tmp.path(),
            "e.json",
            r#"{ "equation": "wave", "domain": "mono.json", "ell": 0, "t_final": 1, "dr": 0.01, "dt": 0.1, "initial": { "shape": "bump", "center": 2, "width": 0.5 } }"#,
        );
        assert_eq!(code("evolve", &cfg, &tmp.path().join("out")), 2);
    }

    #[test]
    fn spectrum_roots_lie_in_upper_half_plane() {
        let tmp = tempfile::tempdir().unwrap();
        job(tmp.path(), "mono.json", MONO);
        let cfg = job(
            tmp.path(),
            "s.json",
            r#"{ "domain": "mono.json", "j": 1, "ells": [0, 1], "box": { "re_min": 5, "re_max": 15, "im_min": -0.05, "im_max": 3 } }"#,
        );
        let out = tmp.path().join("out");
        assert_eq!(code("spectrum", &cfg, &out), 0);
        let mut rd = csv::Reader::from_path(out.join("spectrum.csv")).unwrap();
        assert_eq!(rd.headers().unwrap(), vec!["ell", "j", "re_lambda", "im_lambda", "residual"]);
        let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
        assert!(!rows.is_empty());
        for r in rows {
            assert!(r[3].parse::<f64>().unwrap() > 0.0);
        }
    }
}
