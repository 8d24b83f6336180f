//! Command-line surface.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use crate::config::{parse_grid, Auto, RunConfig};
use crate::error::{Error, Result};
use crate::lab::series_csv;
use crate::pipeline::{
    cmd_census, cmd_certify, cmd_lyapunov, cmd_normalize, cmd_scan, cmd_validate_profile,
    cmd_verify, exit_code_for, scan_csv, EXIT_INVALID,
};
use crate::report::RunReport;

#[derive(Debug, Parser)]
#[command(
    name = "nuhcert",
    version,
    about = "Certificates and evidence for shear-deformed torus endomorphisms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
    /// Config file (key = value with [section] headers).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Depth n of the preimage tree.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Grid as WxHxD: points per axis and number of directions.
    #[arg(long, global = true, value_parser = parse_grid)]
    pub grid: Option<(usize, usize, usize)>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Report timestamp 0 so identical runs give identical bytes.
    #[arg(long, global = true)]
    pub fixed_clock: bool,
    /// Relax the strict partition inequalities to non-strict ones.
    #[arg(long, global = true)]
    pub permissive_partition: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Verb {
    /// Closed-form certificate.
    Certify,
    /// Invariant suites and empirical evidence.
    Verify,
    /// Certificate over the t (and r) grids.
    Scan,
    /// Cone census and J_i series from one seeded point.
    Census,
    /// Forward Lyapunov exponents from seeded starts.
    Lyapunov,
    /// Check the shear profiles against their conditions.
    ValidateProfile,
    /// Elementary divisors and normalizing change of coordinates.
    Normalize,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Certify => "certify",
            Verb::Verify => "verify",
            Verb::Scan => "scan",
            Verb::Census => "census",
            Verb::Lyapunov => "lyapunov",
            Verb::ValidateProfile => "validate-profile",
            Verb::Normalize => "normalize",
        }
    }
}

/// Config file merged with command-line overrides.
pub fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config {
                path: p.display().to_string(),
                msg: e.to_string(),
            })?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = cli.depth {
        if d == 0 {
            return Err(Error::Config {
                path: "--depth".into(),
                msg: "must be >= 1".into(),
            });
        }
        cfg.depth = Auto::Value(d);
    }
    if let Some(g) = cli.grid {
        cfg.grid = g;
    }
    if cli.permissive_partition {
        cfg.permissive = true;
    }
    if let Some(o) = &cli.out {
        cfg.report = Some(o.display().to_string());
    }
    Ok(cfg)
}

/// Run one verb; returns the report and exit code without touching files.
pub fn run_verb(verb: Verb, cfg: &RunConfig, fixed_clock: bool) -> (RunReport, i32) {
    let now = if fixed_clock {
        0
    } else {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    };
    let mut rep = RunReport::new(verb.name(), cfg.clone(), now);
    let code = match verb {
        Verb::Certify => cmd_certify(cfg, &mut rep),
        Verb::Verify => cmd_verify(cfg, &mut rep),
        Verb::Scan => cmd_scan(cfg, &mut rep),
        Verb::Census => cmd_census(cfg, &mut rep),
        Verb::Lyapunov => cmd_lyapunov(cfg, &mut rep),
        Verb::ValidateProfile => cmd_validate_profile(cfg, &mut rep),
        Verb::Normalize => cmd_normalize(cfg, &mut rep),
    };
    (rep, code)
}

fn sidecar(cfg: &RunConfig) -> Option<PathBuf> {
    if let Some(c) = &cfg.csv {
        return Some(PathBuf::from(c));
    }
    cfg.report
        .as_ref()
        .map(|r| Path::new(r).with_extension("csv"))
}

/// Write the report (and CSV sidecar, if any) per the config.
pub fn emit(rep: &RunReport, cfg: &RunConfig) -> Result<()> {
    let json = rep.to_json();
    match &cfg.report {
        Some(p) => std::fs::write(p, json + "\n")?,
        None => println!("{json}"),
    }
    let csv = if let Some(scan) = &rep.closed_form.scan {
        Some(scan_csv(scan)?)
    } else if let Some(c) = rep.empirical.as_ref().and_then(|e| e.census.as_ref()) {
        Some(series_csv(&c.series, Some(&c.vertical))?)
    } else {
        None
    };
    if let (Some(text), Some(path)) = (csv, sidecar(cfg)) {
        std::fs::write(path, text)?;
    }
    Ok(())
}

/// Entry point behind `main`: parse, run, emit, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { 0 };
        }
    };
    let cfg = match effective_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let (rep, code) = run_verb(cli.verb, &cfg, cli.fixed_clock);
    for r in &rep.summary.reasons {
        eprintln!("{}: {r}", cli.verb.name());
    }
    eprintln!("{}: {} (exit {code})", cli.verb.name(), rep.summary.outcome);
    if let Err(e) = emit(&rep, &cfg) {
        eprintln!("error: {e}");
        return EXIT_INVALID;
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from([
            "nuhcert",
            "verify",
            "--seed",
            "7",
            "--depth",
            "2",
            "--grid",
            "4x4x6",
            "--permissive-partition",
        ])
        .unwrap();
        let cfg = effective_config(&cli).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.depth, Auto::Value(2));
        assert_eq!(cfg.grid, (4, 4, 6));
        assert!(cfg.permissive);
    }

    #[test]
    fn bad_usage_is_invalid_input() {
        assert_eq!(main_with_args(["nuhcert", "frobnicate"]), 2);
        assert_eq!(main_with_args(["nuhcert", "certify", "--grid", "4x4"]), 2);
        assert_eq!(
            main_with_args(["nuhcert", "certify", "--config", "/nonexistent/x.conf"]),
            2
        );
    }

    #[test]
    fn fixed_clock_is_deterministic() {
        let cfg = RunConfig::default();
        let (a, _) = run_verb(Verb::Certify, &cfg, true);
        let (b, _) = run_verb(Verb::Certify, &cfg, true);
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.generated_at, 0);
    }
}
