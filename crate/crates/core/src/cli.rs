//! Command-line front end: argument parsing, CSV ingestion and the JSON report.
//!
//! Exit codes: 0 success, 1 usage/IO/parse error, 2 matrix not PSD,
//! 3 audit contradicted the certificate, 4 power iteration did not converge.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::certify::{
    audit, certify_bilinear, certify_mahalanobis, gradcheck, AuditConfig, AuditReport,
    GradcheckReport, LipschitzCertificate, MetricKind, Tolerances,
};
use crate::error::{Error, Result};
use crate::linalg::{PowerIteration, SquareMatrix};
use crate::metrics::BallDomain;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_PSD: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::NotPsd { .. } => EXIT_NOT_PSD,
        Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        _ => EXIT_USAGE,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lipcert",
    version,
    about = "Certified Lipschitz constants for Mahalanobis distances and bilinear forms",
    long_about = "Computes the l2 Lipschitz constant of a Mahalanobis distance (sqrt(2)·‖L‖₂, \
                  M = LᵀL) or of a bilinear similarity on a ball of radius R (sqrt(2)·‖M‖₂·R), \
                  and audits it by sampling. Prints one JSON report on stdout; diagnostics go \
                  to stderr.\n\nExit codes: 0 ok, 1 usage/IO/parse error, 2 matrix not PSD, \
                  3 audit found violations, 4 power iteration did not converge."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the certified constant.
    Certify(RunArgs),
    /// Certify, then sample slopes, gradient norms and a tightness witness.
    Audit(RunArgs),
    /// Compare analytic gradients against central finite differences.
    Gradcheck(RunArgs),
    /// Debug: reparse a matrix file and write it back at full precision.
    Dump {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Mahalanobis,
    Bilinear,
}

impl From<MetricArg> for MetricKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Mahalanobis => MetricKind::Mahalanobis,
            MetricArg::Bilinear => MetricKind::Bilinear,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub metric: MetricArg,
    /// CSV file: one row per line, comma-separated, `#` starts a comment line.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Radius R of the input ball (required for bilinear, rejected for mahalanobis).
    #[arg(long)]
    pub radius: Option<f64>,
    /// Number of independent sampled quadruples.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, env = "LIPCERT_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Sampling radius for mahalanobis audits.
    #[arg(long, default_value_t = 1.0)]
    pub sample_radius: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_psd: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_factor: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_spectral: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Multiplicative slack before a sampled slope counts as a violation.
    #[arg(long, default_value_t = 1e-9)]
    pub tol_violation: f64,
    /// Largest accepted finite-difference discrepancy.
    #[arg(long, default_value_t = 1e-5)]
    pub tol_gradcheck: f64,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunCommand {
    Certify,
    Audit,
    Gradcheck,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: RunCommand,
    pub metric: MetricKind,
    pub matrix_path: PathBuf,
    pub radius: Option<f64>,
    pub tolerances: Tolerances,
    pub audit: AuditConfig,
    pub gradcheck_tol: f64,
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_args(command: RunCommand, args: &RunArgs) -> Result<Self> {
        let tolerances = Tolerances {
            psd: args.tol_psd,
            factor: args.tol_factor,
            power: PowerIteration {
                tol: args.tol_spectral,
                max_iter: args.max_iter,
                seed: args.seed,
            },
            violation: args.tol_violation,
            ..Tolerances::default()
        };
        let audit = AuditConfig {
            samples: args.samples,
            seed: args.seed,
            sample_radius: args.sample_radius,
            ..AuditConfig::default()
        };
        let config = RunConfig {
            command,
            metric: args.metric.into(),
            matrix_path: args.matrix.clone(),
            radius: args.radius,
            tolerances,
            audit,
            gradcheck_tol: args.tol_gradcheck,
            output_path: args.output.clone(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.metric, self.radius) {
            (MetricKind::Bilinear, None) => {
                return Err(Error::InvalidArgument("--radius is required for bilinear".into()))
            }
            (MetricKind::Mahalanobis, Some(_)) => {
                return Err(Error::InvalidArgument(
                    "--radius applies only to bilinear; use --sample-radius for mahalanobis audits"
                        .into(),
                ))
            }
            (_, Some(r)) if !(r.is_finite() && r >= 0.0) => {
                return Err(Error::InvalidArgument(format!("radius must be >= 0, got {r}")))
            }
            _ => {}
        }
        if self.audit.samples == 0 {
            return Err(Error::InvalidArgument("--samples must be >= 1".into()));
        }
        if !(self.audit.sample_radius.is_finite() && self.audit.sample_radius > 0.0) {
            return Err(Error::InvalidArgument("--sample-radius must be > 0".into()));
        }
        let t = &self.tolerances;
        let nonneg = [t.psd, t.factor, t.violation, self.gradcheck_tol];
        if nonneg.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidArgument("tolerances must be finite and >= 0".into()));
        }
        if !(t.power.tol.is_finite() && t.power.tol > 0.0) || t.power.max_iter == 0 {
            return Err(Error::InvalidArgument(
                "--tol-spectral must be > 0 and --max-iter >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Parses a CSV matrix: one row per line, comma-separated decimals, blank
/// lines and lines starting with `#` ignored, LF or CRLF endings.
pub fn load_matrix(path: &Path) -> Result<SquareMatrix> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix(&text, path)
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<SquareMatrix> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for (col, field) in line.split(',').enumerate() {
            let field = field.trim();
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                column: col + 1,
                message: format!("invalid number {field:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite { context: "matrix file" });
            }
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::NotSquare {
                    detail: format!(
                        "line {} has {} entries, expected {}",
                        lineno + 1,
                        row.len(),
                        first.len()
                    ),
                });
            }
        }
        rows.push(row);
    }
    SquareMatrix::from_rows(&rows)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub load: f64,
    pub certify: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: RunCommand,
    #[serde(flatten)]
    pub certificate: LipschitzCertificate,
    pub audit: Option<AuditReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gradcheck: Option<GradcheckReport>,
    pub timings_ms: Timings,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: Report,
    pub exit_code: i32,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let start = Instant::now();
    let m = load_matrix(&config.matrix_path)?;
    let mut timings = Timings {
        load: ms_since(start),
        ..Timings::default()
    };

    let t = Instant::now();
    let cert = match config.metric {
        MetricKind::Mahalanobis => certify_mahalanobis(&m, &config.tolerances)?,
        MetricKind::Bilinear => {
            let domain = BallDomain::new(config.radius.unwrap_or(0.0), m.dim())?;
            certify_bilinear(&m, &domain, &config.tolerances)?
        }
    };
    timings.certify = ms_since(t);
    if !cert.cross_check_passes() {
        eprintln!(
            "warning: ‖L‖₂ and √‖M‖₂ differ by {:e} (relative)",
            cert.cross_check_error()
        );
    }
    if cert.metric == MetricKind::Mahalanobis && cert.max_asymmetry > 0.0 {
        eprintln!("note: input asymmetry {:e} removed by symmetrization", cert.max_asymmetry);
    }

    let mut exit_code = EXIT_OK;
    let mut audit_report = None;
    let mut gradcheck_report = None;
    let t = Instant::now();
    match config.command {
        RunCommand::Certify => {}
        RunCommand::Audit => {
            let r = audit(&cert, &m, &config.audit)?;
            if !r.is_clean() || r.gradcheck_max_err > config.gradcheck_tol {
                eprintln!(
                    "audit: {} slope violations, {} gradient violations, gradcheck error {:e}",
                    r.violation_count, r.gradient_violation_count, r.gradcheck_max_err
                );
                exit_code = EXIT_VIOLATION;
            }
            audit_report = Some(r);
        }
        RunCommand::Gradcheck => {
            let r = gradcheck(&cert, &m, &config.audit)?;
            if r.max_err > config.gradcheck_tol {
                eprintln!("gradcheck: max error {:e} exceeds {:e}", r.max_err, config.gradcheck_tol);
                exit_code = EXIT_VIOLATION;
            }
            gradcheck_report = Some(r);
        }
    }
    if config.command != RunCommand::Certify {
        timings.audit = Some(ms_since(t));
    }
    timings.total = ms_since(start);

    Ok(RunOutcome {
        report: Report {
            schema_version: SCHEMA_VERSION,
            command: config.command,
            certificate: cert,
            audit: audit_report,
            gradcheck: gradcheck_report,
            timings_ms: timings,
        },
        exit_code,
    })
}

fn write_output(path: Option<&Path>, body: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, body).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Dump { matrix, output } => {
            load_matrix(&matrix).and_then(|m| write_output(output.as_deref(), &m.to_string()))
                .map(|_| EXIT_OK)
        }
        Command::Certify(args) => execute(RunCommand::Certify, &args),
        Command::Audit(args) => execute(RunCommand::Audit, &args),
        Command::Gradcheck(args) => execute(RunCommand::Gradcheck, &args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code_for(&e)
    })
}

fn execute(command: RunCommand, args: &RunArgs) -> Result<i32> {
    let config = RunConfig::from_args(command, args)?;
    let outcome = run(&config)?;
    let mut body = outcome.report.to_json();
    body.push('\n');
    write_output(config.output_path.as_deref(), &body)?;
    Ok(outcome.exit_code)
}
