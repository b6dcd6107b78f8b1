//! Command-line front door: spec ingestion, command dispatch, and
//! deterministic output artifacts. Every artifact carries a metadata
//! header (spec hash, seed, tool version) and is parseable by the
//! readers in this module.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linear_form::{ac_density, char_fn_l, singular_atoms, DistributionGrid, SingularAtom};
use crate::model::{lambda_total_exact, ModelSpec};
use crate::montecarlo::{kac_convergence, sample_linear_form, KacRow};
use crate::operator_algebra::{governing_operator_capped, poly_divides, OperatorPoly};
use crate::verifier::{
    fd_residual, initial_condition_check, symbol_root_check, system_cf_check, CheckStatus,
    FdGridSpec, PairSign, VerificationReport,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "telegraph-forms",
    version,
    about = "Distributions, governing PDEs and Monte Carlo validation for linear forms of telegraph processes"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    /// Compact binary dump (simulate only).
    Bin,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive the governing constant-coefficient operator of order 2^n.
    DerivePde {
        #[arg(long)]
        spec: PathBuf,
        /// Override the component cap (default 5).
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include a LaTeX rendering in the artifact.
        #[arg(long)]
        latex: bool,
    },
    /// List the singular atoms of L(t).
    Atoms {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// FFT-invert the AC characteristic function onto a density grid.
    Density {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        t: f64,
        /// Minimum grid size (power of two).
        #[arg(long, default_value_t = 4096)]
        points: usize,
        /// Support padding factor (>= 1).
        #[arg(long, default_value_t = 1.25)]
        pad: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the characteristic function on a frequency list.
    Cf {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw Monte Carlo samples of L(t).
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the numerical certificates tying the operator to the CF.
    Verify {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 2.0])]
        alpha: Vec<f64>,
        /// Also run the advisory finite-difference residual check.
        #[arg(long)]
        advisory: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Kac-scaling convergence experiment toward the Brownian limit.
    Kac {
        #[arg(long)]
        spec: PathBuf,
        /// Diffusion coefficients rho_k (one per component).
        #[arg(long, value_delimiter = ',', required = true)]
        rho: Vec<f64>,
        /// Scale factors M (each >= 1).
        #[arg(long, value_delimiter = ',', required = true)]
        scales: Vec<f64>,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full acceptance suite.
    Selftest {
        /// Run a single criterion (1..=14).
        #[arg(long)]
        only: Option<usize>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Meta {
    fn new(spec_hash: Option<String>, seed: Option<u64>) -> Meta {
        Meta {
            version: TOOL_VERSION.to_string(),
            spec_sha256: spec_hash,
            seed,
        }
    }

    fn csv_header(&self) -> String {
        let mut out = format!("# version={}\n", self.version);
        if let Some(h) = &self.spec_sha256 {
            let _ = writeln!(out, "# spec_sha256={h}");
        }
        if let Some(s) = self.seed {
            let _ = writeln!(out, "# seed={s}");
        }
        out
    }
}

fn load_spec(path: &Path) -> Result<(ModelSpec, String)> {
    let bytes = fs::read(path)
        .map_err(|e| Error::Schema(format!("cannot read spec {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|e| Error::Schema(format!("spec is not UTF-8: {e}")))?;
    let spec = ModelSpec::from_json_str(&text)?;
    let hash = hex(&Sha256::digest(&bytes));
    Ok((spec, hash))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut acc, b| {
        let _ = write!(acc, "{b:02x}");
        acc
    })
}

fn emit(out: &Option<PathBuf>, content: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content).map_err(Error::from),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(content).map_err(Error::from)
        }
    }
}

// ---------------------------------------------------------------------
// Artifact shapes
// ---------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct PdeTerm {
    pub dt: u32,
    pub dx: u32,
    pub coef: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PdeArtifact {
    pub meta: Meta,
    pub n: usize,
    pub order: u32,
    /// Terms in descending graded-lex order (T > X).
    pub terms: Vec<PdeTerm>,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latex: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor_check: Option<FactorCheck>,
}

/// Divisibility probe by (dt + Lambda)^2, the symmetric-case factor.
#[derive(Debug, Serialize, Deserialize)]
pub struct FactorCheck {
    pub divisor: String,
    pub divides: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quotient: Option<Vec<PdeTerm>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AtomsArtifact {
    pub meta: Meta,
    pub t: f64,
    pub total_mass: f64,
    pub atoms: Vec<SingularAtom>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GridArtifact {
    pub meta: Meta,
    #[serde(flatten)]
    pub grid: DistributionGrid,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CfRow {
    pub alpha: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CfArtifact {
    pub meta: Meta,
    pub t: f64,
    pub values: Vec<CfRow>,
}

#[derive(Debug, Serialize)]
pub struct VerifyArtifact {
    pub meta: Meta,
    pub t: f64,
    pub alphas: Vec<f64>,
    pub passed: bool,
    pub reports: Vec<VerificationReport>,
}

#[derive(Debug, Serialize)]
pub struct KacArtifact {
    pub meta: Meta,
    pub t: f64,
    pub rows: Vec<KacRow>,
}

fn poly_terms(p: &OperatorPoly) -> Vec<PdeTerm> {
    p.terms()
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .map(|(m, c)| PdeTerm {
            dt: m.dt,
            dx: m.dx,
            coef: crate::operator_algebra::format_rational(c),
        })
        .collect()
}

// ---------------------------------------------------------------------
// Command implementations
// ---------------------------------------------------------------------

fn run_derive_pde(
    spec_path: &Path,
    cap: Option<usize>,
    format: Format,
    out: &Option<PathBuf>,
    latex: bool,
) -> Result<i32> {
    let (spec, hash) = load_spec(spec_path)?;
    let cap = cap.unwrap_or(crate::operator_algebra::DEFAULT_GOVERNING_CAP);
    let op = governing_operator_capped(&spec, cap)?;

    let factor_check = (spec.n() == 2).then(|| {
        let lam = lambda_total_exact(&spec);
        let divisor = (&OperatorPoly::t() + &OperatorPoly::constant(lam.clone())).pow(2);
        let quotient = poly_divides(&divisor, &op);
        FactorCheck {
            divisor: format!(
                "(dt + {})^2",
                crate::operator_algebra::format_rational(&lam)
            ),
            divides: quotient.is_some(),
            quotient: quotient.as_ref().map(poly_terms),
        }
    });

    let artifact = PdeArtifact {
        meta: Meta::new(Some(hash), None),
        n: spec.n(),
        order: 1 << spec.n(),
        terms: poly_terms(&op),
        text: op.render_text(),
        latex: latex.then(|| op.render_latex()),
        factor_check,
    };
    match format {
        Format::Json => emit(out, to_json(&artifact)?.as_bytes())?,
        Format::Csv => {
            let mut body = artifact.meta.csv_header();
            body.push_str("dt,dx,coef\n");
            for term in &artifact.terms {
                let _ = writeln!(body, "{},{},{}", term.dt, term.dx, term.coef);
            }
            emit(out, body.as_bytes())?;
        }
        Format::Bin => return Err(Error::Schema("derive-pde supports csv or json".into())),
    }
    if out.is_some() {
        println!("order-{} operator: {}", artifact.order, artifact.text);
        if let Some(fc) = &artifact.factor_check {
            if fc.divides {
                println!("divisible by {}", fc.divisor);
            }
        }
    }
    Ok(0)
}

fn run_atoms(spec_path: &Path, t: f64, format: Format, out: &Option<PathBuf>) -> Result<i32> {
    let (spec, hash) = load_spec(spec_path)?;
    let atoms = singular_atoms(&spec, t)?;
    let artifact = AtomsArtifact {
        meta: Meta::new(Some(hash), None),
        t,
        total_mass: atoms.iter().map(|a| a.mass).sum(),
        atoms,
    };
    match format {
        Format::Json => emit(out, to_json(&artifact)?.as_bytes()),
        Format::Csv => {
            let mut body = artifact.meta.csv_header();
            body.push_str("location,mass,multiplicity\n");
            for a in &artifact.atoms {
                let _ = writeln!(body, "{},{},{}", a.location, a.mass, a.multiplicity);
            }
            emit(out, body.as_bytes())
        }
        Format::Bin => Err(Error::Schema("atoms supports csv or json".into())),
    }?;
    Ok(0)
}

fn run_density(
    spec_path: &Path,
    t: f64,
    points: usize,
    pad: f64,
    format: Format,
    out: &Option<PathBuf>,
) -> Result<i32> {
    let (spec, hash) = load_spec(spec_path)?;
    let grid = ac_density(&spec, t, pad, points)?;
    if let Some(w) = grid.negative_clip_warning() {
        eprintln!("warning: {w}");
    }
    match format {
        Format::Json => {
            let artifact = GridArtifact {
                meta: Meta::new(Some(hash), None),
                grid,
            };
            emit(out, to_json(&artifact)?.as_bytes())
        }
        Format::Csv => {
            let meta = Meta::new(Some(hash), None);
            let mut body = meta.csv_header().into_bytes();
            grid.write_csv(&mut body)?;
            emit(out, &body)
        }
        Format::Bin => Err(Error::Schema("density supports csv or json".into())),
    }?;
    Ok(0)
}

fn run_cf(
    spec_path: &Path,
    t: f64,
    alphas: &[f64],
    format: Format,
    out: &Option<PathBuf>,
) -> Result<i32> {
    let (spec, hash) = load_spec(spec_path)?;
    let values: Vec<CfRow> = alphas
        .iter()
        .map(|&alpha| {
            let v = char_fn_l(&spec, alpha, t);
            CfRow {
                alpha,
                re: v.re,
                im: v.im,
            }
        })
        .collect();
    let artifact = CfArtifact {
        meta: Meta::new(Some(hash), None),
        t,
        values,
    };
    match format {
        Format::Json => emit(out, to_json(&artifact)?.as_bytes()),
        Format::Csv => {
            let mut body = artifact.meta.csv_header();
            body.push_str("alpha,re,im\n");
            for row in &artifact.values {
                let _ = writeln!(body, "{},{},{}", row.alpha, row.re, row.im);
            }
            emit(out, body.as_bytes())
        }
        Format::Bin => Err(Error::Schema("cf supports csv or json".into())),
    }?;
    Ok(0)
}

fn run_simulate(
    spec_path: &Path,
    t: f64,
    samples: usize,
    seed: u64,
    format: Format,
    out: &Option<PathBuf>,
) -> Result<i32> {
    let (spec, hash) = load_spec(spec_path)?;
    let set = sample_linear_form(&spec, t, samples, seed)?;
    let meta = Meta::new(Some(hash), Some(seed));
    match format {
        Format::Csv => {
            let mut body = meta.csv_header().into_bytes();
            body.extend_from_slice(b"value,event_count\n");
            set.write_csv(&mut body)?;
            emit(out, &body)?;
        }
        Format::Bin => {
            let mut body = Vec::with_capacity(16 + 12 * set.len());
            set.write_binary(&mut body)?;
            emit(out, &body)?;
            // binary layout has no metadata section; echo it on stdout
            if out.is_some() {
                println!(
                    "wrote {} records; version={} spec_sha256={} seed={}",
                    set.len(),
                    meta.version,
                    meta.spec_sha256.as_deref().unwrap_or("-"),
                    seed
                );
            }
        }
        Format::Json => return Err(Error::Schema("simulate supports csv or bin".into())),
    }
    Ok(0)
}

fn run_verify(
    spec_path: &Path,
    t: f64,
    alphas: &[f64],
    advisory: bool,
    out: &Option<PathBuf>,
) -> Result<i32> {
    let (spec, hash) = load_spec(spec_path)?;
    let mut reports = vec![
        symbol_root_check(&spec, alphas)?,
        system_cf_check(&spec, alphas, t)?,
    ];
    if spec.n() == 2 {
        let sign = if spec.coef(1) > 0.0 {
            PairSign::Sum
        } else {
            PairSign::Difference
        };
        reports.push(initial_condition_check(
            spec.params(0),
            spec.params(1),
            sign,
        )?);
    }
    let mut advisory_names = Vec::new();
    if advisory {
        let window = (0.8 * t, 1.2 * t);
        reports.push(fd_residual(&spec, window, &FdGridSpec::default())?);
        advisory_names.push("fd_residual");
    }
    let mut all_passed = true;
    for report in &reports {
        let is_advisory = advisory_names.contains(&report.check_name.as_str());
        let tag = match report.status {
            CheckStatus::Passed => "PASS",
            CheckStatus::Inconclusive => "INCONCLUSIVE",
            CheckStatus::Failed if is_advisory => "WARN",
            CheckStatus::Failed => "FAIL",
        };
        println!(
            "{tag} {}: max residual {:.3e} (tolerance {:.1e})",
            report.check_name, report.max_residual, report.tolerance
        );
        if !is_advisory {
            all_passed &= report.passed;
        }
    }
    let artifact = VerifyArtifact {
        meta: Meta::new(Some(hash), None),
        t,
        alphas: alphas.to_vec(),
        passed: all_passed,
        reports,
    };
    if out.is_some() {
        emit(out, to_json(&artifact)?.as_bytes())?;
    }
    Ok(if all_passed { 0 } else { 2 })
}

#[allow(clippy::too_many_arguments)]
fn run_kac(
    spec_path: &Path,
    rho: &[f64],
    scales: &[f64],
    t: f64,
    samples: usize,
    seed: u64,
    format: Format,
    out: &Option<PathBuf>,
) -> Result<i32> {
    let (spec, hash) = load_spec(spec_path)?;
    let rows = kac_convergence(&spec, rho, scales, t, samples, seed)?;
    let artifact = KacArtifact {
        meta: Meta::new(Some(hash), Some(seed)),
        t,
        rows,
    };
    match format {
        Format::Json => emit(out, to_json(&artifact)?.as_bytes()),
        Format::Csv => {
            let mut body = artifact.meta.csv_header();
            body.push_str("scale,ks_distance,limit_mean,limit_variance,samples\n");
            for r in &artifact.rows {
                let _ = writeln!(
                    body,
                    "{},{},{},{},{}",
                    r.scale, r.ks_distance, r.limit_mean, r.limit_variance, r.samples
                );
            }
            emit(out, body.as_bytes())
        }
        Format::Bin => Err(Error::Schema("kac supports csv or json".into())),
    }?;
    Ok(0)
}

fn run_selftest(only: Option<usize>) -> Result<i32> {
    let results = match only {
        Some(id) => {
            if !(1..=crate::selftest::CRITERIA_COUNT).contains(&id) {
                return Err(Error::Domain(format!(
                    "criterion id must be 1..={}",
                    crate::selftest::CRITERIA_COUNT
                )));
            }
            vec![crate::selftest::run_criterion(id)]
        }
        None => crate::selftest::run_all(),
    };
    let mut all = true;
    for r in &results {
        println!("{}", r.line());
        if !r.passed && !r.advisory {
            all = false;
        }
    }
    Ok(if all { 0 } else { 2 })
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Internal(format!("serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Dispatches a parsed invocation; returns the process exit code.
pub fn run(config: &RunConfig) -> Result<i32> {
    match &config.command {
        Command::DerivePde {
            spec,
            cap,
            format,
            out,
            latex,
        } => run_derive_pde(spec, *cap, *format, out, *latex),
        Command::Atoms {
            spec,
            t,
            format,
            out,
        } => run_atoms(spec, *t, *format, out),
        Command::Density {
            spec,
            t,
            points,
            pad,
            format,
            out,
        } => run_density(spec, *t, *points, *pad, *format, out),
        Command::Cf {
            spec,
            t,
            alpha,
            format,
            out,
        } => run_cf(spec, *t, alpha, *format, out),
        Command::Simulate {
            spec,
            t,
            samples,
            seed,
            format,
            out,
        } => run_simulate(spec, *t, *samples, *seed, *format, out),
        Command::Verify {
            spec,
            t,
            alpha,
            advisory,
            out,
        } => run_verify(spec, *t, alpha, *advisory, out),
        Command::Kac {
            spec,
            rho,
            scales,
            t,
            samples,
            seed,
            format,
            out,
        } => run_kac(spec, rho, scales, *t, *samples, *seed, *format, out),
        Command::Selftest { only } => run_selftest(*only),
    }
}

// ---------------------------------------------------------------------
// Readers (round-trip support)
// ---------------------------------------------------------------------

/// Strips `#`-prefixed metadata lines and the column header from CSV text.
pub fn csv_data_rows(text: &str) -> Vec<&str> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .collect()
}

pub fn read_grid_json(text: &str) -> Result<DistributionGrid> {
    let artifact: GridArtifact =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    Ok(artifact.grid)
}

pub fn read_atoms_json(text: &str) -> Result<Vec<SingularAtom>> {
    let artifact: AtomsArtifact =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    Ok(artifact.atoms)
}

pub fn read_pde_json(text: &str) -> Result<PdeArtifact> {
    serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
}

pub fn read_samples_csv(text: &str) -> Result<(Vec<f64>, Vec<u32>)> {
    let mut values = Vec::new();
    let mut events = Vec::new();
    for row in csv_data_rows(text) {
        let (v, e) = row
            .split_once(',')
            .ok_or_else(|| Error::Schema(format!("bad sample row {row:?}")))?;
        values.push(
            v.parse()
                .map_err(|e| Error::Schema(format!("bad value: {e}")))?,
        );
        events.push(
            e.parse()
                .map_err(|e| Error::Schema(format!("bad count: {e}")))?,
        );
    }
    Ok((values, events))
}
