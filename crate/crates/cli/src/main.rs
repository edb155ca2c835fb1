mod config;
mod verify;

use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex;
use num_traits::ToPrimitive;
use oscint_core::damping::{build_damping, build_modified_damping, outer_scale_index, DampingFactor};
use oscint_core::lab::cutoff::CutoffSpec;
use oscint_core::lab::sweep::{log_spaced, sweep, SweepConfig};
use oscint_core::report::{analyze, Analysis, AnalysisError};
use oscint_core::{parse_phase, Polynomial};

use config::{Flags, RunConfig};

#[derive(Parser)]
#[command(name = "oscint", version, about = "Newton-polyhedron analysis and operator sweeps for polynomial phases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Polyhedra, vertex exponents, root clusters and crosscheck as JSON.
    Analyze(Flags),
    /// Norm sweep over log-spaced λ: CSV plus fit JSON.
    Sweep(Flags),
    /// Pass/fail table of the diagnostic suite.
    Verify(Flags),
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_MATH: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

/// A failed run: exit code plus the machine-readable reason.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: String,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            kind: "ConfigError".into(),
            message: message.into(),
        }
    }

    pub fn math(kind: impl Into<String>, message: impl ToString) -> Self {
        Failure {
            code: EXIT_MATH,
            kind: kind.into(),
            message: message.to_string(),
        }
    }

    fn json(&self) -> String {
        serde_json::json!({ "error": self.kind, "message": self.message, "exit_code": self.code }).to_string()
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        Failure::math(e.kind(), &e)
    }
}

impl From<oscint_core::lab::LabError> for Failure {
    fn from(e: oscint_core::lab::LabError) -> Self {
        let kind = format!("{e:?}");
        let kind = kind.split([' ', '(', '{']).next().unwrap_or("LabError").to_owned();
        Failure::math(kind, &e)
    }
}

impl From<oscint_core::damping::DampingError> for Failure {
    fn from(e: oscint_core::damping::DampingError) -> Self {
        let kind = format!("{e:?}");
        let kind = kind.split([' ', '(', '{']).next().unwrap_or("DampingError").to_owned();
        Failure::math(kind, &e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprintln!("{}", Failure::config(e.to_string().trim_end()).json());
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let result = match &cli.command {
        Command::Analyze(f) => resolve(f).and_then(|c| cmd_analyze(&c)),
        Command::Sweep(f) => resolve(f).and_then(|c| cmd_sweep(&c)),
        Command::Verify(f) => resolve(f).and_then(|c| verify::cmd_verify(&c)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.json());
            ExitCode::from(f.code)
        }
    }
}

fn resolve(flags: &Flags) -> Result<RunConfig, Failure> {
    RunConfig::resolve(flags).map_err(Failure::config)
}

pub fn phase_of(cfg: &RunConfig) -> Result<Polynomial, Failure> {
    let text = cfg.phase.as_deref().ok_or_else(|| Failure::config("missing --phase"))?;
    parse_phase(text).map_err(|e| AnalysisError::from(e).into())
}

pub fn cutoff_of(cfg: &RunConfig) -> CutoffSpec {
    CutoffSpec::new(cfg.cutoff_width, cfg.profile)
}

/// Writes `name` into the output directory, creating it if needed.
pub fn write_output(cfg: &RunConfig, name: &str, contents: &str) -> Result<(), Failure> {
    let dir = cfg.out_dir.as_deref().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))
}

fn cmd_analyze(cfg: &RunConfig) -> Result<(), Failure> {
    let s = phase_of(cfg)?;
    let analysis = analyze(&s)?;
    let json = serde_json::to_string_pretty(&analysis).expect("analysis serializes") + "\n";
    if cfg.out_dir.is_some() {
        write_output(cfg, "analysis.json", &json)?;
        write_output(cfg, "config.txt", &cfg.to_text())?;
    }
    print!("{json}");
    Ok(())
}

fn vertex_of<'a>(a: &'a Analysis, r: usize) -> Result<&'a oscint_core::VertexReport, Failure> {
    a.vertices.get(r).ok_or_else(|| {
        Failure::math(
            "VertexOutOfRange",
            format!("vertex {r} requested, the Hessian polyhedron has {}", a.vertices.len()),
        )
    })
}

/// The damping factor requested by `--damped` / `--modified-damping`.
pub fn damping_of(cfg: &RunConfig, a: &Analysis) -> Result<Option<DampingFactor>, Failure> {
    if cfg.damped {
        let r = cfg.vertex.ok_or_else(|| Failure::config("--damped needs --vertex"))?;
        let v = vertex_of(a, r)?;
        let re_z = match cfg.re_z {
            Some(z) => z,
            None => v
                .damped_re_z
                .as_ref()
                .and_then(|z| z.to_f64())
                .ok_or_else(|| Failure::math("UndefinedExponent", format!("vertex {r} has A = 0; pass --re-z")))?,
        };
        return Ok(Some(build_damping(&a.cluster_tree, r, Complex::new(re_z, 0.0))?));
    }
    if cfg.modified_damping {
        let re_z = match cfg.re_z {
            Some(z) => z,
            None => vertex_of(a, 1)?
                .critical_neg_re_z
                .as_ref()
                .and_then(|z| z.to_f64())
                .ok_or_else(|| Failure::math("UndefinedExponent", "vertex 1 has A = 0; pass --re-z"))?,
        };
        let k = outer_scale_index(cfg.cutoff_width);
        return Ok(Some(build_modified_damping(
            &a.cluster_tree,
            cfg.lambda_min,
            k,
            Complex::new(re_z, 0.0),
        )?));
    }
    Ok(None)
}

fn cmd_sweep(cfg: &RunConfig) -> Result<(), Failure> {
    let s = phase_of(cfg)?;
    let analysis = analyze(&s)?;
    let p = match (cfg.p, cfg.vertex) {
        (Some(p), _) => p,
        (None, Some(r)) if !cfg.damped => vertex_of(&analysis, r)?.p.to_f64().unwrap(),
        _ => 2.0,
    };
    let damping = damping_of(cfg, &analysis)?;
    let sweep_cfg = SweepConfig {
        grid_budget: cfg.grid_budget,
        seed: cfg.seed,
        ..Default::default()
    };
    let lambdas = log_spaced(cfg.lambda_min, cfg.lambda_max, cfg.lambda_count);
    let result = sweep::<f64>(&s, &cutoff_of(cfg), damping.as_ref(), p, &lambdas, &sweep_cfg)?;
    let csv = result.to_csv();
    let fit = result.fit_json() + "\n";
    if cfg.out_dir.is_some() {
        write_output(cfg, "sweep.csv", &csv)?;
        write_output(cfg, "fit.json", &fit)?;
        write_output(cfg, "config.txt", &cfg.to_text())?;
    } else {
        print!("{csv}{fit}");
    }
    if result.fit.is_none() {
        return Err(Failure {
            code: EXIT_VERIFY,
            kind: "InsufficientSamples".into(),
            message: format!(
                "fewer than {} samples carry a norm; lower --lambda-max or raise --grid-budget",
                oscint_core::lab::sweep::MIN_FIT_SAMPLES
            ),
        });
    }
    Ok(())
}
