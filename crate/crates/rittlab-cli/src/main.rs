use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rittlab::workbench::{self, Command as RunCommand, CorpusSpec, ExperimentConfig};

/// Numerical workbench for functional calculus on spectral regions,
/// transfer localization and isometric dilations.
#[derive(Parser)]
#[command(name = "rittlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

/// Flags shared by every experiment command; values override the config
/// file when both are given.
#[derive(Args, Clone, Default)]
struct CommonFlags {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Matrix file ({"n": .., "entries": [[[re,im],..],..]}).
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Second matrix for pair commands.
    #[arg(long)]
    matrix2: Option<PathBuf>,
    /// Angles of E on the unit circle, radians (repeat the flag).
    #[arg(long = "e-angle")]
    e_angles: Vec<f64>,
    /// Type radius r.
    #[arg(long)]
    r: Option<f64>,
    /// Contour radius u (r < u < s).
    #[arg(long)]
    u: Option<f64>,
    /// Calculus radius s.
    #[arg(long)]
    s: Option<f64>,
    /// Sector half-angle for the transfer machinery.
    #[arg(long)]
    theta: Option<f64>,
    /// Quadrature tolerance (0 = per-command default).
    #[arg(long)]
    tol: Option<f64>,
    /// Corpus seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Corpus size.
    #[arg(long)]
    corpus_size: Option<usize>,
    /// Built-in function key (one_minus_z^k, prod_linear_factors,
    /// rational(angle, radius)).
    #[arg(long)]
    function: Option<String>,
    /// Second function for pair calculus.
    #[arg(long)]
    function2: Option<String>,
    /// Truncation depth K.
    #[arg(long)]
    depth: Option<usize>,
    /// Cyclic length M (0 = 2(K + nmax) + 2).
    #[arg(long)]
    cyclic: Option<usize>,
    /// Largest power checked.
    #[arg(long)]
    nmax: Option<usize>,
    /// Exponent p of the realization.
    #[arg(long)]
    p: Option<f64>,
    /// Report output path (written atomically).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Regression baseline path: written when missing, compared when
    /// present.
    #[arg(long)]
    pin: Option<PathBuf>,
    /// Include contour geometry in the report.
    #[arg(long)]
    dump_geometry: bool,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Classify an operator by spectrum placement and resolvent growth.
    Classify(CommonFlags),
    /// Evaluate f(T) by contour quadrature.
    Calc(CommonFlags),
    /// Evaluate a product function of a commuting pair.
    CalcPair(CommonFlags),
    /// Estimate the calculus constant over the default function corpus.
    Constant(CommonFlags),
    /// Two-sided transfer check with constant tables.
    Transfer(CommonFlags),
    /// Build and verify the isometric factorization of one operator.
    Dilate(CommonFlags),
    /// Build and verify the nested factorization of a commuting pair.
    DilateJoint(CommonFlags),
    /// Run the full verification battery.
    Suite(CommonFlags),
    /// Generate a deterministic operator and function corpus.
    GenCorpus {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = workbench::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long = "e-angle")]
        e_angles: Vec<f64>,
        #[arg(long, default_value_t = 0.3)]
        r: f64,
        #[arg(long, default_value_t = 0.8)]
        s: f64,
    },
}

fn build_config(command: RunCommand, flags: &CommonFlags) -> Result<ExperimentConfig, String> {
    let mut config = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
            serde_json::from_str(&text).map_err(|e| e.to_string())?
        }
        None => ExperimentConfig::default(),
    };
    config.command = command;
    if let Some(v) = &flags.matrix {
        config.matrix = Some(v.clone());
    }
    if let Some(v) = &flags.matrix2 {
        config.matrix2 = Some(v.clone());
    }
    if !flags.e_angles.is_empty() {
        config.e_angles = flags.e_angles.clone();
    }
    if let Some(v) = flags.r {
        config.r = v;
    }
    if let Some(v) = flags.u {
        config.u = v;
    }
    if let Some(v) = flags.s {
        config.s = v;
    }
    if let Some(v) = flags.theta {
        config.theta = v;
    }
    if let Some(v) = flags.tol {
        config.tol = v;
    }
    if let Some(v) = flags.seed {
        config.corpus_seed = v;
    }
    if let Some(v) = flags.corpus_size {
        config.corpus_size = v;
    }
    if let Some(v) = &flags.function {
        config.function = Some(rittlab::holofun::FunctionSpec::Builtin { builtin: v.clone() });
    }
    if let Some(v) = &flags.function2 {
        config.function2 = Some(rittlab::holofun::FunctionSpec::Builtin { builtin: v.clone() });
    }
    if let Some(v) = flags.depth {
        config.depth_k = v;
    }
    if let Some(v) = flags.cyclic {
        config.cyclic_m = v;
    }
    if let Some(v) = flags.nmax {
        config.nmax = v;
    }
    if let Some(v) = flags.p {
        config.p = v;
    }
    if let Some(v) = &flags.output {
        config.output = Some(v.clone());
    }
    if let Some(v) = &flags.pin {
        config.pin = Some(v.clone());
    }
    if flags.dump_geometry {
        config.dump_geometry = true;
    }
    Ok(config)
}

/// RITTLAB_THREADS caps the worker count for node-parallel quadrature and
/// corpus sweeps.
fn init_threads() {
    if let Ok(value) = std::env::var("RITTLAB_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rittlab::build_thread_pool(n);
            }
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    let (command, flags) = match &cli.command {
        CliCommand::Classify(f) => (RunCommand::Classify, f.clone()),
        CliCommand::Calc(f) => (RunCommand::Calc, f.clone()),
        CliCommand::CalcPair(f) => (RunCommand::CalcPair, f.clone()),
        CliCommand::Constant(f) => (RunCommand::Constant, f.clone()),
        CliCommand::Transfer(f) => (RunCommand::Transfer, f.clone()),
        CliCommand::Dilate(f) => (RunCommand::Dilate, f.clone()),
        CliCommand::DilateJoint(f) => (RunCommand::DilateJoint, f.clone()),
        CliCommand::Suite(f) => (RunCommand::Suite, f.clone()),
        CliCommand::GenCorpus {
            out,
            seed,
            dim,
            count,
            e_angles,
            r,
            s,
        } => {
            let angles = if e_angles.is_empty() {
                vec![0.0]
            } else {
                e_angles.clone()
            };
            let spec = CorpusSpec {
                dim: *dim,
                count: *count,
                e_angles: angles,
                r: *r,
                s: *s,
            };
            return match workbench::gen_corpus(*seed, &spec, out) {
                Ok(files) => {
                    println!("wrote {} corpus files under {}", files.len(), out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            };
        }
    };

    let config = match build_config(command, &flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match workbench::run(&config) {
        Ok(report) => {
            if config.command == RunCommand::Suite {
                if let serde_json::Value::Array(items) = &report.results {
                    for item in items {
                        let pass = item["pass"].as_bool().unwrap_or(false);
                        println!(
                            "[{}] {:>2} {} - {}",
                            if pass { "PASS" } else { "FAIL" },
                            item["id"],
                            item["name"].as_str().unwrap_or(""),
                            item["details"].as_str().unwrap_or("")
                        );
                    }
                }
            } else {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            }
            if report.failed {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
