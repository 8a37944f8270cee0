use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use bracketflow::experiments::{run_collapse_experiment, run_uniqueness_experiment, UniquenessOptions};
use bracketflow::flow::{self, FlowSpec, Variant};
use bracketflow::stratification::{beta_decomposition, check_gauged_with, random_qbeta_gauge};
use bracketflow::{catalog, io, samples, soliton, BracketTensor, Error};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Parser)]
#[command(name = "bracketflow", version, about = "Bracket flows on solvable Lie algebras")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Source {
    /// Bracket JSON file.
    #[arg(long, conflicts_with = "name")]
    input: Option<PathBuf>,
    /// Catalog name (see `catalog`).
    #[arg(long)]
    name: Option<String>,
    /// Catalog parameter: lambda, or the dimension for heisenberg/abelian.
    #[arg(long)]
    param: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral type, flatness and curvature.
    Classify(Source),
    /// Stratum label beta of the bracket.
    Stratum(Source),
    /// Integrate a bracket flow and write the monitors as CSV.
    Flow(FlowArgs),
    /// Soliton certificate and, for solitons, the normalized identities.
    SolitonCheck(Source),
    /// Spectrum of the linearized flow at a soliton.
    Linearize(Source),
    /// Compare the orbit fingerprints of two brackets.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = soliton::FP_TOL)]
        tol: f64,
    },
    /// Flow random metrics on one algebra and compare the limits.
    Uniqueness {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long, default_value_t = 100.0)]
        t_end: f64,
    },
    /// Raw flow with the Type-III monitors and a collapse verdict.
    Collapse {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 200.0)]
        t_end: f64,
        /// Start from a random metric drawn with `--seed`.
        #[arg(long)]
        random_metric: bool,
    },
    /// List catalog names, or print one bracket as JSON.
    Catalog {
        name: Option<String>,
        #[arg(long)]
        param: Option<f64>,
    },
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    source: Source,
    /// raw, gauged, scalstar, scal or normalized-ungauged.
    #[arg(long, default_value = "scalstar")]
    variant: String,
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-9)]
    rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    abs_tol: f64,
    #[arg(long, default_value_t = 0.1)]
    record_every: f64,
    /// Integrator step budget, accepted plus rejected.
    #[arg(long, default_value_t = 5_000_000)]
    max_steps: usize,
    /// Move the start by a random gauge drawn with `--seed`.
    #[arg(long)]
    random_gauge: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON-lines file with one bracket per sample.
    #[arg(long)]
    snapshots: Option<PathBuf>,
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

fn load(source: &Source) -> anyhow::Result<BracketTensor> {
    match (&source.input, &source.name) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(io::bracket_from_json(&text)?)
        }
        (None, Some(name)) => Ok(catalog::lookup(name, source.param)?.bracket),
        (None, None) => Err(Error::Parse("give --input FILE or --name NAME".into()).into()),
    }
}

/// Writes to stdout; a closed pipe downstream is not an error.
fn print(value: &serde_json::Value) {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Classify(src) => {
            let mu = load(&src)?;
            let report = bracketflow::classify_type(&mu)?;
            let flat = bracketflow::is_flat_bracket(&mu)?;
            let pack = bracketflow::curvature_pack(&mu)?;
            print(&json!({ "type": report, "flat": flat, "curvature": pack.summary() }));
        }
        Command::Stratum(src) => {
            let mu = load(&src)?;
            print(&serde_json::to_value(bracketflow::stratum_label(&mu)?.summary())?);
        }
        Command::Flow(args) => return run_flow(args, cli.seed),
        Command::SolitonCheck(src) => {
            let mu = load(&src)?;
            let cert = bracketflow::soliton_residual(&mu)?;
            let normalized = if cert.kind == bracketflow::SolitonKind::NotSoliton {
                serde_json::Value::Null
            } else {
                let ns = bracketflow::normalize_soliton(&mu, &cert)?;
                let checks = soliton::structural_checks(&ns.mu)?;
                json!({
                    "scale": ns.scale,
                    "beta_plus_derivation_residual": ns.derivation_residual,
                    "beta_plus_min_eigenvalue": ns.min_eigenvalue,
                    "image_vs_nilradical": ns.image_residual,
                    "structural": checks,
                    "bracket": io::BracketFile::from_bracket(&ns.mu),
                })
            };
            print(&json!({ "certificate": cert.summary(), "normalized": normalized }));
        }
        Command::Linearize(src) => {
            let mu = load(&src)?;
            let cert = bracketflow::soliton_residual(&mu)?;
            let ns = bracketflow::normalize_soliton(&mu, &cert)?;
            let (_, rotated, label) = ns.diagonalized()?;
            let dec = beta_decomposition(&label)?;
            print(&serde_json::to_value(bracketflow::l_operator(&rotated, &dec)?)?);
        }
        Command::Compare { a, b, tol } => {
            let fa = bracketflow::fingerprint(&load(&Source { input: Some(a), name: None, param: None })?)?;
            let fb = bracketflow::fingerprint(&load(&Source { input: Some(b), name: None, param: None })?)?;
            let distance = fa.distance(&fb);
            let verdict = if distance <= tol {
                "consistent with a single orthogonal orbit"
            } else {
                "different orbits"
            };
            print(&json!({ "a": fa, "b": fb, "distance": distance, "tol": tol, "verdict": verdict }));
        }
        Command::Uniqueness { source, seeds, t_end } => {
            let mu = load(&source)?;
            let opts = UniquenessOptions {
                seeds,
                base_seed: cli.seed,
                t_end,
                ..Default::default()
            };
            let report = run_uniqueness_experiment(&mu, &opts)?;
            let failed = !report.failing_seeds.is_empty();
            print(&serde_json::to_value(report)?);
            if failed {
                return Ok(EXIT_NONCONVERGENCE);
            }
        }
        Command::Collapse { source, t_end, random_metric } => {
            let mu = load(&source)?;
            let seed = random_metric.then_some(cli.seed);
            print(&serde_json::to_value(run_collapse_experiment(&mu, t_end, seed)?)?);
        }
        Command::Catalog { name, param } => match name {
            None => {
                let mut out = std::io::stdout().lock();
                for n in catalog::NAMES {
                    let _ = writeln!(out, "{n}");
                }
            }
            Some(name) => {
                let entry = catalog::lookup::<f64>(&name, param)?;
                let _ = writeln!(std::io::stdout().lock(), "{}", io::bracket_to_json(&entry.bracket));
            }
        },
    }
    Ok(0)
}

fn run_flow(args: FlowArgs, seed: u64) -> anyhow::Result<u8> {
    let mu = load(&args.source)?;
    let variant = Variant::parse(&args.variant)?;
    let labeled = matches!(
        variant,
        Variant::Gauged | Variant::ScalStarNormalized | Variant::ScalNormalized
    );
    let label = if labeled { Some(bracketflow::stratum_label(&mu)?) } else { None };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu0 = match (&label, args.random_gauge) {
        (Some(l), true) => {
            let dec = beta_decomposition(l)?;
            if !check_gauged_with(&mu, &dec).in_v_geq0 {
                return Err(Error::GaugeMismatch("input is not gauged for its own label".into()).into());
            }
            bracketflow::act(&random_qbeta_gauge::<f64, _>(&mut rng, &dec, 0.5), &mu)?
        }
        (None, true) => bracketflow::act(&samples::random_gl::<f64, _>(&mut rng, mu.dim()), &mu)?,
        (_, false) => mu,
    };
    let mut spec = FlowSpec::new(variant, args.t_end)
        .with_tolerances(args.rel_tol, args.abs_tol)
        .with_record_every(args.record_every);
    spec.label = label;
    spec.max_steps = args.max_steps;
    let traj = flow::integrate(&mu0, &spec)?;
    if let Some(path) = &args.out {
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        io::write_trajectory_csv(&traj, &mut w)?;
        w.flush()?;
    }
    if let Some(path) = &args.snapshots {
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        io::write_snapshots_jsonl(&traj, &mut w)?;
        w.flush()?;
    }
    let last = traj.last();
    print(&json!({
        "variant": variant,
        "termination": traj.termination,
        "failure": traj.failure,
        "samples": traj.samples.len(),
        "accepted_steps": traj.accepted_steps,
        "rejected_steps": traj.rejected_steps,
        "t": last.t,
        "final": last.monitors,
        "max_scal_drift": traj.max_scal_drift,
        "max_jacobi_rel": traj.max_jacobi_rel,
        "orbit_invariant_violation": traj.invariant_violation,
        "bracket": io::BracketFile::from_bracket(&last.mu),
    }));
    Ok(match traj.termination {
        flow::Termination::ReachedTEnd | flow::Termination::Converged => 0,
        flow::Termination::Diverged | flow::Termination::StepFailure => EXIT_NONCONVERGENCE,
    })
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::MaxStepsExceeded { .. } | Error::StepFailure { .. } | Error::Diverged { .. }) => EXIT_NONCONVERGENCE,
        _ => EXIT_VALIDATION,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
