//! `ckff` — generate, inspect, and verify controlled K-fusion frame systems.
//!
//! Exit codes: 0 all checks pass, 1 a verification failed, 2 invalid input
//! or configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use ckff_cli::document::{
    BoundsDocument, CheckDocument, MatrixDocument, PropagatedDocument, SpecDocument,
};
use ckff_cli::error::{CliError, Result};
use ckff_cli::generate::{diagonal_example, gen_instance, GenConfig};
use ckff_cli::suite::{run_suite, suite_pass, SuiteConfig, TheoremKind};
use ckff_core::{transforms, ControlledFrameSpec, Operator, Subspace, Tolerance};

const TOL_REL_ENV: &str = "CKFF_DEFAULT_TOL_REL";

#[derive(Debug, Parser)]
#[command(name = "ckff", version, about = "controlled K-fusion frame laboratory")]
struct Cli {
    /// Relative tolerance (overrides the CKFF_DEFAULT_TOL_REL environment
    /// variable and the built-in 1e-9).
    #[arg(long, global = true)]
    tol_rel: Option<f64>,

    /// Absolute tolerance floor.
    #[arg(long, global = true)]
    tol_abs: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded random instance.
    Gen(GenArgs),
    /// Build a truncation of the diagonal ℓ² example family.
    Example(ExampleArgs),
    /// Randomized check of given frame bounds against the definition.
    Check(CheckArgs),
    /// Optimal frame bounds and classification.
    Bounds(BoundsArgs),
    /// Transport the system through an invertible or unitary operator.
    Transform(TransformArgs),
    /// Perturbation check against a second subspace family.
    Perturb(PerturbArgs),
    /// Run the theorem verification suite.
    Suite(SuiteArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    dim: usize,
    /// Number of weighted subspaces.
    #[arg(long, default_value_t = 4)]
    subspaces: usize,
    #[arg(long, default_value_t = 2)]
    max_subdim: usize,
    /// Controller condition number.
    #[arg(long, default_value_t = 4.0)]
    cond: f64,
    #[arg(long)]
    k_rank: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Drop the positivity-respecting construction (negative tests).
    #[arg(long)]
    no_positivity: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the document to stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ExampleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 3.0)]
    beta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    lower: f64,
    #[arg(long)]
    upper: f64,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct TransformArgs {
    #[arg(long)]
    spec: PathBuf,
    /// JSON matrix document with the transport operator U.
    #[arg(long)]
    u: PathBuf,
    /// Use the unitary-corollary hypothesis set.
    #[arg(long)]
    corollary: bool,
    /// Write the transported spec here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct PerturbArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Spec document providing the perturbed subspace family.
    #[arg(long)]
    vspec: Option<PathBuf>,
    /// Build the perturbed family by enlarging each subspace by one seeded
    /// random direction instead.
    #[arg(long)]
    enlarge_seed: Option<u64>,
    /// Perturbation level R; defaults to the top eigenvalue of the
    /// difference form.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SuiteArgs {
    /// Comma-separated theorem names (defaults to the full registry).
    #[arg(long)]
    theorems: Option<String>,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    max_dim: usize,
    /// Write reports as JSON lines to this path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print reports as JSON lines to stdout.
    #[arg(long)]
    json: bool,
}

fn resolve_tolerance(cli: &Cli) -> Result<Tolerance> {
    let mut rel = ckff_core::tol::DEFAULT_REL;
    if let Ok(text) = std::env::var(TOL_REL_ENV) {
        rel = text.trim().parse::<f64>().map_err(|_| {
            CliError::Config(format!("{TOL_REL_ENV} must be a double, got `{text}`"))
        })?;
    }
    if let Some(flag) = cli.tol_rel {
        rel = flag;
    }
    let abs = cli.tol_abs.unwrap_or(ckff_core::tol::DEFAULT_ABS);
    Tolerance::new(rel, abs).map_err(|e| CliError::Config(e.to_string()))
}

fn load_spec(path: &Path, tol: &Tolerance) -> Result<ControlledFrameSpec> {
    let text = fs::read_to_string(path)?;
    let doc = SpecDocument::from_json(&text)?;
    doc.to_spec(tol)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn emit_spec(doc: &SpecDocument, out: Option<&Path>, json: bool) -> Result<()> {
    let text = doc.to_json()?;
    match out {
        Some(path) => {
            fs::write(path, &text)?;
            if json {
                print!("{text}");
            } else {
                println!("wrote {}", path.display());
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// Core errors raised while running a verification count as verification
/// failures (exit code 1), not configuration mistakes.
fn as_verification(err: ckff_core::Error) -> CliError {
    CliError::Verification(err.to_string())
}

fn cmd_gen(args: &GenArgs, tol: &Tolerance) -> Result<()> {
    let cfg = GenConfig {
        dim: args.dim,
        n_subspaces: args.subspaces,
        max_subdim: args.max_subdim.min(args.dim.max(1)),
        controller_cond: args.cond,
        k_rank: args.k_rank.unwrap_or(args.dim),
        seed: args.seed,
        positivity: !args.no_positivity,
    };
    let spec = gen_instance(&cfg, tol)?;
    let mut doc = SpecDocument::from_spec(&spec);
    doc.metadata.insert("generator".into(), "gen".into());
    doc.metadata.insert("seed".into(), args.seed.to_string());
    emit_spec(&doc, args.out.as_deref(), args.json)
}

fn cmd_example(args: &ExampleArgs, tol: &Tolerance) -> Result<()> {
    let spec = diagonal_example(args.n, args.alpha, args.beta, tol)?;
    let mut doc = SpecDocument::from_spec(&spec);
    doc.metadata.insert("generator".into(), "example".into());
    emit_spec(&doc, args.out.as_deref(), args.json)
}

fn cmd_check(args: &CheckArgs, tol: &Tolerance) -> Result<()> {
    let spec = load_spec(&args.spec, tol)?;
    let report = spec
        .verify_definition(args.lower, args.upper, args.trials, args.seed, tol)
        .map_err(as_verification)?;
    let doc = CheckDocument::from_report(args.lower, args.upper, &report);
    if args.json {
        println!("{}", serde_json::to_string(&doc)?);
    } else {
        println!(
            "check: {} ({} trials, {} violations, worst margins {:.3e} / {:.3e})",
            if doc.pass { "pass" } else { "FAIL" },
            doc.trials,
            doc.violations,
            doc.worst_lower_margin,
            doc.worst_upper_margin
        );
    }
    if doc.pass {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "{} of {} sampled vectors violate the stated bounds",
            doc.violations, doc.trials
        )))
    }
}

fn cmd_bounds(args: &BoundsArgs, tol: &Tolerance) -> Result<()> {
    let spec = load_spec(&args.spec, tol)?;
    let report = spec.classify(tol).map_err(as_verification)?;
    let doc = BoundsDocument::from_report(&report);
    if args.json {
        println!("{}", serde_json::to_string(&doc)?);
    } else {
        println!(
            "bounds: lower {:.12e}, upper {:.12e}, frame: {}, parseval: {}",
            doc.lower, doc.upper, doc.is_frame, doc.is_parseval
        );
    }
    Ok(())
}

fn cmd_transform(args: &TransformArgs, tol: &Tolerance) -> Result<()> {
    let spec = load_spec(&args.spec, tol)?;
    let u_text = fs::read_to_string(&args.u)?;
    let u_doc: MatrixDocument = serde_json::from_str(&u_text)?;
    let u = u_doc
        .to_operator()
        .map_err(|e| CliError::Config(format!("{}: {e}", args.u.display())))?;
    let (new_spec, bounds) = if args.corollary {
        transforms::unitary_transform_corollary(&spec, &u, tol).map_err(as_verification)?
    } else {
        transforms::unitary_transform(&spec, &u, tol).map_err(as_verification)?
    };
    let propagated = PropagatedDocument::from_bounds(&bounds);
    if let Some(path) = &args.out {
        fs::write(path, SpecDocument::from_spec(&new_spec).to_json()?)?;
    }
    if args.json {
        println!("{}", serde_json::to_string(&propagated)?);
    } else {
        println!(
            "transform ({}): lower {:.12e}, upper {:.12e}",
            propagated.source, propagated.lower, propagated.upper
        );
    }
    Ok(())
}

fn enlarged_family(
    spec: &ControlledFrameSpec,
    seed: u64,
    tol: &Tolerance,
) -> Result<Vec<Subspace>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = spec.dim();
    spec.system()
        .items()
        .iter()
        .map(|(w, _)| {
            if w.dim() >= n {
                return Ok(w.clone());
            }
            let direction = ckff_core::probe::unit_vector(&mut rng, n);
            let mut columns = ckff_core::Matrix::zeros(n, w.dim() + 1);
            columns.view_mut((0, 0), (n, w.dim())).copy_from(w.basis());
            columns.set_column(w.dim(), &direction);
            Ok(Subspace::orthonormalize_columns(&columns, tol))
        })
        .collect()
}

fn cmd_perturb(args: &PerturbArgs, tol: &Tolerance) -> Result<()> {
    let spec = load_spec(&args.spec, tol)?;
    let subspaces_v: Vec<Subspace> = match (&args.vspec, args.enlarge_seed) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)?;
            let doc = SpecDocument::from_json(&text)?;
            let v_spec = doc
                .to_spec(tol)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            v_spec
                .system()
                .items()
                .iter()
                .map(|(w, _)| w.clone())
                .collect()
        }
        (None, Some(seed)) => enlarged_family(&spec, seed, tol)?,
        _ => {
            return Err(CliError::Config(
                "provide exactly one of --vspec or --enlarge-seed".into(),
            ))
        }
    };

    let report = spec.classify(tol).map_err(as_verification)?;
    let r = match args.r {
        Some(r) => r,
        None => {
            // Default R: top eigenvalue of the difference form.
            let cp_adj = spec.controller_prime().matrix().adjoint();
            let mut d = ckff_core::Matrix::zeros(spec.dim(), spec.dim());
            for ((w, weight), v) in spec.system().items().iter().zip(&subspaces_v) {
                let delta = v.projection().matrix() - w.projection().matrix();
                d += (&cp_adj * delta * spec.controller().matrix()).scale(weight * weight);
            }
            let d = Operator::new(d).map_err(as_verification)?;
            let (_, d_max) = d.pos_bounds(tol).map_err(as_verification)?;
            d_max
        }
    };
    let bounds = transforms::perturb_check(
        &spec,
        &subspaces_v,
        r,
        report.lower,
        report.upper,
        tol,
    )
    .map_err(as_verification)?;

    let propagated = PropagatedDocument::from_bounds(&bounds);
    if args.json {
        println!("{}", serde_json::to_string(&propagated)?);
    } else {
        println!(
            "perturb: R {:.6e}, lower {:.12e} on range(K), Bessel {:.12e}",
            r, propagated.lower, propagated.upper
        );
    }
    Ok(())
}

fn cmd_suite(args: &SuiteArgs, tol: &Tolerance) -> Result<()> {
    let theorems = match &args.theorems {
        None => TheoremKind::REGISTRY.to_vec(),
        Some(list) => list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| TheoremKind::from_str(s.trim()))
            .collect::<Result<Vec<_>>>()?,
    };
    let mut config = SuiteConfig::new(theorems, args.instances, args.seed, args.max_dim);
    config.tol = *tol;
    let reports = run_suite(&config)?;

    let mut lines = String::new();
    for report in &reports {
        lines.push_str(&serde_json::to_string(report)?);
        lines.push('\n');
    }
    if let Some(path) = &args.out {
        fs::write(path, &lines)?;
    }
    if args.json {
        print!("{lines}");
    } else {
        let failed: Vec<&str> = reports
            .iter()
            .filter(|r| !r.pass)
            .map(|r| r.instance_id.as_str())
            .collect();
        println!(
            "suite: {}/{} instances pass",
            reports.len() - failed.len(),
            reports.len()
        );
        if !failed.is_empty() {
            println!("failed: {}", failed.join(", "));
        }
    }
    if suite_pass(&reports) {
        Ok(())
    } else {
        Err(CliError::Verification("suite reported failures".into()))
    }
}

fn run(cli: &Cli) -> Result<()> {
    let tol = resolve_tolerance(cli)?;
    match &cli.command {
        Command::Gen(args) => cmd_gen(args, &tol),
        Command::Example(args) => cmd_example(args, &tol),
        Command::Check(args) => cmd_check(args, &tol),
        Command::Bounds(args) => cmd_bounds(args, &tol),
        Command::Transform(args) => cmd_transform(args, &tol),
        Command::Perturb(args) => cmd_perturb(args, &tol),
        Command::Suite(args) => cmd_suite(args, &tol),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                CliError::Verification(_) => ExitCode::from(1),
                CliError::Core(_) => ExitCode::from(1),
                CliError::Config(_) | CliError::Io(_) | CliError::Json(_) => ExitCode::from(2),
            }
        }
    }
}
