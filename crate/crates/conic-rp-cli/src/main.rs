//! `conic-rp`: generate, project, solve, and benchmark symmetric conic
//! programs with random-projection constraint reduction.
//!
//! Exit codes: 0 on success (including clean `primal_infeasible`
//! verdicts), 1 on configuration or I/O errors, 2 when any solve in the
//! invocation ended with a numerical failure.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use conic_rp::bounds::{cone_unit_diameter, opnorm_bound, slice_width};
use conic_rp::harness::{
    emit_csv, emit_infeasibility_csv, emit_json, run_infeasibility_trials, run_pipeline,
    ExperimentConfig, InstanceSource, LoadedInstance,
};
use conic_rp::instgen::{CostKind, GenSpec};
use conic_rp::jordan::{BlockSpec, ConeSpec};
use conic_rp::model::ConicProgram;
use conic_rp::pipeline::project_program;
use conic_rp::sketch::{embed_dimension, sample_rp, SketchFamily};
use conic_rp::solver::{lookup_solver, verify_certificate, SolveResult, SolveStatus};

#[derive(Parser)]
#[command(
    name = "conic-rp",
    version,
    about = "Random-projection constraint reduction for symmetric conic programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance and write it as JSON.
    Generate(GenerateArgs),
    /// Solve a program and print the result as JSON.
    Solve(SolveArgs),
    /// Project a program's equality constraints through a fresh sketch.
    Project(ProjectArgs),
    /// Full experiment: solve, then repeatedly sketch/project/solve/retrieve.
    Pipeline(PipelineArgs),
    /// Infeasibility-detection sweep over a list of distortions.
    InfeasTrial(InfeasArgs),
    /// Geometric quantities entering the error bounds, as JSON.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Cone, e.g. `psd:10`, `orthant:6`, or `orthant:3+lorentz:4+psd:5`.
    #[arg(long)]
    cone: String,
    /// Number of equality constraints.
    #[arg(long)]
    m: usize,
    /// Fraction of nonzero coordinates per block of each row.
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cost vector: `identity` or `random`.
    #[arg(long, default_value = "identity")]
    cost: String,
    /// Trace bound as a multiple of the witness trace (or cone degree).
    #[arg(long, default_value_t = 2.0)]
    theta_factor: f64,
    /// Make the instance infeasible with a known Farkas certificate.
    #[arg(long)]
    infeasible: bool,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Program file: JSON, or SDPA sparse (`.dat-s`) with --theta.
    #[arg(long)]
    input: PathBuf,
    /// Trace bound, required for SDPA inputs.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value = "builtin")]
    solver: String,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Include the primal/dual vectors in the output.
    #[arg(long)]
    solution: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    theta: Option<f64>,
    /// Target distortion of the sketch.
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    /// Constant of the embedding dimension rule.
    #[arg(long)]
    c0: Option<f64>,
    /// Embedding dimension override.
    #[arg(long)]
    d: Option<usize>,
    /// Sketch family: `sparse`, `gaussian`, or `identity`.
    #[arg(long, default_value = "sparse")]
    family: String,
    /// Nonzero fraction for the sparse family.
    #[arg(long)]
    density: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// Instance selection shared by `pipeline`, `infeas-trial`, and `bounds`:
/// either a file or generator parameters.
#[derive(Args)]
struct InstanceArgs {
    /// Program file (JSON, or SDPA sparse with --theta).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    theta: Option<f64>,
    /// Generator cone (see `generate --help` for the syntax).
    #[arg(long)]
    cone: Option<String>,
    /// Generator constraint count.
    #[arg(long)]
    m: Option<usize>,
    /// Generator row density.
    #[arg(long, default_value_t = 0.5)]
    gen_density: f64,
    #[arg(long, default_value_t = 0)]
    gen_seed: u64,
    #[arg(long, default_value = "identity")]
    cost: String,
    #[arg(long, default_value_t = 2.0)]
    theta_factor: f64,
    /// Generate an infeasible instance.
    #[arg(long)]
    infeasible: bool,
}

/// Experiment knobs; every flag overrides the same field of --config.
#[derive(Args)]
struct ExperimentArgs {
    /// JSON file with an `ExperimentConfig` (and optionally an
    /// `instance` source).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    /// Embedding dimension override.
    #[arg(long)]
    d: Option<usize>,
    /// Sketch family: `sparse`, `gaussian`, or `identity`.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Constant `u` of the feasibility/retrieval bounds.
    #[arg(long)]
    u: Option<f64>,
    /// Constant `C₂` in front of the Gaussian width.
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    width_samples: Option<usize>,
    #[arg(long)]
    diameter_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Measure CPU seconds (non-reproducible columns).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct InfeasArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Comma-separated distortions to sweep, e.g. `0.05,0.1,0.2`.
    #[arg(long, value_delimiter = ',', required = true)]
    epsilons: Vec<f64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

/// On-disk experiment config: the harness config plus an optional
/// instance source.
#[derive(Default, Deserialize)]
#[serde(default)]
struct FileConfig {
    instance: Option<InstanceSource>,
    #[serde(flatten)]
    experiment: ExperimentConfig,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    std::process::exit(0);
                }
                _ => {
                    eprint!("{err}");
                    std::process::exit(1);
                }
            }
        }
    };
    match run(cli) {
        Ok(numerical) => std::process::exit(if numerical { 2 } else { 0 }),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

/// Returns whether any solve ended in a numerical failure.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Project(args) => cmd_project(args),
        Command::Pipeline(args) => cmd_pipeline(args),
        Command::InfeasTrial(args) => cmd_infeas(args),
        Command::Bounds(args) => cmd_bounds(args),
    }
}

fn parse_cone(text: &str) -> Result<ConeSpec> {
    let mut blocks = Vec::new();
    for part in text.split('+') {
        let (kind, size) = part
            .split_once(':')
            .with_context(|| format!("cone block `{part}` is not `kind:size`"))?;
        let size: usize = size
            .trim()
            .parse()
            .with_context(|| format!("cone block `{part}` has a bad size"))?;
        blocks.push(match kind.trim().to_ascii_lowercase().as_str() {
            "orthant" => BlockSpec::Orthant { dim: size },
            "lorentz" => BlockSpec::Lorentz { dim: size },
            "psd" => BlockSpec::Psd { side: size },
            other => bail!("unknown cone block kind `{other}` (orthant|lorentz|psd)"),
        });
    }
    ConeSpec::new(blocks).context("invalid cone")
}

fn parse_family(text: &str) -> Result<SketchFamily> {
    Ok(match text.to_ascii_lowercase().as_str() {
        "sparse" | "achlioptas" | "achlioptas_sparse" => SketchFamily::AchlioptasSparse,
        "gaussian" => SketchFamily::Gaussian,
        "identity" => SketchFamily::Identity,
        other => bail!("unknown sketch family `{other}` (sparse|gaussian|identity)"),
    })
}

fn parse_cost(text: &str) -> Result<CostKind> {
    Ok(match text.to_ascii_lowercase().as_str() {
        "identity" => CostKind::Identity,
        "random" => CostKind::Random,
        other => bail!("unknown cost kind `{other}` (identity|random)"),
    })
}

fn write_output(path: Option<&PathBuf>, content: &str) -> Result<()> {
    match path {
        Some(path) => fs::write(path, content)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{content}"),
    }
    Ok(())
}

impl InstanceArgs {
    /// CLI flags win over the config file's `instance` entry.
    fn resolve(&self, fallback: Option<InstanceSource>, infeasible_default: bool) -> Result<LoadedInstance> {
        if let Some(path) = &self.input {
            let source = InstanceSource::File {
                path: path.to_string_lossy().into_owned(),
                theta: self.theta,
            };
            return Ok(source.load()?);
        }
        if let Some(cone) = &self.cone {
            let m = self.m.context("--cone also needs --m")?;
            let mut spec = GenSpec::new(parse_cone(cone)?, m, self.gen_density, self.gen_seed);
            spec.cost = parse_cost(&self.cost)?;
            spec.theta_factor = self.theta_factor;
            let source = InstanceSource::Gen {
                spec,
                infeasible: self.infeasible || infeasible_default,
            };
            return Ok(source.load()?);
        }
        if let Some(source) = fallback {
            return Ok(source.load()?);
        }
        bail!("no instance: pass --input, or --cone with --m, or a --config with an `instance`")
    }
}

impl ExperimentArgs {
    fn build(&self) -> Result<(ExperimentConfig, Option<InstanceSource>)> {
        let (mut cfg, instance) = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let file: FileConfig = serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?;
                (file.experiment, file.instance)
            }
            None => (ExperimentConfig::default(), None),
        };
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.c0 {
            cfg.c0 = v;
        }
        if self.d.is_some() {
            cfg.d_override = self.d;
        }
        if let Some(v) = &self.family {
            cfg.family = parse_family(v)?;
        }
        if let Some(v) = self.density {
            cfg.density = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = &self.solver {
            cfg.solver.name = v.clone();
        }
        if let Some(v) = self.tol {
            cfg.solver.options.tol = v;
        }
        if let Some(v) = self.max_iter {
            cfg.solver.options.max_iter = v;
        }
        if let Some(v) = self.u {
            cfg.u = v;
        }
        if let Some(v) = self.c2 {
            cfg.c2 = v;
        }
        if let Some(v) = self.width_samples {
            cfg.width_samples = v;
        }
        if let Some(v) = self.diameter_samples {
            cfg.diameter_samples = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.timing {
            cfg.timing = true;
        }
        Ok((cfg, instance))
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<bool> {
    let mut spec = GenSpec::new(parse_cone(&args.cone)?, args.m, args.density, args.seed);
    spec.cost = parse_cost(&args.cost)?;
    spec.theta_factor = args.theta_factor;
    let source = InstanceSource::Gen { spec, infeasible: args.infeasible };
    let instance = source.load()?;
    let mut buf = Vec::new();
    conic_rp::io::write_program(&mut buf, &instance.program)?;
    write_output(args.output.as_ref(), &String::from_utf8(buf).expect("json is utf-8"))?;
    Ok(false)
}

#[derive(Serialize)]
struct CertificateOutput {
    y_norm: f64,
    nu: f64,
    normalization: f64,
    slack_lambda_max: f64,
    verified: bool,
}

#[derive(Serialize)]
struct SolveOutput {
    status: &'static str,
    objective: Option<f64>,
    iterations: usize,
    primal_eq: f64,
    trace_slack: f64,
    dual_lambda_min: f64,
    gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<CertificateOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
}

fn solve_output(program: &ConicProgram, result: &SolveResult, solution: bool) -> SolveOutput {
    SolveOutput {
        status: result.status.as_str(),
        objective: result.objective,
        iterations: result.iterations,
        primal_eq: result.residuals.primal_eq,
        trace_slack: result.residuals.trace_slack,
        dual_lambda_min: result.residuals.dual_lambda_min,
        gap: result.residuals.gap,
        certificate: result.certificate.as_ref().map(|c| CertificateOutput {
            y_norm: c.y.norm(),
            nu: c.nu,
            normalization: c.normalization,
            slack_lambda_max: c.slack_lambda_max,
            verified: verify_certificate(program, c),
        }),
        x: solution
            .then(|| result.x.as_ref().map(|x| x.coords().iter().cloned().collect()))
            .flatten(),
        y: solution
            .then(|| result.y.as_ref().map(|y| y.iter().cloned().collect()))
            .flatten(),
        nu: solution.then_some(result.nu).flatten(),
    }
}

fn cmd_solve(args: SolveArgs) -> Result<bool> {
    let program = conic_rp::io::load_instance(&args.input, args.theta)?;
    let solver = lookup_solver(&args.solver)
        .with_context(|| format!("unknown solver `{}`", args.solver))?;
    let mut options = conic_rp::solver::SolverOptions::default();
    if let Some(tol) = args.tol {
        options.tol = tol;
    }
    if let Some(max_iter) = args.max_iter {
        options.max_iter = max_iter;
    }
    let result = solver.solve(&program, &options);
    let out = solve_output(&program, &result, args.solution);
    write_output(
        args.output.as_ref(),
        &(serde_json::to_string_pretty(&out).expect("output serializes") + "\n"),
    )?;
    Ok(result.status == SolveStatus::Numerical)
}

fn cmd_project(args: ProjectArgs) -> Result<bool> {
    let program = conic_rp::io::load_instance(&args.input, args.theta)?;
    let d = match args.d {
        Some(d) => d,
        None => embed_dimension(
            program.m(),
            args.epsilon,
            args.c0.unwrap_or(conic_rp::sketch::DEFAULT_C0),
        )?,
    };
    let family = parse_family(&args.family)?;
    let density = args.density.unwrap_or(conic_rp::sketch::DEFAULT_SKETCH_DENSITY);
    let sketch = sample_rp(d, program.m(), family, args.seed, density, args.epsilon)?;
    let source_id = args
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned());
    let projected = project_program(&program, &sketch, source_id)?;
    let mut buf = Vec::new();
    projected.write(&mut buf)?;
    write_output(args.output.as_ref(), &String::from_utf8(buf).expect("json is utf-8"))?;
    Ok(false)
}

fn cmd_pipeline(args: PipelineArgs) -> Result<bool> {
    let (cfg, config_instance) = args.experiment.build()?;
    let instance = args.instance.resolve(config_instance, false)?;
    let report = run_pipeline(&instance.id, &instance.program, &cfg)?;
    let content = match args.format {
        OutputFormat::Csv => emit_csv(&report),
        OutputFormat::Json => emit_json(&report) + "\n",
    };
    write_output(args.output.as_ref(), &content)?;
    let numerical = report.full.status == SolveStatus::Numerical
        || report.trials.iter().any(|t| t.status == SolveStatus::Numerical);
    Ok(numerical)
}

fn cmd_infeas(args: InfeasArgs) -> Result<bool> {
    let (cfg, config_instance) = args.experiment.build()?;
    let instance = args.instance.resolve(config_instance, true)?;
    let cert_norm = instance.certificate.as_ref().map(|c| c.y.norm());
    let points =
        run_infeasibility_trials(&instance.program, cert_norm, &args.epsilons, &cfg)?;
    let content = match args.format {
        OutputFormat::Csv => emit_infeasibility_csv(&instance.id, &points),
        OutputFormat::Json => {
            serde_json::to_string_pretty(&points).expect("points serialize") + "\n"
        }
    };
    write_output(args.output.as_ref(), &content)?;
    Ok(points.iter().any(|p| p.numerical > 0))
}

#[derive(Serialize)]
struct BoundsOutput {
    instance: String,
    m: usize,
    n: usize,
    d: usize,
    epsilon: f64,
    theta: f64,
    width: conic_rp::bounds::WidthEstimate,
    diameter: conic_rp::bounds::DiameterEstimate,
    sigma_max: f64,
    sigma_min: f64,
    kappa: f64,
    rank: usize,
    opnorm_bound: f64,
    q_half_norm: f64,
    b_norm: f64,
    c_norm: f64,
}

fn cmd_bounds(args: BoundsArgs) -> Result<bool> {
    let (cfg, config_instance) = args.experiment.build()?;
    let instance = args.instance.resolve(config_instance, false)?;
    let program = &instance.program;
    let operator = program.operator();
    let d = match cfg.d_override {
        Some(d) => d,
        None => embed_dimension(program.m(), cfg.epsilon, cfg.c0)?,
    };
    let out = BoundsOutput {
        instance: instance.id.clone(),
        m: program.m(),
        n: program.n(),
        d,
        epsilon: cfg.epsilon,
        theta: program.theta,
        width: slice_width(program.spec(), cfg.width_samples, cfg.seed),
        diameter: cone_unit_diameter(program.spec(), cfg.diameter_samples, cfg.seed),
        sigma_max: operator.sigma_max(),
        sigma_min: operator.sigma_min(),
        kappa: operator.condition_number(),
        rank: operator.rank(),
        opnorm_bound: opnorm_bound(program),
        q_half_norm: program.spec().q_half_norm(),
        b_norm: program.b.norm(),
        c_norm: program.c.coords().norm(),
    };
    write_output(
        args.output.as_ref(),
        &(serde_json::to_string_pretty(&out).expect("output serializes") + "\n"),
    )?;
    Ok(false)
}
