//! Experiment driver: batches of (sketch, project, solve, retrieve) trials
//! with bound reports, plus infeasibility-detection sweeps, emitted as CSV
//! or JSON.
//!
//! CSV columns, in this fixed order:
//!
//! ```text
//! instance,row,m,n,d,epsilon,status,v_full,v_reduced,v_retrieved,
//! gap_measured,gap_bound,gap_holds,feas_measured,feas_bound,feas_holds,
//! cone_measured,cone_bound,cone_holds,obj_measured,obj_bound,obj_holds,
//! residual_after,dual_lift_lambda_min,iterations,
//! cpu_sample,cpu_project,cpu_solve,cpu_retrieve,cpu_total,flags
//! ```
//!
//! `row` is the trial index, then two aggregate rows `mean` and `std`
//! (sample standard deviation) over the numeric columns, where boolean
//! columns count as 0/1. Floats print as `{:.9e}`, CPU seconds as
//! `{:.3}`. With `timing` disabled every CPU cell is exactly `0.000`, so
//! repeated runs with equal configs produce byte-identical files; with it
//! enabled only the five CPU columns vary between runs.
//!
//! All randomness (sketches, width/diameter sampling) derives from the
//! config's master seed, so trial `t` sees the same sketch no matter how
//! the rayon worker pool schedules it.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{
    cone_unit_diameter, eval_infeasibility_condition, slice_width, BoundContext,
    DiameterEstimate, ErrorReport, InfeasibilityCondition, WidthEstimate, DEFAULT_C2, DEFAULT_U,
};
use crate::instgen::{generate_feasible, generate_infeasible, GenError, GenSpec};
use crate::io::{load_instance, FormatError};
use crate::jordan::AlgebraElement;
use crate::model::{ConicProgram, LinearOperator};
use crate::pipeline::{project_program, retrieve_solution, PipelineError};
use crate::seeds;
use crate::sketch::{embed_dimension, sample_rp, SketchError, SketchFamily, DEFAULT_C0};
use crate::solver::{lookup_solver, Certificate, ConicSolver, SolveStatus, SolverOptions};

const STREAM_TRIAL_BASE: u64 = 1 << 40;
const STREAM_WIDTH_SEED: u64 = 2 << 40;
const STREAM_DIAM_SEED: u64 = 3 << 40;
const STREAM_INFEAS_BASE: u64 = 4 << 40;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown solver `{0}`")]
    UnknownSolver(String),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// Which registered solver to use and with what options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub name: String,
    pub options: SolverOptions,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { name: "builtin".to_string(), options: SolverOptions::default() }
    }
}

/// Full experiment recipe. Every field has a default, so a JSON config
/// may specify any subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Distortion target of the sketches.
    pub epsilon: f64,
    /// Constant of the embedding dimension rule.
    pub c0: f64,
    /// Fixes the embedding dimension, bypassing the rule.
    pub d_override: Option<usize>,
    pub family: SketchFamily,
    /// Nonzero fraction for the sparse family.
    pub density: f64,
    /// Independent sketch draws per instance.
    pub trials: usize,
    pub solver: SolverConfig,
    /// Constant `u` of the feasibility/retrieval bounds.
    pub u: f64,
    /// Constant `C₂` in front of the Gaussian width.
    pub c2: f64,
    /// Monte Carlo samples for the width of the trace slice.
    pub width_samples: usize,
    /// Monte Carlo samples for its diameter (product cones only).
    pub diameter_samples: usize,
    /// Master seed; sketches and geometry draws derive from it.
    pub seed: u64,
    /// Measure CPU seconds. Off by default to keep reports reproducible.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            epsilon: 0.2,
            c0: DEFAULT_C0,
            d_override: None,
            family: SketchFamily::AchlioptasSparse,
            density: crate::sketch::DEFAULT_SKETCH_DENSITY,
            trials: 5,
            solver: SolverConfig::default(),
            u: DEFAULT_U,
            c2: DEFAULT_C2,
            width_samples: 2_000,
            diameter_samples: 256,
            seed: 0,
            timing: false,
        }
    }
}

/// Where an instance comes from: the generator or a file on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSource {
    Gen {
        spec: GenSpec,
        #[serde(default)]
        infeasible: bool,
    },
    File {
        path: String,
        #[serde(default)]
        theta: Option<f64>,
    },
}

/// A loaded instance with whatever ground truth its source provides.
#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub id: String,
    pub program: ConicProgram,
    pub witness: Option<AlgebraElement>,
    pub certificate: Option<Certificate>,
}

impl InstanceSource {
    pub fn id(&self) -> String {
        match self {
            InstanceSource::Gen { spec, infeasible } => {
                format!("gen-{}{}", spec.seed, if *infeasible { "-infeas" } else { "" })
            }
            InstanceSource::File { path, .. } => Path::new(path)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.clone()),
        }
    }

    pub fn load(&self) -> Result<LoadedInstance, HarnessError> {
        match self {
            InstanceSource::Gen { spec, infeasible } => {
                let generated =
                    if *infeasible { generate_infeasible(spec)? } else { generate_feasible(spec)? };
                Ok(LoadedInstance {
                    id: self.id(),
                    program: generated.program,
                    witness: generated.witness,
                    certificate: generated.certificate,
                })
            }
            InstanceSource::File { path, theta } => {
                let program = load_instance(Path::new(path), *theta)?;
                Ok(LoadedInstance { id: self.id(), program, witness: None, certificate: None })
            }
        }
    }
}

/// CPU seconds per pipeline stage; all zero when timing is off.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CpuBreakdown {
    pub sample: f64,
    pub project: f64,
    pub solve: f64,
    pub retrieve: f64,
}

impl CpuBreakdown {
    pub fn total(&self) -> f64 {
        self.sample + self.project + self.solve + self.retrieve
    }
}

/// Scalars kept from the one full-program solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSummary {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub y_norm: Option<f64>,
    pub iterations: usize,
    pub cpu: f64,
}

/// One sketch draw: the reduced solve, the retrieval, and the four bound
/// reports (absent when the reduced solve produced no candidate).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub status: SolveStatus,
    pub v_reduced: Option<f64>,
    pub v_retrieved: Option<f64>,
    pub optimality: Option<ErrorReport>,
    pub feasibility: Option<ErrorReport>,
    pub cone: Option<ErrorReport>,
    pub objective: Option<ErrorReport>,
    pub residual_after: Option<f64>,
    /// `λ_min` of the original dual slack at the lifted dual `Tᵀz`.
    pub dual_lift_lambda_min: Option<f64>,
    pub iterations: usize,
    pub cpu: CpuBreakdown,
    pub flags: Vec<String>,
}

/// Everything measured for one instance under one config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub instance: String,
    pub m: usize,
    pub n: usize,
    /// Embedding dimension used by every trial.
    pub d: usize,
    pub epsilon: f64,
    pub full: SolveSummary,
    pub width: WidthEstimate,
    pub diameter: DiameterEstimate,
    pub trials: Vec<TrialRecord>,
}

fn elapsed(timing: bool, start: Instant) -> f64 {
    if timing {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    }
}

/// Runs `trials` independent sketch draws against `program`, solving the
/// full program once for reference. Trials run in parallel; their seeds
/// derive from the config seed and the trial index, so results do not
/// depend on scheduling.
pub fn run_pipeline(
    instance: &str,
    program: &ConicProgram,
    cfg: &ExperimentConfig,
) -> Result<PipelineReport, HarnessError> {
    let solver = lookup_solver(&cfg.solver.name)
        .ok_or_else(|| HarnessError::UnknownSolver(cfg.solver.name.clone()))?;
    let d = match cfg.d_override {
        Some(d) => d,
        None => embed_dimension(program.m(), cfg.epsilon, cfg.c0)?,
    };
    let operator = program.operator();

    let start = Instant::now();
    let full_result = solver.solve(program, &cfg.solver.options);
    let full = SolveSummary {
        status: full_result.status,
        objective: full_result.objective,
        y_norm: full_result.y.as_ref().map(|y| y.norm()),
        iterations: full_result.iterations,
        cpu: elapsed(cfg.timing, start),
    };

    let width = slice_width(
        program.spec(),
        cfg.width_samples,
        seeds::derive(cfg.seed, STREAM_WIDTH_SEED),
    );
    let diameter = cone_unit_diameter(
        program.spec(),
        cfg.diameter_samples,
        seeds::derive(cfg.seed, STREAM_DIAM_SEED),
    );

    let trials: Result<Vec<TrialRecord>, HarnessError> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            run_trial(t, instance, program, &operator, solver.clone(), cfg, d, width, diameter, &full)
        })
        .collect();

    Ok(PipelineReport {
        instance: instance.to_string(),
        m: program.m(),
        n: program.n(),
        d,
        epsilon: cfg.epsilon,
        full,
        width,
        diameter,
        trials: trials?,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    trial: usize,
    instance: &str,
    program: &ConicProgram,
    operator: &LinearOperator,
    solver: Arc<dyn ConicSolver>,
    cfg: &ExperimentConfig,
    d: usize,
    width: WidthEstimate,
    diameter: DiameterEstimate,
    full: &SolveSummary,
) -> Result<TrialRecord, HarnessError> {
    let mut flags = Vec::new();
    let sketch_seed = seeds::derive(cfg.seed, STREAM_TRIAL_BASE | trial as u64);

    let start = Instant::now();
    let sketch = sample_rp(d, program.m(), cfg.family, sketch_seed, cfg.density, cfg.epsilon)?;
    let cpu_sample = elapsed(cfg.timing, start);

    let start = Instant::now();
    let projected = project_program(program, &sketch, Some(instance.to_string()))?;
    let cpu_project = elapsed(cfg.timing, start);

    let start = Instant::now();
    let reduced = solver.solve(&projected.program, &cfg.solver.options);
    let cpu_solve = elapsed(cfg.timing, start);

    if reduced.status != SolveStatus::Optimal {
        flags.push(format!("reduced_{}", reduced.status.as_str()));
    }
    if full.status != SolveStatus::Optimal {
        flags.push(format!("full_{}", full.status.as_str()));
    }

    let mut record = TrialRecord {
        trial,
        status: reduced.status,
        v_reduced: None,
        v_retrieved: None,
        optimality: None,
        feasibility: None,
        cone: None,
        objective: None,
        residual_after: None,
        dual_lift_lambda_min: None,
        iterations: reduced.iterations,
        cpu: CpuBreakdown { sample: cpu_sample, project: cpu_project, solve: cpu_solve, retrieve: 0.0 },
        flags,
    };

    if let Some(x_t) = reduced.x.as_ref() {
        let v_reduced = program.objective(x_t);
        let start = Instant::now();
        let retrieved = retrieve_solution(program, operator, x_t);
        record.cpu.retrieve = elapsed(cfg.timing, start);
        let v_retrieved = program.objective(&retrieved.x);
        if retrieved.rank_deficient {
            record.flags.push("rank_deficient".to_string());
        }

        let ctx = BoundContext {
            program,
            operator,
            d,
            epsilon: cfg.epsilon,
            u: cfg.u,
            c2: cfg.c2,
            width,
            diameter,
        };
        if let (Some(v_full), Some(y_norm)) = (full.objective, full.y_norm) {
            record.optimality = Some(ctx.optimality(y_norm, (v_full - v_reduced).abs()));
        }
        record.feasibility = Some(ctx.feasibility(retrieved.residual_before));
        record.cone = Some(ctx.retrieval_cone(x_t.lambda_min(), retrieved.x.lambda_min()));
        record.objective = Some(ctx.retrieval_objective((v_retrieved - v_reduced).abs()));
        record.residual_after = Some(retrieved.residual_after);
        record.v_reduced = Some(v_reduced);
        record.v_retrieved = Some(v_retrieved);

        if let (Some(z), Some(nu)) = (reduced.y.as_ref(), reduced.nu) {
            let lifted = projected.lift_dual(z);
            record.dual_lift_lambda_min = Some(program.dual_slack(&lifted, nu).lambda_min());
        }
    }
    Ok(record)
}

/// One point of an infeasibility-detection sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InfeasibilityPoint {
    pub epsilon: f64,
    pub d: usize,
    pub trials: usize,
    /// Trials whose reduced program was declared primal-infeasible.
    pub detected: usize,
    /// Trials ending in a numerical failure (counted separately, never
    /// as detections).
    pub numerical: usize,
    pub detection_rate: f64,
    /// The theoretical detection condition, when a certificate norm for
    /// the original program is known.
    pub condition: Option<InfeasibilityCondition>,
    pub cpu_solve: f64,
}

/// For each `ε`, sketches the (infeasible) program `cfg.trials` times and
/// counts how often the reduced program is itself declared infeasible.
pub fn run_infeasibility_trials(
    program: &ConicProgram,
    certificate_norm: Option<f64>,
    epsilons: &[f64],
    cfg: &ExperimentConfig,
) -> Result<Vec<InfeasibilityPoint>, HarnessError> {
    let solver = lookup_solver(&cfg.solver.name)
        .ok_or_else(|| HarnessError::UnknownSolver(cfg.solver.name.clone()))?;
    let mut points = Vec::with_capacity(epsilons.len());
    for (ei, &epsilon) in epsilons.iter().enumerate() {
        let d = match cfg.d_override {
            Some(d) => d,
            None => embed_dimension(program.m(), epsilon, cfg.c0)?,
        };
        let outcomes: Result<Vec<(bool, bool, f64)>, HarnessError> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let seed = seeds::derive(
                    cfg.seed,
                    STREAM_INFEAS_BASE | ((ei as u64) << 32) | t as u64,
                );
                let sketch =
                    sample_rp(d, program.m(), cfg.family, seed, cfg.density, epsilon)?;
                let projected = project_program(program, &sketch, None)?;
                let start = Instant::now();
                let result = solver.solve(&projected.program, &cfg.solver.options);
                let cpu = elapsed(cfg.timing, start);
                Ok((
                    result.status == SolveStatus::PrimalInfeasible,
                    result.status == SolveStatus::Numerical,
                    cpu,
                ))
            })
            .collect();
        let outcomes = outcomes?;
        let detected = outcomes.iter().filter(|o| o.0).count();
        let numerical = outcomes.iter().filter(|o| o.1).count();
        points.push(InfeasibilityPoint {
            epsilon,
            d,
            trials: cfg.trials,
            detected,
            numerical,
            detection_rate: detected as f64 / cfg.trials.max(1) as f64,
            condition: certificate_norm
                .map(|norm| eval_infeasibility_condition(program, norm, epsilon)),
            cpu_solve: outcomes.iter().map(|o| o.2).sum(),
        });
    }
    Ok(points)
}

fn fmt_float(v: f64) -> String {
    format!("{v:.9e}")
}

fn fmt_cpu(v: f64) -> String {
    format!("{v:.3}")
}

fn fmt_opt(v: Option<f64>) -> String {
    fmt_float(v.unwrap_or(f64::NAN))
}

fn report_cells(r: &Option<ErrorReport>) -> [String; 3] {
    match r {
        Some(r) => [fmt_float(r.measured), fmt_float(r.theoretical), r.holds.to_string()],
        None => [fmt_float(f64::NAN), fmt_float(f64::NAN), "false".to_string()],
    }
}

/// Numeric view of one trial row, in column order, for the aggregates.
fn numeric_row(t: &TrialRecord, full: &SolveSummary) -> Vec<f64> {
    let opt = |r: &Option<ErrorReport>| {
        r.as_ref().map_or([f64::NAN, f64::NAN, 0.0], |r| {
            [r.measured, r.theoretical, if r.holds { 1.0 } else { 0.0 }]
        })
    };
    let mut row = vec![
        full.objective.unwrap_or(f64::NAN),
        t.v_reduced.unwrap_or(f64::NAN),
        t.v_retrieved.unwrap_or(f64::NAN),
    ];
    row.extend(opt(&t.optimality));
    row.extend(opt(&t.feasibility));
    row.extend(opt(&t.cone));
    row.extend(opt(&t.objective));
    row.push(t.residual_after.unwrap_or(f64::NAN));
    row.push(t.dual_lift_lambda_min.unwrap_or(f64::NAN));
    row.push(t.iterations as f64);
    row.extend([t.cpu.sample, t.cpu.project, t.cpu.solve, t.cpu.retrieve, t.cpu.total()]);
    row
}

/// The CSV header (see the module docs for the column contract).
pub const CSV_HEADER: &str = "instance,row,m,n,d,epsilon,status,v_full,v_reduced,v_retrieved,\
gap_measured,gap_bound,gap_holds,feas_measured,feas_bound,feas_holds,\
cone_measured,cone_bound,cone_holds,obj_measured,obj_bound,obj_holds,\
residual_after,dual_lift_lambda_min,iterations,\
cpu_sample,cpu_project,cpu_solve,cpu_retrieve,cpu_total,flags";

/// Renders the report as CSV: one row per trial plus `mean`/`std` rows.
pub fn emit_csv(report: &PipelineReport) -> String {
    let mut lines = vec![CSV_HEADER.to_string()];
    let prefix = |row: &str| {
        format!(
            "{},{},{},{},{},{},",
            report.instance,
            row,
            report.m,
            report.n,
            report.d,
            fmt_float(report.epsilon)
        )
    };
    for t in &report.trials {
        let [gap_m, gap_b, gap_h] = report_cells(&t.optimality);
        let [feas_m, feas_b, feas_h] = report_cells(&t.feasibility);
        let [cone_m, cone_b, cone_h] = report_cells(&t.cone);
        let [obj_m, obj_b, obj_h] = report_cells(&t.objective);
        let flags = if t.flags.is_empty() { "-".to_string() } else { t.flags.join(";") };
        lines.push(format!(
            "{}{},{},{},{},{gap_m},{gap_b},{gap_h},{feas_m},{feas_b},{feas_h},\
{cone_m},{cone_b},{cone_h},{obj_m},{obj_b},{obj_h},{},{},{},{},{},{},{},{},{flags}",
            prefix(&t.trial.to_string()),
            t.status.as_str(),
            fmt_opt(report.full.objective),
            fmt_opt(t.v_reduced),
            fmt_opt(t.v_retrieved),
            fmt_opt(t.residual_after),
            fmt_opt(t.dual_lift_lambda_min),
            t.iterations,
            fmt_cpu(t.cpu.sample),
            fmt_cpu(t.cpu.project),
            fmt_cpu(t.cpu.solve),
            fmt_cpu(t.cpu.retrieve),
            fmt_cpu(t.cpu.total()),
        ));
    }
    let rows: Vec<Vec<f64>> =
        report.trials.iter().map(|t| numeric_row(t, &report.full)).collect();
    if !rows.is_empty() {
        let cols = rows[0].len();
        let n = rows.len() as f64;
        let means: Vec<f64> =
            (0..cols).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let stds: Vec<f64> = (0..cols)
            .map(|j| {
                if rows.len() < 2 {
                    0.0
                } else {
                    (rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / (n - 1.0))
                        .sqrt()
                }
            })
            .collect();
        for (label, values) in [("mean", &means), ("std", &stds)] {
            let cells: Vec<String> = values
                .iter()
                .enumerate()
                .map(|(j, v)| if j >= cols - 5 { fmt_cpu(*v) } else { fmt_float(*v) })
                .collect();
            lines.push(format!("{}-,{},-", prefix(label), cells.join(",")));
        }
    }
    lines.join("\n") + "\n"
}

/// Renders the report as pretty JSON.
pub fn emit_json(report: &PipelineReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// Header of the infeasibility-sweep CSV.
pub const INFEAS_CSV_HEADER: &str =
    "instance,epsilon,d,trials,detected,numerical,detection_rate,condition_lhs,condition_holds,cpu_solve";

/// Renders an infeasibility sweep as CSV, one row per `ε`.
pub fn emit_infeasibility_csv(instance: &str, points: &[InfeasibilityPoint]) -> String {
    let mut lines = vec![INFEAS_CSV_HEADER.to_string()];
    for p in points {
        let (lhs, holds) = match p.condition {
            Some(c) => (fmt_float(c.lhs), c.holds.to_string()),
            None => (String::new(), String::new()),
        };
        lines.push(format!(
            "{},{},{},{},{},{},{},{lhs},{holds},{}",
            instance,
            fmt_float(p.epsilon),
            p.d,
            p.trials,
            p.detected,
            p.numerical,
            fmt_float(p.detection_rate),
            fmt_cpu(p.cpu_solve),
        ));
    }
    lines.join("\n") + "\n"
}
