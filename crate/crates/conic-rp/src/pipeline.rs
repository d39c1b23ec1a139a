//! Projection of a program's equality constraints, dual lifting, and
//! solution retrieval.
//!
//! Given a sketch `T ∈ R^{d×m}`, the projected program `(P_T)` keeps the
//! cone, cost, and trace bound of `(P)` but replaces its `m` equalities by
//! the `d` recombined rows `Āₖ = Σᵢ Tₖᵢ Aᵢ` with right-hand side `Tb`.
//! Every feasible point of `(P)` stays feasible for `(P_T)`, so
//! `v(P_T) ≤ v(P)` always. Dual candidates travel the other way: a dual
//! point `z` of `(P_T)` lifts to `y = Tᵀz`, and the lift preserves the dual
//! slack element identically (`Σᵢ (Tᵀz)ᵢ Aᵢ = Σₖ zₖ Āₖ`).
//!
//! Retrieval moves a solution of `(P_T)` back onto the original equalities
//! by the minimum-norm coordinate correction `𝔸⁺(b − 𝔸x_T)` through the
//! truncated SVD cached in [`LinearOperator`]; when the rows are
//! numerically dependent the correction is restricted to the row space and
//! flagged. The retrieved point can leave the cone by a little — that gap
//! is exactly what the retrieval bounds in [`crate::bounds`] quantify.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::io::{FormatError, ProgramDoc};
use crate::jordan::AlgebraElement;
use crate::model::{ConicProgram, LinearOperator, ModelError};
use crate::sketch::{ProjectionSketch, SketchError};

/// Failures while projecting, serializing, or retrieving.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("sketch expects {expected} constraint rows, program has {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("document carries no sketch descriptor")]
    MissingSketch,
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sketch(#[from] SketchError),
}

/// A projected program together with the sketch that produced it.
#[derive(Debug, Clone)]
pub struct ProjectedProgram {
    pub program: ConicProgram,
    pub sketch: ProjectionSketch,
    /// Free-form tag of the source instance, carried through serialization.
    pub source_id: Option<String>,
}

/// Builds `(P_T)` from `(P)` and a sketch with matching row count.
pub fn project_program(
    program: &ConicProgram,
    sketch: &ProjectionSketch,
    source_id: Option<String>,
) -> Result<ProjectedProgram, PipelineError> {
    if sketch.m() != program.m() {
        return Err(PipelineError::ShapeMismatch { expected: sketch.m(), got: program.m() });
    }
    let m = program.m();
    let n = program.n();
    // Raw (unweighted) coordinates: recombining rows is linear in elements.
    let mut raw = DMatrix::zeros(m, n);
    for (i, row) in program.a.iter().enumerate() {
        raw.row_mut(i).copy_from(&row.coords().transpose());
    }
    let projected = sketch.matrix() * raw;
    let rows: Vec<AlgebraElement> = (0..sketch.d())
        .map(|k| {
            AlgebraElement::new(program.spec().clone(), projected.row(k).transpose())
                .expect("projection keeps the dimension")
        })
        .collect();
    let rhs = sketch.apply(&program.b);
    let reduced = ConicProgram::new(
        program.spec().clone(),
        program.c.clone(),
        rows,
        rhs,
        program.theta,
    )?;
    Ok(ProjectedProgram { program: reduced, sketch: sketch.clone(), source_id })
}

impl ProjectedProgram {
    /// Lifts a dual point of `(P_T)` to one of `(P)`: `y = Tᵀz`.
    pub fn lift_dual(&self, z: &DVector<f64>) -> DVector<f64> {
        self.sketch.apply_transpose(z)
    }

    /// Serializes program plus sketch descriptor as JSON.
    pub fn write<W: Write>(&self, w: W) -> Result<(), PipelineError> {
        let mut doc = ProgramDoc::from_program(&self.program);
        doc.sketch = Some(*self.sketch.descriptor());
        doc.source = self.source_id.clone();
        serde_json::to_writer_pretty(w, &doc).map_err(FormatError::from)?;
        Ok(())
    }

    /// Reads a projected program back; the sketch matrix is regenerated
    /// from its descriptor (same seed ⇒ same matrix).
    pub fn read<R: Read>(r: R) -> Result<Self, PipelineError> {
        let doc: ProgramDoc = serde_json::from_reader(r).map_err(FormatError::from)?;
        let descriptor = doc.sketch.ok_or(PipelineError::MissingSketch)?;
        let source_id = doc.source.clone();
        let program = doc.into_program()?;
        let sketch = descriptor.materialize()?;
        if sketch.d() != program.m() {
            return Err(PipelineError::ShapeMismatch {
                expected: sketch.d(),
                got: program.m(),
            });
        }
        Ok(ProjectedProgram { program, sketch, source_id })
    }
}

/// The dual of `(P)` with its cost relaxed to `c + μe` (μ ≥ 0). Feasible
/// sets grow with μ, so its value is nondecreasing in μ.
#[derive(Debug, Clone)]
pub struct RelaxedDual {
    program: ConicProgram,
    mu: f64,
}

/// Builds the μ-relaxation; `μ = 0` gives back the plain dual.
pub fn relaxed_dual(program: &ConicProgram, mu: f64) -> RelaxedDual {
    let relaxed_cost = program
        .c
        .add_scaled(mu, &AlgebraElement::identity(program.spec()))
        .expect("same spec");
    let program = ConicProgram::new(
        program.spec().clone(),
        relaxed_cost,
        program.a.clone(),
        program.b.clone(),
        program.theta,
    )
    .expect("relaxation keeps the program valid");
    RelaxedDual { program, mu }
}

impl RelaxedDual {
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// The primal program whose dual this is (cost already perturbed).
    pub fn as_program(&self) -> &ConicProgram {
        &self.program
    }

    /// `(c + μe) − Σᵢ yᵢAᵢ + νe`.
    pub fn slack(&self, y: &DVector<f64>, nu: f64) -> AlgebraElement {
        self.program.dual_slack(y, nu)
    }

    /// `bᵀy − θν` (unchanged by the relaxation).
    pub fn objective(&self, y: &DVector<f64>, nu: f64) -> f64 {
        self.program.dual_objective(y, nu)
    }

    pub fn is_feasible(&self, y: &DVector<f64>, nu: f64, tol: f64) -> bool {
        self.program.dual().is_feasible(y, nu, tol)
    }
}

/// Outcome of pulling a projected solution back to the original equalities.
#[derive(Debug, Clone)]
pub struct RetrievedSolution {
    /// `x̃ = x_T + 𝔸⁺(b − 𝔸x_T)`; possibly slightly outside the cone.
    pub x: AlgebraElement,
    /// `‖𝔸x_T − b‖₂` before the correction.
    pub residual_before: f64,
    /// `‖𝔸x̃ − b‖₂` after it.
    pub residual_after: f64,
    /// Euclidean size of the coordinate correction.
    pub correction_norm: f64,
    /// Set when rank(𝔸) < m: the correction only reaches the numerical
    /// row space, so `residual_after` need not vanish.
    pub rank_deficient: bool,
}

/// Minimum-norm retrieval through the cached truncated SVD of `operator`
/// (which must be the flattened operator of `program`).
pub fn retrieve_solution(
    program: &ConicProgram,
    operator: &LinearOperator,
    x_t: &AlgebraElement,
) -> RetrievedSolution {
    assert_eq!(
        operator.shape(),
        (program.m(), program.n()),
        "operator must match the program"
    );
    let r = &program.b - operator.apply(x_t.coords());
    let residual_before = r.norm();
    let correction = operator.pinv_apply(&r);
    let coords = x_t.coords() + &correction;
    let x = AlgebraElement::new(program.spec().clone(), coords).expect("dimension unchanged");
    let residual_after = (operator.apply(x.coords()) - &program.b).norm();
    RetrievedSolution {
        x,
        residual_before,
        residual_after,
        correction_norm: correction.norm(),
        rank_deficient: operator.rank_deficient(),
    }
}
