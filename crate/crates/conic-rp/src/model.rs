//! Standard-form symmetric conic programs and their flattened operators.
//!
//! The primal is
//!
//! ```text
//! (P)   min ⟨c, x⟩   s.t.   ⟨Aᵢ, x⟩ = bᵢ (i = 1..m),  ⟨e, x⟩ ≤ θ,  x ⪰ 0,
//! ```
//!
//! with data living in the algebra of a [`ConeSpec`]. Its dual is
//!
//! ```text
//! (D)   max bᵀy − θν   s.t.   Σᵢ yᵢAᵢ − νe ⪯ c,  ν ≥ 0,
//! ```
//!
//! exposed as a view over the same data. [`LinearOperator`] flattens the
//! constraint rows into a dense `m × n` matrix whose rows are
//! metric-weighted coordinates, so `𝔸·coords(x) = (⟨Aᵢ, x⟩)ᵢ`; its SVD is
//! computed once and cached for norms, condition numbers, and the
//! minimum-norm corrections used in retrieval.

use crate::jordan::{AlgebraElement, ConeSpec};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Structural errors in program data.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("constraint row {index} uses a different cone specification")]
    RowSpecMismatch { index: usize },
    #[error("cost element uses a different cone specification")]
    CostSpecMismatch,
    #[error("b has {got} entries but there are {expected} constraint rows")]
    RhsLength { expected: usize, got: usize },
    #[error("a program needs at least one equality constraint")]
    NoConstraints,
    #[error("trace bound must be positive and finite, got {0}")]
    BadTraceBound(f64),
    #[error("non-finite value in program data: {0}")]
    NonFinite(&'static str),
}

/// A standard-form symmetric conic program.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    spec: ConeSpec,
    /// Cost element `c`.
    pub c: AlgebraElement,
    /// Constraint rows `A₁ … A_m`.
    pub a: Vec<AlgebraElement>,
    /// Right-hand side `b`.
    pub b: DVector<f64>,
    /// Trace bound `θ > 0`.
    pub theta: f64,
}

impl ConicProgram {
    /// Assembles and validates a program.
    pub fn new(
        spec: ConeSpec,
        c: AlgebraElement,
        a: Vec<AlgebraElement>,
        b: DVector<f64>,
        theta: f64,
    ) -> Result<Self, ModelError> {
        if a.is_empty() {
            return Err(ModelError::NoConstraints);
        }
        if c.spec() != &spec {
            return Err(ModelError::CostSpecMismatch);
        }
        for (i, row) in a.iter().enumerate() {
            if row.spec() != &spec {
                return Err(ModelError::RowSpecMismatch { index: i });
            }
            if row.coords().iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite("constraint row"));
            }
        }
        if b.len() != a.len() {
            return Err(ModelError::RhsLength { expected: a.len(), got: b.len() });
        }
        if !(theta.is_finite() && theta > 0.0) {
            return Err(ModelError::BadTraceBound(theta));
        }
        if c.coords().iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("cost"));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("rhs"));
        }
        Ok(ConicProgram { spec, c, a, b, theta })
    }

    pub fn spec(&self) -> &ConeSpec {
        &self.spec
    }

    /// Number of equality constraints `m`.
    pub fn m(&self) -> usize {
        self.a.len()
    }

    /// Flattened dimension `n` of the algebra.
    pub fn n(&self) -> usize {
        self.spec.dimension()
    }

    /// `⟨c, x⟩`.
    pub fn objective(&self, x: &AlgebraElement) -> f64 {
        self.c.inner(x).expect("same spec")
    }

    /// `bᵀy − θν`.
    pub fn dual_objective(&self, y: &DVector<f64>, nu: f64) -> f64 {
        self.b.dot(y) - self.theta * nu
    }

    /// Builds the flattened constraint operator (cached SVD inside).
    pub fn operator(&self) -> LinearOperator {
        LinearOperator::new(&self.spec, &self.a)
    }

    /// `(⟨Aᵢ, x⟩)ᵢ` without materializing the operator.
    pub fn apply_rows(&self, x: &AlgebraElement) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.a.iter().map(|row| row.inner(x).expect("same spec")))
    }

    /// Adjoint combination `Σᵢ yᵢ Aᵢ`.
    pub fn combine_rows(&self, y: &DVector<f64>) -> AlgebraElement {
        assert_eq!(y.len(), self.m(), "y has wrong length");
        let mut out = AlgebraElement::zeros(&self.spec);
        for (yi, row) in y.iter().zip(&self.a) {
            if *yi != 0.0 {
                out = out.add_scaled(*yi, row).expect("same spec");
            }
        }
        out
    }

    /// Primal residuals of a candidate point.
    pub fn primal_residuals(&self, x: &AlgebraElement) -> PrimalResiduals {
        let eq = (self.apply_rows(x) - &self.b).norm();
        let trace_slack = self.theta - AlgebraElement::identity(&self.spec).inner(x).expect("spec");
        PrimalResiduals {
            eq_norm: eq,
            trace_slack,
            cone_violation: (-x.lambda_min()).max(0.0),
        }
    }

    /// Dual slack element `c − Σᵢ yᵢAᵢ + νe`; the dual point is feasible
    /// when this is in the cone and `ν ≥ 0`.
    pub fn dual_slack(&self, y: &DVector<f64>, nu: f64) -> AlgebraElement {
        let mut out = self.c.add_scaled(-1.0, &self.combine_rows(y)).expect("same spec");
        out = out
            .add_scaled(nu, &AlgebraElement::identity(&self.spec))
            .expect("same spec");
        out
    }

    /// Primal feasibility at tolerance `tol` (scaled by data norms).
    pub fn is_primal_feasible(&self, x: &AlgebraElement, tol: f64) -> bool {
        let r = self.primal_residuals(x);
        r.eq_norm <= tol * (1.0 + self.b.norm())
            && r.trace_slack >= -tol * (1.0 + self.theta)
            && r.cone_violation <= tol
    }

    /// The same data viewed as the dual program (D).
    pub fn dual(&self) -> DualProgram<'_> {
        DualProgram { primal: self }
    }
}

/// Residuals of a primal candidate: equality violation, slack of the trace
/// bound (negative = violated), and cone violation `max(0, −λ_min)`.
#[derive(Debug, Clone, Copy)]
pub struct PrimalResiduals {
    pub eq_norm: f64,
    pub trace_slack: f64,
    pub cone_violation: f64,
}

/// View of a [`ConicProgram`] as its dual `(D)`. Carries no data of its
/// own.
#[derive(Debug, Clone, Copy)]
pub struct DualProgram<'a> {
    primal: &'a ConicProgram,
}

impl DualProgram<'_> {
    /// `bᵀy − θν`.
    pub fn objective(&self, y: &DVector<f64>, nu: f64) -> f64 {
        self.primal.dual_objective(y, nu)
    }

    /// Slack element of the dual constraint.
    pub fn slack(&self, y: &DVector<f64>, nu: f64) -> AlgebraElement {
        self.primal.dual_slack(y, nu)
    }

    /// Dual feasibility: slack in the cone and `ν ≥ −tol`.
    pub fn is_feasible(&self, y: &DVector<f64>, nu: f64, tol: f64) -> bool {
        nu >= -tol && self.slack(y, nu).lambda_min() >= -tol
    }
}

/// Flattened constraint operator with cached spectral data.
///
/// Row `i` holds the metric-weighted coordinates of `Aᵢ`, so applying the
/// matrix to raw coordinates of `x` produces `(⟨Aᵢ, x⟩)ᵢ`. The SVD is
/// computed on construction; singular values at or below
/// `σ_max · n · ε_machine` are treated as zero.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    mat: DMatrix<f64>,
    /// Left singular vectors (m × k, numerical rank k).
    u: DMatrix<f64>,
    /// Right singular vectors transposed (k × n).
    v_t: DMatrix<f64>,
    /// Singular values above the rank tolerance, descending.
    sigma: DVector<f64>,
    rank_tol: f64,
    m: usize,
    n: usize,
}

impl LinearOperator {
    /// Flattens rows and factors the matrix.
    pub fn new(spec: &ConeSpec, rows: &[AlgebraElement]) -> Self {
        let m = rows.len();
        let n = spec.dimension();
        let mut mat = DMatrix::zeros(m, n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.spec(), spec, "row {i} has mismatched spec");
            mat.row_mut(i).copy_from(&row.metric_weighted_coords().transpose());
        }
        Self::from_matrix(mat)
    }

    /// Wraps an already-flattened matrix (rows must be metric-weighted
    /// coordinates).
    pub fn from_matrix(mat: DMatrix<f64>) -> Self {
        let (m, n) = mat.shape();
        let svd = mat.clone().svd(true, true);
        let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let rank_tol = sigma_max * n as f64 * f64::EPSILON;
        // Keep components above the tolerance, in descending order.
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let kept: Vec<usize> = order
            .into_iter()
            .filter(|&k| svd.singular_values[k] > rank_tol)
            .collect();
        let u_full = svd.u.expect("u requested");
        let v_t_full = svd.v_t.expect("v_t requested");
        let mut u = DMatrix::zeros(m, kept.len());
        let mut v_t = DMatrix::zeros(kept.len(), n);
        let mut sigma = DVector::zeros(kept.len());
        for (slot, &k) in kept.iter().enumerate() {
            u.column_mut(slot).copy_from(&u_full.column(k));
            v_t.row_mut(slot).copy_from(&v_t_full.row(k));
            sigma[slot] = svd.singular_values[k];
        }
        LinearOperator { mat, u, v_t, sigma, rank_tol, m, n }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    /// Numerical rank.
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Threshold under which singular values counted as zero.
    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Largest singular value = `‖𝔸‖₂`.
    pub fn sigma_max(&self) -> f64 {
        self.sigma.get(0).copied().unwrap_or(0.0)
    }

    /// Smallest singular value above the rank tolerance.
    pub fn sigma_min(&self) -> f64 {
        self.sigma.iter().cloned().fold(f64::NAN, f64::min).max(0.0)
    }

    /// `κ(𝔸) = σ_max / σ_min` over the numerical row space.
    pub fn condition_number(&self) -> f64 {
        let smin = self.sigma_min();
        if smin > 0.0 { self.sigma_max() / smin } else { f64::INFINITY }
    }

    /// True when the rows are linearly dependent to numerical tolerance
    /// (rank < m), in which case pseudoinverse corrections are restricted
    /// to the numerical row space.
    pub fn rank_deficient(&self) -> bool {
        self.rank() < self.m
    }

    /// `𝔸 · coords`.
    pub fn apply(&self, coords: &DVector<f64>) -> DVector<f64> {
        &self.mat * coords
    }

    /// Minimum-norm coordinate correction `𝔸⁺ r` via the truncated SVD.
    pub fn pinv_apply(&self, r: &DVector<f64>) -> DVector<f64> {
        let mut z = self.u.transpose() * r;
        for k in 0..z.len() {
            z[k] /= self.sigma[k];
        }
        self.v_t.transpose() * z
    }
}
