//! Centralized numerical tolerances.
//!
//! Every tolerance used by the library and its test suites lives here so the
//! accuracy contract is visible in one place. Tolerances are grouped by how
//! the quantity they guard is computed.

/// Identities that algebra operations satisfy exactly up to rounding
/// (commutativity of the Jordan product, adjoint identities, exact
/// reconstruction checks). A handful of ulps at unit scale.
pub const EXACT: f64 = 1e-10;

/// Identities that go through an eigendecomposition or accumulate a few
/// orders of floating-point error (spectral reconstruction, idempotent
/// axioms, the Jordan identity). Callers scale this by the magnitude of the
/// operands.
pub const ALGEBRAIC: f64 = 1e-8;

/// Relative accuracy target of the built-in solver: equality residuals,
/// duality gap, and complementary quantities are driven below
/// `SOLVER * (1 + scale)`.
pub const SOLVER: f64 = 1e-6;

/// Absolute floor for the minimum eigenvalue of the dual slack of any dual
/// point the solver returns as feasible.
pub const DUAL_CONE: f64 = 1e-6;

/// Tolerance for accepting an infeasibility certificate: the recomputed
/// normalization must be ≥ 1 − `CERTIFICATE` and the slack λ_max ≤
/// `CERTIFICATE`.
pub const CERTIFICATE: f64 = 1e-6;

/// Equality residual after SVD-based retrieval projects a point back onto
/// the original constraints, relative to `1 + ‖b‖₂`.
pub const RETRIEVAL: f64 = 1e-8;
