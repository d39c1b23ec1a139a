//! Built-in conic solver: operator splitting on a homogeneous self-dual
//! embedding.
//!
//! The standard form gains one nonnegative slack `s` turning the trace bound
//! into an equality, after which the data read
//!
//! ```text
//! Â = ⎡ 𝔸    0 ⎤   b̂ = ⎡ b ⎤   c̃ = ⎡ c_w ⎤
//!     ⎣ e_wᵀ 1 ⎦       ⎣ θ ⎦       ⎣ 0  ⎦
//! ```
//!
//! with `_w` marking metric-weighted coordinates, so all inner products are
//! plain Euclidean ones. Primal, dual, and the unboundedness/infeasibility
//! alternatives are folded into one skew-symmetric feasibility problem over
//! `u = (x̂, ŷ, τ)`; a Douglas–Rachford splitting alternates a single cached
//! linear solve with a cone projection. The linear step reduces to one
//! Cholesky backsolve with `I + ÂᵀÂ` (or `I + ÂÂᵀ`, whichever is smaller)
//! plus a rank-one correction.
//!
//! Termination is decided on unscaled public candidates: the returned point
//! satisfies the equality residual, dual-cone, and gap tests exactly as
//! documented on [`SolverOptions::tol`]. A `PrimalInfeasible` status is only
//! returned once the dual ray has been normalized into a Farkas certificate
//! (`bᵀŷ − θν̂ = 1`, `Σᵢ ŷᵢAᵢ − ν̂e ⪯ 0`) and re-verified from scratch by
//! [`verify_certificate`]. The built-in solver never reports `Unbounded`:
//! the trace bound keeps the primal feasible set compact and the dual
//! strictly feasible; the variant exists for external backends.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};
use std::time::Instant;

use nalgebra::linalg::Cholesky;
use nalgebra::{DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::jordan::{cone_project_coords, AlgebraElement};
use crate::model::ConicProgram;
use crate::tol;

/// Over-relaxation parameter of the splitting iteration.
const ALPHA: f64 = 1.5;
/// Convergence and certificate checks run every this many iterations.
const CHECK_INTERVAL: usize = 25;
/// `τ` below this is treated as (part of) a ray, not a scaled solution.
const TAU_FLOOR: f64 = 1e-9;

/// Knobs for a single solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Accuracy target. An `Optimal` result guarantees
    /// `‖Âx̂ − b̂‖₂ ≤ tol·(1 + ‖b̂‖₂)`,
    /// `λ_min(c − Σᵢ yᵢAᵢ + νe) ≥ −0.9·tol`, and
    /// `|⟨c,x⟩ − (bᵀy − θν)| ≤ tol·(1 + max(|p|, |d|))`.
    pub tol: f64,
    /// Iteration ceiling.
    pub max_iter: usize,
    /// Reserved for randomized backends; the built-in solver is
    /// deterministic and ignores it.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: tol::SOLVER, max_iter: 100_000, seed: 0 }
    }
}

/// Outcome classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Primal/dual pair within tolerance returned.
    Optimal,
    /// A verified Farkas certificate was found.
    PrimalInfeasible,
    /// Certified unbounded ray (never produced by the built-in solver).
    Unbounded,
    /// Iteration ceiling hit; best evaluated candidate returned.
    MaxIter,
    /// Non-finite iterates or an ambiguous ray at the iteration ceiling.
    Numerical,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::PrimalInfeasible => "primal_infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::Numerical => "numerical",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Farkas certificate of primal infeasibility, normalized so that
/// `bᵀŷ − θν̂ = 1` with `Σᵢ ŷᵢAᵢ − ν̂e ⪯ 0` and `ν̂ ≥ 0`.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub y: DVector<f64>,
    pub nu: f64,
    /// `bᵀŷ − θν̂` recomputed at construction.
    pub normalization: f64,
    /// `λ_max(Σᵢ ŷᵢAᵢ − ν̂e)` recomputed at construction; a valid
    /// certificate has this ≤ 0 up to tolerance.
    pub slack_lambda_max: f64,
}

impl Certificate {
    /// Wraps a candidate ray and fills in the recomputed diagnostics.
    pub fn new(program: &ConicProgram, y: DVector<f64>, nu: f64) -> Self {
        let normalization = program.b.dot(&y) - program.theta * nu;
        let comb = program
            .combine_rows(&y)
            .add_scaled(-nu, &AlgebraElement::identity(program.spec()))
            .expect("same spec");
        Certificate { y, nu, normalization, slack_lambda_max: comb.lambda_max() }
    }
}

/// Re-checks a certificate against the program data from scratch: `ν̂ ≥ 0`,
/// `bᵀŷ − θν̂ ≥ 1 − tol`, and `λ_max(Σᵢ ŷᵢAᵢ − ν̂e) ≤ tol` with
/// `tol = `[`tol::CERTIFICATE`]. Stored diagnostics are ignored.
// Negated comparisons are deliberate: a NaN anywhere must fail the check.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn verify_certificate(program: &ConicProgram, cert: &Certificate) -> bool {
    if cert.y.len() != program.m() || !(cert.nu >= 0.0) {
        return false;
    }
    let normalization = program.b.dot(&cert.y) - program.theta * cert.nu;
    if !(normalization >= 1.0 - tol::CERTIFICATE) {
        return false;
    }
    let comb = program
        .combine_rows(&cert.y)
        .add_scaled(-cert.nu, &AlgebraElement::identity(program.spec()))
        .expect("same spec");
    comb.lambda_max() <= tol::CERTIFICATE
}

/// Residuals of the returned candidate (all unscaled).
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct SolveResiduals {
    /// `‖Âx̂ − b̂‖₂` including the trace row.
    pub primal_eq: f64,
    /// `θ − ⟨e, x⟩` (negative = violated).
    pub trace_slack: f64,
    /// `λ_min(c − Σᵢ yᵢAᵢ + νe)`.
    pub dual_lambda_min: f64,
    /// `|⟨c, x⟩ − (bᵀy − θν)|`.
    pub gap: f64,
}

/// Everything a solve produces. Candidate fields are `None` when the status
/// makes them meaningless (e.g. no primal point for `PrimalInfeasible`).
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub x: Option<AlgebraElement>,
    pub y: Option<DVector<f64>>,
    pub nu: Option<f64>,
    pub objective: Option<f64>,
    pub certificate: Option<Certificate>,
    pub iterations: usize,
    /// Wall-clock seconds spent inside the solver.
    pub solve_time: f64,
    pub residuals: SolveResiduals,
}

/// Interface for pluggable backends.
pub trait ConicSolver: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, program: &ConicProgram, options: &SolverOptions) -> SolveResult;
}

fn registry() -> &'static RwLock<HashMap<String, Arc<dyn ConicSolver>>> {
    static REGISTRY: OnceLock<RwLock<HashMap<String, Arc<dyn ConicSolver>>>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut map: HashMap<String, Arc<dyn ConicSolver>> = HashMap::new();
        map.insert("builtin".to_string(), Arc::new(BuiltinSolver));
        RwLock::new(map)
    })
}

/// Makes `solver` available under its name, replacing any previous entry.
pub fn register_solver(solver: Arc<dyn ConicSolver>) {
    registry()
        .write()
        .expect("solver registry poisoned")
        .insert(solver.name().to_string(), solver);
}

/// Looks up a backend by name; `"builtin"` is always present.
pub fn lookup_solver(name: &str) -> Option<Arc<dyn ConicSolver>> {
    registry().read().expect("solver registry poisoned").get(name).cloned()
}

/// Registered backend names, sorted.
pub fn available_solvers() -> Vec<String> {
    let mut names: Vec<String> =
        registry().read().expect("solver registry poisoned").keys().cloned().collect();
    names.sort();
    names
}

/// The bundled splitting solver (see the module docs).
#[derive(Debug, Default, Clone, Copy)]
pub struct BuiltinSolver;

impl ConicSolver for BuiltinSolver {
    fn name(&self) -> &str {
        "builtin"
    }

    fn solve(&self, program: &ConicProgram, options: &SolverOptions) -> SolveResult {
        admm(program, options)
    }
}

/// Convenience wrapper around [`BuiltinSolver`].
pub fn solve_builtin(program: &ConicProgram, options: &SolverOptions) -> SolveResult {
    admm(program, options)
}

/// Which side the cached Cholesky factor lives on.
enum Factor {
    /// `I + ÂᵀÂ`, size `(n+1)²`.
    Primal(Cholesky<f64, Dyn>),
    /// `I + ÂÂᵀ`, size `(m+1)²`.
    Dual(Cholesky<f64, Dyn>),
}

/// Precomputed embedding data shared by every iteration.
struct Embedding<'a> {
    prog: &'a ConicProgram,
    n: usize,
    m: usize,
    n1: usize,
    m1: usize,
    a_hat: DMatrix<f64>,
    a_hat_t: DMatrix<f64>,
    /// Unscaled `(b, θ)`.
    b_hat: DVector<f64>,
    /// `‖b̂‖₂` (≥ θ > 0); the primal iterate is scaled by this.
    sigma: f64,
    /// `‖c̃‖₂` or 1 for a zero cost; the dual iterate is scaled by this.
    rho: f64,
    /// Scaled `(c̃/ρ, −b̂/σ)`.
    h: DVector<f64>,
    factor: Factor,
    /// `M⁻¹h`.
    r1: DVector<f64>,
    /// `M⁻ᵀh`.
    r2: DVector<f64>,
    /// `1 + hᵀM⁻¹h ≥ 1`.
    gamma: f64,
}

/// Last evaluated primal/dual candidate, kept for `MaxIter` reporting.
struct CandidateEval {
    x: AlgebraElement,
    y: DVector<f64>,
    nu: f64,
    p_obj: f64,
    d_obj: f64,
    residuals: SolveResiduals,
}

impl<'a> Embedding<'a> {
    fn new(prog: &'a ConicProgram) -> Self {
        let n = prog.n();
        let m = prog.m();
        let (n1, m1) = (n + 1, m + 1);

        let mut a_hat = DMatrix::zeros(m1, n1);
        for (i, row) in prog.a.iter().enumerate() {
            a_hat
                .view_mut((i, 0), (1, n))
                .copy_from(&row.metric_weighted_coords().transpose());
        }
        let e_w = AlgebraElement::identity(prog.spec()).metric_weighted_coords();
        a_hat.view_mut((m, 0), (1, n)).copy_from(&e_w.transpose());
        a_hat[(m, n)] = 1.0;
        let a_hat_t = a_hat.transpose();

        let mut b_hat = DVector::zeros(m1);
        b_hat.rows_mut(0, m).copy_from(&prog.b);
        b_hat[m] = prog.theta;
        let sigma = b_hat.norm();

        let mut c_tilde = DVector::zeros(n1);
        c_tilde.rows_mut(0, n).copy_from(&prog.c.metric_weighted_coords());
        let c_norm = c_tilde.norm();
        let rho = if c_norm > 0.0 { c_norm } else { 1.0 };

        let mut h = DVector::zeros(n1 + m1);
        h.rows_mut(0, n1).copy_from(&(&c_tilde / rho));
        h.rows_mut(n1, m1).copy_from(&(&b_hat * (-1.0 / sigma)));

        let factor = if n1 <= m1 {
            let mut g = &a_hat_t * &a_hat;
            for k in 0..n1 {
                g[(k, k)] += 1.0;
            }
            Factor::Primal(Cholesky::new(g).expect("I + ÂᵀÂ is positive definite"))
        } else {
            let mut g = &a_hat * &a_hat_t;
            for k in 0..m1 {
                g[(k, k)] += 1.0;
            }
            Factor::Dual(Cholesky::new(g).expect("I + ÂÂᵀ is positive definite"))
        };

        let mut emb = Embedding {
            prog,
            n,
            m,
            n1,
            m1,
            a_hat,
            a_hat_t,
            b_hat,
            sigma,
            rho,
            h,
            factor,
            r1: DVector::zeros(0),
            r2: DVector::zeros(0),
            gamma: 0.0,
        };
        emb.r1 = emb.solve_m(&emb.h);
        emb.r2 = emb.solve_m_t(&emb.h);
        emb.gamma = 1.0 + emb.h.dot(&emb.r1);
        emb
    }

    /// Solves `M z = g` with `M = [[I, −Âᵀ], [Â, I]]`.
    fn solve_m(&self, g: &DVector<f64>) -> DVector<f64> {
        let g1 = g.rows(0, self.n1);
        let g2 = g.rows(self.n1, self.m1);
        let (z1, z2) = match &self.factor {
            Factor::Primal(chol) => {
                let z1 = chol.solve(&(g1 + &self.a_hat_t * g2));
                let z2 = g2 - &self.a_hat * &z1;
                (z1, z2)
            }
            Factor::Dual(chol) => {
                let z2 = chol.solve(&(g2 - &self.a_hat * g1));
                let z1 = g1 + &self.a_hat_t * &z2;
                (z1, z2)
            }
        };
        join(&z1, &z2)
    }

    /// Solves `Mᵀ z = g` (same factor, signs on `Â` flipped).
    fn solve_m_t(&self, g: &DVector<f64>) -> DVector<f64> {
        let g1 = g.rows(0, self.n1);
        let g2 = g.rows(self.n1, self.m1);
        let (z1, z2) = match &self.factor {
            Factor::Primal(chol) => {
                let z1 = chol.solve(&(g1 - &self.a_hat_t * g2));
                let z2 = g2 + &self.a_hat * &z1;
                (z1, z2)
            }
            Factor::Dual(chol) => {
                let z2 = chol.solve(&(g2 + &self.a_hat * g1));
                let z1 = g1 - &self.a_hat_t * &z2;
                (z1, z2)
            }
        };
        join(&z1, &z2)
    }

    /// Applies `(I + Q)⁻¹` to `w`; the skew block couples to `τ` through
    /// `h`, handled by a Sherman–Morrison rank-one update of `M`.
    fn apply_inv_iq(&self, w: &DVector<f64>) -> DVector<f64> {
        let nm = self.n1 + self.m1;
        let w_xy = w.rows(0, nm);
        let w_tau = w[nm];
        let g = w_xy - &self.h * w_tau;
        let mg = self.solve_m(&g);
        let p = &mg - &self.r1 * (self.r2.dot(&g) / self.gamma);
        let z_tau = w_tau + self.h.dot(&p);
        let mut out = DVector::zeros(nm + 1);
        out.rows_mut(0, nm).copy_from(&p);
        out[nm] = z_tau;
        out
    }

    /// Euclidean projection onto `C = K̂ × R^{m+1} × R₊` in place.
    fn project(&self, u: &mut DVector<f64>) {
        let n = self.n;
        let tau_ix = self.n1 + self.m1;
        cone_project_coords(self.prog.spec(), &mut u.as_mut_slice()[..n]);
        if u[n] < 0.0 {
            u[n] = 0.0;
        }
        if u[tau_ix] < 0.0 {
            u[tau_ix] = 0.0;
        }
    }

    /// Unscales the iterate at `τ > 0` and evaluates every termination
    /// quantity on the public candidate.
    fn evaluate_candidate(&self, u: &DVector<f64>, tau: f64) -> CandidateEval {
        let xhat = u.rows(0, self.n1) * (self.sigma / tau);
        let x = AlgebraElement::new(self.prog.spec().clone(), xhat.rows(0, self.n).into_owned())
            .expect("coordinate length matches the spec");
        let y_full = u.rows(self.n1, self.m1) * (self.rho / tau);
        let y = y_full.rows(0, self.m).into_owned();
        let nu = (-y_full[self.m]).max(0.0);

        let eq = (&self.a_hat * &xhat - &self.b_hat).norm();
        let slack = self.prog.dual_slack(&y, nu);
        let p_obj = self.prog.objective(&x);
        let d_obj = self.prog.dual_objective(&y, nu);
        let residuals = SolveResiduals {
            primal_eq: eq,
            trace_slack: self.prog.theta - x.trace(),
            dual_lambda_min: slack.lambda_min(),
            gap: (p_obj - d_obj).abs(),
        };
        CandidateEval { x, y, nu, p_obj, d_obj, residuals }
    }
}

fn join(z1: &DVector<f64>, z2: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(z1.len() + z2.len());
    out.rows_mut(0, z1.len()).copy_from(z1);
    out.rows_mut(z1.len(), z2.len()).copy_from(z2);
    out
}

fn candidate_result(
    status: SolveStatus,
    cand: CandidateEval,
    iterations: usize,
    start: Instant,
) -> SolveResult {
    SolveResult {
        status,
        objective: Some(cand.p_obj),
        x: Some(cand.x),
        y: Some(cand.y),
        nu: Some(cand.nu),
        certificate: None,
        iterations,
        solve_time: start.elapsed().as_secs_f64(),
        residuals: cand.residuals,
    }
}

fn empty_result(status: SolveStatus, iterations: usize, start: Instant) -> SolveResult {
    SolveResult {
        status,
        x: None,
        y: None,
        nu: None,
        objective: None,
        certificate: None,
        iterations,
        solve_time: start.elapsed().as_secs_f64(),
        residuals: SolveResiduals::default(),
    }
}

fn admm(prog: &ConicProgram, opts: &SolverOptions) -> SolveResult {
    let start = Instant::now();
    let emb = Embedding::new(prog);
    let (n1, m1, m) = (emb.n1, emb.m1, emb.m);
    let total = n1 + m1 + 1;
    let tau_ix = total - 1;

    let mut u = DVector::zeros(total);
    u[tau_ix] = 1.0;
    let mut v = DVector::zeros(total);
    v[tau_ix] = 1.0;

    let mut last: Option<CandidateEval> = None;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let w = &u + &v;
        let u_tilde = emb.apply_inv_iq(&w);
        let t = u_tilde * ALPHA + &u * (1.0 - ALPHA);
        let mut u_next = &t - &v;
        emb.project(&mut u_next);
        v = &v - &t + &u_next;
        u = u_next;
        iterations += 1;

        if iterations % CHECK_INTERVAL != 0 && iterations != opts.max_iter {
            continue;
        }
        if u.iter().any(|x| !x.is_finite()) {
            return empty_result(SolveStatus::Numerical, iterations, start);
        }

        let tau = u[tau_ix];
        if tau > TAU_FLOOR {
            let cand = emb.evaluate_candidate(&u, tau);
            let gap_ok = cand.residuals.gap
                <= opts.tol * (1.0 + cand.p_obj.abs().max(cand.d_obj.abs()));
            if cand.residuals.primal_eq <= opts.tol * (1.0 + emb.sigma)
                && cand.residuals.dual_lambda_min >= -0.9 * opts.tol
                && gap_ok
            {
                return candidate_result(SolveStatus::Optimal, cand, iterations, start);
            }
            last = Some(cand);
        }

        let uy = u.rows(n1, m1).into_owned();
        let q = emb.b_hat.dot(&uy);
        if q > 1e-12 * (1.0 + uy.norm()) {
            let y_hat = uy / q;
            let nu_hat = (-y_hat[m]).max(0.0);
            let cert = Certificate::new(prog, y_hat.rows(0, m).into_owned(), nu_hat);
            if verify_certificate(prog, &cert) {
                let mut result = empty_result(SolveStatus::PrimalInfeasible, iterations, start);
                result.certificate = Some(cert);
                return result;
            }
        }
    }

    match last {
        Some(cand) => candidate_result(SolveStatus::MaxIter, cand, iterations, start),
        None => empty_result(SolveStatus::Numerical, iterations, start),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jordan::{psd_from_matrix, BlockSpec, ConeSpec};
    use crate::seeds;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn elem(spec: &ConeSpec, coords: Vec<f64>) -> AlgebraElement {
        AlgebraElement::new(spec.clone(), DVector::from_vec(coords)).unwrap()
    }

    fn lp_program() -> ConicProgram {
        // min x₁ + 2x₂  s.t.  x₁ + x₂ = 1, x ≥ 0, trace ≤ 10.
        let spec = ConeSpec::orthant(2);
        ConicProgram::new(
            spec.clone(),
            elem(&spec, vec![1.0, 2.0]),
            vec![elem(&spec, vec![1.0, 1.0])],
            DVector::from_vec(vec![1.0]),
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn inverse_of_embedding_matrix_is_exact() {
        // Check (I + Q)·apply_inv_iq(w) = w against the dense matrix, on
        // both factor sides.
        let mut rng = seeds::rng(0x0501, 0);
        for (dim, m_rows) in [(2usize, 4usize), (6, 2)] {
            let spec = ConeSpec::orthant(dim);
            let rows: Vec<_> = (0..m_rows)
                .map(|_| {
                    elem(&spec, (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
                })
                .collect();
            let c = elem(&spec, (0..dim).map(|_| rng.random::<f64>()).collect());
            let b = DVector::from_fn(m_rows, |_, _| rng.random::<f64>());
            let prog = ConicProgram::new(spec, c, rows, b, 3.0).unwrap();
            let emb = Embedding::new(&prog);

            let (n1, m1) = (emb.n1, emb.m1);
            let total = n1 + m1 + 1;
            let c_s = {
                let mut v = DVector::zeros(n1);
                v.rows_mut(0, emb.n)
                    .copy_from(&(prog.c.metric_weighted_coords() / emb.rho));
                v
            };
            let b_s = &emb.b_hat / emb.sigma;
            let mut iq = DMatrix::identity(total, total);
            iq.view_mut((0, n1), (n1, m1)).copy_from(&(-&emb.a_hat_t));
            iq.view_mut((n1, 0), (m1, n1)).copy_from(&emb.a_hat);
            iq.view_mut((0, total - 1), (n1, 1)).copy_from(&c_s);
            iq.view_mut((n1, total - 1), (m1, 1)).copy_from(&(-&b_s));
            iq.view_mut((total - 1, 0), (1, n1)).copy_from(&(-c_s.transpose()));
            iq.view_mut((total - 1, n1), (1, m1)).copy_from(&b_s.transpose());

            let w = DVector::from_fn(total, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let u_tilde = emb.apply_inv_iq(&w);
            assert!(
                (iq * &u_tilde - &w).norm() <= 1e-10 * w.norm(),
                "m = {m_rows}, n = {dim}"
            );
            assert!(emb.gamma >= 1.0);
        }
    }

    #[test]
    fn lp_with_interior_trace_bound() {
        let prog = lp_program();
        let res = solve_builtin(&prog, &SolverOptions::default());
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(res.objective.unwrap(), 1.0, epsilon = 1e-4);
        let x = res.x.unwrap();
        assert_abs_diff_eq!(x.coords()[0], 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(x.coords()[1], 0.0, epsilon = 1e-3);
        assert!(prog.is_primal_feasible(&x, 1e-5));
        // Contract on the dual candidate.
        let slack = prog.dual_slack(res.y.as_ref().unwrap(), res.nu.unwrap());
        assert!(slack.lambda_min() >= -tol::SOLVER);
    }

    #[test]
    fn lp_with_active_trace_bound_prices_it() {
        // min −x₁ − x₂  s.t.  x₁ − x₂ = 0, trace ≤ 4: optimum (2, 2) with
        // the bound active, multiplier ν* = 1.
        let spec = ConeSpec::orthant(2);
        let prog = ConicProgram::new(
            spec.clone(),
            elem(&spec, vec![-1.0, -1.0]),
            vec![elem(&spec, vec![1.0, -1.0])],
            DVector::from_vec(vec![0.0]),
            4.0,
        )
        .unwrap();
        let res = solve_builtin(&prog, &SolverOptions::default());
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(res.objective.unwrap(), -4.0, epsilon = 1e-4);
        assert_abs_diff_eq!(res.nu.unwrap(), 1.0, epsilon = 1e-3);
        let x = res.x.unwrap();
        assert_abs_diff_eq!(x.coords()[0], 2.0, epsilon = 1e-3);
        assert_abs_diff_eq!(x.coords()[1], 2.0, epsilon = 1e-3);
    }

    #[test]
    fn sdp_unit_trace_finds_minimum_eigenvalue() {
        // min tr(CX) s.t. tr X = 1, X ⪰ 0 has value λ_min(C); for
        // C = [[2, 1], [1, 2]] that is 1, attained at the outer product of
        // (1, −1)/√2.
        let spec = ConeSpec::psd(2);
        let mut c_coords = vec![0.0; 3];
        psd_from_matrix(2, &DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]), &mut c_coords);
        let prog = ConicProgram::new(
            spec.clone(),
            elem(&spec, c_coords),
            vec![AlgebraElement::identity(&spec)],
            DVector::from_vec(vec![1.0]),
            10.0,
        )
        .unwrap();
        let res = solve_builtin(&prog, &SolverOptions::default());
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(res.objective.unwrap(), 1.0, epsilon = 1e-4);
        let x = res.x.unwrap();
        assert_abs_diff_eq!(x.coords()[0], 0.5, epsilon = 1e-3);
        assert_abs_diff_eq!(x.coords()[1], -std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-3);
        assert_abs_diff_eq!(x.coords()[2], 0.5, epsilon = 1e-3);
    }

    #[test]
    fn lorentz_program_lands_on_the_cone_boundary() {
        // min 2x₀ subject to 2x̄₁ = 1 inside the second-order cone: the
        // optimum is x = (1/2, 1/2, 0) with value 1.
        let spec = ConeSpec::lorentz(3);
        let prog = ConicProgram::new(
            spec.clone(),
            elem(&spec, vec![1.0, 0.0, 0.0]),
            vec![elem(&spec, vec![0.0, 1.0, 0.0])],
            DVector::from_vec(vec![1.0]),
            10.0,
        )
        .unwrap();
        let res = solve_builtin(&prog, &SolverOptions::default());
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(res.objective.unwrap(), 1.0, epsilon = 1e-4);
        let x = res.x.unwrap();
        assert_abs_diff_eq!(x.coords()[0], 0.5, epsilon = 1e-3);
        assert_abs_diff_eq!(x.coords()[1], 0.5, epsilon = 1e-3);
        assert_abs_diff_eq!(x.coords()[2], 0.0, epsilon = 1e-3);
    }

    #[test]
    fn mixed_cone_program_meets_the_public_contract() {
        let spec = ConeSpec::new(vec![
            BlockSpec::Orthant { dim: 2 },
            BlockSpec::Lorentz { dim: 3 },
            BlockSpec::Psd { side: 2 },
        ])
        .unwrap();
        let mut rng = seeds::rng(0x0501, 1);
        let n = spec.dimension();
        let rows: Vec<_> = (0..3)
            .map(|_| elem(&spec, (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()))
            .collect();
        let witness = AlgebraElement::identity(&spec);
        let b = DVector::from_iterator(3, rows.iter().map(|r| r.inner(&witness).unwrap()));
        let theta = 2.0 * witness.trace();
        let c = elem(&spec, (0..n).map(|_| rng.random::<f64>()).collect());
        let prog = ConicProgram::new(spec, c, rows, b, theta).unwrap();

        let res = solve_builtin(&prog, &SolverOptions::default());
        assert_eq!(res.status, SolveStatus::Optimal);
        let x = res.x.unwrap();
        let y = res.y.unwrap();
        assert_eq!(y.len(), 3);
        assert!(res.residuals.primal_eq <= tol::SOLVER * (1.0 + prog.b.norm() + prog.theta));
        assert!(res.residuals.dual_lambda_min >= -tol::SOLVER);
        assert!(res.nu.unwrap() >= 0.0);
        // The identity was feasible, so the optimum cannot exceed its value.
        assert!(res.objective.unwrap() <= prog.objective(&witness) + 1e-6);
        assert!(prog.is_primal_feasible(&x, 1e-5));
    }

    #[test]
    fn infeasible_lp_returns_verified_certificate() {
        // x = −1 with x ≥ 0 has the one-line refutation y = −1.
        let spec = ConeSpec::orthant(1);
        let prog = ConicProgram::new(
            spec.clone(),
            elem(&spec, vec![1.0]),
            vec![elem(&spec, vec![1.0])],
            DVector::from_vec(vec![-1.0]),
            2.0,
        )
        .unwrap();
        let res = solve_builtin(&prog, &SolverOptions::default());
        assert_eq!(res.status, SolveStatus::PrimalInfeasible);
        let cert = res.certificate.expect("certificate");
        assert!(verify_certificate(&prog, &cert));
        assert_abs_diff_eq!(cert.normalization, 1.0, epsilon = 1e-9);
        assert!(cert.slack_lambda_max <= tol::CERTIFICATE);
        assert!(res.x.is_none());
    }

    #[test]
    fn infeasible_sdp_returns_verified_certificate() {
        // tr X = −1 is impossible on the PSD cone.
        let spec = ConeSpec::psd(2);
        let prog = ConicProgram::new(
            spec.clone(),
            AlgebraElement::identity(&spec),
            vec![AlgebraElement::identity(&spec)],
            DVector::from_vec(vec![-1.0]),
            5.0,
        )
        .unwrap();
        let res = solve_builtin(&prog, &SolverOptions::default());
        assert_eq!(res.status, SolveStatus::PrimalInfeasible);
        let cert = res.certificate.expect("certificate");
        assert!(verify_certificate(&prog, &cert));
        assert!(cert.nu >= 0.0);
    }

    #[test]
    fn tampered_certificate_fails_verification() {
        let spec = ConeSpec::orthant(1);
        let prog = ConicProgram::new(
            spec.clone(),
            elem(&spec, vec![1.0]),
            vec![elem(&spec, vec![1.0])],
            DVector::from_vec(vec![-1.0]),
            2.0,
        )
        .unwrap();
        // Wrong sign: y = +1 certifies nothing.
        let bogus = Certificate::new(&prog, DVector::from_vec(vec![1.0]), 0.0);
        assert!(!verify_certificate(&prog, &bogus));
    }

    #[test]
    fn solves_are_deterministic() {
        let prog = lp_program();
        let opts = SolverOptions::default();
        let a = solve_builtin(&prog, &opts);
        let b = solve_builtin(&prog, &opts);
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.status, b.status);
        assert_eq!(
            a.x.unwrap().coords().as_slice(),
            b.x.unwrap().coords().as_slice(),
            "bitwise identical primal"
        );
    }

    #[test]
    fn registry_exposes_builtin() {
        let solver = lookup_solver("builtin").expect("builtin registered");
        assert_eq!(solver.name(), "builtin");
        assert!(lookup_solver("nonexistent").is_none());
        assert!(available_solvers().contains(&"builtin".to_string()));
        let res = solver.solve(&lp_program(), &SolverOptions::default());
        assert_eq!(res.status, SolveStatus::Optimal);
    }
}
