//! Seeded random instance generation with built-in ground truth.
//!
//! Feasible instances come with a strictly interior witness `x⁰` (so the
//! right-hand side `b = 𝔸x⁰` is consistent by construction and Slater's
//! condition holds), infeasible instances with a Farkas certificate
//! `(ŷ, ν̂)` built to a margin: `Σᵢ ŷᵢAᵢ − ν̂e ⪯ −0.1·e` and
//! `bᵀŷ − θν̂ = 1` exactly. Either way the ground truth ships inside the
//! returned [`GeneratedInstance`] so downstream experiments never have to
//! trust a solver to know the instance's status.
//!
//! Constraint rows are sparse with an exact per-block count: each block of
//! each row receives `max(1, round(density · len))` nonzero coordinates at
//! distinct positions, with values drawn uniformly from `[0, 1)`. For PSD
//! blocks the draw happens in matrix entries (upper triangle, mirrored), so
//! off-diagonal coordinates carry the usual `√2` factor.

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jordan::{AlgebraElement, BlockSpec, ConeSpec};
use crate::model::{ConicProgram, ModelError};
use crate::seeds;
use crate::solver::Certificate;

/// Stream tags separating the generator's independent random draws.
const STREAM_ROWS: u64 = 0x524f_5753;
const STREAM_WITNESS: u64 = 0x5749_544e;
const STREAM_COST: u64 = 0x434f_5354;
const STREAM_CERT: u64 = 0x4345_5254;

/// What goes into the cost element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    /// `c = e`, so the objective is the trace.
    #[default]
    Identity,
    /// Dense coordinates drawn uniformly from `[0, 1)`.
    Random,
}

/// Recipe for one random instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub cone: ConeSpec,
    /// Number of equality constraints.
    pub m: usize,
    /// Target fraction of nonzero coordinates per block of each row.
    pub density: f64,
    #[serde(default)]
    pub cost: CostKind,
    /// `θ` is this multiple of the witness trace (feasible case) or of the
    /// cone degree (infeasible case); must exceed 1.
    #[serde(default = "default_theta_factor")]
    pub theta_factor: f64,
    pub seed: u64,
}

fn default_theta_factor() -> f64 {
    2.0
}

impl GenSpec {
    /// Recipe with the default cost (identity) and trace-bound factor 2.
    pub fn new(cone: ConeSpec, m: usize, density: f64, seed: u64) -> Self {
        GenSpec { cone, m, density, cost: CostKind::Identity, theta_factor: 2.0, seed }
    }

    fn validate(&self) -> Result<(), GenError> {
        if self.m == 0 {
            return Err(GenError::NoConstraints);
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(GenError::InvalidDensity(self.density));
        }
        if !(self.theta_factor > 1.0 && self.theta_factor.is_finite()) {
            return Err(GenError::InvalidThetaFactor(self.theta_factor));
        }
        Ok(())
    }
}

/// Generation failures.
#[derive(Debug, Error)]
pub enum GenError {
    #[error("density must lie in (0, 1], got {0}")]
    InvalidDensity(f64),
    #[error("theta factor must be finite and exceed 1, got {0}")]
    InvalidThetaFactor(f64),
    #[error("at least one constraint row is required")]
    NoConstraints,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A generated program together with its ground truth: exactly one of
/// `witness` (feasible case) and `certificate` (infeasible case) is set.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub program: ConicProgram,
    pub witness: Option<AlgebraElement>,
    pub certificate: Option<Certificate>,
}

/// Feasible instance: sparse rows, interior witness rescaled to trace
/// `= degree`, `b = 𝔸x⁰`, `θ = theta_factor · ⟨e, x⁰⟩`.
pub fn generate_feasible(spec: &GenSpec) -> Result<GeneratedInstance, GenError> {
    spec.validate()?;
    let rows = sample_rows(spec);
    let witness = sample_witness(&spec.cone, &mut seeds::rng(spec.seed, STREAM_WITNESS));
    let b = DVector::from_iterator(
        spec.m,
        rows.iter().map(|r| r.inner(&witness).expect("same spec")),
    );
    let theta = spec.theta_factor * witness.trace();
    let c = sample_cost(spec);
    let program = ConicProgram::new(spec.cone.clone(), c, rows, b, theta)?;
    Ok(GeneratedInstance { program, witness: Some(witness), certificate: None })
}

/// Infeasible instance: same row/cost distribution, but the right-hand
/// side is pushed along a drawn multiplier vector `ŷ` until the Farkas
/// normalization `bᵀŷ − θν̂ = 1` holds exactly, with
/// `ν̂ = max(0, λ_max(Σᵢ ŷᵢAᵢ)) + 0.1` supplying a strict margin.
pub fn generate_infeasible(spec: &GenSpec) -> Result<GeneratedInstance, GenError> {
    spec.validate()?;
    let rows = sample_rows(spec);
    let witness = sample_witness(&spec.cone, &mut seeds::rng(spec.seed, STREAM_WITNESS));
    let b0 = DVector::from_iterator(
        spec.m,
        rows.iter().map(|r| r.inner(&witness).expect("same spec")),
    );
    let theta = spec.theta_factor * spec.cone.degree() as f64;

    let mut cert_rng = seeds::rng(spec.seed, STREAM_CERT);
    let y_hat = DVector::from_fn(spec.m, |_, _| cert_rng.random::<f64>());
    let mut combined = AlgebraElement::zeros(&spec.cone);
    for (yi, row) in y_hat.iter().zip(&rows) {
        combined = combined.add_scaled(*yi, row).expect("same spec");
    }
    let nu_hat = combined.lambda_max().max(0.0) + 0.1;

    // Shift b along ŷ so that bᵀŷ − θν̂ lands exactly on 1.
    let t = (1.0 + theta * nu_hat - b0.dot(&y_hat)) / y_hat.dot(&y_hat);
    let b = &b0 + &y_hat * t;

    let c = sample_cost(spec);
    let program = ConicProgram::new(spec.cone.clone(), c, rows, b, theta)?;
    let certificate = Certificate::new(&program, y_hat, nu_hat);
    Ok(GeneratedInstance { program, witness: None, certificate: Some(certificate) })
}

/// All `m` sparse rows, from the row stream of `spec.seed`.
fn sample_rows(spec: &GenSpec) -> Vec<AlgebraElement> {
    let mut rng = seeds::rng(spec.seed, STREAM_ROWS);
    (0..spec.m).map(|_| sample_row(&spec.cone, spec.density, &mut rng)).collect()
}

fn sample_row(cone: &ConeSpec, density: f64, rng: &mut ChaCha8Rng) -> AlgebraElement {
    let mut coords = DVector::zeros(cone.dimension());
    for (offset, block) in cone.block_offsets() {
        let len = block.coord_len();
        let count = ((density * len as f64).round() as usize).clamp(1, len);
        let mut picks: Vec<usize> = sample(rng, len, count).iter().collect();
        picks.sort_unstable();
        for p in picks {
            let value = rng.random::<f64>();
            coords[offset + p] = match block {
                // Matrix entry v sits at (i, j) and (j, i); its svec
                // coordinate is √2·v off the diagonal.
                BlockSpec::Psd { .. } if !utri_is_diagonal(p) => value * std::f64::consts::SQRT_2,
                _ => value,
            };
        }
    }
    AlgebraElement::new(cone.clone(), coords).expect("dimension matches")
}

/// Whether position `p` of a column-major upper triangle is a diagonal
/// entry, i.e. `p = j(j+1)/2 + j` for some column `j`.
fn utri_is_diagonal(p: usize) -> bool {
    let mut j = (((8 * p + 1) as f64).sqrt() as usize) / 2;
    while (j + 1) * (j + 2) / 2 <= p {
        j += 1;
    }
    while j * (j + 1) / 2 > p {
        j -= 1;
    }
    p - j * (j + 1) / 2 == j
}

/// Strictly interior point, rescaled so its trace equals the cone degree.
fn sample_witness(cone: &ConeSpec, rng: &mut ChaCha8Rng) -> AlgebraElement {
    let mut coords = DVector::zeros(cone.dimension());
    for (offset, block) in cone.block_offsets() {
        match block {
            BlockSpec::Orthant { dim } => {
                for k in 0..*dim {
                    coords[offset + k] = 0.1 + rng.random::<f64>();
                }
            }
            BlockSpec::Lorentz { dim } => {
                let mut norm_sq = 0.0;
                for k in 1..*dim {
                    let v = rng.random::<f64>() - 0.5;
                    coords[offset + k] = v;
                    norm_sq += v * v;
                }
                coords[offset] = norm_sq.sqrt() + 0.1 + rng.random::<f64>();
            }
            BlockSpec::Psd { side } => {
                let s = *side;
                let g = nalgebra::DMatrix::from_fn(s, s, |_, _| rng.random::<f64>() * 2.0 - 1.0);
                let x = g.transpose() * &g + nalgebra::DMatrix::identity(s, s) * (0.1 * s as f64);
                crate::jordan::psd_from_matrix(s, &x, &mut coords.as_mut_slice()[offset..]);
            }
        }
    }
    let raw = AlgebraElement::new(cone.clone(), coords).expect("dimension matches");
    let scale = cone.degree() as f64 / raw.trace();
    raw.scale(scale)
}

fn sample_cost(spec: &GenSpec) -> AlgebraElement {
    match spec.cost {
        CostKind::Identity => AlgebraElement::identity(&spec.cone),
        CostKind::Random => {
            let mut rng = seeds::rng(spec.seed, STREAM_COST);
            AlgebraElement::new(
                spec.cone.clone(),
                DVector::from_fn(spec.cone.dimension(), |_, _| rng.random::<f64>()),
            )
            .expect("dimension matches")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_builtin, verify_certificate, SolveStatus, SolverOptions};
    use crate::tol;
    use approx::assert_abs_diff_eq;

    fn mixed_cone() -> ConeSpec {
        ConeSpec::new(vec![
            BlockSpec::Orthant { dim: 4 },
            BlockSpec::Lorentz { dim: 3 },
            BlockSpec::Psd { side: 3 },
        ])
        .unwrap()
    }

    #[test]
    fn feasible_witness_is_interior_and_consistent() {
        let gen = GenSpec::new(mixed_cone(), 6, 0.4, 7);
        let inst = generate_feasible(&gen).unwrap();
        let witness = inst.witness.expect("witness present");
        assert!(inst.certificate.is_none());
        assert!(witness.lambda_min() > 0.0, "strictly interior");
        // Rescaled to trace = degree (4 + 2 + 3 here), bound at factor 2.
        assert_abs_diff_eq!(witness.trace(), 9.0, epsilon = tol::ALGEBRAIC);
        assert_abs_diff_eq!(inst.program.theta, 18.0, epsilon = tol::ALGEBRAIC);
        assert!(inst.program.is_primal_feasible(&witness, tol::ALGEBRAIC));
    }

    #[test]
    fn row_sparsity_hits_the_target_count() {
        let cone = ConeSpec::new(vec![
            BlockSpec::Orthant { dim: 200 },
            BlockSpec::Psd { side: 20 },
        ])
        .unwrap();
        let gen = GenSpec::new(cone.clone(), 5, 0.3, 11);
        let inst = generate_feasible(&gen).unwrap();
        for row in &inst.program.a {
            let orthant_nnz =
                row.coords().as_slice()[..200].iter().filter(|v| **v != 0.0).count();
            let psd_nnz = row.coords().as_slice()[200..].iter().filter(|v| **v != 0.0).count();
            assert_eq!(orthant_nnz, 60, "round(0.3 · 200)");
            assert_eq!(psd_nnz, 63, "round(0.3 · 210)");
        }
    }

    #[test]
    fn every_block_of_every_row_is_touched_at_tiny_density() {
        let gen = GenSpec::new(mixed_cone(), 8, 0.01, 3);
        let inst = generate_feasible(&gen).unwrap();
        for row in &inst.program.a {
            for (offset, block) in inst.program.spec().block_offsets() {
                let nnz = row.coords().as_slice()[offset..offset + block.coord_len()]
                    .iter()
                    .filter(|v| **v != 0.0)
                    .count();
                assert_eq!(nnz, 1, "minimum one entry per block");
            }
        }
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let gen = GenSpec::new(mixed_cone(), 5, 0.5, 42);
        let a = generate_feasible(&gen).unwrap();
        let b = generate_feasible(&gen).unwrap();
        assert_eq!(a.program, b.program);
        let mut other = gen.clone();
        other.seed = 43;
        let c = generate_feasible(&other).unwrap();
        assert_ne!(a.program, c.program);
    }

    #[test]
    fn infeasible_certificate_verifies_with_margin() {
        let mut gen = GenSpec::new(mixed_cone(), 6, 0.4, 19);
        gen.cost = CostKind::Random;
        let inst = generate_infeasible(&gen).unwrap();
        assert!(inst.witness.is_none());
        let cert = inst.certificate.expect("certificate present");
        assert!(verify_certificate(&inst.program, &cert));
        assert_abs_diff_eq!(cert.normalization, 1.0, epsilon = tol::ALGEBRAIC);
        assert!(cert.slack_lambda_max <= -0.05, "margin kept: {}", cert.slack_lambda_max);
        assert!(cert.nu >= 0.1);
    }

    #[test]
    fn solver_confirms_generated_statuses() {
        let gen = GenSpec::new(mixed_cone(), 4, 0.5, 23);
        let feasible = generate_feasible(&gen).unwrap();
        let res = solve_builtin(&feasible.program, &SolverOptions::default());
        assert_eq!(res.status, SolveStatus::Optimal);
        // The witness bounds the optimum from above.
        assert!(
            res.objective.unwrap()
                <= feasible.program.objective(feasible.witness.as_ref().unwrap()) + 1e-6
        );

        let infeasible = generate_infeasible(&gen).unwrap();
        let res = solve_builtin(&infeasible.program, &SolverOptions::default());
        assert_eq!(res.status, SolveStatus::PrimalInfeasible);
        assert!(verify_certificate(&infeasible.program, &res.certificate.unwrap()));
    }

    #[test]
    fn bad_recipes_are_rejected() {
        let cone = ConeSpec::orthant(3);
        assert!(matches!(
            generate_feasible(&GenSpec::new(cone.clone(), 2, 0.0, 0)),
            Err(GenError::InvalidDensity(_))
        ));
        assert!(matches!(
            generate_feasible(&GenSpec::new(cone.clone(), 0, 0.5, 0)),
            Err(GenError::NoConstraints)
        ));
        let mut gen = GenSpec::new(cone, 2, 0.5, 0);
        gen.theta_factor = 1.0;
        assert!(matches!(
            generate_infeasible(&gen),
            Err(GenError::InvalidThetaFactor(_))
        ));
    }
}
