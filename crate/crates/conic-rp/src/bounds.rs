//! Theoretical error bounds and the geometric quantities they need.
//!
//! Every report pairs a measured quantity with its predicted bound:
//!
//! * optimality gap: `|v(P) − v(P_T)| ≤ ε‖y*‖(‖𝔸‖₂θ + ‖b‖₂)`;
//! * feasibility error: `‖𝔸x_T − b‖₂ ≤ εθ‖𝔸‖₂(C₂·w(𝔹) + u·Δ)/√(ln n)`;
//! * retrieval cone bound: `λ_min(x̃) ≥ λ_min(x_T) − S` and
//! * retrieval objective shift: `|⟨c, x̃⟩ − ⟨c, x_T⟩| ≤ ‖c‖₂·S`, both with
//!   the common shift `S = εθκ(𝔸)‖Q^½‖₂(C₂·w(𝔹) + u·Δ)/√(ln n)`.
//!
//! Here `𝔹 = {x ⪰ 0 : ⟨e, x⟩ ≤ 1}` is the unit trace slice, `w(𝔹)` its
//! Gaussian width (Monte Carlo over exact per-block support functions), `Δ`
//! its diameter (exact for single orthant/PSD blocks, estimated and
//! flagged otherwise), and `u`, `C₂` absolute constants defaulting to
//! [`DEFAULT_U`] and [`DEFAULT_C2`]. Reports also carry the alternative
//! normalization by `√d` instead of `√(ln n)` as a parameter.
//!
//! The infeasibility-detection condition `ε‖ŷ‖₂(‖b‖₂ + ‖𝔸ᵀ‖) < 1` uses
//! the certificate-friendly estimate [`opnorm_bound`] `‖𝔸ᵀ‖ ≤ Σᵢ ρ(Aᵢ)`
//! (spectral radii), which needs no factorization.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::jordan::{lambda_extreme_coords, psd_from_matrix, psd_to_matrix, BlockSpec, ConeSpec};
use crate::model::{ConicProgram, LinearOperator};
use crate::seeds;

/// Default absolute constant `u` of the feasibility/retrieval bounds.
pub const DEFAULT_U: f64 = 2.0;
/// Default absolute constant `C₂` in front of the Gaussian width.
pub const DEFAULT_C2: f64 = 1.0;
/// Constant of the finite-set width bound `w(S) ≤ C̃·√(ln|S|)·diam(S)`.
pub const DEFAULT_C_TILDE: f64 = 2.0;

const STREAM_WIDTH: u64 = 0x5749_4454;
const STREAM_DIAM: u64 = 0x4449_414d;

/// `‖𝔸ᵀ‖ ≤ Σᵢ ρ(Aᵢ)`: sum of the spectral radii of the rows. Valid for
/// the ℓ₂ → spectral-norm operator `y ↦ Σᵢ yᵢAᵢ` since
/// `ρ(Σ yᵢAᵢ) ≤ Σ|yᵢ|ρ(Aᵢ) ≤ ‖y‖₂ Σᵢ ρ(Aᵢ)`.
pub fn opnorm_bound(program: &ConicProgram) -> f64 {
    program
        .a
        .iter()
        .map(|row| {
            let (lo, hi) = lambda_extreme_coords(program.spec(), row.coords().as_slice());
            lo.abs().max(hi.abs())
        })
        .sum()
}

/// Monte Carlo estimate of a Gaussian width `E_g sup_{x∈S} ⟨g, x⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub estimate: f64,
    /// Sample standard deviation of the mean.
    pub std_error: f64,
    pub samples: usize,
}

/// Estimates the Gaussian width of a set given its support function
/// `h(g) = sup_{x∈S} ⟨g, x⟩`, deterministically in `seed`.
pub fn estimate_gaussian_width<F: Fn(&DVector<f64>) -> f64>(
    dim: usize,
    support: F,
    samples: usize,
    seed: u64,
) -> WidthEstimate {
    assert!(samples >= 2, "need at least two samples");
    let mut rng = seeds::rng(seed, STREAM_WIDTH);
    let values: Vec<f64> = (0..samples)
        .map(|_| {
            let g = gaussian_vector(dim, &mut rng);
            support(&g)
        })
        .collect();
    let mean = values.iter().sum::<f64>() / samples as f64;
    let var =
        values.iter().map(|h| (h - mean) * (h - mean)).sum::<f64>() / (samples as f64 - 1.0);
    WidthEstimate { estimate: mean, std_error: (var / samples as f64).sqrt(), samples }
}

/// Support function of the unit trace slice `𝔹 = {x ⪰ 0 : ⟨e, x⟩ ≤ 1}` in
/// raw coordinates: the best single block wins, and `0 ∈ 𝔹` floors the
/// value at zero.
pub fn slice_support(spec: &ConeSpec, g: &DVector<f64>) -> f64 {
    let best = spec
        .block_offsets()
        .map(|(offset, block)| {
            block_support(block, &g.as_slice()[offset..offset + block.coord_len()])
        })
        .fold(f64::NEG_INFINITY, f64::max);
    best.max(0.0)
}

/// Width of the unit trace slice of `spec`.
pub fn slice_width(spec: &ConeSpec, samples: usize, seed: u64) -> WidthEstimate {
    estimate_gaussian_width(spec.dimension(), |g| slice_support(spec, g), samples, seed)
}

/// Diameter of the unit trace slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiameterEstimate {
    pub value: f64,
    /// False when the value is a Monte Carlo lower estimate.
    pub exact: bool,
}

/// `Δ = diam(𝔹)`: exact `√2` for a single orthant/PSD block (1 in the
/// scalar cases), otherwise the maximum pairwise distance among sampled
/// support-achieving points, flagged as an estimate.
pub fn cone_unit_diameter(spec: &ConeSpec, samples: usize, seed: u64) -> DiameterEstimate {
    if let [block] = spec.blocks() {
        match block {
            BlockSpec::Orthant { dim: 1 } | BlockSpec::Psd { side: 1 } => {
                return DiameterEstimate { value: 1.0, exact: true };
            }
            BlockSpec::Orthant { .. } | BlockSpec::Psd { .. } => {
                return DiameterEstimate { value: std::f64::consts::SQRT_2, exact: true };
            }
            BlockSpec::Lorentz { .. } => {}
        }
    }
    let mut rng = seeds::rng(seed, STREAM_DIAM);
    let mut points: Vec<DVector<f64>> = vec![DVector::zeros(spec.dimension())];
    for _ in 0..samples {
        let g = gaussian_vector(spec.dimension(), &mut rng);
        points.push(extreme_point(spec, &g));
    }
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.max((&points[i] - &points[j]).norm());
        }
    }
    DiameterEstimate { value: best, exact: false }
}

/// Support of one block's trace-one slice (not floored at zero).
fn block_support(block: &BlockSpec, g: &[f64]) -> f64 {
    match block {
        BlockSpec::Orthant { .. } => g.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        BlockSpec::Lorentz { .. } => {
            let gbar = g[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            0.5 * (g[0] + gbar)
        }
        BlockSpec::Psd { side } => {
            let mat = psd_to_matrix(*side, g);
            mat.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        }
    }
}

/// A point of `𝔹` achieving `slice_support(spec, g)`, in raw coordinates.
fn extreme_point(spec: &ConeSpec, g: &DVector<f64>) -> DVector<f64> {
    let mut best: Option<(f64, usize, &BlockSpec)> = None;
    for (offset, block) in spec.block_offsets() {
        let s = block_support(block, &g.as_slice()[offset..offset + block.coord_len()]);
        if best.is_none_or(|(b, _, _)| s > b) {
            best = Some((s, offset, block));
        }
    }
    let mut coords = DVector::zeros(spec.dimension());
    let (support, offset, block) = best.expect("spec has at least one block");
    if support <= 0.0 {
        return coords; // the origin is the maximizer
    }
    let g_block = &g.as_slice()[offset..offset + block.coord_len()];
    match block {
        BlockSpec::Orthant { .. } => {
            let (arg, _) = g_block
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("nonempty block");
            coords[offset + arg] = 1.0;
        }
        BlockSpec::Lorentz { dim } => {
            coords[offset] = 0.5;
            let gbar = g_block[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if gbar > 0.0 {
                for k in 1..*dim {
                    coords[offset + k] = 0.5 * g_block[k] / gbar;
                }
            }
        }
        BlockSpec::Psd { side } => {
            let eig = psd_to_matrix(*side, g_block).symmetric_eigen();
            let (arg, _) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("nonempty spectrum");
            let u = eig.eigenvectors.column(arg);
            let x = u * u.transpose();
            psd_from_matrix(*side, &x, &mut coords.as_mut_slice()[offset..]);
        }
    }
    coords
}

fn gaussian_vector(dim: usize, rng: &mut rand_chacha::ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal))
}

/// One measured-versus-predicted comparison, ready for CSV or JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Which bound this is (`optimality_gap`, `feasibility_error`, …).
    pub id: String,
    pub measured: f64,
    pub theoretical: f64,
    /// Whether the measurement respects the bound (direction depends on
    /// the bound: upper for errors, lower for the cone bound).
    pub holds: bool,
    pub params: BTreeMap<String, f64>,
    pub flags: Vec<String>,
}

impl ErrorReport {
    pub fn csv_header() -> &'static str {
        "id,measured,theoretical,holds,flags"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.9e},{:.9e},{},{}",
            self.id,
            self.measured,
            self.theoretical,
            self.holds,
            self.flags.join(";")
        )
    }
}

/// Everything the bound evaluations share for one (instance, sketch) pair.
#[derive(Debug, Clone)]
pub struct BoundContext<'a> {
    pub program: &'a ConicProgram,
    pub operator: &'a LinearOperator,
    /// Embedding dimension of the sketch.
    pub d: usize,
    pub epsilon: f64,
    pub u: f64,
    pub c2: f64,
    pub width: WidthEstimate,
    pub diameter: DiameterEstimate,
}

impl BoundContext<'_> {
    /// `C₂·w(𝔹) + u·Δ`.
    fn geometry_margin(&self) -> f64 {
        self.c2 * self.width.estimate + self.u * self.diameter.value
    }

    fn sqrt_ln_n(&self) -> f64 {
        ((self.program.n().max(2)) as f64).ln().sqrt()
    }

    /// Common retrieval shift `S` (see the module docs).
    fn retrieval_shift(&self) -> f64 {
        self.epsilon
            * self.program.theta
            * self.operator.condition_number()
            * self.program.spec().q_half_norm()
            * self.geometry_margin()
            / self.sqrt_ln_n()
    }

    fn base_params(&self) -> BTreeMap<String, f64> {
        let mut p = BTreeMap::new();
        p.insert("epsilon".into(), self.epsilon);
        p.insert("theta".into(), self.program.theta);
        p.insert("a_norm".into(), self.operator.sigma_max());
        p.insert("u".into(), self.u);
        p.insert("c2".into(), self.c2);
        p.insert("width".into(), self.width.estimate);
        p.insert("diameter".into(), self.diameter.value);
        p.insert("d".into(), self.d as f64);
        p
    }

    fn base_flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        if !self.diameter.exact {
            flags.push("diameter_estimated".to_string());
        }
        if self.program.n() < 2 {
            flags.push("ln_n_clamped".to_string());
        }
        flags
    }

    /// `|v(P) − v(P_T)| ≤ ε‖y*‖(‖𝔸‖₂θ + ‖b‖₂)`, `y*` dual-optimal
    /// for `(P)`.
    pub fn optimality(&self, y_norm: f64, measured_gap: f64) -> ErrorReport {
        let theoretical = self.epsilon
            * y_norm
            * (self.operator.sigma_max() * self.program.theta + self.program.b.norm());
        let mut params = self.base_params();
        params.insert("y_norm".into(), y_norm);
        ErrorReport {
            id: "optimality_gap".into(),
            measured: measured_gap,
            theoretical,
            holds: measured_gap <= theoretical,
            params,
            flags: self.base_flags(),
        }
    }

    /// `‖𝔸x_T − b‖₂ ≤ εθ‖𝔸‖₂(C₂w + uΔ)/√(ln n)`.
    pub fn feasibility(&self, measured_residual: f64) -> ErrorReport {
        let scale = self.epsilon
            * self.program.theta
            * self.operator.sigma_max()
            * self.geometry_margin();
        let theoretical = scale / self.sqrt_ln_n();
        let mut params = self.base_params();
        params.insert("theoretical_sqrt_d".into(), scale / (self.d as f64).sqrt());
        ErrorReport {
            id: "feasibility_error".into(),
            measured: measured_residual,
            theoretical,
            holds: measured_residual <= theoretical,
            params,
            flags: self.base_flags(),
        }
    }

    /// Lower bound `λ_min(x̃) ≥ λ_min(x_T) − S`.
    pub fn retrieval_cone(
        &self,
        lambda_min_projected: f64,
        lambda_min_retrieved: f64,
    ) -> ErrorReport {
        let shift = self.retrieval_shift();
        let theoretical = lambda_min_projected - shift;
        let mut params = self.base_params();
        params.insert("kappa".into(), self.operator.condition_number());
        params.insert("q_half_norm".into(), self.program.spec().q_half_norm());
        params.insert("lambda_min_projected".into(), lambda_min_projected);
        params.insert(
            "theoretical_sqrt_d".into(),
            lambda_min_projected - shift * self.sqrt_ln_n() / (self.d as f64).sqrt(),
        );
        ErrorReport {
            id: "retrieval_cone".into(),
            measured: lambda_min_retrieved,
            theoretical,
            holds: lambda_min_retrieved >= theoretical,
            params,
            flags: self.base_flags(),
        }
    }

    /// `|⟨c, x̃⟩ − ⟨c, x_T⟩| ≤ ‖c‖₂·S`.
    pub fn retrieval_objective(&self, measured_shift: f64) -> ErrorReport {
        let c_norm = self.program.c.coords().norm();
        let shift = self.retrieval_shift();
        let theoretical = c_norm * shift;
        let mut params = self.base_params();
        params.insert("kappa".into(), self.operator.condition_number());
        params.insert("q_half_norm".into(), self.program.spec().q_half_norm());
        params.insert("c_norm".into(), c_norm);
        params.insert(
            "theoretical_sqrt_d".into(),
            c_norm * shift * self.sqrt_ln_n() / (self.d as f64).sqrt(),
        );
        ErrorReport {
            id: "retrieval_objective".into(),
            measured: measured_shift,
            theoretical,
            holds: measured_shift <= theoretical,
            params,
            flags: self.base_flags(),
        }
    }
}

/// The detection condition `ε‖ŷ‖₂(‖b‖₂ + ‖𝔸ᵀ‖) < 1` for an infeasible
/// program with certificate norm `‖ŷ‖₂`, using [`opnorm_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityCondition {
    pub lhs: f64,
    pub holds: bool,
}

pub fn eval_infeasibility_condition(
    program: &ConicProgram,
    certificate_norm: f64,
    epsilon: f64,
) -> InfeasibilityCondition {
    let lhs = epsilon * certificate_norm * (program.b.norm() + opnorm_bound(program));
    InfeasibilityCondition { lhs, holds: lhs < 1.0 }
}
