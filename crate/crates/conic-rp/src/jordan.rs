//! Euclidean Jordan algebra layer for symmetric-cone computations.
//!
//! A [`ConeSpec`] is an ordered product of primitive symmetric blocks:
//! nonnegative orthants, Lorentz (second-order) cones, and PSD cones.
//! Elements of the associated algebra are stored as flat coordinate vectors,
//! block by block. PSD blocks use the scaled symmetric vectorization — the
//! upper triangle read column by column with off-diagonal entries multiplied
//! by √2 — so that the canonical trace inner product `tr(XY)` equals the
//! Euclidean dot product of coordinates. Orthant blocks pair with the plain
//! dot product and Lorentz blocks with twice the dot product, which makes
//! the metric a block-scalar weighting (the `Q` weights below).
//!
//! The spectral machinery (decomposition into eigenvalues with a complete
//! system of orthogonal idempotents, eigenvalue extremes, and the projection
//! onto the cone of squares) is what the rest of the crate consumes: cone
//! membership is `λ_min ≥ 0`, and the cone projection clips negative
//! eigenvalues.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from structurally invalid algebra operations.
#[derive(Debug, Error)]
pub enum AlgebraError {
    /// Two elements from different cone specifications were combined.
    #[error("cone specifications differ: {0}")]
    SpecMismatch(String),
    /// A coordinate vector has the wrong length for its specification.
    #[error("expected {expected} coordinates for this cone, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A block descriptor is out of range (empty orthant, Lorentz dim < 2, …).
    #[error("invalid block: {0}")]
    InvalidBlock(String),
}

/// One primitive symmetric block of a product cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BlockSpec {
    /// Nonnegative orthant of dimension `dim` (componentwise product).
    Orthant { dim: usize },
    /// Lorentz cone `{x₀ ≥ ‖x̄‖₂}` on `dim` coordinates (`dim ≥ 2`).
    Lorentz { dim: usize },
    /// Cone of `side × side` PSD matrices in scaled vectorization.
    Psd { side: usize },
}

impl BlockSpec {
    /// Number of flat coordinates the block occupies.
    pub fn coord_len(&self) -> usize {
        match *self {
            BlockSpec::Orthant { dim } | BlockSpec::Lorentz { dim } => dim,
            BlockSpec::Psd { side } => side * (side + 1) / 2,
        }
    }

    /// Jordan-algebraic rank of the block: the number of eigenvalues it
    /// contributes to a spectral decomposition.
    pub fn degree(&self) -> usize {
        match *self {
            BlockSpec::Orthant { dim } => dim,
            BlockSpec::Lorentz { .. } => 2,
            BlockSpec::Psd { side } => side,
        }
    }

    /// Weight of the block in the algebra inner product relative to the
    /// Euclidean dot product of coordinates (the diagonal of `Q`).
    pub fn metric_weight(&self) -> f64 {
        match *self {
            BlockSpec::Lorentz { .. } => 2.0,
            _ => 1.0,
        }
    }

    fn validate(&self) -> Result<(), AlgebraError> {
        match *self {
            BlockSpec::Orthant { dim: 0 } => {
                Err(AlgebraError::InvalidBlock("orthant of dimension 0".into()))
            }
            BlockSpec::Lorentz { dim } if dim < 2 => Err(AlgebraError::InvalidBlock(format!(
                "Lorentz block needs dim ≥ 2, got {dim}"
            ))),
            BlockSpec::Psd { side: 0 } => {
                Err(AlgebraError::InvalidBlock("PSD block of side 0".into()))
            }
            _ => Ok(()),
        }
    }
}

/// An ordered product of primitive blocks defining both the cone and its
/// ambient algebra.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConeSpec {
    blocks: Vec<BlockSpec>,
}

impl ConeSpec {
    /// Builds a specification from its blocks, validating each one.
    pub fn new(blocks: Vec<BlockSpec>) -> Result<Self, AlgebraError> {
        if blocks.is_empty() {
            return Err(AlgebraError::InvalidBlock("empty cone specification".into()));
        }
        for b in &blocks {
            b.validate()?;
        }
        Ok(ConeSpec { blocks })
    }

    /// Single PSD block of the given side.
    pub fn psd(side: usize) -> Self {
        ConeSpec::new(vec![BlockSpec::Psd { side }]).expect("side ≥ 1")
    }

    /// Single orthant block of the given dimension.
    pub fn orthant(dim: usize) -> Self {
        ConeSpec::new(vec![BlockSpec::Orthant { dim }]).expect("dim ≥ 1")
    }

    /// Single Lorentz block on `dim ≥ 2` coordinates.
    pub fn lorentz(dim: usize) -> Self {
        ConeSpec::new(vec![BlockSpec::Lorentz { dim }]).expect("dim ≥ 2")
    }

    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    /// Total number of flat coordinates (the `n` of the flattened model).
    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(BlockSpec::coord_len).sum()
    }

    /// Total Jordan rank `r = Σ block degrees`; also `⟨e, e⟩`.
    pub fn degree(&self) -> usize {
        self.blocks.iter().map(BlockSpec::degree).sum()
    }

    /// Iterates blocks together with their coordinate offsets.
    pub fn block_offsets(&self) -> impl Iterator<Item = (usize, &BlockSpec)> {
        self.blocks.iter().scan(0usize, |off, b| {
            let cur = *off;
            *off += b.coord_len();
            Some((cur, b))
        })
    }

    /// `‖Q^{1/2}‖₂` for the metric weighting: √2 when any Lorentz block is
    /// present, 1 otherwise.
    pub fn q_half_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.metric_weight().sqrt())
            .fold(1.0, f64::max)
    }
}

/// An element of the algebra attached to a [`ConeSpec`], stored as flat
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    spec: ConeSpec,
    coords: DVector<f64>,
}

impl AlgebraElement {
    /// Wraps a coordinate vector, checking its length against the spec.
    pub fn new(spec: ConeSpec, coords: DVector<f64>) -> Result<Self, AlgebraError> {
        if coords.len() != spec.dimension() {
            return Err(AlgebraError::DimensionMismatch {
                expected: spec.dimension(),
                got: coords.len(),
            });
        }
        Ok(AlgebraElement { spec, coords })
    }

    /// Zero element.
    pub fn zeros(spec: &ConeSpec) -> Self {
        AlgebraElement {
            spec: spec.clone(),
            coords: DVector::zeros(spec.dimension()),
        }
    }

    /// The algebra identity `e`: all-ones on orthant blocks, `(1, 0, …)` on
    /// Lorentz blocks, the identity matrix on PSD blocks.
    pub fn identity(spec: &ConeSpec) -> Self {
        let mut coords = DVector::zeros(spec.dimension());
        for (off, block) in spec.block_offsets() {
            match *block {
                BlockSpec::Orthant { dim } => {
                    for k in 0..dim {
                        coords[off + k] = 1.0;
                    }
                }
                BlockSpec::Lorentz { .. } => coords[off] = 1.0,
                BlockSpec::Psd { side } => {
                    let mut idx = off;
                    for j in 0..side {
                        for i in 0..=j {
                            if i == j {
                                coords[idx] = 1.0;
                            }
                            idx += 1;
                        }
                    }
                }
            }
        }
        AlgebraElement { spec: spec.clone(), coords }
    }

    pub fn spec(&self) -> &ConeSpec {
        &self.spec
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut DVector<f64> {
        &mut self.coords
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.coords
    }

    fn check_same_spec(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.spec != other.spec {
            return Err(AlgebraError::SpecMismatch(format!(
                "{:?} vs {:?}",
                self.spec.blocks, other.spec.blocks
            )));
        }
        Ok(())
    }

    /// Jordan product `x ∘ y`, blockwise: componentwise on orthants,
    /// `(xᵀy; x₀ȳ + y₀x̄)` on Lorentz blocks, `(XY + YX)/2` on PSD blocks.
    pub fn jordan_product(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_same_spec(other)?;
        let mut out = DVector::zeros(self.coords.len());
        for (off, block) in self.spec.block_offsets() {
            let len = block.coord_len();
            let x = self.coords.as_slice();
            let y = other.coords.as_slice();
            let (x, y) = (&x[off..off + len], &y[off..off + len]);
            match *block {
                BlockSpec::Orthant { dim } => {
                    for k in 0..dim {
                        out[off + k] = x[k] * y[k];
                    }
                }
                BlockSpec::Lorentz { dim } => {
                    let dot: f64 = (0..dim).map(|k| x[k] * y[k]).sum();
                    out[off] = dot;
                    for k in 1..dim {
                        out[off + k] = x[0] * y[k] + y[0] * x[k];
                    }
                }
                BlockSpec::Psd { side } => {
                    let xm = psd_to_matrix(side, x);
                    let ym = psd_to_matrix(side, y);
                    let sym = (&xm * &ym + &ym * &xm) * 0.5;
                    psd_from_matrix(side, &sym, &mut out.as_mut_slice()[off..off + len]);
                }
            }
        }
        Ok(AlgebraElement { spec: self.spec.clone(), coords: out })
    }

    /// Canonical trace inner product: plain dot on orthant and PSD
    /// coordinates, twice the dot on Lorentz coordinates.
    pub fn inner(&self, other: &Self) -> Result<f64, AlgebraError> {
        self.check_same_spec(other)?;
        let mut acc = 0.0;
        for (off, block) in self.spec.block_offsets() {
            let len = block.coord_len();
            let w = block.metric_weight();
            let mut dot = 0.0;
            for k in off..off + len {
                dot += self.coords[k] * other.coords[k];
            }
            acc += w * dot;
        }
        Ok(acc)
    }

    /// Algebra norm `√⟨x, x⟩` (well defined by formal reality).
    pub fn norm(&self) -> f64 {
        self.inner(self).expect("same spec").sqrt()
    }

    /// `tr(x) = ⟨x, e⟩ = Σ eigenvalues`.
    pub fn trace(&self) -> f64 {
        let mut acc = 0.0;
        for (off, block) in self.spec.block_offsets() {
            match *block {
                BlockSpec::Orthant { dim } => {
                    for k in 0..dim {
                        acc += self.coords[off + k];
                    }
                }
                BlockSpec::Lorentz { .. } => acc += 2.0 * self.coords[off],
                BlockSpec::Psd { side } => {
                    let mut idx = off;
                    for j in 0..side {
                        for i in 0..=j {
                            if i == j {
                                acc += self.coords[idx];
                            }
                            idx += 1;
                        }
                    }
                }
            }
        }
        acc
    }

    /// Coordinates pre-multiplied by the metric weights, so that
    /// `⟨x, y⟩ = weighted(x) · coords(y)`.
    pub fn metric_weighted_coords(&self) -> DVector<f64> {
        let mut out = self.coords.clone();
        for (off, block) in self.spec.block_offsets() {
            let w = block.metric_weight();
            if w != 1.0 {
                for k in off..off + block.coord_len() {
                    out[k] *= w;
                }
            }
        }
        out
    }

    /// Full spectral decomposition `x = Σ λᵢ cᵢ` with eigenvalues ascending
    /// and a complete orthogonal system of primitive idempotents.
    pub fn spectral_decompose(&self) -> SpectralDecomposition {
        let mut pairs: Vec<(f64, DVector<f64>)> = Vec::with_capacity(self.spec.degree());
        let n = self.coords.len();
        for (off, block) in self.spec.block_offsets() {
            let len = block.coord_len();
            let x = &self.coords.as_slice()[off..off + len];
            match *block {
                BlockSpec::Orthant { dim } => {
                    for k in 0..dim {
                        let mut c = DVector::zeros(n);
                        c[off + k] = 1.0;
                        pairs.push((x[k], c));
                    }
                }
                BlockSpec::Lorentz { dim } => {
                    let x0 = x[0];
                    let barnorm: f64 = (1..dim).map(|k| x[k] * x[k]).sum::<f64>().sqrt();
                    // Unit direction for the spatial part; any unit vector
                    // works when x̄ = 0.
                    let mut dir = vec![0.0; dim - 1];
                    if barnorm > 0.0 {
                        for k in 1..dim {
                            dir[k - 1] = x[k] / barnorm;
                        }
                    } else {
                        dir[0] = 1.0;
                    }
                    for sign in [-1.0, 1.0] {
                        let mut c = DVector::zeros(n);
                        c[off] = 0.5;
                        for k in 1..dim {
                            c[off + k] = 0.5 * sign * dir[k - 1];
                        }
                        pairs.push((x0 + sign * barnorm, c));
                    }
                }
                BlockSpec::Psd { side } => {
                    let xm = psd_to_matrix(side, x);
                    let eig = xm.symmetric_eigen();
                    for j in 0..side {
                        let u = eig.eigenvectors.column(j);
                        let dyad = u * u.transpose();
                        let mut c = DVector::zeros(n);
                        psd_from_matrix(side, &dyad, &mut c.as_mut_slice()[off..off + len]);
                        pairs.push((eig.eigenvalues[j], c));
                    }
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let spec = self.spec.clone();
        SpectralDecomposition {
            eigenvalues: pairs.iter().map(|p| p.0).collect(),
            idempotents: pairs
                .into_iter()
                .map(|(_, c)| AlgebraElement { spec: spec.clone(), coords: c })
                .collect(),
            spec,
        }
    }

    /// Smallest eigenvalue across all blocks (no idempotents computed).
    pub fn lambda_min(&self) -> f64 {
        lambda_extreme_coords(&self.spec, self.coords.as_slice()).0
    }

    /// Largest eigenvalue across all blocks.
    pub fn lambda_max(&self) -> f64 {
        lambda_extreme_coords(&self.spec, self.coords.as_slice()).1
    }

    /// Membership in the cone of squares: `λ_min(x) ≥ −tol`.
    pub fn is_in_cone(&self, tol: f64) -> bool {
        self.lambda_min() >= -tol
    }

    /// Projection onto the cone of squares: clips negative eigenvalues.
    /// Because the metric is block-scalar, this is simultaneously the
    /// nearest point in the algebra norm and in the Euclidean coordinate
    /// norm.
    pub fn cone_project(&self) -> Self {
        let mut out = self.clone();
        cone_project_coords(&self.spec, out.coords.as_mut_slice());
        out
    }

    /// `self + alpha * other`, checking specs.
    pub fn add_scaled(&self, alpha: f64, other: &Self) -> Result<Self, AlgebraError> {
        self.check_same_spec(other)?;
        let mut out = self.clone();
        out.coords.axpy(alpha, &other.coords, 1.0);
        Ok(out)
    }

    /// `alpha * self`.
    pub fn scale(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.coords *= alpha;
        out
    }
}

/// Result of [`AlgebraElement::spectral_decompose`]: eigenvalues in
/// ascending order paired with primitive idempotents; the number of pairs is
/// the degree of the spec.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    spec: ConeSpec,
    pub eigenvalues: Vec<f64>,
    pub idempotents: Vec<AlgebraElement>,
}

impl SpectralDecomposition {
    /// Rebuilds `Σ λᵢ cᵢ`.
    pub fn reconstruct(&self) -> AlgebraElement {
        let mut out = AlgebraElement::zeros(&self.spec);
        for (lam, c) in self.eigenvalues.iter().zip(&self.idempotents) {
            out.coords.axpy(*lam, &c.coords, 1.0);
        }
        out
    }
}

/// In-place cone projection on raw coordinates (hot path for the solver).
pub fn cone_project_coords(spec: &ConeSpec, coords: &mut [f64]) {
    for (off, block) in spec.block_offsets() {
        let len = block.coord_len();
        let x = &mut coords[off..off + len];
        match *block {
            BlockSpec::Orthant { dim } => {
                for k in 0..dim {
                    if x[k] < 0.0 {
                        x[k] = 0.0;
                    }
                }
            }
            BlockSpec::Lorentz { dim } => {
                let x0 = x[0];
                let r: f64 = (1..dim).map(|k| x[k] * x[k]).sum::<f64>().sqrt();
                if x0 >= r {
                    // already inside
                } else if x0 <= -r {
                    for v in x.iter_mut() {
                        *v = 0.0;
                    }
                } else {
                    let coef = 0.5 * (x0 + r);
                    x[0] = coef;
                    for k in 1..dim {
                        x[k] *= coef / r;
                    }
                }
            }
            BlockSpec::Psd { side } => {
                let xm = psd_to_matrix(side, x);
                let mut eig = xm.symmetric_eigen();
                let mut any_negative = false;
                for v in eig.eigenvalues.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                        any_negative = true;
                    }
                }
                if any_negative {
                    let rebuilt = eig.recompose();
                    psd_from_matrix(side, &rebuilt, x);
                }
            }
        }
    }
}

/// `(λ_min, λ_max)` over all blocks of a raw coordinate vector.
pub fn lambda_extreme_coords(spec: &ConeSpec, coords: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (off, block) in spec.block_offsets() {
        let len = block.coord_len();
        let x = &coords[off..off + len];
        match *block {
            BlockSpec::Orthant { dim } => {
                for k in 0..dim {
                    lo = lo.min(x[k]);
                    hi = hi.max(x[k]);
                }
            }
            BlockSpec::Lorentz { dim } => {
                let r: f64 = (1..dim).map(|k| x[k] * x[k]).sum::<f64>().sqrt();
                lo = lo.min(x[0] - r);
                hi = hi.max(x[0] + r);
            }
            BlockSpec::Psd { side } => {
                let xm = psd_to_matrix(side, x);
                let ev = xm.symmetric_eigenvalues();
                for v in ev.iter() {
                    lo = lo.min(*v);
                    hi = hi.max(*v);
                }
            }
        }
    }
    (lo, hi)
}

/// Expands scaled-vectorization coordinates into a dense symmetric matrix.
pub fn psd_to_matrix(side: usize, coords: &[f64]) -> DMatrix<f64> {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = DMatrix::zeros(side, side);
    let mut idx = 0;
    for j in 0..side {
        for i in 0..=j {
            let v = if i == j { coords[idx] } else { coords[idx] * inv_sqrt2 };
            m[(i, j)] = v;
            m[(j, i)] = v;
            idx += 1;
        }
    }
    m
}

/// Flattens a symmetric matrix into scaled-vectorization coordinates.
pub fn psd_from_matrix(side: usize, m: &DMatrix<f64>, out: &mut [f64]) {
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut idx = 0;
    for j in 0..side {
        for i in 0..=j {
            out[idx] = if i == j { m[(i, j)] } else { m[(i, j)] * sqrt2 };
            idx += 1;
        }
    }
}
