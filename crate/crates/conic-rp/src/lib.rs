//! Constraint-count reduction for symmetric conic programs.
//!
//! This crate implements a pipeline that takes a standard-form conic program
//! over a symmetric cone (products of orthant, Lorentz, and PSD blocks),
//! replaces its `m` linear equality constraints by `d < m` random
//! aggregations obtained from a Johnson–Lindenstrauss sketching matrix,
//! solves the smaller program, and maps the answer back:
//!
//! * [`jordan`] — Euclidean Jordan algebra layer: elements, spectral
//!   decompositions, eigenvalue bounds, and cone projections.
//! * [`model`] — the program data model (`min ⟨c,x⟩ s.t. 𝔸x = b,
//!   ⟨e,x⟩ ≤ θ, x ⪰ 0`), its dual view, and the flattened constraint
//!   operator.
//! * [`io`] — native JSON serialization and SDPA sparse import.
//! * [`sketch`] — random projection families and embedding-dimension rules.
//! * [`solver`] — a built-in operator-splitting solver with Farkas
//!   infeasibility certificates, plus a pluggable solver registry.
//! * [`pipeline`] — projection of programs, dual lifting, relaxed duals, and
//!   solution retrieval.
//! * [`bounds`] — a-priori error bounds and the Gaussian-width estimator
//!   used to evaluate them.
//! * [`instgen`] — seeded generators for feasible and certified-infeasible
//!   test instances.
//! * [`harness`] — batch experiment drivers and CSV/JSON report emission.

pub mod bounds;
pub mod harness;
pub mod instgen;
pub mod io;
pub mod jordan;
pub mod model;
pub mod pipeline;
pub mod seeds;
pub mod sketch;
pub mod solver;
pub mod tol;
