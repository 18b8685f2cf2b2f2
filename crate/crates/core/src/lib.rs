//! Euler–MacLaurin expansions of lattice Riemann sums
//! `(1/N^n) Σ_{k ∈ Z^n ∩ NΔ} f(k/N) ~ Σ_q T_q(Δ, f) N^{-q}` over regular
//! wedges, Delzant polygons and 3-dimensional Delzant polytopes, together
//! with a brute-force enumeration oracle to check them against.

pub mod analysis;
pub mod exact;
pub mod expansion;
pub mod functions;
pub mod geometry;
pub mod quadrature;

use thiserror::Error;

/// Any error raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Function(#[from] functions::FunctionError),
    #[error(transparent)]
    Quadrature(#[from] quadrature::QuadratureError),
    #[error(transparent)]
    Expansion(#[from] expansion::ExpansionError),
    #[error(transparent)]
    Analysis(#[from] analysis::AnalysisError),
}
