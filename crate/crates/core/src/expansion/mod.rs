//! Coefficients `T_q` of the asymptotic expansion
//! `N^{-n} Σ_{k ∈ Z^n ∩ NΔ} f(k/N) ~ Σ_q T_q N^{-q}`.
//!
//! Regular wedges use the multi-index face formula. Intervals and polygons
//! use closed-form vertex/edge operators. Three-dimensional polytopes are
//! reduced to their vertex wedges with a smooth partition of unity.
//! Closed forms and the partition path are expressed as lists of [`Term`]s,
//! each a coefficient times a face integral of a directional derivative.

mod gs;
mod interval;
mod polygon;
mod pou;
mod terms;
mod wedge;

use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::exact::{format_rational, to_f64, Rational};
use crate::functions::{FunctionError, SmoothFunction, MAX_JET_ORDER};
use crate::geometry::{DelzantPolytope, GeometryError};
use crate::quadrature::{QuadratureConfig, QuadratureError};

pub use gs::{gs_todd_oracle, perturbed_wedge_integral};
pub use interval::{interval_expansion, interval_terms};
pub use polygon::{audit_polygon_terms, polygon_expansion, polygon_terms, PolygonAudit};
pub use pou::{
    polytope3_expansion, polytope_pou_expansion, BumpProfile, PartitionOfUnity, PouOptions,
};
pub use terms::{evaluate_exact, evaluate_float, face_label, Term};
pub use wedge::{wedge_expansion, wedge_terms, WedgeTerm};

/// Default order cap for polygons.
pub const DEFAULT_POLYGON_ORDER: usize = 8;
/// Default order cap for the partition-of-unity path.
pub const DEFAULT_POU_ORDER: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpansionError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Function(#[from] FunctionError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(
        "partition of unity degenerates: min Σφ = {min_sum:e} with δ = {delta}; try a smaller δ"
    )]
    PartitionFailure { min_sum: f64, delta: f64 },
    #[error("expansion order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },
    #[error("no expansion path for dimension {0}")]
    UnsupportedDimension(usize),
    #[error("{0}")]
    InvalidInput(String),
}

/// An expansion coefficient: exact when every ingredient was exact.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Exact(Rational),
    Approx(f64),
}

impl Coefficient {
    pub fn to_f64(&self) -> f64 {
        match self {
            Coefficient::Exact(r) => to_f64(r),
            Coefficient::Approx(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            Coefficient::Exact(r) => Some(r),
            Coefficient::Approx(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Coefficient::Exact(_))
    }

    pub(crate) fn zero_like(other: &Coefficient) -> Coefficient {
        match other {
            Coefficient::Exact(_) => Coefficient::Exact(Rational::zero()),
            Coefficient::Approx(_) => Coefficient::Approx(0.0),
        }
    }

    pub fn add(&self, other: &Coefficient) -> Coefficient {
        match (self, other) {
            (Coefficient::Exact(a), Coefficient::Exact(b)) => Coefficient::Exact(a + b),
            _ => Coefficient::Approx(self.to_f64() + other.to_f64()),
        }
    }
}

impl fmt::Display for Coefficient {
    /// Exact values print as `p/q`, floats in shortest round-trip form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Exact(r) => write!(f, "{}", format_rational(r)),
            Coefficient::Approx(x) => write!(f, "{x:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Wedge,
    Interval,
    PolygonClosedForm,
    Polytope3Pou,
    GsOracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Wedge => "wedge",
            Method::Interval => "interval-closed-form",
            Method::PolygonClosedForm => "polygon-closed-form",
            Method::Polytope3Pou => "polytope3-pou",
            Method::GsOracle => "gs-oracle",
        })
    }
}

/// Contribution of one face to every order.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceContribution {
    pub label: String,
    pub active: Vec<usize>,
    pub per_order: Vec<Coefficient>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionResult {
    pub max_order: usize,
    /// `T_0, …, T_Q`.
    pub coefficients: Vec<Coefficient>,
    /// Per-face contributions; for each order they sum (in this order) to
    /// the coefficient.
    pub breakdown: Vec<FaceContribution>,
    pub method: Method,
    /// Accumulated quadrature error estimate (0 on exact paths).
    pub error_estimate: f64,
}

impl ExpansionResult {
    pub fn values(&self) -> Vec<f64> {
        self.coefficients.iter().map(Coefficient::to_f64).collect()
    }

    pub fn is_exact(&self) -> bool {
        self.coefficients.iter().all(Coefficient::is_exact)
    }

    /// `P_N = Σ_q T_q N^{-q}` in floating point.
    pub fn partial_sum_f64(&self, n: u64) -> f64 {
        let inv = 1.0 / n as f64;
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * inv + c.to_f64())
    }

    /// `P_N` exactly, when every coefficient is exact.
    pub fn partial_sum_exact(&self, n: u64) -> Option<Rational> {
        let inv = Rational::new(1.into(), n.into());
        let mut acc = Rational::zero();
        for c in self.coefficients.iter().rev() {
            acc = acc * &inv + c.exact()?;
        }
        Some(acc)
    }
}

pub(crate) fn check_order(q: usize) -> Result<(), ExpansionError> {
    if q > MAX_JET_ORDER {
        return Err(ExpansionError::OrderTooLarge {
            order: q,
            max: MAX_JET_ORDER,
        });
    }
    Ok(())
}

/// Options for [`expand`].
#[derive(Debug, Clone, Default)]
pub struct ExpandOptions {
    pub quadrature: QuadratureConfig,
    pub pou: PouOptions,
}

/// Expansion of a Delzant polytope with the dimension-appropriate method.
pub fn expand(
    p: &DelzantPolytope,
    f: &dyn SmoothFunction,
    q: usize,
    opts: &ExpandOptions,
) -> Result<ExpansionResult, ExpansionError> {
    if f.dim() != p.dim() {
        return Err(ExpansionError::InvalidInput(format!(
            "function of {} variables on a {}-dimensional polytope",
            f.dim(),
            p.dim()
        )));
    }
    match p.dim() {
        1 => interval_expansion(p, f, q, &opts.quadrature),
        2 => polygon_expansion(p, f, q, &opts.quadrature),
        3 => polytope3_expansion(p, f, q, &opts.pou, &opts.quadrature),
        n => Err(ExpansionError::UnsupportedDimension(n)),
    }
}

/// Evaluates a term list on the exact path when `f` is a polynomial and no
/// partition weights are involved, otherwise numerically.
pub(crate) fn evaluate_expansion(
    p: &DelzantPolytope,
    terms: &[Term],
    f: &dyn SmoothFunction,
    q: usize,
    method: Method,
    pou: Option<&PartitionOfUnity>,
    cfg: &QuadratureConfig,
) -> Result<ExpansionResult, ExpansionError> {
    let poly = if pou.is_none() {
        f.as_polynomial()
    } else {
        None
    };
    let (coefficients, breakdown, error_estimate) = match poly {
        Some(poly) => {
            let values = evaluate_exact(p, terms, &poly);
            let (c, b) = terms::assemble(p, terms, &values, q, terms::exact_combine);
            (c, b, 0.0)
        }
        None => {
            let (values, err) = evaluate_float(p, terms, f, pou, cfg)?;
            let (c, b) = terms::assemble(p, terms, &values, q, terms::float_combine);
            (c, b, err)
        }
    };
    Ok(ExpansionResult {
        max_order: q,
        coefficients,
        breakdown,
        method,
        error_estimate,
    })
}
