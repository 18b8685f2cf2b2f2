//! Lattice wedges, Delzant polytopes, face lattices and the polygon
//! constants `ζ(e)`, `μ(v)`, `η_i(v)`.
//!
//! All constructions run in exact integer/rational arithmetic. Floating-point
//! copies of the data are provided for the numerical layers.

mod format;
pub mod linalg;
mod polygon;
mod polytope;
mod transform;
mod wedge;

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::exact::Rational;

pub use format::{parse_polytope, write_polytope};
pub use polygon::{EdgeData, PolygonVertexFrame};
pub use polytope::{DelzantPolytope, Facet, PolytopeFace};
pub use transform::{random_unimodular, UnimodularMap};
pub use wedge::{Face, RegularWedge};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("normals do not form a lattice basis (|det| = {det})")]
    NotRegular { det: BigInt },
    #[error("vertex {vertex} is not regular: incident normals have |det| = {det}")]
    NotRegularVertex { vertex: String, det: BigInt },
    #[error("normal {index} is not primitive (gcd {gcd})")]
    NotPrimitive { index: usize, gcd: BigInt },
    #[error("vertex {vertex} lies on {count} facets (expected {expected})")]
    NotSimple {
        vertex: String,
        count: usize,
        expected: usize,
    },
    #[error("vertex {vertex} is not an integer point")]
    NonIntegerVertex { vertex: String },
    #[error("region is unbounded: the edge leaving vertex {vertex} along {direction} never ends")]
    Unbounded { vertex: String, direction: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Integer vector with arbitrary-precision coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVector(Vec<BigInt>);

impl LatticeVector {
    pub fn new(coords: Vec<BigInt>) -> Self {
        LatticeVector(coords)
    }

    pub fn from_i64(coords: &[i64]) -> Self {
        LatticeVector(coords.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        LatticeVector(vec![BigInt::zero(); n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = BigInt::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.0
    }

    pub fn dot(&self, other: &LatticeVector) -> BigInt {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn dot_rational(&self, x: &[Rational]) -> Rational {
        self.0
            .iter()
            .zip(x)
            .map(|(a, b)| Rational::from_integer(a.clone()) * b)
            .sum()
    }

    pub fn dot_f64(&self, x: &[f64]) -> f64 {
        self.to_f64().iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn norm2(&self) -> BigInt {
        self.dot(self)
    }

    pub fn content(&self) -> BigInt {
        linalg::content(&self.0)
    }

    pub fn is_primitive(&self) -> bool {
        self.content().is_one()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    /// Divides out the coordinate gcd.
    pub fn primitive(&self) -> LatticeVector {
        let g = self.content();
        if g.is_zero() || g.is_one() {
            return self.clone();
        }
        LatticeVector(self.0.iter().map(|x| x / &g).collect())
    }

    pub fn scale(&self, k: &BigInt) -> LatticeVector {
        LatticeVector(self.0.iter().map(|x| x * k).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0
            .iter()
            .map(|x| x.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn to_i64(&self) -> Option<Vec<i64>> {
        self.0.iter().map(ToPrimitive::to_i64).collect()
    }

    pub fn to_rational(&self) -> Vec<Rational> {
        self.0.iter().cloned().map(Rational::from_integer).collect()
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl Add for &LatticeVector {
    type Output = LatticeVector;
    fn add(self, rhs: &LatticeVector) -> LatticeVector {
        LatticeVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &LatticeVector {
    type Output = LatticeVector;
    fn sub(self, rhs: &LatticeVector) -> LatticeVector {
        LatticeVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &LatticeVector {
    type Output = LatticeVector;
    fn neg(self) -> LatticeVector {
        LatticeVector(self.0.iter().map(|a| -a).collect())
    }
}

/// Formats a rational point as `(a,b,...)`.
pub(crate) fn format_point(x: &[Rational]) -> String {
    let parts: Vec<String> = x.iter().map(crate::exact::format_rational).collect();
    format!("({})", parts.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_vectors() {
        assert!(LatticeVector::from_i64(&[3, -5]).is_primitive());
        assert!(!LatticeVector::from_i64(&[2, 0]).is_primitive());
        assert_eq!(
            LatticeVector::from_i64(&[4, -6]).primitive(),
            LatticeVector::from_i64(&[2, -3])
        );
        assert_eq!(LatticeVector::from_i64(&[1, 2]).to_string(), "(1,2)");
    }
}
