use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::{det, inverse, to_rational_matrix};
use super::{GeometryError, LatticeVector};
use crate::exact::Rational;

/// Integer affine map `x ↦ A x + t` with `|det A| = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnimodularMap {
    a: Vec<Vec<BigInt>>,
    a_inv: Vec<Vec<BigInt>>,
    t: Vec<BigInt>,
}

impl UnimodularMap {
    pub fn new(a: Vec<Vec<BigInt>>, t: Vec<BigInt>) -> Result<Self, GeometryError> {
        let n = a.len();
        if a.iter().any(|r| r.len() != n) || t.len() != n {
            return Err(GeometryError::InvalidInput(
                "map dimensions disagree".into(),
            ));
        }
        let d = det(&a);
        if !d.abs().is_one() {
            return Err(GeometryError::NotRegular { det: d.abs() });
        }
        let inv = inverse(&to_rational_matrix(&a)).expect("unimodular matrix is invertible");
        let a_inv = inv
            .into_iter()
            .map(|r| r.into_iter().map(|x| x.to_integer()).collect())
            .collect();
        Ok(UnimodularMap { a, a_inv, t })
    }

    pub fn from_i64(a: &[&[i64]], t: &[i64]) -> Result<Self, GeometryError> {
        Self::new(
            a.iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
            t.iter().map(|&x| BigInt::from(x)).collect(),
        )
    }

    pub fn identity(n: usize) -> Self {
        let a: Vec<Vec<BigInt>> = (0..n)
            .map(|i| (0..n).map(|j| BigInt::from(u8::from(i == j))).collect())
            .collect();
        UnimodularMap {
            a_inv: a.clone(),
            a,
            t: vec![BigInt::zero(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn matrix(&self) -> &[Vec<BigInt>] {
        &self.a
    }

    pub fn inverse_matrix(&self) -> &[Vec<BigInt>] {
        &self.a_inv
    }

    pub fn translation(&self) -> &[BigInt] {
        &self.t
    }

    pub fn map_vector(&self, v: &LatticeVector) -> LatticeVector {
        LatticeVector::new(
            self.a
                .iter()
                .map(|row| row.iter().zip(v.coords()).map(|(a, x)| a * x).sum())
                .collect(),
        )
    }

    pub fn map_point(&self, x: &[Rational]) -> Vec<Rational> {
        self.a
            .iter()
            .zip(&self.t)
            .map(|(row, t)| {
                row.iter()
                    .zip(x)
                    .map(|(a, xi)| Rational::from_integer(a.clone()) * xi)
                    .sum::<Rational>()
                    + Rational::from_integer(t.clone())
            })
            .collect()
    }

    pub fn map_point_f64(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.t)
            .map(|(row, t)| {
                row.iter()
                    .zip(x)
                    .map(|(a, xi)| big_f64(a) * xi)
                    .sum::<f64>()
                    + big_f64(t)
            })
            .collect()
    }

    /// `A^{-1}(y - t)`.
    pub fn inverse_point_f64(&self, y: &[f64]) -> Vec<f64> {
        let shifted: Vec<f64> = y.iter().zip(&self.t).map(|(y, t)| y - big_f64(t)).collect();
        self.a_inv
            .iter()
            .map(|row| row.iter().zip(&shifted).map(|(a, x)| big_f64(a) * x).sum())
            .collect()
    }

    /// Image of the half-space `⟨u, x⟩ ≤ c`: `u' = A^{-T} u`, `c' = c + ⟨u', t⟩`.
    pub fn map_halfspace(&self, u: &LatticeVector, c: &BigInt) -> (LatticeVector, BigInt) {
        let n = self.dim();
        let u2 = LatticeVector::new(
            (0..n)
                .map(|j| (0..n).map(|i| &self.a_inv[i][j] * &u.coords()[i]).sum())
                .collect(),
        );
        let shift: BigInt = u2.coords().iter().zip(&self.t).map(|(a, b)| a * b).sum();
        (u2, c + shift)
    }

    /// Composite map `self ∘ other`.
    pub fn compose(&self, other: &UnimodularMap) -> UnimodularMap {
        let n = self.dim();
        let a: Vec<Vec<BigInt>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| &self.a[i][k] * &other.a[k][j]).sum())
                    .collect()
            })
            .collect();
        let t = self
            .a
            .iter()
            .zip(&self.t)
            .map(|(row, ti)| row.iter().zip(&other.t).map(|(a, x)| a * x).sum::<BigInt>() + ti)
            .collect();
        UnimodularMap::new(a, t).expect("product of unimodular maps")
    }

    /// True when `A` is a signed permutation matrix (a lattice isometry).
    pub fn is_orthogonal(&self) -> bool {
        self.a.iter().all(|row| {
            row.iter().filter(|x| !x.is_zero()).count() == 1
                && row.iter().all(|x| x.is_zero() || x.abs().is_one())
        })
    }
}

fn big_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Seeded random unimodular affine map.
///
/// Built from a signed permutation followed by `shears` elementary row
/// operations with multipliers ±1, keeping every entry of `A` at most
/// `max_entry` in absolute value; the translation has entries in `[-3, 3]`.
/// With `shears = 0` the result is a lattice isometry.
pub fn random_unimodular(n: usize, shears: usize, max_entry: i64, seed: u64) -> UnimodularMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut a: Vec<Vec<i64>> = (0..n)
        .map(|i| {
            let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
            (0..n)
                .map(|j| if j == perm[i] { sign } else { 0 })
                .collect()
        })
        .collect();
    let mut applied = 0;
    let mut attempts = 0;
    while applied < shears && n > 1 && attempts < 100 * (shears + 1) {
        attempts += 1;
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j {
            continue;
        }
        let k = if rng.gen_bool(0.5) { 1 } else { -1 };
        let candidate: Vec<i64> = (0..n).map(|c| a[i][c] + k * a[j][c]).collect();
        if candidate.iter().all(|x| x.abs() <= max_entry) {
            a[i] = candidate;
            applied += 1;
        }
    }
    let t: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
    let rows: Vec<&[i64]> = a.iter().map(Vec::as_slice).collect();
    UnimodularMap::from_i64(&rows, &t).expect("elementary operations preserve |det| = 1")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_maps_are_unimodular_and_reproducible() {
        for seed in 0..20 {
            let m = random_unimodular(3, 4, 4, seed);
            assert!(det(m.matrix()).abs().is_one());
            assert_eq!(m, random_unimodular(3, 4, 4, seed));
            let x = [0.25, -1.5, 2.0];
            let back = m.inverse_point_f64(&m.map_point_f64(&x));
            for (a, b) in back.iter().zip(x) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(random_unimodular(2, 0, 4, 7).is_orthogonal());
    }

    #[test]
    fn halfspace_image_contains_image_points() {
        let m = UnimodularMap::from_i64(&[&[1, 1], &[0, 1]], &[2, -1]).unwrap();
        let u = LatticeVector::from_i64(&[1, 2]);
        let c = BigInt::from(3);
        let (u2, c2) = m.map_halfspace(&u, &c);
        for x in [[0.0, 0.0], [3.0, 0.0], [1.0, 1.0], [-2.0, 2.5]] {
            let lhs = u.dot_f64(&x) - 3.0;
            let y = m.map_point_f64(&x);
            let rhs = u2.dot_f64(&y) - c2.to_f64().unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
