use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::linalg::{det, inverse, to_rational_matrix};
use super::{GeometryError, LatticeVector, UnimodularMap};
use crate::exact::{MultiIndex, Rational};

/// Regular wedge `{x : ⟨u_i, x⟩ ≤ c_i, i = 1..n}` whose normals form a basis
/// of `Z^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularWedge {
    u: Vec<LatticeVector>,
    c: Vec<BigInt>,
    v: Vec<LatticeVector>,
}

/// A face of a wedge, described by its active facet set `I`.
///
/// Points of the face are `affine_point + Σ t_j w_j` with `w_j` running over
/// `tangent_basis` and every `t_j ≤ 0`; the lattice-normalized measure `∫*`
/// is Lebesgue measure in the `t` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub active: Vec<usize>,
    pub codim: usize,
    /// Reciprocal volume of the parallelotope spanned by the tangent basis.
    pub k: f64,
    pub affine_point: Vec<Rational>,
    pub tangent_basis: Vec<LatticeVector>,
    /// Facet index attached to each tangent vector.
    pub tangent_index: Vec<usize>,
}

impl RegularWedge {
    /// Validates the data and computes the dual basis.
    pub fn new(normals: Vec<LatticeVector>, offsets: Vec<BigInt>) -> Result<Self, GeometryError> {
        let n = normals.len();
        if n == 0 {
            return Err(GeometryError::InvalidInput(
                "a wedge needs at least one normal".into(),
            ));
        }
        if offsets.len() != n {
            return Err(GeometryError::InvalidInput(format!(
                "{n} normals but {} offsets",
                offsets.len()
            )));
        }
        if let Some(bad) = normals.iter().position(|u| u.dim() != n) {
            return Err(GeometryError::InvalidInput(format!(
                "normal {bad} has dimension {} (expected {n})",
                normals[bad].dim()
            )));
        }
        for (index, u) in normals.iter().enumerate() {
            let gcd = u.content();
            if !gcd.is_one() {
                return Err(GeometryError::NotPrimitive { index, gcd });
            }
        }
        let rows: Vec<Vec<BigInt>> = normals.iter().map(|u| u.coords().to_vec()).collect();
        let d = det(&rows);
        if !d.abs().is_one() {
            return Err(GeometryError::NotRegular { det: d.abs() });
        }
        let inv = inverse(&to_rational_matrix(&rows)).expect("unimodular matrix is invertible");
        let v = (0..n)
            .map(|j| LatticeVector::new((0..n).map(|i| inv[i][j].to_integer()).collect()))
            .collect();
        Ok(RegularWedge {
            u: normals,
            c: offsets,
            v,
        })
    }

    pub fn from_i64(normals: &[&[i64]], offsets: &[i64]) -> Result<Self, GeometryError> {
        Self::new(
            normals.iter().map(|u| LatticeVector::from_i64(u)).collect(),
            offsets.iter().map(|&c| BigInt::from(c)).collect(),
        )
    }

    /// `{x : x_i ≤ 0}`.
    pub fn standard(n: usize) -> Self {
        Self::new(
            (0..n).map(|i| LatticeVector::unit(n, i)).collect(),
            vec![BigInt::zero(); n],
        )
        .expect("standard wedge is regular")
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn normals(&self) -> &[LatticeVector] {
        &self.u
    }

    pub fn offsets(&self) -> &[BigInt] {
        &self.c
    }

    /// Vectors `v_j` with `⟨u_i, v_j⟩ = δ_ij`.
    pub fn dual_basis(&self) -> &[LatticeVector] {
        &self.v
    }

    /// The apex `Σ c_j v_j`, an integer point.
    pub fn vertex(&self) -> Vec<Rational> {
        let n = self.dim();
        (0..n)
            .map(|k| {
                let s: BigInt = (0..n).map(|j| &self.c[j] * &self.v[j].coords()[k]).sum();
                Rational::from_integer(s)
            })
            .collect()
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.u
            .iter()
            .zip(&self.c)
            .all(|(u, c)| u.dot_rational(x) <= Rational::from_integer(c.clone()))
    }

    /// `⟨u_j, x⟩ - c_j` for every facet, i.e. the wedge coordinates of `x`.
    pub fn coordinates_f64(&self, x: &[f64]) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.c)
            .map(|(u, c)| u.dot_f64(x) - crate::exact::to_f64(&Rational::from_integer(c.clone())))
            .collect()
    }

    /// `K` for the face whose active set is `active`: the reciprocal volume of
    /// the parallelotope spanned by `{v_i : i ∉ active}` (1 at the apex).
    pub fn k_active(&self, active: &[usize]) -> f64 {
        let tangent: Vec<&LatticeVector> = (0..self.dim())
            .filter(|i| !active.contains(i))
            .map(|i| &self.v[i])
            .collect();
        if tangent.is_empty() {
            return 1.0;
        }
        let gram: Vec<Vec<BigInt>> = tangent
            .iter()
            .map(|a| tangent.iter().map(|b| a.dot(b)).collect())
            .collect();
        let g = crate::exact::to_f64(&Rational::from_integer(det(&gram)));
        1.0 / g.sqrt()
    }

    /// `K_α(W)`: normalization of the face `∩_{α_i > 0} H_i`.
    pub fn k_alpha(&self, alpha: &MultiIndex) -> f64 {
        self.k_active(&alpha.support())
    }

    pub fn face(&self, active: &[usize]) -> Face {
        let mut active = active.to_vec();
        active.sort_unstable();
        active.dedup();
        let tangent_index: Vec<usize> = (0..self.dim()).filter(|i| !active.contains(i)).collect();
        Face {
            codim: active.len(),
            k: self.k_active(&active),
            affine_point: self.vertex(),
            tangent_basis: tangent_index.iter().map(|&i| self.v[i].clone()).collect(),
            tangent_index,
            active,
        }
    }

    /// Image of the wedge under `x ↦ A x + t`.
    pub fn transformed(&self, map: &UnimodularMap) -> RegularWedge {
        let (normals, offsets): (Vec<_>, Vec<_>) = self
            .u
            .iter()
            .zip(&self.c)
            .map(|(u, c)| map.map_halfspace(u, c))
            .unzip();
        RegularWedge::new(normals, offsets).expect("unimodular image of a regular wedge")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int;

    #[test]
    fn standard_wedge_has_standard_dual_basis() {
        let w = RegularWedge::standard(2);
        assert_eq!(w.dual_basis()[0], LatticeVector::from_i64(&[1, 0]));
        assert_eq!(w.dual_basis()[1], LatticeVector::from_i64(&[0, 1]));
        for a in MultiIndex::all_of_order(2, 3) {
            assert_eq!(w.k_alpha(&a), 1.0);
        }
    }

    #[test]
    fn skew_wedge_dual_basis() {
        let w = RegularWedge::from_i64(&[&[0, 1], &[1, -1]], &[0, 0]).unwrap();
        assert_eq!(w.dual_basis()[0], LatticeVector::from_i64(&[1, 1]));
        assert_eq!(w.dual_basis()[1], LatticeVector::from_i64(&[1, 0]));
        let k = w.k_alpha(&MultiIndex::new(vec![0, 1]));
        assert!((k - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(w.k_alpha(&MultiIndex::new(vec![1, 2])), 1.0);
    }

    #[test]
    fn rejects_bad_normals() {
        assert!(matches!(
            RegularWedge::from_i64(&[&[2, 0], &[0, 1]], &[0, 0]),
            Err(GeometryError::NotPrimitive { index: 0, .. })
        ));
        assert!(matches!(
            RegularWedge::from_i64(&[&[1, 1], &[1, -1]], &[0, 0]),
            Err(GeometryError::NotRegular { .. })
        ));
    }

    #[test]
    fn three_dim_k_alpha_is_parallelogram_area() {
        let w = RegularWedge::from_i64(&[&[1, 0, 0], &[1, 1, 0], &[0, 1, 1]], &[0, 0, 0]).unwrap();
        let v = w.dual_basis();
        let a = v[0].to_f64();
        let b = v[2].to_f64();
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let area = cross.iter().map(|x| x * x).sum::<f64>().sqrt();
        let k = w.k_alpha(&MultiIndex::new(vec![0, 1, 0]));
        assert!((k - 1.0 / area).abs() < 1e-14);
    }

    #[test]
    fn vertex_and_membership() {
        let w = RegularWedge::from_i64(&[&[1, 0], &[1, 1]], &[2, 5]).unwrap();
        let x0 = w.vertex();
        assert_eq!(x0, vec![int(2), int(3)]);
        assert!(w.contains(&x0));
        assert!(!w.contains(&[int(3), int(0)]));
        for (i, u) in w.normals().iter().enumerate() {
            for (j, v) in w.dual_basis().iter().enumerate() {
                assert_eq!(u.dot(v), BigInt::from(u8::from(i == j)));
            }
        }
    }
}
