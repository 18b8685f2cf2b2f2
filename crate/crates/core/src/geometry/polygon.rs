use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::linalg::ext_gcd;
use super::{DelzantPolytope, LatticeVector};
use crate::exact::Rational;

/// Edge of a Delzant polygon together with its constant `ζ(e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeData {
    /// Index of the facet containing the edge.
    pub facet: usize,
    /// Endpoint vertex indices.
    pub endpoints: [usize; 2],
    /// Primitive generator along the edge (first to second endpoint).
    pub generator: LatticeVector,
    /// Primitive outward normal.
    pub normal: LatticeVector,
    /// The inward completion of `generator` used to compute `zeta`.
    pub completion: LatticeVector,
    pub zeta: Rational,
}

/// Inward edge frame at a polygon vertex.
///
/// `w1` runs along the incident edge with the lower facet index (`e1`),
/// `w2` along the other one (`e2`).
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonVertexFrame {
    pub vertex: usize,
    pub point: LatticeVector,
    pub w1: LatticeVector,
    pub w2: LatticeVector,
    pub e1: usize,
    pub e2: usize,
    pub eta1: Rational,
    pub eta2: Rational,
    pub mu: Rational,
}

fn ratio(a: BigInt, b: BigInt) -> Rational {
    Rational::new(a, b)
}

impl DelzantPolytope {
    fn assert_polygon(&self) {
        assert_eq!(
            self.dim(),
            2,
            "polygon constants need a 2-dimensional polytope"
        );
    }

    /// `ζ(e) = ⟨v2, n_e⟩ / ‖n_e‖²` for a given completion `v2`, or `None` when
    /// `v2` is not an inward unimodular completion of the edge generator.
    pub fn zeta_with(&self, facet: usize, v2: &LatticeVector) -> Option<Rational> {
        self.assert_polygon();
        let n = &self.facets()[facet].normal;
        let v1 = LatticeVector::new(vec![-n.coords()[1].clone(), n.coords()[0].clone()]);
        let d = &v1.coords()[0] * &v2.coords()[1] - &v1.coords()[1] * &v2.coords()[0];
        let inner = n.dot(v2);
        if !d.abs().is_one() || inner.is_positive() {
            return None;
        }
        Some(ratio(inner, n.norm2()))
    }

    /// Edge data for the edge lying on facet `facet`.
    ///
    /// # Panics
    ///
    /// Panics if the polytope is not a polygon, or if two inward completions
    /// of the generator disagree on `ζ(e)` (impossible for valid input).
    pub fn edge_data(&self, facet: usize) -> EdgeData {
        self.assert_polygon();
        let face = self.face(&[facet]).expect("facet index out of range");
        let [a, b] = [face.vertices[0], face.vertices[1]];
        let generator = (&self.vertices()[b] - &self.vertices()[a]).primitive();
        let normal = self.facets()[facet].normal.clone();
        let g = generator.coords();
        let (_, x, y) = ext_gcd(&g[0], &g[1]);
        // g0 * x + g1 * y = 1, so (-y, x) completes the generator with det 1
        let mut seed = LatticeVector::new(vec![-y, x]);
        if normal.dot(&seed).is_positive() {
            seed = -&seed;
        }
        let zeta = self
            .zeta_with(facet, &seed)
            .expect("seed completion is inward and unimodular");
        let other = self
            .zeta_with(facet, &(&seed + &generator))
            .expect("shifts of an inward completion stay inward");
        assert_eq!(zeta, other, "ζ depends on the completion");
        EdgeData {
            facet,
            endpoints: [a, b],
            generator,
            normal,
            completion: seed,
            zeta,
        }
    }

    /// Edge data for every edge, in facet order.
    pub fn all_edge_data(&self) -> Vec<EdgeData> {
        (0..self.facets().len())
            .map(|k| self.edge_data(k))
            .collect()
    }

    /// Inward frame `(w1, w2)` and the constants `η1, η2, μ` at vertex `i`.
    pub fn vertex_frame(&self, vertex: usize) -> PolygonVertexFrame {
        self.assert_polygon();
        let inc = self.incidence(vertex);
        let dirs = self.edge_directions(vertex);
        // dirs[j] leaves facet inc[j], so dirs[1] runs along inc[0]
        let w1 = dirs[1].clone();
        let w2 = dirs[0].clone();
        let dot = w1.dot(&w2);
        let eta1 = ratio(dot.clone(), w1.norm2());
        let eta2 = ratio(dot, w2.norm2());
        let mu = &eta1 + &eta2;
        PolygonVertexFrame {
            vertex,
            point: self.vertices()[vertex].clone(),
            w1,
            w2,
            e1: inc[0],
            e2: inc[1],
            eta1,
            eta2,
            mu,
        }
    }

    pub fn all_vertex_frames(&self) -> Vec<PolygonVertexFrame> {
        (0..self.vertices().len())
            .map(|i| self.vertex_frame(i))
            .collect()
    }

    /// Lattice length of the edge on `facet`.
    pub fn edge_lattice_length(&self, facet: usize) -> BigInt {
        let face = self.face(&[facet]).expect("facet index out of range");
        let d = &self.vertices()[face.vertices[1]] - &self.vertices()[face.vertices[0]];
        let g = d.content();
        if g.is_zero() {
            BigInt::zero()
        } else {
            g
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};
    use crate::geometry::random_unimodular;

    fn vertex_index(p: &DelzantPolytope, x: &[i64]) -> usize {
        let target = LatticeVector::from_i64(x);
        p.vertices().iter().position(|v| *v == target).unwrap()
    }

    #[test]
    fn triangle_constants() {
        let t = DelzantPolytope::unit_triangle();
        assert_eq!(t.edge_data(0).zeta, int(-1));
        assert_eq!(t.edge_data(1).zeta, int(-1));
        assert_eq!(t.edge_data(2).zeta, rat(-1, 2));
        let f = t.vertex_frame(vertex_index(&t, &[1, 0]));
        assert_eq!(f.w1, LatticeVector::from_i64(&[-1, 0]));
        assert_eq!(f.w2, LatticeVector::from_i64(&[-1, 1]));
        assert_eq!(f.mu, rat(3, 2));
        assert_eq!(t.vertex_frame(vertex_index(&t, &[0, 0])).mu, int(0));
    }

    #[test]
    fn square_frames_are_orthogonal() {
        let s = DelzantPolytope::unit_cube(2);
        for f in s.all_vertex_frames() {
            assert_eq!(f.mu, int(0));
            let d = &f.w1.coords()[0] * &f.w2.coords()[1] - &f.w1.coords()[1] * &f.w2.coords()[0];
            assert!(d.abs().is_one());
        }
    }

    #[test]
    fn zeta_independent_of_completion_and_generator_sign() {
        let hex = DelzantPolytope::from_vertices_i64(
            2,
            &[&[1, 0], &[2, 0], &[2, 1], &[1, 2], &[0, 2], &[0, 1]],
        )
        .unwrap();
        for e in hex.all_edge_data() {
            for k in -3i64..=3 {
                let v2 = &e.completion + &e.generator.scale(&BigInt::from(k));
                assert_eq!(hex.zeta_with(e.facet, &v2), Some(e.zeta.clone()));
            }
            let flipped = &(-&e.completion) + &e.generator;
            assert_eq!(hex.zeta_with(e.facet, &flipped), None);
        }
    }

    #[test]
    fn pick_identity_on_random_images() {
        let t = DelzantPolytope::unit_triangle();
        for seed in 0..10 {
            let img = t.transformed(&random_unimodular(2, 3, 4, seed));
            let total: Rational = img
                .all_vertex_frames()
                .iter()
                .map(|f| rat(1, 4) + &f.mu / int(12))
                .sum();
            assert_eq!(total, int(1));
        }
    }
}
