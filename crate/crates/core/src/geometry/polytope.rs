use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::linalg::{det, inverse, to_rational_matrix};
use super::{format_point, GeometryError, LatticeVector, RegularWedge, UnimodularMap};
use crate::exact::Rational;

/// Half-space `⟨normal, x⟩ ≤ offset` with a primitive outward normal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Facet {
    pub normal: LatticeVector,
    pub offset: BigInt,
}

/// Face of a polytope: the intersection of the facets in `active` with `Δ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolytopeFace {
    /// Sorted facet indices; empty for the polytope itself.
    pub active: Vec<usize>,
    /// Sorted vertex indices.
    pub vertices: Vec<usize>,
}

impl PolytopeFace {
    pub fn codim(&self) -> usize {
        self.active.len()
    }
}

/// Simple, regular lattice polytope in dimension 1, 2 or 3.
#[derive(Debug, Clone)]
pub struct DelzantPolytope {
    n: usize,
    facets: Vec<Facet>,
    vertices: Vec<LatticeVector>,
    incidence: Vec<Vec<usize>>,
    /// Dual bases of the incident normals, indexed like `incidence`.
    duals: Vec<Vec<LatticeVector>>,
    faces: Vec<Vec<PolytopeFace>>,
    face_lookup: HashMap<Vec<usize>, usize>,
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

impl DelzantPolytope {
    /// Builds the polytope `{x : ⟨u_i, x⟩ ≤ c_i}` and verifies the Delzant
    /// conditions at every vertex.
    pub fn from_facets(n: usize, facets: Vec<Facet>) -> Result<Self, GeometryError> {
        if !(1..=3).contains(&n) {
            return Err(GeometryError::InvalidInput(format!(
                "dimension {n} is not supported (expected 1, 2 or 3)"
            )));
        }
        for (index, f) in facets.iter().enumerate() {
            if f.normal.dim() != n {
                return Err(GeometryError::InvalidInput(format!(
                    "facet {index} has dimension {} (expected {n})",
                    f.normal.dim()
                )));
            }
            let gcd = f.normal.content();
            if gcd.is_zero() {
                return Err(GeometryError::InvalidInput(format!(
                    "facet {index} has a zero normal"
                )));
            }
            if !gcd.is_one() {
                return Err(GeometryError::NotPrimitive { index, gcd });
            }
        }
        let m = facets.len();
        let value = |f: &Facet, x: &[Rational]| f.normal.dot_rational(x);
        let mut points: Vec<(Vec<Rational>, Vec<usize>)> = Vec::new();
        for subset in combinations(m, n) {
            let rows: Vec<Vec<BigInt>> = subset
                .iter()
                .map(|&i| facets[i].normal.coords().to_vec())
                .collect();
            let Some(inv) = inverse(&to_rational_matrix(&rows)) else {
                continue;
            };
            let x: Vec<Rational> = inv
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&subset)
                        .map(|(a, &i)| a * Rational::from_integer(facets[i].offset.clone()))
                        .sum()
                })
                .collect();
            if points.iter().any(|(p, _)| *p == x) {
                continue;
            }
            let mut tight = Vec::new();
            let mut feasible = true;
            for (k, f) in facets.iter().enumerate() {
                let lhs = value(f, &x);
                let c = Rational::from_integer(f.offset.clone());
                if lhs > c {
                    feasible = false;
                    break;
                }
                if lhs == c {
                    tight.push(k);
                }
            }
            if feasible {
                points.push((x, tight));
            }
        }
        if points.is_empty() {
            return Err(GeometryError::InvalidInput(
                "the inequalities have no vertices (empty region or region containing a line)"
                    .into(),
            ));
        }
        points.sort_by(|a, b| a.0.cmp(&b.0));
        let mut vertices = Vec::with_capacity(points.len());
        let mut incidence = Vec::with_capacity(points.len());
        let mut duals = Vec::with_capacity(points.len());
        for (x, tight) in points {
            let label = format_point(&x);
            if tight.len() != n {
                return Err(GeometryError::NotSimple {
                    vertex: label,
                    count: tight.len(),
                    expected: n,
                });
            }
            if x.iter().any(|c| !c.is_integer()) {
                return Err(GeometryError::NonIntegerVertex { vertex: label });
            }
            let rows: Vec<Vec<BigInt>> = tight
                .iter()
                .map(|&i| facets[i].normal.coords().to_vec())
                .collect();
            let d = det(&rows);
            if !d.abs().is_one() {
                return Err(GeometryError::NotRegularVertex {
                    vertex: label,
                    det: d.abs(),
                });
            }
            let inv = inverse(&to_rational_matrix(&rows)).expect("unimodular");
            let dual: Vec<LatticeVector> = (0..n)
                .map(|j| LatticeVector::new((0..n).map(|i| inv[i][j].to_integer()).collect()))
                .collect();
            for (j, v) in dual.iter().enumerate() {
                let w = -v;
                let leaves = facets
                    .iter()
                    .enumerate()
                    .any(|(k, f)| !tight.contains(&k) && f.normal.dot(&w).is_positive());
                if !leaves {
                    return Err(GeometryError::Unbounded {
                        vertex: label,
                        direction: format!("{w} (leaving facet {})", tight[j]),
                    });
                }
            }
            vertices.push(LatticeVector::new(
                x.iter().map(|c| c.to_integer()).collect(),
            ));
            incidence.push(tight);
            duals.push(dual);
        }
        for k in 0..m {
            if !incidence.iter().any(|inc| inc.contains(&k)) {
                return Err(GeometryError::InvalidInput(format!(
                    "facet {k} is redundant (it touches no vertex)"
                )));
            }
        }
        let mut faces = vec![vec![PolytopeFace {
            active: Vec::new(),
            vertices: (0..vertices.len()).collect(),
        }]];
        let mut face_lookup = HashMap::new();
        face_lookup.insert(Vec::new(), 0);
        for codim in 1..=n {
            let mut sets: BTreeSet<Vec<usize>> = BTreeSet::new();
            for inc in &incidence {
                for sub in combinations(n, codim) {
                    sets.insert(sub.iter().map(|&i| inc[i]).collect());
                }
            }
            let mut level = Vec::new();
            for active in sets {
                let verts: Vec<usize> = (0..vertices.len())
                    .filter(|&v| active.iter().all(|a| incidence[v].contains(a)))
                    .collect();
                face_lookup.insert(active.clone(), level.len());
                level.push(PolytopeFace {
                    active,
                    vertices: verts,
                });
            }
            faces.push(level);
        }
        Ok(DelzantPolytope {
            n,
            facets,
            vertices,
            incidence,
            duals,
            faces,
            face_lookup,
        })
    }

    pub fn from_facets_i64(n: usize, facets: &[(&[i64], i64)]) -> Result<Self, GeometryError> {
        Self::from_facets(
            n,
            facets
                .iter()
                .map(|(u, c)| Facet {
                    normal: LatticeVector::from_i64(u),
                    offset: BigInt::from(*c),
                })
                .collect(),
        )
    }

    /// Builds the convex hull of the given integer points; every point must
    /// be a vertex of the hull.
    pub fn from_vertices(n: usize, points: Vec<LatticeVector>) -> Result<Self, GeometryError> {
        if !(1..=3).contains(&n) {
            return Err(GeometryError::InvalidInput(format!(
                "dimension {n} is not supported (expected 1, 2 or 3)"
            )));
        }
        if let Some(p) = points.iter().find(|p| p.dim() != n) {
            return Err(GeometryError::InvalidInput(format!(
                "point {p} has the wrong dimension"
            )));
        }
        let mut uniq: Vec<LatticeVector> = points.clone();
        uniq.sort();
        uniq.dedup();
        if uniq.len() != points.len() {
            return Err(GeometryError::InvalidInput("repeated vertex".into()));
        }
        let mut facets: Vec<Facet> = Vec::new();
        for subset in combinations(uniq.len(), n) {
            let p0 = &uniq[subset[0]];
            let diffs: Vec<LatticeVector> = subset[1..].iter().map(|&i| &uniq[i] - p0).collect();
            let normal = match n {
                1 => LatticeVector::from_i64(&[1]),
                2 => {
                    let d = diffs[0].coords();
                    LatticeVector::new(vec![d[1].clone(), -d[0].clone()])
                }
                _ => {
                    let a = diffs[0].coords();
                    let b = diffs[1].coords();
                    LatticeVector::new(vec![
                        &a[1] * &b[2] - &a[2] * &b[1],
                        &a[2] * &b[0] - &a[0] * &b[2],
                        &a[0] * &b[1] - &a[1] * &b[0],
                    ])
                }
            };
            if normal.is_zero() {
                continue;
            }
            let normal = normal.primitive();
            for u in [normal.clone(), -&normal] {
                let c = u.dot(p0);
                if uniq.iter().all(|p| u.dot(p) <= c) && !facets.iter().any(|f| f.normal == u) {
                    facets.push(Facet {
                        normal: u,
                        offset: c,
                    });
                }
            }
        }
        if facets.len() <= n {
            return Err(GeometryError::InvalidInput(
                "points do not span a full-dimensional polytope".into(),
            ));
        }
        facets.sort_by(|a, b| a.normal.cmp(&b.normal));
        let poly = Self::from_facets(n, facets)?;
        for p in &uniq {
            if !poly.vertices.contains(p) {
                return Err(GeometryError::InvalidInput(format!(
                    "point {p} is not a vertex of the convex hull"
                )));
            }
        }
        Ok(poly)
    }

    pub fn from_vertices_i64(n: usize, points: &[&[i64]]) -> Result<Self, GeometryError> {
        Self::from_vertices(
            n,
            points.iter().map(|p| LatticeVector::from_i64(p)).collect(),
        )
    }

    /// `{x : -x1 ≤ 0, -x2 ≤ 0, x1 + x2 ≤ 1}`.
    pub fn unit_triangle() -> Self {
        Self::from_facets_i64(2, &[(&[-1, 0], 0), (&[0, -1], 0), (&[1, 1], 1)])
            .expect("unit triangle is Delzant")
    }

    /// `[0, 1]^n`.
    pub fn unit_cube(n: usize) -> Self {
        let mut facets = Vec::new();
        for i in 0..n {
            facets.push(Facet {
                normal: -&LatticeVector::unit(n, i),
                offset: BigInt::zero(),
            });
            facets.push(Facet {
                normal: LatticeVector::unit(n, i),
                offset: BigInt::one(),
            });
        }
        Self::from_facets(n, facets).expect("unit cube is Delzant")
    }

    /// `{x ≥ 0, Σ x_i ≤ 1}`.
    pub fn unit_simplex(n: usize) -> Self {
        let mut facets: Vec<Facet> = (0..n)
            .map(|i| Facet {
                normal: -&LatticeVector::unit(n, i),
                offset: BigInt::zero(),
            })
            .collect();
        facets.push(Facet {
            normal: LatticeVector::new(vec![BigInt::one(); n]),
            offset: BigInt::one(),
        });
        Self::from_facets(n, facets).expect("unit simplex is Delzant")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn vertices(&self) -> &[LatticeVector] {
        &self.vertices
    }

    /// Sorted indices of the `n` facets through vertex `i`.
    pub fn incidence(&self, vertex: usize) -> &[usize] {
        &self.incidence[vertex]
    }

    /// Faces of codimension `codim` (0 is the polytope itself).
    pub fn faces(&self, codim: usize) -> &[PolytopeFace] {
        &self.faces[codim]
    }

    /// Looks up the face with the given sorted active set.
    pub fn face(&self, active: &[usize]) -> Option<&PolytopeFace> {
        let idx = *self.face_lookup.get(active)?;
        Some(&self.faces[active.len()][idx])
    }

    pub fn edges(&self) -> &[PolytopeFace] {
        &self.faces[self.n - 1]
    }

    /// The tangent cone at vertex `i` as a regular wedge; normals follow the
    /// order of [`Self::incidence`].
    pub fn vertex_wedge(&self, vertex: usize) -> RegularWedge {
        let inc = &self.incidence[vertex];
        RegularWedge::new(
            inc.iter().map(|&k| self.facets[k].normal.clone()).collect(),
            inc.iter().map(|&k| self.facets[k].offset.clone()).collect(),
        )
        .expect("vertex cones of a Delzant polytope are regular")
    }

    /// Primitive inward edge directions at vertex `i`; entry `j` leaves the
    /// facet `incidence(i)[j]` and lies on all other incident facets.
    pub fn edge_directions(&self, vertex: usize) -> Vec<LatticeVector> {
        self.duals[vertex].iter().map(|v| -v).collect()
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.facets
            .iter()
            .all(|f| f.normal.dot_rational(x) <= Rational::from_integer(f.offset.clone()))
    }

    /// Integer bounding box of the vertices.
    pub fn bounding_box(&self) -> (Vec<BigInt>, Vec<BigInt>) {
        let mut lo = self.vertices[0].coords().to_vec();
        let mut hi = lo.clone();
        for v in &self.vertices[1..] {
            for (k, x) in v.coords().iter().enumerate() {
                if *x < lo[k] {
                    lo[k] = x.clone();
                }
                if *x > hi[k] {
                    hi[k] = x.clone();
                }
            }
        }
        (lo, hi)
    }

    /// Smallest lattice distance `c_j - ⟨u_j, v⟩` from a vertex to a facet
    /// not containing it.
    pub fn min_nonincident_gap(&self) -> BigInt {
        let mut best: Option<BigInt> = None;
        for (i, v) in self.vertices.iter().enumerate() {
            for (j, f) in self.facets.iter().enumerate() {
                if self.incidence[i].contains(&j) {
                    continue;
                }
                let gap = &f.offset - f.normal.dot(v);
                if best.as_ref().is_none_or(|b| gap < *b) {
                    best = Some(gap);
                }
            }
        }
        best.unwrap_or_else(BigInt::one)
    }

    /// Integer coordinates of a vector tangent to face `active` in the face's
    /// lattice basis at `vertex` (edge directions leaving the non-active
    /// incident facets).
    pub fn face_coordinates(
        &self,
        active: &[usize],
        vertex: usize,
        x: &LatticeVector,
    ) -> Vec<BigInt> {
        self.incidence[vertex]
            .iter()
            .filter(|k| !active.contains(k))
            .map(|&k| -self.facets[k].normal.dot(x))
            .collect()
    }

    /// Pulling triangulation of a face into simplices of the face's dimension,
    /// each given by vertex indices (first entry is the apex).
    pub fn triangulate(&self, active: &[usize]) -> Vec<Vec<usize>> {
        let face = self.face(active).expect("unknown face");
        if face.vertices.len() == 1 {
            return vec![face.vertices.clone()];
        }
        let apex = face.vertices[0];
        let mut out = Vec::new();
        for &j in &self.incidence_union(&face.vertices) {
            if active.contains(&j) {
                continue;
            }
            let mut sub: Vec<usize> = active.to_vec();
            sub.push(j);
            sub.sort_unstable();
            let Some(g) = self.face(&sub) else { continue };
            if g.codim() != active.len() + 1 || g.vertices.contains(&apex) {
                continue;
            }
            for mut s in self.triangulate(&sub) {
                s.insert(0, apex);
                out.push(s);
            }
        }
        out
    }

    fn incidence_union(&self, verts: &[usize]) -> BTreeSet<usize> {
        verts
            .iter()
            .flat_map(|&v| self.incidence[v].iter().copied())
            .collect()
    }

    /// Lattice-normalized volume factor `|det|` of a simplex of face `active`
    /// measured in the face's lattice basis.
    pub fn simplex_lattice_volume_factor(&self, active: &[usize], simplex: &[usize]) -> BigInt {
        let p0 = &self.vertices[simplex[0]];
        let rows: Vec<Vec<BigInt>> = simplex[1..]
            .iter()
            .map(|&i| self.face_coordinates(active, simplex[0], &(&self.vertices[i] - p0)))
            .collect();
        det(&rows).abs()
    }

    /// Image under a unimodular map; facet order is preserved.
    pub fn transformed(&self, map: &UnimodularMap) -> DelzantPolytope {
        let facets = self
            .facets
            .iter()
            .map(|f| {
                let (normal, offset) = map.map_halfspace(&f.normal, &f.offset);
                Facet { normal, offset }
            })
            .collect();
        DelzantPolytope::from_facets(self.n, facets)
            .expect("unimodular image of a Delzant polytope")
    }

    /// Facet data as `f64` pairs `(u, c)`.
    pub fn facets_f64(&self) -> Vec<(Vec<f64>, f64)> {
        self.facets
            .iter()
            .map(|f| (f.normal.to_f64(), f.offset.to_f64().unwrap_or(f64::NAN)))
            .collect()
    }

    pub fn vertices_f64(&self) -> Vec<Vec<f64>> {
        self.vertices.iter().map(LatticeVector::to_f64).collect()
    }

    pub fn vertex_label(&self, i: usize) -> String {
        self.vertices[i].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_triangle_structure() {
        let t = DelzantPolytope::unit_triangle();
        let verts: Vec<String> = t.vertices().iter().map(|v| v.to_string()).collect();
        assert_eq!(verts, ["(0,0)", "(0,1)", "(1,0)"]);
        assert_eq!(t.edges().len(), 3);
        assert_eq!(t.faces(2).len(), 3);
    }

    #[test]
    fn simplex_and_cube_face_counts() {
        let s = DelzantPolytope::unit_simplex(3);
        assert_eq!(
            (s.vertices().len(), s.edges().len(), s.faces(1).len()),
            (4, 6, 4)
        );
        let c = DelzantPolytope::unit_cube(3);
        assert_eq!(
            (c.vertices().len(), c.edges().len(), c.faces(1).len()),
            (8, 12, 6)
        );
        for p in [&s, &c] {
            for codim in 1..=3 {
                for face in p.faces(codim) {
                    // facets containing every vertex of the face are exactly the active ones
                    let common: Vec<usize> = (0..p.facets().len())
                        .filter(|k| face.vertices.iter().all(|&v| p.incidence(v).contains(k)))
                        .collect();
                    assert_eq!(common, face.active);
                    assert_eq!(common.len(), codim);
                }
            }
        }
    }

    #[test]
    fn hull_matches_facet_description() {
        let t = DelzantPolytope::from_vertices_i64(2, &[&[0, 0], &[1, 0], &[0, 1]]).unwrap();
        assert_eq!(t.vertices().len(), 3);
        let hexagon = DelzantPolytope::from_vertices_i64(
            2,
            &[&[1, 0], &[2, 0], &[2, 1], &[1, 2], &[0, 2], &[0, 1]],
        )
        .unwrap();
        assert_eq!(hexagon.edges().len(), 6);
        assert!(
            DelzantPolytope::from_vertices_i64(2, &[&[0, 0], &[2, 0], &[0, 2], &[1, 1]]).is_err()
        );
    }

    #[test]
    fn rejects_non_delzant() {
        // the corner at (0,1) has edge directions (0,-1), (2,-1) with det 2
        let r = DelzantPolytope::from_vertices_i64(2, &[&[0, 0], &[2, 0], &[0, 1]]);
        assert!(matches!(r, Err(GeometryError::NotRegularVertex { .. })));
        let pyramid = DelzantPolytope::from_vertices_i64(
            3,
            &[&[0, 0, 0], &[1, 0, 0], &[0, 1, 0], &[1, 1, 0], &[0, 0, 1]],
        );
        assert!(matches!(pyramid, Err(GeometryError::NotSimple { .. })));
        let half_integer = DelzantPolytope::from_facets_i64(1, &[(&[-1], 0), (&[2], 1)]);
        assert!(matches!(
            half_integer,
            Err(GeometryError::NotPrimitive { .. })
        ));
        let wedge = DelzantPolytope::from_facets_i64(2, &[(&[-1, 0], 0), (&[0, -1], 0)]);
        assert!(matches!(wedge, Err(GeometryError::Unbounded { .. })));
        let non_integer =
            DelzantPolytope::from_facets_i64(2, &[(&[-1, 0], 0), (&[0, -1], 0), (&[2, 1], 1)]);
        assert!(non_integer.is_err());
    }

    #[test]
    fn triangulation_covers_volume() {
        let c = DelzantPolytope::unit_cube(3);
        let simplices = c.triangulate(&[]);
        let total: BigInt = simplices
            .iter()
            .map(|s| c.simplex_lattice_volume_factor(&[], s))
            .sum();
        // six tetrahedra of volume 1/6 each
        assert_eq!(total, BigInt::from(6));
        let hex = DelzantPolytope::from_vertices_i64(
            2,
            &[&[1, 0], &[2, 0], &[2, 1], &[1, 2], &[0, 2], &[0, 1]],
        )
        .unwrap();
        let area2: BigInt = hex
            .triangulate(&[])
            .iter()
            .map(|s| hex.simplex_lattice_volume_factor(&[], s))
            .sum();
        assert_eq!(area2, BigInt::from(6));
        for e in hex.edges() {
            let tri = hex.triangulate(&e.active);
            assert_eq!(tri.len(), 1);
            assert_eq!(
                hex.simplex_lattice_volume_factor(&e.active, &tri[0]),
                BigInt::one()
            );
        }
    }

    #[test]
    fn edge_directions_are_inward() {
        let t = DelzantPolytope::unit_triangle();
        let i = t
            .vertices()
            .iter()
            .position(|v| *v == LatticeVector::from_i64(&[1, 0]))
            .unwrap();
        let dirs = t.edge_directions(i);
        let mut got: Vec<String> = dirs.iter().map(|d| d.to_string()).collect();
        got.sort();
        assert_eq!(got, ["(-1,0)", "(-1,1)"]);
        assert_eq!(t.min_nonincident_gap(), BigInt::one());
    }
}
