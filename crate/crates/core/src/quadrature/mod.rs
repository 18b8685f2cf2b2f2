//! Integration over polytopes, polytope faces and wedge faces.
//!
//! Face integrals use the lattice-normalized measure `∫*`: a face is
//! parametrized by an integer basis of its tangent lattice, and `∫*` is
//! Lebesgue measure in those parameters. Polynomials over polytopes can be
//! integrated exactly in rationals.

mod adaptive;
mod gauss;

use num_traits::Zero;
use rayon::prelude::*;
use thiserror::Error;

use crate::exact::{to_f64, Rational};
use crate::functions::{dirderiv, FunctionError, Polynomial, SmoothFunction};
use crate::geometry::{DelzantPolytope, RegularWedge};

pub use adaptive::{duffy, integrate_box, integrate_simplex, Estimate, Integrand};
pub use gauss::{gauss_legendre, GaussRule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature tolerance not reached: error estimate {estimate:e} exceeds {tolerance:e}")]
    ToleranceNotReached { estimate: f64, tolerance: f64 },
    #[error("integration region is unbounded: the integrand has no support box")]
    Unbounded,
    #[error("unknown face {0:?}")]
    UnknownFace(Vec<usize>),
    #[error(transparent)]
    Function(#[from] FunctionError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum bisection depth per coordinate.
    pub max_subdivisions: usize,
    /// Number of Gauss–Legendre nodes per panel.
    pub order: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 20,
            order: 10,
        }
    }
}

impl QuadratureConfig {
    /// # Panics
    ///
    /// Panics if a tolerance is not positive or the rule has no nodes.
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize, order: usize) -> Self {
        assert!(
            abs_tol > 0.0 && rel_tol > 0.0,
            "tolerances must be positive"
        );
        assert!(order >= 1 && max_subdivisions >= 1);
        QuadratureConfig {
            abs_tol,
            rel_tol,
            max_subdivisions,
            order,
        }
    }
}

/// Value of an integral: exact for polynomial data, otherwise a float with
/// its error estimate.
#[derive(Debug, Clone, PartialEq)]
pub enum IntegralValue {
    Exact(Rational),
    Approx { value: f64, error: f64 },
}

impl IntegralValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            IntegralValue::Exact(r) => to_f64(r),
            IntegralValue::Approx { value, .. } => *value,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            IntegralValue::Exact(r) => Some(r),
            IntegralValue::Approx { .. } => None,
        }
    }
}

/// A `∫*` face integral. `normalized` records that the lattice factor `K`
/// was applied (always true for values produced here).
#[derive(Debug, Clone, PartialEq)]
pub struct FaceIntegral {
    pub active: Vec<usize>,
    pub value: IntegralValue,
    pub normalized: bool,
}

/// Region of full-dimensional integration.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    Polytope(&'a DelzantPolytope),
    /// A wedge, implicitly intersected with the integrand's support box.
    Wedge(&'a RegularWedge),
}

/// A face over which `∫*` is taken.
#[derive(Debug, Clone, Copy)]
pub enum FaceRef<'a> {
    Polytope {
        polytope: &'a DelzantPolytope,
        active: &'a [usize],
    },
    Wedge {
        wedge: &'a RegularWedge,
        active: &'a [usize],
        /// Box outside of which the integrand vanishes.
        support: (&'a [f64], &'a [f64]),
    },
}

fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Sums per-piece estimates componentwise in a fixed pairwise tree.
fn combine(parts: Vec<Estimate>, m: usize) -> Estimate {
    let value = (0..m)
        .map(|c| pairwise_sum(&parts.iter().map(|p| p.value[c]).collect::<Vec<_>>()))
        .collect();
    let error = pairwise_sum(&parts.iter().map(|p| p.error).collect::<Vec<_>>());
    Estimate { value, error }
}

/// `∫*_F g` over a polytope face, `m` components at once. The empty active
/// set means the whole polytope (ordinary Lebesgue measure); a vertex face
/// evaluates `g` at the vertex.
pub fn integrate_polytope_face(
    p: &DelzantPolytope,
    active: &[usize],
    m: usize,
    g: &Integrand<'_>,
    cfg: &QuadratureConfig,
) -> Result<Estimate, QuadratureError> {
    let mut active = active.to_vec();
    active.sort_unstable();
    if p.face(&active).is_none() {
        return Err(QuadratureError::UnknownFace(active));
    }
    let verts = p.vertices_f64();
    let simplices = p.triangulate(&active);
    let parts = simplices
        .par_iter()
        .map(|s| {
            let pts: Vec<Vec<f64>> = s.iter().map(|&i| verts[i].clone()).collect();
            let scale = to_f64(&Rational::from_integer(
                p.simplex_lattice_volume_factor(&active, s),
            ));
            let sub = QuadratureConfig {
                abs_tol: cfg.abs_tol / simplices.len() as f64,
                ..*cfg
            };
            integrate_simplex(&pts, scale, m, g, &sub)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(combine(parts, m))
}

/// Exact `∫*_F p` of a polynomial over a polytope face.
pub fn integrate_polytope_face_exact(
    p: &DelzantPolytope,
    active: &[usize],
    poly: &Polynomial,
) -> Rational {
    let mut active = active.to_vec();
    active.sort_unstable();
    let verts: Vec<Vec<Rational>> = p.vertices().iter().map(|v| v.to_rational()).collect();
    let n = p.dim();
    let mut total = Rational::zero();
    for s in p.triangulate(&active) {
        let k = s.len() - 1;
        let p0 = &verts[s[0]];
        let matrix: Vec<Vec<Rational>> = (0..n)
            .map(|c| s[1..].iter().map(|&i| &verts[i][c] - &p0[c]).collect())
            .collect();
        let scale = Rational::from_integer(p.simplex_lattice_volume_factor(&active, &s));
        total += scale
            * poly
                .compose_affine(p0, &matrix, k)
                .integrate_standard_simplex();
    }
    total
}

/// `∫*_F g` over a face of a wedge, restricted to the box `[lo, hi]` that
/// contains the integrand's support. Points of the face are
/// `x_0 + Σ_{j ∉ I} t_j v_j` with `t_j ≤ 0`.
pub fn integrate_wedge_face(
    w: &RegularWedge,
    active: &[usize],
    support: (&[f64], &[f64]),
    m: usize,
    g: &Integrand<'_>,
    cfg: &QuadratureConfig,
) -> Result<Estimate, QuadratureError> {
    let face = w.face(active);
    let x0: Vec<f64> = face.affine_point.iter().map(to_f64).collect();
    let basis: Vec<Vec<f64>> = face.tangent_basis.iter().map(|v| v.to_f64()).collect();
    let normals: Vec<Vec<f64>> = face
        .tangent_index
        .iter()
        .map(|&j| w.normals()[j].to_f64())
        .collect();
    let (blo, bhi) = support;
    let mut lo = Vec::with_capacity(basis.len());
    let mut hi = Vec::with_capacity(basis.len());
    for u in &normals {
        // range of ⟨u, x - x_0⟩ over the box
        let (mut a, mut b) = (0.0, 0.0);
        for k in 0..u.len() {
            let p = u[k] * (blo[k] - x0[k]);
            let q = u[k] * (bhi[k] - x0[k]);
            a += p.min(q);
            b += p.max(q);
        }
        if a >= 0.0 {
            return Ok(Estimate {
                value: vec![0.0; m],
                error: 0.0,
            });
        }
        lo.push(a);
        hi.push(b.min(0.0));
    }
    let n = x0.len();
    let mapped = |t: &[f64], out: &mut [f64]| -> Result<(), FunctionError> {
        let mut x = x0.clone();
        for (tj, v) in t.iter().zip(&basis) {
            for c in 0..n {
                x[c] += tj * v[c];
            }
        }
        g(&x, out)
    };
    integrate_box(&lo, &hi, m, &mapped, cfg)
}

/// `∫ f dx` over a polytope, or over a wedge intersected with the support
/// box of `f`. Polynomials over polytopes take the exact path.
pub fn integrate_region(
    region: Region<'_>,
    f: &dyn SmoothFunction,
    cfg: &QuadratureConfig,
) -> Result<f64, QuadratureError> {
    match region {
        Region::Polytope(p) => {
            if let Some(poly) = f.as_polynomial() {
                return Ok(to_f64(&integrate_polytope_face_exact(p, &[], &poly)));
            }
            let g = |x: &[f64], out: &mut [f64]| -> Result<(), FunctionError> {
                out[0] = f.eval(x)?;
                Ok(())
            };
            Ok(integrate_polytope_face(p, &[], 1, &g, cfg)?.value[0])
        }
        Region::Wedge(w) => {
            let (lo, hi) = f.support_box().ok_or(QuadratureError::Unbounded)?;
            let g = |x: &[f64], out: &mut [f64]| -> Result<(), FunctionError> {
                out[0] = f.eval(x)?;
                Ok(())
            };
            Ok(integrate_wedge_face(w, &[], (&lo, &hi), 1, &g, cfg)?.value[0])
        }
    }
}

/// `∫*_F g` for a scalar integrand (for instance `x ↦ Df(x)·n`).
pub fn integrate_face_star(
    face: FaceRef<'_>,
    g: &(dyn Fn(&[f64]) -> Result<f64, FunctionError> + Sync),
    cfg: &QuadratureConfig,
) -> Result<FaceIntegral, QuadratureError> {
    let vg = |x: &[f64], out: &mut [f64]| -> Result<(), FunctionError> {
        out[0] = g(x)?;
        Ok(())
    };
    let (active, est) = match face {
        FaceRef::Polytope { polytope, active } => (
            active,
            integrate_polytope_face(polytope, active, 1, &vg, cfg)?,
        ),
        FaceRef::Wedge {
            wedge,
            active,
            support,
        } => (
            active,
            integrate_wedge_face(wedge, active, support, 1, &vg, cfg)?,
        ),
    };
    Ok(FaceIntegral {
        active: active.to_vec(),
        value: IntegralValue::Approx {
            value: est.value[0],
            error: est.error,
        },
        normalized: true,
    })
}

/// Both sides of `∫*_F Dg·v_j = ∫*_{F_j} g` where `F` is the wedge face with
/// active set `active`, `j ∉ active` and `F_j = F ∩ H_j`.
///
/// # Panics
///
/// Panics if `j` is already active.
pub fn check_stokes_identity(
    w: &RegularWedge,
    active: &[usize],
    j: usize,
    g: &dyn SmoothFunction,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64), QuadratureError> {
    assert!(
        !active.contains(&j),
        "facet {j} is already active on the face"
    );
    let (lo, hi) = g.support_box().ok_or(QuadratureError::Unbounded)?;
    let vj = w.dual_basis()[j].to_f64();
    let lhs_g = |x: &[f64], out: &mut [f64]| -> Result<(), FunctionError> {
        out[0] = dirderiv(g, x, std::slice::from_ref(&vj))?;
        Ok(())
    };
    let rhs_g = |x: &[f64], out: &mut [f64]| -> Result<(), FunctionError> {
        out[0] = g.eval(x)?;
        Ok(())
    };
    let mut sub = active.to_vec();
    sub.push(j);
    let lhs = integrate_wedge_face(w, active, (&lo, &hi), 1, &lhs_g, cfg)?;
    let rhs = integrate_wedge_face(w, &sub, (&lo, &hi), 1, &rhs_g, cfg)?;
    Ok((lhs.value[0], rhs.value[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};
    use crate::functions::{parse_expression, BumpCutoff, Product};
    use crate::geometry::random_unimodular;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn triangle_region_integrals() {
        let t = DelzantPolytope::unit_triangle();
        let x1 = parse_expression("x1", 2).unwrap();
        assert!(
            (integrate_region(Region::Polytope(&t), &x1, &cfg()).unwrap() - 1.0 / 6.0).abs()
                < 1e-15
        );
        let f = parse_expression("1/(1+x1+x2)", 2).unwrap();
        let v = integrate_region(Region::Polytope(&t), &f, &cfg()).unwrap();
        assert!((v - (1.0 - 2f64.ln())).abs() < 1e-12);
        let zero = parse_expression("0", 2).unwrap();
        assert_eq!(
            integrate_region(Region::Polytope(&t), &zero, &cfg()).unwrap(),
            0.0
        );
    }

    #[test]
    fn lattice_length_of_hypotenuse_is_one() {
        let t = DelzantPolytope::unit_triangle();
        let one = |_: &[f64]| Ok(1.0);
        // facet 2 is x1 + x2 ≤ 1
        let face = FaceRef::Polytope {
            polytope: &t,
            active: &[2],
        };
        let v = integrate_face_star(face, &one, &cfg())
            .unwrap()
            .value
            .to_f64();
        assert!((v - 1.0).abs() < 1e-14);
        let x1 = |x: &[f64]| Ok(x[0]);
        let v = integrate_face_star(face, &x1, &cfg())
            .unwrap()
            .value
            .to_f64();
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn left_edge_normal_derivative() {
        // left edge x1 = 0, outward normal (-1, 0)
        let t = DelzantPolytope::unit_triangle();
        let f = parse_expression("1/(1+x1+x2)", 2).unwrap();
        let g = |x: &[f64]| dirderiv(&f, x, &[vec![-1.0, 0.0]]);
        let face = FaceRef::Polytope {
            polytope: &t,
            active: &[0],
        };
        let v = integrate_face_star(face, &g, &cfg())
            .unwrap()
            .value
            .to_f64();
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn vertex_face_is_point_evaluation() {
        let t = DelzantPolytope::unit_triangle();
        let f = parse_expression("exp(x1) + 3*x2", 2).unwrap();
        let g = |x: &[f64]| f.eval(x);
        for (i, v) in t.vertices_f64().iter().enumerate() {
            let active = t.incidence(i).to_vec();
            let face = FaceRef::Polytope {
                polytope: &t,
                active: &active,
            };
            let r = integrate_face_star(face, &g, &cfg())
                .unwrap()
                .value
                .to_f64();
            assert_eq!(r, f.eval(v).unwrap());
        }
    }

    #[test]
    fn exact_path_matches_numerical() {
        let cube = DelzantPolytope::unit_cube(3);
        let p = parse_expression("x1^2*x2 + 3*x3 - x1*x2*x3 + 1/7", 3).unwrap();
        let poly = p.as_polynomial().unwrap();
        let g = |x: &[f64], out: &mut [f64]| -> Result<(), FunctionError> {
            out[0] = p.eval(x)?;
            Ok(())
        };
        for codim in 0..=3 {
            for face in cube.faces(codim) {
                let exact = integrate_polytope_face_exact(&cube, &face.active, &poly);
                let num = integrate_polytope_face(&cube, &face.active, 1, &g, &cfg()).unwrap();
                assert!((to_f64(&exact) - num.value[0]).abs() < 1e-12);
            }
        }
        let exact = integrate_polytope_face_exact(&cube, &[], &poly);
        // 1/6 + 3/2 - 1/8 + 1/7
        assert_eq!(exact, rat(1, 6) + rat(3, 2) - rat(1, 8) + rat(1, 7));
    }

    #[test]
    fn exact_triangle_values() {
        let t = DelzantPolytope::unit_triangle();
        let x1 = Polynomial::var(2, 0);
        assert_eq!(integrate_polytope_face_exact(&t, &[], &x1), rat(1, 6));
        assert_eq!(integrate_polytope_face_exact(&t, &[2], &x1), rat(1, 2));
        assert_eq!(
            integrate_polytope_face_exact(&t, &[1], &Polynomial::constant(2, int(1))),
            int(1)
        );
    }

    #[test]
    fn additivity_under_subdivision() {
        // [0,2]x[0,1] equals two unit squares
        let r = DelzantPolytope::from_facets_i64(
            2,
            &[(&[-1, 0], 0), (&[1, 0], 2), (&[0, -1], 0), (&[0, 1], 1)],
        )
        .unwrap();
        let a = DelzantPolytope::from_facets_i64(
            2,
            &[(&[-1, 0], 0), (&[1, 0], 1), (&[0, -1], 0), (&[0, 1], 1)],
        )
        .unwrap();
        let b = DelzantPolytope::from_facets_i64(
            2,
            &[(&[-1, 0], -1), (&[1, 0], 2), (&[0, -1], 0), (&[0, 1], 1)],
        )
        .unwrap();
        let f = parse_expression("sin(x1)*exp(x2)", 2).unwrap();
        let whole = integrate_region(Region::Polytope(&r), &f, &cfg()).unwrap();
        let parts = integrate_region(Region::Polytope(&a), &f, &cfg()).unwrap()
            + integrate_region(Region::Polytope(&b), &f, &cfg()).unwrap();
        assert!((whole - parts).abs() < 1e-12);
    }

    fn bumped(expr: &str, n: usize, center: Vec<f64>) -> Product {
        let f = parse_expression(expr, n).unwrap();
        Product::new(Arc::new(BumpCutoff::new(center, 0.5, 1.5)), Arc::new(f))
    }

    #[test]
    fn stokes_standard_2d() {
        let w = RegularWedge::standard(2);
        let g = bumped("x1", 2, vec![0.0, 0.0]);
        let (l, r) = check_stokes_identity(&w, &[1], 0, &g, &cfg()).unwrap();
        assert!((l - r).abs() < 1e-9, "{l} vs {r}");
        let zero = Product::new(
            Arc::new(BumpCutoff::new(vec![0.0, 0.0], 0.5, 1.5)),
            Arc::new(Polynomial::zero(2)),
        );
        assert_eq!(
            check_stokes_identity(&w, &[1], 0, &zero, &cfg()).unwrap(),
            (0.0, 0.0)
        );
    }

    #[test]
    fn stokes_standard_3d_facet_to_edge() {
        let w = RegularWedge::standard(3);
        let g = bumped("exp(x1/3)*(1+x2*x3)", 3, vec![-0.2, 0.1, 0.0]);
        let (l, r) = check_stokes_identity(&w, &[2], 0, &g, &cfg()).unwrap();
        assert!((l - r).abs() < 1e-8, "{l} vs {r}");
    }

    #[test]
    fn wedge_region_integral() {
        // ∫ over the negative quadrant of a bump that is 1 on [-0.5, 0.5]^2
        let w = RegularWedge::standard(2);
        let g = bumped("1", 2, vec![0.0, 0.0]);
        let v = integrate_region(Region::Wedge(&w), &g, &cfg()).unwrap();
        let full = {
            let lo = [-1.5, -1.5];
            let hi = [1.5, 1.5];
            let h = |x: &[f64], out: &mut [f64]| -> Result<(), FunctionError> {
                out[0] = g.eval(x)?;
                Ok(())
            };
            integrate_box(&lo, &hi, 1, &h, &cfg()).unwrap().value[0]
        };
        assert!((4.0 * v - full).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn stokes_on_random_wedges(seed in 0u64..1000, j in 0usize..2, a in -1.0f64..1.0) {
            let w = RegularWedge::standard(2).transformed(&random_unimodular(2, 2, 2, seed));
            let apex: Vec<f64> = w.vertex().iter().map(to_f64).collect();
            let center = vec![apex[0] + 0.2, apex[1] - 0.1];
            let f = parse_expression(&format!("1 + {a}*x1*x2 + sin(x2)"), 2).unwrap();
            let g = Product::new(Arc::new(BumpCutoff::new(center, 0.7, 2.0)), Arc::new(f));
            let other = 1 - j;
            let (l, r) = check_stokes_identity(&w, &[other], j, &g, &cfg()).unwrap();
            prop_assert!((l - r).abs() < 1e-8, "{} vs {}", l, r);
            let (l, r) = check_stokes_identity(&w, &[], j, &g, &cfg()).unwrap();
            prop_assert!((l - r).abs() < 1e-8, "{} vs {}", l, r);
        }
    }
}
