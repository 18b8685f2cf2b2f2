use num_traits::{One, Zero};

use super::{check_order, evaluate_expansion, ExpansionError, ExpansionResult, Method, Term};
use crate::exact::{factorial, pow, rat, shared_todd, Rational};
use crate::functions::SmoothFunction;
use crate::geometry::{DelzantPolytope, LatticeVector};
use crate::quadrature::QuadratureConfig;

fn repeat(v: &LatticeVector, k: usize) -> Vec<LatticeVector> {
    vec![v.clone(); k]
}

/// `b_k / k!`.
fn todd_over_factorial(k: usize) -> Rational {
    shared_todd(k).get(k) / Rational::from_integer(factorial(k))
}

/// Closed-form vertex and edge operators of a Delzant polygon for orders
/// `0..=q`, as a term list.
///
/// With `c_p = b_{2p}/(2p)!` (so `c_1 = 1/12`):
/// * `T_{2p}` has edge terms `-c_p ζ(e)^{2p-1} ∫*_e D^{2p-1}f·n_e^{2p-1}` and
///   vertex terms `Σ_{m+ℓ=p} c_m c_ℓ D^{2p-2}f(v)·(w1^{2m-1}, w2^{2ℓ-1})`
///   `+ c_p η_1 Σ_k ζ(e_1)^k D^{2p-2}f(v)·(n_{e_1}^k, w2^{2p-2-k})` and the
///   mirror term with `(η_2, e_2, w1)`;
/// * `T_{2p+1}` has vertex terms `-(c_p/2)(D^{2p-1}f(v)·w1^{2p-1} + D^{2p-1}f(v)·w2^{2p-1})`.
///
/// At `p = 1` these reduce to `T_2 = Σ_v (1/4 + μ/12) f(v) - (1/12) Σ_e ζ ∫*_e Df·n_e`.
///
/// # Panics
///
/// Panics if `p` is not a polygon.
pub fn polygon_terms(p: &DelzantPolytope, q: usize) -> Vec<Term> {
    assert_eq!(p.dim(), 2, "polygon terms need a 2-dimensional polytope");
    let edges = p.all_edge_data();
    let frames = p.all_vertex_frames();
    let mut terms = vec![Term::new(0, vec![], Rational::one(), vec![])];
    if q >= 1 {
        for e in &edges {
            terms.push(Term::new(1, vec![e.facet], rat(1, 2), vec![]));
        }
    }
    for order in 2..=q {
        let half = order / 2;
        if order % 2 == 0 {
            let c = todd_over_factorial(order);
            for e in &edges {
                terms.push(Term::new(
                    order,
                    vec![e.facet],
                    -&c * pow(&e.zeta, order - 1),
                    repeat(&e.normal, order - 1),
                ));
            }
            for fr in &frames {
                let face = vec![fr.e1, fr.e2];
                if order == 2 {
                    terms.push(Term::new(2, face.clone(), rat(1, 4), vec![]));
                }
                for m in 1..half {
                    let l = half - m;
                    let coef = todd_over_factorial(2 * m) * todd_over_factorial(2 * l);
                    let mut dirs = repeat(&fr.w1, 2 * m - 1);
                    dirs.extend(repeat(&fr.w2, 2 * l - 1));
                    terms.push(Term::new(order, face.clone(), coef, dirs));
                }
                let sides = [(&fr.eta1, fr.e1, &fr.w2), (&fr.eta2, fr.e2, &fr.w1)];
                for (eta, facet, other) in sides {
                    let zeta = &edges[facet].zeta;
                    let normal = &p.facets()[facet].normal;
                    for k in 0..=order - 2 {
                        let mut dirs = repeat(normal, k);
                        dirs.extend(repeat(other, order - 2 - k));
                        terms.push(Term::new(
                            order,
                            face.clone(),
                            &c * eta * pow(zeta, k),
                            dirs,
                        ));
                    }
                }
            }
        } else {
            let c = todd_over_factorial(2 * half) / Rational::from_integer(2.into());
            for fr in &frames {
                let face = vec![fr.e1, fr.e2];
                for w in [&fr.w1, &fr.w2] {
                    terms.push(Term::new(order, face.clone(), -&c, repeat(w, order - 2)));
                }
            }
        }
    }
    terms.retain(|t| !t.coefficient.is_zero());
    terms
}

/// `T_0..T_q` of a polygon from the closed-form operators. Polynomial `f`
/// is handled entirely in rationals.
pub fn polygon_expansion(
    p: &DelzantPolytope,
    f: &dyn SmoothFunction,
    q: usize,
    cfg: &QuadratureConfig,
) -> Result<ExpansionResult, ExpansionError> {
    if p.dim() != 2 {
        return Err(ExpansionError::UnsupportedDimension(p.dim()));
    }
    check_order(q)?;
    let terms = polygon_terms(p, q);
    evaluate_expansion(p, &terms, f, q, Method::PolygonClosedForm, None, cfg)
}

/// Outcome of checking that every term of order `q` on a codimension-`m`
/// face differentiates exactly `q - m` times, only in directions normal to
/// the face.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolygonAudit {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl PolygonAudit {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn audit_polygon_terms(p: &DelzantPolytope, terms: &[Term]) -> PolygonAudit {
    let mut violations = Vec::new();
    for (i, t) in terms.iter().enumerate() {
        let codim = t.face.len();
        if t.derivative_order() + codim != t.order {
            violations.push(format!(
                "term {i}: order {} on a codim-{codim} face with {} derivatives",
                t.order,
                t.derivative_order()
            ));
        }
        if codim == 1 {
            let e = p.edge_data(t.face[0]);
            if let Some(d) = t.directions.iter().find(|d| !d.dot(&e.generator).is_zero()) {
                violations.push(format!("term {i}: direction {d} is not normal to its edge"));
            }
        }
        if codim == 0 && !t.directions.is_empty() {
            violations.push(format!("term {i}: interior term carries derivatives"));
        }
    }
    PolygonAudit {
        checked: terms.len(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int;
    use crate::expansion::Coefficient;
    use crate::functions::{parse_expression, Polynomial};

    fn exact(r: &ExpansionResult) -> Vec<Rational> {
        r.coefficients
            .iter()
            .map(|c| c.exact().unwrap().clone())
            .collect()
    }

    #[test]
    fn explicit_triangle_example() {
        let t = DelzantPolytope::unit_triangle();
        let f = Polynomial::var(2, 0);
        let r = polygon_expansion(&t, &f, 4, &QuadratureConfig::default()).unwrap();
        assert_eq!(
            exact(&r),
            vec![rat(1, 6), rat(1, 2), rat(1, 3), int(0), int(0)]
        );
        assert_eq!(r.method, Method::PolygonClosedForm);
    }

    #[test]
    fn constant_function_gives_pick() {
        let sq = DelzantPolytope::unit_cube(2);
        let one = Polynomial::constant(2, int(1));
        let r = polygon_expansion(&sq, &one, 3, &QuadratureConfig::default()).unwrap();
        assert_eq!(exact(&r), vec![int(1), int(2), int(1), int(0)]);
    }

    #[test]
    fn breakdown_sums_to_totals() {
        let t = DelzantPolytope::unit_triangle();
        let f = parse_expression("x1^3*x2 + x2^2", 2).unwrap();
        let r = polygon_expansion(&t, &f, 6, &QuadratureConfig::default()).unwrap();
        for q in 0..=6 {
            let s = r
                .breakdown
                .iter()
                .fold(Coefficient::Exact(Rational::zero()), |a, b| {
                    a.add(&b.per_order[q])
                });
            assert_eq!(s, r.coefficients[q]);
        }
    }

    #[test]
    fn audit_passes_and_odd_orders_have_no_edge_terms() {
        let t =
            DelzantPolytope::from_vertices_i64(2, &[&[0, 0], &[3, 0], &[1, 2], &[0, 2]]).unwrap();
        let terms = polygon_terms(&t, 8);
        let audit = audit_polygon_terms(&t, &terms);
        assert!(audit.passed(), "{:?}", audit.violations);
        assert!(terms
            .iter()
            .all(|t| t.order < 3 || t.order % 2 == 0 || t.face.len() == 2));
    }

    #[test]
    fn float_path_matches_exact_path() {
        let t = DelzantPolytope::unit_triangle();
        let f = parse_expression("x1^2*x2 - 3*x1*x2^2 + x2^4", 2).unwrap();
        let exact_r = polygon_expansion(&t, &f, 6, &QuadratureConfig::default()).unwrap();
        let float_f = parse_expression("x1^2*x2 - 3*x1*x2^2 + x2^4 + 0*exp(x1)", 2).unwrap();
        let float_r = polygon_expansion(&t, &float_f, 6, &QuadratureConfig::default()).unwrap();
        assert!(!float_r.is_exact());
        for (a, b) in exact_r.values().iter().zip(float_r.values()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn reciprocal_example() {
        let t = DelzantPolytope::unit_triangle();
        let f = parse_expression("1/(1+x1+x2)", 2).unwrap();
        let r = polygon_expansion(&t, &f, 2, &QuadratureConfig::default()).unwrap();
        let v = r.values();
        let ln2 = 2f64.ln();
        assert!((v[0] - (1.0 - ln2)).abs() < 1e-10);
        assert!((v[1] - (0.25 + ln2)).abs() < 1e-10);
        assert!((v[2] - 33.0 / 48.0).abs() < 1e-10);
    }
}
