use num_traits::{One, Zero};

use super::{check_order, evaluate_expansion, ExpansionError, ExpansionResult, Method, Term};
use crate::exact::{factorial, shared_todd, Rational};
use crate::functions::SmoothFunction;
use crate::geometry::DelzantPolytope;
use crate::quadrature::QuadratureConfig;

/// Terms of a lattice interval: `T_0 = ∫ f` and, for `q ≥ 1`,
/// `T_q = Σ_v (b_q/q!) f^{(q-1)}(v)·v_v^{q-1}` where `v_v` is the outward
/// primitive direction at the endpoint.
pub fn interval_terms(p: &DelzantPolytope, q: usize) -> Vec<Term> {
    assert_eq!(p.dim(), 1, "interval terms need a 1-dimensional polytope");
    let todd = shared_todd(q);
    let mut terms = vec![Term::new(0, vec![], Rational::one(), vec![])];
    for order in 1..=q {
        let c = todd.get(order) / Rational::from_integer(factorial(order));
        if c.is_zero() {
            continue;
        }
        for v in 0..p.vertices().len() {
            let outward = -&p.edge_directions(v)[0];
            terms.push(Term::new(
                order,
                p.incidence(v).to_vec(),
                c.clone(),
                vec![outward; order - 1],
            ));
        }
    }
    terms
}

pub fn interval_expansion(
    p: &DelzantPolytope,
    f: &dyn SmoothFunction,
    q: usize,
    cfg: &QuadratureConfig,
) -> Result<ExpansionResult, ExpansionError> {
    if p.dim() != 1 {
        return Err(ExpansionError::UnsupportedDimension(p.dim()));
    }
    check_order(q)?;
    evaluate_expansion(p, &interval_terms(p, q), f, q, Method::Interval, None, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};
    use crate::functions::parse_expression;

    #[test]
    fn constant_on_interval_counts_points() {
        // [0, 3]: N·3 + 1 points, so T = (3, 1, 0, ...)
        let p = DelzantPolytope::from_facets_i64(1, &[(&[-1], 0), (&[1], 3)]).unwrap();
        let one = parse_expression("1", 1).unwrap();
        let r = interval_expansion(&p, &one, 4, &QuadratureConfig::default()).unwrap();
        let c: Vec<_> = r
            .coefficients
            .iter()
            .map(|c| c.exact().unwrap().clone())
            .collect();
        assert_eq!(c, vec![int(3), int(1), int(0), int(0), int(0)]);
    }

    #[test]
    fn square_on_unit_interval() {
        // Σ_{k=0}^N (k/N)^2 / N = 1/3 + 1/(2N) + 1/(6N^2)
        let p = DelzantPolytope::unit_cube(1);
        let f = parse_expression("x1^2", 1).unwrap();
        let r = interval_expansion(&p, &f, 3, &QuadratureConfig::default()).unwrap();
        let c: Vec<_> = r
            .coefficients
            .iter()
            .map(|c| c.exact().unwrap().clone())
            .collect();
        assert_eq!(c, vec![rat(1, 3), rat(1, 2), rat(1, 6), int(0)]);
    }
}
