use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{check_order, Coefficient, ExpansionError, ExpansionResult, FaceContribution, Method};
use crate::exact::{lambda_alpha, to_f64, MultiIndex, Rational};
use crate::functions::{FunctionError, Jet, SmoothFunction};
use crate::geometry::RegularWedge;
use crate::quadrature::{integrate_wedge_face, QuadratureConfig, QuadratureError};

/// `λ_α ∫*_{∩_{α_i>0} H_i} D^{q-ν(α)} f · v_{α-r(α)}` for one multi-index.
#[derive(Debug, Clone, PartialEq)]
pub struct WedgeTerm {
    pub alpha: MultiIndex,
    pub coefficient: Rational,
    /// Facets `i` with `α_i > 0`.
    pub face: Vec<usize>,
}

impl WedgeTerm {
    pub fn order(&self) -> usize {
        self.alpha.order()
    }

    /// Multiplicity of each face direction `v_i`, `i ∈ face`.
    pub fn multiplicities(&self) -> Vec<usize> {
        self.face
            .iter()
            .map(|&i| self.alpha.entries()[i] as usize - 1)
            .collect()
    }
}

/// All multi-index terms of orders `0..=q` with nonzero `λ_α`.
pub fn wedge_terms(n: usize, q: usize) -> Vec<WedgeTerm> {
    (0..=q)
        .flat_map(|k| MultiIndex::all_of_order(n, k))
        .filter_map(|alpha| {
            let coefficient = lambda_alpha(&alpha);
            if num_traits::Zero::is_zero(&coefficient) {
                return None;
            }
            Some(WedgeTerm {
                face: alpha.support(),
                alpha,
                coefficient,
            })
        })
        .collect()
}

fn face_name(face: &[usize]) -> String {
    if face.is_empty() {
        "W".to_string()
    } else {
        let ids: Vec<String> = face.iter().map(|i| (i + 1).to_string()).collect();
        format!("H{{{}}}", ids.join(","))
    }
}

/// `T_0..T_q` for a regular wedge. `f` must report a support box; every
/// face integral is restricted to it.
pub fn wedge_expansion(
    w: &RegularWedge,
    f: &dyn SmoothFunction,
    q: usize,
    cfg: &QuadratureConfig,
) -> Result<ExpansionResult, ExpansionError> {
    check_order(q)?;
    let (lo, hi) = f.support_box().ok_or(QuadratureError::Unbounded)?;
    let n = w.dim();
    let terms = wedge_terms(n, q);
    let mut groups: BTreeMap<(usize, Vec<usize>), Vec<usize>> = BTreeMap::new();
    for (i, t) in terms.iter().enumerate() {
        groups
            .entry((t.face.len(), t.face.clone()))
            .or_default()
            .push(i);
    }
    let groups: Vec<_> = groups.into_iter().collect();
    let duals: Vec<Vec<f64>> = w.dual_basis().iter().map(|v| v.to_f64()).collect();
    let results = groups
        .par_iter()
        .map(
            |((m, face), idx)| -> Result<(Vec<f64>, f64), ExpansionError> {
                let dirs: Vec<Vec<f64>> = face.iter().map(|&i| duals[i].clone()).collect();
                let caps = vec![q - m; dirs.len()];
                let mults: Vec<Vec<usize>> =
                    idx.iter().map(|&i| terms[i].multiplicities()).collect();
                let g = |x: &[f64], out: &mut [f64]| -> Result<(), FunctionError> {
                    if dirs.is_empty() {
                        let v = f.eval(x)?;
                        out.iter_mut().for_each(|o| *o = v);
                        return Ok(());
                    }
                    let jet = f.eval_jet(&Jet::seed(x, &dirs, &caps))?;
                    for (o, m) in out.iter_mut().zip(&mults) {
                        *o = jet.derivative(m);
                    }
                    Ok(())
                };
                let est = integrate_wedge_face(w, face, (&lo, &hi), idx.len(), &g, cfg)?;
                Ok((est.value, est.error))
            },
        )
        .collect::<Result<Vec<_>, _>>()?;
    let mut breakdown = Vec::new();
    let mut totals = vec![0.0; q + 1];
    let mut error = 0.0;
    for (((_, face), idx), (vals, err)) in groups.iter().zip(results) {
        let mut per_order = vec![0.0; q + 1];
        for (&i, v) in idx.iter().zip(vals) {
            per_order[terms[i].order()] += to_f64(&terms[i].coefficient) * v;
        }
        for (t, c) in totals.iter_mut().zip(&per_order) {
            *t += c;
        }
        error += err;
        breakdown.push(FaceContribution {
            label: face_name(face),
            active: face.clone(),
            per_order: per_order.into_iter().map(Coefficient::Approx).collect(),
        });
    }
    Ok(ExpansionResult {
        max_order: q,
        coefficients: totals.into_iter().map(Coefficient::Approx).collect(),
        breakdown,
        method: Method::Wedge,
        error_estimate: error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{parse_expression, BumpCutoff, Polynomial, Product};
    use crate::geometry::random_unimodular;
    use std::sync::Arc;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn one_dimensional_exponential() {
        let w = RegularWedge::standard(1);
        let f = Product::new(
            Arc::new(parse_expression("exp(x1)", 1).unwrap()),
            Arc::new(BumpCutoff::new(vec![0.0], 40.0, 45.0)),
        );
        let r = wedge_expansion(&w, &f, 4, &cfg()).unwrap();
        let v = r.values();
        for (a, b) in v.iter().zip([1.0, 0.5, 1.0 / 12.0, 0.0, -1.0 / 720.0]) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_function() {
        let w = RegularWedge::from_i64(&[&[1, 1], &[0, -1]], &[0, 0]).unwrap();
        let f = Product::new(
            Arc::new(Polynomial::zero(2)),
            Arc::new(BumpCutoff::new(vec![0.0, 0.0], 1.0, 2.0)),
        );
        let r = wedge_expansion(&w, &f, 3, &cfg()).unwrap();
        assert!(r.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standard_wedge_first_order_is_half_facet_sum() {
        let w = RegularWedge::standard(2);
        let f = Product::new(
            Arc::new(parse_expression("exp(x1/2)*cos(x2)", 2).unwrap()),
            Arc::new(BumpCutoff::new(vec![0.0, 0.0], 1.0, 3.0)),
        );
        let r = wedge_expansion(&w, &f, 1, &cfg()).unwrap();
        let h1 = r
            .breakdown
            .iter()
            .find(|b| b.active == vec![0])
            .unwrap()
            .per_order[1]
            .to_f64();
        let h2 = r
            .breakdown
            .iter()
            .find(|b| b.active == vec![1])
            .unwrap()
            .per_order[1]
            .to_f64();
        assert!((r.values()[1] - (h1 + h2)).abs() < 1e-15);
    }

    #[test]
    fn unimodular_invariance() {
        let w = RegularWedge::standard(2);
        let base: Arc<dyn SmoothFunction> = Arc::new(Product::new(
            Arc::new(parse_expression("exp(x1/3)*(1+x1*x2)", 2).unwrap()),
            Arc::new(BumpCutoff::new(vec![-0.5, -0.3], 1.0, 2.5)),
        ));
        let r0 = wedge_expansion(&w, &base, 3, &cfg()).unwrap();
        for seed in 0..3 {
            let map = random_unimodular(2, 3, 2, seed);
            let g = crate::functions::AffinePullback::new(Arc::clone(&base), map.clone());
            let r = wedge_expansion(&w.transformed(&map), &g, 3, &cfg()).unwrap();
            for (a, b) in r0.values().iter().zip(r.values()) {
                assert!((a - b).abs() < 1e-9, "seed {seed}: {a} vs {b}");
            }
        }
    }
}
