use std::collections::BTreeMap;

use num_traits::Zero;
use rayon::prelude::*;

use super::pou::PartitionOfUnity;
use super::{Coefficient, ExpansionError, FaceContribution};
use crate::exact::{to_f64, Rational};
use crate::functions::{dirderiv, FunctionError, Jet, Polynomial, SmoothFunction};
use crate::geometry::{DelzantPolytope, LatticeVector};
use crate::quadrature::{integrate_polytope_face, integrate_polytope_face_exact, QuadratureConfig};

/// One summand of an expansion coefficient:
/// `coefficient · ∫*_F D^k (ρ f) · (d_1, …, d_k)` over the face with active
/// facet set `face`, where `ρ` is the partition weight of vertex `weight`
/// (or 1). Vertex faces mean point evaluation, the empty set the polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub order: usize,
    pub face: Vec<usize>,
    pub coefficient: Rational,
    pub directions: Vec<LatticeVector>,
    pub weight: Option<usize>,
}

impl Term {
    pub fn new(
        order: usize,
        face: Vec<usize>,
        coefficient: Rational,
        directions: Vec<LatticeVector>,
    ) -> Self {
        let mut face = face;
        face.sort_unstable();
        Term {
            order,
            face,
            coefficient,
            directions,
            weight: None,
        }
    }

    pub fn derivative_order(&self) -> usize {
        self.directions.len()
    }
}

/// Exact values `∫*_F D^k f · dirs` (without the coefficient).
pub fn evaluate_exact(p: &DelzantPolytope, terms: &[Term], f: &Polynomial) -> Vec<Rational> {
    terms
        .par_iter()
        .map(|t| {
            assert!(t.weight.is_none(), "partition weights have no exact path");
            let dirs: Vec<Vec<Rational>> = t.directions.iter().map(|d| d.to_rational()).collect();
            let g = f.contraction(&dirs);
            if t.face.len() == p.dim() {
                let v = p.face(&t.face).expect("term on unknown face").vertices[0];
                g.eval_rational(&p.vertices()[v].to_rational())
            } else {
                integrate_polytope_face_exact(p, &t.face, &g)
            }
        })
        .collect()
}

/// Distinct directions of a group of terms, with per-term multiplicities.
fn direction_table(terms: &[&Term]) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let mut distinct: Vec<LatticeVector> = Vec::new();
    let mut mults = Vec::with_capacity(terms.len());
    for t in terms {
        let mut m = vec![0usize; distinct.len()];
        for d in &t.directions {
            match distinct.iter().position(|e| e == d) {
                Some(i) => m[i] += 1,
                None => {
                    distinct.push(d.clone());
                    m.push(1);
                }
            }
        }
        mults.push(m);
    }
    let k = distinct.len();
    for m in &mut mults {
        m.resize(k, 0);
    }
    (distinct.iter().map(LatticeVector::to_f64).collect(), mults)
}

const SHARED_JET_LIMIT: usize = 4096;

/// Numerical values `∫*_F D^k (ρ f) · dirs` for every term, plus the summed
/// quadrature error estimate. Terms sharing a face and weight are integrated
/// together from one Taylor jet when its size is moderate.
pub fn evaluate_float(
    p: &DelzantPolytope,
    terms: &[Term],
    f: &dyn SmoothFunction,
    pou: Option<&PartitionOfUnity>,
    cfg: &QuadratureConfig,
) -> Result<(Vec<f64>, f64), ExpansionError> {
    let mut groups: BTreeMap<(usize, Vec<usize>, Option<usize>), Vec<usize>> = BTreeMap::new();
    for (i, t) in terms.iter().enumerate() {
        groups
            .entry((t.face.len(), t.face.clone(), t.weight))
            .or_default()
            .push(i);
    }
    let groups: Vec<_> = groups.into_iter().collect();
    let results = groups
        .par_iter()
        .map(
            |((_, face, weight), idx)| -> Result<(Vec<f64>, f64), ExpansionError> {
                let members: Vec<&Term> = idx.iter().map(|&i| &terms[i]).collect();
                let (dirs, mults) = direction_table(&members);
                let caps: Vec<usize> = (0..dirs.len())
                    .map(|j| mults.iter().map(|m| m[j]).max().unwrap_or(0))
                    .collect();
                let size: usize = caps.iter().map(|c| c + 1).product();
                let weight = *weight;
                if weight.is_some() && pou.is_none() {
                    return Err(ExpansionError::InvalidInput(
                        "weighted term without a partition".into(),
                    ));
                }
                let g = |x: &[f64], out: &mut [f64]| -> Result<(), FunctionError> {
                    if size <= SHARED_JET_LIMIT {
                        let seeds = if dirs.is_empty() {
                            Jet::seed(x, &[vec![0.0; x.len()]], &[0])
                        } else {
                            Jet::seed(x, &dirs, &caps)
                        };
                        let mut jet = f.eval_jet(&seeds)?;
                        if let (Some(i), Some(pou)) = (weight, pou) {
                            jet = jet.mul(&pou.weight_jet(i, &seeds)?);
                        }
                        for (o, m) in out.iter_mut().zip(&mults) {
                            *o = if dirs.is_empty() {
                                jet.value()
                            } else {
                                jet.derivative(m)
                            };
                        }
                    } else {
                        for (o, t) in out.iter_mut().zip(&members) {
                            let d: Vec<Vec<f64>> =
                                t.directions.iter().map(LatticeVector::to_f64).collect();
                            *o = match (weight, pou) {
                                (Some(i), Some(pou)) => dirderiv(&pou.weighted(i, f), x, &d)?,
                                _ => dirderiv(f, x, &d)?,
                            };
                        }
                    }
                    Ok(())
                };
                let est = integrate_polytope_face(p, face, members.len(), &g, cfg)?;
                Ok((est.value, est.error))
            },
        )
        .collect::<Result<Vec<_>, _>>()?;
    let mut values = vec![0.0; terms.len()];
    let mut error = 0.0;
    for ((_, idx), (vals, err)) in groups.iter().zip(results) {
        for (&i, v) in idx.iter().zip(vals) {
            values[i] = v;
        }
        error += err;
    }
    Ok((values, error))
}

/// Human-readable name of a polytope face.
pub fn face_label(p: &DelzantPolytope, active: &[usize]) -> String {
    let n = p.dim();
    if active.is_empty() {
        return "interior".to_string();
    }
    let face = p.face(active).expect("unknown face");
    let facets = active
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(",");
    if active.len() == n {
        return format!("vertex {}", p.vertex_label(face.vertices[0]));
    }
    let verts = face
        .vertices
        .iter()
        .map(|&v| p.vertex_label(v))
        .collect::<Vec<_>>()
        .join(" ");
    let kind = if active.len() + 1 == n {
        "edge"
    } else {
        "face"
    };
    format!("{kind} on facets {{{facets}}} [{verts}]")
}

/// Sums coefficient × value per face and order. Faces are ordered by
/// codimension, then active set; the order of the returned breakdown is the
/// summation order of the totals.
pub fn assemble<V: Clone>(
    p: &DelzantPolytope,
    terms: &[Term],
    values: &[V],
    max_order: usize,
    combine: impl Fn(&Rational, &V) -> Coefficient,
) -> (Vec<Coefficient>, Vec<FaceContribution>) {
    let mut by_face: BTreeMap<(usize, Vec<usize>), Vec<Coefficient>> = BTreeMap::new();
    for (t, v) in terms.iter().zip(values) {
        let slot = by_face
            .entry((t.face.len(), t.face.clone()))
            .or_insert_with(|| {
                vec![Coefficient::zero_like(&combine(&t.coefficient, v)); max_order + 1]
            });
        slot[t.order] = slot[t.order].add(&combine(&t.coefficient, v));
    }
    let breakdown: Vec<FaceContribution> = by_face
        .into_iter()
        .map(|((_, active), per_order)| FaceContribution {
            label: face_label(p, &active),
            active,
            per_order,
        })
        .collect();
    let exact = breakdown.iter().all(|b| {
        b.per_order
            .iter()
            .all(|c| matches!(c, Coefficient::Exact(_)))
    });
    let mut totals = vec![
        if exact {
            Coefficient::Exact(Rational::zero())
        } else {
            Coefficient::Approx(0.0)
        };
        max_order + 1
    ];
    for b in &breakdown {
        for (t, c) in totals.iter_mut().zip(&b.per_order) {
            *t = t.add(c);
        }
    }
    (totals, breakdown)
}

pub(crate) fn exact_combine(c: &Rational, v: &Rational) -> Coefficient {
    Coefficient::Exact(c * v)
}

pub(crate) fn float_combine(c: &Rational, v: &f64) -> Coefficient {
    Coefficient::Approx(to_f64(c) * v)
}
