use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{Coefficient, ExpansionError, ExpansionResult, FaceContribution, Method};
use crate::exact::{lambda_alpha, to_f64, MultiIndex};
use crate::functions::{FunctionError, SmoothFunction};
use crate::geometry::RegularWedge;
use crate::quadrature::{integrate_box, QuadratureConfig, QuadratureError};

/// Highest order the finite-difference oracle accepts.
pub const GS_MAX_ORDER: usize = 4;

/// `∫_{W_h} f` for the perturbed wedge `W_h = {⟨u_i, x⟩ ≤ c_i + h_i}`,
/// restricted to the support box of `f`.
pub fn perturbed_wedge_integral(
    w: &RegularWedge,
    f: &dyn SmoothFunction,
    h: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64, QuadratureError> {
    let (blo, bhi) = f.support_box().ok_or(QuadratureError::Unbounded)?;
    let n = w.dim();
    let x0: Vec<f64> = w.vertex().iter().map(to_f64).collect();
    let basis: Vec<Vec<f64>> = w.dual_basis().iter().map(|v| v.to_f64()).collect();
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for (j, u) in w.normals().iter().enumerate() {
        let u = u.to_f64();
        let (mut a, mut b) = (0.0, 0.0);
        for k in 0..n {
            let p = u[k] * (blo[k] - x0[k]);
            let q = u[k] * (bhi[k] - x0[k]);
            a += p.min(q);
            b += p.max(q);
        }
        let top = b.min(h[j]);
        if top <= a {
            return Ok(0.0);
        }
        lo.push(a);
        hi.push(top);
    }
    let g = |t: &[f64], out: &mut [f64]| -> Result<(), FunctionError> {
        let mut x = x0.clone();
        for (tj, v) in t.iter().zip(&basis) {
            for c in 0..n {
                x[c] += tj * v[c];
            }
        }
        out[0] = f.eval(&x)?;
        Ok(())
    };
    Ok(integrate_box(&lo, &hi, 1, &g, cfg)?.value[0])
}

fn binomial(k: usize, i: usize) -> f64 {
    (0..i).fold(1.0, |acc, j| acc * (k - j) as f64 / (j + 1) as f64)
}

/// Tensor central difference `∂^α g(0)` with step `s`.
fn central_difference(
    alpha: &[u32],
    s: f64,
    g: &(dyn Fn(&[f64]) -> Result<f64, QuadratureError> + Sync),
) -> Result<f64, QuadratureError> {
    let n = alpha.len();
    // stencil per coordinate: (offset, weight)
    let stencils: Vec<Vec<(f64, f64)>> = alpha
        .iter()
        .map(|&k| {
            let k = k as usize;
            (0..=k)
                .map(|i| {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    (
                        (k as f64 / 2.0 - i as f64) * s,
                        sign * binomial(k, i) / s.powi(k as i32),
                    )
                })
                .collect()
        })
        .collect();
    let total: usize = stencils.iter().map(Vec::len).product();
    let points: Vec<(Vec<f64>, f64)> = (0..total)
        .map(|mut idx| {
            let mut h = vec![0.0; n];
            let mut wgt = 1.0;
            for (j, st) in stencils.iter().enumerate() {
                let (off, w) = st[idx % st.len()];
                idx /= st.len();
                h[j] = off;
                wgt *= w;
            }
            (h, wgt)
        })
        .collect();
    let vals = points
        .par_iter()
        .map(|(h, _)| g(h))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(points.iter().zip(vals).map(|((_, w), v)| w * v).sum())
}

/// Independent check of [`super::wedge_expansion`]: applies the Todd
/// operator `Σ_α λ_α ∂^α/∂h^α` to `h ↦ ∫_{W_h} f` by nested central finite
/// differences with Richardson extrapolation.
pub fn gs_todd_oracle(
    w: &RegularWedge,
    f: &dyn SmoothFunction,
    q: usize,
    cfg: &QuadratureConfig,
) -> Result<ExpansionResult, ExpansionError> {
    if q > GS_MAX_ORDER {
        return Err(ExpansionError::OrderTooLarge {
            order: q,
            max: GS_MAX_ORDER,
        });
    }
    let n = w.dim();
    let inner = QuadratureConfig {
        abs_tol: cfg.abs_tol.min(1e-13),
        rel_tol: cfg.rel_tol.min(1e-13),
        ..*cfg
    };
    let g = |h: &[f64]| perturbed_wedge_integral(w, f, h, &inner);
    let base_step = 0.3;
    let levels = 4;
    let mut by_face: BTreeMap<(usize, Vec<usize>), Vec<f64>> = BTreeMap::new();
    for order in 0..=q {
        for alpha in MultiIndex::all_of_order(n, order) {
            let lambda = to_f64(&lambda_alpha(&alpha));
            if lambda == 0.0 {
                continue;
            }
            let value = if order == 0 {
                g(&vec![0.0; n])?
            } else {
                let mut table = Vec::with_capacity(levels);
                for k in 0..levels {
                    table.push(central_difference(
                        alpha.entries(),
                        base_step / 2f64.powi(k as i32),
                        &g,
                    )?);
                }
                for m in 1..levels {
                    let factor = 4f64.powi(m as i32);
                    for k in (m..levels).rev() {
                        table[k] = (factor * table[k] - table[k - 1]) / (factor - 1.0);
                    }
                }
                table[levels - 1]
            };
            let face = alpha.support();
            by_face
                .entry((face.len(), face))
                .or_insert_with(|| vec![0.0; q + 1])[order] += lambda * value;
        }
    }
    let mut totals = vec![0.0; q + 1];
    let breakdown = by_face
        .into_iter()
        .map(|((_, active), per_order)| {
            for (t, v) in totals.iter_mut().zip(&per_order) {
                *t += v;
            }
            FaceContribution {
                label: if active.is_empty() {
                    "W".into()
                } else {
                    format!("H{:?}", active.iter().map(|i| i + 1).collect::<Vec<_>>())
                },
                active,
                per_order: per_order.into_iter().map(Coefficient::Approx).collect(),
            }
        })
        .collect();
    Ok(ExpansionResult {
        max_order: q,
        coefficients: totals.into_iter().map(Coefficient::Approx).collect(),
        breakdown,
        method: Method::GsOracle,
        error_estimate: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::wedge_expansion;
    use crate::functions::{parse_expression, BumpCutoff, Product};
    use std::sync::Arc;

    #[test]
    fn one_dimensional_oracle() {
        let w = RegularWedge::standard(1);
        let f = Product::new(
            Arc::new(parse_expression("exp(x1)", 1).unwrap()),
            Arc::new(BumpCutoff::new(vec![0.0], 40.0, 45.0)),
        );
        let r = gs_todd_oracle(&w, &f, 3, &QuadratureConfig::default()).unwrap();
        let v = r.values();
        for (a, b) in v.iter().zip([1.0, 0.5, 1.0 / 12.0, 0.0]) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_deep_orders() {
        let w = RegularWedge::standard(1);
        let f = BumpCutoff::new(vec![0.0], 1.0, 2.0);
        assert!(matches!(
            gs_todd_oracle(&w, &f, 5, &QuadratureConfig::default()),
            Err(ExpansionError::OrderTooLarge { .. })
        ));
    }

    #[test]
    fn two_dimensional_oracle_matches_face_formula() {
        let w = RegularWedge::standard(2);
        let f = Product::new(
            Arc::new(parse_expression("exp(x1/2)*cos(x2/3)", 2).unwrap()),
            Arc::new(BumpCutoff::new(vec![0.0, 0.0], 2.0, 5.0)),
        );
        let cfg = QuadratureConfig::default();
        let a = gs_todd_oracle(&w, &f, 3, &cfg).unwrap();
        let b = wedge_expansion(&w, &f, 3, &cfg).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
    }
}
