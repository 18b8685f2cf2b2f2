use super::gauss::{gauss_legendre, GaussRule};
use super::{QuadratureConfig, QuadratureError};
use crate::functions::FunctionError;
use rayon::prelude::*;

/// Vector-valued integrand `x ↦ out`.
pub type Integrand<'a> = dyn Fn(&[f64], &mut [f64]) -> Result<(), FunctionError> + Sync + 'a;

/// Result of a numerical integration: one value per integrand component and
/// the accumulated error estimate (max-norm over components).
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: Vec<f64>,
    pub error: f64,
}

/// Bisections applied before the error estimate may stop refinement. A
/// single whole-versus-halves comparison can agree by accident on
/// integrands that are flat over most of the interval.
const MIN_DEPTH: usize = 2;

struct Ctx<'a, 'b> {
    lo: &'a [f64],
    hi: &'a [f64],
    m: usize,
    g: &'a Integrand<'b>,
    rule: &'a GaussRule,
    cfg: &'a QuadratureConfig,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

impl Ctx<'_, '_> {
    /// Integral over the trailing coordinates `d..` at the fixed prefix.
    fn inner(
        &self,
        prefix: &mut Vec<f64>,
        abs_tol: f64,
        rel_tol: f64,
    ) -> Result<(Vec<f64>, f64), QuadratureError> {
        let d = prefix.len();
        if d == self.lo.len() {
            let mut out = vec![0.0; self.m];
            (self.g)(prefix, &mut out)?;
            return Ok((out, 0.0));
        }
        let (a, b) = (self.lo[d], self.hi[d]);
        if b <= a {
            return Ok((vec![0.0; self.m], 0.0));
        }
        let (whole, _) = self.apply(prefix, a, b, abs_tol, rel_tol)?;
        let target = abs_tol.max(rel_tol * max_abs(&whole));
        self.refine(prefix, a, b, whole, 0, target, b - a, abs_tol, rel_tol)
    }

    /// Gauss rule on `[a, b]` in coordinate `prefix.len()`.
    fn apply(
        &self,
        prefix: &mut Vec<f64>,
        a: f64,
        b: f64,
        abs_tol: f64,
        rel_tol: f64,
    ) -> Result<(Vec<f64>, f64), QuadratureError> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = vec![0.0; self.m];
        let mut err = 0.0;
        // inner levels are solved more tightly so their noise does not drive
        // refinement of the outer level
        let len = (self.hi[prefix.len()] - self.lo[prefix.len()]).max(f64::MIN_POSITIVE);
        let inner_abs = 0.1 * abs_tol / len;
        for (x, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            prefix.push(mid + half * x);
            let r = self.inner(prefix, inner_abs, 0.1 * rel_tol);
            prefix.pop();
            let (val, e) = r?;
            for (s, v) in acc.iter_mut().zip(&val) {
                *s += w * half * v;
            }
            err += w * half * e;
        }
        Ok((acc, err))
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &self,
        prefix: &mut Vec<f64>,
        a: f64,
        b: f64,
        whole: Vec<f64>,
        depth: usize,
        target: f64,
        total_len: f64,
        abs_tol: f64,
        rel_tol: f64,
    ) -> Result<(Vec<f64>, f64), QuadratureError> {
        let mid = 0.5 * (a + b);
        let (left, el) = self.apply(prefix, a, mid, abs_tol, rel_tol)?;
        let (right, er) = self.apply(prefix, mid, b, abs_tol, rel_tol)?;
        let sum: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
        let diff = whole
            .iter()
            .zip(&sum)
            .fold(0.0_f64, |acc, (w, s)| acc.max((w - s).abs()));
        let local_target = target * (b - a) / total_len;
        let roundoff = 64.0 * f64::EPSILON * max_abs(&sum);
        let settled = depth + 1 >= MIN_DEPTH && diff <= local_target.max(roundoff);
        if settled || depth + 1 >= self.cfg.max_subdivisions {
            return Ok((sum, diff.max(0.0) + el + er));
        }
        let (lv, le) = self.refine(
            prefix,
            a,
            mid,
            left,
            depth + 1,
            target,
            total_len,
            abs_tol,
            rel_tol,
        )?;
        let (rv, re) = self.refine(
            prefix,
            mid,
            b,
            right,
            depth + 1,
            target,
            total_len,
            abs_tol,
            rel_tol,
        )?;
        Ok((lv.iter().zip(&rv).map(|(l, r)| l + r).collect(), le + re))
    }
}

/// A sub-box of the cubature with its tensor Gauss value and the values of
/// its two halves along every axis; the halves along the split axis become
/// the children.
struct Cell {
    lo: Vec<f64>,
    hi: Vec<f64>,
    depth: Vec<usize>,
    value: Vec<f64>,
    halves: Vec<(Vec<f64>, Vec<f64>)>,
    /// Splittable axis with the largest whole-versus-halves difference.
    axis: Option<usize>,
    /// Sum over axes of the whole-versus-halves differences.
    err: f64,
}

struct Pending(Cell);

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.0.err == other.0.err
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.err.total_cmp(&other.0.err)
    }
}

/// Cells examined before the cubature gives up on the tolerance.
const MAX_CELLS: usize = 1 << 16;

struct Cubature<'a, 'b> {
    m: usize,
    g: &'a Integrand<'b>,
    rule: &'a GaussRule,
    max_depth: usize,
}

impl Cubature<'_, '_> {
    /// Tensor-product Gauss rule on `[lo, hi]`.
    fn tensor(&self, lo: &[f64], hi: &[f64]) -> Result<Vec<f64>, QuadratureError> {
        let d = lo.len();
        let p = self.rule.nodes.len();
        let half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
        let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let jac: f64 = half.iter().product();
        let mut acc = vec![0.0; self.m];
        let mut out = vec![0.0; self.m];
        let mut x = vec![0.0; d];
        let mut idx = vec![0usize; d];
        loop {
            let mut w = jac;
            for k in 0..d {
                x[k] = mid[k] + half[k] * self.rule.nodes[idx[k]];
                w *= self.rule.weights[idx[k]];
            }
            (self.g)(&x, &mut out)?;
            for (a, o) in acc.iter_mut().zip(&out) {
                *a += w * o;
            }
            let mut k = 0;
            loop {
                if k == d {
                    return Ok(acc);
                }
                idx[k] += 1;
                if idx[k] < p {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    fn cell(
        &self,
        lo: Vec<f64>,
        hi: Vec<f64>,
        depth: Vec<usize>,
        value: Vec<f64>,
    ) -> Result<Cell, QuadratureError> {
        let d = lo.len();
        let halves = (0..d)
            .into_par_iter()
            .map(|k| {
                let mid = 0.5 * (lo[k] + hi[k]);
                let mut left_hi = hi.clone();
                left_hi[k] = mid;
                let mut right_lo = lo.clone();
                right_lo[k] = mid;
                Ok((self.tensor(&lo, &left_hi)?, self.tensor(&right_lo, &hi)?))
            })
            .collect::<Result<Vec<_>, QuadratureError>>()?;
        let axis_err: Vec<f64> = halves
            .iter()
            .map(|(l, r)| {
                value
                    .iter()
                    .zip(l.iter().zip(r))
                    .fold(0.0_f64, |acc, (v, (a, b))| acc.max((v - a - b).abs()))
            })
            .collect();
        let axis = (0..d)
            .filter(|&k| depth[k] < self.max_depth)
            .max_by(|&a, &b| axis_err[a].total_cmp(&axis_err[b]));
        Ok(Cell {
            lo,
            hi,
            depth,
            value,
            halves,
            axis,
            err: axis_err.iter().sum(),
        })
    }

    fn children(&self, c: Cell) -> Result<[Cell; 2], QuadratureError> {
        let k = c.axis.expect("split cell has an axis");
        let mid = 0.5 * (c.lo[k] + c.hi[k]);
        let mut depth = c.depth;
        depth[k] += 1;
        let (lv, rv) = c.halves.into_iter().nth(k).expect("axis in range");
        let mut left_hi = c.hi.clone();
        left_hi[k] = mid;
        let mut right_lo = c.lo.clone();
        right_lo[k] = mid;
        let (a, b) = rayon::join(
            || self.cell(c.lo, left_hi, depth.clone(), lv),
            || self.cell(right_lo, c.hi, depth.clone(), rv),
        );
        Ok([a?, b?])
    }
}

/// Globally adaptive tensor Gauss cubature for boxes of dimension ≥ 2. The
/// cell with the largest estimated error is bisected until the summed
/// estimate meets the tolerance.
fn cubature(
    lo: &[f64],
    hi: &[f64],
    m: usize,
    g: &Integrand<'_>,
    rule: &GaussRule,
    cfg: &QuadratureConfig,
) -> Result<(Vec<f64>, f64), QuadratureError> {
    let d = lo.len();
    let cub = Cubature {
        m,
        g,
        rule,
        max_depth: cfg.max_subdivisions,
    };
    // start from the grid with MIN_DEPTH - 1 bisections per axis
    let start = (MIN_DEPTH - 1).min(cfg.max_subdivisions);
    let per_axis = 1usize << start;
    let mut heap = std::collections::BinaryHeap::new();
    let mut done: Vec<Cell> = Vec::new();
    let mut idx = vec![0usize; d];
    'grid: loop {
        let clo: Vec<f64> = (0..d)
            .map(|k| lo[k] + (hi[k] - lo[k]) * idx[k] as f64 / per_axis as f64)
            .collect();
        let chi: Vec<f64> = (0..d)
            .map(|k| lo[k] + (hi[k] - lo[k]) * (idx[k] + 1) as f64 / per_axis as f64)
            .collect();
        let v = cub.tensor(&clo, &chi)?;
        heap.push(Pending(cub.cell(clo, chi, vec![start; d], v)?));
        let mut k = 0;
        loop {
            if k == d {
                break 'grid;
            }
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
    let totals = |heap: &std::collections::BinaryHeap<Pending>, done: &[Cell]| {
        let mut total = vec![0.0; m];
        let (mut mass, mut err) = (0.0, 0.0);
        for c in heap.iter().map(|p| &p.0).chain(done) {
            for (t, v) in total.iter_mut().zip(&c.value) {
                *t += v;
            }
            mass += max_abs(&c.value);
            err += c.err;
        }
        (total, mass, err)
    };
    let target = |total: &[f64], mass: f64| {
        cfg.abs_tol
            .max(cfg.rel_tol * max_abs(total))
            .max(64.0 * f64::EPSILON * mass)
    };
    let mut cells = heap.len();
    let (mut total, mut mass, mut err) = totals(&heap, &done);
    loop {
        if err <= target(&total, mass) || cells >= MAX_CELLS {
            // running sums drift, so confirm with a fresh pass
            (total, mass, err) = totals(&heap, &done);
            if err <= target(&total, mass) || cells >= MAX_CELLS {
                return Ok((total, err));
            }
        }
        let Some(Pending(worst)) = heap.pop() else {
            let (total, _, err) = totals(&heap, &done);
            return Ok((total, err));
        };
        if worst.axis.is_none() {
            done.push(worst);
            continue;
        }
        for (t, v) in total.iter_mut().zip(&worst.value) {
            *t -= v;
        }
        mass -= max_abs(&worst.value);
        err -= worst.err;
        for c in cub.children(worst)? {
            for (t, v) in total.iter_mut().zip(&c.value) {
                *t += v;
            }
            mass += max_abs(&c.value);
            err += c.err;
            heap.push(Pending(c));
        }
        cells += 1;
    }
}

/// Adaptive Gauss–Legendre integration of an `m`-component integrand over
/// the box `[lo, hi]`: bisection in one dimension, global tensor-product
/// cubature in more. A zero-dimensional box evaluates the integrand once.
pub fn integrate_box(
    lo: &[f64],
    hi: &[f64],
    m: usize,
    g: &Integrand<'_>,
    cfg: &QuadratureConfig,
) -> Result<Estimate, QuadratureError> {
    assert_eq!(lo.len(), hi.len(), "box bounds must have equal length");
    let rule = gauss_legendre(cfg.order);
    let ctx = Ctx {
        lo,
        hi,
        m,
        g,
        rule: &rule,
        cfg,
    };
    let (value, error) = if lo.len() >= 2 && lo.iter().zip(hi).all(|(a, b)| a < b) {
        cubature(lo, hi, m, g, &rule, cfg)?
    } else {
        ctx.inner(&mut Vec::with_capacity(lo.len()), cfg.abs_tol, cfg.rel_tol)?
    };
    let tolerance = cfg.abs_tol.max(cfg.rel_tol * max_abs(&value));
    if error > tolerance {
        return Err(QuadratureError::ToleranceNotReached {
            estimate: error,
            tolerance,
        });
    }
    Ok(Estimate { value, error })
}

/// Collapsed-coordinate map from the unit cube onto the standard simplex
/// `{s ≥ 0, Σ s ≤ 1}`; returns the Jacobian.
pub fn duffy(u: &[f64], s: &mut [f64]) -> f64 {
    let mut rest = 1.0;
    let mut jac = 1.0;
    for (i, ui) in u.iter().enumerate() {
        s[i] = ui * rest;
        jac *= rest;
        rest *= 1.0 - ui;
    }
    jac
}

/// `scale · ∫_S g` over the simplex with the given vertices, where the
/// simplex is parametrized as `p_0 + Σ s_i (p_i - p_0)` over the standard
/// simplex in `s` and `∫` is Lebesgue measure in `s`.
pub fn integrate_simplex(
    vertices: &[Vec<f64>],
    scale: f64,
    m: usize,
    g: &Integrand<'_>,
    cfg: &QuadratureConfig,
) -> Result<Estimate, QuadratureError> {
    let k = vertices.len() - 1;
    let n = vertices[0].len();
    let p0 = &vertices[0];
    let edges: Vec<Vec<f64>> = vertices[1..]
        .iter()
        .map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect();
    let mapped = move |u: &[f64], out: &mut [f64]| -> Result<(), FunctionError> {
        let mut s = vec![0.0; k];
        let jac = duffy(u, &mut s);
        if jac == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return Ok(());
        }
        let mut x = p0.clone();
        for (si, e) in s.iter().zip(&edges) {
            for c in 0..n {
                x[c] += si * e[c];
            }
        }
        g(&x, out)?;
        for o in out.iter_mut() {
            *o *= jac * scale;
        }
        Ok(())
    };
    let unit = vec![1.0; k];
    let cfg = QuadratureConfig {
        abs_tol: cfg.abs_tol / scale.abs().max(1.0),
        ..*cfg
    };
    let mut est = integrate_box(&vec![0.0; k], &unit, m, &mapped, &cfg)?;
    est.error *= scale.abs().max(1.0);
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_integrals() {
        let cfg = QuadratureConfig::default();
        let g = |x: &[f64], out: &mut [f64]| {
            out[0] = x[0] * x[1];
            out[1] = (x[0] + x[1]).exp();
            Ok(())
        };
        let e = integrate_box(&[0.0, 0.0], &[1.0, 2.0], 2, &g, &cfg).unwrap();
        assert!((e.value[0] - 1.0).abs() < 1e-13);
        let exact = (1f64.exp() - 1.0) * (2f64.exp() - 1.0);
        assert!((e.value[1] - exact).abs() < 1e-10);
    }

    #[test]
    fn zero_dimensional_box_evaluates() {
        let g = |_: &[f64], out: &mut [f64]| {
            out[0] = 3.5;
            Ok(())
        };
        let e = integrate_box(&[], &[], 1, &g, &QuadratureConfig::default()).unwrap();
        assert_eq!(e.value, vec![3.5]);
    }

    #[test]
    fn simplex_volume_and_moment() {
        let cfg = QuadratureConfig::default();
        let tet = vec![
            vec![0.0; 3],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let g = |x: &[f64], out: &mut [f64]| {
            out[0] = 1.0;
            out[1] = x[0] * x[1] * x[2];
            Ok(())
        };
        let e = integrate_simplex(&tet, 1.0, 2, &g, &cfg).unwrap();
        assert!((e.value[0] - 1.0 / 6.0).abs() < 1e-14);
        assert!((e.value[1] - 1.0 / 720.0).abs() < 1e-15);
    }

    #[test]
    fn unreachable_tolerance_is_reported() {
        let cfg = QuadratureConfig {
            max_subdivisions: 1,
            order: 2,
            ..QuadratureConfig::default()
        };
        let g = |x: &[f64], out: &mut [f64]| {
            out[0] = (40.0 * x[0]).sin();
            Ok(())
        };
        let r = integrate_box(&[0.0], &[3.0], 1, &g, &cfg);
        assert!(matches!(
            r,
            Err(QuadratureError::ToleranceNotReached { .. })
        ));
    }
}
