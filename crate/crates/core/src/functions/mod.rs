//! Smooth functions with evaluation and directional-derivative contractions
//! `D^q f(x) · (w_1, …, w_q)`.
//!
//! Derivatives are computed by pushing truncated Taylor jets through the
//! function along the curve `t ↦ x + Σ_j t_j w_j`. Polynomials additionally
//! offer exact rational derivatives.

mod cutoff;
mod dual;
mod expression;
mod jet;
mod polynomial;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::UnimodularMap;

pub use cutoff::{smooth_step, BumpCutoff};
pub use dual::Dual;
pub use expression::{parse_expression, Expression, Func, Node};
pub use jet::Jet;
pub use polynomial::Polynomial;

/// Highest derivative order accepted by [`dirderiv`].
pub const MAX_JET_ORDER: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("arity error at offset {offset}: {message}")]
    Arity { offset: usize, message: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("derivative order {order} exceeds the maximum {max}")]
    OrderTooLarge { order: usize, max: usize },
}

/// A `C^∞` function on `R^n`.
pub trait SmoothFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> Result<f64, FunctionError>;

    /// Propagates Taylor jets of the inputs through the function.
    fn eval_jet(&self, x: &[Jet]) -> Result<Jet, FunctionError>;

    /// Value and first derivative for inputs `x_i + w_i ε`. The default goes
    /// through order-one jets.
    fn eval_dual(&self, x: &[Dual]) -> Result<Dual, FunctionError> {
        let v: Vec<f64> = x.iter().map(|a| a.v).collect();
        let w: Vec<f64> = x.iter().map(|a| a.d).collect();
        let j = self.eval_jet(&Jet::seed(&v, &[w], &[1]))?;
        Ok(Dual::new(j.value(), j.coeff(&[1])))
    }

    /// Exact polynomial form, when the function is a polynomial.
    fn as_polynomial(&self) -> Option<Polynomial> {
        None
    }

    /// Closed box outside of which the function vanishes identically.
    fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }

    fn describe(&self) -> String;
}

impl<T: SmoothFunction + ?Sized> SmoothFunction for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64]) -> Result<f64, FunctionError> {
        (**self).eval(x)
    }
    fn eval_jet(&self, x: &[Jet]) -> Result<Jet, FunctionError> {
        (**self).eval_jet(x)
    }
    fn eval_dual(&self, x: &[Dual]) -> Result<Dual, FunctionError> {
        (**self).eval_dual(x)
    }
    fn as_polynomial(&self) -> Option<Polynomial> {
        (**self).as_polynomial()
    }
    fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        (**self).support_box()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Groups equal directions: returns distinct directions and multiplicities.
fn group_directions(dirs: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut distinct: Vec<Vec<f64>> = Vec::new();
    let mut mult: Vec<usize> = Vec::new();
    for d in dirs {
        match distinct.iter().position(|e| e == d) {
            Some(i) => mult[i] += 1,
            None => {
                distinct.push(d.clone());
                mult.push(1);
            }
        }
    }
    (distinct, mult)
}

/// Jet of `f` at `x` along the given distinct directions, truncated at
/// `caps[j]` in direction `j`. Any contraction with direction `j` repeated
/// `a_j ≤ caps[j]` times is then `jet.derivative(a)`.
pub fn taylor_jet(
    f: &dyn SmoothFunction,
    x: &[f64],
    dirs: &[Vec<f64>],
    caps: &[usize],
) -> Result<Jet, FunctionError> {
    let order: usize = caps.iter().sum();
    if order > MAX_JET_ORDER * dirs.len().max(1) {
        return Err(FunctionError::OrderTooLarge {
            order,
            max: MAX_JET_ORDER,
        });
    }
    if dirs.is_empty() {
        let seeds = Jet::seed(x, &[vec![0.0; x.len()]], &[0]);
        return f.eval_jet(&seeds);
    }
    f.eval_jet(&Jet::seed(x, dirs, caps))
}

/// `D^q f(x) · (w_1, …, w_q)` with `q = dirs.len() ≤ 16`.
pub fn dirderiv(
    f: &dyn SmoothFunction,
    x: &[f64],
    dirs: &[Vec<f64>],
) -> Result<f64, FunctionError> {
    if dirs.len() > MAX_JET_ORDER {
        return Err(FunctionError::OrderTooLarge {
            order: dirs.len(),
            max: MAX_JET_ORDER,
        });
    }
    if dirs.is_empty() {
        return f.eval(x);
    }
    if let [w] = dirs {
        let seeds: Vec<Dual> = x.iter().zip(w).map(|(&a, &b)| Dual::new(a, b)).collect();
        return Ok(f.eval_dual(&seeds)?.d);
    }
    let (distinct, mult) = group_directions(dirs);
    let jet = f.eval_jet(&Jet::seed(x, &distinct, &mult))?;
    Ok(jet.derivative(&mult))
}

/// Nested central differences with Richardson extrapolation approximating
/// [`dirderiv`]. Intended as an independent check.
///
/// The base step for order `q` is `h_q (1 + ‖x‖) / max ‖w_i‖` with `h_q`
/// growing with `q` (a fixed tiny step would drown order-4 differences in
/// roundoff); three halvings are combined by Richardson extrapolation.
///
/// # Panics
///
/// Panics if more than four directions are given.
pub fn finite_difference_check(f: &dyn SmoothFunction, x: &[f64], dirs: &[Vec<f64>]) -> f64 {
    let q = dirs.len();
    assert!(
        q <= 4,
        "finite-difference oracle supports at most four directions"
    );
    let value = |p: &[f64]| f.eval(p).unwrap_or(f64::NAN);
    if q == 0 {
        return value(x);
    }
    let xnorm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let wmax = dirs
        .iter()
        .map(|w| w.iter().map(|a| a * a).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
        .max(1e-300);
    let base = [0.0, 2e-2, 4e-2, 6e-2, 8e-2][q];
    let h0 = base * (1.0 + xnorm) / wmax;
    let stencil = |h: f64| -> f64 {
        let mut acc = 0.0;
        let mut p = vec![0.0; x.len()];
        for mask in 0..(1u32 << q) {
            let mut sign = 1.0;
            p.copy_from_slice(x);
            for (i, w) in dirs.iter().enumerate() {
                let s = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                sign *= s;
                for (pk, wk) in p.iter_mut().zip(w) {
                    *pk += s * h * wk;
                }
            }
            acc += sign * value(&p);
        }
        acc / (2.0 * h).powi(q as i32)
    };
    // Richardson tableau from several starting steps; keep the one whose
    // last two extrapolants agree best
    let levels: usize = 4;
    let extrapolate = |h: f64| -> (f64, f64) {
        let mut table: Vec<f64> = (0..levels)
            .map(|k| stencil(h / 2f64.powi(k as i32)))
            .collect();
        let mut prev = table[levels - 1];
        // errors are even in h, so level m eliminates h^{2m}
        for m in 1..levels {
            let factor = 4f64.powi(m as i32);
            prev = table[levels - 1];
            for k in (m..levels).rev() {
                table[k] = (factor * table[k] - table[k - 1]) / (factor - 1.0);
            }
        }
        (table[levels - 1], (table[levels - 1] - prev).abs())
    };
    [1.0, 0.25, 0.0625]
        .iter()
        .map(|s| extrapolate(h0 * s))
        .filter(|(v, e)| v.is_finite() && e.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map_or(f64::NAN, |(v, _)| v)
}

/// Pointwise product `f · g`.
#[derive(Debug, Clone)]
pub struct Product {
    pub f: Arc<dyn SmoothFunction>,
    pub g: Arc<dyn SmoothFunction>,
}

impl Product {
    pub fn new(f: Arc<dyn SmoothFunction>, g: Arc<dyn SmoothFunction>) -> Self {
        Product { f, g }
    }
}

impl SmoothFunction for Product {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn eval(&self, x: &[f64]) -> Result<f64, FunctionError> {
        let b = self.g.eval(x)?;
        if b == 0.0 {
            return Ok(0.0);
        }
        Ok(self.f.eval(x)? * b)
    }

    fn eval_jet(&self, x: &[Jet]) -> Result<Jet, FunctionError> {
        let b = self.g.eval_jet(x)?;
        Ok(self.f.eval_jet(x)?.mul(&b))
    }

    fn eval_dual(&self, x: &[Dual]) -> Result<Dual, FunctionError> {
        let b = self.g.eval_dual(x)?;
        if b == Dual::constant(0.0) {
            return Ok(b);
        }
        Ok(self.f.eval_dual(x)?.mul(b))
    }

    fn as_polynomial(&self) -> Option<Polynomial> {
        Some(self.f.as_polynomial()?.mul(&self.g.as_polynomial()?))
    }

    fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match (self.f.support_box(), self.g.support_box()) {
            (None, None) => None,
            (Some(b), None) | (None, Some(b)) => Some(b),
            (Some((l1, h1)), Some((l2, h2))) => Some((
                l1.iter().zip(&l2).map(|(a, b)| a.max(*b)).collect(),
                h1.iter().zip(&h2).map(|(a, b)| a.min(*b)).collect(),
            )),
        }
    }

    fn describe(&self) -> String {
        format!("({}) * ({})", self.f.describe(), self.g.describe())
    }
}

/// `g = f ∘ φ^{-1}` for a unimodular affine map `φ`.
#[derive(Debug, Clone)]
pub struct AffinePullback {
    pub f: Arc<dyn SmoothFunction>,
    pub map: UnimodularMap,
    inverse: Vec<Vec<f64>>,
    shift: Vec<f64>,
}

impl AffinePullback {
    pub fn new(f: Arc<dyn SmoothFunction>, map: UnimodularMap) -> Self {
        let big = |v: &num_bigint::BigInt| {
            crate::exact::to_f64(&crate::exact::Rational::from_integer(v.clone()))
        };
        let inverse = map
            .inverse_matrix()
            .iter()
            .map(|row| row.iter().map(big).collect())
            .collect();
        let shift = map.translation().iter().map(big).collect();
        AffinePullback {
            f,
            map,
            inverse,
            shift,
        }
    }
}

impl SmoothFunction for AffinePullback {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn eval(&self, y: &[f64]) -> Result<f64, FunctionError> {
        let x: Vec<f64> = self
            .inverse
            .iter()
            .map(|row| {
                row.iter()
                    .zip(y)
                    .zip(&self.shift)
                    .map(|((a, yj), t)| a * (yj - t))
                    .sum()
            })
            .collect();
        self.f.eval(&x)
    }

    fn eval_jet(&self, y: &[Jet]) -> Result<Jet, FunctionError> {
        let x: Vec<Jet> = self
            .inverse
            .iter()
            .map(|row| {
                let mut acc = y[0].constant_like(0.0);
                for ((a, yj), t) in row.iter().zip(y).zip(&self.shift) {
                    if *a != 0.0 {
                        acc = acc.add(&yj.add_const(-t).scale(*a));
                    }
                }
                acc
            })
            .collect();
        self.f.eval_jet(&x)
    }

    fn eval_dual(&self, y: &[Dual]) -> Result<Dual, FunctionError> {
        let x: Vec<Dual> = self
            .inverse
            .iter()
            .map(|row| {
                row.iter()
                    .zip(y)
                    .zip(&self.shift)
                    .fold(Dual::constant(0.0), |acc, ((a, yj), t)| {
                        acc.add(yj.add_const(-t).scale(*a))
                    })
            })
            .collect();
        self.f.eval_dual(&x)
    }

    fn as_polynomial(&self) -> Option<Polynomial> {
        let p = self.f.as_polynomial()?;
        let n = p.nvars();
        let inv = self.map.inverse_matrix();
        let t = self.map.translation();
        let matrix: Vec<Vec<crate::exact::Rational>> = inv
            .iter()
            .map(|row| {
                row.iter()
                    .cloned()
                    .map(crate::exact::Rational::from_integer)
                    .collect()
            })
            .collect();
        let offset: Vec<crate::exact::Rational> = (0..n)
            .map(|i| {
                -(0..n)
                    .map(|j| crate::exact::Rational::from_integer(&inv[i][j] * &t[j]))
                    .sum::<crate::exact::Rational>()
            })
            .collect();
        Some(p.compose_affine(&offset, &matrix, n))
    }

    fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let (lo, hi) = self.f.support_box()?;
        let n = lo.len();
        let mut out_lo = vec![f64::INFINITY; n];
        let mut out_hi = vec![f64::NEG_INFINITY; n];
        for mask in 0..(1usize << n) {
            let corner: Vec<f64> = (0..n)
                .map(|k| if mask >> k & 1 == 1 { hi[k] } else { lo[k] })
                .collect();
            let y = self.map.map_point_f64(&corner);
            for k in 0..n {
                out_lo[k] = out_lo[k].min(y[k]);
                out_hi[k] = out_hi[k].max(y[k]);
            }
        }
        Some((out_lo, out_hi))
    }

    fn describe(&self) -> String {
        format!("pullback({})", self.f.describe())
    }
}
