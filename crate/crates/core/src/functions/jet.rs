//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] holds the coefficients of `g(t) = f(x + Σ_j t_j w_j)` in the
//! monomials `t^a` with `a_j ≤ cap_j` (a box truncation, which is an ideal,
//! so ring operations are exact on the retained coefficients).

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use smallvec::{smallvec, SmallVec};

use super::FunctionError;

#[derive(Debug)]
struct JetShape {
    caps: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
    /// Total degree of every stored monomial.
    degree: Vec<usize>,
    /// `(i, j, k)` with `mono(i) + mono(j) = mono(k)`, `i, j > 0`.
    pairs: Vec<(u32, u32, u32)>,
}

impl JetShape {
    fn build(caps: &[usize]) -> JetShape {
        let mut strides = Vec::with_capacity(caps.len());
        let mut len = 1;
        for &c in caps {
            strides.push(len);
            len *= c + 1;
        }
        let mono = |idx: usize| -> Vec<usize> {
            caps.iter()
                .zip(&strides)
                .map(|(&c, &s)| (idx / s) % (c + 1))
                .collect()
        };
        let monos: Vec<Vec<usize>> = (0..len).map(mono).collect();
        let degree = monos.iter().map(|m| m.iter().sum()).collect();
        let mut pairs = Vec::new();
        for i in 1..len {
            for j in 1..len {
                let fits = monos[i]
                    .iter()
                    .zip(&monos[j])
                    .zip(caps)
                    .all(|((a, b), c)| a + b <= *c);
                if fits {
                    pairs.push((i as u32, j as u32, (i + j) as u32));
                }
            }
        }
        JetShape {
            caps: caps.to_vec(),
            strides,
            len,
            degree,
            pairs,
        }
    }

    fn max_degree(&self) -> usize {
        self.caps.iter().sum()
    }
}

thread_local! {
    static SHAPES: RefCell<HashMap<Vec<usize>, Rc<JetShape>>> = RefCell::new(HashMap::new());
}

fn shape_for(caps: &[usize]) -> Rc<JetShape> {
    SHAPES.with(|cache| {
        let mut cache = cache.borrow_mut();
        if let Some(s) = cache.get(caps) {
            return Rc::clone(s);
        }
        let s = Rc::new(JetShape::build(caps));
        cache.insert(caps.to_vec(), Rc::clone(&s));
        s
    })
}

/// Coefficient storage; the common low-order shapes fit inline.
type Coeffs = SmallVec<[f64; 8]>;

/// Truncated Taylor expansion in one or more nilpotent variables.
#[derive(Debug, Clone)]
pub struct Jet {
    shape: Rc<JetShape>,
    c: Coeffs,
}

impl Jet {
    pub fn constant_with_caps(caps: &[usize], value: f64) -> Jet {
        let shape = shape_for(caps);
        let mut c = smallvec![0.0; shape.len];
        c[0] = value;
        Jet { shape, c }
    }

    /// Constant jet with the same truncation as `self`.
    pub fn constant_like(&self, value: f64) -> Jet {
        let mut c = smallvec![0.0; self.shape.len];
        c[0] = value;
        Jet {
            shape: Rc::clone(&self.shape),
            c,
        }
    }

    /// Input jets `x_i + Σ_j t_j w_j[i]` for a point and a list of distinct
    /// directions with degree caps.
    pub fn seed(x: &[f64], dirs: &[Vec<f64>], caps: &[usize]) -> Vec<Jet> {
        assert_eq!(dirs.len(), caps.len());
        let shape = shape_for(caps);
        x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                let mut c = smallvec![0.0; shape.len];
                c[0] = xi;
                for (j, w) in dirs.iter().enumerate() {
                    if caps[j] > 0 {
                        c[shape.strides[j]] = w[i];
                    }
                }
                Jet {
                    shape: Rc::clone(&shape),
                    c,
                }
            })
            .collect()
    }

    pub fn caps(&self) -> &[usize] {
        &self.shape.caps
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Coefficient of `t^a`.
    pub fn coeff(&self, a: &[usize]) -> f64 {
        let idx: usize = a.iter().zip(&self.shape.strides).map(|(x, s)| x * s).sum();
        self.c[idx]
    }

    /// `∂^a g(0) = a! · coeff(a)`, i.e. the derivative contraction with
    /// direction `j` repeated `a_j` times.
    pub fn derivative(&self, a: &[usize]) -> f64 {
        let fact: f64 = a
            .iter()
            .map(|&k| (1..=k).map(|i| i as f64).product::<f64>())
            .product();
        self.coeff(a) * fact
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }

    fn same(&self, other: &Jet) {
        debug_assert!(Rc::ptr_eq(&self.shape, &other.shape) || self.shape.caps == other.shape.caps);
    }

    pub fn add(&self, other: &Jet) -> Jet {
        self.same(other);
        Jet {
            shape: Rc::clone(&self.shape),
            c: self.c.iter().zip(&other.c).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.same(other);
        Jet {
            shape: Rc::clone(&self.shape),
            c: self.c.iter().zip(&other.c).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn neg(&self) -> Jet {
        self.scale(-1.0)
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet {
            shape: Rc::clone(&self.shape),
            c: self.c.iter().map(|a| a * k).collect(),
        }
    }

    pub fn add_const(&self, k: f64) -> Jet {
        let mut out = self.clone();
        out.c[0] += k;
        out
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        self.same(other);
        let a0 = self.c[0];
        let b0 = other.c[0];
        let mut c: Coeffs = self
            .c
            .iter()
            .zip(&other.c)
            .map(|(a, b)| a * b0 + a0 * b)
            .collect();
        c[0] = a0 * b0;
        for &(i, j, k) in &self.shape.pairs {
            c[k as usize] += self.c[i as usize] * other.c[j as usize];
        }
        Jet {
            shape: Rc::clone(&self.shape),
            c,
        }
    }

    fn is_constant(&self) -> bool {
        self.c[1..].iter().all(|&x| x == 0.0)
    }

    /// `Σ_k coeffs[k] h^k` with `h = self - self(0)`; `coeffs[k]` must be
    /// `φ^{(k)}(a0)/k!` for the unary function `φ` being applied.
    fn compose(&self, coeffs: &[f64]) -> Jet {
        if self.is_constant() {
            return self.constant_like(coeffs[0]);
        }
        let mut h = self.clone();
        h.c[0] = 0.0;
        let top = coeffs.len() - 1;
        let mut acc = self.constant_like(coeffs[top]);
        for k in (0..top).rev() {
            acc = acc.mul(&h).add_const(coeffs[k]);
        }
        acc
    }

    fn order_needed(&self) -> usize {
        if self.is_constant() {
            0
        } else {
            let max = self.shape.max_degree();
            let min_deg = self
                .c
                .iter()
                .enumerate()
                .skip(1)
                .filter(|(_, &x)| x != 0.0)
                .map(|(i, _)| self.shape.degree[i])
                .min()
                .unwrap_or(1);
            max / min_deg.max(1)
        }
    }

    pub fn exp(&self) -> Jet {
        let k = self.order_needed();
        let e = self.c[0].exp();
        let mut coeffs: Coeffs = SmallVec::with_capacity(k + 1);
        let mut f = 1.0;
        for i in 0..=k {
            if i > 0 {
                f *= i as f64;
            }
            coeffs.push(e / f);
        }
        self.compose(&coeffs)
    }

    pub fn ln(&self) -> Result<Jet, FunctionError> {
        let a = self.c[0];
        if a <= 0.0 || !a.is_finite() {
            return Err(FunctionError::Domain(format!(
                "log of non-positive value {a}"
            )));
        }
        let k = self.order_needed();
        let mut coeffs: Coeffs = smallvec![a.ln()];
        let mut p = 1.0;
        for i in 1..=k {
            p *= a;
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            coeffs.push(sign / (i as f64 * p));
        }
        Ok(self.compose(&coeffs))
    }

    fn trig(&self, phase: usize) -> Jet {
        let k = self.order_needed();
        let (s, c) = self.c[0].sin_cos();
        let cycle = [s, c, -s, -c];
        let mut coeffs: Coeffs = SmallVec::with_capacity(k + 1);
        let mut f = 1.0;
        for i in 0..=k {
            if i > 0 {
                f *= i as f64;
            }
            coeffs.push(cycle[(i + phase) % 4] / f);
        }
        self.compose(&coeffs)
    }

    pub fn sin(&self) -> Jet {
        self.trig(0)
    }

    pub fn cos(&self) -> Jet {
        self.trig(1)
    }

    pub fn sqrt(&self) -> Result<Jet, FunctionError> {
        let a = self.c[0];
        let k = self.order_needed();
        if a < 0.0 || (a == 0.0 && k > 0) || !a.is_finite() {
            return Err(FunctionError::Domain(format!("sqrt is not smooth at {a}")));
        }
        let mut coeffs: Coeffs = SmallVec::with_capacity(k + 1);
        let root = a.sqrt();
        // binom(1/2, i) a^{1/2 - i}
        let mut binom = 1.0;
        let mut p = root;
        for i in 0..=k {
            if i > 0 {
                binom *= (0.5 - (i as f64 - 1.0)) / i as f64;
                p /= a;
            }
            coeffs.push(binom * p);
        }
        Ok(self.compose(&coeffs))
    }

    pub fn recip(&self) -> Result<Jet, FunctionError> {
        let a = self.c[0];
        if a == 0.0 || !a.is_finite() {
            return Err(FunctionError::Domain("division by zero".into()));
        }
        let k = self.order_needed();
        let mut coeffs: Coeffs = SmallVec::with_capacity(k + 1);
        let inv = 1.0 / a;
        let mut p = inv;
        for i in 0..=k {
            coeffs.push(if i % 2 == 0 { p } else { -p });
            p *= inv;
        }
        Ok(self.compose(&coeffs))
    }

    pub fn div(&self, other: &Jet) -> Result<Jet, FunctionError> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn powi(&self, n: i32) -> Result<Jet, FunctionError> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let mut base = self.clone();
        let mut acc = self.constant_like(1.0);
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(acc)
    }

    /// `exp(-1/t)` for `t > 0`, identically zero for `t ≤ 0`.
    ///
    /// Below `t = 1e-3` the value and all retained derivatives underflow to
    /// zero, so the zero jet is returned directly.
    pub fn flat_exp(&self) -> Jet {
        let t = self.c[0];
        if t <= 1e-3 {
            return self.constant_like(0.0);
        }
        self.recip().expect("t > 0").neg().exp()
    }

    /// Smooth step `S(t)`: 0 for `t ≤ 0`, 1 for `t ≥ 1`, `C^∞` in between.
    pub fn smooth_step(&self) -> Jet {
        let t = self.c[0];
        if t <= 0.0 {
            return self.constant_like(0.0);
        }
        if t >= 1.0 {
            return self.constant_like(1.0);
        }
        let a = self.flat_exp();
        let b = self.neg().add_const(1.0).flat_exp();
        a.div(&a.add(&b))
            .expect("denominator of the smooth step is positive")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly_jet(x: f64, k: usize) -> Jet {
        Jet::seed(&[x], &[vec![1.0]], &[k]).remove(0)
    }

    #[test]
    fn univariate_series() {
        let t = poly_jet(0.0, 6);
        let e = t.exp();
        for k in 0..=6 {
            assert!((e.derivative(&[k]) - 1.0).abs() < 1e-14);
        }
        let s = t.sin();
        let expected = [0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0];
        for (k, v) in expected.iter().enumerate() {
            assert!((s.derivative(&[k]) - v).abs() < 1e-13);
        }
        let r = poly_jet(2.0, 4).recip().unwrap();
        // d^k/dx^k 1/x = (-1)^k k! / x^{k+1}
        for k in 0..=4usize {
            let fact: f64 = (1..=k).map(|i| i as f64).product();
            let exact = if k % 2 == 0 { 1.0 } else { -1.0 } * fact / 2f64.powi(k as i32 + 1);
            assert!((r.derivative(&[k]) - exact).abs() < 1e-13);
        }
        let q = poly_jet(4.0, 3).sqrt().unwrap();
        assert!((q.derivative(&[1]) - 0.25).abs() < 1e-15);
        assert!((q.derivative(&[2]) + 1.0 / 32.0).abs() < 1e-15);
        let l = poly_jet(1.0, 3).ln().unwrap();
        assert!((l.derivative(&[3]) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn mixed_partials() {
        // f(x, y) = x^2 y^3 at (1, 2): ∂x∂y^2 f = 2x · 6y = 24
        let v = Jet::seed(&[1.0, 2.0], &[vec![1.0, 0.0], vec![0.0, 1.0]], &[1, 2]);
        let f = v[0].powi(2).unwrap().mul(&v[1].powi(3).unwrap());
        assert!((f.derivative(&[1, 2]) - 24.0).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(poly_jet(0.0, 2).ln().is_err());
        assert!(poly_jet(0.0, 2).sqrt().is_err());
        assert!(poly_jet(0.0, 0).sqrt().is_ok());
        assert!(poly_jet(0.0, 1).recip().is_err());
    }

    #[test]
    fn smooth_step_limits() {
        assert_eq!(poly_jet(-0.5, 4).smooth_step().coeff(&[2]), 0.0);
        assert_eq!(poly_jet(1.5, 4).smooth_step().value(), 1.0);
        let mid = poly_jet(0.5, 3).smooth_step();
        assert!((mid.value() - 0.5).abs() < 1e-15);
        assert!(mid.derivative(&[1]) > 0.0);
        // symmetry S(t) + S(1-t) = 1 forces even derivatives to vanish at 1/2
        assert!(mid.derivative(&[2]).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn ring_axioms_exact_on_polynomials(a in proptest::collection::vec(-4i32..5, 6),
                                            b in proptest::collection::vec(-4i32..5, 6),
                                            c in proptest::collection::vec(-4i32..5, 6)) {
            // integer-coefficient jets keep exact f64 arithmetic
            let make = |v: &[i32]| {
                let mut j = Jet::constant_with_caps(&[2, 1], 0.0);
                for (k, x) in v.iter().enumerate() {
                    j.c[k] = *x as f64;
                }
                j
            };
            let (x, y, z) = (make(&a), make(&b), make(&c));
            prop_assert_eq!(x.mul(&y).c, y.mul(&x).c);
            prop_assert_eq!(x.mul(&y).mul(&z).c, x.mul(&y.mul(&z)).c);
            prop_assert_eq!(x.mul(&y.add(&z)).c, x.mul(&y).add(&x.mul(&z)).c);
        }
    }
}
