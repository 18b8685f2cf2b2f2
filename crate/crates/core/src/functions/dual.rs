//! First-order forward-mode numbers `v + d ε` with `ε² = 0`.
//!
//! A [`Dual`] carries a value and one directional derivative. It follows the
//! same domain rules as [`super::Jet`] truncated at order one.

use super::FunctionError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn new(v: f64, d: f64) -> Dual {
        Dual { v, d }
    }

    pub fn constant(v: f64) -> Dual {
        Dual { v, d: 0.0 }
    }

    pub fn is_finite(self) -> bool {
        self.v.is_finite() && self.d.is_finite()
    }

    pub fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }

    pub fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }

    pub fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }

    pub fn scale(self, k: f64) -> Dual {
        Dual::new(self.v * k, self.d * k)
    }

    pub fn add_const(self, k: f64) -> Dual {
        Dual::new(self.v + k, self.d)
    }

    pub fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }

    /// `φ(v) + φ'(v) d ε`; the derivative is not formed when `d = 0`.
    fn chain(self, value: f64, slope: impl FnOnce() -> f64) -> Dual {
        if self.d == 0.0 {
            Dual::constant(value)
        } else {
            Dual::new(value, slope() * self.d)
        }
    }

    pub fn recip(self) -> Result<Dual, FunctionError> {
        if self.v == 0.0 || !self.v.is_finite() {
            return Err(FunctionError::Domain("division by zero".into()));
        }
        let inv = 1.0 / self.v;
        Ok(self.chain(inv, || -inv * inv))
    }

    pub fn div(self, o: Dual) -> Result<Dual, FunctionError> {
        Ok(self.mul(o.recip()?))
    }

    pub fn exp(self) -> Dual {
        let e = self.v.exp();
        self.chain(e, || e)
    }

    pub fn ln(self) -> Result<Dual, FunctionError> {
        if self.v <= 0.0 || !self.v.is_finite() {
            return Err(FunctionError::Domain(format!(
                "log of non-positive value {}",
                self.v
            )));
        }
        Ok(self.chain(self.v.ln(), || 1.0 / self.v))
    }

    pub fn sin(self) -> Dual {
        let (s, c) = self.v.sin_cos();
        self.chain(s, || c)
    }

    pub fn cos(self) -> Dual {
        let (s, c) = self.v.sin_cos();
        self.chain(c, || -s)
    }

    pub fn sqrt(self) -> Result<Dual, FunctionError> {
        let a = self.v;
        if a < 0.0 || (a == 0.0 && self.d != 0.0) || !a.is_finite() {
            return Err(FunctionError::Domain(format!("sqrt is not smooth at {a}")));
        }
        let root = a.sqrt();
        Ok(self.chain(root, || 0.5 / root))
    }

    pub fn powi(self, n: i32) -> Result<Dual, FunctionError> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        if n == 0 {
            return Ok(Dual::constant(1.0));
        }
        let p = self.v.powi(n - 1);
        Ok(self.chain(p * self.v, || n as f64 * p))
    }

    /// `exp(-1/t)` for `t > 0`, zero for `t ≤ 1e-3` as in the jet version.
    pub fn flat_exp(self) -> Dual {
        let t = self.v;
        if t <= 1e-3 {
            return Dual::constant(0.0);
        }
        let e = (-1.0 / t).exp();
        self.chain(e, || e / (t * t))
    }

    /// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`, `C^∞` in between.
    pub fn smooth_step(self) -> Dual {
        let t = self.v;
        if t <= 0.0 {
            return Dual::constant(0.0);
        }
        if t >= 1.0 {
            return Dual::constant(1.0);
        }
        let a = self.flat_exp();
        let b = self.neg().add_const(1.0).flat_exp();
        a.div(a.add(b))
            .expect("denominator of the smooth step is positive")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::Jet;
    use proptest::prelude::*;

    fn jet_of(x: f64, d: f64) -> Jet {
        Jet::seed(&[x], &[vec![d]], &[1]).remove(0)
    }

    fn agree(a: Dual, j: &Jet) -> bool {
        let close = |p: f64, q: f64| (p - q).abs() <= 1e-13 * (1.0 + p.abs().max(q.abs()));
        close(a.v, j.value()) && close(a.d, j.coeff(&[1]))
    }

    proptest! {
        #[test]
        fn unary_functions_match_jets(x in 0.05f64..3.0, d in -2.0f64..2.0) {
            let (a, j) = (Dual::new(x, d), jet_of(x, d));
            prop_assert!(agree(a.exp(), &j.exp()));
            prop_assert!(agree(a.sin(), &j.sin()));
            prop_assert!(agree(a.cos(), &j.cos()));
            prop_assert!(agree(a.ln().unwrap(), &j.ln().unwrap()));
            prop_assert!(agree(a.sqrt().unwrap(), &j.sqrt().unwrap()));
            prop_assert!(agree(a.recip().unwrap(), &j.recip().unwrap()));
            prop_assert!(agree(a.powi(3).unwrap(), &j.powi(3).unwrap()));
            prop_assert!(agree(a.powi(-2).unwrap(), &j.powi(-2).unwrap()));
            let s = a.scale(0.3);
            prop_assert!(agree(s.smooth_step(), &j.scale(0.3).smooth_step()));
        }
    }

    #[test]
    fn domain_errors_match_jets() {
        assert!(Dual::new(0.0, 1.0).sqrt().is_err());
        assert_eq!(Dual::new(0.0, 0.0).sqrt().unwrap(), Dual::constant(0.0));
        assert!(Dual::new(-1.0, 0.0).ln().is_err());
        assert!(Dual::new(0.0, 2.0).recip().is_err());
        assert_eq!(Dual::new(0.0, 2.0).powi(0).unwrap(), Dual::constant(1.0));
    }
}
