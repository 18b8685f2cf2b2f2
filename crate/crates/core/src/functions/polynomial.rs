use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use super::{FunctionError, Jet, SmoothFunction};
use crate::exact::{factorial, format_rational, to_f64, Rational};

/// Polynomial in `x1..xn` with exact rational coefficients.
#[derive(Clone)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
    float_terms: Vec<(Vec<u32>, f64)>,
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.terms == other.terms
    }
}

impl Eq for Polynomial {}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial({self})")
    }
}

impl Polynomial {
    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Vec<u32>, Rational)>) -> Self {
        let mut map: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        for (e, c) in terms {
            assert_eq!(e.len(), n, "exponent length must equal the dimension");
            *map.entry(e).or_insert_with(Rational::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        let float_terms = map.iter().map(|(e, c)| (e.clone(), to_f64(c))).collect();
        Polynomial {
            n,
            terms: map,
            float_terms,
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::from_terms(n, [])
    }

    pub fn constant(n: usize, c: Rational) -> Self {
        Self::from_terms(n, [(vec![0; n], c)])
    }

    /// The coordinate function `x_{i+1}` (0-based index `i`).
    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Self::from_terms(n, [(e, Rational::one())])
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, e: &[u32]) -> Rational {
        self.terms.get(e).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&a| a as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        Self::from_terms(
            self.n,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(e, c)| (e.clone(), c.clone())),
        )
    }

    pub fn scale(&self, k: &Rational) -> Polynomial {
        Self::from_terms(self.n, self.terms.iter().map(|(e, c)| (e.clone(), c * k)))
    }

    pub fn neg(&self) -> Polynomial {
        self.scale(&-Rational::one())
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.push((e, ca * cb));
            }
        }
        Self::from_terms(self.n, out)
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Self::constant(self.n, Rational::one());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn eval_rational(&self, x: &[Rational]) -> Rational {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut v = c.clone();
                for (xi, &a) in x.iter().zip(e) {
                    for _ in 0..a {
                        v *= xi;
                    }
                }
                v
            })
            .sum()
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.float_terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(x)
                    .fold(*c, |acc, (&a, &xi)| acc * xi.powi(a as i32))
            })
            .sum()
    }

    /// `∂f/∂x_i`.
    pub fn partial(&self, i: usize) -> Polynomial {
        Self::from_terms(
            self.n,
            self.terms.iter().filter(|(e, _)| e[i] > 0).map(|(e, c)| {
                let mut e2 = e.clone();
                e2[i] -= 1;
                (e2, c * Rational::from_integer(e[i].into()))
            }),
        )
    }

    /// `Df · d = Σ d_i ∂f/∂x_i`.
    pub fn directional(&self, d: &[Rational]) -> Polynomial {
        let mut acc = Self::zero(self.n);
        for (i, di) in d.iter().enumerate() {
            if !di.is_zero() {
                acc = acc.add(&self.partial(i).scale(di));
            }
        }
        acc
    }

    /// `D^q f · (d_1, …, d_q)` as a polynomial in `x`.
    pub fn contraction(&self, dirs: &[Vec<Rational>]) -> Polynomial {
        dirs.iter().fold(self.clone(), |p, d| p.directional(d))
    }

    /// Exact value of `D^q f(x) · (d_1, …, d_q)`.
    pub fn dirderiv_exact(&self, x: &[Rational], dirs: &[Vec<Rational>]) -> Rational {
        self.contraction(dirs).eval_rational(x)
    }

    /// Substitutes `x = offset + M y` where `matrix` has one row per `x`
    /// coordinate and `m` columns; the result is a polynomial in `y`.
    pub fn compose_affine(
        &self,
        offset: &[Rational],
        matrix: &[Vec<Rational>],
        m: usize,
    ) -> Polynomial {
        let lin: Vec<Polynomial> = (0..self.n)
            .map(|i| {
                let mut terms = vec![(vec![0; m], offset[i].clone())];
                for (j, a) in matrix[i].iter().enumerate() {
                    let mut e = vec![0; m];
                    e[j] = 1;
                    terms.push((e, a.clone()));
                }
                Polynomial::from_terms(m, terms)
            })
            .collect();
        let mut powers: Vec<Vec<Polynomial>> = lin
            .iter()
            .map(|l| vec![Polynomial::constant(m, Rational::one()), l.clone()])
            .collect();
        let mut acc = Polynomial::zero(m);
        for (e, c) in &self.terms {
            let mut term = Polynomial::constant(m, c.clone());
            for (i, &a) in e.iter().enumerate() {
                while powers[i].len() <= a as usize {
                    let next = powers[i].last().expect("nonempty").mul(&lin[i]);
                    powers[i].push(next);
                }
                term = term.mul(&powers[i][a as usize]);
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// `∫ y^a dy` over the standard simplex `{y ≥ 0, Σ y ≤ 1}` summed over
    /// all terms: `Σ c_a Π a_i! / (|a| + m)!`.
    pub fn integrate_standard_simplex(&self) -> Rational {
        let m = self.n;
        self.terms
            .iter()
            .map(|(e, c)| {
                let num = e.iter().fold(num_bigint::BigInt::one(), |acc, &a| {
                    acc * factorial(a as usize)
                });
                let total: usize = e.iter().map(|&a| a as usize).sum::<usize>() + m;
                c * Rational::new(num, factorial(total))
            })
            .sum()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", format_rational(c))?;
            for (i, &a) in e.iter().enumerate() {
                match a {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{a}", i + 1)?,
                }
            }
        }
        Ok(())
    }
}

impl SmoothFunction for Polynomial {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64]) -> Result<f64, FunctionError> {
        Ok(self.eval_f64(x))
    }

    fn eval_jet(&self, x: &[Jet]) -> Result<Jet, FunctionError> {
        let mut acc = x[0].constant_like(0.0);
        let mut powers: Vec<Vec<Jet>> = x
            .iter()
            .map(|xi| vec![xi.constant_like(1.0), xi.clone()])
            .collect();
        for (e, c) in &self.float_terms {
            let mut term = x[0].constant_like(*c);
            for (i, &a) in e.iter().enumerate() {
                while powers[i].len() <= a as usize {
                    let next = powers[i].last().expect("nonempty").mul(&x[i]);
                    powers[i].push(next);
                }
                if a > 0 {
                    term = term.mul(&powers[i][a as usize]);
                }
            }
            acc = acc.add(&term);
        }
        Ok(acc)
    }

    fn as_polynomial(&self) -> Option<Polynomial> {
        Some(self.clone())
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};

    fn xy() -> (Polynomial, Polynomial) {
        (Polynomial::var(2, 0), Polynomial::var(2, 1))
    }

    #[test]
    fn arithmetic_and_derivatives() {
        let (x, y) = xy();
        let p = x.pow(2).mul(&y).add(&y.scale(&int(3)));
        assert_eq!(p.degree(), 3);
        assert_eq!(p.eval_rational(&[int(2), int(5)]), int(35));
        assert_eq!(p.partial(0), x.mul(&y).scale(&int(2)));
        let d = p.dirderiv_exact(
            &[int(1), int(1)],
            &[vec![int(1), int(0)], vec![int(0), int(1)]],
        );
        assert_eq!(d, int(2));
    }

    #[test]
    fn simplex_moments() {
        let (x, _) = xy();
        assert_eq!(
            Polynomial::constant(2, int(1)).integrate_standard_simplex(),
            rat(1, 2)
        );
        assert_eq!(x.integrate_standard_simplex(), rat(1, 6));
        assert_eq!(x.pow(2).integrate_standard_simplex(), rat(1, 12));
    }

    #[test]
    fn affine_substitution() {
        let (x, y) = xy();
        let p = x.mul(&y);
        // x = 1 + 2s, y = s
        let q = p.compose_affine(&[int(1), int(0)], &[vec![int(2)], vec![int(1)]], 1);
        assert_eq!(
            q,
            Polynomial::from_terms(1, [(vec![1], int(1)), (vec![2], int(2))])
        );
    }
}
