use std::sync::{Arc, RwLock};

use num_traits::{One, Zero};

use super::{factorial, MultiIndex, Rational};

/// Coefficients `b_0..=b_K` of the Todd function
/// `τ(s) = s / (1 - e^{-s}) = Σ b_k s^k / k!`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToddCoefficients {
    b: Vec<Rational>,
}

impl ToddCoefficients {
    /// Highest index available.
    pub fn order(&self) -> usize {
        self.b.len() - 1
    }

    pub fn get(&self, k: usize) -> &Rational {
        &self.b[k]
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.b
    }

    /// Taylor coefficients `b_k / k!` of `τ`.
    pub fn series(&self) -> Vec<Rational> {
        self.b
            .iter()
            .enumerate()
            .map(|(k, b)| b / Rational::from_integer(factorial(k)))
            .collect()
    }
}

/// Computes `b_0..=b_K` by exact power-series division of `s` by `1 - e^{-s}`.
///
/// Writing `(1 - e^{-s}) / s = Σ d_k s^k` with `d_k = (-1)^k / (k+1)!`, the
/// reciprocal series `t` satisfies `t_0 = 1` and `t_k = -Σ_{j=1..k} d_j t_{k-j}`.
pub fn todd_coefficients(order: usize) -> ToddCoefficients {
    let d: Vec<Rational> = (0..=order)
        .map(|k| {
            let sign = if k % 2 == 0 { 1 } else { -1 };
            Rational::new(sign.into(), factorial(k + 1))
        })
        .collect();
    let mut t: Vec<Rational> = Vec::with_capacity(order + 1);
    t.push(Rational::one());
    for k in 1..=order {
        let mut acc = Rational::zero();
        for j in 1..=k {
            acc -= &d[j] * &t[k - j];
        }
        t.push(acc);
    }
    let b = t
        .into_iter()
        .enumerate()
        .map(|(k, tk)| tk * Rational::from_integer(factorial(k)))
        .collect();
    ToddCoefficients { b }
}

static SHARED: RwLock<Option<Arc<ToddCoefficients>>> = RwLock::new(None);

/// Cached table holding at least `b_0..=b_order`.
///
/// The table only ever grows; readers receive an immutable shared handle.
pub fn shared_todd(order: usize) -> Arc<ToddCoefficients> {
    if let Some(t) = SHARED.read().expect("todd cache poisoned").as_ref() {
        if t.order() >= order {
            return Arc::clone(t);
        }
    }
    let mut guard = SHARED.write().expect("todd cache poisoned");
    match guard.as_ref() {
        Some(t) if t.order() >= order => Arc::clone(t),
        _ => {
            let table = Arc::new(todd_coefficients(order.max(32)));
            *guard = Some(Arc::clone(&table));
            table
        }
    }
}

/// Bernoulli number in the positive convention `B_p = (-1)^{p-1} b_{2p}`,
/// so `B_1 = 1/6`, `B_2 = 1/30`, `B_3 = 1/42`.
///
/// # Panics
///
/// Panics if `p == 0`.
pub fn bernoulli(p: usize) -> Rational {
    assert!(p >= 1, "bernoulli index starts at 1");
    let b = shared_todd(2 * p).get(2 * p).clone();
    if p % 2 == 1 {
        b
    } else {
        -b
    }
}

/// `λ_α = (1/α!) Π b_{α_i}`.
pub fn lambda_alpha(alpha: &MultiIndex) -> Rational {
    let table = shared_todd(alpha.max_entry());
    let mut acc = Rational::one();
    for &a in alpha.entries() {
        let b = table.get(a as usize);
        if b.is_zero() {
            return Rational::zero();
        }
        acc = acc * b / Rational::from_integer(factorial(a as usize));
    }
    acc
}
