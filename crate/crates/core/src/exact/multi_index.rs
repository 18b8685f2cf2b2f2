use std::fmt;

use num_bigint::BigInt;

use super::factorial;

/// Multi-index `α ∈ ℕ^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|α| = Σ α_i`.
    pub fn order(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    pub fn max_entry(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0) as usize
    }

    /// `r(α)`: indicator of the positive entries.
    pub fn support_indicator(&self) -> MultiIndex {
        MultiIndex(self.0.iter().map(|&a| u32::from(a > 0)).collect())
    }

    /// Indices `i` with `α_i > 0`, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0)
            .map(|(i, _)| i)
            .collect()
    }

    /// `ν(α)`: number of positive entries.
    pub fn nu(&self) -> usize {
        self.0.iter().filter(|&&a| a > 0).count()
    }

    /// `α - r(α)`.
    pub fn reduced(&self) -> MultiIndex {
        MultiIndex(self.0.iter().map(|&a| a.saturating_sub(1)).collect())
    }

    /// `α! = Π α_i!`.
    pub fn factorial(&self) -> BigInt {
        self.0.iter().map(|&a| factorial(a as usize)).product()
    }

    /// All `α ∈ ℕ^n` with `|α| = q`, in lexicographically decreasing order.
    pub fn all_of_order(n: usize, q: usize) -> Vec<MultiIndex> {
        fn rec(n: usize, q: usize, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == n {
                prefix.push(q as u32);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for a in (0..=q).rev() {
                prefix.push(a as u32);
                rec(n, q - a, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if n == 0 {
            if q == 0 {
                out.push(MultiIndex(Vec::new()));
            }
            return out;
        }
        rec(n, q, &mut Vec::with_capacity(n), &mut out);
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::lambda_alpha;
    use proptest::prelude::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn combinatorics() {
        let a = MultiIndex::new(vec![2, 0, 3]);
        assert_eq!(a.order(), 5);
        assert_eq!(a.nu(), 2);
        assert_eq!(a.support_indicator(), MultiIndex::new(vec![1, 0, 1]));
        assert_eq!(a.reduced(), MultiIndex::new(vec![1, 0, 2]));
        assert_eq!(a.support(), vec![0, 2]);
        assert_eq!(a.factorial(), BigInt::from(12));
        assert_eq!(a.to_string(), "(2,0,3)");
    }

    #[test]
    fn enumeration_counts() {
        for n in 1..=4 {
            for q in 0..=6 {
                let all = MultiIndex::all_of_order(n, q);
                assert_eq!(all.len(), binomial(q + n - 1, n - 1));
                assert!(all.iter().all(|a| a.order() == q && a.len() == n));
            }
        }
    }

    proptest! {
        #[test]
        fn lambda_is_permutation_symmetric(a in proptest::collection::vec(0u32..7, 1..5),
                                           seed in any::<u64>()) {
            let mut b = a.clone();
            // deterministic shuffle driven by the seed
            let len = b.len();
            let mut s = seed;
            for i in (1..len).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                b.swap(i, (s >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(lambda_alpha(&MultiIndex::new(a)), lambda_alpha(&MultiIndex::new(b)));
        }

        #[test]
        fn nu_is_support_size(a in proptest::collection::vec(0u32..5, 0..6)) {
            let m = MultiIndex::new(a);
            prop_assert_eq!(m.nu(), m.support_indicator().order());
        }
    }
}
