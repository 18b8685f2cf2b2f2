use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use super::AnalysisError;
use crate::exact::{to_f64, Rational};
use crate::functions::{Polynomial, SmoothFunction};
use crate::geometry::{DelzantPolytope, RegularWedge};

/// Default cap on the number of enumerated lattice points.
pub const DEFAULT_POINT_BUDGET: u64 = 1_000_000_000;

/// Region summed over. A wedge is intersected with a closed box, normally
/// the support box of the summand.
#[derive(Debug, Clone)]
pub enum SumRegion<'a> {
    Polytope(&'a DelzantPolytope),
    Wedge {
        wedge: &'a RegularWedge,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

impl<'a> SumRegion<'a> {
    /// The wedge cut down to the support box of `f`.
    pub fn wedge_for(
        wedge: &'a RegularWedge,
        f: &dyn SmoothFunction,
    ) -> Result<Self, AnalysisError> {
        let (lo, hi) = f.support_box().ok_or_else(|| {
            AnalysisError::InvalidInput(
                "summing over a wedge needs a function with a support box".into(),
            )
        })?;
        Ok(SumRegion::Wedge { wedge, lo, hi })
    }

    pub fn dim(&self) -> usize {
        match self {
            SumRegion::Polytope(p) => p.dim(),
            SumRegion::Wedge { wedge, .. } => wedge.dim(),
        }
    }
}

impl<'a> From<&'a DelzantPolytope> for SumRegion<'a> {
    fn from(p: &'a DelzantPolytope) -> Self {
        SumRegion::Polytope(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RiemannOptions {
    pub budget: u64,
    /// Enumerate slabs on the rayon pool. Results are identical either way.
    pub parallel: bool,
    /// Sum polynomials in exact rational arithmetic.
    pub exact: bool,
}

impl Default for RiemannOptions {
    fn default() -> Self {
        RiemannOptions {
            budget: DEFAULT_POINT_BUDGET,
            parallel: true,
            exact: true,
        }
    }
}

/// `(1/N^n) Σ_{k ∈ Z^n ∩ NΔ} f(k/N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannSum {
    pub n: u64,
    pub count: u64,
    pub value: f64,
    /// Present when the sum was carried out in rationals.
    pub exact: Option<Rational>,
}

impl RiemannSum {
    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }
}

/// Integer description `a·k ≤ b`, `lo ≤ k ≤ hi` of the lattice points of
/// the dilated region.
#[derive(Debug)]
struct LatticeSystem {
    rows: Vec<(Vec<i128>, i128)>,
    lo: Vec<i128>,
    hi: Vec<i128>,
}

fn big_to_i128(x: &BigInt) -> Result<i128, AnalysisError> {
    x.to_i128().ok_or_else(|| {
        AnalysisError::InvalidInput(format!("integer {x} is too large to enumerate"))
    })
}

fn scaled(c: &BigInt, n: u64) -> Result<i128, AnalysisError> {
    big_to_i128(c)?
        .checked_mul(n as i128)
        .ok_or_else(|| AnalysisError::InvalidInput("dilation overflows 128-bit integers".into()))
}

impl LatticeSystem {
    fn new(region: &SumRegion<'_>, n: u64) -> Result<Self, AnalysisError> {
        match region {
            SumRegion::Polytope(p) => {
                let rows = p
                    .facets()
                    .iter()
                    .map(|f| {
                        let a = f
                            .normal
                            .coords()
                            .iter()
                            .map(big_to_i128)
                            .collect::<Result<_, _>>()?;
                        Ok((a, scaled(&f.offset, n)?))
                    })
                    .collect::<Result<_, AnalysisError>>()?;
                let (blo, bhi) = p.bounding_box();
                Ok(LatticeSystem {
                    rows,
                    lo: blo.iter().map(|c| scaled(c, n)).collect::<Result<_, _>>()?,
                    hi: bhi.iter().map(|c| scaled(c, n)).collect::<Result<_, _>>()?,
                })
            }
            SumRegion::Wedge { wedge, lo, hi } => {
                let rows = wedge
                    .normals()
                    .iter()
                    .zip(wedge.offsets())
                    .map(|(u, c)| {
                        let a = u
                            .coords()
                            .iter()
                            .map(big_to_i128)
                            .collect::<Result<_, _>>()?;
                        Ok((a, scaled(c, n)?))
                    })
                    .collect::<Result<_, AnalysisError>>()?;
                let nf = n as f64;
                let to_int = |x: f64| -> Result<i128, AnalysisError> {
                    if x.is_finite() && x.abs() < 1e30 {
                        Ok(x as i128)
                    } else {
                        Err(AnalysisError::InvalidInput(format!(
                            "box bound {x} cannot be enumerated"
                        )))
                    }
                };
                Ok(LatticeSystem {
                    rows,
                    lo: lo
                        .iter()
                        .map(|&x| to_int((nf * x).ceil()))
                        .collect::<Result<_, _>>()?,
                    hi: hi
                        .iter()
                        .map(|&x| to_int((nf * x).floor()))
                        .collect::<Result<_, _>>()?,
                })
            }
        }
    }

    fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Exact range of coordinate `d` given the prefix `k[..d]`, using every
    /// inequality that involves no coordinate beyond `d`. For the last
    /// coordinate this is the exact fiber.
    fn range(&self, prefix: &[i128]) -> Option<(i128, i128)> {
        let d = prefix.len();
        let (mut lo, mut hi) = (self.lo[d], self.hi[d]);
        for (a, b) in &self.rows {
            if a[d + 1..].iter().any(|x| *x != 0) {
                continue;
            }
            let rest = b - a[..d].iter().zip(prefix).map(|(x, k)| x * k).sum::<i128>();
            let ad = a[d];
            if ad > 0 {
                hi = hi.min(Integer::div_floor(&rest, &ad));
            } else if ad < 0 {
                lo = lo.max(ceil_div(rest, ad));
            } else if rest < 0 {
                return None;
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// Calls `visit` with the prefix `k[..n-1]` and the exact range of the
    /// last coordinate, for every nonempty fiber in the slab `k_0 = k0`.
    fn for_each_fiber(&self, k0: i128, visit: &mut dyn FnMut(&[i128], i128, i128)) {
        if self.dim() == 1 {
            visit(&[], k0, k0);
        } else {
            self.walk(&mut vec![k0], visit);
        }
    }

    fn walk(&self, prefix: &mut Vec<i128>, visit: &mut dyn FnMut(&[i128], i128, i128)) {
        let Some((lo, hi)) = self.range(prefix) else {
            return;
        };
        if prefix.len() + 1 == self.dim() {
            visit(prefix, lo, hi);
            return;
        }
        for k in lo..=hi {
            prefix.push(k);
            self.walk(prefix, visit);
            prefix.pop();
        }
    }

    fn slabs(&self) -> Vec<i128> {
        self.range(&[])
            .map_or_else(Vec::new, |(lo, hi)| (lo..=hi).collect())
    }

    /// Number of fibers walked, bounded by the box over all but the last
    /// coordinate.
    fn outer_work(&self) -> f64 {
        let n = self.dim();
        (0..n.saturating_sub(1))
            .map(|d| (self.hi[d] - self.lo[d] + 1).max(0) as f64)
            .product()
    }

    fn box_count(&self) -> f64 {
        (0..self.dim())
            .map(|d| (self.hi[d] - self.lo[d] + 1).max(0) as f64)
            .product()
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -Integer::div_floor(&-a, &b)
}

fn map_slabs<T: Send>(
    slabs: &[i128],
    parallel: bool,
    f: impl Fn(i128) -> T + Sync + Send,
) -> Vec<T> {
    if parallel {
        slabs.par_iter().map(|&k| f(k)).collect()
    } else {
        slabs.iter().map(|&k| f(k)).collect()
    }
}

/// Fixed-shape pairwise reduction, so the result does not depend on how
/// the slabs were scheduled.
fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

#[derive(Default)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

fn prepare(
    region: &SumRegion<'_>,
    n: u64,
    opts: &RiemannOptions,
) -> Result<(LatticeSystem, Vec<i128>, u64), AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::InvalidInput("N must be at least 1".into()));
    }
    let sys = LatticeSystem::new(region, n)?;
    if sys.outer_work() > opts.budget as f64 {
        return Err(AnalysisError::TooManyPoints {
            estimate: sys.box_count(),
            budget: opts.budget,
        });
    }
    let slabs = sys.slabs();
    let counts = map_slabs(&slabs, opts.parallel, |k0| {
        let mut c: u128 = 0;
        sys.for_each_fiber(k0, &mut |_, lo, hi| c += (hi - lo + 1) as u128);
        c
    });
    let count: u128 = counts.iter().sum();
    if count > opts.budget as u128 {
        return Err(AnalysisError::TooManyPoints {
            estimate: count as f64,
            budget: opts.budget,
        });
    }
    Ok((sys, slabs, count as u64))
}

/// Number of lattice points `Z^n ∩ NΔ` (or of the wedge within its box).
pub fn lattice_count(
    region: &SumRegion<'_>,
    n: u64,
    opts: &RiemannOptions,
) -> Result<u64, AnalysisError> {
    Ok(prepare(region, n, opts)?.2)
}

/// Brute-force Riemann sum over the dilated region. Membership is decided
/// in integer arithmetic, so boundary points are never miscounted.
pub fn riemann_sum(
    region: &SumRegion<'_>,
    f: &dyn SmoothFunction,
    n: u64,
    opts: &RiemannOptions,
) -> Result<RiemannSum, AnalysisError> {
    if f.dim() != region.dim() {
        return Err(AnalysisError::InvalidInput(format!(
            "function of {} variables summed over a {}-dimensional region",
            f.dim(),
            region.dim()
        )));
    }
    let (sys, slabs, count) = prepare(region, n, opts)?;
    let dim = sys.dim();
    if opts.exact {
        if let Some(poly) = f.as_polynomial() {
            let total = exact_polynomial_sum(&sys, &slabs, &poly, n, opts.parallel);
            return Ok(RiemannSum {
                n,
                count,
                value: to_f64(&total),
                exact: Some(total),
            });
        }
    }
    let nf = n as f64;
    let per_slab = map_slabs(&slabs, opts.parallel, |k0| -> Result<f64, AnalysisError> {
        let mut acc = Kahan::default();
        let mut x = vec![0.0; dim];
        let mut err = None;
        sys.for_each_fiber(k0, &mut |prefix, lo, hi| {
            if err.is_some() {
                return;
            }
            if dim > 1 {
                x[0] = k0 as f64 / nf;
                for (xi, k) in x[1..dim - 1].iter_mut().zip(&prefix[1..]) {
                    *xi = *k as f64 / nf;
                }
            }
            for k in lo..=hi {
                x[dim - 1] = k as f64 / nf;
                match f.eval(&x) {
                    Ok(v) => acc.add(v),
                    Err(e) => {
                        err = Some(e);
                        return;
                    }
                }
            }
        });
        match err {
            Some(e) => Err(e.into()),
            None => Ok(acc.sum),
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let value = pairwise_sum(&per_slab) / nf.powi(dim as i32);
    Ok(RiemannSum {
        n,
        count,
        value,
        exact: None,
    })
}

/// Per-monomial integer power sums `Σ k^e`, kept in `i128` until a
/// checked operation overflows.
enum MomentAcc {
    Small(Vec<i128>),
    Big(Vec<BigInt>),
}

fn monomial_i128(k: &[i128], e: &[u32]) -> Option<i128> {
    let mut acc: i128 = 1;
    for (ki, &ei) in k.iter().zip(e) {
        acc = acc.checked_mul(ki.checked_pow(ei)?)?;
    }
    Some(acc)
}

fn monomial_big(k: &[i128], e: &[u32]) -> BigInt {
    k.iter().zip(e).fold(BigInt::from(1), |acc, (ki, &ei)| {
        acc * num_traits::pow(BigInt::from(*ki), ei as usize)
    })
}

fn slab_moments(sys: &LatticeSystem, k0: i128, exps: &[Vec<u32>]) -> Vec<BigInt> {
    let dim = sys.dim();
    let mut points: Vec<Vec<i128>> = Vec::new();
    let mut acc = MomentAcc::Small(vec![0; exps.len()]);
    let mut k = vec![0i128; dim];
    sys.for_each_fiber(k0, &mut |prefix, lo, hi| {
        k[0] = k0;
        if dim > 1 {
            k[1..dim - 1].copy_from_slice(&prefix[1..]);
        }
        for last in lo..=hi {
            k[dim - 1] = last;
            if let MomentAcc::Small(sums) = &mut acc {
                let mut ok = true;
                for (s, e) in sums.iter_mut().zip(exps) {
                    match monomial_i128(&k, e).and_then(|m| s.checked_add(m)) {
                        Some(v) => *s = v,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    points.push(k.clone());
                    continue;
                }
                // overflow: recompute this slab in big integers
                acc = MomentAcc::Big(
                    exps.iter()
                        .map(|e| points.iter().map(|p| monomial_big(p, e)).sum())
                        .collect(),
                );
            }
            if let MomentAcc::Big(sums) = &mut acc {
                for (s, e) in sums.iter_mut().zip(exps) {
                    *s += monomial_big(&k, e);
                }
            }
        }
    });
    match acc {
        MomentAcc::Small(v) => v.into_iter().map(BigInt::from).collect(),
        MomentAcc::Big(v) => v,
    }
}

fn exact_polynomial_sum(
    sys: &LatticeSystem,
    slabs: &[i128],
    poly: &Polynomial,
    n: u64,
    parallel: bool,
) -> Rational {
    let terms: Vec<(Vec<u32>, Rational)> =
        poly.terms().map(|(e, c)| (e.clone(), c.clone())).collect();
    if terms.is_empty() {
        return Rational::zero();
    }
    let exps: Vec<Vec<u32>> = terms.iter().map(|(e, _)| e.clone()).collect();
    let per_slab = map_slabs(slabs, parallel, |k0| slab_moments(sys, k0, &exps));
    let mut moments = vec![BigInt::zero(); exps.len()];
    for slab in per_slab {
        for (m, s) in moments.iter_mut().zip(slab) {
            *m += s;
        }
    }
    let nb = BigInt::from(n);
    let dim = sys.dim();
    terms
        .iter()
        .zip(moments)
        .map(|((e, c), m)| {
            let deg: u32 = e.iter().sum();
            let den = num_traits::pow(nb.clone(), deg as usize + dim);
            c * Rational::new(m, den)
        })
        .fold(Rational::zero(), |a, b| a + b)
}
