use std::sync::Arc;

use num_traits::One;

use super::{check_order, evaluate_expansion, ExpansionError, ExpansionResult, Method, Term};
use crate::exact::{lambda_alpha, to_f64, MultiIndex, Rational};
use crate::functions::{smooth_step, FunctionError, Jet, SmoothFunction};
use crate::geometry::DelzantPolytope;
use crate::quadrature::QuadratureConfig;

/// Shape of the one-dimensional transition `ψ` used by the partition.
/// Both vanish for `t ≤ 1/2` and equal 1 for `t ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BumpProfile {
    /// `ψ(t) = S(2t - 1)`.
    #[default]
    Standard,
    /// `ψ(t) = S(3t - 2)`, a steeper transition on `[2/3, 1]`.
    Steep,
}

impl BumpProfile {
    fn affine(self) -> (f64, f64) {
        match self {
            BumpProfile::Standard => (2.0, -1.0),
            BumpProfile::Steep => (3.0, -2.0),
        }
    }

    pub fn eval(self, t: f64) -> f64 {
        let (a, b) = self.affine();
        smooth_step(a * t + b)
    }

    fn eval_jet(self, t: &Jet) -> Jet {
        let (a, b) = self.affine();
        t.scale(a).add_const(b).smooth_step()
    }
}

/// Smooth weights `ρ_i = φ_i / Σ_j φ_j`, one per vertex, with
/// `φ_i(x) = Π_{k ∉ inc(i)} ψ((c_k - ⟨u_k, x⟩)/δ)`.
///
/// `ρ_i` vanishes within lattice distance `δ/2` of every facet not through
/// vertex `i`, and equals 1 near the vertex itself.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    polytope: DelzantPolytope,
    delta: f64,
    profile: BumpProfile,
    facets: Vec<(Vec<f64>, f64)>,
    nonincident: Vec<Vec<usize>>,
}

/// Threshold below which `Σφ` counts as degenerate.
const MIN_PARTITION_SUM: f64 = 1e-3;

impl PartitionOfUnity {
    /// # Panics
    ///
    /// Panics unless `delta > 0`.
    pub fn new(p: &DelzantPolytope, delta: f64, profile: BumpProfile) -> Self {
        assert!(delta > 0.0, "partition margin must be positive");
        let nonincident = (0..p.vertices().len())
            .map(|i| {
                let inc = p.incidence(i);
                (0..p.facets().len()).filter(|k| !inc.contains(k)).collect()
            })
            .collect();
        PartitionOfUnity {
            polytope: p.clone(),
            delta,
            profile,
            facets: p.facets_f64(),
            nonincident,
        }
    }

    /// Default margin: a quarter of the smallest lattice distance from a
    /// vertex to a facet not through it.
    pub fn default_delta(p: &DelzantPolytope) -> f64 {
        to_f64(&Rational::from_integer(p.min_nonincident_gap())) / 4.0
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn profile(&self) -> BumpProfile {
        self.profile
    }

    pub fn polytope(&self) -> &DelzantPolytope {
        &self.polytope
    }

    pub fn phi(&self, i: usize, x: &[f64]) -> f64 {
        self.nonincident[i]
            .iter()
            .map(|&k| {
                let (u, c) = &self.facets[k];
                let s: f64 = u.iter().zip(x).map(|(a, b)| a * b).sum();
                self.profile.eval((c - s) / self.delta)
            })
            .product()
    }

    pub fn weights(&self, x: &[f64]) -> Vec<f64> {
        let phis: Vec<f64> = (0..self.nonincident.len())
            .map(|i| self.phi(i, x))
            .collect();
        let total: f64 = phis.iter().sum();
        phis.iter().map(|p| p / total).collect()
    }

    fn phi_jet(&self, i: usize, x: &[Jet]) -> Jet {
        let mut acc = x[0].constant_like(1.0);
        for &k in &self.nonincident[i] {
            let (u, c) = &self.facets[k];
            let mut s = x[0].constant_like(0.0);
            for (a, xj) in u.iter().zip(x) {
                if *a != 0.0 {
                    s = s.add(&xj.scale(*a));
                }
            }
            let t = s.neg().add_const(*c).scale(1.0 / self.delta);
            acc = acc.mul(&self.profile.eval_jet(&t));
            if acc.value() == 0.0 {
                // inside the flat zero region every derivative vanishes too
                return x[0].constant_like(0.0);
            }
        }
        acc
    }

    /// Jet of `ρ_i` given seeded coordinate jets.
    pub fn weight_jet(&self, i: usize, x: &[Jet]) -> Result<Jet, FunctionError> {
        let own = self.phi_jet(i, x);
        if own.value() == 0.0 {
            return Ok(own);
        }
        let mut total = own.clone();
        for j in 0..self.nonincident.len() {
            if j != i {
                total = total.add(&self.phi_jet(j, x));
            }
        }
        own.div(&total)
    }

    /// `ρ_i · f` as a smooth function.
    pub fn weighted<'a>(&'a self, i: usize, f: &'a dyn SmoothFunction) -> WeightedFunction<'a> {
        WeightedFunction { pou: self, i, f }
    }

    /// Minimum of `Σφ` over a barycentric grid on every simplex of a
    /// triangulation of the polytope.
    pub fn min_sum_on_grid(&self, resolution: usize) -> f64 {
        let p = &self.polytope;
        let verts = p.vertices_f64();
        let n = p.dim();
        let mut min = f64::INFINITY;
        for s in p.triangulate(&[]) {
            for bary in barycentric_grid(s.len(), resolution) {
                let mut x = vec![0.0; n];
                for (lam, &v) in bary.iter().zip(&s) {
                    for c in 0..n {
                        x[c] += lam * verts[v][c];
                    }
                }
                let total: f64 = (0..self.nonincident.len()).map(|i| self.phi(i, &x)).sum();
                min = min.min(total);
            }
        }
        min
    }

    /// Fails with [`ExpansionError::PartitionFailure`] when `Σφ` is not
    /// bounded away from zero on the sample grid.
    pub fn check(&self) -> Result<f64, ExpansionError> {
        let min = self.min_sum_on_grid(8);
        if min < MIN_PARTITION_SUM {
            return Err(ExpansionError::PartitionFailure {
                min_sum: min,
                delta: self.delta,
            });
        }
        Ok(min)
    }
}

fn barycentric_grid(k: usize, r: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == k {
            cur.push(left);
            out.push(cur.iter().map(|&a| a as f64 / r as f64).collect());
            cur.pop();
            return;
        }
        for a in 0..=left {
            cur.push(a);
            rec(k, left - a, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, r, r, &mut Vec::new(), &mut out);
    out
}

/// `ρ_i · f`.
#[derive(Debug, Clone, Copy)]
pub struct WeightedFunction<'a> {
    pou: &'a PartitionOfUnity,
    i: usize,
    f: &'a dyn SmoothFunction,
}

impl SmoothFunction for WeightedFunction<'_> {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn eval(&self, x: &[f64]) -> Result<f64, FunctionError> {
        let own = self.pou.phi(self.i, x);
        if own == 0.0 {
            return Ok(0.0);
        }
        let total: f64 = (0..self.pou.nonincident.len())
            .map(|j| self.pou.phi(j, x))
            .sum();
        Ok(own / total * self.f.eval(x)?)
    }

    fn eval_jet(&self, x: &[Jet]) -> Result<Jet, FunctionError> {
        Ok(self.f.eval_jet(x)?.mul(&self.pou.weight_jet(self.i, x)?))
    }

    /// Box containing the support of `ρ_i f` inside the vertex wedge of `i`
    /// (outside that wedge `ρ_i` need not vanish).
    fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let (lo, hi) = self.pou.polytope.bounding_box();
        let pad = self.pou.delta;
        Some((
            lo.iter()
                .map(|v| to_f64(&Rational::from_integer(v.clone())) - pad)
                .collect(),
            hi.iter()
                .map(|v| to_f64(&Rational::from_integer(v.clone())) + pad)
                .collect(),
        ))
    }

    fn describe(&self) -> String {
        format!("rho_{} * ({})", self.i, self.f.describe())
    }
}

// `WeightedFunction` borrows, so wrap it for APIs that need ownership.
impl PartitionOfUnity {
    pub fn weighted_owned(self: &Arc<Self>, i: usize, f: Arc<dyn SmoothFunction>) -> OwnedWeighted {
        OwnedWeighted {
            pou: Arc::clone(self),
            i,
            f,
        }
    }
}

/// Owning variant of [`WeightedFunction`].
#[derive(Debug, Clone)]
pub struct OwnedWeighted {
    pou: Arc<PartitionOfUnity>,
    i: usize,
    f: Arc<dyn SmoothFunction>,
}

impl SmoothFunction for OwnedWeighted {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn eval(&self, x: &[f64]) -> Result<f64, FunctionError> {
        self.pou.weighted(self.i, &*self.f).eval(x)
    }

    fn eval_jet(&self, x: &[Jet]) -> Result<Jet, FunctionError> {
        self.pou.weighted(self.i, &*self.f).eval_jet(x)
    }

    fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.pou.weighted(self.i, &*self.f).support_box()
    }

    fn describe(&self) -> String {
        self.pou.weighted(self.i, &*self.f).describe()
    }
}

/// Options of the partition-of-unity path.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PouOptions {
    /// Margin `δ`; `None` selects [`PartitionOfUnity::default_delta`].
    pub delta: Option<f64>,
    pub profile: BumpProfile,
}

/// Terms of `Σ_i T_q(W_i, ρ_i f)` with every wedge-face integral rewritten
/// as an integral over the matching polytope face (the weight `ρ_i` vanishes
/// on the part of `W_i` outside the polytope). Order 0 uses `Σ_i ρ_i = 1`.
pub fn pou_terms(p: &DelzantPolytope, q: usize) -> Vec<Term> {
    let n = p.dim();
    let mut terms = vec![Term::new(0, vec![], Rational::one(), vec![])];
    for codim in 1..=n {
        for face in p.faces(codim) {
            for &i in &face.vertices {
                let inc = p.incidence(i);
                let edges = p.edge_directions(i);
                let positions: Vec<usize> = face
                    .active
                    .iter()
                    .map(|a| {
                        inc.iter()
                            .position(|b| b == a)
                            .expect("face facet through its vertex")
                    })
                    .collect();
                for order in codim..=q {
                    for extra in MultiIndex::all_of_order(codim, order - codim) {
                        let mut alpha = vec![0u32; n];
                        let mut dirs = Vec::new();
                        for (k, &pos) in positions.iter().enumerate() {
                            let e = extra.entries()[k];
                            alpha[pos] = e + 1;
                            // the dual vector v_pos is minus the edge leaving facet pos
                            dirs.extend(std::iter::repeat_n(-&edges[pos], e as usize));
                        }
                        let coefficient = lambda_alpha(&MultiIndex::new(alpha));
                        if num_traits::Zero::is_zero(&coefficient) {
                            continue;
                        }
                        let mut t = Term::new(order, face.active.clone(), coefficient, dirs);
                        t.weight = Some(i);
                        terms.push(t);
                    }
                }
            }
        }
    }
    terms
}

/// Partition-of-unity expansion of a Delzant polytope of any dimension.
pub fn polytope_pou_expansion(
    p: &DelzantPolytope,
    f: &dyn SmoothFunction,
    q: usize,
    opts: &PouOptions,
    cfg: &QuadratureConfig,
) -> Result<ExpansionResult, ExpansionError> {
    check_order(q)?;
    let delta = opts
        .delta
        .unwrap_or_else(|| PartitionOfUnity::default_delta(p));
    if delta.is_nan() || delta <= 0.0 {
        return Err(ExpansionError::InvalidInput(format!(
            "partition margin must be positive, got {delta}"
        )));
    }
    let pou = PartitionOfUnity::new(p, delta, opts.profile);
    pou.check()?;
    let terms = pou_terms(p, q);
    evaluate_expansion(p, &terms, f, q, Method::Polytope3Pou, Some(&pou), cfg)
}

/// [`polytope_pou_expansion`] restricted to 3-polytopes.
pub fn polytope3_expansion(
    p: &DelzantPolytope,
    f: &dyn SmoothFunction,
    q: usize,
    opts: &PouOptions,
    cfg: &QuadratureConfig,
) -> Result<ExpansionResult, ExpansionError> {
    if p.dim() != 3 {
        return Err(ExpansionError::UnsupportedDimension(p.dim()));
    }
    polytope_pou_expansion(p, f, q, opts, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{polygon_expansion, wedge_expansion};
    use crate::functions::parse_expression;

    #[test]
    fn weights_sum_to_one_and_respect_supports() {
        let p = DelzantPolytope::unit_simplex(3);
        let pou = PartitionOfUnity::new(
            &p,
            PartitionOfUnity::default_delta(&p),
            BumpProfile::Standard,
        );
        assert!(pou.check().is_ok());
        let x = [0.2, 0.3, 0.1];
        let w = pou.weights(&x);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // near the facet x1 = 0, vertices off that facet get no weight
        let near = [0.05, 0.4, 0.3];
        let w = pou.weights(&near);
        for (i, v) in p.vertices_f64().iter().enumerate() {
            if v[0] != 0.0 {
                assert_eq!(w[i], 0.0);
            }
        }
        for (i, v) in p.vertices_f64().iter().enumerate() {
            assert_eq!(pou.weights(v)[i], 1.0);
        }
    }

    #[test]
    fn large_margin_is_rejected() {
        let p = DelzantPolytope::unit_simplex(3);
        let opts = PouOptions {
            delta: Some(3.0),
            profile: BumpProfile::Standard,
        };
        let one = parse_expression("1", 3).unwrap();
        let r = polytope3_expansion(&p, &one, 1, &opts, &QuadratureConfig::default());
        assert!(matches!(r, Err(ExpansionError::PartitionFailure { .. })));
    }

    #[test]
    fn polygon_partition_path_matches_closed_form() {
        let t = DelzantPolytope::unit_triangle();
        let f = parse_expression("exp(x1 - x2/2)", 2).unwrap();
        let cfg = QuadratureConfig::new(1e-11, 1e-11, 20, 10);
        let closed = polygon_expansion(&t, &f, 3, &cfg).unwrap();
        let pou = polytope_pou_expansion(&t, &f, 3, &PouOptions::default(), &cfg).unwrap();
        for (a, b) in closed.values().iter().zip(pou.values()) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn batched_faces_match_vertex_wedge_sum() {
        let t =
            DelzantPolytope::from_vertices_i64(2, &[&[0, 0], &[2, 0], &[1, 1], &[0, 1]]).unwrap();
        let f: Arc<dyn SmoothFunction> = Arc::new(parse_expression("cos(x1) + x2", 2).unwrap());
        let cfg = QuadratureConfig::new(1e-11, 1e-11, 20, 10);
        let batched = polytope_pou_expansion(&t, &*f, 2, &PouOptions::default(), &cfg).unwrap();
        let pou = Arc::new(PartitionOfUnity::new(
            &t,
            PartitionOfUnity::default_delta(&t),
            BumpProfile::Standard,
        ));
        let mut sum = [0.0; 3];
        for i in 0..t.vertices().len() {
            let fi = pou.weighted_owned(i, Arc::clone(&f));
            let r = wedge_expansion(&t.vertex_wedge(i), &fi, 2, &cfg).unwrap();
            for (s, v) in sum.iter_mut().zip(r.values()) {
                *s += v;
            }
        }
        for (a, b) in batched.values().iter().zip(sum) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}
