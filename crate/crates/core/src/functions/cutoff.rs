use super::{Dual, FunctionError, Jet, SmoothFunction};
use crate::geometry::DelzantPolytope;

fn flat_exp(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// The `exp(-1/t)`-based smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = flat_exp(t);
        a / (a + flat_exp(1.0 - t))
    }
}

/// Box-shaped cutoff: 1 where `|x_k - c_k| ≤ r_in` for every `k`, 0 where
/// some `|x_k - c_k| ≥ r_out`, smooth in between.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpCutoff {
    center: Vec<f64>,
    r_in: f64,
    r_out: f64,
}

impl BumpCutoff {
    /// # Panics
    ///
    /// Panics unless `0 < r_in < r_out`.
    pub fn new(center: Vec<f64>, r_in: f64, r_out: f64) -> Self {
        assert!(
            0.0 < r_in && r_in < r_out,
            "cutoff radii must satisfy 0 < r_in < r_out"
        );
        BumpCutoff {
            center,
            r_in,
            r_out,
        }
    }

    /// Cutoff equal to 1 on the 1.1× dilation of the polytope about its
    /// vertex centroid, with outer radius 1.5× the inner one.
    pub fn around_polytope(p: &DelzantPolytope) -> Self {
        let verts = p.vertices_f64();
        let n = p.dim();
        let center: Vec<f64> = (0..n)
            .map(|k| verts.iter().map(|v| v[k]).sum::<f64>() / verts.len() as f64)
            .collect();
        let reach = verts
            .iter()
            .flat_map(|v| v.iter().zip(&center).map(|(a, c)| (a - c).abs()))
            .fold(0.0, f64::max);
        let r_in = 1.1 * reach.max(0.5);
        BumpCutoff::new(center, r_in, 1.5 * r_in)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radii(&self) -> (f64, f64) {
        (self.r_in, self.r_out)
    }

    /// Closed box outside of which the cutoff vanishes.
    pub fn support(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.center.iter().map(|c| c - self.r_out).collect(),
            self.center.iter().map(|c| c + self.r_out).collect(),
        )
    }
}

impl SmoothFunction for BumpCutoff {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn eval(&self, x: &[f64]) -> Result<f64, FunctionError> {
        let width = self.r_out - self.r_in;
        Ok(x.iter()
            .zip(&self.center)
            .map(|(xi, c)| smooth_step((self.r_out - (xi - c).abs()) / width))
            .product())
    }

    fn eval_jet(&self, x: &[Jet]) -> Result<Jet, FunctionError> {
        let width = self.r_out - self.r_in;
        let mut acc = x[0].constant_like(1.0);
        for (xi, c) in x.iter().zip(&self.center) {
            let d = xi.add_const(-c);
            // |d| is smooth wherever the step is not locally constant
            let abs = if d.value() < 0.0 { d.neg() } else { d };
            let t = abs.neg().add_const(self.r_out).scale(1.0 / width);
            acc = acc.mul(&t.smooth_step());
        }
        Ok(acc)
    }

    fn eval_dual(&self, x: &[Dual]) -> Result<Dual, FunctionError> {
        let width = self.r_out - self.r_in;
        let mut acc = Dual::constant(1.0);
        for (xi, c) in x.iter().zip(&self.center) {
            let d = xi.add_const(-c);
            let abs = if d.v < 0.0 { d.neg() } else { d };
            let t = abs.neg().add_const(self.r_out).scale(1.0 / width);
            acc = acc.mul(t.smooth_step());
            if acc == Dual::constant(0.0) {
                break;
            }
        }
        Ok(acc)
    }

    fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        Some(self.support())
    }

    fn describe(&self) -> String {
        format!(
            "cutoff(center={:?}, r_in={}, r_out={})",
            self.center, self.r_in, self.r_out
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::dirderiv;

    #[test]
    fn step_values() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        assert!((smooth_step(0.3) + smooth_step(0.7) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cutoff_regions() {
        let b = BumpCutoff::new(vec![0.0, 0.0], 1.0, 2.0);
        assert_eq!(b.eval(&[0.9, -0.9]).unwrap(), 1.0);
        assert_eq!(b.eval(&[2.0, 0.0]).unwrap(), 0.0);
        let mid = b.eval(&[1.5, 0.0]).unwrap();
        assert!(mid > 0.0 && mid < 1.0);
        // flat inside the inner box: all derivatives vanish
        let d = dirderiv(&b, &[0.2, 0.3], &[vec![1.0, 0.5], vec![1.0, 0.5]]).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn polytope_cutoff_covers_polytope() {
        let t = DelzantPolytope::unit_triangle();
        let b = BumpCutoff::around_polytope(&t);
        for v in t.vertices_f64() {
            assert_eq!(b.eval(&v).unwrap(), 1.0);
        }
    }
}
