use num_traits::{Signed, Zero};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{riemann_sum, AnalysisError, RiemannOptions, SumRegion};
use crate::expansion::{expand, wedge_expansion, Coefficient, ExpandOptions, ExpansionResult};
use crate::functions::SmoothFunction;

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub expand: ExpandOptions,
    pub riemann: RiemannOptions,
    /// Smallest `N` values left out of the slope fit.
    pub exclude_smallest: usize,
    /// Required ratio `max N / min N` of the requested list.
    pub min_span: f64,
    /// Two-sided confidence level of the slope interval.
    pub confidence: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            expand: ExpandOptions::default(),
            riemann: RiemannOptions::default(),
            exclude_smallest: 1,
            min_span: 10.0,
            confidence: 0.95,
        }
    }
}

/// One row `(N, S_N, P_N, R_N = |S_N - P_N|)`. Values are exact when both
/// the sum and the expansion are.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: u64,
    pub s: Coefficient,
    pub p: Coefficient,
    pub r: Coefficient,
}

impl ConvergenceRow {
    pub fn log10_n(&self) -> f64 {
        (self.n as f64).log10()
    }

    pub fn log10_r(&self) -> f64 {
        self.r.to_f64().log10()
    }
}

/// Least-squares line `log10 R = slope · log10 N + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Confidence interval of the slope; NaN with fewer than three points.
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub q: usize,
    pub rows: Vec<ConvergenceRow>,
    /// `None` when fewer than two rows have a nonzero remainder.
    pub fit: Option<SlopeFit>,
    pub expansion: ExpansionResult,
}

impl ConvergenceReport {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    /// True when every remainder is an exact zero.
    pub fn all_exact_zero(&self) -> bool {
        self.rows
            .iter()
            .all(|r| matches!(&r.r, Coefficient::Exact(x) if x.is_zero()))
    }
}

/// Fits `log10 y` against `log10 x`; pairs with `y = 0` are skipped.
pub fn fit_log_slope(points: &[(f64, f64)], confidence: f64) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    let m = pts.len();
    if m < 2 {
        return None;
    }
    let mf = m as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / mf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (ci_low, ci_high) = if m >= 3 {
        let rss: f64 = pts
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        let se = (rss / (mf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, mf - 2.0)
            .map(|d| d.inverse_cdf(0.5 + confidence / 2.0))
            .unwrap_or(f64::NAN);
        (slope - t * se, slope + t * se)
    } else {
        (f64::NAN, f64::NAN)
    };
    Some(SlopeFit {
        slope,
        intercept,
        ci_low,
        ci_high,
        points: m,
    })
}

fn region_expansion(
    region: &SumRegion<'_>,
    f: &dyn SmoothFunction,
    q: usize,
    cfg: &ConvergenceConfig,
) -> Result<ExpansionResult, AnalysisError> {
    Ok(match region {
        SumRegion::Polytope(p) => expand(p, f, q, &cfg.expand)?,
        SumRegion::Wedge { wedge, .. } => wedge_expansion(wedge, f, q, &cfg.expand.quadrature)?,
    })
}

/// Compares oracle sums `S_N` with truncated expansions
/// `P_N = Σ_{q ≤ Q} T_q N^{-q}` over `n_list` and fits the log-log slope of
/// the remainder. Asserts nothing about the slope.
pub fn convergence_report(
    region: &SumRegion<'_>,
    f: &dyn SmoothFunction,
    q: usize,
    n_list: &[u64],
    cfg: &ConvergenceConfig,
) -> Result<ConvergenceReport, AnalysisError> {
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 4 {
        return Err(AnalysisError::InvalidInput(format!(
            "need at least 4 distinct N values, got {}",
            ns.len()
        )));
    }
    if ns[0] == 0 {
        return Err(AnalysisError::InvalidInput("N must be at least 1".into()));
    }
    let span = *ns.last().unwrap() as f64 / ns[0] as f64;
    if span < cfg.min_span {
        return Err(AnalysisError::InvalidInput(format!(
            "N values span a factor of {span}, need at least {}",
            cfg.min_span
        )));
    }
    let expansion = region_expansion(region, f, q, cfg)?;
    let sums = ns
        .par_iter()
        .map(|&n| riemann_sum(region, f, n, &cfg.riemann))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<ConvergenceRow> = sums
        .into_iter()
        .map(|s| {
            let exact = s.exact.as_ref().zip(expansion.partial_sum_exact(s.n));
            match exact {
                Some((sx, px)) => ConvergenceRow {
                    n: s.n,
                    r: Coefficient::Exact((sx - &px).abs()),
                    s: Coefficient::Exact(sx.clone()),
                    p: Coefficient::Exact(px),
                },
                None => {
                    let p = expansion.partial_sum_f64(s.n);
                    ConvergenceRow {
                        n: s.n,
                        s: Coefficient::Approx(s.value),
                        p: Coefficient::Approx(p),
                        r: Coefficient::Approx((s.value - p).abs()),
                    }
                }
            }
        })
        .collect();
    let fit_points: Vec<(f64, f64)> = rows
        .iter()
        .skip(cfg.exclude_smallest)
        .map(|r| (r.n as f64, r.r.to_f64()))
        .collect();
    let fit = fit_log_slope(&fit_points, cfg.confidence);
    Ok(ConvergenceReport {
        q,
        rows,
        fit,
        expansion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::functions::{parse_expression, Polynomial};
    use crate::geometry::DelzantPolytope;

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0]
            .iter()
            .map(|&n: &f64| (n, 5.0 * n.powi(-3)))
            .collect();
        let fit = fit_log_slope(&pts, 0.95).unwrap();
        assert!((fit.slope + 3.0).abs() < 1e-12);
        assert!((fit.intercept - 5f64.log10()).abs() < 1e-12);
        assert!(fit.ci_high - fit.ci_low < 1e-9);
    }

    #[test]
    fn slope_interval_covers_noisy_fit() {
        let pts = [(10.0, 1e-3), (20.0, 1.3e-4), (40.0, 1.5e-5), (80.0, 2.1e-6)];
        let fit = fit_log_slope(&pts, 0.95).unwrap();
        assert!(fit.ci_low < fit.slope && fit.slope < fit.ci_high);
    }

    #[test]
    fn exact_triangle_has_zero_remainders() {
        let t = DelzantPolytope::unit_triangle();
        let f = Polynomial::var(2, 0);
        let r = convergence_report(
            &(&t).into(),
            &f,
            2,
            &[1, 2, 5, 10, 50],
            &ConvergenceConfig::default(),
        )
        .unwrap();
        assert!(r.all_exact_zero());
        assert!(r.fit.is_none());
        assert_eq!(r.rows[1].s, Coefficient::Exact(rat(1, 2)));
    }

    #[test]
    fn zero_function_rows_are_zero() {
        let t = DelzantPolytope::unit_triangle();
        let f = parse_expression("0*exp(x1)", 2).unwrap();
        let r = convergence_report(
            &(&t).into(),
            &f,
            1,
            &[2, 5, 10, 20],
            &ConvergenceConfig::default(),
        )
        .unwrap();
        assert!(r
            .rows
            .iter()
            .all(|row| row.s.to_f64() == 0.0 && row.r.to_f64() == 0.0));
    }

    #[test]
    fn reciprocal_first_order_slope() {
        let t = DelzantPolytope::unit_triangle();
        let f = parse_expression("1/(1+x1+x2)", 2).unwrap();
        let r = convergence_report(
            &(&t).into(),
            &f,
            1,
            &[10, 25, 50, 100, 200],
            &ConvergenceConfig::default(),
        )
        .unwrap();
        let s = r.slope().unwrap();
        assert!((s + 2.0).abs() < 0.1, "slope {s}");
    }

    #[test]
    fn rejects_short_lists() {
        let t = DelzantPolytope::unit_triangle();
        let f = Polynomial::var(2, 0);
        let cfg = ConvergenceConfig::default();
        assert!(convergence_report(&(&t).into(), &f, 1, &[1, 2, 3], &cfg).is_err());
        assert!(convergence_report(&(&t).into(), &f, 1, &[5, 6, 7, 8], &cfg).is_err());
    }
}
