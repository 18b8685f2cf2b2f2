//! Human-readable tables on stdout.

use emaclaurin::analysis::{ConvergenceReport, RiemannSum};
use emaclaurin::exact::format_rational;
use emaclaurin::expansion::ExpansionResult;
use emaclaurin::geometry::DelzantPolytope;

pub fn header(fields: &[(&str, String)]) {
    for (k, v) in fields {
        println!("# {k} = {v}");
    }
}

pub fn sum(s: &RiemannSum) {
    println!("N       {}", s.n);
    println!("points  {}", s.count);
    match &s.exact {
        Some(r) => println!("S_N     {}", format_rational(r)),
        None => println!("S_N     {:.16e}", s.value),
    }
}

fn row(cells: &[String], widths: &[usize]) -> String {
    cells
        .iter()
        .zip(widths)
        .map(|(c, w)| format!("{c:<w$}"))
        .collect::<Vec<_>>()
        .join("  ")
        .trim_end()
        .to_string()
}

fn table(head: Vec<String>, body: Vec<Vec<String>>) {
    let mut widths: Vec<usize> = head.iter().map(|h| h.chars().count()).collect();
    for r in &body {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    println!("{}", row(&head, &widths));
    for r in &body {
        println!("{}", row(r, &widths));
    }
}

pub fn expansion(r: &ExpansionResult) {
    println!("method  {}", r.method);
    if r.error_estimate.is_finite() && !r.is_exact() {
        println!("quadrature error estimate  {:e}", r.error_estimate);
    }
    println!();
    table(
        vec!["q".into(), "T_q".into()],
        r.coefficients
            .iter()
            .enumerate()
            .map(|(q, c)| vec![q.to_string(), c.to_string()])
            .collect(),
    );
    println!();
    println!("per-face breakdown");
    let mut head = vec!["face".to_string()];
    head.extend((0..=r.max_order).map(|q| format!("T_{q}")));
    table(
        head,
        r.breakdown
            .iter()
            .map(|b| {
                let mut cells = vec![b.label.clone()];
                cells.extend(b.per_order.iter().map(ToString::to_string));
                cells
            })
            .collect(),
    );
}

pub fn convergence(r: &ConvergenceReport) {
    println!("method  {}", r.expansion.method);
    println!(
        "T_0..T_{}  {}",
        r.q,
        r.expansion
            .coefficients
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!();
    table(
        ["N", "S_N", "P_N", "R_N", "log10N", "log10R"]
            .map(String::from)
            .to_vec(),
        r.rows
            .iter()
            .map(|row| {
                vec![
                    row.n.to_string(),
                    row.s.to_string(),
                    row.p.to_string(),
                    row.r.to_string(),
                    format!("{:.6}", row.log10_n()),
                    format!("{:.6}", row.log10_r()),
                ]
            })
            .collect(),
    );
    println!();
    match r.fit {
        Some(f) => println!(
            "slope  {:.6}  (95% CI [{:.6}, {:.6}], {} points)",
            f.slope, f.ci_low, f.ci_high, f.points
        ),
        None if r.all_exact_zero() => println!("slope  none (all remainders are exactly zero)"),
        None => println!("slope  none (fewer than two nonzero remainders)"),
    }
}

pub fn validation(p: &DelzantPolytope) {
    println!(
        "Delzant polytope: dimension {}, {} facets, {} vertices",
        p.dim(),
        p.facets().len(),
        p.vertices().len()
    );
    for f in p.facets() {
        println!("facet   {} <= {}", f.normal, f.offset);
    }
    for (i, v) in p.vertices().iter().enumerate() {
        println!("vertex  {v}  on facets {:?}", p.incidence(i));
    }
}
