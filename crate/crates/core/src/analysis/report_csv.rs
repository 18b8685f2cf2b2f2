use std::io::{BufRead, BufReader, Read, Write};

use super::{AnalysisError, ConvergenceReport, ConvergenceRow, SlopeFit};
use crate::exact::parse_rational;
use crate::expansion::Coefficient;

pub const CSV_COLUMNS: [&str; 6] = ["N", "S_N", "P_N", "R_N", "log10N", "log10R"];

/// Rows and slope as read back from a report CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub q: usize,
    pub rows: Vec<ConvergenceRow>,
    pub fit: Option<SlopeFit>,
}

fn float(x: f64) -> String {
    format!("{x:?}")
}

/// Writes the header, one record per row, then `#` footer lines with `Q`
/// and the fitted slope. Exact values are written as `p/q`, floats in
/// shortest round-trip form.
pub fn write_report_csv<W: Write>(report: &ConvergenceReport, out: W) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in &report.rows {
        w.write_record([
            r.n.to_string(),
            r.s.to_string(),
            r.p.to_string(),
            r.r.to_string(),
            float(r.log10_n()),
            float(r.log10_r()),
        ])?;
    }
    w.flush()?;
    let mut out = w
        .into_inner()
        .map_err(|e| AnalysisError::Csv(e.to_string()))?;
    writeln!(out, "# Q,{}", report.q)?;
    match report.fit {
        Some(f) => writeln!(
            out,
            "# slope,{},ci_low,{},ci_high,{},intercept,{},points,{}",
            float(f.slope),
            float(f.ci_low),
            float(f.ci_high),
            float(f.intercept),
            f.points
        )?,
        None => writeln!(out, "# slope,none")?,
    }
    Ok(())
}

fn parse_value(s: &str) -> Result<Coefficient, AnalysisError> {
    if let Some(r) = parse_rational(s) {
        return Ok(Coefficient::Exact(r));
    }
    s.parse::<f64>()
        .map(Coefficient::Approx)
        .map_err(|_| AnalysisError::Csv(format!("cannot parse value `{s}`")))
}

fn parse_f64(s: &str) -> Result<f64, AnalysisError> {
    s.trim()
        .parse()
        .map_err(|_| AnalysisError::Csv(format!("cannot parse number `{s}`")))
}

fn parse_footer(
    line: &str,
    q: &mut Option<usize>,
    fit: &mut Option<SlopeFit>,
) -> Result<(), AnalysisError> {
    let fields: Vec<&str> = line.trim_start_matches('#').trim().split(',').collect();
    match fields.as_slice() {
        ["Q", v] => {
            *q = Some(
                v.parse()
                    .map_err(|_| AnalysisError::Csv(format!("bad Q `{v}`")))?,
            )
        }
        ["slope", "none"] => *fit = None,
        ["slope", s, "ci_low", lo, "ci_high", hi, "intercept", b, "points", m] => {
            *fit = Some(SlopeFit {
                slope: parse_f64(s)?,
                ci_low: parse_f64(lo)?,
                ci_high: parse_f64(hi)?,
                intercept: parse_f64(b)?,
                points: m
                    .parse()
                    .map_err(|_| AnalysisError::Csv(format!("bad point count `{m}`")))?,
            })
        }
        _ => return Err(AnalysisError::Csv(format!("unrecognized footer `{line}`"))),
    }
    Ok(())
}

/// Reads a CSV written by [`write_report_csv`].
pub fn read_report_csv<R: Read>(input: R) -> Result<ParsedReport, AnalysisError> {
    let mut body = String::new();
    let mut q = None;
    let mut fit = None;
    for line in BufReader::new(input).lines() {
        let line = line?;
        if line.starts_with('#') {
            parse_footer(&line, &mut q, &mut fit)?;
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_COLUMNS) {
        return Err(AnalysisError::Csv(format!(
            "unexpected header {:?}",
            header
        )));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        rows.push(ConvergenceRow {
            n: rec[0]
                .parse()
                .map_err(|_| AnalysisError::Csv(format!("bad N `{}`", &rec[0])))?,
            s: parse_value(&rec[1])?,
            p: parse_value(&rec[2])?,
            r: parse_value(&rec[3])?,
        });
    }
    Ok(ParsedReport {
        q: q.ok_or_else(|| AnalysisError::Csv("missing Q footer".into()))?,
        rows,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{convergence_report, ConvergenceConfig};
    use crate::functions::{parse_expression, Polynomial};
    use crate::geometry::DelzantPolytope;

    fn roundtrip(report: &ConvergenceReport) -> ParsedReport {
        let mut buf = Vec::new();
        write_report_csv(report, &mut buf).unwrap();
        read_report_csv(buf.as_slice()).unwrap()
    }

    #[test]
    fn float_report_round_trips_bit_exactly() {
        let t = DelzantPolytope::unit_triangle();
        let f = parse_expression("1/(1+x1+x2)", 2).unwrap();
        let r = convergence_report(
            &(&t).into(),
            &f,
            2,
            &[10, 20, 50, 100],
            &ConvergenceConfig::default(),
        )
        .unwrap();
        let back = roundtrip(&r);
        assert_eq!(back.q, 2);
        assert_eq!(back.rows, r.rows);
        let (a, b) = (back.fit.unwrap(), r.fit.unwrap());
        assert_eq!(a.slope.to_bits(), b.slope.to_bits());
        assert_eq!(a.ci_low.to_bits(), b.ci_low.to_bits());
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn exact_report_round_trips() {
        let t = DelzantPolytope::unit_triangle();
        let f = Polynomial::var(2, 0);
        let r = convergence_report(
            &(&t).into(),
            &f,
            1,
            &[1, 3, 7, 10],
            &ConvergenceConfig::default(),
        )
        .unwrap();
        let back = roundtrip(&r);
        assert_eq!(back.rows, r.rows);
        assert!(back.fit.is_some());
        let mut buf = Vec::new();
        write_report_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("N,S_N,P_N,R_N,log10N,log10R\n1,1,2/3,1/3,"));
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(read_report_csv("a,b\n1,2\n# Q,1\n".as_bytes()).is_err());
    }
}
