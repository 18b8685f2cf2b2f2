//! Plain-text polytope files.
//!
//! ```text
//! # unit triangle
//! dim 2
//! facet -1 0 0
//! facet 0 -1 0
//! facet 1 1 1
//! ```
//!
//! After the `dim n` line, either `facet u_1 … u_n c` lines or
//! `vertex x_1 … x_n` lines (never both). Blank lines and `#` comments are
//! ignored.

use num_bigint::BigInt;

use super::{DelzantPolytope, Facet, GeometryError, LatticeVector};

fn parse_ints(words: &[&str], line: usize) -> Result<Vec<BigInt>, GeometryError> {
    words
        .iter()
        .map(|w| {
            w.parse::<BigInt>().map_err(|_| GeometryError::Parse {
                line,
                message: format!("expected an integer, found `{w}`"),
            })
        })
        .collect()
}

pub fn parse_polytope(text: &str) -> Result<DelzantPolytope, GeometryError> {
    let mut dim: Option<usize> = None;
    let mut facets: Vec<Facet> = Vec::new();
    let mut points: Vec<LatticeVector> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        let err = |message: String| GeometryError::Parse { line, message };
        match (words[0], dim) {
            ("dim", None) => {
                if words.len() != 2 {
                    return Err(err("expected `dim n`".into()));
                }
                let n: usize = words[1]
                    .parse()
                    .map_err(|_| err(format!("invalid dimension `{}`", words[1])))?;
                if !(1..=3).contains(&n) {
                    return Err(err(format!(
                        "dimension {n} is not supported (expected 1, 2 or 3)"
                    )));
                }
                dim = Some(n);
            }
            ("dim", Some(_)) => return Err(err("repeated `dim` line".into())),
            (_, None) => return Err(err("the first line must be `dim n`".into())),
            ("facet", Some(n)) => {
                if !points.is_empty() {
                    return Err(err("facet and vertex lines cannot be mixed".into()));
                }
                if words.len() != n + 2 {
                    return Err(err(format!(
                        "a facet line needs {} integers, found {}",
                        n + 1,
                        words.len() - 1
                    )));
                }
                let mut ints = parse_ints(&words[1..], line)?;
                let offset = ints.pop().expect("length checked");
                facets.push(Facet {
                    normal: LatticeVector::new(ints),
                    offset,
                });
            }
            ("vertex", Some(n)) => {
                if !facets.is_empty() {
                    return Err(err("facet and vertex lines cannot be mixed".into()));
                }
                if words.len() != n + 1 {
                    return Err(err(format!(
                        "a vertex line needs {n} integers, found {}",
                        words.len() - 1
                    )));
                }
                points.push(LatticeVector::new(parse_ints(&words[1..], line)?));
            }
            (other, Some(_)) => return Err(err(format!("unknown keyword `{other}`"))),
        }
    }
    let n = dim.ok_or(GeometryError::Parse {
        line: 0,
        message: "missing `dim n` line".into(),
    })?;
    if facets.is_empty() && points.is_empty() {
        return Err(GeometryError::Parse {
            line: 0,
            message: "no facet or vertex lines".into(),
        });
    }
    if facets.is_empty() {
        DelzantPolytope::from_vertices(n, points)
    } else {
        DelzantPolytope::from_facets(n, facets)
    }
}

/// Serializes a polytope in facet form.
pub fn write_polytope(p: &DelzantPolytope) -> String {
    let mut out = format!("dim {}\n", p.dim());
    for f in p.facets() {
        out.push_str("facet");
        for x in f.normal.coords() {
            out.push_str(&format!(" {x}"));
        }
        out.push_str(&format!(" {}\n", f.offset));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_forms() {
        let a = parse_polytope("# triangle\ndim 2\nfacet -1 0 0\nfacet 0 -1 0\n\nfacet 1 1 1\n")
            .unwrap();
        let b = parse_polytope("dim 2\nvertex 0 0\nvertex 1 0\nvertex 0 1 # apex\n").unwrap();
        assert_eq!(a.vertices(), b.vertices());
        let again = parse_polytope(&write_polytope(&a)).unwrap();
        assert_eq!(again.facets(), a.facets());
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_polytope("dim 2\nfacet 1 0 1\nfacet 0 x 1\n").unwrap_err();
        assert_eq!(
            e,
            GeometryError::Parse {
                line: 3,
                message: "expected an integer, found `x`".into()
            }
        );
        let e = parse_polytope("dim 2\nfacet 1 0\n").unwrap_err();
        assert!(matches!(e, GeometryError::Parse { line: 2, .. }));
        let e = parse_polytope("dim 2\nvertex 0 0\nfacet 1 0 1\n").unwrap_err();
        assert!(matches!(e, GeometryError::Parse { line: 3, .. }));
        let e = parse_polytope("facet 1 0 1\n").unwrap_err();
        assert!(matches!(e, GeometryError::Parse { line: 1, .. }));
    }
}
