//! Plain-text grid format: a header line `dims,side0[,side1]` followed by
//! one value per cell in row-major order.

use std::fmt::Write as _;

use super::GridDomain;
use crate::error::{Error, Result};

pub fn write_grid(domain: &GridDomain, values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 20 + 16);
    let sides = domain.sides();
    let _ = write!(out, "{}", domain.dims());
    for s in &sides {
        let _ = write!(out, ",{s}");
    }
    out.push('\n');
    for &v in values {
        out.push_str(&format_f64(v));
        out.push('\n');
    }
    out
}

/// Shortest round-trip text for `v`, switching to exponent notation for
/// very large or very small magnitudes. Locale independent.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn parse_grid(text: &str) -> Result<(GridDomain, Vec<f64>)> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
    let fields: Vec<usize> = header
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Parse(format!("header `{header}`: {e}"))))
        .collect::<Result<_>>()?;
    let (dims, sides) = fields.split_first().ok_or_else(|| Error::Parse("empty header".into()))?;
    if *dims != sides.len() {
        return Err(Error::Parse(format!("header declares {dims} dims but lists {} sides", sides.len())));
    }
    let domain = GridDomain::new(sides)?;
    let values: Vec<f64> = lines
        .map(|l| l.parse::<f64>().map_err(|e| Error::Parse(format!("value `{l}`: {e}"))))
        .collect::<Result<_>>()?;
    if values.len() != domain.cell_count() {
        return Err(Error::Parse(format!("expected {} values, found {}", domain.cell_count(), values.len())));
    }
    Ok((domain, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_format() {
        let d = GridDomain::new(&[2, 2]).unwrap();
        assert_eq!(write_grid(&d, &[1.0, 0.5, 2.0, 1e-300]), "2,2,2\n1\n0.5\n2\n1e-300\n");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_grid("").is_err());
        assert!(parse_grid("1,4\n1\n2\n3\n").is_err());
        assert!(parse_grid("2,4\n1\n2\n3\n4\n").is_err());
        assert!(parse_grid("1,3\n1\n2\n3\n").is_err());
        assert!(parse_grid("1,2\n1\nx\n").is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(vals in proptest::collection::vec(-1e300f64..1e300, 8)) {
            let d = GridDomain::new(&[4, 2]).unwrap();
            let (d2, back) = parse_grid(&write_grid(&d, &vals)).unwrap();
            prop_assert_eq!(d2, d);
            for (a, b) in vals.iter().zip(&back) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
