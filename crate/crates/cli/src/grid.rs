//! Grid specifications for `phase-scan`.
//!
//! A grid is a comma-separated list of items, each either a single value or
//! an inclusive range `start:step:end`. Values are rationals or, where
//! allowed, log-affine forms such as `ln2`, `3/4*ln2` or `1+ln2`.

use std::cmp::Ordering;

use anyhow::{anyhow, bail, Result};
use thicksum::{LogAffine, Rational};

const MAX_POINTS: usize = 100_000;

pub fn parse_log_affine_grid(spec: &str) -> Result<Vec<LogAffine>> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let fields: Vec<&str> = item.split(':').collect();
        match fields.as_slice() {
            [v] => out.push(parse_value(v)?),
            [start, step, end] => {
                let (start, step, end) =
                    (parse_value(start)?, parse_value(step)?, parse_value(end)?);
                if step.sign() != Some(Ordering::Greater) {
                    bail!("grid step must be positive in {item:?}");
                }
                let mut v = start;
                while v.cmp_value(&end) != Some(Ordering::Greater) {
                    if out.len() >= MAX_POINTS {
                        bail!("grid {spec:?} has more than {MAX_POINTS} points");
                    }
                    out.push(v.clone());
                    v = v.add(&step);
                }
            }
            _ => bail!("grid item {item:?} is neither a value nor start:step:end"),
        }
    }
    if out.is_empty() {
        bail!("empty grid {spec:?}");
    }
    Ok(out)
}

pub fn parse_rational_grid(spec: &str) -> Result<Vec<Rational>> {
    parse_log_affine_grid(spec)?
        .into_iter()
        .map(|v| {
            v.as_rational()
                .cloned()
                .ok_or_else(|| anyhow!("grid {spec:?} must be rational, found {v}"))
        })
        .collect()
}

fn parse_value(s: &str) -> Result<LogAffine> {
    s.trim()
        .parse()
        .map_err(|e| anyhow!("in grid value {s:?}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn show<T: std::fmt::Display>(v: &[T]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn lists_and_ranges() {
        let g = parse_rational_grid("1/10:1/10:3/10, 2").unwrap();
        assert_eq!(show(&g), ["1/10", "1/5", "3/10", "2"]);
        let g = parse_log_affine_grid("ln2, 1/2*ln2:1/2*ln2:3/2*ln2").unwrap();
        assert_eq!(show(&g), ["ln2", "1/2*ln2", "ln2", "3/2*ln2"]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(parse_rational_grid("").is_err());
        assert!(parse_rational_grid("1:0:2").is_err());
        assert!(parse_rational_grid("1:2").is_err());
        assert!(parse_rational_grid("ln2").is_err());
        assert!(parse_rational_grid("0:1/1000000:1").is_err());
    }
}
