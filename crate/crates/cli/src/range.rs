//! Value lists: `v`, `a,b,c`, `start:stop:step` and `start:stop:geometric:count`.

use spikegap::scaling::{geometric_grid, geometric_sizes};

use crate::CliError;

fn parse_f64(s: &str) -> Result<f64, CliError> {
    s.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("not a number: {s:?}")))
}

fn parse_count(s: &str) -> Result<usize, CliError> {
    s.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("not a count: {s:?}")))
}

/// Real values described by `spec`.
pub fn parse_reals(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.as_slice() {
        [single] => single.split(',').map(parse_f64).collect::<Result<Vec<_>, _>>()?,
        [start, stop, step] => {
            let (a, b, h) = (parse_f64(start)?, parse_f64(stop)?, parse_f64(step)?);
            if !(h > 0.0) || b < a {
                return Err(CliError::Usage(format!("bad range {spec:?}: need start <= stop and step > 0")));
            }
            let count = ((b - a) / h + 1e-9).floor() as usize + 1;
            (0..count).map(|i| a + h * i as f64).collect()
        }
        [start, stop, kind, count] if kind.trim() == "geometric" => {
            let (a, b, m) = (parse_f64(start)?, parse_f64(stop)?, parse_count(count)?);
            if !(a > 0.0 && b >= a) || m == 0 {
                return Err(CliError::Usage(format!("bad geometric range {spec:?}")));
            }
            geometric_grid(a, b, m)
        }
        _ => return Err(CliError::Usage(format!("unrecognised range {spec:?}"))),
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Usage(format!("empty or non-finite range {spec:?}")));
    }
    Ok(values)
}

/// Sizes described by `spec`; geometric ranges round to multiples of 4.
pub fn parse_sizes(spec: &str) -> Result<Vec<usize>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let sizes: Vec<usize> = match parts.as_slice() {
        [start, stop, kind, count] if kind.trim() == "geometric" => {
            let (a, b, m) = (parse_f64(start)?, parse_f64(stop)?, parse_count(count)?);
            if !(a >= 4.0 && b >= a) || m == 0 {
                return Err(CliError::Usage(format!("bad geometric range {spec:?}")));
            }
            geometric_sizes(a, b, m)
        }
        _ => parse_reals(spec)?
            .into_iter()
            .map(|v| {
                if v.fract() != 0.0 || v < 0.0 {
                    Err(CliError::Usage(format!("n = {v} is not a non-negative integer")))
                } else {
                    Ok(v as usize)
                }
            })
            .collect::<Result<_, _>>()?,
    };
    if let Some(bad) = sizes.iter().find(|&&n| n == 0 || n % 4 != 0) {
        return Err(CliError::Usage(format!("n = {bad} is not a positive multiple of 4")));
    }
    Ok(sizes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_steps() {
        assert_eq!(parse_reals("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_reals("1,2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        let r = parse_reals("0.30:0.45:0.05").unwrap();
        assert_eq!(r.len(), 4);
        assert!((r[3] - 0.45).abs() < 1e-12);
    }

    #[test]
    fn geometric_sizes_are_rounded() {
        let s = parse_sizes("500:30000:geometric:24").unwrap();
        assert_eq!(s.first(), Some(&500));
        assert_eq!(s.last(), Some(&30000));
        assert!(s.iter().all(|n| n % 4 == 0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_reals("a").is_err());
        assert!(parse_reals("1:0:0.1").is_err());
        assert!(parse_reals("0:1:0").is_err());
        assert!(parse_sizes("502").is_err());
        assert!(parse_sizes("1.5").is_err());
        assert!(parse_reals("1:2:linear:3").is_err());
    }
}
