//! CSV import/export. Numbers are written with 17 significant digits in
//! locale-independent scientific notation.

use super::{SamplePath, TimeGrid};
use crate::error::{Error, Result};
use std::io::{self, BufRead, Write};
use std::sync::Arc;

/// Formats `x` with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_path_csv<W: Write>(mut out: W, path: &SamplePath) -> io::Result<()> {
    writeln!(out, "t,value")?;
    for (t, v) in path.grid.points().iter().zip(&path.values) {
        writeln!(out, "{},{}", fmt_f64(*t), fmt_f64(*v))?;
    }
    Ok(())
}

pub fn write_ensemble_csv<W: Write>(mut out: W, paths: &[SamplePath]) -> io::Result<()> {
    writeln!(out, "replication,t,value")?;
    for (k, p) in paths.iter().enumerate() {
        for (t, v) in p.grid.points().iter().zip(&p.values) {
            writeln!(out, "{k},{},{}", fmt_f64(*t), fmt_f64(*v))?;
        }
    }
    Ok(())
}

fn parse_field(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("line {line}: `{s}`: {e}")))
}

pub fn read_path_csv<R: BufRead>(input: R, label: &str) -> Result<SamplePath> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty file".into()))?
        .map_err(|e| Error::Parse(e.to_string()))?;
    if header.trim() != "t,value" {
        return Err(Error::Parse(format!("expected header `t,value`, got `{header}`")));
    }
    let (mut ts, mut vs) = (Vec::new(), Vec::new());
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let (Some(t), Some(v), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::Parse(format!("line {}: expected 2 fields", k + 2)));
        };
        ts.push(parse_field(t, k + 2)?);
        vs.push(parse_field(v, k + 2)?);
    }
    SamplePath::new(Arc::new(TimeGrid::new(ts)?), vs, label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{generate_path_circulant, HurstParameter};
    use crate::rng::SeedSpec;

    #[test]
    fn path_csv_round_trips_bitwise() {
        let p = generate_path_circulant(20, 1.0, HurstParameter::new(0.7).unwrap(), SeedSpec::new(1, 0)).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,value\n"));
        let q = read_path_csv(buf.as_slice(), "q").unwrap();
        assert_eq!(p.grid.points(), q.grid.points());
        assert!(p.values.iter().zip(&q.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn ensemble_long_format() {
        let g = Arc::new(TimeGrid::uniform(1, 1.0).unwrap());
        let p = SamplePath::new(g, vec![0.0, 0.25], "p").unwrap();
        let mut buf = Vec::new();
        write_ensemble_csv(&mut buf, &[p.clone(), p]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "replication,t,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[4].starts_with("1,1.0000000000000000e0,"));
    }

    #[test]
    fn bad_header_rejected() {
        assert!(read_path_csv("time,x\n0,0\n".as_bytes(), "x").is_err());
    }
}
