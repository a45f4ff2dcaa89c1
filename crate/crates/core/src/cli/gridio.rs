//! Lossless text persistence of grid functions.
//!
//! ```text
//! dim,m,half_width
//! 1,64,4.0000000000000000e0
//! value
//! -1.2345678901234567e-3
//! ...
//! ```

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::nonlocal::{GridFunction, GridSpec};

const HEADER: &str = "dim,m,half_width";

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn grid_function_to_string(u: &GridFunction) -> String {
    let spec = u.spec();
    let mut out = String::with_capacity(32 * (u.len() + 3));
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(
        out,
        "{},{},{}",
        spec.dim(),
        spec.points_per_axis(),
        fmt_f64(spec.half_width())
    );
    out.push_str("value\n");
    for &v in u.values() {
        out.push_str(&fmt_f64(v));
        out.push('\n');
    }
    out
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn grid_function_from_str(text: &str) -> io::Result<GridFunction> {
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err(bad(format!("expected header {HEADER:?}")));
    }
    let meta: Vec<&str> = lines.next().ok_or_else(|| bad("missing grid line"))?.split(',').collect();
    if meta.len() != 3 {
        return Err(bad("grid line needs dim,m,half_width"));
    }
    let dim: usize = meta[0].parse().map_err(|_| bad("bad dim"))?;
    let m: usize = meta[1].parse().map_err(|_| bad("bad m"))?;
    let half: f64 = meta[2].parse().map_err(|_| bad("bad half_width"))?;
    if lines.next() != Some("value") {
        return Err(bad("expected column header \"value\""));
    }
    let values = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.parse::<f64>().map_err(|_| bad(format!("bad value {l:?}"))))
        .collect::<io::Result<Vec<_>>>()?;
    let spec = GridSpec::new(dim, half, m).map_err(|e| bad(e.to_string()))?;
    GridFunction::new(spec, values).map_err(|e| bad(e.to_string()))
}

pub fn write_grid_function(path: &Path, u: &GridFunction) -> io::Result<()> {
    std::fs::write(path, grid_function_to_string(u))
}

pub fn read_grid_function(path: &Path) -> io::Result<GridFunction> {
    grid_function_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let spec = GridSpec::new(2, 1.7, 9).unwrap();
        let u = GridFunction::from_fn(spec, |x| (x[0] * 3.1).sin() / 7.0 + x[1].exp() * 1e-300);
        let back = grid_function_from_str(&grid_function_to_string(&u)).unwrap();
        assert_eq!(back.spec(), u.spec());
        for (a, b) in u.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_wrong_length() {
        let text = "dim,m,half_width\n1,4,1.0\nvalue\n1\n2\n3\n";
        assert!(grid_function_from_str(text).is_err());
    }
}
