//! On-disk formats: the ACF1 field dump and CSV value formatting.
//!
//! ACF1 layout: five text header lines
//!
//! ```text
//! ACF1
//! dim <d>
//! lengths <L1> [<L2> [<L3>]]
//! grid <n1> [<n2> [<n3>]]
//! eps <value or 0 if not applicable>
//! ```
//!
//! followed by a single (blank) newline and then ∏nᵢ IEEE-754 binary64
//! little-endian values in index order (last axis fastest).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{AcError, Result};
use crate::geometry::{ScalarField, TorusDomain};

pub fn write_acf1(path: &Path, field: &ScalarField, eps: f64) -> Result<()> {
    let d = field.domain();
    let mut out = Vec::new();
    out.extend_from_slice(b"ACF1\n");
    out.extend_from_slice(format!("dim {}\n", d.dim()).as_bytes());
    let lengths: Vec<String> = (0..d.dim()).map(|a| fmt_float(d.length(a))).collect();
    out.extend_from_slice(format!("lengths {}\n", lengths.join(" ")).as_bytes());
    let grid: Vec<String> = (0..d.dim()).map(|a| d.grid(a).to_string()).collect();
    out.extend_from_slice(format!("grid {}\n", grid.join(" ")).as_bytes());
    out.extend_from_slice(format!("eps {}\n", fmt_float(eps)).as_bytes());
    out.push(b'\n');
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Parse an ACF1 file, returning the field and its recorded eps (0 when not
/// applicable).
pub fn read_acf1(path: &Path) -> Result<(ScalarField, f64)> {
    let file_name = path.display().to_string();
    let mut raw = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut raw)?;

    let bad = |line: usize, message: &str| AcError::ParseFormat {
        file: file_name.clone(),
        line,
        message: message.to_string(),
    };

    // Split the 6 header newlines (5 lines + blank separator).
    let mut pos = 0usize;
    let mut lines = Vec::new();
    for ln in 1..=6 {
        let nl = raw[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad(ln, "truncated header"))?;
        let text = std::str::from_utf8(&raw[pos..pos + nl])
            .map_err(|_| bad(ln, "header is not utf-8"))?;
        lines.push(text.to_string());
        pos += nl + 1;
    }
    if lines[0] != "ACF1" {
        return Err(bad(1, "magic is not ACF1"));
    }
    let dim: usize = field_after(&lines[1], "dim").ok_or_else(|| bad(2, "expected `dim <d>`"))?
        .trim()
        .parse()
        .map_err(|_| bad(2, "dim is not an integer"))?;
    if !(1..=3).contains(&dim) {
        return Err(bad(2, "dim must be 1, 2 or 3"));
    }
    let lengths = parse_floats(
        field_after(&lines[2], "lengths").ok_or_else(|| bad(3, "expected `lengths ...`"))?,
    )
    .map_err(|m| bad(3, &m))?;
    let grid_f = parse_floats(
        field_after(&lines[3], "grid").ok_or_else(|| bad(4, "expected `grid ...`"))?,
    )
    .map_err(|m| bad(4, &m))?;
    let eps: f64 = field_after(&lines[4], "eps")
        .ok_or_else(|| bad(5, "expected `eps <value>`"))?
        .trim()
        .parse()
        .map_err(|_| bad(5, "eps is not a number"))?;
    if !lines[5].is_empty() {
        return Err(bad(6, "expected blank separator line"));
    }
    if lengths.len() != dim || grid_f.len() != dim {
        return Err(bad(3, "lengths/grid do not match dim"));
    }
    let grid: Vec<usize> = grid_f.iter().map(|&g| g as usize).collect();
    let domain = TorusDomain::new(dim, &lengths, &grid)
        .map_err(|e| bad(3, &format!("bad domain: {e}")))?;

    let n = domain.len();
    let body = &raw[pos..];
    if body.len() != n * 8 {
        return Err(bad(6, &format!("expected {} payload bytes, found {}", n * 8, body.len())));
    }
    let mut values = Vec::with_capacity(n);
    for chunk in body.chunks_exact(8) {
        values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    let field = ScalarField::new(domain, values)
        .map_err(|e| bad(6, &format!("bad payload: {e}")))?;
    Ok((field, eps))
}

fn field_after<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' ').or(Some(rest.trim_start())))
}

fn parse_floats(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split_whitespace()
        .map(|tok| tok.parse::<f64>().map_err(|_| format!("bad number `{tok}`")))
        .collect()
}

/// Shortest round-trip representation (header fields, config echoes).
pub fn fmt_float(x: f64) -> String {
    format!("{x}")
}

/// CSV float formatting: 17 significant digits, fixed layout.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write CSV rows (caller provides header + stringified cells).
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acf1_round_trip_is_exact() {
        let d = TorusDomain::rect(1.0, 4.0, 8, 16).unwrap();
        let u = ScalarField::from_fn(d, |x| (x[0] * 7.3).sin() + x[1]);
        let tmp = std::env::temp_dir().join("ac_core_roundtrip_test.acf1");
        write_acf1(&tmp, &u, 0.125).unwrap();
        let (v, eps) = read_acf1(&tmp).unwrap();
        assert_eq!(eps, 0.125);
        assert_eq!(v.domain(), u.domain());
        assert_eq!(v.values(), u.values());
        std::fs::remove_file(&tmp).ok();
    }

    #[test]
    fn corrupted_header_names_the_line() {
        let tmp = std::env::temp_dir().join("ac_core_corrupt_test.acf1");
        std::fs::write(&tmp, b"ACF1\ndim 2\nlengths 1\ngrid 8 8\neps 0\n\n").unwrap();
        let err = read_acf1(&tmp).unwrap_err();
        match err {
            AcError::ParseFormat { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other}"),
        }
        std::fs::remove_file(&tmp).ok();
    }

    #[test]
    fn g17_formatting_is_deterministic() {
        assert_eq!(fmt_g17(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_g17(-0.1), "-1.0000000000000001e-1");
    }
}
