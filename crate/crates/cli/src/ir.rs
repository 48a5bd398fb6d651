//! Impulse-response files: plain text, one decimal coefficient per line.
//! Blank lines and lines starting with `#` are ignored.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::error::{CliError, CliResult};

pub fn parse_ir(text: &str) -> Result<Vec<f64>, String> {
    let mut h = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| format!("line {}: not a number: {line:?}", n + 1))?;
        if !v.is_finite() {
            return Err(format!("line {}: coefficient must be finite", n + 1));
        }
        h.push(v);
    }
    if h.is_empty() {
        return Err("no coefficients".into());
    }
    Ok(h)
}

pub fn read_ir(path: &Path) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("ir_file {}: {e}", path.display())))?;
    parse_ir(&text).map_err(|e| CliError::config(format!("ir_file {}: {e}", path.display())))
}

pub fn write_ir<W: Write>(mut out: W, h: &[f64]) -> io::Result<()> {
    for v in h {
        writeln!(out, "{v:e}")?;
    }
    Ok(())
}

pub fn save_ir(path: &Path, h: &[f64]) -> CliResult<()> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_ir(io::BufWriter::new(file), h).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_skips_comments() {
        let h = parse_ir("# room\n0.5\n\n-2.5e-1\n  1 \n").unwrap();
        assert_eq!(h, [0.5, -0.25, 1.0]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_ir("0.1\nabc\n").unwrap_err().contains("line 2"));
        assert!(parse_ir("").is_err());
        assert!(parse_ir("inf").is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let h = [0.1, -1.0 / 3.0, 5.5e-7, 0.0];
        let mut buf = Vec::new();
        write_ir(&mut buf, &h).unwrap();
        assert_eq!(parse_ir(std::str::from_utf8(&buf).unwrap()).unwrap(), h);
    }
}
