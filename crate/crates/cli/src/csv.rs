//! Convergence curves as CSV: a `t` column (1-based step count) followed by
//! one column per algorithm holding the ensemble-mean misalignment in dB.

use std::io::{self, Write};

use bayesaf_core::simulate::{to_db, Trajectory};

const SIG_DIGITS: i32 = 6;

/// Six significant digits, `-inf` for an exactly zero misalignment.
pub fn format_db(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        return "-inf".into();
    }
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (SIG_DIGITS - 1 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // rounding may carry into a new leading digit
    let rounded: f64 = s.parse().unwrap_or(v);
    if decimals > 0 && rounded.abs().log10().floor() as i32 > mag {
        let decimals = decimals - 1;
        return format!("{v:.decimals$}");
    }
    s
}

pub fn write_curves<W: Write>(
    mut out: W,
    labels: &[String],
    curves: &[Trajectory],
) -> io::Result<()> {
    assert_eq!(labels.len(), curves.len());
    let len = curves.iter().map(Trajectory::len).min().unwrap_or(0);
    write!(out, "t")?;
    for l in labels {
        write!(out, ",{l}")?;
    }
    writeln!(out)?;
    let mut line = String::new();
    for t in 0..len {
        line.clear();
        line.push_str(&(t + 1).to_string());
        for c in curves {
            line.push(',');
            line.push_str(&format_db(to_db(c.misalignment[t])));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_db(-20.123456789), "-20.1235");
        assert_eq!(format_db(-0.0123456789), "-0.0123457");
        assert_eq!(format_db(-123.4564), "-123.456");
        assert_eq!(format_db(3.0), "3.00000");
        assert_eq!(format_db(-99.999996), "-100.000");
        assert_eq!(format_db(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_db(0.0), "0");
    }

    #[test]
    fn header_and_rows() {
        let a = Trajectory {
            misalignment: vec![1.0, 0.01],
        };
        let b = Trajectory {
            misalignment: vec![0.1, 0.0],
        };
        let mut buf = Vec::new();
        write_curves(&mut buf, &["SG".into(), "fKF".into()], &[a, b]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,SG,fKF\n1,0,-10.0000\n2,-20.0000,-inf\n");
    }
}
