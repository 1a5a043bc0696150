//! CSV and key-value writers shared by the solver, probes and CLI.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;

/// Format like C's `%.17g`.
pub fn fmt_g17(x: f64) -> String {
    const PRECISION: i32 = 17;
    if x.is_nan() {
        return if x.is_sign_negative() { "-nan" } else { "nan" }.into();
    }
    if x.is_infinite() {
        return if x < 0.0 { "-inf" } else { "inf" }.into();
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..PRECISION).contains(&exp) {
        let fixed = format!("{:.*}", (PRECISION - 1 - exp) as usize, x);
        strip_zeros(&fixed).to_string()
    } else {
        let mut s = strip_zeros(mantissa).to_string();
        let sign = if exp < 0 { '-' } else { '+' };
        let _ = write!(s, "e{sign}{:02}", exp.abs());
        s
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Comma-separated table with a header row; numbers use `%.17g`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&v| fmt_g17(v)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_string_lossy(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}

/// Two-column whitespace-separated data, as read by gnuplot.
pub fn gnuplot_columns(x: &[f64], y: &[f64]) -> String {
    let mut s = String::new();
    for (a, b) in x.iter().zip(y) {
        let _ = writeln!(s, "{} {}", fmt_g17(*a), fmt_g17(*b));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_c_printf() {
        // reference strings from printf("%.17g")
        let cases = [
            (0.1, "0.10000000000000001"),
            (1.0, "1"),
            (0.0, "0"),
            (-0.0, "-0"),
            (1e-5, "1.0000000000000001e-05"),
            (123456.789, "123456.789"),
            (1e17, "1e+17"),
            (1e16, "10000000000000000"),
            (std::f64::consts::PI, "3.1415926535897931"),
            (-2.5e-300, "-2.5e-300"),
            (0.0001, "0.0001"),
            (1.5e300, "1.5000000000000001e+300"),
            (f64::INFINITY, "inf"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g17(x), want, "formatting {x:e}");
        }
    }

    #[test]
    fn table_round_trip_text() {
        let mut t = CsvTable::new(["a", "b"]);
        t.push_numbers(&[1.0, 0.5]);
        assert_eq!(t.to_string_lossy(), "a,b\n1,0.5\n");
    }
}
