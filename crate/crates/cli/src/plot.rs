//! Plot data as RFC 4180 CSV; complex values become `_re`/`_im` column pairs.

use std::fmt::Write;

use clap::ValueEnum;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    CurveTrace,
    LengthProfile,
    ResidualDecay,
    JacobianHeat,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::CurveTrace => "curve_trace",
            PlotKind::LengthProfile => "length_profile",
            PlotKind::ResidualDecay => "residual_decay",
            PlotKind::JacobianHeat => "jacobian_heat",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub kind: PlotKind,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(kind: PlotKind, header: &[&str]) -> Self {
        Self::with_header(kind, header.iter().map(|s| s.to_string()).collect())
    }

    pub fn with_header(kind: PlotKind, header: Vec<String>) -> Self {
        Self {
            kind,
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let line: Vec<String> = self.header.iter().map(|h| quote(h)).collect();
        out.push_str(&line.join(","));
        out.push_str("\r\n");
        for r in &self.rows {
            for (i, v) in r.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{v:?}").expect("write to string");
            }
            out.push_str("\r\n");
        }
        out
    }
}

/// Column names `name_re, name_im`.
pub fn complex_columns(name: &str) -> [String; 2] {
    [format!("{name}_re"), format!("{name}_im")]
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\r', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crlf_records_and_quoting() {
        let mut t = Table::new(PlotKind::ResidualDecay, &["t_steps", "a,b"]);
        t.push(vec![25.0, 1e-9]);
        assert_eq!(t.to_csv(), "t_steps,\"a,b\"\r\n25.0,1e-9\r\n");
    }
}
