//! Result containers and their deterministic text serialization.
//!
//! All floating-point output goes through `fmt_sig12` (12 significant
//! digits, locale-independent), so reruns of a deterministic computation
//! produce byte-identical tables.

use serde::Serialize;

/// A computed invariant with window metadata and a convergence estimate
/// (difference between the two largest window sizes tried; 0 when a single
/// window was used).
#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub name: String,
    pub value: f64,
    pub imag_residual: f64,
    pub window: String,
    pub convergence_estimate: f64,
    /// reserved column: timings are reported in the run manifest so that
    /// result files stay byte-reproducible
    pub runtime_ms: u64,
}

impl InvariantReport {
    pub fn new(name: impl Into<String>, value: f64, imag_residual: f64, window: String) -> Self {
        Self {
            name: name.into(),
            value,
            imag_residual,
            window,
            convergence_estimate: 0.0,
            runtime_ms: 0,
        }
    }

    pub fn with_convergence(mut self, estimate: f64) -> Self {
        assert!(estimate >= 0.0);
        self.convergence_estimate = estimate;
        self
    }

    pub fn csv_header() -> &'static str {
        "name,value,imag_residual,window,convergence_estimate,runtime_ms"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.name,
            fmt_sig12(self.value),
            fmt_sig12(self.imag_residual),
            self.window,
            fmt_sig12(self.convergence_estimate),
            self.runtime_ms
        )
    }
}

/// A named table ready for CSV serialization; all cells pre-rendered.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.header.len(), "row width mismatch");
        self.rows.push(cells);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// 12 significant digits in scientific notation; the only float formatter
/// used in result files.
pub fn fmt_sig12(x: f64) -> String {
    if x == 0.0 {
        // normalize the sign of zero
        return format!("{:.11e}", 0.0f64);
    }
    format!("{x:.11e}")
}

pub fn fmt_int(x: i64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_is_stable() {
        assert_eq!(fmt_sig12(1.0), "1.00000000000e0");
        assert_eq!(fmt_sig12(-0.0), "0.00000000000e0");
        assert_eq!(fmt_sig12(2.0 / 3.0), "6.66666666667e-1");
        assert_eq!(fmt_sig12(-1234.5), "-1.23450000000e3");
    }

    #[test]
    fn csv_round_shape() {
        let mut t = Table::new("demo", &["a", "b"]);
        t.push_row(vec!["1".into(), fmt_sig12(0.5)]);
        let csv = t.to_csv();
        assert_eq!(csv, "a,b\n1,5.00000000000e-1\n");
    }
}
