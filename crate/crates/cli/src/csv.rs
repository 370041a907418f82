//! Minimal CSV table with `#` metadata lines.

use std::fmt::Write as _;

pub struct Table {
    meta: Vec<(String, String)>,
    columns: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: &str, columns: &'static [&'static str]) -> Self {
        Self { meta: vec![("schema".into(), schema.into())], columns, rows: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.into(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }
}

/// Shortest round-trip form, switching to exponent notation away from 1.
pub fn num(x: f64) -> String {
    if x == 0.0 || (1e-3..1e6).contains(&x.abs()) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(12.5), "12.5");
        assert_eq!(num(2.5e-7), "2.5e-7");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(opt(None), "");
        assert_eq!("2.5e-7".parse::<f64>().unwrap(), 2.5e-7);
    }

    #[test]
    fn render_layout() {
        let mut t = Table::new("demo/1", &["a", "b"]);
        t.meta("seed", 3);
        t.push(vec!["1".into(), "x".into()]);
        assert_eq!(t.render(), "# schema: demo/1\n# seed: 3\na,b\n1,x\n");
    }
}
