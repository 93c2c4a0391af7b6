//! Metrics files shared by `evaluate`, `cross-eval` and `report`.

use std::fmt::Write as _;

use metacom::eval::Metrics;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub target: String,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub title: String,
    pub rows: Vec<MetricsRow>,
}

impl MetricsReport {
    /// One row per class with precision, recall and F-beta.
    pub fn render(&self) -> String {
        let beta = self.rows.first().map_or(0.5, |r| r.metrics.beta);
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.title);
        let _ = writeln!(s, "{:<12} {:>9} {:>9} {:>9} {:>7}", "class", "precision", "recall", format!("F{beta}"), "n");
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(s, "{:<12} {:>9.3} {:>9.3} {:>9.3} {:>7}", r.target, m.precision, m.recall, m.f_beta, m.n());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_has_a_line_per_class() {
        let r = MetricsReport {
            title: "svm".into(),
            rows: vec![
                MetricsRow { target: "Meta".into(), metrics: Metrics::from_counts(3, 1, 1, 5, 0.5) },
                MetricsRow { target: "Media".into(), metrics: Metrics::from_counts(0, 0, 2, 8, 0.5) },
            ],
        };
        let text = r.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].contains("F0.5"));
        assert!(lines[2].starts_with("Meta") && lines[2].contains("0.750"));
        assert!(lines[3].ends_with("10"));
    }
}
