//! Tab-delimited report tables and the key-value metrics file.

use std::fmt::Write as _;

use elm_ctr::{MetricReport, TimingReport};

/// Metric rows labelled by split and threshold mode.
pub fn metric_table(rows: &[(String, MetricReport)]) -> String {
    let mut out = String::from("[metrics]\nsplit");
    for c in MetricReport::COLUMNS {
        out.push('\t');
        out.push_str(c);
    }
    out.push('\n');
    for (name, m) in rows {
        out.push_str(name);
        for v in m.values() {
            out.push('\t');
            out.push_str(&v);
        }
        out.push('\n');
    }
    out
}

pub const TIMING_COLUMNS: [&str; 5] = ["batches", "batch_seconds", "total_seconds", "instances", "instances_per_second"];

pub fn timing_values(t: &TimingReport) -> [String; 5] {
    [
        t.batches().to_string(),
        format!("{:.6}", t.mean_batch_seconds()),
        format!("{:.3}", t.total_seconds),
        t.instances.to_string(),
        format!("{:.1}", t.instances_per_second()),
    ]
}

pub fn timing_table(t: &TimingReport) -> String {
    format!("[timing]\n{}\n{}\n", TIMING_COLUMNS.join("\t"), timing_values(t).join("\t"))
}

/// Builder for the `key = value` metrics file.
#[derive(Debug, Default)]
pub struct KeyValues {
    text: String,
}

impl KeyValues {
    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key} = {value}");
    }

    pub fn push_raw(&mut self, lines: &str) {
        self.text.push_str(lines);
    }

    pub fn timing(&mut self, t: &TimingReport) {
        self.push("timing.batches", t.batches());
        self.push("timing.batch_seconds", t.mean_batch_seconds());
        self.push("timing.total_seconds", t.total_seconds);
        self.push("timing.instances", t.instances);
        self.push("timing.instances_per_second", t.instances_per_second());
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shape() {
        let m = MetricReport::compute(&[0.9, 0.2, 0.6], &[1, 0, 0], 0.5).unwrap();
        let t = metric_table(&[("validation".into(), m)]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "[metrics]");
        assert_eq!(lines[1].split('\t').count(), 9);
        assert!(lines[2].starts_with("validation\t"));
        assert_eq!(lines[2].split('\t').nth(2).unwrap(), "1.00000");
    }

    #[test]
    fn key_values() {
        let mut kv = KeyValues::default();
        kv.push("seed", 3);
        kv.timing(&TimingReport::default());
        let s = kv.into_string();
        assert!(s.starts_with("seed = 3\n"));
        assert!(s.contains("timing.batches = 0\n"));
    }
}
