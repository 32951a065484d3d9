use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Correlation, MetricReport, Side};

pub const REPORT_HEADER: [&str; 7] = ["model", "dataset", "aspect", "metric", "scope", "value", "n"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub dataset: String,
    pub aspect: String,
    pub metric: String,
    /// `sample:<id>`, `aggregate`, or `aggregate:zero_variance`.
    pub scope: String,
    pub value: f64,
    pub n: usize,
}

impl ReportRow {
    fn sort_key(&self) -> (&str, &str, &str, &str, &str, u64, usize) {
        (
            &self.dataset,
            &self.aspect,
            &self.metric,
            &self.scope,
            &self.model,
            self.value.to_bits(),
            self.n,
        )
    }
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Text => "T",
        Side::Image => "I",
    }
}

/// Flattens a report into rows: per-sample values, dataset means, the argmax
/// of each metric family, reward/interaction differences and correlations.
pub fn report_rows(report: &MetricReport, model: &str, dataset: &str) -> Vec<ReportRow> {
    let aspect = report.aspect.name();
    let row = |metric: String, scope: String, value: f64, n: usize| ReportRow {
        model: model.into(),
        dataset: dataset.into(),
        aspect: aspect.into(),
        metric,
        scope,
        value,
        n,
    };
    let mut rows = Vec::new();
    for s in &report.samples {
        let scope = format!("sample:{}", s.sample_id);
        for (m, &v) in &s.metrics {
            rows.push(row(m.name(), scope.clone(), v, 1));
        }
        for (&side, &v) in &s.reward_differences {
            rows.push(row(format!("X^{}", side_name(side)), scope.clone(), v, 1));
        }
        for (sel, &v) in &s.interaction_differences {
            rows.push(row(
                format!("Y^{}_{}", side_name(sel.side()), sel.label()),
                scope.clone(),
                v,
                1,
            ));
        }
    }
    for (m, mv) in &report.means {
        rows.push(row(m.name(), "aggregate".into(), mv.mean, mv.n));
    }
    for (family, m) in &report.argmax {
        let mv = report.means[m];
        rows.push(row(
            format!("argmax_{}:{}", family.name(), m.name()),
            "aggregate".into(),
            mv.mean,
            mv.n,
        ));
    }
    for (sel, c) in &report.correlations {
        let metric = format!("rho_{}", sel.label());
        match *c {
            Correlation::Value { rho, n } => rows.push(row(metric, "aggregate".into(), rho, n)),
            Correlation::ZeroVariance { n } => rows.push(row(metric, "aggregate:zero_variance".into(), f64::NAN, n)),
        }
    }
    rows
}

/// Writes rows as CSV with a fixed header, sorted so the bytes do not depend
/// on the input order.
pub fn write_report(rows: &[ReportRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    let mut sorted: Vec<&ReportRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(REPORT_HEADER)?;
    for r in sorted {
        // shortest string that parses back to the same value, in exponent form when tiny or huge
        w.write_record([
            r.model.as_str(),
            &r.dataset,
            &r.aspect,
            &r.metric,
            &r.scope,
            &format!("{:?}", r.value),
            &r.n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
