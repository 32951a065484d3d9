use std::collections::BTreeMap;
use std::fmt;

use super::pearson::pearson;
use super::sample::{Aspect, Category, RegionSelector};
use crate::error::{Error, Result};
use crate::harsanyi::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Text,
    Image,
}

/// A coalition family whose dividend differences are correlated with reward differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Selector {
    Text(Category),
    Image(RegionSelector),
}

impl Selector {
    pub fn side(self) -> Side {
        match self {
            Selector::Text(_) => Side::Text,
            Selector::Image(_) => Side::Image,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Selector::Text(c) => c.label(),
            Selector::Image(r) => r.label(),
        }
    }
}

/// Metric families; the argmax is taken within one family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Text,
    Image,
    CrossText,
    CrossImage,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Text => "text",
            Family::Image => "image",
            Family::CrossText => "crossmodal-text",
            Family::CrossImage => "crossmodal-image",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    /// Q_c: text sensitivity with the image unmasked.
    Text(Category),
    /// D_r: image sensitivity with the caption unmasked.
    Image(RegionSelector),
    /// Q_{T:c -> I:r}: the compound text dividend change seen through image regions r.
    CrossText { compound: Category, region: RegionSelector },
    /// D_{I:O1&O2 -> T:c}: the object-pair image dividend change seen through caption players c.
    CrossImage(Category),
}

impl Metric {
    pub fn family(self) -> Family {
        match self {
            Metric::Text(_) => Family::Text,
            Metric::Image(_) => Family::Image,
            Metric::CrossText { .. } => Family::CrossText,
            Metric::CrossImage(_) => Family::CrossImage,
        }
    }

    /// The varying part of the metric, e.g. "R&O" for Q_R&O.
    pub fn label(self) -> &'static str {
        match self {
            Metric::Text(c) | Metric::CrossImage(c) => c.label(),
            Metric::Image(r) | Metric::CrossText { region: r, .. } => r.label(),
        }
    }

    pub fn name(self) -> String {
        match self {
            Metric::Text(c) => format!("Q_{}", c.label()),
            Metric::Image(r) => format!("D_{}", r.label()),
            Metric::CrossText { compound, region } => {
                format!("Q_T:{}->I:{}", compound.label(), region.label())
            }
            Metric::CrossImage(c) => format!("D_I:O1&O2->T:{}", c.label()),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Everything computed for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult {
    pub sample_id: String,
    pub aspect: Aspect,
    pub metrics: BTreeMap<Metric, f64>,
    /// X^T / X^I.
    pub reward_differences: BTreeMap<Side, f64>,
    /// Y^T_c / Y^I_r.
    pub interaction_differences: BTreeMap<Selector, f64>,
}

impl SampleResult {
    pub fn new(sample_id: impl Into<String>, aspect: Aspect) -> Self {
        Self {
            sample_id: sample_id.into(),
            aspect,
            metrics: BTreeMap::new(),
            reward_differences: BTreeMap::new(),
            interaction_differences: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanValue {
    pub mean: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correlation {
    Value { rho: f64, n: usize },
    ZeroVariance { n: usize },
}

impl Correlation {
    pub fn rho(self) -> Option<f64> {
        match self {
            Correlation::Value { rho, .. } => Some(rho),
            Correlation::ZeroVariance { .. } => None,
        }
    }

    pub fn n(self) -> usize {
        match self {
            Correlation::Value { n, .. } | Correlation::ZeroVariance { n } => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub aspect: Aspect,
    /// Per-sample results, sorted by sample id.
    pub samples: Vec<SampleResult>,
    pub means: BTreeMap<Metric, MeanValue>,
    pub argmax: BTreeMap<Family, Metric>,
    pub correlations: BTreeMap<Selector, Correlation>,
}

/// Dataset means, per-family argmax and Pearson coefficients.
///
/// Reductions run in sample-id order, so the result does not depend on the
/// order of `samples`.
pub fn aggregate_report(samples: &[SampleResult]) -> Result<MetricReport> {
    let first = samples.first().ok_or(Error::EmptyDataset)?;
    if let Some(other) = samples.iter().find(|s| s.aspect != first.aspect) {
        return Err(Error::InconsistentAspect {
            first: first.aspect.to_string(),
            second: other.aspect.to_string(),
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));

    let mut sums: BTreeMap<Metric, (CompensatedSum, usize)> = BTreeMap::new();
    for s in &sorted {
        for (&m, &v) in &s.metrics {
            let e = sums.entry(m).or_default();
            e.0.add(v);
            e.1 += 1;
        }
    }
    let means: BTreeMap<Metric, MeanValue> = sums
        .into_iter()
        .map(|(m, (sum, n))| {
            (
                m,
                MeanValue {
                    mean: sum.total() / n as f64,
                    n,
                },
            )
        })
        .collect();

    let mut argmax: BTreeMap<Family, Metric> = BTreeMap::new();
    for (&m, mv) in &means {
        match argmax.get(&m.family()) {
            Some(best) if means[best].mean >= mv.mean => {}
            _ => {
                argmax.insert(m.family(), m);
            }
        }
    }

    let mut correlations = BTreeMap::new();
    let selectors: std::collections::BTreeSet<Selector> = sorted
        .iter()
        .flat_map(|s| s.interaction_differences.keys().copied())
        .collect();
    for sel in selectors {
        let (xs, ys): (Vec<f64>, Vec<f64>) = sorted
            .iter()
            .filter_map(|s| {
                let x = s.reward_differences.get(&sel.side())?;
                let y = s.interaction_differences.get(&sel)?;
                Some((*x, *y))
            })
            .unzip();
        if xs.len() < 2 {
            continue;
        }
        let n = xs.len();
        let c = match pearson(&xs, &ys) {
            Ok(rho) => Correlation::Value { rho, n },
            Err(Error::ZeroVariance) => Correlation::ZeroVariance { n },
            Err(e) => return Err(e),
        };
        correlations.insert(sel, c);
    }

    Ok(MetricReport {
        aspect: first.aspect,
        samples: sorted,
        means,
        argmax,
        correlations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(id: &str, values: &[(Metric, f64)]) -> SampleResult {
        let mut r = SampleResult::new(id, Aspect::Relation);
        r.metrics.extend(values.iter().copied());
        r
    }

    const RO: Metric = Metric::Text(Category::RelationObject);
    const O: Metric = Metric::Text(Category::Object);

    #[test]
    fn single_sample_means_equal_values() {
        let r = result("a", &[(RO, 0.25), (O, 0.5)]);
        let report = aggregate_report(&[r]).unwrap();
        assert_eq!(report.means[&RO].mean, 0.25);
        assert_eq!(report.means[&O].mean, 0.5);
        assert_eq!(report.argmax[&Family::Text], O);
    }

    #[test]
    fn two_sample_mean() {
        let report = aggregate_report(&[result("a", &[(RO, 0.2)]), result("b", &[(RO, 0.4)])]).unwrap();
        assert!((report.means[&RO].mean - 0.3).abs() < 1e-15);
        assert_eq!(report.means[&RO].n, 2);
    }

    #[test]
    fn empty_and_mixed_inputs_are_rejected() {
        assert!(matches!(aggregate_report(&[]), Err(Error::EmptyDataset)));
        let mut b = result("b", &[]);
        b.aspect = Aspect::Attribute;
        assert!(matches!(
            aggregate_report(&[result("a", &[]), b]),
            Err(Error::InconsistentAspect { .. })
        ));
    }

    #[test]
    fn order_independent() {
        let rs: Vec<SampleResult> = (0..7)
            .map(|i| {
                result(
                    &format!("s{i}"),
                    &[(RO, 0.1 * i as f64 + 1e-17), (O, 1.0 / (i + 1) as f64)],
                )
            })
            .collect();
        let mut rev = rs.clone();
        rev.reverse();
        assert_eq!(aggregate_report(&rs).unwrap(), aggregate_report(&rev).unwrap());
    }

    #[test]
    fn correlations_flag_zero_variance() {
        let mk = |id: &str, x: f64, y: f64| {
            let mut r = result(id, &[]);
            r.reward_differences.insert(Side::Text, x);
            r.interaction_differences.insert(Selector::Text(Category::Object), y);
            r.interaction_differences
                .insert(Selector::Text(Category::RelationObject), x);
            r
        };
        let report = aggregate_report(&[mk("a", 0.1, 0.0), mk("b", 0.3, 0.0), mk("c", -0.2, 0.0)]).unwrap();
        assert_eq!(
            report.correlations[&Selector::Text(Category::Object)],
            Correlation::ZeroVariance { n: 3 }
        );
        let rho = report.correlations[&Selector::Text(Category::RelationObject)]
            .rho()
            .unwrap();
        assert!((rho - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn metric_names() {
        assert_eq!(RO.name(), "Q_R&O");
        assert_eq!(Metric::Image(RegionSelector::Both).name(), "D_O1&O2");
        assert_eq!(
            Metric::CrossText {
                compound: Category::RelationObject,
                region: RegionSelector::Object2
            }
            .name(),
            "Q_T:R&O->I:O2"
        );
        assert_eq!(Metric::CrossImage(Category::Relation).name(), "D_I:O1&O2->T:R");
    }
}
