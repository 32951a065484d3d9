//! Sensitivity metrics over a sample pair.
//!
//! Every metric compares conditional dividends between the two members of a
//! pair: one modality is frozen at a fixed coalition while the other is
//! Möbius-transformed over its full player set. A metric is the squared
//! dividend difference divided by the mean squared dividend of the games
//! involved (the normalizer Z), so it is invariant under positive rescaling of
//! the oracle.

use std::collections::HashMap;

use super::report::{Metric, SampleResult, Selector, Side};
use super::sample::{Caption, Category, Image, RegionSelector, SamplePair};
use crate::error::{Error, Result};
use crate::game::{EvalBudget, GameKey, GameOracle, Span, ValueTable};
use crate::harsanyi::{harsanyi_conditional_all, CompensatedSum, DividendTable, Frozen};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MetricConfig {
    /// Whether the empty coalition enters the normalizer's average.
    pub include_empty_in_normalizer: bool,
    pub budget: EvalBudget,
}

/// Which group of metrics to compute for a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagnosisSide {
    Text,
    Image,
    CrossModal,
}

/// Lazily evaluated value and dividend tables for one sample.
pub struct SampleDiagnostics<'a> {
    sample: &'a SamplePair,
    oracle: &'a dyn GameOracle,
    config: MetricConfig,
    tables: HashMap<GameKey, ValueTable>,
    dividends: HashMap<(GameKey, Frozen), DividendTable>,
}

impl<'a> SampleDiagnostics<'a> {
    pub fn new(sample: &'a SamplePair, oracle: &'a dyn GameOracle, config: MetricConfig) -> Self {
        Self {
            sample,
            oracle,
            config,
            tables: HashMap::new(),
            dividends: HashMap::new(),
        }
    }

    /// Oracle calls issued so far for this sample.
    pub fn evaluations(&self) -> u64 {
        self.tables.values().map(ValueTable::evaluations).sum()
    }

    fn table(&mut self, image: &Image, caption: &Caption) -> &mut ValueTable {
        let key = self.sample.game_key(image, caption);
        self.tables
            .entry(key.clone())
            .or_insert_with(|| ValueTable::new(key, image.players.size(), caption.players.size()))
    }

    fn conditional(&mut self, image: &Image, caption: &Caption, frozen: Frozen) -> Result<&DividendTable> {
        let key = self.sample.game_key(image, caption);
        if !self.dividends.contains_key(&(key.clone(), frozen)) {
            let (oracle, budget) = (self.oracle, self.config.budget);
            let (images, texts, base) = match frozen {
                Frozen::Image(c) => (
                    Span::Point(c),
                    Span::Sublattice(caption.players.full()),
                    caption.players.full(),
                ),
                Frozen::Text(c) => (
                    Span::Sublattice(image.players.full()),
                    Span::Point(c),
                    image.players.full(),
                ),
            };
            let table = self.table(image, caption);
            table.fill(oracle, images, texts, budget)?;
            let w = harsanyi_conditional_all(table, frozen, base)?;
            self.dividends.insert((key.clone(), frozen), w);
        }
        Ok(&self.dividends[&(key, frozen)])
    }

    fn value(&mut self, image: &Image, caption: &Caption) -> Result<f64> {
        let (oracle, budget) = (self.oracle, self.config.budget);
        let (full_i, full_t) = (image.players.full(), caption.players.full());
        let table = self.table(image, caption);
        table.fill(oracle, Span::Point(full_i), Span::Point(full_t), budget)?;
        table.value(full_i, full_t)
    }

    /// Mean squared dividend over the lattice, the inner expectation of Z.
    fn mean_square(&mut self, image: &Image, caption: &Caption, frozen: Frozen) -> Result<f64> {
        let include_empty = self.config.include_empty_in_normalizer;
        let w = self.conditional(image, caption, frozen)?;
        let mut acc = CompensatedSum::default();
        let mut n = 0usize;
        for (c, d) in w.iter() {
            if c.is_empty() && !include_empty {
                continue;
            }
            acc.add(d * d);
            n += 1;
        }
        Ok(if n == 0 { 0.0 } else { acc.total() / n as f64 })
    }

    fn normalized(&self, metric: Metric, diff: f64, z: f64) -> Result<f64> {
        if z == 0.0 || !z.is_finite() {
            return Err(Error::DegenerateNormalizer {
                sample: self.sample.sample_id.clone(),
                metric: metric.name(),
            });
        }
        Ok(diff * diff / z)
    }

    fn dividend_of(w: &DividendTable, target: crate::coalition::Coalition) -> Result<f64> {
        w.get(target).ok_or(Error::IncompleteTable {
            image: 0,
            text: target.bits(),
        })
    }

    /// Y^T_c: w(N^{I1}, S^{T1}_c) − w(N^{I1}, S^{T2}_c).
    fn text_difference(&mut self, category: Category) -> Result<f64> {
        let s = self.sample;
        let s1 = s.text_category(&s.caption_1, "caption_1", category)?;
        let s2 = s.text_category(&s.caption_2, "caption_2", category)?;
        let frozen = Frozen::Image(s.image_1.players.full());
        let w1 = Self::dividend_of(self.conditional(&s.image_1, &s.caption_1, frozen)?, s1)?;
        let w2 = Self::dividend_of(self.conditional(&s.image_1, &s.caption_2, frozen)?, s2)?;
        Ok(w1 - w2)
    }

    /// Y^I_r: w(S^{I1}_r, N^{T1}) − w(S^{I2}_r, N^{T1}).
    fn image_difference(&mut self, region: RegionSelector) -> Result<f64> {
        let s = self.sample;
        let image_2 = s.require_image_2()?;
        let r1 = s.region(&s.image_1, "image_1", region)?;
        let r2 = s.region(image_2, "image_2", region)?;
        let frozen = Frozen::Text(s.caption_1.players.full());
        let w1 = Self::dividend_of(self.conditional(&s.image_1, &s.caption_1, frozen)?, r1)?;
        let w2 = Self::dividend_of(self.conditional(image_2, &s.caption_1, frozen)?, r2)?;
        Ok(w1 - w2)
    }

    fn text_normalizer(&mut self) -> Result<f64> {
        let s = self.sample;
        let frozen = Frozen::Image(s.image_1.players.full());
        let a = self.mean_square(&s.image_1, &s.caption_1, frozen)?;
        let b = self.mean_square(&s.image_1, &s.caption_2, frozen)?;
        Ok((a + b) / 2.0)
    }

    fn image_normalizer(&mut self) -> Result<f64> {
        let s = self.sample;
        let image_2 = s.require_image_2()?;
        let frozen = Frozen::Text(s.caption_1.players.full());
        let a = self.mean_square(&s.image_1, &s.caption_1, frozen)?;
        let b = self.mean_square(image_2, &s.caption_1, frozen)?;
        Ok((a + b) / 2.0)
    }

    /// Q_c for a text category (image fully visible).
    pub fn q(&mut self, category: Category) -> Result<f64> {
        let diff = self.text_difference(category)?;
        let z = self.text_normalizer()?;
        self.normalized(Metric::Text(category), diff, z)
    }

    /// D_r for an image region selection (caption fully visible).
    pub fn d(&mut self, region: RegionSelector) -> Result<f64> {
        let diff = self.image_difference(region)?;
        let z = self.image_normalizer()?;
        self.normalized(Metric::Image(region), diff, z)
    }

    /// Q_{T:compound -> I:region}: the compound text dividend change with only
    /// `region` of image 1 visible.
    pub fn crossmodal_q(&mut self, region: RegionSelector) -> Result<f64> {
        let s = self.sample;
        let compound = s.aspect.compound();
        let c1 = s.text_category(&s.caption_1, "caption_1", compound)?;
        let c2 = s.text_category(&s.caption_2, "caption_2", compound)?;
        let mut family = Vec::with_capacity(RegionSelector::ALL.len());
        for sel in RegionSelector::ALL {
            family.push((sel, s.region(&s.image_1, "image_1", sel)?));
        }
        let fixed = family
            .iter()
            .find(|(sel, _)| *sel == region)
            .expect("selector in family")
            .1;

        let frozen = Frozen::Image(fixed);
        let w1 = Self::dividend_of(self.conditional(&s.image_1, &s.caption_1, frozen)?, c1)?;
        let w2 = Self::dividend_of(self.conditional(&s.image_1, &s.caption_2, frozen)?, c2)?;

        let mut z = 0.0;
        for caption in [&s.caption_1, &s.caption_2] {
            for &(_, f) in &family {
                z += self.mean_square(&s.image_1, caption, Frozen::Image(f))?;
            }
        }
        z /= (2 * family.len()) as f64;
        self.normalized(Metric::CrossText { compound, region }, w1 - w2, z)
    }

    /// D_{I:O1&O2 -> T:category}: the object-pair image dividend change with only
    /// `category` of caption 1 visible.
    pub fn crossmodal_d(&mut self, category: Category) -> Result<f64> {
        let s = self.sample;
        let image_2 = s.require_image_2()?;
        let r1 = s.region(&s.image_1, "image_1", RegionSelector::Both)?;
        let r2 = s.region(image_2, "image_2", RegionSelector::Both)?;
        let mut family = Vec::with_capacity(3);
        for cat in s.aspect.text_family() {
            family.push((cat, s.text_category(&s.caption_1, "caption_1", cat)?));
        }
        let fixed = match family.iter().find(|(c, _)| *c == category) {
            Some(&(_, f)) => f,
            None => s.text_category(&s.caption_1, "caption_1", category)?,
        };

        let frozen = Frozen::Text(fixed);
        let w1 = Self::dividend_of(self.conditional(&s.image_1, &s.caption_1, frozen)?, r1)?;
        let w2 = Self::dividend_of(self.conditional(image_2, &s.caption_1, frozen)?, r2)?;

        let mut z = 0.0;
        for image in [&s.image_1, image_2] {
            for &(_, f) in &family {
                z += self.mean_square(image, &s.caption_1, Frozen::Text(f))?;
            }
        }
        z /= (2 * family.len()) as f64;
        self.normalized(Metric::CrossImage(category), w1 - w2, z)
    }

    /// X^T = v(N^{I1}, N^{T1}) − v(N^{I1}, N^{T2}); X^I = v(N^{I1}, N^{T1}) − v(N^{I2}, N^{T1}).
    pub fn reward_difference(&mut self, side: Side) -> Result<f64> {
        let s = self.sample;
        let base = self.value(&s.image_1, &s.caption_1)?;
        let other = match side {
            Side::Text => self.value(&s.image_1, &s.caption_2)?,
            Side::Image => self.value(s.require_image_2()?, &s.caption_1)?,
        };
        Ok(base - other)
    }

    /// Y for a selector: the unsquared, unnormalized dividend difference.
    pub fn interaction_difference(&mut self, selector: Selector) -> Result<f64> {
        match selector {
            Selector::Text(c) => self.text_difference(c),
            Selector::Image(r) => self.image_difference(r),
        }
    }

    /// All metrics of one side, plus the matching reward and interaction differences.
    pub fn diagnose(&mut self, side: DiagnosisSide) -> Result<SampleResult> {
        let s = self.sample;
        let mut out = SampleResult::new(&s.sample_id, s.aspect);
        match side {
            DiagnosisSide::Text => {
                for cat in s.aspect.text_family() {
                    out.metrics.insert(Metric::Text(cat), self.q(cat)?);
                    out.interaction_differences
                        .insert(Selector::Text(cat), self.text_difference(cat)?);
                }
                out.reward_differences
                    .insert(Side::Text, self.reward_difference(Side::Text)?);
            }
            DiagnosisSide::Image => {
                for r in RegionSelector::ALL {
                    out.metrics.insert(Metric::Image(r), self.d(r)?);
                    out.interaction_differences
                        .insert(Selector::Image(r), self.image_difference(r)?);
                }
                out.reward_differences
                    .insert(Side::Image, self.reward_difference(Side::Image)?);
            }
            DiagnosisSide::CrossModal => {
                let compound = s.aspect.compound();
                for r in RegionSelector::ALL {
                    out.metrics
                        .insert(Metric::CrossText { compound, region: r }, self.crossmodal_q(r)?);
                }
                for cat in s.aspect.text_family() {
                    out.metrics.insert(Metric::CrossImage(cat), self.crossmodal_d(cat)?);
                }
            }
        }
        Ok(out)
    }
}

pub fn q_sensitivity(
    sample: &SamplePair,
    category: Category,
    oracle: &dyn GameOracle,
    config: MetricConfig,
) -> Result<f64> {
    SampleDiagnostics::new(sample, oracle, config).q(category)
}

pub fn d_sensitivity(
    sample: &SamplePair,
    region: RegionSelector,
    oracle: &dyn GameOracle,
    config: MetricConfig,
) -> Result<f64> {
    SampleDiagnostics::new(sample, oracle, config).d(region)
}

pub fn crossmodal_q(
    sample: &SamplePair,
    region: RegionSelector,
    oracle: &dyn GameOracle,
    config: MetricConfig,
) -> Result<f64> {
    SampleDiagnostics::new(sample, oracle, config).crossmodal_q(region)
}

pub fn crossmodal_d(
    sample: &SamplePair,
    category: Category,
    oracle: &dyn GameOracle,
    config: MetricConfig,
) -> Result<f64> {
    SampleDiagnostics::new(sample, oracle, config).crossmodal_d(category)
}

pub fn reward_difference(sample: &SamplePair, side: Side, oracle: &dyn GameOracle) -> Result<f64> {
    SampleDiagnostics::new(sample, oracle, MetricConfig::default()).reward_difference(side)
}

pub fn interaction_difference(
    sample: &SamplePair,
    selector: Selector,
    oracle: &dyn GameOracle,
    config: MetricConfig,
) -> Result<f64> {
    SampleDiagnostics::new(sample, oracle, config).interaction_difference(selector)
}
