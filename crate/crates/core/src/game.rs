//! The game-oracle contract and the memoized value table.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use dashmap::DashMap;

use crate::coalition::Coalition;
use crate::error::{Error, Result};

/// Identifies one two-player-set game: an image paired with a caption inside a sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GameKey {
    pub sample_id: Arc<str>,
    pub image_id: Arc<str>,
    pub caption_id: Arc<str>,
}

impl GameKey {
    pub fn new(sample_id: &str, image_id: &str, caption_id: &str) -> Self {
        Self {
            sample_id: sample_id.into(),
            image_id: image_id.into(),
            caption_id: caption_id.into(),
        }
    }
}

impl fmt::Display for GameKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}|{}]", self.sample_id, self.image_id, self.caption_id)
    }
}

/// The argument of v: which image regions and which caption players are visible.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BimodalContext {
    pub game: GameKey,
    pub image: Coalition,
    pub text: Coalition,
}

impl BimodalContext {
    pub fn new(game: GameKey, image: Coalition, text: Coalition) -> Self {
        Self { game, image, text }
    }
}

impl fmt::Display for BimodalContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} image={} text={}", self.game, self.image, self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OracleMetadata {
    pub name: String,
    pub version: String,
    /// Free-form provenance, e.g. the masking mode declared by a remote server.
    pub extra: BTreeMap<String, String>,
}

impl OracleMetadata {
    pub fn new(name: impl Into<String>, version: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            version: version.into(),
            extra: BTreeMap::new(),
        }
    }
}

/// A scoring model viewed as a cooperative game.
///
/// Implementations must be pure per context: the same context returns a
/// bit-identical score within a run. Masked players are the oracle's business.
pub trait GameOracle: Send + Sync {
    fn metadata(&self) -> OracleMetadata;

    fn evaluate(&self, ctx: &BimodalContext) -> Result<f64>;

    fn evaluate_batch(&self, ctxs: &[BimodalContext]) -> Result<Vec<f64>> {
        ctxs.iter().map(|c| self.evaluate(c)).collect()
    }
}

impl<T: GameOracle + ?Sized> GameOracle for &T {
    fn metadata(&self) -> OracleMetadata {
        (**self).metadata()
    }
    fn evaluate(&self, ctx: &BimodalContext) -> Result<f64> {
        (**self).evaluate(ctx)
    }
    fn evaluate_batch(&self, ctxs: &[BimodalContext]) -> Result<Vec<f64>> {
        (**self).evaluate_batch(ctxs)
    }
}

impl<T: GameOracle + ?Sized> GameOracle for Box<T> {
    fn metadata(&self) -> OracleMetadata {
        (**self).metadata()
    }
    fn evaluate(&self, ctx: &BimodalContext) -> Result<f64> {
        (**self).evaluate(ctx)
    }
    fn evaluate_batch(&self, ctxs: &[BimodalContext]) -> Result<Vec<f64>> {
        (**self).evaluate_batch(ctxs)
    }
}

impl<T: GameOracle + ?Sized> GameOracle for Arc<T> {
    fn metadata(&self) -> OracleMetadata {
        (**self).metadata()
    }
    fn evaluate(&self, ctx: &BimodalContext) -> Result<f64> {
        (**self).evaluate(ctx)
    }
    fn evaluate_batch(&self, ctxs: &[BimodalContext]) -> Result<Vec<f64>> {
        (**self).evaluate_batch(ctxs)
    }
}

/// In-memory memoization in front of any oracle, shared across value tables.
///
/// Concurrent inserts of the same key are idempotent. In validation mode every
/// cache hit is re-evaluated and must reproduce the stored score bit for bit.
pub struct CachingOracle<O> {
    inner: O,
    cache: DashMap<BimodalContext, f64>,
    calls: AtomicU64,
    hits: AtomicU64,
    validate: bool,
}

impl<O: GameOracle> CachingOracle<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            cache: DashMap::new(),
            calls: AtomicU64::new(0),
            hits: AtomicU64::new(0),
            validate: false,
        }
    }

    pub fn validating(mut self) -> Self {
        self.validate = true;
        self
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    /// Number of evaluations forwarded to the wrapped oracle.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.cache.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cache.is_empty()
    }

    fn check_hit(&self, ctx: &BimodalContext, stored: f64) -> Result<f64> {
        self.hits.fetch_add(1, Ordering::Relaxed);
        if self.validate {
            self.calls.fetch_add(1, Ordering::Relaxed);
            let fresh = self.inner.evaluate(ctx)?;
            if fresh.to_bits() != stored.to_bits() {
                return Err(Error::oracle(
                    ctx,
                    format!("non-deterministic oracle: cached {stored}, re-evaluated {fresh}"),
                ));
            }
        }
        Ok(stored)
    }
}

impl<O: GameOracle> GameOracle for CachingOracle<O> {
    fn metadata(&self) -> OracleMetadata {
        self.inner.metadata()
    }

    fn evaluate(&self, ctx: &BimodalContext) -> Result<f64> {
        if let Some(v) = self.cache.get(ctx).map(|e| *e) {
            return self.check_hit(ctx, v);
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        let v = self.inner.evaluate(ctx)?;
        self.cache.entry(ctx.clone()).or_insert(v);
        Ok(v)
    }

    fn evaluate_batch(&self, ctxs: &[BimodalContext]) -> Result<Vec<f64>> {
        let mut out = vec![f64::NAN; ctxs.len()];
        let mut missing = Vec::new();
        for (i, ctx) in ctxs.iter().enumerate() {
            match self.cache.get(ctx).map(|e| *e) {
                Some(v) => out[i] = self.check_hit(ctx, v)?,
                None => missing.push(i),
            }
        }
        if !missing.is_empty() {
            let batch: Vec<BimodalContext> = missing.iter().map(|&i| ctxs[i].clone()).collect();
            self.calls.fetch_add(batch.len() as u64, Ordering::Relaxed);
            let scores = self.inner.evaluate_batch(&batch)?;
            for (ctx, (&i, v)) in batch.into_iter().zip(missing.iter().zip(scores)) {
                self.cache.entry(ctx).or_insert(v);
                out[i] = v;
            }
        }
        Ok(out)
    }
}

/// Which coalitions of one modality a fill covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Span {
    /// Every subset of the base coalition.
    Sublattice(Coalition),
    /// Exactly one coalition.
    Point(Coalition),
}

impl Span {
    pub fn coalitions(self) -> Vec<Coalition> {
        match self {
            Span::Sublattice(base) => base.subsets().collect(),
            Span::Point(c) => vec![c],
        }
    }

    /// log2 of the number of coalitions covered.
    pub fn exponent(self) -> u32 {
        match self {
            Span::Sublattice(base) => base.len() as u32,
            Span::Point(_) => 0,
        }
    }

    fn covers(self, c: Coalition) -> bool {
        match self {
            Span::Sublattice(base) => c.is_subset_of(base),
            Span::Point(p) => p == c,
        }
    }
}

/// Upper bound on oracle calls per fill, as a power of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalBudget {
    pub exponent: u32,
}

impl EvalBudget {
    pub const DEFAULT_EXPONENT: u32 = 20;

    pub fn new(exponent: u32) -> Self {
        Self { exponent }
    }

    pub fn check(self, exponent: u32) -> Result<()> {
        if exponent > self.exponent {
            return Err(Error::BudgetExceeded {
                exponent,
                budget: self.exponent,
            });
        }
        Ok(())
    }
}

impl Default for EvalBudget {
    fn default() -> Self {
        Self::new(Self::DEFAULT_EXPONENT)
    }
}

/// Evaluated values v(image, text) of one game.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    game: GameKey,
    image_width: usize,
    text_width: usize,
    entries: HashMap<(u32, u32), f64>,
    filled: Vec<(Span, Span)>,
    evaluations: u64,
}

impl ValueTable {
    pub fn new(game: GameKey, image_width: usize, text_width: usize) -> Self {
        Self {
            game,
            image_width,
            text_width,
            entries: HashMap::new(),
            filled: Vec::new(),
            evaluations: 0,
        }
    }

    pub fn game(&self) -> &GameKey {
        &self.game
    }

    pub fn image_width(&self) -> usize {
        self.image_width
    }

    pub fn text_width(&self) -> usize {
        self.text_width
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Oracle calls issued by fills of this table so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn get(&self, image: Coalition, text: Coalition) -> Option<f64> {
        self.entries.get(&(image.bits(), text.bits())).copied()
    }

    pub fn value(&self, image: Coalition, text: Coalition) -> Result<f64> {
        self.get(image, text).ok_or(Error::IncompleteTable {
            image: image.bits(),
            text: text.bits(),
        })
    }

    /// Stores a value directly; non-finite values are rejected.
    pub fn insert(&mut self, image: Coalition, text: Coalition, value: f64) -> Result<()> {
        if !value.is_finite() {
            let ctx = BimodalContext::new(self.game.clone(), image, text);
            return Err(Error::oracle(&ctx, format!("non-finite score {value}")));
        }
        self.entries.insert((image.bits(), text.bits()), value);
        Ok(())
    }

    /// Whether every v over `images x texts` is present.
    pub fn is_complete(&self, images: Span, texts: Span) -> bool {
        let flagged = self.filled.iter().any(|&(fi, ft)| {
            let img_ok = images.coalitions().iter().all(|&c| fi.covers(c));
            img_ok && texts.coalitions().iter().all(|&c| ft.covers(c))
        });
        flagged
            || images.coalitions().iter().all(|&i| {
                texts
                    .coalitions()
                    .iter()
                    .all(|&t| self.entries.contains_key(&(i.bits(), t.bits())))
            })
    }

    /// Evaluates every missing v over `images x texts` and marks the region complete.
    ///
    /// Returns the number of oracle calls issued.
    pub fn fill(&mut self, oracle: &dyn GameOracle, images: Span, texts: Span, budget: EvalBudget) -> Result<u64> {
        budget.check(images.exponent() + texts.exponent())?;
        let mut pending = Vec::new();
        for i in images.coalitions() {
            for t in texts.coalitions() {
                if !self.entries.contains_key(&(i.bits(), t.bits())) {
                    pending.push(BimodalContext::new(self.game.clone(), i, t));
                }
            }
        }
        if !pending.is_empty() {
            let scores = oracle.evaluate_batch(&pending)?;
            if scores.len() != pending.len() {
                return Err(Error::oracle(
                    &pending[0],
                    format!("batch returned {} scores for {} contexts", scores.len(), pending.len()),
                ));
            }
            for (ctx, v) in pending.iter().zip(scores) {
                if !v.is_finite() {
                    return Err(Error::oracle(ctx, format!("non-finite score {v}")));
                }
                self.entries.insert((ctx.image.bits(), ctx.text.bits()), v);
            }
        }
        let issued = pending.len() as u64;
        self.evaluations += issued;
        self.filled.push((images, texts));
        Ok(issued)
    }
}

/// Materializes v over the full cross product of both sub-lattices.
pub fn fill_value_table(
    oracle: &dyn GameOracle,
    game: GameKey,
    image_base: Coalition,
    text_base: Coalition,
    budget: EvalBudget,
) -> Result<ValueTable> {
    let mut table = ValueTable::new(game, image_base.width(), text_base.width());
    table.fill(
        oracle,
        Span::Sublattice(image_base),
        Span::Sublattice(text_base),
        budget,
    )?;
    Ok(table)
}
