//! Harsanyi dividends, their Shapley allocation, and the axiom checks.
//!
//! Sign convention: w(S) = sum over S' ⊆ S of (-1)^(|S| - |S'|) v(S').
//! The empty coalition's dividend is v(∅).

mod axioms;
mod shapley;

pub use axioms::{verify_axioms, verify_axioms_with, Axiom, AxiomCheck, AxiomOptions, AxiomReport};
pub use shapley::{shapley_from_dividends, ShapleyVector};

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::game::ValueTable;

/// Lattices at least this large are summed with compensation.
pub const COMPENSATED_SUM_THRESHOLD: usize = 1 << 12;

/// The modality held fixed while the other one is transformed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frozen {
    Image(Coalition),
    Text(Coalition),
}

impl Frozen {
    fn lookup(self, table: &ValueTable, varying: Coalition) -> Result<f64> {
        match self {
            Frozen::Image(img) => table.value(img, varying),
            Frozen::Text(txt) => table.value(varying, txt),
        }
    }
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(self) -> f64 {
        self.sum + self.carry
    }
}

fn alternating_sum(terms: impl Iterator<Item = Result<(bool, f64)>>, compensated: bool) -> Result<f64> {
    if compensated {
        let mut acc = CompensatedSum::default();
        for term in terms {
            let (negative, v) = term?;
            acc.add(if negative { -v } else { v });
        }
        Ok(acc.total())
    } else {
        let mut acc = 0.0;
        for term in terms {
            let (negative, v) = term?;
            if negative {
                acc -= v;
            } else {
                acc += v;
            }
        }
        Ok(acc)
    }
}

/// Dividend of `target` with the other modality frozen.
pub fn harsanyi_conditional(table: &ValueTable, frozen: Frozen, target: Coalition) -> Result<f64> {
    let size = target.len();
    let terms = target.subsets().map(|sub| {
        let negative = (size - sub.len()) % 2 == 1;
        frozen.lookup(table, sub).map(|v| (negative, v))
    });
    alternating_sum(terms, target.lattice_len() >= COMPENSATED_SUM_THRESHOLD)
}

/// Joint bimodal dividend w({S^I, S^T}): the double alternating sum over both sub-lattices.
pub fn harsanyi_joint(table: &ValueTable, s_image: Coalition, s_text: Coalition) -> Result<f64> {
    let total = s_image.len() + s_text.len();
    let terms = s_image.subsets().flat_map(|img| {
        s_text.subsets().map(move |txt| {
            let negative = (total - img.len() - txt.len()) % 2 == 1;
            table.value(img, txt).map(|v| (negative, v))
        })
    });
    alternating_sum(
        terms,
        s_image.lattice_len() * s_text.lattice_len() >= COMPENSATED_SUM_THRESHOLD,
    )
}

/// A single-modality game: one value per subset of `base`, in compressed-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeValues {
    base: Coalition,
    values: Vec<f64>,
}

impl LatticeValues {
    pub fn new(base: Coalition, values: Vec<f64>) -> Result<Self> {
        if values.len() != base.lattice_len() {
            // report the first coalition without a value
            let missing = base.expand(values.len().min(base.lattice_len() - 1));
            return Err(Error::IncompleteTable {
                image: 0,
                text: missing.bits(),
            });
        }
        Ok(Self { base, values })
    }

    pub fn from_fn(base: Coalition, mut f: impl FnMut(Coalition) -> f64) -> Self {
        let values = base.subsets().map(&mut f).collect();
        Self { base, values }
    }

    /// The slice of a bimodal table with one modality frozen.
    pub fn from_table(table: &ValueTable, frozen: Frozen, base: Coalition) -> Result<Self> {
        let values = base
            .subsets()
            .map(|sub| frozen.lookup(table, sub))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { base, values })
    }

    pub fn base(&self) -> Coalition {
        self.base
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, c: Coalition) -> Option<f64> {
        self.base.compress(c).map(|i| self.values[i])
    }

    /// v(base), the grand-coalition value.
    pub fn grand(&self) -> f64 {
        *self.values.last().expect("lattice is never empty")
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            base: self.base,
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }
}

/// In-place subset Möbius transform over compressed indices, O(k·2^k).
pub fn mobius_in_place(values: &mut [f64]) {
    assert!(values.len().is_power_of_two());
    let mut step = 1;
    while step < values.len() {
        for block in values.chunks_exact_mut(2 * step) {
            let (lo, hi) = block.split_at_mut(step);
            for (l, h) in lo.iter().zip(hi.iter_mut()) {
                *h -= *l;
            }
        }
        step *= 2;
    }
}

/// In-place subset zeta transform (sum over subsets); inverse of [`mobius_in_place`].
pub fn zeta_in_place(values: &mut [f64]) {
    assert!(values.len().is_power_of_two());
    let mut step = 1;
    while step < values.len() {
        for block in values.chunks_exact_mut(2 * step) {
            let (lo, hi) = block.split_at_mut(step);
            for (l, h) in lo.iter().zip(hi.iter_mut()) {
                *h += *l;
            }
        }
        step *= 2;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DividendMode {
    UnimodalConditional,
    JointBimodal,
}

/// Dividends for every coalition of a lattice.
///
/// Conditional tables are indexed by subsets of `base` (with `frozen` recording
/// the other modality, if any). Joint tables are indexed by pairs of subsets of
/// `base` (image) and `text_base`.
#[derive(Debug, Clone, PartialEq)]
pub struct DividendTable {
    mode: DividendMode,
    frozen: Option<Frozen>,
    base: Coalition,
    text_base: Option<Coalition>,
    values: Vec<f64>,
}

impl DividendTable {
    pub fn mode(&self) -> DividendMode {
        self.mode
    }

    pub fn frozen(&self) -> Option<Frozen> {
        self.frozen
    }

    pub fn base(&self) -> Coalition {
        self.base
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Conditional dividend of a subset of the base.
    pub fn get(&self, target: Coalition) -> Option<f64> {
        if self.mode != DividendMode::UnimodalConditional {
            return None;
        }
        self.base.compress(target).map(|i| self.values[i])
    }

    pub fn get_joint(&self, image: Coalition, text: Coalition) -> Option<f64> {
        let text_base = self.text_base?;
        let i = self.base.compress(image)?;
        let t = text_base.compress(text)?;
        Some(self.values[(i << text_base.len()) | t])
    }

    /// (coalition, dividend) pairs of a conditional table.
    pub fn iter(&self) -> impl Iterator<Item = (Coalition, f64)> + '_ {
        let base = self.base;
        self.values.iter().enumerate().map(move |(i, &w)| (base.expand(i), w))
    }
}

/// All 2^n dividends of a single-modality game via the fast Möbius transform.
pub fn harsanyi_all(game: &LatticeValues) -> DividendTable {
    let mut values = game.values.clone();
    mobius_in_place(&mut values);
    DividendTable {
        mode: DividendMode::UnimodalConditional,
        frozen: None,
        base: game.base,
        text_base: None,
        values,
    }
}

/// All conditional dividends over subsets of `base` with the other modality frozen.
pub fn harsanyi_conditional_all(table: &ValueTable, frozen: Frozen, base: Coalition) -> Result<DividendTable> {
    let slice = LatticeValues::from_table(table, frozen, base)?;
    let mut out = harsanyi_all(&slice);
    out.frozen = Some(frozen);
    Ok(out)
}

/// All joint dividends over the product of both sub-lattices.
pub fn harsanyi_joint_all(table: &ValueTable, image_base: Coalition, text_base: Coalition) -> Result<DividendTable> {
    let kt = text_base.len();
    let mut values = Vec::with_capacity(image_base.lattice_len() << kt);
    for img in image_base.subsets() {
        for txt in text_base.subsets() {
            values.push(table.value(img, txt)?);
        }
    }
    mobius_in_place(&mut values);
    Ok(DividendTable {
        mode: DividendMode::JointBimodal,
        frozen: None,
        base: image_base,
        text_base: Some(text_base),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{fill_value_table, BimodalContext, EvalBudget, GameKey, GameOracle, OracleMetadata};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct FnOracle<F>(F);

    impl<F: Fn(Coalition, Coalition) -> f64 + Send + Sync> GameOracle for FnOracle<F> {
        fn metadata(&self) -> OracleMetadata {
            OracleMetadata::new("fn", "0")
        }
        fn evaluate(&self, ctx: &BimodalContext) -> Result<f64> {
            Ok((self.0)(ctx.image, ctx.text))
        }
    }

    fn key() -> GameKey {
        GameKey::new("s", "i", "t")
    }

    // Naive alternating sum straight from the definition, independent of the crate's paths.
    fn naive_dividend(v: &dyn Fn(u32) -> f64, target: u32) -> f64 {
        let mut acc = 0.0;
        for sub in 0..=target {
            if sub & !target != 0 {
                continue;
            }
            let sign = if (target.count_ones() - sub.count_ones()).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            acc += sign * v(sub);
        }
        acc
    }

    #[test]
    fn empty_target_returns_base_value() {
        let oracle = FnOracle(|i: Coalition, t: Coalition| 0.25 + i.bits() as f64 + 3.0 * t.bits() as f64);
        let table = fill_value_table(
            &oracle,
            key(),
            Coalition::full(2),
            Coalition::full(3),
            EvalBudget::default(),
        )
        .unwrap();
        let fixed = Coalition::full(2);
        let w = harsanyi_conditional(&table, Frozen::Image(fixed), Coalition::empty(3)).unwrap();
        assert_eq!(w, table.value(fixed, Coalition::empty(3)).unwrap());
    }

    #[test]
    fn singleton_dividend_is_marginal() {
        let oracle = FnOracle(|i: Coalition, t: Coalition| (i.bits() * 7 + t.bits() * t.bits()) as f64 / 9.0);
        let table = fill_value_table(
            &oracle,
            key(),
            Coalition::full(2),
            Coalition::full(3),
            EvalBudget::default(),
        )
        .unwrap();
        let fixed = Coalition::from_bits(2, 0b01).unwrap();
        let single = Coalition::from_indices(3, [2]).unwrap();
        let w = harsanyi_conditional(&table, Frozen::Image(fixed), single).unwrap();
        let expected = table.value(fixed, single).unwrap() - table.value(fixed, Coalition::empty(3)).unwrap();
        assert_eq!(w, expected);
    }

    #[test]
    fn additive_game_has_no_higher_order_dividends() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let coeffs: Vec<f64> = (0..6).map(|_| rng.random_range(-5.0..5.0)).collect();
        let c = coeffs.clone();
        let oracle = FnOracle(move |_: Coalition, t: Coalition| t.members().map(|i| c[i]).sum());
        let table = fill_value_table(
            &oracle,
            key(),
            Coalition::empty(1),
            Coalition::full(6),
            EvalBudget::default(),
        )
        .unwrap();
        let frozen = Frozen::Image(Coalition::empty(1));
        for target in Coalition::full(6).subsets() {
            let w = harsanyi_conditional(&table, frozen, target).unwrap();
            let brute = naive_dividend(
                &|s| Coalition::from_bits(6, s).unwrap().members().map(|i| coeffs[i]).sum(),
                target.bits(),
            );
            assert!((w - brute).abs() <= 1e-12);
            if target.len() >= 2 {
                assert!(w.abs() <= 1e-12, "w({target}) = {w}");
            }
        }
    }

    #[test]
    fn missing_value_is_incomplete_table() {
        let table = ValueTable::new(key(), 1, 2);
        let err = harsanyi_conditional(&table, Frozen::Text(Coalition::full(2)), Coalition::full(1)).unwrap_err();
        assert!(matches!(err, Error::IncompleteTable { .. }));
        assert!(matches!(
            harsanyi_joint(&table, Coalition::full(1), Coalition::empty(2)),
            Err(Error::IncompleteTable { .. })
        ));
    }

    #[test]
    fn joint_with_empty_image_matches_conditional() {
        let oracle = FnOracle(|i: Coalition, t: Coalition| ((i.bits() + 1) as f64).ln() * (t.bits() as f64).sin());
        let table = fill_value_table(
            &oracle,
            key(),
            Coalition::full(2),
            Coalition::full(4),
            EvalBudget::default(),
        )
        .unwrap();
        for s in Coalition::full(4).subsets() {
            let joint = harsanyi_joint(&table, Coalition::empty(2), s).unwrap();
            let cond = harsanyi_conditional(&table, Frozen::Image(Coalition::empty(2)), s).unwrap();
            assert_eq!(joint, cond);
        }
    }

    #[test]
    fn joint_dividends_factorize_on_product_games() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (f2, g2) = (f.clone(), g.clone());
        let oracle = FnOracle(move |i: Coalition, t: Coalition| f2[i.bits() as usize] * g2[t.bits() as usize]);
        let table = fill_value_table(
            &oracle,
            key(),
            Coalition::full(3),
            Coalition::full(4),
            EvalBudget::default(),
        )
        .unwrap();
        let mf = harsanyi_all(&LatticeValues::new(Coalition::full(3), f).unwrap());
        let mg = harsanyi_all(&LatticeValues::new(Coalition::full(4), g).unwrap());
        let all = harsanyi_joint_all(&table, Coalition::full(3), Coalition::full(4)).unwrap();
        for si in Coalition::full(3).subsets() {
            for st in Coalition::full(4).subsets() {
                let w = harsanyi_joint(&table, si, st).unwrap();
                let expected = mf.get(si).unwrap() * mg.get(st).unwrap();
                assert!((w - expected).abs() <= 1e-10, "{si} {st}: {w} vs {expected}");
                assert!((all.get_joint(si, st).unwrap() - w).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn one_player_closed_form() {
        let game = LatticeValues::new(Coalition::full(1), vec![0.3, 1.1]).unwrap();
        let w = harsanyi_all(&game);
        assert_eq!(w.values(), &[0.3, 1.1 - 0.3]);
    }

    #[test]
    fn fast_transform_matches_naive_for_n8() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let values: Vec<f64> = (0..256).map(|_| rng.random_range(-10.0..10.0)).collect();
        let game = LatticeValues::new(Coalition::full(8), values.clone()).unwrap();
        let fast = harsanyi_all(&game);
        for s in 0u32..256 {
            let naive = naive_dividend(&|x| values[x as usize], s);
            let got = fast.get(Coalition::from_bits(8, s).unwrap()).unwrap();
            assert!((got - naive).abs() <= 1e-12, "{s}: {got} vs {naive}");
        }
    }

    #[test]
    fn sparse_base_uses_compressed_indices() {
        let base = Coalition::from_indices(6, [1, 4]).unwrap();
        let game = LatticeValues::from_fn(base, |c| c.bits() as f64);
        let w = harsanyi_all(&game);
        let both = Coalition::from_indices(6, [1, 4]).unwrap();
        // v = bits is additive in the members, so the pair dividend vanishes
        assert_eq!(w.get(both), Some(0.0));
        assert_eq!(w.get(Coalition::from_indices(6, [4]).unwrap()), Some(16.0));
        assert_eq!(w.get(Coalition::from_indices(6, [0]).unwrap()), None);
    }

    #[test]
    fn zeta_inverts_mobius() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let values: Vec<f64> = (0..1024).map(|_| rng.random_range(-1e3..1e3)).collect();
        let mut w = values.clone();
        mobius_in_place(&mut w);
        zeta_in_place(&mut w);
        for (a, b) in w.iter().zip(&values) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn compensated_path_agrees_with_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 12;
        let values: Vec<f64> = (0..1 << n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v2 = values.clone();
        let oracle = FnOracle(move |_: Coalition, t: Coalition| v2[t.bits() as usize]);
        let table = fill_value_table(
            &oracle,
            key(),
            Coalition::empty(1),
            Coalition::full(n),
            EvalBudget::default(),
        )
        .unwrap();
        let frozen = Frozen::Image(Coalition::empty(1));
        let direct = harsanyi_conditional(&table, frozen, Coalition::full(n)).unwrap();
        let all = harsanyi_conditional_all(&table, frozen, Coalition::full(n)).unwrap();
        let naive = naive_dividend(&|x| values[x as usize], (1 << n) - 1);
        assert!((direct - naive).abs() <= 1e-9);
        assert!((all.get(Coalition::full(n)).unwrap() - direct).abs() <= 1e-9);
    }
}
