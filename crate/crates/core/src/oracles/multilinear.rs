//! Games defined by their Harsanyi coefficients.
//!
//! v(S^I, S^T) = Σ_{A ⊆ S^I, B ⊆ S^T} c(A, B), so the joint dividends of the
//! game are exactly its coefficients.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::derive_seed;
use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::game::{BimodalContext, GameKey, GameOracle, OracleMetadata};
use crate::metrics::{Caption, Image, RegionSelector, SamplePair};

#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearGame {
    image_size: usize,
    text_size: usize,
    coefficients: BTreeMap<(u32, u32), f64>,
}

impl MultilinearGame {
    pub fn new(image_size: usize, text_size: usize) -> Self {
        Self {
            image_size,
            text_size,
            coefficients: BTreeMap::new(),
        }
    }

    /// Every coefficient drawn uniformly from `[-1, 1)`.
    pub fn random_dense(image_size: usize, text_size: usize, rng: &mut impl Rng) -> Self {
        let mut game = Self::new(image_size, text_size);
        for a in 0u32..1 << image_size {
            for b in 0u32..1 << text_size {
                game.coefficients.insert((a, b), rng.random_range(-1.0..1.0));
            }
        }
        game
    }

    pub fn image_size(&self) -> usize {
        self.image_size
    }

    pub fn text_size(&self) -> usize {
        self.text_size
    }

    pub fn set(&mut self, image: Coalition, text: Coalition, c: f64) {
        self.coefficients.insert((image.bits(), text.bits()), c);
    }

    pub fn add(&mut self, image: Coalition, text: Coalition, c: f64) {
        *self.coefficients.entry((image.bits(), text.bits())).or_insert(0.0) += c;
    }

    pub fn coefficient(&self, image: Coalition, text: Coalition) -> f64 {
        self.coefficients
            .get(&(image.bits(), text.bits()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn coefficients(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.coefficients.iter().map(|(&k, &v)| (k, v))
    }

    pub fn eval(&self, image: Coalition, text: Coalition) -> f64 {
        let (si, st) = (image.bits(), text.bits());
        self.coefficients
            .iter()
            .filter(|((a, b), _)| a & !si == 0 && b & !st == 0)
            .map(|(_, c)| c)
            .sum()
    }
}

pub fn multilinear_eval(game: &MultilinearGame, ctx: &BimodalContext) -> f64 {
    game.eval(ctx.image, ctx.text)
}

/// Knobs for the planted synthetic games.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantConfig {
    /// Background coefficients are drawn from `[-base_scale, base_scale)`.
    pub base_scale: f64,
    /// Planted changes have magnitude in `[delta_min, delta_max)` and a random sign.
    pub delta_min: f64,
    pub delta_max: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            base_scale: 0.1,
            delta_min: 0.5,
            delta_max: 1.5,
        }
    }
}

/// A registry of multilinear games keyed by (sample, image, caption).
pub struct MultilinearOracle {
    name: String,
    games: HashMap<GameKey, MultilinearGame>,
}

impl MultilinearOracle {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            games: HashMap::new(),
        }
    }

    pub fn insert(&mut self, key: GameKey, game: MultilinearGame) {
        self.games.insert(key, game);
    }

    pub fn game(&self, key: &GameKey) -> Option<&MultilinearGame> {
        self.games.get(key)
    }

    /// Synthetic games whose pair members differ in one joint coefficient only.
    ///
    /// Background coefficients are keyed by player labels, so relabelled or
    /// reordered players (a swapped caption, a second photo of the same objects)
    /// share them. On top of that, the coefficient of (object-pair regions,
    /// compound caption players) is shifted by a per-sample δ_T in games that use
    /// caption 2 and by δ_I in games that use image 2. The compound players are
    /// R∪O or A∪O depending on the aspect. Every other coalition's dividend is
    /// identical across the pair.
    pub fn planted(seed: u64, samples: &[SamplePair], config: PlantConfig) -> Self {
        let mut oracle = Self::new(format!("multilinear:{seed}"));
        for s in samples {
            let delta = |tag: &str| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[&s.sample_id, "delta", tag]));
                let mag = rng.random_range(config.delta_min..config.delta_max);
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            };
            let (delta_text, delta_image) = (delta("text"), delta("image"));
            let images: Vec<(&Image, bool)> = std::iter::once((&s.image_1, false))
                .chain(s.image_2.as_ref().map(|i| (i, true)))
                .collect();
            for &(image, second_image) in &images {
                for (caption, second_caption) in [(&s.caption_1, false), (&s.caption_2, true)] {
                    let mut game = background_game(seed, s, image, caption, config.base_scale);
                    let mut shift = 0.0;
                    if second_caption {
                        shift += delta_text;
                    }
                    if second_image {
                        shift += delta_image;
                    }
                    if shift != 0.0 {
                        if let Some((a, b)) = plant_site(s, image, caption) {
                            game.add(a, b, shift);
                        }
                    }
                    oracle.insert(s.game_key(image, caption), game);
                }
            }
        }
        oracle
    }
}

fn label_key(labels: &[String], c: Coalition) -> String {
    let mut parts: Vec<&str> = c.members().map(|i| labels[i].as_str()).collect();
    parts.sort_unstable();
    parts.join("\u{1f}")
}

fn background_game(seed: u64, s: &SamplePair, image: &Image, caption: &Caption, scale: f64) -> MultilinearGame {
    let ni = image.players.size();
    let nt = caption.players.size();
    let mut game = MultilinearGame::new(ni, nt);
    let small = |n: usize| -> Vec<Coalition> { Coalition::full(n).subsets().filter(|c| c.len() <= 2).collect() };
    let mut draw = |a: Coalition, b: Coalition| {
        let ka = label_key(image.players.labels(), a);
        let kb = label_key(caption.players.labels(), b);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[&s.sample_id, "coef", &ka, &kb]));
        game.set(a, b, rng.random_range(-scale..scale));
    };
    for a in small(ni) {
        for b in small(nt) {
            if a.len() + b.len() <= 2 {
                draw(a, b);
            }
        }
    }
    if let Some(compound) = caption.roles.category(s.aspect.compound()) {
        draw(Coalition::empty(ni), compound);
    }
    if let Some(pair) = image.regions.selection(RegionSelector::Both) {
        draw(pair, Coalition::empty(nt));
        if let Some(compound) = caption.roles.category(s.aspect.compound()) {
            draw(pair, compound);
        }
    }
    game
}

fn plant_site(s: &SamplePair, image: &Image, caption: &Caption) -> Option<(Coalition, Coalition)> {
    let text = caption.roles.category(s.aspect.compound())?;
    let regions = image
        .regions
        .selection(RegionSelector::Both)
        .unwrap_or_else(|| image.players.full());
    Some((regions, text))
}

impl GameOracle for MultilinearOracle {
    fn metadata(&self) -> OracleMetadata {
        OracleMetadata::new(self.name.clone(), env!("CARGO_PKG_VERSION"))
    }

    fn evaluate(&self, ctx: &BimodalContext) -> Result<f64> {
        let game = self
            .games
            .get(&ctx.game)
            .ok_or_else(|| Error::oracle(ctx, "no synthetic game registered for this pair"))?;
        if ctx.image.width() != game.image_size || ctx.text.width() != game.text_size {
            return Err(Error::oracle(ctx, "coalition width does not match the game"));
        }
        Ok(multilinear_eval(game, ctx))
    }
}
