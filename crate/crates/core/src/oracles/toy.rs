//! A deterministic stand-in for a two-tower embedding model.
//!
//! Each player owns a seeded random vector and each pair of players owns an
//! interaction vector. An embedding is a modality bias plus the vectors of the
//! visible players and visible pairs; the score is the cosine of the two
//! embeddings. Masked players contribute the zero vector.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::derive_seed;
use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::game::{BimodalContext, GameKey, GameOracle, OracleMetadata};
use crate::metrics::SamplePair;

#[derive(Debug, Clone, PartialEq)]
struct Tower {
    bias: Vec<f64>,
    players: Vec<Vec<f64>>,
    // keyed by (i, j) with i < j
    pairs: HashMap<(usize, usize), Vec<f64>>,
}

impl Tower {
    fn embed(&self, visible: Coalition) -> Vec<f64> {
        let mut out = self.bias.clone();
        let members: Vec<usize> = visible.members().collect();
        for &i in &members {
            axpy(&mut out, &self.players[i]);
        }
        for (k, &i) in members.iter().enumerate() {
            for &j in &members[k + 1..] {
                axpy(&mut out, &self.pairs[&(i, j)]);
            }
        }
        out
    }
}

fn axpy(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

fn gaussian(seed: u64, dim: usize, scale: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        })
        .collect()
}

/// One image tower and one text tower.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyEmbeddingGame {
    image: Tower,
    text: Tower,
}

impl ToyEmbeddingGame {
    pub fn score(&self, image: Coalition, text: Coalition) -> f64 {
        let a = self.image.embed(image);
        let b = self.text.embed(text);
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }
}

/// Toy games for every (image, caption) pair of a dataset.
///
/// Token vectors depend on the token label only, so a swapped caption reuses
/// them; pair vectors depend on the labels in caption order, so word order
/// matters through interactions. Region vectors depend on the label and pair
/// vectors additionally on the image id, so two images of the same objects in
/// a different arrangement differ only in their interactions.
pub struct ToyEmbeddingOracle {
    seed: u64,
    dim: usize,
    games: HashMap<GameKey, ToyEmbeddingGame>,
}

impl ToyEmbeddingOracle {
    pub const DEFAULT_DIM: usize = 16;
    const PAIR_SCALE: f64 = 0.5;

    pub fn from_samples(seed: u64, dim: usize, samples: &[SamplePair]) -> Self {
        let bias_image = gaussian(derive_seed(seed, &["bias", "image"]), dim, 1.0);
        let bias_text = gaussian(derive_seed(seed, &["bias", "text"]), dim, 1.0);
        let mut games = HashMap::new();
        for s in samples {
            let images = std::iter::once(&s.image_1).chain(s.image_2.as_ref());
            for image in images {
                let labels = image.players.labels();
                let image_tower = Tower {
                    bias: bias_image.clone(),
                    players: labels
                        .iter()
                        .map(|l| gaussian(derive_seed(seed, &["region", l]), dim, 1.0))
                        .collect(),
                    pairs: pair_vectors(
                        labels.len(),
                        |i, j| derive_seed(seed, &["region-pair", &image.id, &labels[i], &labels[j]]),
                        dim,
                    ),
                };
                for caption in [&s.caption_1, &s.caption_2] {
                    let words = caption.players.labels();
                    let text_tower = Tower {
                        bias: bias_text.clone(),
                        players: words
                            .iter()
                            .map(|w| gaussian(derive_seed(seed, &["token", w]), dim, 1.0))
                            .collect(),
                        pairs: pair_vectors(
                            words.len(),
                            |i, j| derive_seed(seed, &["token-pair", &words[i], &words[j]]),
                            dim,
                        ),
                    };
                    games.insert(
                        s.game_key(image, caption),
                        ToyEmbeddingGame {
                            image: image_tower.clone(),
                            text: text_tower,
                        },
                    );
                }
            }
        }
        Self { seed, dim, games }
    }

    pub fn game(&self, key: &GameKey) -> Option<&ToyEmbeddingGame> {
        self.games.get(key)
    }
}

fn pair_vectors(n: usize, seed_of: impl Fn(usize, usize) -> u64, dim: usize) -> HashMap<(usize, usize), Vec<f64>> {
    let mut out = HashMap::new();
    for i in 0..n {
        for j in i + 1..n {
            out.insert((i, j), gaussian(seed_of(i, j), dim, ToyEmbeddingOracle::PAIR_SCALE));
        }
    }
    out
}

impl GameOracle for ToyEmbeddingOracle {
    fn metadata(&self) -> OracleMetadata {
        let mut m = OracleMetadata::new(format!("toy:{}", self.seed), env!("CARGO_PKG_VERSION"));
        m.extra.insert("dim".into(), self.dim.to_string());
        m.extra.insert("masking".into(), "zero-vector".into());
        m
    }

    fn evaluate(&self, ctx: &BimodalContext) -> Result<f64> {
        let game = self
            .games
            .get(&ctx.game)
            .ok_or_else(|| Error::oracle(ctx, "no toy game registered for this pair"))?;
        if ctx.image.width() != game.image.players.len() || ctx.text.width() != game.text.players.len() {
            return Err(Error::oracle(ctx, "coalition width does not match the game"));
        }
        Ok(game.score(ctx.image, ctx.text))
    }
}
