//! Identity checks over seeded random games.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use harsanyi_core::harsanyi::{
    harsanyi_all, shapley_from_dividends, verify_axioms_with, zeta_in_place, Axiom, AxiomOptions, LatticeValues,
};
use harsanyi_core::oracles::derive_seed;
use harsanyi_core::Coalition;

pub const MOBIUS_TOLERANCE: f64 = 1e-9;
pub const NAIVE_TOLERANCE: f64 = 1e-12;
pub const SHAPLEY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub seed: u64,
    pub games: usize,
    pub min_players: usize,
    pub max_players: usize,
    pub fault: Option<Axiom>,
}

#[derive(Debug, Clone)]
pub struct CheckSummary {
    pub name: &'static str,
    pub runs: usize,
    pub failures: usize,
    pub max_residual: f64,
    pub tolerance: &'static str,
}

impl CheckSummary {
    fn new(name: &'static str, tolerance: &'static str) -> Self {
        Self {
            name,
            runs: 0,
            failures: 0,
            max_residual: 0.0,
            tolerance,
        }
    }

    fn record(&mut self, residual: f64, passed: bool) {
        self.runs += 1;
        self.max_residual = self.max_residual.max(residual);
        if !passed {
            self.failures += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

pub fn random_game(n: usize, seed: u64) -> LatticeValues {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LatticeValues::from_fn(Coalition::full(n), |_| rng.random_range(-1.0..1.0))
}

fn naive_dividend(game: &LatticeValues, s: Coalition) -> f64 {
    s.subsets()
        .map(|t| {
            let v = game.get(t).expect("subset of the base");
            if (s.len() - t.len()).is_multiple_of(2) {
                v
            } else {
                -v
            }
        })
        .sum()
}

/// Shapley values from marginal contributions, without dividends.
fn marginal_shapley(game: &LatticeValues) -> Vec<f64> {
    let n = game.base().width();
    let fact: Vec<f64> = (0..=n)
        .scan(1.0, |acc, k| {
            if k > 0 {
                *acc *= k as f64;
            }
            Some(*acc)
        })
        .collect();
    (0..n)
        .map(|i| {
            game.base()
                .without(i)
                .subsets()
                .map(|s| {
                    let weight = fact[s.len()] * fact[n - s.len() - 1] / fact[n];
                    weight * (game.get(s.with(i)).unwrap() - game.get(s).unwrap())
                })
                .sum()
        })
        .collect()
}

pub fn run_suite(config: SuiteConfig) -> Vec<CheckSummary> {
    let mut axioms: Vec<CheckSummary> = vec![
        CheckSummary::new("linearity", "1e-12"),
        CheckSummary::new("dummy", "1e-12"),
        CheckSummary::new("symmetry", "1e-12"),
        CheckSummary::new("efficiency", "1e-9*max(1,|v(N)|)"),
    ];
    let mut mobius = CheckSummary::new("mobius-inversion", "1e-9");
    let mut naive = CheckSummary::new("fast-vs-naive", "1e-12");
    let mut shapley = CheckSummary::new("shapley", "1e-9");
    let span = config.max_players.saturating_sub(config.min_players) + 1;
    let options = AxiomOptions { fault: config.fault };

    for g in 0..config.games {
        let n = config.min_players + g % span;
        let tag = g.to_string();
        let a = random_game(n, derive_seed(config.seed, &["game-a", &tag]));
        let b = random_game(n, derive_seed(config.seed, &["game-b", &tag]));
        let report = verify_axioms_with(&a, &b, derive_seed(config.seed, &["players", &tag]), options);
        for (summary, check) in axioms.iter_mut().zip(report.checks()) {
            summary.record(check.residual, check.passed());
        }

        let w = harsanyi_all(&a);
        let mut back = w.values().to_vec();
        zeta_in_place(&mut back);
        let r = back
            .iter()
            .zip(a.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        mobius.record(r, r <= MOBIUS_TOLERANCE);

        let r = w
            .iter()
            .map(|(s, d)| (d - naive_dividend(&a, s)).abs())
            .fold(0.0, f64::max);
        naive.record(r, r <= NAIVE_TOLERANCE);

        let phi = shapley_from_dividends(&w);
        let r = phi
            .values
            .iter()
            .zip(marginal_shapley(&a))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        shapley.record(r, r <= SHAPLEY_TOLERANCE);
    }
    axioms.extend([mobius, naive, shapley]);
    axioms
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginal_shapley_of_a_two_player_game() {
        // v(∅)=0, v(0)=1, v(1)=2, v(01)=5
        let game = LatticeValues::new(Coalition::full(2), vec![0.0, 1.0, 2.0, 5.0]).unwrap();
        assert_eq!(marginal_shapley(&game), vec![2.0, 3.0]);
    }
}
