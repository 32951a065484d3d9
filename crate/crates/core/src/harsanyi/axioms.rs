//! Numerical checks of the linearity, dummy, symmetry and efficiency axioms.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{harsanyi_all, CompensatedSum, LatticeValues};
use crate::coalition::Coalition;

pub const LINEARITY_TOLERANCE: f64 = 1e-12;
pub const DUMMY_TOLERANCE: f64 = 1e-12;
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// Relative to max(1, |v(N)|).
pub const EFFICIENCY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axiom {
    Linearity,
    Dummy,
    Symmetry,
    Efficiency,
}

impl Axiom {
    pub const ALL: [Axiom; 4] = [Axiom::Linearity, Axiom::Dummy, Axiom::Symmetry, Axiom::Efficiency];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::Linearity => "linearity",
            Axiom::Dummy => "dummy",
            Axiom::Symmetry => "symmetry",
            Axiom::Efficiency => "efficiency",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub residual: f64,
    pub tolerance: f64,
}

impl AxiomCheck {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub linearity: AxiomCheck,
    pub dummy: AxiomCheck,
    pub symmetry: AxiomCheck,
    pub efficiency: AxiomCheck,
}

impl AxiomReport {
    pub fn checks(&self) -> [AxiomCheck; 4] {
        [self.linearity, self.dummy, self.symmetry, self.efficiency]
    }

    pub fn all_passed(&self) -> bool {
        self.checks().iter().all(AxiomCheck::passed)
    }

    pub fn failures(&self) -> Vec<Axiom> {
        self.checks().iter().filter(|c| !c.passed()).map(|c| c.axiom).collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AxiomOptions {
    /// Corrupts the named check's dividends; exercises failure reporting.
    #[doc(hidden)]
    pub fault: Option<Axiom>,
}

const FAULT_SIZE: f64 = 1e-3;

pub fn verify_axioms(game_a: &LatticeValues, game_b: &LatticeValues, seed: u64) -> AxiomReport {
    verify_axioms_with(game_a, game_b, seed, AxiomOptions::default())
}

/// Checks the four axioms on `game_a` and `game_b`, which must share a base.
///
/// The dummy and symmetry checks derive constructed games from `game_a`: a
/// player made dummy by construction, and a pair of players made
/// interchangeable by symmetrizing over their swap. `seed` picks those players.
pub fn verify_axioms_with(
    game_a: &LatticeValues,
    game_b: &LatticeValues,
    seed: u64,
    options: AxiomOptions,
) -> AxiomReport {
    assert_eq!(game_a.base(), game_b.base(), "games must share a lattice");
    let base = game_a.base();
    let players: Vec<usize> = base.members().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fault = |axiom: Axiom| if options.fault == Some(axiom) { FAULT_SIZE } else { 0.0 };

    let wa = harsanyi_all(game_a);
    let wb = harsanyi_all(game_b);

    // linearity: w(a+b) = w(a) + w(b)
    let sum_game = LatticeValues::new(
        base,
        game_a
            .values()
            .iter()
            .zip(game_b.values())
            .map(|(a, b)| a + b)
            .collect(),
    )
    .expect("same lattice");
    let wsum = harsanyi_all(&sum_game);
    let linearity = wsum
        .values()
        .iter()
        .zip(wa.values().iter().zip(wb.values()))
        .map(|(s, (a, b))| (s - (a + b)).abs())
        .fold(fault(Axiom::Linearity), f64::max);

    // dummy: v'(S ∪ {i}) = v'(S) + v'({i}) - v'(∅)
    let dummy = if players.is_empty() {
        fault(Axiom::Dummy)
    } else {
        let i = players[rng.random_range(0..players.len())];
        let bonus: f64 = rng.random_range(-1.0..1.0);
        let game = LatticeValues::from_fn(base, |s| {
            let rest = game_a.get(s.without(i)).expect("subset of base");
            if s.contains(i) {
                rest + bonus
            } else {
                rest
            }
        });
        let w = harsanyi_all(&game);
        let mut worst = fault(Axiom::Dummy);
        for s in base.without(i).subsets().filter(|s| !s.is_empty()) {
            worst = worst.max(w.get(s.with(i)).expect("subset of base").abs());
        }
        worst
    };

    // symmetry: v'(S) = (v(S) + v(swap_ij S)) / 2
    let symmetry = if players.len() < 2 {
        fault(Axiom::Symmetry)
    } else {
        let i = players[rng.random_range(0..players.len())];
        let mut j = players[rng.random_range(0..players.len() - 1)];
        if j == i {
            j = *players.last().expect("at least two players");
        }
        let swap = |s: Coalition| {
            let mut t = s.without(i).without(j);
            if s.contains(i) {
                t = t.with(j);
            }
            if s.contains(j) {
                t = t.with(i);
            }
            t
        };
        let game = LatticeValues::from_fn(base, |s| {
            let a = game_a.get(s).expect("subset");
            let b = game_a.get(swap(s)).expect("subset");
            // addition commutes exactly, so S and swap(S) get identical bits
            (a + b) / 2.0
        });
        let w = harsanyi_all(&game);
        let mut worst = fault(Axiom::Symmetry);
        for s in base.without(i).without(j).subsets() {
            let wi = w.get(s.with(i)).expect("subset");
            let wj = w.get(s.with(j)).expect("subset");
            worst = worst.max((wi - wj).abs());
        }
        worst
    };

    // efficiency: v(N) = Σ_S w(S)
    let efficiency_residual = |game: &LatticeValues, w: &[f64]| {
        let mut acc = CompensatedSum::default();
        w.iter().for_each(|&x| acc.add(x));
        (game.grand() - acc.total()).abs() / game.grand().abs().max(1.0)
    };
    let efficiency = efficiency_residual(game_a, wa.values())
        .max(efficiency_residual(game_b, wb.values()))
        .max(fault(Axiom::Efficiency));

    AxiomReport {
        linearity: AxiomCheck {
            axiom: Axiom::Linearity,
            residual: linearity,
            tolerance: LINEARITY_TOLERANCE,
        },
        dummy: AxiomCheck {
            axiom: Axiom::Dummy,
            residual: dummy,
            tolerance: DUMMY_TOLERANCE,
        },
        symmetry: AxiomCheck {
            axiom: Axiom::Symmetry,
            residual: symmetry,
            tolerance: SYMMETRY_TOLERANCE,
        },
        efficiency: AxiomCheck {
            axiom: Axiom::Efficiency,
            residual: efficiency,
            tolerance: EFFICIENCY_TOLERANCE,
        },
    }
}
