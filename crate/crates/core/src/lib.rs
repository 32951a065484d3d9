//! Harsanyi-dividend diagnostics for image-text scoring models.
//!
//! A scoring model is treated as a two-modality cooperative game whose players
//! are image regions and caption word groups. The crate computes exact Harsanyi
//! dividends over coalition lattices and derives sensitivity metrics that show
//! which compositional patterns (objects, relations, attributes and their
//! interactions) a model reacts to.

pub mod coalition;
pub mod dataset;
pub mod error;
pub mod game;
pub mod harsanyi;
pub mod metrics;
pub mod oracles;

pub use coalition::{enumerate_sublattice, Coalition, Modality, PlayerSet, MAX_PLAYERS};
pub use error::{Error, Result};
pub use game::{
    fill_value_table, BimodalContext, CachingOracle, EvalBudget, GameKey, GameOracle, OracleMetadata, Span, ValueTable,
};
pub use harsanyi::{
    harsanyi_all, harsanyi_conditional, harsanyi_conditional_all, harsanyi_joint, harsanyi_joint_all,
    shapley_from_dividends, verify_axioms, AxiomReport, DividendTable, Frozen, LatticeValues, ShapleyVector,
};
