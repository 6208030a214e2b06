//! Random planted forests.
//!
//! A planted forest estimates a regression function through its functional
//! ANOVA expansion
//!
//! ```text
//! m(x) = m0 + sum_k m_k(x_k) + sum_{k<l} m_kl(x_k, x_l) + ...
//! ```
//!
//! by growing one tree per component simultaneously. The maximal interaction
//! order is a parameter: `1` gives an additive model, `2` adds pairwise
//! interactions, and [`MaxInteraction::Unbounded`] lets the data decide.
//!
//! ```
//! use planted_forest::{fit_forest, Dataset, FitParams, MaxInteraction};
//!
//! let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 40.0, (i % 7) as f64]).collect();
//! let y: Vec<f64> = rows.iter().map(|r| if r[0] > 0.5 { 1.0 } else { -1.0 }).collect();
//! let data = Dataset::new(y, rows).unwrap();
//!
//! let params = FitParams {
//!     ntrees: 5,
//!     nsplits: 10,
//!     max_interaction: MaxInteraction::Bounded(1),
//!     ..FitParams::default()
//! };
//! let model = fit_forest(&data, &params).unwrap();
//! assert!(model.predict(&[0.9, 3.0]) > 0.5);
//! ```
//!
//! Modules:
//! - [`split`]: scoring and applying one split of one leaf,
//! - [`forest`]: growing families and forests,
//! - [`purify`]: turning raw trees into identified ANOVA components,
//! - [`theory`]: the randomized-partition estimator with known convergence rate,
//! - [`sim`]: the simulation models, tuning and reporting harness.

pub mod dataset;
pub mod error;
pub mod forest;
pub mod model;
pub mod params;
mod persist;
pub mod purify;
pub mod region;
pub mod seed;
pub mod sim;
pub mod split;
pub mod theory;

pub use dataset::{Dataset, FeatureRange};
pub use error::{Error, Result};
pub use forest::{extract_components, fit_forest, grow_family, Combination};
pub use model::{ForestModel, Leaf, Tree, TreeFamily};
pub use params::{FitParams, MaxInteraction, SplitTry};
pub use persist::FORMAT_VERSION;
pub use region::{CoordSet, Region};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/quickstart.md")]
    mod quickstart {}
    #[doc = include_str!("../../../book/src/planted-trees.md")]
    mod planted_trees {}
    #[doc = include_str!("../../../book/src/purification.md")]
    mod purification {}
    #[doc = include_str!("../../../book/src/theory.md")]
    mod theory {}
    #[doc = include_str!("../../../book/src/simulations.md")]
    mod simulations {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
