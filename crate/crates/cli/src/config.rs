//! Optional TOML configuration. Keys match the long flag names; a flag given
//! on the command line wins over the file, which wins over the built-in
//! default. A top-level `seed` applies to every command without its own.
//!
//! ```toml
//! seed = 3
//!
//! [fit]
//! ntrees = 50
//! nsplits = 30
//! t-try = 0.75
//! split-try = 10
//! max-interaction = "inf"
//!
//! [simulate]
//! model = "additive-sparse-smooth"
//! reps = 20
//!
//! [convergence]
//! n-list = [500, 2000, 8000]
//! ```

use std::path::Path;

use planted_forest::{Error, MaxInteraction, Result, SplitTry};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub seed: Option<u64>,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub components: ComponentsSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FitSection {
    pub ntrees: Option<usize>,
    pub nsplits: Option<usize>,
    pub t_try: Option<f64>,
    pub split_try: Option<SplitTry>,
    pub max_interaction: Option<MaxInteraction>,
    pub bootstrap: Option<bool>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ComponentsSection {
    pub order: Option<usize>,
    pub grid_size: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SimulateSection {
    pub model: Option<String>,
    pub d: Option<usize>,
    pub n: Option<usize>,
    pub reps: Option<usize>,
    pub variant: Option<String>,
    pub grid: Option<String>,
    pub tune_reps: Option<usize>,
    pub cv: Option<bool>,
    pub folds: Option<usize>,
    pub ntrees: Option<usize>,
    pub rho: Option<f64>,
    pub noise_sd: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConvergenceSection {
    pub n_list: Option<Vec<usize>>,
    pub reps: Option<usize>,
    pub d: Option<usize>,
    pub noise_sd: Option<f64>,
    pub interval_factor: Option<f64>,
    pub tree_factor: Option<f64>,
    pub sweeps: Option<usize>,
    pub zero_signal: Option<bool>,
    pub bootstrap: Option<bool>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())))
    }
}

/// First of flag, config value and default.
pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}
