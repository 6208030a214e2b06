use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate_dataset, sample_mse, SimModelSpec};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::fit_forest;
use crate::params::{FitParams, MaxInteraction, SplitTry};
use crate::seed::{derive_seed, rng_from_seed};

/// The interaction limit a forest is fitted with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Additive,
    Interaction2,
    InteractionUnbounded,
}

impl Variant {
    pub fn max_interaction(self) -> MaxInteraction {
        match self {
            Variant::Additive => MaxInteraction::Bounded(1),
            Variant::Interaction2 => MaxInteraction::Bounded(2),
            Variant::InteractionUnbounded => MaxInteraction::Unbounded,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Additive => "additive",
            Variant::Interaction2 => "interaction-2",
            Variant::InteractionUnbounded => "interaction-unbounded",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "additive" => Ok(Variant::Additive),
            "interaction-2" | "interaction2" => Ok(Variant::Interaction2),
            "interaction-unbounded" | "interaction-inf" => Ok(Variant::InteractionUnbounded),
            _ => Err(Error::InvalidParams(format!("unknown variant `{s}`"))),
        }
    }
}

/// Named parameter grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridPreset {
    /// Every combination of t_try, nsplits and split_try (120 cells).
    Full,
    /// A cheap subset of the full grid for desk-scale runs.
    Small,
    /// The single default parameter set.
    Default,
}

impl FromStr for GridPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(GridPreset::Full),
            "small" => Ok(GridPreset::Small),
            "default" => Ok(GridPreset::Default),
            _ => Err(Error::InvalidParams(format!("unknown grid preset `{s}`"))),
        }
    }
}

const T_TRY: [f64; 3] = [0.25, 0.5, 0.75];
const SPLIT_TRY: [usize; 4] = [2, 5, 10, 20];
const SPARSE_NSPLITS: [usize; 10] = [10, 15, 20, 25, 30, 40, 50, 60, 80, 100];
const DENSE_NSPLITS: [usize; 9] = [10, 15, 20, 25, 30, 50, 60, 80, 100];

const SMALL_T_TRY: [f64; 2] = [0.5, 0.75];
const SMALL_SPLIT_TRY: [usize; 3] = [2, 5, 10];
const SMALL_NSPLITS: [usize; 4] = [15, 20, 30, 40];

/// The rpf grid for a model: dense models scale nsplits by `d / 2`.
pub fn rpf_grid(preset: GridPreset, spec: &SimModelSpec, variant: Variant, ntrees: usize) -> Vec<FitParams> {
    let scale = |s: usize| {
        if spec.structure.is_dense() {
            (s * spec.d).div_ceil(2)
        } else {
            s
        }
    };
    let base = FitParams {
        ntrees,
        max_interaction: variant.max_interaction(),
        ..FitParams::default()
    };
    let (t_try, nsplits, split_try): (&[f64], Vec<usize>, &[usize]) = match preset {
        GridPreset::Full => (
            &T_TRY,
            if spec.structure.is_dense() {
                DENSE_NSPLITS.to_vec()
            } else {
                SPARSE_NSPLITS.to_vec()
            },
            &SPLIT_TRY,
        ),
        GridPreset::Small => (&SMALL_T_TRY, SMALL_NSPLITS.to_vec(), &SMALL_SPLIT_TRY),
        GridPreset::Default => return vec![FitParams { nsplits: scale(base.nsplits), ..base }],
    };
    let mut grid = Vec::new();
    for &t in t_try {
        for &s in &nsplits {
            for &st in split_try {
                grid.push(FitParams {
                    t_try: t,
                    nsplits: scale(s),
                    split_try: SplitTry::Sampled(st),
                    ..base.clone()
                });
            }
        }
    }
    grid
}

/// Outcome of a tuning run.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: FitParams,
    pub best_index: usize,
    /// Objective of every grid cell, in grid order.
    pub scores: Vec<f64>,
}

fn pick(grid: &[FitParams], scores: Vec<f64>) -> TuneResult {
    let mut best_index = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best_index] {
            best_index = i;
        }
    }
    TuneResult {
        best: grid[best_index].clone(),
        best_index,
        scores,
    }
}

fn check_grid(grid: &[FitParams]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParams("empty parameter grid".into()));
    }
    grid.iter().try_for_each(FitParams::validate)
}

/// Selects the grid cell with the smallest mean sample MSE against the true
/// function over `tune_reps` simulated datasets of size `n`. Every cell sees
/// the same datasets and fit seeds.
pub fn grid_search(spec: &SimModelSpec, n: usize, grid: &[FitParams], tune_reps: usize, seed: u64) -> Result<TuneResult> {
    check_grid(grid)?;
    if tune_reps == 0 {
        return Err(Error::InvalidParams("tune_reps must be positive".into()));
    }
    if grid.len() == 1 {
        return Ok(pick(grid, vec![0.0]));
    }
    let datasets = (0..tune_reps)
        .map(|s| generate_dataset(spec, n, &mut rng_from_seed(derive_seed(seed, s as u64))))
        .collect::<Result<Vec<_>>>()?;
    let scores = grid
        .par_iter()
        .map(|cell| {
            let mut total = 0.0;
            for (s, (data, truth)) in datasets.iter().enumerate() {
                let params = FitParams {
                    seed: derive_seed(derive_seed(seed, s as u64), 1),
                    ..cell.clone()
                };
                let model = fit_forest(data, &params)?;
                total += sample_mse(truth, &model.predict_rows(data.rows()))?;
            }
            Ok(total / tune_reps as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(pick(grid, scores))
}

/// `folds`-fold cross-validation on the observed responses. The objective is
/// the mean squared prediction error on held-out points.
pub fn cross_validate(data: &Dataset, grid: &[FitParams], folds: usize, seed: u64) -> Result<TuneResult> {
    check_grid(grid)?;
    let n = data.n();
    if folds < 2 || folds > n {
        return Err(Error::InvalidParams(format!("need 2 <= folds <= n, got {folds} folds for n = {n}")));
    }
    if grid.len() == 1 {
        return Ok(pick(grid, vec![0.0]));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let splits = (0..folds)
        .map(|f| {
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for (pos, &i) in order.iter().enumerate() {
                if pos % folds == f {
                    test.push(i);
                } else {
                    train.push(i);
                }
            }
            train.sort_unstable();
            test.sort_unstable();
            Ok((data.subset(&train)?, test))
        })
        .collect::<Result<Vec<_>>>()?;
    let scores = grid
        .par_iter()
        .map(|cell| {
            let mut sse = 0.0;
            for (f, (train, test)) in splits.iter().enumerate() {
                let params = FitParams {
                    seed: derive_seed(seed, f as u64 + 1),
                    ..cell.clone()
                };
                let model = fit_forest(train, &params)?;
                sse += test
                    .iter()
                    .map(|&i| (data.y()[i] - model.predict(data.row(i))).powi(2))
                    .sum::<f64>();
            }
            Ok(sse / n as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(pick(grid, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Shape, Structure};

    #[test]
    fn grid_sizes() {
        let sparse = SimModelSpec::new(Structure::AdditiveSparse, Shape::Smooth, 4);
        let dense = SimModelSpec::new(Structure::AdditiveDense, Shape::Smooth, 10);
        let full = rpf_grid(GridPreset::Full, &sparse, Variant::Additive, 50);
        assert_eq!(full.len(), 120);
        assert_eq!(full[0].nsplits, 10);
        assert!(full.iter().all(|p| p.max_interaction == MaxInteraction::Bounded(1)));
        let dense_full = rpf_grid(GridPreset::Full, &dense, Variant::InteractionUnbounded, 50);
        assert_eq!(dense_full.len(), 108);
        assert_eq!(dense_full.iter().map(|p| p.nsplits).max(), Some(500));
        assert_eq!(dense_full.iter().map(|p| p.nsplits).min(), Some(50));
        assert_eq!(rpf_grid(GridPreset::Small, &sparse, Variant::Additive, 50).len(), 24);
    assert_eq!(rpf_grid(GridPreset::Default, &sparse, Variant::Additive, 50).len(), 1);
    }

    #[test]
    fn single_cell_grid_wins() {
        let spec = SimModelSpec::new(Structure::AdditiveSparse, Shape::Smooth, 4);
        let grid = vec![FitParams::default()];
        assert_eq!(grid_search(&spec, 50, &grid, 1, 0).unwrap().best, grid[0]);
        let (data, _) = generate_dataset(&spec, 30, &mut rng_from_seed(0)).unwrap();
        assert_eq!(cross_validate(&data, &grid, 5, 0).unwrap().best, grid[0]);
        assert!(grid_search(&spec, 50, &[], 1, 0).is_err());
        assert!(cross_validate(&data, &grid, 31, 0).is_err());
    }

    #[test]
    fn ties_go_to_the_first_cell() {
        let grid = vec![FitParams::default(), FitParams { nsplits: 3, ..FitParams::default() }];
        assert_eq!(pick(&grid, vec![1.0, 1.0]).best_index, 0);
        assert_eq!(pick(&grid, vec![1.0, 0.5]).best_index, 1);
    }
}
