use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::tune::{cross_validate, grid_search, rpf_grid, GridPreset, TuneResult, Variant};
use super::{generate_dataset, sample_mse, SimModelSpec};
use crate::error::{Error, Result};
use crate::forest::fit_forest;
use crate::params::FitParams;
use crate::seed::{derive_seed, rng_from_seed};

/// One simulation study: tune on the oracle objective (or by CV per
/// replication), then record the sample MSE of `reps` fresh replications.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub spec: SimModelSpec,
    pub n: usize,
    pub reps: usize,
    pub variant: Variant,
    pub preset: GridPreset,
    pub tune_reps: usize,
    /// Tune each replication by this many CV folds instead of the oracle grid search.
    pub cv_folds: Option<usize>,
    pub ntrees: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(spec: SimModelSpec, variant: Variant) -> Self {
        Self {
            spec,
            n: 500,
            reps: 20,
            variant,
            preset: GridPreset::Small,
            tune_reps: 10,
            cv_folds: None,
            ntrees: 50,
            seed: 0,
        }
    }

    fn method(&self) -> String {
        match self.cv_folds {
            Some(_) => format!("{}-cv", self.variant.name()),
            None => self.variant.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub model: String,
    pub shape: String,
    pub d: usize,
    pub variant: String,
    pub params: String,
    pub rep: usize,
    pub mse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    /// Mean and sample standard deviation.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub config: SimConfig,
    /// Oracle tuning outcome; `None` under cross-validation.
    pub tuned: Option<TuneResult>,
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
}

impl SimReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        for row in &self.rows {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// `model & method & mean (sd)`, one line.
    pub fn table_row(&self) -> String {
        format!(
            "model {} ({}, d={}) & rpf {} & {:.3} ({:.3})",
            self.config.spec.number(),
            self.config.spec.name(),
            self.config.spec.d,
            self.config.method(),
            self.summary.mean,
            self.summary.sd
        )
    }
}

/// Runs the study described by `cfg`. Replications use seeds independent of
/// those used for tuning.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimReport> {
    cfg.spec.validate()?;
    if cfg.reps == 0 {
        return Err(Error::InvalidParams("reps must be positive".into()));
    }
    let grid = rpf_grid(cfg.preset, &cfg.spec, cfg.variant, cfg.ntrees);
    let tuned = match cfg.cv_folds {
        None => Some(grid_search(&cfg.spec, cfg.n, &grid, cfg.tune_reps, derive_seed(cfg.seed, 0))?),
        Some(_) => None,
    };
    let eval_seed = derive_seed(cfg.seed, 1);
    let method = cfg.method();
    let rows = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(eval_seed, rep as u64);
            let (data, truth) = generate_dataset(&cfg.spec, cfg.n, &mut rng_from_seed(rep_seed))?;
            let chosen = match (&tuned, cfg.cv_folds) {
                (Some(t), _) => t.best.clone(),
                (None, Some(folds)) => cross_validate(&data, &grid, folds, derive_seed(rep_seed, 2))?.best,
                (None, None) => unreachable!(),
            };
            let params = FitParams {
                seed: derive_seed(rep_seed, 1),
                ..chosen
            };
            let model = fit_forest(&data, &params)?;
            Ok(ReportRow {
                model: cfg.spec.structure.name().to_string(),
                shape: cfg.spec.shape.name().to_string(),
                d: cfg.spec.d,
                variant: method.clone(),
                params: params.label(),
                rep,
                mse: sample_mse(&truth, &model.predict_rows(data.rows()))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mses: Vec<f64> = rows.iter().map(|r| r.mse).collect();
    Ok(SimReport {
        config: cfg.clone(),
        tuned,
        summary: Summary::of(&mses),
        rows,
    })
}
