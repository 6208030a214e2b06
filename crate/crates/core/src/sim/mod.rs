//! Simulation models, tuning and reporting.
//!
//! Twelve regression models combine a structure (additive, hierarchical
//! interaction or pure interaction; sparse or dense) with a shape (smooth or
//! jump). Predictors are correlated through a shared Gaussian factor and
//! squashed into `(-1.25, 1.25)`.

mod report;
mod tune;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub use report::{run_simulation, ReportRow, SimConfig, SimReport, Summary};
pub use tune::{cross_validate, grid_search, rpf_grid, GridPreset, TuneResult, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    AdditiveSparse,
    HierarchicalSparse,
    PureSparse,
    AdditiveDense,
    HierarchicalDense,
    PureDense,
}

impl Structure {
    pub const ALL: [Structure; 6] = [
        Structure::AdditiveSparse,
        Structure::HierarchicalSparse,
        Structure::PureSparse,
        Structure::AdditiveDense,
        Structure::HierarchicalDense,
        Structure::PureDense,
    ];

    pub fn is_dense(self) -> bool {
        matches!(self, Structure::AdditiveDense | Structure::HierarchicalDense | Structure::PureDense)
    }

    pub fn name(self) -> &'static str {
        match self {
            Structure::AdditiveSparse => "additive-sparse",
            Structure::HierarchicalSparse => "hierarchical-interaction-sparse",
            Structure::PureSparse => "pure-interaction-sparse",
            Structure::AdditiveDense => "additive-dense",
            Structure::HierarchicalDense => "hierarchical-interaction-dense",
            Structure::PureDense => "pure-interaction-dense",
        }
    }

    fn index(self) -> usize {
        Structure::ALL.iter().position(|&s| s == self).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Smooth,
    Jump,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::Smooth => "smooth",
            Shape::Jump => "jump",
        }
    }

    /// `m_k(x)` for 1-based `k`.
    pub fn main_effect(self, k: usize, x: f64) -> f64 {
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        let smooth = sign * 2.0 * (PI * x).sin();
        match self {
            Shape::Smooth => smooth,
            Shape::Jump if x >= 0.0 => smooth - 2.0,
            Shape::Jump => smooth + 2.0,
        }
    }

    /// `m_{k,k+1}(x_k, x_{k+1}) = m_k(x_k x_{k+1})`.
    pub fn interaction(self, k: usize, xk: f64, xnext: f64) -> f64 {
        self.main_effect(k, xk * xnext)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimModelSpec {
    pub structure: Structure,
    pub shape: Shape,
    pub d: usize,
    pub rho: f64,
    pub noise_sd: f64,
}

impl SimModelSpec {
    pub fn new(structure: Structure, shape: Shape, d: usize) -> Self {
        Self {
            structure,
            shape,
            d,
            rho: 0.3,
            noise_sd: 1.0,
        }
    }

    /// Models 1-3 are sparse smooth, 4-6 sparse jump, 7-9 dense smooth and
    /// 10-12 dense jump; within each block additive, hierarchical, pure.
    pub fn from_number(id: usize, d: usize) -> Result<Self> {
        if !(1..=12).contains(&id) {
            return Err(Error::InvalidParams(format!("unknown model {id}")));
        }
        let block = (id - 1) / 3;
        let kind = (id - 1) % 3;
        let dense = block >= 2;
        let structure = Structure::ALL[kind + if dense { 3 } else { 0 }];
        let shape = if block.is_multiple_of(2) { Shape::Smooth } else { Shape::Jump };
        Ok(Self::new(structure, shape, d))
    }

    pub fn number(&self) -> usize {
        let s = self.structure.index();
        let (kind, dense) = (s % 3, s >= 3);
        let block = 2 * usize::from(dense) + usize::from(self.shape == Shape::Jump);
        3 * block + kind + 1
    }

    pub fn name(&self) -> String {
        format!("{}-{}", self.structure.name(), self.shape.name())
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 3 {
            return Err(Error::InvalidParams(format!("simulation models need d >= 3, got {}", self.d)));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidParams(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return Err(Error::InvalidParams(format!("invalid noise sd {}", self.noise_sd)));
        }
        Ok(())
    }

    /// The regression function `m(x)`.
    pub fn truth(&self, x: &[f64]) -> f64 {
        let shape = self.shape;
        let (mains, pairs) = match self.structure {
            Structure::AdditiveSparse => (2, 0),
            Structure::HierarchicalSparse => (3, 2),
            Structure::PureSparse => (0, 2),
            Structure::AdditiveDense => (self.d, 0),
            Structure::HierarchicalDense => (self.d, self.d - 1),
            Structure::PureDense => (0, self.d - 1),
        };
        let main: f64 = (0..mains).map(|k| shape.main_effect(k + 1, x[k])).sum();
        let inter: f64 = (0..pairs).map(|k| shape.interaction(k + 1, x[k], x[k + 1])).sum();
        main + inter
    }
}

impl fmt::Display for SimModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Parses either a model number `1..=12` or a name such as
/// `additive-sparse-smooth`. The dimension defaults to 4.
impl FromStr for SimModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(id) = s.parse::<usize>() {
            return Self::from_number(id, 4);
        }
        for structure in Structure::ALL {
            for shape in [Shape::Smooth, Shape::Jump] {
                let spec = Self::new(structure, shape, 4);
                if spec.name() == s {
                    return Ok(spec);
                }
            }
        }
        Err(Error::InvalidParams(format!("unknown model `{s}`")))
    }
}

/// `n x d` row-major predictors: latent `Z = sqrt(rho) Z0 + sqrt(1 - rho) e`
/// with unit variances and pairwise correlation `rho`, mapped through
/// `2.5 / pi * arctan`.
pub fn sample_predictors<R: Rng + ?Sized>(n: usize, d: usize, rho: f64, rng: &mut R) -> Vec<f64> {
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    let mut x = Vec::with_capacity(n * d);
    for _ in 0..n {
        let common: f64 = StandardNormal.sample(rng);
        for _ in 0..d {
            let own: f64 = StandardNormal.sample(rng);
            x.push(2.5 / PI * (a * common + b * own).atan());
        }
    }
    x
}

/// Closure evaluating the model's regression function.
pub fn true_function(spec: &SimModelSpec) -> impl Fn(&[f64]) -> f64 + '_ {
    move |x| spec.truth(x)
}

/// Draws `n` observations; returns the data and `m(X_i)`.
pub fn generate_dataset<R: Rng + ?Sized>(spec: &SimModelSpec, n: usize, rng: &mut R) -> Result<(Dataset, Vec<f64>)> {
    spec.validate()?;
    let x = sample_predictors(n, spec.d, spec.rho, rng);
    let truth: Vec<f64> = x.chunks(spec.d).map(|row| spec.truth(row)).collect();
    let y = if spec.noise_sd == 0.0 {
        truth.clone()
    } else {
        let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::InvalidParams(e.to_string()))?;
        truth.iter().map(|&m| m + noise.sample(rng)).collect()
    };
    Ok((Dataset::from_flat(y, x, spec.d)?, truth))
}

/// `n^{-1} sum_i (truth_i - pred_i)^2`.
pub fn sample_mse(truth: &[f64], predictions: &[f64]) -> Result<f64> {
    if truth.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: predictions.len(),
        });
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    Ok(truth.iter().zip(predictions).map(|(t, p)| (t - p).powi(2)).sum::<f64>() / truth.len() as f64)
}
