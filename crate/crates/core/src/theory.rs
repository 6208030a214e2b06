//! The randomized-partition additive estimator and its rate experiment.
//!
//! A simplified relative of the additive planted forest whose split points
//! do not depend on the data. For each of `L` trees and each coordinate, `M`
//! random intervals tile `[0, 1]`; then `S` randomly chosen (coordinate,
//! interval) cells are refitted, each set to the mean over its points of the
//! partial residual `Y - sum_{k != K} m_k(X_k)`. The trees are averaged, each
//! component is centered on the sample and the intercept is the response mean.
//! With `M ~ n^{1/5}` and `L >~ n^{2/5}` the components converge at the
//! one-dimensional rate `n^{-2/5}` up to log factors, away from the boundary.

use std::f64::consts::PI;
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Beta, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::{child_rng, derive_seed, rng_from_seed};

/// Density of the raw split points on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SplitDensity {
    Uniform,
    Beta { alpha: f64, beta: f64 },
}

impl SplitDensity {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match *self {
            SplitDensity::Uniform => Ok(rng.random::<f64>()),
            SplitDensity::Beta { alpha, beta } => Beta::new(alpha, beta)
                .map(|b| b.sample(rng))
                .map_err(|e| Error::InvalidParams(format!("beta density: {e}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryParams {
    /// Number of trees `L`.
    pub trees: usize,
    /// Update steps `S` per tree.
    pub steps: usize,
    /// Intervals `M` per coordinate.
    pub intervals: usize,
    /// Selection probabilities `q[k * M + j]`; uniform `1 / (d M)` when `None`.
    pub q: Option<Vec<f64>>,
    /// Split-point density per coordinate; one entry applies to all.
    pub densities: Vec<SplitDensity>,
    pub seed: u64,
}

impl TheoryParams {
    pub fn new(trees: usize, steps: usize, intervals: usize, seed: u64) -> Self {
        Self {
            trees,
            steps,
            intervals,
            q: None,
            densities: vec![SplitDensity::Uniform],
            seed,
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.trees == 0 || self.intervals == 0 {
            return Err(Error::InvalidParams("trees and intervals must be positive".into()));
        }
        if self.densities.len() != 1 && self.densities.len() != d {
            return Err(Error::InvalidParams(format!(
                "need 1 or {d} split densities, got {}",
                self.densities.len()
            )));
        }
        if let Some(q) = &self.q {
            if q.len() != d * self.intervals {
                return Err(Error::LengthMismatch {
                    left: q.len(),
                    right: d * self.intervals,
                });
            }
            if q.iter().any(|&p| p.is_nan() || p <= 0.0) {
                return Err(Error::InvalidParams("selection probabilities must be positive".into()));
            }
            let total: f64 = q.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParams(format!("selection probabilities sum to {total}")));
            }
        }
        Ok(())
    }

    fn density(&self, k: usize) -> SplitDensity {
        self.densities[if self.densities.len() == 1 { 0 } else { k }]
    }
}

/// Interval endpoints `0 = z_0 < ... < z_M = 1` of one coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomPartition {
    pub endpoints: Vec<f64>,
}

impl RandomPartition {
    pub fn intervals(&self) -> usize {
        self.endpoints.len() - 1
    }

    /// Interval holding `x`; intervals are `[z_{j-1}, z_j)` except the last, which is closed.
    pub fn locate(&self, x: f64) -> usize {
        let interior = &self.endpoints[1..self.endpoints.len() - 1];
        interior.partition_point(|&z| z <= x)
    }
}

/// Draws `M - 1` points from `g`, sorts them and mixes each order statistic
/// with the regular grid: `z_j = Z_(j) / 2 + j / (2M)`. Every interval is at
/// least `1 / (2M)` long.
pub fn random_partition<R: Rng + ?Sized>(m: usize, g: SplitDensity, rng: &mut R) -> Result<RandomPartition> {
    if m == 0 {
        return Err(Error::InvalidParams("need at least one interval".into()));
    }
    let mut raw = (0..m - 1).map(|_| g.sample(rng)).collect::<Result<Vec<f64>>>()?;
    raw.sort_by(f64::total_cmp);
    Ok(mixed_partition(&raw))
}

/// Endpoints from already sorted raw points.
pub fn mixed_partition(sorted_raw: &[f64]) -> RandomPartition {
    let m = sorted_raw.len() + 1;
    let mut endpoints = Vec::with_capacity(m + 1);
    endpoints.push(0.0);
    for (j, z) in sorted_raw.iter().enumerate() {
        endpoints.push(0.5 * z + (j + 1) as f64 / (2 * m) as f64);
    }
    endpoints.push(1.0);
    RandomPartition { endpoints }
}

/// One tree of the estimator: per-coordinate piecewise constant functions
/// fitted by randomized backfitting.
#[derive(Debug, Clone)]
pub struct BackfitTree<'a> {
    data: &'a Dataset,
    partitions: Vec<RandomPartition>,
    values: Vec<Vec<f64>>,
    members: Vec<Vec<Vec<usize>>>,
    fitted: Vec<f64>,
}

impl<'a> BackfitTree<'a> {
    pub fn new(data: &'a Dataset, partitions: Vec<RandomPartition>) -> Self {
        let members = partitions
            .iter()
            .enumerate()
            .map(|(k, part)| {
                let mut cells = vec![Vec::new(); part.intervals()];
                for i in 0..data.n() {
                    cells[part.locate(data.value(i, k))].push(i);
                }
                cells
            })
            .collect();
        let values = partitions.iter().map(|p| vec![0.0; p.intervals()]).collect();
        Self {
            data,
            partitions,
            values,
            members,
            fitted: vec![0.0; data.n()],
        }
    }

    /// Sets coordinate `k` on interval `j` to the mean partial residual of its
    /// points. Intervals without points keep their value.
    pub fn update(&mut self, k: usize, j: usize) {
        let idx = &self.members[k][j];
        if idx.is_empty() {
            return;
        }
        let old = self.values[k][j];
        let y = self.data.y();
        let new = idx.iter().map(|&i| y[i] - self.fitted[i] + old).sum::<f64>() / idx.len() as f64;
        let delta = new - old;
        for &i in idx {
            self.fitted[i] += delta;
        }
        self.values[k][j] = new;
    }

    /// Mean of `Y - sum_k m_k` over the points of interval `j` of coordinate `k`.
    pub fn working_residual_mean(&self, k: usize, j: usize) -> Option<f64> {
        let idx = &self.members[k][j];
        if idx.is_empty() {
            return None;
        }
        let y = self.data.y();
        Some(idx.iter().map(|&i| y[i] - self.fitted[i]).sum::<f64>() / idx.len() as f64)
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn partitions(&self) -> &[RandomPartition] {
        &self.partitions
    }

    pub fn component(&self, k: usize, x: f64) -> f64 {
        self.values[k][self.partitions[k].locate(x)]
    }

    fn into_steps(self) -> Vec<StepFunction> {
        self.partitions
            .into_iter()
            .zip(self.values)
            .map(|(partition, values)| StepFunction { partition, values })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    pub partition: RandomPartition,
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn value(&self, x: f64) -> f64 {
        self.values[self.partition.locate(x)]
    }
}

/// Averaged, centered additive fit.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveEstimate {
    pub intercept: f64,
    /// `trees[l][k]`: component `k` of tree `l`.
    pub trees: Vec<Vec<StepFunction>>,
    /// Centering offset subtracted from each averaged component.
    pub offsets: Vec<f64>,
}

impl AdditiveEstimate {
    /// Centered component `k` at `x`.
    pub fn component(&self, k: usize, x: f64) -> f64 {
        self.raw_component(k, x) - self.offsets[k]
    }

    fn raw_component(&self, k: usize, x: f64) -> f64 {
        self.trees.iter().map(|t| t[k].value(x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + (0..x.len()).map(|k| self.component(k, x[k])).sum::<f64>()
    }

    pub fn d(&self) -> usize {
        self.offsets.len()
    }
}

fn check_domain(data: &Dataset) -> Result<()> {
    for i in 0..data.n() {
        for (k, &v) in data.row(i).iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::DomainError { coord: k, value: v });
            }
        }
    }
    Ok(())
}

/// Grows tree `l` on `sample`: fresh partitions, then `S` random updates.
fn grow_tree(sample: &Dataset, params: &TheoryParams, l: usize) -> Result<Vec<StepFunction>> {
    let d = sample.d();
    let m = params.intervals;
    let mut rng = child_rng(params.seed, l as u64);
    let partitions = (0..d)
        .map(|k| random_partition(m, params.density(k), &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let mut tree = BackfitTree::new(sample, partitions);
    let weighted = match &params.q {
        Some(q) => Some(WeightedIndex::new(q).map_err(|e| Error::InvalidParams(e.to_string()))?),
        None => None,
    };
    for _ in 0..params.steps {
        let cell = match &weighted {
            Some(w) => w.sample(&mut rng),
            None => rng.random_range(0..d * m),
        };
        tree.update(cell / m, cell % m);
    }
    Ok(tree.into_steps())
}

/// Fits the estimator on data in `[0, 1]^d`.
pub fn fit_theoretical(data: &Dataset, params: &TheoryParams) -> Result<AdditiveEstimate> {
    check_domain(data)?;
    params.validate(data.d())?;
    let trees = (0..params.trees)
        .map(|l| grow_tree(data, params, l))
        .collect::<Result<Vec<_>>>()?;
    let mut est = AdditiveEstimate {
        intercept: data.y().iter().sum::<f64>() / data.n() as f64,
        trees,
        offsets: vec![0.0; data.d()],
    };
    est.offsets = (0..data.d())
        .map(|k| (0..data.n()).map(|i| est.raw_component(k, data.value(i, k))).sum::<f64>() / data.n() as f64)
        .collect();
    Ok(est)
}

/// Bootstrap variant: tree `l` is grown on its own resample; each tree is
/// centered on its own resample and the intercept is the mean of all
/// resampled responses.
pub fn fit_theoretical_bootstrap(data: &Dataset, params: &TheoryParams) -> Result<AdditiveEstimate> {
    let n = data.n();
    fit_theoretical_bootstrap_with(data, params, |l| {
        let mut rng = child_rng(derive_seed(params.seed, u64::MAX), l as u64);
        (0..n).map(|_| rng.random_range(0..n)).collect()
    })
}

/// [`fit_theoretical_bootstrap`] with caller-supplied resample indices per tree.
pub fn fit_theoretical_bootstrap_with<F>(data: &Dataset, params: &TheoryParams, resample: F) -> Result<AdditiveEstimate>
where
    F: Fn(usize) -> Vec<usize>,
{
    check_domain(data)?;
    params.validate(data.d())?;
    let d = data.d();
    let mut trees = Vec::with_capacity(params.trees);
    let mut offsets = vec![0.0; d];
    let mut response_total = 0.0;
    let mut count = 0usize;
    for l in 0..params.trees {
        let sample = data.subset(&resample(l))?;
        let tree = grow_tree(&sample, params, l)?;
        for (k, offset) in offsets.iter_mut().enumerate() {
            *offset += (0..sample.n()).map(|i| tree[k].value(sample.value(i, k))).sum::<f64>();
        }
        response_total += sample.y().iter().sum::<f64>();
        count += sample.n();
        trees.push(tree);
    }
    for offset in &mut offsets {
        *offset /= count as f64;
    }
    Ok(AdditiveEstimate {
        intercept: response_total / count as f64,
        trees,
        offsets,
    })
}

/// True additive function for the rate experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateModel {
    /// `m_k(x) = (-1)^k 2 sin(pi (2x - 1))` for 1-based `k`; mean zero on `[0, 1]`.
    Smooth,
    /// `m = 0`.
    Zero,
}

impl RateModel {
    pub fn component(self, k: usize, x: f64) -> f64 {
        match self {
            RateModel::Smooth => {
                let sign = if k.is_multiple_of(2) { -1.0 } else { 1.0 };
                sign * 2.0 * (PI * (2.0 * x - 1.0)).sin()
            }
            RateModel::Zero => 0.0,
        }
    }
}

/// Settings of [`convergence_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub d: usize,
    pub model: RateModel,
    pub noise_sd: f64,
    /// `M = ceil(interval_factor * n^{1/5})`.
    pub interval_factor: f64,
    /// `L = ceil(tree_factor * n^{2/5})`.
    pub tree_factor: f64,
    /// `S = sweeps * d * M`.
    pub sweeps: usize,
    pub interior: (f64, f64),
    pub eval_points: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            n_list: vec![500, 2000, 8000],
            reps: 10,
            d: 2,
            model: RateModel::Smooth,
            noise_sd: 1.0,
            interval_factor: 2.0,
            tree_factor: 1.0,
            sweeps: 20,
            interior: (0.1, 0.9),
            eval_points: 401,
            bootstrap: false,
            seed: 0,
        }
    }
}

impl ConvergenceConfig {
    pub fn params_for(&self, n: usize, seed: u64) -> TheoryParams {
        let nf = n as f64;
        let intervals = (self.interval_factor * nf.powf(0.2)).ceil().max(1.0) as usize;
        let trees = (self.tree_factor * nf.powf(0.4)).ceil().max(1.0) as usize;
        TheoryParams::new(trees, self.sweeps * self.d * intervals, intervals, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub rep: usize,
    pub sup_error_interior: f64,
    pub sup_error_full: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// `(n, median interior sup-error)` in the order of `n_list`.
    pub medians: Vec<(usize, f64)>,
    /// Least-squares slope of log median error against log n.
    pub slope: f64,
}

impl ConvergenceReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        for row in &self.rows {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (n, m) in &self.medians {
            s.push_str(&format!("n={n} median_sup_error_interior={m:.6}\n"));
        }
        s.push_str(&format!("slope={:.4}", self.slope));
        s
    }
}

/// Uniform design on `[0, 1]^d` with `Y = sum_k m_k(X_k) + noise`.
pub fn rate_dataset(n: usize, d: usize, model: RateModel, noise_sd: f64, seed: u64) -> Result<Dataset> {
    let mut rng = rng_from_seed(seed);
    let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        y.push(row.iter().enumerate().map(|(k, &v)| model.component(k, v)).sum::<f64>() + noise.sample(&mut rng));
        x.extend(row);
    }
    Dataset::from_flat(y, x, d)
}

/// Sup-norm error of the fitted components over `[lo, hi]`, maximized over coordinates.
pub fn sup_error(est: &AdditiveEstimate, model: RateModel, (lo, hi): (f64, f64), points: usize) -> f64 {
    let points = points.max(2);
    (0..est.d())
        .flat_map(|k| {
            (0..points).map(move |i| {
                let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
                (est.component(k, x) - model.component(k, x)).abs()
            })
        })
        .fold(0.0, f64::max)
}

/// For each sample size, fits `reps` independent datasets and records the
/// interior and full sup-norm errors; reports per-size medians and the
/// log-log slope.
pub fn convergence_experiment(cfg: &ConvergenceConfig) -> Result<ConvergenceReport> {
    if cfg.n_list.len() < 3 || cfg.n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams("n_list must be increasing with at least 3 entries".into()));
    }
    if cfg.reps == 0 {
        return Err(Error::InvalidParams("reps must be positive".into()));
    }
    let mut rows = Vec::new();
    let mut medians = Vec::new();
    for &n in &cfg.n_list {
        let mut interior = Vec::with_capacity(cfg.reps);
        for rep in 0..cfg.reps {
            let rep_seed = derive_seed(derive_seed(cfg.seed, n as u64), rep as u64);
            let data = rate_dataset(n, cfg.d, cfg.model, cfg.noise_sd, derive_seed(rep_seed, 0))?;
            let params = cfg.params_for(n, derive_seed(rep_seed, 1));
            let est = if cfg.bootstrap {
                fit_theoretical_bootstrap(&data, &params)?
            } else {
                fit_theoretical(&data, &params)?
            };
            let row = ConvergenceRow {
                n,
                rep,
                sup_error_interior: sup_error(&est, cfg.model, cfg.interior, cfg.eval_points),
                sup_error_full: sup_error(&est, cfg.model, (0.0, 1.0), cfg.eval_points),
            };
            interior.push(row.sup_error_interior);
            rows.push(row);
        }
        medians.push((n, median(&mut interior)));
    }
    let slope = loglog_slope(&medians);
    Ok(ConvergenceReport { rows, medians, slope })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Ordinary least-squares slope of `ln(err)` on `ln(n)`.
pub fn loglog_slope(points: &[(usize, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
