//! Fitted structures: leaves, trees, tree families and forests.

use std::collections::BTreeMap;

use crate::dataset::FeatureRange;
use crate::params::FitParams;
use crate::region::{CoordSet, Region};

/// A region carrying a constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub region: Region,
    pub value: f64,
}

/// One tree of a family: the estimate of the ANOVA component over `coords`.
///
/// Leaves of a one-dimensional tree partition the line. Leaves of higher
/// order trees may overlap or leave gaps; the component is the sum of the
/// values of all leaves containing the point.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    coords: CoordSet,
    leaves: Vec<Leaf>,
}

impl Tree {
    /// A singleton tree with the single leaf `(-inf, inf]` valued 0.
    pub fn trivial(k: usize) -> Self {
        let coords = CoordSet::singleton(k);
        Self {
            leaves: vec![Leaf {
                region: Region::unbounded(coords.clone()),
                value: 0.0,
            }],
            coords,
        }
    }

    pub fn empty(coords: CoordSet) -> Self {
        Self {
            coords,
            leaves: Vec::new(),
        }
    }

    /// Caller guarantees every leaf region is over `coords`.
    pub(crate) fn from_leaves(coords: CoordSet, leaves: Vec<Leaf>) -> Self {
        Self { coords, leaves }
    }

    pub fn coords(&self) -> &CoordSet {
        &self.coords
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub(crate) fn leaves_mut(&mut self) -> &mut Vec<Leaf> {
        &mut self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Sum of the values of every leaf containing `x` (a full `d`-vector).
    pub fn component_value(&self, x: &[f64]) -> f64 {
        self.leaves
            .iter()
            .filter(|leaf| leaf.region.contains(x))
            .map(|leaf| leaf.value)
            .sum()
    }
}

/// A spawn of leaves into a higher order tree.
#[derive(Debug, Clone, PartialEq)]
pub struct SpawnEvent {
    pub iteration: usize,
    pub parent: CoordSet,
    pub parent_leaf_count: usize,
    pub child: CoordSet,
}

/// Bookkeeping recorded while a family grows; not persisted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GrowthLog {
    /// Training sum of squared residuals, before the first iteration and after each one.
    pub ssr: Vec<f64>,
    pub spawns: Vec<SpawnEvent>,
    /// Iterations that found no valid split.
    pub idle_iterations: usize,
}

/// One full set of trees grown on one (bootstrap) sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeFamily {
    pub(crate) trees: BTreeMap<CoordSet, Tree>,
    pub(crate) residuals: Vec<f64>,
    pub(crate) rng_seed: u64,
    pub(crate) sample: Vec<usize>,
    pub(crate) log: GrowthLog,
}

impl TreeFamily {
    /// All-zero family over `d` predictors.
    pub fn new(d: usize, y: &[f64], rng_seed: u64) -> Self {
        Self {
            trees: (0..d)
                .map(|k| (CoordSet::singleton(k), Tree::trivial(k)))
                .collect(),
            residuals: y.to_vec(),
            rng_seed,
            sample: Vec::new(),
            log: GrowthLog::default(),
        }
    }

    pub(crate) fn from_parts(trees: BTreeMap<CoordSet, Tree>, rng_seed: u64) -> Self {
        Self {
            trees,
            residuals: Vec::new(),
            rng_seed,
            sample: Vec::new(),
            log: GrowthLog::default(),
        }
    }

    pub fn trees(&self) -> impl Iterator<Item = &Tree> {
        self.trees.values()
    }

    pub fn tree(&self, coords: &CoordSet) -> Option<&Tree> {
        self.trees.get(coords)
    }

    /// Residuals on the family's training sample (empty for a loaded model).
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Indices into the original data of the family's training sample.
    pub fn sample(&self) -> &[usize] {
        &self.sample
    }

    pub fn log(&self) -> &GrowthLog {
        &self.log
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.values().map(|t| t.component_value(x)).sum()
    }

    /// Largest interaction order with at least one leaf.
    pub fn max_order(&self) -> usize {
        self.trees
            .values()
            .filter(|t| t.leaf_count() > 0)
            .map(|t| t.coords().len())
            .max()
            .unwrap_or(0)
    }
}

/// Averaged tree families plus the parameters they were grown with.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub(crate) families: Vec<TreeFamily>,
    pub(crate) params: FitParams,
    pub(crate) d: usize,
    pub(crate) feature_ranges: Vec<FeatureRange>,
    pub(crate) feature_names: Option<Vec<String>>,
}

impl ForestModel {
    pub fn families(&self) -> &[TreeFamily] {
        &self.families
    }

    pub fn params(&self) -> &FitParams {
        &self.params
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Per-predictor span of the training data.
    pub fn feature_ranges(&self) -> &[FeatureRange] {
        &self.feature_ranges
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.families.is_empty() {
            return 0.0;
        }
        self.families.iter().map(|f| f.predict(x)).sum::<f64>() / self.families.len() as f64
    }

    pub fn predict_rows<'a>(&self, rows: impl IntoIterator<Item = &'a [f64]>) -> Vec<f64> {
        rows.into_iter().map(|x| self.predict(x)).collect()
    }

    /// Every coordinate set with a non-empty tree in some family, sorted.
    pub fn component_sets(&self) -> Vec<CoordSet> {
        let mut sets: Vec<CoordSet> = self
            .families
            .iter()
            .flat_map(|f| f.trees.values())
            .filter(|t| t.leaf_count() > 0)
            .map(|t| t.coords().clone())
            .collect();
        sets.sort();
        sets.dedup();
        sets
    }

    /// Average over families of the `coords`-tree component at `x` (0 where absent).
    pub fn component_value(&self, coords: &CoordSet, x: &[f64]) -> f64 {
        if self.families.is_empty() {
            return 0.0;
        }
        self.families
            .iter()
            .filter_map(|f| f.tree(coords))
            .map(|t| t.component_value(x))
            .sum::<f64>()
            / self.families.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(coords: &[usize], bounds: &[(f64, f64)], value: f64) -> Leaf {
        Leaf {
            region: Region::new(
                CoordSet::new(coords.to_vec()),
                bounds.iter().map(|b| b.0).collect(),
                bounds.iter().map(|b| b.1).collect(),
            )
            .unwrap(),
            value,
        }
    }

    const INF: f64 = f64::INFINITY;

    #[test]
    fn component_value_examples() {
        let step = Tree::from_leaves(
            CoordSet::singleton(0),
            vec![leaf(&[0], &[(-INF, 0.0)], -1.0), leaf(&[0], &[(0.0, INF)], 1.0)],
        );
        assert_eq!(step.component_value(&[0.5]), 1.0);
        assert_eq!(step.component_value(&[0.0]), -1.0);

        let overlapping = Tree::from_leaves(
            CoordSet::new(vec![0, 1]),
            vec![
                leaf(&[0, 1], &[(-INF, INF), (0.0, 1.0)], 2.0),
                leaf(&[0, 1], &[(0.0, 1.0), (0.0, 1.0)], 3.0),
            ],
        );
        assert_eq!(overlapping.component_value(&[0.5, 0.5]), 5.0);
        assert_eq!(overlapping.component_value(&[-0.5, 0.5]), 2.0);
        assert_eq!(Tree::empty(CoordSet::new(vec![0, 1])).component_value(&[0.1, 0.2]), 0.0);
    }

    fn constant_family(d: usize, values: &[f64]) -> TreeFamily {
        let mut fam = TreeFamily::new(d, &[0.0, 0.0], 0);
        for (k, v) in values.iter().enumerate() {
            fam.trees.get_mut(&CoordSet::singleton(k)).unwrap().leaves_mut()[0].value = *v;
        }
        fam
    }

    #[test]
    fn family_and_forest_prediction() {
        let fresh = TreeFamily::new(3, &[1.0, 2.0], 0);
        assert_eq!(fresh.predict(&[0.3, -2.0, 9.0]), 0.0);
        assert_eq!(fresh.trees().count(), 3);

        let cancel = constant_family(2, &[1.0, -1.0]);
        assert_eq!(cancel.predict(&[0.0, 0.0]), 0.0);

        let model = |fams: Vec<TreeFamily>| ForestModel {
            families: fams,
            params: FitParams::default(),
            d: 1,
            feature_ranges: vec![FeatureRange { min: 0.0, max: 1.0 }],
            feature_names: None,
        };
        let one = constant_family(1, &[1.0]);
        let three = constant_family(1, &[3.0]);
        assert_eq!(model(vec![one.clone(), three.clone()]).predict(&[0.5]), 2.0);
        assert_eq!(model(vec![three.clone(), one.clone()]).predict(&[0.5]), 2.0);
        assert_eq!(model(vec![three.clone(); 4]).predict(&[0.5]), 3.0);
        assert_eq!(model(vec![TreeFamily::new(1, &[0.0, 0.0], 0); 5]).predict(&[0.5]), 0.0);
    }
}
