//! Growing families of planted trees and averaging them into a forest.
//!
//! A family starts with one single-leaf tree per predictor and zero
//! estimates. Each iteration samples a fraction of the viable
//! (tree, coordinate) combinations, scores random split points for every leaf
//! of every sampled tree, and applies the split with the smallest training
//! sum of squared residuals. Splitting a leaf along one of its own tree's
//! coordinates replaces the leaf by its two children. Splitting along a
//! foreign coordinate keeps the leaf and adds the two children, started from
//! zero, to the tree over the enlarged coordinate set.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{ForestModel, Leaf, SpawnEvent, Tree, TreeFamily};
use crate::params::{FitParams, MaxInteraction};
use crate::region::CoordSet;
use crate::seed::{derive_seed, rng_from_seed};
use crate::split::{apply_to_members, candidate_pool, draw_from_pool, score_candidates, select_best, SplitCandidate};

/// A tree to take leaves from and the coordinate to cut them along.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Combination {
    pub tree_coords: CoordSet,
    pub split_coord: usize,
}

impl Combination {
    pub fn new(tree_coords: CoordSet, split_coord: usize) -> Self {
        Self {
            tree_coords,
            split_coord,
        }
    }

    /// Whether the split opens (or extends) a higher order tree.
    pub fn spawns(&self) -> bool {
        !self.tree_coords.contains(self.split_coord)
    }
}

/// Every legal combination, sorted by tree coordinates then split coordinate.
///
/// A tree may always be cut along its own coordinates. It may be cut along a
/// foreign coordinate `k` only when it has more than one leaf and the
/// enlarged tree stays within `max_interaction`.
pub fn viable_combinations(family: &TreeFamily, max_interaction: MaxInteraction, d: usize) -> Vec<Combination> {
    let mut out = Vec::new();
    for (coords, tree) in &family.trees {
        let p = tree.leaf_count();
        if p == 0 {
            continue;
        }
        let can_spawn = p > 1 && max_interaction.allows(coords.len() + 1);
        for k in 0..d {
            if coords.contains(k) || can_spawn {
                out.push(Combination::new(coords.clone(), k));
            }
        }
    }
    out
}

/// Uniform subset without replacement of size `ceil(|V| * t_try)`, in the order of `viable`.
pub fn sample_combinations<R: Rng + ?Sized>(viable: &[Combination], t_try: f64, rng: &mut R) -> Vec<Combination> {
    let size = ((viable.len() as f64 * t_try).ceil() as usize).clamp(1.min(viable.len()), viable.len());
    let mut picked = index::sample(rng, viable.len(), size).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| viable[i].clone()).collect()
}

/// Training members of every leaf, parallel to the trees' leaf lists.
type Membership = BTreeMap<CoordSet, Vec<Vec<usize>>>;

/// Grows one family on `data` (already the family's training sample).
pub fn grow_family<R: Rng + ?Sized>(data: &Dataset, params: &FitParams, rng: &mut R) -> Result<TreeFamily> {
    grow_family_observed(data, params, rng, |_, _| {})
}

/// [`grow_family`] calling `observer(family, iteration)` after every iteration.
pub fn grow_family_observed<R, F>(data: &Dataset, params: &FitParams, rng: &mut R, mut observer: F) -> Result<TreeFamily>
where
    R: Rng + ?Sized,
    F: FnMut(&TreeFamily, usize),
{
    params.validate()?;
    if !data.has_variation() {
        return Err(Error::DegenerateData);
    }
    let d = data.d();
    let mut family = TreeFamily::new(d, data.y(), 0);
    let all: Vec<usize> = (0..data.n()).collect();
    let mut members: Membership = (0..d).map(|k| (CoordSet::singleton(k), vec![all.clone()])).collect();
    family.log.ssr.push(sum_of_squares(&family.residuals));

    for iteration in 1..=params.nsplits {
        let viable = viable_combinations(&family, params.max_interaction, d);
        let chosen = sample_combinations(&viable, params.t_try, rng);
        let total_ssr = *family.log.ssr.last().expect("initial ssr");

        let mut candidates = Vec::new();
        for comb in &chosen {
            let k = comb.split_coord;
            let tree = &family.trees[&comb.tree_coords];
            let tree_members = &members[&comb.tree_coords];
            for (j, leaf) in tree.leaves().iter().enumerate() {
                let pool = candidate_pool(&leaf.region, k, data, &tree_members[j]);
                let points = draw_from_pool(&pool, params.split_try, rng);
                let scores = score_candidates(k, &tree_members[j], &points, data, &family.residuals, total_ssr);
                candidates.extend(points.into_iter().zip(scores).map(|(point, score)| SplitCandidate {
                    tree_coords: comb.tree_coords.clone(),
                    split_coord: k,
                    leaf_index: j,
                    point,
                    score,
                }));
            }
        }

        match select_best(&candidates) {
            Ok(best) => {
                let best = best.clone();
                apply_candidate(&mut family, &mut members, &best, data, iteration)?;
            }
            Err(Error::NoValidSplit) => family.log.idle_iterations += 1,
            Err(e) => return Err(e),
        }
        family.log.ssr.push(sum_of_squares(&family.residuals));
        observer(&family, iteration);
    }
    Ok(family)
}

fn apply_candidate(
    family: &mut TreeFamily,
    members: &mut Membership,
    best: &SplitCandidate,
    data: &Dataset,
    iteration: usize,
) -> Result<()> {
    let k = best.split_coord;
    let u = &best.tree_coords;
    let j = best.leaf_index;
    let leaf_members = &members[u][j];
    if u.contains(k) {
        let leaf = &family.trees[u].leaves()[j];
        let split = apply_to_members(k, leaf, best.point, data, &mut family.residuals, leaf_members)?;
        let leaves = family.trees.get_mut(u).expect("tree exists").leaves_mut();
        leaves[j] = split.plus;
        leaves.push(split.minus);
        let tree_members = members.get_mut(u).expect("members exist");
        tree_members[j] = split.members_plus;
        tree_members.push(split.members_minus);
    } else {
        let parent = &family.trees[u];
        let parent_leaf_count = parent.leaf_count();
        let lifted = Leaf {
            region: parent.leaves()[j].region.lift(k),
            value: 0.0,
        };
        let split = apply_to_members(k, &lifted, best.point, data, &mut family.residuals, leaf_members)?;
        let child = u.with(k);
        let tree = family
            .trees
            .entry(child.clone())
            .or_insert_with(|| Tree::empty(child.clone()));
        tree.leaves_mut().push(split.plus);
        tree.leaves_mut().push(split.minus);
        let tree_members = members.entry(child.clone()).or_default();
        tree_members.push(split.members_plus);
        tree_members.push(split.members_minus);
        family.log.spawns.push(SpawnEvent {
            iteration,
            parent: u.clone(),
            parent_leaf_count,
            child,
        });
    }
    Ok(())
}

fn sum_of_squares(values: &[f64]) -> f64 {
    values.iter().map(|r| r * r).sum()
}

/// Bootstrap indices for family `index` under `params`.
fn family_sample(n: usize, params: &FitParams, rng: &mut impl Rng) -> Vec<usize> {
    if params.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    }
}

/// Grows `params.ntrees` families, each on its own bootstrap sample and with
/// its own generator derived from `params.seed`, and averages them.
///
/// Families are grown in parallel; the result does not depend on scheduling.
pub fn fit_forest(data: &Dataset, params: &FitParams) -> Result<ForestModel> {
    params.validate()?;
    if !data.has_variation() {
        return Err(Error::DegenerateData);
    }
    let families = (0..params.ntrees)
        .into_par_iter()
        .map(|b| grow_member(data, params, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        families,
        params: params.clone(),
        d: data.d(),
        feature_ranges: data.feature_ranges(),
        feature_names: data.feature_names().map(<[String]>::to_vec),
    })
}

fn grow_member(data: &Dataset, params: &FitParams, b: usize) -> Result<TreeFamily> {
    let seed = derive_seed(params.seed, b as u64);
    let mut rng = rng_from_seed(seed);
    let sample = family_sample(data.n(), params, &mut rng);
    let mut family = if params.bootstrap {
        let resampled = data.subset(&sample)?;
        match grow_family(&resampled, params, &mut rng) {
            // A bootstrap draw can hit a single distinct row on tiny data;
            // such a family stays at zero.
            Err(Error::DegenerateData) => TreeFamily::new(data.d(), resampled.y(), seed),
            other => other?,
        }
    } else {
        grow_family(data, params, &mut rng)?
    };
    family.rng_seed = seed;
    family.sample = sample;
    Ok(family)
}

/// Averaged `coords`-component of `model` at each grid point. Grid points list
/// the values of the coordinates in `coords`, in order.
pub fn extract_components(model: &ForestModel, coords: &CoordSet, grid: &[Vec<f64>]) -> Result<Vec<(Vec<f64>, f64)>> {
    if !(1..=2).contains(&coords.len()) {
        return Err(Error::UnsupportedOrder(coords.len()));
    }
    if let Some(&k) = coords.as_slice().iter().find(|&&k| k >= model.d()) {
        return Err(Error::InvalidParams(format!("coordinate {k} out of range")));
    }
    let mut x = vec![0.0; model.d()];
    grid.iter()
        .map(|point| {
            if point.len() != coords.len() {
                return Err(Error::LengthMismatch {
                    left: point.len(),
                    right: coords.len(),
                });
            }
            for (k, v) in coords.iter().zip(point) {
                x[k] = *v;
            }
            Ok((point.clone(), model.component_value(coords, &x)))
        })
        .collect()
}

/// Largest `|y_i - family(x_i) - R_i|` over the family's training sample.
pub fn bookkeeping_error(family: &TreeFamily, sample: &Dataset) -> f64 {
    sample
        .rows()
        .zip(sample.y())
        .zip(family.residuals())
        .map(|((x, y), r)| (y - family.predict(x) - r).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SplitTry;
    use crate::seed::rng_from_seed;

    fn four_points() -> Dataset {
        Dataset::new(
            vec![1.0, 1.0, 3.0, 3.0],
            vec![vec![0.1], vec![0.2], vec![0.8], vec![0.9]],
        )
        .unwrap()
    }

    fn exact(nsplits: usize) -> FitParams {
        FitParams {
            ntrees: 1,
            nsplits,
            t_try: 1.0,
            split_try: SplitTry::All,
            max_interaction: MaxInteraction::Bounded(1),
            seed: 0,
            bootstrap: false,
        }
    }

    fn combos(list: &[(&[usize], usize)]) -> Vec<Combination> {
        list.iter()
            .map(|(u, k)| Combination::new(CoordSet::new(u.to_vec()), *k))
            .collect()
    }

    #[test]
    fn viable_sets_grow_with_the_family() {
        let mut family = TreeFamily::new(3, &[0.0; 2], 0);
        let two = MaxInteraction::Bounded(2);
        assert_eq!(
            viable_combinations(&family, two, 3),
            combos(&[(&[0], 0), (&[1], 1), (&[2], 2)])
        );

        let t0 = family.trees.get_mut(&CoordSet::singleton(0)).unwrap();
        let (plus, minus) = t0.leaves()[0].region.cut(0, 0.5).unwrap();
        *t0.leaves_mut() = vec![Leaf { region: plus, value: 0.0 }, Leaf { region: minus, value: 0.0 }];
        assert_eq!(
            viable_combinations(&family, two, 3),
            combos(&[(&[0], 0), (&[0], 1), (&[0], 2), (&[1], 1), (&[2], 2)])
        );
        assert_eq!(
            viable_combinations(&family, MaxInteraction::Bounded(1), 3),
            combos(&[(&[0], 0), (&[1], 1), (&[2], 2)])
        );

        let pair = CoordSet::new(vec![0, 1]);
        let lifted = family.trees[&CoordSet::singleton(0)].leaves()[0].region.lift(1);
        let (a, b) = lifted.cut(1, 0.1).unwrap();
        family.trees.insert(
            pair.clone(),
            Tree::from_leaves(pair, vec![Leaf { region: a, value: 1.0 }, Leaf { region: b, value: -1.0 }]),
        );
        assert_eq!(
            viable_combinations(&family, two, 3),
            combos(&[(&[0], 0), (&[0], 1), (&[0], 2), (&[0, 1], 0), (&[0, 1], 1), (&[1], 1), (&[2], 2)])
        );
        let unbounded = viable_combinations(&family, MaxInteraction::Unbounded, 3);
        assert!(unbounded.contains(&Combination::new(CoordSet::new(vec![0, 1]), 2)));
    }

    #[test]
    fn subset_sizes() {
        let mut rng = rng_from_seed(1);
        let v3 = combos(&[(&[0], 0), (&[1], 1), (&[2], 2)]);
        assert_eq!(sample_combinations(&v3, 1.0, &mut rng), v3);
        assert_eq!(sample_combinations(&v3, 0.5, &mut rng).len(), 2);
        let v10: Vec<_> = (0..10).map(|k| Combination::new(CoordSet::singleton(k), k)).collect();
        let m = sample_combinations(&v10, 0.25, &mut rng);
        assert_eq!(m.len(), 3);
        assert!(m.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn single_forced_split() {
        let data = four_points();
        let family = grow_family(&data, &exact(1), &mut rng_from_seed(0)).unwrap();
        let tree = family.tree(&CoordSet::singleton(0)).unwrap();
        assert_eq!(tree.leaf_count(), 2);
        assert_eq!(tree.leaves()[0].region.interval(0), (0.2, f64::INFINITY));
        assert_eq!(tree.leaves()[0].value, 3.0);
        assert_eq!(tree.leaves()[1].region.interval(0), (f64::NEG_INFINITY, 0.2));
        assert_eq!(tree.leaves()[1].value, 1.0);
        assert_eq!(family.residuals(), &[0.0; 4]);
        assert_eq!(family.predict(&[0.15]), 1.0);
        assert_eq!(family.log().ssr, vec![20.0, 0.0]);
    }

    #[test]
    fn exhausted_leaves_idle() {
        let data = four_points();
        let family = grow_family(&data, &exact(10), &mut rng_from_seed(0)).unwrap();
        assert_eq!(family.tree(&CoordSet::singleton(0)).unwrap().leaf_count(), 4);
        assert_eq!(family.log().idle_iterations, 7);
    }

    #[test]
    fn degenerate_data() {
        let data = Dataset::new(vec![1.0, 2.0, 3.0], vec![vec![0.5, 1.0]; 3]).unwrap();
        assert!(matches!(
            grow_family(&data, &exact(3), &mut rng_from_seed(0)),
            Err(Error::DegenerateData)
        ));
        assert!(matches!(fit_forest(&data, &exact(3)), Err(Error::DegenerateData)));
    }

    #[test]
    fn single_family_forest_matches_grow_family() {
        let data = four_points();
        let params = FitParams { split_try: SplitTry::Sampled(2), ..exact(2) };
        let model = fit_forest(&data, &params).unwrap();
        let mut rng = rng_from_seed(derive_seed(0, 0));
        let family = grow_family(&data, &params, &mut rng).unwrap();
        assert_eq!(model.families()[0].trees, family.trees);
    }

    #[test]
    fn components_of_the_four_point_fit() {
        let model = fit_forest(&four_points(), &exact(1)).unwrap();
        let table = extract_components(&model, &CoordSet::singleton(0), &[vec![0.15], vec![0.5]]).unwrap();
        assert_eq!(table, vec![(vec![0.15], 1.0), (vec![0.5], 3.0)]);
        assert!(matches!(
            extract_components(&model, &CoordSet::new(vec![0, 1, 2]), &[]),
            Err(Error::UnsupportedOrder(3))
        ));
    }
}
