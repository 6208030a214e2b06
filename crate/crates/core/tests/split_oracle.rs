mod common;

use common::{brute_force_first_split, random_dataset};
use planted_forest::seed::rng_from_seed;
use planted_forest::{grow_family, CoordSet, FitParams, MaxInteraction, SplitTry, TreeFamily};

fn exhaustive() -> FitParams {
    FitParams {
        ntrees: 1,
        nsplits: 1,
        t_try: 1.0,
        split_try: SplitTry::All,
        max_interaction: MaxInteraction::Unbounded,
        bootstrap: false,
        seed: 0,
    }
}

/// The (coordinate, point) of the single split applied to a fresh family.
pub fn first_split(family: &TreeFamily) -> (usize, f64) {
    let tree = family.trees().find(|t| t.leaf_count() == 2).expect("one split tree");
    let k = tree.coords().as_slice()[0];
    let c = tree.leaves().iter().map(|l| l.region.upper()[0]).fold(f64::INFINITY, f64::min);
    (k, c)
}

fn left_group(data: &planted_forest::Dataset, (k, c): (usize, f64)) -> Vec<bool> {
    let side: Vec<bool> = (0..data.n()).map(|i| data.value(i, k) <= c).collect();
    // the same cut with the sides swapped is the same partition
    if side[0] { side } else { side.iter().map(|b| !b).collect() }
}

#[test]
fn first_split_matches_exhaustive_search() {
    for case in 0..200u64 {
        let n = 2 + (case as usize * 7) % 49;
        let d = 1 + (case as usize) % 3;
        let data = random_dataset(case, n, d);
        let family = grow_family(&data, &exhaustive(), &mut rng_from_seed(case)).unwrap();
        let (k, c, ssr) = brute_force_first_split(&data).unwrap();
        let engine = first_split(&family);
        if engine != (k, c) {
            // Only a split cutting the sample into the same two groups along
            // another coordinate may differ, since its score is the same number
            // up to rounding.
            assert_eq!(left_group(&data, engine), left_group(&data, (k, c)), "case {case}: n={n} d={d}");
        }
        let after = *family.log().ssr.last().unwrap();
        assert!((after - ssr).abs() <= 1e-9 * (1.0 + ssr), "case {case}: {after} vs {ssr}");
        assert_eq!(family.tree(&CoordSet::singleton(engine.0)).unwrap().leaf_count(), 2);
    }
}
