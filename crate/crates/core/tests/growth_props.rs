mod common;

use common::random_dataset;
use planted_forest::forest::{bookkeeping_error, grow_family_observed};
use planted_forest::seed::rng_from_seed;
use planted_forest::{fit_forest, FitParams, ForestModel, MaxInteraction, SplitTry, Tree};
use proptest::prelude::*;

fn params_strategy() -> impl Strategy<Value = FitParams> {
    (
        1usize..40,
        prop_oneof![Just(0.25), Just(0.5), Just(0.75), Just(1.0)],
        prop_oneof![(1usize..12).prop_map(SplitTry::Sampled), Just(SplitTry::All)],
        prop_oneof![
            Just(MaxInteraction::Bounded(1)),
            Just(MaxInteraction::Bounded(2)),
            Just(MaxInteraction::Unbounded)
        ],
        any::<u64>(),
    )
        .prop_map(|(nsplits, t_try, split_try, max_interaction, seed)| FitParams {
            ntrees: 3,
            nsplits,
            t_try,
            split_try,
            max_interaction,
            seed,
            bootstrap: true,
        })
}

fn assert_partitions_line(tree: &Tree) {
    let mut bounds: Vec<(f64, f64)> = tree.leaves().iter().map(|l| (l.region.lower()[0], l.region.upper()[0])).collect();
    bounds.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert_eq!(bounds[0].0, f64::NEG_INFINITY);
    assert_eq!(bounds[bounds.len() - 1].1, f64::INFINITY);
    for w in bounds.windows(2) {
        assert_eq!(w[0].1, w[1].0);
    }
}

fn check_structure(model: &ForestModel) {
    for family in model.families() {
        for tree in family.trees() {
            let order = tree.coords().len();
            assert!(model.params().max_interaction.allows(order));
            if order == 1 {
                assert_partitions_line(tree);
            } else {
                // a spawn adds two leaves, a later split of one leaf nets one more
                assert_ne!(tree.leaf_count(), 1);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residuals_track_predictions(seed in 0u64..10_000, n in 5usize..60, d in 1usize..4, params in params_strategy()) {
        let data = random_dataset(seed, n, d);
        let mut worst: f64 = 0.0;
        let mut ssr_ok = true;
        let family = grow_family_observed(&data, &params, &mut rng_from_seed(seed), |family, _| {
            worst = worst.max(bookkeeping_error(family, &data));
            let ssr = &family.log().ssr;
            let (prev, last) = (ssr[ssr.len() - 2], ssr[ssr.len() - 1]);
            ssr_ok &= last <= prev + 1e-12 * (1.0 + prev);
            let direct: f64 = family.residuals().iter().map(|r| r * r).sum();
            ssr_ok &= (direct - last).abs() <= 1e-9 * (1.0 + direct);
        })
        .unwrap();
        prop_assert!(worst < 1e-10, "bookkeeping error {}", worst);
        prop_assert!(ssr_ok);
        prop_assert_eq!(family.log().ssr.len(), params.nsplits + 1);
    }

    #[test]
    fn forests_have_valid_structure(seed in 0u64..10_000, n in 5usize..40, d in 1usize..4, params in params_strategy()) {
        let data = random_dataset(seed, n, d);
        let model = fit_forest(&data, &params).unwrap();
        check_structure(&model);
        prop_assert_eq!(model.families().len(), params.ntrees);
    }

    #[test]
    fn json_round_trip_is_lossless(seed in 0u64..10_000, n in 5usize..40, d in 1usize..4, params in params_strategy()) {
        let data = random_dataset(seed, n, d);
        let model = fit_forest(&data, &params).unwrap();
        let text = model.to_json().unwrap();
        let back = ForestModel::from_json(&text).unwrap();
        prop_assert_eq!(back.to_json().unwrap(), text);
        for x in data.rows() {
            prop_assert_eq!(back.predict(x).to_bits(), model.predict(x).to_bits());
        }
    }
}

#[test]
fn fits_are_identical_across_thread_counts() {
    let data = random_dataset(11, 80, 3);
    let params = FitParams {
        ntrees: 12,
        nsplits: 25,
        max_interaction: MaxInteraction::Unbounded,
        seed: 42,
        ..FitParams::default()
    };
    let fit_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| fit_forest(&data, &params).unwrap().to_json().unwrap())
    };
    let one = fit_with(1);
    assert_eq!(one, fit_with(4));
    assert_eq!(one, fit_with(1));
    let other = fit_forest(&data, &FitParams { seed: 43, ..params.clone() }).unwrap();
    assert_ne!(one, other.to_json().unwrap());
}

#[test]
fn no_bootstrap_single_family_uses_all_rows() {
    let data = random_dataset(3, 30, 2);
    let params = FitParams {
        ntrees: 1,
        bootstrap: false,
        ..FitParams::default()
    };
    let model = fit_forest(&data, &params).unwrap();
    assert_eq!(model.families()[0].sample(), (0..30).collect::<Vec<_>>().as_slice());
    assert!(bookkeeping_error(&model.families()[0], &data) < 1e-10);
}
