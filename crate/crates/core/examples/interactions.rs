//! Fits a forest to one of the benchmark models and lists the purified
//! components by how much they vary.
//!
//! cargo run --release --example interactions [model number]

use planted_forest::purify::purify_model;
use planted_forest::seed::rng_from_seed;
use planted_forest::sim::{generate_dataset, sample_mse, SimModelSpec};
use planted_forest::{fit_forest, FitParams, MaxInteraction};

fn main() -> planted_forest::Result<()> {
    let model_number = std::env::args().nth(1).map_or(2, |a| a.parse().expect("model number"));
    let spec = SimModelSpec::from_number(model_number, 4)?;
    let (data, truth) = generate_dataset(&spec, 500, &mut rng_from_seed(1))?;

    let params = FitParams {
        nsplits: 40,
        max_interaction: MaxInteraction::Bounded(2),
        seed: 1,
        ..FitParams::default()
    };
    let model = fit_forest(&data, &params)?;
    let mse = sample_mse(&truth, &model.predict_rows(data.rows()))?;
    println!("{} with {}: mse {mse:.4}", spec.name(), params.label());

    let purified = purify_model(&model)?;
    let mut spread: Vec<_> = purified
        .components
        .iter()
        .map(|(u, c)| {
            let (lo, hi) = c.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            (hi - lo, u)
        })
        .collect();
    spread.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (range, u) in spread.iter().take(8) {
        println!("{:>8}  range {range:.3}", u.to_string());
    }
    Ok(())
}
