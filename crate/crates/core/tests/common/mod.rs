#![allow(dead_code)]

use planted_forest::seed::rng_from_seed;
use planted_forest::Dataset;
use rand::Rng;

/// Random data with `n` rows, `d` columns and values rounded to a coarse
/// grid so that ties in `x` occur.
pub fn random_dataset(seed: u64, n: usize, d: usize) -> Dataset {
    let mut rng = rng_from_seed(seed);
    loop {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| (rng.random::<f64>() * 20.0).floor() / 20.0).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().sum::<f64>().sin() + rng.random::<f64>())
            .collect();
        let data = Dataset::new(y, rows).unwrap();
        if data.has_variation() {
            return data;
        }
    }
}

/// Exhaustive first split of an unsplit family: tries every coordinate and
/// every distinct value, computes the residual sum of squares directly and
/// keeps the first minimum in (coordinate, value) order.
/// Returns `(coordinate, split point, ssr)`.
pub fn brute_force_first_split(data: &Dataset) -> Option<(usize, f64, f64)> {
    let y = data.y();
    let mut best: Option<(usize, f64, f64)> = None;
    for k in 0..data.d() {
        let mut values: Vec<f64> = (0..data.n()).map(|i| data.value(i, k)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for &c in &values {
            let left: Vec<f64> = (0..data.n()).filter(|&i| data.value(i, k) <= c).map(|i| y[i]).collect();
            let right: Vec<f64> = (0..data.n()).filter(|&i| data.value(i, k) > c).map(|i| y[i]).collect();
            if left.is_empty() || right.is_empty() {
                continue;
            }
            let ssr = sse(&left) + sse(&right);
            if best.is_none_or(|(_, _, b)| ssr < b) {
                best = Some((k, c, ssr));
            }
        }
    }
    best
}

fn sse(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum()
}
