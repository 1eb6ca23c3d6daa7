#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal))
}

/// Points uniform on `[-1, 1]^2` away from the axes, labelled by XOR of the signs.
pub fn xor(n: usize, seed: u64) -> (Array2<f64>, Vec<bool>) {
    let mut r = rng(seed);
    let mut x = Array2::zeros((n, 2));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let a: f64 = r.random_range(0.1..1.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
        let b: f64 = r.random_range(0.1..1.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
        x[[i, 0]] = a;
        x[[i, 1]] = b;
        y.push((a > 0.0) != (b > 0.0));
    }
    (x, y)
}

/// Central-difference gradient of `f` at `theta`.
pub fn numeric_gradient(theta: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|k| {
            let orig = t[k];
            t[k] = orig + h;
            let up = f(&t);
            t[k] = orig - h;
            let down = f(&t);
            t[k] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest `|a - b| / max(|a|, |b|, floor)` over paired components.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic.iter().zip(numeric).map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor)).fold(0.0, f64::max)
}

/// Area under the ROC curve as the fraction of concordant (positive, negative)
/// pairs, ties counted one half.
pub fn brute_force_auroc(y: &[bool], s: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] && !y[j] {
                den += 1.0;
                if s[i] > s[j] {
                    num += 1.0;
                } else if s[i] == s[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

/// Average precision: walk the distinct score thresholds from high to low and
/// add `(recall_k - recall_{k-1}) * precision_k`.
pub fn brute_force_average_precision(y: &[bool], s: &[f64]) -> f64 {
    let mut thresholds: Vec<f64> = s.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let positives = y.iter().filter(|&&b| b).count() as f64;
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for t in thresholds {
        let (mut tp, mut fp) = (0.0, 0.0);
        for (yi, si) in y.iter().zip(s) {
            if *si >= t {
                if *yi {
                    tp += 1.0
                } else {
                    fp += 1.0
                }
            }
        }
        let recall = tp / positives;
        ap += (recall - prev_recall) * tp / (tp + fp);
        prev_recall = recall;
    }
    ap
}
