//! Word similarity scoring: Spearman rank correlation between model cosines
//! and human judgments.

use crate::error::{Error, Result};
use crate::io::WordVectors;
use crate::scalar::Scalar;

use super::{EvalReport, SimilarityPair};

/// Average ranks (1-based); tied values share the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("non-finite score"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation times 100: Pearson over average ranks.
///
/// Identical rank vectors short-circuit to exactly 100.0, so any strictly
/// monotone agreement scores a clean 100. Degenerate inputs (a constant
/// list) have no defined correlation and return 0.
pub fn spearman_x100(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least 2 pairs");
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    if rx == ry {
        return 100.0;
    }
    let n = rx.len() as f64;
    let mean_x: f64 = rx.iter().sum::<f64>() / n;
    let mean_y: f64 = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in rx.iter().zip(&ry) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    let denom = (var_x * var_y).sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    100.0 * cov / denom
}

fn cosine<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x.into_f64(), y.into_f64());
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    let denom = (na * nb).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        dot / denom
    }
}

/// Score a similarity set: pairs with either word out of vocabulary are
/// skipped and counted; Spearman is computed over the rest.
pub fn eval_similarity<S: Scalar>(
    pairs: &[SimilarityPair],
    vectors: &WordVectors<S>,
    dataset: &str,
) -> Result<EvalReport> {
    let mut gold = Vec::with_capacity(pairs.len());
    let mut model = Vec::with_capacity(pairs.len());
    for pair in pairs {
        if let (Some(i), Some(j)) = (vectors.id(&pair.w1), vectors.id(&pair.w2)) {
            gold.push(pair.gold);
            model.push(cosine(vectors.row(i), vectors.row(j)));
        }
    }
    if gold.len() < 2 {
        return Err(Error::TooFewScoredPairs(gold.len()));
    }
    let skipped = pairs.len() - gold.len();
    Ok(EvalReport::similarity(
        dataset,
        pairs.len(),
        skipped,
        spearman_x100(&gold, &model),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ranks_average_over_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 30.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(
            average_ranks(&[10.0, 20.0, 20.0, 30.0]),
            vec![1.0, 2.5, 2.5, 4.0]
        );
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(average_ranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn monotone_agreement_is_exactly_100() {
        let xs = [1.0f64, 2.0, 5.0, 9.0, 12.5];
        let ys: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        assert_eq!(spearman_x100(&xs, &ys), 100.0);
        // with ties in matching places as well
        let xs = [1.0, 2.0, 2.0, 3.0];
        let ys = [10.0, 20.0, 20.0, 30.0];
        assert_eq!(spearman_x100(&xs, &ys), 100.0);
    }

    #[test]
    fn reversal_is_minus_100() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [4.0, 3.0, 2.0, 1.0];
        assert!((spearman_x100(&xs, &ys) + 100.0).abs() < 1e-9);
    }

    #[test]
    fn matches_the_closed_form_without_ties() {
        // rho = 1 - 6 * sum(d^2) / (n (n^2 - 1)) when there are no ties
        let xs = [1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 2.0];
        assert!((spearman_x100(&xs, &ys) - 50.0).abs() < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for _ in 0..50 {
            let n = rng.gen_range(3..40);
            // distinct values, random order
            let xs: Vec<f64> = {
                let mut v: Vec<f64> = (0..n).map(|i| i as f64).collect();
                for i in (1..v.len()).rev() {
                    v.swap(i, rng.gen_range(0..=i));
                }
                v
            };
            let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            // ys collisions are measure-zero; perturb to be safe
            let ys: Vec<f64> = ys
                .iter()
                .enumerate()
                .map(|(i, y)| y + i as f64 * 1e-9)
                .collect();
            let rx = average_ranks(&xs);
            let ry = average_ranks(&ys);
            let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
            let nf = n as f64;
            let closed = 100.0 * (1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0)));
            assert!((spearman_x100(&xs, &ys) - closed).abs() < 1e-9);
        }
    }

    #[test]
    fn invariant_under_monotone_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let xs: Vec<f64> = (0..60).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let ys: Vec<f64> = (0..60).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let base = spearman_x100(&xs, &ys);
        let xs2: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        let ys2: Vec<f64> = ys.iter().map(|y| 3.0 * y - 7.0).collect();
        assert!((spearman_x100(&xs2, &ys2) - base).abs() < 1e-12);
    }

    #[test]
    fn constant_input_returns_zero() {
        assert_eq!(spearman_x100(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), 0.0);
    }

    fn toy_vectors() -> WordVectors<f32> {
        let words: Vec<String> = ["sun", "moon", "rock", "sand"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let data = vec![
            1.0, 0.1, 0.0, //
            0.9, 0.3, 0.1, //
            -0.2, 1.0, 0.4, //
            -0.3, 0.9, 0.5,
        ];
        WordVectors::new(words, 3, data)
    }

    #[test]
    fn eval_skips_oov_pairs_and_reports() {
        let vectors = toy_vectors();
        let pairs = vec![
            SimilarityPair {
                w1: "sun".into(),
                w2: "moon".into(),
                gold: 9.0,
            },
            SimilarityPair {
                w1: "rock".into(),
                w2: "sand".into(),
                gold: 8.0,
            },
            SimilarityPair {
                w1: "sun".into(),
                w2: "rock".into(),
                gold: 2.0,
            },
            SimilarityPair {
                w1: "sun".into(),
                w2: "pluto".into(),
                gold: 5.0,
            },
        ];
        let report = eval_similarity(&pairs, &vectors, "toy").unwrap();
        assert_eq!(report.total, 4);
        assert_eq!(report.skipped_oov, 1);
        assert_eq!(report.attempted, 3);
        let rho = report.spearman_x100.unwrap();
        assert!((-100.0..=100.0).contains(&rho));
    }

    #[test]
    fn too_few_scored_pairs_is_an_error() {
        let vectors = toy_vectors();
        let pairs = vec![
            SimilarityPair {
                w1: "sun".into(),
                w2: "moon".into(),
                gold: 9.0,
            },
            SimilarityPair {
                w1: "sun".into(),
                w2: "pluto".into(),
                gold: 5.0,
            },
        ];
        let err = eval_similarity(&pairs, &vectors, "toy").unwrap_err();
        assert!(matches!(err, Error::TooFewScoredPairs(1)));
    }
}
