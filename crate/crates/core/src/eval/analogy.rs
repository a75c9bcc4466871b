//! Analogy answering by similarity multiplication.

use crate::error::{Error, Result};
use crate::io::WordVectors;
use crate::scalar::Scalar;

use super::{normalize_rows, AnalogyQuestion, EvalReport};

const EPSILON: f64 = 0.001;

/// Answer `a : b :: c : ?` over row-normalized vectors: the candidate `d`
/// outside `{a, b, c}` maximizing
/// `cos'(d,b) * cos'(d,c) / (cos'(d,a) + 0.001)` with `cos' = (cos+1)/2`.
/// Ties go to the lower word id.
pub fn answer_3cosmul<S: Scalar>(a: u32, b: u32, c: u32, data: &[S], dim: usize) -> Result<u32> {
    let vocab = data.len() / dim;
    if vocab <= 3 {
        return Err(Error::VocabTooSmall(vocab));
    }
    let row = |w: u32| &data[w as usize * dim..(w as usize + 1) * dim];
    let (ra, rb, rc) = (row(a), row(b), row(c));

    let mut best = f64::NEG_INFINITY;
    let mut answer = 0u32;
    for cand in 0..vocab as u32 {
        if cand == a || cand == b || cand == c {
            continue;
        }
        let rd = row(cand);
        let mut da = S::zero();
        let mut db = S::zero();
        let mut dc = S::zero();
        for j in 0..dim {
            let x = rd[j];
            da += x * ra[j];
            db += x * rb[j];
            dc += x * rc[j];
        }
        let shift = |cos: S| (cos.into_f64() + 1.0) / 2.0;
        let score = shift(db) * shift(dc) / (shift(da) + EPSILON);
        if score > best {
            best = score;
            answer = cand;
        }
    }
    Ok(answer)
}

/// Score an analogy set: questions with any word out of vocabulary are
/// skipped and counted; accuracy is over the rest. Questions fan out across
/// `workers` threads.
pub fn eval_analogy<S: Scalar>(
    questions: &[AnalogyQuestion],
    vectors: &WordVectors<S>,
    dataset: &str,
    workers: usize,
) -> Result<EvalReport> {
    let dim = vectors.dim();
    let mut data = vectors.data().to_vec();
    normalize_rows(&mut data, dim);

    let resolved: Vec<[u32; 4]> = questions
        .iter()
        .filter_map(|q| {
            Some([
                vectors.id(&q.a)?,
                vectors.id(&q.b)?,
                vectors.id(&q.c)?,
                vectors.id(&q.d)?,
            ])
        })
        .collect();
    let skipped = questions.len() - resolved.len();
    if resolved.is_empty() {
        return Err(Error::NoAnswerableQuestions);
    }

    let workers = workers.max(1).min(resolved.len());
    let chunk_size = resolved.len().div_ceil(workers);
    let data = &data;
    let correct = std::thread::scope(|scope| -> Result<usize> {
        let handles: Vec<_> = resolved
            .chunks(chunk_size)
            .map(|chunk| {
                scope.spawn(move || -> Result<usize> {
                    let mut correct = 0;
                    for &[a, b, c, d] in chunk {
                        if answer_3cosmul(a, b, c, data, dim)? == d {
                            correct += 1;
                        }
                    }
                    Ok(correct)
                })
            })
            .collect();
        let mut correct = 0;
        for handle in handles {
            correct += handle.join().expect("analogy worker panicked")?;
        }
        Ok(correct)
    })?;

    Ok(EvalReport::analogy(
        dataset,
        questions.len(),
        skipped,
        correct,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_unit_rows(rng: &mut ChaCha8Rng, v: usize, dim: usize) -> Vec<f64> {
        let mut data: Vec<f64> = (0..v * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        normalize_rows(&mut data, dim);
        data
    }

    /// Same formula, separately written: full enumeration with its own
    /// cosine loop and max tracking.
    fn brute_force(a: u32, b: u32, c: u32, data: &[f64], dim: usize) -> u32 {
        let vocab = data.len() / dim;
        let cos = |x: u32, y: u32| -> f64 {
            let (xs, ys) = (
                &data[x as usize * dim..(x as usize + 1) * dim],
                &data[y as usize * dim..(y as usize + 1) * dim],
            );
            let mut acc = 0.0;
            for j in 0..dim {
                acc += xs[j] * ys[j];
            }
            acc
        };
        let mut best_score = f64::NEG_INFINITY;
        let mut best = u32::MAX;
        for d in 0..vocab as u32 {
            if d == a || d == b || d == c {
                continue;
            }
            let s = ((cos(d, b) + 1.0) / 2.0) * ((cos(d, c) + 1.0) / 2.0)
                / ((cos(d, a) + 1.0) / 2.0 + 0.001);
            if s > best_score {
                best_score = s;
                best = d;
            }
        }
        best
    }

    #[test]
    fn recovers_the_constructed_answer() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..20 {
            let dim = 16;
            // a, b, c random unit vectors; d = b + c - a; the rest orthogonal
            // to all four so they score near the indifference baseline
            let mut data = random_unit_rows(&mut rng, 3, dim);
            let d: Vec<f64> = (0..dim)
                .map(|j| data[dim + j] + data[2 * dim + j] - data[j])
                .collect();
            data.extend_from_slice(&d);
            let basis: Vec<Vec<f64>> = (0..4)
                .map(|i| data[i * dim..(i + 1) * dim].to_vec())
                .collect();
            for _ in 0..8 {
                // Gram-Schmidt a random vector against a, b, c, d
                let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                for b in &basis {
                    let dot: f64 = x.iter().zip(b).map(|(p, q)| p * q).sum();
                    let norm2: f64 = b.iter().map(|q| q * q).sum();
                    for j in 0..dim {
                        x[j] -= dot / norm2 * b[j];
                    }
                }
                data.extend_from_slice(&x);
            }
            normalize_rows(&mut data, dim);

            let answer = answer_3cosmul(0, 1, 2, &data, dim).unwrap();
            assert_eq!(answer, 3);
            assert_eq!(brute_force(0, 1, 2, &data, dim), 3);
        }
    }

    #[test]
    fn never_returns_the_query_words() {
        // every vector is nearly b's vector, so b would win without the
        // exclusion rule
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let dim = 8;
        let base: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut data = Vec::new();
        for _ in 0..10 {
            data.extend(base.iter().map(|x| x + rng.gen_range(-1e-3..1e-3)));
        }
        normalize_rows(&mut data, dim);
        for _ in 0..50 {
            let a = rng.gen_range(0..10);
            let b = rng.gen_range(0..10);
            let c = rng.gen_range(0..10);
            let answer = answer_3cosmul(a, b, c, &data, dim).unwrap();
            assert!(answer != a && answer != b && answer != c);
        }
    }

    #[test]
    fn ties_break_to_the_lower_id() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let dim = 6;
        let mut data = random_unit_rows(&mut rng, 8, dim);
        // rows 4 and 7 both hold the winning vector b + c - a, so their
        // scores are bitwise equal and maximal; the lower id must win
        let winner: Vec<f64> = (0..dim)
            .map(|j| data[dim + j] + data[2 * dim + j] - data[j])
            .collect();
        data[4 * dim..5 * dim].copy_from_slice(&winner);
        data[7 * dim..8 * dim].copy_from_slice(&winner);
        normalize_rows(&mut data, dim);

        assert_eq!(answer_3cosmul(0, 1, 2, &data, dim).unwrap(), 4);
        assert_eq!(brute_force(0, 1, 2, &data, dim), 4);
    }

    #[test]
    fn rejects_tiny_vocabularies() {
        for v in 1..=3usize {
            let data = vec![1.0f64; v * 4];
            let err = answer_3cosmul(0, 0, 0, &data, 4).unwrap_err();
            assert!(matches!(err, Error::VocabTooSmall(n) if n == v));
        }
    }

    #[test]
    fn matches_brute_force_on_random_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let dim = 10;
        let data = random_unit_rows(&mut rng, 50, dim);
        for _ in 0..100 {
            let a = rng.gen_range(0..50);
            let b = rng.gen_range(0..50);
            let c = rng.gen_range(0..50);
            assert_eq!(
                answer_3cosmul(a, b, c, &data, dim).unwrap(),
                brute_force(a, b, c, &data, dim),
            );
        }
    }

    fn toy_vectors() -> WordVectors<f64> {
        // one-hot-ish geometry with an exact parallelogram:
        // king - man + woman = queen
        let words: Vec<String> = ["man", "woman", "king", "queen", "pad1", "pad2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let data = vec![
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            1.0, 0.0, 1.0, 0.0, //
            0.0, 1.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            -1.0, -1.0, -1.0, 1.0,
        ];
        WordVectors::new(words, 4, data)
    }

    #[test]
    fn eval_counts_oov_and_scores_the_rest() {
        let vectors = toy_vectors();
        let questions = vec![
            AnalogyQuestion {
                a: "man".into(),
                b: "king".into(),
                c: "woman".into(),
                d: "queen".into(),
            },
            AnalogyQuestion {
                a: "man".into(),
                b: "woman".into(),
                c: "king".into(),
                d: "queen".into(),
            },
            AnalogyQuestion {
                a: "emperor".into(), // OOV
                b: "king".into(),
                c: "woman".into(),
                d: "queen".into(),
            },
        ];
        let report = eval_analogy(&questions, &vectors, "toy", 1).unwrap();
        assert_eq!(report.total, 3);
        assert_eq!(report.skipped_oov, 1);
        assert_eq!(report.attempted, 2);
        assert_eq!(report.correct, Some(2));
        assert_eq!(report.accuracy, Some(100.0));

        // fanning out changes nothing
        let parallel = eval_analogy(&questions, &vectors, "toy", 4).unwrap();
        assert_eq!(parallel.correct, report.correct);
    }

    #[test]
    fn all_oov_is_an_error() {
        let vectors = toy_vectors();
        let questions = vec![AnalogyQuestion {
            a: "x".into(),
            b: "y".into(),
            c: "z".into(),
            d: "w".into(),
        }];
        assert!(matches!(
            eval_analogy(&questions, &vectors, "toy", 1),
            Err(Error::NoAnswerableQuestions)
        ));
    }

    #[test]
    fn accuracy_is_scale_invariant() {
        let vectors = toy_vectors();
        let scaled = WordVectors::new(
            vectors.words().to_vec(),
            vectors.dim(),
            vectors.data().iter().map(|x| x * 37.5).collect(),
        );
        let questions = vec![AnalogyQuestion {
            a: "man".into(),
            b: "king".into(),
            c: "woman".into(),
            d: "queen".into(),
        }];
        let a = eval_analogy(&questions, &vectors, "toy", 1).unwrap();
        let b = eval_analogy(&questions, &scaled, "toy", 1).unwrap();
        assert_eq!(a.correct, b.correct);
    }
}
