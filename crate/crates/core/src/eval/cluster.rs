//! Syntactic clustering diagnostics: k-means over embeddings, scored by the
//! purity of coarse part-of-speech groups inside each cluster.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::normalize_rows;

const MAX_ITERS: usize = 200;
const SHIFT_TOL: f64 = 1e-6;

/// Coarse part-of-speech groups used as gold labels for cluster purity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoarseGroup {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Other,
}

impl CoarseGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            CoarseGroup::Noun => "N",
            CoarseGroup::Verb => "V",
            CoarseGroup::Adjective => "J",
            CoarseGroup::Adverb => "R",
            CoarseGroup::Other => "Other",
        }
    }

    pub fn index(self) -> usize {
        match self {
            CoarseGroup::Noun => 0,
            CoarseGroup::Verb => 1,
            CoarseGroup::Adjective => 2,
            CoarseGroup::Adverb => 3,
            CoarseGroup::Other => 4,
        }
    }
}

/// Map a Penn Treebank tag name onto its coarse group.
pub fn coarse_tag(tag: &str) -> CoarseGroup {
    match tag {
        "NN" | "NNS" | "NNP" | "NNPS" => CoarseGroup::Noun,
        "VB" | "VBD" | "VBG" | "VBN" | "VBP" | "VBZ" => CoarseGroup::Verb,
        "JJ" | "JJR" | "JJS" => CoarseGroup::Adjective,
        "RB" | "RBR" | "RBS" => CoarseGroup::Adverb,
        _ => CoarseGroup::Other,
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cluster `n` rows of length `dim` into `k` groups with k-means.
///
/// Rows are length-normalized internally so clustering reflects direction
/// rather than magnitude. Centroids are seeded with k-means++ from `seed`,
/// then refined by Lloyd iterations until assignments settle. Ties go to the
/// lower cluster index, and an emptied cluster is re-seeded with the point
/// farthest from its current centroid, so the result is deterministic in
/// `(data, k, seed)`.
pub fn kmeans<S: Scalar>(data: &[S], dim: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 1 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    assert!(
        dim > 0 && data.len().is_multiple_of(dim),
        "data must be n rows of length dim"
    );
    let n = data.len() / dim;
    if n < k {
        return Err(Error::TooFewPoints { points: n, k });
    }

    let mut points: Vec<f64> = data.iter().map(|v| v.into_f64()).collect();
    normalize_rows(&mut points, dim);
    let row = |i: usize| &points[i * dim..(i + 1) * dim];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<f64> = Vec::with_capacity(k * dim);

    // k-means++: each new centroid is drawn with probability proportional to
    // the squared distance to the nearest centroid chosen so far.
    let first = rng.gen_range(0..n);
    centroids.extend_from_slice(row(first));
    let mut best_d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), &centroids[..dim])).collect();
    while centroids.len() < k * dim {
        let total: f64 = best_d2.iter().sum();
        let chosen = if total > 0.0 {
            let r = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in best_d2.iter().enumerate() {
                acc += d;
                if acc >= r {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // all points coincide with existing centroids; any choice works
            rng.gen_range(0..n)
        };
        let start = centroids.len();
        centroids.extend_from_slice(row(chosen));
        let new_c = centroids[start..start + dim].to_vec();
        for (i, d) in best_d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(row(i), &new_c));
        }
    }

    let mut assignment = vec![0usize; n];
    for _ in 0..MAX_ITERS {
        // assign each point to the nearest centroid, lower index on ties
        for (i, a) in assignment.iter_mut().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d = sq_dist(row(i), &centroids[c * dim..(c + 1) * dim]);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            *a = best;
        }

        // repair empty clusters: each takes the point farthest from its own
        // centroid, never draining a donor below one member (possible since
        // n >= k) and never re-stealing a point within the same pass
        let mut counts = vec![0usize; k];
        for &a in &assignment {
            counts[a] += 1;
        }
        let mut stolen = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far = usize::MAX;
            let mut far_d = -1.0;
            for (i, &a) in assignment.iter().enumerate() {
                if stolen[i] || counts[a] < 2 {
                    continue;
                }
                let d = sq_dist(row(i), &centroids[a * dim..(a + 1) * dim]);
                if d > far_d {
                    far_d = d;
                    far = i;
                }
            }
            debug_assert_ne!(far, usize::MAX, "no donor for empty cluster");
            counts[assignment[far]] -= 1;
            assignment[far] = c;
            counts[c] = 1;
            stolen[far] = true;
        }

        // recompute centroids and measure how far they moved
        let mut sums = vec![0.0f64; k * dim];
        for (i, &a) in assignment.iter().enumerate() {
            for (s, v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(row(i)) {
                *s += v;
            }
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            debug_assert!(counts[c] > 0);
            let cnt = counts[c] as f64;
            let mut d2 = 0.0;
            for j in 0..dim {
                let new = sums[c * dim + j] / cnt;
                let old = centroids[c * dim + j];
                d2 += (new - old) * (new - old);
                centroids[c * dim + j] = new;
            }
            shift = shift.max(d2.sqrt());
        }
        if shift < SHIFT_TOL {
            break;
        }
    }

    Ok(assignment)
}

/// Percentage of points whose gold label matches the majority label of their
/// cluster. Majority ties inside a cluster resolve to the smaller gold label,
/// which does not change the score (either choice covers the same count).
pub fn cluster_purity(assignment: &[usize], gold: &[usize]) -> f64 {
    assert_eq!(assignment.len(), gold.len());
    assert!(!assignment.is_empty(), "purity of an empty clustering");
    let k = assignment.iter().max().unwrap() + 1;
    let g = gold.iter().max().unwrap() + 1;
    let mut table = vec![0usize; k * g];
    for (&a, &lab) in assignment.iter().zip(gold) {
        table[a * g + lab] += 1;
    }
    let majority: usize = (0..k)
        .map(|c| table[c * g..(c + 1) * g].iter().copied().max().unwrap())
        .sum();
    100.0 * majority as f64 / assignment.len() as f64
}

/// Write rows as `word<TAB>group<TAB>v1 v2 ... vd` with a header line, for
/// plotting or manual inspection.
pub fn export_coords<S: Scalar, W: Write>(
    entries: &[(&str, CoarseGroup)],
    data: &[S],
    dim: usize,
    out: &mut W,
) -> Result<()> {
    assert_eq!(entries.len() * dim, data.len());
    writeln!(out, "word\tgroup\tvector")?;
    for (i, (word, group)) in entries.iter().enumerate() {
        write!(out, "{word}\t{}\t", group.as_str())?;
        for (j, v) in data[i * dim..(i + 1) * dim].iter().enumerate() {
            if j > 0 {
                write!(out, " ")?;
            }
            write!(out, "{:.6}", v.into_f64())?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_groups_cover_the_tag_lists() {
        for t in ["NN", "NNS", "NNP", "NNPS"] {
            assert_eq!(coarse_tag(t), CoarseGroup::Noun);
        }
        for t in ["VB", "VBD", "VBG", "VBN", "VBP", "VBZ"] {
            assert_eq!(coarse_tag(t), CoarseGroup::Verb);
        }
        for t in ["JJ", "JJR", "JJS"] {
            assert_eq!(coarse_tag(t), CoarseGroup::Adjective);
        }
        for t in ["RB", "RBR", "RBS"] {
            assert_eq!(coarse_tag(t), CoarseGroup::Adverb);
        }
        for t in ["DT", "IN", "CD", "XX", ".", "$"] {
            assert_eq!(coarse_tag(t), CoarseGroup::Other);
        }
    }

    /// Two well-separated directional clouds must be recovered perfectly.
    #[test]
    fn separates_two_clean_clouds() {
        let mut data: Vec<f64> = Vec::new();
        let mut gold = Vec::new();
        for i in 0..20 {
            let jitter = (i as f64) * 0.001;
            data.extend_from_slice(&[1.0, jitter, 0.0]);
            gold.push(0);
        }
        for i in 0..20 {
            let jitter = (i as f64) * 0.001;
            data.extend_from_slice(&[0.0, jitter, -1.0]);
            gold.push(1);
        }
        let assignment = kmeans(&data, 3, 2, 11).unwrap();
        assert_eq!(cluster_purity(&assignment, &gold), 100.0);
        // all members of each cloud share one label
        assert!(assignment[0..20].iter().all(|&a| a == assignment[0]));
        assert!(assignment[20..].iter().all(|&a| a == assignment[20]));
        assert_ne!(assignment[0], assignment[20]);
    }

    #[test]
    fn k_equals_one_puts_everything_together() {
        let data = vec![1.0f64, 0.0, 0.0, 1.0, 0.5, 0.5];
        let assignment = kmeans(&data, 2, 1, 3).unwrap();
        assert_eq!(assignment, vec![0, 0, 0]);
    }

    #[test]
    fn k_equals_n_separates_distinct_points() {
        let data = vec![
            1.0f64, 0.0, //
            0.0, 1.0, //
            -1.0, 0.0, //
            0.0, -1.0,
        ];
        let assignment = kmeans(&data, 2, 4, 5).unwrap();
        let mut seen = assignment.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }

    #[test]
    fn rejects_bad_configurations() {
        let data = vec![1.0f64, 0.0, 0.0, 1.0];
        assert!(matches!(
            kmeans(&data, 2, 0, 1).unwrap_err(),
            Error::InvalidConfig(_)
        ));
        assert!(matches!(
            kmeans(&data, 2, 3, 1).unwrap_err(),
            Error::TooFewPoints { points: 2, k: 3 }
        ));
    }

    #[test]
    fn duplicate_points_with_k_equal_n_still_terminate() {
        let data = vec![1.0f64, 0.0, 1.0, 0.0, 1.0, 0.0];
        let assignment = kmeans(&data, 2, 3, 9).unwrap();
        assert_eq!(assignment.len(), 3);
        // every cluster index stays in range and all clusters are populated
        let mut seen = assignment.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2]);
    }

    #[test]
    fn deterministic_in_seed() {
        let mut data = Vec::new();
        for i in 0..50 {
            let x = (i as f64 * 0.7).sin();
            let y = (i as f64 * 1.3).cos();
            data.extend_from_slice(&[x, y, x * y]);
        }
        let a = kmeans(&data, 3, 5, 42).unwrap();
        let b = kmeans(&data, 3, 5, 42).unwrap();
        assert_eq!(a, b);
    }

    /// One cluster holding 3 nouns and 1 verb plus one holding 2 verbs:
    /// (3 + 2) / 6 of the points sit under their cluster's majority label.
    #[test]
    fn purity_counts_majority_mass() {
        let assignment = [0, 0, 0, 0, 1, 1];
        let gold = [0, 0, 0, 1, 1, 1];
        let purity = cluster_purity(&assignment, &gold);
        assert!((purity - 83.33).abs() < 0.01, "got {purity}");
    }

    #[test]
    fn purity_of_a_perfect_clustering_is_100() {
        let assignment = [2, 2, 0, 0, 1];
        let gold = [0, 0, 1, 1, 4];
        assert_eq!(cluster_purity(&assignment, &gold), 100.0);
    }

    #[test]
    fn purity_ignores_cluster_relabeling() {
        let gold = [0, 0, 1, 1, 2, 2];
        let a = [0, 0, 1, 1, 2, 2];
        let b = [2, 2, 0, 0, 1, 1];
        assert_eq!(cluster_purity(&a, &gold), cluster_purity(&b, &gold));
    }

    #[test]
    fn export_writes_header_and_rows() {
        let entries = vec![
            ("cat", CoarseGroup::Noun),
            ("runs", CoarseGroup::Verb),
            ("blue", CoarseGroup::Adjective),
        ];
        let data = vec![1.0f32, -0.5, 0.25, 0.125, 0.0, 2.0];
        let mut out = Vec::new();
        export_coords(&entries, &data, 2, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "word\tgroup\tvector");
        assert_eq!(lines[1], "cat\tN\t1.000000 -0.500000");
        assert_eq!(lines[2], "runs\tV\t0.250000 0.125000");
        assert_eq!(lines[3], "blue\tJ\t0.000000 2.000000");
    }

    #[test]
    fn export_of_nothing_is_just_the_header() {
        let entries: Vec<(&str, CoarseGroup)> = Vec::new();
        let data: Vec<f32> = Vec::new();
        let mut out = Vec::new();
        export_coords(&entries, &data, 4, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "word\tgroup\tvector\n");
    }
}
