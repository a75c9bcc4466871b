//! Evaluation harness: word analogies (3CosMul), word similarity (Spearman),
//! and POS cluster purity over the trained vectors.

mod analogy;
mod cluster;
mod similarity;

pub use analogy::{answer_3cosmul, eval_analogy};
pub use cluster::{cluster_purity, coarse_tag, export_coords, kmeans, CoarseGroup};
pub use similarity::{eval_similarity, spearman_x100};

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `a : b :: c : d` with `d` the expected answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalogyQuestion {
    pub a: String,
    pub b: String,
    pub c: String,
    pub d: String,
}

/// A word pair with a human similarity judgment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityPair {
    pub w1: String,
    pub w2: String,
    pub gold: f64,
}

/// One dataset's scores; serialized as a JSON object per dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub total: usize,
    pub skipped_oov: usize,
    pub attempted: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correct: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spearman_x100: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purity_pct: Option<f64>,
}

impl EvalReport {
    fn base(dataset: &str, total: usize, skipped_oov: usize) -> Self {
        EvalReport {
            dataset: dataset.to_string(),
            total,
            skipped_oov,
            attempted: total - skipped_oov,
            correct: None,
            accuracy: None,
            spearman_x100: None,
            purity_pct: None,
        }
    }

    pub fn analogy(dataset: &str, total: usize, skipped_oov: usize, correct: usize) -> Self {
        let mut report = Self::base(dataset, total, skipped_oov);
        report.correct = Some(correct);
        report.accuracy = Some(100.0 * correct as f64 / report.attempted as f64);
        report
    }

    pub fn similarity(dataset: &str, total: usize, skipped_oov: usize, rho_x100: f64) -> Self {
        let mut report = Self::base(dataset, total, skipped_oov);
        report.spearman_x100 = Some(rho_x100);
        report
    }

    pub fn purity(dataset: &str, points: usize, purity_pct: f64) -> Self {
        let mut report = Self::base(dataset, points, 0);
        report.purity_pct = Some(purity_pct);
        report
    }
}

/// Analogy file: four whitespace-separated words per line; lines starting
/// with `:` are section headers and are skipped. Words are lowercased to
/// match vocabulary normalization.
pub fn load_analogy<R: BufRead>(reader: R, name: &str) -> Result<Vec<AnalogyQuestion>> {
    let mut questions = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with(':') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                name,
                i + 1,
                format!("expected 4 words, found {}", fields.len()),
            ));
        }
        questions.push(AnalogyQuestion {
            a: fields[0].to_lowercase(),
            b: fields[1].to_lowercase(),
            c: fields[2].to_lowercase(),
            d: fields[3].to_lowercase(),
        });
    }
    Ok(questions)
}

/// Similarity file: `w1 w2 score` per line (spaces or tabs); an optional
/// one-line header is skipped when its third field is not numeric.
pub fn load_similarity<R: BufRead>(reader: R, name: &str) -> Result<Vec<SimilarityPair>> {
    let mut pairs = Vec::new();
    let mut seen_content = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let is_first = !seen_content;
        seen_content = true;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                name,
                i + 1,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        match fields[2].parse::<f64>() {
            Ok(gold) if gold.is_finite() => pairs.push(SimilarityPair {
                w1: fields[0].to_lowercase(),
                w2: fields[1].to_lowercase(),
                gold,
            }),
            Ok(gold) => {
                return Err(Error::parse(
                    name,
                    i + 1,
                    format!("non-finite score {gold}"),
                ))
            }
            Err(_) if is_first => continue, // header line
            Err(_) => {
                return Err(Error::parse(
                    name,
                    i + 1,
                    format!("invalid score `{}`", fields[2]),
                ))
            }
        }
    }
    Ok(pairs)
}

/// Scale every row to unit L2 norm in place; zero rows are left zero.
pub fn normalize_rows<S: Scalar>(data: &mut [S], dim: usize) {
    assert!(dim > 0 && data.len().is_multiple_of(dim));
    for row in data.chunks_exact_mut(dim) {
        let norm = row.iter().map(|&x| x * x).sum::<S>().sqrt();
        if norm > S::zero() {
            for x in row {
                *x /= norm;
            }
        }
    }
}
