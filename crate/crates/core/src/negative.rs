//! Unigram^α negative sampling table.
//!
//! Slots are filled by cumulative fraction: slot `j` belongs to word `w`
//! when `j / size` falls inside `w`'s normalized `count^α` interval. Every
//! word's slot count is therefore within one slot of its exact share.

use rand::Rng;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.75;
pub const DEFAULT_TABLE_SIZE: usize = 10_000_000;

/// Attempts to re-draw before giving up when the sampled word collides
/// with the excluded one.
const MAX_DRAW_ATTEMPTS: usize = 100;

#[derive(Debug, Clone)]
pub struct NegativeTable {
    table: Vec<u32>,
}

impl NegativeTable {
    /// Build a table of `size` slots proportional to `count(w)^alpha`.
    pub fn build(vocab: &Vocabulary, alpha: f64, size: usize) -> Result<Self> {
        if size < vocab.len() {
            return Err(Error::TableTooSmall {
                size,
                vocab: vocab.len(),
            });
        }
        let weights: Vec<f64> = vocab
            .counts()
            .iter()
            .map(|&c| (c as f64).powf(alpha))
            .collect();
        let total: f64 = weights.iter().sum();

        let mut table = Vec::with_capacity(size);
        let mut word = 0usize;
        let mut cumulative = weights[0] / total;
        for slot in 0..size {
            // advance to the word whose cumulative interval contains slot/size
            while slot as f64 / size as f64 >= cumulative && word + 1 < weights.len() {
                word += 1;
                cumulative += weights[word] / total;
            }
            table.push(word as u32);
        }
        Ok(NegativeTable { table })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn slots(&self) -> &[u32] {
        &self.table
    }

    /// Sample one negative word, re-drawing on collision with `exclude`
    /// (bounded; the last draw is returned if every attempt collides).
    pub fn draw<R: Rng>(&self, rng: &mut R, exclude: u32) -> u32 {
        let mut drawn = self.table[rng.gen_range(0..self.table.len())];
        for _ in 1..MAX_DRAW_ATTEMPTS {
            if drawn != exclude {
                break;
            }
            drawn = self.table[rng.gen_range(0..self.table.len())];
        }
        drawn
    }
}
