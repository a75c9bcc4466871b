//! POS-tagged corpus ingestion: tag inventory, vocabulary building and
//! sentence encoding.
//!
//! The input format is one sentence per line, tokens whitespace-separated,
//! each token `surface_TAG` with the *last* underscore as the separator
//! (the output convention of common maximum-entropy taggers). Anything
//! that does not fit degrades to the catch-all tag rather than aborting.

use std::collections::HashMap;
use std::io::BufRead;

use rand::Rng;

use crate::error::{Error, Result};

/// The 36 Penn Treebank word-level tags, in the conventional order.
const PTB_WORD_TAGS: [&str; 36] = [
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNS", "NNP", "NNPS",
    "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG",
    "VBN", "VBP", "VBZ", "WDT", "WP", "WP$", "WRB",
];

/// The six Treebank symbol/punctuation tags carried alongside the word tags.
const PTB_SYMBOL_TAGS: [&str; 6] = ["#", "$", ".", ",", ":", "''"];

/// Catch-all tag for anything outside the inventory.
pub const CATCH_ALL_TAG: &str = "XX";

/// Fixed Penn Treebank tag inventory plus the `XX` catch-all.
///
/// Lookups never fail: unknown strings resolve to `XX`.
#[derive(Debug, Clone)]
pub struct TagSet {
    tags: Vec<String>,
    index: HashMap<String, u16>,
    catch_all: u16,
}

impl TagSet {
    /// The standard inventory: 36 word tags, 6 symbol tags, then `XX` (43 total).
    pub fn penn_treebank() -> Self {
        let mut tags: Vec<String> = PTB_WORD_TAGS
            .iter()
            .chain(PTB_SYMBOL_TAGS.iter())
            .map(|s| s.to_string())
            .collect();
        tags.push(CATCH_ALL_TAG.to_string());
        let index = tags
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u16))
            .collect();
        let catch_all = (tags.len() - 1) as u16;
        TagSet {
            tags,
            index,
            catch_all,
        }
    }

    /// Number of tags, including the catch-all.
    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Tag id for `tag`, or the catch-all id when unknown.
    pub fn id(&self, tag: &str) -> u16 {
        self.index.get(tag).copied().unwrap_or(self.catch_all)
    }

    pub fn catch_all_id(&self) -> u16 {
        self.catch_all
    }

    pub fn name(&self, id: u16) -> &str {
        &self.tags[id as usize]
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }
}

/// One encoded training token: a word id paired with a tag id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaggedToken {
    pub word: u32,
    pub tag: u16,
}

/// Min-count filtered vocabulary with dense ids in descending count order.
///
/// Ties in count are broken by first occurrence in the corpus, so builds
/// are deterministic.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    total_tokens: u64,
}

impl Vocabulary {
    pub(crate) fn from_sorted(words: Vec<String>, counts: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), counts.len());
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        let total_tokens = counts.iter().sum();
        Vocabulary {
            words,
            counts,
            index,
            total_tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Number of retained training tokens (sum of retained counts).
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }
}

/// How raw corpus lines are interpreted.
#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    /// Treat input as untagged text; every token gets the catch-all tag.
    pub plain: bool,
    /// Lowercase surfaces (default on, matching common corpus normalization).
    pub lowercase: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            plain: false,
            lowercase: true,
        }
    }
}

/// Split one `surface_TAG` token at its last underscore.
///
/// A token without an underscore is all surface, tagged with the catch-all.
fn split_token(token: &str) -> (&str, &str) {
    match token.rfind('_') {
        Some(pos) => (&token[..pos], &token[pos + 1..]),
        None => (token, CATCH_ALL_TAG),
    }
}

fn normalize_surface(surface: &str, opts: &ParseOptions) -> String {
    if opts.lowercase {
        surface.to_lowercase()
    } else {
        surface.to_string()
    }
}

/// Parse one sentence line into `(surface, tag)` pairs.
///
/// Malformed tokens degrade to the catch-all tag; this never fails.
pub fn parse_tagged_line(line: &str, opts: &ParseOptions) -> Vec<(String, String)> {
    line.split_whitespace()
        .map(|token| {
            if opts.plain {
                (normalize_surface(token, opts), CATCH_ALL_TAG.to_string())
            } else {
                let (surface, tag) = split_token(token);
                (normalize_surface(surface, opts), tag.to_string())
            }
        })
        .collect()
}

/// Encode parsed pairs against a vocabulary and tag set.
///
/// Out-of-vocabulary words are removed (positions close up); unknown tags
/// map to the catch-all.
pub fn encode_sentence(
    sentence: &[(String, String)],
    vocab: &Vocabulary,
    tags: &TagSet,
) -> Vec<TaggedToken> {
    sentence
        .iter()
        .filter_map(|(surface, tag)| {
            vocab.id(surface).map(|word| TaggedToken {
                word,
                tag: tags.id(tag),
            })
        })
        .collect()
}

/// Parse and encode one raw line in a single pass (the trainer's hot path).
///
/// Produces exactly `encode_sentence(&parse_tagged_line(line, opts), ..)`.
pub fn encode_line(
    line: &str,
    vocab: &Vocabulary,
    tags: &TagSet,
    opts: &ParseOptions,
    out: &mut Vec<TaggedToken>,
) {
    out.clear();
    let mut scratch = String::new();
    for token in line.split_whitespace() {
        let (surface, tag) = if opts.plain {
            (token, CATCH_ALL_TAG)
        } else {
            split_token(token)
        };
        let key: &str = if opts.lowercase {
            scratch.clear();
            if surface.is_ascii() {
                scratch.push_str(surface);
                scratch.make_ascii_lowercase();
            } else {
                scratch.extend(surface.chars().flat_map(char::to_lowercase));
            }
            &scratch
        } else {
            surface
        };
        if let Some(word) = vocab.id(key) {
            out.push(TaggedToken {
                word,
                tag: tags.id(tag),
            });
        }
    }
}

/// Per-word tag occurrence counts gathered while building the vocabulary.
///
/// Used as the gold label source for cluster purity: each word's label is
/// its most frequent corpus tag.
#[derive(Debug, Clone, Default)]
pub struct TagStats {
    /// Indexed by word id; each entry lists `(tag id, count)` sorted by tag id.
    counts: Vec<Vec<(u16, u64)>>,
}

impl TagStats {
    pub(crate) fn new(counts: Vec<Vec<(u16, u64)>>) -> Self {
        TagStats { counts }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn tag_counts(&self, word: u32) -> &[(u16, u64)] {
        &self.counts[word as usize]
    }

    /// The word's most frequent tag; ties go to the lower tag id.
    pub fn dominant_tag(&self, word: u32) -> u16 {
        let mut best_tag = 0u16;
        let mut best_count = 0u64;
        // Entries are sorted by tag id, so `>` keeps the lower id on ties.
        for &(tag, count) in &self.counts[word as usize] {
            if count > best_count {
                best_tag = tag;
                best_count = count;
            }
        }
        best_tag
    }
}

struct WordEntry {
    count: u64,
    first_seen: u64,
    tag_counts: Vec<(u16, u64)>,
}

/// Streaming vocabulary builder: count every token, then cut at `min_count`.
pub struct VocabBuilder<'a> {
    tags: &'a TagSet,
    entries: HashMap<String, WordEntry>,
    seen: u64,
}

impl<'a> VocabBuilder<'a> {
    pub fn new(tags: &'a TagSet) -> Self {
        VocabBuilder {
            tags,
            entries: HashMap::new(),
            seen: 0,
        }
    }

    pub fn add(&mut self, surface: &str, tag: &str) {
        let tag_id = self.tags.id(tag);
        let seen = self.seen;
        self.seen += 1;
        if let Some(entry) = self.entries.get_mut(surface) {
            entry.count += 1;
            match entry.tag_counts.binary_search_by_key(&tag_id, |&(t, _)| t) {
                Ok(i) => entry.tag_counts[i].1 += 1,
                Err(i) => entry.tag_counts.insert(i, (tag_id, 1)),
            }
            return;
        }
        self.entries.insert(
            surface.to_string(),
            WordEntry {
                count: 1,
                first_seen: seen,
                tag_counts: vec![(tag_id, 1)],
            },
        );
    }

    pub fn add_sentence(&mut self, sentence: &[(String, String)]) {
        for (surface, tag) in sentence {
            self.add(surface, tag);
        }
    }

    /// Filter at `min_count` and assign dense ids in descending count order,
    /// ties broken by first occurrence.
    pub fn finish(self, min_count: u64) -> Result<(Vocabulary, TagStats)> {
        if self.seen == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut retained: Vec<(String, WordEntry)> = self
            .entries
            .into_iter()
            .filter(|(_, e)| e.count >= min_count)
            .collect();
        retained
            .sort_by(|(_, a), (_, b)| b.count.cmp(&a.count).then(a.first_seen.cmp(&b.first_seen)));

        let mut words = Vec::with_capacity(retained.len());
        let mut counts = Vec::with_capacity(retained.len());
        let mut tag_counts = Vec::with_capacity(retained.len());
        for (word, entry) in retained {
            words.push(word);
            counts.push(entry.count);
            tag_counts.push(entry.tag_counts);
        }
        Ok((
            Vocabulary::from_sorted(words, counts),
            TagStats::new(tag_counts),
        ))
    }
}

/// Build the vocabulary (and tag statistics) from a corpus reader.
///
/// Lines are decoded lossily, so arbitrary bytes never abort the build.
pub fn build_vocabulary<R: BufRead>(
    reader: R,
    min_count: u64,
    opts: &ParseOptions,
    tags: &TagSet,
) -> Result<(Vocabulary, TagStats)> {
    let mut builder = VocabBuilder::new(tags);
    for_each_lossy_line(reader, |line| {
        for token in line.split_whitespace() {
            let (surface, tag) = if opts.plain {
                (token, CATCH_ALL_TAG)
            } else {
                split_token(token)
            };
            if opts.lowercase {
                builder.add(&surface.to_lowercase(), tag);
            } else {
                builder.add(surface, tag);
            }
        }
        Ok(())
    })?;
    builder.finish(min_count)
}

/// Iterate lines with lossy UTF-8 decoding (invalid bytes become U+FFFD).
pub(crate) fn for_each_lossy_line<R: BufRead>(
    mut reader: R,
    mut f: impl FnMut(&str) -> Result<()>,
) -> Result<()> {
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            return Ok(());
        }
        f(String::from_utf8_lossy(&buf).trim_end_matches(['\n', '\r']))?;
    }
}

/// Keep probability for frequent-word subsampling with threshold `t`:
/// `min(1, sqrt(t/f) + t/f)` where `f` is the word's corpus frequency.
pub fn subsample_keep_prob(count: u64, total_tokens: u64, threshold: f64) -> f64 {
    if count == 0 || total_tokens == 0 {
        return 1.0;
    }
    let f = count as f64 / total_tokens as f64;
    ((threshold / f).sqrt() + threshold / f).min(1.0)
}

/// Randomly drop frequent words from an encoded sentence, in place.
pub fn apply_subsampling<R: Rng>(
    tokens: &mut Vec<TaggedToken>,
    vocab: &Vocabulary,
    threshold: f64,
    rng: &mut R,
) {
    tokens.retain(|t| {
        let keep = subsample_keep_prob(vocab.count(t.word), vocab.total_tokens(), threshold);
        keep >= 1.0 || rng.gen::<f64>() < keep
    });
}
