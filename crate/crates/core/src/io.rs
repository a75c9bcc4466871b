//! On-disk formats: vector files (text and word2vec-style binary), relevance
//! tensors, and the vocabulary file with per-word tag statistics.
//!
//! Loaders return structured errors on any malformed input — truncated files,
//! bad headers, or implausible binary values — never panics or partial data.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::corpus::{TagSet, TagStats, Vocabulary};
use crate::error::{Error, Result};
use crate::model::RelevanceTensor;
use crate::scalar::Scalar;

/// Binary values outside this magnitude fail the load: trained embeddings
/// never get near it, while byte-swapped or corrupt floats usually do.
const MAX_PLAUSIBLE: f64 = 1e6;
/// Nonzero binary values below this magnitude are treated the same way
/// (byte-swapping small floats tends to produce subnormals).
const MIN_PLAUSIBLE: f64 = 1e-30;

/// A vocabulary-ordered embedding matrix: the interchange object between
/// training, serialization, and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors<S> {
    words: Vec<String>,
    index: HashMap<String, u32>,
    dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> WordVectors<S> {
    pub fn new(words: Vec<String>, dim: usize, data: Vec<S>) -> Self {
        assert_eq!(words.len() * dim, data.len(), "matrix shape mismatch");
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        WordVectors {
            words,
            index,
            dim,
            data,
        }
    }

    /// Borrow a trained matrix (by convention the input vectors) in
    /// vocabulary order.
    pub fn from_model(vocab: &Vocabulary, dim: usize, data: &[S]) -> Self {
        Self::new(vocab.words().to_vec(), dim, data.to_vec())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn row(&self, id: u32) -> &[S] {
        &self.data[id as usize * self.dim..(id as usize + 1) * self.dim]
    }
}

/// Text vector file: header `V d`, then `word v1 .. vd` per line with six
/// decimal places (word2vec text convention).
pub fn save_vectors_text<S: Scalar, W: Write>(vectors: &WordVectors<S>, mut out: W) -> Result<()> {
    writeln!(out, "{} {}", vectors.len(), vectors.dim())?;
    for (i, word) in vectors.words().iter().enumerate() {
        out.write_all(word.as_bytes())?;
        for value in vectors.row(i as u32) {
            write!(out, " {value:.6}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_vectors_text<S: Scalar, R: BufRead>(reader: R, name: &str) -> Result<WordVectors<S>> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(name, 1, "missing header"))??;
    let (vocab_size, dim) = parse_header(&header, name, 1)?;

    let mut words = Vec::with_capacity(vocab_size);
    let mut data = Vec::with_capacity(vocab_size * dim);
    for row in 0..vocab_size {
        let line_no = row + 2;
        let line = lines.next().ok_or_else(|| {
            Error::parse(
                name,
                line_no,
                format!("expected {vocab_size} rows, file ends early"),
            )
        })??;
        let mut fields = line.split_whitespace();
        let word = fields
            .next()
            .ok_or_else(|| Error::parse(name, line_no, "empty row"))?;
        words.push(word.to_string());
        let mut values = 0;
        for field in fields {
            let value: S = field
                .parse()
                .map_err(|_| Error::parse(name, line_no, format!("invalid value `{field}`")))?;
            data.push(value);
            values += 1;
        }
        if values != dim {
            return Err(Error::parse(
                name,
                line_no,
                format!("expected {dim} values, found {values}"),
            ));
        }
    }
    for extra in lines {
        let extra = extra?;
        if !extra.trim().is_empty() {
            return Err(Error::parse(
                name,
                vocab_size + 2,
                format!("trailing data after {vocab_size} rows"),
            ));
        }
    }
    Ok(WordVectors::new(words, dim, data))
}

/// Binary vector file: ASCII header `V d\n`, then per word the ASCII word,
/// one space, `d` little-endian 32-bit floats, and a newline. Round trips are
/// bit-exact at 32-bit precision.
pub fn save_vectors_binary<S: Scalar, W: Write>(
    vectors: &WordVectors<S>,
    mut out: W,
) -> Result<()> {
    writeln!(out, "{} {}", vectors.len(), vectors.dim())?;
    for (i, word) in vectors.words().iter().enumerate() {
        out.write_all(word.as_bytes())?;
        out.write_all(b" ")?;
        for value in vectors.row(i as u32) {
            out.write_all(&(value.into_f64() as f32).to_le_bytes())?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_vectors_binary<S: Scalar, R: BufRead>(
    mut reader: R,
    name: &str,
) -> Result<WordVectors<S>> {
    let mut header = Vec::new();
    reader.read_until(b'\n', &mut header)?;
    let header =
        std::str::from_utf8(&header).map_err(|_| Error::parse(name, 1, "header is not ASCII"))?;
    let (vocab_size, dim) = parse_header(header.trim_end(), name, 1)?;

    let mut words = Vec::with_capacity(vocab_size);
    let mut data = Vec::with_capacity(vocab_size * dim);
    let mut float_buf = vec![0u8; dim * 4];
    for row in 0..vocab_size {
        let line_no = row + 2;
        let mut word = Vec::new();
        let n = reader.read_until(b' ', &mut word)?;
        if n == 0 || word.last() != Some(&b' ') {
            return Err(Error::parse(name, line_no, "file ends inside a row"));
        }
        word.pop();
        let word = String::from_utf8(word)
            .map_err(|_| Error::parse(name, line_no, "word is not valid UTF-8"))?;

        read_exact_or(&mut reader, &mut float_buf, name, line_no)?;
        for chunk in float_buf.chunks_exact(4) {
            let value = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            let magnitude = value.abs() as f64;
            if !value.is_finite()
                || magnitude > MAX_PLAUSIBLE
                || (value != 0.0 && magnitude < MIN_PLAUSIBLE)
            {
                return Err(Error::parse(
                    name,
                    line_no,
                    format!("implausible value {value:e}; file corrupt or byte-swapped"),
                ));
            }
            data.push(S::from_f64(value as f64));
        }
        let mut terminator = [0u8; 1];
        read_exact_or(&mut reader, &mut terminator, name, line_no)?;
        if terminator[0] != b'\n' {
            return Err(Error::parse(name, line_no, "missing row terminator"));
        }
        words.push(word);
    }
    Ok(WordVectors::new(words, dim, data))
}

fn read_exact_or<R: BufRead>(
    reader: &mut R,
    buf: &mut [u8],
    name: &str,
    line: usize,
) -> Result<()> {
    reader
        .read_exact(buf)
        .map_err(|_| Error::parse(name, line, "file ends inside a row"))
}

fn parse_header(line: &str, name: &str, line_no: usize) -> Result<(usize, usize)> {
    let mut fields = line.split_whitespace();
    let parse = |field: Option<&str>| -> Result<usize> {
        field
            .and_then(|f| f.parse::<usize>().ok())
            .filter(|&v| v >= 1)
            .ok_or_else(|| Error::parse(name, line_no, format!("bad header `{line}`")))
    };
    let vocab_size = parse(fields.next())?;
    let dim = parse(fields.next())?;
    if fields.next().is_some() {
        return Err(Error::parse(name, line_no, format!("bad header `{line}`")));
    }
    Ok((vocab_size, dim))
}

/// Relevance tensor file: header `c P`, then for each offset in order
/// `[-c..-1, 1..c]` a line `offset i` followed by `P` rows of `P` values
/// (row = context tag id, column = center tag id).
pub fn save_phi<S: Scalar, W: Write>(phi: &RelevanceTensor<S>, mut out: W) -> Result<()> {
    writeln!(out, "{} {}", phi.window(), phi.tag_count())?;
    let p = phi.tag_count();
    for offset in phi.offsets().collect::<Vec<_>>() {
        writeln!(out, "offset {offset}")?;
        let block = phi.offset_block(offset);
        for row in 0..p {
            for (col, value) in block[row * p..(row + 1) * p].iter().enumerate() {
                if col > 0 {
                    out.write_all(b" ")?;
                }
                write!(out, "{value:.8}")?;
            }
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn load_phi<S: Scalar, R: BufRead>(reader: R, name: &str) -> Result<RelevanceTensor<S>> {
    let mut lines = reader.lines();
    let mut line_no = 0usize;
    let next_line = |lines: &mut std::io::Lines<R>, line_no: &mut usize| -> Result<String> {
        *line_no += 1;
        lines
            .next()
            .ok_or_else(|| Error::parse(name, *line_no, "file ends early"))?
            .map_err(Error::from)
    };

    let header = next_line(&mut lines, &mut line_no)?;
    let (window, tag_count) = parse_header(&header, name, line_no)?;
    let c = window as i32;

    let mut data = Vec::with_capacity(2 * window * tag_count * tag_count);
    for expected in (-c..=c).filter(|&i| i != 0) {
        let line = next_line(&mut lines, &mut line_no)?;
        let mut fields = line.split_whitespace();
        let tagged = fields.next() == Some("offset")
            && fields.next().and_then(|f| f.parse::<i32>().ok()) == Some(expected)
            && fields.next().is_none();
        if !tagged {
            return Err(Error::parse(
                name,
                line_no,
                format!("expected `offset {expected}`, found `{}`", line.trim_end()),
            ));
        }
        for _ in 0..tag_count {
            let line = next_line(&mut lines, &mut line_no)?;
            let mut values = 0;
            for field in line.split_whitespace() {
                let value: S = field
                    .parse()
                    .map_err(|_| Error::parse(name, line_no, format!("invalid value `{field}`")))?;
                data.push(value);
                values += 1;
            }
            if values != tag_count {
                return Err(Error::parse(
                    name,
                    line_no,
                    format!("expected {tag_count} values, found {values}"),
                ));
            }
        }
    }
    for extra in lines {
        if !extra?.trim().is_empty() {
            return Err(Error::parse(name, line_no + 1, "trailing data"));
        }
    }
    Ok(RelevanceTensor::from_parts(window, tag_count, data))
}

/// Vocabulary file with tag statistics: one word per line in id order,
/// `word<TAB>count<TAB>tag:count tag:count ..`.
pub fn save_vocab<W: Write>(
    vocab: &Vocabulary,
    stats: &TagStats,
    tags: &TagSet,
    mut out: W,
) -> Result<()> {
    for id in 0..vocab.len() as u32 {
        write!(out, "{}\t{}\t", vocab.word(id), vocab.count(id))?;
        for (i, &(tag, count)) in stats.tag_counts(id).iter().enumerate() {
            if i > 0 {
                out.write_all(b" ")?;
            }
            write!(out, "{}:{}", tags.name(tag), count)?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_vocab<R: BufRead>(
    reader: R,
    tags: &TagSet,
    name: &str,
) -> Result<(Vocabulary, TagStats)> {
    let mut words = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut tag_stats = Vec::new();
    let mut seen = HashMap::new();

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let word = fields
            .next()
            .filter(|w| !w.is_empty())
            .ok_or_else(|| Error::parse(name, line_no, "missing word"))?;
        let count: u64 = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| Error::parse(name, line_no, "missing or invalid count"))?;
        if let Some(&first) = seen.get(word) {
            return Err(Error::parse(
                name,
                line_no,
                format!("duplicate word `{word}` (first on line {first})"),
            ));
        }
        seen.insert(word.to_string(), line_no);
        if let Some(&previous) = counts.last() {
            if count > previous {
                return Err(Error::parse(
                    name,
                    line_no,
                    "counts must be non-increasing (ids are frequency ranks)",
                ));
            }
        }

        let mut word_tags: Vec<(u16, u64)> = Vec::new();
        if let Some(stats_field) = fields.next() {
            for pair in stats_field.split_whitespace() {
                let (tag, tag_count) = pair
                    .rsplit_once(':')
                    .and_then(|(t, c)| c.parse::<u64>().ok().map(|c| (t, c)))
                    .ok_or_else(|| {
                        Error::parse(name, line_no, format!("invalid tag count `{pair}`"))
                    })?;
                word_tags.push((tags.id(tag), tag_count));
            }
        }
        word_tags.sort_unstable_by_key(|&(tag, _)| tag);

        words.push(word.to_string());
        counts.push(count);
        tag_stats.push(word_tags);
    }

    if words.is_empty() {
        return Err(Error::parse(name, 1, "empty vocabulary file"));
    }
    Ok((
        Vocabulary::from_sorted(words, counts),
        TagStats::new(tag_stats),
    ))
}
