//! Epoch driver: shards the corpus over workers, extracts window examples,
//! draws negatives, decays the learning rate, and dispatches the per-example
//! SGD steps.
//!
//! Parallel training is lock-free (see [`crate::hogwild`]); runs are
//! bit-reproducible only with a single worker.

use std::fs::File;
use std::io::{BufRead, BufReader, Seek, SeekFrom};
use std::path::Path;
use std::sync::atomic::{AtomicU32, AtomicU64, AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    apply_subsampling, encode_line, ParseOptions, TagSet, TaggedToken, Vocabulary,
};
use crate::error::{Error, Result};
use crate::hogwild::Hogwild;
use crate::model::{
    cbow_step, init_model, pwe_step, sg_step, EmbeddingModel, ModelConfig, ModelKind,
    RelevanceTensor, TrainingExample,
};
use crate::negative::NegativeTable;
use crate::scalar::Scalar;

/// Workers refresh the shared learning rate after this many locally
/// processed words.
pub const LR_UPDATE_QUANTUM: u64 = 10_000;
/// The learning rate never decays below `lr0` times this factor.
pub const LR_FLOOR_FACTOR: f64 = 1e-4;
/// The progress report averages the loss over this many recent examples.
const LOSS_WINDOW: usize = 100_000;

/// Shared training progress counters.
#[derive(Debug)]
pub struct TrainState {
    words_processed: AtomicU64,
    /// Retained tokens times epochs.
    total_words: u64,
    /// Bits of the current f64 learning rate.
    current_lr: AtomicU64,
    /// 1-based epoch currently running (0 before the first).
    epoch: AtomicUsize,
}

impl TrainState {
    pub fn new(total_words: u64, lr0: f64) -> Self {
        TrainState {
            words_processed: AtomicU64::new(0),
            total_words,
            current_lr: AtomicU64::new(lr0.to_bits()),
            epoch: AtomicUsize::new(0),
        }
    }

    pub fn words_processed(&self) -> u64 {
        self.words_processed.load(Ordering::Relaxed)
    }

    pub fn total_words(&self) -> u64 {
        self.total_words
    }

    pub fn current_lr(&self) -> f64 {
        f64::from_bits(self.current_lr.load(Ordering::Relaxed))
    }

    pub fn epoch(&self) -> usize {
        self.epoch.load(Ordering::Relaxed)
    }

    pub fn advance(&self, words: u64) -> u64 {
        self.words_processed.fetch_add(words, Ordering::Relaxed) + words
    }

    fn set_epoch(&self, epoch: usize) {
        self.epoch.store(epoch, Ordering::Relaxed);
    }
}

/// Linear decay with a floor: `max(lr0 * (1 - processed/total), lr0 * 1e-4)`,
/// stored back into the state and returned.
pub fn update_lr(state: &TrainState, lr0: f64) -> f64 {
    let total = state.total_words().max(1) as f64;
    let progress = state.words_processed() as f64 / total;
    let lr = (lr0 * (1.0 - progress)).max(lr0 * LR_FLOOR_FACTOR);
    state.current_lr.store(lr.to_bits(), Ordering::Relaxed);
    lr
}

/// Window extraction: one example per center token that has at least one
/// in-sentence neighbor, offsets clipped at the sentence boundaries.
///
/// With `dynamic_window`, the effective window is drawn uniformly from
/// `{1..window}` per center token; the draw happens for every token —
/// including those that end up with no neighbors — so downstream rng
/// consumption is a function of the sentence length alone.
pub fn extract_examples<R: Rng>(
    sentence: &[TaggedToken],
    window: usize,
    dynamic_window: bool,
    rng: &mut R,
) -> Vec<TrainingExample> {
    let len = sentence.len();
    let mut out = Vec::with_capacity(len);
    for t in 0..len {
        let b = if dynamic_window {
            rng.gen_range(1..=window)
        } else {
            window
        };
        let lo = t.saturating_sub(b);
        let hi = (t + b).min(len.saturating_sub(1));
        if lo == hi {
            continue;
        }
        let mut context = Vec::with_capacity(hi - lo);
        for (s, &tok) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
            if s != t {
                context.push(((s as i64 - t as i64) as i32, tok));
            }
        }
        out.push(TrainingExample {
            center: sentence[t],
            context,
        });
    }
    out
}

/// What to train and how to run it.
#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub kind: ModelKind,
    pub config: ModelConfig,
    pub workers: usize,
    /// Frequent-word subsampling threshold; `None` disables it.
    pub subsample: Option<f64>,
    pub parse: ParseOptions,
    /// Collect every example's loss (single worker only).
    pub record_losses: bool,
    /// Suppress progress reporting.
    pub quiet: bool,
}

impl TrainOptions {
    pub fn new(kind: ModelKind) -> Self {
        let config = ModelConfig {
            dynamic_window: kind.default_dynamic_window(),
            phi_enabled: kind == ModelKind::Pwe,
            ..ModelConfig::default()
        };
        TrainOptions {
            kind,
            config,
            workers: 1,
            subsample: None,
            parse: ParseOptions::default(),
            record_losses: false,
            quiet: false,
        }
    }
}

/// Trained parameters plus the final counters.
#[derive(Debug)]
pub struct TrainOutput<S> {
    pub model: EmbeddingModel<S>,
    pub phi: RelevanceTensor<S>,
    pub state: TrainState,
    /// Per-example losses in step order; populated only when requested with
    /// a single worker.
    pub losses: Vec<f32>,
}

/// Ring buffer of recent per-example losses, shared across workers; racy by
/// design, read only for progress reporting.
struct LossMeter {
    buf: Vec<AtomicU32>,
    head: AtomicUsize,
}

impl LossMeter {
    fn new(capacity: usize) -> Self {
        LossMeter {
            buf: (0..capacity).map(|_| AtomicU32::new(0)).collect(),
            head: AtomicUsize::new(0),
        }
    }

    fn push(&self, loss: f32) {
        let i = self.head.fetch_add(1, Ordering::Relaxed);
        self.buf[i % self.buf.len()].store(loss.to_bits(), Ordering::Relaxed);
    }

    fn mean(&self) -> f64 {
        let filled = self.head.load(Ordering::Relaxed).min(self.buf.len());
        if filled == 0 {
            return 0.0;
        }
        let sum: f64 = self.buf[..filled]
            .iter()
            .map(|bits| f32::from_bits(bits.load(Ordering::Relaxed)) as f64)
            .sum();
        sum / filled as f64
    }
}

/// Train on a tagged corpus file with a prebuilt vocabulary and negative
/// table. Runs `config.epochs` passes, splitting the file into per-worker
/// byte ranges aligned to line starts each pass.
pub fn train<S: Scalar>(
    corpus: &Path,
    vocab: &Vocabulary,
    tags: &TagSet,
    table: &NegativeTable,
    options: &TrainOptions,
) -> Result<TrainOutput<S>> {
    options.config.validate()?;
    let config = &options.config;
    let workers = options.workers.max(1);
    let epochs = config.epochs;

    let total_words = vocab.total_tokens() * epochs as u64;
    let state = TrainState::new(total_words, config.lr0);
    let (model, phi) = init_model::<S>(config, vocab.len(), tags.len(), config.seed);
    let model = Hogwild::new(model);
    let phi = Hogwild::new(phi);
    let meter = LossMeter::new(LOSS_WINDOW);
    let record = options.record_losses && workers == 1;

    let file_len = std::fs::metadata(corpus)?.len();
    let started = Instant::now();
    let mut losses = Vec::new();

    for epoch in 0..epochs {
        state.set_epoch(epoch + 1);
        let done = AtomicUsize::new(0);
        let epoch_losses = std::thread::scope(|scope| -> Result<Vec<f32>> {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let model = model.clone();
                    let phi = phi.clone();
                    let state = &state;
                    let meter = &meter;
                    let done = &done;
                    let start = file_len * w as u64 / workers as u64;
                    let end = file_len * (w as u64 + 1) / workers as u64;
                    scope.spawn(move || {
                        let result = run_worker(
                            corpus, start, end, vocab, tags, table, options, state, model, phi,
                            meter, epoch, w, record,
                        );
                        done.fetch_add(1, Ordering::SeqCst);
                        result
                    })
                })
                .collect();

            if !options.quiet {
                while done.load(Ordering::SeqCst) < workers {
                    std::thread::sleep(Duration::from_millis(500));
                    report_progress(&state, &meter, started, options, phi.get_mut());
                }
            }

            let mut collected = Vec::new();
            for handle in handles {
                collected.extend(handle.join().expect("training worker panicked")?);
            }
            Ok(collected)
        })?;
        losses.extend(epoch_losses);
    }

    if state.words_processed() == 0 {
        return Err(Error::EmptyEncodedCorpus);
    }
    if !options.quiet {
        report_progress(&state, &meter, started, options, phi.get_mut());
    }

    Ok(TrainOutput {
        model: model.into_inner(),
        phi: phi.into_inner(),
        state,
        losses,
    })
}

fn report_progress<S: Scalar>(
    state: &TrainState,
    meter: &LossMeter,
    started: Instant,
    options: &TrainOptions,
    phi: &RelevanceTensor<S>,
) {
    let processed = state.words_processed();
    let pct = 100.0 * processed as f64 / state.total_words().max(1) as f64;
    let wps = processed as f64 / started.elapsed().as_secs_f64().max(1e-9);
    eprintln!(
        "epoch {} progress {:.2}% lr {:.6} loss {:.4} wps {:.0}",
        state.epoch(),
        pct,
        state.current_lr(),
        meter.mean(),
        wps
    );
    if options.kind == ModelKind::Pwe && options.config.phi_enabled {
        let ranges: Vec<String> = phi
            .min_max_per_offset()
            .into_iter()
            .map(|(off, lo, hi)| format!("{:+}: {:.3}/{:.3}", off, lo.into_f64(), hi.into_f64()))
            .collect();
        eprintln!("phi min/max {}", ranges.join("  "));
    }
}

#[allow(clippy::too_many_arguments)]
fn run_worker<S: Scalar>(
    corpus: &Path,
    start: u64,
    end: u64,
    vocab: &Vocabulary,
    tags: &TagSet,
    table: &NegativeTable,
    options: &TrainOptions,
    state: &TrainState,
    model: Hogwild<EmbeddingModel<S>>,
    phi: Hogwild<RelevanceTensor<S>>,
    meter: &LossMeter,
    epoch: usize,
    worker: usize,
    record: bool,
) -> Result<Vec<f32>> {
    let config = &options.config;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // disjoint random streams per (epoch, worker)
    rng.set_stream(((epoch as u64) << 32) | worker as u64);

    let mut reader = BufReader::new(File::open(corpus)?);
    let mut pos;
    if start == 0 {
        pos = 0;
    } else {
        // back up one byte: if it is a newline, `start` opens a line that is
        // ours; otherwise skip the remainder of a line owned by the previous
        // shard. Every line belongs to exactly one shard this way.
        reader.seek(SeekFrom::Start(start - 1))?;
        pos = start - 1;
        let mut skipped = Vec::new();
        pos += reader.read_until(b'\n', &mut skipped)? as u64;
    }

    let k = config.negatives;
    let lr0 = config.lr0;
    let mut lr = state.current_lr();
    let mut words_since_update = 0u64;
    let mut line = Vec::new();
    let mut sentence: Vec<TaggedToken> = Vec::new();
    let mut negatives: Vec<u32> = Vec::with_capacity(k);
    let mut losses = Vec::new();

    while pos < end {
        line.clear();
        let n = reader.read_until(b'\n', &mut line)?;
        if n == 0 {
            break;
        }
        pos += n as u64;
        let text = String::from_utf8_lossy(&line);
        encode_line(&text, vocab, tags, &options.parse, &mut sentence);
        if sentence.is_empty() {
            continue;
        }
        words_since_update += sentence.len() as u64;

        if let Some(threshold) = options.subsample {
            apply_subsampling(&mut sentence, vocab, threshold, &mut rng);
        }
        let examples = extract_examples(&sentence, config.window, config.dynamic_window, &mut rng);

        for example in &examples {
            match options.kind {
                ModelKind::Pwe => {
                    draw_negatives(table, &mut rng, example.center.word, k, &mut negatives);
                    let loss = pwe_step(
                        example,
                        model.get_mut(),
                        phi.get_mut(),
                        &negatives,
                        S::from_f64(lr),
                        config.phi_enabled,
                    )?;
                    record_loss(loss, meter, record, &mut losses);
                }
                ModelKind::Cbow => {
                    draw_negatives(table, &mut rng, example.center.word, k, &mut negatives);
                    let loss = cbow_step(example, model.get_mut(), &negatives, S::from_f64(lr))?;
                    record_loss(loss, meter, record, &mut losses);
                }
                ModelKind::SkipGram => {
                    for &(_, target) in &example.context {
                        draw_negatives(table, &mut rng, target.word, k, &mut negatives);
                        let loss = sg_step(
                            example.center,
                            target,
                            model.get_mut(),
                            &negatives,
                            S::from_f64(lr),
                        );
                        record_loss(loss, meter, record, &mut losses);
                    }
                }
            }
        }

        if words_since_update >= LR_UPDATE_QUANTUM {
            state.advance(words_since_update);
            words_since_update = 0;
            lr = update_lr(state, lr0);
        }
    }

    state.advance(words_since_update);
    update_lr(state, lr0);
    Ok(losses)
}

fn draw_negatives<R: Rng>(
    table: &NegativeTable,
    rng: &mut R,
    exclude: u32,
    k: usize,
    out: &mut Vec<u32>,
) {
    out.clear();
    for _ in 0..k {
        out.push(table.draw(rng, exclude));
    }
}

fn record_loss<S: Scalar>(loss: S, meter: &LossMeter, record: bool, losses: &mut Vec<f32>) {
    let loss = loss.into_f64() as f32;
    meter.push(loss);
    if record {
        losses.push(loss);
    }
}
