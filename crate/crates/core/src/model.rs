//! Embedding matrices, the position-dependent POS relevance tensor, and the
//! per-example SGD steps for the weighted CBOW model and its baselines.
//!
//! The weighted model predicts a center word from the sum of its context
//! word vectors, each scaled by a learned relevance weight looked up by
//! (signed offset, context tag, center tag). With all weights at 1 the
//! context vector collapses to the plain CBOW sum, which is also how the
//! tensor is initialized; the weights and the embeddings are then updated
//! jointly from the same negative-sampling loss.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::TaggedToken;
use crate::error::{Error, Result};
use crate::scalar::{sigmoid, softplus, Scalar};

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    /// Vector dimensionality.
    pub dim: usize,
    /// Context window size (offsets -window..=window, excluding 0).
    pub window: usize,
    /// Negative samples per example.
    pub negatives: usize,
    /// Initial learning rate.
    pub lr0: f64,
    /// Vocabulary frequency cutoff.
    pub min_count: u64,
    pub epochs: usize,
    /// Sample the effective window size per center token from {1..window}.
    pub dynamic_window: bool,
    /// Update the relevance weights (the weighted model's ablation switch).
    pub phi_enabled: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dim: 300,
            window: 5,
            negatives: 5,
            lr0: 0.025,
            min_count: 50,
            epochs: 1,
            dynamic_window: false,
            phi_enabled: true,
            seed: 1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::InvalidConfig("dim must be >= 1".into()));
        }
        if self.window < 1 {
            return Err(Error::InvalidConfig("window must be >= 1".into()));
        }
        if self.lr0 <= 0.0 {
            return Err(Error::InvalidConfig("learning rate must be > 0".into()));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Which objective the trainer dispatches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// POS-weighted CBOW.
    Pwe,
    Cbow,
    SkipGram,
}

impl ModelKind {
    /// Baselines train with a dynamic window by default; the weighted model
    /// does not.
    pub fn default_dynamic_window(self) -> bool {
        !matches!(self, ModelKind::Pwe)
    }
}

/// Input matrix (the learned word vectors) and output matrix (prediction
/// vectors), both `V x d` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel<S> {
    vocab_size: usize,
    dim: usize,
    input: Vec<S>,
    output: Vec<S>,
}

impl<S: Scalar> EmbeddingModel<S> {
    pub fn from_parts(vocab_size: usize, dim: usize, input: Vec<S>, output: Vec<S>) -> Self {
        assert_eq!(input.len(), vocab_size * dim);
        assert_eq!(output.len(), vocab_size * dim);
        EmbeddingModel {
            vocab_size,
            dim,
            input,
            output,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn input(&self) -> &[S] {
        &self.input
    }

    pub fn output(&self) -> &[S] {
        &self.output
    }

    pub fn input_row(&self, word: u32) -> &[S] {
        let d = self.dim;
        &self.input[word as usize * d..(word as usize + 1) * d]
    }

    pub fn input_row_mut(&mut self, word: u32) -> &mut [S] {
        let d = self.dim;
        &mut self.input[word as usize * d..(word as usize + 1) * d]
    }

    pub fn output_row(&self, word: u32) -> &[S] {
        let d = self.dim;
        &self.output[word as usize * d..(word as usize + 1) * d]
    }

    pub fn output_row_mut(&mut self, word: u32) -> &mut [S] {
        let d = self.dim;
        &mut self.output[word as usize * d..(word as usize + 1) * d]
    }

    #[cfg(debug_assertions)]
    fn debug_check_rows_finite(&self, words: impl Iterator<Item = u32>) {
        for w in words {
            debug_assert!(
                self.input_row(w).iter().all(|x| x.is_finite())
                    && self.output_row(w).iter().all(|x| x.is_finite()),
                "non-finite entry in row {w}"
            );
        }
    }
    #[cfg(not(debug_assertions))]
    fn debug_check_rows_finite(&self, _words: impl Iterator<Item = u32>) {}
}

/// Position-dependent relevance weights: one `P x P` matrix per signed
/// offset, ordered `[-c, .., -1, +1, .., +c]`. Entry `(a, b)` weights a
/// context word tagged `a` against a center word tagged `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceTensor<S> {
    window: usize,
    tag_count: usize,
    data: Vec<S>,
}

impl<S: Scalar> RelevanceTensor<S> {
    /// All weights 1: the weighted context sum starts exactly at CBOW.
    pub fn ones(window: usize, tag_count: usize) -> Self {
        RelevanceTensor {
            window,
            tag_count,
            data: vec![S::one(); 2 * window * tag_count * tag_count],
        }
    }

    pub fn from_parts(window: usize, tag_count: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), 2 * window * tag_count * tag_count);
        RelevanceTensor {
            window,
            tag_count,
            data,
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn tag_count(&self) -> usize {
        self.tag_count
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    /// Offsets in storage order.
    pub fn offsets(&self) -> impl Iterator<Item = i32> + '_ {
        let c = self.window as i32;
        (-c..=c).filter(|&i| i != 0)
    }

    fn slot(&self, offset: i32) -> usize {
        let c = self.window as i32;
        debug_assert!(
            offset != 0 && offset.abs() <= c,
            "offset {offset} out of window"
        );
        if offset < 0 {
            (offset + c) as usize
        } else {
            (c + offset - 1) as usize
        }
    }

    fn entry_index(&self, offset: i32, ctx_tag: u16, center_tag: u16) -> usize {
        let p = self.tag_count;
        debug_assert!((ctx_tag as usize) < p && (center_tag as usize) < p);
        self.slot(offset) * p * p + ctx_tag as usize * p + center_tag as usize
    }

    pub fn get(&self, offset: i32, ctx_tag: u16, center_tag: u16) -> S {
        self.data[self.entry_index(offset, ctx_tag, center_tag)]
    }

    pub fn get_mut(&mut self, offset: i32, ctx_tag: u16, center_tag: u16) -> &mut S {
        let idx = self.entry_index(offset, ctx_tag, center_tag);
        &mut self.data[idx]
    }

    /// The `P x P` block for one offset, row = context tag, column = center tag.
    pub fn offset_block(&self, offset: i32) -> &[S] {
        let p = self.tag_count;
        let s = self.slot(offset);
        &self.data[s * p * p..(s + 1) * p * p]
    }

    /// `(offset, min, max)` per offset, for training diagnostics.
    pub fn min_max_per_offset(&self) -> Vec<(i32, S, S)> {
        self.offsets()
            .map(|off| {
                let block = self.offset_block(off);
                let mut lo = block[0];
                let mut hi = block[0];
                for &x in block {
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
                (off, lo, hi)
            })
            .collect()
    }
}

/// One center token with its in-window context, offsets relative to the center.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub center: TaggedToken,
    pub context: Vec<(i32, TaggedToken)>,
}

/// Fresh parameters: input vectors i.i.d. uniform in `[-0.5/d, 0.5/d)`,
/// output vectors zero, relevance weights all 1.
pub fn init_model<S: Scalar>(
    config: &ModelConfig,
    vocab_size: usize,
    tag_count: usize,
    seed: u64,
) -> (EmbeddingModel<S>, RelevanceTensor<S>) {
    let d = config.dim;
    let bound = S::from_f64(0.5 / d as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input: Vec<S> = (0..vocab_size * d)
        .map(|_| rng.gen_range(-bound..bound))
        .collect();
    let output = vec![S::zero(); vocab_size * d];
    (
        EmbeddingModel::from_parts(vocab_size, d, input, output),
        RelevanceTensor::ones(config.window, tag_count),
    )
}

/// Weighted context vector: the sum over context positions of
/// `phi(offset, context tag, center tag) * input_row(context word)`.
pub fn context_vector<S: Scalar>(
    example: &TrainingExample,
    model: &EmbeddingModel<S>,
    phi: &RelevanceTensor<S>,
) -> Result<Vec<S>> {
    if example.context.is_empty() {
        return Err(Error::EmptyContext);
    }
    let mut v = vec![S::zero(); model.dim()];
    let center_tag = example.center.tag;
    for &(offset, tok) in &example.context {
        let weight = phi.get(offset, tok.tag, center_tag);
        let row = model.input_row(tok.word);
        for (vj, &rj) in v.iter_mut().zip(row) {
            *vj += weight * rj;
        }
    }
    Ok(v)
}

/// Full-softmax loss `-log p(center | v)` and its gradient in `v`.
///
/// Enumerates the whole vocabulary; intended for small models and oracles.
pub fn softmax_loss<S: Scalar>(v: &[S], center: u32, model: &EmbeddingModel<S>) -> (S, Vec<S>) {
    let vocab = model.vocab_size();
    let scores: Vec<S> = (0..vocab as u32)
        .map(|w| dot(model.output_row(w), v))
        .collect();
    let max = scores.iter().cloned().fold(S::neg_infinity(), S::max);
    let mut z = S::zero();
    for &s in &scores {
        z += (s - max).exp();
    }
    let log_z = max + z.ln();
    let loss = log_z - scores[center as usize];

    let mut grad_v = vec![S::zero(); v.len()];
    for w in 0..vocab as u32 {
        let p = (scores[w as usize] - log_z).exp();
        let row = model.output_row(w);
        for (g, &r) in grad_v.iter_mut().zip(row) {
            *g += p * r;
        }
    }
    for (g, &r) in grad_v.iter_mut().zip(model.output_row(center)) {
        *g -= r;
    }
    (loss, grad_v)
}

/// Negative-sampling loss and gradients at one parameter snapshot.
#[derive(Debug, Clone)]
pub struct NsGrad<S> {
    pub loss: S,
    /// Gradient of the loss in the context vector.
    pub grad_v: Vec<S>,
    /// `(output row, coefficient)` pairs, center first then each negative in
    /// order; the row's gradient is `coefficient * v`. A word drawn twice
    /// appears twice and its contributions add.
    pub out_grads: Vec<(u32, S)>,
}

impl<S: Scalar> NsGrad<S> {
    /// Materialize the per-row output gradients for a given context vector.
    pub fn out_grad_rows(&self, v: &[S]) -> Vec<(u32, Vec<S>)> {
        self.out_grads
            .iter()
            .map(|&(w, coeff)| (w, v.iter().map(|&x| coeff * x).collect()))
            .collect()
    }
}

/// `-log sigma(w_center . v) - sum_neg log sigma(-w_neg . v)` with gradients
/// for `v` and every touched output row, computed with the exact stable
/// logistic (no lookup tables).
pub fn ns_loss<S: Scalar>(
    v: &[S],
    center: u32,
    negatives: &[u32],
    model: &EmbeddingModel<S>,
) -> NsGrad<S> {
    debug_assert!(
        negatives.iter().all(|&n| n != center),
        "negative equals the positive target"
    );
    let mut grad_v = vec![S::zero(); v.len()];
    let mut out_grads = Vec::with_capacity(negatives.len() + 1);

    let s_pos = dot(model.output_row(center), v);
    let mut loss = softplus(-s_pos);
    let pos_coeff = sigmoid(s_pos) - S::one();
    axpy(&mut grad_v, pos_coeff, model.output_row(center));
    out_grads.push((center, pos_coeff));

    for &neg in negatives {
        let s_neg = dot(model.output_row(neg), v);
        loss += softplus(s_neg);
        let neg_coeff = sigmoid(s_neg);
        axpy(&mut grad_v, neg_coeff, model.output_row(neg));
        out_grads.push((neg, neg_coeff));
    }

    NsGrad {
        loss,
        grad_v,
        out_grads,
    }
}

/// One SGD step of the weighted model on one example.
///
/// All gradients are evaluated at the pre-update parameters, then applied:
/// output rows by the NS gradient, context input rows scaled by their
/// relevance weight, and (when `update_phi`) each addressed relevance entry
/// by the dot of the v-gradient with the pre-update context row.
pub fn pwe_step<S: Scalar>(
    example: &TrainingExample,
    model: &mut EmbeddingModel<S>,
    phi: &mut RelevanceTensor<S>,
    negatives: &[u32],
    lr: S,
    update_phi: bool,
) -> Result<S> {
    let v = context_vector(example, model, phi)?;
    let grad = ns_loss(&v, example.center.word, negatives, model);
    let center_tag = example.center.tag;

    // relevance gradients need the pre-update input rows
    let phi_grads: Vec<S> = if update_phi {
        example
            .context
            .iter()
            .map(|&(_, tok)| dot(&grad.grad_v, model.input_row(tok.word)))
            .collect()
    } else {
        Vec::new()
    };

    for &(w, coeff) in &grad.out_grads {
        axpy(model.output_row_mut(w), -(lr * coeff), &v);
    }
    for &(offset, tok) in &example.context {
        let weight = phi.get(offset, tok.tag, center_tag);
        axpy(model.input_row_mut(tok.word), -(lr * weight), &grad.grad_v);
    }
    if update_phi {
        for (&(offset, tok), &g) in example.context.iter().zip(&phi_grads) {
            *phi.get_mut(offset, tok.tag, center_tag) -= lr * g;
        }
    }

    model.debug_check_rows_finite(
        std::iter::once(example.center.word)
            .chain(negatives.iter().copied())
            .chain(example.context.iter().map(|&(_, t)| t.word)),
    );
    Ok(grad.loss)
}

/// One fixed-window CBOW negative-sampling step (unweighted context sum).
pub fn cbow_step<S: Scalar>(
    example: &TrainingExample,
    model: &mut EmbeddingModel<S>,
    negatives: &[u32],
    lr: S,
) -> Result<S> {
    if example.context.is_empty() {
        return Err(Error::EmptyContext);
    }
    let mut v = vec![S::zero(); model.dim()];
    for &(_, tok) in &example.context {
        for (vj, &rj) in v.iter_mut().zip(model.input_row(tok.word)) {
            *vj += rj;
        }
    }
    let grad = ns_loss(&v, example.center.word, negatives, model);

    for &(w, coeff) in &grad.out_grads {
        axpy(model.output_row_mut(w), -(lr * coeff), &v);
    }
    for &(_, tok) in &example.context {
        axpy(model.input_row_mut(tok.word), -lr, &grad.grad_v);
    }

    model.debug_check_rows_finite(
        std::iter::once(example.center.word)
            .chain(negatives.iter().copied())
            .chain(example.context.iter().map(|&(_, t)| t.word)),
    );
    Ok(grad.loss)
}

/// One skip-gram negative-sampling step: predict `context` from the input
/// row of `center`.
pub fn sg_step<S: Scalar>(
    center: TaggedToken,
    context: TaggedToken,
    model: &mut EmbeddingModel<S>,
    negatives: &[u32],
    lr: S,
) -> S {
    let v = model.input_row(center.word).to_vec();
    let grad = ns_loss(&v, context.word, negatives, model);

    for &(w, coeff) in &grad.out_grads {
        axpy(model.output_row_mut(w), -(lr * coeff), &v);
    }
    axpy(model.input_row_mut(center.word), -lr, &grad.grad_v);

    model.debug_check_rows_finite(
        [center.word, context.word]
            .into_iter()
            .chain(negatives.iter().copied()),
    );
    grad.loss
}

#[inline]
fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// `target += scale * source`
#[inline]
fn axpy<S: Scalar>(target: &mut [S], scale: S, source: &[S]) {
    debug_assert_eq!(target.len(), source.len());
    for (t, &s) in target.iter_mut().zip(source) {
        *t += scale * s;
    }
}
