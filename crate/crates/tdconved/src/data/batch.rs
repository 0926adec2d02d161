//! Padded teacher-forcing batches. Input rows start with `<s>`, target rows
//! end with `<e>`, positions at or beyond an item's length hold `<p>`.

use crate::error::{Error, Result};
use crate::numcore::{Rng, Tensor};

use super::{Dataset, Vocabulary, BOS, EOS, PAD};

#[derive(Debug, Clone)]
pub struct SequenceBatch {
    /// Per item, the feature matrix widened to f64, `[N_v, D_v]`.
    pub features: Vec<Tensor>,
    /// Decoder inputs, each of the batch-wide padded length T.
    pub token_in: Vec<Vec<usize>>,
    /// Prediction targets, aligned with `token_in`.
    pub token_out: Vec<Vec<usize>>,
    /// True (un-padded) number of prediction steps per item.
    pub lengths: Vec<usize>,
}

impl SequenceBatch {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// The epoch shuffle order: a seeded Fisher-Yates permutation of 0..n.
pub fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    Rng::new(seed).shuffle(&mut order);
    order
}

/// Splits a dataset into padded batches after a seeded shuffle. Captions
/// longer than `t_max − 1` tokens are truncated; the final short batch is
/// kept.
pub fn make_batches(
    dataset: &Dataset,
    vocab: &Vocabulary,
    batch_size: usize,
    seed: u64,
    t_max: usize,
) -> Result<Vec<SequenceBatch>> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be >= 1".to_string()));
    }
    if t_max < 2 {
        return Err(Error::Config("t_max must be >= 2".to_string()));
    }
    let order = shuffled_indices(dataset.len(), seed);
    let mut batches = Vec::with_capacity(dataset.len().div_ceil(batch_size));
    for chunk in order.chunks(batch_size) {
        let mut features = Vec::with_capacity(chunk.len());
        let mut tokens: Vec<Vec<usize>> = Vec::with_capacity(chunk.len());
        for &idx in chunk {
            let sample = &dataset[idx];
            features.push(sample.features.to_tensor());
            let mut toks = vocab.encode(&sample.caption);
            toks.truncate(t_max - 1);
            tokens.push(toks);
        }
        let t = tokens.iter().map(|t| t.len() + 1).max().unwrap_or(1);
        let mut token_in = Vec::with_capacity(chunk.len());
        let mut token_out = Vec::with_capacity(chunk.len());
        let mut lengths = Vec::with_capacity(chunk.len());
        for toks in &tokens {
            let n = toks.len();
            let mut row_in = vec![PAD; t];
            let mut row_out = vec![PAD; t];
            row_in[0] = BOS;
            row_in[1..=n].copy_from_slice(toks);
            row_out[..n].copy_from_slice(toks);
            row_out[n] = EOS;
            token_in.push(row_in);
            token_out.push(row_out);
            lengths.push(n + 1);
        }
        batches.push(SequenceBatch {
            features,
            token_in,
            token_out,
            lengths,
        });
    }
    Ok(batches)
}
