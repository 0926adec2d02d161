//! Deterministic synthetic copy task: every content token gets a fixed
//! random embedding; a sample is a random token sequence whose feature
//! matrix stacks those embeddings (plus optional seeded noise) and whose
//! caption is the token sequence itself. Learnable by attending to frame i
//! and emitting token i.

use crate::error::{Error, Result};
use crate::numcore::Rng;

use super::{Dataset, FeatureFile, Sample};

/// The fixed token-embedding table behind a seed, `vocab_size × d_v`,
/// stored at feature precision.
pub fn synth_token_table(seed: u64, vocab_size: usize, d_v: usize) -> Vec<Vec<f32>> {
    let mut master = Rng::new(seed);
    let mut table_rng = master.split();
    (0..vocab_size)
        .map(|_| {
            (0..d_v)
                .map(|_| table_rng.uniform(-1.0, 1.0) as f32)
                .collect()
        })
        .collect()
}

fn gauss(rng: &mut Rng) -> f64 {
    let u1 = rng.next_f64().max(1e-12);
    let u2 = rng.next_f64();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::TAU * u2).cos()
}

/// Generates `n_samples` sequences of `seq_len` tokens drawn from
/// `vocab_size` content words. Deterministic per seed.
pub fn synth_copy_task(
    seed: u64,
    n_samples: usize,
    vocab_size: usize,
    seq_len: usize,
    d_v: usize,
    noise: f64,
) -> Result<Dataset> {
    if vocab_size < 5 {
        return Err(Error::Config(format!(
            "synthetic vocabulary needs at least 5 content tokens, got {vocab_size}"
        )));
    }
    if seq_len == 0 || d_v == 0 {
        return Err(Error::Config(
            "synthetic sequence length and feature dim must be >= 1".to_string(),
        ));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::Config(format!("invalid feature noise {noise}")));
    }

    let table = synth_token_table(seed, vocab_size, d_v);
    let mut master = Rng::new(seed);
    let _table_rng = master.split();
    let mut noise_rng = master.split();
    let mut seq_rng = master.split();

    let mut out = Vec::with_capacity(n_samples);
    for idx in 0..n_samples {
        let toks: Vec<usize> = (0..seq_len).map(|_| seq_rng.below(vocab_size)).collect();
        let mut values = Vec::with_capacity(seq_len * d_v);
        for &t in &toks {
            for d in 0..d_v {
                let base = table[t][d];
                let v = if noise > 0.0 {
                    (base as f64 + noise * gauss(&mut noise_rng)) as f32
                } else {
                    base
                };
                values.push(v);
            }
        }
        let caption = toks
            .iter()
            .map(|t| format!("w{t}"))
            .collect::<Vec<_>>()
            .join(" ");
        out.push(Sample {
            video_id: format!("synth{idx:05}"),
            features: FeatureFile::new(seq_len, d_v, values)?,
            caption,
        });
    }
    Ok(out)
}
