//! Data ingestion and preparation: the binary feature format, line-oriented
//! caption records, vocabulary construction, deterministic synthetic-task
//! generation, and padded batching.

mod batch;
mod captions;
mod features;
mod synth;
mod vocab;

pub use batch::{make_batches, shuffled_indices, SequenceBatch};
pub use captions::{parse_captions, read_captions, write_captions, CaptionRecord};
pub use features::{
    decode_features, encode_features, load_features, read_feature_file, write_feature_file,
    FeatureFile, TDFE_MAGIC,
};
pub use synth::{synth_copy_task, synth_token_table};
pub use vocab::{build_vocab, parse_vocab, tokenize, Vocabulary};

/// Reserved token indices, fixed across every vocabulary.
pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;

/// Reserved token spellings, in index order.
pub const RESERVED_TOKENS: [&str; 4] = ["<p>", "<s>", "<e>", "<unk>"];

/// One captioned video: a feature matrix and its reference sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub video_id: String,
    pub features: FeatureFile,
    pub caption: String,
}

pub type Dataset = Vec<Sample>;

/// Joins a feature map and caption records into a dataset, in caption-file
/// order. Every caption must have features.
pub fn join_dataset(
    features: std::collections::BTreeMap<String, FeatureFile>,
    captions: Vec<CaptionRecord>,
) -> crate::Result<Dataset> {
    let mut out = Vec::with_capacity(captions.len());
    for rec in captions {
        let feats = features.get(&rec.video_id).ok_or_else(|| {
            crate::Error::Config(format!("no features for video id '{}'", rec.video_id))
        })?;
        out.push(Sample {
            video_id: rec.video_id,
            features: feats.clone(),
            caption: rec.caption,
        });
    }
    Ok(out)
}
