//! Full encoder-decoder assembly: teacher-forced forward and backward
//! passes, the masked sequence loss, training, checkpointing, greedy and
//! beam-search inference, and the gradient-check harness.

mod checkpoint;
mod gradcheck;
mod search;
mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint,
    CheckpointMeta, TDCK_MAGIC};
pub use gradcheck::{gradcheck, GradCheckReport, GroupResult};
pub use search::{attention_trace, beam_search, greedy_decode, DecodeContext, Hypothesis};
pub use train::{evaluate, train, EvalReport, TrainOutcome};

use crate::attention::{attend_bwd, attend_fwd, project_context, AttendCache, AttentionParams,
    ProjectedContext};
use crate::data::PAD;
use crate::decoder::{decode_hidden_bwd, decode_hidden_fwd, DecoderCache, DecoderParams};
use crate::encoder::{encode_bwd, encode_fwd, mean_pool, mean_pool_bwd, EncoderCache,
    EncoderParams};
use crate::error::{Error, Result};
use crate::numcore::{add_assign, cross_entropy_backward, parallel_fill, scale as scale_slice,
    Affine, Rng, Tensor};

/// Model ablations: decoder over mean-pooled projected features only
/// (`td1`), plus the deformable convolutional encoder (`td2`), plus
/// temporal attention (`full`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Td1,
    Td2,
    Full,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "td1" => Ok(Variant::Td1),
            "td2" => Ok(Variant::Td2),
            "full" => Ok(Variant::Full),
            other => Err(Error::Config(format!(
                "unknown variant '{other}': expected td1, td2 or full"
            ))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Td1 => "td1",
            Variant::Td2 => "td2",
            Variant::Full => "full",
        })
    }
}

/// Geometry of a model instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    /// Input feature dimension per frame/clip.
    pub feat_dim: usize,
    /// Encoder state dimension.
    pub enc_dim: usize,
    /// Decoder state dimension.
    pub dec_dim: usize,
    /// Attention space dimension.
    pub attn_dim: usize,
    /// Word/position embedding dimension.
    pub emb_dim: usize,
    pub k: usize,
    pub num_enc_blocks: usize,
    pub num_dec_blocks: usize,
    pub t_max: usize,
    pub vocab_size: usize,
    pub variant: Variant,
}

/// All learnable weights, addressable by stable names (see
/// [`ModelParams::visit`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    pub encoder: EncoderParams,
    pub decoder: DecoderParams,
    /// Present in the `full` variant only.
    pub attention: Option<AttentionParams>,
    /// Maps the attended context vector into the decoder state space;
    /// present in the `full` variant only.
    pub video_out: Option<Affine>,
    /// Vocabulary projection of the combined decoder state.
    pub head: Affine,
}

impl ModelParams {
    pub fn init(dims: ModelDims, rng: &mut Rng) -> Result<Self> {
        let enc_blocks = match dims.variant {
            Variant::Td1 => 0,
            _ => dims.num_enc_blocks,
        };
        let encoder = EncoderParams::init(dims.feat_dim, dims.enc_dim, dims.k, enc_blocks, rng)?;
        let decoder = DecoderParams::init(
            dims.vocab_size,
            dims.emb_dim,
            dims.dec_dim,
            dims.enc_dim,
            dims.t_max,
            dims.k,
            dims.num_dec_blocks,
            rng,
        )?;
        let (attention, video_out) = match dims.variant {
            Variant::Full => (
                Some(AttentionParams::init(
                    dims.attn_dim,
                    dims.enc_dim,
                    dims.dec_dim,
                    rng,
                )),
                Some(Affine::init(dims.dec_dim, dims.enc_dim, rng)),
            ),
            _ => (None, None),
        };
        let head = Affine::init(dims.vocab_size, dims.dec_dim, rng);
        Ok(Self {
            dims,
            encoder,
            decoder,
            attention,
            video_out,
            head,
        })
    }

    /// Visits every parameter tensor with its stable name, in a fixed
    /// order. The same order drives Adam states, checkpoints and the
    /// gradient-check report.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&str, &'a Tensor)) {
        f("encoder.input_proj.weight", &self.encoder.input_proj.weight);
        f("encoder.input_proj.bias", &self.encoder.input_proj.bias);
        for (i, b) in self.encoder.blocks.iter().enumerate() {
            f(&format!("encoder.blocks.{i}.offset.weight"), &b.offset.weight);
            f(&format!("encoder.blocks.{i}.offset.bias"), &b.offset.bias);
            f(&format!("encoder.blocks.{i}.conv.weight"), &b.conv.weight);
            f(&format!("encoder.blocks.{i}.conv.bias"), &b.conv.bias);
        }
        f("decoder.word_emb", &self.decoder.word_emb.table);
        f("decoder.pos_emb", &self.decoder.pos_emb.table);
        f("decoder.video_map.weight", &self.decoder.video_map.weight);
        f("decoder.video_map.bias", &self.decoder.video_map.bias);
        f("decoder.input_proj.weight", &self.decoder.input_proj.weight);
        f("decoder.input_proj.bias", &self.decoder.input_proj.bias);
        for (i, b) in self.decoder.blocks.iter().enumerate() {
            f(&format!("decoder.blocks.{i}.conv.weight"), &b.weight);
            f(&format!("decoder.blocks.{i}.conv.bias"), &b.bias);
        }
        if let Some(a) = &self.attention {
            f("attention.enc_proj.weight", &a.enc_proj.weight);
            f("attention.dec_proj.weight", &a.dec_proj.weight);
            f("attention.bias", &a.bias);
            f("attention.score.weight", &a.score.weight);
        }
        if let Some(v) = &self.video_out {
            f("video_out.weight", &v.weight);
            f("video_out.bias", &v.bias);
        }
        f("head.weight", &self.head.weight);
        f("head.bias", &self.head.bias);
    }

    pub fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor)) {
        f("encoder.input_proj.weight", &mut self.encoder.input_proj.weight);
        f("encoder.input_proj.bias", &mut self.encoder.input_proj.bias);
        for (i, b) in self.encoder.blocks.iter_mut().enumerate() {
            f(&format!("encoder.blocks.{i}.offset.weight"), &mut b.offset.weight);
            f(&format!("encoder.blocks.{i}.offset.bias"), &mut b.offset.bias);
            f(&format!("encoder.blocks.{i}.conv.weight"), &mut b.conv.weight);
            f(&format!("encoder.blocks.{i}.conv.bias"), &mut b.conv.bias);
        }
        f("decoder.word_emb", &mut self.decoder.word_emb.table);
        f("decoder.pos_emb", &mut self.decoder.pos_emb.table);
        f("decoder.video_map.weight", &mut self.decoder.video_map.weight);
        f("decoder.video_map.bias", &mut self.decoder.video_map.bias);
        f("decoder.input_proj.weight", &mut self.decoder.input_proj.weight);
        f("decoder.input_proj.bias", &mut self.decoder.input_proj.bias);
        for (i, b) in self.decoder.blocks.iter_mut().enumerate() {
            f(&format!("decoder.blocks.{i}.conv.weight"), &mut b.weight);
            f(&format!("decoder.blocks.{i}.conv.bias"), &mut b.bias);
        }
        if let Some(a) = &mut self.attention {
            f("attention.enc_proj.weight", &mut a.enc_proj.weight);
            f("attention.dec_proj.weight", &mut a.dec_proj.weight);
            f("attention.bias", &mut a.bias);
            f("attention.score.weight", &mut a.score.weight);
        }
        if let Some(v) = &mut self.video_out {
            f("video_out.weight", &mut v.weight);
            f("video_out.bias", &mut v.bias);
        }
        f("head.weight", &mut self.head.weight);
        f("head.bias", &mut self.head.bias);
    }

    /// Names in visit order.
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        self.visit(&mut |name, _| names.push(name.to_string()));
        names
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, t| n += t.len());
        n
    }

    pub fn zero_grads(&mut self) {
        self.visit_mut(&mut |_, t| {
            t.grad_mut();
            t.zero_grad();
        });
    }

    /// Snapshot of the gradient slots, in visit order.
    pub fn grads_vec(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        self.visit(&mut |_, t| {
            out.push(t.grad().map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; t.len()]))
        });
        out
    }

    /// Installs gradient values, in visit order.
    pub fn set_grads(&mut self, grads: &[Vec<f64>]) {
        let mut i = 0;
        self.visit_mut(&mut |_, t| {
            t.set_grad(&grads[i]);
            i += 1;
        });
    }

    /// Replaces the data of the named tensor; used by finite-difference
    /// probes.
    pub fn replace_tensor(&mut self, name: &str, value: &Tensor) -> Result<()> {
        let mut found = false;
        self.visit_mut(&mut |n, t| {
            if n == name {
                t.data_mut().copy_from_slice(value.data());
                found = true;
            }
        });
        if found {
            Ok(())
        } else {
            Err(Error::Config(format!("no parameter tensor named '{name}'")))
        }
    }
}

/// Per-step attention state of a teacher-forced forward pass.
#[derive(Debug)]
pub struct AttnForward {
    pub projected: ProjectedContext,
    pub steps: Vec<AttendCache>,
    /// Attended context vectors, `[T, enc_dim]`.
    pub z_hats: Tensor,
}

/// Everything the backward pass needs from [`forward_train`].
#[derive(Debug)]
pub struct ForwardCache {
    pub enc_cache: EncoderCache,
    pub z: Tensor,
    pub z_tilde: Vec<f64>,
    pub dec_cache: DecoderCache,
    pub h: Tensor,
    pub attn: Option<AttnForward>,
    /// Head inputs, `[T, dec_dim]`.
    pub combined: Tensor,
    pub logits: Tensor,
}

/// Teacher-forced forward pass: every step's logits computed in one pass
/// with no sequential dependency between steps. `threads` parallelizes
/// across time steps; results are bitwise independent of the thread count.
pub fn forward_train(
    features: &Tensor,
    tokens_in: &[usize],
    params: &ModelParams,
    threads: usize,
) -> Result<(Tensor, ForwardCache)> {
    let (z, enc_cache) = encode_fwd(features, &params.encoder)?;
    let z_tilde = mean_pool(&z)?;
    let (h, dec_cache) = decode_hidden_fwd(tokens_in, &z_tilde, &params.decoder, threads)?;
    let t_len = h.rows();
    let d = params.decoder.state_dim();
    let v = params.head.out_dim();

    let mut combined = Tensor::zeros(vec![t_len, d]);
    let mut logits = Tensor::zeros(vec![t_len, v]);
    let attn = match (&params.attention, &params.video_out) {
        (Some(attention), Some(video_out)) => {
            let projected = project_context(&z, attention)?;
            let step_results = parallel_fill(threads, t_len, |t| {
                let (cache, z_hat) = attend_fwd(&z, &projected, h.row(t), attention)
                    .expect("shapes validated above");
                let mut comb = video_out.forward(&z_hat);
                add_assign(&mut comb, h.row(t));
                let lg = params.head.forward(&comb);
                (cache, z_hat, comb, lg)
            });
            let mut steps = Vec::with_capacity(t_len);
            let mut z_hats = Tensor::zeros(vec![t_len, params.encoder.state_dim()]);
            for (t, (cache, z_hat, comb, lg)) in step_results.into_iter().enumerate() {
                steps.push(cache);
                z_hats.row_mut(t).copy_from_slice(&z_hat);
                combined.row_mut(t).copy_from_slice(&comb);
                logits.row_mut(t).copy_from_slice(&lg);
            }
            Some(AttnForward {
                projected,
                steps,
                z_hats,
            })
        }
        _ => {
            let rows = parallel_fill(threads, t_len, |t| params.head.forward(h.row(t)));
            for (t, lg) in rows.into_iter().enumerate() {
                combined.row_mut(t).copy_from_slice(h.row(t));
                logits.row_mut(t).copy_from_slice(&lg);
            }
            None
        }
    };

    Ok((
        logits.clone(),
        ForwardCache {
            enc_cache,
            z,
            z_tilde,
            dec_cache,
            h,
            attn,
            combined,
            logits,
        },
    ))
}

/// Sum of per-token cross entropies over non-pad target positions; pad
/// positions contribute exactly 0.
pub fn sequence_loss(logits: &Tensor, targets: &[usize], pad: usize) -> Result<f64> {
    if logits.rows() != targets.len() {
        return Err(Error::Shape {
            op: "sequence_loss",
            lhs: logits.shape().to_vec(),
            rhs: vec![targets.len()],
        });
    }
    let mut total = 0.0;
    for (t, &target) in targets.iter().enumerate() {
        if target == pad {
            continue;
        }
        let row = Tensor::from_vec(vec![logits.cols()], logits.row(t).to_vec())?;
        total += crate::numcore::cross_entropy(&row, target)?;
    }
    Ok(total)
}

/// Number of loss-bearing (non-pad) positions.
pub fn count_targets(targets: &[usize], pad: usize) -> usize {
    targets.iter().filter(|&&t| t != pad).count()
}

/// Backward companion of [`forward_train`] for `scale · sequence_loss`.
/// Accumulates parameter gradients into `params`.
pub fn backward_train(
    params: &mut ModelParams,
    features: &Tensor,
    cache: &ForwardCache,
    targets: &[usize],
    scale: f64,
) -> Result<()> {
    let t_len = cache.h.rows();
    if targets.len() != t_len {
        return Err(Error::Shape {
            op: "backward_train",
            lhs: vec![t_len],
            rhs: vec![targets.len()],
        });
    }
    let d = params.decoder.state_dim();
    let mut g_h = Tensor::zeros(vec![t_len, d]);
    let mut g_z = Tensor::zeros(vec![cache.z.rows(), cache.z.cols()]);

    for (t, &target) in targets.iter().enumerate() {
        if target == PAD {
            continue;
        }
        let row = Tensor::from_vec(vec![cache.logits.cols()], cache.logits.row(t).to_vec())?;
        let mut g_logits = cross_entropy_backward(&row, target);
        scale_slice(&mut g_logits, scale);

        let mut g_combined = vec![0.0; d];
        params
            .head
            .backward_acc(cache.combined.row(t), &g_logits, &mut g_combined);

        match (&mut params.attention, &mut params.video_out, &cache.attn) {
            (Some(attention), Some(video_out), Some(attn)) => {
                let mut g_z_hat = vec![0.0; cache.z.cols()];
                video_out.backward_acc(attn.z_hats.row(t), &g_combined, &mut g_z_hat);
                let g_h_attn = attend_bwd(
                    attention,
                    &cache.z,
                    cache.h.row(t),
                    &attn.steps[t],
                    &g_z_hat,
                    &mut g_z,
                );
                add_assign(g_h.row_mut(t), &g_h_attn);
            }
            _ => {}
        }
        add_assign(g_h.row_mut(t), &g_combined);
    }

    let g_z_tilde = decode_hidden_bwd(&mut params.decoder, &cache.z_tilde, &cache.dec_cache, &g_h);
    mean_pool_bwd(&g_z_tilde, cache.z.rows(), &mut g_z);
    encode_bwd(&mut params.encoder, features, &cache.enc_cache, &g_z);
    Ok(())
}
