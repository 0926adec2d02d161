//! Causal convolutional decoder. Word and position embeddings are summed,
//! concatenated with a linear map of the pooled video vector, projected to
//! the decoder state dimension and passed through stacked shifted
//! convolutional blocks whose windows end at the current step (left-padded
//! with k−1 zero vectors), so no future token can influence the present
//! output.
//!
//! Teacher-forced decoding computes all time steps in one pass with no
//! sequential dependency; [`IncrementalState`] holds the per-block ring
//! buffers that make one-step inference cost O(1) conv windows per step.

use crate::data::BOS;
use crate::error::{Error, Result};
use crate::numcore::{
    add_assign, glu_backward_into, glu_into, parallel_fill, Affine, Embedding, Rng, Tensor,
};

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderParams {
    pub word_emb: Embedding,
    pub pos_emb: Embedding,
    /// Maps the pooled video vector into the embedding space.
    pub video_map: Affine,
    /// Maps concat(summed embeddings, mapped video vector) to the state dim.
    pub input_proj: Affine,
    /// Shifted convolutions, each `[2·state_dim, k·state_dim]`.
    pub blocks: Vec<Affine>,
    k: usize,
}

impl DecoderParams {
    pub fn init(
        vocab_size: usize,
        emb_dim: usize,
        state_dim: usize,
        video_dim: usize,
        t_max: usize,
        k: usize,
        num_blocks: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("decoder kernel size must be >= 1".into()));
        }
        Ok(Self {
            word_emb: Embedding::init(vocab_size, emb_dim, rng),
            pos_emb: Embedding::init(t_max, emb_dim, rng),
            video_map: Affine::init(emb_dim, video_dim, rng),
            input_proj: Affine::init(state_dim, 2 * emb_dim, rng),
            blocks: (0..num_blocks)
                .map(|_| Affine::init(2 * state_dim, k * state_dim, rng))
                .collect(),
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vocab_size(&self) -> usize {
        self.word_emb.rows()
    }

    pub fn t_max(&self) -> usize {
        self.pos_emb.rows()
    }

    pub fn emb_dim(&self) -> usize {
        self.word_emb.dim()
    }

    pub fn state_dim(&self) -> usize {
        self.input_proj.out_dim()
    }
}

/// Embeds one decoding step: `input_proj(concat(word_emb[token] + pos_emb[t],
/// video_map(z̃)))`.
pub fn embed_step(
    token: usize,
    t: usize,
    z_tilde: &[f64],
    params: &DecoderParams,
) -> Result<Vec<f64>> {
    let u = params.video_map.forward(z_tilde);
    embed_step_with_video(token, t, &u, params)
}

/// [`embed_step`] with the mapped video vector already computed; the map is
/// constant across steps so callers hoist it out of decode loops.
fn embed_step_with_video(
    token: usize,
    t: usize,
    u: &[f64],
    params: &DecoderParams,
) -> Result<Vec<f64>> {
    if token >= params.vocab_size() {
        return Err(Error::Index {
            op: "embed_step",
            index: token,
            len: params.vocab_size(),
        });
    }
    if t >= params.t_max() {
        return Err(Error::Capacity {
            op: "embed_step",
            got: t,
            max: params.t_max() - 1,
        });
    }
    let x = embed_concat(token, t, u, params);
    Ok(params.input_proj.forward(&x))
}

/// concat(word_emb[token] + pos_emb[t], u)
fn embed_concat(token: usize, t: usize, u: &[f64], params: &DecoderParams) -> Vec<f64> {
    let d = params.emb_dim();
    let mut x = vec![0.0; 2 * d];
    x[..d].copy_from_slice(params.word_emb.row(token));
    add_assign(&mut x[..d], params.pos_emb.row(t));
    x[d..].copy_from_slice(u);
    x
}

/// One shifted (causal) convolutional block over a whole sequence. Output
/// position t sees inputs t−k+1..t only.
pub fn shifted_conv_block(seq: &Tensor, conv: &Affine, k: usize) -> Result<Tensor> {
    shifted_conv_block_fwd(seq, conv, k, 1).map(|(out, _)| out)
}

/// Pre-GLU activations of a shifted block, `[T, 2·dim]` row-major.
pub type ShiftedBlockCache = Vec<f64>;

pub fn shifted_conv_block_fwd(
    seq: &Tensor,
    conv: &Affine,
    k: usize,
    threads: usize,
) -> Result<(Tensor, ShiftedBlockCache)> {
    let dim = seq.cols();
    if conv.in_dim() != k * dim || conv.out_dim() != 2 * dim {
        return Err(Error::Shape {
            op: "shifted_conv_block",
            lhs: vec![conv.out_dim(), conv.in_dim()],
            rhs: vec![2 * dim, k * dim],
        });
    }
    let len = seq.rows();
    // Left padding only: padded[i + k − 1] = seq[i].
    let mut padded = Tensor::zeros(vec![len + k - 1, dim]);
    padded.data_mut()[(k - 1) * dim..].copy_from_slice(seq.data());

    let rows = parallel_fill(threads, len, |t| {
        let window = &padded.data()[t * dim..(t + k) * dim];
        let pre = conv.forward(window);
        let mut out = vec![0.0; dim];
        glu_into(&mut out, &pre);
        add_assign(&mut out, seq.row(t));
        (pre, out)
    });

    let mut pre_glu = vec![0.0; len * 2 * dim];
    let mut out = Tensor::zeros(vec![len, dim]);
    for (t, (pre, row)) in rows.into_iter().enumerate() {
        pre_glu[t * 2 * dim..(t + 1) * 2 * dim].copy_from_slice(&pre);
        out.row_mut(t).copy_from_slice(&row);
    }
    Ok((out, pre_glu))
}

/// Backward companion of [`shifted_conv_block_fwd`].
pub fn shifted_conv_block_bwd(
    conv: &mut Affine,
    seq: &Tensor,
    pre_glu: &ShiftedBlockCache,
    g_out: &Tensor,
    k: usize,
) -> Tensor {
    let dim = seq.cols();
    let len = seq.rows();
    let mut padded = Tensor::zeros(vec![len + k - 1, dim]);
    padded.data_mut()[(k - 1) * dim..].copy_from_slice(seq.data());

    let mut g_padded = vec![0.0; (len + k - 1) * dim];
    let mut g_in = Tensor::zeros(vec![len, dim]);
    let mut g_pre = vec![0.0; 2 * dim];
    for t in 0..len {
        let gy = g_out.row(t);
        add_assign(g_in.row_mut(t), gy);
        g_pre.iter_mut().for_each(|v| *v = 0.0);
        glu_backward_into(&mut g_pre, &pre_glu[t * 2 * dim..(t + 1) * 2 * dim], gy);
        let window = &padded.data()[t * dim..(t + k) * dim];
        conv.backward_acc(window, &g_pre, &mut g_padded[t * dim..(t + k) * dim]);
    }
    for t in 0..len {
        add_assign(g_in.row_mut(t), &g_padded[(t + k - 1) * dim..(t + k) * dim]);
    }
    g_in
}

/// Forward state of a teacher-forced decode, kept for the backward pass.
#[derive(Debug)]
pub struct DecoderCache {
    pub tokens: Vec<usize>,
    /// Mapped video vector (input half shared by all steps).
    pub video_vec: Vec<f64>,
    /// Concatenated embedding inputs, `[T, 2·emb_dim]`.
    pub concat_rows: Tensor,
    /// Input sequence of each block; `block_inputs[0]` is the projected
    /// embedding sequence.
    pub block_inputs: Vec<Tensor>,
    pub block_caches: Vec<ShiftedBlockCache>,
}

/// Teacher-forced hidden states for a full token prefix. `h[t]` depends
/// only on `tokens[0..=t]` and the video vector.
pub fn decode_hidden(tokens: &[usize], z_tilde: &[f64], params: &DecoderParams) -> Result<Tensor> {
    decode_hidden_fwd(tokens, z_tilde, params, 1).map(|(h, _)| h)
}

pub fn decode_hidden_fwd(
    tokens: &[usize],
    z_tilde: &[f64],
    params: &DecoderParams,
    threads: usize,
) -> Result<(Tensor, DecoderCache)> {
    if tokens.is_empty() {
        return Err(Error::Contract("decode_hidden requires tokens".into()));
    }
    if tokens[0] != BOS {
        return Err(Error::Contract(format!(
            "decoder input must begin with the start token, got index {}",
            tokens[0]
        )));
    }
    let t_len = tokens.len();
    let d_emb = params.emb_dim();
    let d = params.state_dim();
    let u = params.video_map.forward(z_tilde);

    let mut concat_rows = Tensor::zeros(vec![t_len, 2 * d_emb]);
    let mut q0 = Tensor::zeros(vec![t_len, d]);
    // Validate tokens/positions up front so the parallel fill is total.
    for (t, &tok) in tokens.iter().enumerate() {
        if tok >= params.vocab_size() {
            return Err(Error::Index {
                op: "decode_hidden",
                index: tok,
                len: params.vocab_size(),
            });
        }
        if t >= params.t_max() {
            return Err(Error::Capacity {
                op: "decode_hidden",
                got: t,
                max: params.t_max() - 1,
            });
        }
    }
    let rows = parallel_fill(threads, t_len, |t| {
        let x = embed_concat(tokens[t], t, &u, params);
        let y = params.input_proj.forward(&x);
        (x, y)
    });
    for (t, (x, y)) in rows.into_iter().enumerate() {
        concat_rows.row_mut(t).copy_from_slice(&x);
        q0.row_mut(t).copy_from_slice(&y);
    }

    let mut block_inputs = Vec::with_capacity(params.blocks.len());
    let mut block_caches = Vec::with_capacity(params.blocks.len());
    let mut current = q0;
    for conv in &params.blocks {
        let (next, cache) = shifted_conv_block_fwd(&current, conv, params.k, threads)?;
        block_inputs.push(current);
        block_caches.push(cache);
        current = next;
    }

    Ok((
        current,
        DecoderCache {
            tokens: tokens.to_vec(),
            video_vec: u,
            concat_rows,
            block_inputs,
            block_caches,
        },
    ))
}

/// Backward companion of [`decode_hidden_fwd`]: accumulates parameter
/// gradients and returns the gradient w.r.t. the pooled video vector.
pub fn decode_hidden_bwd(
    params: &mut DecoderParams,
    z_tilde: &[f64],
    cache: &DecoderCache,
    g_h: &Tensor,
) -> Vec<f64> {
    let d_emb = params.emb_dim();
    let mut g = g_h.clone();
    for bi in (0..params.blocks.len()).rev() {
        g = shifted_conv_block_bwd(
            &mut params.blocks[bi],
            &cache.block_inputs[bi],
            &cache.block_caches[bi],
            &g,
            params.k,
        );
    }
    // g is now the gradient w.r.t. the projected embedding sequence.
    let mut g_u_total = vec![0.0; d_emb];
    let mut g_x = vec![0.0; 2 * d_emb];
    for (t, &tok) in cache.tokens.iter().enumerate() {
        g_x.iter_mut().for_each(|v| *v = 0.0);
        params
            .input_proj
            .backward_acc(cache.concat_rows.row(t), g.row(t), &mut g_x);
        params.word_emb.backward_acc(tok, &g_x[..d_emb]);
        params.pos_emb.backward_acc(t, &g_x[..d_emb]);
        add_assign(&mut g_u_total, &g_x[d_emb..]);
    }
    let mut g_z_tilde = vec![0.0; params.video_map.in_dim()];
    params
        .video_map
        .backward_acc(z_tilde, &g_u_total, &mut g_z_tilde);
    g_z_tilde
}

/// Rolling decode state: per block, the last k−1 inputs to that block,
/// plus the cached mapped video vector. One state per hypothesis; after t
/// steps its outputs equal the teacher-forced outputs at positions ≤ t.
#[derive(Debug, Clone)]
pub struct IncrementalState {
    pos: usize,
    video_vec: Vec<f64>,
    /// Per block, oldest-first window tail (length ≤ k−1 each).
    bufs: Vec<Vec<Vec<f64>>>,
}

impl IncrementalState {
    /// A fresh state bound to one video vector. Feeding a different video
    /// to later steps of the same state is unsupported.
    pub fn new(z_tilde: &[f64], params: &DecoderParams) -> Self {
        Self {
            pos: 0,
            video_vec: params.video_map.forward(z_tilde),
            bufs: vec![Vec::new(); params.blocks.len()],
        }
    }

    /// Number of steps consumed so far.
    pub fn pos(&self) -> usize {
        self.pos
    }
}

/// One incremental decoding step. `state` must reflect exactly the first
/// `t` steps; the returned hidden state matches [`decode_hidden`] on the
/// full prefix at position `t`.
pub fn decode_step(
    token: usize,
    t: usize,
    state: &mut IncrementalState,
    params: &DecoderParams,
) -> Result<Vec<f64>> {
    if state.pos != t {
        return Err(Error::Contract(format!(
            "incremental state is at step {}, not {t}",
            state.pos
        )));
    }
    let k = params.k;
    let dim = params.state_dim();
    let mut q = embed_step_with_video(token, t, &state.video_vec, params)?;
    let mut window = vec![0.0; k * dim];
    for (buf, conv) in state.bufs.iter_mut().zip(&params.blocks) {
        // Window = k−1 buffered inputs (zero-padded on the left) + current.
        window.iter_mut().for_each(|v| *v = 0.0);
        let filled = buf.len();
        for (j, prev) in buf.iter().enumerate() {
            let slot = k - 1 - filled + j;
            window[slot * dim..(slot + 1) * dim].copy_from_slice(prev);
        }
        window[(k - 1) * dim..].copy_from_slice(&q);

        let pre = conv.forward(&window);
        let mut out = vec![0.0; dim];
        glu_into(&mut out, &pre);
        add_assign(&mut out, &q);

        if k > 1 {
            if buf.len() == k - 1 {
                buf.remove(0);
            }
            buf.push(std::mem::replace(&mut q, out));
        } else {
            q = out;
        }
    }
    state.pos += 1;
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{finite_diff_grad, max_rel_err};
    use crate::tdconv::test_support::oracle_affine;

    fn small_params(rng: &mut Rng) -> DecoderParams {
        DecoderParams::init(6, 3, 3, 2, 8, 3, 2, rng).unwrap()
    }

    fn rand_vec(n: usize, rng: &mut Rng) -> Vec<f64> {
        (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect()
    }

    #[test]
    fn zero_params_embed_to_zero() {
        let mut rng = Rng::new(30);
        let mut p = small_params(&mut rng);
        p.word_emb.table = Tensor::zeros(vec![6, 3]);
        p.pos_emb.table = Tensor::zeros(vec![8, 3]);
        p.video_map = Affine::zeros(3, 2);
        p.input_proj = Affine::zeros(3, 6);
        let v = embed_step(2, 1, &[1.0, -1.0], &p).unwrap();
        assert_eq!(v, vec![0.0; 3]);
    }

    #[test]
    fn position_changes_the_embedding() {
        let mut rng = Rng::new(31);
        let p = small_params(&mut rng);
        let z = rand_vec(2, &mut rng);
        let a = embed_step(2, 0, &z, &p).unwrap();
        let b = embed_step(2, 1, &z, &p).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn embed_matches_hand_affine_concat_oracle() {
        let mut rng = Rng::new(32);
        let p = small_params(&mut rng);
        let z = rand_vec(2, &mut rng);
        let got = embed_step(4, 2, &z, &p).unwrap();

        let u = oracle_affine(&p.video_map.weight, &p.video_map.bias, &z);
        let mut x = Vec::new();
        for d in 0..3 {
            x.push(p.word_emb.row(4)[d] + p.pos_emb.row(2)[d]);
        }
        x.extend(u);
        let want = oracle_affine(&p.input_proj.weight, &p.input_proj.bias, &x);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn embed_past_capacity_is_an_error() {
        let mut rng = Rng::new(33);
        let p = small_params(&mut rng);
        let z = rand_vec(2, &mut rng);
        assert!(matches!(
            embed_step(0, 8, &z, &p),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(
            embed_step(6, 0, &z, &p),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn shifted_block_is_causal() {
        let mut rng = Rng::new(34);
        let conv = Affine::init(6, 9, &mut rng);
        let mut seq = Tensor::zeros(vec![5, 3]);
        seq.fill_uniform(&mut rng, -1.0, 1.0);
        let base = shifted_conv_block(&seq, &conv, 3).unwrap();
        for t in 0..4 {
            let mut perturbed = seq.clone();
            perturbed.row_mut(t + 1)[0] += 10.0;
            let out = shifted_conv_block(&perturbed, &conv, 3).unwrap();
            for s in 0..=t {
                assert_eq!(out.row(s), base.row(s), "position {s} changed by future edit");
            }
        }
    }

    #[test]
    fn zero_block_params_are_identity() {
        let mut rng = Rng::new(35);
        let conv = Affine::zeros(6, 9);
        let mut seq = Tensor::zeros(vec![4, 3]);
        seq.fill_uniform(&mut rng, -1.0, 1.0);
        let out = shifted_conv_block(&seq, &conv, 3).unwrap();
        assert_eq!(out.data(), seq.data());
    }

    #[test]
    fn shifted_block_matches_scalar_oracle() {
        let mut rng = Rng::new(36);
        let conv = Affine::init(4, 6, &mut rng);
        let mut seq = Tensor::zeros(vec![4, 2]);
        seq.fill_uniform(&mut rng, -1.0, 1.0);
        let got = shifted_conv_block(&seq, &conv, 3).unwrap();

        // Scalar route with explicit left padding.
        let mut padded = vec![vec![0.0; 2]; 2];
        for t in 0..4 {
            padded.push(seq.row(t).to_vec());
        }
        for t in 0..4 {
            let mut window = Vec::new();
            for j in 0..3 {
                window.extend_from_slice(&padded[t + j]);
            }
            let pre = oracle_affine(&conv.weight, &conv.bias, &window);
            for d in 0..2 {
                let sig = 1.0 / (1.0 + (-pre[2 + d]).exp());
                let want = pre[d] * sig + seq.row(t)[d];
                assert!((got.row(t)[d] - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn parallel_and_serial_block_forward_are_bitwise_equal() {
        let mut rng = Rng::new(37);
        let conv = Affine::init(6, 9, &mut rng);
        let mut seq = Tensor::zeros(vec![9, 3]);
        seq.fill_uniform(&mut rng, -1.0, 1.0);
        let (a, _) = shifted_conv_block_fwd(&seq, &conv, 3, 1).unwrap();
        let (b, _) = shifted_conv_block_fwd(&seq, &conv, 3, 4).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn decode_hidden_is_causal_bitwise() {
        let mut rng = Rng::new(38);
        let p = small_params(&mut rng);
        let z = rand_vec(2, &mut rng);
        let tokens = [BOS, 4, 5, 2, 4];
        let h = decode_hidden(&tokens, &z, &p).unwrap();
        for t in 0..4 {
            let mut edited = tokens;
            edited[t + 1] = if tokens[t + 1] == 4 { 5 } else { 4 };
            let h2 = decode_hidden(&edited, &z, &p).unwrap();
            for s in 0..=t {
                assert_eq!(h.row(s), h2.row(s));
            }
        }
    }

    #[test]
    fn single_start_token_gives_length_one() {
        let mut rng = Rng::new(39);
        let p = small_params(&mut rng);
        let z = rand_vec(2, &mut rng);
        let h = decode_hidden(&[BOS], &z, &p).unwrap();
        assert_eq!(h.rows(), 1);
    }

    #[test]
    fn decode_hidden_requires_start_token() {
        let mut rng = Rng::new(40);
        let p = small_params(&mut rng);
        let z = rand_vec(2, &mut rng);
        assert!(matches!(
            decode_hidden(&[2, 3], &z, &p),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn incremental_steps_match_teacher_forced_path() {
        let mut rng = Rng::new(41);
        for _ in 0..20 {
            let p = small_params(&mut rng);
            let z = rand_vec(2, &mut rng);
            let tokens = [BOS, 4, 2, 5, 3];
            let h = decode_hidden(&tokens, &z, &p).unwrap();
            let mut state = IncrementalState::new(&z, &p);
            for (t, &tok) in tokens.iter().enumerate() {
                let ht = decode_step(tok, t, &mut state, &p).unwrap();
                let max_diff = ht
                    .iter()
                    .zip(h.row(t))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(max_diff <= 1e-9, "step {t} diverged by {max_diff}");
            }
        }
    }

    #[test]
    fn step_zero_with_empty_state_matches_start_only_decode() {
        let mut rng = Rng::new(42);
        let p = small_params(&mut rng);
        let z = rand_vec(2, &mut rng);
        let h = decode_hidden(&[BOS], &z, &p).unwrap();
        let mut state = IncrementalState::new(&z, &p);
        let h0 = decode_step(BOS, 0, &mut state, &p).unwrap();
        for (a, b) in h0.iter().zip(h.row(0)) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn replaying_a_snapshotted_state_is_deterministic() {
        let mut rng = Rng::new(43);
        let p = small_params(&mut rng);
        let z = rand_vec(2, &mut rng);
        let mut state = IncrementalState::new(&z, &p);
        decode_step(BOS, 0, &mut state, &p).unwrap();
        let snapshot = state.clone();
        let mut s1 = snapshot.clone();
        let mut s2 = snapshot;
        let a = decode_step(3, 1, &mut s1, &p).unwrap();
        let b = decode_step(3, 1, &mut s2, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stale_state_is_a_contract_violation() {
        let mut rng = Rng::new(44);
        let p = small_params(&mut rng);
        let z = rand_vec(2, &mut rng);
        let mut state = IncrementalState::new(&z, &p);
        decode_step(BOS, 0, &mut state, &p).unwrap();
        assert!(matches!(
            decode_step(3, 0, &mut state, &p),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            decode_step(3, 5, &mut state, &p),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn decoder_gradients_match_finite_differences() {
        let mut rng = Rng::new(45);
        let params = small_params(&mut rng);
        let z = rand_vec(2, &mut rng);
        let tokens = [BOS, 4, 2, 5];
        let lw = rand_vec(4 * 3, &mut rng);

        let loss = |params: &DecoderParams, z: &[f64]| {
            let h = decode_hidden(&tokens, z, params).unwrap();
            h.data().iter().zip(&lw).map(|(a, b)| a * b).sum::<f64>()
        };

        let (h, cache) = decode_hidden_fwd(&tokens, &z, &params, 1).unwrap();
        let g_h = Tensor::from_vec(vec![4, 3], lw.clone()).unwrap();
        let mut p = params.clone();
        let g_z = decode_hidden_bwd(&mut p, &z, &cache, &g_h);
        assert_eq!(h.rows(), 4);

        // Video vector input gradient.
        let zt = Tensor::from_vec(vec![2], z.clone()).unwrap();
        let fd_z = finite_diff_grad(
            |v| loss(&params, v.data()),
            &zt,
            1e-5,
        );
        assert!(max_rel_err(&g_z, fd_z.data()) < 1e-4);

        // Every decoder parameter tensor.
        let checks: Vec<(Tensor, Vec<f64>)> = vec![
            (params.word_emb.table.clone(), p.word_emb.table.grad().unwrap().to_vec()),
            (params.pos_emb.table.clone(), p.pos_emb.table.grad().unwrap().to_vec()),
            (params.video_map.weight.clone(), p.video_map.weight.grad().unwrap().to_vec()),
            (params.video_map.bias.clone(), p.video_map.bias.grad().unwrap().to_vec()),
            (params.input_proj.weight.clone(), p.input_proj.weight.grad().unwrap().to_vec()),
            (params.input_proj.bias.clone(), p.input_proj.bias.grad().unwrap().to_vec()),
            (params.blocks[0].weight.clone(), p.blocks[0].weight.grad().unwrap().to_vec()),
            (params.blocks[0].bias.clone(), p.blocks[0].bias.grad().unwrap().to_vec()),
            (params.blocks[1].weight.clone(), p.blocks[1].weight.grad().unwrap().to_vec()),
            (params.blocks[1].bias.clone(), p.blocks[1].bias.grad().unwrap().to_vec()),
        ];
        let setters: Vec<Box<dyn Fn(&mut DecoderParams, &Tensor)>> = vec![
            Box::new(|p, t| p.word_emb.table = t.clone()),
            Box::new(|p, t| p.pos_emb.table = t.clone()),
            Box::new(|p, t| p.video_map.weight = t.clone()),
            Box::new(|p, t| p.video_map.bias = t.clone()),
            Box::new(|p, t| p.input_proj.weight = t.clone()),
            Box::new(|p, t| p.input_proj.bias = t.clone()),
            Box::new(|p, t| p.blocks[0].weight = t.clone()),
            Box::new(|p, t| p.blocks[0].bias = t.clone()),
            Box::new(|p, t| p.blocks[1].weight = t.clone()),
            Box::new(|p, t| p.blocks[1].bias = t.clone()),
        ];
        for ((value, analytic), set) in checks.iter().zip(&setters) {
            let fd = finite_diff_grad(
                |v| {
                    let mut q = params.clone();
                    set(&mut q, v);
                    loss(&q, &z)
                },
                value,
                1e-5,
            );
            assert!(
                max_rel_err(analytic, fd.data()) < 1e-4,
                "a decoder parameter group failed its gradient check"
            );
        }
    }
}
