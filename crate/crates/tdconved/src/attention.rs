//! Temporal attention over the encoder context vectors, conditioned on a
//! decoder hidden state: scores `W_a·tanh(W_z·z_i + W_h·h_t + b_a)` are
//! softmax-normalized into a distribution whose weighted sum of the context
//! vectors is the attended video feature.

use crate::error::{Error, Result};
use crate::numcore::{
    matvec_acc, matvec_acc_transposed, outer_acc, softmax_backward, softmax_in_place, Linear, Rng,
    Tensor,
};

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    /// Context-vector projection into the attention space.
    pub enc_proj: Linear,
    /// Decoder-state projection into the attention space.
    pub dec_proj: Linear,
    /// Shared bias of the attention space.
    pub bias: Tensor,
    /// Row vector turning a tanh-activated attention vector into a score.
    pub score: Linear,
}

impl AttentionParams {
    pub fn init(attn_dim: usize, enc_dim: usize, dec_dim: usize, rng: &mut Rng) -> Self {
        Self {
            enc_proj: Linear::init(attn_dim, enc_dim, rng),
            dec_proj: Linear::init(attn_dim, dec_dim, rng),
            bias: Tensor::zeros(vec![attn_dim]),
            score: Linear::init(1, attn_dim, rng),
        }
    }

    pub fn attn_dim(&self) -> usize {
        self.enc_proj.out_dim()
    }
}

/// Projected context vectors `W_z·z_i`, computed once per sequence and
/// shared by every decoding step.
#[derive(Debug, Clone)]
pub struct ProjectedContext {
    /// `[N, attn_dim]` row-major.
    pub rows: Vec<f64>,
    pub n: usize,
}

pub fn project_context(z: &Tensor, params: &AttentionParams) -> Result<ProjectedContext> {
    if z.cols() != params.enc_proj.weight.cols() {
        return Err(Error::Shape {
            op: "attend",
            lhs: z.shape().to_vec(),
            rhs: params.enc_proj.weight.shape().to_vec(),
        });
    }
    let n = z.rows();
    let d_a = params.attn_dim();
    let mut rows = vec![0.0; n * d_a];
    for i in 0..n {
        params
            .enc_proj
            .forward_into(&mut rows[i * d_a..(i + 1) * d_a], z.row(i));
    }
    Ok(ProjectedContext { rows, n })
}

/// Per-step values the backward pass needs.
#[derive(Debug, Clone)]
pub struct AttendCache {
    /// tanh-activated attention vectors, `[N, attn_dim]`.
    pub activations: Vec<f64>,
    /// Normalized attention distribution over the N context vectors.
    pub weights: Vec<f64>,
}

/// Attention distribution and attended context vector for one decoder
/// state. The distribution is non-negative and sums to 1.
pub fn attend(z: &Tensor, h_t: &[f64], params: &AttentionParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let projected = project_context(z, params)?;
    let (cache, z_hat) = attend_fwd(z, &projected, h_t, params)?;
    Ok((cache.weights, z_hat))
}

/// [`attend`] with the context projection hoisted out; returns the cache
/// and the attended vector.
pub fn attend_fwd(
    z: &Tensor,
    projected: &ProjectedContext,
    h_t: &[f64],
    params: &AttentionParams,
) -> Result<(AttendCache, Vec<f64>)> {
    if h_t.len() != params.dec_proj.weight.cols() {
        return Err(Error::Shape {
            op: "attend",
            lhs: vec![h_t.len()],
            rhs: params.dec_proj.weight.shape().to_vec(),
        });
    }
    if z.rows() == 0 {
        return Err(Error::Contract(
            "attend requires at least one context vector".to_string(),
        ));
    }
    let n = z.rows();
    let d_a = params.attn_dim();

    let mut query = params.bias.data().to_vec();
    matvec_acc(&mut query, params.dec_proj.weight.data(), h_t);

    let mut activations = vec![0.0; n * d_a];
    let mut scores = vec![0.0; n];
    for i in 0..n {
        let act = &mut activations[i * d_a..(i + 1) * d_a];
        for (a, (p, q)) in act
            .iter_mut()
            .zip(projected.rows[i * d_a..(i + 1) * d_a].iter().zip(&query))
        {
            *a = (p + q).tanh();
        }
        let mut s = 0.0;
        for (w, a) in params.score.weight.data().iter().zip(act.iter()) {
            s += w * a;
        }
        scores[i] = s;
    }
    softmax_in_place(&mut scores);

    let mut z_hat = vec![0.0; z.cols()];
    for i in 0..n {
        let w = scores[i];
        for (o, v) in z_hat.iter_mut().zip(z.row(i)) {
            *o += w * v;
        }
    }
    Ok((
        AttendCache {
            activations,
            weights: scores,
        },
        z_hat,
    ))
}

/// Backward companion of [`attend_fwd`] for one step. Accumulates parameter
/// gradients, adds the context gradient into `g_z`, and returns the
/// gradient w.r.t. the decoder state `h_t`.
pub fn attend_bwd(
    params: &mut AttentionParams,
    z: &Tensor,
    h_t: &[f64],
    cache: &AttendCache,
    g_z_hat: &[f64],
    g_z: &mut Tensor,
) -> Vec<f64> {
    let n = z.rows();
    let d_a = params.attn_dim();

    // Through the weighted sum: both the weights and the contexts carry grad.
    let mut g_weights = vec![0.0; n];
    for i in 0..n {
        let mut dot = 0.0;
        for (g, v) in g_z_hat.iter().zip(z.row(i)) {
            dot += g * v;
        }
        g_weights[i] = dot;
        let w = cache.weights[i];
        for (gz, g) in g_z.row_mut(i).iter_mut().zip(g_z_hat) {
            *gz += w * g;
        }
    }

    // Through the softmax.
    let g_scores = softmax_backward(&cache.weights, &g_weights);

    // Through score · tanh(...).
    let mut g_query = vec![0.0; d_a];
    let mut g_act = vec![0.0; d_a];
    let mut g_h = vec![0.0; h_t.len()];
    for i in 0..n {
        let gs = g_scores[i];
        let act = &cache.activations[i * d_a..(i + 1) * d_a];
        params.score.backward_acc(act, &[gs], &mut g_act);
        // g_act currently holds W_aᵀ·gs for this row; fold the tanh.
        for (g, a) in g_act.iter_mut().zip(act) {
            *g *= 1.0 - a * a;
        }
        // Pre-activation gradient splits into the z-projection path and the
        // shared query (h-projection + bias) path.
        params.enc_proj.backward_acc(z.row(i), &g_act, g_z.row_mut(i));
        for (q, g) in g_query.iter_mut().zip(&g_act) {
            *q += g;
        }
        g_act.iter_mut().for_each(|v| *v = 0.0);
    }
    params.bias.acc_grad(&g_query);
    outer_acc(params.dec_proj.weight.grad_mut(), &g_query, h_t);
    matvec_acc_transposed(&mut g_h, params.dec_proj.weight.data(), &g_query);
    g_h
}
