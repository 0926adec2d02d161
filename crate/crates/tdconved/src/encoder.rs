//! Encoder: an affine projection of the raw frame/clip features followed by
//! a stack of temporal deformable convolutional blocks, producing one
//! context vector per input position plus a mean-pooled sequence vector.

use crate::error::{Error, Result};
use crate::numcore::{add_assign, scale, Affine, Rng, Tensor};
use crate::tdconv::{deform_conv_block_bwd, deform_conv_block_fwd, DeformBlockCache,
    DeformConvParams};

/// Projection plus stacked deformable blocks. All blocks share the state
/// dimension and kernel size. An empty block list leaves the projected
/// features untouched (the decoder-only model variant).
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    /// Affine map from the feature dimension to the state dimension.
    pub input_proj: Affine,
    pub blocks: Vec<DeformConvParams>,
}

impl EncoderParams {
    pub fn init(
        feat_dim: usize,
        state_dim: usize,
        k: usize,
        num_blocks: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        let input_proj = Affine::init(state_dim, feat_dim, rng);
        let blocks = (0..num_blocks)
            .map(|_| DeformConvParams::init(k, state_dim, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { input_proj, blocks })
    }

    pub fn feat_dim(&self) -> usize {
        self.input_proj.in_dim()
    }

    pub fn state_dim(&self) -> usize {
        self.input_proj.out_dim()
    }
}

/// Per-sequence forward state kept for the backward pass.
#[derive(Debug)]
pub struct EncoderCache {
    /// Projected input, `[N, state_dim]`; also the input of block 0.
    pub projected: Tensor,
    /// Input of block i for i ≥ 1 (output of block i−1).
    pub block_inputs: Vec<Tensor>,
    pub block_caches: Vec<DeformBlockCache>,
}

/// Encodes a feature sequence `[N, feat_dim]` into context vectors
/// `[N, state_dim]`. Sequence length is preserved.
pub fn encode(features: &Tensor, params: &EncoderParams) -> Result<Tensor> {
    encode_fwd(features, params).map(|(z, _)| z)
}

/// Forward pass that also returns the cache for [`encode_bwd`].
pub fn encode_fwd(features: &Tensor, params: &EncoderParams) -> Result<(Tensor, EncoderCache)> {
    if features.shape().len() != 2 || features.cols() != params.feat_dim() {
        return Err(Error::Shape {
            op: "encode",
            lhs: features.shape().to_vec(),
            rhs: vec![features.shape().first().copied().unwrap_or(0), params.feat_dim()],
        });
    }
    if features.rows() == 0 {
        return Err(Error::Contract(
            "encode requires at least one feature vector".to_string(),
        ));
    }
    let n = features.rows();
    let d = params.state_dim();
    let mut projected = Tensor::zeros(vec![n, d]);
    for i in 0..n {
        params
            .input_proj
            .forward_into(projected.row_mut(i), features.row(i));
    }

    let mut block_inputs = Vec::with_capacity(params.blocks.len().saturating_sub(1));
    let mut block_caches = Vec::with_capacity(params.blocks.len());
    let mut current = projected.clone();
    for (bi, block) in params.blocks.iter().enumerate() {
        let (out, cache) = deform_conv_block_fwd(&current, block)?;
        block_caches.push(cache);
        if bi > 0 {
            block_inputs.push(current);
        }
        current = out;
    }

    Ok((
        current,
        EncoderCache {
            projected,
            block_inputs,
            block_caches,
        },
    ))
}

/// Backward companion of [`encode_fwd`]: accumulates parameter gradients
/// and returns the gradient w.r.t. the raw features.
pub fn encode_bwd(
    params: &mut EncoderParams,
    features: &Tensor,
    cache: &EncoderCache,
    g_z: &Tensor,
) -> Tensor {
    let mut g = g_z.clone();
    for bi in (0..params.blocks.len()).rev() {
        g = deform_conv_block_bwd(&mut params.blocks[bi], &cache.block_caches[bi], &g);
    }
    // g is now the gradient w.r.t. the projected features.
    let n = features.rows();
    let mut g_features = Tensor::zeros(vec![n, params.input_proj.in_dim()]);
    for i in 0..n {
        params
            .input_proj
            .backward_acc(features.row(i), g.row(i), g_features.row_mut(i));
    }
    g_features
}

/// Arithmetic mean of the context vectors.
pub fn mean_pool(z: &Tensor) -> Result<Vec<f64>> {
    if z.rows() == 0 {
        return Err(Error::Contract(
            "mean_pool requires a non-empty sequence".to_string(),
        ));
    }
    let mut pooled = vec![0.0; z.cols()];
    for i in 0..z.rows() {
        add_assign(&mut pooled, z.row(i));
    }
    scale(&mut pooled, 1.0 / z.rows() as f64);
    Ok(pooled)
}

/// Backward companion of [`mean_pool`]: spreads `g/N` to every position.
pub fn mean_pool_bwd(g_pooled: &[f64], n: usize, g_z: &mut Tensor) {
    let inv = 1.0 / n as f64;
    for i in 0..n {
        for (gz, g) in g_z.row_mut(i).iter_mut().zip(g_pooled) {
            *gz += inv * g;
        }
    }
}
