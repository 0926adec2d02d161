//! Temporal deformable convolution: a 1-D convolution whose k sampling
//! positions are shifted by learned, possibly fractional, per-position
//! offsets, evaluated by triangular-kernel linear interpolation.
//!
//! The block runs in two stages per center position: a small convolution
//! over the standard window predicts one scalar offset per tap, then the
//! main convolution aggregates the offset samples, followed by a gated
//! linear unit and a residual connection. Sampling positions live in the
//! padded coordinate system; interpolation mass falling outside the padded
//! sequence is dropped, consistent with zero padding.

use crate::error::{Error, Result};
use crate::numcore::{add_assign, glu_backward_into, glu_into, Affine, Rng, Tensor};

/// One scalar temporal offset per tap, shared across channels.
#[derive(Debug, Clone, PartialEq)]
pub struct TapOffsets {
    values: Vec<f64>,
}

impl TapOffsets {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("tap offsets must be finite".to_string()));
        }
        Ok(Self { values })
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Parameters of one temporal deformable convolutional block over
/// `dim`-dimensional states with an odd kernel size `k`.
///
/// `offset` maps the concatenated k-tap window to k scalar offsets; `conv`
/// maps the concatenated offset samples to a 2·dim pre-activation that the
/// GLU halves back to dim.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformConvParams {
    pub offset: Affine,
    pub conv: Affine,
    k: usize,
    dim: usize,
}

impl DeformConvParams {
    /// The offset branch starts at exactly zero so the block begins as a
    /// standard convolution and learns deformation gradually; the main
    /// convolution uses the usual uniform fan-in init.
    pub fn init(k: usize, dim: usize, rng: &mut Rng) -> Result<Self> {
        if k % 2 == 0 || k == 0 {
            return Err(Error::Config(format!(
                "deformable kernel size must be odd and >= 1, got {k}"
            )));
        }
        Ok(Self {
            offset: Affine::zeros(k, k * dim),
            conv: Affine::init(2 * dim, k * dim, rng),
            k,
            dim,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Tap displacements R = {−(k−1)/2, …, 0, …, (k−1)/2}, 0-indexed by tap.
    pub fn tap_displacement(k: usize, tap0: usize) -> isize {
        tap0 as isize - ((k - 1) / 2) as isize
    }
}

/// Predicts the per-tap offsets for one window of k state vectors.
pub fn predict_offsets(window: &Tensor, params: &DeformConvParams) -> Result<TapOffsets> {
    if window.shape() != [params.k, params.dim] {
        return Err(Error::Shape {
            op: "predict_offsets",
            lhs: window.shape().to_vec(),
            rhs: vec![params.k, params.dim],
        });
    }
    TapOffsets::new(params.offset.forward(window.data()))
}

/// Linear interpolation of a sequence of vectors at a real position, with
/// the triangular kernel `B(s, pos) = max(0, 1 − |s − pos|)` summed over the
/// integral positions of `seq`. Positions outside `[0, L−1]` contribute
/// partial or zero mass.
pub fn interp(seq: &Tensor, pos: f64) -> Vec<f64> {
    let dim = seq.cols();
    let mut out = vec![0.0; dim];
    interp_acc(&mut out, seq.data(), seq.rows(), dim, pos);
    out
}

/// Samples tap `n` (1-based) of the deformable window centered at `center`.
pub fn deformable_tap(
    seq: &Tensor,
    center: usize,
    tap: usize,
    offsets: &TapOffsets,
) -> Result<Vec<f64>> {
    if tap == 0 || tap > offsets.k() {
        return Err(Error::Index {
            op: "deformable_tap",
            index: tap,
            len: offsets.k(),
        });
    }
    let r = DeformConvParams::tap_displacement(offsets.k(), tap - 1);
    let pos = center as f64 + r as f64 + offsets.values()[tap - 1];
    Ok(interp(seq, pos))
}

/// Everything the backward pass needs from a block's forward pass.
#[derive(Debug, Clone)]
pub struct DeformBlockCache {
    /// Input padded with (k−1)/2 zero rows on each side, `[L+k−1, dim]`.
    pub padded: Tensor,
    /// Realized offsets, row-major `[L, k]`.
    pub offsets: Vec<f64>,
    /// Pre-GLU activations, row-major `[L, 2·dim]`.
    pub pre_glu: Vec<f64>,
}

impl DeformBlockCache {
    /// Smallest distance of any realized offset from an integer. Gradient
    /// checks need this bounded away from zero because the interpolation
    /// kernel has kinks at integral alignment.
    pub fn min_kink_distance(&self) -> f64 {
        self.offsets
            .iter()
            .map(|o| {
                let fr = o.fract().abs();
                fr.min(1.0 - fr)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Applies one temporal deformable convolutional block; output length
/// equals input length.
pub fn deform_conv_block(seq: &Tensor, params: &DeformConvParams) -> Result<Tensor> {
    deform_conv_block_fwd(seq, params).map(|(out, _)| out)
}

/// Forward pass that also returns the cache for [`deform_conv_block_bwd`].
pub fn deform_conv_block_fwd(
    seq: &Tensor,
    params: &DeformConvParams,
) -> Result<(Tensor, DeformBlockCache)> {
    let (k, dim) = (params.k, params.dim);
    if seq.shape().len() != 2 || seq.cols() != dim {
        return Err(Error::Shape {
            op: "deform_conv_block",
            lhs: seq.shape().to_vec(),
            rhs: vec![seq.shape().first().copied().unwrap_or(0), dim],
        });
    }
    let len = seq.rows();
    let pad = (k - 1) / 2;
    let padded_len = len + 2 * pad;

    let mut padded = Tensor::zeros(vec![padded_len, dim]);
    padded.data_mut()[pad * dim..(pad + len) * dim].copy_from_slice(seq.data());

    let mut offsets = vec![0.0; len * k];
    let mut pre_glu = vec![0.0; len * 2 * dim];
    let mut out = Tensor::zeros(vec![len, dim]);
    let mut samples = vec![0.0; k * dim];

    for i in 0..len {
        let center = i + pad;
        // The standard window is contiguous in the padded buffer.
        let window = &padded.data()[(center - pad) * dim..(center + pad + 1) * dim];
        let offs = &mut offsets[i * k..(i + 1) * k];
        params.offset.forward_into(offs, window);

        samples.iter_mut().for_each(|v| *v = 0.0);
        for n in 0..k {
            let r = DeformConvParams::tap_displacement(k, n);
            let pos = center as f64 + r as f64 + offs[n];
            interp_acc(
                &mut samples[n * dim..(n + 1) * dim],
                padded.data(),
                padded_len,
                dim,
                pos,
            );
        }

        let pre = &mut pre_glu[i * 2 * dim..(i + 1) * 2 * dim];
        params.conv.forward_into(pre, &samples);

        let row = out.row_mut(i);
        glu_into(row, pre);
        add_assign(row, seq.row(i));
    }

    Ok((
        out,
        DeformBlockCache {
            padded,
            offsets,
            pre_glu,
        },
    ))
}

/// Backward companion of [`deform_conv_block_fwd`]. Accumulates parameter
/// gradients into `params` and returns the gradient w.r.t. the input.
///
/// The derivative of the interpolation kernel w.r.t. the sampling position
/// is +1 for integral points above it and −1 below it within the unit
/// window, with subgradient 0 exactly at the kinks.
pub fn deform_conv_block_bwd(
    params: &mut DeformConvParams,
    cache: &DeformBlockCache,
    g_out: &Tensor,
) -> Tensor {
    let (k, dim) = (params.k, params.dim);
    let pad = (k - 1) / 2;
    let padded_len = cache.padded.rows();
    let len = padded_len - 2 * pad;
    debug_assert_eq!(g_out.shape(), [len, dim]);

    let mut g_in = Tensor::zeros(vec![len, dim]);
    let mut g_padded = vec![0.0; padded_len * dim];
    let mut samples = vec![0.0; k * dim];
    let mut g_samples = vec![0.0; k * dim];
    let mut g_pre = vec![0.0; 2 * dim];
    let mut g_offs = vec![0.0; k];

    for i in 0..len {
        let center = i + pad;
        let gy = g_out.row(i);

        // Residual path.
        add_assign(g_in.row_mut(i), gy);

        // GLU.
        let pre = &cache.pre_glu[i * 2 * dim..(i + 1) * 2 * dim];
        g_pre.iter_mut().for_each(|v| *v = 0.0);
        glu_backward_into(&mut g_pre, pre, gy);

        // Main convolution; the sampled window is rebuilt from the cache.
        let offs = &cache.offsets[i * k..(i + 1) * k];
        samples.iter_mut().for_each(|v| *v = 0.0);
        for n in 0..k {
            let r = DeformConvParams::tap_displacement(k, n);
            let pos = center as f64 + r as f64 + offs[n];
            interp_acc(
                &mut samples[n * dim..(n + 1) * dim],
                cache.padded.data(),
                padded_len,
                dim,
                pos,
            );
        }
        g_samples.iter_mut().for_each(|v| *v = 0.0);
        params.conv.backward_acc(&samples, &g_pre, &mut g_samples);

        // Interpolation: spread sample gradients over the neighbor rows and
        // collect the position gradient per tap.
        g_offs.iter_mut().for_each(|v| *v = 0.0);
        for n in 0..k {
            let r = DeformConvParams::tap_displacement(k, n);
            let pos = center as f64 + r as f64 + offs[n];
            let g_s = &g_samples[n * dim..(n + 1) * dim];
            let s0 = pos.floor();
            for sf in [s0, s0 + 1.0] {
                if sf < 0.0 || sf > (padded_len - 1) as f64 {
                    continue;
                }
                let s = sf as usize;
                let d = sf - pos;
                let w = 1.0 - d.abs();
                if w > 0.0 {
                    let row = &mut g_padded[s * dim..(s + 1) * dim];
                    for (gp, g) in row.iter_mut().zip(g_s) {
                        *gp += w * g;
                    }
                }
                if d != 0.0 && d.abs() < 1.0 {
                    let src = &cache.padded.data()[s * dim..(s + 1) * dim];
                    let dot: f64 = g_s.iter().zip(src).map(|(a, b)| a * b).sum();
                    g_offs[n] += d.signum() * dot;
                }
            }
        }

        // Offset branch.
        let window = &cache.padded.data()[(center - pad) * dim..(center + pad + 1) * dim];
        let g_window = &mut g_padded[(center - pad) * dim..(center + pad + 1) * dim];
        params.offset.backward_acc(window, &g_offs, g_window);
    }

    // Gradients landing on the zero padding are dropped.
    for i in 0..len {
        add_assign(
            g_in.row_mut(i),
            &g_padded[(i + pad) * dim..(i + pad + 1) * dim],
        );
    }
    g_in
}

/// Accumulates `interp(seq, pos)` into `out`: the two integral neighbors of
/// `pos` that fall inside `[0, len−1]`, triangularly weighted. Positions
/// with no in-range neighbor contribute nothing.
fn interp_acc(out: &mut [f64], seq: &[f64], len: usize, dim: usize, pos: f64) {
    let s0 = pos.floor();
    for sf in [s0, s0 + 1.0] {
        if sf < 0.0 || sf > (len - 1) as f64 {
            continue;
        }
        let w = 1.0 - (sf - pos).abs();
        if w <= 0.0 {
            continue;
        }
        let s = sf as usize;
        let row = &seq[s * dim..(s + 1) * dim];
        for (o, v) in out.iter_mut().zip(row) {
            *o += w * v;
        }
    }
}
