//! Layer forward and backward passes.
//!
//! Every layer works on [`FeatureBatch`]es; the single-sample functions at
//! the bottom wrap the batched code for callers that hold a [`Tensor3`].

use rand::Rng;

use super::tensor::{dot, gemm, sum, FeatureBatch, Tensor3};
use crate::error::{Error, Result};

/// Same-size convolution with zero padding and a `(2k+1)²` window.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub half_width: usize,
    /// `[out][in][ky][kx]`, so each output map's weights form one row.
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(in_channels: usize, out_channels: usize, half_width: usize) -> Self {
        let ks = 2 * half_width + 1;
        Self {
            in_channels,
            out_channels,
            half_width,
            kernel: vec![0.0; out_channels * in_channels * ks * ks],
            bias: vec![0.0; out_channels],
        }
    }

    /// Glorot-uniform kernel, zero bias.
    pub fn glorot<R: Rng>(in_channels: usize, out_channels: usize, half_width: usize, rng: &mut R) -> Self {
        let mut layer = Self::zeros(in_channels, out_channels, half_width);
        let area = layer.window() * layer.window();
        let limit = (6.0 / ((in_channels + out_channels) * area) as f64).sqrt();
        for w in &mut layer.kernel {
            *w = rng.gen_range(-limit..limit);
        }
        layer
    }

    pub fn window(&self) -> usize {
        2 * self.half_width + 1
    }

    fn patch_len(&self) -> usize {
        self.in_channels * self.window() * self.window()
    }

    pub fn weight(&self, out: usize, input: usize, ky: usize, kx: usize) -> f64 {
        let ks = self.window();
        self.kernel[((out * self.in_channels + input) * ks + ky) * ks + kx]
    }

    pub fn set_weight(&mut self, out: usize, input: usize, ky: usize, kx: usize, value: f64) {
        let ks = self.window();
        self.kernel[((out * self.in_channels + input) * ks + ky) * ks + kx] = value;
    }

    /// Zero-padded patch matrix: one row per `(input channel, ky, kx)`,
    /// one column per output position across the batch.
    fn im2col(&self, x: &FeatureBatch) -> Vec<f64> {
        let (c, b, rows, cols) = x.shape();
        let ks = self.window();
        let k = self.half_width as isize;
        let n = b * rows * cols;
        let mut out = vec![0.0; c * ks * ks * n];
        for ch in 0..c {
            for ky in 0..ks {
                for kx in 0..ks {
                    let dy = ky as isize - k;
                    let dx = kx as isize - k;
                    let row_start = ((ch * ks + ky) * ks + kx) * n;
                    let c_lo = (-dx).max(0) as usize;
                    let c_hi = (cols as isize - dx.max(0)).max(0) as usize;
                    if c_lo >= c_hi {
                        continue;
                    }
                    for s in 0..b {
                        let src = x.sample_plane(ch, s);
                        for r in 0..rows {
                            let sr = r as isize + dy;
                            if sr < 0 || sr >= rows as isize {
                                continue;
                            }
                            let dst = row_start + (s * rows + r) * cols;
                            let src_row = sr as usize * cols;
                            let src_lo = (c_lo as isize + dx) as usize;
                            out[dst + c_lo..dst + c_hi]
                                .copy_from_slice(&src[src_row + src_lo..src_row + src_lo + (c_hi - c_lo)]);
                        }
                    }
                }
            }
        }
        out
    }

    fn col2im(&self, cols_grad: &[f64], shape: (usize, usize, usize, usize)) -> FeatureBatch {
        let (c, b, rows, cols) = shape;
        let ks = self.window();
        let k = self.half_width as isize;
        let n = b * rows * cols;
        let mut dx = FeatureBatch::zeros(c, b, rows, cols);
        let plane = rows * cols;
        for ch in 0..c {
            for ky in 0..ks {
                for kx in 0..ks {
                    let dy = ky as isize - k;
                    let dxo = kx as isize - k;
                    let row_start = ((ch * ks + ky) * ks + kx) * n;
                    let c_lo = (-dxo).max(0) as usize;
                    let c_hi = (cols as isize - dxo.max(0)).max(0) as usize;
                    if c_lo >= c_hi {
                        continue;
                    }
                    for s in 0..b {
                        let base = (ch * b + s) * plane;
                        for r in 0..rows {
                            let sr = r as isize + dy;
                            if sr < 0 || sr >= rows as isize {
                                continue;
                            }
                            let src = row_start + (s * rows + r) * cols;
                            let dst = base + sr as usize * cols + (c_lo as isize + dxo) as usize;
                            for (d, g) in
                                dx.data[dst..dst + (c_hi - c_lo)].iter_mut().zip(&cols_grad[src + c_lo..src + c_hi])
                            {
                                *d += g;
                            }
                        }
                    }
                }
            }
        }
        dx
    }

    /// Returns the output and what [`Self::backward`] needs.
    pub(crate) fn forward_batch(&self, x: &FeatureBatch) -> Result<(FeatureBatch, ConvCache)> {
        if x.channels != self.in_channels {
            return Err(Error::ChannelMismatch { expected: self.in_channels, got: x.channels });
        }
        let n = x.channel_len();
        let mut out = FeatureBatch::zeros(self.out_channels, x.batch, x.rows, x.cols);
        for (o, slab) in out.data.chunks_mut(n).enumerate() {
            slab.fill(self.bias[o]);
        }
        if x.rows * x.cols >= DIRECT_MIN_PLANE {
            self.direct_forward(x, &mut out);
            return Ok((out, ConvCache::Input(x.clone())));
        }
        let patches = self.im2col(x);
        let pk = self.patch_len();
        gemm(self.out_channels, pk, n, &self.kernel, (pk as isize, 1), &patches, (n as isize, 1), 1.0, &mut out.data);
        Ok((out, ConvCache::Patches { patches, input_shape: x.shape() }))
    }

    /// Accumulates kernel and bias gradients into `grad_kernel`/`grad_bias`;
    /// returns the input gradient when `need_input_grad` is set.
    pub(crate) fn backward(
        &self,
        cache: &ConvCache,
        grad_out: &FeatureBatch,
        grad_kernel: &mut [f64],
        grad_bias: &mut [f64],
        need_input_grad: bool,
    ) -> Option<FeatureBatch> {
        let n = grad_out.channel_len();
        for (o, slab) in grad_out.data.chunks(n).enumerate() {
            grad_bias[o] += sum(slab);
        }
        let (patches, input_shape) = match cache {
            ConvCache::Input(x) => return self.direct_backward(x, grad_out, grad_kernel, need_input_grad),
            ConvCache::Patches { patches, input_shape } => (patches, *input_shape),
        };
        let pk = self.patch_len();
        // dK = dOut · patchesᵀ
        gemm(self.out_channels, n, pk, &grad_out.data, (n as isize, 1), patches, (1, n as isize), 1.0, grad_kernel);
        if !need_input_grad {
            return None;
        }
        // dPatches = Kᵀ · dOut
        let mut dpatches = vec![0.0; pk * n];
        gemm(
            pk,
            self.out_channels,
            n,
            &self.kernel,
            (1, pk as isize),
            &grad_out.data,
            (n as isize, 1),
            0.0,
            &mut dpatches,
        );
        Some(self.col2im(&dpatches, input_shape))
    }

    /// Valid output column range `[lo, hi)` for horizontal tap offset `dx`.
    fn col_range(cols: usize, dx: isize) -> (usize, usize) {
        let lo = (-dx).max(0) as usize;
        let hi = (cols as isize - dx.max(0)).max(0) as usize;
        (lo, hi.max(lo))
    }

    /// Row-wise shifted multiply-adds; plane-sized working sets stay in
    /// cache, which beats the patch-matrix product on large feature maps.
    fn direct_forward(&self, x: &FeatureBatch, out: &mut FeatureBatch) {
        let (cin, b, rows, cols) = x.shape();
        let ks = self.window();
        let k = self.half_width as isize;
        let plane = rows * cols;
        for s in 0..b {
            for o in 0..self.out_channels {
                let ostart = (o * b + s) * plane;
                for i in 0..cin {
                    let src = x.sample_plane(i, s);
                    for ky in 0..ks {
                        let dy = ky as isize - k;
                        for kx in 0..ks {
                            let dx = kx as isize - k;
                            let w = self.weight(o, i, ky, kx);
                            let (lo, hi) = Self::col_range(cols, dx);
                            for r in 0..rows {
                                let sr = r as isize + dy;
                                if sr < 0 || sr >= rows as isize {
                                    continue;
                                }
                                let srow = &src[sr as usize * cols..(sr as usize + 1) * cols];
                                let drow = &mut out.data[ostart + r * cols..ostart + (r + 1) * cols];
                                let sl = (lo as isize + dx) as usize;
                                for (d, v) in drow[lo..hi].iter_mut().zip(&srow[sl..sl + (hi - lo)]) {
                                    *d += w * v;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    fn direct_backward(
        &self,
        x: &FeatureBatch,
        grad_out: &FeatureBatch,
        grad_kernel: &mut [f64],
        need_input_grad: bool,
    ) -> Option<FeatureBatch> {
        let (cin, b, rows, cols) = x.shape();
        let ks = self.window();
        let k = self.half_width as isize;
        let mut dx_batch = need_input_grad.then(|| FeatureBatch::zeros(cin, b, rows, cols));
        for s in 0..b {
            for o in 0..self.out_channels {
                let g = grad_out.sample_plane(o, s);
                for i in 0..cin {
                    let src = x.sample_plane(i, s);
                    for ky in 0..ks {
                        let dy = ky as isize - k;
                        for kx in 0..ks {
                            let dxo = kx as isize - k;
                            let (lo, hi) = Self::col_range(cols, dxo);
                            let sl = (lo as isize + dxo) as usize;
                            let widx = ((o * cin + i) * ks + ky) * ks + kx;
                            let w = self.kernel[widx];
                            let mut acc = 0.0;
                            for r in 0..rows {
                                let sr = r as isize + dy;
                                if sr < 0 || sr >= rows as isize {
                                    continue;
                                }
                                let sr = sr as usize;
                                let grow = &g[r * cols + lo..r * cols + hi];
                                let srow = &src[sr * cols + sl..sr * cols + sl + (hi - lo)];
                                acc += dot(grow, srow);
                                if let Some(dxb) = dx_batch.as_mut() {
                                    let start = (i * b + s) * rows * cols + sr * cols + sl;
                                    for (d, gv) in dxb.data[start..start + (hi - lo)].iter_mut().zip(grow) {
                                        *d += w * gv;
                                    }
                                }
                            }
                            grad_kernel[widx] += acc;
                        }
                    }
                }
            }
        }
        dx_batch
    }
}

/// Saved forward state of a convolution.
pub(crate) enum ConvCache {
    Patches { patches: Vec<f64>, input_shape: (usize, usize, usize, usize) },
    Input(FeatureBatch),
}

/// Feature maps at least this large use direct convolution.
const DIRECT_MIN_PLANE: usize = 256;

/// Per-channel batch normalization with learned scale/shift and running
/// statistics for inference.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormLayer {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    Train,
    Infer,
}

/// Batch statistics of one normalization layer (biased variance).
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: usize,
}

pub(crate) struct NormCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

impl BatchNormLayer {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            momentum: 0.1,
            epsilon: 1e-5,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub(crate) fn forward_train(&self, x: &FeatureBatch) -> Result<(FeatureBatch, NormCache, BatchStats)> {
        self.check(x)?;
        let n = x.channel_len();
        let mut out = FeatureBatch::zeros(x.channels, x.batch, x.rows, x.cols);
        let mut xhat = vec![0.0; x.data.len()];
        let mut inv_std = Vec::with_capacity(x.channels);
        let mut stats = BatchStats { mean: Vec::new(), var: Vec::new(), count: n };
        for c in 0..x.channels {
            let slab = &x.data[c * n..(c + 1) * n];
            let mean = sum(slab) / n as f64;
            let sq = dot(slab, slab) / n as f64;
            let var = (sq - mean * mean).max(0.0);
            let is = 1.0 / (var + self.epsilon).sqrt();
            for (i, &v) in slab.iter().enumerate() {
                let h = (v - mean) * is;
                xhat[c * n + i] = h;
                out.data[c * n + i] = self.gamma[c] * h + self.beta[c];
            }
            inv_std.push(is);
            stats.mean.push(mean);
            stats.var.push(var);
        }
        Ok((out, NormCache { xhat, inv_std }, stats))
    }

    pub(crate) fn forward_infer(&self, x: &FeatureBatch) -> Result<FeatureBatch> {
        self.check(x)?;
        let n = x.channel_len();
        let mut out = x.clone();
        for c in 0..x.channels {
            let is = 1.0 / (self.running_var[c] + self.epsilon).sqrt();
            let (g, b, m) = (self.gamma[c], self.beta[c], self.running_mean[c]);
            for v in &mut out.data[c * n..(c + 1) * n] {
                *v = g * (*v - m) * is + b;
            }
        }
        Ok(out)
    }

    /// Exponential moving average update; the running variance uses the
    /// unbiased batch estimate.
    pub fn update_running(&mut self, stats: &BatchStats) {
        let m = self.momentum;
        let bessel = if stats.count > 1 { stats.count as f64 / (stats.count - 1) as f64 } else { 1.0 };
        for c in 0..self.channels() {
            self.running_mean[c] = (1.0 - m) * self.running_mean[c] + m * stats.mean[c];
            self.running_var[c] = (1.0 - m) * self.running_var[c] + m * stats.var[c] * bessel;
        }
    }

    pub(crate) fn backward(
        &self,
        cache: &NormCache,
        grad_out: &FeatureBatch,
        grad_gamma: &mut [f64],
        grad_beta: &mut [f64],
    ) -> FeatureBatch {
        let n = grad_out.channel_len();
        let nf = n as f64;
        let mut dx = FeatureBatch::zeros(grad_out.channels, grad_out.batch, grad_out.rows, grad_out.cols);
        for c in 0..grad_out.channels {
            let dy = &grad_out.data[c * n..(c + 1) * n];
            let xh = &cache.xhat[c * n..(c + 1) * n];
            let sum_dy = sum(dy);
            let sum_dy_xh = dot(dy, xh);
            grad_gamma[c] += sum_dy_xh;
            grad_beta[c] += sum_dy;
            let scale = self.gamma[c] * cache.inv_std[c] / nf;
            for i in 0..n {
                dx.data[c * n + i] = scale * (nf * dy[i] - sum_dy - xh[i] * sum_dy_xh);
            }
        }
        dx
    }

    fn check(&self, x: &FeatureBatch) -> Result<()> {
        if x.channels != self.channels() {
            return Err(Error::ChannelMismatch { expected: self.channels(), got: x.channels });
        }
        Ok(())
    }
}

pub(crate) fn relu_batch(x: &mut FeatureBatch) {
    for v in &mut x.data {
        *v = v.max(0.0);
    }
}

/// Masks `grad` in place by the positive entries of the ReLU output.
pub(crate) fn relu_backward(output: &FeatureBatch, grad: &mut FeatureBatch) {
    for (g, &o) in grad.data.iter_mut().zip(&output.data) {
        if o <= 0.0 {
            *g = 0.0;
        }
    }
}

/// 2x2 max pooling with stride 2; windows hanging over the border see zero
/// padding. Output is `ceil(m/2) x ceil(n/2)`.
pub(crate) fn pool_batch(x: &FeatureBatch) -> (FeatureBatch, Vec<u32>) {
    const K: usize = 2;
    let (c, b, rows, cols) = x.shape();
    let (orows, ocols) = (rows.div_ceil(K), cols.div_ceil(K));
    let mut out = FeatureBatch::zeros(c, b, orows, ocols);
    // index into the input plane of the winning entry, u32::MAX if padding won
    let mut arg = vec![u32::MAX; out.data.len()];
    let in_plane = rows * cols;
    let out_plane = orows * ocols;
    for cs in 0..c * b {
        let src = &x.data[cs * in_plane..(cs + 1) * in_plane];
        for i in 0..orows {
            for j in 0..ocols {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = u32::MAX;
                let mut padded = false;
                for p in 0..K {
                    for q in 0..K {
                        let (r, col) = (K * i + p, K * j + q);
                        if r >= rows || col >= cols {
                            padded = true;
                            continue;
                        }
                        let v = src[r * cols + col];
                        if v > best {
                            best = v;
                            best_idx = (r * cols + col) as u32;
                        }
                    }
                }
                if padded && best < 0.0 {
                    best = 0.0;
                    best_idx = u32::MAX;
                }
                out.data[cs * out_plane + i * ocols + j] = best;
                arg[cs * out_plane + i * ocols + j] = best_idx;
            }
        }
    }
    (out, arg)
}

pub(crate) fn pool_backward(
    grad_out: &FeatureBatch,
    arg: &[u32],
    input_shape: (usize, usize, usize, usize),
) -> FeatureBatch {
    let (c, b, rows, cols) = input_shape;
    let mut dx = FeatureBatch::zeros(c, b, rows, cols);
    let in_plane = rows * cols;
    let out_plane = grad_out.rows * grad_out.cols;
    for cs in 0..c * b {
        for k in 0..out_plane {
            let a = arg[cs * out_plane + k];
            if a != u32::MAX {
                dx.data[cs * in_plane + a as usize] += grad_out.data[cs * out_plane + k];
            }
        }
    }
    dx
}

/// Fully connected layer; `weights` is `[class][input]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    pub fn glorot<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let mut layer = Self::zeros(inputs, outputs);
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        for w in &mut layer.weights {
            *w = rng.gen_range(-limit..limit);
        }
        layer
    }

    /// `x` holds one flattened sample per row; returns one logit row per
    /// sample.
    pub(crate) fn forward_rows(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(batch * self.outputs);
        for _ in 0..batch {
            out.extend_from_slice(&self.bias);
        }
        let ni = self.inputs as isize;
        gemm(batch, self.inputs, self.outputs, x, (ni, 1), &self.weights, (1, ni), 1.0, &mut out);
        out
    }

    pub(crate) fn backward_rows(
        &self,
        x: &[f64],
        grad_out: &[f64],
        batch: usize,
        grad_weights: &mut [f64],
        grad_bias: &mut [f64],
    ) -> Vec<f64> {
        let no = self.outputs as isize;
        let ni = self.inputs as isize;
        // dW = dOutᵀ · X
        gemm(self.outputs, batch, self.inputs, grad_out, (1, no), x, (ni, 1), 1.0, grad_weights);
        for row in grad_out.chunks(self.outputs) {
            for (g, v) in grad_bias.iter_mut().zip(row) {
                *g += v;
            }
        }
        let mut dx = vec![0.0; batch * self.inputs];
        gemm(batch, self.outputs, self.inputs, grad_out, (no, 1), &self.weights, (ni, 1), 0.0, &mut dx);
        dx
    }
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `-Σ y_j ln p_j`; terms with `y_j = 0` contribute nothing.
pub fn cross_entropy(probs: &[f64], target: &[f64]) -> f64 {
    probs.iter().zip(target).filter(|(_, &y)| y != 0.0).map(|(&p, &y)| -y * p.max(f64::MIN_POSITIVE).ln()).sum()
}

/// Mean cross-entropy of the softmax of each logit row against its label,
/// and the gradient of that mean with respect to the logits.
pub fn softmax_cross_entropy(logits: &[f64], labels: &[usize], classes: usize) -> (f64, Vec<f64>) {
    let bsz = labels.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (z, &label) in logits.chunks(classes).zip(labels) {
        let p = softmax(z);
        loss -= p[label].max(f64::MIN_POSITIVE).ln();
        grad.extend(p.iter().enumerate().map(|(j, &pj)| (pj - f64::from(u8::from(j == label))) / bsz));
    }
    (loss / bsz, grad)
}

pub fn conv_forward(x: &Tensor3, layer: &ConvLayer) -> Result<Tensor3> {
    let batch = FeatureBatch::from_tensors(std::slice::from_ref(x))?;
    let (out, _) = layer.forward_batch(&batch)?;
    Ok(out.to_tensors().remove(0))
}

pub fn pool_forward(x: &Tensor3) -> Tensor3 {
    let batch = FeatureBatch::from_tensors(std::slice::from_ref(x)).expect("single tensor");
    pool_batch(&batch).0.to_tensors().remove(0)
}

pub fn relu(x: &Tensor3) -> Tensor3 {
    let data = x.data().iter().map(|v| v.max(0.0)).collect();
    Tensor3::from_channel_major(x.rows(), x.cols(), x.channels(), data).expect("same shape")
}

/// Normalizes a batch. In training mode the running statistics are updated
/// from this batch.
pub fn batchnorm_forward(x: &[Tensor3], layer: &mut BatchNormLayer, mode: NormMode) -> Result<Vec<Tensor3>> {
    let batch = FeatureBatch::from_tensors(x)?;
    let out = match mode {
        NormMode::Train => {
            let (out, _, stats) = layer.forward_train(&batch)?;
            layer.update_running(&stats);
            out
        }
        NormMode::Infer => layer.forward_infer(&batch)?,
    };
    Ok(out.to_tensors())
}
