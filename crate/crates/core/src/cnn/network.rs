//! The shape classifier: six convolution blocks and a dense softmax head.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::layers::{
    pool_backward, pool_batch, relu_backward, relu_batch, softmax, softmax_cross_entropy, BatchNormLayer, BatchStats,
    ConvCache, ConvLayer, DenseLayer, NormCache,
};
use super::tensor::FeatureBatch;
use crate::error::{Error, Result};
use crate::geometry::Polygon;
use crate::raster::{rasterize, BinaryImage, RESOLUTION};

/// Feature maps per convolution block.
pub const BLOCK_WIDTHS: [usize; 6] = [2, 4, 8, 16, 32, 64];

/// Smallest shape label: class index 0 is the triangle.
pub const FIRST_LABEL: usize = 3;

/// Conv → Norm → ReLU, optionally followed by 2x2 max pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvBlock {
    pub conv: ConvLayer,
    pub norm: BatchNormLayer,
    pub pool: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub(crate) blocks: Vec<ConvBlock>,
    pub(crate) dense: DenseLayer,
    num_classes: usize,
}

/// An image with its class index (`0` = triangle, `1` = quadrilateral, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub image: BinaryImage,
    pub label: usize,
}

impl LabeledImage {
    pub fn one_hot(&self, num_classes: usize) -> Vec<f64> {
        let mut y = vec![0.0; num_classes];
        y[self.label] = 1.0;
        y
    }
}

/// Gradients in the same order as [`Network::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self { tensors: net.parameters().iter().map(|p| vec![0.0; p.len()]).collect() }
    }
}

/// Mean loss, gradients and per-block normalization statistics of one
/// minibatch.
#[derive(Debug, Clone)]
pub struct BatchResult {
    pub loss: f64,
    pub correct: usize,
    pub gradients: Gradients,
    pub norm_stats: Vec<BatchStats>,
}

struct BlockCache {
    conv: ConvCache,
    norm: NormCache,
    activated: FeatureBatch,
    pool_arg: Option<Vec<u32>>,
}

impl Network {
    /// Fresh network for `num_classes` shape classes, Glorot-initialized
    /// from `seed`.
    pub fn new(num_classes: usize, seed: u64) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidArgument("need at least two classes".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut blocks = Vec::with_capacity(BLOCK_WIDTHS.len());
        let mut in_ch = 1;
        let mut side = RESOLUTION;
        for (i, &w) in BLOCK_WIDTHS.iter().enumerate() {
            let pool = i + 1 < BLOCK_WIDTHS.len();
            blocks.push(ConvBlock {
                conv: ConvLayer::glorot(in_ch, w, 1, &mut rng),
                norm: BatchNormLayer::new(w),
                pool,
            });
            in_ch = w;
            if pool {
                side = side.div_ceil(2);
            }
        }
        let dense = DenseLayer::glorot(in_ch * side * side, num_classes, &mut rng);
        Ok(Self { blocks, dense, num_classes })
    }

    pub(crate) fn from_parts(blocks: Vec<ConvBlock>, dense: DenseLayer, num_classes: usize) -> Result<Self> {
        let mut in_ch = 1;
        let mut side = RESOLUTION;
        if blocks.len() != BLOCK_WIDTHS.len() {
            return Err(Error::format("network", format!("expected {} blocks", BLOCK_WIDTHS.len())));
        }
        for (i, b) in blocks.iter().enumerate() {
            let pool = i + 1 < BLOCK_WIDTHS.len();
            if b.conv.in_channels != in_ch
                || b.conv.out_channels != BLOCK_WIDTHS[i]
                || b.conv.half_width != 1
                || b.norm.channels() != BLOCK_WIDTHS[i]
                || b.pool != pool
            {
                return Err(Error::format("network", format!("block {i} does not match the architecture")));
            }
            in_ch = BLOCK_WIDTHS[i];
            if pool {
                side = side.div_ceil(2);
            }
        }
        if dense.inputs != in_ch * side * side || dense.outputs != num_classes {
            return Err(Error::format("network", "dense layer shape mismatch"));
        }
        Ok(Self { blocks, dense, num_classes })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn blocks(&self) -> &[ConvBlock] {
        &self.blocks
    }

    pub fn dense(&self) -> &DenseLayer {
        &self.dense
    }

    /// Trainable parameters: per block kernel, bias, γ, β; then dense
    /// weights and bias.
    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for b in &self.blocks {
            out.extend([&b.conv.kernel[..], &b.conv.bias[..], &b.norm.gamma[..], &b.norm.beta[..]]);
        }
        out.extend([&self.dense.weights[..], &self.dense.bias[..]]);
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = Vec::new();
        for b in &mut self.blocks {
            out.push(&mut b.conv.kernel);
            out.push(&mut b.conv.bias);
            out.push(&mut b.norm.gamma);
            out.push(&mut b.norm.beta);
        }
        out.push(&mut self.dense.weights);
        out.push(&mut self.dense.bias);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    fn input_batch(images: &[&BinaryImage]) -> FeatureBatch {
        let plane = RESOLUTION * RESOLUTION;
        let mut x = FeatureBatch::zeros(1, images.len(), RESOLUTION, RESOLUTION);
        for (s, img) in images.iter().enumerate() {
            for (d, &p) in x.data[s * plane..(s + 1) * plane].iter_mut().zip(img.pixels()) {
                *d = f64::from(p);
            }
        }
        x
    }

    /// Class probabilities for each image, using running normalization
    /// statistics.
    pub fn predict_batch(&self, images: &[&BinaryImage]) -> Vec<Vec<f64>> {
        if images.is_empty() {
            return Vec::new();
        }
        let mut x = Self::input_batch(images);
        for b in &self.blocks {
            let (z, _) = b.conv.forward_batch(&x).expect("architecture is consistent");
            x = b.norm.forward_infer(&z).expect("architecture is consistent");
            relu_batch(&mut x);
            if b.pool {
                x = pool_batch(&x).0;
            }
        }
        let logits = self.dense.forward_rows(&x.flatten_samples(), images.len());
        logits.chunks(self.num_classes).map(softmax).collect()
    }

    /// Probabilities for one image.
    pub fn forward(&self, image: &BinaryImage) -> Vec<f64> {
        self.predict_batch(&[image]).remove(0)
    }

    /// Mean cross-entropy over `batch` and its gradient with respect to every
    /// parameter, normalizing with batch statistics. Does not modify the
    /// network; apply [`BatchResult::norm_stats`] with
    /// [`Network::update_norm_statistics`].
    pub fn backward(&self, batch: &[LabeledImage]) -> Result<BatchResult> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if let Some(bad) = batch.iter().find(|s| s.label >= self.num_classes) {
            return Err(Error::InvalidArgument(format!("label {} out of range", bad.label)));
        }
        let bsz = batch.len();
        let images: Vec<&BinaryImage> = batch.iter().map(|s| &s.image).collect();
        let mut x = Self::input_batch(&images);
        let mut caches = Vec::with_capacity(self.blocks.len());
        let mut norm_stats = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let (z, conv) = b.conv.forward_batch(&x)?;
            let (mut a, norm, stats) = b.norm.forward_train(&z)?;
            relu_batch(&mut a);
            norm_stats.push(stats);
            let (next, pool_arg) = if b.pool {
                let (p, arg) = pool_batch(&a);
                (p, Some(arg))
            } else {
                (a.clone(), None)
            };
            caches.push(BlockCache { conv, norm, activated: a, pool_arg });
            x = next;
        }
        let flat = x.flatten_samples();
        let logits = self.dense.forward_rows(&flat, bsz);

        let labels: Vec<usize> = batch.iter().map(|s| s.label).collect();
        let (loss, dlogits) = softmax_cross_entropy(&logits, &labels, self.num_classes);
        let correct = logits.chunks(self.num_classes).zip(&labels).filter(|(z, &l)| argmax(z) == l).count();

        let mut grads = Gradients::zeros_like(self);
        let nb = self.blocks.len();
        let (block_grads, dense_grads) = grads.tensors.split_at_mut(4 * nb);
        let (gw, gb) = dense_grads.split_at_mut(1);
        let dflat = self.dense.backward_rows(&flat, &dlogits, bsz, &mut gw[0], &mut gb[0]);
        let (c, _, r, w) = x.shape();
        let mut grad = FeatureBatch::unflatten_samples(&dflat, c, bsz, r, w);

        for (i, (b, cache)) in self.blocks.iter().zip(caches).enumerate().rev() {
            if let Some(arg) = &cache.pool_arg {
                grad = pool_backward(&grad, arg, cache.activated.shape());
            }
            relu_backward(&cache.activated, &mut grad);
            let g = &mut block_grads[4 * i..4 * i + 4];
            let (gk, rest) = g.split_at_mut(1);
            let (gbias, rest) = rest.split_at_mut(1);
            let (ggamma, gbeta) = rest.split_at_mut(1);
            let dz = b.norm.backward(&cache.norm, &grad, &mut ggamma[0], &mut gbeta[0]);
            match b.conv.backward(&cache.conv, &dz, &mut gk[0], &mut gbias[0], i > 0) {
                Some(dx) => grad = dx,
                None => break,
            }
        }

        Ok(BatchResult { loss, correct, gradients: grads, norm_stats })
    }

    pub fn update_norm_statistics(&mut self, stats: &[BatchStats]) {
        for (b, s) in self.blocks.iter_mut().zip(stats) {
            b.norm.update_running(s);
        }
    }

    /// Shape label (vertex count of the predicted reference polygon) for
    /// each image; ties go to the smaller label.
    pub fn classify_images(&self, images: &[&BinaryImage]) -> Vec<usize> {
        const CHUNK: usize = 64;
        images
            .par_chunks(CHUNK)
            .flat_map_iter(|chunk| self.predict_batch(chunk).into_iter().map(|p| argmax(&p) + FIRST_LABEL))
            .collect()
    }

    /// Predicted shape label of a polygon.
    pub fn classify(&self, polygon: &Polygon) -> Result<usize> {
        let img = rasterize(polygon)?;
        Ok(argmax(&self.forward(&img)) + FIRST_LABEL)
    }
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;

    fn sample_batch() -> Vec<LabeledImage> {
        let shapes = [3usize, 4, 5, 6, 4, 3];
        shapes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let p = Polygon::regular(n, Point2::default(), 1.0 + 0.1 * i as f64, 0.2 * i as f64).unwrap();
                LabeledImage { image: rasterize(&p).unwrap(), label: n - 3 }
            })
            .collect()
    }

    #[test]
    fn architecture_shapes() {
        let net = Network::new(4, 0).unwrap();
        assert_eq!(net.blocks().len(), 6);
        assert_eq!(net.dense().inputs, 2 * 2 * 64);
        assert_eq!(net.dense().outputs, 4);
        assert!(net.blocks()[..5].iter().all(|b| b.pool));
        assert!(!net.blocks()[5].pool);
        let widths: Vec<usize> = net.blocks().iter().map(|b| b.conv.out_channels).collect();
        assert_eq!(widths, BLOCK_WIDTHS);
    }

    #[test]
    fn output_is_a_probability_vector() {
        let net = Network::new(6, 1).unwrap();
        for s in sample_batch() {
            let p = net.forward(&s.image);
            assert_eq!(p.len(), 6);
            assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_batch_is_rejected() {
        let net = Network::new(4, 0).unwrap();
        assert!(matches!(net.backward(&[]), Err(Error::EmptyBatch)));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let net = Network::new(4, 7).unwrap();
        let batch = sample_batch();
        let analytic = net.backward(&batch).unwrap().gradients;
        let h = 1e-5;
        // a handful of entries from every parameter tensor
        for t in 0..analytic.tensors.len() {
            let len = analytic.tensors[t].len();
            for &k in &[0, len / 2, len - 1] {
                let mut plus = net.clone();
                plus.parameters_mut()[t][k] += h;
                let mut minus = net.clone();
                minus.parameters_mut()[t][k] -= h;
                let numeric = (plus.backward(&batch).unwrap().loss - minus.backward(&batch).unwrap().loss) / (2.0 * h);
                let a = analytic.tensors[t][k];
                // conv biases feed batch normalization, so their true gradient
                // is zero and only round-off remains
                let scale = a.abs().max(numeric.abs()).max(1e-3);
                assert!((a - numeric).abs() / scale < 1e-4, "tensor {t} entry {k}: analytic {a}, numeric {numeric}");
            }
        }
    }

    #[test]
    fn classify_maps_class_to_vertex_count() {
        let net = Network::new(4, 0).unwrap();
        let p = Polygon::regular(5, Point2::default(), 1.0, 0.0).unwrap();
        let l = net.classify(&p).unwrap();
        assert!((3..=6).contains(&l));
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }
}
