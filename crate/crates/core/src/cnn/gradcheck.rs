//! Central finite-difference checks of each layer's backward pass on random
//! small inputs.
//!
//! Every layer except the loss is reduced to the scalar `Σ wᵢ yᵢ` with random
//! weights `w`, so the check covers the full Jacobian-vector product. Each
//! input and parameter entry is compared.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{
    pool_backward, pool_batch, relu_backward, relu_batch, softmax_cross_entropy, BatchNormLayer, ConvLayer, DenseLayer,
};
use super::tensor::FeatureBatch;

/// Outcome for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub layer: &'static str,
    pub entries: usize,
    /// Largest `|analytic − numeric| / max(|analytic|, |numeric|, 1e-3)`.
    pub max_rel_error: f64,
}

/// Runs the check for the patch-matrix and direct convolution paths, batch
/// normalization in training mode, ReLU, max pooling, the dense layer and
/// softmax cross-entropy, with finite-difference step `step`.
pub fn check_layer_gradients(seed: u64, step: f64) -> Vec<GradientCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        check_conv("conv (patch matrix)", &mut rng, (2, 2, 5, 6), 3, step),
        check_conv("conv (direct)", &mut rng, (2, 2, 16, 17), 2, step),
        check_norm(&mut rng, step),
        check_relu(&mut rng, step),
        check_pool(&mut rng, step),
        check_dense(&mut rng, step),
        check_loss(&mut rng, step),
    ]
}

fn random_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn random_batch<R: Rng>(rng: &mut R, (c, b, r, w): (usize, usize, usize, usize)) -> FeatureBatch {
    let mut x = FeatureBatch::zeros(c, b, r, w);
    x.data = random_vec(rng, x.data.len());
    x
}

fn weighted(w: &[f64], y: &[f64]) -> f64 {
    w.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[derive(Default)]
struct Tally {
    entries: usize,
    worst: f64,
}

impl Tally {
    /// Compares `analytic[k]` with the central difference of `f(k, ±step)`.
    fn compare(&mut self, analytic: &[f64], step: f64, mut f: impl FnMut(usize, f64) -> f64) {
        for (k, &a) in analytic.iter().enumerate() {
            let numeric = (f(k, step) - f(k, -step)) / (2.0 * step);
            let scale = a.abs().max(numeric.abs()).max(1e-3);
            self.worst = self.worst.max((a - numeric).abs() / scale);
            self.entries += 1;
        }
    }

    fn finish(self, layer: &'static str) -> GradientCheck {
        GradientCheck { layer, entries: self.entries, max_rel_error: self.worst }
    }
}

fn check_conv<R: Rng>(
    name: &'static str,
    rng: &mut R,
    shape: (usize, usize, usize, usize),
    out_channels: usize,
    step: f64,
) -> GradientCheck {
    let x = random_batch(rng, shape);
    let mut layer = ConvLayer::glorot(shape.0, out_channels, 1, rng);
    layer.bias = random_vec(rng, out_channels);
    let objective =
        |l: &ConvLayer, x: &FeatureBatch, w: &[f64]| weighted(w, &l.forward_batch(x).expect("shape").0.data);
    let (y, cache) = layer.forward_batch(&x).expect("shape");
    let w = random_vec(rng, y.data.len());
    let mut gy = y.clone();
    gy.data.clone_from(&w);
    let mut gk = vec![0.0; layer.kernel.len()];
    let mut gb = vec![0.0; layer.bias.len()];
    let gx = layer.backward(&cache, &gy, &mut gk, &mut gb, true).expect("input gradient requested");

    let mut t = Tally::default();
    t.compare(&gx.data, step, |k, d| {
        let mut xp = x.clone();
        xp.data[k] += d;
        objective(&layer, &xp, &w)
    });
    t.compare(&gk, step, |k, d| {
        let mut lp = layer.clone();
        lp.kernel[k] += d;
        objective(&lp, &x, &w)
    });
    t.compare(&gb, step, |k, d| {
        let mut lp = layer.clone();
        lp.bias[k] += d;
        objective(&lp, &x, &w)
    });
    t.finish(name)
}

fn check_norm<R: Rng>(rng: &mut R, step: f64) -> GradientCheck {
    let x = random_batch(rng, (3, 2, 4, 5));
    let mut layer = BatchNormLayer::new(3);
    layer.gamma = random_vec(rng, 3);
    layer.beta = random_vec(rng, 3);
    let objective =
        |l: &BatchNormLayer, x: &FeatureBatch, w: &[f64]| weighted(w, &l.forward_train(x).expect("shape").0.data);
    let (y, cache, _) = layer.forward_train(&x).expect("shape");
    let w = random_vec(rng, y.data.len());
    let mut gy = y.clone();
    gy.data.clone_from(&w);
    let (mut gg, mut gb) = (vec![0.0; 3], vec![0.0; 3]);
    let gx = layer.backward(&cache, &gy, &mut gg, &mut gb);

    let mut t = Tally::default();
    t.compare(&gx.data, step, |k, d| {
        let mut xp = x.clone();
        xp.data[k] += d;
        objective(&layer, &xp, &w)
    });
    t.compare(&gg, step, |k, d| {
        let mut lp = layer.clone();
        lp.gamma[k] += d;
        objective(&lp, &x, &w)
    });
    t.compare(&gb, step, |k, d| {
        let mut lp = layer.clone();
        lp.beta[k] += d;
        objective(&lp, &x, &w)
    });
    t.finish("batch normalization")
}

fn check_relu<R: Rng>(rng: &mut R, step: f64) -> GradientCheck {
    let x = random_batch(rng, (2, 2, 5, 5));
    let objective = |x: &FeatureBatch, w: &[f64]| {
        let mut y = x.clone();
        relu_batch(&mut y);
        weighted(w, &y.data)
    };
    let mut y = x.clone();
    relu_batch(&mut y);
    let w = random_vec(rng, y.data.len());
    let mut gx = y.clone();
    gx.data.clone_from(&w);
    relu_backward(&y, &mut gx);

    let mut t = Tally::default();
    t.compare(&gx.data, step, |k, d| {
        let mut xp = x.clone();
        xp.data[k] += d;
        objective(&xp, &w)
    });
    t.finish("relu")
}

fn check_pool<R: Rng>(rng: &mut R, step: f64) -> GradientCheck {
    // odd sizes exercise the zero-padded border windows
    let x = random_batch(rng, (2, 2, 5, 7));
    let objective = |x: &FeatureBatch, w: &[f64]| weighted(w, &pool_batch(x).0.data);
    let (y, arg) = pool_batch(&x);
    let w = random_vec(rng, y.data.len());
    let mut gy = y.clone();
    gy.data.clone_from(&w);
    let gx = pool_backward(&gy, &arg, x.shape());

    let mut t = Tally::default();
    t.compare(&gx.data, step, |k, d| {
        let mut xp = x.clone();
        xp.data[k] += d;
        objective(&xp, &w)
    });
    t.finish("max pooling")
}

fn check_dense<R: Rng>(rng: &mut R, step: f64) -> GradientCheck {
    let (batch, inputs, outputs) = (3, 10, 4);
    let x = random_vec(rng, batch * inputs);
    let mut layer = DenseLayer::glorot(inputs, outputs, rng);
    layer.bias = random_vec(rng, outputs);
    let objective = |l: &DenseLayer, x: &[f64], w: &[f64]| weighted(w, &l.forward_rows(x, batch));
    let w = random_vec(rng, batch * outputs);
    let mut gw = vec![0.0; layer.weights.len()];
    let mut gb = vec![0.0; outputs];
    let gx = layer.backward_rows(&x, &w, batch, &mut gw, &mut gb);

    let mut t = Tally::default();
    t.compare(&gx, step, |k, d| {
        let mut xp = x.clone();
        xp[k] += d;
        objective(&layer, &xp, &w)
    });
    t.compare(&gw, step, |k, d| {
        let mut lp = layer.clone();
        lp.weights[k] += d;
        objective(&lp, &x, &w)
    });
    t.compare(&gb, step, |k, d| {
        let mut lp = layer.clone();
        lp.bias[k] += d;
        objective(&lp, &x, &w)
    });
    t.finish("dense")
}

fn check_loss<R: Rng>(rng: &mut R, step: f64) -> GradientCheck {
    let (batch, classes) = (4, 6);
    let z: Vec<f64> = (0..batch * classes).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let labels: Vec<usize> = (0..batch).map(|_| rng.gen_range(0..classes)).collect();
    let (_, gz) = softmax_cross_entropy(&z, &labels, classes);

    let mut t = Tally::default();
    t.compare(&gz, step, |k, d| {
        let mut zp = z.clone();
        zp[k] += d;
        softmax_cross_entropy(&zp, &labels, classes).0
    });
    t.finish("softmax cross-entropy")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_layer_passes() {
        for c in check_layer_gradients(3, 1e-5) {
            assert!(c.entries > 0);
            assert!(c.max_rel_error < 1e-4, "{c:?}");
        }
    }

    #[test]
    fn a_wrong_gradient_is_caught() {
        let mut t = Tally::default();
        t.compare(&[2.0], 1e-5, |_, d| (1.0 + d).powi(2) * 1.01);
        assert!(t.worst > 1e-3);
    }
}
