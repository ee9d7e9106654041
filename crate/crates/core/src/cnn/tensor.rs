use crate::error::{Error, Result};

/// A single feature map stack indexed by `(row, col, channel)`.
///
/// Storage is channel-major: each channel is a contiguous row-major plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    rows: usize,
    cols: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(rows: usize, cols: usize, channels: usize) -> Self {
        Self { rows, cols, channels, data: vec![0.0; rows * cols * channels] }
    }

    /// Builds from channel-major data (`data[(ch * rows + r) * cols + c]`).
    pub fn from_channel_major(rows: usize, cols: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols * channels {
            return Err(Error::InvalidArgument(format!(
                "tensor {rows}x{cols}x{channels} needs {} values, got {}",
                rows * cols * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("tensor entries must be finite".into()));
        }
        Ok(Self { rows, cols, channels, data })
    }

    /// Single-channel tensor from row-major nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        Self::from_channel_major(r, c, 1, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(channel * self.rows + row) * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, channel: usize, value: f64) {
        self.data[(channel * self.rows + row) * self.cols + col] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.rows * self.cols;
        &self.data[channel * n..(channel + 1) * n]
    }
}

/// A minibatch of equally shaped tensors in `[channel][sample][row][col]`
/// layout, so every channel is one contiguous slab across the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBatch {
    pub(crate) channels: usize,
    pub(crate) batch: usize,
    pub(crate) rows: usize,
    pub(crate) cols: usize,
    pub(crate) data: Vec<f64>,
}

impl FeatureBatch {
    pub fn zeros(channels: usize, batch: usize, rows: usize, cols: usize) -> Self {
        Self { channels, batch, rows, cols, data: vec![0.0; channels * batch * rows * cols] }
    }

    pub fn from_tensors(items: &[Tensor3]) -> Result<Self> {
        let first = items.first().ok_or(Error::EmptyBatch)?;
        let (c, r, w) = (first.channels, first.rows, first.cols);
        if items.iter().any(|t| t.channels != c || t.rows != r || t.cols != w) {
            return Err(Error::InvalidArgument("batch tensors differ in shape".into()));
        }
        let b = items.len();
        let plane = r * w;
        let mut out = Self::zeros(c, b, r, w);
        for (s, t) in items.iter().enumerate() {
            for ch in 0..c {
                out.data[(ch * b + s) * plane..(ch * b + s + 1) * plane].copy_from_slice(t.plane(ch));
            }
        }
        Ok(out)
    }

    pub fn to_tensors(&self) -> Vec<Tensor3> {
        let plane = self.rows * self.cols;
        (0..self.batch)
            .map(|s| {
                let mut data = Vec::with_capacity(self.channels * plane);
                for ch in 0..self.channels {
                    data.extend_from_slice(self.sample_plane(ch, s));
                }
                Tensor3 { rows: self.rows, cols: self.cols, channels: self.channels, data }
            })
            .collect()
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.channels, self.batch, self.rows, self.cols)
    }

    pub(crate) fn channel_len(&self) -> usize {
        self.batch * self.rows * self.cols
    }

    pub(crate) fn sample_plane(&self, channel: usize, sample: usize) -> &[f64] {
        let plane = self.rows * self.cols;
        let start = (channel * self.batch + sample) * plane;
        &self.data[start..start + plane]
    }

    /// Per-sample flattening in `(channel, row, col)` order, one row per
    /// sample.
    pub(crate) fn flatten_samples(&self) -> Vec<f64> {
        let plane = self.rows * self.cols;
        let width = self.channels * plane;
        let mut out = vec![0.0; self.batch * width];
        for s in 0..self.batch {
            for ch in 0..self.channels {
                out[s * width + ch * plane..s * width + (ch + 1) * plane].copy_from_slice(self.sample_plane(ch, s));
            }
        }
        out
    }

    pub(crate) fn unflatten_samples(flat: &[f64], channels: usize, batch: usize, rows: usize, cols: usize) -> Self {
        let plane = rows * cols;
        let width = channels * plane;
        let mut out = Self::zeros(channels, batch, rows, cols);
        for s in 0..batch {
            for ch in 0..channels {
                let start = (ch * batch + s) * plane;
                out.data[start..start + plane]
                    .copy_from_slice(&flat[s * width + ch * plane..s * width + (ch + 1) * plane]);
            }
        }
        out
    }
}

/// Dot product with four independent accumulators so the reduction
/// vectorizes.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn sum(a: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut c = a.chunks_exact(4);
    for x in &mut c {
        for l in 0..4 {
            acc[l] += x[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + c.remainder().iter().sum::<f64>()
}

/// `c = a · b + beta · c` for row-major matrices; `a` is `m x k` with
/// arbitrary strides, `b` is `k x n` likewise, `c` is dense `m x n`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (isize, isize),
    b: &[f64],
    b_strides: (isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    let max_index = |rows: usize, cols: usize, (rs, cs): (isize, isize)| {
        (rows.saturating_sub(1) as isize * rs + cols.saturating_sub(1) as isize * cs) as usize
    };
    if k > 0 {
        assert!(max_index(m, k, a_strides) < a.len());
        assert!(max_index(k, n, b_strides) < b.len());
    }
    // SAFETY: the assertions above bound every index dgemm touches.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0,
            a_strides.1,
            b.as_ptr(),
            b_strides.0,
            b_strides.1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_round_trip() {
        let a = Tensor3::from_channel_major(2, 3, 2, (0..12).map(f64::from).collect()).unwrap();
        let b = Tensor3::from_channel_major(2, 3, 2, (12..24).map(f64::from).collect()).unwrap();
        let fb = FeatureBatch::from_tensors(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(fb.to_tensors(), vec![a.clone(), b]);
        let flat = fb.flatten_samples();
        assert_eq!(&flat[..12], a.data());
        assert_eq!(FeatureBatch::unflatten_samples(&flat, 2, 2, 2, 3), fb);
        assert_eq!(a.get(1, 2, 1), 11.0);
    }

    #[test]
    fn blocked_reductions() {
        let a: Vec<f64> = (0..11).map(f64::from).collect();
        assert_eq!(sum(&a), 55.0);
        assert_eq!(dot(&a, &a), 385.0);
        assert_eq!(dot(&a[..3], &a), 5.0);
    }

    #[test]
    fn gemm_matches_naive() {
        let a: Vec<f64> = (0..6).map(f64::from).collect(); // 2x3
        let b: Vec<f64> = (0..12).map(|v| f64::from(v) * 0.5).collect(); // 3x4
        let mut c = vec![1.0; 8];
        gemm(2, 3, 4, &a, (3, 1), &b, (4, 1), 1.0, &mut c);
        for i in 0..2 {
            for j in 0..4 {
                let expect: f64 = 1.0 + (0..3).map(|l| a[i * 3 + l] * b[l * 4 + j]).sum::<f64>();
                assert_eq!(c[i * 4 + j], expect);
            }
        }
        // transposed operand via strides: a^T is 3x2
        let mut d = vec![0.0; 9];
        gemm(3, 2, 3, &a, (1, 3), &a, (3, 1), 0.0, &mut d);
        assert_eq!(d[0], 0.0 * 0.0 + 3.0 * 3.0);
    }
}
