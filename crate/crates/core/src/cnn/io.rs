//! Binary model files.
//!
//! Layout (all integers `u32` little-endian, all reals `f64` little-endian):
//!
//! ```text
//! magic "PRCN" | version | classes | resolution | block count
//! per block:  tag 1 | in | out | half width | pool (0/1)
//!             kernel | bias | gamma | beta | running mean | running var
//!             momentum | epsilon
//! dense:      tag 2 | inputs | outputs | weights | bias
//! ```

use std::fs;
use std::path::Path;

use super::layers::{BatchNormLayer, ConvLayer, DenseLayer};
use super::network::{ConvBlock, Network};
use crate::error::{Error, Result};
use crate::raster::RESOLUTION;

const MAGIC: &[u8; 4] = b"PRCN";
const VERSION: u32 = 1;
const TAG_CONV_BLOCK: u32 = 1;
const TAG_DENSE: u32 = 2;

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s(buf: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn model_to_bytes(net: &Network) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    put_u32(&mut buf, VERSION);
    put_u32(&mut buf, net.num_classes() as u32);
    put_u32(&mut buf, RESOLUTION as u32);
    put_u32(&mut buf, net.blocks().len() as u32);
    for b in net.blocks() {
        put_u32(&mut buf, TAG_CONV_BLOCK);
        put_u32(&mut buf, b.conv.in_channels as u32);
        put_u32(&mut buf, b.conv.out_channels as u32);
        put_u32(&mut buf, b.conv.half_width as u32);
        put_u32(&mut buf, b.pool as u32);
        put_f64s(&mut buf, &b.conv.kernel);
        put_f64s(&mut buf, &b.conv.bias);
        put_f64s(&mut buf, &b.norm.gamma);
        put_f64s(&mut buf, &b.norm.beta);
        put_f64s(&mut buf, &b.norm.running_mean);
        put_f64s(&mut buf, &b.norm.running_var);
        put_f64s(&mut buf, &[b.norm.momentum, b.norm.epsilon]);
    }
    let d = net.dense();
    put_u32(&mut buf, TAG_DENSE);
    put_u32(&mut buf, d.inputs as u32);
    put_u32(&mut buf, d.outputs as u32);
    put_f64s(&mut buf, &d.weights);
    put_f64s(&mut buf, &d.bias);
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format("model file", "truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        self.u32().map(|v| v as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::format("model file", "size overflow"))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }

    fn expect_tag(&mut self, tag: u32) -> Result<()> {
        let t = self.u32()?;
        if t != tag {
            return Err(Error::format("model file", format!("expected layer tag {tag}, found {t}")));
        }
        Ok(())
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<Network> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::format("model file", "bad magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::format("model file", format!("unsupported version {version}")));
    }
    let classes = r.usize()?;
    let resolution = r.usize()?;
    if resolution != RESOLUTION {
        return Err(Error::format("model file", format!("resolution {resolution}, expected {RESOLUTION}")));
    }
    let nblocks = r.usize()?;
    let mut blocks = Vec::with_capacity(nblocks.min(64));
    for _ in 0..nblocks {
        r.expect_tag(TAG_CONV_BLOCK)?;
        let (cin, cout, hw) = (r.usize()?, r.usize()?, r.usize()?);
        let pool = r.u32()? != 0;
        let ks = 2 * hw + 1;
        let mut conv = ConvLayer::zeros(cin, cout, hw);
        conv.kernel = r.f64s(cout * cin * ks * ks)?;
        conv.bias = r.f64s(cout)?;
        let mut norm = BatchNormLayer::new(cout);
        norm.gamma = r.f64s(cout)?;
        norm.beta = r.f64s(cout)?;
        norm.running_mean = r.f64s(cout)?;
        norm.running_var = r.f64s(cout)?;
        let me = r.f64s(2)?;
        norm.momentum = me[0];
        norm.epsilon = me[1];
        blocks.push(ConvBlock { conv, norm, pool });
    }
    r.expect_tag(TAG_DENSE)?;
    let (inputs, outputs) = (r.usize()?, r.usize()?);
    let mut dense = DenseLayer::zeros(inputs, outputs);
    dense.weights = r.f64s(inputs * outputs)?;
    dense.bias = r.f64s(outputs)?;
    if r.pos != bytes.len() {
        return Err(Error::format("model file", "trailing bytes"));
    }
    Network::from_parts(blocks, dense, classes)
}

pub fn save_model(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_bytes(net))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Network> {
    model_from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut net = Network::new(6, 42).unwrap();
        net.blocks[2].norm.running_var[1] = 0.123456789e-7;
        net.blocks[0].norm.running_mean[0] = -3.5;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        save_model(&net, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, net);
        assert_eq!(model_to_bytes(&back), model_to_bytes(&net));
    }

    #[test]
    fn rejects_corruption() {
        let bytes = model_to_bytes(&Network::new(4, 0).unwrap());
        assert!(model_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(model_from_bytes(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(model_from_bytes(&extra).is_err());
    }
}
