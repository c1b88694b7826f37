//! Versioned binary checkpoint for a [`ConvStack`].
//!
//! Layout, all integers little-endian `u32`:
//!
//! ```text
//! magic        8 bytes  "SALDLNET"
//! version      u32      1
//! name_len     u32      followed by name_len bytes of UTF-8
//! layer_count  u32      number of convolution layers
//! per layer    u32 c, u32 m
//! per layer    m·c·5·5 f32 weights (m, c, u, v order), then m f32 biases
//! ```
//!
//! Parameters are stored as `f32`; reading back an `f32` stack is bit-exact.
//! A checkpoint is self-delimiting, so several may be concatenated in one
//! stream.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::conv::KERNEL_SIDE;
use crate::nn::{ConvParams, ConvStack, Scalar};

pub const MAGIC: &[u8; 8] = b"SALDLNET";
pub const VERSION: u32 = 1;

const MAX_LAYERS: u32 = 4096;
const MAX_CHANNELS: u32 = 1 << 16;

fn io_err(e: io::Error) -> Error {
    Error::Checkpoint(e.to_string())
}

fn put_u32(out: &mut impl Write, v: u32) -> Result<()> {
    out.write_all(&v.to_le_bytes()).map_err(io_err)
}

fn get_u32(input: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    input
        .read_exact(&mut b)
        .map_err(|e| Error::Checkpoint(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

fn get_f32s(input: &mut impl Read, count: usize) -> Result<Vec<f32>> {
    let mut raw = vec![0u8; count * 4];
    input
        .read_exact(&mut raw)
        .map_err(|e| Error::Checkpoint(format!("truncated parameters: {e}")))?;
    Ok(raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn write_stack<T: Scalar>(stack: &ConvStack<T>, out: &mut impl Write) -> Result<()> {
    out.write_all(MAGIC).map_err(io_err)?;
    put_u32(out, VERSION)?;
    put_u32(out, stack.name.len() as u32)?;
    out.write_all(stack.name.as_bytes()).map_err(io_err)?;
    put_u32(out, stack.layers.len() as u32)?;
    for l in &stack.layers {
        put_u32(out, l.in_channels as u32)?;
        put_u32(out, l.out_channels as u32)?;
    }
    let mut buf = Vec::new();
    for l in &stack.layers {
        for v in l.weights.iter().chain(&l.bias) {
            buf.extend_from_slice(&(v.to_f64() as f32).to_le_bytes());
        }
    }
    out.write_all(&buf).map_err(io_err)
}

pub fn read_stack(input: &mut impl Read) -> Result<ConvStack<f32>> {
    let mut magic = [0u8; 8];
    input
        .read_exact(&mut magic)
        .map_err(|e| Error::Checkpoint(format!("missing magic: {e}")))?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!("bad magic {magic:?}")));
    }
    let version = get_u32(input)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let name_len = get_u32(input)? as usize;
    if name_len > 1024 {
        return Err(Error::Checkpoint(format!("implausible name length {name_len}")));
    }
    let mut name = vec![0u8; name_len];
    input
        .read_exact(&mut name)
        .map_err(|e| Error::Checkpoint(format!("truncated name: {e}")))?;
    let name = String::from_utf8(name).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let layer_count = get_u32(input)?;
    if layer_count == 0 || layer_count > MAX_LAYERS {
        return Err(Error::Checkpoint(format!("implausible layer count {layer_count}")));
    }
    let mut shapes = Vec::with_capacity(layer_count as usize);
    for _ in 0..layer_count {
        let c = get_u32(input)?;
        let m = get_u32(input)?;
        if c == 0 || m == 0 || c > MAX_CHANNELS || m > MAX_CHANNELS {
            return Err(Error::Checkpoint(format!("implausible layer shape c={c} m={m}")));
        }
        shapes.push((c as usize, m as usize));
    }
    let mut layers = Vec::with_capacity(shapes.len());
    for (c, m) in shapes {
        let weights = get_f32s(input, m * c * KERNEL_SIDE * KERNEL_SIDE)?;
        let bias = get_f32s(input, m)?;
        layers.push(ConvParams::from_parts(m, c, weights, bias)?);
    }
    ConvStack::new(name, layers).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn save_stack<T: Scalar>(stack: &ConvStack<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_stack(stack, &mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_stack(path: impl AsRef<Path>) -> Result<ConvStack<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cursor = bytes.as_slice();
    let stack = read_stack(&mut cursor)
        .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    if !cursor.is_empty() {
        return Err(Error::Checkpoint(format!(
            "{}: {} trailing bytes",
            path.display(),
            cursor.len()
        )));
    }
    Ok(stack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_stack() -> ConvStack<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        ConvStack::new(
            "gcm",
            vec![
                ConvParams::glorot_uniform(4, 1, &mut rng),
                ConvParams::glorot_uniform(1, 4, &mut rng),
            ],
        )
        .unwrap()
    }

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        write_stack(&sample_stack(), &mut buf).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        assert_eq!(&buf[12..16], &3u32.to_le_bytes());
        assert_eq!(&buf[16..19], b"gcm");
        assert_eq!(&buf[19..23], &2u32.to_le_bytes());
        // (c, m) pairs
        assert_eq!(&buf[23..31], &[1, 0, 0, 0, 4, 0, 0, 0]);
        assert_eq!(&buf[31..39], &[4, 0, 0, 0, 1, 0, 0, 0]);
        let params = 4 * 25 + 4 + 4 * 25 + 1;
        assert_eq!(buf.len(), 39 + 4 * params);
    }

    #[test]
    fn concatenated_streams() {
        let a = sample_stack();
        let mut b = a.clone();
        b.name = "sards".into();
        let mut buf = Vec::new();
        write_stack(&a, &mut buf).unwrap();
        write_stack(&b, &mut buf).unwrap();
        let mut cursor = buf.as_slice();
        assert_eq!(read_stack(&mut cursor).unwrap(), a);
        assert_eq!(read_stack(&mut cursor).unwrap(), b);
        assert!(cursor.is_empty());
    }

    #[test]
    fn corrupt_inputs() {
        let mut buf = Vec::new();
        write_stack(&sample_stack(), &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_stack(&mut bad.as_slice()).is_err());
        let mut bad = buf.clone();
        bad[8] = 2;
        assert!(read_stack(&mut bad.as_slice()).is_err());
        let truncated = &buf[..buf.len() - 1];
        assert!(read_stack(&mut &truncated[..]).is_err());
    }
}
