//! Flat binary parameter files: an 8-byte magic, four little-endian `u32`
//! header words (input, hidden and output widths, activation tag), then the
//! `w1`, `b1`, `w2`, `b2` blocks as little-endian `f64` in row-major order.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};

use crate::{Mlp, NnError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SQMLP001";
pub const RELU_TAG: u32 = 1;
const HEADER_LEN: usize = 8 + 4 * 4;

impl Mlp {
    pub fn to_bytes(&self) -> Vec<u8> {
        let count: usize = self.blocks().iter().map(|(_, b)| b.len()).sum();
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * count);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        for d in [self.in_dim(), self.hidden_dim(), self.out_dim()] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend_from_slice(&RELU_TAG.to_le_bytes());
        for (_, block) in self.blocks() {
            for v in block {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(NnError::Checkpoint(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(NnError::Checkpoint("wrong magic".into()));
        }
        let word = |i: usize| {
            let at = 8 + 4 * i;
            u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize
        };
        let (ind, hid, out, act) = (word(0), word(1), word(2), word(3));
        if act != RELU_TAG as usize {
            return Err(NnError::Checkpoint(format!("unknown activation tag {act}")));
        }
        if ind == 0 || hid == 0 || out == 0 {
            return Err(NnError::Checkpoint(format!("degenerate shape {ind}-{hid}-{out}")));
        }
        let count = hid * ind + hid + out * hid + out;
        let expected = HEADER_LEN + 8 * count;
        if bytes.len() != expected {
            return Err(NnError::Checkpoint(format!(
                "{ind}-{hid}-{out} network needs {expected} bytes, got {}",
                bytes.len()
            )));
        }
        let mut values = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let mut take = |k: usize| values.by_ref().take(k).collect::<Vec<f64>>();
        let w1 = Array2::from_shape_vec((hid, ind), take(hid * ind)).expect("sized");
        let b1 = Array1::from(take(hid));
        let w2 = Array2::from_shape_vec((out, hid), take(out * hid)).expect("sized");
        let b2 = Array1::from(take(out));
        Mlp::from_parts(w1, b1, w2, b2)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}
