//! Byte formats.
//!
//! Policy packet layout, all integers and floats little-endian:
//!
//! ```text
//! "LMRK" | format u16 | version u64 | layer count u32 |
//!   per layer: rows u32 | cols u32 | rows*cols f32 (row-major) | cols f32 (bias)
//! ```
//!
//! Trajectories use a similar private framing ("LMTJ") so actors can push them
//! over a byte transport; that format is internal to this runtime.

use thiserror::Error;

use crate::params::{Layer, PolicyPacket, PolicyParams, Version};
use crate::trajectory::{Action, Step, Trajectory};

pub const PACKET_MAGIC: &[u8; 4] = b"LMRK";
pub const PACKET_FORMAT: u16 = 1;
pub const PACKET_HEADER_LEN: usize = 4 + 2 + 8 + 4;
const TRAJECTORY_MAGIC: &[u8; 4] = b"LMTJ";

/// Upper bound on values in a single layer; anything larger is rejected
/// before allocation.
pub const MAX_LAYER_VALUES: u64 = 1 << 28;
pub const MAX_LAYERS: u32 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("input truncated: needed {needed} more bytes at offset {offset}")]
    TruncatedInput { offset: usize, needed: usize },
    #[error("declared shape too large: {0}")]
    ShapeOverflow(String),
    #[error("unsupported format version {0}")]
    UnsupportedFormat(u16),
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("invalid payload: {0}")]
    Invalid(String),
}

/// Encode a packet. Deterministic: equal packets give equal bytes.
pub fn serialize_packet(packet: &PolicyPacket) -> Vec<u8> {
    let layers = packet.params.layers();
    let body: usize = layers
        .iter()
        .map(|l| 8 + 4 * (l.weights.len() + l.bias.len()))
        .sum();
    let mut out = Vec::with_capacity(PACKET_HEADER_LEN + body);
    out.extend_from_slice(PACKET_MAGIC);
    out.extend_from_slice(&PACKET_FORMAT.to_le_bytes());
    out.extend_from_slice(&packet.version.0.to_le_bytes());
    out.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    for l in layers {
        out.extend_from_slice(&l.rows.to_le_bytes());
        out.extend_from_slice(&l.cols.to_le_bytes());
        for v in l.weights.iter().chain(&l.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Decode a packet; on error nothing is returned.
pub fn deserialize_packet(bytes: &[u8]) -> Result<PolicyPacket, WireError> {
    let mut r = Reader::new(bytes);
    if bytes.len() < 4 {
        return if PACKET_MAGIC.starts_with(bytes) {
            Err(r.truncated(4))
        } else {
            Err(WireError::BadMagic)
        };
    }
    if r.take(4)? != PACKET_MAGIC {
        return Err(WireError::BadMagic);
    }
    let format = r.u16()?;
    if format != PACKET_FORMAT {
        return Err(WireError::UnsupportedFormat(format));
    }
    let version = Version(r.u64()?);
    let count = r.u32()?;
    if count > MAX_LAYERS {
        return Err(WireError::ShapeOverflow(format!("{count} layers")));
    }
    let mut layers = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let rows = r.u32()?;
        let cols = r.u32()?;
        let n = rows as u64 * cols as u64;
        if n > MAX_LAYER_VALUES || cols as u64 > MAX_LAYER_VALUES {
            return Err(WireError::ShapeOverflow(format!("{rows}x{cols} layer")));
        }
        let weights = r.f32s(n as usize)?;
        let bias = r.f32s(cols as usize)?;
        layers.push(Layer {
            rows,
            cols,
            weights,
            bias,
        });
    }
    r.finish()?;
    let params = PolicyParams::new(layers).map_err(|e| WireError::Invalid(e.to_string()))?;
    Ok(PolicyPacket::new(version, params))
}

/// Peek at the version of an encoded packet without decoding the body.
pub fn packet_version(bytes: &[u8]) -> Result<Version, WireError> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != PACKET_MAGIC {
        return Err(WireError::BadMagic);
    }
    r.u16()?;
    Ok(Version(r.u64()?))
}

pub fn encode_trajectory(t: &Trajectory) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + t.steps.len() * 64);
    out.extend_from_slice(TRAJECTORY_MAGIC);
    out.extend_from_slice(&t.agent_id.to_le_bytes());
    out.extend_from_slice(&t.policy_version.0.to_le_bytes());
    out.extend_from_slice(&t.bootstrap_value.to_le_bytes());
    out.extend_from_slice(&(t.steps.len() as u32).to_le_bytes());
    let put_f64s = |out: &mut Vec<u8>, xs: &[f64]| {
        out.extend_from_slice(&(xs.len() as u32).to_le_bytes());
        for x in xs {
            out.extend_from_slice(&x.to_le_bytes());
        }
    };
    for s in &t.steps {
        put_f64s(&mut out, &s.state);
        match &s.action {
            Action::Discrete(a) => {
                out.push(0);
                out.extend_from_slice(&(*a as u32).to_le_bytes());
            }
            Action::Continuous(xs) => {
                out.push(1);
                put_f64s(&mut out, xs);
            }
        }
        out.extend_from_slice(&s.log_prob.to_le_bytes());
        out.extend_from_slice(&s.value.to_le_bytes());
        put_f64s(&mut out, &s.reward);
        out.push(s.done as u8);
    }
    out
}

pub fn decode_trajectory(bytes: &[u8]) -> Result<Trajectory, WireError> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != TRAJECTORY_MAGIC {
        return Err(WireError::BadMagic);
    }
    let agent_id = r.u32()?;
    let policy_version = Version(r.u64()?);
    let bootstrap_value = r.f64()?;
    let n = r.u32()? as usize;
    let mut steps = Vec::with_capacity(n.min(bytes.len()));
    for _ in 0..n {
        let state = r.f64s()?;
        let action = match r.take(1)?[0] {
            0 => Action::Discrete(r.u32()? as usize),
            1 => Action::Continuous(r.f64s()?),
            tag => return Err(WireError::Invalid(format!("action tag {tag}"))),
        };
        let log_prob = r.f64()?;
        let value = r.f64()?;
        let reward = r.f64s()?;
        let done = r.take(1)?[0] != 0;
        steps.push(Step {
            state,
            action,
            log_prob,
            value,
            reward,
            done,
        });
    }
    r.finish()?;
    let mut t = Trajectory::new(agent_id, policy_version, steps)
        .map_err(|e| WireError::Invalid(e.to_string()))?;
    t.bootstrap_value = bootstrap_value;
    Ok(t)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn truncated(&self, n: usize) -> WireError {
        WireError::TruncatedInput {
            offset: self.pos,
            needed: n - (self.buf.len() - self.pos),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.buf.len() - self.pos < n {
            return Err(self.truncated(n));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, WireError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, WireError> {
        let raw = self.take(n * 4)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn f64s(&mut self) -> Result<Vec<f64>, WireError> {
        let n = self.u32()? as usize;
        let raw = self.take(n.checked_mul(8).ok_or_else(|| {
            WireError::ShapeOverflow(format!("{n} values"))
        })?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finish(&self) -> Result<(), WireError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(WireError::TrailingBytes(n)),
        }
    }
}
