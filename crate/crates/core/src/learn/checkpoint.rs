use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use crate::learn::net::{Activation, DenseLayer, QNetwork};

const MAGIC: &[u8; 8] = b"SFCDQNCK";
const VERSION: u32 = 1;

/// Errors raised while saving or loading network checkpoints.
#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] io::Error),
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("checkpoint {field} mismatch: expected {expected}, found {found}")]
    Mismatch {
        field: &'static str,
        expected: String,
        found: String,
    },
}

/// Identity recorded alongside the weights so a checkpoint can only be
/// restored into an agent with the same inputs and action space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub agent_id: String,
    pub layout_hash: u64,
    pub action_descriptor: String,
}

/// Writes a network and its identity to `path` in a little-endian binary
/// format. The byte stream is a pure function of the arguments.
pub fn save_checkpoint(
    path: &Path,
    meta: &CheckpointMeta,
    net: &QNetwork,
) -> Result<(), CheckpointError> {
    let mut out: Vec<u8> = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    write_string(&mut out, &meta.agent_id);
    out.extend_from_slice(&meta.layout_hash.to_le_bytes());
    write_string(&mut out, &meta.action_descriptor);
    let layers = net.layers();
    out.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    for layer in layers {
        out.extend_from_slice(&(layer.in_dim as u32).to_le_bytes());
        out.extend_from_slice(&(layer.out_dim as u32).to_le_bytes());
        out.push(match layer.act {
            Activation::Tanh => 0,
            Activation::Linear => 1,
        });
    }
    for layer in layers {
        for w in &layer.w {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for b in &layer.b {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

/// Reads a checkpoint and verifies its identity against `expected` before
/// returning the network. Trailing bytes are rejected.
pub fn load_checkpoint(
    path: &Path,
    expected: &CheckpointMeta,
) -> Result<QNetwork, CheckpointError> {
    let bytes = fs::read(path)?;
    let mut r = io::Cursor::new(bytes.as_slice());

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| CheckpointError::Format("truncated header".into()))?;
    if &magic != MAGIC {
        return Err(CheckpointError::Format("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(CheckpointError::Mismatch {
            field: "version",
            expected: VERSION.to_string(),
            found: version.to_string(),
        });
    }
    let agent_id = read_string(&mut r)?;
    if agent_id != expected.agent_id {
        return Err(CheckpointError::Mismatch {
            field: "agent id",
            expected: expected.agent_id.clone(),
            found: agent_id,
        });
    }
    let layout_hash = read_u64(&mut r)?;
    if layout_hash != expected.layout_hash {
        return Err(CheckpointError::Mismatch {
            field: "observation layout",
            expected: format!("{:016x}", expected.layout_hash),
            found: format!("{layout_hash:016x}"),
        });
    }
    let action_descriptor = read_string(&mut r)?;
    if action_descriptor != expected.action_descriptor {
        return Err(CheckpointError::Mismatch {
            field: "action space",
            expected: expected.action_descriptor.clone(),
            found: action_descriptor,
        });
    }

    let layer_count = read_u32(&mut r)? as usize;
    if layer_count == 0 || layer_count > 64 {
        return Err(CheckpointError::Format(format!(
            "implausible layer count {layer_count}"
        )));
    }
    let mut shapes = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let in_dim = read_u32(&mut r)? as usize;
        let out_dim = read_u32(&mut r)? as usize;
        let mut act_byte = [0u8; 1];
        r.read_exact(&mut act_byte)
            .map_err(|_| CheckpointError::Format("truncated layer table".into()))?;
        let act = match act_byte[0] {
            0 => Activation::Tanh,
            1 => Activation::Linear,
            other => {
                return Err(CheckpointError::Format(format!(
                    "unknown activation tag {other}"
                )))
            }
        };
        if in_dim == 0 || out_dim == 0 {
            return Err(CheckpointError::Format("zero-width layer".into()));
        }
        shapes.push((in_dim, out_dim, act));
    }

    let mut layers = Vec::with_capacity(layer_count);
    for (in_dim, out_dim, act) in shapes {
        let w = read_f64_vec(&mut r, in_dim * out_dim)?;
        let b = read_f64_vec(&mut r, out_dim)?;
        layers.push(DenseLayer {
            in_dim,
            out_dim,
            act,
            w,
            b,
        });
    }

    if (r.position() as usize) != bytes.len() {
        return Err(CheckpointError::Format(format!(
            "{} trailing bytes",
            bytes.len() - r.position() as usize
        )));
    }
    Ok(QNetwork::from_layers(layers))
}

fn write_string(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn read_u32(r: &mut io::Cursor<&[u8]>) -> Result<u32, CheckpointError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| CheckpointError::Format("truncated u32".into()))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut io::Cursor<&[u8]>) -> Result<u64, CheckpointError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| CheckpointError::Format("truncated u64".into()))?;
    Ok(u64::from_le_bytes(buf))
}

fn read_string(r: &mut io::Cursor<&[u8]>) -> Result<String, CheckpointError> {
    let len = read_u32(r)? as usize;
    if len > 4096 {
        return Err(CheckpointError::Format(format!(
            "implausible string length {len}"
        )));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)
        .map_err(|_| CheckpointError::Format("truncated string".into()))?;
    String::from_utf8(buf).map_err(|_| CheckpointError::Format("non-utf8 string".into()))
}

fn read_f64_vec(r: &mut io::Cursor<&[u8]>, count: usize) -> Result<Vec<f64>, CheckpointError> {
    let mut out = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut buf)
            .map_err(|_| CheckpointError::Format("truncated weights".into()))?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}
