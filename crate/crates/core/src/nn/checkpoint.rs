//! Binary parameter checkpoints.
//!
//! Little-endian throughout:
//!
//! ```text
//! 8 bytes  magic "CMPRNET\0"
//! u32      format version (1)
//! u32      network count
//! per network:
//!   u8     kind (0 = dense, 1 = lstm)
//!   u32    recurrent layer count (0 for dense)
//!   u32    tensor count
//!   per tensor: u32 rank, rank × u64 dims
//!   all tensors' values as f64, row-major, in tensor order
//! ```
//!
//! Dense layers are restored with ReLU on hidden layers and a linear output,
//! the only layout the networks here use.

use std::io::{Read, Write};

use super::{Activation, DenseLayer, DenseNet, LstmLayer, LstmNet, Parameters};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"CMPRNET\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy)]
pub enum NetRef<'a> {
    Dense(&'a DenseNet),
    Lstm(&'a LstmNet),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Dense(DenseNet),
    Lstm(LstmNet),
}

impl Network {
    pub fn shapes(&self) -> Vec<Vec<usize>> {
        match self {
            Network::Dense(n) => n.shapes(),
            Network::Lstm(n) => n.shapes(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Network::Dense(n) => n.param_count(),
            Network::Lstm(n) => n.param_count(),
        }
    }
}

pub fn write_checkpoint<W: Write>(mut w: W, nets: &[NetRef<'_>]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(nets.len() as u32).to_le_bytes())?;
    for net in nets {
        let (kind, recurrent, shapes, tensors): (u8, usize, _, Vec<&[f64]>) = match net {
            NetRef::Dense(n) => (0, 0, n.shapes(), n.tensors()),
            NetRef::Lstm(n) => (1, n.lstm.len(), n.shapes(), n.tensors()),
        };
        w.write_all(&[kind])?;
        w.write_all(&(recurrent as u32).to_le_bytes())?;
        w.write_all(&(shapes.len() as u32).to_le_bytes())?;
        for s in &shapes {
            w.write_all(&(s.len() as u32).to_le_bytes())?;
            for d in s {
                w.write_all(&(*d as u64).to_le_bytes())?;
            }
        }
        for t in tensors {
            for v in t {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Vec<Network>> {
    let magic: [u8; 8] = read_bytes(&mut r)?;
    if &magic != MAGIC {
        return Err(bad("wrong magic bytes"));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let count = read_u32(&mut r)?;
    let mut nets = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let [kind] = read_bytes::<_, 1>(&mut r)?;
        let recurrent = read_u32(&mut r)? as usize;
        let n_tensors = read_u32(&mut r)? as usize;
        let mut shapes = Vec::with_capacity(n_tensors);
        for _ in 0..n_tensors {
            let rank = read_u32(&mut r)? as usize;
            let dims = (0..rank)
                .map(|_| read_u64(&mut r).map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            shapes.push(dims);
        }
        let mut tensors = Vec::with_capacity(n_tensors);
        for s in &shapes {
            let n: usize = s.iter().product();
            let vals = (0..n)
                .map(|_| read_bytes(&mut r).map(f64::from_le_bytes))
                .collect::<Result<Vec<_>>>()?;
            tensors.push(vals);
        }
        nets.push(match kind {
            0 => Network::Dense(dense_from(&shapes, tensors)?),
            1 => {
                if 3 * recurrent > shapes.len() {
                    return Err(bad("recurrent layer count exceeds tensors"));
                }
                let head_tensors = tensors.split_off(3 * recurrent);
                let head = dense_from(&shapes[3 * recurrent..], head_tensors)?;
                let mut lstm = Vec::with_capacity(recurrent);
                let mut it = tensors.into_iter();
                for l in 0..recurrent {
                    let s = &shapes[3 * l];
                    if s.len() != 2 || s[0] % 4 != 0 {
                        return Err(bad("LSTM input weights must be 4h × in"));
                    }
                    lstm.push(LstmLayer {
                        inputs: s[1],
                        hidden: s[0] / 4,
                        w_input: it.next().unwrap_or_default(),
                        w_recurrent: it.next().unwrap_or_default(),
                        bias: it.next().unwrap_or_default(),
                    });
                }
                Network::Lstm(LstmNet::from_parts(lstm, head)?)
            }
            k => return Err(bad(format!("unknown network kind {k}"))),
        });
    }
    Ok(nets)
}

fn dense_from(shapes: &[Vec<usize>], tensors: Vec<Vec<f64>>) -> Result<DenseNet> {
    if shapes.is_empty() || !shapes.len().is_multiple_of(2) {
        return Err(bad("dense tensors must come in weight/bias pairs"));
    }
    let n_layers = shapes.len() / 2;
    let mut it = tensors.into_iter();
    let mut layers = Vec::with_capacity(n_layers);
    for l in 0..n_layers {
        let ws = &shapes[2 * l];
        if ws.len() != 2 {
            return Err(bad("dense weights must be rank 2"));
        }
        layers.push(DenseLayer {
            inputs: ws[1],
            outputs: ws[0],
            weights: it.next().unwrap_or_default(),
            bias: it.next().unwrap_or_default(),
            activation: if l + 1 == n_layers {
                Activation::Linear
            } else {
                Activation::Relu
            },
        });
    }
    DenseNet::from_layers(layers)
}

fn bad(message: impl Into<String>) -> Error {
    Error::Format {
        what: "checkpoint",
        message: message.into(),
    }
}

fn read_bytes<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| bad(e.to_string()))?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_bytes(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_bytes(r)?))
}
