//! Binary checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset  size  content
//! 0       4     magic "DGRD"
//! 4       4     u32 format version (currently 1)
//! 8       8     u64 header length H in bytes
//! 16      H     UTF-8 JSON header
//! 16+H    8*N   f64 payload, N = sum of all array lengths listed in the header
//! ```
//!
//! The header lists, in payload order, every network (input width, layer
//! specs and the lengths of its state arrays: parameters in visiting order
//! followed by batch-norm running means and variances), then every Adam
//! state (hyperparameters, step count and the lengths of its first- and
//! second-moment arrays), the ChaCha8 generator position, and a free-form
//! `meta` object owned by the caller. The payload stores each network's
//! arrays back to back, then each optimizer's `m` arrays followed by its `v`
//! arrays.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::network::{LayerSpec, Network};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DGRD";
pub const VERSION: u32 = 1;

/// Exact position of a ChaCha8 stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    /// Stored as text because JSON numbers cannot hold a u128.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng> {
        let pos: u128 = self
            .word_pos
            .parse()
            .map_err(|_| Error::Checkpoint(format!("bad generator position {:?}", self.word_pos)))?;
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(pos);
        Ok(rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub networks: Vec<(String, Network)>,
    pub optimizers: Vec<(String, AdamState)>,
    pub rng: Option<RngState>,
    pub meta: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct NetHeader {
    name: String,
    input_dim: usize,
    specs: Vec<LayerSpec>,
    lens: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct AdamHeader {
    name: String,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u64,
    lens: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    networks: Vec<NetHeader>,
    optimizers: Vec<AdamHeader>,
    rng: Option<RngState>,
    meta: serde_json::Value,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

impl Checkpoint {
    pub fn network(&self, name: &str) -> Result<&Network> {
        self.networks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, net)| net)
            .ok_or_else(|| bad(format!("no network named {name}")))
    }

    pub fn optimizer(&self, name: &str) -> Result<&AdamState> {
        self.optimizers
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, a)| a)
            .ok_or_else(|| bad(format!("no optimizer named {name}")))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut payload: Vec<f64> = Vec::new();
        let mut networks = Vec::new();
        for (name, net) in &self.networks {
            let mut lens = Vec::new();
            net.visit_state(|p| {
                lens.push(p.len());
                payload.extend_from_slice(p);
            });
            networks.push(NetHeader {
                name: name.clone(),
                input_dim: net.input_dim(),
                specs: net.specs().to_vec(),
                lens,
            });
        }
        let mut optimizers = Vec::new();
        for (name, a) in &self.optimizers {
            if a.m.len() != a.v.len() {
                return Err(bad(format!("optimizer {name} has mismatched moments")));
            }
            let mut lens = Vec::new();
            for (m, v) in a.m.iter().zip(&a.v) {
                if m.len() != v.len() {
                    return Err(bad(format!("optimizer {name} has mismatched moments")));
                }
                lens.push(m.len());
            }
            a.m.iter().for_each(|m| payload.extend_from_slice(m));
            a.v.iter().for_each(|v| payload.extend_from_slice(v));
            optimizers.push(AdamHeader {
                name: name.clone(),
                lr: a.lr,
                beta1: a.beta1,
                beta2: a.beta2,
                eps: a.eps,
                step: a.step,
                lens,
            });
        }
        let header = serde_json::to_vec(&Header {
            networks,
            optimizers,
            rng: self.rng.clone(),
            meta: self.meta.clone(),
        })
        .map_err(|e| bad(e.to_string()))?;
        let mut out = Vec::with_capacity(16 + header.len() + 8 * payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for x in payload {
            out.extend_from_slice(&x.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(16..).expect("length checked");
        let header_bytes = body.get(..hlen).ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(header_bytes).map_err(|e| bad(e.to_string()))?;
        let raw = &body[hlen..];
        if raw.len() % 8 != 0 {
            return Err(bad("payload is not a whole number of f64 values"));
        }
        let mut values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let mut take = |n: usize| -> Result<Vec<f64>> {
            let v: Vec<f64> = values.by_ref().take(n).collect();
            if v.len() != n {
                return Err(bad("truncated payload"));
            }
            Ok(v)
        };

        let mut networks = Vec::new();
        for nh in header.networks {
            let mut net = Network::new(nh.input_dim, &nh.specs, &mut ChaCha8Rng::seed_from_u64(0))?;
            let mut expected = Vec::new();
            net.visit_state(|p| expected.push(p.len()));
            if expected != nh.lens {
                return Err(bad(format!("network {} arrays do not match its layer specs", nh.name)));
            }
            let arrays = nh.lens.iter().map(|&n| take(n)).collect::<Result<Vec<_>>>()?;
            let mut i = 0;
            net.visit_state_mut(|p| {
                p.copy_from_slice(&arrays[i]);
                i += 1;
            });
            networks.push((nh.name, net));
        }
        let mut optimizers = Vec::new();
        for ah in header.optimizers {
            let m = ah.lens.iter().map(|&n| take(n)).collect::<Result<Vec<_>>>()?;
            let v = ah.lens.iter().map(|&n| take(n)).collect::<Result<Vec<_>>>()?;
            optimizers.push((
                ah.name,
                AdamState {
                    lr: ah.lr,
                    beta1: ah.beta1,
                    beta2: ah.beta2,
                    eps: ah.eps,
                    step: ah.step,
                    m,
                    v,
                },
            ));
        }
        if values.next().is_some() {
            return Err(bad("trailing payload"));
        }
        Ok(Self {
            networks,
            optimizers,
            rng: header.rng,
            meta: header.meta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
