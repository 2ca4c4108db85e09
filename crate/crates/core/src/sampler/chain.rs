use std::io::{BufRead, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{AcceptanceStats, ChainState, SamplerError};
use crate::order::{ActionCatalog, Poset};

pub const CHAIN_SCHEMA: &str = "bpop-chain/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainHeader {
    pub schema: String,
    pub config_digest: String,
    pub catalog: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSample {
    pub iter: u64,
    #[serde(rename = "K")]
    pub k: usize,
    pub rho: f64,
    pub beta: f64,
    /// `-inf` is stored as `null`.
    #[serde(serialize_with = "loglik_out", deserialize_with = "loglik_in")]
    pub loglik: f64,
    /// Closure edges `(i, j)` meaning `i ≻ j`, sorted.
    pub edges: Vec<[usize; 2]>,
}

fn loglik_out<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn loglik_in<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
}

impl ChainSample {
    pub fn from_state(iter: u64, state: &ChainState) -> Self {
        ChainSample {
            iter,
            k: state.k(),
            rho: state.rho,
            beta: state.beta,
            loglik: state.loglik,
            edges: state
                .poset
                .closure_edges()
                .into_iter()
                .map(|(i, j)| [i, j])
                .collect(),
        }
    }

    pub fn poset(&self, m: usize) -> Result<Poset, SamplerError> {
        Ok(Poset::transitive_closure(
            m,
            self.edges.iter().map(|&[i, j]| (i, j)),
        )?)
    }

    pub(crate) fn write_line<W: Write>(&self, sink: &mut W) -> Result<(), SamplerError> {
        serde_json::to_writer(&mut *sink, self)?;
        sink.write_all(b"\n")?;
        Ok(())
    }
}

/// Recorded samples of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub header: ChainHeader,
    pub samples: Vec<ChainSample>,
    /// Present for chains produced in this process.
    pub stats: Option<AcceptanceStats>,
}

impl Chain {
    pub fn catalog(&self) -> Result<ActionCatalog, SamplerError> {
        Ok(ActionCatalog::new(self.header.catalog.iter().cloned())?)
    }

    pub fn m(&self) -> usize {
        self.header.catalog.len()
    }

    pub fn write_jsonl<W: Write>(&self, sink: &mut W) -> Result<(), SamplerError> {
        serde_json::to_writer(&mut *sink, &self.header)?;
        sink.write_all(b"\n")?;
        for sample in &self.samples {
            sample.write_line(sink)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self, SamplerError> {
        let mut lines = reader.lines();
        let header: ChainHeader = match lines.next() {
            Some(line) => serde_json::from_str(&line?)?,
            None => return Err(SamplerError::Schema("missing header line".into())),
        };
        if header.schema != CHAIN_SCHEMA {
            return Err(SamplerError::Schema(format!(
                "unsupported schema `{}`",
                header.schema
            )));
        }
        let m = header.catalog.len();
        let mut samples = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let sample: ChainSample = serde_json::from_str(&line)?;
            if let Some(&[i, j]) = sample.edges.iter().find(|&&[i, j]| i >= m || j >= m) {
                return Err(SamplerError::Schema(format!(
                    "sample line {}: edge ({i}, {j}) out of range for {m} actions",
                    n + 2
                )));
            }
            samples.push(sample);
        }
        Ok(Chain {
            header,
            samples,
            stats: None,
        })
    }
}
