//! Binary checkpoint archive.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes   "TTRIAGE\0"
//! version      u32       1
//! header_len   u64
//! header       header_len bytes of UTF-8 JSON:
//!              {"config":{..ModelConfig..},"vocab":[..tokens..],
//!               "labels":[{"name":..,"actionable":..},..]}
//! n_tensors    u32
//! per tensor:
//!   name_len   u32
//!   name       name_len bytes UTF-8
//!   ndim       u32       always 2
//!   dims       ndim x u64 (rows, cols)
//!   data       rows*cols x f64, row-major, raw IEEE-754 bits
//! ```
//!
//! Tensors appear in [`ModelParams::tensors`] order. Writing then reading
//! reproduces every value bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{ModelConfig, ModelParams};
use super::tensor::Matrix;
use super::vocab::{Vocab, RESERVED};
use super::Model;
use crate::error::{Error, Result};
use crate::ontology::Ontology;

pub const MAGIC: &[u8; 8] = b"TTRIAGE\0";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Label {
    name: String,
    actionable: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    config: ModelConfig,
    vocab: Vec<String>,
    labels: Vec<Label>,
}

pub fn to_bytes(model: &Model) -> Vec<u8> {
    let header = Header {
        config: model.config,
        vocab: model.vocab.tokens().to_vec(),
        labels: model
            .ontology
            .types()
            .iter()
            .map(|t| Label {
                name: t.name.clone(),
                actionable: t.actionable,
            })
            .collect(),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    let tensors = model.params.tensors();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, m) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&2u32.to_le_bytes());
        out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
        for v in m.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Validation(format!("checkpoint truncated at byte {}", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Validation("checkpoint length overflow".into()))
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<Model> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Validation("not a checkpoint file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Validation(format!("unsupported checkpoint version {version}")));
    }
    let header_len = r.len()?;
    let header: Header = serde_json::from_slice(r.take(header_len)?)
        .map_err(|e| Error::Validation(format!("checkpoint header: {e}")))?;
    let config = header.config;
    config.validate()?;
    if header.vocab.len() < RESERVED.len() || header.vocab[..RESERVED.len()] != RESERVED {
        return Err(Error::Validation("checkpoint vocabulary lacks reserved tokens".into()));
    }
    let vocab = Vocab::from_tokens(header.vocab.into_iter().skip(RESERVED.len()))?;
    let ontology = Ontology::new(header.labels.into_iter().map(|l| (l.name, l.actionable)))?;

    let mut params = ModelParams::zeros(&config);
    let expected: Vec<(String, (usize, usize))> = params
        .tensors()
        .into_iter()
        .map(|(n, m)| (n, m.shape()))
        .collect();
    let count = r.u32()? as usize;
    if count != expected.len() {
        return Err(Error::Validation(format!(
            "checkpoint has {count} tensors, config implies {}",
            expected.len()
        )));
    }
    for (slot, (want_name, want_shape)) in params.tensors_mut().into_iter().zip(expected) {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::Validation("tensor name is not UTF-8".into()))?;
        if name != want_name {
            return Err(Error::Validation(format!("expected tensor {want_name}, found {name}")));
        }
        if r.u32()? != 2 {
            return Err(Error::Validation(format!("tensor {name} is not 2-dimensional")));
        }
        let shape = (r.len()?, r.len()?);
        if shape != want_shape {
            return Err(Error::Validation(format!(
                "tensor {name} has shape {shape:?}, config implies {want_shape:?}"
            )));
        }
        let bytes = r.take(shape.0 * shape.1 * 8)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        *slot = Matrix::from_vec(shape.0, shape.1, data);
    }
    if r.pos != buf.len() {
        return Err(Error::Validation("trailing bytes after checkpoint tensors".into()));
    }
    Model::new(config, params, vocab, ontology)
}

pub fn save(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> Model {
        let vocab = Vocab::build(["a b c"], 10).unwrap();
        let ontology = Ontology::new([("X", true), ("Y", false)]).unwrap();
        let config = ModelConfig {
            d_model: 4,
            n_layers: 1,
            n_heads: 2,
            d_ff: 4,
            vocab_size: vocab.len(),
            max_len: 5,
            n_types: 2,
        };
        let params = ModelParams::init(&config, 11).unwrap();
        Model::new(config, params, vocab, ontology).unwrap()
    }

    #[test]
    fn bitwise_round_trip() {
        let m = model();
        let bytes = to_bytes(&m);
        let back = from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(to_bytes(&back), bytes);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let bytes = to_bytes(&model());
        assert!(from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(from_bytes(&bad).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(from_bytes(&long).is_err());
        assert!(from_bytes(&[]).is_err());
    }
}
