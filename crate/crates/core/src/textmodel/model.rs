use std::path::Path;

use ndarray::{Array1, Array2};
use serde_json::{json, Value};

use super::classifier::{forward, ClassifierParams, NUM_CLASSES};
use super::embedding::EmbeddingTable;
use super::input::{compose_input, InputRepresentation};
use crate::container::{self, Tensor};
use crate::error::{Error, Result};

const CHECKPOINT_MAGIC: &[u8; 8] = b"POSCECKP";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A classifier together with its fixed token vectors and length cap.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub embeddings: EmbeddingTable,
    pub params: ClassifierParams,
    pub max_len: usize,
}

impl Model {
    pub fn new(embeddings: EmbeddingTable, params: ClassifierParams, max_len: usize) -> Result<Self> {
        params.check_shapes()?;
        if params.dim() != embeddings.dim() {
            return Err(Error::Shape(format!(
                "classifier dimension {} does not match embedding dimension {}",
                params.dim(),
                embeddings.dim()
            )));
        }
        if max_len == 0 {
            return Err(Error::invalid("max_len", "must be positive"));
        }
        Ok(Model {
            embeddings,
            params,
            max_len,
        })
    }

    pub fn represent(&self, ids: &[usize], profile: &[f64], aspect_position: usize) -> Result<InputRepresentation> {
        if ids.len() > self.max_len {
            return Err(Error::invalid(
                "sentence",
                format!("{} tokens exceed max_len {}", ids.len(), self.max_len),
            ));
        }
        compose_input(
            &self.embeddings.gather(ids),
            profile,
            &self.params.u_posce,
            aspect_position,
        )
    }

    pub fn predict(&self, ids: &[usize], profile: &[f64], aspect_position: usize) -> Result<[f64; NUM_CLASSES]> {
        forward(&self.params, &self.represent(ids, profile, aspect_position)?)
    }

    /// Serializes the model with `config` echoed into the header.
    pub fn to_bytes(&self, config: &Value) -> Result<Vec<u8>> {
        let p = &self.params;
        let header = json!({
            "format": "posce-checkpoint",
            "k": p.dim(),
            "h": p.hidden(),
            "max_len": self.max_len,
            "vocabulary": self.embeddings.tokens(),
            "config": config,
        });
        let (k, h) = (p.dim(), p.hidden());
        let tensors = [
            Tensor::new(
                "embeddings",
                vec![self.embeddings.len(), k],
                self.embeddings.matrix().iter().copied().collect(),
            ),
            Tensor::new("m", vec![k, h], p.m.iter().copied().collect()),
            Tensor::new("b", vec![h], p.b.to_vec()),
            Tensor::new("w_out", vec![h, NUM_CLASSES], p.w_out.iter().copied().collect()),
            Tensor::new("b_out", vec![NUM_CLASSES], p.b_out.to_vec()),
            Tensor::new("u_posce", vec![k], p.u_posce.to_vec()),
        ];
        container::encode(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, header, &tensors)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, Value)> {
        let mut d = container::decode(bytes, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;
        let k: usize = d.field("k")?;
        let h: usize = d.field("h")?;
        let max_len: usize = d.field("max_len")?;
        let vocabulary: Vec<String> = d.field("vocabulary")?;
        let config = d.header.get("config").cloned().unwrap_or(Value::Null);

        let mut matrix = |name: &str, rows: usize, cols: usize| -> Result<Array2<f64>> {
            let t = d.take(name)?;
            Array2::from_shape_vec((rows, cols), t.data)
                .map_err(|e| Error::format("checkpoint", format!("tensor `{name}`: {e}")))
        };
        let emb = matrix("embeddings", vocabulary.len(), k)?;
        let m = matrix("m", k, h)?;
        let w_out = matrix("w_out", h, NUM_CLASSES)?;
        let mut vector = |name: &str, len: usize| -> Result<Array1<f64>> {
            let t = d.take(name)?;
            if t.data.len() != len {
                return Err(Error::format("checkpoint", format!("tensor `{name}` has wrong length")));
            }
            Ok(Array1::from(t.data))
        };
        let params = ClassifierParams {
            m,
            b: vector("b", h)?,
            w_out,
            b_out: vector("b_out", NUM_CLASSES)?,
            u_posce: vector("u_posce", k)?,
        };
        let embeddings = EmbeddingTable::from_parts(vocabulary, emb)?;
        Ok((Model::new(embeddings, params, max_len)?, config))
    }

    pub fn save(&self, path: &Path, config: &Value) -> Result<()> {
        container::write_file(path, &self.to_bytes(config)?)
    }

    pub fn load(path: &Path) -> Result<(Self, Value)> {
        Model::from_bytes(&container::read_file(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let emb = EmbeddingTable::random(&["a", "b", "c"], 4, 1.0, 1).unwrap();
        let params = ClassifierParams::init(4, 5, 0.5, &mut ChaCha8Rng::seed_from_u64(2));
        let model = Model::new(emb, params, 9).unwrap();
        let cfg = json!({"seed": 3});
        let bytes = model.to_bytes(&cfg).unwrap();
        let (back, cfg_back) = Model::from_bytes(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(cfg_back, cfg);
        assert_eq!(back.to_bytes(&cfg).unwrap(), bytes);
    }

    #[test]
    fn rejects_long_sentences() {
        let emb = EmbeddingTable::random(&["a"], 2, 1.0, 1).unwrap();
        let model = Model::new(emb, ClassifierParams::zeros(2, 2), 2).unwrap();
        assert!(model.predict(&[1, 1, 1], &[0.0; 3], 0).is_err());
        assert!(model.predict(&[1, 1], &[0.0; 2], 0).is_ok());
    }
}
