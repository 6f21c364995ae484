//! Model checkpoints as self-describing JSON documents.
//!
//! Keys: `layer_dims`, `weights`/`biases` (flattened row-major arrays),
//! `batch_norm` (scale/shift plus running statistics), `optimizer`
//! (optional Adam state), `seed`, `config_hash`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ModelParams, OptimizerState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: ModelParams,
    pub optimizer: Option<OptimizerState>,
    pub seed: u64,
    pub config_hash: String,
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let json = serde_json::to_string_pretty(checkpoint)
        .map_err(|e| Error::Invalid(format!("checkpoint serialization: {e}")))?;
    std::fs::write(path, json).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed {
        path: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{adam_step, init_model, Mat, OptimizerState};
    use super::*;

    #[test]
    fn checkpoint_round_trips_exactly() {
        let mut model = init_model(6, 8, 4, 77).unwrap();
        let mut state = OptimizerState::new(&model, 0.001);
        // Mutate state a little so the round trip is non-trivial.
        let x = Mat::from_rows(3, 6, (0..18).map(|i| i as f64 / 18.0).collect());
        let (probs, cache) = model.forward_train(&x).unwrap();
        let dl: Vec<f64> = probs.iter().map(|p| p - 0.5).collect();
        let grads = model.backward(&cache, &dl).unwrap();
        adam_step(&mut model, &mut state, &grads).unwrap();

        let checkpoint = Checkpoint {
            model,
            optimizer: Some(state),
            seed: 77,
            config_hash: "fnv1a:00deadbeef".to_string(),
        };
        let dir = std::env::temp_dir().join(format!("fairsel_ckpt_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.json");
        save_checkpoint(&path, &checkpoint).unwrap();
        let restored = load_checkpoint(&path).unwrap();
        assert_eq!(checkpoint, restored);
    }
}
