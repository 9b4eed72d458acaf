//! Model hyperparameters, loaded from a JSON file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture hyperparameters of the cross-encoder.
///
/// The JSON keys are exactly the field names below (serde renames map
/// them onto the conventional checkpoint-config vocabulary):
///
/// ```json
/// {
///   "num_hidden_layers": 12,
///   "num_attention_heads": 12,
///   "hidden_size": 768,
///   "intermediate_size": 3072,
///   "vocab_size": 30522,
///   "max_position_embeddings": 512,
///   "type_vocab_size": 2,
///   "layer_norm_eps": 1e-12,
///   "use_pooler": true
/// }
/// ```
///
/// `use_pooler` selects the classifier-head arrangement: `true` applies a
/// tanh pooler dense layer to the final CLS state before the classifier,
/// `false` feeds the raw CLS state straight in. It defaults to `true`
/// and may be omitted; unknown keys are ignored so a stock checkpoint
/// config file works as-is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(rename = "num_hidden_layers")]
    pub num_layers: usize,
    #[serde(rename = "num_attention_heads")]
    pub num_heads: usize,
    pub hidden_size: usize,
    pub intermediate_size: usize,
    pub vocab_size: usize,
    pub max_position_embeddings: usize,
    pub type_vocab_size: usize,
    pub layer_norm_eps: f32,
    #[serde(default = "default_true")]
    pub use_pooler: bool,
}

fn default_true() -> bool {
    true
}

impl ModelConfig {
    /// Per-head dimension `hidden_size / num_heads`.
    pub fn head_dim(&self) -> usize {
        self.hidden_size / self.num_heads
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_hidden_layers", self.num_layers),
            ("num_attention_heads", self.num_heads),
            ("hidden_size", self.hidden_size),
            ("intermediate_size", self.intermediate_size),
            ("vocab_size", self.vocab_size),
            ("max_position_embeddings", self.max_position_embeddings),
            ("type_vocab_size", self.type_vocab_size),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if !self.hidden_size.is_multiple_of(self.num_heads) {
            return Err(Error::Config(format!(
                "hidden_size {} not divisible by num_attention_heads {}",
                self.hidden_size, self.num_heads
            )));
        }
        if self.layer_norm_eps <= 0.0 {
            return Err(Error::Config("layer_norm_eps must be > 0".into()));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ModelConfig> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let config: ModelConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_standard_keys() {
        let json = r#"{
            "num_hidden_layers": 2, "num_attention_heads": 2,
            "hidden_size": 16, "intermediate_size": 32,
            "vocab_size": 32, "max_position_embeddings": 64,
            "type_vocab_size": 2, "layer_norm_eps": 1e-12,
            "model_type": "bert"
        }"#;
        let c: ModelConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.num_layers, 2);
        assert_eq!(c.head_dim(), 8);
        assert!(c.use_pooler);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_indivisible_heads() {
        let c = ModelConfig {
            num_layers: 1,
            num_heads: 3,
            hidden_size: 16,
            intermediate_size: 8,
            vocab_size: 8,
            max_position_embeddings: 8,
            type_vocab_size: 2,
            layer_norm_eps: 1e-12,
            use_pooler: false,
        };
        assert!(c.validate().is_err());
    }
}
