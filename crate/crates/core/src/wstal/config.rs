use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Background column index in the background-foreground attention map.
pub const BACKGROUND: usize = 0;
/// Foreground column index.
pub const FOREGROUND: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionVariant {
    /// One logit per snippet for background and one for foreground,
    /// normalized per snippet. The main model.
    TwoLogit,
    /// A single logit per snippet squashed through a sigmoid.
    ScalarSigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(rename = "D")]
    pub input_dim: usize,
    #[serde(rename = "N")]
    pub num_classes: usize,
    /// Number of fully-connected layers in each head; hidden layer l has
    /// width D / 2^l.
    #[serde(rename = "L")]
    pub num_layers: usize,
    pub attention_variant: AttentionVariant,
    pub init_seed: u64,
}

impl ModelConfig {
    /// Input widths of each layer: [D, D/2, ..., D/2^(L-1)].
    pub fn layer_input_dims(&self) -> Result<Vec<usize>, CoreError> {
        if self.num_layers == 0 {
            return Err(CoreError::Config("L must be >= 1".into()));
        }
        let mut dims = Vec::with_capacity(self.num_layers);
        let mut d = self.input_dim;
        for _ in 0..self.num_layers {
            if d < 1 {
                return Err(CoreError::Config(format!(
                    "D={} too small for L={} layers",
                    self.input_dim, self.num_layers
                )));
            }
            dims.push(d);
            d /= 2;
        }
        Ok(dims)
    }

    pub fn attention_out_dim(&self) -> usize {
        match self.attention_variant {
            AttentionVariant::TwoLogit => 2,
            AttentionVariant::ScalarSigmoid => 1,
        }
    }
}
