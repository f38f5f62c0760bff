//! Training loop and the iterative refinement process: train a base model on
//! weak labels only, generate snippet-level pseudo ground truth from its own
//! predictions, then train a fresh model per iteration on the joint loss.

mod pipeline;
mod train;

pub use pipeline::{
    ablation_grid, generate_pseudo_labels, predict_split, refine_loop, AblationCell, RunWriter,
};
pub use train::{train_one_iteration, TrainOutcome};

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::evalkit::EvalReport;
use crate::pseudogen::GeneratorKind;
use crate::segpred::PostprocConfig;
use crate::wstal::ModelConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefineConfig {
    /// Number of refinement iterations after the base model.
    pub eta_max: usize,
    /// Trade-off between the video label loss and the pseudo label loss.
    pub beta: f64,
    pub generator: GeneratorKind,
    /// Fraction S of snippets the pseudo loss applies to.
    pub sample_fraction: f64,
    pub epochs_per_iter: usize,
    pub lr: f64,
    pub lr_decay: f64,
    /// Epochs without a new best validation loss before the lr decays.
    pub plateau_patience: usize,
    pub seed: u64,
    /// Reuse the previous iteration's weights instead of re-initializing.
    /// Off by default; kept for study.
    pub warm_start: bool,
    pub postproc: PostprocConfig,
    pub model: ModelConfig,
}

impl RefineConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.beta < 0.0 {
            return Err(CoreError::Config(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.sample_fraction) {
            return Err(CoreError::Config(format!(
                "sample_fraction {} outside [0,1]",
                self.sample_fraction
            )));
        }
        if self.lr <= 0.0 || !(0.0..=1.0).contains(&self.lr_decay) {
            return Err(CoreError::Config("bad lr / lr_decay".into()));
        }
        self.generator.validate()?;
        self.model.layer_input_dims()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PseudoStats {
    pub foreground_fraction: f64,
    /// Fraction of snippets whose pseudo label agrees with the ground truth
    /// coverage, when strong annotations are available.
    pub gt_agreement: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationReport {
    pub eta: usize,
    pub best_epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub eval: EvalReport,
    pub pseudo_stats: Option<PseudoStats>,
}
