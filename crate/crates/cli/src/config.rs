//! Run configuration file: one JSON document with optional sections
//! {synth | data, model, postproc, refine, eval}. Every field is optional;
//! defaults follow the reference experimental setup. Unknown keys are
//! rejected with the offending key path.

use serde::Deserialize;
use serde_json::Value;

use refineloc_core::dataio::SyntheticConfig;
use refineloc_core::pseudogen::GeneratorKind;
use refineloc_core::refine::RefineConfig;
use refineloc_core::segpred::PostprocConfig;
use refineloc_core::wstal::{AttentionVariant, ModelConfig};
use refineloc_core::CoreError;

#[derive(Debug, Default, Deserialize)]
pub struct FileConfig {
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub postproc: PostprocSection,
    #[serde(default)]
    pub refine: RefineSection,
    #[serde(default)]
    pub eval: EvalSection,
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct SynthSection {
    pub n: usize,
    pub d: usize,
    pub video_count: usize,
    pub t_range: (usize, usize),
    pub segments_per_video_range: (usize, usize),
    pub segment_len_range: (usize, usize),
    pub noise_sigma: f64,
    pub prototype_scale: f64,
    pub seed: u64,
    pub val_fraction: f64,
    pub test_fraction: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        // the reference synthetic configuration
        SynthSection {
            n: 5,
            d: 32,
            video_count: 300,
            t_range: (40, 80),
            segments_per_video_range: (1, 3),
            segment_len_range: (5, 15),
            noise_sigma: 2.0,
            prototype_scale: 1.0,
            seed: 0,
            val_fraction: 1.0 / 6.0,
            test_fraction: 1.0 / 6.0,
        }
    }
}

impl SynthSection {
    pub fn to_core(&self) -> SyntheticConfig {
        SyntheticConfig {
            num_classes: self.n,
            feature_dim: self.d,
            video_count: self.video_count,
            t_range: self.t_range,
            segments_per_video_range: self.segments_per_video_range,
            segment_len_range: self.segment_len_range,
            noise_sigma: self.noise_sigma,
            prototype_scale: self.prototype_scale,
            seed: self.seed,
            val_fraction: self.val_fraction,
            test_fraction: self.test_fraction,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct DataSection {
    pub dir: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct ModelSection {
    pub l: usize,
    pub attention_variant: AttentionVariant,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            l: 2,
            attention_variant: AttentionVariant::TwoLogit,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct PostprocSection {
    pub alpha_a: f64,
    pub alpha_c: f64,
    pub top_k: usize,
    pub gap_tolerance: usize,
    pub inflation: usize,
}

impl Default for PostprocSection {
    fn default() -> Self {
        let d = PostprocConfig::default();
        PostprocSection {
            alpha_a: d.alpha_a,
            alpha_c: d.alpha_c,
            top_k: d.top_k,
            gap_tolerance: d.gap_tolerance,
            inflation: d.inflation,
        }
    }
}

impl PostprocSection {
    pub fn to_core(&self) -> PostprocConfig {
        PostprocConfig {
            alpha_a: self.alpha_a,
            alpha_c: self.alpha_c,
            top_k: self.top_k,
            gap_tolerance: self.gap_tolerance,
            inflation: self.inflation,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct RefineSection {
    pub eta_max: usize,
    pub beta: f64,
    pub generator: GeneratorKind,
    pub sample_fraction: f64,
    pub epochs_per_iter: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub plateau_patience: usize,
    pub seed: u64,
    pub warm_start: bool,
    /// Grid axes consumed by the ablate command.
    pub generators: Vec<GeneratorKind>,
    pub betas: Vec<f64>,
}

impl Default for RefineSection {
    fn default() -> Self {
        RefineSection {
            eta_max: 3,
            beta: 4.0,
            generator: GeneratorKind::SegmentPrediction,
            sample_fraction: 0.8,
            epochs_per_iter: 50,
            lr: 1e-4,
            lr_decay: 0.9,
            plateau_patience: 5,
            seed: 0,
            warm_start: false,
            generators: vec![
                GeneratorKind::UniformRandom,
                GeneratorKind::DistributionAware { ratio: None },
                GeneratorKind::ClassActivation { threshold: None },
                GeneratorKind::Attention { threshold: None },
                GeneratorKind::SegmentPrediction,
            ],
            betas: vec![0.0, 1.0, 4.0],
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct EvalSection {
    /// Overrides the default 0.5:0.05:0.95 grid when present.
    pub thresholds: Option<Vec<f64>>,
}

impl FileConfig {
    /// Builds the refinement config; D and N come from the dataset.
    pub fn refine_config(&self, feature_dim: usize, num_classes: usize) -> RefineConfig {
        RefineConfig {
            eta_max: self.refine.eta_max,
            beta: self.refine.beta,
            generator: self.refine.generator,
            sample_fraction: self.refine.sample_fraction,
            epochs_per_iter: self.refine.epochs_per_iter,
            lr: self.refine.lr,
            lr_decay: self.refine.lr_decay,
            plateau_patience: self.refine.plateau_patience,
            seed: self.refine.seed,
            warm_start: self.refine.warm_start,
            postproc: self.postproc.to_core(),
            model: ModelConfig {
                input_dim: feature_dim,
                num_classes,
                num_layers: self.model.l,
                attention_variant: self.model.attention_variant,
                init_seed: self.refine.seed,
            },
        }
    }
}

const SECTION_KEYS: &[(&str, &[&str])] = &[
    (
        "synth",
        &[
            "n",
            "d",
            "video_count",
            "t_range",
            "segments_per_video_range",
            "segment_len_range",
            "noise_sigma",
            "prototype_scale",
            "seed",
            "val_fraction",
            "test_fraction",
        ],
    ),
    ("data", &["dir"]),
    ("model", &["l", "attention_variant"]),
    (
        "postproc",
        &["alpha_a", "alpha_c", "top_k", "gap_tolerance", "inflation"],
    ),
    (
        "refine",
        &[
            "eta_max",
            "beta",
            "generator",
            "sample_fraction",
            "epochs_per_iter",
            "lr",
            "lr_decay",
            "plateau_patience",
            "seed",
            "warm_start",
            "generators",
            "betas",
        ],
    ),
    ("eval", &["thresholds"]),
];

const GENERATOR_KEYS: &[&str] = &["kind", "threshold", "ratio"];

fn check_keys(value: &Value, allowed: &[&str], path: &str) -> Result<(), CoreError> {
    if let Value::Object(map) = value {
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(CoreError::Config(format!("unknown key {path}.{key}")));
            }
        }
    }
    Ok(())
}

/// Parses and validates a config document, rejecting unknown keys with the
/// full key path.
pub fn parse_config(text: &str) -> Result<FileConfig, CoreError> {
    let value: Value = serde_json::from_str(text)?;
    let obj = value
        .as_object()
        .ok_or_else(|| CoreError::Config("config root must be a JSON object".into()))?;
    let section_names: Vec<&str> = SECTION_KEYS.iter().map(|(n, _)| *n).collect();
    for key in obj.keys() {
        if !section_names.contains(&key.as_str()) {
            return Err(CoreError::Config(format!("unknown key {key}")));
        }
    }
    for (name, allowed) in SECTION_KEYS {
        if let Some(section) = obj.get(*name) {
            check_keys(section, allowed, name)?;
            if *name == "refine" {
                if let Some(g) = section.get("generator") {
                    check_keys(g, GENERATOR_KEYS, "refine.generator")?;
                }
                if let Some(Value::Array(gens)) = section.get("generators") {
                    for (i, g) in gens.iter().enumerate() {
                        check_keys(g, GENERATOR_KEYS, &format!("refine.generators[{i}]"))?;
                    }
                }
            }
        }
    }
    Ok(serde_json::from_value(value)?)
}
