use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::train::train_one_iteration;
use super::{IterationReport, PseudoStats, RefineConfig};
use crate::dataio::{LoadedDataset, Split, VideoRecord};
use crate::error::CoreError;
use crate::evalkit::{default_thresholds, evaluate_on};
use crate::pseudogen::{
    class_activation_default_threshold, gen_attention, gen_class_activation,
    gen_distribution_aware, gen_segment_prediction, gen_uniform, sample_pseudo, GeneratorKind,
    PseudoDumpRecord, PseudoLabels,
};
use crate::segpred::{predict_segments, SegmentPrediction};
use crate::seeding::derive_video_seed;
use crate::wstal::{init_model, save_checkpoint, ModelParams};

/// Average foreground coverage over videos with ground truth, for the
/// distribution-aware baseline generator.
fn gt_foreground_ratio(videos: &[&VideoRecord]) -> Option<f64> {
    let with_gt: Vec<_> = videos.iter().filter(|v| !v.gt_segments.is_empty()).collect();
    if with_gt.is_empty() {
        return None;
    }
    let sum: f64 = with_gt
        .iter()
        .map(|v| {
            let covered = gt_coverage(v).iter().filter(|&&c| c).count();
            covered as f64 / v.num_snippets as f64
        })
        .sum();
    Some(sum / with_gt.len() as f64)
}

fn gt_coverage(video: &VideoRecord) -> Vec<bool> {
    let mut covered = vec![false; video.num_snippets];
    for g in &video.gt_segments {
        for c in &mut covered[g.start..=g.end] {
            *c = true;
        }
    }
    covered
}

/// Generates pseudo labels for every train+val video from the given model,
/// sampling the supervision mask once. Deterministic: per-video seeds are
/// derived from the root seed, the iteration, and the video id.
pub fn generate_pseudo_labels(
    dataset: &LoadedDataset,
    params: &ModelParams,
    cfg: &RefineConfig,
    eta: usize,
) -> Result<BTreeMap<String, PseudoLabels>, CoreError> {
    let videos: Vec<&VideoRecord> = dataset
        .manifest
        .videos
        .iter()
        .filter(|v| {
            matches!(
                dataset.manifest.split.get(&v.id),
                Some(Split::Train) | Some(Split::Val)
            )
        })
        .collect();
    let ratio = match cfg.generator {
        GeneratorKind::DistributionAware { ratio } => Some(match ratio {
            Some(r) => r,
            None => gt_foreground_ratio(&videos).ok_or_else(|| {
                CoreError::Config(
                    "distribution-aware generator needs a ratio or ground truth".into(),
                )
            })?,
        }),
        _ => None,
    };
    let iter_seed = cfg.seed ^ eta as u64;

    let labeled: Result<Vec<(String, PseudoLabels)>, CoreError> = videos
        .par_iter()
        .map(|video| {
            let t = video.num_snippets;
            let foreground = match cfg.generator {
                GeneratorKind::UniformRandom => {
                    gen_uniform(t, derive_video_seed(iter_seed, "pseudo-uniform", &video.id))
                }
                GeneratorKind::DistributionAware { .. } => gen_distribution_aware(
                    t,
                    ratio.unwrap(),
                    derive_video_seed(iter_seed, "pseudo-dist", &video.id),
                ),
                GeneratorKind::ClassActivation { threshold } => {
                    let maps = params.forward(dataset.features_of(&video.id))?.maps;
                    let theta =
                        threshold.unwrap_or_else(|| class_activation_default_threshold(&maps));
                    gen_class_activation(&maps, theta)
                }
                GeneratorKind::Attention { threshold } => {
                    let maps = params.forward(dataset.features_of(&video.id))?.maps;
                    let theta = threshold.unwrap_or(1.0 / t as f64);
                    gen_attention(&maps, theta)
                }
                GeneratorKind::SegmentPrediction => {
                    let maps = params.forward(dataset.features_of(&video.id))?.maps;
                    let preds = predict_segments(&maps, &video.id, &cfg.postproc);
                    gen_segment_prediction(&preds, t)?
                }
            };
            let sample_mask = sample_pseudo(
                t,
                cfg.sample_fraction,
                derive_video_seed(iter_seed, "pseudo-sample", &video.id),
            );
            Ok((
                video.id.clone(),
                PseudoLabels {
                    video_id: video.id.clone(),
                    foreground,
                    sample_mask,
                },
            ))
        })
        .collect();
    Ok(labeled?.into_iter().collect())
}

fn pseudo_stats(
    dataset: &LoadedDataset,
    pseudo: &BTreeMap<String, PseudoLabels>,
) -> PseudoStats {
    let mut fg = 0usize;
    let mut total = 0usize;
    let mut agree = 0usize;
    let mut agree_total = 0usize;
    for (id, labels) in pseudo {
        fg += labels.foreground.iter().filter(|&&l| l).count();
        total += labels.foreground.len();
        if let Some(video) = dataset.manifest.video(id) {
            if !video.gt_segments.is_empty() {
                let covered = gt_coverage(video);
                agree += labels
                    .foreground
                    .iter()
                    .zip(&covered)
                    .filter(|&(&l, &c)| l == c)
                    .count();
                agree_total += covered.len();
            }
        }
    }
    PseudoStats {
        foreground_fraction: fg as f64 / total.max(1) as f64,
        gt_agreement: (agree_total > 0).then(|| agree as f64 / agree_total as f64),
    }
}

/// Predictions over the given split, merged in video-id order.
pub fn predict_split(
    dataset: &LoadedDataset,
    params: &ModelParams,
    cfg: &RefineConfig,
    split: Split,
) -> Result<Vec<SegmentPrediction>, CoreError> {
    let videos = dataset.manifest.videos_in(split);
    let per_video: Result<Vec<Vec<SegmentPrediction>>, CoreError> = videos
        .par_iter()
        .map(|v| {
            let maps = params.forward(dataset.features_of(&v.id))?.maps;
            Ok(predict_segments(&maps, &v.id, &cfg.postproc))
        })
        .collect();
    Ok(per_video?.into_iter().flatten().collect())
}

/// Writes the run directory layout: config.json, per-iteration artifacts,
/// and summary.csv.
pub struct RunWriter {
    root: PathBuf,
}

impl RunWriter {
    pub fn new(root: &Path, cfg: &RefineConfig) -> Result<Self, CoreError> {
        fs::create_dir_all(root).map_err(|e| CoreError::io(root.display().to_string(), e))?;
        write_json(&root.join("config.json"), cfg)?;
        Ok(RunWriter { root: root.to_path_buf() })
    }

    fn iter_dir(&self, eta: usize) -> Result<PathBuf, CoreError> {
        let dir = self.root.join(format!("iter_{eta}"));
        fs::create_dir_all(&dir).map_err(|e| CoreError::io(dir.display().to_string(), e))?;
        Ok(dir)
    }

    pub fn write_iteration(
        &self,
        report: &IterationReport,
        params: &ModelParams,
        steps: u64,
        pseudo: Option<&BTreeMap<String, PseudoLabels>>,
        predictions: &[SegmentPrediction],
    ) -> Result<(), CoreError> {
        let dir = self.iter_dir(report.eta)?;
        save_checkpoint(&dir.join("checkpoint"), params, steps)?;
        write_json(&dir.join("report.json"), report)?;

        let mut pseudo_out = String::new();
        if let Some(labels) = pseudo {
            for l in labels.values() {
                pseudo_out.push_str(&serde_json::to_string(&PseudoDumpRecord::from(l))?);
                pseudo_out.push('\n');
            }
        }
        write_file(&dir.join("pseudo.jsonl"), pseudo_out.as_bytes())?;

        let mut pred_out = String::new();
        for p in predictions {
            pred_out.push_str(&serde_json::to_string(p)?);
            pred_out.push('\n');
        }
        write_file(&dir.join("predictions.jsonl"), pred_out.as_bytes())
    }

    pub fn write_summary(&self, reports: &[IterationReport]) -> Result<(), CoreError> {
        let mut csv = String::from("eta,val_loss,map_at_0.5,average_map\n");
        for r in reports {
            let map05 = r.eval.map_at(0.5).unwrap_or(f64::NAN);
            csv.push_str(&format!(
                "{},{:.6},{:.6},{:.6}\n",
                r.eta, r.val_loss, map05, r.eval.average_map
            ));
        }
        write_file(&self.root.join("summary.csv"), csv.as_bytes())
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CoreError> {
    let text = serde_json::to_string_pretty(value)?;
    write_file(path, text.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CoreError> {
    let mut f =
        fs::File::create(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    f.write_all(bytes)
        .map_err(|e| CoreError::io(path.display().to_string(), e))
}

/// The full iterative refinement process. Iteration 0 trains the base model
/// on weak labels only; each subsequent iteration generates pseudo ground
/// truth from the previous model and trains a freshly initialized model on
/// the joint loss. Evaluation runs on the test split (or on all videos when
/// no test split exists).
pub fn refine_loop(
    dataset: &LoadedDataset,
    cfg: &RefineConfig,
    out_dir: Option<&Path>,
) -> Result<(Vec<IterationReport>, ModelParams), CoreError> {
    cfg.validate()?;
    let writer = out_dir.map(|d| RunWriter::new(d, cfg)).transpose()?;
    let thresholds = default_thresholds();
    let eval_split_ids: Vec<&str> = {
        let test = dataset.manifest.videos_in(Split::Test);
        if test.is_empty() {
            dataset.manifest.videos.iter().map(|v| v.id.as_str()).collect()
        } else {
            test.iter().map(|v| v.id.as_str()).collect()
        }
    };

    let mut reports = Vec::with_capacity(cfg.eta_max + 1);
    let mut current: Option<ModelParams> = None;

    for eta in 0..=cfg.eta_max {
        let pseudo = match &current {
            None => None,
            Some(prev) => Some(generate_pseudo_labels(dataset, prev, cfg, eta)?),
        };

        let init = if cfg.warm_start && current.is_some() {
            current.clone().unwrap()
        } else {
            let mut model_cfg = cfg.model;
            model_cfg.init_seed = cfg.seed ^ eta as u64;
            init_model(&model_cfg)?
        };

        let outcome = train_one_iteration(dataset, init, pseudo.as_ref(), cfg, eta)?;

        let predictions = {
            let test = dataset.manifest.videos_in(Split::Test);
            let split = if test.is_empty() { Split::Train } else { Split::Test };
            let mut preds = predict_split(dataset, &outcome.params, cfg, split)?;
            if test.is_empty() {
                preds.extend(predict_split(dataset, &outcome.params, cfg, Split::Val)?);
            }
            preds
        };
        let eval = evaluate_on(&predictions, &dataset.manifest, &thresholds, Some(&eval_split_ids))?;

        let report = IterationReport {
            eta,
            best_epoch: outcome.best_epoch,
            train_loss: outcome.train_loss,
            val_loss: outcome.val_loss,
            eval,
            pseudo_stats: pseudo.as_ref().map(|p| pseudo_stats(dataset, p)),
        };
        if let Some(w) = &writer {
            w.write_iteration(&report, &outcome.params, outcome.steps, pseudo.as_ref(), &predictions)?;
        }
        reports.push(report);
        current = Some(outcome.params);
    }

    if let Some(w) = &writer {
        w.write_summary(&reports)?;
    }
    Ok((reports, current.expect("at least one iteration")))
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationCell {
    pub generator: GeneratorKind,
    pub beta: f64,
    pub best_avg_map: f64,
    pub best_eta: usize,
}

/// Runs `refine_loop` for every (generator, beta) pair and reports the best
/// average mAP over iterations per cell.
pub fn ablation_grid(
    dataset: &LoadedDataset,
    generators: &[GeneratorKind],
    betas: &[f64],
    cfg: &RefineConfig,
) -> Result<Vec<AblationCell>, CoreError> {
    let mut cells = Vec::with_capacity(generators.len() * betas.len());
    for &generator in generators {
        for &beta in betas {
            let cell_cfg = RefineConfig {
                generator,
                beta,
                ..cfg.clone()
            };
            let (reports, _) = refine_loop(dataset, &cell_cfg, None)?;
            let (best_eta, best_avg_map) = reports
                .iter()
                .map(|r| (r.eta, r.eval.average_map))
                .fold((0, f64::NEG_INFINITY), |acc, (eta, m)| {
                    if m > acc.1 {
                        (eta, m)
                    } else {
                        acc
                    }
                });
            cells.push(AblationCell {
                generator,
                beta,
                best_avg_map,
                best_eta,
            });
        }
    }
    Ok(cells)
}
