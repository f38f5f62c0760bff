use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::RefineConfig;
use crate::dataio::{LoadedDataset, Split};
use crate::error::CoreError;
use crate::numcore::adam_step;
use crate::pseudogen::PseudoLabels;
use crate::seeding::{derive_seed, rng_from};
use crate::wstal::ModelParams;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub best_epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub steps: u64,
}

fn mean_loss(
    params: &ModelParams,
    dataset: &LoadedDataset,
    ids: &[&str],
    pseudo: Option<&BTreeMap<String, PseudoLabels>>,
    beta: f64,
) -> Result<f64, CoreError> {
    if ids.is_empty() {
        return Ok(f64::NAN);
    }
    let mut total = 0.0;
    for id in ids {
        let record = dataset.manifest.video(id).expect("known id");
        let pass = params.forward(dataset.features_of(id))?;
        let p = pseudo.and_then(|m| m.get(*id));
        total += ModelParams::loss_value(&pass.maps, &record.y, p, beta)?;
    }
    Ok(total / ids.len() as f64)
}

/// Trains for `epochs_per_iter` epochs over the train split, one Adam step
/// per video, and returns the parameter snapshot with the lowest validation
/// loss. The learning rate is multiplied by `lr_decay` whenever the best
/// validation loss has not improved for `plateau_patience` epochs. With no
/// validation videos the train loss stands in for selection.
pub fn train_one_iteration(
    dataset: &LoadedDataset,
    params_init: ModelParams,
    pseudo: Option<&BTreeMap<String, PseudoLabels>>,
    cfg: &RefineConfig,
    eta: usize,
) -> Result<TrainOutcome, CoreError> {
    let train_ids: Vec<&str> = dataset
        .manifest
        .videos_in(Split::Train)
        .iter()
        .map(|v| v.id.as_str())
        .collect();
    if train_ids.is_empty() {
        return Err(CoreError::Training("train split is empty".into()));
    }
    let val_ids: Vec<&str> = dataset
        .manifest
        .videos_in(Split::Val)
        .iter()
        .map(|v| v.id.as_str())
        .collect();
    let selection_ids: &[&str] = if val_ids.is_empty() { &train_ids } else { &val_ids };

    let beta = if pseudo.is_some() { cfg.beta } else { 0.0 };
    let mut params = params_init;

    if cfg.epochs_per_iter == 0 {
        let train_loss = mean_loss(&params, dataset, &train_ids, pseudo, beta)?;
        let val_loss = mean_loss(&params, dataset, selection_ids, pseudo, beta)?;
        return Ok(TrainOutcome {
            params,
            best_epoch: 0,
            train_loss,
            val_loss,
            steps: 0,
        });
    }

    let mut lr = cfg.lr;
    let mut step: u64 = 0;
    let mut best: Option<(f64, ModelParams, usize, f64)> = None;
    let mut epochs_since_best = 0usize;

    for epoch in 0..cfg.epochs_per_iter {
        let mut order = train_ids.clone();
        let shuffle_seed = derive_seed(cfg.seed, "epoch-shuffle", ((eta as u64) << 32) | epoch as u64);
        order.shuffle(&mut rng_from(shuffle_seed));

        let mut epoch_loss = 0.0;
        for id in &order {
            let record = dataset.manifest.video(id).expect("known id");
            let pass = params.forward(dataset.features_of(id))?;
            params.zero_grads();
            let p = pseudo.and_then(|m| m.get(*id));
            epoch_loss += params.loss_and_grad(&pass, &record.y, p, beta)?;
            step += 1;
            adam_step(&mut params.params_mut(), lr, ADAM_BETA1, ADAM_BETA2, ADAM_EPS, step);
        }
        let epoch_loss = epoch_loss / order.len() as f64;

        let val_loss = mean_loss(&params, dataset, selection_ids, pseudo, beta)?;
        let improved = best.as_ref().map_or(true, |(b, ..)| val_loss < *b);
        if improved {
            best = Some((val_loss, params.clone(), epoch + 1, epoch_loss));
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= cfg.plateau_patience {
                lr *= cfg.lr_decay;
                epochs_since_best = 0;
            }
        }
    }

    let (val_loss, best_params, best_epoch, train_loss) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        params: best_params,
        best_epoch,
        train_loss,
        val_loss,
        steps: step,
    })
}
