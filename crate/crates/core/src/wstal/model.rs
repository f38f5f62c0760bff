//! The WSTAL base model: a snippet-level classification head and a
//! background-foreground attention head over the same features, combined by
//! soft attention into a video-label prediction, plus the joint loss that
//! mixes the video cross entropy with a class-weighted snippet-level pseudo
//! ground truth cross entropy.

use rand::Rng;

use super::config::{AttentionVariant, ModelConfig, BACKGROUND, FOREGROUND};
use crate::error::CoreError;
use crate::numcore::{
    affine_backward, affine_forward, cross_entropy, cross_entropy_backward, relu_backward,
    relu_forward, sigmoid, softmax_column, softmax_column_backward, softmax_rows,
    softmax_rows_backward, Matrix, Param, LOG_EPS,
};
use crate::pseudogen::PseudoLabels;
use crate::seeding::rng_from;

#[derive(Debug, Clone)]
pub struct Layer {
    pub w: Param,
    pub b: Param,
}

#[derive(Debug, Clone)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub class_head: Vec<Layer>,
    pub attention_head: Vec<Layer>,
}

/// All per-video model outputs.
#[derive(Debug, Clone)]
pub struct ForwardMaps {
    /// Pre-softmax class activation map, T×N.
    pub class_logits: Matrix,
    /// Raw attention head output, T×2 (or T×1 for the scalar variant).
    pub attention_logits: Matrix,
    /// Per-snippet class distribution, T×N.
    pub class_probs: Matrix,
    /// Per-snippet background/foreground distribution, T×2.
    pub attention_bf: Matrix,
    /// Over-time softmax of the foreground attention column, length T.
    pub attention_time: Vec<f64>,
    /// Predicted video label distribution, length N.
    pub video_probs: Vec<f64>,
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
struct HeadCache {
    /// Input to each layer.
    inputs: Vec<Matrix>,
    /// Pre-ReLU output of each non-final layer.
    pre_activations: Vec<Matrix>,
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub maps: ForwardMaps,
    class_cache: HeadCache,
    attention_cache: HeadCache,
}

fn init_head(
    rng: &mut impl Rng,
    prefix: &str,
    input_dims: &[usize],
    out_dim: usize,
) -> Vec<Layer> {
    let mut layers = Vec::with_capacity(input_dims.len());
    for (l, &din) in input_dims.iter().enumerate() {
        let dout = if l + 1 < input_dims.len() {
            input_dims[l + 1]
        } else {
            out_dim
        };
        let bound = (6.0 / (din + dout) as f64).sqrt();
        let data: Vec<f64> = (0..din * dout).map(|_| rng.gen_range(-bound..=bound)).collect();
        let w = Matrix::from_vec(din, dout, data).expect("init shape");
        layers.push(Layer {
            w: Param::new(format!("{prefix}.{l}.w"), w),
            b: Param::new(format!("{prefix}.{l}.b"), Matrix::zeros(1, dout)),
        });
    }
    layers
}

pub fn init_model(cfg: &ModelConfig) -> Result<ModelParams, CoreError> {
    let dims = cfg.layer_input_dims()?;
    let mut rng = rng_from(cfg.init_seed);
    let class_head = init_head(&mut rng, "cls", &dims, cfg.num_classes);
    let attention_head = init_head(&mut rng, "att", &dims, cfg.attention_out_dim());
    Ok(ModelParams {
        config: *cfg,
        class_head,
        attention_head,
    })
}

fn head_forward(layers: &[Layer], features: &Matrix) -> Result<(Matrix, HeadCache), CoreError> {
    let mut inputs = Vec::with_capacity(layers.len());
    let mut pre_activations = Vec::with_capacity(layers.len().saturating_sub(1));
    let mut x = features.clone();
    for (l, layer) in layers.iter().enumerate() {
        let z = affine_forward(&x, &layer.w, &layer.b)?;
        inputs.push(x);
        if l + 1 < layers.len() {
            let h = relu_forward(&z);
            pre_activations.push(z);
            x = h;
        } else {
            x = z;
        }
    }
    Ok((x, HeadCache { inputs, pre_activations }))
}

fn head_backward(layers: &mut [Layer], cache: &HeadCache, d_out: Matrix) {
    let mut dz = d_out;
    for l in (0..layers.len()).rev() {
        let dx = affine_backward(&cache.inputs[l], &mut layers[l].w, &mut layers[l].b, &dz);
        if l > 0 {
            dz = relu_backward(&cache.pre_activations[l - 1], &dx);
        }
    }
}

impl ModelParams {
    pub fn forward(&self, features: &Matrix) -> Result<ForwardPass, CoreError> {
        if features.cols() != self.config.input_dim || features.rows() == 0 {
            return Err(CoreError::Shape(format!(
                "features are {}x{}, model expects T>=1 x {}",
                features.rows(),
                features.cols(),
                self.config.input_dim
            )));
        }
        let (class_logits, class_cache) = head_forward(&self.class_head, features)?;
        let (attention_logits, attention_cache) = head_forward(&self.attention_head, features)?;
        let t = features.rows();

        let class_probs = softmax_rows(&class_logits);
        let attention_bf = match self.config.attention_variant {
            AttentionVariant::TwoLogit => softmax_rows(&attention_logits),
            AttentionVariant::ScalarSigmoid => {
                let mut bf = Matrix::zeros(t, 2);
                for i in 0..t {
                    let fg = sigmoid(attention_logits.get(i, 0));
                    bf.set(i, BACKGROUND, 1.0 - fg);
                    bf.set(i, FOREGROUND, fg);
                }
                bf
            }
        };
        // softmax over time of the (already normalized) foreground column
        let attention_time = softmax_column(&attention_bf.column(FOREGROUND));
        let n = self.config.num_classes;
        let mut video_probs = vec![0.0; n];
        for snip in 0..t {
            let at = attention_time[snip];
            let row = class_probs.row(snip);
            for c in 0..n {
                video_probs[c] += at * row[c];
            }
        }
        Ok(ForwardPass {
            maps: ForwardMaps {
                class_logits,
                attention_logits,
                class_probs,
                attention_bf,
                attention_time,
                video_probs,
            },
            class_cache,
            attention_cache,
        })
    }

    /// Joint loss value only, without touching gradients. Used for
    /// validation and for finite-difference checks.
    pub fn loss_value(
        maps: &ForwardMaps,
        video_label: &[f64],
        pseudo: Option<&PseudoLabels>,
        beta: f64,
    ) -> Result<f64, CoreError> {
        if beta < 0.0 {
            return Err(CoreError::Config(format!("beta must be >= 0, got {beta}")));
        }
        let video_ce = cross_entropy(&maps.video_probs, video_label)?;
        let pseudo_term = match pseudo {
            None => 0.0,
            Some(p) => pseudo_loss_term(maps, p)?,
        };
        Ok(video_ce + beta * pseudo_term)
    }

    /// Computes the joint loss and accumulates parameter gradients.
    /// Call `zero_grads` first when a fresh gradient is wanted.
    pub fn loss_and_grad(
        &mut self,
        pass: &ForwardPass,
        video_label: &[f64],
        pseudo: Option<&PseudoLabels>,
        beta: f64,
    ) -> Result<f64, CoreError> {
        if beta < 0.0 {
            return Err(CoreError::Config(format!("beta must be >= 0, got {beta}")));
        }
        let maps = &pass.maps;
        let t = maps.attention_time.len();
        let n = self.config.num_classes;

        let video_ce = cross_entropy(&maps.video_probs, video_label)?;
        let mut d_video = vec![0.0; n];
        cross_entropy_backward(&maps.video_probs, video_label, &mut d_video);

        // ŷ = Σ_t attention_time[t] · class_probs[t]
        let mut d_attention_time = vec![0.0; t];
        let mut d_class_probs = Matrix::zeros(t, n);
        for snip in 0..t {
            let row = maps.class_probs.row(snip);
            let mut acc = 0.0;
            let d_row = d_class_probs.row_mut(snip);
            for c in 0..n {
                acc += d_video[c] * row[c];
                d_row[c] = maps.attention_time[snip] * d_video[c];
            }
            d_attention_time[snip] = acc;
        }

        // back through the over-time softmax into the foreground column
        let d_fg_column = softmax_column_backward(&maps.attention_time, &d_attention_time);
        let mut d_attention_bf = Matrix::zeros(t, 2);
        for snip in 0..t {
            d_attention_bf.set(snip, FOREGROUND, d_fg_column[snip]);
        }

        // pseudo ground truth term on the per-snippet bf distribution
        let mut pseudo_term = 0.0;
        if let Some(p) = pseudo {
            pseudo_term = accumulate_pseudo(maps, p, beta, &mut d_attention_bf)?;
        }

        // back through each head
        let d_class_logits = softmax_rows_backward(&maps.class_probs, &d_class_probs);
        head_backward(&mut self.class_head, &pass.class_cache, d_class_logits);

        let d_attention_logits = match self.config.attention_variant {
            AttentionVariant::TwoLogit => {
                softmax_rows_backward(&maps.attention_bf, &d_attention_bf)
            }
            AttentionVariant::ScalarSigmoid => {
                let mut d = Matrix::zeros(t, 1);
                for snip in 0..t {
                    let fg = maps.attention_bf.get(snip, FOREGROUND);
                    let upstream =
                        d_attention_bf.get(snip, FOREGROUND) - d_attention_bf.get(snip, BACKGROUND);
                    d.set(snip, 0, upstream * fg * (1.0 - fg));
                }
                d
            }
        };
        head_backward(&mut self.attention_head, &pass.attention_cache, d_attention_logits);

        Ok(video_ce + beta * pseudo_term)
    }

    pub fn zero_grads(&mut self) {
        for layer in self.class_head.iter_mut().chain(self.attention_head.iter_mut()) {
            layer.w.zero_grad();
            layer.b.zero_grad();
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.class_head
            .iter_mut()
            .chain(self.attention_head.iter_mut())
            .flat_map(|l| [&mut l.w, &mut l.b])
            .collect()
    }

    pub fn params(&self) -> Vec<&Param> {
        self.class_head
            .iter()
            .chain(self.attention_head.iter())
            .flat_map(|l| [&l.w, &l.b])
            .collect()
    }
}

/// Per-video inverse-frequency class weights over the sampled snippet set:
/// w_bg = |M| / (2·n_bg), w_fg = |M| / (2·n_fg). A side absent from the
/// sample contributes nothing.
fn pseudo_weights(labels: &PseudoLabels) -> (usize, f64, f64) {
    let m: usize = labels.sample_mask.iter().filter(|&&s| s).count();
    let n_fg = labels
        .sample_mask
        .iter()
        .zip(&labels.foreground)
        .filter(|&(&s, &fg)| s && fg)
        .count();
    let n_bg = m - n_fg;
    let w_bg = if n_bg > 0 { m as f64 / (2.0 * n_bg as f64) } else { 0.0 };
    let w_fg = if n_fg > 0 { m as f64 / (2.0 * n_fg as f64) } else { 0.0 };
    (m, w_bg, w_fg)
}

fn check_pseudo_len(maps: &ForwardMaps, labels: &PseudoLabels) -> Result<(), CoreError> {
    let t = maps.attention_time.len();
    if labels.foreground.len() != t || labels.sample_mask.len() != t {
        return Err(CoreError::Shape(format!(
            "pseudo labels have length {} (mask {}), video has T={}",
            labels.foreground.len(),
            labels.sample_mask.len(),
            t
        )));
    }
    Ok(())
}

/// (1/|M|)·Σ_{t∈M} w_{g(t)}·CE(attention_bf[t], onehot(g(t)))
fn pseudo_loss_term(maps: &ForwardMaps, labels: &PseudoLabels) -> Result<f64, CoreError> {
    check_pseudo_len(maps, labels)?;
    let (m, w_bg, w_fg) = pseudo_weights(labels);
    if m == 0 {
        return Ok(0.0);
    }
    let mut term = 0.0;
    for (snip, (&sampled, &fg)) in labels.sample_mask.iter().zip(&labels.foreground).enumerate() {
        if !sampled {
            continue;
        }
        let (col, w) = if fg { (FOREGROUND, w_fg) } else { (BACKGROUND, w_bg) };
        let p = maps.attention_bf.get(snip, col).max(LOG_EPS);
        term -= w * p.ln();
    }
    Ok(term / m as f64)
}

fn accumulate_pseudo(
    maps: &ForwardMaps,
    labels: &PseudoLabels,
    beta: f64,
    d_attention_bf: &mut Matrix,
) -> Result<f64, CoreError> {
    check_pseudo_len(maps, labels)?;
    let (m, w_bg, w_fg) = pseudo_weights(labels);
    if m == 0 {
        return Ok(0.0);
    }
    let inv_m = 1.0 / m as f64;
    let mut term = 0.0;
    for (snip, (&sampled, &fg)) in labels.sample_mask.iter().zip(&labels.foreground).enumerate() {
        if !sampled {
            continue;
        }
        let (col, w) = if fg { (FOREGROUND, w_fg) } else { (BACKGROUND, w_bg) };
        let p = maps.attention_bf.get(snip, col);
        term -= w * p.max(LOG_EPS).ln();
        if p > LOG_EPS {
            let cur = d_attention_bf.get(snip, col);
            d_attention_bf.set(snip, col, cur - beta * inv_m * w / p);
        }
    }
    Ok(term * inv_m)
}
