//! The WSTAL base model and its joint loss.

mod checkpoint;
mod config;
mod model;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::{AttentionVariant, ModelConfig, BACKGROUND, FOREGROUND};
pub use model::{init_model, ForwardMaps, ForwardPass, Layer, ModelParams};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::Matrix;
    use crate::pseudogen::PseudoLabels;
    use crate::seeding::rng_from;
    use rand::Rng;

    fn cfg(d: usize, n: usize, seed: u64) -> ModelConfig {
        ModelConfig {
            input_dim: d,
            num_classes: n,
            num_layers: 2,
            attention_variant: AttentionVariant::TwoLogit,
            init_seed: seed,
        }
    }

    fn random_features(t: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = rng_from(seed);
        let data = (0..t * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Matrix::from_vec(t, d, data).unwrap()
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let a = init_model(&cfg(8, 3, 5)).unwrap();
        let b = init_model(&cfg(8, 3, 5)).unwrap();
        for (pa, pb) in a.params().iter().zip(b.params()) {
            assert_eq!(pa.value, pb.value);
            if pa.name.ends_with(".b") {
                assert!(pa.value.data().iter().all(|&x| x == 0.0));
            }
        }
    }

    #[test]
    fn init_weights_within_xavier_bound() {
        for seed in 0..100 {
            let d = 4 + (seed as usize % 29);
            let n = 2 + (seed as usize % 5);
            let params = init_model(&cfg(d, n, seed)).unwrap();
            for layer in params.class_head.iter().chain(&params.attention_head) {
                let (din, dout) = (layer.w.value.rows(), layer.w.value.cols());
                let bound = (6.0 / (din + dout) as f64).sqrt();
                for &v in layer.w.value.data() {
                    assert!(v.abs() <= bound);
                }
            }
        }
    }

    #[test]
    fn forward_single_snippet() {
        let params = init_model(&cfg(8, 3, 1)).unwrap();
        let pass = params.forward(&random_features(1, 8, 2)).unwrap();
        assert_eq!(pass.maps.attention_time, vec![1.0]);
        for (a, b) in pass.maps.video_probs.iter().zip(pass.maps.class_probs.row(0)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn equal_attention_logits_give_uniform_attention() {
        // zero all attention weights so both logits are identical for every snippet
        let mut params = init_model(&cfg(8, 3, 1)).unwrap();
        for layer in &mut params.attention_head {
            layer.w.value.fill(0.0);
            layer.b.value.fill(0.0);
        }
        let t = 6;
        let pass = params.forward(&random_features(t, 8, 3)).unwrap();
        for snip in 0..t {
            assert!((pass.maps.attention_bf.get(snip, 0) - 0.5).abs() < 1e-12);
            assert!((pass.maps.attention_time[snip] - 1.0 / t as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_invariants_hold_on_random_draws() {
        for seed in 0..50 {
            let variant = if seed % 2 == 0 {
                AttentionVariant::TwoLogit
            } else {
                AttentionVariant::ScalarSigmoid
            };
            let mut c = cfg(8, 4, seed);
            c.attention_variant = variant;
            let params = init_model(&c).unwrap();
            let t = 1 + (seed as usize % 9);
            let maps = params.forward(&random_features(t, 8, seed + 100)).unwrap().maps;
            for snip in 0..t {
                let cp: f64 = maps.class_probs.row(snip).iter().sum();
                let bf: f64 = maps.attention_bf.row(snip).iter().sum();
                assert!((cp - 1.0).abs() < 1e-9);
                assert!((bf - 1.0).abs() < 1e-9);
            }
            let at: f64 = maps.attention_time.iter().sum();
            let yp: f64 = maps.video_probs.iter().sum();
            assert!((at - 1.0).abs() < 1e-9);
            assert!((yp - 1.0).abs() < 1e-9);
            assert!(maps.video_probs.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn scalar_attention_sigmoid_behavior() {
        let mut c = cfg(8, 3, 2);
        c.attention_variant = AttentionVariant::ScalarSigmoid;
        let mut params = init_model(&c).unwrap();
        // zero logits -> foreground prob exactly 0.5
        for layer in &mut params.attention_head {
            layer.w.value.fill(0.0);
            layer.b.value.fill(0.0);
        }
        let pass = params.forward(&random_features(3, 8, 4)).unwrap();
        for snip in 0..3 {
            assert!((pass.maps.attention_bf.get(snip, FOREGROUND) - 0.5).abs() < 1e-12);
        }
        // large positive bias on the last layer -> saturation
        params.attention_head.last_mut().unwrap().b.value.fill(20.0);
        let pass = params.forward(&random_features(3, 8, 4)).unwrap();
        for snip in 0..3 {
            let fg = pass.maps.attention_bf.get(snip, FOREGROUND);
            assert!((fg - 1.0).abs() < 1e-8);
            let row_sum: f64 = pass.maps.attention_bf.row(snip).iter().sum();
            assert!((row_sum - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn beta_zero_equals_video_ce_bit_exactly() {
        let params = init_model(&cfg(8, 3, 7)).unwrap();
        let pass = params.forward(&random_features(5, 8, 8)).unwrap();
        let y = vec![0.0, 1.0, 0.0];
        let pseudo = PseudoLabels {
            video_id: "v".into(),
            foreground: vec![true, false, true, true, false],
            sample_mask: vec![true; 5],
        };
        let bare = ModelParams::loss_value(&pass.maps, &y, None, 0.0).unwrap();
        let with = ModelParams::loss_value(&pass.maps, &y, Some(&pseudo), 0.0).unwrap();
        assert_eq!(bare, with);
    }

    #[test]
    fn loss_is_affine_in_beta() {
        let params = init_model(&cfg(8, 3, 9)).unwrap();
        let pass = params.forward(&random_features(7, 8, 10)).unwrap();
        let y = vec![1.0, 0.0, 0.0];
        let pseudo = PseudoLabels {
            video_id: "v".into(),
            foreground: vec![true, false, true, false, true, false, true],
            sample_mask: vec![true, true, false, true, true, true, false],
        };
        let at = |beta: f64| ModelParams::loss_value(&pass.maps, &y, Some(&pseudo), beta).unwrap();
        let l0 = at(0.0);
        let l1 = at(1.0);
        for a in [0.5, 2.0, 4.0, 16.0] {
            assert!((at(a) - l0 - a * (l1 - l0)).abs() < 1e-9);
        }
    }

    #[test]
    fn saturated_matching_pseudo_gives_near_zero_term() {
        let mut params = init_model(&cfg(8, 2, 11)).unwrap();
        // huge foreground bias saturates attention_bf toward foreground
        params.attention_head.last_mut().unwrap().b.value.row_mut(0)[FOREGROUND] = 30.0;
        let pass = params.forward(&random_features(4, 8, 12)).unwrap();
        let pseudo = PseudoLabels {
            video_id: "v".into(),
            foreground: vec![true; 4],
            sample_mask: vec![true; 4],
        };
        let y = vec![1.0, 0.0];
        let l0 = ModelParams::loss_value(&pass.maps, &y, None, 0.0).unwrap();
        let l1 = ModelParams::loss_value(&pass.maps, &y, Some(&pseudo), 1.0).unwrap();
        assert!((l1 - l0).abs() < 1e-8, "pseudo term was {}", l1 - l0);
    }

    #[test]
    fn class_permutation_permutes_video_probs() {
        let params = init_model(&cfg(8, 3, 13)).unwrap();
        let features = random_features(6, 8, 14);
        let base = params.forward(&features).unwrap().maps.video_probs;

        // permute the output columns of the last classifier layer: 0->2, 1->0, 2->1
        let perm = [2usize, 0, 1];
        let mut permuted = params.clone();
        let last = permuted.class_head.last_mut().unwrap();
        let src_w = last.w.value.clone();
        let src_b = last.b.value.clone();
        for i in 0..src_w.rows() {
            for c in 0..3 {
                last.w.value.set(i, perm[c], src_w.get(i, c));
            }
        }
        for c in 0..3 {
            last.b.value.set(0, perm[c], src_b.get(0, c));
        }
        let got = permuted.forward(&features).unwrap().maps.video_probs;
        for c in 0..3 {
            assert!((got[perm[c]] - base[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_beta_is_config_error() {
        let params = init_model(&cfg(8, 2, 1)).unwrap();
        let pass = params.forward(&random_features(2, 8, 1)).unwrap();
        assert!(ModelParams::loss_value(&pass.maps, &[1.0, 0.0], None, -1.0).is_err());
    }
}
