use rand::seq::SliceRandom;

use super::manifest::{DatasetManifest, Split};
use crate::error::CoreError;
use crate::seeding::rng_from;

/// Assigns every video to exactly one split. Counts use floor for test and
/// val; the remainder is train. Deterministic given the seed.
pub fn split_dataset(
    manifest: &mut DatasetManifest,
    val_fraction: f64,
    test_fraction: f64,
    seed: u64,
) -> Result<(), CoreError> {
    if !(0.0..1.0).contains(&val_fraction)
        || !(0.0..1.0).contains(&test_fraction)
        || val_fraction + test_fraction >= 1.0
    {
        return Err(CoreError::Config(format!(
            "split fractions val={val_fraction}, test={test_fraction} out of range"
        )));
    }
    let mut ids: Vec<String> = manifest.videos.iter().map(|v| v.id.clone()).collect();
    ids.shuffle(&mut rng_from(seed));
    let n = ids.len();
    let n_test = (test_fraction * n as f64).floor() as usize;
    let n_val = (val_fraction * n as f64).floor() as usize;
    manifest.split.clear();
    for (i, id) in ids.into_iter().enumerate() {
        let s = if i < n_test {
            Split::Test
        } else if i < n_test + n_val {
            Split::Val
        } else {
            Split::Train
        };
        manifest.split.insert(id, s);
    }
    Ok(())
}
