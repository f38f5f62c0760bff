//! Feature file format: raw little-endian f32, row-major T×D, no header.
//! Values are widened to f64 on load.

use std::fs;
use std::path::Path;

use crate::error::CoreError;
use crate::numcore::Matrix;

pub fn load_features(path: &Path, num_snippets: usize, dim: usize) -> Result<Matrix, CoreError> {
    let bytes = fs::read(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    let expected = 4 * num_snippets * dim;
    if bytes.len() != expected {
        return Err(CoreError::Format(format!(
            "feature file {}: {} bytes, expected {} (T={num_snippets}, D={dim})",
            path.display(),
            bytes.len(),
            expected
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Matrix::from_vec(num_snippets, dim, data)
}

pub fn save_features(path: &Path, features: &Matrix) -> Result<(), CoreError> {
    let mut bytes = Vec::with_capacity(4 * features.data().len());
    for &v in features.data() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| CoreError::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_bytes_load_as_zero_matrix() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.bin");
        fs::write(&path, vec![0u8; 4 * 3 * 2]).unwrap();
        let m = load_features(&path, 3, 2).unwrap();
        assert!(m.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn round_trip_within_f32_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.bin");
        let m = Matrix::from_rows(&[&[1.25, -3.5, 0.1], &[7.0, 2.0e-4, -9.75]]);
        save_features(&path, &m).unwrap();
        let back = load_features(&path, 2, 3).unwrap();
        for (a, b) in m.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= (*a as f32).abs() as f64 * 1e-7 + 1e-10);
        }
    }

    #[test]
    fn truncated_file_names_byte_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.bin");
        fs::write(&path, vec![0u8; 10]).unwrap();
        let err = load_features(&path, 3, 2).unwrap_err().to_string();
        assert!(err.contains("10") && err.contains("24"), "{err}");
    }
}
