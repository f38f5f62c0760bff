//! Forward and backward kernels for the handful of operations the model
//! graph is built from. Each backward is hand-derived and checked against
//! central finite differences in the test suite.

use super::{Matrix, Param};
use crate::error::CoreError;

/// Clamp floor applied inside every log so the loss stays finite.
pub const LOG_EPS: f64 = 1e-12;

/// out[t] = x[t]·w + b
pub fn affine_forward(x: &Matrix, w: &Param, b: &Param) -> Result<Matrix, CoreError> {
    let (din, dout) = (w.value.rows(), w.value.cols());
    if x.cols() != din || b.value.rows() != 1 || b.value.cols() != dout {
        return Err(CoreError::Shape(format!(
            "affine: x is {}x{}, w is {}x{}, b is {}x{}",
            x.rows(),
            x.cols(),
            din,
            dout,
            b.value.rows(),
            b.value.cols()
        )));
    }
    let mut out = Matrix::zeros(x.rows(), dout);
    for t in 0..x.rows() {
        let xr = x.row(t);
        let or = out.row_mut(t);
        or.copy_from_slice(b.value.row(0));
        for (i, &xi) in xr.iter().enumerate() {
            let wr = w.value.row(i);
            for j in 0..dout {
                or[j] += xi * wr[j];
            }
        }
    }
    Ok(out)
}

/// Accumulates dL/dw and dL/db into the params' grads and returns dL/dx.
pub fn affine_backward(x: &Matrix, w: &mut Param, b: &mut Param, dout: &Matrix) -> Matrix {
    let (din, dcols) = (w.value.rows(), w.value.cols());
    debug_assert_eq!(dout.cols(), dcols);
    debug_assert_eq!(x.cols(), din);
    let mut dx = Matrix::zeros(x.rows(), din);
    for t in 0..x.rows() {
        let gr = dout.row(t);
        let xr = x.row(t);
        for j in 0..dcols {
            b.grad.data_mut()[j] += gr[j];
        }
        for i in 0..din {
            let wg = w.grad.row_mut(i);
            for j in 0..dcols {
                wg[j] += xr[i] * gr[j];
            }
        }
        let dxr = dx.row_mut(t);
        for i in 0..din {
            let wr = w.value.row(i);
            let mut acc = 0.0;
            for j in 0..dcols {
                acc += wr[j] * gr[j];
            }
            dxr[i] = acc;
        }
    }
    dx
}

/// Elementwise max(0, x).
pub fn relu_forward(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    out.data_mut().iter_mut().for_each(|v| {
        if *v < 0.0 {
            *v = 0.0;
        }
    });
    out
}

/// Passes the upstream gradient where x > 0.
pub fn relu_backward(x: &Matrix, dout: &Matrix) -> Matrix {
    debug_assert!(x.same_shape(dout));
    let mut dx = dout.clone();
    for (d, &xv) in dx.data_mut().iter_mut().zip(x.data()) {
        if xv <= 0.0 {
            *d = 0.0;
        }
    }
    dx
}

/// Row-wise softmax with max-subtraction.
pub fn softmax_rows(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for t in 0..out.rows() {
        softmax_in_place(out.row_mut(t));
    }
    out
}

/// Backward of a row-wise softmax: dx = s ⊙ (dout − ⟨dout, s⟩).
pub fn softmax_rows_backward(s: &Matrix, dout: &Matrix) -> Matrix {
    debug_assert!(s.same_shape(dout));
    let mut dx = Matrix::zeros(s.rows(), s.cols());
    for t in 0..s.rows() {
        softmax_backward_slice(s.row(t), dout.row(t), dx.row_mut(t));
    }
    dx
}

/// Softmax over a single vector (the time dimension).
pub fn softmax_column(x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    softmax_in_place(&mut out);
    out
}

pub fn softmax_column_backward(s: &[f64], dout: &[f64]) -> Vec<f64> {
    let mut dx = vec![0.0; s.len()];
    softmax_backward_slice(s, dout, &mut dx);
    dx
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

fn softmax_backward_slice(s: &[f64], dout: &[f64], dx: &mut [f64]) {
    let dot: f64 = s.iter().zip(dout).map(|(a, b)| a * b).sum();
    for i in 0..s.len() {
        dx[i] = s[i] * (dout[i] - dot);
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// −Σ yₙ log(pₙ), with p clamped at LOG_EPS. y must be a distribution.
pub fn cross_entropy(p: &[f64], y: &[f64]) -> Result<f64, CoreError> {
    if p.len() != y.len() {
        return Err(CoreError::Shape(format!(
            "cross_entropy: p has {} entries, y has {}",
            p.len(),
            y.len()
        )));
    }
    let ysum: f64 = y.iter().sum();
    if (ysum - 1.0).abs() > 1e-6 {
        return Err(CoreError::Invalid(format!(
            "cross_entropy target not normalized: sums to {ysum}"
        )));
    }
    Ok(y.iter()
        .zip(p)
        .map(|(&yn, &pn)| if yn == 0.0 { 0.0 } else { -yn * pn.max(LOG_EPS).ln() })
        .sum())
}

/// dL/dp for the clamped cross entropy above.
pub fn cross_entropy_backward(p: &[f64], y: &[f64], dp: &mut [f64]) {
    for i in 0..p.len() {
        if y[i] != 0.0 && p[i] > LOG_EPS {
            dp[i] += -y[i] / p[i];
        }
    }
}

/// Standard Adam update with bias correction, applied in place.
#[allow(clippy::too_many_arguments)]
pub fn adam_step(
    params: &mut [&mut Param],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
) {
    assert!(t >= 1, "adam step count starts at 1");
    let bc1 = 1.0 - beta1.powi(t as i32);
    let bc2 = 1.0 - beta2.powi(t as i32);
    for p in params.iter_mut() {
        let n = p.value.data().len();
        for i in 0..n {
            let g = p.grad.data()[i];
            let m = beta1 * p.adam_m.data()[i] + (1.0 - beta1) * g;
            let v = beta2 * p.adam_v.data()[i] + (1.0 - beta2) * g * g;
            p.adam_m.data_mut()[i] = m;
            p.adam_v.data_mut()[i] = v;
            let mhat = m / bc1;
            let vhat = v / bc2;
            p.value.data_mut()[i] -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
}
