use super::Matrix;

/// A trainable tensor with its gradient and Adam moment buffers.
#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
    pub adam_m: Matrix,
    pub adam_v: Matrix,
}

impl Param {
    pub fn new(name: impl Into<String>, value: Matrix) -> Self {
        let grad = Matrix::zeros(value.rows(), value.cols());
        let adam_m = grad.clone();
        let adam_v = grad.clone();
        Param {
            name: name.into(),
            value,
            grad,
            adam_m,
            adam_v,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}
