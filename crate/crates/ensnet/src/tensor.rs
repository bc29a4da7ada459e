//! Dense n-dimensional arrays of 64-bit floats with an optional
//! shape-congruent gradient buffer.
//!
//! Layouts are row-major. Feature maps are (batch, height, width, channels);
//! flat activations are (batch, features). The gradient buffer is allocated
//! lazily on first access so inference-only tensors stay cheap, but whenever
//! it exists it has exactly the shape of the values.

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
    grad: Vec<f64>, // empty until requested, then data.len()
}

impl Tensor {
    pub fn zeros(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Tensor {
            dims: dims.to_vec(),
            data: vec![0.0; n],
            grad: Vec::new(),
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<f64>) -> Self {
        assert_eq!(
            dims.iter().product::<usize>(),
            data.len(),
            "tensor data length {} does not match dims {:?}",
            data.len(),
            dims
        );
        Tensor {
            dims: dims.to_vec(),
            data,
            grad: Vec::new(),
        }
    }

    pub fn filled(dims: &[usize], value: f64) -> Self {
        let n = dims.iter().product();
        Tensor {
            dims: dims.to_vec(),
            data: vec![value; n],
            grad: Vec::new(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Gradient buffer; empty slice if it has never been touched.
    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    /// Gradient buffer, allocated to zeros on first use.
    pub fn grad_mut(&mut self) -> &mut [f64] {
        if self.grad.len() != self.data.len() {
            self.grad = vec![0.0; self.data.len()];
        }
        &mut self.grad
    }

    pub fn has_grad(&self) -> bool {
        self.grad.len() == self.data.len()
    }

    pub fn zero_grad(&mut self) {
        for g in self.grad.iter_mut() {
            *g = 0.0;
        }
    }

    /// Number of per-sample features: product of all dims after the batch dim.
    pub fn features(&self) -> usize {
        self.dims[1..].iter().product()
    }

    pub fn batch(&self) -> usize {
        self.dims[0]
    }

    /// Interpret as (batch, h, w, c); panics on other ranks.
    pub fn dims4(&self) -> (usize, usize, usize, usize) {
        assert_eq!(
            self.dims.len(),
            4,
            "expected a rank-4 tensor, got {:?}",
            self.dims
        );
        (self.dims[0], self.dims[1], self.dims[2], self.dims[3])
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grad_is_shape_congruent_once_allocated() {
        let mut t = Tensor::zeros(&[2, 3]);
        assert!(!t.has_grad());
        t.grad_mut()[4] = 1.5;
        assert!(t.has_grad());
        assert_eq!(t.grad().len(), t.len());
        t.zero_grad();
        assert!(t.grad().iter().all(|&g| g == 0.0));
    }

    #[test]
    #[should_panic]
    fn from_vec_checks_length() {
        let _ = Tensor::from_vec(&[2, 2], vec![1.0; 3]);
    }

    #[test]
    fn features_excludes_batch() {
        let t = Tensor::zeros(&[4, 5, 6, 3]);
        assert_eq!(t.features(), 90);
        assert_eq!(t.batch(), 4);
    }
}
