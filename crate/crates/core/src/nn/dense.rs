use rand::Rng;

use crate::error::{check_len, Result};
use crate::tensor::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
}

/// Fully connected layer `y = act(W x + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Values kept from the forward pass for backpropagation.
#[derive(Clone, Debug)]
pub struct DenseCache {
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Dense {
            weight: Matrix::zeros(output, input),
            bias: vec![0.0; output],
            activation,
        }
    }

    pub fn glorot<R: Rng + ?Sized>(
        input: usize,
        output: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        Dense {
            weight: Matrix::glorot(output, input, rng),
            bias: vec![0.0; output],
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    /// Zero-valued layer of the same shape, used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        Dense::zeros(self.input_dim(), self.output_dim(), self.activation)
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
        check_len("dense input", self.input_dim(), x.len())?;
        let mut y = vec![0.0; self.output_dim()];
        self.weight.affine(x, &self.bias, &mut y);
        if self.activation == Activation::Relu {
            for v in &mut y {
                *v = v.max(0.0);
            }
        }
        let cache = DenseCache {
            input: x.to_vec(),
            output: y.clone(),
        };
        Ok((y, cache))
    }

    /// Accumulates parameter gradients into `grad` and, when `dx` is given,
    /// adds the input gradient to it.
    pub fn backward(&self, cache: &DenseCache, dy: &[f64], grad: &mut Dense, dx: Option<&mut [f64]>) {
        let dz: Vec<f64> = match self.activation {
            Activation::Linear => dy.to_vec(),
            Activation::Relu => dy
                .iter()
                .zip(&cache.output)
                .map(|(&g, &y)| if y > 0.0 { g } else { 0.0 })
                .collect(),
        };
        grad.weight.add_outer(&dz, &cache.input);
        for (b, g) in grad.bias.iter_mut().zip(&dz) {
            *b += g;
        }
        if let Some(dx) = dx {
            self.weight.transpose_mul_acc(&dz, dx);
        }
    }

    pub fn tensors(&self) -> [&[f64]; 2] {
        [self.weight.as_slice(), &self.bias]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 2] {
        [self.weight.as_mut_slice(), &mut self.bias]
    }
}
