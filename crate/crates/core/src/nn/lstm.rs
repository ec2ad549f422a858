use rand::Rng;

use super::ops::sigmoid;
use crate::error::{check_len, Result};
use crate::tensor::Matrix;

/// LSTM cell. The four gates are packed row-wise in the order
/// input, forget, output, candidate; every gate reads `concat(x, h_prev)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmCell {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    input_dim: usize,
    hidden: usize,
}

#[derive(Clone, Debug)]
pub struct LstmCache {
    z: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl LstmCell {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmCell {
            weight: Matrix::zeros(4 * hidden, input_dim + hidden),
            bias: vec![0.0; 4 * hidden],
            input_dim,
            hidden,
        }
    }

    /// Each gate block gets its own Glorot bound over (d + m) → m.
    pub fn glorot<R: Rng + ?Sized>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let mut cell = Self::zeros(input_dim, hidden);
        let bound = (6.0 / (input_dim + 2 * hidden) as f64).sqrt();
        for w in cell.weight.as_mut_slice() {
            *w = rng.gen_range(-bound..bound);
        }
        cell
    }

    pub fn from_parts(weight: Matrix, bias: Vec<f64>, input_dim: usize) -> Result<Self> {
        let hidden = weight.rows() / 4;
        check_len("lstm weight rows", 4 * hidden, weight.rows())?;
        check_len("lstm weight cols", input_dim + hidden, weight.cols())?;
        check_len("lstm bias", 4 * hidden, bias.len())?;
        Ok(LstmCell {
            weight,
            bias,
            input_dim,
            hidden,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim, self.hidden)
    }

    /// Bias slice of one gate (0 = input, 1 = forget, 2 = output, 3 = candidate).
    pub fn gate_bias_mut(&mut self, gate: usize) -> &mut [f64] {
        let m = self.hidden;
        &mut self.bias[gate * m..(gate + 1) * m]
    }

    pub fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<(Vec<f64>, Vec<f64>, LstmCache)> {
        check_len("lstm input", self.input_dim, x.len())?;
        check_len("lstm hidden state", self.hidden, h_prev.len())?;
        check_len("lstm cell state", self.hidden, c_prev.len())?;
        let m = self.hidden;

        let mut z = Vec::with_capacity(self.input_dim + m);
        z.extend_from_slice(x);
        z.extend_from_slice(h_prev);
        let mut pre = vec![0.0; 4 * m];
        self.weight.affine(&z, &self.bias, &mut pre);

        let i: Vec<f64> = pre[..m].iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<f64> = pre[m..2 * m].iter().map(|&v| sigmoid(v)).collect();
        let o: Vec<f64> = pre[2 * m..3 * m].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = pre[3 * m..].iter().map(|&v| v.tanh()).collect();

        let mut c = vec![0.0; m];
        let mut tanh_c = vec![0.0; m];
        let mut h = vec![0.0; m];
        for k in 0..m {
            c[k] = f[k] * c_prev[k] + i[k] * g[k];
            tanh_c[k] = c[k].tanh();
            h[k] = o[k] * tanh_c[k];
        }
        let cache = LstmCache {
            z,
            c_prev: c_prev.to_vec(),
            i,
            f,
            o,
            g,
            tanh_c,
        };
        Ok((h, c, cache))
    }

    /// Backpropagates `dh`/`dc` through one step. Parameter gradients are
    /// accumulated into `grad`; input, previous-output and previous-state
    /// gradients are added into `dx`, `dh_prev` and `dc_prev`.
    pub fn backward(
        &self,
        cache: &LstmCache,
        dh: &[f64],
        dc: &[f64],
        grad: &mut LstmCell,
        dx: Option<&mut [f64]>,
        dh_prev: &mut [f64],
        dc_prev: &mut [f64],
    ) {
        let m = self.hidden;
        let mut da = vec![0.0; 4 * m];
        for k in 0..m {
            let (i, f, o, g, tc) = (cache.i[k], cache.f[k], cache.o[k], cache.g[k], cache.tanh_c[k]);
            let d_o = dh[k] * tc;
            let d_c = dc[k] + dh[k] * o * (1.0 - tc * tc);
            let d_i = d_c * g;
            let d_g = d_c * i;
            let d_f = d_c * cache.c_prev[k];
            dc_prev[k] += d_c * f;
            da[k] = d_i * i * (1.0 - i);
            da[m + k] = d_f * f * (1.0 - f);
            da[2 * m + k] = d_o * o * (1.0 - o);
            da[3 * m + k] = d_g * (1.0 - g * g);
        }
        grad.weight.add_outer(&da, &cache.z);
        for (b, g) in grad.bias.iter_mut().zip(&da) {
            *b += g;
        }
        let mut dz = vec![0.0; self.input_dim + m];
        self.weight.transpose_mul_acc(&da, &mut dz);
        if let Some(dx) = dx {
            for (a, b) in dx.iter_mut().zip(&dz[..self.input_dim]) {
                *a += b;
            }
        }
        for (a, b) in dh_prev.iter_mut().zip(&dz[self.input_dim..]) {
            *a += b;
        }
    }

    pub fn tensors(&self) -> [&[f64]; 2] {
        [self.weight.as_slice(), &self.bias]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 2] {
        [self.weight.as_mut_slice(), &mut self.bias]
    }
}
