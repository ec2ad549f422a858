use crate::tensor::sum_squares;

pub const RMSPROP_DECAY: f64 = 0.9;
pub const RMSPROP_EPSILON: f64 = 1e-8;

/// One RMSprop update on a flat tensor:
/// `v ← ρv + (1-ρ)g²`, `θ ← θ − lr·g/(√v + ε)`.
pub fn rmsprop_step(theta: &mut [f64], grad: &[f64], sq_avg: &mut [f64], lr: f64) {
    for ((t, &g), v) in theta.iter_mut().zip(grad).zip(sq_avg.iter_mut()) {
        *v = RMSPROP_DECAY * *v + (1.0 - RMSPROP_DECAY) * g * g;
        *t -= lr * g / (v.sqrt() + RMSPROP_EPSILON);
    }
}

/// RMSprop state for a fixed list of tensors.
#[derive(Clone, Debug)]
pub struct RmsProp {
    pub lr: f64,
    state: Vec<Vec<f64>>,
}

impl RmsProp {
    pub fn new(lr: f64, sizes: impl IntoIterator<Item = usize>) -> Self {
        RmsProp {
            lr,
            state: sizes.into_iter().map(|n| vec![0.0; n]).collect(),
        }
    }

    /// Updates `params[k]` with `grads[k]` for every tensor; the lists must
    /// be in the same order as the sizes given to [`RmsProp::new`].
    pub fn update(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) {
        assert_eq!(params.len(), self.state.len());
        assert_eq!(grads.len(), self.state.len());
        for ((p, g), v) in params.into_iter().zip(grads).zip(self.state.iter_mut()) {
            rmsprop_step(p, g, v, self.lr);
        }
    }

    pub fn squared_averages(&self) -> &[Vec<f64>] {
        &self.state
    }
}

/// Global-norm clipping. Returns the norm before clipping.
pub fn clip_global_norm(grads: Vec<&mut [f64]>, threshold: f64) -> f64 {
    assert!(threshold > 0.0, "clip threshold must be positive");
    let norm = grads.iter().map(|g| sum_squares(g)).sum::<f64>().sqrt();
    if norm > threshold {
        let scale = threshold / norm;
        for g in grads {
            for v in g.iter_mut() {
                *v *= scale;
            }
        }
    }
    norm
}
