use rand::Rng;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&z| z - lse).collect()
}

/// Cross-entropy `-Σ target_k log softmax(logits)_k`.
pub fn cross_entropy(target: &[f64], logits: &[f64]) -> f64 {
    log_softmax(logits)
        .iter()
        .zip(target)
        .map(|(lp, q)| -q * lp)
        .sum()
}

/// Per-element scale factors of an inverted-dropout draw (0 or 1/(1-rate)).
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMask(pub Vec<f64>);

impl DropoutMask {
    pub fn apply(&self, x: &mut [f64]) {
        for (v, s) in x.iter_mut().zip(&self.0) {
            *v *= s;
        }
    }
}

/// Inverted dropout. Returns `None` for the mask when the call is an identity
/// (inference mode or rate 0), in which case no random numbers are drawn.
pub fn dropout<R: Rng + ?Sized>(
    x: &[f64],
    rate: f64,
    training: bool,
    rng: &mut R,
) -> (Vec<f64>, Option<DropoutMask>) {
    assert!((0.0..1.0).contains(&rate), "dropout rate must lie in [0, 1)");
    if !training || rate == 0.0 {
        return (x.to_vec(), None);
    }
    let keep = 1.0 / (1.0 - rate);
    let mask = DropoutMask(
        x.iter()
            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
            .collect(),
    );
    let mut y = x.to_vec();
    mask.apply(&mut y);
    (y, Some(mask))
}
