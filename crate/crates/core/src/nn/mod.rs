//! Hand-differentiated building blocks: dense layers, the LSTM cell,
//! softmax/cross-entropy, dropout, RMSprop and gradient clipping.

mod dense;
mod lstm;
mod ops;
mod optim;

pub use dense::{Activation, Dense, DenseCache};
pub use lstm::{LstmCache, LstmCell};
pub use ops::{cross_entropy, dropout, log_softmax, sigmoid, softmax, DropoutMask};
pub use optim::{clip_global_norm, rmsprop_step, RmsProp, RMSPROP_DECAY, RMSPROP_EPSILON};
