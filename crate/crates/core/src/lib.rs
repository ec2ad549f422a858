//! Skip-and-jump speed reading for LSTM text classifiers.
//!
//! A recurrent reader consumes a document token by token. At every token a
//! skip agent decides whether to read it at all, and after every read token a
//! jump agent may move the cursor to the next sub-sentence, sentence or the
//! end of the text. Both agents are trained with advantage actor-critic on
//! top of a full-read pretrained classifier.

pub mod agents;
pub mod checkpoint;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod reader;
pub mod seeding;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
