//! Weakly-supervised sequence labeling over a linear-chain CRF.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithm of the
//! toolkit: BIO label spaces, CRF inference and loss kernels, a hashed
//! feature encoder, gazetteer matching, weak label completion, confidence
//! calibration, the trainers and the staged pipeline, evaluation metrics and
//! a synthetic corpus generator. File formats and the command-line driver
//! live in the `seqlab` crate.
//!
//! # Pipeline
//!
//! 1. Weak labels come from exact token-sequence matches against a gazetteer
//!    ([`gazetteer`]).
//! 2. A model trained on strong data predicts labels for the weak pool, and
//!    every `O` weak label is replaced by the prediction ([`completion`]).
//! 3. Each completed sentence gets a confidence from histogram binning of the
//!    decoding score, mixed with its matched-token fraction ([`calibration`]).
//! 4. The model continues training on strong and completed weak data with
//!    the noise-aware loss, then is fine-tuned on strong data again
//!    ([`training`], [`pipeline`]).

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod calibration;
pub mod completion;
pub mod crf;
pub mod encoder;
mod error;
pub mod eval;
pub mod gazetteer;
mod math;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod tags;
pub mod training;

pub use error::{Error, Result};
pub use model::CrfModel;
pub use tags::{LabelKind, LabelSeq, Sentence, StrongExample, TagSet, WeakExample};
