//! File formats, model persistence and the `seqlab` command-line driver.
//!
//! Formats:
//!
//! * CoNLL: `token<TAB>label` per line, one blank line between sentences
//!   ([`conll`]).
//! * Gazetteer: `surface form<TAB>type` per line ([`gaztsv`]).
//! * Configuration: flat `key = value` files ([`config`]).
//! * Models: versioned binary files with a SHA-256 trailer ([`modelfile`]).
//! * Reports: pretty-printed JSON.

pub mod bench;
pub mod cli;
pub mod config;
pub mod conll;
pub mod error;
pub mod fsio;
pub mod gaztsv;
pub mod modelfile;

pub use error::{FormatError, IoError};
