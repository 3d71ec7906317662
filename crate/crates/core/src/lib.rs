//! Speech-to-text inference and corpus tooling.
//!
//! * [`textnorm`]: rule-driven transcript normalization.
//! * [`corpus`]: dataset reading, conversion, cleaning, statistics and splits.
//! * [`features`]: WAV loading and log-mel features.
//! * [`lm`]: ARPA n-gram models.
//! * [`ctc`]: greedy and prefix beam search decoding with LM fusion.
//! * [`net`]: QuartzNet forward inference, streaming, batch-norm folding and
//!   output-alphabet surgery.
//! * [`cli`]: the `scribo` command line.

pub mod alphabet;
pub mod cli;
pub mod corpus;
pub mod ctc;
pub mod features;
pub mod lm;
pub mod net;
pub mod textnorm;

pub use alphabet::AlphabetSpec;
