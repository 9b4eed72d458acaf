//! Instrumented cross-encoder inference engine and attention analysis
//! workbench.
//!
//! The crate scores query-document pairs with a BERT-style cross-encoder
//! while exposing everything a relevance-matching analysis needs:
//!
//! - [`segment`]: WordPiece tokenization and the five-part input map
//!   (CLS / query / SEP1 / document / SEP2);
//! - [`encoder`]: the forward pass with full attention tracing and
//!   pre-softmax ablation hooks;
//! - [`ablation`]: directional ablation specs (`D<-Q@layers=0..6`)
//!   compiled to per-(layer, head) attention masks;
//! - [`analysis`]: per-head attention statistics contrasted by relevance
//!   class, histograms, and matching-head diagnostics built on a
//!   factored SVD of each head's query-key form;
//! - [`ireval`]: TREC qrels/run handling, easy-negative sampling,
//!   nDCG@k, and paired significance testing;
//! - [`cli`]: the batch experiment commands behind the `matchprobe`
//!   binary.

pub mod ablation;
pub mod analysis;
pub mod cli;
pub mod encoder;
pub mod error;
pub mod fixtures;
pub mod ireval;
pub mod linalg;
pub mod segment;

pub use error::{Error, Result};
