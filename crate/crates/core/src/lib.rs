//! Synaptic-homeostasis continual learning for streams of EEG subjects.
//!
//! Each subject becomes a node in a growing graph. Edges carry a fixed
//! feature similarity and a mutable strength that is consolidated when the
//! endpoint is reactivated and renormalized (decayed) over time. Strength and
//! similarity rank which stored memories get replayed and whose models get
//! fused when a new, unlabeled subject arrives.
//!
//! Modules:
//! - [`featkit`]: time, frequency and wavelet features per channel.
//! - [`synnet`]: the graph, importance ranking, replay, consolidation, renormalization.
//! - [`learner`]: learner abstraction, reference affine-softmax classifier, fusion, pseudo-labels.
//! - [`ssl`]: contrastive predictive coding used to adapt a guidance model.
//! - [`harness`]: the end-to-end continual loop, metrics, repeats and ablations.
//! - [`dataio`]: binary epoch files, manifests, run configs, synthetic cohorts.
//! - [`cli`]: the `synhomeo` command line.

pub mod cli;
pub mod dataio;
pub mod error;
pub mod featkit;
pub mod harness;
pub mod learner;
pub mod ssl;
pub mod synnet;

pub use error::{Error, Result};
