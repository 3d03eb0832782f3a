//! Personality-aware multimodal emotion recognition from eye tracking.
//!
//! The pipeline runs raw gaze recordings through quality filtering,
//! normalization, pupil baseline correction, fixation/saccade detection,
//! and face-region labeling, resamples each trial into a fixed 15-step
//! sequence, and trains a recurrent multimodal classifier (plus a linear
//! SVM baseline) for perceived/felt valence and arousal. A seeded
//! synthetic-session generator stands in for human-subject recordings.
//!
//! The numeric kernels (geometry, tensors, the network, the SVM) are
//! generic over [`scalar::Real`]; the concrete `f64` instantiations used
//! by the file formats live in the aliases below.

pub mod baseline;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod events;
pub mod features;
pub mod geom;
pub mod io;
pub mod net;
pub mod pipeline;
pub mod rng;
pub mod roi;
pub mod scalar;
pub mod signal;
pub mod synth;
pub mod tensor;

pub use error::{Error, ErrorKind, Result};

/// Double-precision instantiations used throughout the file-facing layer.
pub type Point2 = geom::Point<f64>;
pub type Tensor64 = tensor::Tensor<f64>;
pub type FusedModel64 = net::FusedModel<f64>;
pub type LinearSvm64 = baseline::LinearSvmModel<f64>;
