//! Hypercomplex multimodal fusion for emotion recognition from EEG, ECG,
//! GSR and eye-tracking signals.

pub mod autodiff;
pub mod error;
pub mod hyperalg;
pub mod layers;
pub mod model;
pub mod rng;
pub mod signals;
pub mod training;

pub use autodiff::{Scalar, Tensor};
pub use error::{Error, Result};
pub use model::{Batch, HyperFuseNet, Modality, ModelConfig, PerModality};
pub use rng::Rng;
