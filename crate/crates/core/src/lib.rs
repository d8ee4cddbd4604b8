//! Mask-guided annotation engine for paired real/forged face images.
//!
//! The flow for one pair is: forgery mask, landmark region partition,
//! thresholded region extraction, five handcrafted forgery-type detectors,
//! optional mixed-forgery blending, templated raw text, optional refinement
//! through a chat-completion service, and scoring against mask-derived truth.

pub mod error;
pub mod annotate;
pub mod blend;
pub mod detectors;
pub mod evaluate;
pub mod pipeline;
pub mod refine;
pub mod region;
pub mod synth;
pub mod vision;

pub use error::{Error, Result};
