//! Startup-success prediction from fundamental variables fused with a
//! representation of the company's textual self-description.

pub mod acceptance;
pub mod error;
pub mod eval;
pub mod explain;
pub mod features;
pub mod model;
pub mod pipeline;
pub mod profile;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
