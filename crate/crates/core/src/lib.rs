//! Fiber-tap laboratory: a link-budget model of a four-span amplified optical
//! line that produces optical performance monitoring (OPM) telemetry under
//! power-loss tap events, and a deterministic bisecting k-means engine that
//! detects and localizes those events from the telemetry alone.
//!
//! The crate is organised bottom-up:
//!
//! - [`linkmodel`]: link budget, ASE accumulation, OSNR and BER, noisy sampling.
//! - [`dataset`]: labeled sample collections, CSV persistence, feature
//!   selection and z-score standardization.
//! - [`clustering`]: SSE objective, deterministic two-means split and
//!   bisecting k-means.
//! - [`evaluation`]: label matching rate and the detection / localization
//!   experiments.

pub mod clustering;
pub mod dataset;
mod error;
pub mod evaluation;
mod hungarian;
pub mod linkmodel;
pub mod seed;

pub use error::{Error, Result};
