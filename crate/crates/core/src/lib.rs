//! Detector error models for noisy Clifford circuits.
//!
//! The pipeline runs circuit text through [`circuit::parse`], derives
//! detectors with a symbolic tableau ([`detectors`]), propagates every error
//! location with Pauli frames ([`frames`]) and combines both into a
//! [`dem::DetectorErrorModel`]. On top of the model sit exact distance search,
//! small decoders, measurement-schedule verification, component-level gadget
//! models and Monte-Carlo sampling.

pub mod circuit;
pub mod decoder;
pub mod dem;
pub mod detectors;
pub mod experiments;
pub mod distance;
pub mod frames;
pub mod gadget;
pub mod gf2;
pub mod pauli;
pub mod schedule;
