//! Procedural weld-defect dataset synthesis.
//!
//! The crate covers the whole offline pipeline: texture-space scene
//! synthesis ([`texgen`]), defect injection ([`defect`]), shading and camera
//! projection ([`render`]), training-time augmentation ([`augment`]),
//! train/val/test mix planning ([`mixer`]) and real-vs-synthetic auditing of
//! pretrained-model predictions ([`audit`]). [`manifest`] holds the JSONL
//! record format shared by all of them.

pub mod audit;
pub mod augment;
pub mod defect;
pub mod error;
pub mod manifest;
pub mod mixer;
pub mod render;
pub mod rng;
pub mod texgen;

pub use error::{Error, Result};
