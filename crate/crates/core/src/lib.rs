//! Reference kernels for matrix-oriented zero-knowledge proof acceleration.
//!
//! Layers, bottom up: radix-2^32 prime fields ([`field`]), RNS bases
//! ([`rns`]), byte-matmul lazy reduction ([`lazy`]), pluggable field backends
//! ([`backend`]), twisted Edwards curves ([`edwards`]), layout-stationary
//! Pippenger MSM ([`msm`]), matrix NTTs ([`ntt`]) and the Big-T span model
//! ([`bigt`]).

// Backends convert through `&self` because the conversion needs their tables;
// limb loops index several arrays in lock step.
#![allow(clippy::wrong_self_convention, clippy::needless_range_loop)]

pub mod backend;
pub mod bigint;
pub mod bigt;
pub mod cli;
pub mod edwards;
pub mod error;
pub mod field;
pub mod lazy;
pub mod msm;
pub mod ntt;
pub mod rns;

pub use error::{Error, Result};
pub use field::{FieldElement, FieldParams, PrimeField};
pub use rns::{RnsBasis, RnsVector};

use std::path::PathBuf;

/// Directory holding `fields/` and `curves/` parameter files.
///
/// `MORPH_CONFIG_ROOT` overrides the bundled fixtures.
pub fn config_root() -> PathBuf {
    std::env::var_os("MORPH_CONFIG_ROOT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"))
}

/// Loads `fields/<name>.toml` from the config root.
pub fn load_field(name: &str) -> Result<std::sync::Arc<PrimeField>> {
    PrimeField::load(config_root().join("fields").join(format!("{name}.toml")))
}
