//! Core library for the SkyVote simulation platform: urban line-of-sight
//! geometry, verifier placement, optical link models, the vote ledger,
//! the verification protocol simulator, and trust-weighted map fusion.

pub mod crypto;
pub mod fusion;
pub mod geometry;
pub mod ledger;
pub mod optics;
pub mod placement;
pub mod protocol;
