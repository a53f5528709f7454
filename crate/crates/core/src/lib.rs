//! Tubal tensor algebra under arbitrary invertible transforms.
//!
//! A third-order tensor `m × p × n` is treated as an `m × p` matrix whose
//! entries are tubes of length `n`. Tubes multiply through an invertible
//! transform `M`: move to the transform domain (mode-3 product with `M`),
//! multiply slice by slice, come back with `M⁻¹`. This crate provides
//!
//! - dense tensor storage with unfold/fold/TTM and facewise products ([`tensor`]),
//! - transforms with their idempotent group structure and an Eckart-Young
//!   certificate for the `M = D·Q` family ([`transform`]),
//! - the `⋆M` product family and matrix-mimetic constructs ([`algebra`]),
//! - the tSVDM with t-rank, multirank and tubal-length truncations ([`tsvdm`]),
//! - executable optimality checks and explicit counterexamples ([`optimality`]),
//! - tubal dynamic mode decomposition ([`dmd`]).
//!
//! The crate is `no_std` and needs only `alloc`. File formats and the
//! command-line tool live in the `tubalg` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algebra;
pub mod dmd;
mod error;
pub(crate) mod linalg;
pub mod optimality;
pub mod random;
pub mod tensor;
pub mod transform;
pub mod tsvdm;

pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use tensor::{Domain, Mode, Tensor3, Tube, C64};
pub use transform::{
    EckartYoungCertificate, IdempotentStructure, RowKind, Transform, TransformId, Violation,
    ViolationKind,
};
pub use tsvdm::{tsvdm, tsvdm2, RankSpec, Tsvdm, Tsvdm2};

/// Relative threshold below which a transform-domain singular value counts as zero.
pub const ZERO_TUBE_TOL: f64 = 1e-10;

/// Default relative tolerance for row pairing and Gram orthogonality checks.
pub const TRANSFORM_TOL: f64 = 1e-10;

/// Imaginary residual (relative to the largest magnitude) tolerated when a
/// result that must be real comes back from the transform domain.
pub const REALNESS_TOL: f64 = 1e-9;

pub use nalgebra;
