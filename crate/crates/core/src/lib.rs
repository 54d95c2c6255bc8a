//! Robust stability radii of dissipative Hamiltonian (DH) systems
//!
//! A DH system is `ẋ = (J − R) Q x` with `J` skew-Hermitian, `R` Hermitian
//! positive semi-definite and `Q` Hermitian positive definite. This crate
//! computes how far such a system is from losing asymptotic stability:
//!
//! * unstructured restricted radii `r(R; B, C) = r(J; B, C)` and `r(Q; B, C)`
//!   through H∞ norms of small, structure-preserving reduced models
//!   ([`framework`]);
//! * the structured radius `r^Herm(R; B)` for Hermitian perturbations of `R`
//!   through an eigenvalue-optimization characterization, both directly and
//!   with an interpolatory subspace method ([`structured`]).
//!
//! Large systems only ever enter through shifted linear solves with
//! `iωI − (J − R)Q` ([`shifted`]); everything else runs on reduced data.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the CLI and
//! run reports live in the companion `dhradius` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod brake;
pub mod eigopt;
pub mod error;
pub mod framework;
pub mod hinf;
pub mod linalg;
pub mod probgen;
pub mod projection;
pub mod shifted;
pub mod structured;
pub mod system;
pub mod transfer;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{CMat, C64};
pub use system::{DhModel, DhSystem, Matrix, RestrictionPair, Storage};
