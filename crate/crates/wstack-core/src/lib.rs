//! Winternitz stack signatures.
//!
//! A *fabric* is a family of `w` private hash chains of length `N`; its
//! edge (the final chain values) is the public key. Documents are signed
//! by pushing them onto a *signature stack*: a hash-derived multiset of
//! chain indices decides how far each chain is consumed, and the exposed
//! chain values (the stack *top*) prove the whole document sequence.
//!
//! The crate provides the primitive layer (chains, the index oracle,
//! fabric storage with checkpoint/recompute trade-off), the stack algebra
//! (push, sparse-difference signatures, the validator predicate), exact
//! security/capacity analysis, the three bipartite session protocols
//! (BWS, MAWS, RWS) with their wire codec and third-party adjudication,
//! and a deterministic lossy-channel harness for driving sessions and
//! fault scenarios.
//!
//! The crate is `no_std` (with `alloc`); file and socket IO live in the
//! companion CLI crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod fabric;
pub mod harness;
pub mod hashing;
pub mod oracle;
pub mod protocol;
pub mod stack;
pub mod wire;

pub use fabric::{Edge, Fabric, FabricParams, SegmentCache};
pub use hashing::{Digest, RunningDigest, WideDigest};
pub use oracle::{IndexMultiset, OracleParams};
pub use stack::{Document, SignatureStack, SparseFamily};
