//! Hash primitives: chain iteration, the preimage-distance function
//! `beta`, and an incremental digest over growing document concatenations.
//!
//! Chains use SHA-256 (32-byte values); the index oracle input is the
//! SHA-512 of the concatenated documents. Both algorithms are fixed so
//! that wire and file formats stay bit-exact.

use alloc::vec::Vec;
use core::fmt;

use hmac::{Hmac, Mac};
use sha2::{Digest as _, Sha256, Sha512};

/// Length of a chain hash value in bytes.
pub const DIGEST_LEN: usize = 32;
/// Length of an oracle hash value in bytes.
pub const WIDE_DIGEST_LEN: usize = 64;

/// A 32-byte chain hash value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest([u8; DIGEST_LEN]);

impl Digest {
    pub const fn new(bytes: [u8; DIGEST_LEN]) -> Self {
        Digest(bytes)
    }

    pub const fn zero() -> Self {
        Digest([0u8; DIGEST_LEN])
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    /// Reads a digest from a slice; `None` unless it is exactly 32 bytes.
    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        let arr: [u8; DIGEST_LEN] = bytes.try_into().ok()?;
        Some(Digest(arr))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest(")?;
        for b in &self.0[..4] {
            write!(f, "{b:02x}")?;
        }
        write!(f, "..)")
    }
}

impl AsRef<[u8]> for Digest {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

/// A 64-byte oracle hash value.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct WideDigest([u8; WIDE_DIGEST_LEN]);

impl WideDigest {
    pub const fn new(bytes: [u8; WIDE_DIGEST_LEN]) -> Self {
        WideDigest(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; WIDE_DIGEST_LEN] {
        &self.0
    }
}

impl fmt::Debug for WideDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WideDigest(")?;
        for b in &self.0[..4] {
            write!(f, "{b:02x}")?;
        }
        write!(f, "..)")
    }
}

/// One step along a Winternitz chain: SHA-256 of the previous value.
pub fn chain_step(x: Digest) -> Digest {
    let mut h = Sha256::new();
    h.update(x.as_bytes());
    Digest(h.finalize().into())
}

/// `n`-fold application of [`chain_step`]; `chain_iterate(x, 0) = x`.
pub fn chain_iterate(x: Digest, n: u32) -> Digest {
    let mut v = x;
    for _ in 0..n {
        v = chain_step(v);
    }
    v
}

/// Preimage distance along a chain: the smallest `i` in `[0, limit]` with
/// `chain_iterate(x, i) = y`, or `None` when `y` is not reachable from `x`
/// within `limit` steps.
///
/// The distance is a partial function; callers bound the search with the
/// maximum possible chain length.
pub fn beta(x: Digest, y: Digest, limit: u32) -> Option<u32> {
    let mut v = x;
    for i in 0..=limit {
        if v == y {
            return Some(i);
        }
        if i < limit {
            v = chain_step(v);
        }
    }
    None
}

/// One-shot oracle hash (SHA-512) of a byte string.
pub fn oracle_hash(bytes: &[u8]) -> WideDigest {
    let mut h = Sha512::new();
    h.update(bytes);
    WideDigest(h.finalize().into())
}

/// Chain hash (SHA-256) over the concatenation of `parts`. This is the
/// countersignature primitive `H(doc || q)`.
pub fn hash_concat(parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    Digest(h.finalize().into())
}

/// Incremental oracle hash over the concatenation of all absorbed byte
/// strings.
///
/// `snapshot` yields the hash of everything absorbed so far without
/// finalizing: absorbing after a snapshot continues from the same prefix.
/// Cloning the fixed-size compression state keeps the per-round cost of a
/// growing concatenation constant, no matter how long the prefix is.
#[derive(Clone)]
pub struct RunningDigest {
    state: Sha512,
}

impl RunningDigest {
    pub fn new() -> Self {
        RunningDigest {
            state: Sha512::new(),
        }
    }

    /// Appends `bytes` to the logical concatenation.
    pub fn absorb(&mut self, bytes: &[u8]) {
        self.state.update(bytes);
    }

    /// Oracle hash of the full concatenation absorbed so far.
    pub fn snapshot(&self) -> WideDigest {
        WideDigest(self.state.clone().finalize().into())
    }
}

impl Default for RunningDigest {
    fn default() -> Self {
        Self::new()
    }
}

type HmacSha256 = Hmac<Sha256>;

/// Keyed derivation of a 32-byte value: HMAC-SHA-256 over the
/// concatenated message parts. Used for chain seed derivation and for
/// wire-frame MAC tags.
pub fn keyed_digest(key: &[u8], parts: &[&[u8]]) -> Digest {
    let mut mac = HmacSha256::new_from_slice(key).expect("HMAC accepts any key length");
    for p in parts {
        mac.update(p);
    }
    let out = mac.finalize().into_bytes();
    Digest(out.into())
}

/// Constant-time equality of two byte strings of equal length.
pub fn ct_eq(a: &[u8], b: &[u8]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut acc = 0u8;
    for (x, y) in a.iter().zip(b.iter()) {
        acc |= x ^ y;
    }
    acc == 0
}

/// Concatenates byte strings into a fresh buffer.
pub fn concat(parts: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::new();
    for p in parts {
        out.extend_from_slice(p);
    }
    out
}
