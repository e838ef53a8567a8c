//! The index oracle: maps byte strings (via their 64-byte oracle hash) to
//! cardinality-`kappa` multisets of chain indices in `[0, w)`.
//!
//! The first `kappa * log2(w)` bits of the oracle hash are taken MSB-first
//! and split into consecutive `log2(w)`-bit chunks; each chunk, read as a
//! big-endian unsigned integer, contributes one index to the multiset.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::hashing::WideDigest;

/// Maximum number of index bits a single oracle hash can supply.
pub const ORACLE_BIT_BUDGET: u32 = 512;

/// Oracle sizing: fabric width `w` (a power of two) and multiset
/// cardinality `kappa`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct OracleParams {
    w: u32,
    kappa: u16,
    bits_per_index: u8,
}

/// Rejected oracle or fabric sizing.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ParamError {
    /// `w` must be a power of two, at least 2.
    WidthNotPowerOfTwo,
    /// `kappa` must be at least 1.
    ZeroKappa,
    /// `kappa * log2(w)` exceeds the 512 bits one oracle hash supplies.
    OracleBudgetExceeded,
    /// Chain length must be at least 1.
    ZeroLength,
    /// Checkpoint stride must satisfy `1 <= phi <= N`.
    BadStride,
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::WidthNotPowerOfTwo => write!(f, "width must be a power of two (>= 2)"),
            ParamError::ZeroKappa => write!(f, "kappa must be at least 1"),
            ParamError::OracleBudgetExceeded => {
                write!(f, "kappa * log2(w) exceeds the 512-bit oracle budget")
            }
            ParamError::ZeroLength => write!(f, "chain length must be at least 1"),
            ParamError::BadStride => write!(f, "checkpoint stride must be in [1, N]"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ParamError {}

impl OracleParams {
    pub fn new(w: u32, kappa: u16) -> Result<Self, ParamError> {
        if w < 2 || !w.is_power_of_two() {
            return Err(ParamError::WidthNotPowerOfTwo);
        }
        if kappa == 0 {
            return Err(ParamError::ZeroKappa);
        }
        let bits = w.trailing_zeros() as u8;
        if kappa as u32 * bits as u32 > ORACLE_BIT_BUDGET {
            return Err(ParamError::OracleBudgetExceeded);
        }
        Ok(OracleParams {
            w,
            kappa,
            bits_per_index: bits,
        })
    }

    pub fn width(&self) -> u32 {
        self.w
    }

    pub fn kappa(&self) -> u16 {
        self.kappa
    }

    pub fn bits_per_index(&self) -> u8 {
        self.bits_per_index
    }

    /// Total bits consumed from the oracle hash.
    pub fn bits_consumed(&self) -> u32 {
        self.kappa as u32 * self.bits_per_index as u32
    }
}

/// A cardinality-`kappa` multiset of chain indices.
///
/// Keeps both the sparse multiplicity map (validation needs counts) and
/// the raw index tuple in extraction order (wire encoding and debugging
/// need the tuple).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IndexMultiset {
    counts: BTreeMap<u32, u16>,
    tuple: Vec<u32>,
}

impl IndexMultiset {
    /// Multiplicity of index `k`.
    pub fn count(&self, k: u32) -> u16 {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    /// Distinct indices with nonzero multiplicity, ascending.
    pub fn support(&self) -> impl Iterator<Item = (u32, u16)> + '_ {
        self.counts.iter().map(|(&k, &c)| (k, c))
    }

    /// Number of distinct indices.
    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    /// The raw kappa-tuple of indices in extraction order.
    pub fn tuple(&self) -> &[u32] {
        &self.tuple
    }

    /// Total cardinality (always `kappa`).
    pub fn cardinality(&self) -> u32 {
        self.tuple.len() as u32
    }
}

/// Extracts bit `i` (MSB-first within the byte string) of `bytes`.
#[inline]
fn bit_at(bytes: &[u8], i: u32) -> u32 {
    ((bytes[(i / 8) as usize] >> (7 - (i % 8))) & 1) as u32
}

/// The oracle: first `kappa * log2(w)` bits of the input, chunked into
/// big-endian indices and collected into a multiset.
pub fn hors(input: &WideDigest, p: &OracleParams) -> IndexMultiset {
    let bytes = input.as_bytes();
    let bits = p.bits_per_index as u32;
    let mut tuple = Vec::with_capacity(p.kappa as usize);
    let mut counts: BTreeMap<u32, u16> = BTreeMap::new();
    for chunk in 0..p.kappa as u32 {
        let mut v = 0u32;
        for b in 0..bits {
            v = (v << 1) | bit_at(bytes, chunk * bits + b);
        }
        tuple.push(v);
        *counts.entry(v).or_insert(0) += 1;
    }
    IndexMultiset { counts, tuple }
}

/// Multiplicity of index `k` in the oracle output for `input`.
///
/// `k` must be below the fabric width.
pub fn omega(input: &WideDigest, k: u32, p: &OracleParams) -> u16 {
    debug_assert!(k < p.w, "index {k} out of range (w = {})", p.w);
    hors(input, p).count(k)
}
