//! The private Winternitz fabric: `w` hash chains of length `N`, stored
//! as a checkpoint lattice with stride `phi` and recomputed forward on
//! demand. The chain-end values form the public edge.
//!
//! Storage holds positions `0, phi, 2*phi, ...` of every chain; an
//! element at position `i` is recovered by hashing forward from the
//! checkpoint at `phi * floor(i / phi)`, so results never depend on the
//! stride. A per-chain segment cache amortizes sequential access down to
//! about one hash per element.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::hashing::{chain_iterate, chain_step, keyed_digest, Digest, DIGEST_LEN};
use crate::oracle::ParamError;

/// Magic prefix of the private fabric file format.
pub const FABRIC_MAGIC: &[u8; 4] = b"WSF1";
/// Magic prefix of the public edge file format.
pub const EDGE_MAGIC: &[u8; 4] = b"WSE1";

const SEED_LABEL: &[u8] = b"fabric-seed";

/// Fabric sizing: width `w` (power of two), chain length `n`, checkpoint
/// stride `phi`. The chain digest length is fixed at 32 bytes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct FabricParams {
    w: u32,
    n: u32,
    phi: u32,
}

impl FabricParams {
    pub fn new(w: u32, n: u32, phi: u32) -> Result<Self, ParamError> {
        if w < 2 || !w.is_power_of_two() {
            return Err(ParamError::WidthNotPowerOfTwo);
        }
        if n < 1 {
            return Err(ParamError::ZeroLength);
        }
        if phi < 1 || phi > n {
            return Err(ParamError::BadStride);
        }
        Ok(FabricParams { w, n, phi })
    }

    pub fn width(&self) -> u32 {
        self.w
    }

    pub fn length(&self) -> u32 {
        self.n
    }

    pub fn stride(&self) -> u32 {
        self.phi
    }

    /// Checkpoints stored per chain: positions `0, phi, ..` up to `n`.
    pub fn checkpoints_per_chain(&self) -> u32 {
        self.n / self.phi + 1
    }
}

/// Exact size in bytes of the private checkpoint store.
pub fn storage_bytes(p: &FabricParams) -> u64 {
    DIGEST_LEN as u64 * p.w as u64 * p.checkpoints_per_chain() as u64
}

/// The public edge: the final value of every chain, indexed by chain.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Edge {
    values: Vec<Digest>,
}

impl Edge {
    pub fn from_values(values: Vec<Digest>) -> Self {
        Edge { values }
    }

    pub fn width(&self) -> u32 {
        self.values.len() as u32
    }

    pub fn value(&self, k: u32) -> Digest {
        self.values[k as usize]
    }

    pub fn values(&self) -> &[Digest] {
        &self.values
    }

    /// Serializes the public-key file.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(9 + self.values.len() * DIGEST_LEN);
        out.extend_from_slice(EDGE_MAGIC);
        out.extend_from_slice(&self.width().to_be_bytes());
        out.push(DIGEST_LEN as u8);
        for v in &self.values {
            out.extend_from_slice(v.as_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        r.expect_magic(EDGE_MAGIC)?;
        let w = r.u32()?;
        let lambda = r.u8()?;
        if lambda as usize != DIGEST_LEN {
            return Err(CodecError::UnsupportedDigestLength(lambda));
        }
        let mut values = Vec::with_capacity(w as usize);
        for _ in 0..w {
            values.push(r.digest()?);
        }
        r.finish()?;
        Ok(Edge { values })
    }
}

/// A generated fabric: parameters, master seed, and the checkpoint store
/// (row-major by chain, positions ascending).
#[derive(Clone)]
pub struct Fabric {
    params: FabricParams,
    master_seed: [u8; 32],
    checkpoints: Vec<Digest>,
    edge: Edge,
}

impl Fabric {
    /// Derives all chains from the master seed and records checkpoints at
    /// stride `phi`. Chain `k` starts from an HMAC of the seed and the
    /// chain index, so the same seed always regenerates the same fabric.
    pub fn generate(master_seed: [u8; 32], params: FabricParams) -> Self {
        let per_chain = params.checkpoints_per_chain() as usize;
        let mut checkpoints = Vec::with_capacity(params.w as usize * per_chain);
        let mut edge_values = Vec::with_capacity(params.w as usize);
        for k in 0..params.w {
            let mut v = keyed_digest(&master_seed, &[SEED_LABEL, &k.to_be_bytes()]);
            checkpoints.push(v);
            for i in 1..=params.n {
                v = chain_step(v);
                if i % params.phi == 0 {
                    checkpoints.push(v);
                }
            }
            edge_values.push(v);
        }
        Fabric {
            params,
            master_seed,
            checkpoints,
            edge: Edge::from_values(edge_values),
        }
    }

    pub fn params(&self) -> &FabricParams {
        &self.params
    }

    /// Chain element at position `i` of chain `k`, recomputed forward from
    /// the nearest checkpoint at or below `i`. Identical for every stride.
    pub fn element(&self, k: u32, i: u32) -> Digest {
        assert!(k < self.params.w, "chain index out of range");
        assert!(i <= self.params.n, "chain position out of range");
        let slot = i / self.params.phi;
        let base = slot * self.params.phi;
        chain_iterate(self.checkpoint(k, slot), i - base)
    }

    /// Cached variant of [`Fabric::element`] for sequential access
    /// patterns; hash work is charged to the cache's step counter.
    pub fn element_cached(&self, cache: &mut SegmentCache, k: u32, i: u32) -> Digest {
        assert!(k < self.params.w, "chain index out of range");
        assert!(i <= self.params.n, "chain position out of range");
        let slot = i / self.params.phi;
        let base = slot * self.params.phi;
        let seg = cache.segment(self, k, slot, base);
        seg[(i - base) as usize]
    }

    pub fn edge(&self) -> &Edge {
        &self.edge
    }

    pub fn master_seed(&self) -> &[u8; 32] {
        &self.master_seed
    }

    fn checkpoint(&self, k: u32, slot: u32) -> Digest {
        let per_chain = self.params.checkpoints_per_chain();
        self.checkpoints[(k * per_chain + slot) as usize]
    }

    /// Recomputes every chain from its seed and checks all stored
    /// checkpoints. Linear in `w * n`; meant for tests and key audits.
    pub fn verify_checkpoints(&self) -> bool {
        let regenerated = Fabric::generate(self.master_seed, self.params);
        regenerated.checkpoints == self.checkpoints && regenerated.edge == self.edge
    }

    /// Serializes the private fabric file (seed and checkpoint store).
    pub fn encode_private(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(49 + self.checkpoints.len() * DIGEST_LEN);
        out.extend_from_slice(FABRIC_MAGIC);
        out.extend_from_slice(&self.params.w.to_be_bytes());
        out.extend_from_slice(&self.params.n.to_be_bytes());
        out.extend_from_slice(&self.params.phi.to_be_bytes());
        out.push(DIGEST_LEN as u8);
        out.extend_from_slice(&self.master_seed);
        for c in &self.checkpoints {
            out.extend_from_slice(c.as_bytes());
        }
        out
    }

    pub fn decode_private(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        r.expect_magic(FABRIC_MAGIC)?;
        let w = r.u32()?;
        let n = r.u32()?;
        let phi = r.u32()?;
        let lambda = r.u8()?;
        if lambda as usize != DIGEST_LEN {
            return Err(CodecError::UnsupportedDigestLength(lambda));
        }
        let params = FabricParams::new(w, n, phi).map_err(CodecError::BadParams)?;
        let mut master_seed = [0u8; 32];
        master_seed.copy_from_slice(r.bytes(32)?);
        let total = params.w as usize * params.checkpoints_per_chain() as usize;
        let mut checkpoints = Vec::with_capacity(total);
        for _ in 0..total {
            checkpoints.push(r.digest()?);
        }
        r.finish()?;
        // The edge is not stored; walk forward from each chain's last
        // checkpoint (at most phi - 1 steps per chain).
        let per_chain = params.checkpoints_per_chain();
        let last_pos = (per_chain - 1) * params.phi;
        let edge_values = (0..params.w)
            .map(|k| {
                let last = checkpoints[(k * per_chain + per_chain - 1) as usize];
                chain_iterate(last, params.n - last_pos)
            })
            .collect();
        Ok(Fabric {
            params,
            master_seed,
            checkpoints,
            edge: Edge::from_values(edge_values),
        })
    }
}

impl fmt::Debug for Fabric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Never print seed or checkpoint material.
        f.debug_struct("Fabric")
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

/// Per-chain single-slot segment cache for [`Fabric::element_cached`].
///
/// Each slot holds the last recomputed run of `phi` consecutive values of
/// one chain. `steps` counts chain hash invocations spent on recomputes.
pub struct SegmentCache {
    slots: Vec<Option<(u32, Vec<Digest>)>>,
    pub steps: u64,
}

impl SegmentCache {
    pub fn new(width: u32) -> Self {
        SegmentCache {
            slots: vec![None; width as usize],
            steps: 0,
        }
    }

    fn segment(&mut self, fabric: &Fabric, k: u32, slot: u32, base: u32) -> &[Digest] {
        let entry = &mut self.slots[k as usize];
        let stale = match entry {
            Some((b, _)) => *b != base,
            None => true,
        };
        if stale {
            let len = (fabric.params.n - base + 1).min(fabric.params.phi);
            let mut values = Vec::with_capacity(len as usize);
            let mut v = fabric.checkpoint(k, slot);
            values.push(v);
            for _ in 1..len {
                v = chain_step(v);
                values.push(v);
                self.steps += 1;
            }
            *entry = Some((base, values));
        }
        &entry.as_ref().unwrap().1
    }
}

/// Decode failure for the fabric, edge, and stack file formats.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CodecError {
    BadMagic,
    Truncated,
    TrailingBytes,
    UnsupportedDigestLength(u8),
    BadParams(ParamError),
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodecError::BadMagic => write!(f, "unrecognized file magic"),
            CodecError::Truncated => write!(f, "file truncated"),
            CodecError::TrailingBytes => write!(f, "trailing bytes after payload"),
            CodecError::UnsupportedDigestLength(l) => {
                write!(f, "unsupported digest length {l}")
            }
            CodecError::BadParams(e) => write!(f, "bad parameters: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CodecError {}

/// Cursor over an encoded byte buffer.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    pub(crate) fn bytes(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.bytes.len() - self.pos < n {
            return Err(CodecError::Truncated);
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub(crate) fn expect_magic(&mut self, magic: &[u8; 4]) -> Result<(), CodecError> {
        if self.bytes(4)? != magic {
            return Err(CodecError::BadMagic);
        }
        Ok(())
    }

    pub(crate) fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.bytes(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_be_bytes(self.bytes(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_be_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    pub(crate) fn digest(&mut self) -> Result<Digest, CodecError> {
        Ok(Digest::from_slice(self.bytes(DIGEST_LEN)?).unwrap())
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn finish(self) -> Result<(), CodecError> {
        if self.pos != self.bytes.len() {
            return Err(CodecError::TrailingBytes);
        }
        Ok(())
    }
}
