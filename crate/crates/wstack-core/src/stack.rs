//! The signature stack over a fabric: push, sparse family algebra, the
//! extension validator, depth recovery, and full verification.
//!
//! A depth-`d` stack is the document sequence plus the current chain
//! values (the *top*), where chain `k` has been consumed `sigma(k)` steps
//! below the edge. Each push feeds the growing document concatenation to
//! the oracle and advances the selected chains; the sparse difference
//! between consecutive tops is the per-round signature payload.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::fabric::{CodecError, Edge, Fabric, Reader, SegmentCache};
use crate::hashing::{beta, chain_iterate, Digest, RunningDigest};
use crate::oracle::{hors, OracleParams, ParamError};

/// Magic prefix of the stack file format.
pub const STACK_MAGIC: &[u8; 4] = b"WSS1";

/// A signed document payload. Typically the 32-byte digest of the real
/// content, but any non-empty byte string is accepted.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Document(Vec<u8>);

impl Document {
    pub fn new(payload: Vec<u8>) -> Result<Self, StackError> {
        if payload.is_empty() {
            return Err(StackError::EmptyDocument);
        }
        Ok(Document(payload))
    }

    pub fn payload(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Stack operation failures.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StackError {
    /// Documents must be non-empty.
    EmptyDocument,
    /// A push would consume a chain past its seed; the fabric is used up.
    CapacityExhausted { chain: u32 },
    /// An extension failed the validator predicate.
    InvalidExtension,
    /// Sparse family refers to an index outside the base family.
    StrayIndex { index: u32 },
    /// Families must share an index set.
    LengthMismatch,
    /// Bad oracle or fabric parameters.
    BadParams(ParamError),
}

impl fmt::Display for StackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StackError::EmptyDocument => write!(f, "document payload is empty"),
            StackError::CapacityExhausted { chain } => {
                write!(f, "fabric capacity exhausted on chain {chain}")
            }
            StackError::InvalidExtension => write!(f, "extension failed validation"),
            StackError::StrayIndex { index } => {
                write!(f, "sparse family index {index} outside base family")
            }
            StackError::LengthMismatch => write!(f, "families have different index sets"),
            StackError::BadParams(e) => write!(f, "bad parameters: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for StackError {}

/// A sparse indexed family of chain values: the difference between two
/// stack tops, and the per-round signature payload.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SparseFamily {
    entries: BTreeMap<u32, Digest>,
}

impl SparseFamily {
    pub fn new() -> Self {
        SparseFamily {
            entries: BTreeMap::new(),
        }
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (u32, Digest)>) -> Self {
        SparseFamily {
            entries: entries.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, k: u32, v: Digest) {
        self.entries.insert(k, v);
    }

    pub fn get(&self, k: u32) -> Option<Digest> {
        self.entries.get(&k).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in ascending index order.
    pub fn entries(&self) -> impl Iterator<Item = (u32, Digest)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }
}

/// Indexed-family difference `A - B`: the entries of `A` wherever the two
/// families disagree. Both families must be indexed by `0..len`.
pub fn family_diff(a: &[Digest], b: &[Digest]) -> Result<SparseFamily, StackError> {
    if a.len() != b.len() {
        return Err(StackError::LengthMismatch);
    }
    Ok(SparseFamily {
        entries: a
            .iter()
            .zip(b.iter())
            .enumerate()
            .filter(|(_, (x, y))| x != y)
            .map(|(i, (x, _))| (i as u32, *x))
            .collect(),
    })
}

/// Indexed-family sum `A + s`: overlays the sparse entries onto `A`.
pub fn family_sum(a: &[Digest], s: &SparseFamily) -> Result<Vec<Digest>, StackError> {
    let mut out = a.to_vec();
    for (k, v) in s.entries() {
        let slot = out
            .get_mut(k as usize)
            .ok_or(StackError::StrayIndex { index: k })?;
        *slot = v;
    }
    Ok(out)
}

/// Family extension: appends `item` at the next free index.
pub fn extend<T>(family: &mut Vec<T>, item: T) {
    family.push(item);
}

/// A signature stack replica. The signer's copy sits next to a fabric;
/// the verifier's copy is maintained through validated extensions only.
#[derive(Clone)]
pub struct SignatureStack {
    oracle: OracleParams,
    documents: Vec<Document>,
    sigma: Vec<u32>,
    top: Vec<Digest>,
    concat: RunningDigest,
}

impl SignatureStack {
    /// The depth-0 stack: no documents, top equal to the edge.
    pub fn empty(edge: &Edge, kappa: u16) -> Result<Self, StackError> {
        let oracle = OracleParams::new(edge.width(), kappa).map_err(StackError::BadParams)?;
        Ok(SignatureStack {
            oracle,
            documents: Vec::new(),
            sigma: vec![0; edge.width() as usize],
            top: edge.values().to_vec(),
            concat: RunningDigest::new(),
        })
    }

    pub fn depth(&self) -> u32 {
        self.documents.len() as u32
    }

    pub fn width(&self) -> u32 {
        self.oracle.width()
    }

    pub fn kappa(&self) -> u16 {
        self.oracle.kappa()
    }

    pub fn oracle_params(&self) -> &OracleParams {
        &self.oracle
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn sigma(&self) -> &[u32] {
        &self.sigma
    }

    pub fn top(&self) -> &[Digest] {
        &self.top
    }

    /// Total chain consumption; equals `depth * kappa` at all times.
    pub fn mass(&self) -> u64 {
        self.sigma.iter().map(|&s| s as u64).sum()
    }

    /// Multiset the oracle would assign to pushing `payload` next.
    fn next_multiset(&self, payload: &[u8]) -> crate::oracle::IndexMultiset {
        let mut rd = self.concat.clone();
        rd.absorb(payload);
        hors(&rd.snapshot(), &self.oracle)
    }

    /// Signer-side push: advances the selected chains on the fabric and
    /// appends the document. Fails without state change when any chain
    /// would be consumed past its seed.
    pub fn push(&mut self, doc: Document, fabric: &Fabric) -> Result<(), StackError> {
        self.push_inner(doc, fabric, None)
    }

    /// [`SignatureStack::push`] with a segment cache for checkpointed
    /// fabrics.
    pub fn push_cached(
        &mut self,
        doc: Document,
        fabric: &Fabric,
        cache: &mut SegmentCache,
    ) -> Result<(), StackError> {
        self.push_inner(doc, fabric, Some(cache))
    }

    fn push_inner(
        &mut self,
        doc: Document,
        fabric: &Fabric,
        mut cache: Option<&mut SegmentCache>,
    ) -> Result<(), StackError> {
        assert_eq!(fabric.params().width(), self.width(), "fabric width mismatch");
        let n = fabric.params().length();
        let multiset = self.next_multiset(doc.payload());
        for (k, c) in multiset.support() {
            if self.sigma[k as usize] + c as u32 > n {
                return Err(StackError::CapacityExhausted { chain: k });
            }
        }
        for (k, c) in multiset.support() {
            let sigma = self.sigma[k as usize] + c as u32;
            self.sigma[k as usize] = sigma;
            self.top[k as usize] = match cache.as_deref_mut() {
                Some(cache) => fabric.element_cached(cache, k, n - sigma),
                None => fabric.element(k, n - sigma),
            };
        }
        self.concat.absorb(doc.payload());
        extend(&mut self.documents, doc);
        Ok(())
    }

    /// Per-chain distances the extension claims, or `None` if any chain
    /// disagrees with the oracle. Shared by validate and apply.
    fn extension_distances(
        &self,
        payload: &[u8],
        tau: &SparseFamily,
        n_max: u32,
    ) -> Option<Vec<(u32, u32)>> {
        let kappa = self.oracle.kappa() as u32;
        if tau.len() as u32 > kappa {
            return None;
        }
        if tau.entries().any(|(k, _)| k >= self.width()) {
            return None;
        }
        let multiset = self.next_multiset(payload);
        // Chains without a tau entry keep their value, so every chain the
        // oracle selects must come with a claimed new value.
        for (k, _) in multiset.support() {
            if tau.get(k).is_none() {
                return None;
            }
        }
        let limit = kappa.min(n_max);
        let mut distances = Vec::with_capacity(tau.len());
        for (k, claimed) in tau.entries() {
            let expected = multiset.count(k) as u32;
            match beta(claimed, self.top[k as usize], limit) {
                Some(dist) if dist == expected => distances.push((k, dist)),
                _ => return None,
            }
        }
        Some(distances)
    }

    /// The validator predicate: true iff overlaying `tau` onto the top is
    /// exactly the chain advance the oracle demands for `payload`.
    pub fn validate_extension(&self, payload: &[u8], tau: &SparseFamily, n_max: u32) -> bool {
        self.extension_distances(payload, tau, n_max).is_some()
    }

    /// Verifier-side push: validates and then applies `(doc, tau)`.
    /// Fails without state change when validation fails.
    pub fn apply_extension(
        &mut self,
        doc: Document,
        tau: &SparseFamily,
        n_max: u32,
    ) -> Result<(), StackError> {
        let distances = self
            .extension_distances(doc.payload(), tau, n_max)
            .ok_or(StackError::InvalidExtension)?;
        for (k, dist) in distances {
            self.sigma[k as usize] += dist;
            self.top[k as usize] = tau.get(k).unwrap();
        }
        self.concat.absorb(doc.payload());
        extend(&mut self.documents, doc);
        Ok(())
    }

    /// True iff `self` consumes no chain further than `other`.
    pub fn is_substack(&self, other: &SignatureStack) -> bool {
        self.width() == other.width()
            && self
                .sigma
                .iter()
                .zip(other.sigma.iter())
                .all(|(a, b)| a <= b)
    }

    /// Walks the top back down to the edge.
    pub fn reconstruct_edge(&self) -> Edge {
        Edge::from_values(
            self.top
                .iter()
                .zip(self.sigma.iter())
                .map(|(&t, &s)| chain_iterate(t, s))
                .collect(),
        )
    }

    /// Serializes the stack interchange file.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(STACK_MAGIC);
        out.extend_from_slice(&self.width().to_be_bytes());
        out.extend_from_slice(&self.kappa().to_be_bytes());
        out.extend_from_slice(&self.depth().to_be_bytes());
        for doc in &self.documents {
            out.extend_from_slice(&(doc.len() as u32).to_be_bytes());
            out.extend_from_slice(doc.payload());
        }
        for &s in &self.sigma {
            out.extend_from_slice(&s.to_be_bytes());
        }
        for t in &self.top {
            out.extend_from_slice(t.as_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        r.expect_magic(STACK_MAGIC)?;
        let w = r.u32()?;
        let kappa = r.u16()?;
        let oracle = OracleParams::new(w, kappa).map_err(CodecError::BadParams)?;
        let depth = r.u32()?;
        let mut documents = Vec::with_capacity(depth as usize);
        let mut concat = RunningDigest::new();
        for _ in 0..depth {
            let len = r.u32()? as usize;
            let payload = r.bytes(len)?.to_vec();
            if payload.is_empty() {
                return Err(CodecError::Truncated);
            }
            concat.absorb(&payload);
            documents.push(Document(payload));
        }
        let mut sigma = Vec::with_capacity(w as usize);
        for _ in 0..w {
            sigma.push(r.u32()?);
        }
        let mut top = Vec::with_capacity(w as usize);
        for _ in 0..w {
            top.push(r.digest()?);
        }
        r.finish()?;
        Ok(SignatureStack {
            oracle,
            documents,
            sigma,
            top,
            concat,
        })
    }
}

impl fmt::Debug for SignatureStack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SignatureStack")
            .field("w", &self.width())
            .field("kappa", &self.kappa())
            .field("depth", &self.depth())
            .finish_non_exhaustive()
    }
}

/// Recovers the depth of a claimed top from the edge: every chain distance
/// must exist within `n_max` and the total must divide evenly by `kappa`.
pub fn depth_from_tops(edge: &Edge, top: &[Digest], n_max: u32, kappa: u16) -> Option<u32> {
    if top.len() != edge.width() as usize || kappa == 0 {
        return None;
    }
    let mut total: u64 = 0;
    for (k, &t) in top.iter().enumerate() {
        total += beta(t, edge.value(k as u32), n_max)? as u64;
    }
    if total % kappa as u64 != 0 {
        return None;
    }
    Some((total / kappa as u64) as u32)
}

/// Full stack verification against a published edge: recomputes every
/// per-chain consumption from the documents and checks that the claimed
/// top sits exactly that far above the edge.
pub fn verify_full(
    edge: &Edge,
    documents: &[Document],
    top: &[Digest],
    n_max: u32,
    kappa: u16,
) -> bool {
    let oracle = match OracleParams::new(edge.width(), kappa) {
        Ok(p) => p,
        Err(_) => return false,
    };
    if top.len() != edge.width() as usize {
        return false;
    }
    let mut sigma = vec![0u64; edge.width() as usize];
    let mut concat = RunningDigest::new();
    for doc in documents {
        concat.absorb(doc.payload());
        for (k, c) in hors(&concat.snapshot(), &oracle).support() {
            sigma[k as usize] += c as u64;
        }
    }
    for (k, &t) in top.iter().enumerate() {
        match beta(t, edge.value(k as u32), n_max) {
            Some(dist) if dist as u64 == sigma[k] => {}
            _ => return false,
        }
    }
    true
}
