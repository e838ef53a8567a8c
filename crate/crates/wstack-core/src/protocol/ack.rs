//! The verifier's acknowledgement chain.
//!
//! Bob commits to `Q`, the end of a private length-`L` hash chain, and
//! acknowledges protocol progress by revealing successively deeper
//! preimages. Holding a value `q` with `chain_iterate(q, s) = Q` proves
//! `s` completed acknowledgements; the distance doubles as the stack
//! depth witness during adjudication.

use alloc::vec::Vec;

use crate::hashing::{chain_iterate, chain_step, keyed_digest, Digest};

const ACK_SEED_LABEL: &[u8] = b"ack-seed";

/// Public key of the acknowledgement chain derived from `seed`.
pub fn ack_public(seed: &[u8; 32], l: u32) -> Digest {
    let q0 = keyed_digest(seed, &[ACK_SEED_LABEL]);
    chain_iterate(q0, l - 1)
}

/// Verifies a claimed acknowledgement: the smallest `s` in `[1, max_gap]`
/// with `chain_iterate(q_star, s) = last_known`, or `None`. An absent
/// result means the value is not a fresh preimage of what we hold.
pub fn ack_verify(q_star: Digest, last_known: Digest, max_gap: u32) -> Option<u32> {
    let mut v = q_star;
    for s in 1..=max_gap {
        v = chain_step(v);
        if v == last_known {
            return Some(s);
        }
    }
    None
}

/// Bob's side: the full private chain plus the reveal cursor.
///
/// `values[i+1] = H(values[i])`; the public key is the last value. A
/// value's *distance* is how many hash steps it sits before the public
/// key; reveals only ever move to larger distances.
pub struct AckChain {
    values: Vec<Digest>,
    revealed: u32,
}

impl AckChain {
    pub fn generate(seed: &[u8; 32], l: u32) -> Self {
        assert!(l >= 2, "acknowledgement chain needs length >= 2");
        let mut values = Vec::with_capacity(l as usize);
        let mut v = keyed_digest(seed, &[ACK_SEED_LABEL]);
        values.push(v);
        for _ in 1..l {
            v = chain_step(v);
            values.push(v);
        }
        AckChain {
            values,
            revealed: 0,
        }
    }

    pub fn length(&self) -> u32 {
        self.values.len() as u32
    }

    pub fn public_key(&self) -> Digest {
        *self.values.last().unwrap()
    }

    /// Highest distance revealed so far.
    pub fn revealed_distance(&self) -> u32 {
        self.revealed
    }

    /// The chain value `dist` steps before the public key.
    pub fn value_at_distance(&self, dist: u32) -> Digest {
        assert!(dist < self.length(), "distance beyond chain seed");
        self.values[(self.length() - 1 - dist) as usize]
    }

    /// Reveals the value at `dist`, moving the cursor monotonically.
    pub fn reveal(&mut self, dist: u32) -> Digest {
        assert!(
            dist >= self.revealed,
            "acknowledgement cursor may only advance"
        );
        self.revealed = dist;
        self.value_at_distance(dist)
    }
}

/// Alice's side: the last verified chain value and its distance from `Q`.
#[derive(Clone)]
pub struct AckWatcher {
    last: Digest,
    dist: u32,
}

impl AckWatcher {
    pub fn new(q_public: Digest) -> Self {
        AckWatcher {
            last: q_public,
            dist: 0,
        }
    }

    pub fn distance(&self) -> u32 {
        self.dist
    }

    pub fn last(&self) -> Digest {
        self.last
    }

    /// Accepts `q_star` iff it verifies as the value at exactly
    /// `expected_dist`; updates the watcher on success.
    pub fn advance_to(&mut self, q_star: Digest, expected_dist: u32) -> bool {
        if expected_dist <= self.dist {
            return false;
        }
        let gap = expected_dist - self.dist;
        match ack_verify(q_star, self.last, gap) {
            Some(s) if s == gap => {
                self.last = q_star;
                self.dist = expected_dist;
                true
            }
            _ => false,
        }
    }
}
