//! Third-party adjudication.
//!
//! Judy holds only the out-of-band authenticated public values: the
//! signer's edge and the verifier's chain key `Q`. Alice submits the last
//! acknowledgement she received; Bob submits his stack replica. The
//! acknowledgement's chain distance witnesses the session depth, the
//! deeper of the two depth claims wins, and the stack is then verified
//! in full against the edge.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::fabric::Edge;
use crate::hashing::{beta, chain_iterate, hash_concat, Digest};
use crate::protocol::Variant;
use crate::stack::{verify_full, SignatureStack};

/// Evidence handed to the adjudicator.
pub struct AdjudicationInputs<'a> {
    pub edge: &'a Edge,
    /// Bob's authenticated chain public key.
    pub q_public: Digest,
    /// The chain length announced for the session.
    pub l: u32,
    /// The last acknowledgement value Alice received.
    pub alice_q: Digest,
    /// Bob's stack replica.
    pub bob_stack: &'a SignatureStack,
    pub variant: Variant,
    /// Maximum fabric length, bounding distance searches.
    pub n_max: u32,
    /// A document whose signature Bob disputes (RWS).
    pub disputed: Option<&'a [u8]>,
}

/// Who produced a document in the stack.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Signer {
    /// The session-binding opening document.
    Protocol,
    Alice,
    Bob,
}

/// Countersignature status of a MAWS transaction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Approval {
    Approved,
    Refused,
    /// The countersignature slot matches neither the equation nor zero.
    Inconsistent,
    /// Not checkable from the submitted acknowledgement values.
    Unverifiable,
}

/// One document of the verified stack.
#[derive(Clone, Debug)]
pub struct DocumentVerdict {
    pub index: u32,
    pub payload: Vec<u8>,
    pub signer: Signer,
    pub approval: Option<Approval>,
}

/// Result of an RWS repudiation scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DisputeFinding {
    /// The round whose stored signature matches the disputed document.
    pub matched_round: Option<u32>,
}

/// Overall evidence ruling.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VerdictOutcome {
    Accepted,
    /// Bob submitted fewer rounds than Alice's acknowledgement proves.
    BobStackTooShallow { proven: u32, submitted: u32 },
    /// Bob's stack failed verification against the edge.
    BobStackInvalid,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    /// Chain distance of Alice's submitted acknowledgement, if valid.
    pub alice_ack_distance: Option<u32>,
    /// Alice's depth claim derived from the distance.
    pub alice_depth: Option<u32>,
    /// Depth of Bob's submitted stack.
    pub bob_depth: u32,
    /// The depth the adjudicator settles on.
    pub accepted_depth: u32,
    pub outcome: VerdictOutcome,
    pub documents: Vec<DocumentVerdict>,
    pub dispute: Option<DisputeFinding>,
    pub anomalies: Vec<String>,
}

impl Verdict {
    pub fn accepted(&self) -> bool {
        self.outcome == VerdictOutcome::Accepted
    }
}

/// Depth witnessed by an acknowledgement at chain distance `dist`.
///
/// BWS and MAWS reveal one value per stack push, so distance equals
/// depth. RWS acknowledges each round with the value one step deeper than
/// its push (the signature key), so past the opening round the distance
/// runs one ahead of the depth.
fn depth_from_distance(variant: Variant, dist: u32) -> u32 {
    match variant {
        Variant::Bws | Variant::Maws => dist,
        Variant::Rws => {
            if dist <= 1 {
                dist
            } else {
                dist - 1
            }
        }
    }
}

pub fn adjudicate(inp: &AdjudicationInputs<'_>) -> Verdict {
    let mut anomalies = Vec::new();

    let alice_dist = beta(inp.alice_q, inp.q_public, inp.l.saturating_sub(1));
    if alice_dist.is_none() {
        anomalies.push(String::from(
            "alice's acknowledgement does not verify against Q; her depth claim is rejected",
        ));
    }
    let alice_depth = alice_dist.map(|d| depth_from_distance(inp.variant, d));
    let bob_depth = inp.bob_stack.depth();
    let accepted_depth = bob_depth.max(alice_depth.unwrap_or(0));

    if bob_depth < accepted_depth {
        // Alice's acknowledgement proves rounds Bob withheld.
        return Verdict {
            alice_ack_distance: alice_dist,
            alice_depth,
            bob_depth,
            accepted_depth,
            outcome: VerdictOutcome::BobStackTooShallow {
                proven: accepted_depth,
                submitted: bob_depth,
            },
            documents: Vec::new(),
            dispute: None,
            anomalies,
        };
    }

    let stack_ok = verify_full(
        inp.edge,
        inp.bob_stack.documents(),
        inp.bob_stack.top(),
        inp.n_max,
        inp.bob_stack.kappa(),
    ) && inp.bob_stack.width() == inp.edge.width();

    if !stack_ok {
        return Verdict {
            alice_ack_distance: alice_dist,
            alice_depth,
            bob_depth,
            accepted_depth,
            outcome: VerdictOutcome::BobStackInvalid,
            documents: Vec::new(),
            dispute: None,
            anomalies,
        };
    }

    if alice_depth.map_or(true, |d| d < bob_depth) {
        anomalies.push(String::from(
            "alice's acknowledgement proves less depth than bob's valid stack; the stack wins",
        ));
    }

    // Chain values Judy can derive: distance s is alice_dist - s steps of
    // hashing from alice's submitted value.
    let q_at = |s: u32| -> Option<Digest> {
        let g = alice_dist?;
        if s > g {
            return None;
        }
        Some(chain_iterate(inp.alice_q, g - s))
    };

    let docs = inp.bob_stack.documents();
    let mut documents = Vec::with_capacity(docs.len());
    for (p, doc) in docs.iter().enumerate() {
        let p = p as u32;
        let (signer, approval) = match inp.variant {
            _ if p == 0 => (Signer::Protocol, None),
            Variant::Bws => (Signer::Alice, None),
            Variant::Rws => (Signer::Bob, None),
            Variant::Maws if p % 2 == 1 => {
                // Transaction document of round j = p + 1; its successor
                // slot holds the countersignature.
                let j = p + 1;
                let approval = match docs.get(p as usize + 1) {
                    None => Approval::Unverifiable,
                    Some(csig_doc) => {
                        let csig = csig_doc.payload();
                        if csig == [0u8; 32] {
                            Approval::Refused
                        } else {
                            match q_at(j + 1) {
                                None => Approval::Unverifiable,
                                Some(q) => {
                                    let expected =
                                        hash_concat(&[doc.payload(), q.as_bytes()]);
                                    if csig == expected.as_bytes() {
                                        Approval::Approved
                                    } else {
                                        Approval::Inconsistent
                                    }
                                }
                            }
                        }
                    }
                };
                if approval == Approval::Inconsistent {
                    anomalies.push(format!(
                        "round {j}: countersignature slot matches neither the signing equation nor the zero document"
                    ));
                }
                (Signer::Alice, Some(approval))
            }
            Variant::Maws => (Signer::Bob, None),
        };
        documents.push(DocumentVerdict {
            index: p,
            payload: doc.payload().to_vec(),
            signer,
            approval,
        });
    }

    // Repudiation scan: find the round whose stored signature commits to
    // the disputed document.
    let dispute = inp.disputed.map(|delta| {
        let mut matched = None;
        for p in 1..docs.len() as u32 {
            let j = p + 1;
            if let Some(q) = q_at(j + 1) {
                let expected = hash_concat(&[delta, q.as_bytes()]);
                if docs[p as usize].payload() == expected.as_bytes() {
                    matched = Some(j);
                    break;
                }
            }
        }
        DisputeFinding {
            matched_round: matched,
        }
    });

    Verdict {
        alice_ack_distance: alice_dist,
        alice_depth,
        bob_depth,
        accepted_depth,
        outcome: VerdictOutcome::Accepted,
        documents,
        dispute,
        anomalies,
    }
}
