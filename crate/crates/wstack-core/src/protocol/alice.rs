//! The signer endpoint: owns the fabric, pushes documents, and consumes
//! acknowledgement preimages. In RWS the same endpoint acts as Bob's
//! signature server instead of signing its own documents.

use alloc::vec;
use alloc::vec::Vec;

use crate::analysis;
use crate::fabric::{Fabric, SegmentCache};
use crate::hashing::{hash_concat, oracle_hash, Digest};
use crate::protocol::ack::AckWatcher;
use crate::protocol::{Arq, Endpoint, FailureKind, SessionOutcome, SetupError, Variant};
use crate::stack::{family_diff, Document, SignatureStack, SparseFamily, StackError};
use crate::wire::{MacKey, Payload, WireMessage};

/// Per-transaction result of a MAWS round, as seen by Alice.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RoundStatus {
    /// The countersignature checked out at the end of the round.
    Signed,
    /// Bob answered with the zero document.
    Refused,
    /// The countersignature came back inconsistent; round consumed, void.
    Void,
}

/// Signer-side session configuration.
pub struct AliceConfig {
    pub session: [u8; 16],
    pub variant: Variant,
    /// Transaction budget announced in the invitation.
    pub l: u32,
    /// Documents Alice signs (BWS/MAWS). Ignored for RWS.
    pub documents: Vec<Vec<u8>>,
    /// Rounds to serve in RWS.
    pub expected_rounds: u32,
    pub mac_key: Option<MacKey>,
    pub max_retx: u32,
    /// Stream tau elements one at a time with per-element confirmation.
    pub per_element: bool,
    /// Bob's chain key as authenticated out of band; a BOBKEY message
    /// carrying anything else is ignored. `None` trusts the first key.
    pub expected_bob_q: Option<Digest>,
}

enum Phase {
    AwaitBobKey,
    /// Outstanding element `idx` of the current round's tau stream.
    Streaming { j: u32, idx: usize },
    AwaitAck { j: u32 },
    AwaitMawsAck { j: u32 },
    AwaitMawsFinal { j: u32 },
    AwaitRwsSig { j: u32 },
    AwaitRwsAck { j: u32 },
    Terminal,
}

/// Round scratch for the current signing round.
struct RoundScratch {
    doc: Vec<u8>,
    tau: SparseFamily,
    /// Countersignature received mid-round (MAWS).
    csig: Digest,
}

pub struct Alice {
    session: [u8; 16],
    variant: Variant,
    l: u32,
    documents: Vec<Vec<u8>>,
    expected_rounds: u32,
    mac_key: Option<MacKey>,
    per_element: bool,
    expected_bob_q: Option<Digest>,

    fabric: Fabric,
    cache: SegmentCache,
    stack: SignatureStack,
    watcher: Option<AckWatcher>,
    phase: Phase,
    arq: Arq,
    outcome: SessionOutcome,
    doc_cursor: usize,
    scratch: RoundScratch,
    statuses: Vec<(u32, RoundStatus)>,
}

impl Alice {
    pub fn new(fabric: Fabric, kappa: u16, cfg: AliceConfig) -> Result<Self, SetupError> {
        let params = *fabric.params();
        let cap = analysis::capacity(
            params.width() as u64,
            params.length() as u64,
            kappa as u64,
        );
        if cfg.l as u64 > cap.d_max {
            return Err(SetupError::BudgetExceedsCapacity {
                l: cfg.l,
                d_max: cap.d_max,
            });
        }
        let stack = SignatureStack::empty(fabric.edge(), kappa).map_err(|e| match e {
            StackError::BadParams(p) => SetupError::BadParams(p),
            _ => unreachable!("empty stack only fails on parameters"),
        })?;
        let cache = SegmentCache::new(params.width());
        Ok(Alice {
            session: cfg.session,
            variant: cfg.variant,
            l: cfg.l,
            documents: cfg.documents,
            expected_rounds: cfg.expected_rounds,
            mac_key: cfg.mac_key,
            per_element: cfg.per_element,
            expected_bob_q: cfg.expected_bob_q,
            fabric,
            cache,
            stack,
            watcher: None,
            phase: Phase::AwaitBobKey,
            arq: Arq::new(cfg.max_retx),
            outcome: SessionOutcome::InProgress,
            doc_cursor: 0,
            scratch: RoundScratch {
                doc: Vec::new(),
                tau: SparseFamily::new(),
                csig: Digest::zero(),
            },
            statuses: Vec::new(),
        })
    }

    pub fn stack(&self) -> &SignatureStack {
        &self.stack
    }

    /// Last verified acknowledgement value and its distance from `Q`.
    pub fn ack_state(&self) -> Option<(Digest, u32)> {
        self.watcher.as_ref().map(|w| (w.last(), w.distance()))
    }

    /// MAWS transaction outcomes in round order.
    pub fn round_statuses(&self) -> &[(u32, RoundStatus)] {
        &self.statuses
    }

    fn msg(&self, round: u32, payload: Payload) -> WireMessage {
        WireMessage::new(self.session, round, payload)
    }

    fn fail(&mut self, kind: FailureKind) -> Vec<WireMessage> {
        self.outcome = SessionOutcome::Failed(kind);
        self.phase = Phase::Terminal;
        Vec::new()
    }

    fn complete(&mut self) -> Vec<WireMessage> {
        self.outcome = SessionOutcome::Completed;
        self.phase = Phase::Terminal;
        Vec::new()
    }

    fn resend(&mut self) -> Vec<WireMessage> {
        match self.arq.resend() {
            Some(batch) => batch,
            None => self.fail(FailureKind::DoS),
        }
    }

    /// Pushes `payload` and returns the tau for this round.
    fn push_signed(&mut self, payload: Vec<u8>) -> Result<SparseFamily, Vec<WireMessage>> {
        let doc = Document::new(payload).expect("session documents are non-empty");
        let before = self.stack.top().to_vec();
        match self.stack.push_cached(doc, &self.fabric, &mut self.cache) {
            Ok(()) => Ok(family_diff(self.stack.top(), &before).expect("same width")),
            Err(StackError::CapacityExhausted { .. }) => {
                Err(self.fail(FailureKind::CapacityExhausted))
            }
            Err(_) => Err(self.fail(FailureKind::ProtocolViolation)),
        }
    }

    /// Pushes `payload` as round `j` and emits its signing message,
    /// either whole or as an element stream.
    fn open_round(&mut self, j: u32, payload: Vec<u8>) -> Vec<WireMessage> {
        let tau = match self.push_signed(payload.clone()) {
            Ok(tau) => tau,
            Err(out) => return out,
        };
        self.scratch = RoundScratch {
            doc: payload.clone(),
            tau: tau.clone(),
            csig: Digest::zero(),
        };
        if self.per_element && !tau.is_empty() {
            self.phase = Phase::Streaming { j, idx: 0 };
            let (k, value) = tau.entries().next().unwrap();
            return self.arq.fresh(vec![self.msg(
                j,
                Payload::Elem {
                    k: k as u16,
                    value,
                },
            )]);
        }
        self.phase = match self.variant {
            Variant::Maws if j > 1 => Phase::AwaitMawsAck { j },
            _ => Phase::AwaitAck { j },
        };
        self.arq
            .fresh(vec![self.msg(j, Payload::SignDoc { doc: payload, tau })])
    }

    /// Opens signing round `j` (BWS/MAWS), or completes the session when
    /// the document queue is empty.
    fn start_signing_round(&mut self, j: u32) -> Vec<WireMessage> {
        if self.doc_cursor >= self.documents.len() {
            return self.complete();
        }
        let payload = self.documents[self.doc_cursor].clone();
        self.doc_cursor += 1;
        self.open_round(j, payload)
    }

    /// The element at position `idx` of the current stream.
    fn stream_elem(&self, idx: usize) -> (u32, Digest) {
        self.scratch
            .tau
            .entries()
            .nth(idx)
            .expect("stream index in range")
    }

    fn advance_after_round(&mut self, j: u32) -> Vec<WireMessage> {
        match self.variant {
            Variant::Bws => self.start_signing_round(j + 1),
            Variant::Maws => self.start_signing_round(j + if j == 1 { 1 } else { 2 }),
            Variant::Rws => {
                // Rounds 2..=expected_rounds+1 carry client signatures.
                if j <= self.expected_rounds {
                    self.phase = Phase::AwaitRwsSig { j: j + 1 };
                    Vec::new()
                } else {
                    self.complete()
                }
            }
        }
    }

    fn on_message(&mut self, msg: WireMessage) -> Vec<WireMessage> {
        if msg.session != self.session {
            return Vec::new();
        }
        if matches!(self.phase, Phase::Terminal) {
            // The signer always completes last (on the final incoming
            // acknowledgement): nobody needs anything from her afterwards.
            return Vec::new();
        }
        match (&self.phase, &msg.payload) {
            (Phase::AwaitBobKey, Payload::BobKey { q }) => {
                if let Some(expected) = self.expected_bob_q {
                    // Out-of-band authentication failed; wait for the
                    // genuine key.
                    if *q != expected {
                        return Vec::new();
                    }
                }
                self.watcher = Some(AckWatcher::new(*q));
                let mut doc = self.l.to_be_bytes().to_vec();
                doc.extend_from_slice(q.as_bytes());
                self.open_round(1, doc)
            }

            (Phase::Streaming { j, idx }, Payload::Ack { q }) if msg.round == *j => {
                let (j, idx) = (*j, *idx);
                let (_, outstanding) = self.stream_elem(idx);
                if *q != outstanding {
                    return self.resend();
                }
                if idx + 1 < self.scratch.tau.len() {
                    self.phase = Phase::Streaming { j, idx: idx + 1 };
                    let (k, value) = self.stream_elem(idx + 1);
                    self.arq.fresh(vec![self.msg(
                        j,
                        Payload::Elem {
                            k: k as u16,
                            value,
                        },
                    )])
                } else {
                    // All elements confirmed; the document closes the round.
                    self.phase = match self.variant {
                        Variant::Maws if j > 1 => Phase::AwaitMawsAck { j },
                        _ => Phase::AwaitAck { j },
                    };
                    let doc = self.scratch.doc.clone();
                    self.arq.fresh(vec![self.msg(
                        j,
                        Payload::SignDoc {
                            doc,
                            tau: SparseFamily::new(),
                        },
                    )])
                }
            }

            (Phase::AwaitAck { j }, Payload::Ack { q }) if msg.round == *j => {
                // AwaitAck covers the opening round and BWS rounds; the
                // acknowledgement distance equals the round number.
                let j = *j;
                let watcher = self.watcher.as_mut().expect("watcher set after BOBKEY");
                if watcher.advance_to(*q, j) {
                    self.advance_after_round(j)
                } else {
                    self.resend()
                }
            }

            (Phase::AwaitMawsAck { j }, Payload::MawsAck { q, countersig })
                if msg.round == *j =>
            {
                let j = *j;
                let watcher = self.watcher.as_mut().expect("watcher set after BOBKEY");
                if !watcher.advance_to(*q, j) {
                    return self.resend();
                }
                self.scratch.csig = *countersig;
                let tau = match self.push_signed(countersig.as_bytes().to_vec()) {
                    Ok(tau) => tau,
                    Err(out) => return out,
                };
                self.phase = Phase::AwaitMawsFinal { j };
                self.arq.fresh(vec![self.msg(
                    j,
                    Payload::MawsCsig {
                        countersig: *countersig,
                        tau,
                    },
                )])
            }

            (Phase::AwaitMawsFinal { j }, Payload::Ack { q }) if msg.round == *j => {
                let j = *j;
                let watcher = self.watcher.as_mut().expect("watcher set after BOBKEY");
                if !watcher.advance_to(*q, j + 1) {
                    return self.resend();
                }
                let status = if self.scratch.csig.as_bytes() == &[0u8; 32] {
                    RoundStatus::Refused
                } else if self.scratch.csig == hash_concat(&[&self.scratch.doc, q.as_bytes()]) {
                    RoundStatus::Signed
                } else {
                    RoundStatus::Void
                };
                self.statuses.push((j, status));
                self.advance_after_round(j)
            }

            (Phase::AwaitRwsSig { j }, Payload::RwsSig { s }) if msg.round == *j => {
                let j = *j;
                let tau = match self.push_signed(s.as_bytes().to_vec()) {
                    Ok(tau) => tau,
                    Err(out) => return out,
                };
                self.phase = Phase::AwaitRwsAck { j };
                self.arq.fresh(vec![self.msg(j, Payload::RwsTau { tau })])
            }

            (Phase::AwaitRwsAck { j }, Payload::Ack { q }) if msg.round == *j => {
                let j = *j;
                let watcher = self.watcher.as_mut().expect("watcher set after BOBKEY");
                if watcher.advance_to(*q, j + 1) {
                    self.advance_after_round(j)
                } else {
                    // Under the authenticated channel a verified frame
                    // with an invalid acknowledgement is wilful.
                    self.fail(FailureKind::Validation)
                }
            }

            // Same-round duplicates mean the peer missed our last batch.
            (Phase::AwaitMawsFinal { j }, Payload::MawsAck { .. }) if msg.round == *j => {
                self.resend()
            }
            (Phase::AwaitRwsAck { j }, Payload::RwsSig { .. }) if msg.round == *j => {
                self.resend()
            }

            // Explicit rejection of the current round.
            (_, Payload::Nak { .. }) => self.resend(),

            // Stale frames (duplicates from earlier rounds) are ignored:
            // the driving side recovers through its timer, and answering
            // them would bounce duplicate echoes back and forth forever.
            _ => Vec::new(),
        }
    }

    fn current_round(&self) -> u32 {
        match &self.phase {
            Phase::AwaitBobKey => 0,
            Phase::Streaming { j, .. }
            | Phase::AwaitAck { j }
            | Phase::AwaitMawsAck { j }
            | Phase::AwaitMawsFinal { j }
            | Phase::AwaitRwsSig { j }
            | Phase::AwaitRwsAck { j } => *j,
            Phase::Terminal => u32::MAX,
        }
    }

    fn driving_now(&self) -> bool {
        !matches!(self.phase, Phase::AwaitRwsSig { .. } | Phase::Terminal)
    }
}

impl Endpoint for Alice {
    fn start(&mut self) -> Vec<WireMessage> {
        self.arq
            .fresh(vec![self.msg(0, Payload::Invite { l: self.l })])
    }

    fn on_frame(&mut self, bytes: &[u8]) -> Vec<WireMessage> {
        match WireMessage::decode(bytes, self.mac_key.as_ref()) {
            Ok(msg) => self.on_message(msg),
            // Undecodable frames are dropped; timers recover the round.
            Err(_) => Vec::new(),
        }
    }

    fn on_timeout(&mut self) -> Vec<WireMessage> {
        if !matches!(self.outcome, SessionOutcome::InProgress) || !self.driving_now() {
            return Vec::new();
        }
        self.resend()
    }

    fn outcome(&self) -> SessionOutcome {
        self.outcome
    }

    fn state_hash(&self) -> Digest {
        let mut state = self.stack.encode();
        state.push(match self.phase {
            Phase::AwaitBobKey => 0,
            Phase::Streaming { .. } => 1,
            Phase::AwaitAck { .. } => 2,
            Phase::AwaitMawsAck { .. } => 3,
            Phase::AwaitMawsFinal { .. } => 4,
            Phase::AwaitRwsSig { .. } => 5,
            Phase::AwaitRwsAck { .. } => 6,
            Phase::Terminal => 7,
        });
        state.extend_from_slice(&self.current_round().to_be_bytes());
        if let Some(w) = &self.watcher {
            state.extend_from_slice(w.last().as_bytes());
            state.extend_from_slice(&w.distance().to_be_bytes());
        }
        let wide = oracle_hash(&state);
        Digest::from_slice(&wide.as_bytes()[..32]).unwrap()
    }

    fn mac_key(&self) -> Option<MacKey> {
        self.mac_key
    }

    fn role_name(&self) -> &'static str {
        "alice"
    }
}
