//! The verifier endpoint: maintains a fabric-less stack replica through
//! validated extensions and acknowledges rounds by revealing preimages of
//! its acknowledgement chain. In MAWS it countersigns documents with
//! `H(doc || q)`; in RWS it is the signing client driving the rounds.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::fabric::Edge;
use crate::hashing::{chain_step, hash_concat, oracle_hash, Digest};
use crate::protocol::ack::AckChain;
use crate::protocol::{Arq, Endpoint, FailureKind, SessionOutcome, Variant};
use crate::stack::{Document, SignatureStack, SparseFamily};
use crate::wire::{MacKey, Payload, WireMessage};

/// Verifier-side session configuration.
pub struct BobConfig {
    pub session: [u8; 16],
    pub variant: Variant,
    /// Seed of the acknowledgement chain; its public key is assumed to be
    /// authenticated out of band.
    pub ack_seed: [u8; 32],
    pub mac_key: Option<MacKey>,
    pub max_retx: u32,
    /// Bound for preimage-distance searches: the maximum fabric length.
    pub n_max: u32,
    /// Send explicit NAK frames; otherwise stay silent and let the peer's
    /// timer act as the rejection.
    pub explicit_nak: bool,
    /// MAWS rounds Bob declines to countersign.
    pub refuse_rounds: BTreeSet<u32>,
    /// Documents Bob signs through the server (RWS).
    pub documents: Vec<Vec<u8>>,
}

enum Phase {
    AwaitInvite,
    /// Expecting the signing message of round `j`.
    AwaitRound { j: u32 },
    /// MAWS: countersignature sent, expecting its echo round.
    AwaitCsig { j: u32 },
    /// RWS: signature `j` sent, expecting the server's tau.
    AwaitTau { j: u32 },
    Terminal,
}

pub struct Bob {
    session: [u8; 16],
    variant: Variant,
    mac_key: Option<MacKey>,
    n_max: u32,
    explicit_nak: bool,
    refuse_rounds: BTreeSet<u32>,
    documents: Vec<Vec<u8>>,
    doc_cursor: usize,

    kappa: u16,
    ack_seed: [u8; 32],
    l: u32,
    chain: Option<AckChain>,
    stack: SignatureStack,
    phase: Phase,
    arq: Arq,
    outcome: SessionOutcome,
    /// Elements streamed ahead of the current round's document.
    elements: BTreeMap<u32, Digest>,
    /// RWS audit trail: the signed document under its round index.
    audit: Vec<(u32, Vec<u8>)>,
    /// Current RWS round scratch: the document and its signature.
    current_sig: Digest,
    current_doc: Vec<u8>,
}

impl Bob {
    pub fn new(edge: &Edge, kappa: u16, cfg: BobConfig) -> Result<Self, crate::stack::StackError> {
        let stack = SignatureStack::empty(edge, kappa)?;
        Ok(Bob {
            session: cfg.session,
            variant: cfg.variant,
            mac_key: cfg.mac_key,
            n_max: cfg.n_max,
            explicit_nak: cfg.explicit_nak,
            refuse_rounds: cfg.refuse_rounds,
            documents: cfg.documents,
            doc_cursor: 0,
            kappa,
            ack_seed: cfg.ack_seed,
            l: 0,
            chain: None,
            stack,
            phase: Phase::AwaitInvite,
            arq: Arq::new(cfg.max_retx),
            outcome: SessionOutcome::InProgress,
            elements: BTreeMap::new(),
            audit: Vec::new(),
            current_sig: Digest::zero(),
            current_doc: Vec::new(),
        })
    }

    pub fn stack(&self) -> &SignatureStack {
        &self.stack
    }

    /// Last acknowledgement value sent and its distance from `Q`.
    pub fn ack_state(&self) -> Option<(Digest, u32)> {
        self.chain
            .as_ref()
            .map(|c| (c.value_at_distance(c.revealed_distance()), c.revealed_distance()))
    }

    pub fn public_key(&self) -> Option<Digest> {
        self.chain.as_ref().map(|c| c.public_key())
    }

    /// RWS audit trail: `(round, document)` pairs in signing order.
    pub fn audit_log(&self) -> &[(u32, Vec<u8>)] {
        &self.audit
    }

    fn msg(&self, round: u32, payload: Payload) -> WireMessage {
        WireMessage::new(self.session, round, payload)
    }

    fn fail(&mut self, kind: FailureKind) -> Vec<WireMessage> {
        self.outcome = SessionOutcome::Failed(kind);
        self.phase = Phase::Terminal;
        Vec::new()
    }

    fn complete(&mut self) {
        self.outcome = SessionOutcome::Completed;
        self.phase = Phase::Terminal;
    }

    fn resend(&mut self) -> Vec<WireMessage> {
        match self.arq.resend() {
            Some(batch) => batch,
            None => self.fail(FailureKind::DoS),
        }
    }

    fn replay_free(&self) -> Vec<WireMessage> {
        self.arq.last_batch.clone()
    }

    /// Rejection of decodable-but-invalid content: an explicit NAK on
    /// authenticated channels, silence otherwise.
    fn nak(&mut self, round: u32) -> Vec<WireMessage> {
        if self.explicit_nak {
            vec![self.msg(round, Payload::Nak { round })]
        } else {
            Vec::new()
        }
    }

    fn chain(&self) -> &AckChain {
        self.chain.as_ref().expect("chain built on INVITE")
    }

    fn chain_mut(&mut self) -> &mut AckChain {
        self.chain.as_mut().expect("chain built on INVITE")
    }

    /// The opening document that binds the budget and the chain key.
    fn opening_document(&self) -> Vec<u8> {
        let mut doc = self.l.to_be_bytes().to_vec();
        doc.extend_from_slice(self.chain().public_key().as_bytes());
        doc
    }

    /// Starts RWS round `j` by signing the next queued document; empty
    /// when the queue is exhausted.
    fn next_rws_signature(&mut self, j: u32) -> Option<WireMessage> {
        if self.doc_cursor >= self.documents.len() {
            return None;
        }
        let doc = self.documents[self.doc_cursor].clone();
        self.doc_cursor += 1;
        // Sign with the chain value revealed only at the end of this
        // round: the server cannot mint this signature itself.
        let q_sig = self.chain().value_at_distance(j + 1);
        let s = hash_concat(&[&doc, q_sig.as_bytes()]);
        self.current_sig = s;
        self.current_doc = doc;
        self.phase = Phase::AwaitTau { j };
        Some(self.msg(j, Payload::RwsSig { s }))
    }

    /// Validates and applies a signing round; returns the acknowledgement
    /// batch or the rejection.
    fn handle_round(&mut self, j: u32, doc: Vec<u8>, tau: SparseFamily) -> Vec<WireMessage> {
        // The opening round must carry exactly the document Bob prepares
        // for himself.
        let payload = if j == 1 {
            let local = self.opening_document();
            if doc != local {
                return self.nak(j);
            }
            local
        } else {
            doc
        };
        // Per-element streams already delivered the tau.
        let effective_tau = if tau.is_empty() && !self.elements.is_empty() {
            SparseFamily::from_entries(self.elements.iter().map(|(&k, &v)| (k, v)))
        } else {
            tau
        };
        let document = match Document::new(payload.clone()) {
            Ok(d) => d,
            Err(_) => return self.nak(j),
        };
        if self
            .stack
            .apply_extension(document, &effective_tau, self.n_max)
            .is_err()
        {
            return self.nak(j);
        }
        self.elements.clear();
        match self.variant {
            Variant::Maws if j > 1 => {
                let countersig = if self.refuse_rounds.contains(&j) {
                    Digest::zero()
                } else {
                    let q_sig = self.chain().value_at_distance(j + 1);
                    hash_concat(&[&payload, q_sig.as_bytes()])
                };
                self.current_sig = countersig;
                self.current_doc = payload;
                let q = self.chain_mut().reveal(j);
                self.phase = Phase::AwaitCsig { j };
                self.arq
                    .fresh(vec![self.msg(j, Payload::MawsAck { q, countersig })])
            }
            Variant::Rws if j == 1 => {
                let q = self.chain_mut().reveal(1);
                let mut batch = vec![self.msg(1, Payload::Ack { q })];
                match self.next_rws_signature(2) {
                    Some(sig) => batch.push(sig),
                    None => self.complete(),
                }
                self.arq.fresh(batch)
            }
            // BWS rounds and the opening round of BWS/MAWS; the next
            // signing message carries round j + 1 in both cases.
            _ => {
                let q = self.chain_mut().reveal(j);
                self.phase = Phase::AwaitRound { j: j + 1 };
                self.arq.fresh(vec![self.msg(j, Payload::Ack { q })])
            }
        }
    }

    fn on_message(&mut self, msg: WireMessage) -> Vec<WireMessage> {
        if msg.session != self.session {
            return Vec::new();
        }
        if matches!(self.phase, Phase::Terminal) {
            return match self.outcome {
                SessionOutcome::Completed => self.replay_free(),
                _ => Vec::new(),
            };
        }
        match (&self.phase, msg.payload.clone()) {
            (Phase::AwaitInvite, Payload::Invite { l }) => {
                if l < 2 {
                    return self.nak(0);
                }
                self.l = l;
                self.chain = Some(AckChain::generate(&self.ack_seed, l));
                self.phase = Phase::AwaitRound { j: 1 };
                let q = self.chain().public_key();
                self.arq.fresh(vec![self.msg(0, Payload::BobKey { q })])
            }

            // A fresh invitation before anything is committed: the last
            // one may have been corrupted in flight (the signer ignores a
            // chain key that fails out-of-band authentication), so
            // rebuild and answer again.
            (Phase::AwaitRound { j: 1 }, Payload::Invite { l }) if self.stack.depth() == 0 => {
                if l < 2 {
                    return self.nak(0);
                }
                if l != self.l {
                    self.l = l;
                    self.chain = Some(AckChain::generate(&self.ack_seed, l));
                }
                let q = self.chain().public_key();
                self.arq.fresh(vec![self.msg(0, Payload::BobKey { q })])
            }

            (Phase::AwaitRound { j }, Payload::SignDoc { doc, tau }) if msg.round == *j => {
                let j = *j;
                self.handle_round(j, doc, tau)
            }

            // Per-element streaming: validate each element against the
            // stored top by hashing, echo it back as confirmation.
            (Phase::AwaitRound { j }, Payload::Elem { k, value }) if msg.round == *j => {
                let j = *j;
                let k = k as u32;
                if k >= self.stack.width() {
                    return self.nak(j);
                }
                let current = self.stack.top()[k as usize];
                let kappa = self.kappa as u32;
                let mut probe = value;
                let mut ok = false;
                for _ in 1..=kappa.min(self.n_max) {
                    probe = chain_step(probe);
                    if probe == current {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    return self.nak(j);
                }
                self.elements.insert(k, value);
                // Confirmation echoes the element value.
                vec![self.msg(j, Payload::Ack { q: value })]
            }

            (Phase::AwaitCsig { j }, Payload::MawsCsig { countersig, tau })
                if msg.round == *j =>
            {
                let j = *j;
                let document = match Document::new(countersig.as_bytes().to_vec()) {
                    Ok(d) => d,
                    Err(_) => return self.resend(),
                };
                if self.stack.apply_extension(document, &tau, self.n_max).is_err() {
                    // Retract to the countersignature send.
                    return self.resend();
                }
                let q = self.chain_mut().reveal(j + 1);
                self.phase = Phase::AwaitRound { j: j + 2 };
                self.arq.fresh(vec![self.msg(j, Payload::Ack { q })])
            }

            (Phase::AwaitTau { j }, Payload::RwsTau { tau }) if msg.round == *j => {
                let j = *j;
                let document = Document::new(self.current_sig.as_bytes().to_vec())
                    .expect("signature is non-empty");
                if self.stack.apply_extension(document, &tau, self.n_max).is_err() {
                    // Under the authenticated channel an invalid tau is a
                    // wilful violation.
                    return self.fail(FailureKind::Validation);
                }
                self.audit.push((j, self.current_doc.clone()));
                let q = self.chain_mut().reveal(j + 1);
                let mut batch = vec![self.msg(j, Payload::Ack { q })];
                match self.next_rws_signature(j + 1) {
                    Some(sig) => batch.push(sig),
                    None => self.complete(),
                }
                self.arq.fresh(batch)
            }

            // Same-round duplicate of the signing message: the peer
            // missed our countersignature.
            (Phase::AwaitCsig { j }, Payload::SignDoc { .. }) if msg.round == *j => {
                self.resend()
            }

            (_, Payload::Nak { .. }) => self.resend(),

            (_, _) if msg.round < self.current_round() => self.resend(),

            _ => Vec::new(),
        }
    }

    fn current_round(&self) -> u32 {
        match &self.phase {
            Phase::AwaitInvite => 0,
            Phase::AwaitRound { j } | Phase::AwaitCsig { j } | Phase::AwaitTau { j } => *j,
            Phase::Terminal => u32::MAX,
        }
    }
}

impl Endpoint for Bob {
    fn start(&mut self) -> Vec<WireMessage> {
        Vec::new()
    }

    fn on_frame(&mut self, bytes: &[u8]) -> Vec<WireMessage> {
        match WireMessage::decode(bytes, self.mac_key.as_ref()) {
            Ok(msg) => self.on_message(msg),
            Err(_) => Vec::new(),
        }
    }

    fn on_timeout(&mut self) -> Vec<WireMessage> {
        // Only the RWS client drives rounds; everywhere else the signer's
        // timer recovers losses.
        if !matches!(self.outcome, SessionOutcome::InProgress)
            || !matches!(self.phase, Phase::AwaitTau { .. })
        {
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
            Phase::AwaitInvite => 0,
            Phase::AwaitRound { .. } => 1,
            Phase::AwaitCsig { .. } => 2,
            Phase::AwaitTau { .. } => 3,
            Phase::Terminal => 4,
        });
        state.extend_from_slice(&self.current_round().to_be_bytes());
        if let Some(c) = &self.chain {
            state.extend_from_slice(&c.revealed_distance().to_be_bytes());
        }
        for (k, v) in &self.elements {
            state.extend_from_slice(&k.to_be_bytes());
            state.extend_from_slice(v.as_bytes());
        }
        state.extend_from_slice(&(self.audit.len() as u32).to_be_bytes());
        let wide = oracle_hash(&state);
        Digest::from_slice(&wide.as_bytes()[..32]).unwrap()
    }

    fn mac_key(&self) -> Option<MacKey> {
        self.mac_key
    }

    fn role_name(&self) -> &'static str {
        "bob"
    }
}
