//! Deterministic session harness: a seeded lossy channel, a discrete-event
//! driver for one Alice/Bob pair, fault-injection scenarios, and wire
//! accounting.
//!
//! Time is a virtual tick counter. Every channel decision (drop, corrupt,
//! bit position) comes from one seeded stream in send order, so a
//! `(seed, config, documents)` triple reproduces its transcript
//! byte-for-byte.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fabric::{Fabric, FabricParams};
use crate::protocol::{
    ack_public, adjudicate, AdjudicationInputs, Alice, AliceConfig, Bob, BobConfig, Endpoint,
    SessionOutcome, SetupError, Variant, VerdictOutcome,
};
use crate::stack::{verify_full, Document, SignatureStack};
use crate::wire::{MacKey, HEADER_BYTES, MAC_BYTES};

/// Channel behavior knobs. All randomness flows from `rng_seed`.
#[derive(Clone, Copy, Debug)]
pub struct ChannelConfig {
    pub drop_prob: f64,
    pub corrupt_prob: f64,
    pub rng_seed: u64,
    pub max_retx: u32,
    pub latency_ticks: u32,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            drop_prob: 0.0,
            corrupt_prob: 0.0,
            rng_seed: 0,
            max_retx: crate::protocol::DEFAULT_MAX_RETX,
            latency_ticks: 1,
        }
    }
}

/// One side of the session.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
        }
    }
}

/// What happened to one wire or endpoint event.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EventKind {
    /// A frame left the sender's radio.
    Send,
    /// The channel lost it.
    Drop,
    /// The channel flipped one bit; delivery still happens.
    Corrupt,
    /// The frame reached the receiving endpoint.
    Deliver,
    /// The receiving endpoint's protocol state changed.
    Transition,
    /// An endpoint failed.
    Failure,
}

/// One transcript line.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TranscriptEvent {
    pub tick: u64,
    pub kind: EventKind,
    /// Sender for Send/Drop/Corrupt, receiver otherwise.
    pub party: Party,
    pub msg_type: u8,
    pub round: u32,
    pub frame_bytes: u32,
    pub payload_bytes: u32,
    /// Deliver events: the delivered frame had been corrupted.
    pub corrupted: bool,
    pub note: Option<String>,
}

/// Replayable record of everything that crossed the channel.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Transcript {
    pub events: Vec<TranscriptEvent>,
}

impl Transcript {
    fn push(&mut self, ev: TranscriptEvent) {
        self.events.push(ev);
    }

    /// Line-delimited rendering: one record per event.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for ev in &self.events {
            let kind = match ev.kind {
                EventKind::Send => "send",
                EventKind::Drop => "drop",
                EventKind::Corrupt => "corrupt",
                EventKind::Deliver => "deliver",
                EventKind::Transition => "transition",
                EventKind::Failure => "failure",
            };
            out.push_str(&format!(
                "tick={} event={} party={} type=0x{:02x} round={} frame={} payload={}{}{}\n",
                ev.tick,
                kind,
                ev.party.name(),
                ev.msg_type,
                ev.round,
                ev.frame_bytes,
                ev.payload_bytes,
                if ev.corrupted { " corrupted=1" } else { "" },
                match &ev.note {
                    Some(n) => format!(" note={n}"),
                    None => String::new(),
                },
            ));
        }
        out
    }
}

/// A targeted channel fault, keyed on the running occurrence count of a
/// message type.
#[derive(Clone, Copy, Debug)]
pub enum TargetedFault {
    /// Flip `bit` of the payload area in the `nth` frame of `msg_type`.
    TamperNth { msg_type: u8, nth: u32, bit: u32 },
    /// Deliver the `nth` frame of `msg_type` twice.
    ReplayNth { msg_type: u8, nth: u32 },
}

/// Full session parameterization for the driver.
pub struct SessionConfig {
    pub variant: Variant,
    pub fabric: FabricParams,
    pub kappa: u16,
    /// Transaction budget; bounds the acknowledgement chain.
    pub l: u32,
    pub alice_seed: [u8; 32],
    pub bob_seed: [u8; 32],
    /// Signed documents: Alice's in BWS/MAWS, Bob's in RWS.
    pub documents: Vec<Vec<u8>>,
    pub channel: ChannelConfig,
    pub mac_key: Option<[u8; 32]>,
    /// Stream tau elements individually (BWS refinement).
    pub per_element: bool,
    /// MAWS rounds Bob refuses to countersign.
    pub refuse_rounds: BTreeSet<u32>,
}

impl SessionConfig {
    /// The toy profile: small fabric, three-index oracle.
    pub fn toy(variant: Variant, documents: Vec<Vec<u8>>, channel: ChannelConfig) -> Self {
        SessionConfig {
            variant,
            fabric: FabricParams::new(8, 32, 1).unwrap(),
            kappa: 3,
            l: 48,
            alice_seed: [0xa1; 32],
            bob_seed: [0xb0; 32],
            documents,
            channel,
            mac_key: None,
            per_element: false,
            refuse_rounds: BTreeSet::new(),
        }
    }
}

/// Final states and the transcript of a driven session.
pub struct SessionResult {
    pub transcript: Transcript,
    pub alice: Alice,
    pub bob: Bob,
    pub ticks: u64,
}

impl SessionResult {
    pub fn alice_outcome(&self) -> SessionOutcome {
        self.alice.outcome()
    }

    pub fn bob_outcome(&self) -> SessionOutcome {
        self.bob.outcome()
    }

    /// The session reached its end: the signer-side endpoint completed
    /// and nobody failed. (The reactive verifier of BWS/MAWS has no
    /// notion of "last round" and simply goes quiet.)
    pub fn succeeded(&self) -> bool {
        self.alice_outcome() == SessionOutcome::Completed
            && !matches!(self.bob_outcome(), SessionOutcome::Failed(_))
    }

    /// Byte-identical stack replicas on both sides.
    pub fn stacks_equal(&self) -> bool {
        self.alice.stack().encode() == self.bob.stack().encode()
    }
}

#[derive(PartialEq, Eq)]
struct QueuedEvent {
    at: u64,
    seq: u64,
    what: Queued,
}

#[derive(PartialEq, Eq)]
enum Queued {
    Deliver {
        to: Party,
        bytes: Vec<u8>,
        corrupted: bool,
    },
    Timer {
        party: Party,
        gen: u64,
    },
}

impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

struct Driver {
    queue: BinaryHeap<Reverse<QueuedEvent>>,
    rng: ChaCha8Rng,
    channel: ChannelConfig,
    timeout_ticks: u64,
    transcript: Transcript,
    now: u64,
    seq: u64,
    gens: BTreeMap<Party, u64>,
    type_counters: BTreeMap<u8, u32>,
    fault: Option<TargetedFault>,
    mac_framed: bool,
}

impl Driver {
    fn new(channel: ChannelConfig, fault: Option<TargetedFault>, mac_framed: bool) -> Self {
        let latency = channel.latency_ticks.max(1) as u64;
        Driver {
            queue: BinaryHeap::new(),
            rng: ChaCha8Rng::seed_from_u64(channel.rng_seed),
            channel,
            timeout_ticks: 2 * latency + 2,
            transcript: Transcript::default(),
            now: 0,
            seq: 0,
            gens: BTreeMap::new(),
            type_counters: BTreeMap::new(),
            fault,
            mac_framed,
        }
    }

    fn chance(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            return false;
        }
        (self.rng.next_u64() as f64 / u64::MAX as f64) < p
    }

    fn schedule(&mut self, at: u64, what: Queued) {
        self.seq += 1;
        self.queue.push(Reverse(QueuedEvent {
            at,
            seq: self.seq,
            what,
        }));
    }

    fn frame_meta(&self, bytes: &[u8]) -> (u8, u32, u32) {
        let msg_type = bytes.first().copied().unwrap_or(0);
        let round = if bytes.len() >= HEADER_BYTES {
            u32::from_be_bytes(bytes[17..21].try_into().unwrap())
        } else {
            0
        };
        let overhead = HEADER_BYTES + if self.mac_framed { MAC_BYTES } else { 0 };
        let payload = bytes.len().saturating_sub(overhead) as u32;
        (msg_type, round, payload)
    }

    /// Runs one frame through the channel model.
    fn transmit(&mut self, from: Party, mut bytes: Vec<u8>) {
        let (msg_type, round, payload) = self.frame_meta(&bytes);
        let base = TranscriptEvent {
            tick: self.now,
            kind: EventKind::Send,
            party: from,
            msg_type,
            round,
            frame_bytes: bytes.len() as u32,
            payload_bytes: payload,
            corrupted: false,
            note: None,
        };
        self.transcript.push(base.clone());

        // Targeted faults fire by message-type occurrence count.
        let count = {
            let c = self.type_counters.entry(msg_type).or_insert(0);
            *c += 1;
            *c
        };
        let mut corrupted = false;
        let mut replay = false;
        match self.fault {
            Some(TargetedFault::TamperNth {
                msg_type: t,
                nth,
                bit,
            }) if t == msg_type && nth == count => {
                let idx = HEADER_BYTES + bit as usize / 8;
                if idx < bytes.len() {
                    bytes[idx] ^= 1 << (bit % 8);
                    corrupted = true;
                    self.transcript.push(TranscriptEvent {
                        kind: EventKind::Corrupt,
                        corrupted: true,
                        ..base.clone()
                    });
                }
            }
            Some(TargetedFault::ReplayNth { msg_type: t, nth }) if t == msg_type && nth == count => {
                replay = true;
            }
            _ => {}
        }

        if self.chance(self.channel.drop_prob) {
            self.transcript.push(TranscriptEvent {
                kind: EventKind::Drop,
                ..base
            });
            return;
        }
        if !corrupted && self.chance(self.channel.corrupt_prob) {
            let bit = (self.rng.next_u64() % (bytes.len() as u64 * 8)) as usize;
            bytes[bit / 8] ^= 1 << (bit % 8);
            corrupted = true;
            self.transcript.push(TranscriptEvent {
                kind: EventKind::Corrupt,
                corrupted: true,
                ..base
            });
        }
        let latency = self.channel.latency_ticks.max(1) as u64;
        self.schedule(
            self.now + latency,
            Queued::Deliver {
                to: from.other(),
                bytes: bytes.clone(),
                corrupted,
            },
        );
        if replay {
            self.schedule(
                self.now + latency + 1,
                Queued::Deliver {
                    to: from.other(),
                    bytes,
                    corrupted,
                },
            );
        }
    }

    /// Sends a batch and arms the sender's retransmission timer.
    fn send_batch(&mut self, from: Party, frames: Vec<Vec<u8>>) {
        if frames.is_empty() {
            return;
        }
        for bytes in frames {
            self.transmit(from, bytes);
        }
        let gen = {
            let g = self.gens.entry(from).or_insert(0);
            *g += 1;
            *g
        };
        self.schedule(self.now + self.timeout_ticks, Queued::Timer { party: from, gen });
    }

    fn note_failure(&mut self, party: Party, before: SessionOutcome, after: SessionOutcome) {
        if before == after {
            return;
        }
        if let SessionOutcome::Failed(kind) = after {
            self.transcript.push(TranscriptEvent {
                tick: self.now,
                kind: EventKind::Failure,
                party,
                msg_type: 0,
                round: 0,
                frame_bytes: 0,
                payload_bytes: 0,
                corrupted: false,
                note: Some(format!("{kind:?}")),
            });
        }
    }
}

fn encode_batch(msgs: &[crate::wire::WireMessage], key: Option<&MacKey>) -> Vec<Vec<u8>> {
    msgs.iter().map(|m| m.encode(key)).collect()
}

/// Builds the endpoint pair a config describes: the fabric regenerated
/// from the signer seed, the chain key pre-shared as the out-of-band
/// authentic value, and the session id derived from the channel seed.
pub fn build_endpoints(cfg: &SessionConfig) -> Result<(Alice, Bob), SetupError> {
    let fabric = Fabric::generate(cfg.alice_seed, cfg.fabric);
    let expected_q = ack_public(&cfg.bob_seed, cfg.l);
    let mac_key = cfg.mac_key.map(MacKey);
    let mut session_id = [0u8; 16];
    let mut id_rng = ChaCha8Rng::seed_from_u64(cfg.channel.rng_seed ^ 0x5e5510);
    id_rng.fill_bytes(&mut session_id);

    let (alice_docs, bob_docs, expected_rounds) = match cfg.variant {
        Variant::Rws => (Vec::new(), cfg.documents.clone(), cfg.documents.len() as u32),
        _ => (cfg.documents.clone(), Vec::new(), 0),
    };

    let alice = Alice::new(
        fabric,
        cfg.kappa,
        AliceConfig {
            session: session_id,
            variant: cfg.variant,
            l: cfg.l,
            documents: alice_docs,
            expected_rounds,
            mac_key,
            max_retx: cfg.channel.max_retx,
            per_element: cfg.per_element,
            expected_bob_q: Some(expected_q),
        },
    )?;
    let edge = alice.stack().reconstruct_edge();
    let bob = Bob::new(
        &edge,
        cfg.kappa,
        BobConfig {
            session: session_id,
            variant: cfg.variant,
            ack_seed: cfg.bob_seed,
            mac_key,
            max_retx: cfg.channel.max_retx,
            n_max: cfg.fabric.length(),
            explicit_nak: cfg.mac_key.is_some(),
            refuse_rounds: cfg.refuse_rounds.clone(),
            documents: bob_docs,
        },
    )
    .map_err(|e| match e {
        crate::stack::StackError::BadParams(p) => SetupError::BadParams(p),
        _ => unreachable!("verifier construction only fails on parameters"),
    })?;
    Ok((alice, bob))
}

/// [`run_session`] with one targeted channel fault injected.
pub fn run_session_with_fault(
    cfg: &SessionConfig,
    fault: Option<TargetedFault>,
) -> Result<SessionResult, SetupError> {
    let (mut alice, mut bob) = build_endpoints(cfg)?;
    let mac_key = cfg.mac_key.map(MacKey);
    let mut driver = Driver::new(cfg.channel, fault, cfg.mac_key.is_some());

    let batch = alice.start();
    let frames = encode_batch(&batch, mac_key.as_ref());
    driver.send_batch(Party::Alice, frames);
    let batch = bob.start();
    let frames = encode_batch(&batch, mac_key.as_ref());
    driver.send_batch(Party::Bob, frames);

    // At most this many scheduler steps; prevents a livelocked pair from
    // spinning forever.
    let mut budget = 2_000_000u64;
    while let Some(Reverse(ev)) = driver.queue.pop() {
        budget = budget.saturating_sub(1);
        if budget == 0 {
            break;
        }
        driver.now = ev.at.max(driver.now);
        match ev.what {
            Queued::Deliver {
                to,
                bytes,
                corrupted,
            } => {
                let (msg_type, round, payload) = driver.frame_meta(&bytes);
                let endpoint: &mut dyn Endpoint = match to {
                    Party::Alice => &mut alice,
                    Party::Bob => &mut bob,
                };
                let before_hash = endpoint.state_hash();
                let before_outcome = endpoint.outcome();
                let out = endpoint.on_frame(&bytes);
                let changed = endpoint.state_hash() != before_hash;
                let after_outcome = endpoint.outcome();
                let key = endpoint.mac_key();
                driver.transcript.push(TranscriptEvent {
                    tick: driver.now,
                    kind: EventKind::Deliver,
                    party: to,
                    msg_type,
                    round,
                    frame_bytes: bytes.len() as u32,
                    payload_bytes: payload,
                    corrupted,
                    note: None,
                });
                if changed {
                    driver.transcript.push(TranscriptEvent {
                        tick: driver.now,
                        kind: EventKind::Transition,
                        party: to,
                        msg_type,
                        round,
                        frame_bytes: 0,
                        payload_bytes: 0,
                        corrupted,
                        note: None,
                    });
                }
                driver.note_failure(to, before_outcome, after_outcome);
                let frames = encode_batch(&out, key.as_ref());
                driver.send_batch(to, frames);
            }
            Queued::Timer { party, gen } => {
                if driver.gens.get(&party).copied().unwrap_or(0) != gen {
                    continue; // a newer batch superseded this timer
                }
                let endpoint: &mut dyn Endpoint = match party {
                    Party::Alice => &mut alice,
                    Party::Bob => &mut bob,
                };
                let before_outcome = endpoint.outcome();
                let out = endpoint.on_timeout();
                let after_outcome = endpoint.outcome();
                let key = endpoint.mac_key();
                driver.note_failure(party, before_outcome, after_outcome);
                let frames = encode_batch(&out, key.as_ref());
                driver.send_batch(party, frames);
            }
        }
        let done = |o: SessionOutcome| !matches!(o, SessionOutcome::InProgress);
        if done(alice.outcome()) && done(bob.outcome()) {
            break;
        }
        if matches!(alice.outcome(), SessionOutcome::Failed(_))
            || matches!(bob.outcome(), SessionOutcome::Failed(_))
        {
            break;
        }
    }

    let ticks = driver.now;
    Ok(SessionResult {
        transcript: driver.transcript,
        alice,
        bob,
        ticks,
    })
}

/// Drives one session to completion or typed failure.
pub fn run_session(cfg: &SessionConfig) -> Result<SessionResult, SetupError> {
    run_session_with_fault(cfg, None)
}

/// Per-party wire accounting extracted from a transcript. Counts bytes as
/// transmitted (Send events), whether or not the channel delivered them.
pub struct WireStats {
    payload_by_party_round: BTreeMap<(Party, u32), u64>,
    frames_by_party: BTreeMap<Party, u64>,
    bytes_by_party: BTreeMap<Party, u64>,
}

pub fn wire_stats(t: &Transcript) -> WireStats {
    let mut payload_by_party_round = BTreeMap::new();
    let mut frames_by_party = BTreeMap::new();
    let mut bytes_by_party = BTreeMap::new();
    for ev in &t.events {
        if ev.kind != EventKind::Send {
            continue;
        }
        *payload_by_party_round
            .entry((ev.party, ev.round))
            .or_insert(0) += ev.payload_bytes as u64;
        *frames_by_party.entry(ev.party).or_insert(0) += 1;
        *bytes_by_party.entry(ev.party).or_insert(0) += ev.frame_bytes as u64;
    }
    WireStats {
        payload_by_party_round,
        frames_by_party,
        bytes_by_party,
    }
}

impl WireStats {
    /// Payload bytes `party` transmitted tagged with `round`.
    pub fn round_payload(&self, party: Party, round: u32) -> u64 {
        self.payload_by_party_round
            .get(&(party, round))
            .copied()
            .unwrap_or(0)
    }

    pub fn total_frames(&self, party: Party) -> u64 {
        self.frames_by_party.get(&party).copied().unwrap_or(0)
    }

    pub fn total_bytes(&self, party: Party) -> u64 {
        self.bytes_by_party.get(&party).copied().unwrap_or(0)
    }

    /// Rounds that saw traffic from `party`.
    pub fn rounds(&self, party: Party) -> impl Iterator<Item = u32> + '_ {
        self.payload_by_party_round
            .keys()
            .filter(move |(p, _)| *p == party)
            .map(|(_, r)| *r)
    }
}

/// The adversarial scenarios with paper-prescribed outcomes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FaultScenario {
    /// A document flipped in flight is rejected and the round recovers.
    TamperDocument,
    /// A tau digest flipped in flight is rejected and the round recovers.
    TamperTau,
    /// A replayed signing round elicits the same acknowledgement and no
    /// depth change.
    ReplayRound,
    /// Bob claims a shallower stack than Alice's acknowledgement proves.
    BobSubstackClaim,
    /// Alice presents an alternative stack; Bob's valid stack prevails.
    AliceAltStackClaim,
    /// A signature fabricated without Bob's preimage matches no round.
    ForgeRwsSignature,
}

impl FaultScenario {
    pub const ALL: [FaultScenario; 6] = [
        FaultScenario::TamperDocument,
        FaultScenario::TamperTau,
        FaultScenario::ReplayRound,
        FaultScenario::BobSubstackClaim,
        FaultScenario::AliceAltStackClaim,
        FaultScenario::ForgeRwsSignature,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FaultScenario::TamperDocument => "tamper-document",
            FaultScenario::TamperTau => "tamper-tau",
            FaultScenario::ReplayRound => "replay-round",
            FaultScenario::BobSubstackClaim => "bob-substack-claim",
            FaultScenario::AliceAltStackClaim => "alice-alt-stack-claim",
            FaultScenario::ForgeRwsSignature => "forge-rws-signature",
        }
    }
}

/// Outcome of one scenario: named checks, all of which must hold.
pub struct ScenarioReport {
    pub scenario: FaultScenario,
    pub checks: Vec<(String, bool)>,
    pub transcript: Transcript,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|(_, ok)| *ok)
    }
}

fn seeded_documents(n: usize, seed: u64) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut d = vec![0u8; 32];
            rng.fill_bytes(&mut d);
            d
        })
        .collect()
}

/// Rebuilds the replica Bob would hold after only the first `depth`
/// documents: recompute the consumption prefix and walk the stored top
/// forward. This needs no fabric access, which is exactly why a shallow
/// claim is cheap to fabricate and must lose at adjudication.
fn prefix_replica(full: &SignatureStack, depth: u32) -> SignatureStack {
    use crate::hashing::{chain_iterate, RunningDigest};
    use crate::oracle::hors;

    let w = full.width() as usize;
    let mut sigma_prefix = vec![0u32; w];
    let mut rd = RunningDigest::new();
    for doc in &full.documents()[..depth as usize] {
        rd.absorb(doc.payload());
        for (k, c) in hors(&rd.snapshot(), full.oracle_params()).support() {
            sigma_prefix[k as usize] += c as u32;
        }
    }
    let mut bytes = Vec::new();
    bytes.extend_from_slice(crate::stack::STACK_MAGIC);
    bytes.extend_from_slice(&full.width().to_be_bytes());
    bytes.extend_from_slice(&full.kappa().to_be_bytes());
    bytes.extend_from_slice(&depth.to_be_bytes());
    for doc in &full.documents()[..depth as usize] {
        bytes.extend_from_slice(&(doc.len() as u32).to_be_bytes());
        bytes.extend_from_slice(doc.payload());
    }
    for &s in &sigma_prefix {
        bytes.extend_from_slice(&s.to_be_bytes());
    }
    for k in 0..w {
        let forward = full.sigma()[k] - sigma_prefix[k];
        let t = chain_iterate(full.top()[k], forward);
        bytes.extend_from_slice(t.as_bytes());
    }
    SignatureStack::decode(&bytes).expect("prefix replica encodes cleanly")
}

/// Runs one adversarial scenario and reports its named checks.
pub fn inject_fault(scenario: FaultScenario, seed: u64) -> ScenarioReport {
    let mut checks: Vec<(String, bool)> = Vec::new();
    let check = |name: &str, ok: bool, checks: &mut Vec<(String, bool)>| {
        checks.push((String::from(name), ok));
    };

    let channel = ChannelConfig {
        rng_seed: seed,
        ..ChannelConfig::default()
    };
    let n_max = 32;

    let transcript = match scenario {
        FaultScenario::TamperDocument | FaultScenario::TamperTau => {
            let docs = seeded_documents(8, seed);
            let cfg = SessionConfig::toy(Variant::Bws, docs, channel);
            // SIGNDOC payload: len(4) | doc(32) | count(2) | entries.
            // Bit 40 lands in the document, bit 400 in the first tau digest.
            let bit = match scenario {
                FaultScenario::TamperDocument => 4 * 8,
                _ => (4 + 32 + 2 + 2) * 8,
            };
            let fault = TargetedFault::TamperNth {
                msg_type: 0x04,
                nth: 3,
                bit,
            };
            let r = run_session_with_fault(&cfg, Some(fault)).expect("toy session");
            let tampered_delivery_mutated_state = r.transcript.events.windows(2).any(|w| {
                w[0].kind == EventKind::Deliver
                    && w[0].corrupted
                    && w[1].kind == EventKind::Transition
            });
            check(
                "tampered frame never mutates receiver state",
                !tampered_delivery_mutated_state,
                &mut checks,
            );
            check("session still completes", r.succeeded(), &mut checks);
            check("stacks end byte-identical", r.stacks_equal(), &mut checks);
            check(
                "full depth reached",
                r.alice.stack().depth() == 9,
                &mut checks,
            );
            r.transcript
        }

        FaultScenario::ReplayRound => {
            let docs = seeded_documents(8, seed);
            let cfg = SessionConfig::toy(Variant::Bws, docs, channel);
            let fault = TargetedFault::ReplayNth {
                msg_type: 0x04,
                nth: 4,
            };
            let r = run_session_with_fault(&cfg, Some(fault)).expect("toy session");
            // The duplicate delivery must not advance the stack: count
            // deliveries and transitions of the replayed round.
            let deliveries = r
                .transcript
                .events
                .iter()
                .filter(|e| e.kind == EventKind::Deliver && e.msg_type == 0x04 && e.round == 4)
                .count();
            let transitions = r
                .transcript
                .events
                .iter()
                .filter(|e| e.kind == EventKind::Transition && e.msg_type == 0x04 && e.round == 4)
                .count();
            check("round delivered twice", deliveries >= 2, &mut checks);
            check("only one delivery changed state", transitions == 1, &mut checks);
            check("session completes", r.succeeded(), &mut checks);
            check("stacks end byte-identical", r.stacks_equal(), &mut checks);
            r.transcript
        }

        FaultScenario::BobSubstackClaim => {
            let docs = seeded_documents(10, seed);
            let cfg = SessionConfig::toy(Variant::Bws, docs, channel);
            let r = run_session(&cfg).expect("toy session");
            let (alice_q, _) = r.alice.ack_state().expect("session ran");
            let q_public = r.bob.public_key().expect("chain built");
            let edge = r.alice.stack().reconstruct_edge();
            let shallow = prefix_replica(r.bob.stack(), 6);
            check(
                "shallow replica verifies in isolation",
                verify_full(&edge, shallow.documents(), shallow.top(), n_max, cfg.kappa),
                &mut checks,
            );
            let verdict = adjudicate(&AdjudicationInputs {
                edge: &edge,
                q_public,
                l: cfg.l,
                alice_q,
                bob_stack: &shallow,
                variant: Variant::Bws,
                n_max,
                disputed: None,
            });
            check(
                "judy rejects the shallow claim against alice's deeper acknowledgement",
                matches!(
                    verdict.outcome,
                    VerdictOutcome::BobStackTooShallow {
                        proven: 11,
                        submitted: 6
                    }
                ),
                &mut checks,
            );
            let honest = adjudicate(&AdjudicationInputs {
                edge: &edge,
                q_public,
                l: cfg.l,
                alice_q,
                bob_stack: r.bob.stack(),
                variant: Variant::Bws,
                n_max,
                disputed: None,
            });
            check("the full stack is accepted", honest.accepted(), &mut checks);
            r.transcript
        }

        FaultScenario::AliceAltStackClaim => {
            let docs = seeded_documents(10, seed);
            let cfg = SessionConfig::toy(Variant::Bws, docs.clone(), channel);
            let r = run_session(&cfg).expect("toy session");
            let edge = r.alice.stack().reconstruct_edge();
            // Alice rebuilds an equal-depth stack with different
            // documents; having the fabric, she can always do this.
            let fabric = Fabric::generate(cfg.alice_seed, cfg.fabric);
            let mut alt = SignatureStack::empty(fabric.edge(), cfg.kappa).unwrap();
            let mut opening = cfg.l.to_be_bytes().to_vec();
            opening.extend_from_slice(r.bob.public_key().unwrap().as_bytes());
            alt.push(Document::new(opening).unwrap(), &fabric).unwrap();
            for d in seeded_documents(10, seed ^ 0xa17) {
                alt.push(Document::new(d).unwrap(), &fabric).unwrap();
            }
            check(
                "alice's alternative stack verifies in isolation",
                verify_full(&edge, alt.documents(), alt.top(), n_max, cfg.kappa),
                &mut checks,
            );
            check(
                "alternative differs from bob's",
                alt.encode() != r.bob.stack().encode(),
                &mut checks,
            );
            let (alice_q, _) = r.alice.ack_state().unwrap();
            let verdict = adjudicate(&AdjudicationInputs {
                edge: &edge,
                q_public: r.bob.public_key().unwrap(),
                l: cfg.l,
                alice_q,
                bob_stack: r.bob.stack(),
                variant: Variant::Bws,
                n_max,
                disputed: None,
            });
            let bob_docs_win = verdict.accepted()
                && verdict
                    .documents
                    .iter()
                    .skip(1)
                    .zip(docs.iter())
                    .all(|(dv, d)| dv.payload == *d);
            check(
                "the dispute resolves to bob's stack content",
                bob_docs_win,
                &mut checks,
            );
            r.transcript
        }

        FaultScenario::ForgeRwsSignature => {
            let docs = seeded_documents(6, seed);
            let mut cfg = SessionConfig::toy(Variant::Rws, docs.clone(), channel);
            cfg.mac_key = Some([0x33; 32]);
            let r = run_session(&cfg).expect("toy session");
            let edge = r.alice.stack().reconstruct_edge();
            let (alice_q, _) = r.alice.ack_state().unwrap();
            let q_public = r.bob.public_key().unwrap();
            // A document Bob never signed.
            let mut fake = seeded_documents(1, seed ^ 0xf0).remove(0);
            fake[0] ^= 0xff;
            let verdict = adjudicate(&AdjudicationInputs {
                edge: &edge,
                q_public,
                l: cfg.l,
                alice_q,
                bob_stack: r.bob.stack(),
                variant: Variant::Rws,
                n_max,
                disputed: Some(&fake),
            });
            check(
                "no round matches the forged signature claim",
                verdict.dispute == Some(crate::protocol::DisputeFinding { matched_round: None }),
                &mut checks,
            );
            // A genuinely signed document is found.
            let genuine = adjudicate(&AdjudicationInputs {
                edge: &edge,
                q_public,
                l: cfg.l,
                alice_q,
                bob_stack: r.bob.stack(),
                variant: Variant::Rws,
                n_max,
                disputed: Some(&docs[2]),
            });
            check(
                "a genuine document resolves to its signing round",
                genuine.dispute == Some(crate::protocol::DisputeFinding {
                    matched_round: Some(4),
                }),
                &mut checks,
            );
            // The audit log agrees.
            check(
                "bob's audit log holds the genuine document at that round",
                r.bob.audit_log().iter().any(|(j, d)| *j == 4 && d == &docs[2]),
                &mut checks,
            );
            r.transcript
        }
    };

    ScenarioReport {
        scenario,
        checks,
        transcript,
    }
}
