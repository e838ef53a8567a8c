//! Session protocols over a signature stack.
//!
//! Three choreographies share one machinery:
//!
//! * **BWS** - Alice signs, Bob verifies and acknowledges each round with
//!   the next preimage of his acknowledgement chain.
//! * **MAWS** - each round carries Alice's document and Bob's
//!   countersignature `H(doc || q)`, both pushed onto the same stack.
//! * **RWS** - Bob signs through Alice: she pushes his signatures and he
//!   keeps the audit trail; messages ride an authenticated channel.
//!
//! Endpoints are event-driven state machines: they consume raw frames and
//! emit frames, never touching a clock or a socket. Retransmission is
//! go-back style: any stale-but-valid peer message triggers a re-send of
//! the last batch, and the driving side re-sends on timeout.

use alloc::vec::Vec;

use crate::hashing::Digest;
use crate::wire::{MacKey, WireMessage};

pub mod ack;
pub mod adjudicate;
pub mod alice;
pub mod bob;

pub use ack::{ack_public, ack_verify, AckChain, AckWatcher};
pub use adjudicate::{
    adjudicate, AdjudicationInputs, Approval, DisputeFinding, DocumentVerdict, Signer, Verdict,
    VerdictOutcome,
};
pub use alice::{Alice, AliceConfig, RoundStatus};
pub use bob::{Bob, BobConfig};

/// Which protocol a session runs.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Variant {
    Bws,
    Maws,
    Rws,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Bws => "bws",
            Variant::Maws => "maws",
            Variant::Rws => "rws",
        }
    }
}

/// Where a session stands.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SessionOutcome {
    InProgress,
    Completed,
    Failed(FailureKind),
}

/// Typed session failures; the CLI maps these to exit codes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FailureKind {
    /// Retransmission cap exceeded: denial of service or a dead channel.
    DoS,
    /// The fabric cannot carry another push.
    CapacityExhausted,
    /// A validation failure that the variant treats as fatal.
    Validation,
    /// The peer broke the protocol on an authenticated channel.
    ProtocolViolation,
}

/// Default retransmission cap.
pub const DEFAULT_MAX_RETX: u32 = 16;

/// Session construction failures.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SetupError {
    /// The announced budget `L` exceeds what the fabric can carry.
    BudgetExceedsCapacity { l: u32, d_max: u64 },
    /// Bad fabric or oracle parameters.
    BadParams(crate::oracle::ParamError),
}

impl core::fmt::Display for SetupError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SetupError::BudgetExceedsCapacity { l, d_max } => {
                write!(f, "budget L={l} exceeds fabric capacity d_max={d_max}")
            }
            SetupError::BadParams(e) => write!(f, "bad parameters: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SetupError {}

/// One endpoint of a session, driven by frames and timer ticks.
pub trait Endpoint {
    /// Messages to send before anything is received.
    fn start(&mut self) -> Vec<WireMessage>;

    /// Processes one raw frame; returns messages to send.
    fn on_frame(&mut self, bytes: &[u8]) -> Vec<WireMessage>;

    /// Called when the retransmission timer fires.
    fn on_timeout(&mut self) -> Vec<WireMessage>;

    fn outcome(&self) -> SessionOutcome;

    /// Digest of the protocol-visible state: stack replica, chain
    /// cursors, round and phase. Excludes retransmission bookkeeping, so
    /// rejected traffic must leave it unchanged.
    fn state_hash(&self) -> Digest;

    /// Key the harness uses to encode this endpoint's outbound frames.
    fn mac_key(&self) -> Option<MacKey>;

    fn role_name(&self) -> &'static str;
}

/// Retransmission bookkeeping shared by both roles.
pub(crate) struct Arq {
    pub last_batch: Vec<WireMessage>,
    pub retx: u32,
    pub max_retx: u32,
}

impl Arq {
    pub fn new(max_retx: u32) -> Self {
        Arq {
            last_batch: Vec::new(),
            retx: 0,
            max_retx,
        }
    }

    /// Records a fresh batch and resets the retransmission budget.
    pub fn fresh(&mut self, batch: Vec<WireMessage>) -> Vec<WireMessage> {
        self.retx = 0;
        self.last_batch = batch.clone();
        batch
    }

    /// Replays the last batch; `None` once the cap is exhausted.
    pub fn resend(&mut self) -> Option<Vec<WireMessage>> {
        if self.retx >= self.max_retx {
            return None;
        }
        self.retx += 1;
        Some(self.last_batch.clone())
    }
}
