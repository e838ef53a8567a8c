//! Operator-side plumbing for the Winternitz stack toolkit: scenario
//! files, parameter profiles, exit-code mapping, report rendering, and
//! the threaded/socket transports. The `wstack` binary is a thin adapter
//! over these and the core library.

pub mod scenario;
pub mod socket;
pub mod threaded;

use std::collections::BTreeSet;

use wstack_core::analysis;
use wstack_core::fabric::FabricParams;
use wstack_core::harness::{ChannelConfig, SessionConfig};
use wstack_core::protocol::{FailureKind, SessionOutcome, Variant};

/// Exit codes for session failures; stable, documented in the README.
pub fn exit_code_for(outcome: SessionOutcome) -> i32 {
    match outcome {
        SessionOutcome::Completed => 0,
        SessionOutcome::InProgress => 9,
        SessionOutcome::Failed(FailureKind::DoS) => 10,
        SessionOutcome::Failed(FailureKind::CapacityExhausted) => 11,
        SessionOutcome::Failed(FailureKind::Validation) => 12,
        SessionOutcome::Failed(FailureKind::ProtocolViolation) => 13,
    }
}

/// Named parameter presets.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Profile {
    /// Interactive-speed testing profile: w=8, kappa=3, N=32, L=48.
    Toy,
    /// Production-scale profile: w=4096, kappa=31, N=8192.
    Paper,
}

impl Profile {
    pub fn parse(s: &str) -> Option<Profile> {
        match s {
            "toy" => Some(Profile::Toy),
            "paper" => Some(Profile::Paper),
            _ => None,
        }
    }

    pub fn fabric(&self, phi: Option<u32>) -> FabricParams {
        match self {
            Profile::Toy => FabricParams::new(8, 32, phi.unwrap_or(1)).unwrap(),
            Profile::Paper => FabricParams::new(4096, 8192, phi.unwrap_or(64)).unwrap(),
        }
    }

    pub fn kappa(&self) -> u16 {
        match self {
            Profile::Toy => 3,
            Profile::Paper => 31,
        }
    }

    pub fn default_l(&self) -> u32 {
        match self {
            Profile::Toy => 48,
            // The full safe capacity of the paper-scale fabric.
            Profile::Paper => {
                analysis::capacity(4096, 8192, 31).d_safe as u32
            }
        }
    }
}

/// Builds a session config from resolved knobs.
#[allow(clippy::too_many_arguments)]
pub fn session_config(
    variant: Variant,
    fabric: FabricParams,
    kappa: u16,
    l: u32,
    alice_seed: [u8; 32],
    bob_seed: [u8; 32],
    documents: Vec<Vec<u8>>,
    channel: ChannelConfig,
    mac_key: Option<[u8; 32]>,
    per_element: bool,
    refuse_rounds: BTreeSet<u32>,
) -> SessionConfig {
    SessionConfig {
        variant,
        fabric,
        kappa,
        l,
        alice_seed,
        bob_seed,
        documents,
        channel,
        mac_key,
        per_element,
        refuse_rounds,
    }
}

/// Deterministic 32-byte seed expansion from a small integer knob.
pub fn expand_seed(seed: u64, domain: u8) -> [u8; 32] {
    let mut out = [domain; 32];
    out[..8].copy_from_slice(&seed.to_be_bytes());
    out
}

/// Synthetic session documents derived from a seed, 32 bytes each.
pub fn synthetic_documents(count: usize, seed: u64) -> Vec<Vec<u8>> {
    use wstack_core::hashing::oracle_hash;
    (0..count)
        .map(|i| {
            let mut material = seed.to_be_bytes().to_vec();
            material.extend_from_slice(&(i as u64).to_be_bytes());
            oracle_hash(&material).as_bytes()[..32].to_vec()
        })
        .collect()
}

/// One row of the analysis table.
pub struct AnalysisRow {
    pub w: u64,
    pub kappa: u64,
    pub exact_bits: f64,
    pub approx_bits: f64,
    pub entropy_bits: f64,
    pub d_max: Option<u64>,
    pub d_safe: Option<u64>,
}

pub fn analysis_row(w: u64, kappa: u64, n: Option<u64>) -> AnalysisRow {
    let report = analysis::report(w, kappa);
    let cap = n.map(|n| analysis::capacity(w, n, kappa));
    AnalysisRow {
        w,
        kappa,
        exact_bits: report.exact_bits.to_f64(),
        approx_bits: report.approx_bits,
        entropy_bits: report.entropy_bits,
        d_max: cap.map(|c| c.d_max),
        d_safe: cap.map(|c| c.d_safe),
    }
}

/// Renders rows as an aligned text table or CSV. Both carry the same
/// values with the same formatting, so they always agree.
pub fn render_table(rows: &[AnalysisRow], csv: bool) -> String {
    let mut out = String::new();
    let header = [
        "w",
        "kappa",
        "exact_bits",
        "approx_bits",
        "entropy_bits",
        "d_max",
        "d_safe",
    ];
    let formatted: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.w.to_string(),
                r.kappa.to_string(),
                format!("{:.4}", r.exact_bits),
                format!("{:.4}", r.approx_bits),
                format!("{:.4}", r.entropy_bits),
                r.d_max.map_or("-".into(), |v| v.to_string()),
                r.d_safe.map_or("-".into(), |v| v.to_string()),
            ]
        })
        .collect();
    if csv {
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &formatted {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        return out;
    }
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &formatted {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.len());
        }
    }
    for (i, h) in header.iter().enumerate() {
        out.push_str(&format!("{:>width$}  ", h, width = widths[i]));
    }
    out.push('\n');
    for row in &formatted {
        for (i, cell) in row.iter().enumerate() {
            out.push_str(&format!("{:>width$}  ", cell, width = widths[i]));
        }
        out.push('\n');
    }
    out
}

/// Parses a 32-byte hex string.
pub fn parse_hex32(s: &str) -> anyhow::Result<[u8; 32]> {
    let bytes = hex::decode(s.trim())?;
    let arr: [u8; 32] = bytes
        .as_slice()
        .try_into()
        .map_err(|_| anyhow::anyhow!("expected 32 bytes, got {}", bytes.len()))?;
    Ok(arr)
}
