//! Wire messages: typed payloads behind a fixed binary frame.
//!
//! Frame layout (all integers big-endian):
//!
//! ```text
//! msg_type(1) | session_id(16) | round(u32) | payload | [mac(4)]
//! ```
//!
//! The 4-byte tag is a truncated HMAC-SHA-256 over everything before it,
//! appended only on keyed channels. Frames are capped at 64 KiB.

use alloc::vec::Vec;
use core::fmt;

use crate::fabric::{CodecError, Edge, Reader};
use crate::hashing::{ct_eq, keyed_digest, Digest};
use crate::stack::SparseFamily;

/// Hard cap on an encoded frame.
pub const MAX_FRAME_BYTES: usize = 64 * 1024;
/// Bytes before the payload: type, session id, round.
pub const HEADER_BYTES: usize = 1 + 16 + 4;
/// Truncated MAC tag length.
pub const MAC_BYTES: usize = 4;

/// Shared MAC key for the authenticated channel mode.
#[derive(Clone, Copy)]
pub struct MacKey(pub [u8; 32]);

/// Truncated message authentication tag over `bytes`.
pub fn mac_tag(key: &MacKey, bytes: &[u8]) -> [u8; MAC_BYTES] {
    let full = keyed_digest(&key.0, &[bytes]);
    let mut tag = [0u8; MAC_BYTES];
    tag.copy_from_slice(&full.as_bytes()[..MAC_BYTES]);
    tag
}

/// Constant-time tag check.
pub fn mac_verify(key: &MacKey, bytes: &[u8], tag: &[u8]) -> bool {
    ct_eq(&mac_tag(key, bytes), tag)
}

/// Typed message payloads.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Payload {
    /// Session opening: the proposed transaction budget `L`.
    Invite { l: u32 },
    /// The signer's public edge (fits on the wire only for narrow fabrics).
    Edge { edge: Edge },
    /// The verifier's acknowledgement-chain public key.
    BobKey { q: Digest },
    /// A signing round: document plus sparse top difference.
    SignDoc { doc: Vec<u8>, tau: SparseFamily },
    /// One element of a tau streamed individually.
    Elem { k: u16, value: Digest },
    /// Acknowledgement: the next chain preimage, or an echoed element
    /// value during per-element streaming.
    Ack { q: Digest },
    /// Combined acknowledgement and countersignature.
    MawsAck { q: Digest, countersig: Digest },
    /// The countersignature echoed back with its own tau.
    MawsCsig { countersig: Digest, tau: SparseFamily },
    /// The client's signature to be pushed by the server.
    RwsSig { s: Digest },
    /// The server's tau for the pushed signature.
    RwsTau { tau: SparseFamily },
    /// Explicit rejection of a round.
    Nak { round: u32 },
}

impl Payload {
    pub fn msg_type(&self) -> u8 {
        match self {
            Payload::Invite { .. } => 0x01,
            Payload::Edge { .. } => 0x02,
            Payload::BobKey { .. } => 0x03,
            Payload::SignDoc { .. } => 0x04,
            Payload::Elem { .. } => 0x05,
            Payload::Ack { .. } => 0x06,
            Payload::MawsAck { .. } => 0x07,
            Payload::MawsCsig { .. } => 0x08,
            Payload::RwsSig { .. } => 0x09,
            Payload::RwsTau { .. } => 0x0a,
            Payload::Nak { .. } => 0x0b,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Payload::Invite { .. } => "INVITE",
            Payload::Edge { .. } => "EDGE",
            Payload::BobKey { .. } => "BOBKEY",
            Payload::SignDoc { .. } => "SIGNDOC",
            Payload::Elem { .. } => "ELEM",
            Payload::Ack { .. } => "ACK",
            Payload::MawsAck { .. } => "MAWS_ACK",
            Payload::MawsCsig { .. } => "MAWS_CSIG",
            Payload::RwsSig { .. } => "RWS_SIG",
            Payload::RwsTau { .. } => "RWS_TAU",
            Payload::Nak { .. } => "NAK",
        }
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            Payload::Invite { l } => out.extend_from_slice(&l.to_be_bytes()),
            Payload::Edge { edge } => {
                out.extend_from_slice(&edge.width().to_be_bytes());
                for v in edge.values() {
                    out.extend_from_slice(v.as_bytes());
                }
            }
            Payload::BobKey { q } => out.extend_from_slice(q.as_bytes()),
            Payload::SignDoc { doc, tau } => {
                out.extend_from_slice(&(doc.len() as u32).to_be_bytes());
                out.extend_from_slice(doc);
                encode_tau(tau, out);
            }
            Payload::Elem { k, value } => {
                out.extend_from_slice(&k.to_be_bytes());
                out.extend_from_slice(value.as_bytes());
            }
            Payload::Ack { q } => out.extend_from_slice(q.as_bytes()),
            Payload::MawsAck { q, countersig } => {
                out.extend_from_slice(q.as_bytes());
                out.extend_from_slice(countersig.as_bytes());
            }
            Payload::MawsCsig { countersig, tau } => {
                out.extend_from_slice(countersig.as_bytes());
                encode_tau(tau, out);
            }
            Payload::RwsSig { s } => out.extend_from_slice(s.as_bytes()),
            Payload::RwsTau { tau } => encode_tau(tau, out),
            Payload::Nak { round } => out.extend_from_slice(&round.to_be_bytes()),
        }
    }

    fn decode(msg_type: u8, r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(match msg_type {
            0x01 => Payload::Invite { l: r.u32()? },
            0x02 => {
                let w = r.u32()?;
                if w as usize * 32 > MAX_FRAME_BYTES {
                    return Err(CodecError::Truncated);
                }
                let mut values = Vec::with_capacity(w as usize);
                for _ in 0..w {
                    values.push(r.digest()?);
                }
                Payload::Edge {
                    edge: Edge::from_values(values),
                }
            }
            0x03 => Payload::BobKey { q: r.digest()? },
            0x04 => {
                let len = r.u32()? as usize;
                if len > r.remaining() {
                    return Err(CodecError::Truncated);
                }
                let doc = r.bytes(len)?.to_vec();
                Payload::SignDoc {
                    doc,
                    tau: decode_tau(r)?,
                }
            }
            0x05 => Payload::Elem {
                k: r.u16()?,
                value: r.digest()?,
            },
            0x06 => Payload::Ack { q: r.digest()? },
            0x07 => Payload::MawsAck {
                q: r.digest()?,
                countersig: r.digest()?,
            },
            0x08 => Payload::MawsCsig {
                countersig: r.digest()?,
                tau: decode_tau(r)?,
            },
            0x09 => Payload::RwsSig { s: r.digest()? },
            0x0a => Payload::RwsTau {
                tau: decode_tau(r)?,
            },
            0x0b => Payload::Nak { round: r.u32()? },
            _ => return Err(CodecError::BadMagic),
        })
    }

    /// Encoded payload size, excluding frame header and MAC.
    pub fn encoded_len(&self) -> usize {
        let mut buf = Vec::new();
        self.encode_into(&mut buf);
        buf.len()
    }
}

fn encode_tau(tau: &SparseFamily, out: &mut Vec<u8>) {
    out.extend_from_slice(&(tau.len() as u16).to_be_bytes());
    for (k, v) in tau.entries() {
        out.extend_from_slice(&(k as u16).to_be_bytes());
        out.extend_from_slice(v.as_bytes());
    }
}

fn decode_tau(r: &mut Reader<'_>) -> Result<SparseFamily, CodecError> {
    let count = r.u16()?;
    let mut tau = SparseFamily::new();
    for _ in 0..count {
        let k = r.u16()?;
        tau.insert(k as u32, r.digest()?);
    }
    Ok(tau)
}

/// A framed protocol message.
#[derive(Clone, PartialEq, Eq)]
pub struct WireMessage {
    pub session: [u8; 16],
    pub round: u32,
    pub payload: Payload,
}

impl WireMessage {
    pub fn new(session: [u8; 16], round: u32, payload: Payload) -> Self {
        WireMessage {
            session,
            round,
            payload,
        }
    }

    /// Encodes the frame, appending a tag when a key is present.
    pub fn encode(&self, key: Option<&MacKey>) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_BYTES + 64);
        out.push(self.payload.msg_type());
        out.extend_from_slice(&self.session);
        out.extend_from_slice(&self.round.to_be_bytes());
        self.payload.encode_into(&mut out);
        if let Some(key) = key {
            let tag = mac_tag(key, &out);
            out.extend_from_slice(&tag);
        }
        assert!(out.len() <= MAX_FRAME_BYTES, "frame exceeds 64 KiB");
        out
    }

    /// Decodes a frame, checking the tag first when a key is present.
    pub fn decode(bytes: &[u8], key: Option<&MacKey>) -> Result<Self, WireError> {
        if bytes.len() > MAX_FRAME_BYTES {
            return Err(WireError::TooLong);
        }
        let body = match key {
            Some(key) => {
                if bytes.len() < HEADER_BYTES + MAC_BYTES {
                    return Err(WireError::Malformed);
                }
                let (body, tag) = bytes.split_at(bytes.len() - MAC_BYTES);
                if !mac_verify(key, body, tag) {
                    return Err(WireError::BadMac);
                }
                body
            }
            None => bytes,
        };
        if body.len() < HEADER_BYTES {
            return Err(WireError::Malformed);
        }
        let mut r = Reader::new(body);
        let msg_type = r.u8().unwrap();
        let mut session = [0u8; 16];
        session.copy_from_slice(r.bytes(16).unwrap());
        let round = r.u32().unwrap();
        let payload = Payload::decode(msg_type, &mut r).map_err(|_| WireError::Malformed)?;
        r.finish().map_err(|_| WireError::Malformed)?;
        Ok(WireMessage {
            session,
            round,
            payload,
        })
    }

    /// Payload length of the encoded form (header and MAC excluded).
    pub fn payload_len(&self) -> usize {
        self.payload.encoded_len()
    }
}

impl fmt::Debug for WireMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[round {}]", self.payload.type_name(), self.round)
    }
}

/// Frame rejection reasons.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum WireError {
    TooLong,
    Malformed,
    BadMac,
}

impl fmt::Display for WireError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WireError::TooLong => write!(f, "frame exceeds 64 KiB"),
            WireError::Malformed => write!(f, "malformed frame"),
            WireError::BadMac => write!(f, "authentication tag mismatch"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for WireError {}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sample_tau() -> SparseFamily {
        SparseFamily::from_entries([
            (3u32, Digest::new([1; 32])),
            (7, Digest::new([2; 32])),
            (0, Digest::new([3; 32])),
        ])
    }

    fn roundtrip(payload: Payload, key: Option<&MacKey>) {
        let msg = WireMessage::new([9; 16], 42, payload);
        let bytes = msg.encode(key);
        let back = WireMessage::decode(&bytes, key).unwrap();
        assert_eq!(back, msg);
        assert_eq!(
            bytes.len(),
            HEADER_BYTES + msg.payload_len() + if key.is_some() { MAC_BYTES } else { 0 }
        );
    }

    #[test]
    fn payload_roundtrips() {
        let key = MacKey([7; 32]);
        for payload in [
            Payload::Invite { l: 100 },
            Payload::Edge {
                edge: Edge::from_values(vec![Digest::new([4; 32]); 8]),
            },
            Payload::BobKey {
                q: Digest::new([5; 32]),
            },
            Payload::SignDoc {
                doc: b"digest-bytes".to_vec(),
                tau: sample_tau(),
            },
            Payload::Elem {
                k: 3,
                value: Digest::new([6; 32]),
            },
            Payload::Ack {
                q: Digest::new([7; 32]),
            },
            Payload::MawsAck {
                q: Digest::new([8; 32]),
                countersig: Digest::new([9; 32]),
            },
            Payload::MawsCsig {
                countersig: Digest::new([10; 32]),
                tau: sample_tau(),
            },
            Payload::RwsSig {
                s: Digest::new([11; 32]),
            },
            Payload::RwsTau { tau: sample_tau() },
            Payload::Nak { round: 3 },
        ] {
            roundtrip(payload.clone(), None);
            roundtrip(payload, Some(&key));
        }
    }

    #[test]
    fn mac_rejects_any_flipped_bit() {
        let key = MacKey([1; 32]);
        let msg = WireMessage::new(
            [2; 16],
            7,
            Payload::SignDoc {
                doc: b"doc".to_vec(),
                tau: sample_tau(),
            },
        );
        let bytes = msg.encode(Some(&key));
        for bit in 0..bytes.len() * 8 {
            let mut corrupted = bytes.clone();
            corrupted[bit / 8] ^= 1 << (bit % 8);
            assert!(
                WireMessage::decode(&corrupted, Some(&key)).is_err(),
                "flip at bit {bit} accepted"
            );
        }
    }

    #[test]
    fn forged_tags_are_rejected() {
        let key = MacKey([3; 32]);
        let msg = WireMessage::new([4; 16], 1, Payload::Ack { q: Digest::zero() });
        let mut bytes = msg.encode(Some(&key));
        let body_len = bytes.len() - MAC_BYTES;
        let genuine: [u8; 4] = bytes[body_len..].try_into().unwrap();
        let mut accepted = 0;
        for i in 0u32..100_000 {
            let forged = crate::hashing::oracle_hash(&i.to_be_bytes());
            let tag = &forged.as_bytes()[..MAC_BYTES];
            if tag == genuine {
                continue; // astronomically unlikely; skip rather than count
            }
            bytes[body_len..].copy_from_slice(tag);
            if WireMessage::decode(&bytes, Some(&key)).is_ok() {
                accepted += 1;
            }
        }
        assert_eq!(accepted, 0);
    }

    #[test]
    fn tag_is_deterministic() {
        let key = MacKey([5; 32]);
        assert_eq!(mac_tag(&key, b"abc"), mac_tag(&key, b"abc"));
        assert_ne!(mac_tag(&key, b"abc"), mac_tag(&key, b"abd"));
    }

    #[test]
    fn unkeyed_decode_accepts_structural_frames_only() {
        let msg = WireMessage::new([0; 16], 2, Payload::Nak { round: 2 });
        let mut bytes = msg.encode(None);
        assert!(WireMessage::decode(&bytes, None).is_ok());
        bytes.push(0xff);
        assert_eq!(
            WireMessage::decode(&bytes, None).unwrap_err(),
            WireError::Malformed
        );
        assert_eq!(
            WireMessage::decode(&bytes[..3], None).unwrap_err(),
            WireError::Malformed
        );
    }
}
