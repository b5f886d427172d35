//! Framed wire protocol for [`RoundMessage`] and a TCP [`Link`].
//!
//! Frame layout, integers little-endian:
//!
//! ```text
//! "QRIR" | version u8 = 1 | type u8 | frame_id u32 | payload_len u32 | payload | crc32 u32
//! ```
//!
//! The CRC32 (IEEE) covers header and payload. Bit vectors are a u32 bit
//! count followed by the bits packed LSB first. Any framing error is fatal
//! for the session; there is no resynchronization.

use std::io::{Read, Write};
use std::net::TcpStream;

use crate::bits::{pack, unpack};
use crate::ldpc::CodeRate;
use crate::session::{AbortReason, Link, RoundMessage};
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"QRIR";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 14;
pub const MAX_PAYLOAD: usize = 1 << 24;

const SYNDROME: u8 = 1;
const FAIL_REPORT: u8 = 2;
const DISCLOSURE: u8 = 3;
const SYMMETRIC_LLR: u8 = 4;
const VERIFY: u8 = 5;
const VERIFY_RESULT: u8 = 6;
const DECOY: u8 = 7;
const ABORT: u8 = 8;
const FRAME_REQUEST: u8 = 9;

fn put_bits(out: &mut Vec<u8>, bits: &[u8]) -> Result<()> {
    let len = u32::try_from(bits.len()).map_err(|_| Error::arg("bit vector too long"))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend(pack(bits));
    Ok(())
}

fn put_positions(out: &mut Vec<u8>, positions: &[u32], values: &[u8]) -> Result<()> {
    if positions.len() != values.len() {
        return Err(Error::arg("positions and values differ in length"));
    }
    out.extend_from_slice(&(positions.len() as u32).to_le_bytes());
    for p in positions {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out.extend(pack(values));
    Ok(())
}

fn put_selection(out: &mut Vec<u8>, rate: CodeRate, punctured: u32, shortened: u32) {
    out.push(rate.percent());
    out.extend_from_slice(&punctured.to_le_bytes());
    out.extend_from_slice(&shortened.to_le_bytes());
}

/// Encodes one message as a complete wire frame.
pub fn encode(msg: &RoundMessage) -> Result<Vec<u8>> {
    let mut payload = Vec::new();
    let msg_type = match msg {
        RoundMessage::FrameRequest {
            rate,
            punctured,
            shortened,
            qber_hat,
            ..
        } => {
            put_selection(&mut payload, *rate, *punctured, *shortened);
            payload.extend_from_slice(&qber_hat.to_bits().to_le_bytes());
            FRAME_REQUEST
        }
        RoundMessage::Syndrome {
            rate,
            punctured,
            shortened,
            seed_commitment,
            syndrome,
            ..
        } => {
            put_selection(&mut payload, *rate, *punctured, *shortened);
            payload.extend_from_slice(&seed_commitment.to_le_bytes());
            put_bits(&mut payload, syndrome)?;
            SYNDROME
        }
        RoundMessage::FailReport { k, .. } => {
            payload.extend_from_slice(&0u16.to_le_bytes());
            payload.extend_from_slice(&k.to_le_bytes());
            FAIL_REPORT
        }
        RoundMessage::Disclosure { positions, values, .. } => {
            put_positions(&mut payload, positions, values)?;
            DISCLOSURE
        }
        RoundMessage::SymmetricLlr { positions, values, .. } => {
            put_positions(&mut payload, positions, values)?;
            SYMMETRIC_LLR
        }
        RoundMessage::Verify { hash, errors, .. } => {
            payload.extend_from_slice(&hash.to_le_bytes());
            payload.extend_from_slice(&errors.to_le_bytes());
            VERIFY
        }
        RoundMessage::VerifyResult { ok, .. } => {
            payload.push(u8::from(*ok));
            VERIFY_RESULT
        }
        RoundMessage::Decoy { bits, .. } => {
            put_bits(&mut payload, bits)?;
            DECOY
        }
        RoundMessage::Abort { reason, .. } => {
            payload.push(reason.code());
            ABORT
        }
    };
    if payload.len() > MAX_PAYLOAD {
        return Err(Error::arg(format!(
            "{} payload of {} bytes exceeds the 2^24 byte limit",
            msg.name(),
            payload.len()
        )));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + 4);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(msg_type);
    out.extend_from_slice(&msg.frame_id().to_le_bytes());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&payload);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Cursor over a payload; every read failure is a protocol error.
struct Reader<'a> {
    data: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.data.len() < n {
            return Err(Error::protocol("payload shorter than its fields"));
        }
        let (head, rest) = self.data.split_at(n);
        self.data = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn bits(&mut self) -> Result<Vec<u8>> {
        let len = self.u32()? as usize;
        Ok(unpack(self.take(len.div_ceil(8))?, len))
    }

    fn selection(&mut self) -> Result<(CodeRate, u32, u32)> {
        let pct = self.u8()?;
        let rate = CodeRate::from_percent(pct).map_err(|_| Error::protocol(format!("rate {pct}% not in the pool")))?;
        Ok((rate, self.u32()?, self.u32()?))
    }

    fn positions(&mut self) -> Result<(Vec<u32>, Vec<u8>)> {
        let count = self.u32()? as usize;
        if count > self.data.len() / 4 {
            return Err(Error::protocol("position count exceeds payload"));
        }
        let positions = (0..count).map(|_| self.u32()).collect::<Result<Vec<_>>>()?;
        let values = unpack(self.take(count.div_ceil(8))?, count);
        Ok((positions, values))
    }

    fn finish(&self) -> Result<()> {
        if self.data.is_empty() {
            Ok(())
        } else {
            Err(Error::protocol("trailing bytes after payload fields"))
        }
    }
}

/// Decodes the wire frame at the start of `bytes`.
///
/// Returns the message and the number of bytes consumed, or
/// [`Error::Incomplete`] when more bytes are needed.
pub fn decode(bytes: &[u8]) -> Result<(RoundMessage, usize)> {
    if bytes.len() < HEADER_LEN {
        if bytes.iter().zip(&MAGIC).any(|(a, b)| a != b) {
            return Err(Error::protocol("bad magic"));
        }
        return Err(Error::Incomplete {
            needed: HEADER_LEN - bytes.len(),
        });
    }
    if bytes[..4] != MAGIC {
        return Err(Error::protocol("bad magic"));
    }
    if bytes[4] != VERSION {
        return Err(Error::protocol(format!("unsupported version {}", bytes[4])));
    }
    let msg_type = bytes[5];
    let frame_id = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes"));
    let payload_len = u32::from_le_bytes(bytes[10..14].try_into().expect("4 bytes")) as usize;
    if payload_len > MAX_PAYLOAD {
        return Err(Error::protocol(format!("payload length {payload_len} exceeds limit")));
    }
    let total = HEADER_LEN + payload_len + 4;
    if bytes.len() < total {
        return Err(Error::Incomplete {
            needed: total - bytes.len(),
        });
    }
    let body = &bytes[..HEADER_LEN + payload_len];
    let crc = u32::from_le_bytes(bytes[total - 4..total].try_into().expect("4 bytes"));
    if crc32fast::hash(body) != crc {
        return Err(Error::protocol("crc mismatch"));
    }
    let mut r = Reader {
        data: &body[HEADER_LEN..],
    };
    let msg = match msg_type {
        FRAME_REQUEST => {
            let (rate, punctured, shortened) = r.selection()?;
            RoundMessage::FrameRequest {
                frame_id,
                rate,
                punctured,
                shortened,
                qber_hat: f64::from_bits(r.u64()?),
            }
        }
        SYNDROME => {
            let (rate, punctured, shortened) = r.selection()?;
            RoundMessage::Syndrome {
                frame_id,
                rate,
                punctured,
                shortened,
                seed_commitment: r.u64()?,
                syndrome: r.bits()?,
            }
        }
        FAIL_REPORT => {
            if r.u16()? != 0 {
                return Err(Error::protocol("reserved field is not zero"));
            }
            RoundMessage::FailReport { frame_id, k: r.u32()? }
        }
        DISCLOSURE => {
            let (positions, values) = r.positions()?;
            RoundMessage::Disclosure {
                frame_id,
                positions,
                values,
            }
        }
        SYMMETRIC_LLR => {
            let (positions, values) = r.positions()?;
            RoundMessage::SymmetricLlr {
                frame_id,
                positions,
                values,
            }
        }
        VERIFY => RoundMessage::Verify {
            frame_id,
            hash: r.u64()?,
            errors: r.u32()?,
        },
        VERIFY_RESULT => {
            let ok = match r.u8()? {
                0 => false,
                1 => true,
                b => return Err(Error::protocol(format!("verify result byte {b}"))),
            };
            RoundMessage::VerifyResult { frame_id, ok }
        }
        DECOY => RoundMessage::Decoy {
            block_id: frame_id,
            bits: r.bits()?,
        },
        ABORT => {
            let code = r.u8()?;
            let reason = AbortReason::from_code(code)
                .ok_or_else(|| Error::protocol(format!("unknown abort reason {code}")))?;
            RoundMessage::Abort { frame_id, reason }
        }
        t => return Err(Error::protocol(format!("unknown message type {t}"))),
    };
    r.finish()?;
    Ok((msg, total))
}

/// [`Link`] over a TCP stream, one wire frame per message.
#[derive(Debug)]
pub struct TcpLink {
    stream: TcpStream,
}

impl TcpLink {
    pub fn new(stream: TcpStream) -> Result<Self> {
        stream.set_nodelay(true)?;
        Ok(TcpLink { stream })
    }

    fn read_exact_or_closed(&mut self, buf: &mut [u8]) -> Result<()> {
        self.stream.read_exact(buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Closed,
            _ => Error::Io(e),
        })
    }
}

impl Link for TcpLink {
    fn send(&mut self, msg: &RoundMessage) -> Result<()> {
        let bytes = encode(msg)?;
        self.stream.write_all(&bytes)?;
        Ok(())
    }

    fn recv(&mut self) -> Result<RoundMessage> {
        let mut buf = vec![0u8; HEADER_LEN];
        self.read_exact_or_closed(&mut buf)?;
        let needed = match decode(&buf) {
            Err(Error::Incomplete { needed }) => needed,
            Err(e) => return Err(e),
            Ok(_) => unreachable!("a header alone is never a complete frame"),
        };
        buf.resize(HEADER_LEN + needed, 0);
        self.read_exact_or_closed(&mut buf[HEADER_LEN..])?;
        decode(&buf).map(|(msg, _)| msg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fail_report_layout() {
        let bytes = encode(&RoundMessage::FailReport { frame_id: 7, k: 2 }).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 6 + 4);
        assert_eq!(&bytes[..4], b"QRIR");
        assert_eq!(bytes[5], FAIL_REPORT);
        assert_eq!(&bytes[6..10], &[7, 0, 0, 0]);
        assert_eq!(&bytes[10..14], &[6, 0, 0, 0]);
        assert_eq!(&bytes[14..20], &[0, 0, 2, 0, 0, 0]);
    }

    #[test]
    fn empty_disclosure_payload() {
        let msg = RoundMessage::Disclosure {
            frame_id: 1,
            positions: vec![],
            values: vec![],
        };
        let bytes = encode(&msg).unwrap();
        assert_eq!(&bytes[10..14], &[4, 0, 0, 0]);
        assert_eq!(&bytes[14..18], &[0, 0, 0, 0]);
        assert_eq!(decode(&bytes).unwrap(), (msg, bytes.len()));
    }

    #[test]
    fn truncation_asks_for_more() {
        let bytes = encode(&RoundMessage::VerifyResult { frame_id: 3, ok: true }).unwrap();
        for cut in 0..bytes.len() {
            match decode(&bytes[..cut]) {
                Err(Error::Incomplete { needed }) => assert!(needed > 0),
                other => panic!("cut {cut}: {other:?}"),
            }
        }
    }

    #[test]
    fn oversized_payload_is_rejected() {
        let msg = RoundMessage::Decoy {
            block_id: 0,
            bits: vec![0; (MAX_PAYLOAD + 1) * 8],
        };
        assert!(matches!(encode(&msg), Err(Error::Argument(_))));
    }

    #[test]
    fn corrupted_frames_are_protocol_errors() {
        let good = encode(&RoundMessage::Abort {
            frame_id: 9,
            reason: AbortReason::TimeBudget,
        })
        .unwrap();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(Error::Protocol(_))));
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(decode(&bad), Err(Error::Protocol(_))));
        let mut bad = good.clone();
        bad[14] = 77;
        assert!(matches!(decode(&bad), Err(Error::Protocol(_))));
    }
}
