mod common;

use std::net::{TcpListener, TcpStream};
use std::thread;

use common::messages::{message, same};
use proptest::prelude::*;
use qrir::session::{Link, RoundMessage};
use qrir::transport::{decode, encode, TcpLink, HEADER_LEN};
use qrir::Error;

const GOLDEN_FAIL_REPORT: [u8; 24] = [
    b'Q', b'R', b'I', b'R', 1, 2, 7, 0, 0, 0, 6, 0, 0, 0, 0, 0, 2, 0, 0, 0, 0xe4, 0x4c, 0xe3, 0x8d,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn round_trip(msg in message()) {
        let bytes = encode(&msg).unwrap();
        let (back, used) = decode(&bytes).unwrap();
        prop_assert_eq!(used, bytes.len());
        prop_assert!(same(&msg, &back), "{:?} != {:?}", msg, back);
    }

    #[test]
    fn any_single_byte_flip_is_detected(msg in message(), pos in any::<prop::sample::Index>(), flip in 1u8..=255) {
        let mut bytes = encode(&msg).unwrap();
        let i = pos.index(bytes.len());
        bytes[i] ^= flip;
        match decode(&bytes) {
            Err(Error::Protocol(_)) | Err(Error::Incomplete { .. }) => {}
            Ok((m, _)) => prop_assert!(false, "corrupted frame decoded as {:?}", m),
            Err(e) => prop_assert!(false, "unexpected error {}", e),
        }
    }

    #[test]
    fn concatenated_frames_decode_in_order(msgs in prop::collection::vec(message(), 1..6)) {
        let stream: Vec<u8> = msgs.iter().flat_map(|m| encode(m).unwrap()).collect();
        let mut rest = &stream[..];
        for m in &msgs {
            let (back, used) = decode(rest).unwrap();
            prop_assert!(same(m, &back));
            rest = &rest[used..];
        }
        prop_assert!(rest.is_empty());
    }
}

#[test]
fn golden_fail_report() {
    let msg = RoundMessage::FailReport { frame_id: 7, k: 2 };
    let bytes = encode(&msg).unwrap();
    assert_eq!(bytes, GOLDEN_FAIL_REPORT);
    assert_eq!(decode(&GOLDEN_FAIL_REPORT).unwrap(), (msg, GOLDEN_FAIL_REPORT.len()));
}

#[test]
fn golden_crc_is_ieee() {
    // CRC-32/ISO-HDLC check value.
    assert_eq!(crc32fast::hash(b"123456789"), 0xCBF4_3926);
    let body = &GOLDEN_FAIL_REPORT[..HEADER_LEN + 6];
    assert_eq!(crc32fast::hash(body).to_le_bytes(), GOLDEN_FAIL_REPORT[HEADER_LEN + 6..]);
}

#[test]
fn tcp_link_carries_messages_both_ways() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let msgs = vec![
        RoundMessage::Decoy { block_id: 3, bits: vec![1, 0, 1] },
        RoundMessage::FailReport { frame_id: 1, k: 4 },
        RoundMessage::VerifyResult { frame_id: 1, ok: true },
    ];
    let sent = msgs.clone();
    let server = thread::spawn(move || {
        let mut link = TcpLink::new(listener.accept().unwrap().0).unwrap();
        let got: Vec<_> = (0..sent.len()).map(|_| link.recv().unwrap()).collect();
        for m in &got {
            link.send(m).unwrap();
        }
        got
    });
    let mut client = TcpLink::new(TcpStream::connect(addr).unwrap()).unwrap();
    for m in &msgs {
        client.send(m).unwrap();
    }
    let echoed: Vec<_> = (0..msgs.len()).map(|_| client.recv().unwrap()).collect();
    assert_eq!(server.join().unwrap(), msgs);
    assert_eq!(echoed, msgs);
    drop(client);
}

#[test]
fn closed_peer_is_reported() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let t = thread::spawn(move || drop(listener.accept().unwrap()));
    let mut client = TcpLink::new(TcpStream::connect(addr).unwrap()).unwrap();
    t.join().unwrap();
    assert!(matches!(client.recv(), Err(Error::Closed) | Err(Error::Io(_))));
}
