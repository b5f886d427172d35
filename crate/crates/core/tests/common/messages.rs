//! Random wire messages for the protocol tests.

use proptest::prelude::*;
use qrir::ldpc::CodeRate;
use qrir::session::{AbortReason, RoundMessage};

fn bits(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, 0..max)
}

fn rate() -> impl Strategy<Value = CodeRate> {
    prop::sample::select(CodeRate::POOL.to_vec())
}

fn positions(max: usize) -> impl Strategy<Value = (Vec<u32>, Vec<u8>)> {
    prop::collection::vec((any::<u32>(), 0u8..2), 0..max).prop_map(|v| v.into_iter().unzip())
}

pub fn message() -> impl Strategy<Value = RoundMessage> {
    prop_oneof![
        (any::<u32>(), rate(), any::<u32>(), any::<u32>(), any::<f64>()).prop_map(
            |(frame_id, rate, punctured, shortened, qber_hat)| RoundMessage::FrameRequest {
                frame_id,
                rate,
                punctured,
                shortened,
                qber_hat,
            }
        ),
        (any::<u32>(), rate(), any::<u32>(), any::<u32>(), any::<u64>(), bits(600)).prop_map(
            |(frame_id, rate, punctured, shortened, seed_commitment, syndrome)| RoundMessage::Syndrome {
                frame_id,
                rate,
                punctured,
                shortened,
                seed_commitment,
                syndrome,
            }
        ),
        (any::<u32>(), any::<u32>()).prop_map(|(frame_id, k)| RoundMessage::FailReport { frame_id, k }),
        (any::<u32>(), positions(80)).prop_map(|(frame_id, (positions, values))| RoundMessage::Disclosure {
            frame_id,
            positions,
            values,
        }),
        (any::<u32>(), positions(80)).prop_map(|(frame_id, (positions, values))| RoundMessage::SymmetricLlr {
            frame_id,
            positions,
            values,
        }),
        (any::<u32>(), any::<u64>(), any::<u32>()).prop_map(|(frame_id, hash, errors)| RoundMessage::Verify {
            frame_id,
            hash,
            errors,
        }),
        (any::<u32>(), any::<bool>()).prop_map(|(frame_id, ok)| RoundMessage::VerifyResult { frame_id, ok }),
        (any::<u32>(), bits(600)).prop_map(|(block_id, bits)| RoundMessage::Decoy { block_id, bits }),
        (
            any::<u32>(),
            prop::sample::select(vec![AbortReason::RoundsExhausted, AbortReason::TimeBudget, AbortReason::NothingToDisclose])
        )
            .prop_map(|(frame_id, reason)| RoundMessage::Abort { frame_id, reason }),
    ]
}

/// Equality with the float field compared by bit pattern, so NaN counts.
pub fn same(a: &RoundMessage, b: &RoundMessage) -> bool {
    let key = |m: &RoundMessage| match m {
        RoundMessage::FrameRequest {
            frame_id,
            rate,
            punctured,
            shortened,
            qber_hat,
        } => Some((*frame_id, *rate, *punctured, *shortened, qber_hat.to_bits())),
        _ => None,
    };
    match (key(a), key(b)) {
        (Some(x), Some(y)) => x == y,
        _ => a == b,
    }
}
