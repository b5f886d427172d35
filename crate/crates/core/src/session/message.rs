use crate::ldpc::CodeRate;

/// Why a frame was abandoned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AbortReason {
    RoundsExhausted,
    TimeBudget,
    NothingToDisclose,
}

impl AbortReason {
    pub fn code(self) -> u8 {
        match self {
            AbortReason::RoundsExhausted => 1,
            AbortReason::TimeBudget => 2,
            AbortReason::NothingToDisclose => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(AbortReason::RoundsExhausted),
            2 => Some(AbortReason::TimeBudget),
            3 => Some(AbortReason::NothingToDisclose),
            _ => None,
        }
    }
}

/// Messages exchanged between Alice and Bob.
///
/// Positions are sorted and `values.len() == positions.len()`; bit vectors
/// hold one bit per byte.
#[derive(Debug, Clone, PartialEq)]
pub enum RoundMessage {
    /// Bob to Alice: the rate and extension chosen for the next frame.
    FrameRequest {
        frame_id: u32,
        rate: CodeRate,
        punctured: u32,
        shortened: u32,
        qber_hat: f64,
    },
    Syndrome {
        frame_id: u32,
        rate: CodeRate,
        punctured: u32,
        shortened: u32,
        seed_commitment: u64,
        syndrome: Vec<u8>,
    },
    FailReport {
        frame_id: u32,
        k: u32,
    },
    Disclosure {
        frame_id: u32,
        positions: Vec<u32>,
        values: Vec<u8>,
    },
    SymmetricLlr {
        frame_id: u32,
        positions: Vec<u32>,
        values: Vec<u8>,
    },
    /// Bob to Alice: hash of the corrected payload and the number of
    /// corrected errors.
    Verify {
        frame_id: u32,
        hash: u64,
        errors: u32,
    },
    VerifyResult {
        frame_id: u32,
        ok: bool,
    },
    Decoy {
        block_id: u32,
        bits: Vec<u8>,
    },
    Abort {
        frame_id: u32,
        reason: AbortReason,
    },
}

impl RoundMessage {
    /// Frame (or block, for decoy messages) the message belongs to.
    pub fn frame_id(&self) -> u32 {
        match *self {
            RoundMessage::FrameRequest { frame_id, .. }
            | RoundMessage::Syndrome { frame_id, .. }
            | RoundMessage::FailReport { frame_id, .. }
            | RoundMessage::Disclosure { frame_id, .. }
            | RoundMessage::SymmetricLlr { frame_id, .. }
            | RoundMessage::Verify { frame_id, .. }
            | RoundMessage::VerifyResult { frame_id, .. }
            | RoundMessage::Abort { frame_id, .. } => frame_id,
            RoundMessage::Decoy { block_id, .. } => block_id,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RoundMessage::FrameRequest { .. } => "FrameRequest",
            RoundMessage::Syndrome { .. } => "Syndrome",
            RoundMessage::FailReport { .. } => "FailReport",
            RoundMessage::Disclosure { .. } => "Disclosure",
            RoundMessage::SymmetricLlr { .. } => "SymmetricLlr",
            RoundMessage::Verify { .. } => "Verify",
            RoundMessage::VerifyResult { .. } => "VerifyResult",
            RoundMessage::Decoy { .. } => "Decoy",
            RoundMessage::Abort { .. } => "Abort",
        }
    }
}
