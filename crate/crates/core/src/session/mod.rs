//! Alice and Bob reconciliation state machines.
//!
//! Bob owns the QBER estimator: for every frame he selects `{R, p, s}` and
//! sends a [`RoundMessage::FrameRequest`]. Alice answers with her syndrome
//! and, in the asymmetric schemes, discloses bits after every
//! [`RoundMessage::FailReport`]. In the symmetric scheme both syndromes are
//! exchanged, both sides decode and after a failure each discloses its
//! values at the minimal-|LLR| positions. A converged frame is confirmed by
//! a keyed hash of the corrected payload.
//!
//! Decoding runs on the error pattern `e = x_A xor x_B`, with target
//! syndrome `s_A xor s_B`. Shortened positions have `e = 0` and disclosed
//! positions have a known `e`.
//!
//! The parties are event driven: [`Party::handle`] consumes one message and
//! returns the replies. [`run_block`] pumps two parties in one thread and
//! [`drive`] runs one party over a [`Link`].

mod frame;
mod link;
mod message;
mod party;

use serde::{Deserialize, Serialize};

pub use frame::{
    build_frame, frame_seed, seed_commitment, verification_hash, FrameAssembly, FrameLayout, PositionKind,
};
pub use link::{drive, Link, MemoryLink};
pub use message::{AbortReason, RoundMessage};
pub use party::{min_llr_positions, Alice, Bob, Party};

use crate::adapt::{CodeSelection, EstimatorConfig, FrameGeometry, RoundPolicy, Scheme};
use crate::decoder::{DEFAULT_MAX_ITERS, DEFAULT_SATURATION, DEFAULT_SCALE_STEP};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderConfig {
    pub max_iters: usize,
    pub scale_step: f64,
    pub saturation: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            max_iters: DEFAULT_MAX_ITERS,
            scale_step: DEFAULT_SCALE_STEP,
            saturation: DEFAULT_SATURATION,
        }
    }
}

/// How frame processing time is accounted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeModel {
    /// Wall-clock time of the decoder calls.
    Wall,
    /// Decoder cost charged per edge and iteration; reproducible.
    Modeled { ns_per_edge_iteration: f64 },
}

impl Default for TimeModel {
    fn default() -> Self {
        TimeModel::Modeled {
            ns_per_edge_iteration: 2.0,
        }
    }
}

/// Parameters both parties must agree on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    /// Seed of the synchronized pseudo-random streams.
    pub seed: u64,
    pub geometry: FrameGeometry,
    pub policy: RoundPolicy,
    pub estimator: EstimatorConfig,
    pub decoder: DecoderConfig,
    pub time: TimeModel,
}

impl SessionConfig {
    pub fn new(scheme: Scheme, geometry: FrameGeometry, seed: u64) -> Self {
        SessionConfig {
            seed,
            geometry,
            policy: RoundPolicy::for_scheme(scheme),
            estimator: EstimatorConfig::default(),
            decoder: DecoderConfig::default(),
            time: TimeModel::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.policy.validate()?;
        self.estimator.validate()?;
        if self.decoder.max_iters == 0 || !(self.decoder.scale_step > 0.0) || !(self.decoder.saturation > 0.0) {
            return Err(Error::Config(
                "decoder needs max_iters >= 1 and positive scale_step and saturation".into(),
            ));
        }
        if let TimeModel::Modeled { ns_per_edge_iteration } = self.time {
            if !(ns_per_edge_iteration >= 0.0) {
                return Err(Error::Config("ns_per_edge_iteration must be non-negative".into()));
            }
        }
        Ok(())
    }
}

/// Outcome of one frame as seen by one party.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_id: u32,
    pub scheme: Scheme,
    /// Decoding converged (the syndromes matched).
    pub success: bool,
    /// The verification hashes agreed.
    pub verified: bool,
    pub iterations_total: usize,
    pub rounds_additional: usize,
    /// Bits disclosed in additional rounds.
    pub d_total: usize,
    /// Of `d_total`, bits that were punctured positions.
    pub d_punctured: usize,
    pub selection: CodeSelection,
    pub ell_frame: usize,
    pub syndrome_len: usize,
    /// A-posteriori QBER of the payload; known only for converged frames.
    pub measured_qber: Option<f64>,
    /// Realized QBER supplied by a simulation harness.
    pub qber_true: Option<f64>,
    pub burst: bool,
    pub abort: Option<AbortReason>,
    pub elapsed_ms: f64,
}

impl FrameRecord {
    pub fn payload_len(&self) -> usize {
        self.ell_frame - self.selection.punctured - self.selection.shortened
    }
}

/// Input of one party for one block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockInput {
    pub block_id: u32,
    pub subblocks: Vec<Vec<u8>>,
    /// Decoy bits per frame, one segment per subblock.
    pub decoy: Vec<Vec<u8>>,
}

/// Result of an in-memory block run.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOutcome {
    pub alice: Vec<FrameRecord>,
    pub bob: Vec<FrameRecord>,
    /// Bob's corrected subblocks, `None` for failed frames.
    pub bob_keys: Vec<Option<Vec<u8>>>,
    /// Messages exchanged per frame, in frame order (decoy excluded).
    pub messages_per_frame: Vec<usize>,
    /// Disclosed values sent per frame in Disclosure or SymmetricLlr
    /// messages, counting each symmetric position once.
    pub disclosed_per_frame: Vec<usize>,
}

/// Runs one block through both parties in the current thread.
///
/// `first_frame_id` must be the id of the block's first frame on both
/// sides; the parties keep their state (estimator, frame counter) between
/// calls.
pub fn run_block(alice: &mut Alice<'_>, bob: &mut Bob<'_>, alice_in: BlockInput, bob_in: BlockInput) -> Result<BlockOutcome> {
    let frames = alice_in.subblocks.len();
    if bob_in.subblocks.len() != frames {
        return Err(Error::arg("Alice and Bob hold different numbers of subblocks"));
    }
    let first = alice.next_frame_id();
    let alice_start = alice.records().len();
    let bob_start = bob.records().len();
    let mut to_bob = std::collections::VecDeque::from(alice.start_block(alice_in)?);
    let mut to_alice = std::collections::VecDeque::from(bob.start_block(bob_in)?);
    let mut messages = vec![0usize; frames];
    let mut disclosed = vec![0usize; frames];
    let mut tally = |m: &RoundMessage, from_bob: bool| {
        let idx = m.frame_id().wrapping_sub(first) as usize;
        match m {
            RoundMessage::Decoy { .. } => {}
            _ if idx < frames => {
                messages[idx] += 1;
                match m {
                    RoundMessage::Disclosure { values, .. } => disclosed[idx] += values.len(),
                    RoundMessage::SymmetricLlr { values, .. } if !from_bob => disclosed[idx] += values.len(),
                    _ => {}
                }
            }
            _ => {}
        }
    };
    loop {
        if let Some(m) = to_bob.pop_front() {
            tally(&m, false);
            to_alice.extend(bob.handle(m)?);
        } else if let Some(m) = to_alice.pop_front() {
            tally(&m, true);
            to_bob.extend(alice.handle(m)?);
        } else {
            break;
        }
    }
    if !alice.block_finished() || !bob.block_finished() {
        return Err(Error::protocol("block stalled before all frames finished"));
    }
    Ok(BlockOutcome {
        alice: alice.records()[alice_start..].to_vec(),
        bob: bob.records()[bob_start..].to_vec(),
        bob_keys: bob.keys()[bob_start..].to_vec(),
        messages_per_frame: messages,
        disclosed_per_frame: disclosed,
    })
}
