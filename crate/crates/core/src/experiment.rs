//! Simulated reconciliation runs: a channel profile, a scheme and a frame
//! count in, both parties' frame records out.

use crate::ldpc::CodePool;
use crate::session::{run_block, Alice, Bob, FrameRecord, SessionConfig};
use crate::simchannel::{simulate_block, ChannelParams, QberProfile};
use crate::Result;

/// One simulated operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSpec {
    pub frames: usize,
    pub frames_per_block: usize,
    pub channel: ChannelParams,
    pub profile: QberProfile,
    /// Seed of the simulated channel. The session seed and the parties'
    /// true-random sources come from the session config.
    pub channel_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointRun {
    pub alice: Vec<FrameRecord>,
    pub bob: Vec<FrameRecord>,
    /// Verified frames whose corrected key differs from Alice's subblock,
    /// counted by comparing both sides outside the protocol.
    pub mismatched: usize,
    /// Largest number of messages exchanged for a single frame.
    pub max_messages: usize,
}

/// Seeds of Alice's and Bob's true-random sources for a session seed.
pub fn party_seeds(session_seed: u64) -> (u64, u64) {
    (session_seed ^ 0xA11C_E000_0000_0001, session_seed ^ 0xB0B0_0000_0000_0002)
}

/// Runs `spec.frames` frames, block by block, through one Alice/Bob pair.
/// `on_block` sees every finished block (Bob's records) as it completes.
pub fn run_point(
    pool: &CodePool,
    session: &SessionConfig,
    spec: &PointSpec,
    mut on_block: impl FnMut(&[FrameRecord]) -> Result<()>,
) -> Result<PointRun> {
    let (alice_seed, bob_seed) = party_seeds(session.seed);
    let mut alice = Alice::new(pool, session.clone(), alice_seed)?;
    let mut bob = Bob::new(pool, session.clone(), bob_seed)?;
    let per_block = spec.frames_per_block.max(1);
    let mut run = PointRun {
        alice: Vec::with_capacity(spec.frames),
        bob: Vec::with_capacity(spec.frames),
        mismatched: 0,
        max_messages: 0,
    };
    let mut block_id = 0;
    while run.bob.len() < spec.frames {
        let frames = per_block.min(spec.frames - run.bob.len());
        let block = simulate_block(
            &spec.channel,
            &spec.profile,
            &session.geometry,
            block_id,
            frames,
            spec.channel_seed,
        );
        let outcome = run_block(&mut alice, &mut bob, block.alice.clone(), block.bob)?;
        for (i, key) in outcome.bob_keys.iter().enumerate() {
            if outcome.bob[i].verified && key.as_ref() != Some(&block.alice.subblocks[i]) {
                run.mismatched += 1;
            }
        }
        let tag = |mut records: Vec<FrameRecord>| {
            for (r, q) in records.iter_mut().zip(&block.qber_true) {
                r.qber_true = Some(*q);
            }
            records
        };
        let bob_records = tag(outcome.bob);
        on_block(&bob_records)?;
        run.bob.extend(bob_records);
        run.alice.extend(tag(outcome.alice));
        run.max_messages = run
            .max_messages
            .max(outcome.messages_per_frame.iter().copied().max().unwrap_or(0));
        block_id += 1;
    }
    Ok(run)
}
