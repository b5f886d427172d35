use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::{
    build_frame, frame_seed, seed_commitment, verification_hash, AbortReason, BlockInput, FrameAssembly, FrameLayout,
    FrameRecord, PositionKind, RoundMessage, SessionConfig, TimeModel,
};
use crate::adapt::{
    next_disclosure_count, select_blind_code, select_code, CodeSelection, DisclosureState, Estimate,
    QberEstimatorState, Scheme, QBER_HAT_MAX, QBER_HAT_MIN,
};
use crate::bits::xor;
use crate::decoder::{init_llrs, minsum_decode, DecodeResult};
use crate::ldpc::{CodePool, CodeRate, ParityCheckMatrix};
use crate::{Error, Result};

/// An event-driven protocol participant.
pub trait Party {
    /// Consumes one message from the peer and returns the replies in order.
    fn handle(&mut self, msg: RoundMessage) -> Result<Vec<RoundMessage>>;
    /// All frames of the current block have ended.
    fn block_finished(&self) -> bool;
}

/// The `d` undisclosed, non-shortened positions of smallest `|llr|`, ties
/// broken by ascending index, returned in ascending order.
pub fn min_llr_positions(llrs: &[f64], layout: &FrameLayout, disclosed: &[bool], d: usize) -> Vec<u32> {
    let mut candidates: Vec<u32> = (0..layout.len() as u32)
        .filter(|&i| !disclosed[i as usize] && layout.kind(i as usize) != PositionKind::Shortened)
        .collect();
    candidates.sort_by(|&a, &b| {
        llrs[a as usize]
            .abs()
            .total_cmp(&llrs[b as usize].abs())
            .then(a.cmp(&b))
    });
    candidates.truncate(d);
    candidates.sort_unstable();
    candidates
}

/// Decoding state of the error pattern `e = x_A xor x_B` of one frame.
#[derive(Debug)]
struct ErrorDecoding {
    target: Vec<u8>,
    disclosed: Vec<bool>,
    /// Known values of `e`; meaningful where `disclosed` is set.
    known: Vec<u8>,
    last: Option<DecodeResult>,
}

impl ErrorDecoding {
    fn new(target: Vec<u8>, n: usize) -> Self {
        ErrorDecoding {
            target,
            disclosed: vec![false; n],
            known: vec![0; n],
            last: None,
        }
    }

    /// Runs the decoder and returns the iteration count and the charged
    /// time in milliseconds.
    fn run(
        &mut self,
        h: &ParityCheckMatrix,
        layout: &FrameLayout,
        qber_hat: f64,
        config: &SessionConfig,
    ) -> Result<(usize, f64)> {
        let dec = &config.decoder;
        let start = match config.time {
            TimeModel::Wall => Some(std::time::Instant::now()),
            TimeModel::Modeled { .. } => None,
        };
        let llrs = init_llrs(layout, &self.disclosed, &self.known, qber_hat, dec.saturation)?;
        let result = minsum_decode(h, &self.target, &llrs, dec.max_iters, dec.scale_step)?;
        let iterations = result.iterations;
        let ms = match (config.time, start) {
            (TimeModel::Modeled { ns_per_edge_iteration }, _) => {
                h.num_edges() as f64 * iterations.max(1) as f64 * ns_per_edge_iteration * 1e-6
            }
            (TimeModel::Wall, Some(t)) => t.elapsed().as_secs_f64() * 1e3,
            (TimeModel::Wall, None) => unreachable!("wall clock started above"),
        };
        self.last = Some(result);
        Ok((iterations, ms))
    }

    fn converged(&self) -> bool {
        self.last.as_ref().is_some_and(|r| r.converged())
    }

    fn fix(&mut self, pos: usize, e: u8) {
        self.disclosed[pos] = true;
        self.known[pos] = e;
    }
}

/// Bookkeeping shared by both parties for the frame in progress.
#[derive(Debug)]
struct FrameProgress<'a> {
    frame_id: u32,
    selection: CodeSelection,
    h: &'a ParityCheckMatrix,
    assembly: FrameAssembly,
    syndrome: Vec<u8>,
    disclosure: DisclosureState,
    d_punctured: usize,
    iterations: usize,
    elapsed_ms: f64,
    decoding: Option<ErrorDecoding>,
}

impl<'a> FrameProgress<'a> {
    fn start(
        pool: &'a CodePool,
        config: &SessionConfig,
        frame_id: u32,
        selection: CodeSelection,
        subblock: &[u8],
        true_random: &mut ChaCha20Rng,
    ) -> Result<Self> {
        let h = pool.matrix(selection.rate);
        let assembly = build_frame(
            subblock,
            h,
            &selection,
            frame_seed(config.seed, frame_id),
            true_random,
        )?;
        let syndrome = h.syndrome(&assembly.bits)?;
        let disclosure = DisclosureState::new(selection.punctured, assembly.layout.payload_positions().len());
        Ok(FrameProgress {
            frame_id,
            selection,
            h,
            assembly,
            syndrome,
            disclosure,
            d_punctured: 0,
            iterations: 0,
            elapsed_ms: 0.0,
            decoding: None,
        })
    }

    fn decode(&mut self, config: &SessionConfig) -> Result<bool> {
        let decoding = self.decoding.as_mut().expect("decoding initialised");
        let (it, ms) = decoding.run(self.h, &self.assembly.layout, self.selection.qber_hat, config)?;
        self.iterations += it;
        self.elapsed_ms += ms;
        Ok(decoding.converged())
    }

    fn next_count(&self, config: &SessionConfig) -> Result<usize> {
        next_disclosure_count(
            &config.policy,
            &self.disclosure,
            &self.selection,
            self.h.n_rows(),
            config.geometry.ell_frame,
            config.policy.blind_delta(&config.geometry),
        )
    }

    /// Marks positions whose peer values are `peer_values` as known and
    /// records the round.
    fn absorb(&mut self, positions: &[u32], peer_values: &[u8]) {
        let decoding = self.decoding.as_mut().expect("decoding initialised");
        let mut punctured = 0;
        for (&pos, &v) in positions.iter().zip(peer_values) {
            let pos = pos as usize;
            decoding.fix(pos, v ^ self.assembly.bits[pos]);
            punctured += usize::from(self.assembly.layout.kind(pos) == PositionKind::Punctured);
        }
        self.d_punctured += punctured;
        self.disclosure.record_split(punctured, positions.len() - punctured);
    }

    fn record(&self, scheme: Scheme, success: bool, verified: bool, measured: Option<f64>) -> FrameRecord {
        FrameRecord {
            frame_id: self.frame_id,
            scheme,
            success,
            verified,
            iterations_total: self.iterations,
            rounds_additional: self.disclosure.rounds(),
            d_total: self.disclosure.disclosed_total(),
            d_punctured: self.d_punctured,
            selection: self.selection,
            ell_frame: self.h.n_cols(),
            syndrome_len: self.h.n_rows(),
            measured_qber: measured,
            qber_true: None,
            burst: false,
            abort: None,
            elapsed_ms: self.elapsed_ms,
        }
    }

    fn payload_len(&self) -> usize {
        self.assembly.layout.payload_positions().len()
    }
}

fn check_positions(positions: &[u32], values: &[u8], n: usize, disclosed: &[bool]) -> Result<()> {
    if positions.len() != values.len() {
        return Err(Error::protocol("positions and values differ in length"));
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::protocol("disclosed positions are not strictly increasing"));
    }
    if positions.iter().any(|&p| p as usize >= n || disclosed[p as usize]) {
        return Err(Error::protocol("disclosed position outside frame or already disclosed"));
    }
    Ok(())
}

fn values_at(bits: &[u8], positions: &[u32]) -> Vec<u8> {
    positions.iter().map(|&p| bits[p as usize]).collect()
}

fn unexpected(who: &str, msg: &RoundMessage) -> Error {
    Error::protocol(format!("{who}: unexpected {} for frame {}", msg.name(), msg.frame_id()))
}

fn validate_config(pool: &CodePool, config: &SessionConfig) -> Result<()> {
    config.validate()?;
    if pool.n_cols() != config.geometry.ell_frame {
        return Err(Error::Config(format!(
            "code pool has {}-bit frames, configuration expects {}",
            pool.n_cols(),
            config.geometry.ell_frame
        )));
    }
    Ok(())
}

#[derive(Debug)]
struct AliceBlock {
    subblocks: Vec<Vec<u8>>,
    done: usize,
}

/// Holder of the reference key.
#[derive(Debug)]
pub struct Alice<'a> {
    pool: &'a CodePool,
    config: SessionConfig,
    true_random: ChaCha20Rng,
    next_frame_id: u32,
    block: Option<AliceBlock>,
    frame: Option<AliceFrame<'a>>,
    records: Vec<FrameRecord>,
}

#[derive(Debug)]
struct AliceFrame<'a> {
    progress: FrameProgress<'a>,
    /// Punctured positions in the true-random disclosure order.
    punctured_order: Vec<u32>,
    punctured_cursor: usize,
    payload_cursor: usize,
}

impl<'a> Alice<'a> {
    /// `true_random_seed` seeds Alice's private generator for punctured
    /// values; it must not be derivable from the session seed.
    pub fn new(pool: &'a CodePool, config: SessionConfig, true_random_seed: u64) -> Result<Self> {
        validate_config(pool, &config)?;
        Ok(Alice {
            pool,
            config,
            true_random: ChaCha20Rng::seed_from_u64(true_random_seed),
            next_frame_id: 0,
            block: None,
            frame: None,
            records: Vec::new(),
        })
    }

    /// Starts a block and returns the decoy message.
    pub fn start_block(&mut self, input: BlockInput) -> Result<Vec<RoundMessage>> {
        if !self.block_finished() {
            return Err(Error::arg("previous block still in progress"));
        }
        let bits = input.decoy.concat();
        self.block = Some(AliceBlock {
            subblocks: input.subblocks,
            done: 0,
        });
        Ok(vec![RoundMessage::Decoy {
            block_id: input.block_id,
            bits,
        }])
    }

    pub fn records(&self) -> &[FrameRecord] {
        &self.records
    }

    pub fn next_frame_id(&self) -> u32 {
        self.next_frame_id
    }

    fn scheme(&self) -> Scheme {
        self.config.policy.scheme
    }

    fn on_request(
        &mut self,
        frame_id: u32,
        rate: CodeRate,
        punctured: u32,
        shortened: u32,
        qber_hat: f64,
    ) -> Result<Vec<RoundMessage>> {
        let block = self.block.as_ref().ok_or_else(|| Error::protocol("Alice: no block in progress"))?;
        if self.frame.is_some() || frame_id != self.next_frame_id || block.done >= block.subblocks.len() {
            return Err(Error::protocol(format!("Alice: unexpected request for frame {frame_id}")));
        }
        let (p, s) = (punctured as usize, shortened as usize);
        if p + s != self.config.geometry.extension_bits() || !(QBER_HAT_MIN..=QBER_HAT_MAX).contains(&qber_hat) {
            return Err(Error::protocol(format!("Alice: invalid selection in request for frame {frame_id}")));
        }
        let selection = CodeSelection {
            rate,
            punctured: p,
            shortened: s,
            qber_hat,
        };
        let progress = FrameProgress::start(
            self.pool,
            &self.config,
            frame_id,
            selection,
            &block.subblocks[block.done],
            &mut self.true_random,
        )?;
        let mut punctured_order = progress.assembly.layout.punctured_positions().to_vec();
        punctured_order.shuffle(&mut self.true_random);
        let reply = RoundMessage::Syndrome {
            frame_id,
            rate,
            punctured,
            shortened,
            seed_commitment: seed_commitment(frame_seed(self.config.seed, frame_id)),
            syndrome: progress.syndrome.clone(),
        };
        self.frame = Some(AliceFrame {
            progress,
            punctured_order,
            punctured_cursor: 0,
            payload_cursor: 0,
        });
        Ok(vec![reply])
    }

    fn finish(&mut self, record: FrameRecord) {
        self.records.push(record);
        self.frame = None;
        self.next_frame_id += 1;
        if let Some(b) = self.block.as_mut() {
            b.done += 1;
        }
    }
}

impl Party for Alice<'_> {
    fn handle(&mut self, msg: RoundMessage) -> Result<Vec<RoundMessage>> {
        if let RoundMessage::FrameRequest {
            frame_id,
            rate,
            punctured,
            shortened,
            qber_hat,
        } = msg
        {
            return self.on_request(frame_id, rate, punctured, shortened, qber_hat);
        }
        let scheme = self.scheme();
        let config = self.config.clone();
        let Some(frame) = self.frame.as_mut().filter(|f| f.progress.frame_id == msg.frame_id()) else {
            return Err(unexpected("Alice", &msg));
        };
        let pr = &mut frame.progress;
        match msg {
            RoundMessage::Syndrome { syndrome, .. }
                if scheme == Scheme::Symmetric && pr.decoding.is_none() =>
            {
                if syndrome.len() != pr.syndrome.len() {
                    return Err(Error::protocol("Alice: peer syndrome has the wrong length"));
                }
                pr.decoding = Some(ErrorDecoding::new(xor(&pr.syndrome, &syndrome), pr.h.n_cols()));
                pr.decode(&config)?;
                Ok(Vec::new())
            }
            RoundMessage::FailReport { frame_id, k } if scheme != Scheme::Symmetric => {
                if k as usize != pr.disclosure.k {
                    return Err(Error::protocol(format!("Alice: FailReport k = {k}, expected {}", pr.disclosure.k)));
                }
                let d = pr.next_count(&config).map_err(|e| match e {
                    Error::Exhausted => Error::protocol("Alice: FailReport with nothing left to disclose"),
                    other => other,
                })?;
                let from_punctured = d.min(frame.punctured_order.len() - frame.punctured_cursor);
                let mut positions: Vec<u32> = frame.punctured_order
                    [frame.punctured_cursor..frame.punctured_cursor + from_punctured]
                    .to_vec();
                let from_payload = d - from_punctured;
                positions.extend_from_slice(
                    &pr.assembly.payload_disclosure_order[frame.payload_cursor..frame.payload_cursor + from_payload],
                );
                frame.punctured_cursor += from_punctured;
                frame.payload_cursor += from_payload;
                positions.sort_unstable();
                pr.disclosure.record_split(from_punctured, from_payload);
                pr.d_punctured += from_punctured;
                let values = values_at(&pr.assembly.bits, &positions);
                Ok(vec![RoundMessage::Disclosure {
                    frame_id,
                    positions,
                    values,
                }])
            }
            RoundMessage::SymmetricLlr {
                frame_id,
                positions,
                values,
            } if scheme == Scheme::Symmetric => {
                let decoding = pr.decoding.as_ref().ok_or_else(|| unexpected("Alice", &RoundMessage::FailReport { frame_id, k: 0 }))?;
                if decoding.converged() {
                    return Err(Error::protocol("Alice: peer reports a failure on a frame Alice decoded"));
                }
                check_positions(&positions, &values, pr.h.n_cols(), &decoding.disclosed)?;
                let d = pr.next_count(&config)?;
                let last = decoding.last.as_ref().expect("decoded on syndrome");
                let own = min_llr_positions(&last.final_llrs.values, &pr.assembly.layout, &decoding.disclosed, d);
                if own != positions {
                    return Err(Error::protocol("Alice: minimal-LLR positions differ from the peer's"));
                }
                let own_values = values_at(&pr.assembly.bits, &positions);
                pr.absorb(&positions, &values);
                pr.decode(&config)?;
                Ok(vec![RoundMessage::SymmetricLlr {
                    frame_id,
                    positions,
                    values: own_values,
                }])
            }
            RoundMessage::Verify { frame_id, hash, errors } => {
                let payload = pr.assembly.deinterleave(&pr.assembly.bits);
                let ok = verification_hash(pr.assembly.hash_key, &payload) == hash;
                let measured = errors as f64 / pr.payload_len() as f64;
                let record = pr.record(scheme, true, ok, Some(measured));
                self.finish(record);
                Ok(vec![RoundMessage::VerifyResult { frame_id, ok }])
            }
            RoundMessage::Abort { reason, .. } => {
                let mut record = pr.record(scheme, false, false, None);
                record.abort = Some(reason);
                self.finish(record);
                Ok(Vec::new())
            }
            other => Err(unexpected("Alice", &other)),
        }
    }

    fn block_finished(&self) -> bool {
        self.frame.is_none() && self.block.as_ref().is_none_or(|b| b.done == b.subblocks.len())
    }
}

#[derive(Debug)]
struct BobBlock {
    block_id: u32,
    subblocks: Vec<Vec<u8>>,
    decoy: Vec<Vec<u8>>,
    decoy_qbers: Option<Vec<Option<f64>>>,
    done: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::enum_variant_names)]
enum BobPhase {
    AwaitSyndrome,
    AwaitDisclosure { d: usize },
    AwaitLlr { positions: Vec<u32> },
    AwaitVerifyResult { errors: usize, key: Vec<u8> },
}

#[derive(Debug)]
struct BobFrame<'a> {
    progress: FrameProgress<'a>,
    phase: BobPhase,
    burst: bool,
}

/// Holder of the noisy key; owns the QBER estimator and decides every
/// frame's code and round count.
#[derive(Debug)]
pub struct Bob<'a> {
    pool: &'a CodePool,
    config: SessionConfig,
    true_random: ChaCha20Rng,
    estimator: QberEstimatorState,
    next_frame_id: u32,
    block: Option<BobBlock>,
    frame: Option<BobFrame<'a>>,
    records: Vec<FrameRecord>,
    keys: Vec<Option<Vec<u8>>>,
}

impl<'a> Bob<'a> {
    pub fn new(pool: &'a CodePool, config: SessionConfig, true_random_seed: u64) -> Result<Self> {
        validate_config(pool, &config)?;
        Ok(Bob {
            pool,
            estimator: QberEstimatorState::new(config.estimator.clone()),
            config,
            true_random: ChaCha20Rng::seed_from_u64(true_random_seed),
            next_frame_id: 0,
            block: None,
            frame: None,
            records: Vec::new(),
            keys: Vec::new(),
        })
    }

    /// Starts a block; Bob waits for Alice's decoy message.
    pub fn start_block(&mut self, input: BlockInput) -> Result<Vec<RoundMessage>> {
        if !self.block_finished() {
            return Err(Error::arg("previous block still in progress"));
        }
        if input.decoy.len() != input.subblocks.len() {
            return Err(Error::arg("one decoy segment per subblock is required"));
        }
        self.block = Some(BobBlock {
            block_id: input.block_id,
            subblocks: input.subblocks,
            decoy: input.decoy,
            decoy_qbers: None,
            done: 0,
        });
        Ok(Vec::new())
    }

    pub fn records(&self) -> &[FrameRecord] {
        &self.records
    }

    /// Corrected subblocks in record order; `None` where the frame failed.
    pub fn keys(&self) -> &[Option<Vec<u8>>] {
        &self.keys
    }

    pub fn estimator(&self) -> &QberEstimatorState {
        &self.estimator
    }

    fn scheme(&self) -> Scheme {
        self.config.policy.scheme
    }

    fn estimate(&mut self, decoy_qber: Option<f64>) -> Estimate {
        let use_burst = self.config.policy.uses_estimator_feedback() && self.config.estimator.burst_detection;
        let estimate = if use_burst {
            self.estimator.estimate_or_prior(decoy_qber)
        } else {
            let raw = self
                .estimator
                .ema()
                .or(decoy_qber)
                .unwrap_or(self.config.estimator.prior_qber);
            Estimate {
                qber_hat: raw.clamp(QBER_HAT_MIN, QBER_HAT_MAX),
                burst: false,
            }
        };
        if let Some(q) = decoy_qber {
            self.estimator.record_decoy(q, estimate.burst);
        }
        estimate
    }

    /// Selects the code of the next frame, if any, and requests it.
    fn start_frame(&mut self) -> Result<Vec<RoundMessage>> {
        let block = self.block.as_ref().expect("block in progress");
        if block.done == block.subblocks.len() {
            return Ok(Vec::new());
        }
        let index = block.done;
        let decoy_qber = block.decoy_qbers.as_ref().and_then(|q| q[index]);
        let estimate = self.estimate(decoy_qber);
        let policy = &self.config.policy;
        let selection = if policy.scheme.is_blind() {
            select_blind_code(estimate.qber_hat, policy, &self.config.geometry)
        } else {
            select_code(self.pool, estimate.qber_hat, policy, &self.config.geometry)
        };
        let block = self.block.as_ref().expect("block in progress");
        let progress = FrameProgress::start(
            self.pool,
            &self.config,
            self.next_frame_id,
            selection,
            &block.subblocks[index],
            &mut self.true_random,
        )?;
        self.frame = Some(BobFrame {
            progress,
            phase: BobPhase::AwaitSyndrome,
            burst: estimate.burst,
        });
        Ok(vec![RoundMessage::FrameRequest {
            frame_id: self.next_frame_id,
            rate: selection.rate,
            punctured: selection.punctured as u32,
            shortened: selection.shortened as u32,
            qber_hat: selection.qber_hat,
        }])
    }

    /// Decodes and decides the next step of the frame.
    fn decode_step(&mut self) -> Result<Vec<RoundMessage>> {
        let config = self.config.clone();
        let frame = self.frame.as_mut().expect("frame in progress");
        let pr = &mut frame.progress;
        let frame_id = pr.frame_id;
        if pr.decode(&config)? {
            let decoding = pr.decoding.as_ref().expect("decoded");
            let e = decoding.last.as_ref().and_then(|r| r.error_pattern.as_ref()).expect("converged");
            let corrected = xor(&pr.assembly.bits, e);
            let key = pr.assembly.deinterleave(&corrected);
            let errors = pr
                .assembly
                .layout
                .payload_positions()
                .iter()
                .filter(|&&p| e[p as usize] == 1)
                .count();
            let hash = verification_hash(pr.assembly.hash_key, &key);
            frame.phase = BobPhase::AwaitVerifyResult { errors, key };
            return Ok(vec![RoundMessage::Verify {
                frame_id,
                hash,
                errors: errors as u32,
            }]);
        }
        let abort = if pr.disclosure.rounds() >= config.policy.n_add_max {
            Some(AbortReason::RoundsExhausted)
        } else if pr.elapsed_ms >= config.policy.time_budget_ms as f64 {
            Some(AbortReason::TimeBudget)
        } else {
            None
        };
        let d = match (abort, pr.next_count(&config)) {
            (Some(_), _) | (None, Err(Error::Exhausted)) => {
                let reason = abort.unwrap_or(AbortReason::NothingToDisclose);
                let mut out = vec![RoundMessage::Abort { frame_id, reason }];
                self.end_frame(false, None, Some(reason));
                out.extend(self.start_frame()?);
                return Ok(out);
            }
            (None, Err(e)) => return Err(e),
            (None, Ok(d)) => d,
        };
        if config.policy.scheme == Scheme::Symmetric {
            let decoding = pr.decoding.as_ref().expect("decoded");
            let last = decoding.last.as_ref().expect("decoded");
            let positions = min_llr_positions(&last.final_llrs.values, &pr.assembly.layout, &decoding.disclosed, d);
            let values = values_at(&pr.assembly.bits, &positions);
            frame.phase = BobPhase::AwaitLlr {
                positions: positions.clone(),
            };
            Ok(vec![RoundMessage::SymmetricLlr {
                frame_id,
                positions,
                values,
            }])
        } else {
            frame.phase = BobPhase::AwaitDisclosure { d };
            Ok(vec![RoundMessage::FailReport {
                frame_id,
                k: pr.disclosure.k as u32,
            }])
        }
    }

    fn end_frame(&mut self, verified: bool, key_and_errors: Option<(Vec<u8>, usize)>, abort: Option<AbortReason>) {
        let scheme = self.scheme();
        let frame = self.frame.take().expect("frame in progress");
        let pr = &frame.progress;
        let payload = pr.payload_len();
        let measured = key_and_errors.as_ref().map(|(_, errors)| *errors as f64 / payload as f64);
        let mut record = pr.record(scheme, key_and_errors.is_some(), verified, measured);
        record.burst = frame.burst;
        record.abort = abort;
        let floor = 1.0 / (2.0 * payload as f64);
        let feedback = match (verified, measured) {
            (true, Some(q)) => Some(q.max(floor)),
            _ if self.config.policy.uses_estimator_feedback() => Some(self.config.estimator.penalty_qber),
            _ => None,
        };
        if let Some(q) = feedback {
            self.estimator
                .ema_update(q.min(0.5))
                .expect("feedback QBER within (0, 0.5]");
        }
        self.records.push(record);
        self.keys
            .push(key_and_errors.filter(|_| verified).map(|(key, _)| key));
        self.next_frame_id += 1;
        if let Some(b) = self.block.as_mut() {
            b.done += 1;
        }
    }
}

impl Party for Bob<'_> {
    fn handle(&mut self, msg: RoundMessage) -> Result<Vec<RoundMessage>> {
        if let RoundMessage::Decoy { block_id, bits } = msg {
            let block = self
                .block
                .as_mut()
                .filter(|b| b.block_id == block_id && b.decoy_qbers.is_none())
                .ok_or_else(|| Error::protocol(format!("Bob: unexpected decoy for block {block_id}")))?;
            let total: usize = block.decoy.iter().map(Vec::len).sum();
            if bits.len() != total {
                return Err(Error::protocol(format!("Bob: {} decoy bits, expected {total}", bits.len())));
            }
            let mut offset = 0;
            let qbers = block
                .decoy
                .iter()
                .map(|own| {
                    let theirs = &bits[offset..offset + own.len()];
                    offset += own.len();
                    (!own.is_empty()).then(|| {
                        crate::bits::hamming_distance(own, theirs) as f64 / own.len() as f64
                    })
                })
                .collect();
            block.decoy_qbers = Some(qbers);
            return self.start_frame();
        }
        let scheme = self.scheme();
        let Some(frame) = self.frame.as_mut().filter(|f| f.progress.frame_id == msg.frame_id()) else {
            return Err(unexpected("Bob", &msg));
        };
        let pr = &mut frame.progress;
        match (msg, &frame.phase) {
            (
                RoundMessage::Syndrome {
                    rate,
                    punctured,
                    shortened,
                    seed_commitment: commitment,
                    syndrome,
                    ..
                },
                BobPhase::AwaitSyndrome,
            ) => {
                let sel = pr.selection;
                if rate != sel.rate || punctured as usize != sel.punctured || shortened as usize != sel.shortened {
                    return Err(Error::protocol("Bob: syndrome parameters differ from the request"));
                }
                if commitment != seed_commitment(frame_seed(self.config.seed, pr.frame_id)) {
                    return Err(Error::protocol("Bob: seed commitment mismatch"));
                }
                if syndrome.len() != pr.syndrome.len() {
                    return Err(Error::protocol("Bob: syndrome has the wrong length"));
                }
                pr.decoding = Some(ErrorDecoding::new(xor(&syndrome, &pr.syndrome), pr.h.n_cols()));
                let mut out = Vec::new();
                if scheme == Scheme::Symmetric {
                    out.push(RoundMessage::Syndrome {
                        frame_id: pr.frame_id,
                        rate,
                        punctured,
                        shortened,
                        seed_commitment: commitment,
                        syndrome: pr.syndrome.clone(),
                    });
                }
                out.extend(self.decode_step()?);
                Ok(out)
            }
            (RoundMessage::Disclosure { positions, values, .. }, &BobPhase::AwaitDisclosure { d }) => {
                let decoding = pr.decoding.as_ref().expect("decoded");
                check_positions(&positions, &values, pr.h.n_cols(), &decoding.disclosed)?;
                let layout = &pr.assembly.layout;
                let punctured = positions
                    .iter()
                    .filter(|&&p| layout.kind(p as usize) == PositionKind::Punctured)
                    .count();
                let shortened = positions
                    .iter()
                    .any(|&p| layout.kind(p as usize) == PositionKind::Shortened);
                if positions.len() != d || shortened || punctured != d.min(pr.disclosure.punctured_remaining) {
                    return Err(Error::protocol("Bob: disclosure does not follow the schedule"));
                }
                pr.absorb(&positions, &values);
                self.decode_step()
            }
            (RoundMessage::SymmetricLlr { positions, values, .. }, BobPhase::AwaitLlr { positions: sent }) => {
                if &positions != sent || values.len() != positions.len() {
                    return Err(Error::protocol("Bob: peer disclosed different positions"));
                }
                pr.absorb(&positions, &values);
                self.decode_step()
            }
            (RoundMessage::VerifyResult { ok, .. }, BobPhase::AwaitVerifyResult { errors, key }) => {
                let done = Some((key.clone(), *errors));
                self.end_frame(ok, done, None);
                self.start_frame()
            }
            (other, _) => Err(unexpected("Bob", &other)),
        }
    }

    fn block_finished(&self) -> bool {
        self.frame.is_none() && self.block.as_ref().is_none_or(|b| b.done == b.subblocks.len())
    }
}
