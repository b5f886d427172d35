//! Correlated sifted-key pairs and decoy statistics from a decoy-state
//! BB84 channel model.
//!
//! The model: transmittance `t = eta 10^(-loss/10)`, background yield
//! `Y0 = p_dc` with error probability 1/2, gain
//! `Q_x = Y0 + 1 - exp(-x t)` and `E_x Q_x = Y0 / 2 + p_opt (1 - exp(-x t))`
//! for intensity `x`.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::adapt::FrameGeometry;
use crate::bits::{hamming_distance, pack, unpack};
use crate::session::BlockInput;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub mu: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub p_mu: f64,
    pub p_nu1: f64,
    pub p_nu2: f64,
    /// Detector efficiency.
    pub eta: f64,
    pub p_dc: f64,
    /// Detector dead time in seconds.
    pub tau_dead: f64,
    pub p_opt: f64,
    pub loss_db: f64,
    /// Source pulse repetition rate in Hz; only used for timing.
    pub pulse_rate_hz: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            mu: 0.30,
            nu1: 0.09,
            nu2: 0.003,
            p_mu: 0.50,
            p_nu1: 0.25,
            p_nu2: 0.25,
            eta: 0.13,
            p_dc: 1e-6,
            tau_dead: 5e-6,
            p_opt: 0.02,
            loss_db: 0.0,
            pulse_rate_hz: 100e6,
        }
    }
}

impl ChannelParams {
    pub fn with_loss(&self, loss_db: f64) -> Self {
        ChannelParams { loss_db, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [self.p_mu, self.p_nu1, self.p_nu2, self.eta, self.p_dc, self.p_opt];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("channel probabilities must lie in [0, 1]".into()));
        }
        if (self.p_mu + self.p_nu1 + self.p_nu2 - 1.0).abs() > 1e-9 {
            return Err(Error::Config("state probabilities must sum to 1".into()));
        }
        if !(self.mu > self.nu1 && self.nu1 > self.nu2 && self.nu2 >= 0.0) {
            return Err(Error::Config("intensities must satisfy mu > nu1 > nu2 >= 0".into()));
        }
        if !(self.loss_db >= 0.0 && self.tau_dead >= 0.0) {
            return Err(Error::Config("loss and dead time must be non-negative".into()));
        }
        if !(self.pulse_rate_hz > 0.0) {
            return Err(Error::Config("pulse_rate_hz must be positive".into()));
        }
        Ok(())
    }

    pub fn transmittance(&self) -> f64 {
        self.eta * 10f64.powf(-self.loss_db / 10.0)
    }
}

/// Gains and QBERs of the three intensities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelQber {
    pub e_mu: f64,
    pub e_nu1: f64,
    pub e_nu2: f64,
    pub q_mu: f64,
    pub q_nu1: f64,
    pub q_nu2: f64,
}

impl ModelQber {
    /// `E_nu1 / E_mu`, or 1 when the signal QBER is zero.
    pub fn decoy_ratio(&self) -> f64 {
        if self.e_mu > 0.0 {
            self.e_nu1 / self.e_mu
        } else {
            1.0
        }
    }
}

pub fn model_qber(params: &ChannelParams) -> ModelQber {
    let t = params.transmittance();
    let y0 = params.p_dc;
    let intensity = |x: f64| {
        let detected = 1.0 - (-x * t).exp();
        let gain = y0 + detected;
        let err = 0.5 * y0 + params.p_opt * detected;
        let qber = if gain > 0.0 { err / gain } else { 0.0 };
        (qber, gain)
    };
    let (e_mu, q_mu) = intensity(params.mu);
    let (e_nu1, q_nu1) = intensity(params.nu1);
    let (e_nu2, q_nu2) = intensity(params.nu2);
    ModelQber {
        e_mu,
        e_nu1,
        e_nu2,
        q_mu,
        q_nu1,
        q_nu2,
    }
}

/// Number of weak-decoy detections accompanying `subblock_len` signal
/// detections.
pub fn decoy_len_per_frame(params: &ChannelParams, subblock_len: usize) -> usize {
    let m = model_qber(params);
    if m.q_mu <= 0.0 || params.p_mu <= 0.0 {
        return 0;
    }
    (subblock_len as f64 * params.p_nu1 * m.q_nu1 / (params.p_mu * m.q_mu)).round() as usize
}

/// Seconds needed to collect `signal_bits` signal detections.
///
/// The raw click rate over all intensities is limited by a non-paralyzable
/// dead time, `r / (1 + r tau_dead)`; the signal share of the clicks is
/// `p_mu Q_mu / sum p_x Q_x`.
pub fn generation_time(params: &ChannelParams, signal_bits: usize) -> f64 {
    let m = model_qber(params);
    let clicks_per_pulse = params.p_mu * m.q_mu + params.p_nu1 * m.q_nu1 + params.p_nu2 * m.q_nu2;
    let signal_share = params.p_mu * m.q_mu / clicks_per_pulse;
    let raw = params.pulse_rate_hz * clicks_per_pulse;
    let rate = raw / (1.0 + raw * params.tau_dead);
    signal_bits as f64 / (rate * signal_share)
}

/// Source of the base signal QBER.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseQber {
    Explicit(f64),
    /// `E_mu` of [`model_qber`].
    Model,
}

/// Frames `start..end` (global frame indices) run at `qber`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Burst {
    pub start: usize,
    pub end: usize,
    pub qber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QberProfile {
    pub base: BaseQber,
    #[serde(default)]
    pub bursts: Vec<Burst>,
}

impl QberProfile {
    pub fn constant(qber: f64) -> Self {
        QberProfile {
            base: BaseQber::Explicit(qber),
            bursts: Vec::new(),
        }
    }

    pub fn model() -> Self {
        QberProfile {
            base: BaseQber::Model,
            bursts: Vec::new(),
        }
    }

    pub fn with_burst(mut self, start: usize, end: usize, qber: f64) -> Self {
        self.bursts.push(Burst { start, end, qber });
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |q: f64| (0.0..0.5).contains(&q);
        if let BaseQber::Explicit(q) = self.base {
            if !ok(q) {
                return Err(Error::Config(format!("base QBER {q} outside [0, 0.5)")));
            }
        }
        if self.bursts.iter().any(|b| !ok(b.qber) || b.start >= b.end) {
            return Err(Error::Config("bursts need start < end and QBER in [0, 0.5)".into()));
        }
        Ok(())
    }

    /// Signal QBER of frame `frame_index`.
    pub fn signal_qber(&self, params: &ChannelParams, frame_index: usize) -> f64 {
        let burst = self
            .bursts
            .iter()
            .rev()
            .find(|b| (b.start..b.end).contains(&frame_index));
        match (burst, self.base) {
            (Some(b), _) => b.qber,
            (None, BaseQber::Explicit(q)) => q,
            (None, BaseQber::Model) => model_qber(params).e_mu,
        }
    }

    /// Weak-decoy QBER of frame `frame_index`: the signal QBER scaled by the
    /// model ratio `E_nu1 / E_mu`, capped at 1/2.
    pub fn decoy_qber(&self, params: &ChannelParams, frame_index: usize) -> f64 {
        (self.signal_qber(params, frame_index) * model_qber(params).decoy_ratio()).min(0.5)
    }
}

fn stream_seed(seed: u64, index: usize, tag: u64) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(tag.wrapping_mul(0x1_0000_0001).wrapping_add(index as u64));
    rng.gen()
}

/// Uniform `alice` and `bob = alice` with independent flips at `qber`.
/// Returns the realized flip fraction too.
pub fn generate_pair(qber: f64, length: usize, seed: u64) -> (Vec<u8>, Vec<u8>, f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let p = qber.clamp(0.0, 1.0);
    let alice: Vec<u8> = (0..length).map(|_| rng.gen::<bool>() as u8).collect();
    let bob: Vec<u8> = alice.iter().map(|&a| a ^ rng.gen_bool(p) as u8).collect();
    let realized = if length == 0 {
        0.0
    } else {
        hamming_distance(&alice, &bob) as f64 / length as f64
    };
    (alice, bob, realized)
}

/// Subblock pair of frame `frame_index` under `profile`.
pub fn generate_frame_pair(
    params: &ChannelParams,
    profile: &QberProfile,
    frame_index: usize,
    length: usize,
    seed: u64,
) -> (Vec<u8>, Vec<u8>, f64) {
    generate_pair(
        profile.signal_qber(params, frame_index),
        length,
        stream_seed(seed, frame_index, 1),
    )
}

/// Decoy bit pairs of one block, one segment of `segment_len` bits per
/// frame, with flips at the frame's decoy QBER.
pub fn generate_decoy_stream(
    params: &ChannelParams,
    profile: &QberProfile,
    block_id: usize,
    frames: usize,
    segment_len: usize,
    seed: u64,
) -> Vec<(Vec<u8>, Vec<u8>)> {
    (0..frames)
        .map(|i| {
            let frame_index = block_id * frames + i;
            let (a, b, _) = generate_pair(
                profile.decoy_qber(params, frame_index),
                segment_len,
                stream_seed(seed, frame_index, 2),
            );
            (a, b)
        })
        .collect()
}

/// Both parties' inputs for one simulated block.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedBlock {
    pub alice: BlockInput,
    pub bob: BlockInput,
    /// Configured signal QBER per frame.
    pub qber_signal: Vec<f64>,
    /// Realized flip fraction per subblock.
    pub qber_true: Vec<f64>,
}

/// Generates block `block_id` of `frames` subblocks; global frame indices
/// are `block_id * frames + i`.
pub fn simulate_block(
    params: &ChannelParams,
    profile: &QberProfile,
    geometry: &FrameGeometry,
    block_id: usize,
    frames: usize,
    seed: u64,
) -> SimulatedBlock {
    let len = geometry.subblock_len();
    let mut alice_sb = Vec::with_capacity(frames);
    let mut bob_sb = Vec::with_capacity(frames);
    let mut qber_signal = Vec::with_capacity(frames);
    let mut qber_true = Vec::with_capacity(frames);
    for i in 0..frames {
        let index = block_id * frames + i;
        let (a, b, q) = generate_frame_pair(params, profile, index, len, seed);
        alice_sb.push(a);
        bob_sb.push(b);
        qber_signal.push(profile.signal_qber(params, index));
        qber_true.push(q);
    }
    let decoy = generate_decoy_stream(params, profile, block_id, frames, decoy_len_per_frame(params, len), seed);
    let (alice_decoy, bob_decoy) = decoy.into_iter().unzip();
    SimulatedBlock {
        alice: BlockInput {
            block_id: block_id as u32,
            subblocks: alice_sb,
            decoy: alice_decoy,
        },
        bob: BlockInput {
            block_id: block_id as u32,
            subblocks: bob_sb,
            decoy: bob_decoy,
        },
        qber_signal,
        qber_true,
    }
}

const QKEY_MAGIC: &[u8; 4] = b"QKEY";

/// Writes a key dump: `"QKEY"`, u32 LE bit length, packed Alice bits,
/// packed Bob bits.
pub fn write_qkey(path: &Path, alice: &[u8], bob: &[u8]) -> Result<()> {
    if alice.len() != bob.len() {
        return Err(Error::arg("key dump halves differ in length"));
    }
    let len = u32::try_from(alice.len()).map_err(|_| Error::arg("key dump longer than 2^32 bits"))?;
    let mut out = Vec::with_capacity(8 + alice.len() / 4 + 2);
    out.extend_from_slice(QKEY_MAGIC);
    out.extend_from_slice(&len.to_le_bytes());
    out.extend(pack(alice));
    out.extend(pack(bob));
    fs::write(path, out).map_err(|e| Error::file(path, e))
}

pub fn read_qkey(path: &Path) -> Result<(Vec<u8>, Vec<u8>)> {
    let data = fs::read(path).map_err(|e| Error::file(path, e))?;
    let bad = |why: &str| Error::Config(format!("{}: {why}", path.display()));
    if data.len() < 8 || &data[..4] != QKEY_MAGIC {
        return Err(bad("not a QKEY file"));
    }
    let len = u32::from_le_bytes(data[4..8].try_into().expect("4 bytes")) as usize;
    let bytes = len.div_ceil(8);
    if data.len() != 8 + 2 * bytes {
        return Err(bad("length field does not match file size"));
    }
    let alice = unpack(&data[8..8 + bytes], len);
    let bob = unpack(&data[8 + bytes..], len);
    Ok((alice, bob))
}
