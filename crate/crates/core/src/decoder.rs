//! Variable-scaled Min-Sum syndrome decoding.
//!
//! Messages are real-valued LLRs, positive meaning bit `0`. The check-node
//! update is the Min-Sum approximation of belief propagation with its output
//! scaled by a factor that grows towards 1 with the iteration count:
//! `f(t) = 1 - 2^(-t / step - 1)` for iteration `t = 1, 2, ...`.
//!
//! Positions whose channel LLR is at the saturation value (shortened or
//! disclosed bits) are treated as known and never flipped.

use crate::ldpc::ParityCheckMatrix;
use crate::session::{FrameLayout, PositionKind};
use crate::{Error, Result};

/// LLR magnitude used for known bits.
pub const DEFAULT_SATURATION: f64 = 64.0;
/// Scaling step of the variable-scaled Min-Sum schedule.
pub const DEFAULT_SCALE_STEP: f64 = 12.5;
pub const DEFAULT_MAX_ITERS: usize = 60;

/// Per-bit log-likelihood ratios, `ln(P(0) / P(1))`, capped at `saturation`.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrVector {
    pub values: Vec<f64>,
    pub saturation: f64,
}

impl LlrVector {
    pub fn new(values: Vec<f64>, saturation: f64) -> Result<Self> {
        if !(saturation > 0.0) {
            return Err(Error::arg("LLR saturation must be positive"));
        }
        let values = values
            .into_iter()
            .map(|v| v.clamp(-saturation, saturation))
            .collect();
        Ok(LlrVector { values, saturation })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Marks position `i` as known with value `bit`.
    pub fn fix(&mut self, i: usize, bit: u8) {
        self.values[i] = if bit == 0 { self.saturation } else { -self.saturation };
    }

    fn is_fixed(&self, i: usize) -> bool {
        self.values[i].abs() >= self.saturation
    }
}

/// Channel LLR of a binary symmetric channel with crossover `qber`.
pub fn bsc_llr(qber: f64) -> f64 {
    ((1.0 - qber) / qber).ln()
}

/// Initial LLRs for a frame.
///
/// `bits` are the receiver's current values of every frame position; payload
/// positions get `±ln((1 - q) / q)`, shortened and disclosed positions get
/// `±saturation`, undisclosed punctured positions get 0.
pub fn init_llrs(
    layout: &FrameLayout,
    disclosed: &[bool],
    bits: &[u8],
    qber_hat: f64,
    saturation: f64,
) -> Result<LlrVector> {
    if !(qber_hat > 0.0 && qber_hat < 0.5) {
        return Err(Error::arg(format!("qber_hat {qber_hat} outside (0, 0.5)")));
    }
    let n = layout.len();
    if bits.len() != n || disclosed.len() != n {
        return Err(Error::arg("LLR initialisation: length mismatch with frame layout"));
    }
    let payload = bsc_llr(qber_hat).min(saturation);
    let sign = |b: u8| if b == 0 { 1.0 } else { -1.0 };
    let values = (0..n)
        .map(|i| {
            if disclosed[i] {
                return sign(bits[i]) * saturation;
            }
            match layout.kind(i) {
                PositionKind::Payload => sign(bits[i]) * payload,
                PositionKind::Shortened => sign(bits[i]) * saturation,
                PositionKind::Punctured => 0.0,
            }
        })
        .collect();
    LlrVector::new(values, saturation)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeStatus {
    Converged,
    ExhaustedIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub status: DecodeStatus,
    /// Hard decision satisfying the target syndrome; present iff converged.
    pub error_pattern: Option<Vec<u8>>,
    pub iterations: usize,
    /// A-posteriori LLRs after the last iteration.
    pub final_llrs: LlrVector,
}

impl DecodeResult {
    pub fn converged(&self) -> bool {
        self.status == DecodeStatus::Converged
    }
}

/// Check-message scaling factor at 1-based iteration `t`.
pub fn scaling_factor(t: usize, step: f64) -> f64 {
    (1.0 - (-(t as f64) / step - 1.0).exp2()).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Decodes `H w = target` for the word `w` most likely under `llrs`.
///
/// The initial hard decision is tested first, so an already consistent word
/// returns with zero iterations. Flooding schedule.
pub fn minsum_decode(
    h: &ParityCheckMatrix,
    target_syndrome: &[u8],
    llrs: &LlrVector,
    max_iters: usize,
    scale_step: f64,
) -> Result<DecodeResult> {
    let n = h.n_cols();
    let m = h.n_rows();
    if target_syndrome.len() != m {
        return Err(Error::arg(format!(
            "target syndrome has {} bits, matrix has {m} rows",
            target_syndrome.len()
        )));
    }
    if llrs.len() != n {
        return Err(Error::arg(format!("{} LLRs for {n} columns", llrs.len())));
    }
    if max_iters == 0 {
        return Err(Error::arg("max_iters must be at least 1"));
    }
    if !(scale_step > 0.0) {
        return Err(Error::arg("scale_step must be positive"));
    }

    let sat = llrs.saturation;
    let channel = &llrs.values;
    let fixed: Vec<bool> = (0..n).map(|i| llrs.is_fixed(i)).collect();

    // Edges are stored row by row; `col_edges[c]` lists the edge ids of column c.
    let mut row_start = Vec::with_capacity(m + 1);
    let mut edge_col = Vec::with_capacity(h.num_edges());
    row_start.push(0);
    for row in h.rows() {
        edge_col.extend(row.iter().map(|&c| c as usize));
        row_start.push(edge_col.len());
    }
    let mut col_edges: Vec<Vec<usize>> = (0..n).map(|c| Vec::with_capacity(h.col(c).len())).collect();
    for (e, &c) in edge_col.iter().enumerate() {
        col_edges[c].push(e);
    }

    let mut to_check: Vec<f64> = edge_col.iter().map(|&c| channel[c]).collect();
    let mut to_var = vec![0.0f64; edge_col.len()];
    let mut total: Vec<f64> = channel.clone();
    let mut word: Vec<u8> = total.iter().map(|&v| u8::from(v < 0.0)).collect();

    if satisfies(&row_start, &edge_col, &word, target_syndrome) {
        return Ok(done(DecodeStatus::Converged, Some(word), 0, total, sat));
    }

    for t in 1..=max_iters {
        let scale = scaling_factor(t, scale_step);
        for r in 0..m {
            let edges = row_start[r]..row_start[r + 1];
            let mut negative = target_syndrome[r] == 1;
            let (mut min1, mut min2, mut argmin) = (f64::INFINITY, f64::INFINITY, usize::MAX);
            for e in edges.clone() {
                let q = to_check[e];
                negative ^= q < 0.0;
                let a = q.abs();
                if a < min1 {
                    min2 = min1;
                    min1 = a;
                    argmin = e;
                } else if a < min2 {
                    min2 = a;
                }
            }
            for e in edges {
                let q = to_check[e];
                let magnitude = if e == argmin { min2 } else { min1 };
                let negative_out = negative ^ (q < 0.0);
                let v = scale * magnitude.min(sat);
                to_var[e] = if negative_out { -v } else { v };
            }
        }
        for c in 0..n {
            if fixed[c] {
                continue;
            }
            let edges = &col_edges[c];
            let sum: f64 = channel[c] + edges.iter().map(|&e| to_var[e]).sum::<f64>();
            total[c] = sum.clamp(-sat, sat);
            for &e in edges {
                to_check[e] = (sum - to_var[e]).clamp(-sat, sat);
            }
            word[c] = u8::from(sum < 0.0);
        }
        if satisfies(&row_start, &edge_col, &word, target_syndrome) {
            return Ok(done(DecodeStatus::Converged, Some(word), t, total, sat));
        }
    }
    Ok(done(DecodeStatus::ExhaustedIterations, None, max_iters, total, sat))
}

fn satisfies(row_start: &[usize], edge_col: &[usize], word: &[u8], target: &[u8]) -> bool {
    target.iter().enumerate().all(|(r, &s)| {
        edge_col[row_start[r]..row_start[r + 1]]
            .iter()
            .fold(0u8, |acc, &c| acc ^ word[c])
            == s
    })
}

fn done(
    status: DecodeStatus,
    error_pattern: Option<Vec<u8>>,
    iterations: usize,
    total: Vec<f64>,
    saturation: f64,
) -> DecodeResult {
    DecodeResult {
        status,
        error_pattern,
        iterations,
        final_llrs: LlrVector {
            values: total,
            saturation,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::{peg_construct, DegreeDistribution};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_code(seed: u64) -> ParityCheckMatrix {
        peg_construct(16, 8, &DegreeDistribution::regular(3, 6).unwrap(), seed).unwrap()
    }

    fn payload_layout(n: usize) -> FrameLayout {
        FrameLayout::from_kinds(vec![PositionKind::Payload; n])
    }

    #[test]
    fn scaling_schedule() {
        assert!((scaling_factor(1, 12.5) - (1.0 - 2f64.powf(-1.08))).abs() < 1e-12);
        let f: Vec<f64> = (1..200).map(|t| scaling_factor(t, 12.5)).collect();
        assert!(f.windows(2).all(|w| w[1] > w[0]));
        assert!(f.iter().all(|&x| x > 0.0 && x <= 1.0));
        assert!(1.0 - f[198] < 1e-4);
    }

    #[test]
    fn llr_initialisation() {
        let layout = FrameLayout::from_kinds(vec![
            PositionKind::Payload,
            PositionKind::Shortened,
            PositionKind::Punctured,
            PositionKind::Punctured,
            PositionKind::Payload,
        ]);
        let disclosed = [false, false, false, true, true];
        let bits = [0, 1, 0, 1, 0];
        let llr = init_llrs(&layout, &disclosed, &bits, 0.02, 64.0).unwrap();
        assert!((llr.values[0] - (0.98f64 / 0.02).ln()).abs() < 1e-12);
        assert!((llr.values[0] - 3.891_820_298_110_626_5).abs() < 1e-9);
        assert_eq!(llr.values[1], -64.0);
        assert_eq!(llr.values[2], 0.0);
        assert_eq!(llr.values[3], -64.0);
        assert_eq!(llr.values[4], 64.0);
    }

    #[test]
    fn llr_rejects_bad_qber() {
        let layout = payload_layout(2);
        for q in [0.0, 0.5, -0.1, 0.7] {
            assert!(init_llrs(&layout, &[false; 2], &[0; 2], q, 64.0).is_err());
        }
    }

    #[test]
    fn zero_syndrome_converges_immediately() {
        let h = small_code(1);
        let llrs = LlrVector::new(vec![5.0; 16], 64.0).unwrap();
        let out = minsum_decode(&h, &[0; 8], &llrs, 60, 12.5).unwrap();
        assert!(out.converged());
        assert!(out.iterations <= 1);
        assert_eq!(out.error_pattern.unwrap(), vec![0; 16]);
    }

    #[test]
    fn contradictory_inputs_exhaust() {
        let h = small_code(2);
        let mut e = vec![0u8; 16];
        e[3] = 1;
        let target = h.syndrome(&e).unwrap();
        let llrs = LlrVector::new(vec![64.0; 16], 64.0).unwrap();
        let out = minsum_decode(&h, &target, &llrs, 5, 12.5).unwrap();
        assert_eq!(out.status, DecodeStatus::ExhaustedIterations);
        assert_eq!(out.iterations, 5);
        assert!(out.error_pattern.is_none());
    }

    #[test]
    fn dimension_errors() {
        let h = small_code(3);
        let llrs = LlrVector::new(vec![1.0; 16], 64.0).unwrap();
        assert!(minsum_decode(&h, &[0; 7], &llrs, 10, 12.5).is_err());
        let short = LlrVector::new(vec![1.0; 15], 64.0).unwrap();
        assert!(minsum_decode(&h, &[0; 8], &short, 10, 12.5).is_err());
        assert!(minsum_decode(&h, &[0; 8], &llrs, 0, 12.5).is_err());
    }

    /// Exhaustive search over all patterns of weight <= 2 with the target
    /// syndrome; returns the minimum-weight ones.
    fn coset_leaders(h: &ParityCheckMatrix, target: &[u8]) -> Vec<Vec<u8>> {
        let n = h.n_cols();
        let mut found = Vec::new();
        for w in 0..=2usize {
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize != w {
                    continue;
                }
                let e: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
                if h.syndrome(&e).unwrap() == target {
                    found.push(e);
                }
            }
            if !found.is_empty() {
                break;
            }
        }
        found
    }

    #[test]
    fn single_flip_matches_exhaustive_search() {
        let h = small_code(4);
        let layout = payload_layout(16);
        for flip in 0..16 {
            let mut e = vec![0u8; 16];
            e[flip] = 1;
            let target = h.syndrome(&e).unwrap();
            let leaders = coset_leaders(&h, &target);
            let llrs = init_llrs(&layout, &[false; 16], &[0; 16], 0.03, 64.0).unwrap();
            let out = minsum_decode(&h, &target, &llrs, 60, 12.5).unwrap();
            if let Some(pattern) = &out.error_pattern {
                assert_eq!(h.syndrome(pattern).unwrap(), target);
            }
            if leaders.len() == 1 {
                assert_eq!(out.error_pattern, Some(e), "flip {flip}");
            }
        }
    }

    #[test]
    fn soundness_and_determinism_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for trial in 0..300 {
            let h = small_code(trial);
            let llrs = LlrVector::new(
                (0..16).map(|_| rng.gen_range(-6.0..6.0)).collect(),
                64.0,
            )
            .unwrap();
            let target: Vec<u8> = (0..8).map(|_| rng.gen_range(0..2)).collect();
            let a = minsum_decode(&h, &target, &llrs, 20, 12.5).unwrap();
            let b = minsum_decode(&h, &target, &llrs, 20, 12.5).unwrap();
            assert_eq!(a, b);
            if let Some(p) = &a.error_pattern {
                assert_eq!(h.syndrome(p).unwrap(), target);
            }
        }
    }
}
