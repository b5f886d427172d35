use super::{CodeSelection, RoundPolicy, Scheme};
use crate::entropy::h2;
use crate::{Error, Result};

/// Additional-round bookkeeping for one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisclosureState {
    /// Index of the next round; `k = d_history.len()`.
    pub k: usize,
    /// `d_0 = 0, d_1, ..., d_{k-1}`.
    pub d_history: Vec<usize>,
    pub punctured_remaining: usize,
    pub payload_remaining: usize,
}

impl DisclosureState {
    pub fn new(punctured: usize, payload: usize) -> Self {
        DisclosureState {
            k: 1,
            d_history: vec![0],
            punctured_remaining: punctured,
            payload_remaining: payload,
        }
    }

    pub fn disclosed_total(&self) -> usize {
        self.d_history.iter().sum()
    }

    /// Rounds completed after the basic one.
    pub fn rounds(&self) -> usize {
        self.k - 1
    }

    /// Records `d` disclosed bits, taken from punctured positions first.
    pub fn record(&mut self, d: usize) {
        let from_punctured = d.min(self.punctured_remaining);
        self.record_split(from_punctured, d - from_punctured);
    }

    /// Records a round that disclosed the given numbers of punctured and
    /// payload bits.
    pub fn record_split(&mut self, punctured: usize, payload: usize) {
        self.punctured_remaining = self.punctured_remaining.saturating_sub(punctured);
        self.payload_remaining = self.payload_remaining.saturating_sub(payload);
        self.d_history.push(punctured + payload);
        self.k += 1;
    }
}

/// Number of bits to disclose in round `k` of the scheme.
///
/// * adaptive: `|(ell_syndrome - p + sum d_l) / ((ell_frame - p - s) h2(q)) - f_k| ell_frame q`
///   with `f_k = f_start + f_k_step k`, rounded up and clamped to
///   `[1, remaining]`;
/// * blind fixed: `delta`; blind linear: `k delta` (punctured bits only);
/// * symmetric: `ceil(ell_frame (0.028 - 0.02 R) beta)`.
///
/// Returns [`Error::Exhausted`] when nothing is left to disclose.
pub fn next_disclosure_count(
    policy: &RoundPolicy,
    state: &DisclosureState,
    selection: &CodeSelection,
    ell_syndrome: usize,
    ell_frame: usize,
    delta: usize,
) -> Result<usize> {
    if state.k == 0 {
        return Err(Error::arg("disclosure rounds start at k = 1"));
    }
    let k = state.k;
    let remaining = match policy.scheme {
        Scheme::BlindFixed | Scheme::BlindLinear => state.punctured_remaining,
        Scheme::AdaptiveAsym | Scheme::Symmetric => state.punctured_remaining + state.payload_remaining,
    };
    if remaining == 0 {
        return Err(Error::Exhausted);
    }
    let d = match policy.scheme {
        Scheme::AdaptiveAsym => {
            let q = selection.qber_hat;
            let payload = (ell_frame - selection.punctured - selection.shortened) as f64;
            let current = (ell_syndrome as f64 - selection.punctured as f64
                + state.disclosed_total() as f64)
                / (payload * h2(q));
            let f_k = policy.f_start + policy.f_k_step * k as f64;
            ((current - f_k).abs() * ell_frame as f64 * q).ceil() as usize
        }
        Scheme::BlindFixed => delta,
        Scheme::BlindLinear => k * delta,
        Scheme::Symmetric => {
            // ell (0.028 - 0.02 R) beta with R in hundredths, in integers:
            // ell (280 - 2 pct) (2 beta) / 20000.
            let pct = selection.rate.percent() as usize;
            let beta2 = (2.0 * policy.beta).round() as usize;
            (ell_frame * (280 - 2 * pct) * beta2).div_ceil(20_000)
        }
    };
    Ok(d.clamp(1, remaining))
}
