use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Lower and upper clamps of the a-priori estimate.
pub const QBER_HAT_MIN: f64 = 0.001;
pub const QBER_HAT_MAX: f64 = 0.499;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// EMA smoothing factor.
    pub gamma: f64,
    /// Number of verified frames the EMA runs over.
    pub window: usize,
    /// QBER folded into the EMA after a failed frame.
    pub penalty_qber: f64,
    /// Burst threshold in standard deviations of the decoy QBER.
    pub burst_sigma: f64,
    /// Estimate used before any verified frame or decoy sample exists.
    pub prior_qber: f64,
    /// Number of non-burst decoy samples kept for the running statistics.
    pub decoy_history: usize,
    /// Use the decoy QBER as the estimate when it deviates by
    /// `burst_sigma`.
    pub burst_detection: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            gamma: 0.33,
            window: 6,
            penalty_qber: 0.5,
            burst_sigma: 3.0,
            prior_qber: 0.05,
            decoy_history: 50,
            burst_detection: true,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config("gamma must lie in (0, 1)".into()));
        }
        if self.window < 2 {
            return Err(Error::Config("EMA window must be at least 2".into()));
        }
        if !(self.penalty_qber > 0.0 && self.penalty_qber <= 0.5) {
            return Err(Error::Config("penalty_qber must lie in (0, 0.5]".into()));
        }
        if !(self.prior_qber > 0.0 && self.prior_qber < 0.5) {
            return Err(Error::Config("prior_qber must lie in (0, 0.5)".into()));
        }
        if self.decoy_history < 2 {
            return Err(Error::Config("decoy_history must be at least 2".into()));
        }
        Ok(())
    }
}

/// Output of [`QberEstimatorState::a_priori_qber`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub qber_hat: f64,
    /// The decoy QBER of this frame deviated by at least `burst_sigma`.
    pub burst: bool,
}

/// EMA over the last verified frames plus running decoy-QBER statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct QberEstimatorState {
    config: EstimatorConfig,
    verified_qbers: VecDeque<f64>,
    ema: Option<f64>,
    decoy_qbers: VecDeque<f64>,
    decoy_mean: f64,
    decoy_std: f64,
}

impl QberEstimatorState {
    pub fn new(config: EstimatorConfig) -> Self {
        QberEstimatorState {
            verified_qbers: VecDeque::with_capacity(config.window),
            decoy_qbers: VecDeque::with_capacity(config.decoy_history),
            config,
            ema: None,
            decoy_mean: 0.0,
            decoy_std: 0.0,
        }
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn ema(&self) -> Option<f64> {
        self.ema
    }

    pub fn decoy_mean(&self) -> f64 {
        self.decoy_mean
    }

    pub fn decoy_std(&self) -> f64 {
        self.decoy_std
    }

    pub fn decoy_samples(&self) -> usize {
        self.decoy_qbers.len()
    }

    /// Appends an a-posteriori QBER to the window and recomputes the EMA.
    ///
    /// The oldest value of the window seeds the average; every later value
    /// is folded in as `gamma * E + (1 - gamma) * EMA`.
    pub fn ema_update(&mut self, observed_qber: f64) -> Result<()> {
        if !(observed_qber > 0.0 && observed_qber <= 0.5) {
            return Err(Error::arg(format!(
                "observed QBER {observed_qber} outside (0, 0.5]"
            )));
        }
        if self.verified_qbers.len() == self.config.window {
            self.verified_qbers.pop_front();
        }
        self.verified_qbers.push_back(observed_qber);
        let gamma = self.config.gamma;
        let mut values = self.verified_qbers.iter();
        let seed = *values.next().expect("window is non-empty");
        self.ema = Some(values.fold(seed, |ema, &e| gamma * e + (1.0 - gamma) * ema));
        Ok(())
    }

    /// Folds the measured QBER of a verified frame, or the penalty value when
    /// the frame failed correction or verification.
    pub fn apply_verification_feedback(&mut self, verified_ok: bool, measured_qber: f64) -> Result<()> {
        if verified_ok {
            self.ema_update(measured_qber)
        } else {
            self.ema_update(self.config.penalty_qber)
        }
    }

    /// `|E_nu1 - mean| >= burst_sigma * std` over the recorded decoy samples.
    /// Needs at least two samples.
    pub fn detect_burst(&self, current_decoy_qber: f64) -> bool {
        if self.decoy_qbers.len() < 2 {
            return false;
        }
        let deviation = (current_decoy_qber - self.decoy_mean).abs();
        deviation > 0.0 && deviation >= self.config.burst_sigma * self.decoy_std
    }

    /// Records the decoy QBER of a frame. Samples flagged as bursts are kept
    /// out of the running statistics.
    pub fn record_decoy(&mut self, decoy_qber: f64, burst: bool) {
        if burst {
            return;
        }
        if self.decoy_qbers.len() == self.config.decoy_history {
            self.decoy_qbers.pop_front();
        }
        self.decoy_qbers.push_back(decoy_qber);
        let n = self.decoy_qbers.len() as f64;
        self.decoy_mean = self.decoy_qbers.iter().sum::<f64>() / n;
        self.decoy_std = if self.decoy_qbers.len() < 2 {
            0.0
        } else {
            let ss: f64 = self
                .decoy_qbers
                .iter()
                .map(|q| (q - self.decoy_mean).powi(2))
                .sum();
            (ss / (n - 1.0)).sqrt()
        };
    }

    /// A-priori QBER of the next frame: the decoy QBER when a burst is
    /// detected, the EMA otherwise, clamped to `[0.001, 0.499]`.
    ///
    /// Without EMA history the decoy QBER is used as an upper bound; with
    /// neither, [`Error::Unseeded`] is returned.
    pub fn a_priori_qber(&self, current_decoy_qber: Option<f64>) -> Result<Estimate> {
        let burst = current_decoy_qber.is_some_and(|d| self.detect_burst(d));
        let raw = match (burst, self.ema, current_decoy_qber) {
            (true, _, Some(d)) => d,
            (_, Some(ema), _) => ema,
            (_, None, Some(d)) => d,
            (_, None, None) => return Err(Error::Unseeded),
        };
        Ok(Estimate {
            qber_hat: raw.clamp(QBER_HAT_MIN, QBER_HAT_MAX),
            burst,
        })
    }

    /// Like [`a_priori_qber`](Self::a_priori_qber) but falls back to the
    /// configured prior.
    pub fn estimate_or_prior(&self, current_decoy_qber: Option<f64>) -> Estimate {
        self.a_priori_qber(current_decoy_qber).unwrap_or(Estimate {
            qber_hat: self.config.prior_qber,
            burst: false,
        })
    }
}
