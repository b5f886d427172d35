//! A-priori QBER estimation, code-rate selection and disclosure schedules.

mod disclosure;
mod estimator;
mod selection;

use serde::{Deserialize, Serialize};

pub use disclosure::{next_disclosure_count, DisclosureState};
pub use estimator::{Estimate, EstimatorConfig, QberEstimatorState, QBER_HAT_MAX, QBER_HAT_MIN};
pub use selection::{select_blind_code, select_code, CodeSelection};

use crate::ldpc::CodeRate;
use crate::{Error, Result};

/// Reconciliation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Asymmetric, a-priori rate selection, efficiency-driven disclosure.
    AdaptiveAsym,
    /// Asymmetric blind, `d_k = delta`.
    BlindFixed,
    /// Asymmetric blind, `d_k = k * delta`.
    BlindLinear,
    /// Both sides decode and disclose their minimal-|LLR| bits.
    Symmetric,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::AdaptiveAsym,
        Scheme::BlindFixed,
        Scheme::BlindLinear,
        Scheme::Symmetric,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::AdaptiveAsym => "adaptive_asym",
            Scheme::BlindFixed => "blind_fixed",
            Scheme::BlindLinear => "blind_linear",
            Scheme::Symmetric => "symmetric",
        }
    }

    pub fn is_blind(self) -> bool {
        matches!(self, Scheme::BlindFixed | Scheme::BlindLinear)
    }

    pub fn code(self) -> u8 {
        match self {
            Scheme::AdaptiveAsym => 0,
            Scheme::BlindFixed => 1,
            Scheme::BlindLinear => 2,
            Scheme::Symmetric => 3,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown scheme `{s}`")))
    }
}

/// Frame geometry: `ell_frame` positions, of which `alpha * ell_frame` are
/// punctured or shortened and the rest carry the payload subblock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameGeometry {
    pub ell_frame: usize,
    pub alpha: f64,
}

impl Default for FrameGeometry {
    fn default() -> Self {
        FrameGeometry {
            ell_frame: 32_000,
            alpha: 0.15,
        }
    }
}

impl FrameGeometry {
    /// `p + s = alpha * ell_frame`.
    pub fn extension_bits(&self) -> usize {
        (self.alpha * self.ell_frame as f64).round() as usize
    }

    /// `ell_subblock = ell_frame - p - s`.
    pub fn subblock_len(&self) -> usize {
        self.ell_frame - self.extension_bits()
    }

    pub fn validate(&self) -> Result<()> {
        let ext = self.alpha * self.ell_frame as f64;
        if !(self.alpha > 0.0 && self.alpha < 1.0) || (ext - ext.round()).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "alpha * ell_frame must be an integer in (0, ell_frame), got {ext}"
            )));
        }
        Ok(())
    }
}

/// Rate-selection and additional-round parameters of one scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundPolicy {
    pub scheme: Scheme,
    pub f_start: f64,
    pub f_k_step: f64,
    /// Maximum number of additional rounds.
    pub n_add_max: usize,
    /// Blind step; `None` means `alpha * ell_frame / 10`.
    pub delta: Option<usize>,
    /// Symmetric disclosure factor, 0.5 or 1.
    pub beta: f64,
    pub time_budget_ms: u64,
    /// Blind schemes: `(upper QBER bound, rate)` intervals in ascending order.
    pub blind_intervals: Vec<(f64, CodeRate)>,
}

impl RoundPolicy {
    pub fn for_scheme(scheme: Scheme) -> Self {
        let rate = |pct| CodeRate::from_percent(pct).expect("pool rate");
        let (n_add_max, blind_intervals) = match scheme {
            Scheme::BlindFixed => (
                10,
                vec![(0.03, rate(80)), (0.05, rate(70)), (0.08, rate(60)), (0.11, rate(50))],
            ),
            Scheme::BlindLinear => (4, vec![(0.03, rate(80)), (0.08, rate(60)), (0.11, rate(50))]),
            Scheme::AdaptiveAsym | Scheme::Symmetric => (30, Vec::new()),
        };
        RoundPolicy {
            scheme,
            f_start: 1.15,
            f_k_step: 0.03,
            n_add_max,
            delta: None,
            beta: 1.0,
            time_budget_ms: 10_000,
            blind_intervals,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_start > 1.0) {
            return Err(Error::Config("f_start must exceed 1".into()));
        }
        if self.scheme.is_blind() {
            if self.n_add_max == 0 {
                return Err(Error::Config("blind schemes need n_add_max >= 1".into()));
            }
            if self.blind_intervals.is_empty()
                || self.blind_intervals.windows(2).any(|w| w[1].0 <= w[0].0)
            {
                return Err(Error::Config(
                    "blind intervals must be non-empty with increasing bounds".into(),
                ));
            }
        }
        if self.beta != 0.5 && self.beta != 1.0 {
            return Err(Error::Config("beta must be 0.5 or 1".into()));
        }
        Ok(())
    }

    /// Blind step `delta` for a frame geometry.
    pub fn blind_delta(&self, geometry: &FrameGeometry) -> usize {
        self.delta
            .unwrap_or_else(|| (geometry.extension_bits() / 10).max(1))
    }

    /// Burst detection and the verification penalty are only part of the
    /// non-blind schemes.
    pub fn uses_estimator_feedback(&self) -> bool {
        !self.scheme.is_blind()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry() {
        let g = FrameGeometry::default();
        assert_eq!(g.extension_bits(), 4800);
        assert_eq!(g.subblock_len(), 27_200);
        g.validate().unwrap();
        assert!(FrameGeometry { ell_frame: 1001, alpha: 0.15 }.validate().is_err());
    }

    #[test]
    fn blind_delta_matches_table() {
        let g = FrameGeometry::default();
        assert_eq!(RoundPolicy::for_scheme(Scheme::BlindFixed).blind_delta(&g), 480);
        assert_eq!(RoundPolicy::for_scheme(Scheme::BlindLinear).blind_delta(&g), 480);
        let small = FrameGeometry { ell_frame: 2000, alpha: 0.15 };
        assert_eq!(RoundPolicy::for_scheme(Scheme::BlindFixed).blind_delta(&small), 30);
    }

    #[test]
    fn scheme_names_roundtrip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("cascade".parse::<Scheme>().is_err());
    }
}
