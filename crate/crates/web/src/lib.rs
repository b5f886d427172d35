//! wasm-bindgen bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string. The plain Rust functions below the
//! bindings do the work so they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qrir::adapt::{select_blind_code, select_code, FrameGeometry, RoundPolicy, Scheme};
use qrir::entropy::h2;
use qrir::experiment::{run_point, PointSpec};
use qrir::ldpc::{CodePool, CodeRate, DegreeDistribution};
use qrir::metrics::{aggregate, f_ec, SecretKeyParams};
use qrir::session::SessionConfig;
use qrir::simchannel::{model_qber, ChannelParams, QberProfile};

/// The repository's `config/distributions`, embedded since the browser has
/// no file system.
const DISTRIBUTIONS: [(u8, &str); 9] = [
    (50, include_str!("../../../config/distributions/rate_50.txt")),
    (55, include_str!("../../../config/distributions/rate_55.txt")),
    (60, include_str!("../../../config/distributions/rate_60.txt")),
    (65, include_str!("../../../config/distributions/rate_65.txt")),
    (70, include_str!("../../../config/distributions/rate_70.txt")),
    (75, include_str!("../../../config/distributions/rate_75.txt")),
    (80, include_str!("../../../config/distributions/rate_80.txt")),
    (85, include_str!("../../../config/distributions/rate_85.txt")),
    (90, include_str!("../../../config/distributions/rate_90.txt")),
];

pub fn embedded_distribution(rate: CodeRate) -> qrir::Result<DegreeDistribution> {
    let (_, text) = DISTRIBUTIONS
        .iter()
        .find(|(pct, _)| *pct == rate.percent())
        .expect("every pool rate is embedded");
    DegreeDistribution::parse(text)
}

/// A generated code pool plus its frame geometry.
#[wasm_bindgen]
pub struct Demo {
    pool: CodePool,
    geometry: FrameGeometry,
}

#[wasm_bindgen]
impl Demo {
    /// Builds the nine pool matrices for frames of `ell_frame` bits.
    #[wasm_bindgen(constructor)]
    pub fn new(ell_frame: usize, code_seed: u32) -> Result<Demo, JsError> {
        Demo::build(ell_frame, code_seed as u64).map_err(js)
    }

    #[wasm_bindgen(js_name = maxPunctured)]
    pub fn max_punctured(&self) -> String {
        let rows: Vec<_> = self
            .pool
            .iter()
            .map(|(r, h)| serde_json::json!({ "rate": r.value(), "p_max": h.max_punctured(), "t_r": self.pool.threshold(r) }))
            .collect();
        serde_json::to_string(&rows).expect("serializable")
    }

    /// Selected code over a QBER grid for one scheme.
    #[wasm_bindgen(js_name = selectionCurve)]
    pub fn selection_curve_js(&self, scheme: &str, f_start: f64, q_min: f64, q_max: f64, steps: usize) -> Result<String, JsError> {
        let scheme: Scheme = scheme.parse().map_err(js)?;
        Ok(json(&self.selection_curve(scheme, f_start, q_min, q_max, steps)))
    }

    /// Reconciles `frames` simulated frames at a constant QBER.
    pub fn simulate(&self, scheme: &str, qber: f64, frames: usize, seed: u32) -> Result<String, JsError> {
        let scheme: Scheme = scheme.parse().map_err(js)?;
        self.simulate_point(scheme, qber, frames, seed as u64).map(|r| json(&r)).map_err(js)
    }
}

/// Model QBERs of the decoy-state channel from 0 to `max_loss_db`.
#[wasm_bindgen(js_name = channelCurve)]
pub fn channel_curve_js(max_loss_db: f64, steps: usize) -> String {
    json(&channel_curve(&ChannelParams::default(), max_loss_db, steps))
}

fn js(e: qrir::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable")
}

#[derive(Debug, Serialize)]
pub struct SelectionPoint {
    pub qber: f64,
    pub rate: f64,
    pub punctured: usize,
    pub shortened: usize,
    /// `1 - (ell_syndrome - p) / ell_payload`.
    pub effective_rate: f64,
    /// Efficiency if the frame decodes in the basic round.
    pub f_basic: f64,
}

#[derive(Debug, Serialize)]
pub struct ChannelPoint {
    pub loss_db: f64,
    pub e_mu: f64,
    pub e_nu1: f64,
    pub q_mu: f64,
}

#[derive(Debug, Serialize)]
pub struct SimulationResult {
    pub frames: usize,
    pub fer: f64,
    pub mean_f_ec: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub mismatched: usize,
    /// Per frame: iterations, disclosed bits, efficiency (null if failed).
    pub iterations: Vec<usize>,
    pub disclosed: Vec<usize>,
    pub f_ec: Vec<Option<f64>>,
}

impl Demo {
    pub fn build(ell_frame: usize, code_seed: u64) -> qrir::Result<Demo> {
        let geometry = FrameGeometry {
            ell_frame,
            ..FrameGeometry::default()
        };
        geometry.validate()?;
        Ok(Demo {
            pool: CodePool::generate_with(ell_frame, code_seed, embedded_distribution)?,
            geometry,
        })
    }

    pub fn selection_curve(&self, scheme: Scheme, f_start: f64, q_min: f64, q_max: f64, steps: usize) -> Vec<SelectionPoint> {
        let policy = RoundPolicy {
            f_start,
            ..RoundPolicy::for_scheme(scheme)
        };
        let payload = self.geometry.subblock_len() as f64;
        let steps = steps.max(2);
        (0..steps)
            .map(|i| {
                let q = q_min + (q_max - q_min) * i as f64 / (steps - 1) as f64;
                let sel = if scheme.is_blind() {
                    select_blind_code(q, &policy, &self.geometry)
                } else {
                    select_code(&self.pool, q, &policy, &self.geometry)
                };
                let leak = self.pool.matrix(sel.rate).n_rows() as f64 - sel.punctured as f64;
                SelectionPoint {
                    qber: q,
                    rate: sel.rate.value(),
                    punctured: sel.punctured,
                    shortened: sel.shortened,
                    effective_rate: 1.0 - leak / payload,
                    f_basic: leak / (payload * h2(q)),
                }
            })
            .collect()
    }

    pub fn simulate_point(&self, scheme: Scheme, qber: f64, frames: usize, seed: u64) -> qrir::Result<SimulationResult> {
        let session = SessionConfig::new(scheme, self.geometry, seed);
        let spec = PointSpec {
            frames,
            frames_per_block: 50,
            channel: ChannelParams::default(),
            profile: QberProfile::constant(qber),
            channel_seed: seed,
        };
        let run = run_point(&self.pool, &session, &spec, |_| Ok(()))?;
        let summary = aggregate(&run.bob, &SecretKeyParams::default(), 0.0)?;
        Ok(SimulationResult {
            frames,
            fer: summary.fer,
            mean_f_ec: summary.mean_f_ec,
            mean_iterations: summary.mean_iterations,
            mismatched: run.mismatched,
            iterations: run.bob.iter().map(|r| r.iterations_total).collect(),
            disclosed: run.bob.iter().map(|r| r.d_total).collect(),
            f_ec: run.bob.iter().map(|r| if r.verified { f_ec(r) } else { None }).collect(),
        })
    }
}

pub fn channel_curve(params: &ChannelParams, max_loss_db: f64, steps: usize) -> Vec<ChannelPoint> {
    let steps = steps.max(2);
    (0..steps)
        .map(|i| {
            let loss = max_loss_db * i as f64 / (steps - 1) as f64;
            let m = model_qber(&params.with_loss(loss));
            ChannelPoint {
                loss_db: loss,
                e_mu: m.e_mu,
                e_nu1: m.e_nu1,
                q_mu: m.q_mu,
            }
        })
        .collect()
}
