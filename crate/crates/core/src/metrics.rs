//! Efficiency, frame error rate and secret key figures.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::adapt::Scheme;
use crate::entropy::h2;
use crate::session::FrameRecord;
use crate::{Error, Result};

/// Decoy-state bounds entering the secret key length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecretKeyParams {
    /// Lower bound on the single-photon fraction of the verified key.
    pub kappa1_lower: f64,
    /// Upper bound on the single-photon error rate; `None` uses
    /// `e1_upper_factor` times the block's mean QBER.
    pub e1_upper: Option<f64>,
    pub e1_upper_factor: f64,
}

impl Default for SecretKeyParams {
    fn default() -> Self {
        SecretKeyParams {
            kappa1_lower: 0.5,
            e1_upper: None,
            e1_upper_factor: 1.1,
        }
    }
}

impl SecretKeyParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.kappa1_lower) {
            return Err(Error::Config("kappa1_lower must lie in [0, 1]".into()));
        }
        if let Some(e) = self.e1_upper {
            if !(0.0..=0.5).contains(&e) {
                return Err(Error::Config("e1_upper must lie in [0, 0.5]".into()));
            }
        }
        if !(self.e1_upper_factor >= 0.0) {
            return Err(Error::Config("e1_upper_factor must be non-negative".into()));
        }
        Ok(())
    }

    /// The single-photon error bound for a block with mean QBER `e_mu`.
    pub fn e1_for(&self, e_mu: f64) -> f64 {
        self.e1_upper.unwrap_or(self.e1_upper_factor * e_mu).min(0.5)
    }
}

/// Realized efficiency of a converged frame,
/// `(ell_syndrome - p + d) / (ell_payload h2(E))` with the frame's
/// a-posteriori QBER. `None` when the frame failed or had no errors.
pub fn f_ec(record: &FrameRecord) -> Option<f64> {
    let q = record.measured_qber?;
    if !record.success || !(q > 0.0 && q < 0.5) {
        return None;
    }
    Some(efficiency(
        record.syndrome_len,
        record.selection.punctured,
        record.d_total,
        record.payload_len(),
        q,
    ))
}

/// Efficiency from raw counts.
pub fn efficiency(syndrome_len: usize, punctured: usize, disclosed: usize, payload: usize, qber: f64) -> f64 {
    (syndrome_len as f64 - punctured as f64 + disclosed as f64) / (payload as f64 * h2(qber))
}

/// `ell_block (1 - FER) {kappa [1 - h2(E1)] - f_ec h2(E_mu)}`, clamped at 0.
pub fn secret_key_length(ell_block: f64, fer: f64, f_ec: f64, e_mu: f64, kappa1_lower: f64, e1_upper: f64) -> f64 {
    let bracket = kappa1_lower * (1.0 - h2(e1_upper)) - f_ec * h2(e_mu);
    (ell_block * (1.0 - fer) * bracket).max(0.0)
}

pub fn secret_rate(l_sec: f64, tau_seconds: f64) -> Result<f64> {
    if !(tau_seconds > 0.0) {
        return Err(Error::arg(format!("tau must be positive, got {tau_seconds}")));
    }
    Ok(l_sec / tau_seconds)
}

/// Aggregate over the frames of one block (or one sweep point).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSummary {
    pub frames: usize,
    pub failures: usize,
    pub fer: f64,
    /// Mean and sample standard deviation of `f_ec` over verified frames
    /// with at least one error.
    pub mean_f_ec: Option<f64>,
    pub std_f_ec: Option<f64>,
    pub mean_iterations: Option<f64>,
    /// Mean a-posteriori QBER over verified frames.
    pub mean_qber: Option<f64>,
    /// Payload bits of all frames.
    pub ell_block: usize,
    pub l_sec: f64,
    pub tau_s: f64,
    pub r_sec: Option<f64>,
}

/// Summarizes `records`. `tau` is the summed frame processing time plus
/// `generation_time_s`; without a positive `tau` no rate is reported.
pub fn aggregate(records: &[FrameRecord], params: &SecretKeyParams, generation_time_s: f64) -> Result<BlockSummary> {
    if records.is_empty() {
        return Err(Error::arg("cannot aggregate an empty record list"));
    }
    let frames = records.len();
    let verified: Vec<&FrameRecord> = records.iter().filter(|r| r.verified).collect();
    let failures = frames - verified.len();
    let fer = failures as f64 / frames as f64;
    let effs: Vec<f64> = verified.iter().filter_map(|r| f_ec(r)).collect();
    let (mean_f_ec, std_f_ec) = mean_std(&effs);
    let iters: Vec<f64> = verified.iter().map(|r| r.iterations_total as f64).collect();
    let qbers: Vec<f64> = verified.iter().filter_map(|r| r.measured_qber).collect();
    let mean_iterations = mean_std(&iters).0;
    let mean_qber = mean_std(&qbers).0;
    let ell_block: usize = records.iter().map(FrameRecord::payload_len).sum();
    let l_sec = match (mean_f_ec, mean_qber) {
        (Some(f), Some(e)) => {
            secret_key_length(ell_block as f64, fer, f, e, params.kappa1_lower, params.e1_for(e))
        }
        _ => 0.0,
    };
    let tau_s = records.iter().map(|r| r.elapsed_ms).sum::<f64>() / 1000.0 + generation_time_s;
    let r_sec = secret_rate(l_sec, tau_s).ok();
    Ok(BlockSummary {
        frames,
        failures,
        fer,
        mean_f_ec,
        std_f_ec,
        mean_iterations,
        mean_qber,
        ell_block,
        l_sec,
        tau_s,
        r_sec,
    })
}

fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(std))
}

/// One per-frame CSV row.
#[derive(Debug, Serialize)]
struct FrameRow {
    frame_id: u32,
    scheme: &'static str,
    qber_true: Option<f64>,
    qber_hat: f64,
    rate: f64,
    p: usize,
    s: usize,
    d_total: usize,
    rounds_additional: usize,
    iterations_total: usize,
    success: bool,
    verified: bool,
    elapsed_ms: f64,
    f_ec: Option<f64>,
}

impl From<&FrameRecord> for FrameRow {
    fn from(r: &FrameRecord) -> Self {
        FrameRow {
            frame_id: r.frame_id,
            scheme: r.scheme.name(),
            qber_true: r.qber_true,
            qber_hat: r.selection.qber_hat,
            rate: r.selection.rate.value(),
            p: r.selection.punctured,
            s: r.selection.shortened,
            d_total: r.d_total,
            rounds_additional: r.rounds_additional,
            iterations_total: r.iterations_total,
            success: r.success,
            verified: r.verified,
            elapsed_ms: r.elapsed_ms,
            f_ec: f_ec(r),
        }
    }
}

/// Streams per-frame rows; the header is written before the first row.
pub struct FrameCsv<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> FrameCsv<W> {
    pub fn new(out: W) -> Self {
        FrameCsv {
            writer: csv::Writer::from_writer(out),
        }
    }

    pub fn write(&mut self, record: &FrameRecord) -> Result<()> {
        self.writer.serialize(FrameRow::from(record)).map_err(csv_error)
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush().map_err(Error::Io)
    }
}

/// A summary row labelled by the sweep point it belongs to.
#[derive(Debug, Serialize)]
struct SummaryRow<'a> {
    scheme: &'static str,
    point: &'a str,
    qber_model: Option<f64>,
    frames: usize,
    failures: usize,
    fer: f64,
    mean_f_ec: Option<f64>,
    std_f_ec: Option<f64>,
    mean_iterations: Option<f64>,
    mean_qber: Option<f64>,
    ell_block: usize,
    l_sec: f64,
    tau_s: f64,
    r_sec: Option<f64>,
}

pub struct SummaryCsv<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> SummaryCsv<W> {
    pub fn new(out: W) -> Self {
        SummaryCsv {
            writer: csv::Writer::from_writer(out),
        }
    }

    /// `point` names the sweep coordinate (a QBER or a loss value);
    /// `qber_model` is the configured QBER of the point when known.
    pub fn write(&mut self, scheme: Scheme, point: &str, qber_model: Option<f64>, s: &BlockSummary) -> Result<()> {
        self.writer
            .serialize(SummaryRow {
                scheme: scheme.name(),
                point,
                qber_model,
                frames: s.frames,
                failures: s.failures,
                fer: s.fer,
                mean_f_ec: s.mean_f_ec,
                std_f_ec: s.std_f_ec,
                mean_iterations: s.mean_iterations,
                mean_qber: s.mean_qber,
                ell_block: s.ell_block,
                l_sec: s.l_sec,
                tau_s: s.tau_s,
                r_sec: s.r_sec,
            })
            .map_err(csv_error)
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush().map_err(Error::Io)
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::arg(format!("csv: {other:?}")),
    }
}
