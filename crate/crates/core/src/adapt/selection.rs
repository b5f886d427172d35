use super::{FrameGeometry, RoundPolicy};
use crate::entropy::h2;
use crate::ldpc::{CodePool, CodeRate};

/// Chosen mother code and frame extension `{R, p, s}` for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeSelection {
    pub rate: CodeRate,
    pub punctured: usize,
    pub shortened: usize,
    pub qber_hat: f64,
}

/// Optimal `{R, p, s}` for an a-priori QBER.
///
/// `R_desired = 1 - f_start h2(q)`; every pool rate gets
/// `p = ceil(ell_syndrome - ell_subblock f_start h2(q))` and
/// `s = alpha ell_frame - p`, and survives when `p, s >= 0`, `p <= p_R` and
/// `q < t_R`. The survivor with the largest rate wins. With no survivor the
/// result is `{0.5, 0, alpha ell_frame}` when `R_desired <= 0.5`; otherwise
/// the highest rate whose syndrome is long enough is punctured as far as
/// `p_R` allows, which gives `{0.9, p_Rmax, alpha ell_frame - p_Rmax}` when
/// `R_desired >= 0.9`.
pub fn select_code(
    pool: &CodePool,
    qber_hat: f64,
    policy: &RoundPolicy,
    geometry: &FrameGeometry,
) -> CodeSelection {
    let ext = geometry.extension_bits() as i64;
    let payload = geometry.subblock_len() as f64;
    let leak = payload * policy.f_start * h2(qber_hat);
    let desired = 1.0 - policy.f_start * h2(qber_hat);

    let best = CodeRate::POOL.iter().rev().find_map(|&rate| {
        let h = pool.matrix(rate);
        let p = (h.n_rows() as f64 - leak).ceil() as i64;
        let s = ext - p;
        let ok = p >= 0 && s >= 0 && p as usize <= h.max_punctured() && qber_hat < pool.threshold(rate);
        ok.then_some(CodeSelection {
            rate,
            punctured: p as usize,
            shortened: s as usize,
            qber_hat,
        })
    });
    if let Some(sel) = best {
        return sel;
    }
    let lowest = CodeSelection {
        rate: CodeRate::MIN,
        punctured: 0,
        shortened: ext as usize,
        qber_hat,
    };
    if desired <= CodeRate::MIN.value() {
        return lowest;
    }
    // Not enough untainted positions (or extension bits) for the exact p:
    // puncture as much as allowed at the highest rate whose syndrome is
    // still long enough. For R_desired >= 0.9 this is {0.9, p_Rmax, ...}.
    CodeRate::POOL
        .iter()
        .rev()
        .find_map(|&rate| {
            let h = pool.matrix(rate);
            let p = (h.n_rows() as f64 - leak).ceil() as i64;
            (p >= 0 && qber_hat < pool.threshold(rate)).then(|| {
                let p = (p as usize).min(h.max_punctured()).min(ext as usize);
                CodeSelection {
                    rate,
                    punctured: p,
                    shortened: ext as usize - p,
                    qber_hat,
                }
            })
        })
        .unwrap_or(lowest)
}

/// Blind schemes: the rate comes from the QBER interval table and the whole
/// extension is punctured (`p = alpha ell_frame`, `s = 0`).
pub fn select_blind_code(qber_hat: f64, policy: &RoundPolicy, geometry: &FrameGeometry) -> CodeSelection {
    let rate = policy
        .blind_intervals
        .iter()
        .find(|&&(upper, _)| qber_hat < upper)
        .or(policy.blind_intervals.last())
        .map_or(CodeRate::MIN, |&(_, r)| r);
    CodeSelection {
        rate,
        punctured: geometry.extension_bits(),
        shortened: 0,
        qber_hat,
    }
}
