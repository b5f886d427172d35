use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{peg_construct, DegreeDistribution, ParityCheckMatrix};
use crate::entropy::{h2, h2_inverse};
use crate::{Error, Result};

/// A code rate of the pool, stored in hundredths (`50` is `R = 0.5`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CodeRate(u8);

impl CodeRate {
    /// `{0.5, 0.55, ..., 0.9}`.
    pub const POOL: [CodeRate; 9] = [
        CodeRate(50),
        CodeRate(55),
        CodeRate(60),
        CodeRate(65),
        CodeRate(70),
        CodeRate(75),
        CodeRate(80),
        CodeRate(85),
        CodeRate(90),
    ];
    pub const MIN: CodeRate = CodeRate(50);
    pub const MAX: CodeRate = CodeRate(90);

    pub fn from_percent(pct: u8) -> Result<Self> {
        let rate = CodeRate(pct);
        if Self::POOL.contains(&rate) {
            Ok(rate)
        } else {
            Err(Error::arg(format!("rate {pct}% is not in the code pool")))
        }
    }

    /// Nearest pool rate to a real value.
    pub fn from_f64(rate: f64) -> Result<Self> {
        Self::from_percent((rate * 100.0).round().clamp(0.0, 255.0) as u8)
    }

    pub fn percent(self) -> u8 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 100.0
    }

    /// Syndrome length `(1 - R) n` for a frame of `n_cols` bits.
    pub fn syndrome_len(self, n_cols: usize) -> usize {
        (n_cols * (100 - self.0 as usize) + 50) / 100
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.value())
    }
}

/// Default error-rate threshold `t_R`: the largest `E` with
/// `h2(E) <= (1 - R) / 1.05`.
pub fn default_threshold(rate: CodeRate) -> f64 {
    h2_inverse((1.0 - rate.value()) / 1.05)
}

/// One parity-check matrix per pool rate, plus per-rate thresholds.
#[derive(Debug, Clone)]
pub struct CodePool {
    n_cols: usize,
    matrices: BTreeMap<CodeRate, ParityCheckMatrix>,
    thresholds: BTreeMap<CodeRate, f64>,
}

impl CodePool {
    /// Assembles a pool from one matrix per pool rate with default thresholds.
    pub fn new(matrices: impl IntoIterator<Item = (CodeRate, ParityCheckMatrix)>) -> Result<Self> {
        let matrices: BTreeMap<_, _> = matrices.into_iter().collect();
        let thresholds = matrices.keys().map(|&r| (r, default_threshold(r))).collect();
        Self::with_thresholds(matrices, thresholds)
    }

    pub fn with_thresholds(
        matrices: BTreeMap<CodeRate, ParityCheckMatrix>,
        thresholds: BTreeMap<CodeRate, f64>,
    ) -> Result<Self> {
        if !matrices.keys().copied().eq(CodeRate::POOL) {
            return Err(Error::Config("pool must hold exactly the rates 0.5..=0.9".into()));
        }
        if !thresholds.keys().copied().eq(CodeRate::POOL) {
            return Err(Error::Config("thresholds must cover exactly the pool rates".into()));
        }
        let t: Vec<f64> = thresholds.values().copied().collect();
        if t.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("thresholds must decrease strictly with rate".into()));
        }
        let n_cols = matrices[&CodeRate::MIN].n_cols();
        for (rate, h) in &matrices {
            if h.n_cols() != n_cols {
                return Err(Error::Config("all pool matrices must share the frame length".into()));
            }
            if h.n_rows() != rate.syndrome_len(n_cols) {
                return Err(Error::Config(format!(
                    "matrix for rate {rate} has {} rows, expected {}",
                    h.n_rows(),
                    rate.syndrome_len(n_cols)
                )));
            }
        }
        Ok(CodePool {
            n_cols,
            matrices,
            thresholds,
        })
    }

    /// Runs PEG for every pool rate. Distribution files (`rate_<pct>.txt`)
    /// are read from `distributions` when present; other rates use the
    /// column-weight-three fallback.
    pub fn generate(n_cols: usize, seed: u64, distributions: Option<&Path>) -> Result<Self> {
        Self::generate_with(n_cols, seed, |rate| pool_distribution(rate, distributions))
    }

    /// Like [`CodePool::generate`], with the distribution of each rate
    /// supplied by `dist`.
    pub fn generate_with(
        n_cols: usize,
        seed: u64,
        mut dist: impl FnMut(CodeRate) -> Result<DegreeDistribution>,
    ) -> Result<Self> {
        let matrices = CodeRate::POOL
            .iter()
            .map(|&rate| Ok((rate, generate_matrix(rate, n_cols, seed, &dist(rate)?)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(matrices)
    }

    /// Loads every pool matrix from `cache_dir`. `distributions` must be the
    /// directory the cache was generated with; it is part of the file names.
    pub fn load(cache_dir: &Path, n_cols: usize, seed: u64, distributions: Option<&Path>) -> Result<Self> {
        let mut matrices = Vec::new();
        for rate in CodeRate::POOL {
            let dist = pool_distribution(rate, distributions)?;
            let path = cache_path(cache_dir, rate, n_cols, seed, &dist);
            let text = fs::read_to_string(&path).map_err(|e| {
                if e.kind() == std::io::ErrorKind::NotFound {
                    Error::Config(format!(
                        "matrix cache {} is missing; run `qrir gen-matrices` with the same \
                         ell_frame, code seed and distributions first",
                        path.display()
                    ))
                } else {
                    Error::file(&path, e)
                }
            })?;
            let (h, stored_seed) = ParityCheckMatrix::from_text(&text)?;
            if stored_seed != seed || h.n_cols() != n_cols {
                return Err(Error::Config(format!(
                    "{} does not match n_cols {n_cols} / seed {seed}",
                    path.display()
                )));
            }
            matrices.push((rate, h));
        }
        Self::new(matrices)
    }

    /// Generates and writes any missing matrices, then loads the pool.
    /// Existing cache files are left untouched. Returns the paths written.
    pub fn ensure_cached(
        cache_dir: &Path,
        n_cols: usize,
        seed: u64,
        distributions: Option<&Path>,
    ) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(cache_dir).map_err(|e| Error::file(cache_dir, e))?;
        let mut written = Vec::new();
        for rate in CodeRate::POOL {
            let dist = pool_distribution(rate, distributions)?;
            let path = cache_path(cache_dir, rate, n_cols, seed, &dist);
            if path.exists() {
                continue;
            }
            let h = generate_matrix(rate, n_cols, seed, &dist)?;
            let tmp = path.with_extension(format!("tmp{}", std::process::id()));
            fs::write(&tmp, h.to_text(seed)).map_err(|e| Error::file(&tmp, e))?;
            fs::rename(&tmp, &path).map_err(|e| Error::file(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn matrix(&self, rate: CodeRate) -> &ParityCheckMatrix {
        &self.matrices[&rate]
    }

    pub fn threshold(&self, rate: CodeRate) -> f64 {
        self.thresholds[&rate]
    }

    pub fn iter(&self) -> impl Iterator<Item = (CodeRate, &ParityCheckMatrix)> {
        self.matrices.iter().map(|(&r, h)| (r, h))
    }

    /// Theoretical efficiency of the unadapted mother code, `(1 - R) / h2(E)`.
    pub fn fixed_rate_efficiency(rate: CodeRate, qber: f64) -> f64 {
        (1.0 - rate.value()) / h2(qber)
    }
}

/// Cache file name for one pool matrix. The last field is a CRC-32 of the
/// degree distribution, so caches built from different files never collide.
pub fn cache_path(dir: &Path, rate: CodeRate, n_cols: usize, seed: u64, dist: &DegreeDistribution) -> PathBuf {
    let tag = crc32fast::hash(dist.to_text().as_bytes());
    dir.join(format!("pcm_n{n_cols}_r{}_s{seed}_d{tag:08x}.txt", rate.percent()))
}

/// Distribution used for `rate`: `rate_<pct>.txt` from `distributions` if
/// that file exists, the column-weight-three fallback otherwise.
pub fn pool_distribution(rate: CodeRate, distributions: Option<&Path>) -> Result<DegreeDistribution> {
    match distributions.map(|d| d.join(format!("rate_{}.txt", rate.percent()))) {
        Some(path) if path.exists() => {
            let text = fs::read_to_string(&path).map_err(|e| Error::file(&path, e))?;
            DegreeDistribution::parse(&text)
        }
        _ => Ok(DegreeDistribution::column_weight_three(rate.value())),
    }
}

fn generate_matrix(rate: CodeRate, n_cols: usize, seed: u64, dist: &DegreeDistribution) -> Result<ParityCheckMatrix> {
    let rate_seed = seed ^ (rate.percent() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    peg_construct(n_cols, rate.syndrome_len(n_cols), dist, rate_seed)
}
