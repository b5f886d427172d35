#![allow(dead_code)]

pub mod messages;

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use qrir::adapt::FrameGeometry;
use qrir::ldpc::CodePool;

pub const CI_FRAME: usize = 2000;

pub fn ci_geometry() -> FrameGeometry {
    FrameGeometry {
        ell_frame: CI_FRAME,
        alpha: 0.15,
    }
}

/// Pool cache shared by all test binaries of this crate.
pub fn cache_dir(n: usize) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("pool-n{n}-s1"))
}

/// The distribution files shipped in `config/distributions`.
pub fn distributions() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/distributions")
}

pub fn pool(n: usize) -> CodePool {
    let dir = cache_dir(n);
    let dists = distributions();
    CodePool::ensure_cached(&dir, n, 1, Some(&dists)).expect("pool generation");
    CodePool::load(&dir, n, 1, Some(&dists)).expect("pool load")
}

pub fn ci_pool() -> &'static CodePool {
    static POOL: OnceLock<CodePool> = OnceLock::new();
    POOL.get_or_init(|| pool(CI_FRAME))
}
