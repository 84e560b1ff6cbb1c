//! Numerical workbench for the functional calculus of operators whose
//! spectrum touches the unit circle in finitely many points: Stolz-type
//! spectral regions and their contours, one- and two-variable holomorphic
//! calculus by contour quadrature, the localization machinery that transfers
//! between disc-type and sector-type calculi, and explicit isometric
//! dilations on truncated Rademacher spaces.
//!
//! The guide under `book/` walks through every layer; its code snippets are
//! compiled and run as doc-tests from this crate.

pub mod calculus;
pub mod dilation;
pub mod error;
pub mod holofun;
pub mod linalg;
pub mod regions;
pub mod suite;
pub mod transfer;
pub mod workbench;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
pub use regions::{Region, SpectralConfig};

/// Cap the worker pool for node-parallel quadrature and corpus sweeps.
/// Results are deterministic regardless of the thread count: parallel maps
/// collect in index order and reductions run sequentially.
pub fn build_thread_pool(threads: usize) -> std::result::Result<(), rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
}

#[cfg(doctest)]
mod book {
    //! Every chapter of the guide is attached here so `cargo test` keeps the
    //! book's code blocks compiling and correct.
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }
    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(matrices, "../../../book/src/matrices.md");
    chapter!(regions, "../../../book/src/regions.md");
    chapter!(functions, "../../../book/src/functions.md");
    chapter!(calculus, "../../../book/src/calculus.md");
    chapter!(transfer, "../../../book/src/transfer.md");
    chapter!(dilation, "../../../book/src/dilation.md");
    chapter!(workbench, "../../../book/src/workbench.md");
}
