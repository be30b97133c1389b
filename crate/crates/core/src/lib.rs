pub mod continuation;
pub mod dynamics;
pub mod error;
pub mod graphon;
pub mod sampler;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};

/// Library version, recorded in experiment metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/graphons.md")]
    pub mod graphons {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    pub mod sampling {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    pub mod spectra {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    pub mod dynamics {}
    #[doc = include_str!("../../../book/src/continuation.md")]
    pub mod continuation {}
    #[doc = include_str!("../../../book/src/theory.md")]
    pub mod theory {}
    #[doc = include_str!("../../../book/src/accuracy.md")]
    pub mod accuracy {}
}
