pub mod circle;
pub mod error;
pub mod h_half;
pub mod numerics;
pub mod potential;
pub mod profile;
pub mod propagators;
pub mod random;
pub mod report;
pub mod shortrange;
pub mod spectral_limits;
pub mod transport;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/conventions.md")]
    mod conventions {}
    #[doc = include_str!("../../../book/src/propagators.md")]
    mod propagators {}
    #[doc = include_str!("../../../book/src/spectral_limits.md")]
    mod spectral_limits {}
    #[doc = include_str!("../../../book/src/transport.md")]
    mod transport {}
    #[doc = include_str!("../../../book/src/circle.md")]
    mod circle {}
    #[doc = include_str!("../../../book/src/shortrange.md")]
    mod shortrange {}
    #[doc = include_str!("../../../book/src/h_half.md")]
    mod h_half {}
    #[doc = include_str!("../../../book/src/reports.md")]
    mod reports {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
