//! Grids, quadrature, circle Fourier analysis, special functions and small
//! dense complex linear algebra.

pub mod fourier;
pub mod grid;
pub mod linalg;
pub mod maximal;
pub mod quad;
pub mod special;

pub use fourier::ModeCoefficients;
pub use grid::{KGrid, TimeGrid};
pub use linalg::CMatrix;
