//! End-to-end simulation of compressive single-pixel imaging with
//! closed-form Fourier-domain regularized inversion (FDRI).
//!
//! The crate covers the full pipeline: generation and database-driven
//! selection of sampling patterns (DCT, Walsh-Hadamard, Morlet-noise),
//! optional binarization for DMD-style binary modulators, precomputation of
//! the regularized reconstruction matrix, simulated single-pixel
//! measurements, real-time streaming reconstruction, and quality/throughput
//! evaluation against a plain pseudoinverse baseline.

pub mod error;
pub mod image;
pub mod io;
pub mod metrics;
pub mod reconstruction;
pub mod sampling;
pub mod simulator;
pub mod spectral;
pub mod testimages;

pub(crate) mod digest;
pub(crate) mod fft;
pub(crate) mod linalg;

pub use error::{Error, Result};
pub use image::{ComplexImage, Image};
