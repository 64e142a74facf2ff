//! Matrix-sketching laboratory.
//!
//! Builds the null Gaussian ensemble and its spiked low-rank alternative,
//! draws trace-orthonormal linear sketches, and measures how well sketched
//! outputs of the two ensembles can be told apart. Alongside the experiments
//! it evaluates the closed forms that bound that distinguishability: the
//! Gaussian bilinear moment generating function, the sketched mean-shift
//! statistic, and the resulting χ² and total variation bounds.
//!
//! | module | contents |
//! |--------|----------|
//! | [`linalg`] | dense matrices, singular values, operator/Schatten/Ky-Fan norms |
//! | [`rng`] | `(seed, stream)` keyed random streams and normal variates |
//! | [`ensembles`] | Gaussian and spiked samplers, preset hard instances, norm-gap checks |
//! | [`sketch`] | orthonormal measurement families, bilinear embedding, binary dump |
//! | [`divergence`] | bilinear MGF closed form, ξ statistic, χ² estimate, TV bound |
//! | [`distinguisher`] | advantage curves, phase-transition sweeps, OSE reference estimator |
//! | [`report`] | JSON-lines and CSV writers |

pub mod distinguisher;
pub mod divergence;
pub mod ensembles;
pub mod error;
pub mod linalg;
pub mod report;
pub mod rng;
pub mod sketch;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, SingularSpectrum};
pub use rng::RngStream;
pub use sketch::SketchOperator;
