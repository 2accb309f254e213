//! Exact, asymptotic and simulated performance of clustered decode-and-forward
//! multi-hop relay networks with hop-by-hop (ad-hoc) relay selection over
//! Rayleigh fading.
//!
//! * [`special`]: scalar special functions (erfc, Q, scaled E1, half-integer Gamma).
//! * [`network`]: topologies, Friis link budgets and modulation parameters.
//! * [`analytic`]: closed-form CDF/PDF, capacity, outage, SER, SNR-gain and
//!   their high-SNR asymptotes.
//! * [`simulator`]: seeded, worker-count independent Monte Carlo of the routing.
//! * [`oracle`]: adaptive quadrature cross-checks built on the product-form CDF.
//! * [`scenario`] and [`report`]: config files, SNR sweeps and figure tables.

// `!(x > 0.0)` style guards are used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod network;
pub mod oracle;
pub mod report;
pub mod scenario;
pub mod simulator;
pub mod special;

pub use error::{Error, Result};
