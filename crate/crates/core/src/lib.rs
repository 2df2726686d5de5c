//! Structural-factor modeling of high-dimensional time series.
//!
//! Each series of a panel is split into a polynomial trend, a harmonic
//! seasonal part and an irregular remainder ([`detrend`]). The irregular
//! panel is then whitened and analysed by canonical correlations against
//! its own lags ([`cca_factor`]): the directions with nonzero canonical
//! correlation are the common factors, the rest are white noise. The
//! factors are modeled by a VAR and the pieces are reassembled into panel
//! forecasts ([`dynamics`]). [`simlab`] holds the synthetic data generator,
//! subspace discrepancy measures and a seeded Monte Carlo harness.

pub mod cca_factor;
pub mod cli;
pub mod detrend;
pub mod dynamics;
pub mod error;
pub mod numerics;
pub mod panel;
pub mod simlab;

pub use error::{Error, Result};
pub use panel::TimePanel;
