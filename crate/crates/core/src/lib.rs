//! Statistics of fat-tailed growth rates in regional emissions and GDP.
//!
//! - [`distributions`]: asymmetric exponential power (AEP) density, sampler
//!   and maximum-likelihood fit.
//! - [`panel`]: relative sizes and centred growth rates of a balanced panel.
//! - [`scaling`]: binned volatility against economic size.
//! - [`convergence`]: the heteroscedastic LAD model of emissions growth.
//! - [`windows`]: convergence and residual fits over moving windows.
//! - [`synth`]: panels simulated from known parameters.

pub mod convergence;
pub mod distributions;
pub mod optim;
pub mod panel;
pub mod scaling;
pub mod synth;
pub mod windows;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
