//! Volatility–size scaling, `ln σ ≈ c + β y`, estimated from binned statistics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::panel::{PanelView, Variable};

pub const DEFAULT_BINS: usize = 20;
pub const MIN_BIN_OCCUPANCY: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScalingError {
    #[error("too few observations: {available} cannot fill {bins} bins of at least {min_per_bin}")]
    TooFewObservations {
        available: usize,
        bins: usize,
        min_per_bin: usize,
    },
    #[error("period needs at least 2 growth years, has {0}")]
    TooFewGrowthYears(usize),
    #[error("need at least 3 bins, got {0}")]
    TooFewBins(usize),
    #[error("bin {index} has zero volatility; ln σ is undefined")]
    ZeroVolatilityBin { index: usize },
}

/// How observations are grouped before computing per-bin volatility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Every region-year is one observation, ranked by lagged GDP size.
    #[default]
    RegionYears,
    /// Each region contributes its own growth-rate standard deviation over
    /// the period, ranked by its mean lagged GDP size. Bin volatility is the
    /// root mean square of the member deviations.
    Regions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStat {
    /// Mean relative GDP size of the bin members.
    pub bin_center: f64,
    pub sigma: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub beta: f64,
    pub intercept: f64,
    pub beta_se: f64,
    pub r_squared: f64,
    pub bins: Vec<BinStat>,
}

fn sample_sd(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n < 2 {
        return 0.0;
    }
    let mean = sum / n as f64;
    (values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Splits `0..len` into `n_bins` contiguous chunks whose sizes differ by at most one.
fn equal_count_bounds(len: usize, n_bins: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n_bins).map(move |k| (k * len / n_bins, (k + 1) * len / n_bins))
}

/// Ranks observations by lagged relative GDP size and reports the
/// growth-rate volatility of each equal-count bin.
///
/// Ties in size keep region order (panel regions are sorted by identifier),
/// then year order.
pub fn binned_volatility(
    view: &PanelView<'_>,
    variable: Variable,
    n_bins: usize,
    pooling: Pooling,
) -> Result<Vec<BinStat>, ScalingError> {
    if n_bins < 3 {
        return Err(ScalingError::TooFewBins(n_bins));
    }
    let growth_years = view.n_growth_years();
    if growth_years < 2 {
        return Err(ScalingError::TooFewGrowthYears(growth_years));
    }
    let records = view.growth_records();
    let growth = |rec: &crate::panel::GrowthRecord| match variable {
        Variable::Emissions => rec.r,
        Variable::Gdp => rec.g,
    };

    // (size, volatility contribution) per ranked unit.
    let mut units: Vec<(f64, f64)> = match pooling {
        Pooling::RegionYears => records.iter().map(|rec| (rec.y_lag, growth(rec))).collect(),
        Pooling::Regions => records
            .chunks(growth_years)
            .map(|chunk| {
                let size = chunk.iter().map(|r| r.y_lag).sum::<f64>() / chunk.len() as f64;
                (size, sample_sd(chunk.iter().map(growth)))
            })
            .collect(),
    };
    if units.len() < n_bins * MIN_BIN_OCCUPANCY {
        return Err(ScalingError::TooFewObservations {
            available: units.len(),
            bins: n_bins,
            min_per_bin: MIN_BIN_OCCUPANCY,
        });
    }
    // Stable sort keeps the region-major input order among equal sizes.
    units.sort_by(|a, b| a.0.total_cmp(&b.0));

    Ok(equal_count_bounds(units.len(), n_bins)
        .map(|(lo, hi)| {
            let members = &units[lo..hi];
            let bin_center = members.iter().map(|u| u.0).sum::<f64>() / members.len() as f64;
            let sigma = match pooling {
                Pooling::RegionYears => sample_sd(members.iter().map(|u| u.1)),
                Pooling::Regions => {
                    (members.iter().map(|u| u.1 * u.1).sum::<f64>() / members.len() as f64).sqrt()
                }
            };
            BinStat {
                bin_center,
                sigma,
                count: members.len(),
            }
        })
        .collect())
}

/// Ordinary least squares of `ln σ` on bin center; the slope is β.
pub fn fit_scaling(bins: &[BinStat]) -> Result<ScalingFit, ScalingError> {
    if bins.len() < 3 {
        return Err(ScalingError::TooFewBins(bins.len()));
    }
    if let Some(index) = bins.iter().position(|b| !(b.sigma > 0.0)) {
        return Err(ScalingError::ZeroVolatilityBin { index });
    }
    let k = bins.len() as f64;
    let xs: Vec<f64> = bins.iter().map(|b| b.bin_center).collect();
    let ys: Vec<f64> = bins.iter().map(|b| b.sigma.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / k;
    let y_mean = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let syy: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    let beta = sxy / sxx;
    let intercept = y_mean - beta * x_mean;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - beta * x).powi(2))
        .sum();
    let beta_se = (ssr / (k - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    Ok(ScalingFit {
        beta,
        intercept,
        beta_se,
        r_squared,
        bins: bins.to_vec(),
    })
}
