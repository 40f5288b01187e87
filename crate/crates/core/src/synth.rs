//! Synthetic regional panels with known ground truth.
//!
//! Relative sizes are simulated forward with the dynamic model
//!
//! ```text
//! s[i,t] = s[i,t-1] + α s[i,t-1] + φ g[i,t] + exp(β y[i,t-1]) ε[i,t]
//! ```
//!
//! and every yearly increment is re-centered across regions so the output
//! honors the panel's zero-mean definitions exactly. Levels are then
//! `1e6 · exp(s + trend)` tonnes and `1e10 · exp(y + trend)` currency units,
//! with common trends that the panel transform removes again.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::AepParams;
use crate::panel::{Field, RegionYearObservation};

pub const EMISSIONS_BASE: f64 = 1e6;
pub const GDP_BASE: f64 = 1e10;
const EMISSIONS_TREND: f64 = -0.01;
const GDP_TREND: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
}

/// Law of the homoscedastic innovations ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualLaw {
    /// Symmetric Laplace; scale 0 switches the noise off.
    Laplace { scale: f64 },
    Aep(AepParams),
    Normal { sd: f64 },
}

/// How GDP sizes and growth rates are produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GdpProcess {
    /// Initial sizes spread by `InitialSizes::y_sd`, then iid Laplace growth
    /// shocks of the given scale.
    IidLaplace { scale: f64 },
    /// Each region aggregates `k` identical subunits, `k` log-uniform on
    /// `1..=max_subunits`. Subunit log-levels move by
    /// `sqrt(ρ)·η[i] + sqrt(1-ρ)·ξ[i,j]`, with `η` shared by all subunits of a
    /// region and both shocks Normal with sd `shock_sd`. Sizes come from the
    /// subunit counts; `InitialSizes::y_sd` is ignored.
    Subunits {
        max_subunits: u32,
        common_share: f64,
        shock_sd: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialSizes {
    /// Cross-sectional standard deviation of `s` in the first year.
    pub s_sd: f64,
    /// Cross-sectional standard deviation of `y` in the first year.
    pub y_sd: f64,
}

/// φ takes a new value from a given year on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeSwitch {
    /// Zero-based year index at which the new φ applies.
    pub year_index: usize,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n_regions: usize,
    pub n_years: usize,
    pub first_year: i32,
    pub alpha: f64,
    pub phi: f64,
    pub beta: f64,
    pub residual_law: ResidualLaw,
    pub gdp_process: GdpProcess,
    pub initial_sizes: InitialSizes,
    pub regime_switch: Option<RegimeSwitch>,
    pub seed: u64,
}

impl GeneratorSpec {
    /// 242 regions over 1990–2022 at the given parameters, with Laplace
    /// innovations of scale 0.05, iid Laplace GDP shocks of scale 0.02 and
    /// unit dispersion of initial sizes.
    pub fn regional(alpha: f64, phi: f64, beta: f64, seed: u64) -> Self {
        Self {
            n_regions: 242,
            n_years: 33,
            first_year: 1990,
            alpha,
            phi,
            beta,
            residual_law: ResidualLaw::Laplace { scale: 0.05 },
            gdp_process: GdpProcess::IidLaplace { scale: 0.02 },
            initial_sizes: InitialSizes { s_sd: 1.0, y_sd: 1.0 },
            regime_switch: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidSpec(msg));
        if self.n_regions < 2 {
            return bad(format!("n_regions must be >= 2, got {}", self.n_regions));
        }
        if self.n_years < 3 {
            return bad(format!("n_years must be >= 3, got {}", self.n_years));
        }
        for (name, v) in [("alpha", self.alpha), ("phi", self.phi), ("beta", self.beta)] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        match self.residual_law {
            ResidualLaw::Laplace { scale } if !(scale >= 0.0 && scale.is_finite()) => {
                return bad(format!("Laplace scale must be >= 0, got {scale}"))
            }
            ResidualLaw::Normal { sd } if !(sd >= 0.0 && sd.is_finite()) => {
                return bad(format!("Normal sd must be >= 0, got {sd}"))
            }
            _ => {}
        }
        match self.gdp_process {
            GdpProcess::IidLaplace { scale } if !(scale >= 0.0 && scale.is_finite()) => {
                return bad(format!("GDP shock scale must be >= 0, got {scale}"))
            }
            GdpProcess::Subunits {
                max_subunits,
                common_share,
                shock_sd,
            } => {
                if max_subunits < 1 {
                    return bad("max_subunits must be >= 1".into());
                }
                if !(0.0..=1.0).contains(&common_share) {
                    return bad(format!("common-shock share must lie in [0, 1], got {common_share}"));
                }
                if !(shock_sd > 0.0 && shock_sd.is_finite()) {
                    return bad(format!("subunit shock sd must be > 0, got {shock_sd}"));
                }
            }
            _ => {}
        }
        let InitialSizes { s_sd, y_sd } = self.initial_sizes;
        if !(s_sd >= 0.0 && y_sd >= 0.0 && s_sd.is_finite() && y_sd.is_finite()) {
            return bad("initial size dispersions must be >= 0".into());
        }
        if let Some(sw) = self.regime_switch {
            if sw.year_index == 0 || sw.year_index >= self.n_years || !sw.phi.is_finite() {
                return bad(format!("regime switch year index {} outside 1..{}", sw.year_index, self.n_years));
            }
        }
        Ok(())
    }

    fn phi_at(&self, t: usize) -> f64 {
        match self.regime_switch {
            Some(sw) if t >= sw.year_index => sw.phi,
            _ => self.phi,
        }
    }
}

/// Generator output: the observations plus the simulated series, stored
/// region-major with `n_years` entries per region. Growth rates and
/// innovations hold 0.0 in the first year.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPanel {
    pub observations: Vec<RegionYearObservation>,
    pub s: Vec<f64>,
    pub y: Vec<f64>,
    pub r: Vec<f64>,
    pub g: Vec<f64>,
    pub innovations: Vec<f64>,
    pub n_years: usize,
}

impl SyntheticPanel {
    pub fn at(&self, series: &[f64], region: usize, year_index: usize) -> f64 {
        series[region * self.n_years + year_index]
    }
}

pub fn region_id(i: usize) -> String {
    format!("R{i:04}")
}

fn laplace(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    // Inverse CDF on a symmetric uniform.
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

fn draw_innovations(law: &ResidualLaw, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match *law {
        ResidualLaw::Laplace { scale: 0.0 } => vec![0.0; n],
        ResidualLaw::Laplace { scale } => (0..n).map(|_| laplace(rng, scale)).collect(),
        ResidualLaw::Normal { sd: 0.0 } => vec![0.0; n],
        ResidualLaw::Normal { sd } => {
            let normal = Normal::new(0.0, sd).expect("sd validated");
            (0..n).map(|_| normal.sample(rng)).collect()
        }
        ResidualLaw::Aep(params) => params.sample_with(n, rng),
    }
}

fn centered(mut v: Vec<f64>) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    v
}

/// Relative GDP sizes, region-major `n × t`.
fn simulate_gdp(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (n, t) = (spec.n_regions, spec.n_years);
    let mut y = vec![0.0; n * t];
    match spec.gdp_process {
        GdpProcess::IidLaplace { scale } => {
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            let start = centered((0..n).map(|_| spec.initial_sizes.y_sd * normal.sample(rng)).collect());
            for i in 0..n {
                y[i * t] = start[i];
            }
            for k in 1..t {
                let shocks = if scale == 0.0 {
                    vec![0.0; n]
                } else {
                    centered((0..n).map(|_| laplace(rng, scale)).collect())
                };
                for i in 0..n {
                    y[i * t + k] = y[i * t + k - 1] + shocks[i];
                }
            }
        }
        GdpProcess::Subunits {
            max_subunits,
            common_share,
            shock_sd,
        } => {
            let normal = Normal::new(0.0, shock_sd).expect("sd validated");
            let ln_max = (max_subunits as f64).ln();
            let counts: Vec<usize> = (0..n)
                .map(|_| (rng.random::<f64>() * ln_max).exp().round().max(1.0) as usize)
                .collect();
            let mut levels: Vec<Vec<f64>> = counts.iter().map(|&k| vec![0.0; k]).collect();
            let (w_common, w_own) = (common_share.sqrt(), (1.0 - common_share).sqrt());
            let mut log_gdp = vec![0.0; n];
            for k in 0..t {
                if k > 0 {
                    for units in levels.iter_mut() {
                        let common = normal.sample(rng);
                        for x in units.iter_mut() {
                            *x += w_common * common + w_own * normal.sample(rng);
                        }
                    }
                }
                for (i, units) in levels.iter().enumerate() {
                    log_gdp[i] = units.iter().map(|x| x.exp()).sum::<f64>().ln();
                }
                let sizes = centered(log_gdp.clone());
                for i in 0..n {
                    y[i * t + k] = sizes[i];
                }
            }
        }
    }
    y
}

/// Simulates a panel from `spec`. Deterministic given the seed.
pub fn generate_panel(spec: &GeneratorSpec) -> Result<SyntheticPanel, SynthError> {
    spec.validate()?;
    let (n, t) = (spec.n_regions, spec.n_years);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let y = simulate_gdp(spec, &mut rng);
    let mut g = vec![0.0; n * t];
    for i in 0..n {
        for k in 1..t {
            g[i * t + k] = y[i * t + k] - y[i * t + k - 1];
        }
    }

    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let start = centered((0..n).map(|_| spec.initial_sizes.s_sd * normal.sample(&mut rng)).collect());
    let mut s = vec![0.0; n * t];
    let mut r = vec![0.0; n * t];
    let mut innovations = vec![0.0; n * t];
    for i in 0..n {
        s[i * t] = start[i];
    }
    for k in 1..t {
        let eps = draw_innovations(&spec.residual_law, n, &mut rng);
        let phi = spec.phi_at(k);
        let increments: Vec<f64> = (0..n)
            .map(|i| {
                let prev = i * t + k - 1;
                spec.alpha * s[prev] + phi * g[i * t + k] + (spec.beta * y[prev]).exp() * eps[i]
            })
            .collect();
        let increments = centered(increments);
        for i in 0..n {
            let idx = i * t + k;
            s[idx] = s[idx - 1] + increments[i];
            r[idx] = s[idx] - s[idx - 1];
            innovations[idx] = eps[i];
        }
    }

    let mut observations = Vec::with_capacity(n * t);
    for i in 0..n {
        let id = region_id(i);
        for k in 0..t {
            let idx = i * t + k;
            observations.push(RegionYearObservation {
                region_id: id.clone(),
                year: spec.first_year + k as i32,
                emissions: EMISSIONS_BASE * (s[idx] + EMISSIONS_TREND * k as f64).exp(),
                gdp: GDP_BASE * (y[idx] + GDP_TREND * k as f64).exp(),
                dev_class: None,
            });
        }
    }
    Ok(SyntheticPanel {
        observations,
        s,
        y,
        r,
        g,
        innovations,
        n_years: t,
    })
}

/// Writes one field of `observations` in the canonical long CSV layout,
/// `region_id,year,<field>`, plus a `dev_class` column when any record has
/// one. Values use the shortest representation that round-trips.
pub fn write_long_csv<W: std::io::Write>(
    observations: &[RegionYearObservation],
    field: Field,
    writer: W,
) -> Result<(), csv::Error> {
    let with_class = observations.iter().any(|o| o.dev_class.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let name = field.to_string();
    let mut header = vec!["region_id", "year", name.as_str()];
    if with_class {
        header.push("dev_class");
    }
    w.write_record(&header)?;
    for o in observations {
        let value = match field {
            Field::Emissions => o.emissions,
            Field::Gdp => o.gdp,
        };
        let mut row = vec![o.region_id.clone(), o.year.to_string(), value.to_string()];
        if with_class {
            row.push(o.dev_class.clone().unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::build_panel;

    #[test]
    fn noiseless_null_model_has_zero_growth() {
        let mut spec = GeneratorSpec::regional(0.0, 0.0, 0.0, 3);
        spec.n_regions = 20;
        spec.n_years = 6;
        spec.residual_law = ResidualLaw::Laplace { scale: 0.0 };
        spec.gdp_process = GdpProcess::IidLaplace { scale: 0.0 };
        let out = generate_panel(&spec).unwrap();
        assert!(out.r.iter().all(|&v| v == 0.0));
        assert!(out.g.iter().all(|&v| v == 0.0));
        let panel = build_panel(&out.observations, 1990..=1995).unwrap();
        for i in 0..20 {
            for year in 1991..=1995 {
                // Only rounding from the common trends survives the transform.
                assert!(panel.r(i, year).unwrap().abs() < 1e-12);
                assert!(panel.g(i, year).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_through_panel() {
        let mut spec = GeneratorSpec::regional(-0.02, 0.3, -0.1, 9);
        spec.n_regions = 30;
        spec.n_years = 8;
        let out = generate_panel(&spec).unwrap();
        let panel = build_panel(&out.observations, 1990..=1997).unwrap();
        for i in 0..30 {
            for k in 0..8 {
                let year = 1990 + k as i32;
                assert!((panel.s(i, year) - out.at(&out.s, i, k)).abs() < 1e-12);
                assert!((panel.y(i, year) - out.at(&out.y, i, k)).abs() < 1e-12);
                if k > 0 {
                    assert!((panel.r(i, year).unwrap() - out.at(&out.r, i, k)).abs() < 1e-12);
                    assert!((panel.g(i, year).unwrap() - out.at(&out.g, i, k)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = GeneratorSpec {
            n_regions: 10,
            n_years: 5,
            ..GeneratorSpec::regional(0.0, 0.2, 0.0, 42)
        };
        assert_eq!(generate_panel(&spec).unwrap(), generate_panel(&spec).unwrap());
        let other = GeneratorSpec { seed: 43, ..spec.clone() };
        assert_ne!(generate_panel(&spec).unwrap().observations, generate_panel(&other).unwrap().observations);
    }

    #[test]
    fn long_csv_layout() {
        let spec = GeneratorSpec {
            n_regions: 2,
            n_years: 3,
            ..GeneratorSpec::regional(0.0, 0.0, 0.0, 1)
        };
        let out = generate_panel(&spec).unwrap();
        let mut buf = Vec::new();
        write_long_csv(&out.observations, Field::Gdp, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], "region_id,year,gdp");
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first[..2], ["R0000", "1990"]);
        assert_eq!(first[2].parse::<f64>().unwrap(), out.observations[0].gdp);
    }

    #[test]
    fn invalid_specs() {
        let base = GeneratorSpec::regional(0.0, 0.0, 0.0, 1);
        assert!(generate_panel(&GeneratorSpec { n_regions: 1, ..base.clone() }).is_err());
        assert!(generate_panel(&GeneratorSpec { n_years: 2, ..base.clone() }).is_err());
        let bad_rho = GeneratorSpec {
            gdp_process: GdpProcess::Subunits {
                max_subunits: 16,
                common_share: 1.5,
                shock_sd: 0.01,
            },
            ..base.clone()
        };
        assert!(matches!(generate_panel(&bad_rho), Err(SynthError::InvalidSpec(_))));
        let bad_switch = GeneratorSpec {
            regime_switch: Some(RegimeSwitch { year_index: 40, phi: 0.3 }),
            ..base
        };
        assert!(generate_panel(&bad_switch).is_err());
    }
}
