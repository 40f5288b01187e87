//! Convergence and residual-distribution fits over sliding windows.
//!
//! A window of length `L` starting in year `a` covers years `a..=a+L-1` and
//! is labelled `a-(a+L-1)`. Starts run from the first panel year to
//! `last_year - L`, stride one year. Growth years follow
//! [`GrowthPanel::restrict`], so only the window at the panel start loses
//! its first growth year.

use thiserror::Error;

use crate::convergence::{bootstrap_se, fit_lad, BootstrapResult, ConvergenceError, ConvergenceFit, LadOptions};
use crate::distributions::{fit_mle, AepError, AepFit, FitOptions};
use crate::panel::{GrowthPanel, PanelError, PeriodDefinition};

pub const DEFAULT_WINDOW_LENGTH: usize = 5;
pub const DEFAULT_WINDOW_BOOTSTRAP: usize = 200;
/// First years of the EU ETS phases and of the fourth phase.
pub const PHASE_MARKERS: [i32; 4] = [2005, 2008, 2013, 2021];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WindowError {
    #[error("window length {length} needs at least {} panel years, panel has {years}", length + 1)]
    WindowTooLong { length: usize, years: usize },
    #[error("window length must be positive")]
    ZeroLength,
}

/// Why a single window has no result.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WindowFailure {
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Convergence(#[from] ConvergenceError),
    #[error("residual distribution fit: {0}")]
    Aep(#[from] AepError),
}

#[derive(Debug, Clone, Copy)]
pub struct WindowOptions {
    pub window_length: usize,
    pub lad: LadOptions,
    /// Bootstrap replicates per window; `None` skips standard errors.
    pub bootstrap_replicates: Option<usize>,
    pub seed: u64,
    pub aep: FitOptions,
}

impl Default for WindowOptions {
    fn default() -> Self {
        Self {
            window_length: DEFAULT_WINDOW_LENGTH,
            lad: LadOptions::default(),
            bootstrap_replicates: Some(DEFAULT_WINDOW_BOOTSTRAP),
            seed: 0,
            aep: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowFit {
    /// Convergence estimates, with bootstrap standard errors when requested.
    pub convergence: ConvergenceFit,
    pub bootstrap: Option<BootstrapResult>,
    /// AEP fit of exactly this window's rescaled residuals.
    pub residual_aep: AepFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowEntry {
    pub start_year: i32,
    pub end_year: i32,
    pub outcome: Result<WindowFit, WindowFailure>,
}

impl WindowEntry {
    pub fn label(&self) -> String {
        window_label(self.start_year, self.end_year)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSeries {
    pub window_length: usize,
    pub entries: Vec<WindowEntry>,
    pub phase_markers: [i32; 4],
}

impl WindowSeries {
    pub fn all_succeeded(&self) -> bool {
        self.entries.iter().all(|e| e.outcome.is_ok())
    }
}

pub fn window_label(start: i32, end: i32) -> String {
    format!("{start}-{end}")
}

/// Start and end years of every window of `length` over `panel`.
pub fn window_bounds(panel: &GrowthPanel, length: usize) -> Result<Vec<(i32, i32)>, WindowError> {
    if length == 0 {
        return Err(WindowError::ZeroLength);
    }
    let years = panel.n_years();
    if years < length + 1 {
        return Err(WindowError::WindowTooLong { length, years });
    }
    let span = length as i32 - 1;
    Ok((panel.first_year()..=panel.last_year() - length as i32)
        .map(|start| (start, start + span))
        .collect())
}

/// Seed of the window starting in `start_year`: a SplitMix64 step of the
/// master seed mixed with the year.
pub fn window_seed(seed: u64, start_year: i32) -> u64 {
    let mut z = seed ^ (start_year as i64 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fits one window. The same call is what [`run_moving_windows`] makes for
/// each entry.
pub fn fit_window(panel: &GrowthPanel, start: i32, end: i32, options: &WindowOptions) -> Result<WindowFit, WindowFailure> {
    let period = PeriodDefinition::new(window_label(start, end), start, end)?;
    let view = panel.restrict(&period)?;
    let mut fit = fit_lad(&view, &options.lad)?;
    let seed = window_seed(options.seed, start);
    let bootstrap = match options.bootstrap_replicates {
        Some(b) => {
            let res = bootstrap_se(&view, &fit, b, seed, &options.lad)?;
            fit.std_errors = Some(res.std_errors);
            Some(res)
        }
        None => None,
    };
    let aep_opts = FitOptions { seed, ..options.aep };
    let residual_aep = fit_mle(fit.rescaled_residuals(), &aep_opts)?;
    Ok(WindowFit {
        convergence: fit,
        bootstrap,
        residual_aep,
    })
}

/// Fits every window of `options.window_length` years. Windows that fail are
/// kept with their error.
pub fn run_moving_windows(panel: &GrowthPanel, options: &WindowOptions) -> Result<WindowSeries, WindowError> {
    let bounds = window_bounds(panel, options.window_length)?;
    let run = |&(start, end): &(i32, i32)| WindowEntry {
        start_year: start,
        end_year: end,
        outcome: fit_window(panel, start, end, options),
    };
    #[cfg(feature = "parallel")]
    let entries = {
        use rayon::prelude::*;
        bounds.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let entries = bounds.iter().map(run).collect();
    Ok(WindowSeries {
        window_length: options.window_length,
        entries,
        phase_markers: PHASE_MARKERS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::build_panel;
    use crate::synth::{generate_panel, GeneratorSpec};

    fn small_panel(n_years: usize) -> GrowthPanel {
        let spec = GeneratorSpec {
            n_regions: 40,
            n_years,
            ..GeneratorSpec::regional(-0.01, 0.25, -0.05, 5)
        };
        let out = generate_panel(&spec).unwrap();
        build_panel(&out.observations, 1990..=1990 + n_years as i32 - 1).unwrap()
    }

    #[test]
    fn bounds_cover_the_canonical_range() {
        let panel = small_panel(33);
        let bounds = window_bounds(&panel, 5).unwrap();
        assert_eq!(bounds.len(), 28);
        assert_eq!(bounds[0], (1990, 1994));
        assert_eq!(bounds[27], (2017, 2021));
    }

    #[test]
    fn too_long_and_zero_length() {
        let panel = small_panel(6);
        assert_eq!(window_bounds(&panel, 5).unwrap().len(), 1);
        assert_eq!(
            window_bounds(&panel, 6),
            Err(WindowError::WindowTooLong { length: 6, years: 6 })
        );
        assert_eq!(window_bounds(&panel, 0), Err(WindowError::ZeroLength));
    }

    #[test]
    fn seeds_differ_by_window() {
        assert_ne!(window_seed(1, 1990), window_seed(1, 1991));
        assert_ne!(window_seed(1, 1990), window_seed(2, 1990));
        assert_eq!(window_seed(7, 2001), window_seed(7, 2001));
    }

    #[test]
    fn window_failures_are_recorded() {
        // Windows of a single year have one growth year only.
        let panel = small_panel(5);
        let opts = WindowOptions {
            window_length: 1,
            bootstrap_replicates: None,
            ..WindowOptions::default()
        };
        let series = run_moving_windows(&panel, &opts).unwrap();
        assert_eq!(series.entries.len(), 4);
        assert!(matches!(series.entries[0].outcome, Err(WindowFailure::Panel(PanelError::EmptyPeriod(_)))));
        assert!(series.entries[1..].iter().all(|e| matches!(
            e.outcome,
            Err(WindowFailure::Convergence(ConvergenceError::TooFewGrowthYears(1)))
        )));
    }
}
