//! Dynamic convergence model for emissions growth,
//!
//! ```text
//! r[i,t] = α s[i,t-1] + φ g[i,t] + exp(β y[i,t-1]) ε[i,t]
//! ```
//!
//! estimated by nonlinear least absolute deviations of the rescaled
//! residuals, `min Σ |r - α s_lag - φ g| / exp(β y_lag)`.
//!
//! The search profiles out `(α, φ)`: for a fixed β the problem is a weighted
//! L1 regression. A few smoothed IRLS steps (`|u| ≈ sqrt(u² + δ²)`) locate a
//! starting vertex, from which an exact simplex descent reaches the L1
//! optimum; later β values warm-start from the previous optimal vertex. β
//! maximizes the Laplace profile likelihood, found by golden-section search
//! on `[-1, 1]` and refined with a one-dimensional simplex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optim::{golden_section, nelder_mead, NelderMeadOptions};
use crate::panel::{PanelView, PeriodDefinition, Variable};
use crate::scaling::{binned_volatility, fit_scaling, Pooling, DEFAULT_BINS, MIN_BIN_OCCUPANCY};

/// Bootstrap replicates below this are rejected.
pub const MIN_BOOTSTRAP_REPLICATES: usize = 100;
pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 500;
pub const PARAM_NAMES: [&str; 3] = ["alpha", "phi", "beta"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvergenceError {
    #[error("period needs at least 2 growth years, has {0}")]
    TooFewGrowthYears(usize),
    #[error("too few observations for the convergence model: {0}")]
    TooFewObservations(usize),
    #[error("lagged sizes and GDP growth are collinear; (alpha, phi) not identified")]
    DegenerateDesign,
    #[error("LAD search hit its iteration cap (alpha={:.6}, phi={:.6}, beta={:.6})", partial.alpha, partial.phi, partial.beta)]
    NoConvergence { partial: Box<ConvergenceFit> },
    #[error("bootstrap needs at least {min} replicates, got {requested}")]
    TooFewReplicates { requested: usize, min: usize },
    #[error("{failed} of {total} bootstrap replicates failed")]
    BootstrapFailures { failed: usize, total: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadOptions {
    /// Search interval for β.
    pub beta_bounds: (f64, f64),
    pub beta_tol: f64,
    pub outer_max_iter: usize,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// δ in the smoothed absolute value.
    pub smoothing: f64,
    /// Hold β at this value and only solve for `(α, φ)`.
    pub fixed_beta: Option<f64>,
    /// Starting β for the simplex refinement. `None` derives it from binned
    /// volatility scaling of emissions growth on the same data.
    pub initial_beta: Option<f64>,
}

impl Default for LadOptions {
    fn default() -> Self {
        Self {
            beta_bounds: (-1.0, 1.0),
            beta_tol: 1e-6,
            outer_max_iter: 200,
            inner_tol: 1e-10,
            inner_max_iter: 10_000,
            smoothing: 1e-8,
            fixed_beta: None,
            initial_beta: None,
        }
    }
}

/// Flat regression data: one row per region-year growth observation,
/// region-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LadDesign {
    pub r: Vec<f64>,
    pub s_lag: Vec<f64>,
    pub g: Vec<f64>,
    pub y_lag: Vec<f64>,
    pub region: Vec<usize>,
    pub year: Vec<i32>,
}

impl LadDesign {
    pub fn from_view(view: &PanelView<'_>) -> Self {
        let mut d = Self::default();
        for rec in view.growth_records() {
            d.push(rec.r, rec.s_lag, rec.g, rec.y_lag, rec.region, rec.year);
        }
        d
    }

    pub fn push(&mut self, r: f64, s_lag: f64, g: f64, y_lag: f64, region: usize, year: i32) {
        self.r.push(r);
        self.s_lag.push(s_lag);
        self.g.push(g);
        self.y_lag.push(y_lag);
        self.region.push(region);
        self.year.push(year);
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Multiplies `r` and `g` by `c`.
    pub fn scale_growth(&self, c: f64) -> Self {
        let mut d = self.clone();
        d.r.iter_mut().for_each(|v| *v *= c);
        d.g.iter_mut().for_each(|v| *v *= c);
        d
    }

    /// Contiguous row ranges, one per region, in order of appearance.
    fn region_blocks(&self) -> Vec<std::ops::Range<usize>> {
        let mut blocks = Vec::new();
        let mut start = 0;
        for k in 1..=self.len() {
            if k == self.len() || self.region[k] != self.region[start] {
                blocks.push(start..k);
                start = k;
            }
        }
        blocks
    }

    fn n_years(&self) -> usize {
        let mut years = self.year.clone();
        years.sort_unstable();
        years.dedup();
        years.len()
    }

    fn residual(&self, k: usize, alpha: f64, phi: f64) -> f64 {
        self.r[k] - alpha * self.s_lag[k] - phi * self.g[k]
    }
}

/// Sum of absolute rescaled residuals at `(alpha, phi, beta)`.
pub fn lad_objective(design: &LadDesign, alpha: f64, phi: f64, beta: f64) -> f64 {
    (0..design.len())
        .map(|k| design.residual(k, alpha, phi).abs() * (-beta * design.y_lag[k]).exp())
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceFit {
    pub alpha: f64,
    pub phi: f64,
    pub beta: f64,
    /// Standard errors of `(alpha, phi, beta)`, once a bootstrap has run.
    pub std_errors: Option<[f64; 3]>,
    /// Minimized `Σ |ε̂|`.
    pub objective: f64,
    /// Rescaled residuals `ε̂`, aligned with `residual_keys`.
    pub residuals: Vec<f64>,
    /// `(region index, year)` of each residual.
    pub residual_keys: Vec<(usize, i32)>,
    pub n_obs: usize,
    pub converged: bool,
    pub period: PeriodDefinition,
    /// Profile evaluations spent on the β search.
    pub outer_evaluations: usize,
}

impl ConvergenceFit {
    /// The rescaled residuals as a flat sample.
    pub fn rescaled_residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn estimates(&self) -> [f64; 3] {
        [self.alpha, self.phi, self.beta]
    }
}

/// Solution of the weighted L1 regression `min Σ w |r - a s - p g|`.
#[derive(Debug, Clone, Copy)]
struct InnerSolution {
    coef: [f64; 2],
    objective: f64,
    /// Rows fitted exactly at the solution vertex.
    basis: Option<[usize; 2]>,
    converged: bool,
}

/// IRLS steps spent finding a starting vertex.
const IRLS_WARMUP: usize = 30;

fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = (a[0][0].abs() + a[0][1].abs()) * (a[1][0].abs() + a[1][1].abs());
    if !(det.abs() > 1e-14 * scale) || !det.is_finite() {
        return None;
    }
    Some([
        (b[0] * a[1][1] - b[1] * a[0][1]) / det,
        (a[0][0] * b[1] - a[1][0] * b[0]) / det,
    ])
}

struct WeightedL1<'a> {
    design: &'a LadDesign,
    weights: Vec<f64>,
}

impl<'a> WeightedL1<'a> {
    fn new(design: &'a LadDesign, beta: f64) -> Self {
        let weights = design.y_lag.iter().map(|y| (-beta * y).exp()).collect();
        Self { design, weights }
    }

    fn row(&self, k: usize) -> [f64; 2] {
        [self.design.s_lag[k], self.design.g[k]]
    }

    fn objective(&self, coef: [f64; 2]) -> f64 {
        (0..self.design.len())
            .map(|k| self.weights[k] * self.design.residual(k, coef[0], coef[1]).abs())
            .sum()
    }

    fn vertex(&self, basis: [usize; 2]) -> Option<[f64; 2]> {
        let (i, j) = (basis[0], basis[1]);
        solve2([self.row(i), self.row(j)], [self.design.r[i], self.design.r[j]])
    }

    fn irls_step(&self, coef: Option<[f64; 2]>, delta: f64) -> Option<[f64; 2]> {
        let mut a = [[0.0; 2]; 2];
        let mut b = [0.0; 2];
        for k in 0..self.design.len() {
            let x = self.row(k);
            let v = match coef {
                Some(c) => {
                    let u = self.design.residual(k, c[0], c[1]);
                    self.weights[k] / (u * u + delta * delta).sqrt()
                }
                None => self.weights[k],
            };
            a[0][0] += v * x[0] * x[0];
            a[0][1] += v * x[0] * x[1];
            a[1][1] += v * x[1] * x[1];
            b[0] += v * x[0] * self.design.r[k];
            b[1] += v * x[1] * self.design.r[k];
        }
        a[1][0] = a[0][1];
        solve2(a, b)
    }

    /// A starting vertex near the smoothed L1 solution.
    fn initial_basis(&self, opts: &LadOptions) -> Result<[usize; 2], ConvergenceError> {
        let mut coef = self.irls_step(None, opts.smoothing).ok_or(ConvergenceError::DegenerateDesign)?;
        for _ in 0..IRLS_WARMUP.min(opts.inner_max_iter) {
            let next = self
                .irls_step(Some(coef), opts.smoothing)
                .ok_or(ConvergenceError::DegenerateDesign)?;
            let change = (next[0] - coef[0]).abs().max((next[1] - coef[1]).abs());
            coef = next;
            if change <= opts.inner_tol * (1.0 + coef[0].abs().max(coef[1].abs())) {
                break;
            }
        }
        let n = self.design.len();
        let mut order: Vec<(f64, usize)> = (0..n)
            .map(|k| (self.design.residual(k, coef[0], coef[1]).abs(), k))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for p in 0..n {
            for q in p + 1..n.min(p + 64) {
                let basis = [order[p].1, order[q].1];
                if self.vertex(basis).is_some() {
                    return Ok(basis);
                }
            }
        }
        Err(ConvergenceError::DegenerateDesign)
    }

    /// Simplex descent along the edges of the L1 objective.
    ///
    /// From the vertex fitting `basis` exactly, each edge frees one basis row
    /// while the other stays fitted. The steepest descending edge is followed
    /// to its exact minimum, a weighted median of the residual breakpoints,
    /// where the row reaching zero enters the basis. A vertex with no
    /// descending edge is optimal.
    fn descend(&self, mut basis: [usize; 2], max_iter: usize) -> Option<([f64; 2], [usize; 2], bool)> {
        let d = self.design;
        let n = d.len();
        let mut coef = self.vertex(basis)?;
        let mut u = vec![0.0; n];
        let mut breaks: Vec<(f64, f64, usize)> = Vec::with_capacity(n);
        for _ in 0..max_iter {
            let mut total = 0.0;
            for k in 0..n {
                u[k] = d.residual(k, coef[0], coef[1]);
                let x = self.row(k);
                total += self.weights[k] * (x[0].abs() + x[1].abs());
                let tol = 1e-13 * (d.r[k].abs() + (coef[0] * x[0]).abs() + (coef[1] * x[1]).abs());
                if k == basis[0] || k == basis[1] || u[k].abs() <= tol {
                    u[k] = 0.0;
                }
            }
            let (xi, xj) = (self.row(basis[0]), self.row(basis[1]));
            let mut best: Option<(f64, [f64; 2], usize)> = None;
            for (freed, kept) in [(0usize, 1usize), (1, 0)] {
                for sign in [1.0, -1.0] {
                    let mut rhs = [0.0; 2];
                    rhs[freed] = sign;
                    let Some(dir) = solve2([xi, xj], rhs) else { continue };
                    let slope: f64 = (0..n)
                        .map(|k| {
                            let a = d.s_lag[k] * dir[0] + d.g[k] * dir[1];
                            let w = self.weights[k];
                            if u[k] == 0.0 {
                                w * a.abs()
                            } else {
                                -w * a * u[k].signum()
                            }
                        })
                        .sum();
                    if best.is_none_or(|b| slope < b.0) {
                        best = Some((slope, dir, basis[kept]));
                    }
                }
            }
            let (slope, dir, kept) = best?;
            if slope >= -1e-12 * total {
                return Some((coef, basis, true));
            }
            // Moving by t changes residual k by -t a_k; it crosses zero at u_k / a_k.
            breaks.clear();
            for k in 0..n {
                let a = d.s_lag[k] * dir[0] + d.g[k] * dir[1];
                if a == 0.0 || k == kept {
                    continue;
                }
                let t = u[k] / a;
                if t > 0.0 {
                    breaks.push((t, self.weights[k] * a.abs(), k));
                }
            }
            breaks.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
            let mut slope = slope;
            let mut entering = None;
            for &(t, c, k) in &breaks {
                slope += 2.0 * c;
                if slope >= 0.0 {
                    entering = Some((t, k));
                    break;
                }
            }
            let (t, k) = entering?;
            let next = [kept.min(k), kept.max(k)];
            match self.vertex(next) {
                Some(v) => {
                    basis = next;
                    coef = v;
                }
                // Only reachable through rounding: rows parallel to the kept
                // one never cross zero along the edge.
                None => return Some(([coef[0] + t * dir[0], coef[1] + t * dir[1]], basis, false)),
            }
        }
        Some((coef, basis, false))
    }

    fn solve(&self, warm: Option<&InnerSolution>, opts: &LadOptions) -> Result<InnerSolution, ConvergenceError> {
        let basis = match warm.and_then(|w| w.basis) {
            Some(b) if self.vertex(b).is_some() => b,
            _ => self.initial_basis(opts)?,
        };
        let (coef, basis, converged) = self
            .descend(basis, opts.inner_max_iter)
            .ok_or(ConvergenceError::DegenerateDesign)?;
        Ok(InnerSolution {
            coef,
            objective: self.objective(coef),
            basis: Some(basis),
            converged,
        })
    }
}

/// Volatility-scaling slope of emissions growth on the design, used as a
/// starting value for β.
fn scaling_initializer(view: &PanelView<'_>) -> Option<f64> {
    let n = view.panel().n_regions() * view.n_growth_years();
    let bins = (n / MIN_BIN_OCCUPANCY).min(DEFAULT_BINS);
    if bins < 3 {
        return None;
    }
    let stats = binned_volatility(view, Variable::Emissions, bins, Pooling::RegionYears).ok()?;
    fit_scaling(&stats).ok().map(|f| f.beta)
}

/// Fits the convergence model on a panel period.
pub fn fit_lad(view: &PanelView<'_>, options: &LadOptions) -> Result<ConvergenceFit, ConvergenceError> {
    let growth_years = view.n_growth_years();
    if growth_years < 2 {
        return Err(ConvergenceError::TooFewGrowthYears(growth_years));
    }
    let mut opts = *options;
    if opts.initial_beta.is_none() && opts.fixed_beta.is_none() {
        opts.initial_beta = scaling_initializer(view);
    }
    fit_design(&LadDesign::from_view(view), view.period().clone(), &opts)
}

/// Fits the convergence model on prepared regression rows.
pub fn fit_design(
    design: &LadDesign,
    period: PeriodDefinition,
    options: &LadOptions,
) -> Result<ConvergenceFit, ConvergenceError> {
    if design.len() < 4 {
        return Err(ConvergenceError::TooFewObservations(design.len()));
    }
    if design.n_years() < 2 {
        return Err(ConvergenceError::TooFewGrowthYears(design.n_years()));
    }

    // Start (α, φ) from the unweighted L1 fit.
    let start = WeightedL1::new(design, 0.0).solve(None, options)?;
    let mut warm = start;
    let mut evaluations = 0usize;
    let mut inner_ok = start.converged;
    let mut profile_error = None;
    // Laplace profile likelihood in β: ln Σ|u|e^{-βy} + β·mean(y). The
    // second term vanishes on centred sizes but not on bootstrap resamples.
    let mean_y = design.y_lag.iter().sum::<f64>() / design.len() as f64;
    let mut profile = |beta: f64| -> f64 {
        evaluations += 1;
        match WeightedL1::new(design, beta).solve(Some(&warm), options) {
            Ok(sol) => {
                inner_ok &= sol.converged;
                warm = sol;
                sol.objective.ln() + beta * mean_y
            }
            Err(e) => {
                profile_error = Some(e);
                f64::INFINITY
            }
        }
    };

    let (beta, outer_ok) = match options.fixed_beta {
        Some(beta) => (beta, true),
        None => {
            let (lo, hi) = options.beta_bounds;
            let (golden_beta, golden_value, golden_ok) =
                golden_section(&mut profile, lo, hi, options.beta_tol, options.outer_max_iter);
            let mut start_beta = golden_beta;
            if let Some(init) = options.initial_beta.filter(|b| (lo..=hi).contains(b)) {
                if profile(init) < golden_value {
                    start_beta = init;
                }
            }
            let nm = NelderMeadOptions {
                xtol: options.beta_tol * 0.1,
                ftol: 0.0,
                max_iter: options.outer_max_iter,
            };
            let refined = nelder_mead(|b: &[f64]| profile(b[0].clamp(lo, hi)), &[start_beta], &[10.0 * options.beta_tol], &nm);
            let beta = refined.x[0].clamp(lo, hi);
            let beta = if refined.value <= golden_value { beta } else { golden_beta };
            (beta, golden_ok && refined.converged)
        }
    };
    if let Some(e) = profile_error.take() {
        return Err(e);
    }

    let inner = WeightedL1::new(design, beta).solve(Some(&warm), options)?;
    inner_ok &= inner.converged;
    let [alpha, phi] = inner.coef;

    let residuals: Vec<f64> = (0..design.len())
        .map(|k| design.residual(k, alpha, phi) / (beta * design.y_lag[k]).exp())
        .collect();
    let fit = ConvergenceFit {
        alpha,
        phi,
        beta,
        std_errors: None,
        objective: lad_objective(design, alpha, phi, beta),
        residual_keys: design.region.iter().copied().zip(design.year.iter().copied()).collect(),
        residuals,
        n_obs: design.len(),
        converged: outer_ok && inner_ok,
        period,
        outer_evaluations: evaluations,
    };
    if fit.converged {
        Ok(fit)
    } else {
        Err(ConvergenceError::NoConvergence { partial: Box::new(fit) })
    }
}

/// Region-block bootstrap draws of the convergence parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub std_errors: [f64; 3],
    /// Estimates of `(alpha, phi, beta)` from each successful replicate.
    pub replicates: Vec<[f64; 3]>,
    pub failed: usize,
}

impl BootstrapResult {
    /// Two-sided percentile p-values for `H0: parameter = 0`.
    pub fn p_values(&self) -> [f64; 3] {
        let b = self.replicates.len() as f64;
        let mut out = [1.0; 3];
        for (k, p) in out.iter_mut().enumerate() {
            let below = self.replicates.iter().filter(|r| r[k] <= 0.0).count() as f64;
            let above = self.replicates.iter().filter(|r| r[k] >= 0.0).count() as f64;
            *p = (2.0 * below.min(above) / b).min(1.0);
        }
        out
    }
}

/// Seed of bootstrap replicate `index`, derived from the master seed only.
fn replicate_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn resample_regions(design: &LadDesign, blocks: &[std::ops::Range<usize>], rng: &mut ChaCha8Rng) -> LadDesign {
    let mut out = LadDesign::default();
    for new_region in 0..blocks.len() {
        let block = &blocks[rng.random_range(0..blocks.len())];
        for k in block.clone() {
            out.push(design.r[k], design.s_lag[k], design.g[k], design.y_lag[k], new_region, design.year[k]);
        }
    }
    out
}

/// Region-block bootstrap standard errors: regions are resampled with
/// replacement keeping their full time paths, and the model is refit on
/// each replicate.
///
/// Replicate `b` draws from its own stream of the master seed, so results do
/// not depend on scheduling.
pub fn bootstrap_se(
    view: &PanelView<'_>,
    fit: &ConvergenceFit,
    replicates: usize,
    seed: u64,
    options: &LadOptions,
) -> Result<BootstrapResult, ConvergenceError> {
    bootstrap_design(&LadDesign::from_view(view), fit, replicates, seed, options)
}

pub fn bootstrap_design(
    design: &LadDesign,
    fit: &ConvergenceFit,
    replicates: usize,
    seed: u64,
    options: &LadOptions,
) -> Result<BootstrapResult, ConvergenceError> {
    if replicates < MIN_BOOTSTRAP_REPLICATES {
        return Err(ConvergenceError::TooFewReplicates {
            requested: replicates,
            min: MIN_BOOTSTRAP_REPLICATES,
        });
    }
    let blocks = design.region_blocks();
    let mut opts = *options;
    if opts.fixed_beta.is_none() {
        opts.initial_beta = Some(fit.beta);
    }
    let run = |b: usize| -> Option<[f64; 3]> {
        let mut rng = replicate_rng(seed, b);
        let sample = resample_regions(design, &blocks, &mut rng);
        fit_design(&sample, fit.period.clone(), &opts).ok().map(|f| f.estimates())
    };

    #[cfg(feature = "parallel")]
    let draws: Vec<Option<[f64; 3]>> = {
        use rayon::prelude::*;
        (0..replicates).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let draws: Vec<Option<[f64; 3]>> = (0..replicates).map(run).collect();

    let replicates_ok: Vec<[f64; 3]> = draws.iter().flatten().copied().collect();
    let failed = replicates - replicates_ok.len();
    if failed * 10 > replicates {
        return Err(ConvergenceError::BootstrapFailures {
            failed,
            total: replicates,
        });
    }
    let n = replicates_ok.len() as f64;
    let mut std_errors = [0.0; 3];
    for (k, se) in std_errors.iter_mut().enumerate() {
        let mean = replicates_ok.iter().map(|r| r[k]).sum::<f64>() / n;
        *se = (replicates_ok.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    }
    Ok(BootstrapResult {
        std_errors,
        replicates: replicates_ok,
        failed,
    })
}
