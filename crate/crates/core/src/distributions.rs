//! Asymmetric exponential power (AEP) distribution.
//!
//! The density has independent scale `a` and shape `b` on each side of the
//! mode `m`:
//!
//! ```text
//! f(x) = exp(-(1/b_l) |(x - m)/a_l|^b_l) / A    for x < m
//! f(x) = exp(-(1/b_r) |(x - m)/a_r|^b_r) / A    for x >= m
//! A    = a_l b_l^(1/b_l) Γ(1 + 1/b_l) + a_r b_r^(1/b_r) Γ(1 + 1/b_r)
//! ```
//!
//! With `b = 1` on both sides and equal scales it is a Laplace law with scale
//! `a`; with `b = 2` it is a Normal law with standard deviation `a`. Smaller
//! shapes mean fatter tails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};
use thiserror::Error;

use crate::optim::{nelder_mead, NelderMeadOptions};

/// Smallest sample accepted by [`fit_mle`].
pub const MIN_FIT_SAMPLES: usize = 50;

/// Shape values the likelihood search is allowed to visit.
const SHAPE_RANGE: (f64, f64) = (0.1, 20.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AepError {
    #[error("AEP parameter {name} must be positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("need at least {min} observations to fit an AEP law, got {n}")]
    InsufficientData { n: usize, min: usize },
    #[error("sample contains a non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("all sample values are identical; the AEP likelihood is unbounded")]
    DegenerateSample,
}

/// Parameters of an AEP law. Construct through [`AepParams::new`], which
/// rejects non-positive scales and shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AepParams {
    a_l: f64,
    a_r: f64,
    b_l: f64,
    b_r: f64,
    m: f64,
}

/// Parameter names in the order used by [`AepParams::to_array`].
pub const PARAM_NAMES: [&str; 5] = ["a_l", "a_r", "b_l", "b_r", "m"];

/// `a · b^(1/b) · Γ(1 + 1/b)`, the unnormalized mass of one branch.
fn branch_mass(a: f64, b: f64) -> f64 {
    a * (b.ln() / b + ln_gamma(1.0 + 1.0 / b)).exp()
}

impl AepParams {
    pub fn new(a_l: f64, a_r: f64, b_l: f64, b_r: f64, m: f64) -> Result<Self, AepError> {
        for (name, value) in [("a_l", a_l), ("a_r", a_r), ("b_l", b_l), ("b_r", b_r)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(AepError::InvalidParameter { name, value });
            }
        }
        if !m.is_finite() {
            return Err(AepError::InvalidParameter { name: "m", value: m });
        }
        Ok(Self { a_l, a_r, b_l, b_r, m })
    }

    /// Symmetric law with common scale and shape.
    pub fn symmetric(a: f64, b: f64, m: f64) -> Result<Self, AepError> {
        Self::new(a, a, b, b, m)
    }

    pub fn laplace(scale: f64, m: f64) -> Result<Self, AepError> {
        Self::symmetric(scale, 1.0, m)
    }

    pub fn normal(sd: f64, mean: f64) -> Result<Self, AepError> {
        Self::symmetric(sd, 2.0, mean)
    }

    pub fn a_l(&self) -> f64 {
        self.a_l
    }
    pub fn a_r(&self) -> f64 {
        self.a_r
    }
    pub fn b_l(&self) -> f64 {
        self.b_l
    }
    pub fn b_r(&self) -> f64 {
        self.b_r
    }
    pub fn m(&self) -> f64 {
        self.m
    }

    /// `[a_l, a_r, b_l, b_r, m]`
    pub fn to_array(&self) -> [f64; 5] {
        [self.a_l, self.a_r, self.b_l, self.b_r, self.m]
    }

    pub fn from_array(v: [f64; 5]) -> Result<Self, AepError> {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }

    /// The normalization constant `A`.
    pub fn normalization_constant(&self) -> f64 {
        branch_mass(self.a_l, self.b_l) + branch_mass(self.a_r, self.b_r)
    }

    /// Probability mass to the left of the mode.
    pub fn left_mass(&self) -> f64 {
        let left = branch_mass(self.a_l, self.b_l);
        left / (left + branch_mass(self.a_r, self.b_r))
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let (a, b) = self.branch(x);
        let z = (x - self.m).abs() / a;
        -self.normalization_constant().ln() - z.powf(b) / b
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        if x == f64::INFINITY {
            return 1.0;
        }
        let left = self.left_mass();
        let (a, b) = self.branch(x);
        let w = ((x - self.m).abs() / a).powf(b) / b;
        if x < self.m {
            // Mass beyond distance |x - m| on the left branch.
            left * upper_regularized_gamma(1.0 / b, w)
        } else {
            left + (1.0 - left) * lower_regularized_gamma(1.0 / b, w)
        }
    }

    /// `n` independent draws, reproducible from `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(n, &mut rng)
    }

    /// Exact sampler: choose a branch by its mass, draw `w ~ Gamma(1/b, 1)`
    /// and map it to `m ± a (b w)^(1/b)`.
    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let left = self.left_mass();
        let gamma_l = Gamma::new(1.0 / self.b_l, 1.0).expect("shape validated at construction");
        let gamma_r = Gamma::new(1.0 / self.b_r, 1.0).expect("shape validated at construction");
        (0..n)
            .map(|_| {
                if rng.random::<f64>() < left {
                    let w: f64 = gamma_l.sample(rng);
                    self.m - self.a_l * (self.b_l * w).powf(1.0 / self.b_l)
                } else {
                    let w: f64 = gamma_r.sample(rng);
                    self.m + self.a_r * (self.b_r * w).powf(1.0 / self.b_r)
                }
            })
            .collect()
    }

    /// Sum of `log_pdf` over `samples`.
    pub fn log_likelihood(&self, samples: &[f64]) -> f64 {
        -negative_log_likelihood(samples, self.a_l, self.a_r, self.b_l, self.b_r, self.m)
    }

    fn branch(&self, x: f64) -> (f64, f64) {
        if x < self.m {
            (self.a_l, self.b_l)
        } else {
            (self.a_r, self.b_r)
        }
    }
}

fn lower_regularized_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x == f64::INFINITY {
        1.0
    } else {
        gamma_lr(a, x)
    }
}

fn upper_regularized_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x == f64::INFINITY {
        0.0
    } else {
        gamma_ur(a, x)
    }
}

fn negative_log_likelihood(samples: &[f64], a_l: f64, a_r: f64, b_l: f64, b_r: f64, m: f64) -> f64 {
    let log_norm = (branch_mass(a_l, b_l) + branch_mass(a_r, b_r)).ln();
    let mut left = 0.0;
    let mut right = 0.0;
    for &x in samples {
        let d = x - m;
        if d < 0.0 {
            left += (-d / a_l).powf(b_l);
        } else {
            right += (d / a_r).powf(b_r);
        }
    }
    samples.len() as f64 * log_norm + left / b_l + right / b_r
}

/// How the standard errors of an [`AepFit`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdErrorMethod {
    ObservedInformation,
    /// The numerical information matrix was not positive definite.
    Bootstrap,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub optimizer: NelderMeadOptions,
    /// Replicates for the bootstrap fallback of the standard errors.
    pub bootstrap_replicates: usize,
    pub seed: u64,
    /// Compute standard errors at all. Bootstrap replicates skip this.
    pub std_errors: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            optimizer: NelderMeadOptions::default(),
            bootstrap_replicates: 200,
            seed: 0x5eed,
            std_errors: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AepFit {
    pub params: AepParams,
    /// Standard errors in the order of [`PARAM_NAMES`].
    pub std_errors: [f64; 5],
    pub std_error_method: StdErrorMethod,
    pub log_likelihood: f64,
    pub n: usize,
    /// False when the simplex hit its iteration cap or the information matrix
    /// was not positive definite.
    pub converged: bool,
    pub iterations: usize,
}

fn objective(samples: &[f64], theta: &[f64]) -> f64 {
    let (b_l, b_r) = (theta[2].exp(), theta[3].exp());
    if !(SHAPE_RANGE.0..=SHAPE_RANGE.1).contains(&b_l) || !(SHAPE_RANGE.0..=SHAPE_RANGE.1).contains(&b_r) {
        return f64::INFINITY;
    }
    negative_log_likelihood(samples, theta[0].exp(), theta[1].exp(), b_l, b_r, theta[4])
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn validate_sample(samples: &[f64]) -> Result<(), AepError> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(AepError::InsufficientData {
            n: samples.len(),
            min: MIN_FIT_SAMPLES,
        });
    }
    if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
        return Err(AepError::NonFinite { index });
    }
    if samples.iter().all(|&x| x == samples[0]) {
        return Err(AepError::DegenerateSample);
    }
    Ok(())
}

/// Maximum-likelihood point estimate without standard errors.
fn maximize_likelihood(samples: &[f64], opts: &NelderMeadOptions) -> ([f64; 5], f64, usize, bool) {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m0 = median(&sorted);
    let a0 = samples.iter().map(|x| (x - m0).abs()).sum::<f64>() / samples.len() as f64;
    let (la, shift) = (a0.ln(), 0.2 * a0);
    let starts: [[f64; 5]; 5] = [
        [la, la, 0.0, 0.0, m0],
        [la, la, 0.7f64.ln(), 0.7f64.ln(), m0],
        [la, la, 1.6f64.ln(), 1.6f64.ln(), m0],
        [la + 0.26, la - 0.26, 0.0, 0.0, m0 - shift],
        [la - 0.26, la + 0.26, 0.0, 0.0, m0 + shift],
    ];
    let f = |theta: &[f64]| objective(samples, theta);

    let mut iterations = 0;
    let mut best: Option<crate::optim::Minimum> = None;
    for start in &starts {
        let res = nelder_mead(f, start, &[0.2, 0.2, 0.2, 0.2, 0.1 * a0], opts);
        iterations += res.iterations;
        if best.as_ref().is_none_or(|b| res.value < b.value) {
            best = Some(res);
        }
    }
    let mut best = best.expect("at least one start");
    // Restart from the winner until the simplex stops finding improvements.
    for _ in 0..3 {
        let res = nelder_mead(f, &best.x, &[0.05, 0.05, 0.05, 0.05, 0.02 * a0], opts);
        iterations += res.iterations;
        let improved = best.value - res.value;
        let done = improved < opts.ftol.max(1e-12);
        if res.value <= best.value {
            best = res;
        } else {
            best.converged &= res.converged;
        }
        if done {
            break;
        }
    }
    let mut theta = [0.0; 5];
    theta.copy_from_slice(&best.x);
    (theta, -best.value, iterations, best.converged)
}

/// Central-difference Hessian of the negative log-likelihood in working
/// coordinates.
fn numerical_hessian(samples: &[f64], theta: &[f64; 5], steps: &[f64; 5]) -> [[f64; 5]; 5] {
    let f = |t: &[f64; 5]| objective(samples, t);
    let f0 = f(theta);
    let mut h = [[0.0; 5]; 5];
    for i in 0..5 {
        let mut tp = *theta;
        let mut tm = *theta;
        tp[i] += steps[i];
        tm[i] -= steps[i];
        h[i][i] = (f(&tp) - 2.0 * f0 + f(&tm)) / (steps[i] * steps[i]);
        for j in 0..i {
            let eval = |si: f64, sj: f64| {
                let mut t = *theta;
                t[i] += si * steps[i];
                t[j] += sj * steps[j];
                f(&t)
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                / (4.0 * steps[i] * steps[j]);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    h
}

/// Inverse of a symmetric positive-definite matrix via Cholesky; `None` when
/// the matrix is not positive definite.
pub(crate) fn spd_inverse<const N: usize>(m: &[[f64; N]; N]) -> Option<[[f64; N]; N]> {
    let mut l = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..=i {
            let mut sum = m[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return None;
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    // Invert L, then form L^-T L^-1.
    let mut linv = [[0.0; N]; N];
    for i in 0..N {
        linv[i][i] = 1.0 / l[i][i];
        for j in 0..i {
            let mut sum = 0.0;
            for k in j..i {
                sum -= l[i][k] * linv[k][j];
            }
            linv[i][j] = sum / l[i][i];
        }
    }
    let mut inv = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..=i {
            let mut sum = 0.0;
            for k in i..N {
                sum += linv[k][i] * linv[k][j];
            }
            inv[i][j] = sum;
            inv[j][i] = sum;
        }
    }
    Some(inv)
}

fn observed_information_se(samples: &[f64], theta: &[f64; 5]) -> Option<[f64; 5]> {
    // Log-coordinates are smooth and take a 1e-4 relative step. The likelihood
    // has a kink in the mode at every observation, so the mode step must
    // average over many of them: twice the mean scale over sqrt(n).
    let scale = 0.5 * (theta[0].exp() + theta[1].exp());
    let mut steps = [0.0; 5];
    for k in 0..4 {
        steps[k] = 1e-4 * theta[k].abs().max(1.0);
    }
    steps[4] = 2.0 * scale / (samples.len() as f64).sqrt();
    let hessian = numerical_hessian(samples, theta, &steps);
    let cov = spd_inverse(&hessian)?;
    let mut se = [0.0; 5];
    for k in 0..5 {
        let sd = cov[k][k].sqrt();
        // Delta method back to natural units for the log-parameterized entries.
        se[k] = if k < 4 { theta[k].exp() * sd } else { sd };
    }
    se.iter().all(|v| v.is_finite()).then_some(se)
}

fn bootstrap_se(samples: &[f64], opts: &FitOptions) -> [f64; 5] {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = samples.len();
    let mut draws: Vec<[f64; 5]> = Vec::with_capacity(opts.bootstrap_replicates);
    let mut resample = vec![0.0; n];
    for _ in 0..opts.bootstrap_replicates {
        for slot in resample.iter_mut() {
            *slot = samples[rng.random_range(0..n)];
        }
        if resample.iter().all(|&x| x == resample[0]) {
            continue;
        }
        let (theta, _, _, _) = maximize_likelihood(&resample, &opts.optimizer);
        draws.push([theta[0].exp(), theta[1].exp(), theta[2].exp(), theta[3].exp(), theta[4]]);
    }
    let mut se = [0.0; 5];
    if draws.len() < 2 {
        return se;
    }
    for (k, slot) in se.iter_mut().enumerate() {
        let mean = draws.iter().map(|d| d[k]).sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d[k] - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        *slot = var.sqrt();
    }
    se
}

/// Fits an AEP law by maximum likelihood.
///
/// The search runs Nelder–Mead in `(ln a_l, ln a_r, ln b_l, ln b_r, m)` from
/// five starts around the sample median and mean absolute deviation. Standard
/// errors come from the inverse numerical observed information; if that
/// matrix is not positive definite a nonparametric bootstrap is used instead
/// and the fit is flagged as not converged.
pub fn fit_mle(samples: &[f64], options: &FitOptions) -> Result<AepFit, AepError> {
    validate_sample(samples)?;
    let (theta, log_likelihood, iterations, optimizer_converged) =
        maximize_likelihood(samples, &options.optimizer);
    let params = AepParams::new(
        theta[0].exp(),
        theta[1].exp(),
        theta[2].exp(),
        theta[3].exp(),
        theta[4],
    )?;

    let (std_errors, std_error_method, info_ok) = if options.std_errors {
        match observed_information_se(samples, &theta) {
            Some(se) => (se, StdErrorMethod::ObservedInformation, true),
            None => (bootstrap_se(samples, options), StdErrorMethod::Bootstrap, false),
        }
    } else {
        ([0.0; 5], StdErrorMethod::ObservedInformation, true)
    };

    Ok(AepFit {
        params,
        std_errors,
        std_error_method,
        log_likelihood,
        n: samples.len(),
        converged: optimizer_converged && info_ok,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ets3_co2() -> AepParams {
        AepParams::new(0.063, 0.032, 1.192, 0.876, 0.011).unwrap()
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(matches!(
            AepParams::new(0.0, 1.0, 1.0, 1.0, 0.0),
            Err(AepError::InvalidParameter { name: "a_l", .. })
        ));
        assert!(AepParams::new(1.0, -1.0, 1.0, 1.0, 0.0).is_err());
        assert!(AepParams::new(1.0, 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(AepParams::new(1.0, 1.0, 1.0, f64::NAN, 0.0).is_err());
        assert!(AepParams::new(1.0, 1.0, 1.0, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn normalization_special_cases() {
        assert_relative_eq!(AepParams::laplace(1.0, 0.0).unwrap().normalization_constant(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(
            AepParams::normal(1.0, 0.0).unwrap().normalization_constant(),
            (2.0 * std::f64::consts::PI).sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn normalization_constant_for_pre_ets_gdp() {
        // 0.026·0.804^(1/0.804)·Γ(1+1/0.804) + 0.025·1.047^(1/1.047)·Γ(1+1/1.047),
        // evaluated with mpmath at 30 digits.
        let p = AepParams::new(0.026, 0.025, 0.804, 1.047, 0.021).unwrap();
        assert_relative_eq!(p.normalization_constant(), 0.048_024_873_702_830_51, max_relative = 1e-12);
    }

    #[test]
    fn pdf_closed_forms() {
        let lap = AepParams::laplace(1.0, 0.0).unwrap();
        assert_relative_eq!(lap.pdf(0.0), 0.5, max_relative = 1e-15);
        assert_relative_eq!(lap.pdf(1.0), 0.5 * (-1f64).exp(), max_relative = 1e-14);
        let norm = AepParams::normal(1.0, 0.0).unwrap();
        assert_relative_eq!(norm.pdf(0.0), 0.398_942_280_401_432_7, max_relative = 1e-14);
    }

    #[test]
    fn pdf_at_mode_is_inverse_normalization() {
        let p = ets3_co2();
        assert_relative_eq!(p.pdf(p.m()), 1.0 / p.normalization_constant(), max_relative = 1e-14);
        // Continuity from the left.
        assert_relative_eq!(p.pdf(p.m() - 1e-12), p.pdf(p.m()), max_relative = 1e-9);
    }

    #[test]
    fn log_pdf_does_not_underflow() {
        let lap = AepParams::laplace(1.0, 0.0).unwrap();
        assert_relative_eq!(lap.log_pdf(0.0), -std::f64::consts::LN_2, max_relative = 1e-15);
        assert_relative_eq!(lap.log_pdf(50.0), -std::f64::consts::LN_2 - 50.0, max_relative = 1e-15);
        let far = lap.log_pdf(1000.0);
        assert!(far.is_finite());
        assert_relative_eq!(far, -std::f64::consts::LN_2 - 1000.0, max_relative = 1e-15);
    }

    #[test]
    fn cdf_closed_forms() {
        let lap = AepParams::laplace(1.0, 0.0).unwrap();
        assert_relative_eq!(lap.cdf(0.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(lap.cdf(1.0), 1.0 - 0.5 * (-1f64).exp(), epsilon = 1e-14);
        assert_eq!(lap.cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(lap.cdf(f64::INFINITY), 1.0);
        let sym = AepParams::symmetric(0.3, 0.7, 1.5).unwrap();
        assert_relative_eq!(sym.cdf(1.5), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn left_mass_matches_cdf_at_mode() {
        let p = ets3_co2();
        // mpmath, 30 digits.
        let expected = 0.700_632_060_319_321_7;
        assert_relative_eq!(p.normalization_constant(), 0.098_181_019_626_720_96, max_relative = 1e-12);
        assert_relative_eq!(p.cdf(p.m()), expected, epsilon = 1e-15);
        assert_relative_eq!(p.left_mass(), expected, epsilon = 1e-15);
    }

    #[test]
    fn smaller_shape_means_fatter_tail() {
        let ratio = |b: f64| {
            let p = AepParams::symmetric(1.0, b, 0.0).unwrap();
            p.pdf(5.0) / p.pdf(1.0)
        };
        assert!(ratio(0.5) > ratio(1.0));
        assert!(ratio(1.0) > ratio(2.0));
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = ets3_co2();
        assert_eq!(p.sample(100, 7), p.sample(100, 7));
        assert_ne!(p.sample(100, 7), p.sample(100, 8));
    }

    #[test]
    fn fit_rejects_bad_samples() {
        let opts = FitOptions::default();
        assert_eq!(
            fit_mle(&[1.0; 10], &opts),
            Err(AepError::InsufficientData { n: 10, min: 50 })
        );
        assert_eq!(fit_mle(&[0.25; 60], &opts), Err(AepError::DegenerateSample));
        let mut bad = ets3_co2().sample(60, 1);
        bad[17] = f64::NAN;
        assert_eq!(fit_mle(&bad, &opts), Err(AepError::NonFinite { index: 17 }));
    }

    #[test]
    fn fit_log_likelihood_is_recomputable() {
        let sample = ets3_co2().sample(500, 3);
        let fit = fit_mle(&sample, &FitOptions::default()).unwrap();
        assert_relative_eq!(fit.log_likelihood, fit.params.log_likelihood(&sample), max_relative = 1e-12);
        let by_hand: f64 = sample.iter().map(|&x| fit.params.log_pdf(x)).sum();
        assert_relative_eq!(fit.log_likelihood, by_hand, max_relative = 1e-10);
        assert!(fit.std_errors.iter().all(|&s| s >= 0.0));
        assert_eq!(fit.n, 500);
    }

    #[test]
    fn spd_inverse_detects_indefinite() {
        assert!(spd_inverse(&[[1.0, 2.0], [2.0, 1.0]]).is_none());
        let inv = spd_inverse(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        assert_relative_eq!(inv[0][0], 3.0 / 8.0, epsilon = 1e-15);
        assert_relative_eq!(inv[0][1], -2.0 / 8.0, epsilon = 1e-15);
        assert_relative_eq!(inv[1][1], 4.0 / 8.0, epsilon = 1e-15);
    }
}
