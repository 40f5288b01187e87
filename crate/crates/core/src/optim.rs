//! Derivative-free minimizers shared by the estimators.
//!
//! Nelder–Mead handles the AEP likelihood, which has kinks in the mode at every
//! sample point. Golden-section search brackets the one-dimensional
//! volatility-scaling profile of the convergence model.

/// Stopping rules for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Stop once every vertex lies within this max-norm distance of the best one.
    pub xtol: f64,
    /// Stop once the objective spread across the simplex falls below this.
    pub ftol: f64,
    pub max_iter: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            xtol: 1e-8,
            ftol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` starting from `x0` with an axis-aligned initial simplex of
/// edge lengths `steps`.
///
/// Non-finite objective values are treated as `+inf`, so the caller can
/// encode infeasible regions that way.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], steps: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(x0.len(), steps.len(), "start point and step vector differ in length");
    let dim = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for (k, &step) in steps.iter().enumerate() {
        let mut v = x0.to_vec();
        v[k] += if step != 0.0 { step } else { 1e-3 };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| sanitize(f(v))).collect();

    let mut order: Vec<usize> = (0..=dim).collect();
    let mut centroid = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut trial2 = vec![0.0; dim];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        let spread = values[worst] - values[best];
        let diameter = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < opts.xtol || (spread.is_finite() && spread < opts.ftol) {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &idx in &order[..dim] {
            for (c, x) in centroid.iter_mut().zip(&simplex[idx]) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= dim as f64);

        // Reflection.
        for k in 0..dim {
            trial[k] = centroid[k] + (centroid[k] - simplex[worst][k]);
        }
        let f_reflect = sanitize(f(&trial));

        if f_reflect < values[best] {
            for k in 0..dim {
                trial2[k] = centroid[k] + 2.0 * (centroid[k] - simplex[worst][k]);
            }
            let f_expand = sanitize(f(&trial2));
            if f_expand < f_reflect {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = f_expand;
            } else {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = f_reflect;
            }
            continue;
        }
        if f_reflect < values[second_worst] {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = f_reflect;
            continue;
        }

        // Contraction, outside or inside depending on the reflected value.
        let outside = f_reflect < values[worst];
        for k in 0..dim {
            trial2[k] = if outside {
                centroid[k] + 0.5 * (trial[k] - centroid[k])
            } else {
                centroid[k] + 0.5 * (simplex[worst][k] - centroid[k])
            };
        }
        let f_contract = sanitize(f(&trial2));
        let accept = if outside {
            f_contract <= f_reflect
        } else {
            f_contract < values[worst]
        };
        if accept {
            simplex[worst].copy_from_slice(&trial2);
            values[worst] = f_contract;
            continue;
        }

        // Shrink towards the best vertex.
        let anchor = simplex[best].clone();
        for &idx in &order[1..] {
            for (x, a) in simplex[idx].iter_mut().zip(&anchor) {
                *x = a + 0.5 * (*x - a);
            }
            values[idx] = sanitize(f(&simplex[idx]));
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`.
///
/// Returns the best point evaluated, its value, and whether the bracket shrank
/// below `tol` within `max_iter` steps.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> (f64, f64, bool)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = sanitize(f(c));
    let mut fd = sanitize(f(d));
    let mut iters = 0;
    while (b - a).abs() > tol && iters < max_iter {
        iters += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = sanitize(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sanitize(f(d));
        }
    }
    let converged = (b - a).abs() <= tol;
    if fc < fd {
        (c, fc, converged)
    } else {
        (d, fd, converged)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_finds_rosenbrock_minimum() {
        let rosen = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let opts = NelderMeadOptions {
            xtol: 1e-10,
            ftol: 1e-20,
            max_iter: 20_000,
        };
        let res = nelder_mead(rosen, &[-1.2, 1.0], &[0.1, 0.1], &opts);
        assert!(res.converged);
        assert!((res.x[0] - 1.0).abs() < 1e-6, "{:?}", res.x);
        assert!((res.x[1] - 1.0).abs() < 1e-6, "{:?}", res.x);
    }

    #[test]
    fn nelder_mead_respects_iteration_cap() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let opts = NelderMeadOptions {
            xtol: 0.0,
            ftol: 0.0,
            max_iter: 5,
        };
        let res = nelder_mead(f, &[3.0, -2.0, 1.0], &[1.0, 1.0, 1.0], &opts);
        assert!(!res.converged);
        assert_eq!(res.iterations, 5);
    }

    #[test]
    fn nelder_mead_treats_nan_as_infeasible() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 2.0).powi(2) };
        let res = nelder_mead(f, &[0.5], &[0.1], &NelderMeadOptions::default());
        assert!((res.x[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn golden_section_on_parabola() {
        let (x, fx, ok) = golden_section(|x| (x - 0.3).powi(2), -1.0, 1.0, 1e-9, 200);
        assert!(ok);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx < 1e-16);
    }
}
