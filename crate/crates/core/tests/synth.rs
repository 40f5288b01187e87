use emission_dynamics::panel::build_panel;
use emission_dynamics::synth::{generate_panel, GeneratorSpec, ResidualLaw};

fn laplace_cdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / scale).exp()
    } else {
        1.0 - 0.5 * (-x / scale).exp()
    }
}

fn ks(mut x: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = cdf(v);
            (c - i as f64 / n).max((i as f64 + 1.0) / n - c)
        })
        .fold(0.0, f64::max)
}

#[test]
fn true_parameter_residuals_follow_the_residual_law() {
    let spec = GeneratorSpec {
        n_regions: 3100,
        n_years: 34,
        ..GeneratorSpec::regional(-0.004, 0.266, -0.085, 12)
    };
    let out = generate_panel(&spec).unwrap();
    let panel = build_panel(&out.observations, 1990..=2023).unwrap();
    let residuals: Vec<f64> = panel
        .full_view()
        .growth_records()
        .iter()
        .map(|r| (r.r - spec.alpha * r.s_lag - spec.phi * r.g) * (-spec.beta * r.y_lag).exp())
        .collect();
    assert!(residuals.len() >= 100_000);
    let ResidualLaw::Laplace { scale } = spec.residual_law else { unreachable!() };
    let d = ks(residuals, |x| laplace_cdf(x, scale));
    assert!(d < 0.01, "KS {d}");

    let raw: Vec<f64> = (0..spec.n_regions)
        .flat_map(|i| (1..spec.n_years).map(move |k| (i, k)))
        .map(|(i, k)| out.at(&out.innovations, i, k))
        .collect();
    assert!(ks(raw, |x| laplace_cdf(x, scale)) < 0.01);
}

#[test]
fn different_seeds_give_different_panels() {
    let a = generate_panel(&GeneratorSpec::regional(-0.004, 0.266, -0.085, 1)).unwrap();
    let b = generate_panel(&GeneratorSpec::regional(-0.004, 0.266, -0.085, 2)).unwrap();
    assert_ne!(a.s, b.s);
    assert_eq!(a.observations.len(), 242 * 33);
}
