mod common;

use proptest::prelude::*;
use rcplab::seeding::stream;
use rcplab::{DfrVerdict, Error, InterarrivalLaw};

const CONTINUOUS: [&str; 6] = ["exp(2)", "weibull(0.7,1)", "weibull(2.5,0.5)", "uniform(3)", "pareto(2.5,0.5)", "pareto(0.8,1)"];

fn law(s: &str) -> InterarrivalLaw {
    s.parse().unwrap()
}

fn draws(l: &InterarrivalLaw, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, &[1]);
    (0..n).map(|_| l.sample(&mut rng)).collect()
}

/// Survival integral on `[0, upper]` by the composite Simpson rule.
fn integrate(f: impl Fn(f64) -> f64, upper: f64, steps: usize) -> f64 {
    let h = upper / steps as f64;
    let mut s = f(0.0) + f(upper);
    for i in 1..steps {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn samples_follow_their_cdf() {
    for (i, name) in CONTINUOUS.iter().enumerate() {
        let l = law(name);
        let n = 20_000;
        let d = common::ks_statistic(draws(&l, n, i as u64), |x| l.cdf(x));
        assert!(d < common::ks_critical_001(n), "{name}: KS {d}");
    }
}

#[test]
fn closed_form_cdfs() {
    let e = law("exp(2)");
    assert!((e.cdf(0.5) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    let w = law("weibull(0.7,1)");
    assert!((w.survival(2.0) - (-(2.0f64.powf(0.7))).exp()).abs() < 1e-15);
    assert_eq!(law("uniform(3)").cdf(1.5), 0.5);
    assert!((law("pareto(2,1)").survival(2.0) - 0.25).abs() < 1e-15);
    assert_eq!(law("pareto(2,1)").cdf(0.5), 0.0);
    let d = law("det(1.5)");
    assert_eq!((d.cdf(1.4999), d.cdf(1.5)), (0.0, 1.0));
}

#[test]
fn means_match_the_survival_integral() {
    for name in ["exp(2)", "weibull(0.7,1)", "weibull(2.5,0.5)", "uniform(3)"] {
        let l = law(name);
        let upper = l.quantile(1.0 - 1e-13).unwrap();
        let m = integrate(|t| l.survival(t), upper, 200_000);
        assert!((l.mean() - m).abs() < 1e-4 * m, "{name}: {} vs {m}", l.mean());
    }
    assert!((law("pareto(2.5,0.5)").mean() - 2.5 * 0.5 / 1.5).abs() < 1e-12);
    assert!(law("pareto(0.8,1)").mean().is_infinite());
    assert_eq!(law("det(1.5)").mean(), 1.5);
}

#[test]
fn length_biased_draws() {
    let n = 20_000;
    let mut rng = stream(9, &[]);
    let e = law("exp(1)");
    let xs: Vec<f64> = (0..n).map(|_| e.sample_length_biased(&mut rng).unwrap()).collect();
    // Gamma(2, 1).
    let d = common::ks_statistic(xs, |x| 1.0 - (-x).exp() * (1.0 + x));
    assert!(d < common::ks_critical_001(n));
    let u = law("uniform(2)");
    let xs: Vec<f64> = (0..n).map(|_| u.sample_length_biased(&mut rng).unwrap()).collect();
    let d = common::ks_statistic(xs, |x| (x / 2.0).powi(2));
    assert!(d < common::ks_critical_001(n));
    // Weibull: the length-biased cdf is the normalised integral of t f(t).
    let w = law("weibull(0.7,1)");
    let xs: Vec<f64> = (0..n).map(|_| w.sample_length_biased(&mut rng).unwrap()).collect();
    let m = w.mean();
    let lb = |x: f64| integrate(|t| if t == 0.0 { 0.0 } else { t * w.density(t).unwrap() }, x, 2000) / m;
    let mut sorted = xs.clone();
    sorted.sort_by(f64::total_cmp);
    let probes: Vec<f64> = (1..10).map(|k| sorted[k * n / 10]).collect();
    for (k, x) in probes.iter().enumerate() {
        let expected = (k + 1) as f64 / 10.0;
        assert!((lb(*x) - expected).abs() < 0.02, "decile {k}: {}", lb(*x));
    }
    assert!(law("pareto(0.8,1)").sample_length_biased(&mut rng).is_err());
    assert_eq!(law("det(2)").sample_length_biased(&mut rng).unwrap(), 2.0);
}

#[test]
fn hazard_shapes() {
    let e = law("exp(2)");
    for t in [0.0, 0.3, 5.0] {
        assert!((e.hazard(t).unwrap() - 2.0).abs() < 1e-12);
    }
    let w = law("weibull(0.7,1)");
    assert!(w.hazard(0.1).unwrap() > w.hazard(1.0).unwrap());
    let u = law("uniform(1)");
    assert!(u.hazard(0.9).unwrap() > u.hazard(0.1).unwrap());
    assert!(u.hazard(1.5).unwrap().is_infinite());
    assert!(matches!(law("det(1)").hazard(0.5), Err(Error::Unsupported { .. })));
    assert_eq!(e.is_dfr().unwrap(), DfrVerdict::Yes);
    assert_eq!(w.is_dfr().unwrap(), DfrVerdict::Yes);
    assert_eq!(u.is_dfr().unwrap(), DfrVerdict::No);
    assert_eq!(law("weibull(2,1)").is_dfr().unwrap(), DfrVerdict::No);
    assert_eq!(law("pareto(2,1)").is_dfr().unwrap(), DfrVerdict::No);
    for name in ["exp(2)", "weibull(0.7,1)", "uniform(1)", "weibull(2,1)"] {
        let l = law(name);
        assert_eq!(l.is_dfr_numeric().unwrap().holds(), l.is_dfr().unwrap().holds(), "{name}");
    }
}

#[test]
fn tail_ratio_is_odds_of_the_cdf() {
    let w = law("weibull(0.7,1)");
    let f = w.cdf(0.2);
    assert!((w.tail_ratio(0.2).unwrap() - f / (1.0 - f)).abs() < 1e-12);
    assert!(matches!(law("uniform(1)").tail_ratio(1.0), Err(Error::InfiniteBound { .. })));
}

#[test]
fn empirical_resamples_its_data() {
    let l = InterarrivalLaw::empirical(vec![0.5, 1.0, 1.0, 3.0]).unwrap();
    let xs = draws(&l, 40_000, 3);
    assert!(xs.iter().all(|x| [0.5, 1.0, 3.0].contains(x)));
    let ones = xs.iter().filter(|&&x| x == 1.0).count() as f64 / xs.len() as f64;
    assert!((ones - 0.5).abs() < 0.01);
    assert!((l.mean() - 1.375).abs() < 1e-12);
    assert!(InterarrivalLaw::empirical(vec![]).is_err());
    assert!(InterarrivalLaw::empirical(vec![1.0, -1.0]).is_err());
    assert!(l.density(1.0).is_err());
}

#[test]
fn invalid_parameters_are_rejected() {
    for bad in ["exp(0)", "exp(-1)", "weibull(0,1)", "uniform(-2)", "pareto(1,0)", "det(0)", "gamma(1)", "exp(1", "exp(x)"] {
        assert!(bad.parse::<InterarrivalLaw>().is_err(), "{bad}");
    }
}

#[test]
fn empirical_from_file_reads_one_value_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gaps.txt");
    std::fs::write(&path, "# observed gaps\n0.5\n2\n\n1.5\n").unwrap();
    let spec = format!("empirical({})", path.display());
    let l: InterarrivalLaw = spec.parse().unwrap();
    assert!((l.mean() - 4.0 / 3.0).abs() < 1e-12);
    assert_eq!(l.to_string(), spec);
}

proptest! {
    #[test]
    fn quantile_inverts_cdf(i in 0..CONTINUOUS.len(), p in 0.001..0.999f64) {
        let l = law(CONTINUOUS[i]);
        let x = l.quantile(p).unwrap();
        prop_assert!((l.cdf(x) - p).abs() < 1e-9);
    }

    #[test]
    fn cdf_is_monotone(i in 0..CONTINUOUS.len(), a in 0.0..10.0f64, d in 0.0..10.0f64) {
        let l = law(CONTINUOUS[i]);
        prop_assert!(l.cdf(a) <= l.cdf(a + d));
        prop_assert!((l.cdf(a) + l.survival(a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn descriptors_round_trip(rate in 0.01..100.0f64, k in 0.1..5.0f64, s in 0.01..10.0f64) {
        for l in [
            InterarrivalLaw::exponential(rate).unwrap(),
            InterarrivalLaw::weibull(k, s).unwrap(),
            InterarrivalLaw::uniform(s).unwrap(),
            InterarrivalLaw::pareto(k, s).unwrap(),
            InterarrivalLaw::deterministic(s).unwrap(),
        ] {
            let back: InterarrivalLaw = l.to_string().parse().unwrap();
            prop_assert_eq!(back, l);
        }
    }

    #[test]
    fn samples_are_positive(i in 0..CONTINUOUS.len(), seed in any::<u64>()) {
        let l = law(CONTINUOUS[i]);
        let mut rng = stream(seed, &[]);
        for _ in 0..100 {
            let x = l.sample(&mut rng);
            prop_assert!(x > 0.0 && x.is_finite());
        }
    }
}
