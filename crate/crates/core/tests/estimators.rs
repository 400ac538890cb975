mod common;

use rcplab::estimators::{lambda_sweep, pseudo_critical, survival_probability, SurvivalSetup, DEFAULT_MAX_ITER};
use rcplab::{Error, InterarrivalLaw};

fn setup(law: &str, l: i64, t: f64, n: u64, seed: u64) -> SurvivalSetup {
    SurvivalSetup::new(law.parse().unwrap(), l, t, n, seed)
}

#[test]
fn exponential_sweep_agrees_with_the_classical_process() {
    let s = setup("exp(1)", 30, 15.0, 4000, 1);
    let grid = [0.5, 1.5, 2.0, 3.0, 6.0];
    let sweep = lambda_sweep(&s, &grid).unwrap();
    assert!(sweep.is_monotone());
    assert!(sweep.rows[0].survival.estimate.value < 0.02);
    assert!(sweep.rows[4].survival.estimate.value > 0.9);
    for (i, row) in sweep.rows.iter().enumerate() {
        let g = common::gillespie_survival(row.lambda, 30, 15.0, 4000, 100 + i as u64);
        let p = row.survival.estimate.value;
        let sigma = ((p * (1.0 - p) + g * (1.0 - g)) / 4000.0).sqrt().max(1e-3);
        assert!((p - g).abs() < 4.0 * sigma, "lambda {}: {p} vs {g}", row.lambda);
    }
}

#[test]
fn sweep_rows_equal_single_point_estimates() {
    let s = setup("weibull(0.7,1)", 20, 10.0, 500, 3);
    let grid = [1.0, 2.0, 4.0];
    let sweep = lambda_sweep(&s, &grid).unwrap();
    // Each point uses a master at its own rate, which coincides with the
    // sweep only at the largest rate.
    let top = survival_probability(&s, 4.0).unwrap();
    assert_eq!(sweep.rows[2].survival, top);
    for row in &sweep.rows {
        let e = row.survival;
        assert!(e.lo <= e.estimate.value && e.estimate.value <= e.hi);
    }
}

#[test]
fn deterministic_cures_always_win() {
    let s = setup("det(1)", 50, 2.0, 2000, 5);
    let sweep = lambda_sweep(&s, &[1.0, 10.0, 100.0]).unwrap();
    assert!(sweep.rows.iter().all(|r| r.survival.estimate.successes == 0));
}

#[test]
fn pseudo_critical_lands_inside_its_bracket() {
    let s = setup("exp(1)", 25, 12.0, 800, 2);
    let r = pseudo_critical(&s, 0.5, (1.0, 4.0), 0.05, DEFAULT_MAX_ITER).unwrap();
    assert!(r.final_bracket.1 - r.final_bracket.0 <= 0.05);
    assert!(r.final_bracket.0 <= r.lambda && r.lambda <= r.final_bracket.1);
    // A sweep with its master at the bracket's top reproduces the bisection's
    // curve, so it straddles the target at the final bracket.
    let sweep = lambda_sweep(&s, &[1.0, r.final_bracket.0, r.final_bracket.1, 4.0]).unwrap();
    assert!(sweep.is_monotone());
    assert!(sweep.rows[1].survival.estimate.value < 0.5);
    assert!(sweep.rows[2].survival.estimate.value >= 0.5);
}

#[test]
fn invalid_brackets_and_budgets() {
    let s = setup("exp(1)", 10, 5.0, 200, 0);
    assert!(matches!(pseudo_critical(&s, 0.5, (3.0, 6.0), 0.1, 60), Err(Error::BracketInvalid { .. })));
    assert!(matches!(pseudo_critical(&s, 0.5, (0.5, 6.0), 1e-6, 3), Err(Error::NoConvergence(_))));
    assert!(pseudo_critical(&s, 1.5, (0.5, 6.0), 0.1, 60).is_err());
    assert!(lambda_sweep(&s, &[2.0, 1.0]).is_err());
    assert!(lambda_sweep(&s, &[]).is_err());
    let mut bad = s.clone();
    bad.initial = [11].into_iter().collect();
    assert!(survival_probability(&bad, 1.0).is_err());
    let heavy = SurvivalSetup::new(InterarrivalLaw::pareto(0.8, 1.0).unwrap(), 10, 5.0, 10, 0);
    assert!(survival_probability(&heavy, 1.0).is_ok());
}
