//! Finite-window survival probabilities, coupled sweeps over the infection
//! rate and a bisection for the rate at which survival crosses a target.
//!
//! All estimates at different rates share randomness: replica `i` builds one
//! master sample at the largest rate of interest and thins its arrows down
//! to each probed rate, so every replica's survival indicator is
//! nondecreasing in the rate.

use crate::distributions::InterarrivalLaw;
use crate::engine::{self, Configuration};
use crate::error::{Error, Result};
use crate::graphical::{LazySample, TauPolicy};
use crate::seeding;
use crate::stats::{self, Estimate};

const OP_SURVIVAL: u64 = 0x31;
const THIN_KEY: u64 = 0x7468;

/// Width of the survival interval, in standard errors.
pub const WILSON_Z: f64 = 1.0;

/// Setup shared by every survival estimate: law, window, start and replica
/// count.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalSetup {
    pub law: InterarrivalLaw,
    pub half_width: i64,
    pub horizon: f64,
    pub initial: Configuration,
    pub tau_policy: TauPolicy,
    pub n: u64,
    pub seed: u64,
}

impl SurvivalSetup {
    /// Origin start, all clocks started at zero.
    pub fn new(law: InterarrivalLaw, half_width: i64, horizon: f64, n: u64, seed: u64) -> Self {
        Self {
            law,
            half_width,
            horizon,
            initial: [0].into_iter().collect(),
            tau_policy: TauPolicy::AllZero,
            n,
            seed,
        }
    }

    pub fn initial_descriptor(&self) -> String {
        self.initial.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";")
    }

    fn validate(&self, lambda_max: f64) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("need at least one replica".into()));
        }
        if self.initial.is_empty() || self.initial.iter().any(|s| s.abs() > self.half_width) {
            return Err(Error::InvalidArgument(format!(
                "initial set {{{}}} must be nonempty and inside [-{l}, {l}]",
                self.initial_descriptor(),
                l = self.half_width
            )));
        }
        LazySample::new(&self.law, lambda_max, self.half_width, self.horizon, &self.tau_policy, self.seed)
            .map(|_| ())
    }

    /// Master sample of replica `i`.
    fn master(&self, lambda_max: f64, i: u64) -> LazySample {
        let s = stats::replica_seed(self.seed, &[OP_SURVIVAL], i);
        LazySample::new(&self.law, lambda_max, self.half_width, self.horizon, &self.tau_policy, s)
            .expect("validated setup")
    }

    fn survives(&self, master: &LazySample, lambda: f64) -> bool {
        let run = |p: &LazySample| engine::evolve(p, &self.initial, false).expect("validated start").survived;
        if lambda >= master.lambda() {
            run(master)
        } else {
            let thin_seed = seeding::derive(master.seed(), &[THIN_KEY]);
            run(&master.thinned(lambda, thin_seed).expect("rate below master"))
        }
    }

    /// Survival indicators of every replica at each rate in `lambdas`,
    /// all thinned from a master at `lambda_max`. Row `j` holds rate `j`.
    fn indicators(&self, lambda_max: f64, lambdas: &[f64]) -> Vec<Vec<bool>> {
        let per_replica = stats::replicate(self.n, |i| {
            let master = self.master(lambda_max, i);
            lambdas.iter().map(|&l| self.survives(&master, l)).collect::<Vec<bool>>()
        });
        (0..lambdas.len())
            .map(|j| per_replica.iter().map(|row| row[j]).collect())
            .collect()
    }
}

/// Survival fraction with its Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalEstimate {
    pub estimate: Estimate,
    pub lo: f64,
    pub hi: f64,
}

impl SurvivalEstimate {
    fn from_counts(successes: u64, trials: u64) -> Self {
        let estimate = Estimate::from_counts(successes, trials);
        let (lo, hi) = estimate.wilson(WILSON_Z);
        Self { estimate, lo, hi }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

/// Fraction of replicas still infected at the horizon.
pub fn survival_probability(setup: &SurvivalSetup, lambda: f64) -> Result<SurvivalEstimate> {
    setup.validate(lambda)?;
    let alive = stats::count(setup.n, |i| setup.survives(&setup.master(lambda, i), lambda));
    Ok(SurvivalEstimate::from_counts(alive, setup.n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub survival: SurvivalEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub law: String,
    pub half_width: i64,
    pub horizon: f64,
    pub initial: String,
    pub tau_policy: String,
    pub n: u64,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub const CSV_HEADER: &'static str = "law,L,T,initial,tau_policy,n,seed,lambda,survival,ci_lo,ci_hi,ci_halfwidth";

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    self.law.clone(),
                    self.half_width.to_string(),
                    stats::fmt_time(self.horizon),
                    self.initial.clone(),
                    self.tau_policy.clone(),
                    self.n.to_string(),
                    self.seed.to_string(),
                    stats::fmt_time(r.lambda),
                    stats::fmt_prob(r.survival.estimate.value),
                    stats::fmt_prob(r.survival.lo),
                    stats::fmt_prob(r.survival.hi),
                    stats::fmt_prob(r.survival.half_width()),
                ]
            })
            .collect()
    }

    /// Whether the estimates never decrease along the grid.
    pub fn is_monotone(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[0].survival.estimate.successes <= w[1].survival.estimate.successes)
    }
}

/// Survival estimates over a strictly increasing rate grid, thinned from a
/// master sample at the largest rate.
pub fn lambda_sweep(setup: &SurvivalSetup, lambda_grid: &[f64]) -> Result<SweepResult> {
    let &lambda_max = lambda_grid
        .last()
        .ok_or_else(|| Error::InvalidArgument("empty rate grid".into()))?;
    if lambda_grid.windows(2).any(|w| !(w[0] < w[1])) || !(lambda_grid[0] >= 0.0) {
        return Err(Error::InvalidArgument(
            "rate grid must be nonnegative and strictly increasing".into(),
        ));
    }
    setup.validate(lambda_max)?;
    let rows = setup
        .indicators(lambda_max, lambda_grid)
        .into_iter()
        .zip(lambda_grid)
        .map(|(alive, &lambda)| SweepRow {
            lambda,
            survival: SurvivalEstimate::from_counts(alive.iter().filter(|&&a| a).count() as u64, setup.n),
        })
        .collect();
    Ok(SweepResult {
        law: setup.law.to_string(),
        half_width: setup.half_width,
        horizon: setup.horizon,
        initial: setup.initial_descriptor(),
        tau_policy: setup.tau_policy.to_string(),
        n: setup.n,
        seed: setup.seed,
        rows,
    })
}

pub const DEFAULT_MAX_ITER: u32 = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalResult {
    pub law: String,
    pub half_width: i64,
    pub horizon: f64,
    pub n: u64,
    pub seed: u64,
    pub target: f64,
    pub bracket: (f64, f64),
    pub tol: f64,
    /// Bracket after the last bisection step.
    pub final_bracket: (f64, f64),
    pub iterations: u32,
    pub lambda: f64,
}

impl CriticalResult {
    pub const CSV_HEADER: &'static str =
        "law,L,T,n,seed,target,bracket_lo,bracket_hi,tol,iterations,final_lo,final_hi,lambda_hat";

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.law.clone(),
            self.half_width.to_string(),
            stats::fmt_time(self.horizon),
            self.n.to_string(),
            self.seed.to_string(),
            stats::fmt_prob(self.target),
            stats::fmt_time(self.bracket.0),
            stats::fmt_time(self.bracket.1),
            stats::fmt_time(self.tol),
            self.iterations.to_string(),
            stats::fmt_time(self.final_bracket.0),
            stats::fmt_time(self.final_bracket.1),
            stats::fmt_time(self.lambda),
        ]
    }
}

/// Bisects the coupled survival curve for the rate at which it crosses
/// `target`, stopping once the bracket is narrower than `tol`.
pub fn pseudo_critical(
    setup: &SurvivalSetup,
    target: f64,
    bracket: (f64, f64),
    tol: f64,
    max_iter: u32,
) -> Result<CriticalResult> {
    let (lo0, hi0) = bracket;
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument(format!("target must lie in (0, 1), got {target}")));
    }
    if !(lo0 >= 0.0 && lo0 < hi0 && hi0.is_finite()) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= lo < hi and tol > 0, got [{lo0}, {hi0}] and {tol}"
        )));
    }
    setup.validate(hi0)?;
    let masters: Vec<LazySample> = stats::replicate(setup.n, |i| setup.master(hi0, i));
    let fraction = |lambda: f64| -> f64 {
        let alive = stats::count(setup.n, |i| setup.survives(&masters[i as usize], lambda));
        alive as f64 / setup.n as f64
    };
    let (f_lo, f_hi) = (fraction(lo0), fraction(hi0));
    if !(f_lo < target && target < f_hi) {
        return Err(Error::BracketInvalid {
            lo_estimate: f_lo,
            hi_estimate: f_hi,
            target,
        });
    }
    let (mut lo, mut hi) = (lo0, hi0);
    let mut iterations = 0;
    while hi - lo > tol {
        if iterations == max_iter {
            return Err(Error::NoConvergence(format!(
                "bracket [{lo}, {hi}] still wider than {tol} after {max_iter} bisections"
            )));
        }
        let mid = 0.5 * (lo + hi);
        if fraction(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(CriticalResult {
        law: setup.law.to_string(),
        half_width: setup.half_width,
        horizon: setup.horizon,
        n: setup.n,
        seed: setup.seed,
        target,
        bracket,
        tol,
        final_bracket: (lo, hi),
        iterations,
        lambda: 0.5 * (lo + hi),
    })
}
