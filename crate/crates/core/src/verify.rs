//! Statistical self-checks of the library's guarantees, each producing
//! machine-readable rows of `(estimate, reference, ci)` with a verdict.

use crate::crossings::{self, BoxKind, ConstructionBudget, Scheme, Thresholds};
use crate::distributions::{InterarrivalLaw, LawKind};
use crate::engine::{self, Configuration};
use crate::error::{Error, Result};
use crate::graphical::{LazySample, TauPolicy};
use crate::renewal::{self, TauSpec};
use crate::renorm::{self, FieldRun};
use crate::seeding;
use crate::stats::{self, fmt_prob, fmt_time, Estimate};

/// Outcome of one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Reported quantity with no assertion attached.
    Info,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Info => "info",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub case: String,
    pub estimate: f64,
    pub reference: f64,
    /// Tolerance used by the verdict (three standard errors unless the
    /// case says otherwise).
    pub ci: f64,
    pub n: u64,
    pub verdict: Verdict,
}

impl CheckRow {
    pub const CSV_HEADER: &'static str = "check,case,estimate,reference,ci,n,pass";

    pub fn csv_fields(&self) -> [String; 7] {
        [
            self.check.clone(),
            self.case.clone(),
            fmt_prob(self.estimate),
            fmt_prob(self.reference),
            fmt_prob(self.ci),
            self.n.to_string(),
            self.verdict.as_str().to_string(),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub rows: Vec<CheckRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.verdict != Verdict::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.rows.iter().filter(|r| r.verdict == Verdict::Fail)
    }

    pub fn extend(&mut self, other: VerifyReport) {
        self.rows.extend(other.rows);
    }

    fn push(&mut self, check: &str, case: String, estimate: f64, reference: f64, ci: f64, n: u64, verdict: Verdict) {
        self.rows.push(CheckRow {
            check: check.to_string(),
            case,
            estimate,
            reference,
            ci,
            n,
            verdict,
        });
    }

    fn info(&mut self, check: &str, case: &str, value: f64) {
        self.push(check, case.to_string(), value, f64::NAN, f64::NAN, 0, Verdict::Info);
    }
}

/// Multiples of the law's mean used for the `t` and `k` grids.
pub const DFR_GRID_MULTIPLES: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 5.0];
/// Multiples of the law's mean used for the window `w`.
pub const DFR_W_MULTIPLES: [f64; 3] = [0.05, 0.1, 0.2];

fn tau_label(tau: TauSpec) -> String {
    tau.to_string()
}

/// Conditional chance of a mark right after a mark-free stretch, against
/// the decreasing-hazard bound `F(w) / (1 - F(w))`, on the grid
/// `t, k in DFR_GRID_MULTIPLES * mean`. For exponential laws each cell is
/// also compared with `1 - exp(-rate w)`.
pub fn check_dfr_gap(law: &InterarrivalLaw, w_values: &[f64], n: u64, seed: u64) -> Result<VerifyReport> {
    if w_values.is_empty() {
        return Err(Error::InvalidArgument("need at least one window width".into()));
    }
    let m = law.mean();
    if !m.is_finite() {
        return Err(Error::Unsupported {
            op: "decreasing-hazard grid (scaled by the mean)",
            law: law.to_string(),
        });
    }
    let grid: Vec<f64> = DFR_GRID_MULTIPLES.iter().map(|c| c * m).collect();
    let taus = [TauSpec::Fixed(0.0)];
    let mut report = VerifyReport::default();
    for (wi, &w) in w_values.iter().enumerate() {
        let bound = law.tail_ratio(w)?;
        let cell_seed = seeding::derive(seed, &[0x41, wi as u64]);
        let cells = renewal::conditional_gap_grid(law, &grid, &grid, w, &taus, n, cell_seed, renewal::DEFAULT_ACCEPTANCE_FLOOR)?;
        for c in &cells.cells {
            let e = c.estimate;
            let case = format!("t={} k={} w={} tau={}", fmt_time(c.t), fmt_time(c.k), fmt_time(w), tau_label(c.tau));
            let tol = 3.0 * e.std_err_at(bound);
            report.push("dfr-gap", case.clone(), e.value, bound, tol, e.trials, Verdict::from_bool(e.value <= bound + tol));
            if let LawKind::Exponential { rate } = *law.kind() {
                let exact = -(-rate * w).exp_m1();
                let tol = 3.0 * e.std_err_at(exact);
                report.push(
                    "dfr-gap-exact",
                    case,
                    e.value,
                    exact,
                    tol,
                    e.trials,
                    Verdict::from_bool((e.value - exact).abs() <= tol),
                );
            }
        }
    }
    Ok(report)
}

/// Default widths for [`check_dfr_gap`]: `DFR_W_MULTIPLES * mean`.
pub fn default_dfr_widths(law: &InterarrivalLaw) -> Vec<f64> {
    DFR_W_MULTIPLES.iter().map(|c| c * law.mean()).collect()
}

/// Chance of a mark within `w` after a last mark `v` back: estimate against
/// the exact conditional probability, and against `F(w) / (1 - F(w))` for
/// laws with a decreasing hazard.
pub fn check_last_mark(law: &InterarrivalLaw, v_values: &[f64], w: f64, n: u64, seed: u64) -> Result<VerifyReport> {
    let dfr = law.is_dfr()?.holds();
    let bound = law.tail_ratio(w)?;
    let mut report = VerifyReport::default();
    for (vi, &v) in v_values.iter().enumerate() {
        let s = seeding::derive(seed, &[0x42, vi as u64]);
        let e = renewal::last_mark_estimate(law, v, w, n, s, renewal::DEFAULT_ACCEPTANCE_FLOOR)?;
        let exact = renewal::last_mark_exact(law, v, w);
        let case = format!("v={} w={}", fmt_time(v), fmt_time(w));
        let tol = 3.0 * e.std_err_at(exact);
        report.push("last-mark-exact", case.clone(), e.value, exact, tol, e.trials, Verdict::from_bool((e.value - exact).abs() <= tol));
        let tol = 3.0 * e.std_err_at(bound);
        let verdict = if dfr { Verdict::from_bool(e.value <= bound + tol) } else { Verdict::Info };
        report.push("last-mark-bound", case, e.value, bound, tol, e.trials, verdict);
    }
    Ok(report)
}

/// Finds a gap width for `p0` on one seed and re-estimates the gap
/// probability at that width on an independent seed.
pub fn check_gap(law: &InterarrivalLaw, p0: f64, n: u64, seed: u64) -> Result<VerifyReport> {
    let t_grid = renewal::default_t_grid(law);
    let tau_grid = renewal::default_tau_grid(law);
    let w0 = renewal::find_w0_gap(law, p0, &t_grid, &tau_grid, n, seeding::derive(seed, &[0x43, 0]))?;
    let mut report = VerifyReport::default();
    report.info("gap", "w0", w0);
    let grid = renewal::gap_probability_estimate(law, w0, &t_grid, &tau_grid, n, seeding::derive(seed, &[0x43, 1]))?;
    for c in &grid.cells {
        let e = c.estimate;
        let tol = 3.0 * e.std_err_at(p0);
        let case = format!("t={} tau={} w0={}", fmt_time(c.t), tau_label(c.tau), fmt_time(w0));
        report.push("gap", case, e.value, p0, tol, e.trials, Verdict::from_bool(e.value <= p0 + tol));
    }
    Ok(report)
}

/// Computes the mark-count cap for `p0` and re-estimates the chance of
/// exceeding it on an independent seed.
pub fn check_k0(law: &InterarrivalLaw, b: f64, p0: f64, n: u64, seed: u64) -> Result<VerifyReport> {
    let k0 = renewal::compute_k0(law, b, p0, n, seeding::derive(seed, &[0x44, 0]), renewal::DEFAULT_K0_CAP)?;
    let mut report = VerifyReport::default();
    report.info("k0", "K0", k0 as f64);
    let t_grid = renewal::default_t_grid(law);
    let tau_grid = renewal::default_tau_grid(law);
    let grid = renewal::mark_count_tail_estimate(law, b, k0, &t_grid, &tau_grid, n, seeding::derive(seed, &[0x44, 1]))?;
    for c in &grid.cells {
        let e = c.estimate;
        let tol = 3.0 * e.std_err_at(p0);
        let case = format!("t={} tau={} K0={k0}", fmt_time(c.t), tau_label(c.tau));
        report.push("k0", case, e.value, p0, tol, e.trials, Verdict::from_bool(e.value <= p0 + tol));
    }
    Ok(report)
}

/// The threshold construction for `law`: bounded support on `[0, b]` when
/// `scheme` is bounded, decreasing hazard otherwise.
pub fn construct(law: &InterarrivalLaw, scheme: Scheme, eps: f64, budget: ConstructionBudget) -> Result<Thresholds> {
    match scheme {
        Scheme::Bounded { b } => crossings::construct_bounded(law, b, eps, budget),
        Scheme::Dfr => crossings::construct_dfr(law, eps, budget),
    }
}

/// The natural scheme for a law: bounded for uniform laws, decreasing
/// hazard for laws that have one.
pub fn default_scheme(law: &InterarrivalLaw) -> Result<Scheme> {
    if let LawKind::UniformBounded { b } = *law.kind() {
        return Ok(Scheme::Bounded { b });
    }
    if law.is_dfr()?.holds() {
        return Ok(Scheme::Dfr);
    }
    Err(Error::Unsupported {
        op: "crossing thresholds (needs bounded support or a decreasing hazard)",
        law: law.to_string(),
    })
}

fn threshold_rows(report: &mut VerifyReport, check: &str, th: &Thresholds) {
    report.info(check, "p0", th.p0);
    report.info(check, "w0", th.w0);
    report.info(check, "a0", th.a0);
    report.info(check, "lambda_h", th.lambda_h);
    report.info(check, "p_vertical", th.p_vertical);
    if let Some(k0) = th.k0 {
        report.info(check, "K0", k0 as f64);
    }
    report.info(check, "w_vertical", th.w_vertical);
    report.info(check, "v_vertical", th.v_vertical);
    report.info(check, "u", th.u);
    report.info(check, "lambda_v", th.lambda_v);
}

/// Crossing-threshold check options.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingCheck {
    pub scheme: Scheme,
    pub eps: f64,
    /// Replicas per grid cell.
    pub n: u64,
    /// Replicas per Monte Carlo step of the threshold construction.
    pub n_construct: u64,
    pub t_grid: Vec<f64>,
    pub tau_policies: Vec<TauPolicy>,
    pub seed: u64,
}

impl CrossingCheck {
    pub fn new(law: &InterarrivalLaw, eps: f64, n: u64, seed: u64) -> Result<Self> {
        let mut tau_policies = vec![TauPolicy::AllZero];
        if law.mean().is_finite() {
            tau_policies.push(TauPolicy::Stationary);
        }
        Ok(Self {
            scheme: default_scheme(law)?,
            eps,
            n,
            n_construct: n,
            t_grid: renewal::default_t_grid(law),
            tau_policies,
            seed,
        })
    }
}

/// Builds both thresholds and checks that horizontal and vertical boxes are
/// crossed with probability at least `1 - eps` at every grid cell.
pub fn check_crossing(law: &InterarrivalLaw, opts: &CrossingCheck) -> Result<VerifyReport> {
    let budget = ConstructionBudget {
        n: opts.n_construct,
        seed: seeding::derive(opts.seed, &[0x45, 0]),
    };
    let th = construct(law, opts.scheme, opts.eps, budget)?;
    let mut report = VerifyReport::default();
    threshold_rows(&mut report, "crossing", &th);
    let target = 1.0 - opts.eps;
    for (kind, lambda) in [(BoxKind::Horizontal, th.lambda_h), (BoxKind::Vertical, th.lambda_v)] {
        for (pi, policy) in opts.tau_policies.iter().enumerate() {
            let s = seeding::derive(opts.seed, &[0x45, 1 + kind as u64, pi as u64]);
            let r = crossings::estimate_crossing(law, lambda, kind, opts.scheme, &opts.t_grid, policy, opts.n, s)?;
            for c in &r.cells {
                let e = c.estimate;
                let tol = 3.0 * e.std_err_at(target);
                let case = format!("{kind} {} lambda={} t={} tau={policy}", opts.scheme, fmt_time(lambda), fmt_time(c.t));
                report.push("crossing", case, e.value, target, tol, e.trials, Verdict::from_bool(e.value >= target - tol));
            }
        }
    }
    Ok(report)
}

/// Block-field check options.
#[derive(Debug, Clone, PartialEq)]
pub struct BlocksCheck {
    pub eps: f64,
    pub n_cols: usize,
    pub n_rows: usize,
    pub depth: usize,
    /// Required fraction of percolating fields.
    pub percolation_target: f64,
    pub n: u64,
    pub n_construct: u64,
    pub seed: u64,
    /// Use this rate instead of the constructed one.
    pub lambda: Option<f64>,
}

/// Dependent block fields at the constructed rate: percolation frequency,
/// per-edge open frequencies against `1 - eps`, and correlations of edge
/// pairs whose boxes are at least `b` apart in time against zero.
pub fn check_blocks(law: &InterarrivalLaw, opts: &BlocksCheck) -> Result<VerifyReport> {
    let Scheme::Bounded { b } = default_scheme(law)? else {
        return Err(Error::Unsupported {
            op: "block check (bounded scheme)",
            law: law.to_string(),
        });
    };
    let scheme = Scheme::Bounded { b };
    let mut report = VerifyReport::default();
    let lambda = match opts.lambda {
        Some(l) => l,
        None => {
            let budget = ConstructionBudget {
                n: opts.n_construct,
                seed: seeding::derive(opts.seed, &[0x46, 0]),
            };
            let th = construct(law, scheme, opts.eps, budget)?;
            threshold_rows(&mut report, "blocks", &th);
            th.lambda_max()
        }
    };
    report.info("blocks", "lambda", lambda);
    let run = FieldRun::new(law.clone(), lambda, scheme, opts.n_cols, opts.n_rows);
    let fields = run.fields(opts.n, seeding::derive(opts.seed, &[0x46, 1]))?;
    let perc = fields
        .iter()
        .map(|f| renorm::percolates(f, opts.depth))
        .collect::<Result<Vec<bool>>>()?;
    let hits = perc.iter().filter(|&&p| p).count() as u64;
    let e = Estimate::from_counts(hits, opts.n);
    report.push(
        "blocks-percolation",
        format!("{}x{} depth={}", opts.n_cols, opts.n_rows, opts.depth),
        e.value,
        opts.percolation_target,
        0.0,
        opts.n,
        Verdict::from_bool(e.value >= opts.percolation_target),
    );
    let dep = renorm::dependency_report(&fields, run.geometry, &renorm::default_pairs(opts.n_cols, opts.n_rows))?;
    let target = 1.0 - opts.eps;
    let mut worst: Option<&renorm::MarginalRow> = None;
    let mut bad = 0u64;
    for m in &dep.marginals {
        let tol = 3.0 * m.estimate.std_err_at(target);
        if m.estimate.value < target - tol {
            bad += 1;
        }
        if worst.is_none_or(|w| m.estimate.value < w.estimate.value) {
            worst = Some(m);
        }
    }
    if let Some(w) = worst {
        let tol = 3.0 * w.estimate.std_err_at(target);
        report.push(
            "blocks-marginal",
            format!("min over {} edges at {} ({}, {})", dep.marginals.len(), w.kind, w.x, w.y),
            w.estimate.value,
            target,
            tol,
            opts.n,
            Verdict::from_bool(bad == 0),
        );
    }
    for c in &dep.correlations {
        let case = format!(
            "{} ({}, {}) vs {} ({}, {}) gap={}",
            c.a.0,
            c.a.1,
            c.a.2,
            c.b.0,
            c.b.1,
            c.b.2,
            fmt_time(c.time_gap)
        );
        // A pair with a constant edge has no sample correlation. It is
        // reported as NaN and carries no evidence either way.
        let verdict = if c.time_gap >= b && c.correlation.is_some() {
            Verdict::from_bool(!c.flagged)
        } else {
            Verdict::Info
        };
        let value = c.correlation.unwrap_or(f64::NAN);
        report.push("blocks-correlation", case, value, 0.0, 3.0 * c.sigma, opts.n, verdict);
    }
    Ok(report)
}

/// Extinction by time `c` for the deterministic law with all clocks at 0.
pub fn check_degenerate(c: f64, lambdas: &[f64], half_width: i64, n: u64, seed: u64) -> Result<VerifyReport> {
    let law = InterarrivalLaw::deterministic(c)?;
    let initial: Configuration = [0].into_iter().collect();
    let mut report = VerifyReport::default();
    for (li, &lambda) in lambdas.iter().enumerate() {
        LazySample::new(&law, lambda, half_width, 2.0 * c, &TauPolicy::AllZero, seed)?;
        let ok = stats::count(n, |i| {
            let s = stats::replica_seed(seed, &[0x47, li as u64], i);
            let out = engine::extinction_time(&law, lambda, half_width, 2.0 * c, &initial, &TauPolicy::AllZero, s, false)
                .expect("validated");
            out.extinction_time.is_some_and(|t| t <= c)
        });
        let e = Estimate::from_counts(ok, n);
        report.push(
            "degenerate",
            format!("det({c}) lambda={}", fmt_time(lambda)),
            e.value,
            1.0,
            0.0,
            n,
            Verdict::from_bool(ok == n),
        );
    }
    Ok(report)
}

/// Window and replica count shared by the pathwise checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathwiseCheck {
    pub half_width: i64,
    pub horizon: f64,
    pub n: u64,
    pub seed: u64,
}

/// Thinned pairs: the infected set at `lambda_low` stays inside the one at
/// `lambda_high` at every event time.
pub fn check_coupling(law: &InterarrivalLaw, lambda_low: f64, lambda_high: f64, opts: PathwiseCheck) -> Result<VerifyReport> {
    let initial: Configuration = [0].into_iter().collect();
    LazySample::new(law, lambda_high, opts.half_width, opts.horizon, &TauPolicy::AllZero, opts.seed)?.thinned(lambda_low, 0)?;
    let violations: Vec<usize> = stats::replicate(opts.n, |i| {
        let s = stats::replica_seed(opts.seed, &[0x48], i);
        let big = LazySample::new(law, lambda_high, opts.half_width, opts.horizon, &TauPolicy::AllZero, s).expect("validated");
        let small = big.thinned(lambda_low, seeding::derive(s, &[0x48])).expect("validated");
        let (_, tb) = engine::evolve_traced(&big, &initial).expect("validated");
        let (_, ts) = engine::evolve_traced(&small, &initial).expect("validated");
        engine::subset_violations(&ts, &tb)
    });
    let total: usize = violations.iter().sum();
    let mut report = VerifyReport::default();
    report.push(
        "coupling",
        format!("{law} lambda {} within {}", fmt_time(lambda_low), fmt_time(lambda_high)),
        total as f64,
        0.0,
        0.0,
        opts.n,
        Verdict::from_bool(total == 0),
    );
    Ok(report)
}

/// Shared samples: the run from `A ∪ B` equals the union of the runs from
/// `A` and `B` at every event time.
pub fn check_additivity(
    law: &InterarrivalLaw,
    lambda: f64,
    a: &Configuration,
    b: &Configuration,
    opts: PathwiseCheck,
) -> Result<VerifyReport> {
    let union: Configuration = a.union(b).copied().collect();
    LazySample::new(law, lambda, opts.half_width, opts.horizon, &TauPolicy::AllZero, opts.seed)?;
    let mismatches: Vec<usize> = stats::replicate(opts.n, |i| {
        let s = stats::replica_seed(opts.seed, &[0x49], i);
        let sample = LazySample::new(law, lambda, opts.half_width, opts.horizon, &TauPolicy::AllZero, s).expect("validated");
        let (_, ta) = engine::evolve_traced(&sample, a).expect("validated");
        let (_, tb) = engine::evolve_traced(&sample, b).expect("validated");
        let (_, tu) = engine::evolve_traced(&sample, &union).expect("validated");
        engine::union_mismatches(&ta, &tb, &tu)
    });
    let total: usize = mismatches.iter().sum();
    let mut report = VerifyReport::default();
    report.push(
        "additivity",
        format!("{law} lambda={}", fmt_time(lambda)),
        total as f64,
        0.0,
        0.0,
        opts.n,
        Verdict::from_bool(total == 0),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_gap_is_memoryless() {
        let law = InterarrivalLaw::exponential(1.0).unwrap();
        let r = check_dfr_gap(&law, &[0.1], 4000, 3).unwrap();
        assert_eq!(r.rows.len(), 2 * 25);
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn last_mark_matches_exact() {
        let law = InterarrivalLaw::weibull(0.7, 1.0).unwrap();
        let r = check_last_mark(&law, &[0.0, 0.5, 2.0], 0.2, 20_000, 1).unwrap();
        assert!(r.passed());
        assert!(r.rows.iter().all(|row| row.verdict != Verdict::Info));
    }

    #[test]
    fn degenerate_and_pathwise() {
        assert!(check_degenerate(1.0, &[1.0, 10.0], 10, 200, 2).unwrap().passed());
        let law = InterarrivalLaw::exponential(1.0).unwrap();
        let opts = PathwiseCheck {
            half_width: 20,
            horizon: 10.0,
            n: 50,
            seed: 4,
        };
        assert!(check_coupling(&law, 1.0, 2.0, opts).unwrap().passed());
        let a = [0].into_iter().collect();
        let b = [3].into_iter().collect();
        assert!(check_additivity(&law, 2.0, &a, &b, opts).unwrap().passed());
    }

    #[test]
    fn schemes_follow_the_law() {
        let u = InterarrivalLaw::uniform(2.0).unwrap();
        assert_eq!(default_scheme(&u).unwrap(), Scheme::Bounded { b: 2.0 });
        let w = InterarrivalLaw::weibull(0.7, 1.0).unwrap();
        assert_eq!(default_scheme(&w).unwrap(), Scheme::Dfr);
        assert!(default_scheme(&InterarrivalLaw::deterministic(1.0).unwrap()).is_err());
    }

    #[test]
    fn csv_fields_are_formatted() {
        let row = CheckRow {
            check: "x".into(),
            case: "c".into(),
            estimate: 0.123_456_789,
            reference: 0.5,
            ci: 0.01,
            n: 10,
            verdict: Verdict::Pass,
        };
        assert_eq!(row.csv_fields()[2], "0.123457");
        assert_eq!(row.csv_fields()[6], "pass");
    }
}
