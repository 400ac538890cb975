//! Renewal trains of cure marks and Monte Carlo estimators of their
//! proximity, count and gap probabilities.
//!
//! Estimators take a master seed rather than a live generator; replica `i`
//! of cell `c` draws from its own derived stream, so results do not depend
//! on how replicas are scheduled across threads.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::distributions::InterarrivalLaw;
use crate::error::{Error, Result};
use crate::stats::{self, Estimate};

/// How the renewal process is started before time 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauSpec {
    /// The process has an epoch at `tau <= 0` and renews from there.
    Fixed(f64),
    /// The process is in equilibrium at time 0: the interval straddling 0
    /// is length-biased and 0 falls uniformly inside it.
    Stationary,
}

impl TauSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TauSpec::Fixed(t) if !(t <= 0.0 && t.is_finite()) => Err(Error::InvalidParameter(
                format!("start offset must be finite and nonpositive, got {t}"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for TauSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauSpec::Fixed(t) => write!(f, "{t}"),
            TauSpec::Stationary => f.write_str("stationary"),
        }
    }
}

impl FromStr for TauSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "stationary" {
            return Ok(TauSpec::Stationary);
        }
        let t: f64 = s
            .parse()
            .map_err(|e| Error::Parse(format!("start offset {s:?}: {e}")))?;
        let spec = TauSpec::Fixed(t);
        spec.validate()?;
        Ok(spec)
    }
}

/// Epochs of a renewal process strictly after its start, in increasing
/// order. The first few may be negative when the start offset is.
#[derive(Debug)]
pub struct Epochs<'a, R: Rng + ?Sized> {
    law: &'a InterarrivalLaw,
    rng: &'a mut R,
    next: f64,
    tau: f64,
}

impl<'a, R: Rng + ?Sized> Epochs<'a, R> {
    /// Draws the start of the process and returns the epoch iterator.
    pub fn start(law: &'a InterarrivalLaw, spec: TauSpec, rng: &'a mut R) -> Result<Self> {
        spec.validate()?;
        let (tau, next) = match spec {
            TauSpec::Fixed(tau) => {
                let x = law.sample(rng);
                (tau, tau + x)
            }
            TauSpec::Stationary => {
                let len = law.sample_length_biased(rng)?;
                let u: f64 = rng.random();
                (-u * len, (1.0 - u) * len)
            }
        };
        Ok(Self { law, rng, next, tau })
    }

    /// The epoch at which the process was started.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn peek(&self) -> f64 {
        self.next
    }
}

impl<R: Rng + ?Sized> Iterator for Epochs<'_, R> {
    type Item = f64;
    fn next(&mut self) -> Option<f64> {
        let cur = self.next;
        self.next = cur + self.law.sample(self.rng);
        Some(cur)
    }
}

/// The cure marks of one site on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalTrain {
    site: i64,
    tau: f64,
    anchor: f64,
    marks: Vec<f64>,
    horizon: f64,
}

impl RenewalTrain {
    /// Assembles a train from explicit data, checking every invariant.
    ///
    /// `anchor` is the last epoch before time 0 (or `tau` when there is
    /// none); it is what [`last_mark_age`](Self::last_mark_age) reports
    /// from before the first mark.
    pub fn from_parts(site: i64, tau: f64, anchor: f64, marks: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        if !(tau <= 0.0) || !(anchor >= tau && anchor <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need tau <= anchor <= 0, got tau {tau}, anchor {anchor}"
            )));
        }
        if marks.iter().any(|m| !(0.0..=horizon).contains(m)) {
            return Err(Error::InvalidParameter("marks must lie in [0, horizon]".into()));
        }
        if marks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("marks must be strictly increasing".into()));
        }
        Ok(Self {
            site,
            tau,
            anchor,
            marks,
            horizon,
        })
    }

    /// Convenience constructor for hand-built trains with `tau = 0`.
    pub fn with_marks(site: i64, marks: Vec<f64>, horizon: f64) -> Result<Self> {
        Self::from_parts(site, 0.0, 0.0, marks, horizon)
    }

    pub fn site(&self) -> i64 {
        self.site
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn anchor(&self) -> f64 {
        self.anchor
    }
    pub fn marks(&self) -> &[f64] {
        &self.marks
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// First mark strictly after `t`.
    pub fn next_after(&self, t: f64) -> Option<f64> {
        let i = self.marks.partition_point(|&m| m <= t);
        self.marks.get(i).copied()
    }

    /// First mark at or after `t`.
    pub fn next_at_or_after(&self, t: f64) -> Option<f64> {
        let i = self.marks.partition_point(|&m| m < t);
        self.marks.get(i).copied()
    }

    /// Number of marks in the closed interval `[a, b]`.
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        if b < a {
            return 0;
        }
        self.marks.partition_point(|&m| m <= b) - self.marks.partition_point(|&m| m < a)
    }

    /// Time since the last mark at or before `t`, measured from the
    /// process start when there is none.
    pub fn last_mark_age(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::OutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let i = self.marks.partition_point(|&m| m <= t);
        let last = if i == 0 { self.anchor } else { self.marks[i - 1] };
        Ok(t - last)
    }
}

/// Generates the marks of a renewal process on `[0, horizon]`.
pub fn generate_train<R: Rng + ?Sized>(
    law: &InterarrivalLaw,
    start: TauSpec,
    horizon: f64,
    site: i64,
    rng: &mut R,
) -> Result<RenewalTrain> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let mut epochs = Epochs::start(law, start, rng)?;
    let tau = epochs.tau();
    let mut anchor = tau;
    let mut marks: Vec<f64> = Vec::new();
    for e in epochs.by_ref() {
        if e > horizon {
            break;
        }
        if e < 0.0 {
            anchor = e;
        } else if marks.last() != Some(&e) {
            marks.push(e);
        }
    }
    Ok(RenewalTrain {
        site,
        tau,
        anchor,
        marks,
        horizon,
    })
}

/// One cell of a grid report.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub t: f64,
    /// Length of the conditioning window, where the estimator has one.
    pub k: f64,
    pub w: f64,
    pub tau: TauSpec,
    pub estimate: Estimate,
}

/// Estimates over a finite grid together with their maximum, a numeric
/// surrogate for a supremum over all times and starts.
#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub cells: Vec<GridCell>,
}

impl GridReport {
    /// Largest estimate on the grid.
    pub fn grid_max(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.estimate.value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest estimate on the grid.
    pub fn grid_min(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.estimate.value)
            .fold(f64::INFINITY, f64::min)
    }

    pub const CSV_HEADER: &'static str = "t,k,w,tau,estimate,ci,n,acceptance";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                stats::fmt_time(c.t),
                stats::fmt_time(c.k),
                stats::fmt_time(c.w),
                c.tau,
                stats::fmt_prob(c.estimate.value),
                stats::fmt_prob(c.estimate.std_err),
                c.estimate.trials,
                stats::fmt_prob(c.estimate.acceptance_rate()),
            ));
        }
        out
    }
}

/// Default time grid `{0, 0.25 m, ..., 5 m}` with `m` the law's mean.
pub fn default_t_grid(law: &InterarrivalLaw) -> Vec<f64> {
    let m = finite_scale(law);
    (0..=20).map(|i| i as f64 * 0.25 * m).collect()
}

/// Default start grid `{0, -0.5 m, -2 m, stationary}`; the stationary start
/// is dropped for laws without a finite mean.
pub fn default_tau_grid(law: &InterarrivalLaw) -> Vec<TauSpec> {
    let m = finite_scale(law);
    let mut v = vec![TauSpec::Fixed(0.0), TauSpec::Fixed(-0.5 * m), TauSpec::Fixed(-2.0 * m)];
    if law.mean().is_finite() {
        v.push(TauSpec::Stationary);
    }
    v
}

/// The mean, or the median when the mean is infinite.
fn finite_scale(law: &InterarrivalLaw) -> f64 {
    let m = law.mean();
    if m.is_finite() {
        m
    } else {
        law.quantile(0.5).unwrap_or(1.0)
    }
}

mod op {
    pub const GAP: u64 = 1;
    pub const COND_GAP: u64 = 2;
    pub const COUNT_TAIL: u64 = 3;
    pub const K0: u64 = 4;
    pub const PROXIMITY: u64 = 5;
    pub const NEAREST: u64 = 6;
    pub const LAST_MARK: u64 = 7;
}

fn check_grids(t_grid: &[f64], tau_grid: &[TauSpec]) -> Result<()> {
    if t_grid.is_empty() || tau_grid.is_empty() {
        return Err(Error::InvalidArgument("time and start grids must be nonempty".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument(format!("grid time {t} must be finite and nonnegative")));
    }
    tau_grid.iter().try_for_each(TauSpec::validate)
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidArgument("replica count must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Whether a train started per `tau` has a mark (a nonnegative epoch) in
/// `[a, b]`.
fn has_mark_in<R: Rng + ?Sized>(law: &InterarrivalLaw, tau: TauSpec, a: f64, b: f64, rng: &mut R) -> Result<bool> {
    let a = a.max(0.0);
    for e in Epochs::start(law, tau, rng)? {
        if e > b {
            return Ok(false);
        }
        if e >= a {
            return Ok(true);
        }
    }
    unreachable!()
}

/// Probability that the train has a mark in `[t - w, t + w]`, per grid cell.
pub fn gap_probability_estimate(
    law: &InterarrivalLaw,
    w: f64,
    t_grid: &[f64],
    tau_grid: &[TauSpec],
    n: u64,
    seed: u64,
) -> Result<GridReport> {
    check_grids(t_grid, tau_grid)?;
    check_n(n)?;
    if !(w > 0.0) {
        return Err(Error::InvalidArgument(format!("w must be positive, got {w}")));
    }
    let mut cells = Vec::new();
    for (ci, (&t, &tau)) in cartesian(t_grid, tau_grid).enumerate() {
        let path = [op::GAP, ci as u64];
        let hits = stats::count(n, |i| {
            let mut rng = stats::replica_rng(seed, &path, i);
            has_mark_in(law, tau, t - w, t + w, &mut rng).expect("validated start")
        });
        cells.push(GridCell {
            t,
            k: 0.0,
            w,
            tau,
            estimate: Estimate::from_counts(hits, n),
        });
    }
    Ok(GridReport { cells })
}

fn cartesian<'a, A, B>(a: &'a [A], b: &'a [B]) -> impl Iterator<Item = (&'a A, &'a B)> {
    a.iter().flat_map(move |x| b.iter().map(move |y| (x, y)))
}

/// Default lower bound on the acceptance rate of rejection samplers.
pub const DEFAULT_ACCEPTANCE_FLOOR: f64 = 1e-4;

fn check_acceptance(accepted: u64, proposals: u64, floor: f64) -> Result<()> {
    let rate = accepted as f64 / proposals as f64;
    if accepted == 0 || rate < floor {
        Err(Error::InsufficientConditioning { rate, floor })
    } else {
        Ok(())
    }
}

/// Probability of a mark in `[t + k, t + k + w]` given no mark in
/// `[t, t + k]`, by rejection over `n` proposals.
///
/// `trials` in the returned estimate counts accepted proposals and
/// `proposals` counts all of them.
pub fn conditional_gap_estimate_dfr(
    law: &InterarrivalLaw,
    t: f64,
    k: f64,
    w: f64,
    tau: TauSpec,
    n: u64,
    seed: u64,
    floor: f64,
) -> Result<Estimate> {
    conditional_gap_cell(law, t, k, w, tau, n, seed, floor, 0)
}

#[allow(clippy::too_many_arguments)]
fn conditional_gap_cell(
    law: &InterarrivalLaw,
    t: f64,
    k: f64,
    w: f64,
    tau: TauSpec,
    n: u64,
    seed: u64,
    floor: f64,
    cell: u64,
) -> Result<Estimate> {
    if !law.is_absolutely_continuous() {
        return Err(Error::Unsupported {
            op: "conditional gap estimate",
            law: law.to_string(),
        });
    }
    check_n(n)?;
    tau.validate()?;
    if !(t >= 0.0 && k >= 0.0 && w > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need t >= 0, k >= 0, w > 0; got t={t}, k={k}, w={w}"
        )));
    }
    let path = [op::COND_GAP, cell];
    // 0 = rejected, 1 = accepted without a mark, 2 = accepted with a mark.
    let outcomes = stats::replicate(n, |i| {
        let mut rng = stats::replica_rng(seed, &path, i);
        let mut epochs = Epochs::start(law, tau, &mut rng).expect("validated start");
        let first = epochs.find(|&e| e >= t).expect("infinite iterator");
        if first <= t + k {
            0u8
        } else if first <= t + k + w {
            2
        } else {
            1
        }
    });
    let accepted = outcomes.iter().filter(|&&o| o > 0).count() as u64;
    let hits = outcomes.iter().filter(|&&o| o == 2).count() as u64;
    check_acceptance(accepted, n, floor)?;
    Ok(Estimate::conditional(hits, accepted, n))
}

/// [`conditional_gap_estimate_dfr`] over a `(t, k, tau)` grid.
#[allow(clippy::too_many_arguments)]
pub fn conditional_gap_grid(
    law: &InterarrivalLaw,
    t_grid: &[f64],
    k_grid: &[f64],
    w: f64,
    tau_grid: &[TauSpec],
    n: u64,
    seed: u64,
    floor: f64,
) -> Result<GridReport> {
    check_grids(t_grid, tau_grid)?;
    check_grids(k_grid, tau_grid)?;
    let mut cells = Vec::new();
    let mut ci = 0u64;
    for &t in t_grid {
        for &k in k_grid {
            for &tau in tau_grid {
                let estimate = conditional_gap_cell(law, t, k, w, tau, n, seed, floor, ci)?;
                cells.push(GridCell { t, k, w, tau, estimate });
                ci += 1;
            }
        }
    }
    Ok(GridReport { cells })
}

/// Probability that the train has more than `big_k` marks in `[t, t + 3b]`.
pub fn mark_count_tail_estimate(
    law: &InterarrivalLaw,
    b: f64,
    big_k: u64,
    t_grid: &[f64],
    tau_grid: &[TauSpec],
    n: u64,
    seed: u64,
) -> Result<GridReport> {
    check_grids(t_grid, tau_grid)?;
    check_n(n)?;
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("b must be positive, got {b}")));
    }
    let mut cells = Vec::new();
    for (ci, (&t, &tau)) in cartesian(t_grid, tau_grid).enumerate() {
        let path = [op::COUNT_TAIL, ci as u64];
        let hits = stats::count(n, |i| {
            let mut rng = stats::replica_rng(seed, &path, i);
            let mut count = 0u64;
            let mut last = f64::NAN;
            for e in Epochs::start(law, tau, &mut rng).expect("validated start") {
                if e > t + 3.0 * b {
                    break;
                }
                if e >= t && e != last {
                    count += 1;
                    if count > big_k {
                        return true;
                    }
                }
                last = e;
            }
            false
        });
        cells.push(GridCell {
            t,
            k: big_k as f64,
            w: 3.0 * b,
            tau,
            estimate: Estimate::from_counts(hits, n),
        });
    }
    Ok(GridReport { cells })
}

/// Default cap on the mark count searched by [`compute_k0`].
pub const DEFAULT_K0_CAP: u64 = 1_000_000;

/// Smallest `K >= 2` such that the estimate of
/// `P(X_1 + ... + X_{K-1} < 3b)` plus three standard errors is at most `p0`.
pub fn compute_k0(law: &InterarrivalLaw, b: f64, p0: f64, n: u64, seed: u64, cap: u64) -> Result<u64> {
    check_n(n)?;
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::InvalidArgument(format!("p0 must lie in (0, 1), got {p0}")));
    }
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("b must be positive, got {b}")));
    }
    let limit = 3.0 * b;
    // For each replica, the number of partial sums below 3b, capped.
    let mut below: Vec<u64> = stats::replicate(n, |i| {
        let mut rng = stats::replica_rng(seed, &[op::K0], i);
        let mut s = 0.0;
        let mut j = 0u64;
        while j <= cap {
            s += law.sample(&mut rng);
            if s >= limit {
                break;
            }
            j += 1;
        }
        j
    });
    below.sort_unstable();
    let nf = n as f64;
    let mut k = 2u64;
    while k <= cap {
        // P(M >= K - 1), with M the count of partial sums below 3b.
        let at_least = n - below.partition_point(|&m| m < k - 1) as u64;
        let p = at_least as f64 / nf;
        if p + 3.0 * (p * (1.0 - p) / nf).sqrt() <= p0 {
            return Ok(k);
        }
        k += 1;
    }
    Err(Error::NoConvergence(format!("K0 exceeds the cap {cap}")))
}

/// Largest `w` with `F(w) <= eps / 2`, by bisection to relative tolerance
/// `1e-9`.
pub fn compute_w0_dfr(law: &InterarrivalLaw, eps: f64) -> Result<f64> {
    if !law.is_absolutely_continuous() {
        return Err(Error::Unsupported {
            op: "w0 for decreasing hazard",
            law: law.to_string(),
        });
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    let target = eps / 2.0;
    let mut hi = finite_scale(law).max(f64::MIN_POSITIVE);
    while law.cdf(hi) <= target {
        hi *= 2.0;
    }
    let mut lo = hi;
    while lo > f64::MIN_POSITIVE && law.cdf(lo) > target {
        lo /= 2.0;
    }
    if law.cdf(lo) > target {
        return Ok(0.0);
    }
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if law.cdf(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Largest `w` below the `k`-th order statistic of `xs`, with
/// `k = floor(p n) + 1`, so that the empirical `P(X <= w)` is at most `p`.
fn order_statistic_below(xs: &mut [f64], p: f64) -> Option<f64> {
    xs.sort_by(f64::total_cmp);
    let k = (p * xs.len() as f64).floor() as usize;
    let x = *xs.get(k)?;
    if x > 0.0 {
        Some(if x.is_finite() { x * (1.0 - 1e-12) } else { x })
    } else {
        None
    }
}

/// Numeric surrogate for the gap width: the largest `w` such that the
/// estimated probability of a mark in `[t - w, t + w]` is at most `p0` at
/// every grid cell.
pub fn find_w0_gap(
    law: &InterarrivalLaw,
    p0: f64,
    t_grid: &[f64],
    tau_grid: &[TauSpec],
    n: u64,
    seed: u64,
) -> Result<f64> {
    check_grids(t_grid, tau_grid)?;
    check_n(n)?;
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::InvalidArgument(format!("p0 must lie in (0, 1), got {p0}")));
    }
    let mut w0 = f64::INFINITY;
    for (ci, (&t, &tau)) in cartesian(t_grid, tau_grid).enumerate() {
        let path = [op::NEAREST, ci as u64];
        let mut dist = stats::replicate(n, |i| {
            let mut rng = stats::replica_rng(seed, &path, i);
            let mut best = f64::INFINITY;
            for e in Epochs::start(law, tau, &mut rng).expect("validated start") {
                if e < 0.0 {
                    continue;
                }
                best = best.min((e - t).abs());
                if e >= t {
                    break;
                }
            }
            best
        });
        let w = order_statistic_below(&mut dist, p0).ok_or_else(|| {
            Error::NoConvergence(format!("marks sit exactly at t = {t} too often for p0 = {p0}"))
        })?;
        w0 = w0.min(w);
    }
    Ok(w0)
}

/// Conditioning and window of a two-train proximity query.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityQuery {
    pub t: f64,
    pub s: f64,
    /// Require the first mark of the first train in the window to be at
    /// least `t + w0`.
    pub w0: Option<f64>,
    /// Require at most this many marks of the first train in the window.
    pub k1: Option<u64>,
    /// Require at most this many marks of the second train in the window.
    pub k2: Option<u64>,
    pub taus: (TauSpec, TauSpec),
}

impl ProximityQuery {
    pub fn window(t: f64, s: f64) -> Self {
        Self {
            t,
            s,
            w0: None,
            k1: None,
            k2: None,
            taus: (TauSpec::Fixed(0.0), TauSpec::Fixed(0.0)),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t >= 0.0 && self.s > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need t >= 0 and s > 0, got t={}, s={}",
                self.t, self.s
            )));
        }
        self.taus.0.validate()?;
        self.taus.1.validate()
    }
}

fn window_marks<R: Rng + ?Sized>(law: &InterarrivalLaw, tau: TauSpec, a: f64, b: f64, rng: &mut R) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for e in Epochs::start(law, tau, rng).expect("validated start") {
        if e > b {
            break;
        }
        if e >= a && e >= 0.0 && out.last() != Some(&e) {
            out.push(e);
        }
    }
    out
}

fn min_cross_distance(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j, mut best) = (0, 0, f64::INFINITY);
    while i < a.len() && j < b.len() {
        best = best.min((a[i] - b[j]).abs());
        if a[i] < b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    best
}

/// Closest cross-train distance between marks in `[t, t + s]` for each
/// accepted proposal, plus the number of proposals. The distance is
/// `+inf` when either train has no mark in the window.
pub fn proximity_min_distances(
    law_a: &InterarrivalLaw,
    law_b: &InterarrivalLaw,
    q: &ProximityQuery,
    n: u64,
    seed: u64,
    floor: f64,
) -> Result<(Vec<f64>, u64)> {
    q.validate()?;
    check_n(n)?;
    let (a, b) = (q.t, q.t + q.s);
    let draws = stats::replicate(n, |i| {
        let mut rng = stats::replica_rng(seed, &[op::PROXIMITY, 0], i);
        let first = window_marks(law_a, q.taus.0, a, b, &mut rng);
        let mut rng = stats::replica_rng(seed, &[op::PROXIMITY, 1], i);
        let second = window_marks(law_b, q.taus.1, a, b, &mut rng);
        let accept = q.w0.is_none_or(|w0| first.first().is_none_or(|&m| m >= q.t + w0))
            && q.k1.is_none_or(|k| first.len() as u64 <= k)
            && q.k2.is_none_or(|k| second.len() as u64 <= k);
        accept.then(|| min_cross_distance(&first, &second))
    });
    let accepted: Vec<f64> = draws.into_iter().flatten().collect();
    check_acceptance(accepted.len() as u64, n, floor)?;
    Ok((accepted, n))
}

/// Conditional probability that the closest cross-train pair of marks in
/// the window is within `v`.
pub fn proximity_estimate(
    law_a: &InterarrivalLaw,
    law_b: &InterarrivalLaw,
    q: &ProximityQuery,
    v: f64,
    n: u64,
    seed: u64,
    floor: f64,
) -> Result<Estimate> {
    if !(v > 0.0) {
        return Err(Error::InvalidArgument(format!("v must be positive, got {v}")));
    }
    let (d, proposals) = proximity_min_distances(law_a, law_b, q, n, seed, floor)?;
    let hits = d.iter().filter(|&&x| x <= v).count() as u64;
    Ok(Estimate::conditional(hits, d.len() as u64, proposals))
}

/// Largest `v` whose estimated proximity probability is at most `p0`.
pub fn find_v0(
    law_a: &InterarrivalLaw,
    law_b: &InterarrivalLaw,
    q: &ProximityQuery,
    p0: f64,
    n: u64,
    seed: u64,
    floor: f64,
) -> Result<f64> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::InvalidArgument(format!("p0 must lie in (0, 1), got {p0}")));
    }
    let (mut d, _) = proximity_min_distances(law_a, law_b, q, n, seed, floor)?;
    let v = order_statistic_below(&mut d, p0)
        .ok_or_else(|| Error::NoConvergence("marks of the two trains coincide too often".into()))?;
    Ok(v.min(q.s))
}

/// Probability of a mark within `w` after time `t` given that the last mark
/// before `t` is `v` time units back, by rejection on one interarrival.
///
/// The exact value is `(F(v + w) - F(v)) / (1 - F(v))`; under a decreasing
/// hazard it is bounded by `F(w) / (1 - F(w))`.
pub fn last_mark_estimate(
    law: &InterarrivalLaw,
    v: f64,
    w: f64,
    n: u64,
    seed: u64,
    floor: f64,
) -> Result<Estimate> {
    check_n(n)?;
    if !(v >= 0.0 && w > 0.0) {
        return Err(Error::InvalidArgument(format!("need v >= 0 and w > 0, got v={v}, w={w}")));
    }
    let outcomes = stats::replicate(n, |i| {
        let mut rng = stats::replica_rng(seed, &[op::LAST_MARK], i);
        let x = law.sample(&mut rng);
        if x < v {
            0u8
        } else if x <= v + w {
            2
        } else {
            1
        }
    });
    let accepted = outcomes.iter().filter(|&&o| o > 0).count() as u64;
    let hits = outcomes.iter().filter(|&&o| o == 2).count() as u64;
    check_acceptance(accepted, n, floor)?;
    Ok(Estimate::conditional(hits, accepted, n))
}

/// Exact conditional probability estimated by [`last_mark_estimate`].
pub fn last_mark_exact(law: &InterarrivalLaw, v: f64, w: f64) -> f64 {
    let s = law.survival(v);
    if s <= 0.0 {
        return f64::NAN;
    }
    (s - law.survival(v + w)) / s
}
