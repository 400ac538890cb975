//! Space-time box crossings and the explicit rate thresholds above which
//! they occur with high probability.
//!
//! Two box schemes are supported. For cure laws supported on `[0, b]`, the
//! horizontal box is `[x, x+3] x [t, t+b]` and the vertical box
//! `[x, x+1] x [t, t+3b]`. For laws with a decreasing hazard rate, the
//! boxes are `[x, x+3] x [t, t+0.3]` and `[x, x+1] x [t, t+1]`.

use std::fmt;
use std::str::FromStr;

use crate::distributions::InterarrivalLaw;
use crate::engine::{evolve_window, Configuration, Observer, RunEnd, Window};
use crate::error::{Error, Result};
use crate::graphical::{LazySample, Percolation, TauPolicy};
use crate::renewal::{self, ProximityQuery, TauSpec};
use crate::stats::{self, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoxKind {
    Horizontal,
    Vertical,
}

impl fmt::Display for BoxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoxKind::Horizontal => "horizontal",
            BoxKind::Vertical => "vertical",
        })
    }
}

impl FromStr for BoxKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "horizontal" | "h" | "H" => Ok(BoxKind::Horizontal),
            "vertical" | "v" | "V" => Ok(BoxKind::Vertical),
            other => Err(Error::Parse(format!("box kind {other:?}: expected horizontal or vertical"))),
        }
    }
}

/// Box geometry family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// For cure laws supported on `[0, b]`.
    Bounded { b: f64 },
    /// For cure laws with a decreasing hazard rate.
    Dfr,
}

impl Scheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Scheme::Bounded { b } if !(b > 0.0 && b.is_finite()) => {
                Err(Error::InvalidParameter(format!("box scale b must be positive, got {b}")))
            }
            _ => Ok(()),
        }
    }

    pub fn height(&self, kind: BoxKind) -> f64 {
        match (*self, kind) {
            (Scheme::Bounded { b }, BoxKind::Horizontal) => b,
            (Scheme::Bounded { b }, BoxKind::Vertical) => 3.0 * b,
            (Scheme::Dfr, BoxKind::Horizontal) => 0.3,
            (Scheme::Dfr, BoxKind::Vertical) => 1.0,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Bounded { b } => write!(f, "bounded({b})"),
            Scheme::Dfr => f.write_str("dfr"),
        }
    }
}

/// Parses `bounded(b)` or `dfr`.
impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "dfr" {
            return Ok(Scheme::Dfr);
        }
        let b = s
            .strip_prefix("bounded(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("scheme {s:?}: expected bounded(b) or dfr")))?
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("scheme {s:?}: {e}")))?;
        let scheme = Scheme::Bounded { b };
        scheme.validate()?;
        Ok(scheme)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSpec {
    pub kind: BoxKind,
    pub x: i64,
    pub t: f64,
    pub scheme: Scheme,
    /// Replaces the scheme's height when set.
    pub height_override: Option<f64>,
}

impl BoxSpec {
    pub fn new(kind: BoxKind, x: i64, t: f64, scheme: Scheme) -> Self {
        Self {
            kind,
            x,
            t,
            scheme,
            height_override: None,
        }
    }

    pub fn height(&self) -> f64 {
        self.height_override.unwrap_or_else(|| self.scheme.height(self.kind))
    }

    pub fn width(&self) -> i64 {
        match self.kind {
            BoxKind::Horizontal => 3,
            BoxKind::Vertical => 1,
        }
    }

    pub fn top(&self) -> f64 {
        self.t + self.height()
    }

    fn window(&self) -> Window {
        Window {
            lo: self.x,
            hi: self.x + self.width(),
            t_start: self.t,
            t_end: self.top(),
            halt_on: (self.kind == BoxKind::Horizontal).then_some(self.x + 3),
        }
    }

    fn check_start(&self, start: i64) -> Result<()> {
        if start != self.x && start != self.x + 1 {
            return Err(Error::InvalidArgument(format!(
                "crossing start {start} must be {} or {}",
                self.x,
                self.x + 1
            )));
        }
        Ok(())
    }
}

/// Runs the dynamics confined to the box from `{start}` at its base.
pub fn run_box<P: Percolation + ?Sized, O: Observer>(
    sample: &P,
    spec: &BoxSpec,
    start: i64,
    observer: &mut O,
) -> Result<RunEnd> {
    spec.scheme.validate()?;
    spec.check_start(start)?;
    let initial: Configuration = [start].into_iter().collect();
    evolve_window(sample, &initial, spec.window(), observer)
}

/// Whether the infection started at `start` reaches `x + 3` inside the box.
pub fn horizontal_crossing<P: Percolation + ?Sized>(sample: &P, spec: &BoxSpec, start: i64) -> Result<bool> {
    if spec.kind != BoxKind::Horizontal {
        return Err(Error::InvalidArgument("horizontal crossing of a vertical box".into()));
    }
    Ok(run_box(sample, spec, start, &mut ())?.halted)
}

/// Whether the infection started at `start` is still alive at the top of
/// the box.
pub fn vertical_crossing<P: Percolation + ?Sized>(sample: &P, spec: &BoxSpec, start: i64) -> Result<bool> {
    if spec.kind != BoxKind::Vertical {
        return Err(Error::InvalidArgument("vertical crossing of a horizontal box".into()));
    }
    Ok(!run_box(sample, spec, start, &mut ())?.extinct)
}

pub fn crossing<P: Percolation + ?Sized>(sample: &P, spec: &BoxSpec, start: i64) -> Result<bool> {
    match spec.kind {
        BoxKind::Horizontal => horizontal_crossing(sample, spec, start),
        BoxKind::Vertical => vertical_crossing(sample, spec, start),
    }
}

/// Crossing probability at one base time.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingCell {
    pub t: f64,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingReport {
    pub scheme: Scheme,
    pub kind: BoxKind,
    pub lambda: f64,
    pub tau_policy: TauPolicy,
    pub cells: Vec<CrossingCell>,
}

impl CrossingReport {
    /// Smallest estimate over the grid, a surrogate for the infimum over
    /// base times.
    pub fn grid_min(&self) -> &CrossingCell {
        self.cells
            .iter()
            .min_by(|a, b| a.estimate.value.total_cmp(&b.estimate.value))
            .expect("nonempty grid")
    }

    pub const CSV_HEADER: &'static str = "scheme,kind,lambda,t,tau_policy,estimate,ci,n";

    pub fn csv_rows(&self) -> Vec<[String; 8]> {
        self.cells
            .iter()
            .map(|c| {
                [
                    self.scheme.to_string(),
                    self.kind.to_string(),
                    stats::fmt_time(self.lambda),
                    stats::fmt_time(c.t),
                    self.tau_policy.to_string(),
                    stats::fmt_prob(c.estimate.value),
                    stats::fmt_prob(c.estimate.std_err),
                    c.estimate.trials.to_string(),
                ]
            })
            .collect()
    }
}

const OP_CROSSING: u64 = 0x11;

/// Monte Carlo crossing probability of the box based at `(0, t)` for every
/// `t` in the grid, starting from site 0.
#[allow(clippy::too_many_arguments)]
pub fn estimate_crossing(
    law: &InterarrivalLaw,
    lambda: f64,
    kind: BoxKind,
    scheme: Scheme,
    t_grid: &[f64],
    tau_policy: &TauPolicy,
    n: u64,
    seed: u64,
) -> Result<CrossingReport> {
    scheme.validate()?;
    if n == 0 || t_grid.is_empty() {
        return Err(Error::InvalidArgument("need n >= 1 and a nonempty time grid".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument(format!("grid time {t} must be finite and nonnegative")));
    }
    // Validates the law, rate and start policy once, up front.
    LazySample::new(law, lambda, 3, 1.0, tau_policy, seed)?;
    let mut cells = Vec::with_capacity(t_grid.len());
    for (ci, &t) in t_grid.iter().enumerate() {
        let spec = BoxSpec::new(kind, 0, t, scheme);
        let path = [OP_CROSSING, ci as u64];
        let hits = stats::count(n, |i| {
            let s = stats::replica_seed(seed, &path, i);
            let sample = LazySample::new(law, lambda, 3, spec.top(), tau_policy, s).expect("validated");
            crossing(&sample, &spec, 0).expect("box inside window")
        });
        cells.push(CrossingCell {
            t,
            estimate: Estimate::from_counts(hits, n),
        });
    }
    Ok(CrossingReport {
        scheme,
        kind,
        lambda,
        tau_policy: tau_policy.clone(),
        cells,
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")))
    }
}

fn check_scale(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// `-ln(1 - (1 - eps)^(1/m)) / a`: the rate at which each of `m` independent
/// waits for an exponential clock finishes within `a` with joint
/// probability `1 - eps`.
fn rate_for(eps: f64, m: f64, a: f64) -> f64 {
    // 1 - (1 - eps)^(1/m), without cancellation for small eps.
    let q = -(eps.ln_1p_neg() / m).exp_m1();
    -q.ln() / a
}

trait Ln1pNeg {
    fn ln_1p_neg(self) -> f64;
}

impl Ln1pNeg for f64 {
    /// `ln(1 - self)`.
    fn ln_1p_neg(self) -> f64 {
        (-self).ln_1p()
    }
}

/// Horizontal-crossing threshold: each of the three hops succeeds in time
/// `a0` with probability `(1 - eps)^(1/6)`.
pub fn lambda_h_bound(eps: f64, a0: f64) -> Result<f64> {
    check_eps(eps)?;
    check_scale("a0", a0)?;
    Ok(rate_for(eps, 6.0, a0))
}

/// Vertical-crossing threshold for the bounded scheme with at most `k0`
/// cure marks per site in the box and minimal spacing `u1`.
pub fn lambda_v_bound_bounded(eps: f64, u1: f64, k0: u64) -> Result<f64> {
    check_eps(eps)?;
    check_scale("u1", u1)?;
    if k0 < 1 {
        return Err(Error::InvalidArgument("K0 must be at least 1".into()));
    }
    Ok(rate_for(eps, (4 * k0 - 2) as f64, u1))
}

/// Vertical-crossing threshold for the decreasing-hazard scheme with
/// minimal spacing `u0`; needs `ceil(1/u0) >= 2`.
pub fn lambda_v_bound_dfr(eps: f64, u0: f64) -> Result<f64> {
    check_eps(eps)?;
    check_scale("u0", u0)?;
    let hops = (1.0 / u0).ceil();
    if hops < 2.0 {
        return Err(Error::InvalidArgument(format!(
            "u0 = {u0} gives ceil(1/u0) = {hops}; the threshold needs at least 2"
        )));
    }
    Ok(rate_for(eps, 2.0 * hops - 2.0, u0))
}

pub fn a0_bounded(w0: f64, b: f64) -> f64 {
    w0.min(0.3 * b)
}

pub fn a0_dfr(w0: f64) -> f64 {
    w0.min(0.1)
}

/// Every intermediate quantity of a threshold construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    pub scheme: Scheme,
    pub eps: f64,
    /// Per-hop failure budget of the horizontal construction.
    pub p0: f64,
    /// Cure-free window width found for the horizontal construction.
    pub w0: f64,
    pub a0: f64,
    pub lambda_h: f64,
    /// Failure budget of each vertical ingredient.
    pub p_vertical: f64,
    /// Mark-count cap (bounded scheme only).
    pub k0: Option<u64>,
    /// Cure-free window width found for the vertical construction.
    pub w_vertical: f64,
    /// Minimal cross-site spacing of cure marks.
    pub v_vertical: f64,
    /// `min(w_vertical, v_vertical)`.
    pub u: f64,
    pub lambda_v: f64,
}

impl Thresholds {
    pub fn lambda_max(&self) -> f64 {
        self.lambda_h.max(self.lambda_v)
    }
}

/// Monte Carlo budget of a threshold construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstructionBudget {
    pub n: u64,
    pub seed: u64,
}

const OP_CONSTRUCT: u64 = 0x12;

/// Follows the bounded-support construction with every existence step
/// replaced by a Monte Carlo search over the default grids.
pub fn construct_bounded(law: &InterarrivalLaw, b: f64, eps: f64, budget: ConstructionBudget) -> Result<Thresholds> {
    check_eps(eps)?;
    check_scale("b", b)?;
    let ConstructionBudget { n, seed } = budget;
    let sub = |k: u64| crate::seeding::derive(seed, &[OP_CONSTRUCT, k]);
    let t_grid = renewal::default_t_grid(law);
    let tau_grid = renewal::default_tau_grid(law);

    let p0 = 1.0 - (1.0 - eps).powf(1.0 / 6.0);
    let w0 = renewal::find_w0_gap(law, p0, &t_grid, &tau_grid, n, sub(0))?;
    let a0 = a0_bounded(w0, b);
    let lambda_h = lambda_h_bound(eps, a0)?;

    let p = 1.0 - (1.0 - eps).powf(1.0 / 8.0);
    let k0 = renewal::compute_k0(law, b, p, n, sub(1), renewal::DEFAULT_K0_CAP)?;
    let w1 = renewal::find_w0_gap(law, p, &t_grid, &tau_grid, n, sub(2))?;
    let v1 = spacing_over_grid(law, 3.0 * b, w1, Some(k0), p, &t_grid, &tau_grid, n, sub(3))?;
    let u1 = w1.min(v1);
    let lambda_v = lambda_v_bound_bounded(eps, u1, k0)?;
    Ok(Thresholds {
        scheme: Scheme::Bounded { b },
        eps,
        p0,
        w0,
        a0,
        lambda_h,
        p_vertical: p,
        k0: Some(k0),
        w_vertical: w1,
        v_vertical: v1,
        u: u1,
        lambda_v,
    })
}

/// Follows the decreasing-hazard construction, using the closed-form
/// cure-free window and a Monte Carlo search for the spacing.
pub fn construct_dfr(law: &InterarrivalLaw, eps: f64, budget: ConstructionBudget) -> Result<Thresholds> {
    check_eps(eps)?;
    let ConstructionBudget { n, seed } = budget;
    let t_grid = renewal::default_t_grid(law);
    let tau_grid = renewal::default_tau_grid(law);

    let p0 = 1.0 - (1.0 - eps).powf(1.0 / 6.0);
    let w0 = renewal::compute_w0_dfr(law, p0)?;
    let a0 = a0_dfr(w0);
    let lambda_h = lambda_h_bound(eps, a0)?;

    let p1 = 1.0 - (1.0 - eps).powf(1.0 / 4.0);
    let w0v = renewal::compute_w0_dfr(law, p1)?;
    let v0 = spacing_over_grid(
        law,
        1.0,
        w0v,
        None,
        p1,
        &t_grid,
        &tau_grid,
        n,
        crate::seeding::derive(seed, &[OP_CONSTRUCT, 4]),
    )?;
    let u0 = w0v.min(v0);
    let lambda_v = lambda_v_bound_dfr(eps, u0)?;
    Ok(Thresholds {
        scheme: Scheme::Dfr,
        eps,
        p0,
        w0,
        a0,
        lambda_h,
        p_vertical: p1,
        k0: None,
        w_vertical: w0v,
        v_vertical: v0,
        u: u0,
        lambda_v,
    })
}

/// Smallest spacing found by [`renewal::find_v0`] over a grid of window
/// starts and process starts.
#[allow(clippy::too_many_arguments)]
fn spacing_over_grid(
    law: &InterarrivalLaw,
    s: f64,
    w: f64,
    k: Option<u64>,
    p: f64,
    t_grid: &[f64],
    tau_grid: &[TauSpec],
    n: u64,
    seed: u64,
) -> Result<f64> {
    let mut best = f64::INFINITY;
    // A coarser time grid keeps the search affordable; the spacing depends
    // weakly on the window start.
    let step = (t_grid.len() / 5).max(1);
    for (ti, &t) in t_grid.iter().enumerate().step_by(step) {
        for (si, &tau) in tau_grid.iter().enumerate() {
            let q = ProximityQuery {
                t,
                s,
                w0: Some(w),
                k1: k,
                k2: k,
                taus: (tau, tau),
            };
            let cell_seed = crate::seeding::derive(seed, &[ti as u64, si as u64]);
            let v = renewal::find_v0(law, law, &q, p, n, cell_seed, renewal::DEFAULT_ACCEPTANCE_FLOOR)?;
            best = best.min(v);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphical::{Edge, GraphicalSample};
    use crate::renewal::RenewalTrain;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn closed_form_thresholds() {
        // -ln(1 - 0.1^(1/6)) = 1.1434801...
        assert!(close(lambda_h_bound(0.9, 1.0).unwrap(), 1.143_480_172_578, 1e-11));
        let h = lambda_h_bound(0.3, 0.2).unwrap();
        assert!(close(lambda_h_bound(0.3, 0.4).unwrap(), h / 2.0, 1e-12));
        assert!(lambda_h_bound(1e-12, 1.0).unwrap() > lambda_h_bound(1e-6, 1.0).unwrap());
        // K0 = 1: exponent 1/2.
        assert!(close(lambda_v_bound_bounded(0.75, 1.0, 1).unwrap(), 2f64.ln(), 1e-12));
        assert!(close(
            lambda_v_bound_bounded(0.5, 1.0, 1).unwrap(),
            -(1.0 - 0.5f64.sqrt()).ln(),
            1e-12
        ));
        assert!(close(lambda_v_bound_dfr(0.5, 0.5).unwrap(), -2.0 * (1.0 - 0.5f64.sqrt()).ln(), 1e-12));
        assert!(lambda_v_bound_dfr(0.5, 1.0).is_err());
        assert!(lambda_v_bound_dfr(0.5, 0.99).is_ok());
        assert!(lambda_h_bound(0.0, 1.0).is_err());
        assert!(lambda_h_bound(0.5, 0.0).is_err());
    }

    #[test]
    fn a0_rules() {
        assert_eq!(a0_bounded(5.0, 1.0), 0.3);
        assert_eq!(a0_dfr(0.05), 0.05);
        assert_eq!(a0_dfr(0.2), 0.1);
    }

    #[test]
    fn scheme_geometry_and_parsing() {
        let s: Scheme = "bounded(2)".parse().unwrap();
        assert_eq!(s.height(BoxKind::Horizontal), 2.0);
        assert_eq!(s.height(BoxKind::Vertical), 6.0);
        assert_eq!(Scheme::Dfr.height(BoxKind::Horizontal), 0.3);
        assert_eq!("dfr".parse::<Scheme>().unwrap(), Scheme::Dfr);
        assert!("bounded(-1)".parse::<Scheme>().is_err());
        assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
    }

    fn quiet_sample(marks: &[&[f64]], arrows: Vec<(Edge, Vec<f64>)>) -> GraphicalSample {
        let l = (marks.len() as i64 - 1) / 2;
        let trains = marks
            .iter()
            .enumerate()
            .map(|(i, m)| RenewalTrain::with_marks(i as i64 - l, m.to_vec(), 10.0).unwrap())
            .collect();
        GraphicalSample::from_parts(l, 10.0, 1.0, trains, arrows).unwrap()
    }

    #[test]
    fn explicit_path_crosses() {
        let empty: &[f64] = &[];
        let s = quiet_sample(
            &[empty; 9],
            vec![
                (Edge::new(0, 1), vec![0.1]),
                (Edge::new(1, 2), vec![0.2]),
                (Edge::new(2, 3), vec![0.3]),
            ],
        );
        let spec = BoxSpec::new(BoxKind::Horizontal, 0, 0.0, Scheme::Bounded { b: 1.0 });
        assert!(horizontal_crossing(&s, &spec, 0).unwrap());
        // Out of order arrows do not chain.
        let s = quiet_sample(
            &[empty; 9],
            vec![
                (Edge::new(0, 1), vec![0.3]),
                (Edge::new(1, 2), vec![0.2]),
                (Edge::new(2, 3), vec![0.1]),
            ],
        );
        assert!(!horizontal_crossing(&s, &spec, 0).unwrap());
        assert!(horizontal_crossing(&quiet_sample(&[empty; 9], vec![]), &spec, 0).is_ok_and(|c| !c));
    }

    #[test]
    fn vertical_crossings() {
        let empty: &[f64] = &[];
        let spec = BoxSpec::new(BoxKind::Vertical, 0, 0.0, Scheme::Dfr);
        // Site 0 is never cured.
        let s = quiet_sample(&[empty, empty, empty, &[0.5], empty], vec![]);
        assert!(vertical_crossing(&s, &spec, 0).unwrap());
        // Both sites are cured at once before any arrow.
        let s = quiet_sample(&[empty, empty, &[0.5], &[0.5], empty], vec![(Edge::new(0, 1), vec![0.2])]);
        assert!(!vertical_crossing(&s, &spec, 0).unwrap());
        // Alternating cures bridged by arrows.
        let s = quiet_sample(
            &[empty, empty, &[0.3, 0.8], &[0.5], empty],
            vec![(Edge::new(0, 1), vec![0.1, 0.6]), (Edge::new(1, 0), vec![0.4])],
        );
        assert!(vertical_crossing(&s, &spec, 0).unwrap());
    }

    #[test]
    fn crossing_rejects_bad_boxes() {
        let s = quiet_sample(&[&[], &[], &[]], vec![]);
        let spec = BoxSpec::new(BoxKind::Horizontal, 0, 0.0, Scheme::Dfr);
        assert!(matches!(horizontal_crossing(&s, &spec, 0), Err(Error::BoxOutsideWindow(_))));
        assert!(horizontal_crossing(&s, &spec, 2).is_err());
    }

    #[test]
    fn zero_rate_never_crosses_horizontally() {
        let law = InterarrivalLaw::uniform(1.0).unwrap();
        let r = estimate_crossing(&law, 0.0, BoxKind::Horizontal, Scheme::Bounded { b: 1.0 }, &[0.0, 1.0], &TauPolicy::AllZero, 200, 1)
            .unwrap();
        assert_eq!(r.grid_min().estimate.value, 0.0);
    }
}
