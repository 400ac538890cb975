//! Infection dynamics read off a percolation structure.
//!
//! The sweep only visits events that can change the state. A cure is
//! scheduled for each infected site (its next mark), and an arrow `x -> y`
//! is scheduled only while `x` is infected and `y` healthy. A popped event
//! is applied if it is still effective; otherwise it is dropped, because
//! whatever made it ineffective will reschedule it once it can matter
//! again. This visits exactly the events a full time-ordered merge of
//! every mark and arrow would act on, in the same order: by time, cures
//! before arrows, arrows by lexicographic edge.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use crate::distributions::InterarrivalLaw;
use crate::error::{Error, Result};
use crate::graphical::{Edge, LazySample, Percolation, TauPolicy};

/// A set of infected sites.
pub type Configuration = BTreeSet<i64>;

/// State summary after an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub count: usize,
    pub leftmost: Option<i64>,
    pub rightmost: Option<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub survived: bool,
    pub extinction_time: Option<f64>,
    pub snapshots: Vec<Snapshot>,
}

/// A space-time sub-window `[lo, hi] x (t_start, t_end]` of a sample.
///
/// Only marks and arrows with both endpoints inside `[lo, hi]` are seen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
    pub t_start: f64,
    pub t_end: f64,
    /// Stop as soon as this site becomes infected.
    pub halt_on: Option<i64>,
}

impl Window {
    pub fn full<P: Percolation + ?Sized>(p: &P) -> Self {
        Self {
            lo: -p.half_width(),
            hi: p.half_width(),
            t_start: 0.0,
            t_end: p.horizon(),
            halt_on: None,
        }
    }

    fn check<P: Percolation + ?Sized>(&self, p: &P) -> Result<()> {
        let l = p.half_width();
        if self.lo > self.hi
            || self.lo < -l
            || self.hi > l
            || !(self.t_start >= 0.0 && self.t_start <= self.t_end && self.t_end <= p.horizon())
        {
            return Err(Error::BoxOutsideWindow(format!(
                "[{}, {}] x [{}, {}] in [-{l}, {l}] x [0, {}]",
                self.lo,
                self.hi,
                self.t_start,
                self.t_end,
                p.horizon()
            )));
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEnd {
    /// Time of the last processed event, or the window end when the
    /// infection lasted.
    pub time: f64,
    /// The infection died out at `time`.
    pub extinct: bool,
    /// The halting site was reached at `time`.
    pub halted: bool,
    pub final_state: Configuration,
}

/// Receives every state change.
pub trait Observer {
    fn flip(&mut self, time: f64, site: i64, infected: bool);
}

impl Observer for () {
    fn flip(&mut self, _: f64, _: i64, _: bool) {}
}

/// Records every flip, for pathwise comparisons between runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub initial: Configuration,
    pub flips: Vec<(f64, i64, bool)>,
}

impl Observer for Trace {
    fn flip(&mut self, time: f64, site: i64, infected: bool) {
        self.flips.push((time, site, infected));
    }
}

impl Trace {
    /// Infected set just after all events at or before `t`.
    pub fn configuration_at(&self, t: f64) -> Configuration {
        let mut c = self.initial.clone();
        for &(_, x, inf) in self.flips.iter().take_while(|f| f.0 <= t) {
            if inf {
                c.insert(x);
            } else {
                c.remove(&x);
            }
        }
        c
    }
}

/// Records a snapshot after each batch of simultaneous events.
#[derive(Debug, Default)]
struct Recorder {
    infected: BTreeSet<i64>,
    snapshots: Vec<Snapshot>,
}

impl Recorder {
    fn push(&mut self, time: f64) {
        let snap = Snapshot {
            time,
            count: self.infected.len(),
            leftmost: self.infected.first().copied(),
            rightmost: self.infected.last().copied(),
        };
        match self.snapshots.last_mut() {
            Some(last) if last.time == time => *last = snap,
            _ => self.snapshots.push(snap),
        }
    }
}

impl Observer for Recorder {
    fn flip(&mut self, time: f64, site: i64, infected: bool) {
        if infected {
            self.infected.insert(site);
        } else {
            self.infected.remove(&site);
        }
        self.push(time);
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    /// 0 for a cure of `from`, 1 for an arrow `from -> to`.
    class: u8,
    from: i64,
    to: i64,
}

impl Event {
    fn key(&self) -> (u8, i64, i64) {
        (self.class, self.from, self.to)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // Reversed so that `BinaryHeap` pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.key().cmp(&self.key()))
    }
}

struct Sweep<'a, P: ?Sized> {
    p: &'a P,
    w: Window,
    infected: Vec<bool>,
    count: usize,
    heap: BinaryHeap<Event>,
}

impl<'a, P: Percolation + ?Sized> Sweep<'a, P> {
    fn is_infected(&self, x: i64) -> bool {
        x >= self.w.lo && x <= self.w.hi && self.infected[(x - self.w.lo) as usize]
    }

    fn in_window(&self, x: i64) -> bool {
        x >= self.w.lo && x <= self.w.hi
    }

    fn schedule_cure(&mut self, x: i64, after: f64) {
        if let Some(t) = self.p.next_cure(x, after) {
            if t <= self.w.t_end {
                self.heap.push(Event { time: t, class: 0, from: x, to: x });
            }
        }
    }

    /// Schedules the next effective arrow on `edge` after `now`. Arrows at
    /// exactly `now` count when they sort after the event being processed.
    fn schedule_arrow(&mut self, edge: Edge, now: f64, current: Option<(u8, i64, i64)>) {
        let inclusive = current.is_some_and(|cur| (1, edge.from, edge.to) > cur);
        if let Some(t) = self.p.next_arrow(edge, now, inclusive) {
            if t <= self.w.t_end {
                self.heap.push(Event {
                    time: t,
                    class: 1,
                    from: edge.from,
                    to: edge.to,
                });
            }
        }
    }

    fn set(&mut self, x: i64, v: bool) {
        let i = (x - self.w.lo) as usize;
        self.infected[i] = v;
        if v {
            self.count += 1;
        } else {
            self.count -= 1;
        }
    }
}

/// Runs the dynamics inside `window`, starting from `initial` at
/// `window.t_start`. Events at exactly `t_start` are not applied.
pub fn evolve_window<P: Percolation + ?Sized, O: Observer>(
    p: &P,
    initial: &Configuration,
    window: Window,
    observer: &mut O,
) -> Result<RunEnd> {
    window.check(p)?;
    if let Some(x) = initial.iter().find(|&&x| x < window.lo || x > window.hi) {
        return Err(Error::InvalidArgument(format!("initial site {x} outside [{}, {}]", window.lo, window.hi)));
    }
    let width = (window.hi - window.lo + 1) as usize;
    let mut s = Sweep {
        p,
        w: window,
        infected: vec![false; width],
        count: 0,
        heap: BinaryHeap::new(),
    };
    for &x in initial {
        s.set(x, true);
    }
    if let Some(h) = window.halt_on {
        if s.is_infected(h) {
            return Ok(RunEnd {
                time: window.t_start,
                extinct: false,
                halted: true,
                final_state: initial.clone(),
            });
        }
    }
    if s.count == 0 {
        return Ok(RunEnd {
            time: window.t_start,
            extinct: true,
            halted: false,
            final_state: Configuration::new(),
        });
    }
    let t0 = window.t_start;
    for &x in initial {
        s.schedule_cure(x, t0);
        for y in [x - 1, x + 1] {
            if s.in_window(y) && !s.is_infected(y) {
                s.schedule_arrow(Edge::new(x, y), t0, None);
            }
        }
    }
    while let Some(ev) = s.heap.pop() {
        let t = ev.time;
        if ev.class == 0 {
            let x = ev.from;
            if !s.is_infected(x) {
                continue;
            }
            s.set(x, false);
            observer.flip(t, x, false);
            if s.count == 0 {
                return Ok(RunEnd {
                    time: t,
                    extinct: true,
                    halted: false,
                    final_state: Configuration::new(),
                });
            }
            for y in [x - 1, x + 1] {
                if s.is_infected(y) {
                    s.schedule_arrow(Edge::new(y, x), t, Some(ev.key()));
                }
            }
        } else {
            let (x, y) = (ev.from, ev.to);
            if !s.is_infected(x) || s.is_infected(y) {
                continue;
            }
            s.set(y, true);
            observer.flip(t, y, true);
            if window.halt_on == Some(y) {
                return Ok(RunEnd {
                    time: t,
                    extinct: false,
                    halted: true,
                    final_state: collect(&s),
                });
            }
            s.schedule_cure(y, t);
            for z in [y - 1, y + 1] {
                if s.in_window(z) && !s.is_infected(z) {
                    s.schedule_arrow(Edge::new(y, z), t, Some(ev.key()));
                }
            }
        }
    }
    Ok(RunEnd {
        time: window.t_end,
        extinct: false,
        halted: false,
        final_state: collect(&s),
    })
}

fn collect<P: ?Sized>(s: &Sweep<'_, P>) -> Configuration {
    s.infected
        .iter()
        .enumerate()
        .filter(|(_, &v)| v)
        .map(|(i, _)| s.w.lo + i as i64)
        .collect()
}

fn check_initial(initial: &Configuration) -> Result<()> {
    if initial.is_empty() {
        return Err(Error::InvalidArgument("initial configuration must be nonempty".into()));
    }
    Ok(())
}

/// Runs the dynamics on the whole window from `initial` at time 0.
pub fn evolve<P: Percolation + ?Sized>(p: &P, initial: &Configuration, record_snapshots: bool) -> Result<SimOutcome> {
    check_initial(initial)?;
    let window = Window::full(p);
    if record_snapshots {
        let mut rec = Recorder {
            infected: initial.clone(),
            snapshots: Vec::new(),
        };
        rec.push(0.0);
        let end = evolve_window(p, initial, window, &mut rec)?;
        Ok(outcome(end, rec.snapshots))
    } else {
        let end = evolve_window(p, initial, window, &mut ())?;
        Ok(outcome(end, Vec::new()))
    }
}

/// Like [`evolve`] but returns the full flip history.
pub fn evolve_traced<P: Percolation + ?Sized>(p: &P, initial: &Configuration) -> Result<(SimOutcome, Trace)> {
    check_initial(initial)?;
    let mut trace = Trace {
        initial: initial.clone(),
        flips: Vec::new(),
    };
    let end = evolve_window(p, initial, Window::full(p), &mut trace)?;
    Ok((outcome(end, Vec::new()), trace))
}

fn outcome(end: RunEnd, snapshots: Vec<Snapshot>) -> SimOutcome {
    SimOutcome {
        survived: !end.extinct,
        extinction_time: end.extinct.then_some(end.time),
        snapshots,
    }
}

/// Builds a lazy sample and runs the dynamics on it.
#[allow(clippy::too_many_arguments)]
pub fn extinction_time(
    law: &InterarrivalLaw,
    lambda: f64,
    half_width: i64,
    horizon: f64,
    initial: &Configuration,
    tau_policy: &TauPolicy,
    seed: u64,
    record_snapshots: bool,
) -> Result<SimOutcome> {
    let sample = LazySample::new(law, lambda, half_width, horizon, tau_policy, seed)?;
    evolve(&sample, initial, record_snapshots)
}

/// Walks several traces forward together, calling `check` with the current
/// states after each batch of simultaneous flips (and once at the start).
/// Returns how many checks failed.
pub fn compare_traces<F>(traces: &[&Trace], mut check: F) -> usize
where
    F: FnMut(&[&Configuration]) -> bool,
{
    let mut states: Vec<Configuration> = traces.iter().map(|t| t.initial.clone()).collect();
    let mut pos = vec![0usize; traces.len()];
    let mut failures = 0;
    let mut check_now = |s: &[Configuration]| -> bool {
        let r: Vec<&Configuration> = s.iter().collect();
        check(&r)
    };
    if !check_now(&states) {
        failures += 1;
    }
    loop {
        let next = traces
            .iter()
            .zip(&pos)
            .filter_map(|(t, &i)| t.flips.get(i).map(|f| f.0))
            .fold(f64::INFINITY, f64::min);
        if !next.is_finite() {
            break;
        }
        for (k, t) in traces.iter().enumerate() {
            while let Some(&(time, x, inf)) = t.flips.get(pos[k]) {
                if time != next {
                    break;
                }
                if inf {
                    states[k].insert(x);
                } else {
                    states[k].remove(&x);
                }
                pos[k] += 1;
            }
        }
        if !check_now(&states) {
            failures += 1;
        }
    }
    failures
}

/// Number of check points at which the infected set of `small` is not a
/// subset of that of `big`.
pub fn subset_violations(small: &Trace, big: &Trace) -> usize {
    compare_traces(&[small, big], |s| s[0].is_subset(s[1]))
}

/// Number of check points at which `union` differs from the union of `a`
/// and `b`.
pub fn union_mismatches(a: &Trace, b: &Trace, union: &Trace) -> usize {
    compare_traces(&[a, b, union], |s| {
        s[2].iter().all(|x| s[0].contains(x) || s[1].contains(x))
            && s[0].is_subset(s[2])
            && s[1].is_subset(s[2])
    })
}

/// Resamples a piecewise-constant trajectory on `points` equally spaced
/// times in `[0, horizon]`.
pub fn resample(snapshots: &[Snapshot], horizon: f64, points: usize) -> Vec<Snapshot> {
    let points = points.max(2);
    let mut out = Vec::with_capacity(points);
    let mut i = 0;
    let empty = Snapshot {
        time: 0.0,
        count: 0,
        leftmost: None,
        rightmost: None,
    };
    for k in 0..points {
        let t = horizon * k as f64 / (points - 1) as f64;
        while i + 1 < snapshots.len() && snapshots[i + 1].time <= t {
            i += 1;
        }
        let base = snapshots.get(i).copied().unwrap_or(empty);
        out.push(Snapshot { time: t, ..base });
    }
    out
}

/// Trajectory CSV: `time,infected_count,leftmost,rightmost`; extremes are
/// empty when nothing is infected.
pub fn trajectory_csv(snapshots: &[Snapshot]) -> String {
    let mut out = String::from("time,infected_count,leftmost,rightmost\n");
    let opt = |v: Option<i64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in snapshots {
        out.push_str(&format!(
            "{},{},{},{}\n",
            crate::stats::fmt_time(s.time),
            s.count,
            opt(s.leftmost),
            opt(s.rightmost)
        ));
    }
    out
}
