//! Independent reference implementations used by the integration tests.
//! None of them calls the library's dynamics code.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use rcplab::crossings::{BoxKind, BoxSpec};
use rcplab::graphical::{window_edges, Edge, GraphicalSample, Percolation};
use rcplab::renorm::BlockField;

/// Infected sets after each batch of simultaneous events, obtained by
/// sorting every cure mark and arrow of the window into one list and
/// applying them in order: time, cures before arrows, arrows by edge.
pub fn naive_run(sample: &GraphicalSample, initial: &BTreeSet<i64>) -> Vec<(f64, BTreeSet<i64>)> {
    let horizon = sample.horizon();
    let mut events: Vec<(f64, u8, i64, i64)> = Vec::new();
    for train in sample.cure_trains() {
        for &m in train.marks() {
            if m > 0.0 && m <= horizon {
                events.push((m, 0, train.site(), train.site()));
            }
        }
    }
    for e in window_edges(sample.half_width()) {
        for &t in sample.arrows(e) {
            if t > 0.0 && t <= horizon {
                events.push((t, 1, e.from, e.to));
            }
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3)));
    let mut state = initial.clone();
    let mut out = vec![(0.0, state.clone())];
    let mut i = 0;
    while i < events.len() && !state.is_empty() {
        let t = events[i].0;
        while i < events.len() && events[i].0 == t {
            let (_, class, from, to) = events[i];
            if class == 0 {
                state.remove(&from);
            } else if state.contains(&from) {
                state.insert(to);
            }
            i += 1;
        }
        out.push((t, state.clone()));
    }
    out
}

/// First time the naive run is empty, if it ever is.
pub fn naive_extinction(run: &[(f64, BTreeSet<i64>)]) -> Option<f64> {
    run.iter().find(|(_, s)| s.is_empty()).map(|(t, _)| *t)
}

/// Crossing by exhaustive search over infection paths inside the box: a
/// site infected at time `s` stays infected until its next cure mark after
/// `s`, and passes the infection along every arrow it sends before then.
pub fn oracle_crossing(sample: &GraphicalSample, spec: &BoxSpec, start: i64) -> bool {
    let lo = spec.x;
    let hi = spec.x + spec.width();
    let (t0, t1) = (spec.t, spec.top());
    let next_cure = |site: i64, after: f64| -> f64 {
        sample
            .cure_train(site)
            .marks()
            .iter()
            .copied()
            .find(|&m| m > after)
            .unwrap_or(f64::INFINITY)
    };
    let mut seen: HashSet<(i64, u64)> = HashSet::new();
    let mut stack = vec![(start, t0)];
    while let Some((x, s)) = stack.pop() {
        if !seen.insert((x, s.to_bits())) {
            continue;
        }
        if spec.kind == BoxKind::Horizontal && x == hi {
            return true;
        }
        let end = next_cure(x, s);
        if spec.kind == BoxKind::Vertical && end > t1 {
            return true;
        }
        for y in [x - 1, x + 1] {
            if y < lo || y > hi {
                continue;
            }
            for &r in sample.arrows(Edge::new(x, y)) {
                if r > s && r < end && r <= t1 {
                    stack.push((y, r));
                }
            }
        }
    }
    false
}

/// Classical contact process on `[-L, L]` with unit cure rate, simulated
/// event by event from exponential clocks. Returns whether anything is
/// infected at time `horizon`.
pub fn gillespie_survives(lambda: f64, half_width: i64, horizon: f64, rng: &mut StdRng) -> bool {
    let size = (2 * half_width + 1) as usize;
    let mut infected = vec![false; size];
    let mut list: Vec<usize> = Vec::new();
    let mut pos = vec![usize::MAX; size];
    let origin = half_width as usize;
    infected[origin] = true;
    pos[origin] = 0;
    list.push(origin);
    let per_site = 1.0 + 2.0 * lambda;
    let mut t = 0.0;
    loop {
        if list.is_empty() {
            return false;
        }
        let rate = per_site * list.len() as f64;
        t += -rng.random::<f64>().ln() / rate;
        if t > horizon {
            return true;
        }
        let x = list[rng.random_range(0..list.len())];
        if rng.random::<f64>() * per_site < 1.0 {
            infected[x] = false;
            let p = pos[x];
            let last = list.pop().expect("nonempty");
            if last != x {
                list[p] = last;
                pos[last] = p;
            }
            pos[x] = usize::MAX;
        } else {
            let y = if rng.random::<bool>() { x.wrapping_sub(1) } else { x + 1 };
            if y < size && !infected[y] {
                infected[y] = true;
                pos[y] = list.len();
                list.push(y);
            }
        }
    }
}

/// Survival fraction of `n` independent classical runs.
pub fn gillespie_survival(lambda: f64, half_width: i64, horizon: f64, n: u64, seed: u64) -> f64 {
    let alive = (0..n)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = StdRng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(i));
            gillespie_survives(lambda, half_width, horizon, &mut rng)
        })
        .count();
    alive as f64 / n as f64
}

/// Percolation by enumerating every oriented path from the origin.
pub fn oracle_percolates(field: &BlockField, depth: usize) -> bool {
    fn walk(f: &BlockField, x: usize, y: usize, depth: usize) -> bool {
        if y == depth {
            return true;
        }
        (f.is_open(BoxKind::Horizontal, x, y) && walk(f, x + 1, y, depth))
            || (f.is_open(BoxKind::Vertical, x, y) && walk(f, x, y + 1, depth))
    }
    depth == 0 || walk(field, 0, 0, depth)
}

/// Kolmogorov–Smirnov statistic of a sample against a continuous cdf.
pub fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Critical value of the KS statistic at level 0.001 for sample size `n`.
pub fn ks_critical_001(n: usize) -> f64 {
    1.949 / (n as f64).sqrt()
}
