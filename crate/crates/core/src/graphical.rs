//! The graphical representation: cure trains per site and Poisson arrow
//! trains per directed nearest-neighbour edge, on the window
//! `[-L, L] x [0, T]`.
//!
//! [`LazySample`] generates both lazily and deterministically. A site's
//! train is drawn on first use from a stream keyed by the site; an edge's
//! arrows are cut into fixed-length time chunks, each drawn from a stream
//! keyed by the edge and chunk index. Nothing depends on generation order,
//! on `L` or on `T`, so nested windows built from one seed share their
//! randomness, and very large rates cost only what the dynamics touch.
//! [`GraphicalSample`] is the fully materialized form.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rand::Rng;

use crate::distributions::InterarrivalLaw;
use crate::error::{Error, Result};
use crate::renewal::{generate_train, RenewalTrain, TauSpec};
use crate::seeding::{self, hashed_uniform, site_key, tag};

/// Expected number of arrows per generated chunk.
const ARROWS_PER_CHUNK: f64 = 12.0;

/// A directed nearest-neighbour edge; ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: i64,
    pub to: i64,
}

impl Edge {
    pub fn new(from: i64, to: i64) -> Self {
        debug_assert_eq!((from - to).abs(), 1);
        Self { from, to }
    }
}

/// Read access to a percolation structure, shared by the lazy and the
/// materialized samples.
pub trait Percolation: Sync {
    fn half_width(&self) -> i64;
    fn horizon(&self) -> f64;
    /// First cure mark of `site` strictly after `after`.
    fn next_cure(&self, site: i64, after: f64) -> Option<f64>;
    /// First arrow on `edge` after `after` (at or after when `inclusive`).
    fn next_arrow(&self, edge: Edge, after: f64, inclusive: bool) -> Option<f64>;
}

/// How each site's renewal process is started.
#[derive(Debug, Clone, PartialEq)]
pub enum TauPolicy {
    AllZero,
    /// One offset for every site, or one per site listed from `-L` to `L`.
    Fixed(Vec<f64>),
    /// Independent offsets uniform on `[-a, 0]`.
    Uniform { a: f64 },
    Stationary,
}

impl Default for TauPolicy {
    fn default() -> Self {
        TauPolicy::AllZero
    }
}

impl TauPolicy {
    pub fn validate(&self, half_width: i64) -> Result<()> {
        match self {
            TauPolicy::Fixed(v) => {
                let sites = (2 * half_width + 1) as usize;
                if v.len() != 1 && v.len() != sites {
                    return Err(Error::InvalidParameter(format!(
                        "fixed start offsets: need 1 or {sites} values, got {}",
                        v.len()
                    )));
                }
                v.iter().try_for_each(|&t| TauSpec::Fixed(t).validate())
            }
            TauPolicy::Uniform { a } if !(*a >= 0.0 && a.is_finite()) => Err(Error::InvalidParameter(
                format!("uniform start spread must be finite and nonnegative, got {a}"),
            )),
            _ => Ok(()),
        }
    }

    /// Start of the process at `site`.
    pub fn spec_for(&self, site: i64, half_width: i64, seed: u64) -> TauSpec {
        match self {
            TauPolicy::AllZero => TauSpec::Fixed(0.0),
            TauPolicy::Fixed(v) if v.len() == 1 => TauSpec::Fixed(v[0]),
            TauPolicy::Fixed(v) => TauSpec::Fixed(v[(site + half_width) as usize]),
            TauPolicy::Uniform { a } => TauSpec::Fixed(-a * hashed_uniform(seed, &[tag::TAU, site_key(site)])),
            TauPolicy::Stationary => TauSpec::Stationary,
        }
    }
}

impl fmt::Display for TauPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauPolicy::AllZero => f.write_str("zero"),
            TauPolicy::Fixed(v) => {
                f.write_str("fixed(")?;
                for (i, t) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            TauPolicy::Uniform { a } => write!(f, "uniform({a})"),
            TauPolicy::Stationary => f.write_str("stationary"),
        }
    }
}

/// Parses `zero`, `stationary`, `uniform(a)` or `fixed(t1;t2;...)`.
impl FromStr for TauPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("start policy {s:?}: expected zero, stationary, uniform(a) or fixed(t1;t2;...)"));
        match s {
            "zero" => return Ok(TauPolicy::AllZero),
            "stationary" => return Ok(TauPolicy::Stationary),
            _ => {}
        }
        let (name, inner) = s
            .strip_suffix(')')
            .and_then(|r| r.split_once('('))
            .ok_or_else(bad)?;
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        let policy = match name.trim() {
            "uniform" => TauPolicy::Uniform { a: num(inner)? },
            "fixed" => TauPolicy::Fixed(inner.split(';').map(num).collect::<Result<_>>()?),
            _ => return Err(bad()),
        };
        match &policy {
            TauPolicy::Fixed(v) => v.iter().try_for_each(|&t| TauSpec::Fixed(t).validate())?,
            TauPolicy::Uniform { .. } => policy.validate(0)?,
            _ => {}
        }
        Ok(policy)
    }
}

/// Poisson arrow trains on every edge, generated chunk by chunk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrowField {
    seed: u64,
    lambda: f64,
    horizon: f64,
    chunk_len: f64,
}

impl ArrowField {
    pub fn new(seed: u64, lambda: f64, horizon: f64) -> Self {
        let chunk_len = if lambda > 0.0 { ARROWS_PER_CHUNK / lambda } else { f64::INFINITY };
        Self {
            seed,
            lambda,
            horizon,
            chunk_len,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn chunk_start(&self, c: u64) -> f64 {
        c as f64 * self.chunk_len
    }

    /// Arrows of `edge` in chunk `c`, in increasing order.
    fn chunk(&self, edge: Edge, c: u64, out: &mut Vec<f64>) {
        out.clear();
        let start = self.chunk_start(c);
        let end = self.chunk_start(c + 1);
        let mut rng = seeding::stream(self.seed, &[tag::ARROW, site_key(edge.from), site_key(edge.to), c]);
        let mut t = start;
        loop {
            t -= (1.0 - rng.random::<f64>()).ln() / self.lambda;
            if t >= end {
                break;
            }
            out.push(t);
        }
    }

    /// First arrow of `edge` after `after` within `[0, T]`.
    pub fn next_after(&self, edge: Edge, after: f64, inclusive: bool) -> Option<f64> {
        if self.lambda <= 0.0 || after > self.horizon {
            return None;
        }
        let mut c = if after <= 0.0 { 0 } else { (after / self.chunk_len).floor() as u64 };
        while c > 0 && self.chunk_start(c) > after {
            c -= 1;
        }
        let mut buf = Vec::with_capacity(2 * ARROWS_PER_CHUNK as usize);
        while self.chunk_start(c) <= self.horizon {
            self.chunk(edge, c, &mut buf);
            let hit = buf
                .iter()
                .copied()
                .find(|&a| if inclusive { a >= after } else { a > after });
            if let Some(a) = hit {
                return (a <= self.horizon && a >= 0.0).then_some(a);
            }
            c += 1;
        }
        None
    }

    /// All arrows of `edge` in `[0, T]`.
    pub fn materialize(&self, edge: Edge) -> Vec<f64> {
        let mut out = Vec::new();
        if self.lambda <= 0.0 {
            return out;
        }
        let mut buf = Vec::new();
        let mut c = 0;
        while self.chunk_start(c) <= self.horizon {
            self.chunk(edge, c, &mut buf);
            out.extend(buf.iter().copied().filter(|&a| a <= self.horizon));
            c += 1;
        }
        out
    }
}

/// Independent thinning of arrows: an arrow at time `s` on an edge is kept
/// iff a hash of `(seed, edge, s)` falls below `ratio`. Thinnings sharing a
/// seed are nested in their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thinning {
    pub ratio: f64,
    pub seed: u64,
}

impl Thinning {
    #[inline]
    pub fn keeps(&self, edge: Edge, time: f64) -> bool {
        self.ratio >= 1.0
            || hashed_uniform(self.seed, &[tag::THIN, site_key(edge.from), site_key(edge.to), time.to_bits()])
                < self.ratio
    }
}

fn check_window(lambda: f64, half_width: i64, horizon: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be finite and nonnegative, got {lambda}")));
    }
    if half_width < 1 {
        return Err(Error::InvalidParameter(format!("half-width must be at least 1, got {half_width}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    Ok(())
}

/// Lazily generated graphical representation.
///
/// Cloning is cheap and clones share the cure trains already drawn.
#[derive(Debug, Clone)]
pub struct LazySample {
    law: InterarrivalLaw,
    half_width: i64,
    horizon: f64,
    lambda: f64,
    seed: u64,
    tau_policy: TauPolicy,
    arrows: ArrowField,
    thinning: Option<Thinning>,
    cures: Arc<[OnceLock<RenewalTrain>]>,
}

impl LazySample {
    pub fn new(
        law: &InterarrivalLaw,
        lambda: f64,
        half_width: i64,
        horizon: f64,
        tau_policy: &TauPolicy,
        seed: u64,
    ) -> Result<Self> {
        check_window(lambda, half_width, horizon)?;
        tau_policy.validate(half_width)?;
        if tau_policy == &TauPolicy::Stationary && !law.mean().is_finite() {
            return Err(Error::Unsupported {
                op: "stationary start (infinite mean)",
                law: law.to_string(),
            });
        }
        let sites = (2 * half_width + 1) as usize;
        Ok(Self {
            law: law.clone(),
            half_width,
            horizon,
            lambda,
            seed,
            tau_policy: tau_policy.clone(),
            arrows: ArrowField::new(seed, lambda, horizon),
            thinning: None,
            cures: (0..sites).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn law(&self) -> &InterarrivalLaw {
        &self.law
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn tau_policy(&self) -> &TauPolicy {
        &self.tau_policy
    }

    /// Same cure trains, arrows thinned to rate `lambda_prime`.
    ///
    /// Thinning is always relative to the rate this sample was created
    /// with, so views with one `thin_seed` are nested whatever order they
    /// are taken in.
    pub fn thinned(&self, lambda_prime: f64, thin_seed: u64) -> Result<Self> {
        if !(lambda_prime >= 0.0 && lambda_prime <= self.lambda) {
            return Err(Error::InvalidArgument(format!(
                "thinned rate {lambda_prime} must lie in [0, {}]",
                self.lambda
            )));
        }
        let base = self.arrows.lambda();
        let mut out = self.clone();
        out.lambda = lambda_prime;
        out.thinning = Some(Thinning {
            ratio: if base > 0.0 { lambda_prime / base } else { 0.0 },
            seed: thin_seed,
        });
        Ok(out)
    }

    /// The cure train of `site`, drawn on first use.
    pub fn cure_train(&self, site: i64) -> &RenewalTrain {
        assert!(site.abs() <= self.half_width, "site {site} outside the window");
        self.cures[(site + self.half_width) as usize].get_or_init(|| {
            let spec = self.tau_policy.spec_for(site, self.half_width, self.seed);
            let mut rng = seeding::stream(self.seed, &[tag::CURE, site_key(site)]);
            generate_train(&self.law, spec, self.horizon, site, &mut rng).expect("validated law and start")
        })
    }

    fn kept(&self, edge: Edge, time: f64) -> bool {
        self.thinning.is_none_or(|th| th.ratio > 0.0 && th.keeps(edge, time))
    }

    /// Every arrow of `edge` in `[0, T]`.
    pub fn arrow_train(&self, edge: Edge) -> Vec<f64> {
        if self.lambda <= 0.0 {
            return Vec::new();
        }
        let mut v = self.arrows.materialize(edge);
        v.retain(|&t| self.kept(edge, t));
        v
    }

    /// Draws everything in the window.
    pub fn materialize(&self) -> GraphicalSample {
        let l = self.half_width;
        GraphicalSample {
            half_width: l,
            horizon: self.horizon,
            lambda: self.lambda,
            seed: self.seed,
            law: self.law.to_string(),
            tau_policy: self.tau_policy.to_string(),
            cure_trains: (-l..=l).map(|x| self.cure_train(x).clone()).collect(),
            right: (-l..l).map(|x| self.arrow_train(Edge::new(x, x + 1))).collect(),
            left: (-l..l).map(|x| self.arrow_train(Edge::new(x + 1, x))).collect(),
        }
    }
}

impl Percolation for LazySample {
    fn half_width(&self) -> i64 {
        self.half_width
    }
    fn horizon(&self) -> f64 {
        self.horizon
    }
    fn next_cure(&self, site: i64, after: f64) -> Option<f64> {
        self.cure_train(site).next_after(after)
    }
    fn next_arrow(&self, edge: Edge, after: f64, inclusive: bool) -> Option<f64> {
        if self.lambda <= 0.0 {
            return None;
        }
        let mut a = self.arrows.next_after(edge, after, inclusive)?;
        while !self.kept(edge, a) {
            a = self.arrows.next_after(edge, a, false)?;
        }
        Some(a)
    }
}

/// A fully materialized graphical representation.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphicalSample {
    half_width: i64,
    horizon: f64,
    lambda: f64,
    seed: u64,
    law: String,
    tau_policy: String,
    cure_trains: Vec<RenewalTrain>,
    /// Arrows `x -> x + 1` for `x` in `[-L, L)`.
    right: Vec<Vec<f64>>,
    /// Arrows `x + 1 -> x` for `x` in `[-L, L)`.
    left: Vec<Vec<f64>>,
}

impl GraphicalSample {
    pub fn build(
        law: &InterarrivalLaw,
        lambda: f64,
        half_width: i64,
        horizon: f64,
        tau_policy: &TauPolicy,
        seed: u64,
    ) -> Result<Self> {
        Ok(LazySample::new(law, lambda, half_width, horizon, tau_policy, seed)?.materialize())
    }

    /// Assembles a sample from explicit trains, e.g. a hand-built test case.
    /// `arrows` yields `(edge, times)` pairs; missing edges are empty.
    pub fn from_parts(
        half_width: i64,
        horizon: f64,
        lambda: f64,
        cure_trains: Vec<RenewalTrain>,
        arrows: impl IntoIterator<Item = (Edge, Vec<f64>)>,
    ) -> Result<Self> {
        check_window(lambda, half_width, horizon)?;
        let sites = (2 * half_width + 1) as usize;
        if cure_trains.len() != sites {
            return Err(Error::InvalidParameter(format!("need {sites} cure trains, got {}", cure_trains.len())));
        }
        for (i, tr) in cure_trains.iter().enumerate() {
            if tr.site() != i as i64 - half_width || tr.horizon() != horizon {
                return Err(Error::InvalidParameter(format!(
                    "cure train {i} has site {} and horizon {}",
                    tr.site(),
                    tr.horizon()
                )));
            }
        }
        let mut s = Self {
            half_width,
            horizon,
            lambda,
            seed: 0,
            law: "custom".into(),
            tau_policy: "custom".into(),
            cure_trains,
            right: vec![Vec::new(); 2 * half_width as usize],
            left: vec![Vec::new(); 2 * half_width as usize],
        };
        for (edge, times) in arrows {
            if times.windows(2).any(|w| w[0] >= w[1]) || times.iter().any(|t| !(0.0..=horizon).contains(t)) {
                return Err(Error::InvalidParameter(format!(
                    "arrows on {edge:?} must be strictly increasing in [0, T]"
                )));
            }
            *s.slot_mut(edge)? = times;
        }
        Ok(s)
    }

    fn slot(&self, edge: Edge) -> Option<&Vec<f64>> {
        let l = self.half_width;
        if edge.from.abs() > l || edge.to.abs() > l {
            return None;
        }
        match edge.to - edge.from {
            1 => self.right.get((edge.from + l) as usize),
            -1 => self.left.get((edge.to + l) as usize),
            _ => None,
        }
    }

    fn slot_mut(&mut self, edge: Edge) -> Result<&mut Vec<f64>> {
        let l = self.half_width;
        if edge.from.abs() > l || edge.to.abs() > l {
            return Err(Error::InvalidParameter(format!("edge {edge:?} outside the window")));
        }
        match edge.to - edge.from {
            1 => Ok(&mut self.right[(edge.from + l) as usize]),
            -1 => Ok(&mut self.left[(edge.to + l) as usize]),
            _ => Err(Error::InvalidParameter(format!("{edge:?} is not a nearest-neighbour edge"))),
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn law_descriptor(&self) -> &str {
        &self.law
    }
    pub fn tau_descriptor(&self) -> &str {
        &self.tau_policy
    }
    pub fn cure_train(&self, site: i64) -> &RenewalTrain {
        &self.cure_trains[(site + self.half_width) as usize]
    }
    pub fn cure_trains(&self) -> &[RenewalTrain] {
        &self.cure_trains
    }

    /// Arrows of `edge`; empty for edges leaving the window.
    pub fn arrows(&self, edge: Edge) -> &[f64] {
        self.slot(edge).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All edges of the window in lexicographic order.
    pub fn edges(&self) -> Vec<Edge> {
        window_edges(self.half_width)
    }

    /// Keeps each arrow independently with probability `lambda_prime / lambda`,
    /// using the same rule as [`LazySample::thinned`].
    pub fn thin(&self, lambda_prime: f64, thin_seed: u64) -> Result<Self> {
        if !(lambda_prime >= 0.0 && lambda_prime <= self.lambda) {
            return Err(Error::InvalidArgument(format!(
                "thinned rate {lambda_prime} must lie in [0, {}]",
                self.lambda
            )));
        }
        let th = Thinning {
            ratio: if self.lambda > 0.0 { lambda_prime / self.lambda } else { 0.0 },
            seed: thin_seed,
        };
        let mut out = self.clone();
        out.lambda = lambda_prime;
        for edge in self.edges() {
            let slot = out.slot_mut(edge)?;
            slot.retain(|&t| th.ratio > 0.0 && th.keeps(edge, t));
        }
        Ok(out)
    }

    const MAGIC: [u8; 8] = *b"RCPGRAPH";
    const VERSION: u64 = 1;

    /// Writes the binary dump: a header, the per-site trains from `-L` to
    /// `L`, then the per-edge arrows in lexicographic edge order. Numbers
    /// are little-endian 64-bit; strings are length-prefixed UTF-8.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&Self::MAGIC)?;
        put_u64(&mut w, Self::VERSION)?;
        put_u64(&mut w, self.half_width as u64)?;
        put_f64(&mut w, self.horizon)?;
        put_f64(&mut w, self.lambda)?;
        put_u64(&mut w, self.seed)?;
        put_str(&mut w, &self.law)?;
        put_str(&mut w, &self.tau_policy)?;
        for tr in &self.cure_trains {
            put_f64(&mut w, tr.tau())?;
            put_f64(&mut w, tr.anchor())?;
            put_times(&mut w, tr.marks())?;
        }
        for edge in self.edges() {
            put_times(&mut w, self.arrows(edge))?;
        }
        Ok(())
    }

    pub fn restore<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if magic != Self::MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = get_u64(&mut r)?;
        if version != Self::VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let half_width = get_u64(&mut r)? as i64;
        if !(1..=1 << 32).contains(&half_width) {
            return Err(Error::Format(format!("implausible half-width {half_width}")));
        }
        let horizon = get_f64(&mut r)?;
        let lambda = get_f64(&mut r)?;
        let seed = get_u64(&mut r)?;
        let law = get_str(&mut r)?;
        let tau_policy = get_str(&mut r)?;
        let mut trains = Vec::with_capacity((2 * half_width + 1) as usize);
        for site in -half_width..=half_width {
            let tau = get_f64(&mut r)?;
            let anchor = get_f64(&mut r)?;
            let marks = get_times(&mut r)?;
            trains.push(
                RenewalTrain::from_parts(site, tau, anchor, marks, horizon)
                    .map_err(|e| Error::Format(e.to_string()))?,
            );
        }
        let edges = window_edges(half_width);
        let mut arrows = Vec::with_capacity(edges.len());
        for edge in edges {
            arrows.push((edge, get_times(&mut r)?));
        }
        let mut s = Self::from_parts(half_width, horizon, lambda, trains, arrows)
            .map_err(|e| Error::Format(e.to_string()))?;
        s.seed = seed;
        s.law = law;
        s.tau_policy = tau_policy;
        Ok(s)
    }
}

/// Directed nearest-neighbour edges of `[-L, L]` in lexicographic order.
pub fn window_edges(half_width: i64) -> Vec<Edge> {
    let l = half_width;
    let mut v = Vec::with_capacity(4 * l as usize);
    for x in -l..=l {
        if x > -l {
            v.push(Edge::new(x, x - 1));
        }
        if x < l {
            v.push(Edge::new(x, x + 1));
        }
    }
    v
}

impl Percolation for GraphicalSample {
    fn half_width(&self) -> i64 {
        self.half_width
    }
    fn horizon(&self) -> f64 {
        self.horizon
    }
    fn next_cure(&self, site: i64, after: f64) -> Option<f64> {
        self.cure_train(site).next_after(after)
    }
    fn next_arrow(&self, edge: Edge, after: f64, inclusive: bool) -> Option<f64> {
        let v = self.slot(edge)?;
        let i = if inclusive {
            v.partition_point(|&a| a < after)
        } else {
            v.partition_point(|&a| a <= after)
        };
        v.get(i).copied()
    }
}

fn put_u64<W: Write>(w: &mut W, x: u64) -> Result<()> {
    Ok(w.write_all(&x.to_le_bytes())?)
}
fn put_f64<W: Write>(w: &mut W, x: f64) -> Result<()> {
    Ok(w.write_all(&x.to_le_bytes())?)
}
fn put_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    put_u64(w, s.len() as u64)?;
    Ok(w.write_all(s.as_bytes())?)
}
fn put_times<W: Write>(w: &mut W, v: &[f64]) -> Result<()> {
    put_u64(w, v.len() as u64)?;
    v.iter().try_for_each(|&t| put_f64(w, t))
}
fn get_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(get_u64(r)?))
}
fn get_len<R: Read>(r: &mut R) -> Result<usize> {
    let n = get_u64(r)?;
    if n > 1 << 40 {
        return Err(Error::Format(format!("implausible length {n}")));
    }
    Ok(n as usize)
}
fn get_str<R: Read>(r: &mut R) -> Result<String> {
    let n = get_len(r)?;
    let mut b = vec![0u8; n];
    r.read_exact(&mut b)?;
    String::from_utf8(b).map_err(|e| Error::Format(e.to_string()))
}
fn get_times<R: Read>(r: &mut R) -> Result<Vec<f64>> {
    let n = get_len(r)?;
    (0..n).map(|_| get_f64(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp1() -> InterarrivalLaw {
        InterarrivalLaw::exponential(1.0).unwrap()
    }

    #[test]
    fn zero_rate_has_no_arrows() {
        let s = GraphicalSample::build(&exp1(), 0.0, 3, 5.0, &TauPolicy::AllZero, 1).unwrap();
        assert!(s.edges().iter().all(|&e| s.arrows(e).is_empty()));
    }

    #[test]
    fn build_is_deterministic_and_valid() {
        let a = GraphicalSample::build(&exp1(), 2.0, 4, 5.0, &TauPolicy::Stationary, 9).unwrap();
        let b = GraphicalSample::build(&exp1(), 2.0, 4, 5.0, &TauPolicy::Stationary, 9).unwrap();
        assert_eq!(a, b);
        for e in a.edges() {
            let v = a.arrows(e);
            assert!(v.windows(2).all(|w| w[0] < w[1]));
            assert!(v.iter().all(|t| (0.0..=5.0).contains(t)));
        }
    }

    #[test]
    fn lazy_queries_match_materialized_trains() {
        let lazy = LazySample::new(&exp1(), 3.0, 3, 7.0, &TauPolicy::Uniform { a: 2.0 }, 4).unwrap();
        let full = lazy.materialize();
        for e in full.edges() {
            let mut t = -1.0;
            let mut seen = Vec::new();
            while let Some(a) = lazy.next_arrow(e, t, false) {
                assert_eq!(Percolation::next_arrow(&full, e, t, false), Some(a));
                seen.push(a);
                t = a;
            }
            assert_eq!(seen, full.arrows(e));
            assert_eq!(lazy.next_arrow(e, seen.first().copied().unwrap_or(0.0), true), seen.first().copied().or(None));
        }
    }

    #[test]
    fn nested_windows_share_randomness() {
        let small = LazySample::new(&exp1(), 2.0, 3, 4.0, &TauPolicy::AllZero, 5).unwrap();
        let big = LazySample::new(&exp1(), 2.0, 6, 9.0, &TauPolicy::AllZero, 5).unwrap();
        for x in -3..=3 {
            let s = small.cure_train(x).marks();
            let b = big.cure_train(x).marks();
            assert_eq!(s, &b[..s.len()]);
        }
        let e = Edge::new(0, 1);
        let s = small.arrow_train(e);
        assert_eq!(s, &big.arrow_train(e)[..s.len()]);
    }

    #[test]
    fn thinning_is_nested_and_bounded() {
        let s = GraphicalSample::build(&exp1(), 4.0, 5, 10.0, &TauPolicy::AllZero, 2).unwrap();
        assert_eq!(s.thin(4.0, 1).unwrap().right, s.right);
        let zero = s.thin(0.0, 1).unwrap();
        assert!(zero.edges().iter().all(|&e| zero.arrows(e).is_empty()));
        let a = s.thin(3.0, 1).unwrap();
        let b = s.thin(1.0, 1).unwrap();
        for e in s.edges() {
            assert!(b.arrows(e).iter().all(|t| a.arrows(e).contains(t)));
            assert!(a.arrows(e).iter().all(|t| s.arrows(e).contains(t)));
        }
        assert!(s.thin(5.0, 1).is_err());
    }

    #[test]
    fn lazy_and_materialized_thinning_agree() {
        let lazy = LazySample::new(&exp1(), 4.0, 3, 6.0, &TauPolicy::AllZero, 8).unwrap();
        let direct = lazy.materialize().thin(1.5, 3).unwrap();
        let via_lazy = lazy.thinned(1.5, 3).unwrap().materialize();
        for e in direct.edges() {
            assert_eq!(direct.arrows(e), via_lazy.arrows(e));
        }
        let twice = lazy.thinned(3.0, 3).unwrap().thinned(1.5, 3).unwrap().materialize();
        assert_eq!(twice.right, via_lazy.right);
    }

    #[test]
    fn dump_restore_round_trip() {
        let s = GraphicalSample::build(&exp1(), 1.5, 3, 4.0, &TauPolicy::Stationary, 77).unwrap();
        let mut buf = Vec::new();
        s.dump(&mut buf).unwrap();
        let r = GraphicalSample::restore(buf.as_slice()).unwrap();
        assert_eq!(r, s);
        let mut again = Vec::new();
        r.dump(&mut again).unwrap();
        assert_eq!(again, buf);
        assert!(GraphicalSample::restore(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(GraphicalSample::restore(bad.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn tau_policy_grammar() {
        for s in ["zero", "stationary", "uniform(2)", "fixed(-0.5)", "fixed(0;-1;-2)"] {
            let p: TauPolicy = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("fixed(1)".parse::<TauPolicy>().is_err());
        assert!("uniform(-1)".parse::<TauPolicy>().is_err());
        assert!(TauPolicy::Fixed(vec![0.0, -1.0]).validate(3).is_err());
    }

    #[test]
    fn edges_are_lexicographic() {
        let e = window_edges(2);
        assert_eq!(e.len(), 8);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
    }
}
