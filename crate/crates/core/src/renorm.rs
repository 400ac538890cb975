//! Block renormalisation: box crossings of a graphical sample read as the
//! edge states of an oriented percolation graph on the wedge
//! `0 <= x <= y + 1`.
//!
//! Vertex `(x, y)` stands for the site pair `{2x, 2x+1}` at the base time
//! of row `y`. Horizontal edges `(x, y) -> (x+1, y)` are open when the
//! horizontal box based at `(2x, row time)` is crossed, vertical edges
//! `(x, y) -> (x, y+1)` when the vertical box is.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::crossings::{self, BoxKind, BoxSpec, Scheme};
use crate::distributions::InterarrivalLaw;
use crate::error::{Error, Result};
use crate::graphical::{LazySample, Percolation, TauPolicy};
use crate::stats::{self, Estimate};

/// Which site of a vertex pair is infected at the base of an edge's box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Seeding {
    /// Every box starts from its left site `2x`.
    #[default]
    Conditional,
    /// Boxes out of vertices reached through a horizontal edge start from
    /// `2x + 1`, the site the incoming crossing ended on. Edges the
    /// exploration never reaches fall back to the conditional rule.
    Exploration,
}

impl fmt::Display for Seeding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Seeding::Conditional => "conditional",
            Seeding::Exploration => "exploration",
        })
    }
}

impl FromStr for Seeding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "conditional" => Ok(Seeding::Conditional),
            "exploration" => Ok(Seeding::Exploration),
            other => Err(Error::Parse(format!("seeding {other:?}: expected conditional or exploration"))),
        }
    }
}

/// Box geometry options of [`block_map`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockGeometry {
    pub scheme: Scheme,
    /// Use height 1 instead of `b` for the bounded scheme's horizontal
    /// boxes.
    pub literal_horizontal_height: bool,
}

impl BlockGeometry {
    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            literal_horizontal_height: false,
        }
    }

    fn row_time(&self, y: usize) -> f64 {
        match self.scheme {
            Scheme::Bounded { b } => 2.0 * y as f64 * b,
            Scheme::Dfr => y as f64,
        }
    }

    pub fn box_for(&self, kind: BoxKind, x: usize, y: usize) -> BoxSpec {
        let mut spec = BoxSpec::new(kind, 2 * x as i64, self.row_time(y), self.scheme);
        if self.literal_horizontal_height && kind == BoxKind::Horizontal {
            if let Scheme::Bounded { .. } = self.scheme {
                spec.height_override = Some(1.0);
            }
        }
        spec
    }

    /// Smallest `(half_width, horizon)` whose window holds every box of an
    /// `n_cols x n_rows` field.
    pub fn required_window(&self, n_cols: usize, n_rows: usize) -> (i64, f64) {
        let mut horizon: f64 = 0.0;
        if n_rows > 0 {
            let last = n_rows - 1;
            horizon = horizon.max(self.box_for(BoxKind::Vertical, 0, last).top());
            horizon = horizon.max(self.box_for(BoxKind::Horizontal, 0, last).top());
        }
        (2 * n_cols as i64 - 1, horizon)
    }
}

/// Edge states of the block graph. Vertices are `(x, y)` with
/// `0 <= x < n_cols` and `0 <= y <= n_rows`; horizontal edges exist for
/// `x + 1 < n_cols`, `y < n_rows` and `x <= y`, vertical edges for
/// `y < n_rows` and `x <= y + 1`. Absent edges are stored closed.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockField {
    pub n_cols: usize,
    pub n_rows: usize,
    /// `h_open[y][x]` for the edge `(x, y) -> (x + 1, y)`.
    pub h_open: Vec<Vec<bool>>,
    /// `v_open[y][x]` for the edge `(x, y) -> (x, y + 1)`.
    pub v_open: Vec<Vec<bool>>,
    pub scheme: Option<Scheme>,
    pub lambda: f64,
    pub law: String,
    pub seed: u64,
}

impl BlockField {
    pub fn h_present(&self, x: usize, y: usize) -> bool {
        x + 1 < self.n_cols && y < self.n_rows && x <= y
    }

    pub fn v_present(&self, x: usize, y: usize) -> bool {
        x < self.n_cols && y < self.n_rows && x <= y + 1
    }

    pub fn is_open(&self, kind: BoxKind, x: usize, y: usize) -> bool {
        match kind {
            BoxKind::Horizontal => self.h_present(x, y) && self.h_open[y][x],
            BoxKind::Vertical => self.v_present(x, y) && self.v_open[y][x],
        }
    }

    /// Present edges in row-major order, horizontal before vertical.
    pub fn edges(&self) -> Vec<(BoxKind, usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.n_rows {
            for x in 0..self.n_cols {
                if self.h_present(x, y) {
                    out.push((BoxKind::Horizontal, x, y));
                }
                if self.v_present(x, y) {
                    out.push((BoxKind::Vertical, x, y));
                }
            }
        }
        out
    }

    fn closed(n_cols: usize, n_rows: usize) -> Self {
        Self {
            n_cols,
            n_rows,
            h_open: vec![vec![false; n_cols]; n_rows],
            v_open: vec![vec![false; n_cols]; n_rows],
            scheme: None,
            lambda: f64::NAN,
            law: String::new(),
            seed: 0,
        }
    }

    fn set(&mut self, kind: BoxKind, x: usize, y: usize, open: bool) {
        match kind {
            BoxKind::Horizontal => self.h_open[y][x] = open,
            BoxKind::Vertical => self.v_open[y][x] = open,
        }
    }

    pub const CSV_HEADER: &'static str = "x,y,edge_kind,open";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for (kind, x, y) in self.edges() {
            let k = if kind == BoxKind::Horizontal { 'H' } else { 'V' };
            s.push_str(&format!("{x},{y},{k},{}\n", self.is_open(kind, x, y) as u8));
        }
        s
    }
}

fn check_dims(n_cols: usize, n_rows: usize) -> Result<()> {
    if n_cols == 0 || n_rows == 0 {
        return Err(Error::InvalidArgument(format!(
            "field needs at least one column and row, got {n_cols} x {n_rows}"
        )));
    }
    Ok(())
}

/// Evaluates every edge of an `n_cols x n_rows` field on `sample`.
pub fn block_map<P: Percolation + ?Sized>(
    sample: &P,
    geometry: BlockGeometry,
    n_cols: usize,
    n_rows: usize,
    seeding: Seeding,
) -> Result<BlockField> {
    check_dims(n_cols, n_rows)?;
    geometry.scheme.validate()?;
    let (need_l, need_t) = geometry.required_window(n_cols, n_rows);
    if sample.half_width() < need_l || sample.horizon() < need_t {
        return Err(Error::WindowTooSmall {
            need_half_width: need_l,
            need_horizon: need_t,
            half_width: sample.half_width(),
            horizon: sample.horizon(),
        });
    }
    let mut field = BlockField::closed(n_cols, n_rows);
    field.scheme = Some(geometry.scheme);
    let edges = field.edges();
    let eval = |kind, x: usize, y: usize, offset: i64| -> Result<bool> {
        let spec = geometry.box_for(kind, x, y);
        crossings::crossing(sample, &spec, spec.x + offset)
    };
    let states: Vec<bool> = edges
        .par_iter()
        .map(|&(kind, x, y)| eval(kind, x, y, 0))
        .collect::<Result<_>>()?;
    for (&(kind, x, y), open) in edges.iter().zip(states) {
        field.set(kind, x, y, open);
    }
    if seeding == Seeding::Exploration {
        explore(&mut field, |kind, x, y| eval(kind, x, y, 1))?;
    }
    Ok(field)
}

/// Re-evaluates the edges out of vertices entered horizontally, in
/// breadth-first order from the origin.
fn explore<F>(field: &mut BlockField, mut from_right: F) -> Result<()>
where
    F: FnMut(BoxKind, usize, usize) -> Result<bool>,
{
    let (c, r) = (field.n_cols, field.n_rows);
    let idx = |x: usize, y: usize| y * c + x;
    let mut seen = vec![false; c * (r + 1)];
    let mut queue = VecDeque::from([(0usize, 0usize, false)]);
    seen[0] = true;
    while let Some((x, y, via_h)) = queue.pop_front() {
        if via_h {
            for kind in [BoxKind::Horizontal, BoxKind::Vertical] {
                let present = match kind {
                    BoxKind::Horizontal => field.h_present(x, y),
                    BoxKind::Vertical => field.v_present(x, y),
                };
                if present {
                    let open = from_right(kind, x, y)?;
                    field.set(kind, x, y, open);
                }
            }
        }
        if field.is_open(BoxKind::Horizontal, x, y) && !seen[idx(x + 1, y)] {
            seen[idx(x + 1, y)] = true;
            queue.push_back((x + 1, y, true));
        }
        if field.is_open(BoxKind::Vertical, x, y) && !seen[idx(x, y + 1)] {
            seen[idx(x, y + 1)] = true;
            queue.push_back((x, y + 1, false));
        }
    }
    Ok(())
}

/// Whether an open oriented path leads from `(0, 0)` to row `depth`.
pub fn percolates(field: &BlockField, depth: usize) -> Result<bool> {
    if depth > field.n_rows {
        return Err(Error::InvalidArgument(format!(
            "depth {depth} exceeds the field's {} rows",
            field.n_rows
        )));
    }
    if depth == 0 {
        return Ok(true);
    }
    let c = field.n_cols;
    let mut seen = vec![false; c * (depth + 1)];
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    seen[0] = true;
    while let Some((x, y)) = queue.pop_front() {
        if y == depth {
            return Ok(true);
        }
        let mut visit = |nx: usize, ny: usize| {
            if !seen[ny * c + nx] {
                seen[ny * c + nx] = true;
                queue.push_back((nx, ny));
            }
        };
        if field.is_open(BoxKind::Horizontal, x, y) {
            visit(x + 1, y);
        }
        if field.is_open(BoxKind::Vertical, x, y) {
            visit(x, y + 1);
        }
    }
    Ok(false)
}

/// Field with independent edges, each open with probability `p`.
pub fn bernoulli_field<R: Rng + ?Sized>(p: f64, n_cols: usize, n_rows: usize, rng: &mut R) -> Result<BlockField> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must lie in [0, 1], got {p}")));
    }
    check_dims(n_cols, n_rows)?;
    let mut field = BlockField::closed(n_cols, n_rows);
    for (kind, x, y) in field.edges() {
        let open = rng.random::<f64>() < p;
        field.set(kind, x, y, open);
    }
    field.lambda = p;
    field.law = format!("bernoulli({p})");
    Ok(field)
}

const OP_FIELD: u64 = 0x21;

/// Inputs of a batch of independent dependent-field replicas.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRun {
    pub law: InterarrivalLaw,
    pub lambda: f64,
    pub geometry: BlockGeometry,
    pub n_cols: usize,
    pub n_rows: usize,
    pub seeding: Seeding,
    pub tau_policy: TauPolicy,
}

impl FieldRun {
    pub fn new(law: InterarrivalLaw, lambda: f64, scheme: Scheme, n_cols: usize, n_rows: usize) -> Self {
        Self {
            law,
            lambda,
            geometry: BlockGeometry::new(scheme),
            n_cols,
            n_rows,
            seeding: Seeding::Conditional,
            tau_policy: TauPolicy::AllZero,
        }
    }

    /// Field `i` of the batch keyed by `seed`.
    pub fn field(&self, seed: u64, i: u64) -> Result<BlockField> {
        let s = stats::replica_seed(seed, &[OP_FIELD], i);
        let (l, t) = self.geometry.required_window(self.n_cols, self.n_rows);
        let sample = LazySample::new(&self.law, self.lambda, l, t, &self.tau_policy, s)?;
        let mut f = block_map(&sample, self.geometry, self.n_cols, self.n_rows, self.seeding)?;
        f.lambda = self.lambda;
        f.law = self.law.to_string();
        f.seed = s;
        Ok(f)
    }

    pub fn fields(&self, n: u64, seed: u64) -> Result<Vec<BlockField>> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one replica".into()));
        }
        // Surface configuration errors once instead of per replica.
        self.field(seed, 0)?;
        stats::replicate(n, |i| self.field(seed, i)).into_iter().collect()
    }
}

/// Open frequency of one edge over a batch of fields.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalRow {
    pub kind: BoxKind,
    pub x: usize,
    pub y: usize,
    pub estimate: Estimate,
}

/// Sample correlation between the states of two edges.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub a: (BoxKind, usize, usize),
    pub b: (BoxKind, usize, usize),
    /// Distance between the two edges' boxes, positive when the boxes are
    /// disjoint.
    pub time_gap: f64,
    pub shares_endpoint: bool,
    /// `None` when either edge never varied over the batch.
    pub correlation: Option<f64>,
    /// Standard deviation of the sample correlation of independent edges.
    pub sigma: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependencyReport {
    pub marginals: Vec<MarginalRow>,
    pub correlations: Vec<CorrelationRow>,
}

impl DependencyReport {
    /// Lowest per-edge open frequency.
    pub fn min_marginal(&self) -> Option<&MarginalRow> {
        self.marginals
            .iter()
            .min_by(|a, b| a.estimate.value.total_cmp(&b.estimate.value))
    }
}

fn endpoints(e: (BoxKind, usize, usize)) -> [(usize, usize); 2] {
    let (k, x, y) = e;
    match k {
        BoxKind::Horizontal => [(x, y), (x + 1, y)],
        BoxKind::Vertical => [(x, y), (x, y + 1)],
    }
}

/// Open frequencies of every present edge, and correlations of the given
/// edge pairs, over a batch of fields of equal shape.
pub fn dependency_report(
    fields: &[BlockField],
    geometry: BlockGeometry,
    pairs: &[((BoxKind, usize, usize), (BoxKind, usize, usize))],
) -> Result<DependencyReport> {
    let first = fields
        .first()
        .ok_or_else(|| Error::InvalidArgument("need at least one field".into()))?;
    if fields.iter().any(|f| f.n_cols != first.n_cols || f.n_rows != first.n_rows) {
        return Err(Error::InvalidArgument("fields differ in shape".into()));
    }
    let n = fields.len() as u64;
    let state = |e: (BoxKind, usize, usize)| -> Vec<bool> { fields.iter().map(|f| f.is_open(e.0, e.1, e.2)).collect() };
    let marginals = first
        .edges()
        .into_iter()
        .map(|(kind, x, y)| {
            let open = fields.iter().filter(|f| f.is_open(kind, x, y)).count() as u64;
            MarginalRow {
                kind,
                x,
                y,
                estimate: Estimate::from_counts(open, n),
            }
        })
        .collect();
    let sigma = 1.0 / (n as f64).sqrt();
    let mut correlations = Vec::with_capacity(pairs.len());
    for &(a, b) in pairs {
        for e in [a, b] {
            let present = match e.0 {
                BoxKind::Horizontal => first.h_present(e.1, e.2),
                BoxKind::Vertical => first.v_present(e.1, e.2),
            };
            if !present {
                return Err(Error::InvalidArgument(format!("edge {e:?} is not in the field")));
            }
        }
        let (ba, bb) = (geometry.box_for(a.0, a.1, a.2), geometry.box_for(b.0, b.1, b.2));
        let time_gap = (bb.t - ba.top()).max(ba.t - bb.top());
        let shares_endpoint = endpoints(a).iter().any(|p| endpoints(b).contains(p));
        let correlation = stats::indicator_correlation(&state(a), &state(b));
        correlations.push(CorrelationRow {
            a,
            b,
            time_gap,
            shares_endpoint,
            correlation,
            sigma,
            flagged: correlation.is_some_and(|c| c.abs() > 3.0 * sigma),
        });
    }
    Ok(DependencyReport { marginals, correlations })
}

/// Default probe pairs: vertical and horizontal edges in column 0 at row
/// separations 1 to 4 from a middle row, plus two pairs sharing a vertex.
pub fn default_pairs(n_cols: usize, n_rows: usize) -> Vec<((BoxKind, usize, usize), (BoxKind, usize, usize))> {
    use BoxKind::{Horizontal as H, Vertical as V};
    let mut out = Vec::new();
    let y0 = n_rows.saturating_sub(5) / 2;
    for d in 1..=4 {
        if y0 + d < n_rows {
            out.push(((V, 0, y0), (V, 0, y0 + d)));
            if n_cols >= 2 {
                out.push(((H, 0, y0), (H, 0, y0 + d)));
            }
        }
    }
    if n_cols >= 2 && n_rows >= 1 {
        out.push(((H, 0, y0), (V, 1, y0)));
        out.push(((V, 0, y0), (H, 0, y0)));
    }
    out
}

/// Builds `n` fields and reports marginals and default-pair correlations.
pub fn marginal_and_dependency_report(run: &FieldRun, n: u64, seed: u64) -> Result<DependencyReport> {
    let fields = run.fields(n, seed)?;
    dependency_report(&fields, run.geometry, &default_pairs(run.n_cols, run.n_rows))
}
