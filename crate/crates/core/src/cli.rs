//! Command-line front end.
//!
//! Every option can also be given in a config file of `key = value` lines
//! (`#` starts a comment); keys are the long flag names. Flags override the
//! file, which overrides the built-in defaults. CSV goes to `--out` when
//! given and to standard output otherwise; a one-line summary goes to
//! whichever stream the CSV does not use.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::crossings::{self, BoxKind, ConstructionBudget, CrossingReport, Scheme};
use crate::distributions::InterarrivalLaw;
use crate::engine::{self, Configuration};
use crate::error::{Error, Result};
use crate::estimators::{self, CriticalResult, SurvivalSetup, SweepResult};
use crate::graphical::{LazySample, TauPolicy};
use crate::renewal;
use crate::renorm::{self, BlockField, BlockGeometry, Seeding};
use crate::stats::{self, fmt_prob, fmt_time};
use crate::verify::{self, BlocksCheck, CheckRow, CrossingCheck, PathwiseCheck, VerifyReport};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "RCPLAB_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STATISTICAL: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "rcplab", version, about = "Monte Carlo laboratory for the renewal contact process on Z")]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to $RCPLAB_WORKERS, then to all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// CSV destination; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default, Clone)]
struct Model {
    /// Interarrival law, e.g. exp(1), weibull(0.7,1), uniform(1), det(1).
    #[arg(long, global = true)]
    law: Option<InterarrivalLaw>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Half width of the site window [-L, L].
    #[arg(long = "L", global = true)]
    half_width: Option<i64>,
    /// Time horizon.
    #[arg(long = "T", global = true)]
    horizon: Option<f64>,
    /// Clock start policy: zero, stationary, uniform(a) or fixed(t1;t2;...).
    #[arg(long, global = true)]
    tau: Option<TauPolicy>,
    /// Replica count.
    #[arg(long, global = true)]
    n: Option<u64>,
    /// Initially infected sites, separated by `;` or `,`.
    #[arg(long, global = true)]
    initial: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Independent runs: survival indicator and extinction time per replica.
    Simulate {
        /// Also write the trajectory of replica 0 to this file.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[command(flatten)]
        model: Model,
    },
    /// Coupled survival estimates over a rate grid.
    Sweep {
        /// Comma-separated increasing rates.
        #[arg(long)]
        lambdas: Option<String>,
        #[command(flatten)]
        model: Model,
    },
    /// Bisection for the rate at which survival crosses a target.
    Critical {
        #[arg(long)]
        target: Option<f64>,
        /// `lo,hi`.
        #[arg(long)]
        bracket: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<u32>,
        #[command(flatten)]
        model: Model,
    },
    /// Crossing probabilities of one box kind over a grid of base times.
    Crossing {
        #[arg(long)]
        kind: Option<BoxKind>,
        /// bounded(b) or dfr.
        #[arg(long)]
        scheme: Option<Scheme>,
        /// Comma-separated base times; defaults to multiples of the mean.
        #[arg(long)]
        t_grid: Option<String>,
        #[command(flatten)]
        model: Model,
    },
    /// Dependent block fields: percolation per replica and a field dump.
    Blocks {
        #[arg(long)]
        scheme: Option<Scheme>,
        #[arg(long)]
        cols: Option<usize>,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
        /// conditional or exploration.
        #[arg(long)]
        seeding: Option<Seeding>,
        /// Height 1 for bounded-scheme horizontal boxes.
        #[arg(long)]
        literal_height: bool,
        /// Write the field of replica 0 to this file.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[command(flatten)]
        model: Model,
    },
    /// Closed-form thresholds and their full constructions.
    Bounds {
        #[command(subcommand)]
        which: Bound,
    },
    /// Statistical self-checks; exit code 3 when any row fails.
    Verify {
        #[command(subcommand)]
        which: Check,
    },
}

#[derive(Subcommand, Debug)]
enum Bound {
    LambdaH {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        a0: Option<f64>,
    },
    LambdaVBounded {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        u1: Option<f64>,
        #[arg(long)]
        k0: Option<u64>,
    },
    LambdaVDfr {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        u0: Option<f64>,
    },
    A0 {
        #[arg(long)]
        w0: Option<f64>,
        /// Bounded scheme scale; the decreasing-hazard rule applies when
        /// absent.
        #[arg(long)]
        b: Option<f64>,
    },
    /// Every intermediate quantity of the threshold construction for a law.
    Construct {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        scheme: Option<Scheme>,
        #[command(flatten)]
        model: Model,
    },
}

#[derive(Subcommand, Debug)]
enum Check {
    /// Chance of a mark right after a mark-free stretch against F(w)/(1-F(w)).
    DfrGap {
        /// Comma-separated widths; defaults to 0.05, 0.1, 0.2 times the mean.
        #[arg(long)]
        w: Option<String>,
        #[command(flatten)]
        model: Model,
    },
    /// Chance of a mark soon after an old last mark, against the exact value.
    LastMark {
        #[arg(long)]
        v: Option<String>,
        #[arg(long)]
        w: Option<f64>,
        #[command(flatten)]
        model: Model,
    },
    /// Gap width found for p0, re-estimated on a fresh seed.
    Gap {
        #[arg(long)]
        p0: Option<f64>,
        #[command(flatten)]
        model: Model,
    },
    /// Mark-count cap found for p0, re-estimated on a fresh seed.
    K0 {
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        p0: Option<f64>,
        #[command(flatten)]
        model: Model,
    },
    /// Crossing probabilities at the constructed thresholds.
    Crossing {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        n_construct: Option<u64>,
        #[command(flatten)]
        model: Model,
    },
    /// Percolation, marginals and correlations of dependent block fields.
    Blocks {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        cols: Option<usize>,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        n_construct: Option<u64>,
        #[command(flatten)]
        model: Model,
    },
    /// Deterministic law: extinction by time c.
    Degenerate {
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        lambdas: Option<String>,
        #[command(flatten)]
        model: Model,
    },
    /// Thinned pairs stay nested.
    Coupling {
        #[arg(long)]
        lambda_low: Option<f64>,
        #[command(flatten)]
        model: Model,
    },
    /// Runs from A ∪ B equal the union of runs from A and B.
    Additivity {
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
        #[command(flatten)]
        model: Model,
    },
}

/// Keys accepted in config files.
const CONFIG_KEYS: &[&str] = &[
    "workers", "out", "seed", "law", "lambda", "L", "T", "tau", "n", "initial", "trajectory", "lambdas", "target",
    "bracket", "tol", "max_iter", "kind", "scheme", "t_grid", "cols", "rows", "depth", "seeding", "literal_height",
    "dump", "eps", "a0", "u1", "k0", "u0", "w0", "b", "w", "v", "p0", "n_construct", "c", "lambda_low", "a",
];

/// Config-file values, consulted for options missing on the command line.
#[derive(Debug, Default)]
struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {}: expected `key = value`", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let key = k.replace('-', "_");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(Error::Parse(format!("config line {}: unknown key {k:?}", i + 1)));
            }
            values.insert(key, v.to_string());
        }
        Ok(Self { values })
    }

    /// The flag value, else the parsed config value, else `None`.
    fn opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| Error::Parse(format!("config key {key} = {v:?}: {e}"))),
        }
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    fn need<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        self.opt(flag, key)?
            .ok_or_else(|| Error::InvalidArgument(format!("missing required option --{}", key.replace('_', "-"))))
    }

    fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        self.get(None, key, false)
    }
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    s.split([',', ';'])
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|e| Error::Parse(format!("{what} entry {p:?}: {e}"))))
        .collect()
}

fn parse_sites(s: &str) -> Result<Configuration> {
    let v: Vec<i64> = parse_list(s, "site list")?;
    if v.is_empty() {
        return Err(Error::InvalidArgument("site list is empty".into()));
    }
    Ok(v.into_iter().collect())
}

/// Model options with config and defaults applied.
#[derive(Debug, Clone)]
struct Resolved {
    law: InterarrivalLaw,
    lambda: f64,
    half_width: i64,
    horizon: f64,
    tau: TauPolicy,
    n: u64,
    seed: u64,
    initial: Configuration,
}

fn resolve(cfg: &Config, m: &Model, seed: Option<u64>) -> Result<Resolved> {
    let law = cfg.get(m.law.clone(), "law", InterarrivalLaw::exponential(1.0)?)?;
    let initial = parse_sites(&cfg.get(m.initial.clone(), "initial", "0".to_string())?)?;
    let n = cfg.get(m.n, "n", 1000)?;
    if n == 0 {
        return Err(Error::InvalidArgument("--n must be at least 1".into()));
    }
    Ok(Resolved {
        law,
        lambda: cfg.get(m.lambda, "lambda", 2.0)?,
        half_width: cfg.get(m.half_width, "L", 100)?,
        horizon: cfg.get(m.horizon, "T", 50.0)?,
        tau: cfg.get(m.tau.clone(), "tau", TauPolicy::AllZero)?,
        n,
        seed: cfg.get(seed, "seed", 0)?,
        initial,
    })
}

impl Resolved {
    fn setup(&self) -> SurvivalSetup {
        SurvivalSetup {
            law: self.law.clone(),
            half_width: self.half_width,
            horizon: self.horizon,
            initial: self.initial.clone(),
            tau_policy: self.tau.clone(),
            n: self.n,
            seed: self.seed,
        }
    }
}

/// CSV table plus the human summary of one command.
struct Output {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    summary: String,
    statistical_failure: bool,
}

impl Output {
    fn new(header: &str, rows: Vec<Vec<String>>, summary: String) -> Self {
        Self {
            header: header.split(',').map(String::from).collect(),
            rows,
            summary,
            statistical_failure: false,
        }
    }

    fn csv(&self) -> Result<Vec<u8>> {
        to_csv(&self.header, &self.rows)
    }
}

fn to_csv(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let e = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(header).map_err(e)?;
    for r in rows {
        w.write_record(r).map_err(e)?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes)?;
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_)
        | Error::InvalidArgument(_)
        | Error::Parse(_)
        | Error::Unsupported { .. }
        | Error::BoxOutsideWindow(_)
        | Error::WindowTooSmall { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn workers(cfg: &Config, flag: Option<usize>) -> Result<usize> {
    if let Some(w) = cfg.opt(flag, "workers")? {
        return Ok(w);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("{WORKERS_ENV}={v:?}: {e}"))),
        Err(_) => Ok(0),
    }
}

fn execute(cli: Cli) -> Result<i32> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let threads = workers(&cfg, cli.workers)?;
    let out: Option<PathBuf> = cfg.opt(cli.out.clone(), "out")?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let output = pool.install(|| dispatch(&cfg, &cli))?;
    let csv = output.csv()?;
    match &out {
        Some(path) => {
            write_file(path, &csv)?;
            println!("{}", output.summary);
        }
        None => {
            std::io::stdout().write_all(&csv)?;
            eprintln!("{}", output.summary);
        }
    }
    Ok(if output.statistical_failure { EXIT_STATISTICAL } else { EXIT_OK })
}

fn dispatch(cfg: &Config, cli: &Cli) -> Result<Output> {
    let seed = cli.seed;
    match &cli.command {
        Command::Simulate { trajectory, model } => {
            simulate(&resolve(cfg, model, seed)?, cfg.opt(trajectory.clone(), "trajectory")?)
        }
        Command::Sweep { lambdas, model } => {
            let r = resolve(cfg, model, seed)?;
            let grid: Vec<f64> = parse_list(&cfg.need(lambdas.clone(), "lambdas")?, "rate grid")?;
            let sweep = estimators::lambda_sweep(&r.setup(), &grid)?;
            Ok(sweep_output(&sweep))
        }
        Command::Critical {
            target,
            bracket,
            tol,
            max_iter,
            model,
        } => {
            let r = resolve(cfg, model, seed)?;
            let b: Vec<f64> = parse_list(&cfg.need(bracket.clone(), "bracket")?, "bracket")?;
            let [lo, hi] = b[..] else {
                return Err(Error::InvalidArgument("--bracket takes two rates, lo,hi".into()));
            };
            let res = estimators::pseudo_critical(
                &r.setup(),
                cfg.get(*target, "target", 0.5)?,
                (lo, hi),
                cfg.get(*tol, "tol", 0.02)?,
                cfg.get(*max_iter, "max_iter", estimators::DEFAULT_MAX_ITER)?,
            )?;
            Ok(critical_output(&res))
        }
        Command::Crossing {
            kind,
            scheme,
            t_grid,
            model,
        } => {
            let r = resolve(cfg, model, seed)?;
            let kind = cfg.get(*kind, "kind", BoxKind::Horizontal)?;
            let scheme = match cfg.opt(*scheme, "scheme")? {
                Some(s) => s,
                None => verify::default_scheme(&r.law)?,
            };
            let grid = match cfg.opt(t_grid.clone(), "t_grid")? {
                Some(s) => parse_list(&s, "time grid")?,
                None => renewal::default_t_grid(&r.law),
            };
            let rep = crossings::estimate_crossing(&r.law, r.lambda, kind, scheme, &grid, &r.tau, r.n, r.seed)?;
            Ok(crossing_output(&rep))
        }
        Command::Blocks {
            scheme,
            cols,
            rows,
            depth,
            seeding,
            literal_height,
            dump,
            model,
        } => {
            let r = resolve(cfg, model, seed)?;
            let scheme = match cfg.opt(*scheme, "scheme")? {
                Some(s) => s,
                None => verify::default_scheme(&r.law)?,
            };
            let cols = cfg.get(*cols, "cols", 10)?;
            let rows = cfg.get(*rows, "rows", 10)?;
            let depth = cfg.get(*depth, "depth", rows)?;
            let run = renorm::FieldRun {
                law: r.law.clone(),
                lambda: r.lambda,
                geometry: BlockGeometry {
                    scheme,
                    literal_horizontal_height: cfg.flag(*literal_height, "literal_height")?,
                },
                n_cols: cols,
                n_rows: rows,
                seeding: cfg.get(*seeding, "seeding", Seeding::Conditional)?,
                tau_policy: r.tau.clone(),
            };
            let fields = run.fields(r.n, r.seed)?;
            if let Some(path) = cfg.opt(dump.clone(), "dump")? {
                write_file(&path, fields[0].to_csv().as_bytes())?;
            }
            blocks_output(&fields, depth)
        }
        Command::Bounds { which } => bounds(cfg, which, seed),
        Command::Verify { which } => verify_command(cfg, which, seed),
    }
}

fn simulate(r: &Resolved, trajectory: Option<PathBuf>) -> Result<Output> {
    LazySample::new(&r.law, r.lambda, r.half_width, r.horizon, &r.tau, r.seed)?;
    if r.initial.iter().any(|s| s.abs() > r.half_width) {
        return Err(Error::InvalidArgument("initial sites must lie inside the window".into()));
    }
    let outcomes = stats::replicate(r.n, |i| {
        let s = stats::replica_seed(r.seed, &[0x51], i);
        engine::extinction_time(&r.law, r.lambda, r.half_width, r.horizon, &r.initial, &r.tau, s, i == 0 && trajectory.is_some())
            .expect("validated")
    });
    if let Some(path) = trajectory {
        write_file(&path, engine::trajectory_csv(&outcomes[0].snapshots).as_bytes())?;
    }
    let alive = outcomes.iter().filter(|o| o.survived).count();
    let rows = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            vec![
                i.to_string(),
                (o.survived as u8).to_string(),
                o.extinction_time.map(fmt_time).unwrap_or_default(),
            ]
        })
        .collect();
    let est = stats::Estimate::from_counts(alive as u64, r.n);
    let summary = format!(
        "survival {alive}/{} (p = {}, law {}, lambda {}, L {}, T {})",
        r.n,
        fmt_prob(est.value),
        r.law,
        fmt_time(r.lambda),
        r.half_width,
        fmt_time(r.horizon)
    );
    Ok(Output::new("replica,survived,extinction_time", rows, summary))
}

fn sweep_output(s: &SweepResult) -> Output {
    let summary = format!(
        "sweep over {} rates: survival {} .. {}",
        s.rows.len(),
        fmt_prob(s.rows.first().map_or(f64::NAN, |r| r.survival.estimate.value)),
        fmt_prob(s.rows.last().map_or(f64::NAN, |r| r.survival.estimate.value))
    );
    Output::new(SweepResult::CSV_HEADER, s.csv_rows(), summary)
}

fn critical_output(c: &CriticalResult) -> Output {
    let summary = format!(
        "pseudo-critical rate {} (target {}, {} bisections)",
        fmt_time(c.lambda),
        fmt_prob(c.target),
        c.iterations
    );
    Output::new(CriticalResult::CSV_HEADER, vec![c.csv_row()], summary)
}

fn crossing_output(r: &CrossingReport) -> Output {
    let min = r.grid_min();
    let summary = format!(
        "{} crossing grid-min {} at t = {}",
        r.kind,
        fmt_prob(min.estimate.value),
        fmt_time(min.t)
    );
    let rows = r.csv_rows().into_iter().map(Vec::from).collect();
    Output::new(CrossingReport::CSV_HEADER, rows, summary)
}

fn blocks_output(fields: &[BlockField], depth: usize) -> Result<Output> {
    let mut rows = Vec::with_capacity(fields.len());
    let mut hits = 0;
    for (i, f) in fields.iter().enumerate() {
        let p = renorm::percolates(f, depth)?;
        hits += p as usize;
        let edges = f.edges();
        let open = edges.iter().filter(|&&(k, x, y)| f.is_open(k, x, y)).count();
        rows.push(vec![i.to_string(), (p as u8).to_string(), open.to_string(), edges.len().to_string()]);
    }
    let summary = format!("percolation to depth {depth} in {hits}/{} fields", fields.len());
    Ok(Output::new("replica,percolates,open_edges,edges", rows, summary))
}

fn bounds(cfg: &Config, which: &Bound, seed: Option<u64>) -> Result<Output> {
    let single = |name: &str, v: f64| {
        Output::new("quantity,value", vec![vec![name.to_string(), fmt_time(v)]], fmt_time(v))
    };
    match which {
        Bound::LambdaH { eps, a0 } => {
            let v = crossings::lambda_h_bound(cfg.need(*eps, "eps")?, cfg.need(*a0, "a0")?)?;
            Ok(single("lambda_h", v))
        }
        Bound::LambdaVBounded { eps, u1, k0 } => {
            let v = crossings::lambda_v_bound_bounded(cfg.need(*eps, "eps")?, cfg.need(*u1, "u1")?, cfg.need(*k0, "k0")?)?;
            Ok(single("lambda_v", v))
        }
        Bound::LambdaVDfr { eps, u0 } => {
            let v = crossings::lambda_v_bound_dfr(cfg.need(*eps, "eps")?, cfg.need(*u0, "u0")?)?;
            Ok(single("lambda_v", v))
        }
        Bound::A0 { w0, b } => {
            let w0 = cfg.need(*w0, "w0")?;
            if !(w0 > 0.0) {
                return Err(Error::InvalidArgument(format!("w0 must be positive, got {w0}")));
            }
            let v = match cfg.opt(*b, "b")? {
                Some(b) if b > 0.0 => crossings::a0_bounded(w0, b),
                Some(b) => return Err(Error::InvalidArgument(format!("b must be positive, got {b}"))),
                None => crossings::a0_dfr(w0),
            };
            Ok(single("a0", v))
        }
        Bound::Construct { eps, scheme, model } => {
            let r = resolve(cfg, model, seed)?;
            let scheme = match cfg.opt(*scheme, "scheme")? {
                Some(s) => s,
                None => verify::default_scheme(&r.law)?,
            };
            let th = verify::construct(&r.law, scheme, cfg.need(*eps, "eps")?, ConstructionBudget { n: r.n, seed: r.seed })?;
            let mut rows = vec![
                ("p0", th.p0),
                ("w0", th.w0),
                ("a0", th.a0),
                ("lambda_h", th.lambda_h),
                ("p_vertical", th.p_vertical),
            ];
            if let Some(k0) = th.k0 {
                rows.push(("K0", k0 as f64));
            }
            rows.extend([
                ("w_vertical", th.w_vertical),
                ("v_vertical", th.v_vertical),
                ("u", th.u),
                ("lambda_v", th.lambda_v),
            ]);
            let rows = rows.into_iter().map(|(k, v)| vec![k.to_string(), fmt_time(v)]).collect();
            let summary = format!("lambda_h {} lambda_v {}", fmt_time(th.lambda_h), fmt_time(th.lambda_v));
            Ok(Output::new("quantity,value", rows, summary))
        }
    }
}

fn verify_command(cfg: &Config, which: &Check, seed: Option<u64>) -> Result<Output> {
    let (name, report) = match which {
        Check::DfrGap { w, model } => {
            let r = resolve(cfg, model, seed)?;
            let widths = match cfg.opt(w.clone(), "w")? {
                Some(s) => parse_list(&s, "width list")?,
                None => verify::default_dfr_widths(&r.law),
            };
            ("dfr-gap", verify::check_dfr_gap(&r.law, &widths, r.n, r.seed)?)
        }
        Check::LastMark { v, w, model } => {
            let r = resolve(cfg, model, seed)?;
            let m = r.law.mean();
            let vs = match cfg.opt(v.clone(), "v")? {
                Some(s) => parse_list(&s, "v list")?,
                None => vec![0.0, 0.5 * m, m, 2.0 * m],
            };
            let w = cfg.get(*w, "w", 0.1 * m)?;
            ("last-mark", verify::check_last_mark(&r.law, &vs, w, r.n, r.seed)?)
        }
        Check::Gap { p0, model } => {
            let r = resolve(cfg, model, seed)?;
            ("gap", verify::check_gap(&r.law, cfg.get(*p0, "p0", 0.1)?, r.n, r.seed)?)
        }
        Check::K0 { b, p0, model } => {
            let r = resolve(cfg, model, seed)?;
            let b = cfg.get(*b, "b", 1.0)?;
            ("k0", verify::check_k0(&r.law, b, cfg.get(*p0, "p0", 0.1)?, r.n, r.seed)?)
        }
        Check::Crossing { eps, n_construct, model } => {
            let r = resolve(cfg, model, seed)?;
            let mut opts = CrossingCheck::new(&r.law, cfg.get(*eps, "eps", 0.5)?, r.n, r.seed)?;
            opts.n_construct = cfg.get(*n_construct, "n_construct", r.n)?;
            ("crossing", verify::check_crossing(&r.law, &opts)?)
        }
        Check::Blocks {
            eps,
            cols,
            rows,
            depth,
            n_construct,
            model,
        } => {
            let r = resolve(cfg, model, seed)?;
            let rows = cfg.get(*rows, "rows", 50)?;
            let opts = BlocksCheck {
                eps: cfg.get(*eps, "eps", 0.05)?,
                n_cols: cfg.get(*cols, "cols", 50)?,
                n_rows: rows,
                depth: cfg.get(*depth, "depth", rows)?,
                percolation_target: 0.99,
                n: r.n,
                n_construct: cfg.get(*n_construct, "n_construct", 10_000)?,
                seed: r.seed,
                lambda: cfg.opt(model.lambda, "lambda")?,
            };
            ("blocks", verify::check_blocks(&r.law, &opts)?)
        }
        Check::Degenerate { c, lambdas, model } => {
            let r = resolve(cfg, model, seed)?;
            let lambdas = parse_list(&cfg.get(lambdas.clone(), "lambdas", "1,10,100".to_string())?, "rate list")?;
            ("degenerate", verify::check_degenerate(cfg.get(*c, "c", 1.0)?, &lambdas, r.half_width, r.n, r.seed)?)
        }
        Check::Coupling { lambda_low, model } => {
            let r = resolve(cfg, model, seed)?;
            let opts = PathwiseCheck {
                half_width: r.half_width,
                horizon: r.horizon,
                n: r.n,
                seed: r.seed,
            };
            let low = cfg.get(*lambda_low, "lambda_low", 0.5 * r.lambda)?;
            ("coupling", verify::check_coupling(&r.law, low, r.lambda, opts)?)
        }
        Check::Additivity { a, b, model } => {
            let r = resolve(cfg, model, seed)?;
            let a = parse_sites(&cfg.get(a.clone(), "a", "0".to_string())?)?;
            let b = parse_sites(&cfg.get(b.clone(), "b", "3".to_string())?)?;
            let opts = PathwiseCheck {
                half_width: r.half_width,
                horizon: r.horizon,
                n: r.n,
                seed: r.seed,
            };
            ("additivity", verify::check_additivity(&r.law, r.lambda, &a, &b, opts)?)
        }
    };
    Ok(verify_output(name, &report))
}

fn verify_output(name: &str, report: &VerifyReport) -> Output {
    let rows: Vec<Vec<String>> = report.rows.iter().map(|r| Vec::from(r.csv_fields())).collect();
    let failed = report.failures().count();
    let checked = report.rows.iter().filter(|r| r.verdict != verify::Verdict::Info).count();
    let summary = if failed == 0 {
        format!("verify {name}: all {checked} checked rows pass")
    } else {
        format!("verify {name}: {failed} of {checked} checked rows FAIL")
    };
    let mut out = Output::new(CheckRow::CSV_HEADER, rows, summary);
    out.statistical_failure = failed > 0;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_grammar() {
        let c = Config::parse("# comment\nlaw = weibull(0.7,1)  # trailing\n\nL=5\nn_construct = 7\n").unwrap();
        assert_eq!(c.get::<i64>(None, "L", 1).unwrap(), 5);
        assert_eq!(c.get::<i64>(Some(9), "L", 1).unwrap(), 9);
        assert_eq!(c.get::<u64>(None, "n", 3).unwrap(), 3);
        assert_eq!(c.get::<u64>(None, "n_construct", 3).unwrap(), 7);
        let law: InterarrivalLaw = c.need(None, "law").unwrap();
        assert_eq!(law.to_string(), "weibull(0.7,1)");
        assert!(Config::parse("bogus = 1").is_err());
        assert!(Config::parse("novalue").is_err());
        assert!(Config::parse("L = x").unwrap().get::<i64>(None, "L", 0).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["rcplab", "nonsense"]), EXIT_CONFIG);
        assert_eq!(run(["rcplab", "bounds", "lambda-h", "--eps", "2", "--a0", "1"]), EXIT_CONFIG);
        assert_eq!(run(["rcplab", "bounds", "lambda-h", "--eps", "0.9"]), EXIT_CONFIG);
        assert_eq!(run(["rcplab", "--out", "/nonexistent/dir/x.csv", "bounds", "lambda-h", "--eps", "0.9", "--a0", "1"]), EXIT_RUNTIME);
    }

    #[test]
    fn csv_quotes_commas() {
        let bytes = to_csv(&["a".into(), "b".into()], &[vec!["weibull(0.7,1)".into(), "1".into()]]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\n\"weibull(0.7,1)\",1\n");
    }
}
