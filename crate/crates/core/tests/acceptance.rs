//! Acceptance suite. Runs every criterion in sequence, timing each on its
//! own, prints one PASS/FAIL line per criterion and exits nonzero when any
//! criterion fails. Positional arguments select criteria by number.

mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rcplab::crossings::{crossing, BoxKind, BoxSpec, Scheme};
use rcplab::estimators::{lambda_sweep, pseudo_critical, SurvivalSetup, DEFAULT_MAX_ITER};
use rcplab::verify::{
    self, check_additivity, check_blocks, check_coupling, check_crossing, check_degenerate, check_dfr_gap, BlocksCheck,
    CrossingCheck, PathwiseCheck, VerifyReport,
};
use rcplab::{Configuration, GraphicalSample, InterarrivalLaw, TauPolicy};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

struct Criterion {
    number: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn law(s: &str) -> InterarrivalLaw {
    s.parse().expect("valid law")
}

fn minutes(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

/// Folds verify reports into one outcome, naming the first failing row.
fn from_reports(reports: Vec<(String, rcplab::Result<VerifyReport>)>) -> Outcome {
    let mut rows = 0;
    for (label, r) in reports {
        match r {
            Err(e) => return Outcome::new(false, format!("{label}: error {e}")),
            Ok(rep) => {
                if let Some(f) = rep.failures().next() {
                    return Outcome::new(
                        false,
                        format!("{label}: {} {} estimate {} reference {} ci {}", f.check, f.case, f.estimate, f.reference, f.ci),
                    );
                }
                rows += rep.rows.iter().filter(|r| r.verdict == verify::Verdict::Pass).count();
            }
        }
    }
    Outcome::new(true, format!("{rows} checked rows pass"))
}

fn degenerate() -> Outcome {
    let c = 1.0;
    from_reports(vec![("det(1)".into(), check_degenerate(c, &[1.0, 10.0, 100.0], 50, 10_000, 1))])
}

fn pathwise() -> PathwiseCheck {
    PathwiseCheck {
        half_width: 100,
        horizon: 50.0,
        n: 1000,
        seed: 2,
    }
}

fn coupling() -> Outcome {
    from_reports(
        ["exp(1)", "weibull(0.7,1)"]
            .iter()
            .map(|l| (l.to_string(), check_coupling(&law(l), 1.0, 2.0, pathwise())))
            .collect(),
    )
}

fn additivity() -> Outcome {
    let a: Configuration = [0].into_iter().collect();
    let b: Configuration = [3].into_iter().collect();
    from_reports(
        ["exp(1)", "weibull(0.7,1)"]
            .iter()
            .map(|l| (l.to_string(), check_additivity(&law(l), 2.0, &a, &b, pathwise())))
            .collect(),
    )
}

fn dfr_gap() -> Outcome {
    from_reports(
        ["exp(1)", "weibull(0.7,1)"]
            .iter()
            .map(|l| {
                let law = law(l);
                let widths = verify::default_dfr_widths(&law);
                let r = check_dfr_gap(&law, &widths, 100_000, 4);
                // Exponential laws must carry the exact-value rows as well.
                let r = r.and_then(|rep| {
                    if l.starts_with("exp") && !rep.rows.iter().any(|row| row.check == "dfr-gap-exact") {
                        Err(rcplab::Error::InvalidArgument("missing exact rows".into()))
                    } else {
                        Ok(rep)
                    }
                });
                (l.to_string(), r)
            })
            .collect(),
    )
}

fn crossings() -> Outcome {
    from_reports(
        ["uniform(1)", "weibull(0.7,1)"]
            .iter()
            .map(|l| {
                let law = law(l);
                let r = CrossingCheck::new(&law, 0.5, 10_000, 5).and_then(|opts| check_crossing(&law, &opts));
                (l.to_string(), r)
            })
            .collect(),
    )
}

fn oracle_equivalence() -> Outcome {
    let laws = ["exp(1)", "weibull(0.7,1)", "uniform(1)", "pareto(2.5,0.3)", "weibull(2,0.5)"];
    let policies = [TauPolicy::AllZero, TauPolicy::Stationary];
    let mut rng = StdRng::seed_from_u64(6);
    let mut mismatches = 0;
    let total = 1000;
    for i in 0..total {
        let l = law(laws[rng.random_range(0..laws.len())]);
        let kind = if rng.random::<bool>() { BoxKind::Horizontal } else { BoxKind::Vertical };
        let scheme = if rng.random::<bool>() {
            Scheme::Dfr
        } else {
            Scheme::Bounded { b: rng.random_range(0.2..1.5) }
        };
        let x = rng.random_range(-3i64..=0);
        let mut spec = BoxSpec::new(kind, x, rng.random_range(0.0..3.0), scheme);
        if rng.random_range(0..4) == 0 {
            spec.height_override = Some(rng.random_range(0.05..2.0));
        }
        let lambda = rng.random_range(0.5..10.0);
        let policy = &policies[rng.random_range(0..policies.len())];
        let sample = GraphicalSample::build(&l, lambda, 4, spec.top() + 0.25, policy, rng.random()).expect("valid box");
        let start = x + rng.random_range(0..=1);
        let engine = crossing(&sample, &spec, start).expect("box inside window");
        if engine != common::oracle_crossing(&sample, &spec, start) {
            mismatches += 1;
            eprintln!("  box {i}: {spec:?} start {start} engine {engine}");
        }
    }
    Outcome::new(mismatches == 0, format!("{} of {total} boxes agree", total - mismatches))
}

fn blocks() -> Outcome {
    let opts = BlocksCheck {
        eps: 0.05,
        n_cols: 50,
        n_rows: 50,
        depth: 50,
        percolation_target: 0.99,
        n: 1000,
        n_construct: 10_000,
        seed: 7,
        lambda: None,
    };
    from_reports(vec![("uniform(1)".into(), check_blocks(&law("uniform(1)"), &opts))])
}

fn classical() -> Outcome {
    let setup = SurvivalSetup::new(law("exp(1)"), 200, 200.0, 2000, 8);
    let r = match pseudo_critical(&setup, 0.5, (1.2, 2.4), 0.02, DEFAULT_MAX_ITER) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("pseudo_critical error {e}")),
    };
    let g_lo = common::gillespie_survival(1.5, 200, 200.0, 2000, 81);
    let g_hi = common::gillespie_survival(1.8, 200, 200.0, 2000, 82);
    let in_range = (1.5..=1.8).contains(&r.lambda);
    let bracketed = g_lo < 0.5 && 0.5 < g_hi;
    Outcome::new(
        in_range && bracketed,
        format!(
            "lambda_hat {} (final bracket [{}, {}]), required in [1.5, 1.8]; Markov oracle survival {g_lo} at 1.5 and {g_hi} at 1.8, required to bracket 0.5",
            r.lambda, r.final_bracket.0, r.final_bracket.1
        ),
    )
}

fn finiteness() -> Outcome {
    let mut details = Vec::new();
    for (name, bracket) in [("uniform(1)", (3.0, 12.0)), ("weibull(0.7,1)", (0.5, 20.0))] {
        let setup = SurvivalSetup::new(law(name), 50, 50.0, 1000, 9);
        let r = match pseudo_critical(&setup, 0.5, bracket, 0.05, DEFAULT_MAX_ITER) {
            Ok(r) => r,
            Err(e) => return Outcome::new(false, format!("{name}: pseudo_critical error {e}")),
        };
        let (lo, hi) = bracket;
        let grid: Vec<f64> = (0..=4).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect();
        let sweep = match lambda_sweep(&setup, &grid) {
            Ok(s) => s,
            Err(e) => return Outcome::new(false, format!("{name}: sweep error {e}")),
        };
        let first = sweep.rows[0].survival.estimate.value;
        let last = sweep.rows[4].survival.estimate.value;
        let ok = r.lambda.is_finite() && first < 0.1 && last > 0.9 && sweep.is_monotone();
        details.push(format!("{name} lambda_hat {} sweep {first} -> {last}", r.lambda));
        if !ok {
            return Outcome::new(false, details.join("; "));
        }
    }
    Outcome::new(true, details.join("; "))
}

fn determinism() -> Outcome {
    let cases: [&[&str]; 4] = [
        &["verify", "dfr-gap", "--law", "weibull(0.7,1)", "--n", "20000"],
        &["verify", "coupling", "--law", "exp(1)", "--lambda", "2", "--L", "30", "--T", "15", "--n", "200"],
        &["verify", "crossing", "--law", "uniform(1)", "--eps", "0.5", "--n", "500", "--n-construct", "2000"],
        &["verify", "blocks", "--law", "uniform(1)", "--cols", "8", "--rows", "8", "--n", "50", "--n-construct", "2000"],
    ];
    for args in cases {
        let run = |workers: &str| {
            Command::new(env!("CARGO_BIN_EXE_rcplab"))
                .args(args)
                .args(["--seed", "10", "--workers", workers])
                .output()
                .expect("binary runs")
        };
        let (a, b) = (run("1"), run("4"));
        if a.stdout.is_empty() || a.stdout != b.stdout {
            return Outcome::new(false, format!("{} output differs between 1 and 4 workers", args[1]));
        }
    }
    Outcome::new(true, format!("{} verify subcommands byte-identical across 1 and 4 workers", cases.len()))
}

fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { number: 1, name: "degenerate extinction", budget: minutes(1), run: degenerate },
        Criterion { number: 2, name: "monotone coupling", budget: minutes(2), run: coupling },
        Criterion { number: 3, name: "additivity", budget: minutes(2), run: additivity },
        Criterion { number: 4, name: "decreasing-hazard gap bound", budget: minutes(10), run: dfr_gap },
        Criterion { number: 5, name: "crossing thresholds", budget: minutes(10), run: crossings },
        Criterion { number: 6, name: "crossing oracle equivalence", budget: minutes(1), run: oracle_equivalence },
        Criterion { number: 7, name: "block renormalization", budget: minutes(15), run: blocks },
        Criterion { number: 8, name: "classical special case", budget: minutes(30), run: classical },
        Criterion { number: 9, name: "finiteness surrogates", budget: minutes(30), run: finiteness },
        Criterion { number: 10, name: "determinism across workers", budget: minutes(5), run: determinism },
    ]
}

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in criteria() {
        if !selected.is_empty() && !selected.contains(&c.number) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let pass = outcome.pass && in_time;
        if !pass {
            failed += 1;
        }
        let timing = if in_time { String::new() } else { format!(" [over budget {}s]", c.budget.as_secs()) };
        println!(
            "criterion {:>2} {:<30} {}  ({:.1}s) {}{timing}",
            c.number,
            c.name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            outcome.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
