mod common;

use rand::rngs::StdRng;
use rand::SeedableRng;
use rcplab::crossings::{BoxKind, Scheme};
use rcplab::renorm::{bernoulli_field, block_map, percolates, BlockGeometry, FieldRun, Seeding};
use rcplab::{Error, GraphicalSample, InterarrivalLaw, TauPolicy};

#[test]
fn percolation_matches_path_enumeration() {
    let mut rng = StdRng::seed_from_u64(1);
    for i in 0..1000usize {
        let cols = 1 + i % 5;
        let rows = 1 + (i / 5) % 5;
        let p = [0.3, 0.5, 0.7, 0.9][i % 4];
        let field = bernoulli_field(p, cols, rows, &mut rng).unwrap();
        for depth in 0..=rows {
            assert_eq!(percolates(&field, depth).unwrap(), common::oracle_percolates(&field, depth), "field {i} depth {depth}");
        }
        assert!(percolates(&field, rows + 1).is_err());
    }
}

#[test]
fn bernoulli_percolation_is_monotone_in_p() {
    let (cols, rows, depth, n) = (51, 50, 50, 1000u64);
    let frac = |p: f64| {
        (0..n)
            .filter(|&i| {
                let mut rng = StdRng::seed_from_u64(i);
                percolates(&bernoulli_field(p, cols, rows, &mut rng).unwrap(), depth).unwrap()
            })
            .count() as f64
            / n as f64
    };
    let ps = [0.5, 0.6, 0.65, 0.7, 0.8, 0.9];
    let fs: Vec<f64> = ps.iter().map(|&p| frac(p)).collect();
    assert!(fs.windows(2).all(|w| w[0] <= w[1]), "{fs:?}");
    assert!(fs[0] < 0.05 && fs[5] > 0.95, "{fs:?}");
}

fn edges_vs_boxes(law: &str, lambda: f64, scheme: Scheme, seed: u64) {
    let law: InterarrivalLaw = law.parse().unwrap();
    let geometry = BlockGeometry::new(scheme);
    let (l, t) = geometry.required_window(3, 3);
    let sample = GraphicalSample::build(&law, lambda, l, t, &TauPolicy::Stationary, seed).unwrap();
    let field = block_map(&sample, geometry, 3, 3, Seeding::Conditional).unwrap();
    for (kind, x, y) in field.edges() {
        let spec = geometry.box_for(kind, x, y);
        assert_eq!(field.is_open(kind, x, y), common::oracle_crossing(&sample, &spec, spec.x), "{kind} ({x}, {y}) seed {seed}");
    }
}

#[test]
fn block_edges_are_box_crossings() {
    for seed in 0..40 {
        edges_vs_boxes("uniform(1)", 6.0, Scheme::Bounded { b: 1.0 }, seed);
        edges_vs_boxes("weibull(0.7,1)", 4.0, Scheme::Dfr, seed);
    }
}

#[test]
fn exploration_only_changes_edges_after_horizontal_steps() {
    let law: InterarrivalLaw = "exp(1)".parse().unwrap();
    let geometry = BlockGeometry::new(Scheme::Dfr);
    let (l, t) = geometry.required_window(4, 4);
    for seed in 0..40 {
        let sample = GraphicalSample::build(&law, 5.0, l, t, &TauPolicy::AllZero, seed).unwrap();
        let cond = block_map(&sample, geometry, 4, 4, Seeding::Conditional).unwrap();
        let expl = block_map(&sample, geometry, 4, 4, Seeding::Exploration).unwrap();
        for (kind, x, y) in cond.edges() {
            if x == 0 {
                // Column 0 is never entered horizontally.
                assert_eq!(cond.is_open(kind, x, y), expl.is_open(kind, x, y));
            }
            if expl.is_open(kind, x, y) != cond.is_open(kind, x, y) {
                let spec = geometry.box_for(kind, x, y);
                assert_eq!(expl.is_open(kind, x, y), common::oracle_crossing(&sample, &spec, spec.x + 1));
            }
        }
    }
}

#[test]
fn no_infection_closes_every_horizontal_edge() {
    let run = FieldRun::new("uniform(1)".parse().unwrap(), 0.0, Scheme::Bounded { b: 1.0 }, 5, 5);
    for f in run.fields(20, 4).unwrap() {
        for (kind, x, y) in f.edges() {
            if kind == BoxKind::Horizontal {
                assert!(!f.is_open(kind, x, y));
            }
        }
        assert!(!percolates(&f, 5).unwrap());
    }
}

#[test]
fn small_windows_are_rejected() {
    let law: InterarrivalLaw = "exp(1)".parse().unwrap();
    let sample = GraphicalSample::build(&law, 1.0, 3, 2.0, &TauPolicy::AllZero, 0).unwrap();
    let r = block_map(&sample, BlockGeometry::new(Scheme::Dfr), 4, 4, Seeding::Conditional);
    assert!(matches!(r, Err(Error::WindowTooSmall { .. })));
}

#[test]
fn field_dump_reparses() {
    let run = FieldRun::new("exp(1)".parse().unwrap(), 4.0, Scheme::Dfr, 4, 3);
    let f = run.field(9, 0).unwrap();
    assert_eq!(f, run.field(9, 0).unwrap());
    let csv = f.to_csv();
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), ["x", "y", "edge_kind", "open"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), f.edges().len());
    for r in rows {
        let (x, y): (usize, usize) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        let kind: BoxKind = r[2].parse().unwrap();
        let open: bool = match &r[3] {
            "1" | "true" => true,
            "0" | "false" => false,
            other => panic!("open column {other}"),
        };
        assert_eq!(f.is_open(kind, x, y), open);
    }
}
