//! Maps the process onto a field of block edges and checks how often the
//! field percolates, next to an independent field with the same marginal.

use rand::SeedableRng;
use rcplab::crossings::Scheme;
use rcplab::renorm::{bernoulli_field, percolates, FieldRun};
use rcplab::InterarrivalLaw;

fn main() -> rcplab::Result<()> {
    let run = FieldRun::new(InterarrivalLaw::uniform(1.0)?, 400.0, Scheme::Bounded { b: 1.0 }, 12, 12);
    let fields = run.fields(100, 5)?;
    let open: usize = fields.iter().map(|f| f.edges().iter().filter(|&&(k, x, y)| f.is_open(k, x, y)).count()).sum();
    let total: usize = fields.iter().map(|f| f.edges().len()).sum();
    let p = open as f64 / total as f64;
    let hits = fields.iter().filter(|f| percolates(f, 12).unwrap()).count();
    println!("dependent field: {hits}/100 percolate to depth 12, open fraction {p:.4}");

    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    let hits = (0..100)
        .filter(|_| percolates(&bernoulli_field(p, 12, 12, &mut rng).unwrap(), 12).unwrap())
        .count();
    println!("independent field with the same marginal: {hits}/100");
    print!("{}", fields[0].to_csv().lines().take(6).collect::<Vec<_>>().join("\n"));
    println!();
    Ok(())
}
