//! Crossing probabilities of the two box shapes used by the block argument,
//! for a decreasing-hazard law over several base times.

use rcplab::crossings::{estimate_crossing, BoxKind, Scheme};
use rcplab::{InterarrivalLaw, TauPolicy};

fn main() -> rcplab::Result<()> {
    let law = InterarrivalLaw::weibull(0.7, 1.0)?;
    let t_grid = [0.0, 0.5, 1.0, 2.0];
    for kind in [BoxKind::Horizontal, BoxKind::Vertical] {
        for lambda in [5.0, 20.0, 80.0] {
            let r = estimate_crossing(&law, lambda, kind, Scheme::Dfr, &t_grid, &TauPolicy::Stationary, 2000, 11)?;
            let cells: Vec<String> = r.cells.iter().map(|c| format!("{:.3}", c.estimate.value)).collect();
            println!("{kind:<10} lambda {lambda:>5}: {}", cells.join("  "));
        }
    }
    Ok(())
}
