//! One run of the renewal contact process from the origin, with a coarse
//! trajectory of the infected set.

use rcplab::engine::{extinction_time, resample, trajectory_csv};
use rcplab::{InterarrivalLaw, TauPolicy};

fn main() -> rcplab::Result<()> {
    let law = InterarrivalLaw::weibull(0.7, 1.0)?;
    let initial = [0].into_iter().collect();
    let out = extinction_time(&law, 2.5, 60, 30.0, &initial, &TauPolicy::Stationary, 2024, true)?;
    match out.extinction_time {
        Some(t) => println!("died out at t = {t:.4}"),
        None => println!("still alive at the horizon"),
    }
    print!("{}", trajectory_csv(&resample(&out.snapshots, 30.0, 11)));

    // Survival frequency over a handful of independent seeds.
    let alive = (0..200)
        .filter(|&seed| {
            extinction_time(&law, 2.5, 60, 30.0, &initial, &TauPolicy::Stationary, seed, false)
                .map(|o| o.survived)
                .unwrap_or(false)
        })
        .count();
    println!("{alive} of 200 runs survive to t = 30");
    Ok(())
}
