//! Builds a graphical representation by hand, runs it, and compares it with
//! a thinned copy of a random sample.

use rcplab::engine::{evolve_traced, subset_violations};
use rcplab::{Edge, GraphicalSample, InterarrivalLaw, LazySample, RenewalTrain, TauPolicy};

fn main() -> rcplab::Result<()> {
    // Three sites; the origin infects its right neighbour just before it is
    // cured, and the neighbour is never cured.
    let horizon = 3.0;
    let trains = vec![
        RenewalTrain::with_marks(-1, vec![0.5], horizon)?,
        RenewalTrain::with_marks(0, vec![1.0, 2.0], horizon)?,
        RenewalTrain::with_marks(1, vec![], horizon)?,
    ];
    let arrows = vec![(Edge::new(0, 1), vec![0.9]), (Edge::new(1, 0), vec![1.5])];
    let sample = GraphicalSample::from_parts(1, horizon, 1.0, trains, arrows)?;
    let (out, trace) = evolve_traced(&sample, &[0].into_iter().collect())?;
    for t in [0.0, 0.95, 1.2, 1.6, 2.5] {
        println!("t = {t:.2}: {:?}", trace.configuration_at(t));
    }
    println!("survived: {}", out.survived);

    // A random sample and a thinned copy: the thinned run stays inside.
    let law = InterarrivalLaw::exponential(1.0)?;
    let master = LazySample::new(&law, 3.0, 20, 10.0, &TauPolicy::AllZero, 9)?;
    let thin = master.thinned(1.5, 10)?;
    let init = [0].into_iter().collect();
    let (_, big) = evolve_traced(&master, &init)?;
    let (_, small) = evolve_traced(&thin, &init)?;
    println!("subset violations between thinned and master runs: {}", subset_violations(&small, &big));
    Ok(())
}
