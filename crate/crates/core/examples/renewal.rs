//! Renewal trains and the estimators built on them: gap probabilities, the
//! conditional gap under a decreasing hazard and mark-count tails.

use rcplab::renewal::{
    self, compute_k0, conditional_gap_estimate_dfr, generate_train, DEFAULT_ACCEPTANCE_FLOOR, DEFAULT_K0_CAP,
};
use rcplab::seeding::stream;
use rcplab::{InterarrivalLaw, TauSpec};

fn main() -> rcplab::Result<()> {
    let law = InterarrivalLaw::weibull(0.7, 1.0)?;
    let mut rng = stream(1, &[]);
    let train = generate_train(&law, TauSpec::Stationary, 5.0, 0, &mut rng)?;
    println!("stationary train on [0, 5]: {:?}", train.marks());

    let t_grid = [0.0, 1.0, 3.0];
    let r = renewal::gap_probability_estimate(&law, 0.05, &t_grid, &[TauSpec::Stationary], 20_000, 2)?;
    for c in &r.cells {
        println!("P(mark within 0.05 of t={}) = {:.4}", c.t, c.estimate.value);
    }

    let e = conditional_gap_estimate_dfr(&law, 1.0, 2.0, 0.1, TauSpec::Fixed(0.0), 50_000, 3, DEFAULT_ACCEPTANCE_FLOOR)?;
    println!(
        "P(mark in next 0.1 | none for 2) = {:.4}, bound F(w)/(1-F(w)) = {:.4}",
        e.value,
        law.tail_ratio(0.1)?
    );

    let u = InterarrivalLaw::uniform(1.0)?;
    println!("K0 for uniform(1), b = 1, p0 = 0.01: {}", compute_k0(&u, 1.0, 0.01, 20_000, 4, DEFAULT_K0_CAP)?);
    Ok(())
}
