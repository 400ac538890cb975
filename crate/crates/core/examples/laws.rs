//! The interarrival laws: parsing, moments, hazards and the length-biased
//! draw used for stationary starts.

use rcplab::seeding::stream;
use rcplab::InterarrivalLaw;

fn main() -> rcplab::Result<()> {
    let mut rng = stream(0, &[]);
    for spec in ["exp(1)", "weibull(0.7,1)", "uniform(1)", "pareto(2.5,0.3)", "det(1)"] {
        let law: InterarrivalLaw = spec.parse()?;
        let draws: Vec<f64> = (0..5).map(|_| law.sample(&mut rng)).collect();
        let hazard = law.hazard(0.5).map(|h| format!("{h:.4}")).unwrap_or_else(|_| "n/a".into());
        // A point mass has no hazard, so the question does not apply.
        let dfr = law.is_dfr().map(|d| format!("{d:?}")).unwrap_or_else(|_| "n/a".into());
        println!(
            "{spec:<16} mean {:.4}  hazard(0.5) {hazard:<8} decreasing hazard {dfr:<4} length-biased {:.4}",
            law.mean(),
            law.sample_length_biased(&mut rng)?
        );
        println!("{:16} draws {:?}", "", draws.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>());
    }
    Ok(())
}
