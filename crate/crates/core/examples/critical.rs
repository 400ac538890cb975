//! Bisection for the rate at which survival to the horizon crosses one half.

use rcplab::estimators::{pseudo_critical, SurvivalSetup, DEFAULT_MAX_ITER};
use rcplab::InterarrivalLaw;

fn main() -> rcplab::Result<()> {
    for law in [InterarrivalLaw::exponential(1.0)?, InterarrivalLaw::uniform(1.0)?] {
        let setup = SurvivalSetup::new(law, 30, 30.0, 400, 3);
        let r = pseudo_critical(&setup, 0.5, (0.5, 16.0), 0.05, DEFAULT_MAX_ITER)?;
        println!(
            "{:<12} lambda_hat = {:.4}  (bracket [{:.4}, {:.4}] after {} steps)",
            r.law, r.lambda, r.final_bracket.0, r.final_bracket.1, r.iterations
        );
    }
    Ok(())
}
