//! Survival probability over a grid of infection rates. All rates share one
//! master sample per replica, so the curve is monotone by construction.

use rcplab::estimators::{lambda_sweep, SurvivalSetup};
use rcplab::InterarrivalLaw;

fn main() -> rcplab::Result<()> {
    let setup = SurvivalSetup::new(InterarrivalLaw::exponential(1.0)?, 40, 20.0, 1000, 7);
    let sweep = lambda_sweep(&setup, &[1.0, 1.5, 2.0, 2.5, 3.0, 4.0])?;
    println!("{}", rcplab::estimators::SweepResult::CSV_HEADER);
    for row in sweep.csv_rows() {
        println!("{}", row.join(","));
    }
    assert!(sweep.is_monotone());
    Ok(())
}
