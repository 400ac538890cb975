//! A few of the statistical self-checks, printed as CSV rows.

use rcplab::verify::{self, CheckRow, PathwiseCheck};
use rcplab::InterarrivalLaw;

fn main() -> rcplab::Result<()> {
    let weibull = InterarrivalLaw::weibull(0.7, 1.0)?;
    let mut report = verify::check_dfr_gap(&weibull, &verify::default_dfr_widths(&weibull), 20_000, 1)?;
    report.extend(verify::check_degenerate(1.0, &[1.0, 10.0, 100.0], 20, 1000, 2)?);
    let opts = PathwiseCheck { half_width: 30, horizon: 15.0, n: 200, seed: 3 };
    report.extend(verify::check_coupling(&InterarrivalLaw::exponential(1.0)?, 1.0, 2.0, opts)?);
    println!("{}", CheckRow::CSV_HEADER);
    for row in report.rows.iter().take(8).chain(report.rows.iter().rev().take(4)) {
        println!("{}", row.csv_fields().join(","));
    }
    println!("all pass: {}", report.passed());
    Ok(())
}
