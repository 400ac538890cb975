//! Closed-form rate thresholds and the full numeric construction for two
//! laws.

use rcplab::crossings::{construct_bounded, construct_dfr, lambda_h_bound, lambda_v_bound_dfr, ConstructionBudget};
use rcplab::InterarrivalLaw;

fn main() -> rcplab::Result<()> {
    println!("lambda_h(eps=0.9, a0=1)      = {:.9}", lambda_h_bound(0.9, 1.0)?);
    println!("lambda_v dfr(eps=0.5, u0=0.5) = {:.9}", lambda_v_bound_dfr(0.5, 0.5)?);

    let budget = ConstructionBudget { n: 4000, seed: 1 };
    let u = construct_bounded(&InterarrivalLaw::uniform(1.0)?, 1.0, 0.5, budget)?;
    println!("uniform(1): w0 {:.5} a0 {:.5} K0 {:?} u {:.5}", u.w0, u.a0, u.k0, u.u);
    println!("            lambda_h {:.3} lambda_v {:.3}", u.lambda_h, u.lambda_v);
    let w = construct_dfr(&InterarrivalLaw::weibull(0.7, 1.0)?, 0.5, budget)?;
    println!("weibull(0.7,1): w0 {:.5} a0 {:.5} u {:.5}", w.w0, w.a0, w.u);
    println!("                lambda_h {:.3} lambda_v {:.3}", w.lambda_h, w.lambda_v);
    Ok(())
}
