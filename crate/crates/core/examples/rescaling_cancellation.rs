//! Rescaling the gradient flow does not speed up a stability-limited solver.
//!
//! Each rescaled flow is integrated with Euler at the largest stable step.
//! Measured in the time of the 1-essential flow `α(t) = t/L`, every run
//! covers exactly 2 units per step.

use essrate::prelude::*;

fn main() -> Result<()> {
    let ell = 10.0;
    let f = Objective::quadratic(vec![ell, 4.0, 1.0], 1.0, ell)?;
    let x0 = [0.6, 0.0, 0.8];
    let euler = RkMethod::euler();
    let r = euler.domain_radius();

    let cases = [
        (Rescaling::linear(0.1), StepPolicy::capped(1.0)),
        (Rescaling::linear(10.0), StepPolicy::capped(1.0)),
        (Rescaling::power(2.0, 1.0), StepPolicy::capped_with(1.0, 0.2)),
        (Rescaling::power(3.0, 1.0), StepPolicy::capped_with(1.0, 0.2)),
    ];
    println!("{:<16} {:>10} {:>12} {:>12}", "rescaling", "t_300", "gap_300", "ratio");
    for (alpha, policy) in cases {
        let g = Dynamics::new(Model::GradientFlow, f.clone(), alpha.clone())?;
        let traj = run(&euler, &g, &x0, 0.0, &policy, &StopRule::steps(300), &[Metric::Gap])?;
        let to_essential = Rescaling::linear(ell).compose(&alpha);
        let chk = theorem_bound_check(&traj, &to_essential, r, 0.05, 100);
        let last = traj.last();
        println!(
            "{:<16} {:>10.4} {:>12.4e} {:>12.6}",
            alpha.describe(),
            last.t,
            last.phi[&Metric::Gap],
            chk.final_ratio
        );
    }
    Ok(())
}
