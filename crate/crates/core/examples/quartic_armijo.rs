//! Gradient descent on `x⁴/4`: steps limited by the stability domain versus
//! Armijo backtracking with step growth.

use essrate::analysis::FitOptions;
use essrate::prelude::*;

fn main() -> Result<()> {
    let g = Dynamics::new(Model::GradientFlow, Objective::quartic(1)?, Rescaling::Identity)?;
    let gap = [Metric::Gap];
    let stop = StopRule::steps(100);
    let capped = run(
        &RkMethod::euler(),
        &g,
        &[1.0],
        0.0,
        &StepPolicy::StabilityCapped { safety: 0.9, h_floor: 1e-12, h_cap: 1e300 },
        &stop,
        &gap,
    )?;
    let guarded = run(&RkMethod::euler(), &g, &[1.0], 0.0, &StepPolicy::capped(0.9), &stop, &gap)?;
    let armijo = run_armijo(&g, &[1.0], 0.0, &StepPolicy::armijo(2.0, 0.1), &stop, &gap)?;

    println!("{:>4} {:>14} {:>14} {:>14} {:>12}", "k", "capped", "capped h<=1e3", "armijo", "armijo h");
    for k in [1, 5, 10, 20, 50, 100] {
        println!(
            "{k:>4} {:>14.4e} {:>14.4e} {:>14.4e} {:>12.4e}",
            capped.records[k].phi[&Metric::Gap],
            guarded.records[k].phi[&Metric::Gap],
            armijo.records[k].phi[&Metric::Gap],
            armijo.records[k].h
        );
    }
    let fit = fit_rate(&capped.series_k(Metric::Gap), FitKind::LinearInK, &FitOptions::window(1.0))?;
    println!("capped run contracts the gap by exp(-{:.4}) per step", fit.exponent);
    Ok(())
}
