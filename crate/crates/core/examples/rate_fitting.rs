//! Fitted decay exponents of the accelerated flow on `|x|^c` objectives and
//! of the 1-essential flows on a quadratic, against the predicted rates.

use essrate::analysis::{essential_rate_table, FitOptions};
use essrate::prelude::*;

fn main() -> Result<()> {
    for c in [6.0, 10.0] {
        let g = Dynamics::new(Model::AgmConvex, Objective::power_hinge(c, 1.0)?, Rescaling::power(2.0, 1.0))?;
        let traj = run(
            &RkMethod::rk4(),
            &g,
            &g.initial_state(&[1.0])?,
            g.t_start(),
            &StepPolicy::capped_with(0.9, 0.1),
            &StopRule::time(1000.0),
            &[Metric::Gap],
        )?;
        let fit = fit_rate(&traj.series_t(Metric::Gap), FitKind::Power, &FitOptions::default())?;
        println!(
            "|x|^{c}: gap ~ t^-{:.4} (r2 {:.5}), 2c/(c-2) = {:.4}",
            fit.exponent,
            fit.r_squared,
            2.0 * c / (c - 2.0)
        );
    }

    let (mu, ell) = (1.0, 10.0);
    let f = Objective::quadratic(vec![ell, mu], mu, ell)?;
    let runs = [
        (Model::GradientFlow, Rescaling::linear(1.0 / ell), Metric::Gap),
        (Model::AgmStrong, Rescaling::linear(1.0 / ell.sqrt()), Metric::Gap),
        (Model::Tmm, Rescaling::linear(1.0 / (2.0 * ell).sqrt()), Metric::TmmDist),
    ];
    let mut results = Vec::new();
    for (model, alpha, metric) in runs {
        let g = Dynamics::new(model.clone(), f.clone(), alpha)?;
        let traj = run(
            &RkMethod::rk4(),
            &g,
            &g.initial_state(&[0.6, 0.8])?,
            g.t_start(),
            &StepPolicy::capped_with(0.9, 0.1),
            &StopRule::time(60.0),
            &[metric],
        )?;
        results.push((model, metric, fit_rate(&traj.series_t(metric), FitKind::Exponential, &FitOptions::default())?));
    }
    for row in essential_rate_table(&results, mu, ell) {
        println!(
            "{:<14} {:<8} fitted {:.4}  predicted {:?}",
            row.model,
            row.metric.name(),
            row.fitted.exponent,
            row.predicted.map(|p| p.exponent)
        );
    }
    Ok(())
}
