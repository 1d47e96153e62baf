//! Asymptotic spectral radius of the five momentum and gradient flows over
//! sampled quadratics, under their normalizing rescalings and one that is
//! off by a constant.

use essrate::analysis::{sample_quadratics, EssentialOptions};
use essrate::prelude::*;

fn main() -> Result<()> {
    let (mu, ell) = (1.0, 10.0);
    let family = sample_quadratics(12, 2, mu, ell, true, 3)?;
    let x0s = vec![vec![0.6, 0.8]];
    let tmm = 1.0 / (2.0 * mu.sqrt()).max((2.0 * ell).sqrt());
    let cases = [
        (Model::GradientFlow, Rescaling::linear(1.0 / ell)),
        (Model::GradientFlow, Rescaling::linear(1.0)),
        (Model::AgmConvex, Rescaling::power(2.0, 1.0 / ell)),
        (Model::AgmShifted { b: 2.0 / ell.sqrt() }, Rescaling::linear(1.0 / ell.sqrt())),
        (Model::AgmStrong, Rescaling::linear(1.0 / ell.sqrt())),
        (Model::Tmm, Rescaling::linear(tmm)),
    ];
    let opts = EssentialOptions::default();
    for (model, alpha) in cases {
        let g = Dynamics::new(model, family[0].clone(), alpha)?;
        let v = essential_check(&g, &family, &x0s, &RkMethod::rk4(), &opts)?;
        println!(
            "{:<40} c = {:.4}  {}",
            g.descriptor(),
            v.c_estimate,
            if v.is_one_essential() { "1-essential" } else { "" }
        );
    }
    Ok(())
}
