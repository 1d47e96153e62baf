//! A time-dependent change of variables leaves the Jacobian spectrum of a
//! second-order flow unchanged up to a transient in `t`.

use essrate::dynamics::reformulate::{agm_convex_coefficients, agm_convex_transform, reformulate, standard};
use essrate::prelude::*;

fn moduli(g: &Dynamics, t: f64) -> Result<Vec<f64>> {
    let mut m: Vec<f64> = g.jacobian_eigs(&[0.5, 0.1, -0.3, 0.2], t)?.iter().map(|z| z.norm()).collect();
    m.sort_by(f64::total_cmp);
    Ok(m)
}

fn main() -> Result<()> {
    let f = Objective::quadratic(vec![1.0, 0.3], 0.0, 1.0)?;
    let alpha = Rescaling::power(2.0, 1.0);
    let (a1, a2) = agm_convex_coefficients(&alpha);
    let sysx = standard(a1.clone(), a2.clone(), &f)?;
    let sysv = reformulate(a1, a2, agm_convex_transform(&alpha), &f)?;
    let momentum = Dynamics::new(Model::AgmConvex, f, alpha)?;
    for t in [1.0, 10.0, 100.0, 1000.0] {
        let (x, v, m) = (moduli(&sysx, t)?, moduli(&sysv, t)?, moduli(&momentum, t)?);
        let err = x.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("t = {t:>6}: (x, x') {x:.5?}  transformed {v:.5?}  momentum form {m:.5?}  max diff {err:.2e}");
    }
    Ok(())
}
