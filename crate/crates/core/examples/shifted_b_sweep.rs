//! Rate coefficient of the shifted-gradient flow as a function of the shift `b`.

use essrate::prelude::*;

fn main() -> Result<()> {
    let ell = 1.0;
    let grid: Vec<f64> = (0..200).map(|i| 0.2 + 9.8 * i as f64 / 199.0).collect();
    let s = shifted_b_sweep(ell, &grid)?;
    for (b, c) in s.points.iter().step_by(20) {
        println!("b = {b:>7.4}  C(b) = {c:>10.5}");
    }
    println!("grid minimum {:.6} at b = {:.4}", s.grid_min, s.grid_argmin);
    println!("refined minimum {:.9} at b = {:.6} (9/7 = {:.9})", s.refined_min, s.refined_argmin, 9.0 / 7.0);
    Ok(())
}
