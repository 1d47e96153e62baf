//! Stability radii of the built-in Runge–Kutta methods, with an optional
//! SVG heat map: `cargo run --example stability_domains -- rk4 out.svg`.

use essrate::plot::stability_heatmap;
use essrate::stability::RkMethod;
use std::f64::consts::PI;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:<6} {:>8} {:>10} {:>10}", "method", "radius", "real axis", "imag axis");
    for name in ["euler", "rk2", "rk3", "rk4"] {
        let m = RkMethod::by_name(name)?;
        println!(
            "{:<6} {:>8.4} {:>10.4} {:>10.4}",
            name,
            m.domain_radius(),
            m.directional_radius(PI),
            m.directional_radius(PI / 2.0)
        );
    }

    let args: Vec<String> = std::env::args().skip(1).collect();
    if let [name, path] = args.as_slice() {
        let m = RkMethod::by_name(name)?;
        let grid = m.domain_grid((-3.5, 1.0), (-3.0, 3.0), 160)?;
        std::fs::write(path, stability_heatmap(name, &grid))?;
        println!("wrote {path}");
    }
    Ok(())
}
