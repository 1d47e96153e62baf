//! Library results against values computed independently here.

use essrate::analysis::{shifted_coefficient, RescalingPair};
use essrate::prelude::*;
use num_complex::Complex64;

fn rk4_poly(z: Complex64) -> Complex64 {
    1.0 + z + z * z / 2.0 + z.powi(3) / 6.0 + z.powi(4) / 24.0
}

fn rk3_poly(z: Complex64) -> Complex64 {
    1.0 + z + z * z / 2.0 + z.powi(3) / 6.0
}

fn heun_poly(z: Complex64) -> Complex64 {
    1.0 + z + z * z / 2.0
}

/// Largest |z| on a polar grid with |R(z)| ≤ 1, scanning each ray outward.
fn brute_radius(r: fn(Complex64) -> Complex64) -> f64 {
    let mut best = 0.0f64;
    for i in 0..=1800 {
        let th = std::f64::consts::PI * (0.5 + 0.5 * i as f64 / 1800.0);
        let dir = Complex64::from_polar(1.0, th);
        let mut rho = 0.0;
        let mut last_in = 0.0;
        while rho < 4.0 {
            rho += 1e-4;
            if r(dir * rho).norm() <= 1.0 + 1e-12 {
                last_in = rho;
            } else if rho > 0.5 {
                break;
            }
        }
        best = best.max(last_in);
    }
    best
}

#[test]
fn rk4_real_axis_radius_by_bisection() {
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if rk4_poly(Complex64::new(-mid, 0.0)).norm() <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let got = RkMethod::rk4().directional_radius(std::f64::consts::PI);
    assert!((got - lo).abs() < 1e-6, "{got} vs {lo}");
    assert!((lo - 2.785).abs() < 1e-3);
}

#[test]
fn domain_radii_by_brute_force() {
    for (m, r) in [
        (RkMethod::heun(), heun_poly as fn(Complex64) -> Complex64),
        (RkMethod::rk3(), rk3_poly),
        (RkMethod::rk4(), rk4_poly),
    ] {
        let want = brute_radius(r);
        let got = m.domain_radius();
        assert!((got - want).abs() < 5e-3, "{}: {got} vs {want}", m.name());
    }
    assert!((RkMethod::euler().domain_radius() - 2.0).abs() < 1e-6);
}

#[test]
fn stability_polynomials_from_tableaux() {
    for z in [Complex64::new(-1.3, 0.4), Complex64::new(0.2, -2.0)] {
        assert!((RkMethod::rk4().stability_fn(z) - rk4_poly(z)).norm() < 1e-13);
        assert!((RkMethod::rk3().stability_fn(z) - rk3_poly(z)).norm() < 1e-13);
        assert!((RkMethod::heun().stability_fn(z) - heun_poly(z)).norm() < 1e-13);
    }
}

#[test]
fn linear_rescaling_ratio_is_exactly_two() {
    // Euler at the stability limit: h = 2/(r0 L), so L r0 t_k = 2k.
    let ell = 10.0;
    let f = Objective::quadratic(vec![ell, 2.0], 1.0, ell).unwrap();
    for r0 in [0.1, 1.0, 10.0] {
        let g = Dynamics::new(Model::GradientFlow, f.clone(), Rescaling::linear(r0)).unwrap();
        let traj = run(
            &RkMethod::euler(),
            &g,
            &[0.6, 0.8],
            0.0,
            &StepPolicy::capped(1.0),
            &StopRule::steps(50),
            &[],
        )
        .unwrap();
        for rec in &traj.records[1..] {
            let ratio = ell * r0 * rec.t / rec.k as f64;
            assert!((ratio - 2.0).abs() < 1e-9, "r0={r0}, k={}: {ratio}", rec.k);
        }
    }
}

#[test]
fn quartic_flow_follows_closed_form() {
    let g = Dynamics::new(Model::GradientFlow, Objective::quartic(1).unwrap(), Rescaling::Identity).unwrap();
    let traj = run(
        &RkMethod::rk4(),
        &g,
        &[1.0],
        0.0,
        &StepPolicy::Fixed { h: 0.01 },
        &StopRule::time(20.0),
        &[],
    )
    .unwrap();
    for rec in &traj.records {
        let want = 1.0 / (2.0 * rec.t + 1.0).sqrt();
        assert!((rec.y[0] - want).abs() < 1e-9, "t={}: {} vs {want}", rec.t, rec.y[0]);
    }
}

#[test]
fn strong_momentum_eigenvalues_from_trace_and_determinant() {
    // Per eigenvalue λ the Jacobian block is a[[−√μ, √μ], [√μ − λ/√μ, −√μ]].
    let (mu, lam, a) = (2.0f64, 7.0, 0.3);
    let f = Objective::quadratic(vec![lam], mu, lam).unwrap();
    let g = Dynamics::new(Model::AgmStrong, f, Rescaling::linear(a)).unwrap();
    let s = mu.sqrt();
    let (p, q, r, t) = (-a * s, a * s, a * (s - lam / s), -a * s);
    let tr = p + t;
    let det = p * t - q * r;
    let disc = Complex64::new(tr * tr / 4.0 - det, 0.0).sqrt();
    let want = [tr / 2.0 + disc, tr / 2.0 - disc];
    let got = g.jacobian_eigs(&[0.1, 0.2], 1.0).unwrap();
    for w in want {
        assert!(got.iter().any(|z| (z - w).norm() < 1e-12), "{got:?} vs {w}");
    }
}

#[test]
fn shifted_coefficient_optimum() {
    // Left branch 18 L^{3/2}/(7b) meets the right branch at b = 2/√L.
    for ell in [0.5, 1.0, 4.0] {
        let b = 2.0 / f64::sqrt(ell);
        let c = shifted_coefficient(b, ell);
        assert!((c - 9.0 * ell * ell / 7.0).abs() < 1e-12 * c);
        assert!(shifted_coefficient(1.01 * b, ell) > c);
        assert!(shifted_coefficient(0.99 * b, ell) > c);
    }
}

#[test]
fn log_slip_connecting_rate() {
    // α(t) = c(t − ln(1+t)) has α̇ = c t/(1+t).
    let pair = RescalingPair::new(Rescaling::Identity, Rescaling::log_slip(2.0));
    for t in [1.0, 10.0, 1e4] {
        assert!((pair.connecting_rate(t) - 2.0 * t / (1.0 + t)).abs() < 1e-9);
    }
}
