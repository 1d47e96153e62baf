//! Explicit Runge–Kutta methods, their stability polynomials and domains.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Slack on `|R(z)| ≤ 1` so that exact boundary points classify as stable.
pub const BOUNDARY_SLACK: f64 = 1e-12;

const SCAN_STEP: f64 = 1e-3;
const BISECT_TOL: f64 = 1e-9;
const DOMAIN_ANGLES: usize = 4096;
const DOMAIN_SCAN_STEP: f64 = 1e-2;

/// An explicit Runge–Kutta method given by its Butcher tableau.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RkMethod {
    name: String,
    order: usize,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    poly: Vec<f64>,
}

impl RkMethod {
    /// Builds a method from a strictly lower-triangular `a` and weights `b`.
    pub fn from_tableau(name: &str, order: usize, a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let s = b.len();
        if s == 0 || a.len() != s || a.iter().any(|row| row.len() != s) {
            return Err(invalid("tableau", format!("need an {s}x{s} matrix for {s} weights")));
        }
        for (i, row) in a.iter().enumerate() {
            if row[i..].iter().any(|v| *v != 0.0) {
                return Err(invalid("tableau", "method must be explicit"));
            }
        }
        if order == 0 {
            return Err(invalid("order", "must be at least 1"));
        }
        if (b.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(invalid("tableau", "weights must sum to 1"));
        }
        let c = a.iter().map(|row| row.iter().sum()).collect();
        // c_j = bᵀ A^{j-1} 1.
        let mut poly = vec![1.0];
        let mut w = vec![1.0; s];
        for _ in 0..s {
            poly.push(b.iter().zip(&w).map(|(bi, wi)| bi * wi).sum());
            w = (0..s)
                .map(|i| a[i].iter().zip(&w).map(|(aij, wj)| aij * wj).sum())
                .collect();
        }
        while poly.len() > 2 && *poly.last().unwrap() == 0.0 {
            poly.pop();
        }
        Ok(Self {
            name: name.to_string(),
            order,
            a,
            b,
            c,
            poly,
        })
    }

    pub fn euler() -> Self {
        Self::from_tableau("euler", 1, vec![vec![0.0]], vec![1.0]).unwrap()
    }

    pub fn heun() -> Self {
        Self::from_tableau("rk2", 2, vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![0.5, 0.5])
            .unwrap()
    }

    pub fn rk3() -> Self {
        Self::from_tableau(
            "rk3",
            3,
            vec![
                vec![0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0],
                vec![-1.0, 2.0, 0.0],
            ],
            vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        )
        .unwrap()
    }

    pub fn rk4() -> Self {
        Self::from_tableau(
            "rk4",
            4,
            vec![
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0, 0.0],
                vec![0.0, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
        )
        .unwrap()
    }

    /// `euler`, `heun`/`rk2`, `rk3`, `rk4` (case-insensitive).
    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "euler" => Ok(Self::euler()),
            "heun" | "rk2" => Ok(Self::heun()),
            "rk3" => Ok(Self::rk3()),
            "rk4" => Ok(Self::rk4()),
            _ => Err(Error::Unknown {
                what: "method",
                name: name.to_string(),
            }),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Coefficients `[c₀, c₁, …]` of `R(z) = Σ c_j z^j`.
    pub fn stability_poly(&self) -> &[f64] {
        &self.poly
    }

    /// `R(z)` by Horner's rule.
    pub fn stability_fn(&self, z: Complex64) -> Complex64 {
        self.poly
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// `|R(z)|`.
    pub fn stability_value(&self, z: Complex64) -> f64 {
        self.stability_fn(z).norm()
    }

    pub fn in_domain(&self, z: Complex64) -> bool {
        self.stability_value(z) <= 1.0 + BOUNDARY_SLACK
    }

    /// Radius beyond which `|R(z)| > 1` in every direction: the positive root
    /// of `|c_s| r^s − Σ_{j<s} |c_j| r^j = 1 + slack`.
    fn escape_bound(&self) -> f64 {
        let s = self.poly.len() - 1;
        let g = |r: f64| {
            let lead = self.poly[s].abs() * r.powi(s as i32);
            let rest: f64 = (0..s).map(|j| self.poly[j].abs() * r.powi(j as i32)).sum();
            lead - rest - (1.0 + BOUNDARY_SLACK)
        };
        let mut hi = 1.0;
        while g(hi) <= 0.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    fn ray(&self, theta: f64, s: f64) -> Complex64 {
        Complex64::from_polar(s, theta)
    }

    /// Largest `ρ` such that the whole segment `{s e^{iθ} : 0 ≤ s ≤ ρ}` lies in
    /// the stability domain; 0 when the ray leaves the domain immediately.
    pub fn directional_radius(&self, theta: f64) -> f64 {
        let bound = self.escape_bound();
        let mut inside = 0.0;
        let mut k = 1usize;
        let mut hi = loop {
            let s = k as f64 * SCAN_STEP;
            if s > bound {
                break bound;
            }
            if !self.in_domain(self.ray(theta, s)) {
                break s;
            }
            inside = s;
            k += 1;
        };
        let mut lo = inside;
        while hi - lo > BISECT_TOL {
            let mid = 0.5 * (lo + hi);
            if self.in_domain(self.ray(theta, mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Tangent directions only pass through the slack band: no radius.
        if self.stability_value(self.ray(theta, 0.5 * lo)) > 1.0 {
            return 0.0;
        }
        lo
    }

    /// `max_{z ∈ S} |z|` over a 4096-angle grid, refined by bisection per ray.
    pub fn domain_radius(&self) -> f64 {
        let bound = self.escape_bound();
        (0..DOMAIN_ANGLES)
            .map(|i| {
                let theta = std::f64::consts::PI * i as f64 / (DOMAIN_ANGLES - 1) as f64;
                self.ray_extent(theta, bound)
            })
            .fold(0.0, f64::max)
    }

    /// Largest `s ≤ bound` with `s e^{iθ}` in the domain (point membership).
    fn ray_extent(&self, theta: f64, bound: f64) -> f64 {
        let mut hi = bound;
        let mut lo = hi;
        loop {
            lo = (lo - DOMAIN_SCAN_STEP).max(0.0);
            if self.in_domain(self.ray(theta, lo)) {
                break;
            }
            hi = lo;
            if lo == 0.0 {
                return 0.0;
            }
        }
        while hi - lo > BISECT_TOL {
            let mid = 0.5 * (lo + hi);
            if self.in_domain(self.ray(theta, mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// `|R|` sampled on a `resolution × resolution` grid; rows follow the
    /// imaginary axis (ascending), columns the real axis.
    pub fn domain_grid(
        &self,
        re_range: (f64, f64),
        im_range: (f64, f64),
        resolution: usize,
    ) -> Result<DomainGrid> {
        if resolution < 2 {
            return Err(invalid("resolution", format!("must be at least 2, got {resolution}")));
        }
        let axis = |(a, b): (f64, f64)| -> Vec<f64> {
            (0..resolution)
                .map(|i| a + (b - a) * i as f64 / (resolution - 1) as f64)
                .collect()
        };
        let re = axis(re_range);
        let im = axis(im_range);
        let values = im
            .iter()
            .map(|y| {
                re.iter()
                    .map(|x| self.stability_value(Complex64::new(*x, *y)))
                    .collect()
            })
            .collect();
        Ok(DomainGrid { re, im, values })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// `values[row][col]` is `|R(re[col] + i·im[row])|`.
    pub values: Vec<Vec<f64>>,
}

impl DomainGrid {
    /// `(re, im, |R|)` triples, row-major.
    pub fn triples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.im.iter().enumerate().flat_map(move |(r, y)| {
            self.re
                .iter()
                .enumerate()
                .map(move |(c, x)| (*x, *y, self.values[r][c]))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn builtins() -> Vec<RkMethod> {
        vec![
            RkMethod::euler(),
            RkMethod::heun(),
            RkMethod::rk3(),
            RkMethod::rk4(),
        ]
    }

    #[test]
    fn polynomials_from_tableaus() {
        assert_eq!(RkMethod::euler().stability_poly(), &[1.0, 1.0]);
        assert_eq!(RkMethod::heun().stability_poly(), &[1.0, 1.0, 0.5]);
        let p3 = RkMethod::rk3().stability_poly().to_vec();
        let p4 = RkMethod::rk4().stability_poly().to_vec();
        for (got, want) in p3.iter().zip([1.0, 1.0, 0.5, 1.0 / 6.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        for (got, want) in p4.iter().zip([1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn order_conditions() {
        for m in builtins() {
            let p = m.stability_poly();
            assert_eq!(p.len() - 1, m.stages());
            let mut fact = 1.0;
            for (j, c) in p.iter().enumerate().take(m.order() + 1) {
                if j > 0 {
                    fact *= j as f64;
                }
                assert!((c - 1.0 / fact).abs() < 1e-15, "{}: c_{j}", m.name());
            }
        }
    }

    #[test]
    fn stability_values() {
        for m in builtins() {
            assert_eq!(m.stability_value(z(0.0, 0.0)), 1.0);
        }
        let e = RkMethod::euler();
        assert_eq!(e.stability_value(z(-2.0, 0.0)), 1.0);
        assert_eq!(e.stability_value(z(-1.0, 0.0)), 0.0);
        assert!(e.in_domain(z(-2.0, 0.0)));
        assert!(!e.in_domain(z(-2.001, 0.0)));
        let r4 = RkMethod::rk4();
        assert!(r4.stability_value(z(-2.7, 0.0)) < 1.0);
        assert!(r4.in_domain(z(-2.7, 0.0)));
    }

    #[test]
    fn directional_radius_examples() {
        let e = RkMethod::euler();
        assert!((e.directional_radius(PI) - 2.0).abs() < 1e-8);
        assert_eq!(e.directional_radius(PI / 2.0), 0.0);
        assert_eq!(RkMethod::heun().directional_radius(PI / 2.0), 0.0);
        // Real-axis root of |R(x)| = 1 for RK4 near −2.785.
        let r = RkMethod::rk4().directional_radius(PI);
        let p = |x: f64| 1.0 + x + x * x / 2.0 + x.powi(3) / 6.0 + x.powi(4) / 24.0;
        assert!((p(-r) - 1.0).abs() < 1e-7, "{r}");
        assert!((r - 2.785).abs() < 1e-3, "{r}");
        // Imaginary-axis extent of RK4 is 2√2 and of RK3 √3.
        assert!((RkMethod::rk4().directional_radius(PI / 2.0) - 8f64.sqrt()).abs() < 1e-6);
        assert!((RkMethod::rk3().directional_radius(PI / 2.0) - 3f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn domain_radii() {
        let radii: Vec<f64> = builtins().iter().map(|m| m.domain_radius()).collect();
        assert!((radii[0] - 2.0).abs() < 1e-8, "{radii:?}");
        // The heun and rk4 maxima lie off the real axis.
        assert!((radii[1] - 2.197).abs() < 2e-3, "{radii:?}");
        assert!((radii[2] - 2.538).abs() < 2e-3, "{radii:?}");
        assert!((radii[3] - 2.96).abs() < 1e-2, "{radii:?}");
        for (m, r) in builtins().iter().zip(&radii) {
            for i in 0..64 {
                let theta = 2.0 * PI * i as f64 / 64.0;
                assert!(m.directional_radius(theta) <= r + 1e-8);
            }
        }
    }

    #[test]
    fn symmetric_about_real_axis() {
        for m in builtins() {
            for i in 1..32 {
                let th = PI * i as f64 / 32.0;
                let d = (m.directional_radius(th) - m.directional_radius(-th)).abs();
                assert!(d <= 1e-8);
            }
        }
    }

    #[test]
    fn domain_is_bounded() {
        for m in builtins() {
            for i in 0..16 {
                let th = 2.0 * PI * i as f64 / 16.0;
                assert!(m.stability_value(Complex64::from_polar(1e3, th)) > 1.0);
            }
        }
    }

    #[test]
    fn grid_examples() {
        let g = RkMethod::euler()
            .domain_grid((-3.0, 1.0), (-2.0, 2.0), 5)
            .unwrap();
        assert!((g.values[0][0] - 8f64.sqrt()).abs() < 1e-15);
        // (re, im) = (−1, 0) is column 2, row 2.
        assert_eq!(g.values[2][2], 0.0);
        assert_eq!(g.triples().count(), 25);
        assert!(RkMethod::euler().domain_grid((0.0, 1.0), (0.0, 1.0), 1).is_err());

        let g4 = RkMethod::rk4()
            .domain_grid((-3.0, 0.0), (0.0, 0.0), 3001)
            .unwrap();
        let min = g4.values[0].iter().cloned().fold(f64::INFINITY, f64::min);
        // R has no real root, so the minimum on the real axis is its positive minimum.
        assert!(min > 0.0 && min < 0.3, "{min}");
    }

    #[test]
    fn by_name_and_rejects() {
        assert_eq!(RkMethod::by_name("RK4").unwrap().name(), "rk4");
        assert_eq!(RkMethod::by_name("heun").unwrap().name(), "rk2");
        assert!(RkMethod::by_name("rk5").is_err());
        assert!(RkMethod::from_tableau("x", 1, vec![vec![1.0]], vec![1.0]).is_err());
    }
}
