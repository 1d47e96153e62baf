//! Optimizer ODEs under time-rescaling.
//!
//! Every model is written in base time `s` as `G(y, s)`; a [`Dynamics`] with
//! rescaling `α` evaluates `α̇(t) G(y, α(t))`. Momentum models use the state
//! `y = (x, v)` with `v(0) = x(0)`.

mod metric;
pub mod reformulate;
mod rescaling;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use metric::Metric;
pub use reformulate::{reformulate, Reformulation};
pub use rescaling::Rescaling;

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::objective::Objective;

/// Start time used by models whose coefficients blow up at `α = 0`.
pub const SINGULAR_START: f64 = 1e-3;

#[derive(Debug, Clone)]
pub enum Model {
    /// `ẋ = −∇f(x)`
    GradientFlow,
    /// `ẋ = (1/s)(v − x)`, `v̇ = −∇f(x)/4`
    AgmConvex,
    /// `ẋ = (2/s)(v − x)`, `v̇ = −(s/2)∇f((1 − 2b/s)x + (2b/s)v)`
    AgmShifted { b: f64 },
    /// `ẋ = √μ(v − x)`, `v̇ = √μ(x − v) − ∇f(x)/√μ`
    AgmStrong,
    /// `ẋ = 2√μ(v − x)`, `v̇ = √μ(x − v) − ∇f(x)/√μ`
    Tmm,
    /// A heavy-ball equation in a user-chosen first-order form.
    FirstOrder(Arc<Reformulation>),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::GradientFlow => "gradient_flow",
            Model::AgmConvex => "agm_convex",
            Model::AgmShifted { .. } => "agm_shifted",
            Model::AgmStrong => "agm_strong",
            Model::Tmm => "tmm",
            Model::FirstOrder(_) => "first_order",
        }
    }

    pub fn is_momentum(&self) -> bool {
        !matches!(self, Model::GradientFlow)
    }
}

/// Serializable name of a built-in model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    GradientFlow,
    AgmConvex,
    AgmShifted,
    AgmStrong,
    Tmm,
}

impl ModelName {
    pub fn build(self, shift_b: Option<f64>) -> Result<Model> {
        Ok(match self {
            ModelName::GradientFlow => Model::GradientFlow,
            ModelName::AgmConvex => Model::AgmConvex,
            ModelName::AgmShifted => Model::AgmShifted {
                b: shift_b.ok_or_else(|| invalid("shift_b", "required for agm_shifted"))?,
            },
            ModelName::AgmStrong => Model::AgmStrong,
            ModelName::Tmm => Model::Tmm,
        })
    }
}

/// A model bound to an objective and a time-rescaling.
#[derive(Clone)]
pub struct Dynamics {
    model: Model,
    objective: Objective,
    rescaling: Rescaling,
}

impl fmt::Debug for Dynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.descriptor())
    }
}

impl Dynamics {
    pub fn new(model: Model, objective: Objective, rescaling: Rescaling) -> Result<Self> {
        rescaling.validate()?;
        match &model {
            Model::AgmStrong | Model::Tmm if objective.mu() <= 0.0 => {
                return Err(invalid("mu", format!("{} requires mu > 0", model.name())));
            }
            Model::AgmShifted { b } if !(b.is_finite() && *b > 0.0) => {
                return Err(invalid("shift_b", format!("must be positive, got {b}")));
            }
            _ => {}
        }
        Ok(Self {
            model,
            objective,
            rescaling,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn rescaling(&self) -> &Rescaling {
        &self.rescaling
    }

    pub fn descriptor(&self) -> String {
        let b = match self.model {
            Model::AgmShifted { b } => format!("(b={b})"),
            _ => String::new(),
        };
        format!(
            "{}{b} ∘ α={} on {}",
            self.model.name(),
            self.rescaling.describe(),
            self.objective.descriptor()
        )
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn state_dim(&self) -> usize {
        if self.model.is_momentum() {
            2 * self.dim()
        } else {
            self.dim()
        }
    }

    /// Default integration start.
    pub fn t_start(&self) -> f64 {
        match self.model {
            Model::AgmConvex | Model::AgmShifted { .. } | Model::FirstOrder(_) => SINGULAR_START,
            _ => 0.0,
        }
    }

    /// `(x₀, x₀)` for momentum models, `x₀` otherwise.
    pub fn initial_state(&self, x0: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x0, self.dim())?;
        let mut y = x0.to_vec();
        if self.model.is_momentum() {
            y.extend_from_slice(x0);
        }
        Ok(y)
    }

    /// Position `x` of the state `y` at time `t`.
    pub fn position(&self, y: &[f64], t: f64) -> Vec<f64> {
        let d = self.dim();
        match &self.model {
            Model::FirstOrder(r) => r.position(y, self.rescaling.value(t), d),
            _ => y[..d].to_vec(),
        }
    }

    /// `ĝ = α ∘ g`: the same model under `self.rescaling ∘ alpha`.
    pub fn rescaled(&self, alpha: &Rescaling) -> Dynamics {
        Dynamics {
            model: self.model.clone(),
            objective: self.objective.clone(),
            rescaling: self.rescaling.compose(alpha),
        }
    }

    fn check_len(&self, y: &[f64], n: usize) -> Result<()> {
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
        Ok(())
    }

    /// `(α(t), α̇(t))`, rejecting base times where the model is singular.
    fn base_time(&self, t: f64) -> Result<(f64, f64)> {
        let s = self.rescaling.value(t);
        let a = self.rescaling.rate(t);
        let singular = match self.model {
            Model::AgmConvex | Model::AgmShifted { .. } => !(s > 0.0),
            _ => false,
        };
        if singular || !s.is_finite() || !a.is_finite() {
            return Err(Error::SingularTime {
                model: self.model.name().into(),
                t,
            });
        }
        Ok((s, a))
    }

    fn shifted_point(b: f64, s: f64, x: &[f64], v: &[f64]) -> Vec<f64> {
        let w = 2.0 * b / s;
        x.iter().zip(v).map(|(xi, vi)| (1.0 - w) * xi + w * vi).collect()
    }

    fn sqrt_mu(&self) -> f64 {
        self.objective.mu().sqrt()
    }

    /// `α̇(t) G(y, α(t))`.
    pub fn vector_field(&self, y: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_len(y, self.state_dim())?;
        let (s, a) = self.base_time(t)?;
        let d = self.dim();
        let mut out = match &self.model {
            Model::GradientFlow => self.objective.grad(y)?.into_iter().map(|g| -g).collect(),
            Model::FirstOrder(r) => r.field(&self.objective, y, s)?,
            model => {
                let (x, v) = y.split_at(d);
                let sm = self.sqrt_mu();
                let (cx, grad, gv) = match model {
                    Model::AgmConvex => (1.0 / s, self.objective.grad(x)?, 0.25),
                    Model::AgmShifted { b } => (
                        2.0 / s,
                        self.objective.grad(&Self::shifted_point(*b, s, x, v))?,
                        0.5 * s,
                    ),
                    Model::AgmStrong => (sm, self.objective.grad(x)?, 1.0 / sm),
                    Model::Tmm => (2.0 * sm, self.objective.grad(x)?, 1.0 / sm),
                    _ => unreachable!(),
                };
                let coupling = match model {
                    Model::AgmStrong | Model::Tmm => sm,
                    _ => 0.0,
                };
                let mut out = vec![0.0; 2 * d];
                for i in 0..d {
                    out[i] = cx * (v[i] - x[i]);
                    out[d + i] = coupling * (x[i] - v[i]) - gv * grad[i];
                }
                out
            }
        };
        for o in &mut out {
            *o *= a;
        }
        Ok(out)
    }

    /// Jacobian of the rescaled field with respect to `y`, assembled from `∇²f`.
    pub fn jacobian(&self, y: &[f64], t: f64) -> Result<DMatrix<f64>> {
        self.check_len(y, self.state_dim())?;
        let (s, a) = self.base_time(t)?;
        let d = self.dim();
        let j = match &self.model {
            Model::GradientFlow => -self.objective.hessian(y)?,
            Model::FirstOrder(r) => r.jacobian(&self.objective, y, s)?,
            model => {
                let (x, v) = y.split_at(d);
                let sm = self.sqrt_mu();
                // Blocks [[cxx·I, cxv·I], [cvx·I + hx·H, cvv·I + hv·H]].
                let (cxx, cxv, cvx, cvv, hx, hv, h) = match model {
                    Model::AgmConvex => (
                        -1.0 / s,
                        1.0 / s,
                        0.0,
                        0.0,
                        -0.25,
                        0.0,
                        self.objective.hessian(x)?,
                    ),
                    Model::AgmShifted { b } => (
                        -2.0 / s,
                        2.0 / s,
                        0.0,
                        0.0,
                        -(0.5 * s - b),
                        -b,
                        self.objective
                            .hessian(&Self::shifted_point(*b, s, x, v))?,
                    ),
                    Model::AgmStrong => (-sm, sm, sm, -sm, -1.0 / sm, 0.0, self.objective.hessian(x)?),
                    Model::Tmm => (
                        -2.0 * sm,
                        2.0 * sm,
                        sm,
                        -sm,
                        -1.0 / sm,
                        0.0,
                        self.objective.hessian(x)?,
                    ),
                    _ => unreachable!(),
                };
                let mut j = DMatrix::zeros(2 * d, 2 * d);
                for i in 0..d {
                    j[(i, i)] = cxx;
                    j[(i, d + i)] = cxv;
                    j[(d + i, i)] = cvx;
                    j[(d + i, d + i)] = cvv;
                    for k in 0..d {
                        j[(d + i, k)] += hx * h[(i, k)];
                        j[(d + i, d + k)] += hv * h[(i, k)];
                    }
                }
                j
            }
        };
        Ok(j * a)
    }

    /// Central-difference Jacobian of [`Dynamics::vector_field`]. Usable at
    /// points where `∇²f` does not exist.
    pub fn jacobian_fd(&self, y: &[f64], t: f64) -> Result<DMatrix<f64>> {
        self.check_len(y, self.state_dim())?;
        let n = y.len();
        let inf_norm = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let h = 1e-6f64.max(1e-6 * inf_norm);
        let mut j = DMatrix::zeros(n, n);
        let mut yp = y.to_vec();
        for c in 0..n {
            yp[c] = y[c] + h;
            let fp = self.vector_field(&yp, t)?;
            yp[c] = y[c] - h;
            let fm = self.vector_field(&yp, t)?;
            yp[c] = y[c];
            for r in 0..n {
                j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        Ok(j)
    }

    /// Closed-form Jacobian eigenvalues whenever the Hessian spectrum is known
    /// analytically, dense eigensolver otherwise.
    pub fn jacobian_eigs(&self, y: &[f64], t: f64) -> Result<Vec<Complex64>> {
        self.check_len(y, self.state_dim())?;
        if self.objective.is_custom() || matches!(self.model, Model::FirstOrder(_)) {
            return self.jacobian_eigs_numeric(y, t);
        }
        let (s, a) = self.base_time(t)?;
        let d = self.dim();
        let hess_at = match self.model {
            Model::AgmShifted { b } => Self::shifted_point(b, s, &y[..d], &y[d..]),
            _ => y[..d].to_vec(),
        };
        let lams = self.objective.hessian_eigs(&hess_at)?;
        let mut out = Vec::with_capacity(self.state_dim());
        for &l in &lams {
            self.closed_form_pair(l, s, a, &mut out);
        }
        Ok(out)
    }

    fn closed_form_pair(&self, l: f64, s: f64, a: f64, out: &mut Vec<Complex64>) {
        let c = |x: f64| Complex64::new(x, 0.0);
        let sm = self.sqrt_mu();
        match self.model {
            Model::GradientFlow => out.push(c(-a * l)),
            Model::AgmConvex => {
                let r = c(1.0 - s * l).sqrt();
                let k = a / (2.0 * s);
                out.push(k * (-1.0 + r));
                out.push(k * (-1.0 - r));
            }
            Model::AgmShifted { b } => {
                let m = 1.0 / s + 0.5 * b * l;
                let r = c(m * m - l).sqrt();
                out.push(a * (-m + r));
                out.push(a * (-m - r));
            }
            Model::AgmStrong => {
                let r = c(l - sm * sm).sqrt();
                out.push(a * (-sm + Complex64::i() * r));
                out.push(a * (-sm - Complex64::i() * r));
            }
            Model::Tmm => {
                let r = c(9.0 * sm * sm - 8.0 * l).sqrt();
                out.push(0.5 * a * (-3.0 * sm + r));
                out.push(0.5 * a * (-3.0 * sm - r));
            }
            Model::FirstOrder(_) => unreachable!(),
        }
    }

    /// Eigenvalues of [`Dynamics::jacobian`] by the dense solver.
    pub fn jacobian_eigs_numeric(&self, y: &[f64], t: f64) -> Result<Vec<Complex64>> {
        linalg::eigenvalues(&self.jacobian(y, t)?)
    }

    pub fn spectral_radius(&self, y: &[f64], t: f64) -> Result<f64> {
        Ok(linalg::spectral_radius(&self.jacobian_eigs(y, t)?))
    }

    /// Jacobian eigenvalues, falling back to a finite-difference Jacobian where
    /// the objective is not twice differentiable. The flag reports the fallback.
    pub fn spectrum_with_fallback(&self, y: &[f64], t: f64) -> Result<(Vec<Complex64>, bool)> {
        match self.jacobian_eigs(y, t) {
            Ok(e) => Ok((e, false)),
            Err(Error::NonSmooth { .. }) => {
                Ok((linalg::eigenvalues(&self.jacobian_fd(y, t)?)?, true))
            }
            Err(e) => Err(e),
        }
    }
}

/// True iff `g1(y, t) = α̇(t) g2(y, α(t))` within `1e-9 (1 + ‖·‖)` at every sample.
pub fn verify_equivalence(
    g1: &Dynamics,
    g2: &Dynamics,
    alpha: &Rescaling,
    samples: &[(Vec<f64>, f64)],
) -> bool {
    if g1.state_dim() != g2.state_dim() {
        return false;
    }
    samples.iter().all(|(y, t)| {
        let (Ok(lhs), Ok(rhs)) = (g1.vector_field(y, *t), g2.vector_field(y, alpha.value(*t)))
        else {
            return false;
        };
        let a = alpha.rate(*t);
        let rhs: Vec<f64> = rhs.iter().map(|v| a * v).collect();
        let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(p, q)| p - q).collect();
        linalg::norm(&diff) <= 1e-9 * (1.0 + linalg::norm(&rhs))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const L: f64 = 10.0;

    fn quad(eigs: Vec<f64>) -> Objective {
        let mu = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        let ell = eigs.iter().cloned().fold(0.0, f64::max);
        Objective::quadratic(eigs, mu, ell).unwrap()
    }

    fn dynamics(model: Model, f: Objective, alpha: Rescaling) -> Dynamics {
        Dynamics::new(model, f, alpha).unwrap()
    }

    #[test]
    fn gradient_flow_field() {
        let g = dynamics(Model::GradientFlow, quad(vec![L]), Rescaling::Identity);
        assert_eq!(g.vector_field(&[1.0], 3.0).unwrap(), vec![-L]);
        assert_eq!(g.jacobian(&[1.0], 3.0).unwrap()[(0, 0)], -L);
    }

    #[test]
    fn agm_convex_field_under_t_squared() {
        let g = dynamics(Model::AgmConvex, quad(vec![L]), Rescaling::power(2.0, 1.0));
        let v = g.vector_field(&[1.0, 1.0], 1.0).unwrap();
        assert_eq!(v[0], 0.0);
        assert!((v[1] - -L / 2.0).abs() < 1e-14);
    }

    #[test]
    fn quartic_exp23_field() {
        let g = dynamics(
            Model::GradientFlow,
            Objective::quartic(1).unwrap(),
            Rescaling::Exp23,
        );
        for (x, t) in [(0.5, 0.3), (1.2, 2.0)] {
            let v = g.vector_field(&[x], t).unwrap()[0];
            let want = -(2.0 * t / 3.0).exp() * x * x * x;
            assert!((v - want).abs() <= 1e-14 * want.abs());
        }
    }

    #[test]
    fn quartic_jacobian_on_true_solution() {
        let g = dynamics(
            Model::GradientFlow,
            Objective::quartic(1).unwrap(),
            Rescaling::Identity,
        );
        for t in [0.0, 1.0, 10.0, 1e3] {
            let x = 1.0 / (2.0 * t + 1.0f64).sqrt();
            let j = g.jacobian(&[x], t).unwrap()[(0, 0)];
            assert!((j - -3.0 / (2.0 * t + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn quartic_exp23_radius_tends_to_one() {
        let g = dynamics(
            Model::GradientFlow,
            Objective::quartic(1).unwrap(),
            Rescaling::Exp23,
        );
        // On the true solution x(t) = 1/√(2α(t) + 1).
        let t = 30.0;
        let x = 1.0 / (2.0 * Rescaling::Exp23.value(t) + 1.0).sqrt();
        assert!((g.spectral_radius(&[x], t).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn gradient_flow_spectrum_under_t_over_l() {
        let g = dynamics(
            Model::GradientFlow,
            quad(vec![L, 1.0]),
            Rescaling::linear(1.0 / L),
        );
        let mut e: Vec<f64> = g.jacobian_eigs(&[1.0, 1.0], 5.0).unwrap().iter().map(|z| z.re).collect();
        e.sort_by(f64::total_cmp);
        assert!((e[0] + 1.0).abs() < 1e-15 && (e[1] + 0.1).abs() < 1e-15);
        assert!((g.spectral_radius(&[1.0, 1.0], 5.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn agm_convex_modulus_at_large_t() {
        let g = dynamics(Model::AgmConvex, quad(vec![L]), Rescaling::power(2.0, 1.0 / L));
        let t = 500.0;
        let a = g.rescaling().rate(t);
        let s = g.rescaling().value(t);
        for z in g.jacobian_eigs(&[1.0, 1.0], t).unwrap() {
            assert!((z.norm() - 0.5 * a * (L / s).sqrt()).abs() < 1e-12);
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tmm_modulus_is_one() {
        let mu = 1.0;
        let f = Objective::quadratic(vec![L], mu, L).unwrap();
        let g = dynamics(Model::Tmm, f, Rescaling::linear(1.0 / (2.0 * L).sqrt()));
        let closed = g.jacobian_eigs(&[1.0, 1.0], 2.0).unwrap();
        let dense = g.jacobian_eigs_numeric(&[1.0, 1.0], 2.0).unwrap();
        for z in &closed {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
        let (a, b) = (linalg::sorted_moduli(&closed), linalg::sorted_moduli(&dense));
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn agm_strong_eigenvalues() {
        let (mu, lam) = (1.0, 10.0);
        let f = Objective::quadratic(vec![lam], mu, L).unwrap();
        let g = dynamics(Model::AgmStrong, f, Rescaling::linear(1.0 / L.sqrt()));
        let a = 1.0 / L.sqrt();
        let e = g.jacobian_eigs(&[0.3, -0.1], 1.0).unwrap();
        for z in e {
            assert!((z.re - -a * mu.sqrt()).abs() < 1e-14);
            assert!((z.im.abs() - a * (lam - mu).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn shifted_radius_at_witness_approaches_one() {
        let b = 2.0 / L.sqrt();
        let g = dynamics(Model::AgmShifted { b }, quad(vec![L]), Rescaling::linear(1.0 / L.sqrt()));
        let r = g.spectral_radius(&[1.0, 1.0], 1e7).unwrap();
        assert!((r - 1.0).abs() < 1e-3, "{r}");
    }

    #[test]
    fn singular_start_is_rejected() {
        let g = dynamics(Model::AgmConvex, quad(vec![L]), Rescaling::power(2.0, 1.0));
        assert!(matches!(
            g.vector_field(&[1.0, 1.0], 0.0),
            Err(Error::SingularTime { .. })
        ));
        assert_eq!(g.t_start(), SINGULAR_START);
    }

    #[test]
    fn strong_models_need_mu() {
        let f = Objective::quadratic(vec![L], 0.0, L).unwrap();
        assert!(Dynamics::new(Model::Tmm, f.clone(), Rescaling::Identity).is_err());
        assert!(Dynamics::new(Model::AgmStrong, f.clone(), Rescaling::Identity).is_err());
        assert!(Dynamics::new(Model::AgmShifted { b: 0.0 }, f, Rescaling::Identity).is_err());
    }

    #[test]
    fn rescaled_linear_and_power() {
        let g = dynamics(Model::GradientFlow, quad(vec![L]), Rescaling::Identity);
        let r = g.rescaled(&Rescaling::linear(3.0));
        assert!((r.vector_field(&[1.0], 2.0).unwrap()[0] - -3.0 * L).abs() < 1e-12);
        let p = g.rescaled(&Rescaling::power(3.0, 1.0));
        let t = 2.0;
        let want = -3.0 * t * t * L;
        assert!((p.vector_field(&[1.0], t).unwrap()[0] - want).abs() < 1e-12);
        let same = g.rescaled(&Rescaling::Identity);
        for t in [0.0, 1.0, 7.0] {
            assert_eq!(
                same.vector_field(&[0.3], t).unwrap(),
                g.vector_field(&[0.3], t).unwrap()
            );
        }
    }

    #[test]
    fn equivalence_examples() {
        let samples: Vec<(Vec<f64>, f64)> =
            (1..20).map(|i| (vec![0.1 * i as f64], 0.37 * i as f64)).collect();
        let base = dynamics(Model::GradientFlow, quad(vec![L]), Rescaling::Identity);
        let alpha = Rescaling::power(2.0, 0.5);
        assert!(verify_equivalence(&base.rescaled(&alpha), &base, &alpha, &samples));

        let scaled = dynamics(Model::GradientFlow, quad(vec![1.0]), Rescaling::Identity);
        let lin = Rescaling::linear(1.0 / L);
        assert!(verify_equivalence(&scaled, &base, &lin, &samples));

        let gf2 = dynamics(Model::GradientFlow, quad(vec![L, L]), Rescaling::Identity);
        let agm = dynamics(Model::AgmConvex, quad(vec![L]), Rescaling::Identity);
        assert!(!verify_equivalence(
            &gf2,
            &agm,
            &Rescaling::Identity,
            &[(vec![1.0, 1.0], 1.0)]
        ));
        // Different state dimensions are never equivalent.
        assert!(!verify_equivalence(&base, &agm, &Rescaling::Identity, &samples));
    }

    #[test]
    fn jacobian_matches_differences_on_quartic() {
        let f = Objective::quartic(2).unwrap();
        for model in [Model::AgmConvex, Model::AgmShifted { b: 0.4 }] {
            let g = dynamics(model, f.clone(), Rescaling::power(2.0, 0.3));
            let y = [0.4, -0.9, 0.1, 0.5];
            let (j, jf) = (g.jacobian(&y, 1.7).unwrap(), g.jacobian_fd(&y, 1.7).unwrap());
            assert!((j - jf).abs().max() < 1e-6);
        }
    }

    #[test]
    fn fallback_flags_kink() {
        let f = Objective::power_hinge(4.0, 1.0).unwrap();
        let g = dynamics(Model::GradientFlow, f, Rescaling::Identity);
        let (e, flagged) = g.spectrum_with_fallback(&[1.0], 0.0).unwrap();
        assert!(flagged);
        assert_eq!(e.len(), 1);
        let (_, clean) = g.spectrum_with_fallback(&[0.5], 0.0).unwrap();
        assert!(!clean);
    }

    #[test]
    fn limiting_radius_of_shifted_model_depends_on_b() {
        // With α̇ = a, the limiting radius is a√L for b ≤ 2/√L and
        // (a/2)(bL + √((bL)² − 4L)) above.
        let a = 1.0 / L.sqrt();
        for i in 1..30 {
            let b = 0.05 * i as f64;
            let g = dynamics(Model::AgmShifted { b }, quad(vec![L]), Rescaling::linear(a));
            let r = g.spectral_radius(&[1.0, 1.0], 1e9).unwrap();
            let bl = b * L;
            let want = if b <= 2.0 / L.sqrt() {
                a * L.sqrt()
            } else {
                0.5 * a * (bl + (bl * bl - 4.0 * L).sqrt())
            };
            assert!((r - want).abs() < 1e-3 * want, "b={b}: {r} vs {want}");
        }
    }

    fn model_strategy() -> impl Strategy<Value = Model> {
        prop_oneof![
            Just(Model::GradientFlow),
            Just(Model::AgmConvex),
            (0.05f64..2.0).prop_map(|b| Model::AgmShifted { b }),
            Just(Model::AgmStrong),
            Just(Model::Tmm),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn closed_form_matches_dense_solver(
            model in model_strategy(),
            eigs in proptest::collection::vec(1.0f64..10.0, 1..4),
            t in 0.01f64..50.0,
            r in 0.05f64..3.0,
        ) {
            let f = Objective::quadratic(eigs, 1.0, 10.0).unwrap();
            let g = Dynamics::new(model, f, Rescaling::linear(r)).unwrap();
            let y = vec![0.5; g.state_dim()];
            let closed = linalg::sorted_moduli(&g.jacobian_eigs(&y, t).unwrap());
            let dense = linalg::sorted_moduli(&g.jacobian_eigs_numeric(&y, t).unwrap());
            prop_assert_eq!(closed.len(), dense.len());
            for (p, q) in closed.iter().zip(&dense) {
                prop_assert!((p - q).abs() <= 1e-8 * (1.0 + q), "{:?} vs {:?}", closed, dense);
            }
        }

        #[test]
        fn one_essential_upper_bound_on_quadratics(
            eigs in proptest::collection::vec(1.0f64..10.0, 1..4),
            t in 20.0f64..200.0,
        ) {
            let mut eigs = eigs;
            eigs.push(L);
            let f = Objective::quadratic(eigs, 1.0, L).unwrap();
            let mu = 1.0f64;
            let cases = [
                (Model::GradientFlow, Rescaling::linear(1.0 / L)),
                (Model::AgmConvex, Rescaling::power(2.0, 1.0 / L)),
                (Model::AgmStrong, Rescaling::linear(1.0 / L.sqrt())),
                (Model::Tmm, Rescaling::linear(1.0 / (2.0 * mu.sqrt()).max((2.0 * L).sqrt()))),
            ];
            for (model, alpha) in cases {
                let g = Dynamics::new(model, f.clone(), alpha).unwrap();
                let y = vec![0.5; g.state_dim()];
                let r = g.spectral_radius(&y, t).unwrap();
                prop_assert!(r <= 1.0 + 1e-6, "{}: {}", g.descriptor(), r);
            }
        }
    }
}
