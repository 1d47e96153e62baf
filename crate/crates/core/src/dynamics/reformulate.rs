//! First-order reformulations of `ẍ + a₁(t)ẋ + a₂(t)∇f(x) = 0`.
//!
//! With `(x, ẋ) = A(t)(v₁, v₂)` (blockwise, `A ⊗ I_d`) the state `v` obeys
//! `v̇ = (dA⁻¹/dt) A v + A⁻¹ F(A v, t)` where `F` is the standard field
//! `(ẋ, −a₁ẋ − a₂∇f(x))`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2};

use super::Rescaling;
use crate::error::{Error, Result};
use crate::objective::Objective;

pub type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type TimeMatrix = Arc<dyn Fn(f64) -> Matrix2<f64> + Send + Sync>;

#[derive(Clone)]
pub struct Reformulation {
    pub name: String,
    pub a1: Coefficient,
    pub a2: Coefficient,
    pub a: TimeMatrix,
}

impl fmt::Debug for Reformulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Reformulation")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

/// Builds the reformulated system for `f`. Pass `A ≡ I` for the standard `(x, ẋ)` form.
pub fn reformulate(
    a1: Coefficient,
    a2: Coefficient,
    a: TimeMatrix,
    f: &Objective,
) -> Result<super::Dynamics> {
    let r = Reformulation {
        name: "first_order".into(),
        a1,
        a2,
        a,
    };
    super::Dynamics::new(
        super::Model::FirstOrder(Arc::new(r)),
        f.clone(),
        Rescaling::Identity,
    )
}

/// The standard `(x, ẋ)` system with the given coefficients.
pub fn standard(a1: Coefficient, a2: Coefficient, f: &Objective) -> Result<super::Dynamics> {
    reformulate(a1, a2, Arc::new(|_| Matrix2::identity()), f)
}

/// Coefficients `(a₁, a₂)` of the accelerated-gradient flow written as a
/// second-order equation under the time scale `α`:
/// `a₁ = 2α̇/α − α̈/α̇`, `a₂ = α̇²/(4α)`.
pub fn agm_convex_coefficients(alpha: &Rescaling) -> (Coefficient, Coefficient) {
    let al = alpha.clone();
    let a1: Coefficient = Arc::new(move |t| {
        let (s, d, dd) = (al.value(t), al.rate(t), al.accel(t));
        2.0 * d / s - dd / d
    });
    let al = alpha.clone();
    let a2: Coefficient = Arc::new(move |t| {
        let (s, d) = (al.value(t), al.rate(t));
        d * d / (4.0 * s)
    });
    (a1, a2)
}

/// `A(t) = [[1, 0], [−α̇/α, α̇/α]]`, which maps `(x, v)` of the momentum form to `(x, ẋ)`.
pub fn agm_convex_transform(alpha: &Rescaling) -> TimeMatrix {
    let al = alpha.clone();
    Arc::new(move |t| {
        let q = al.rate(t) / al.value(t);
        Matrix2::new(1.0, 0.0, -q, q)
    })
}

impl Reformulation {
    fn inverse_at(&self, t: f64) -> Result<Matrix2<f64>> {
        let a = (self.a)(t);
        let det = a.determinant();
        if !det.is_finite() || det.abs() <= 1e-14 * a.norm().powi(2).max(f64::MIN_POSITIVE) {
            return Err(Error::SingularMatrix { t });
        }
        a.try_inverse().ok_or(Error::SingularMatrix { t })
    }

    /// `dA⁻¹/dt` by central differences with step `1e-5 · max(1, t)`.
    fn inverse_rate(&self, t: f64) -> Result<Matrix2<f64>> {
        let h = 1e-5 * t.abs().max(1.0);
        let lo = if t - h > 0.0 { t - h } else { t };
        let hi = t + h;
        Ok((self.inverse_at(hi)? - self.inverse_at(lo)?) / (hi - lo))
    }

    /// `[A v]₁`, the position.
    pub(crate) fn position(&self, y: &[f64], t: f64, d: usize) -> Vec<f64> {
        let a = (self.a)(t);
        (0..d).map(|i| a[(0, 0)] * y[i] + a[(0, 1)] * y[d + i]).collect()
    }

    pub(crate) fn field(&self, f: &Objective, y: &[f64], t: f64) -> Result<Vec<f64>> {
        let d = f.dim();
        let a = (self.a)(t);
        let ainv = self.inverse_at(t)?;
        let dinv = self.inverse_rate(t)?;
        let m = dinv * a;
        let x: Vec<f64> = (0..d).map(|i| a[(0, 0)] * y[i] + a[(0, 1)] * y[d + i]).collect();
        let xd: Vec<f64> = (0..d).map(|i| a[(1, 0)] * y[i] + a[(1, 1)] * y[d + i]).collect();
        let g = f.grad(&x)?;
        let (a1, a2) = ((self.a1)(t), (self.a2)(t));
        let mut out = vec![0.0; 2 * d];
        for i in 0..d {
            let fx = xd[i];
            let fv = -a1 * xd[i] - a2 * g[i];
            out[i] = m[(0, 0)] * y[i] + m[(0, 1)] * y[d + i] + ainv[(0, 0)] * fx + ainv[(0, 1)] * fv;
            out[d + i] =
                m[(1, 0)] * y[i] + m[(1, 1)] * y[d + i] + ainv[(1, 0)] * fx + ainv[(1, 1)] * fv;
        }
        Ok(out)
    }

    pub(crate) fn jacobian(&self, f: &Objective, y: &[f64], t: f64) -> Result<DMatrix<f64>> {
        let d = f.dim();
        let a = (self.a)(t);
        let ainv = self.inverse_at(t)?;
        let m = self.inverse_rate(t)? * a;
        let x = self.position(y, t, d);
        let h = f.hessian(&x)?;
        let (a1, a2) = ((self.a1)(t), (self.a2)(t));
        let mut jf = DMatrix::zeros(2 * d, 2 * d);
        for i in 0..d {
            jf[(i, d + i)] = 1.0;
            jf[(d + i, d + i)] = -a1;
            for j in 0..d {
                jf[(d + i, j)] = -a2 * h[(i, j)];
            }
        }
        let kron = |b: &Matrix2<f64>| {
            let mut k = DMatrix::zeros(2 * d, 2 * d);
            for i in 0..d {
                k[(i, i)] = b[(0, 0)];
                k[(i, d + i)] = b[(0, 1)];
                k[(d + i, i)] = b[(1, 0)];
                k[(d + i, d + i)] = b[(1, 1)];
            }
            k
        };
        Ok(kron(&m) + kron(&ainv) * jf * kron(&a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    fn const_coeff(c: f64) -> Coefficient {
        Arc::new(move |_| c)
    }

    #[test]
    fn identity_transform_is_standard_system() {
        let f = Objective::quadratic(vec![2.0], 0.0, 2.0).unwrap();
        let g = standard(const_coeff(0.5), const_coeff(3.0), &f).unwrap();
        let y = [0.7, -0.2];
        let v = g.vector_field(&y, 1.3).unwrap();
        assert!((v[0] - -0.2).abs() < 1e-15);
        assert!((v[1] - (0.1 - 3.0 * 2.0 * 0.7)).abs() < 1e-14);
    }

    #[test]
    fn constant_transform_preserves_spectrum() {
        let f = Objective::quadratic(vec![1.0], 0.0, 1.0).unwrap();
        let reference =
            linalg::eigenvalues(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -1.0])).unwrap();
        let a = Matrix2::new(0.3, -1.2, 2.0, 0.9);
        let g = reformulate(const_coeff(1.0), const_coeff(1.0), Arc::new(move |_| a), &f).unwrap();
        for t in [0.5, 3.0, 40.0] {
            let e = linalg::eigenvalues(&g.jacobian(&[0.1, 0.4], t).unwrap()).unwrap();
            let (m1, m2) = (linalg::sorted_moduli(&e), linalg::sorted_moduli(&reference));
            for (p, q) in m1.iter().zip(&m2) {
                assert!((p - q).abs() <= 1e-9, "{m1:?} vs {m2:?}");
            }
        }
    }

    #[test]
    fn singular_transform_is_reported() {
        let f = Objective::quadratic(vec![1.0], 0.0, 1.0).unwrap();
        let g = reformulate(
            const_coeff(1.0),
            const_coeff(1.0),
            Arc::new(|_| Matrix2::new(1.0, 2.0, 2.0, 4.0)),
            &f,
        )
        .unwrap();
        assert!(matches!(
            g.vector_field(&[1.0, 1.0], 1.0),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn agm_second_order_form_recovers_classic_damping() {
        // α = t² gives ẍ + (3/t)ẋ + ∇f = 0.
        let (a1, a2) = agm_convex_coefficients(&Rescaling::power(2.0, 1.0));
        for t in [0.5, 2.0, 10.0] {
            assert!((a1(t) - 3.0 / t).abs() < 1e-12);
            assert!((a2(t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn transform_maps_momentum_state_to_velocity() {
        // ẋ = (α̇/α)(v − x) for the accelerated-gradient flow.
        let alpha = Rescaling::power(2.0, 0.5);
        let a = agm_convex_transform(&alpha)(3.0);
        let (x, v) = (0.4, 1.1);
        let xd = a[(1, 0)] * x + a[(1, 1)] * v;
        assert!((xd - alpha.rate(3.0) / alpha.value(3.0) * (v - x)).abs() < 1e-15);
    }
}
