//! Objective-function families with exact gradients, Hessian spectra and optima.
//!
//! Quadratics are stored by their Hessian spectrum, `f(x) = ½ Σ λ_i x_i²`.
//! The quartic is separable, `f(x) = Σ x_i⁴ / 4`. The power hinge is the
//! one-dimensional `|x|^c` family glued to a linear tail at `|x| = 1`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::linalg;

pub type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A user-supplied objective. Hessians are taken by central differences.
#[derive(Clone)]
pub struct CustomObjective {
    pub name: String,
    pub value: ValueFn,
    pub grad: GradFn,
    pub optimum: Option<(Vec<f64>, f64)>,
}

impl fmt::Debug for CustomObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomObjective")
            .field("name", &self.name)
            .field("optimum", &self.optimum)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum ObjectiveKind {
    /// Hessian eigenvalues, sorted descending.
    Quadratic { eigs: Vec<f64> },
    Quartic,
    PowerHinge { c: f64 },
    Custom(CustomObjective),
}

#[derive(Debug, Clone)]
pub struct Objective {
    kind: ObjectiveKind,
    dim: usize,
    mu: f64,
    ell: f64,
    radius: f64,
}

impl Objective {
    /// Diagonal quadratic with the given Hessian spectrum; `mu <= min λ` and `max λ <= ell`.
    pub fn quadratic(mut eigs: Vec<f64>, mu: f64, ell: f64) -> Result<Self> {
        if eigs.is_empty() {
            return Err(invalid("quadratic_eigs", "at least one eigenvalue required"));
        }
        if eigs.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(invalid("quadratic_eigs", "eigenvalues must be finite and nonnegative"));
        }
        check_moduli(mu, ell)?;
        eigs.sort_by(|a, b| b.total_cmp(a));
        let (lmax, lmin) = (eigs[0], eigs[eigs.len() - 1]);
        if lmin < mu || lmax > ell {
            return Err(invalid(
                "quadratic_eigs",
                format!("spectrum [{lmin}, {lmax}] not inside [mu, L] = [{mu}, {ell}]"),
            ));
        }
        Ok(Self {
            dim: eigs.len(),
            kind: ObjectiveKind::Quadratic { eigs },
            mu,
            ell,
            radius: 1.0,
        })
    }

    /// The worst-case witness `(L/2)‖x‖²` in `S_{mu,L}`.
    pub fn quadratic_witness(dim: usize, mu: f64, ell: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        Self::quadratic(vec![ell; dim], mu, ell)
    }

    /// `f(x) = Σ x_i⁴ / 4`. It is convex but not strongly convex; `ell = 3` bounds
    /// the Hessian on the unit ball.
    pub fn quartic(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        Ok(Self {
            kind: ObjectiveKind::Quartic,
            dim,
            mu: 0.0,
            ell: 3.0,
            radius: 1.0,
        })
    }

    /// One-dimensional power hinge with exponent `c > 3` and smoothness `ell`.
    pub fn power_hinge(c: f64, ell: f64) -> Result<Self> {
        if !(c.is_finite() && c > 3.0) {
            return Err(invalid("power_c", format!("must be > 3, got {c}")));
        }
        check_moduli(0.0, ell)?;
        Ok(Self {
            kind: ObjectiveKind::PowerHinge { c },
            dim: 1,
            mu: 0.0,
            ell,
            radius: 1.0,
        })
    }

    pub fn custom(dim: usize, mu: f64, ell: f64, custom: CustomObjective) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        check_moduli(mu, ell)?;
        if let Some((x, _)) = &custom.optimum {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: x.len(),
                });
            }
        }
        Ok(Self {
            kind: ObjectiveKind::Custom(custom),
            dim,
            mu,
            ell,
            radius: 1.0,
        })
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid("radius_R", "must be positive"));
        }
        self.radius = radius;
        Ok(self)
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_custom(&self) -> bool {
        matches!(self.kind, ObjectiveKind::Custom(_))
    }

    /// Short human-readable descriptor, e.g. `quadratic[10,1]`.
    pub fn descriptor(&self) -> String {
        match &self.kind {
            ObjectiveKind::Quadratic { eigs } => {
                let e: Vec<String> = eigs.iter().map(|l| format!("{l}")).collect();
                format!("quadratic[{}]", e.join(","))
            }
            ObjectiveKind::Quartic => format!("quartic(d={})", self.dim),
            ObjectiveKind::PowerHinge { c } => format!("power_hinge(c={c},L={})", self.ell),
            ObjectiveKind::Custom(c) => format!("custom({})", c.name),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match &self.kind {
            ObjectiveKind::Quadratic { eigs } => {
                0.5 * eigs.iter().zip(x).map(|(l, xi)| l * xi * xi).sum::<f64>()
            }
            ObjectiveKind::Quartic => x.iter().map(|xi| xi.powi(4)).sum::<f64>() / 4.0,
            ObjectiveKind::PowerHinge { c } => {
                let k = hinge_scale(*c, self.ell);
                let a = x[0].abs();
                if a <= 1.0 {
                    k * a.powf(*c)
                } else {
                    k * (c * (a - 1.0) + 1.0)
                }
            }
            ObjectiveKind::Custom(c) => (c.value)(x),
        })
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(match &self.kind {
            ObjectiveKind::Quadratic { eigs } => {
                eigs.iter().zip(x).map(|(l, xi)| l * xi).collect()
            }
            ObjectiveKind::Quartic => x.iter().map(|xi| xi.powi(3)).collect(),
            ObjectiveKind::PowerHinge { c } => {
                let k = hinge_scale(*c, self.ell);
                let a = x[0].abs();
                let slope = if a <= 1.0 { k * c * a.powf(c - 1.0) } else { k * c };
                vec![if x[0] == 0.0 { 0.0 } else { slope * x[0].signum() }]
            }
            ObjectiveKind::Custom(c) => {
                let g = (c.grad)(x);
                if g.len() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        got: g.len(),
                    });
                }
                g
            }
        })
    }

    /// Hessian matrix: analytic (diagonal) for the built-in families, central
    /// differences of the gradient for custom objectives.
    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        match &self.kind {
            ObjectiveKind::Custom(_) => self.hessian_fd(x),
            _ => {
                let diag = self.hessian_diag(x)?;
                Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
            }
        }
    }

    /// Central-difference Hessian of the gradient, symmetrized. Usable at
    /// nonsmooth points, where it returns a finite-width average.
    pub fn hessian_fd(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        let n = self.dim;
        let inf_norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let h = 1e-6f64.max(1e-6 * inf_norm);
        let mut m = DMatrix::zeros(n, n);
        let mut xp = x.to_vec();
        for j in 0..n {
            xp[j] = x[j] + h;
            let gp = self.grad(&xp)?;
            xp[j] = x[j] - h;
            let gm = self.grad(&xp)?;
            xp[j] = x[j];
            for i in 0..n {
                m[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        Ok((&m + m.transpose()) * 0.5)
    }

    fn hessian_diag(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.kind {
            ObjectiveKind::Quadratic { eigs } => Ok(eigs.clone()),
            ObjectiveKind::Quartic => Ok(x.iter().map(|xi| 3.0 * xi * xi).collect()),
            ObjectiveKind::PowerHinge { c } => {
                let a = x[0].abs();
                if a == 1.0 {
                    return Err(Error::NonSmooth { at: x.to_vec() });
                }
                let k = hinge_scale(*c, self.ell);
                Ok(vec![if a < 1.0 {
                    k * c * (c - 1.0) * a.powf(c - 2.0)
                } else {
                    0.0
                }])
            }
            ObjectiveKind::Custom(_) => unreachable!("custom objectives have no analytic Hessian"),
        }
    }

    /// Eigenvalues of the Hessian at `x`, descending.
    pub fn hessian_eigs(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        match &self.kind {
            ObjectiveKind::Custom(_) => linalg::symmetric_eigenvalues(&self.hessian_fd(x)?),
            _ => {
                let mut d = self.hessian_diag(x)?;
                d.sort_by(|a, b| b.total_cmp(a));
                Ok(d)
            }
        }
    }

    /// `(x*, f*)`.
    pub fn optimum(&self) -> Result<(Vec<f64>, f64)> {
        match &self.kind {
            ObjectiveKind::Custom(c) => c
                .optimum
                .clone()
                .ok_or_else(|| Error::NoOptimum(c.name.clone())),
            _ => Ok((vec![0.0; self.dim], 0.0)),
        }
    }
}

/// `L (c-3) / (c (c-2)²)`, the power-hinge prefactor.
pub fn hinge_scale(c: f64, ell: f64) -> f64 {
    ell * (c - 3.0) / (c * (c - 2.0).powi(2))
}

fn check_moduli(mu: f64, ell: f64) -> Result<()> {
    if !(ell.is_finite() && ell > 0.0) {
        return Err(invalid("ell", format!("L must be positive, got {ell}")));
    }
    if !(mu.is_finite() && mu >= 0.0 && mu <= ell) {
        return Err(invalid("mu", format!("need 0 <= mu <= L, got mu = {mu}, L = {ell}")));
    }
    Ok(())
}
