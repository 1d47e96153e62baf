use serde::{Deserialize, Serialize};

use super::{Dynamics, Model};
use crate::error::{Error, Result};
use crate::linalg;

/// Convergence metrics `Φ(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `f(x) − f*`
    Gap,
    /// `‖x − x*‖`
    Dist,
    /// Running minimum of `‖∇f(x + (b/α̇)ẋ)‖²`; shifted-gradient model only.
    #[serde(alias = "minsgrad")]
    MinShiftedGradSq,
    /// `‖x + ẋ/(2α̇√μ) − x*‖²`; triple-momentum model only.
    #[serde(alias = "tmmdist")]
    TmmDist,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Gap,
        Metric::Dist,
        Metric::MinShiftedGradSq,
        Metric::TmmDist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Gap => "gap",
            Metric::Dist => "dist",
            Metric::MinShiftedGradSq => "minsgrad",
            Metric::TmmDist => "tmmdist",
        }
    }

    /// Whether the metric is defined for `g`.
    pub fn applies_to(self, g: &Dynamics) -> bool {
        match self {
            Metric::Gap | Metric::Dist => true,
            Metric::MinShiftedGradSq => matches!(g.model(), Model::AgmShifted { .. }),
            Metric::TmmDist => matches!(g.model(), Model::Tmm),
        }
    }
}

impl Dynamics {
    /// `Φ(y, t)`. For [`Metric::MinShiftedGradSq`] the result is
    /// `min(running_min, current)`; start the running value at `+∞`.
    pub fn metric(&self, kind: Metric, y: &[f64], t: f64, running_min: f64) -> Result<f64> {
        if !kind.applies_to(self) {
            return Err(Error::MetricUnavailable {
                metric: kind.name().into(),
                model: self.model().name().into(),
            });
        }
        let f = self.objective();
        let (xs, fs) = f.optimum()?;
        let x = self.position(y, t);
        match kind {
            Metric::Gap => Ok((f.eval(&x)? - fs).max(0.0)),
            Metric::Dist => {
                let d: Vec<f64> = x.iter().zip(&xs).map(|(a, b)| a - b).collect();
                Ok(linalg::norm(&d))
            }
            Metric::MinShiftedGradSq => {
                let Model::AgmShifted { b } = *self.model() else {
                    unreachable!()
                };
                let xd = self.vector_field(y, t)?;
                let a = self.rescaling().rate(t);
                let p: Vec<f64> = x.iter().zip(&xd).map(|(xi, di)| xi + b / a * di).collect();
                let g = f.grad(&p)?;
                let cur = g.iter().map(|v| v * v).sum::<f64>();
                Ok(running_min.min(cur))
            }
            Metric::TmmDist => {
                let xd = self.vector_field(y, t)?;
                let k = 1.0 / (2.0 * self.rescaling().rate(t) * f.mu().sqrt());
                Ok(x.iter()
                    .zip(&xd)
                    .zip(&xs)
                    .map(|((xi, di), si)| (xi + k * di - si).powi(2))
                    .sum())
            }
        }
    }
}
