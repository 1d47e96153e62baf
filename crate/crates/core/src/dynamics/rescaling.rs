use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A time-rescaling `α`: differentiable, increasing, `α(0) = 0`, `α(t) → ∞`.
///
/// A dynamics `g` rescaled by `α` has the vector field `α̇(t) g(y, α(t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rescaling {
    Identity,
    /// `α(t) = r t`
    Linear { r: f64 },
    /// `α(t) = scale · t^p`
    Power { p: f64, scale: f64 },
    /// `α(t) = (3/2)(e^{2t/3} − 1)`
    Exp23,
    /// `α(t) = ratio · (t − log(t + 1))`
    LogSlip { ratio: f64 },
    /// `outer ∘ inner`
    Compose {
        outer: Box<Rescaling>,
        inner: Box<Rescaling>,
    },
}

impl Default for Rescaling {
    fn default() -> Self {
        Rescaling::Identity
    }
}

impl Rescaling {
    pub fn linear(r: f64) -> Self {
        Rescaling::Linear { r }
    }

    pub fn power(p: f64, scale: f64) -> Self {
        Rescaling::Power { p, scale }
    }

    pub fn log_slip(ratio: f64) -> Self {
        Rescaling::LogSlip { ratio }
    }

    /// `self ∘ inner`. Composing with the identity on either side is a no-op.
    pub fn compose(&self, inner: &Rescaling) -> Rescaling {
        match (self, inner) {
            (Rescaling::Identity, _) => inner.clone(),
            (_, Rescaling::Identity) => self.clone(),
            _ => Rescaling::Compose {
                outer: Box::new(self.clone()),
                inner: Box::new(inner.clone()),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive and finite, got {v}")))
            }
        };
        match self {
            Rescaling::Identity | Rescaling::Exp23 => Ok(()),
            Rescaling::Linear { r } => pos("rescaling.r", *r),
            Rescaling::Power { p, scale } => {
                pos("rescaling.p", *p)?;
                pos("rescaling.scale", *scale)
            }
            Rescaling::LogSlip { ratio } => pos("rescaling.ratio", *ratio),
            Rescaling::Compose { outer, inner } => {
                outer.validate()?;
                inner.validate()
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Rescaling::Identity)
    }

    /// `α(t)`
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Rescaling::Identity => t,
            Rescaling::Linear { r } => r * t,
            Rescaling::Power { p, scale } => scale * t.powf(*p),
            Rescaling::Exp23 => 1.5 * (2.0 * t / 3.0).exp_m1(),
            Rescaling::LogSlip { ratio } => ratio * (t - t.ln_1p()),
            Rescaling::Compose { outer, inner } => outer.value(inner.value(t)),
        }
    }

    /// `α̇(t)`
    pub fn rate(&self, t: f64) -> f64 {
        match self {
            Rescaling::Identity => 1.0,
            Rescaling::Linear { r } => *r,
            Rescaling::Power { p, scale } => {
                if *p == 1.0 {
                    *scale
                } else {
                    scale * p * t.powf(p - 1.0)
                }
            }
            Rescaling::Exp23 => (2.0 * t / 3.0).exp(),
            Rescaling::LogSlip { ratio } => ratio * t / (t + 1.0),
            Rescaling::Compose { outer, inner } => outer.rate(inner.value(t)) * inner.rate(t),
        }
    }

    /// `α̈(t)`
    pub fn accel(&self, t: f64) -> f64 {
        match self {
            Rescaling::Identity | Rescaling::Linear { .. } => 0.0,
            Rescaling::Power { p, scale } => {
                if *p == 1.0 {
                    0.0
                } else {
                    scale * p * (p - 1.0) * t.powf(p - 2.0)
                }
            }
            Rescaling::Exp23 => (2.0 / 3.0) * (2.0 * t / 3.0).exp(),
            Rescaling::LogSlip { ratio } => ratio / (t + 1.0).powi(2),
            Rescaling::Compose { outer, inner } => {
                let s = inner.value(t);
                let ds = inner.rate(t);
                outer.accel(s) * ds * ds + outer.rate(s) * inner.accel(t)
            }
        }
    }

    /// `α⁻¹(s)` for `s ≥ 0`.
    pub fn inverse(&self, s: f64) -> f64 {
        match self {
            Rescaling::Identity => s,
            Rescaling::Linear { r } => s / r,
            Rescaling::Power { p, scale } => (s / scale).powf(1.0 / p),
            Rescaling::Exp23 => 1.5 * (2.0 * s / 3.0).ln_1p(),
            Rescaling::LogSlip { .. } => self.invert_numerically(s),
            Rescaling::Compose { outer, inner } => inner.inverse(outer.inverse(s)),
        }
    }

    fn invert_numerically(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.value(hi) < s {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.value(mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Short descriptor for reports.
    pub fn describe(&self) -> String {
        match self {
            Rescaling::Identity => "t".into(),
            Rescaling::Linear { r } => format!("{r}*t"),
            Rescaling::Power { p, scale } => format!("{scale}*t^{p}"),
            Rescaling::Exp23 => "1.5*(exp(2t/3)-1)".into(),
            Rescaling::LogSlip { ratio } => format!("{ratio}*(t-log(t+1))"),
            Rescaling::Compose { outer, inner } => {
                format!("({})∘({})", outer.describe(), inner.describe())
            }
        }
    }
}
