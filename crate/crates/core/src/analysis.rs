//! Essential-rate checks, step-count bounds, slope limits and rate fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Dynamics, Metric, Model, Rescaling};
use crate::error::{invalid, Error, Result};
use crate::integrate::{run, StepPolicy, StopRule, Trajectory};
use crate::objective::Objective;
use crate::stability::RkMethod;

/// `n` quadratics with `d` eigenvalues drawn uniformly from `[μ, L]`, plus the
/// witness `(L/2)‖x‖²` when `witness` is set. Deterministic in `seed`.
pub fn sample_quadratics(
    n: usize,
    dim: usize,
    mu: f64,
    ell: f64,
    witness: bool,
    seed: u64,
) -> Result<Vec<Objective>> {
    use rand::{Rng, SeedableRng};
    if !(mu < ell) && n > 0 {
        return Err(invalid("mu", "sampling needs mu < L"));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n + 1);
    for _ in 0..n {
        let eigs = (0..dim).map(|_| rng.gen_range(mu..=ell)).collect();
        out.push(Objective::quadratic(eigs, mu, ell)?);
    }
    if witness {
        out.push(Objective::quadratic_witness(dim, mu, ell)?);
    }
    Ok(out)
}

/// Minimum number of records in the tail window.
pub const MIN_TAIL: usize = 10;
/// Minimum number of points in a fit window.
pub const MIN_FIT: usize = 5;

/// Max of `ρ_k` over the final `tail_frac` of the records.
pub fn tail_spectral_radius(traj: &Trajectory, tail_frac: f64) -> Result<f64> {
    if !(tail_frac > 0.0 && tail_frac <= 1.0) {
        return Err(invalid("tail_frac", format!("must be in (0, 1], got {tail_frac}")));
    }
    let n = traj.records.len();
    let take = ((n as f64) * tail_frac).ceil() as usize;
    if take < MIN_TAIL {
        return Err(Error::TooShort {
            need: MIN_TAIL,
            have: take,
        });
    }
    Ok(traj.records[n - take..]
        .iter()
        .map(|r| r.rho)
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssentialOptions {
    pub horizon: f64,
    pub tail_frac: f64,
    pub tol: f64,
    pub policy: StepPolicy,
}

impl Default for EssentialOptions {
    fn default() -> Self {
        Self {
            horizon: 200.0,
            tail_frac: 0.25,
            tol: 1e-2,
            policy: StepPolicy::capped_with(0.9, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub objective: String,
    pub x0: Vec<f64>,
    pub tail_radius: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssentialVerdict {
    pub c_estimate: f64,
    /// Objective attaining `c_estimate`.
    pub lb_witness: String,
    pub ub_ok: bool,
    pub lb_ok: bool,
    pub tol: f64,
    pub pairs: Vec<PairResult>,
}

impl EssentialVerdict {
    /// Failed runs, as `(pair index, message)`.
    pub fn failures(&self) -> Vec<(usize, &str)> {
        self.pairs
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.error.as_deref().map(|e| (i, e)))
            .collect()
    }

    pub fn is_one_essential(&self) -> bool {
        self.ub_ok && self.lb_ok && self.failures().is_empty()
    }
}

/// Runs `template`'s model and rescaling on every `(f, x₀)` in `family × x0s`
/// up to the horizon and takes the largest tail spectral radius.
pub fn essential_check(
    template: &Dynamics,
    family: &[Objective],
    x0s: &[Vec<f64>],
    m: &RkMethod,
    opts: &EssentialOptions,
) -> Result<EssentialVerdict> {
    if family.is_empty() || x0s.is_empty() {
        return Err(invalid("family", "need at least one objective and one start"));
    }
    let pairs: Vec<(&Objective, &Vec<f64>)> = family
        .iter()
        .flat_map(|f| x0s.iter().map(move |x| (f, x)))
        .collect();
    let stop = StopRule::time(opts.horizon);
    let results: Vec<PairResult> = pairs
        .par_iter()
        .map(|(f, x0)| {
            let radius = Dynamics::new(
                template.model().clone(),
                (*f).clone(),
                template.rescaling().clone(),
            )
            .and_then(|g| {
                let y0 = g.initial_state(x0)?;
                let traj = run(m, &g, &y0, g.t_start(), &opts.policy, &stop, &[])?;
                tail_spectral_radius(&traj, opts.tail_frac)
            });
            PairResult {
                objective: f.descriptor(),
                x0: (*x0).clone(),
                tail_radius: radius.as_ref().ok().copied(),
                error: radius.err().map(|e| e.to_string()),
            }
        })
        .collect();
    let mut c = f64::NEG_INFINITY;
    let mut witness = String::new();
    for p in &results {
        if let Some(r) = p.tail_radius {
            if r > c {
                c = r;
                witness = p.objective.clone();
            }
        }
    }
    Ok(EssentialVerdict {
        c_estimate: c,
        lb_witness: witness,
        ub_ok: c <= 1.0 + opts.tol,
        lb_ok: c >= 1.0 - opts.tol,
        tol: opts.tol,
        pairs: results,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheck {
    /// Fraction of `k ≥ k_min` with `α(t_k) ≤ (r + ε) k`.
    pub fraction_satisfied: f64,
    pub worst_ratio: f64,
    pub min_ratio: f64,
    pub final_ratio: f64,
    pub bound: f64,
    pub count: usize,
}

/// Compares `α(t_k)` with `(r + ε) k` over `k ≥ max(k_min, 1)`.
pub fn theorem_bound_check(
    traj: &Trajectory,
    alpha: &Rescaling,
    r: f64,
    eps: f64,
    k_min: usize,
) -> TheoremCheck {
    let bound = r + eps;
    let ratios: Vec<f64> = traj
        .records
        .iter()
        .filter(|rec| rec.k >= k_min.max(1))
        .map(|rec| alpha.value(rec.t) / rec.k as f64)
        .collect();
    let ok = ratios.iter().filter(|q| **q <= bound).count();
    TheoremCheck {
        fraction_satisfied: if ratios.is_empty() {
            1.0
        } else {
            ok as f64 / ratios.len() as f64
        },
        worst_ratio: ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        min_ratio: ratios.iter().cloned().fold(f64::INFINITY, f64::min),
        final_ratio: ratios.last().copied().unwrap_or(f64::NAN),
        bound,
        count: ratios.len(),
    }
}

/// Two rescalings `from`, `to` of one base dynamics; the connecting map is
/// `γ = from⁻¹ ∘ to`, so that `base∘to = (base∘from)∘γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescalingPair {
    pub from: Rescaling,
    pub to: Rescaling,
}

impl RescalingPair {
    pub fn new(from: Rescaling, to: Rescaling) -> Self {
        Self { from, to }
    }

    pub fn connecting(&self, t: f64) -> f64 {
        self.from.inverse(self.to.value(t))
    }

    /// `γ̇(t) = α̇_to(t) / α̇_from(γ(t))`.
    pub fn connecting_rate(&self, t: f64) -> f64 {
        self.to.rate(t) / self.from.rate(self.connecting(t))
    }
}

/// Estimates `lim γ̇` from `γ̇` at half the horizon and at the horizon.
/// Growth beyond 1% reports `+∞`; decay beyond 1% reports 0.
pub fn rescaling_slope_limit(pair: &RescalingPair, horizon: f64) -> f64 {
    let mid = pair.connecting_rate(0.5 * horizon);
    let end = pair.connecting_rate(horizon);
    if end > 1.01 * mid {
        f64::INFINITY
    } else if end < mid / 1.01 {
        0.0
    } else {
        end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// `Φ ≈ C t^{−p}`
    Power,
    /// `Φ ≈ C e^{−q t}`
    Exponential,
    /// `Φ ≈ C σ^k`, exponent `−ln σ`
    LinearInK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub kind: FitKind,
    pub exponent: f64,
    pub coefficient: f64,
    pub r_squared: f64,
    /// Half-open index range of the series considered.
    pub window: (usize, usize),
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub window_frac: f64,
    /// Values at or below this are excluded as floating-point floor.
    pub floor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            window_frac: 0.5,
            floor: 1e2 * f64::EPSILON,
        }
    }
}

impl FitOptions {
    pub fn window(window_frac: f64) -> Self {
        Self {
            window_frac,
            ..Self::default()
        }
    }
}

/// Least squares of `log Φ` against `log t`, `t` or `k` over the last
/// `window_frac` of `series`.
pub fn fit_rate(series: &[(f64, f64)], kind: FitKind, opts: &FitOptions) -> Result<RateFit> {
    if !(opts.window_frac > 0.0 && opts.window_frac <= 1.0) {
        return Err(invalid("window", format!("must be in (0, 1], got {}", opts.window_frac)));
    }
    let n = series.len();
    let start = n - ((n as f64) * opts.window_frac).ceil() as usize;
    let pts: Vec<(f64, f64)> = series[start..]
        .iter()
        .filter(|(x, v)| *v > opts.floor && v.is_finite() && x.is_finite())
        .filter(|(x, _)| kind != FitKind::Power || *x > 0.0)
        .map(|(x, v)| {
            let u = if kind == FitKind::Power { x.ln() } else { *x };
            (u, v.ln())
        })
        .collect();
    if pts.len() < MIN_FIT {
        return Err(Error::WindowTooShort {
            need: MIN_FIT,
            have: pts.len(),
        });
    }
    let np = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / np;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / np;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("series", "abscissae in the fit window are all equal"));
    }
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - icept - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        kind,
        exponent: -slope,
        coefficient: icept.exp(),
        r_squared: r2,
        window: (start, n),
        points: pts.len(),
    })
}

/// Essential rate predicted for a 1-essential configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub kind: FitKind,
    pub exponent: f64,
}

/// Predicted essential rate of `metric` for `model` on `S_{μ,L}`; `None`
/// where no rate is known.
pub fn predicted_rate(model: &Model, metric: Metric, mu: f64, ell: f64) -> Option<Prediction> {
    let exp = |q: f64| Prediction {
        kind: FitKind::Exponential,
        exponent: q,
    };
    let pow = |p: f64| Prediction {
        kind: FitKind::Power,
        exponent: p,
    };
    match (model, metric) {
        (Model::GradientFlow, Metric::Gap) if mu > 0.0 => Some(exp(2.0 * mu / ell)),
        (Model::GradientFlow, Metric::Gap) => Some(pow(1.0)),
        (Model::AgmConvex, Metric::Gap) => Some(pow(2.0)),
        (Model::AgmShifted { .. }, Metric::MinShiftedGradSq) => Some(pow(3.0)),
        (Model::AgmStrong, Metric::Gap) => Some(exp((mu / ell).sqrt())),
        (Model::Tmm, Metric::TmmDist) => {
            let a = 1.0 / (2.0 * mu.sqrt()).max((2.0 * ell).sqrt());
            Some(exp(2.0 * mu.sqrt() * a))
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub model: String,
    pub metric: Metric,
    pub fitted: RateFit,
    pub predicted: Option<Prediction>,
    /// `(fitted − predicted) / predicted` when the kinds agree.
    pub rel_deviation: Option<f64>,
}

/// One row per `(model, metric, fit)` with the predicted essential rate.
pub fn essential_rate_table(
    results: &[(Model, Metric, RateFit)],
    mu: f64,
    ell: f64,
) -> Vec<RateRow> {
    results
        .iter()
        .map(|(model, metric, fit)| {
            let predicted = predicted_rate(model, *metric, mu, ell);
            let rel_deviation = predicted
                .filter(|p| p.kind == fit.kind)
                .map(|p| (fit.exponent - p.exponent) / p.exponent);
            RateRow {
                model: model.name().into(),
                metric: *metric,
                fitted: fit.clone(),
                predicted,
                rel_deviation,
            }
        })
        .collect()
}

/// Coefficient `C(b)` of the `C‖x₀ − x*‖²/t³` rate of the shifted-gradient model.
pub fn shifted_coefficient(b: f64, ell: f64) -> f64 {
    if b <= 2.0 / ell.sqrt() {
        18.0 * ell * ell.sqrt() / (7.0 * b)
    } else {
        let bl = b * ell;
        9.0 * (bl + (bl * bl - 4.0 * ell).sqrt()).powi(3) / (28.0 * b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSweep {
    pub points: Vec<(f64, f64)>,
    pub grid_argmin: f64,
    pub grid_min: f64,
    /// Golden-section refinement between the grid neighbours of the minimizer.
    pub refined_argmin: f64,
    pub refined_min: f64,
}

pub fn shifted_b_sweep(ell: f64, grid: &[f64]) -> Result<BSweep> {
    if grid.is_empty() || grid.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(invalid("b_grid", "need positive grid points"));
    }
    let points: Vec<(f64, f64)> = grid.iter().map(|b| (*b, shifted_coefficient(*b, ell))).collect();
    let (i, &(gb, gm)) = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap();
    let lo = if i > 0 { points[i - 1].0 } else { gb };
    let hi = if i + 1 < points.len() { points[i + 1].0 } else { gb };
    let rb = golden_min(|b| shifted_coefficient(b, ell), lo.min(hi), lo.max(hi));
    let (rb, rm) = [(gb, gm), (rb, shifted_coefficient(rb, ell))]
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    Ok(BSweep {
        points,
        grid_argmin: gb,
        grid_min: gm,
        refined_argmin: rb,
        refined_min: rm,
    })
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 * (1.0 + a.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    // The bracket may straddle a kink; keep the better endpoint.
    [a, 0.5 * (a + b), b]
        .into_iter()
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap()
}
