//! Explicit integration with step sizes capped by the stability domain.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Dynamics, Metric, Model};
use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::stability::RkMethod;

/// Hard cap on the number of steps of any run.
pub const STEP_LIMIT: usize = 10_000_000;
/// Backtracking reductions allowed per Armijo step.
pub const ARMIJO_LIMIT: usize = 200;

fn default_safety() -> f64 {
    0.9
}
fn default_h_floor() -> f64 {
    1e-12
}
fn default_h_cap() -> f64 {
    1e3
}
fn default_shrink() -> f64 {
    0.5
}
fn default_grow() -> f64 {
    2.0
}
fn default_slope_c() -> f64 {
    0.5
}
fn default_h_init() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepPolicy {
    Fixed {
        h: f64,
    },
    /// `h = clamp(safety · min_λ r(arg λ)/|λ|, h_floor, h_cap)` from the
    /// Jacobian at the left endpoint.
    StabilityCapped {
        #[serde(default = "default_safety")]
        safety: f64,
        #[serde(default = "default_h_floor")]
        h_floor: f64,
        #[serde(default = "default_h_cap")]
        h_cap: f64,
    },
    /// Gradient steps, each trying `grow · h_prev` first and backtracking by `shrink`.
    Armijo {
        #[serde(default = "default_shrink")]
        shrink: f64,
        #[serde(default = "default_grow")]
        grow: f64,
        #[serde(default = "default_slope_c")]
        slope_c: f64,
        #[serde(default = "default_h_init")]
        h_init: f64,
    },
}

impl StepPolicy {
    pub fn capped(safety: f64) -> Self {
        StepPolicy::StabilityCapped {
            safety,
            h_floor: default_h_floor(),
            h_cap: default_h_cap(),
        }
    }

    pub fn capped_with(safety: f64, h_cap: f64) -> Self {
        StepPolicy::StabilityCapped {
            safety,
            h_floor: default_h_floor(),
            h_cap,
        }
    }

    pub fn armijo(grow: f64, h_init: f64) -> Self {
        StepPolicy::Armijo {
            shrink: default_shrink(),
            grow,
            slope_c: default_slope_c(),
            h_init,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive, got {v}")))
            }
        };
        match *self {
            StepPolicy::Fixed { h } => pos("policy.h", h),
            StepPolicy::StabilityCapped {
                safety,
                h_floor,
                h_cap,
            } => {
                if !(safety > 0.0 && safety <= 1.0) {
                    return Err(invalid("policy.safety", format!("must be in (0, 1], got {safety}")));
                }
                pos("policy.h_floor", h_floor)?;
                pos("policy.h_cap", h_cap)?;
                if h_floor > h_cap {
                    return Err(invalid("policy.h_floor", "must not exceed h_cap"));
                }
                Ok(())
            }
            StepPolicy::Armijo {
                shrink,
                grow,
                slope_c,
                h_init,
            } => {
                if !(shrink > 0.0 && shrink < 1.0) {
                    return Err(invalid("policy.shrink", format!("must be in (0, 1), got {shrink}")));
                }
                if !(grow > 1.0 && grow.is_finite()) {
                    return Err(invalid("policy.grow", format!("must exceed 1, got {grow}")));
                }
                if !(slope_c > 0.0 && slope_c < 1.0) {
                    return Err(invalid("policy.slope_c", format!("must be in (0, 1), got {slope_c}")));
                }
                pos("policy.h_init", h_init)
            }
        }
    }
}

/// Any combination of limits; the run stops at the first one met.
/// `phi_target` applies to the first requested metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopRule {
    pub max_steps: Option<usize>,
    pub t_max: Option<f64>,
    pub phi_target: Option<f64>,
}

impl StopRule {
    pub fn steps(n: usize) -> Self {
        Self {
            max_steps: Some(n),
            ..Self::default()
        }
    }

    pub fn time(t: f64) -> Self {
        Self {
            t_max: Some(t),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub k: usize,
    pub t: f64,
    /// Step that produced this record; 0 for the initial record.
    pub h: f64,
    pub y: Vec<f64>,
    /// Spectral radius of the Jacobian at `(y, t)`.
    pub rho: f64,
    pub phi: BTreeMap<Metric, f64>,
    /// The Jacobian at `(y, t)` came from finite differences.
    #[serde(default)]
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub dynamics: String,
    pub method: String,
    pub policy: StepPolicy,
    pub objective: String,
    pub t_start: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub meta: TrajectoryMeta,
    pub records: Vec<Record>,
}

impl Trajectory {
    pub fn last(&self) -> &Record {
        self.records.last().expect("trajectories hold the initial record")
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `(t_k, Φ_k)` for records where the metric was recorded.
    pub fn series_t(&self, m: Metric) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.phi.get(&m).map(|v| (r.t, *v)))
            .collect()
    }

    /// `(k, Φ_k)` for records where the metric was recorded.
    pub fn series_k(&self, m: Metric) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.phi.get(&m).map(|v| (r.k as f64, *v)))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.records.first().map_or(0, |r| r.y.len());
        let mut header = String::from("k,t,h,rho,phi_gap,phi_dist,phi_minsgrad,phi_tmmdist");
        for i in 0..n {
            header.push_str(&format!(",y{i}"));
        }
        writeln!(w, "{header}")?;
        for r in &self.records {
            let mut line = format!("{},{:?},{:?},{:?}", r.k, r.t, r.h, r.rho);
            for m in Metric::ALL {
                line.push(',');
                if let Some(v) = r.phi.get(&m) {
                    line.push_str(&format!("{v:?}"));
                }
            }
            for v in &r.y {
                line.push_str(&format!(",{v:?}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Caches directional radii per ray; `S` is symmetric so `|θ|` is the key.
#[derive(Debug, Default)]
pub struct RadiusCache {
    map: HashMap<u64, f64>,
}

impl RadiusCache {
    pub fn get(&mut self, m: &RkMethod, theta: f64) -> f64 {
        let key = theta.abs().to_bits();
        *self
            .map
            .entry(key)
            .or_insert_with(|| m.directional_radius(theta.abs()))
    }
}

/// One explicit RK step of `ẏ = field(y, t)`.
pub fn rk_step_with<F>(m: &RkMethod, field: F, y: &[f64], t: f64, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64], f64) -> Result<Vec<f64>>,
{
    let s = m.stages();
    let n = y.len();
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut stage = vec![0.0; n];
    for i in 0..s {
        stage.copy_from_slice(y);
        for (j, kj) in ks.iter().enumerate() {
            let a = m.a()[i][j];
            if a != 0.0 {
                for (st, kv) in stage.iter_mut().zip(kj) {
                    *st += h * a * kv;
                }
            }
        }
        let k = field(&stage, t + m.c()[i] * h)?;
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step: 0 });
        }
        ks.push(k);
    }
    let mut out = y.to_vec();
    for (b, k) in m.b().iter().zip(&ks) {
        for (o, kv) in out.iter_mut().zip(k) {
            *o += h * b * kv;
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged { step: 0 });
    }
    Ok(out)
}

pub fn rk_step(m: &RkMethod, g: &Dynamics, y: &[f64], t: f64, h: f64) -> Result<Vec<f64>> {
    rk_step_with(m, |y, t| g.vector_field(y, t), y, t, h)
}

/// The capped stable step for the spectrum `eigs` of the Jacobian at the left endpoint.
pub fn stable_step_for(
    m: &RkMethod,
    eigs: &[Complex64],
    policy: &StepPolicy,
    t: f64,
    cache: &mut RadiusCache,
) -> Result<f64> {
    let StepPolicy::StabilityCapped {
        safety,
        h_floor,
        h_cap,
    } = *policy
    else {
        return Err(invalid("policy", "max_stable_step needs a stability_capped policy"));
    };
    let mut h_max = f64::INFINITY;
    for z in eigs {
        let r = z.norm();
        if r > 0.0 {
            h_max = h_max.min(cache.get(m, z.arg()) / r);
        }
    }
    let h = (safety * h_max).clamp(h_floor, h_cap);
    if h == h_floor && safety * h_max < h_floor {
        let ok = eigs.iter().all(|z| m.in_domain(z * h_floor));
        if !ok {
            return Err(Error::StabilityImpossible { t, h_floor });
        }
    }
    Ok(h)
}

/// Largest admissible step at `(y, t)` under a stability-capped policy.
pub fn max_stable_step(
    m: &RkMethod,
    g: &Dynamics,
    y: &[f64],
    t: f64,
    policy: &StepPolicy,
) -> Result<f64> {
    let (eigs, _) = g.spectrum_with_fallback(y, t)?;
    stable_step_for(m, &eigs, policy, t, &mut RadiusCache::default())
}

fn check_initial_state(g: &Dynamics, y0: &[f64]) -> Result<()> {
    if y0.len() != g.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: g.state_dim(),
            got: y0.len(),
        });
    }
    if matches!(g.model(), Model::FirstOrder(_)) || !g.model().is_momentum() {
        return Ok(());
    }
    let d = g.dim();
    if y0[..d] != y0[d..] {
        return Err(invalid("y0", "momentum models start from v(0) = x(0)"));
    }
    Ok(())
}

fn check_metrics(g: &Dynamics, metrics: &[Metric]) -> Result<()> {
    for m in metrics {
        if !m.applies_to(g) {
            return Err(Error::MetricUnavailable {
                metric: m.name().into(),
                model: g.model().name().into(),
            });
        }
    }
    Ok(())
}

struct Recorder<'a> {
    g: &'a Dynamics,
    metrics: &'a [Metric],
    running_min: f64,
}

impl Recorder<'_> {
    /// Builds the record for `(y, t)` and returns the spectrum used for `ρ`.
    fn record(&mut self, k: usize, t: f64, h: f64, y: Vec<f64>) -> Result<(Record, Vec<Complex64>)> {
        let (eigs, flagged) = self.g.spectrum_with_fallback(&y, t)?;
        let mut phi = BTreeMap::new();
        for &m in self.metrics {
            let v = self.g.metric(m, &y, t, self.running_min)?;
            if m == Metric::MinShiftedGradSq {
                self.running_min = v;
            }
            phi.insert(m, v);
        }
        let rho = linalg::spectral_radius(&eigs);
        Ok((
            Record {
                k,
                t,
                h,
                y,
                rho,
                phi,
                flagged,
            },
            eigs,
        ))
    }
}

fn should_stop(stop: &StopRule, metrics: &[Metric], r: &Record) -> bool {
    if stop.max_steps.is_some_and(|n| r.k >= n) {
        return true;
    }
    if stop.t_max.is_some_and(|t| r.t >= t) {
        return true;
    }
    if let (Some(target), Some(m)) = (stop.phi_target, metrics.first()) {
        if r.phi.get(m).is_some_and(|v| *v <= target) {
            return true;
        }
    }
    false
}

fn meta(m: &str, g: &Dynamics, policy: &StepPolicy, t_start: f64) -> TrajectoryMeta {
    TrajectoryMeta {
        dynamics: g.descriptor(),
        method: m.to_string(),
        policy: policy.clone(),
        objective: g.objective().descriptor(),
        t_start,
    }
}

/// Integrates `g` from `(y0, t_start)` until `stop` is met.
pub fn run(
    m: &RkMethod,
    g: &Dynamics,
    y0: &[f64],
    t_start: f64,
    policy: &StepPolicy,
    stop: &StopRule,
    metrics: &[Metric],
) -> Result<Trajectory> {
    if matches!(policy, StepPolicy::Armijo { .. }) {
        return run_armijo(g, y0, t_start, policy, stop, metrics);
    }
    policy.validate()?;
    check_initial_state(g, y0)?;
    check_metrics(g, metrics)?;
    let mut rec = Recorder {
        g,
        metrics,
        running_min: f64::INFINITY,
    };
    let mut cache = RadiusCache::default();
    let (first, mut eigs) = rec.record(0, t_start, 0.0, y0.to_vec())?;
    let mut records = vec![first];
    loop {
        let last = records.last().unwrap();
        if should_stop(stop, metrics, last) {
            break;
        }
        let k = last.k + 1;
        if k > STEP_LIMIT {
            return Err(Error::StepOverflow { limit: STEP_LIMIT });
        }
        let (t, y) = (last.t, &last.y);
        let h = match *policy {
            StepPolicy::Fixed { h } => h,
            _ => stable_step_for(m, &eigs, policy, t, &mut cache)?,
        };
        let y_new = rk_step(m, g, y, t, h).map_err(|e| match e {
            Error::Diverged { .. } => Error::Diverged { step: k },
            e => e,
        })?;
        let (r, e) = rec.record(k, t + h, h, y_new)?;
        eigs = e;
        records.push(r);
    }
    Ok(Trajectory {
        meta: meta(m.name(), g, policy, t_start),
        records,
    })
}

/// Gradient steps with Armijo backtracking, starting each step from `grow · h_prev`.
pub fn run_armijo(
    g: &Dynamics,
    y0: &[f64],
    t_start: f64,
    policy: &StepPolicy,
    stop: &StopRule,
    metrics: &[Metric],
) -> Result<Trajectory> {
    policy.validate()?;
    let StepPolicy::Armijo {
        shrink,
        grow,
        slope_c,
        h_init,
    } = *policy
    else {
        return Err(invalid("policy", "run_armijo needs an armijo policy"));
    };
    if !matches!(g.model(), Model::GradientFlow) {
        return Err(invalid("model", "armijo steps need the gradient flow"));
    }
    check_initial_state(g, y0)?;
    check_metrics(g, metrics)?;
    let f = g.objective();
    let mut rec = Recorder {
        g,
        metrics,
        running_min: f64::INFINITY,
    };
    let (first, _) = rec.record(0, t_start, 0.0, y0.to_vec())?;
    let mut records = vec![first];
    let mut h_prev = h_init / grow;
    loop {
        let last = records.last().unwrap();
        if should_stop(stop, metrics, last) {
            break;
        }
        let k = last.k + 1;
        if k > STEP_LIMIT {
            return Err(Error::StepOverflow { limit: STEP_LIMIT });
        }
        let (t, y) = (last.t, &last.y);
        let d = g.vector_field(y, t)?;
        let grad = f.grad(y)?;
        let slope: f64 = grad.iter().zip(&d).map(|(a, b)| a * b).sum();
        let fy = f.eval(y)?;
        let mut h = grow * h_prev;
        let mut reductions = 0;
        let y_new = loop {
            if !h.is_finite() {
                return Err(Error::Diverged { step: k });
            }
            let trial: Vec<f64> = y.iter().zip(&d).map(|(a, b)| a + h * b).collect();
            let ft = f.eval(&trial)?;
            if ft.is_finite() && ft <= fy + slope_c * h * slope {
                break trial;
            }
            reductions += 1;
            if reductions > ARMIJO_LIMIT {
                return Err(Error::NoDescent {
                    step: k,
                    limit: ARMIJO_LIMIT,
                });
            }
            h *= shrink;
        };
        h_prev = h;
        let (r, _) = rec.record(k, t + h, h, y_new)?;
        records.push(r);
    }
    Ok(Trajectory {
        meta: meta("armijo", g, policy, t_start),
        records,
    })
}
