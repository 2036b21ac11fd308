//! Fractional Adams predictor–corrector for
//! `D^α x = −γ x(t) + g(x(t−τ₁)) − e^{−γτ₂} g(x(t−τ₁−τ₂))`
//! with constant history, plus the decay test that turns a trajectory into a
//! stability verdict.
//!
//! The Caputo problem is integrated in its Volterra form
//! `x(t) = φ + Γ(α)⁻¹ ∫₀ᵗ (t−s)^{α−1} f(s) ds` with product-rectangle
//! (predictor) and product-trapezoid (corrector) weights over the full history.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::char_eq::rhp_root_bound;
use crate::error::{Error, Result};
use crate::params::{SystemParams, Verdict};

pub const BLOWUP_LIMIT: f64 = 1e12;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.2;
pub const DEFAULT_HISTORY: f64 = 0.1;
pub const DEFAULT_STEP: f64 = 1e-2;
/// Growth exponent below which a window-to-window change counts as flat.
pub const DECAY_EXPONENT_TOL: f64 = 5e-3;
/// `max|x|` ratio between the last and an early window that signals growth.
pub const GROWTH_RATIO: f64 = 5.0;
const MAX_POLICY_STEPS: usize = 50_000;
const MAX_EXTENDED_STEPS: usize = 100_000;
const MAX_DOUBLINGS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NonlinearityKind {
    Linear,
    Tanh,
}

/// `g` with `g(0) = 0` and `g'(0) = k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub k: f64,
}

impl Nonlinearity {
    pub fn linear(k: f64) -> Self {
        Self {
            kind: NonlinearityKind::Linear,
            k,
        }
    }

    pub fn tanh(k: f64) -> Self {
        Self {
            kind: NonlinearityKind::Tanh,
            k,
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Linear => self.k * x,
            NonlinearityKind::Tanh => self.k * x.tanh(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub step: f64,
    pub horizon: f64,
    /// Constant initial function `φ` on `[−τ₁−τ₂, 0]`.
    pub history_value: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "step = {} must be positive",
                self.step
            )));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.step) {
            return Err(Error::InvalidParams(format!(
                "horizon = {} must be finite and at least the step {}",
                self.horizon, self.step
            )));
        }
        if !self.history_value.is_finite() {
            return Err(Error::InvalidParams("history value must be finite".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }
}

/// Window statistics behind a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictMetrics {
    /// Local power-law exponent of `max|x|` between the last two windows.
    pub exponent: f64,
    /// Same for the increments `x_{n+1} − x_n`.
    pub increment_exponent: f64,
    /// `max|x|` over the last window divided by `max|x|` over an early one.
    pub growth: f64,
    pub increment_growth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub verdict: Verdict,
    /// `|x|` passed the blow-up limit; the trajectory stops there.
    pub blowup: bool,
    pub metrics: Option<VerdictMetrics>,
}

/// Resumable integrator: extending the horizon continues the same
/// computation, so a longer run repeats a shorter one bit for bit.
#[derive(Debug, Clone)]
pub struct Integrator {
    p: SystemParams,
    g: Nonlinearity,
    h: f64,
    phi: f64,
    decay: f64,
    pred_coef: f64,
    corr_coef: f64,
    /// Rectangle weights `(m+1)^α − m^α`.
    b: Vec<f64>,
    /// Trapezoid weights `(m+2)^{α+1} + m^{α+1} − 2(m+1)^{α+1}`.
    a: Vec<f64>,
    x: Vec<f64>,
    f: Vec<f64>,
    blowup: bool,
}

impl Integrator {
    pub fn new(p: &SystemParams, g: Nonlinearity, step: f64, history_value: f64) -> Result<Self> {
        p.validate()?;
        SimConfig {
            step,
            horizon: step,
            history_value,
        }
        .validate()?;
        if g.k != p.k {
            return Err(Error::InvalidParams(format!(
                "nonlinearity slope {} differs from k = {}",
                g.k, p.k
            )));
        }
        for delay in [p.tau1, p.tau1 + p.tau2] {
            if delay > 0.0 && delay < step * (1.0 - 1e-12) {
                return Err(Error::StepTooLarge { step, delay });
            }
        }
        let alpha = p.alpha;
        let ha = step.powf(alpha);
        let mut it = Self {
            p: *p,
            g,
            h: step,
            phi: history_value,
            decay: p.decay_factor(),
            pred_coef: ha / gamma(alpha + 1.0),
            corr_coef: ha / gamma(alpha + 2.0),
            b: Vec::new(),
            a: Vec::new(),
            x: vec![history_value],
            f: Vec::new(),
            blowup: false,
        };
        let f0 = it.rhs(0, history_value);
        it.f.push(f0);
        Ok(it)
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn blowup(&self) -> bool {
        self.blowup
    }

    /// `x(t_n − delay)`, with `current` standing in for `x(t_n)`.
    fn delayed(&self, n: usize, delay: f64, current: f64) -> f64 {
        if delay == 0.0 {
            return current;
        }
        let idx = n as f64 - delay / self.h;
        if idx <= 0.0 {
            return if idx > -1e-9 { self.x[0] } else { self.phi };
        }
        let nearest = idx.round();
        if (idx - nearest).abs() <= 1e-9 * idx.max(1.0) {
            let j = nearest as usize;
            return if j == n { current } else { self.x[j] };
        }
        let j = idx.floor() as usize;
        let fr = idx - j as f64;
        let upper = if j + 1 == n { current } else { self.x[j + 1] };
        self.x[j] * (1.0 - fr) + upper * fr
    }

    fn rhs(&self, n: usize, current: f64) -> f64 {
        let d1 = self.delayed(n, self.p.tau1, current);
        let d2 = self.delayed(n, self.p.tau1 + self.p.tau2, current);
        -self.p.gamma * current + self.g.apply(d1) - self.decay * self.g.apply(d2)
    }

    fn grow_weights(&mut self, upto: usize) {
        let alpha = self.p.alpha;
        while self.b.len() <= upto {
            let m = self.b.len() as f64;
            self.b.push((m + 1.0).powf(alpha) - m.powf(alpha));
            self.a.push(
                (m + 2.0).powf(alpha + 1.0) + m.powf(alpha + 1.0)
                    - 2.0 * (m + 1.0).powf(alpha + 1.0),
            );
        }
    }

    /// Advances until `total_steps` steps have been taken or `|x|` blows up.
    pub fn run_to(&mut self, total_steps: usize) {
        let alpha = self.p.alpha;
        self.grow_weights(total_steps);
        while !self.blowup && self.x.len() <= total_steps {
            let n = self.x.len() - 1;
            // Both sums run j = 0..=n in one pass; a fixed order keeps
            // extended runs identical to shorter ones.
            let mut pred = 0.0;
            let mut corr = 0.0;
            let fs = &self.f[..=n];
            let bs = &self.b[..=n];
            let as_ = &self.a[..=n];
            for j in 0..=n {
                let fj = fs[j];
                pred += bs[n - j] * fj;
                if j >= 1 {
                    corr += as_[n - j] * fj;
                }
            }
            let nf = n as f64;
            let a0 = nf.powf(alpha + 1.0) - (nf - alpha) * (nf + 1.0).powf(alpha);
            corr += a0 * fs[0];
            let xp = self.phi + self.pred_coef * pred;
            let fp = self.rhs(n + 1, xp);
            let xn = self.phi + self.corr_coef * (fp + corr);
            if !xn.is_finite() || xn.abs() > BLOWUP_LIMIT {
                self.blowup = true;
                break;
            }
            self.x.push(xn);
            let fx = self.rhs(n + 1, xn);
            self.f.push(fx);
        }
    }

    pub fn trajectory(&self, tail_fraction: f64) -> Trajectory {
        let verdict_info = if self.blowup {
            (Verdict::Unstable, None)
        } else {
            verdict_with_metrics(&self.x, tail_fraction)
        };
        Trajectory {
            times: (0..self.x.len()).map(|i| i as f64 * self.h).collect(),
            values: self.x.clone(),
            verdict: verdict_info.0,
            blowup: self.blowup,
            metrics: verdict_info.1,
        }
    }
}

pub fn simulate(p: &SystemParams, g: Nonlinearity, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let mut it = Integrator::new(p, g, cfg.step, cfg.history_value)?;
    it.run_to(cfg.steps());
    Ok(it.trajectory(DEFAULT_TAIL_FRACTION))
}

fn window_max(v: &[f64], lo: f64, hi: f64) -> f64 {
    let n = v.len();
    let (a, b) = ((lo * n as f64) as usize, ((hi * n as f64) as usize).min(n));
    v[a..b.max(a + 1).min(n)]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()))
}

fn window_stats(v: &[f64], f: f64) -> (f64, f64) {
    let early = window_max(v, 0.05, 0.25);
    let mid = window_max(v, 1.0 - 2.0 * f, 1.0 - f);
    let tail = window_max(v, 1.0 - f, 1.0);
    let exponent = (tail / mid).ln() / ((1.0 - f) / (1.0 - 2.0 * f)).ln();
    (exponent, tail / early)
}

/// Stability verdict from the shape of `|x|` late in the run.
///
/// Fractional systems decay algebraically, like `t^{−α}`, so the test compares
/// power-law exponents rather than fixed ratios: `max|x|` over the last
/// `tail_fraction` of the run against the window before it gives a local
/// exponent `p = ln(tail/mid) / ln((1−f)/(1−2f))`, computed for `x` and for its
/// increments. Any positive exponent, or growth by more than
/// [`GROWTH_RATIO`] against the window `[0.05T, 0.25T]`, means unstable; both
/// exponents negative means stable; anything else is inconclusive and calls
/// for a longer horizon.
pub fn verdict(values: &[f64], tail_fraction: f64) -> Verdict {
    verdict_with_metrics(values, tail_fraction).0
}

pub fn verdict_with_metrics(
    values: &[f64],
    tail_fraction: f64,
) -> (Verdict, Option<VerdictMetrics>) {
    let f = tail_fraction;
    if !(f > 0.0 && f < 0.4) || (values.len() as f64) < 10.0 / f {
        return (Verdict::Inconclusive, None);
    }
    if values
        .iter()
        .any(|x| !x.is_finite() || x.abs() > BLOWUP_LIMIT)
    {
        return (Verdict::Unstable, None);
    }
    if values.iter().all(|&x| x == 0.0) {
        return (Verdict::Stable, None);
    }
    let increments: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let (px, gx) = window_stats(values, f);
    let (pd, gd) = window_stats(&increments, f);
    let metrics = VerdictMetrics {
        exponent: px,
        increment_exponent: pd,
        growth: gx,
        increment_growth: gd,
    };
    let eps = DECAY_EXPONENT_TOL;
    // 0/0 windows give NaN exponents; an increment sequence that is exactly
    // zero late in the run is settled, not growing.
    let pd_eff = if pd.is_nan() { -f64::INFINITY } else { pd };
    let verdict = if px > eps || pd_eff > eps || gx > GROWTH_RATIO || gd > GROWTH_RATIO {
        Verdict::Unstable
    } else if px < -eps && pd_eff < -eps {
        Verdict::Stable
    } else {
        Verdict::Inconclusive
    };
    (verdict, Some(metrics))
}

/// Step and horizon picked for a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimPolicy {
    pub step: f64,
    pub horizon: f64,
    pub max_doublings: usize,
}

/// Step `min(0.01, 0.2/Ω, smallest nonzero delay)` with `Ω` the bound on
/// unstable root moduli; horizon `max(50, 20(τ₁+τ₂))`, shortened so the run
/// stays under [`MAX_POLICY_STEPS`] steps.
pub fn default_policy(p: &SystemParams) -> SimPolicy {
    let omega = rhp_root_bound(p);
    let mut step = DEFAULT_STEP;
    if omega > 0.0 {
        step = step.min(0.2 / omega);
    }
    for d in [p.tau1, p.tau1 + p.tau2] {
        if d > 0.0 {
            step = step.min(d);
        }
    }
    let horizon = (50.0f64)
        .max(20.0 * p.total_delay())
        .min(step * MAX_POLICY_STEPS as f64);
    SimPolicy {
        step,
        horizon,
        max_doublings: MAX_DOUBLINGS,
    }
}

/// Simulates under `policy`, doubling the horizon while the verdict is
/// inconclusive (at most `max_doublings` times, within the step budget).
pub fn simulate_with_policy(
    p: &SystemParams,
    g: Nonlinearity,
    history_value: f64,
    policy: &SimPolicy,
) -> Result<Trajectory> {
    let cfg = SimConfig {
        step: policy.step,
        horizon: policy.horizon,
        history_value,
    };
    cfg.validate()?;
    let mut it = Integrator::new(p, g, cfg.step, history_value)?;
    let mut n = cfg.steps();
    it.run_to(n);
    let mut traj = it.trajectory(DEFAULT_TAIL_FRACTION);
    for _ in 0..policy.max_doublings {
        if traj.verdict != Verdict::Inconclusive || 2 * n > MAX_EXTENDED_STEPS.max(cfg.steps()) {
            break;
        }
        n *= 2;
        it.run_to(n);
        traj = it.trajectory(DEFAULT_TAIL_FRACTION);
    }
    Ok(traj)
}

/// [`simulate_with_policy`] with [`default_policy`].
pub fn simulate_auto(p: &SystemParams, g: Nonlinearity, history_value: f64) -> Result<Trajectory> {
    simulate_with_policy(p, g, history_value, &default_policy(p))
}

/// Empirical order from errors at `t = horizon` against a reference run at
/// the finest step divided by 16.
///
/// `steps` must hold at least three sizes, each half the previous one. The
/// order is the least-squares slope of `log error` against `log step`.
pub fn convergence_order(
    p: &SystemParams,
    g: Nonlinearity,
    steps: &[f64],
    horizon: f64,
    history_value: f64,
) -> Result<f64> {
    if steps.len() < 3 {
        return Err(Error::InvalidParams(
            "need at least three step sizes".into(),
        ));
    }
    for w in steps.windows(2) {
        if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!("steps must halve: {steps:?}")));
        }
    }
    let end_value = |h: f64| -> Result<f64> {
        let cfg = SimConfig {
            step: h,
            horizon,
            history_value,
        };
        let t = simulate(p, g, &cfg)?;
        if t.blowup {
            return Err(Error::NoConvergence(format!("blow-up at step {h}")));
        }
        Ok(*t.values.last().expect("non-empty trajectory"))
    };
    let finest = steps[steps.len() - 1];
    let reference = end_value(finest / 16.0)?;
    let errors = steps
        .iter()
        .map(|&h| end_value(h).map(|x| (x - reference).abs()))
        .collect::<Result<Vec<f64>>>()?;
    if errors.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::NonMonotoneConvergence(errors));
    }
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
