//! The `τ₁ = 0` reduction `D^α x = (k − γ) x(t) − k e^{−γτ} x(t − τ)`.
//!
//! With `a = k − γ` fixed and `b(τ) = −k e^{−γτ}` moving with the delay, the
//! single-delay classification applies pointwise in `τ`: inside the SSR the
//! system is stable iff `τ < τ*′(τ)`. The switch pattern follows from where
//! `τ*′(τ) = τ` and where `b(τ)` leaves or enters the SSR (at `τ*″`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Verdict;
use crate::single_delay::{crossing_frequency, hopf_delay};

/// Intersections closer than this to `τ*″` make the pattern ambiguous.
const TIE_TOL: f64 = 1e-9;
const BISECTION_ITERS: usize = 200;
const MAX_SCAN_POINTS: usize = 100_000;

pub fn b_of_tau(k: f64, gamma: f64, tau: f64) -> f64 {
    -k * (-gamma * tau).exp()
}

/// Delay at which `|b(τ)|` crosses `|a| = |k − γ|`.
pub fn tau_star_pp(k: f64, gamma: f64) -> Result<f64> {
    if !(k.is_finite() && gamma.is_finite()) || k == 0.0 {
        return Err(Error::Domain(format!(
            "tau_star_pp needs finite k ≠ 0 (k = {k})"
        )));
    }
    if gamma == 0.0 {
        return Ok(1.0 / k);
    }
    let ratio = (k - gamma).abs() / k;
    if !(ratio > 0.0) {
        return Err(Error::Domain(format!(
            "log argument |k − γ|/k = {ratio} is not positive (k = {k}, gamma = {gamma})"
        )));
    }
    // ln_1p keeps the γ → 0 limit accurate on the 0 < γ < k side.
    let t = if gamma < k {
        -(-gamma / k).ln_1p()
    } else {
        -ratio.ln()
    } / gamma;
    if !(t > 0.0) {
        return Err(Error::Domain(format!(
            "τ*″ = {t} is not positive for k = {k}, gamma = {gamma}"
        )));
    }
    Ok(t)
}

/// `τ*′(τ)`: the Hopf delay of the frozen pair `(k − γ, b(τ))`, or `None` once
/// the closed form leaves its domain.
pub fn hopf_curve(k: f64, gamma: f64, alpha: f64, tau: f64) -> Option<f64> {
    hopf_delay(k - gamma, b_of_tau(k, gamma, tau), alpha).ok()
}

fn gap(k: f64, gamma: f64, alpha: f64, tau: f64) -> Option<f64> {
    hopf_curve(k, gamma, alpha, tau).map(|h| h - tau)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Quadrant {
    /// `0 < γ < k`: SSR on `[0, τ*″)`, unstable after.
    Lower,
    /// `k < γ < 2k`: SSR on `[0, τ*″)`, delay-independent stable after.
    Upper,
    /// `γ < 0 < k`: unstable on `[0, τ*″)`, SSR after.
    Fourth,
}

fn degenerate_check(k: f64, gamma: f64) -> Result<()> {
    let scale = 1e-12 * 1f64.max(k.abs()).max(gamma.abs());
    let lines = [
        (k.abs(), "k = 0"),
        (gamma.abs(), "gamma = 0"),
        ((gamma - k).abs(), "gamma = k"),
        ((gamma - 2.0 * k).abs(), "gamma = 2k"),
    ];
    for (dist, name) in lines {
        if dist <= scale {
            return Err(Error::Degenerate(format!(
                "(k, gamma) = ({k}, {gamma}) lies on the line {name}"
            )));
        }
    }
    Ok(())
}

fn quadrant(k: f64, gamma: f64) -> Option<Quadrant> {
    if k <= 0.0 {
        None
    } else if gamma < 0.0 {
        Some(Quadrant::Fourth)
    } else if gamma < k {
        Some(Quadrant::Lower)
    } else if gamma < 2.0 * k {
        Some(Quadrant::Upper)
    } else {
        None
    }
}

/// Interval of `τ` on which intersections can change the verdict.
fn search_interval(k: f64, gamma: f64, alpha: f64, q: Quadrant) -> Result<(f64, f64)> {
    let tpp = tau_star_pp(k, gamma)?;
    match q {
        Quadrant::Lower | Quadrant::Upper => Ok((0.0, tpp)),
        Quadrant::Fourth => {
            // τ*′(τ) ≤ π/ω(τ) and ω grows with |b(τ)|, so once π/ω(T) < T the
            // gap stays negative on [T, ∞).
            let a = k - gamma;
            let mut end = 2.0 * tpp;
            for _ in 0..200 {
                let w = crossing_frequency(a, b_of_tau(k, gamma, end), alpha)?;
                if std::f64::consts::PI / w < end {
                    return Ok((tpp, end));
                }
                end *= 2.0;
            }
            Err(Error::NoConvergence(format!(
                "no end of the Hopf-curve domain found for k = {k}, gamma = {gamma}"
            )))
        }
    }
}

fn scan_step(tpp: f64, len: f64) -> f64 {
    (1e-4f64).max(tpp / 1e4).max(len / MAX_SCAN_POINTS as f64)
}

fn bisect_gap(k: f64, gamma: f64, alpha: f64, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match gap(k, gamma, alpha, mid) {
            Some(fm) if (fm > 0.0) == (f_lo > 0.0) => lo = mid,
            Some(_) => hi = mid,
            None => break,
        }
    }
    0.5 * (lo + hi)
}

fn roots_on(k: f64, gamma: f64, alpha: f64, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let t = if i == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / n as f64
        };
        let f = gap(k, gamma, alpha, t);
        if let (Some((tp, fp)), Some(fc)) = (prev, f) {
            if fc == 0.0 {
                out.push(t);
            } else if fp != 0.0 && (fp > 0.0) != (fc > 0.0) {
                out.push(bisect_gap(k, gamma, alpha, tp, t, fp));
            }
        }
        prev = f.map(|v| (t, v));
    }
    out
}

/// Roots of `τ*′(τ) − τ` on the stretch of `τ` where they can switch
/// stability, ascending.
///
/// For `0 < γ < 2k` that stretch is `[0, τ*″]`; for `γ < 0 < k` it is
/// `[τ*″, T]` with `T` past which the curve provably stays below the
/// diagonal. Other parameter pairs have no relevant intersections.
pub fn find_intersections(k: f64, gamma: f64, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "alpha = {alpha} must lie in (0, 1]"
        )));
    }
    degenerate_check(k, gamma)?;
    let Some(q) = quadrant(k, gamma) else {
        return Ok(Vec::new());
    };
    let (lo, hi) = search_interval(k, gamma, alpha, q)?;
    let tpp = tau_star_pp(k, gamma)?;
    Ok(roots_on(k, gamma, alpha, lo, hi, scan_step(tpp, hi - lo)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PatternTag {
    StableAll,
    UnstableAll,
    #[serde(rename = "SSR")]
    Ssr,
    #[serde(rename = "SUS")]
    Sus,
    #[serde(rename = "SUSU")]
    Susu,
    #[serde(rename = "USU")]
    Usu,
}

impl PatternTag {
    pub fn name(self) -> &'static str {
        match self {
            PatternTag::StableAll => "StableAll",
            PatternTag::UnstableAll => "UnstableAll",
            PatternTag::Ssr => "SSR",
            PatternTag::Sus => "SUS",
            PatternTag::Susu => "SUSU",
            PatternTag::Usu => "USU",
        }
    }

    fn from_verdicts(v: &[Verdict]) -> Option<Self> {
        use Verdict::{Stable as S, Unstable as U};
        Some(match v {
            [S] => PatternTag::StableAll,
            [U] => PatternTag::UnstableAll,
            [S, U] => PatternTag::Ssr,
            [S, U, S] => PatternTag::Sus,
            [S, U, S, U] => PatternTag::Susu,
            [U, S, U] => PatternTag::Usu,
            _ => return None,
        })
    }
}

impl std::fmt::Display for PatternTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Verdicts over `τ ≥ 0`, alternating across `critical_delays`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchPattern {
    pub tag: PatternTag,
    pub critical_delays: Vec<f64>,
    pub verdicts: Vec<Verdict>,
}

impl SwitchPattern {
    /// One delay inside every constant-verdict segment, paired with the
    /// expected verdict there.
    pub fn segment_samples(&self) -> Vec<(f64, Verdict)> {
        let d = &self.critical_delays;
        if d.is_empty() {
            return vec![(1.0, self.verdicts[0])];
        }
        let mut taus = vec![0.5 * d[0]];
        taus.extend(d.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        taus.push(1.5 * d[d.len() - 1]);
        taus.into_iter()
            .zip(self.verdicts.iter().copied())
            .collect()
    }

    /// Verdict the pattern assigns to delay `tau`.
    pub fn verdict_at(&self, tau: f64) -> Verdict {
        let idx = self.critical_delays.iter().filter(|&&d| d <= tau).count();
        self.verdicts[idx]
    }
}

fn verdict_at(k: f64, gamma: f64, alpha: f64, q: Quadrant, tpp: f64, tau: f64) -> Verdict {
    let ssr = |t: f64| match gap(k, gamma, alpha, t) {
        Some(f) if f > 0.0 => Verdict::Stable,
        _ => Verdict::Unstable,
    };
    match q {
        Quadrant::Lower if tau >= tpp => Verdict::Unstable,
        Quadrant::Upper if tau >= tpp => Verdict::Stable,
        Quadrant::Fourth if tau < tpp => Verdict::Unstable,
        _ => ssr(tau),
    }
}

/// Stability pattern along `τ ≥ 0`, built from `τ*″` and the intersections.
pub fn classify_pattern(k: f64, gamma: f64, alpha: f64) -> Result<SwitchPattern> {
    if !(k.is_finite() && gamma.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "non-finite (k, gamma) = ({k}, {gamma})"
        )));
    }
    let intersections = find_intersections(k, gamma, alpha)?;
    let Some(q) = quadrant(k, gamma) else {
        let verdict = if k < 0.0 && gamma < 0.0 {
            Verdict::Unstable
        } else {
            Verdict::Stable
        };
        return Ok(SwitchPattern {
            tag: if verdict == Verdict::Stable {
                PatternTag::StableAll
            } else {
                PatternTag::UnstableAll
            },
            critical_delays: Vec::new(),
            verdicts: vec![verdict],
        });
    };
    let tpp = tau_star_pp(k, gamma)?;
    if let Some(t) = intersections
        .iter()
        .find(|&&t| (t - tpp).abs() <= TIE_TOL * tpp.max(1.0))
    {
        return Err(Error::Degenerate(format!(
            "intersection {t} coincides with τ*″ = {tpp} (k = {k}, gamma = {gamma})"
        )));
    }
    let mut candidates = intersections;
    candidates.push(tpp);
    candidates.sort_by(f64::total_cmp);

    let mut samples = vec![0.5 * candidates[0]];
    samples.extend(candidates.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    samples.push(candidates[candidates.len() - 1] * 1.5 + 1e-3);
    let raw: Vec<Verdict> = samples
        .iter()
        .map(|&t| verdict_at(k, gamma, alpha, q, tpp, t))
        .collect();

    let mut verdicts = vec![raw[0]];
    let mut critical_delays = Vec::new();
    for (i, &v) in raw.iter().enumerate().skip(1) {
        if v != verdicts[verdicts.len() - 1] {
            verdicts.push(v);
            critical_delays.push(candidates[i - 1]);
        }
    }
    let tag = PatternTag::from_verdicts(&verdicts)
        .ok_or_else(|| Error::UnknownPattern(verdicts.iter().map(|v| v.letter()).collect()))?;
    Ok(SwitchPattern {
        tag,
        critical_delays,
        verdicts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurveId {
    /// Tangency of `τ*′(τ)` to the diagonal.
    #[serde(rename = "h1")]
    H1,
    /// `τ*′(τ*″) = τ*″`.
    #[serde(rename = "h2")]
    H2,
}

impl CurveId {
    pub fn name(self) -> &'static str {
        match self {
            CurveId::H1 => "h1",
            CurveId::H2 => "h2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: f64,
    pub gamma: f64,
    pub tau_tangency: f64,
    pub curve_id: CurveId,
}

/// Traced points plus the samples that failed to converge.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveTrace {
    pub points: Vec<CurvePoint>,
    pub failures: Vec<CurveFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFailure {
    pub k: f64,
    pub gamma_seed: f64,
    pub reason: String,
}

/// Finite-difference step for `dτ*′/dτ`.
pub const CURVE_FD_STEP: f64 = 1e-6;
const GAMMA_SAMPLES: usize = 240;
const TAU_SAMPLES: usize = 1500;

fn check_k_range(alpha: f64, k_range: (f64, f64), samples: usize) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "alpha = {alpha} must lie in (0, 1]"
        )));
    }
    let (lo, hi) = k_range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || samples == 0 {
        return Err(Error::InvalidParams(format!(
            "k range {k_range:?} must be positive and ordered, samples = {samples} ≥ 1"
        )));
    }
    Ok(if samples == 1 {
        vec![lo]
    } else {
        (0..samples)
            .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
            .collect()
    })
}

fn gamma_grid(lo: f64, hi: f64) -> Vec<f64> {
    (0..GAMMA_SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / (GAMMA_SAMPLES - 1) as f64)
        .collect()
}

fn slope(k: f64, gamma: f64, alpha: f64, tau: f64) -> Option<f64> {
    let e = CURVE_FD_STEP;
    let hp = hopf_curve(k, gamma, alpha, tau + e)?;
    let hm = hopf_curve(k, gamma, alpha, tau - e)?;
    Some((hp - hm) / (2.0 * e))
}

/// Smallest interior local minimum of the gap on `[0, τ*″)`, as `(τ, gap)`.
fn interior_min(k: f64, gamma: f64, alpha: f64) -> Option<(f64, f64)> {
    let tpp = tau_star_pp(k, gamma).ok()?;
    let ts: Vec<f64> = (0..TAU_SAMPLES)
        .map(|i| tpp * i as f64 / TAU_SAMPLES as f64)
        .collect();
    let vals: Vec<Option<f64>> = ts.iter().map(|&t| gap(k, gamma, alpha, t)).collect();
    let mut best: Option<(f64, f64)> = None;
    for i in 1..ts.len() - 1 {
        let (Some(l), Some(c), Some(r)) = (vals[i - 1], vals[i], vals[i + 1]) else {
            continue;
        };
        if c <= l && c <= r {
            let m = golden_min(
                |t| gap(k, gamma, alpha, t).unwrap_or(f64::INFINITY),
                ts[i - 1],
                ts[i + 1],
            );
            if best.is_none_or(|b| m.1 < b.1) {
                best = Some(m);
            }
        }
    }
    best
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..120 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

fn bisect_scalar(f: impl Fn(f64) -> Option<f64>, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        match f(mid) {
            Some(v) if (v > 0.0) == (f_lo > 0.0) => lo = mid,
            Some(_) => hi = mid,
            None => break,
        }
    }
    0.5 * (lo + hi)
}

fn h1_residuals(k: f64, gamma: f64, alpha: f64, tau: f64) -> Option<[f64; 2]> {
    Some([
        gap(k, gamma, alpha, tau)?,
        slope(k, gamma, alpha, tau)? - 1.0,
    ])
}

/// Damped 2D Newton on (gap, slope − 1) in the unknowns (γ, τ).
fn polish_h1(k: f64, alpha: f64, mut gamma: f64, mut tau: f64) -> Result<CurvePoint> {
    let fail = |msg: String| Error::NoConvergence(msg);
    let mut r = h1_residuals(k, gamma, alpha, tau).ok_or_else(|| {
        fail(format!(
            "seed (γ, τ) = ({gamma}, {tau}) outside the curve domain"
        ))
    })?;
    for _ in 0..60 {
        if r[0].abs() <= 1e-10 && r[1].abs() <= 1e-7 {
            break;
        }
        let eg = 1e-5 * gamma.abs().max(1.0);
        let et = 1e-4 * tau.max(1e-3);
        let rp = h1_residuals(k, gamma + eg, alpha, tau);
        let rm = h1_residuals(k, gamma - eg, alpha, tau);
        let (Some(rp), Some(rm)) = (rp, rm) else {
            return Err(fail(format!(
                "Jacobian stencil left the domain at γ = {gamma}"
            )));
        };
        let (Some(hp), Some(h0), Some(hm)) = (
            hopf_curve(k, gamma, alpha, tau + et),
            hopf_curve(k, gamma, alpha, tau),
            hopf_curve(k, gamma, alpha, tau - et),
        ) else {
            return Err(fail(format!(
                "Jacobian stencil left the domain at τ = {tau}"
            )));
        };
        let j = [
            [(rp[0] - rm[0]) / (2.0 * eg), r[1]],
            [
                (rp[1] - rm[1]) / (2.0 * eg),
                (hp - 2.0 * h0 + hm) / (et * et),
            ],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(fail(format!(
                "singular Jacobian at (γ, τ) = ({gamma}, {tau})"
            )));
        }
        let dg = (r[0] * j[1][1] - r[1] * j[0][1]) / det;
        let dt = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        let norm = |v: [f64; 2]| v[0].hypot(v[1]);
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let (g2, t2) = (gamma - scale * dg, tau - scale * dt);
            if let Some(r2) = h1_residuals(k, g2, alpha, t2) {
                if norm(r2) < norm(r) {
                    accepted = Some((g2, t2, r2));
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some((g2, t2, r2)) = accepted else {
            break;
        };
        gamma = g2;
        tau = t2;
        r = r2;
    }
    if r[0].abs() <= 1e-8 && r[1].abs() <= 1e-6 {
        Ok(CurvePoint {
            k,
            gamma,
            tau_tangency: tau,
            curve_id: CurveId::H1,
        })
    } else {
        Err(fail(format!(
            "residuals ({:.3e}, {:.3e}) above tolerance at (γ, τ) = ({gamma}, {tau})",
            r[0], r[1]
        )))
    }
}

fn trace_h1_at(k: f64, alpha: f64) -> (Vec<CurvePoint>, Vec<CurveFailure>) {
    let mut points = Vec::new();
    let mut failures = Vec::new();
    let band = 1e-3 * k;
    for (lo, hi) in [(band, k - band), (k + band, 2.0 * k - band)] {
        let grid = gamma_grid(lo, hi);
        let mins: Vec<Option<(f64, f64)>> =
            grid.iter().map(|&g| interior_min(k, g, alpha)).collect();
        for i in 1..grid.len() {
            let (Some(m0), Some(m1)) = (mins[i - 1], mins[i]) else {
                continue;
            };
            if (m0.1 > 0.0) == (m1.1 > 0.0) {
                continue;
            }
            let depth = |g: f64| interior_min(k, g, alpha).map(|m| m.1);
            let g = bisect_scalar(depth, grid[i - 1], grid[i], m0.1);
            let seed_tau = interior_min(k, g, alpha).map_or(0.5 * (m0.0 + m1.0), |m| m.0);
            match polish_h1(k, alpha, g, seed_tau) {
                Ok(p) => points.push(p),
                Err(e) => failures.push(CurveFailure {
                    k,
                    gamma_seed: g,
                    reason: e.to_string(),
                }),
            }
        }
    }
    (points, failures)
}

/// Tangency curve: for each sampled `k`, the `γ` at which two intersections
/// of `τ*′(τ)` with the diagonal merge and vanish.
pub fn trace_h1(alpha: f64, k_range: (f64, f64), samples: usize) -> Result<CurveTrace> {
    let ks = check_k_range(alpha, k_range, samples)?;
    Ok(collect_trace(
        ks.par_iter().map(|&k| trace_h1_at(k, alpha)).collect(),
    ))
}

/// `τ*′(τ*″) − τ*″` as a function of `γ` at fixed `k`.
pub fn h2_residual(k: f64, gamma: f64, alpha: f64) -> Option<f64> {
    let tpp = tau_star_pp(k, gamma).ok()?;
    gap(k, gamma, alpha, tpp)
}

fn polish_h2(k: f64, alpha: f64, lo: f64, hi: f64, f_lo: f64) -> Result<CurvePoint> {
    let h = |g: f64| h2_residual(k, g, alpha);
    let mut g = bisect_scalar(h, lo, hi, f_lo);
    for _ in 0..20 {
        let Some(r) = h(g) else { break };
        if r.abs() <= 1e-12 {
            break;
        }
        let e = 1e-7 * g.abs().max(1e-3);
        let (Some(rp), Some(rm)) = (h(g + e), h(g - e)) else {
            break;
        };
        let d = (rp - rm) / (2.0 * e);
        let next = g - r / d;
        match h(next) {
            Some(rn) if next > lo && next < hi && rn.abs() < r.abs() => g = next,
            _ => break,
        }
    }
    match (h(g), tau_star_pp(k, g)) {
        (Some(r), Ok(tpp)) if r.abs() <= 1e-8 => Ok(CurvePoint {
            k,
            gamma: g,
            tau_tangency: tpp,
            curve_id: CurveId::H2,
        }),
        (r, _) => Err(Error::NoConvergence(format!(
            "h2 residual {r:?} above tolerance at γ = {g}"
        ))),
    }
}

fn trace_h2_at(k: f64, alpha: f64) -> (Vec<CurvePoint>, Vec<CurveFailure>) {
    let mut points = Vec::new();
    let mut failures = Vec::new();
    let band = 1e-3 * k;
    for (lo, hi) in [(-2.0 * k, -band), (band, k - band)] {
        let grid = gamma_grid(lo, hi);
        let vals: Vec<Option<f64>> = grid.iter().map(|&g| h2_residual(k, g, alpha)).collect();
        for i in 1..grid.len() {
            let (Some(v0), Some(v1)) = (vals[i - 1], vals[i]) else {
                continue;
            };
            if (v0 > 0.0) == (v1 > 0.0) {
                continue;
            }
            match polish_h2(k, alpha, grid[i - 1], grid[i], v0) {
                Ok(p) => points.push(p),
                Err(e) => failures.push(CurveFailure {
                    k,
                    gamma_seed: 0.5 * (grid[i - 1] + grid[i]),
                    reason: e.to_string(),
                }),
            }
        }
    }
    (points, failures)
}

/// Curve on which `τ*′(τ*″) = τ*″`, in `0 < γ < k` and in the fourth quadrant.
pub fn trace_h2(alpha: f64, k_range: (f64, f64), samples: usize) -> Result<CurveTrace> {
    let ks = check_k_range(alpha, k_range, samples)?;
    Ok(collect_trace(
        ks.par_iter().map(|&k| trace_h2_at(k, alpha)).collect(),
    ))
}

fn collect_trace(parts: Vec<(Vec<CurvePoint>, Vec<CurveFailure>)>) -> CurveTrace {
    let mut trace = CurveTrace::default();
    for (p, f) in parts {
        trace.points.extend(p);
        trace.failures.extend(f);
    }
    trace
        .points
        .sort_by(|a, b| a.k.total_cmp(&b.k).then(a.gamma.total_cmp(&b.gamma)));
    trace
}
