//! The two-delay system with `τ₁ > 0`.
//!
//! The `λ = 0` test `Δ(0) < 0` certifies instability for every `τ₁`. The
//! remaining boundary of the stable set in the `(τ₁, τ₂)` plane is where a
//! root sits at `λ = iv`; splitting `Δ(iv) = 0` into real and imaginary parts
//! gives two equations in `(τ₁, τ₂)` for each frequency `v`, traced here by
//! continuation in `v`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::char_eq::{char_value, frac_pow, root_stability, AXIS_BAND};
use crate::error::{Error, Result};
use crate::params::{SystemParams, Verdict};

pub const BOUNDARY_TOL: f64 = 1e-10;
/// Residual every emitted point is re-checked against.
pub const BOUNDARY_ACCEPT: f64 = 1e-8;
pub const BOUNDARY_MAX_ITER: usize = 100;
pub const DEFAULT_V_MAX: f64 = 2.0 * PI;
pub const DEFAULT_V_SAMPLES: usize = 2000;
pub const DEFAULT_MAX_BRANCH: u32 = 3;
pub const DEFAULT_TAU2_MAX: f64 = 10.0;
const DEDUP_RADIUS: f64 = 1e-6;

pub fn delta_zero(k: f64, gamma: f64, tau2: f64) -> f64 {
    gamma - k + k * (-gamma * tau2).exp()
}

/// `−(1/γ) log((k − γ)/k)`, the `τ₂` at which `Δ(0)` changes sign.
pub fn instability_threshold(k: f64, gamma: f64) -> Result<f64> {
    let in_case = (0.0 < gamma && gamma < k) || (gamma < 0.0 && 0.0 < k);
    if !in_case {
        return Err(Error::Domain(format!(
            "instability threshold needs 0 < γ < k or γ < 0 < k (k = {k}, gamma = {gamma})"
        )));
    }
    Ok(-(-gamma / k).ln_1p() / gamma)
}

/// `Δ(0) < 0`: a positive real root exists for every `τ₁` and `α`. A `false`
/// result certifies nothing.
pub fn is_unstable_all_tau1(k: f64, gamma: f64, tau2: f64) -> bool {
    delta_zero(k, gamma, tau2) < 0.0
}

/// Signed `τ₂` at which `λ = 0` is a root, with the limit `1/k` at `γ = 0`.
pub fn zero_root_branch_raw(k: f64, gamma: f64) -> Result<f64> {
    if k == 0.0 || !k.is_finite() || !gamma.is_finite() {
        return Err(Error::Domain(format!(
            "zero-root branch needs finite k ≠ 0 (k = {k})"
        )));
    }
    if gamma == 0.0 {
        return Ok(1.0 / k);
    }
    let ratio = (k - gamma) / k;
    if ratio <= 0.0 {
        return Err(Error::Domain(format!(
            "(k − γ)/k = {ratio} ≤ 0: no λ = 0 crossing in τ₂ (k = {k}, gamma = {gamma})"
        )));
    }
    Ok(-(-gamma / k).ln_1p() / gamma)
}

/// The `λ = 0` crossing when it lies at a positive `τ₂`.
pub fn zero_root_branch(k: f64, gamma: f64) -> Result<Option<f64>> {
    let t = zero_root_branch_raw(k, gamma)?;
    Ok((t > 0.0).then_some(t))
}

/// `(Re Δ(iv), Im Δ(iv))` written out term by term.
pub fn imaginary_axis_residuals(
    v: f64,
    alpha: f64,
    k: f64,
    gamma: f64,
    tau1: f64,
    tau2: f64,
) -> (f64, f64) {
    let (s, c) = (alpha * FRAC_PI_2).sin_cos();
    let va = v.powf(alpha);
    let e = (-gamma * tau2).exp();
    let theta = tau1 + tau2;
    (
        va * c + gamma - k * (v * tau1).cos() + k * e * (v * theta).cos(),
        va * s + k * (v * tau1).sin() - k * e * (v * theta).sin(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub v: f64,
    pub tau1: f64,
    pub tau2: f64,
    /// Number of `2π/v` shifts between this `τ₁` and the smallest non-negative one.
    pub branch: u32,
    /// Connected polyline this point belongs to.
    pub curve: usize,
    /// Position along that polyline.
    pub arc: usize,
}

#[cfg(test)]
fn residual_norm(v: f64, alpha: f64, k: f64, gamma: f64, tau1: f64, tau2: f64) -> f64 {
    let (r1, r2) = imaginary_axis_residuals(v, alpha, k, gamma, tau1, tau2);
    r1.hypot(r2)
}

/// Damped Newton on the residual pair in `(τ₁, τ₂)`, without wrapping.
fn newton_pair(v: f64, alpha: f64, k: f64, gamma: f64, seed: (f64, f64)) -> Option<(f64, f64)> {
    let (mut t1, mut t2) = seed;
    if !(v > 0.0 && t1.is_finite() && t2.is_finite()) {
        return None;
    }
    let mut r = imaginary_axis_residuals(v, alpha, k, gamma, t1, t2);
    for _ in 0..BOUNDARY_MAX_ITER {
        let norm = r.0.hypot(r.1);
        if norm <= BOUNDARY_TOL {
            return Some((t1, t2));
        }
        let e = (-gamma * t2).exp();
        let th = v * (t1 + t2);
        let (s1, c1) = (v * t1).sin_cos();
        let (st, ct) = th.sin_cos();
        let j11 = k * v * s1 - k * e * v * st;
        let j12 = -k * gamma * e * ct - k * e * v * st;
        let j21 = k * v * c1 - k * e * v * ct;
        let j22 = k * gamma * e * st - k * e * v * ct;
        let det = j11 * j22 - j12 * j21;
        if !det.is_finite() || det.abs() < 1e-300 {
            return None;
        }
        let d1 = (r.0 * j22 - r.1 * j12) / det;
        let d2 = (j11 * r.1 - j21 * r.0) / det;
        let mut scale = 1.0;
        let mut next = None;
        for _ in 0..=20 {
            let (a, b) = (t1 - scale * d1, t2 - scale * d2);
            let rn = imaginary_axis_residuals(v, alpha, k, gamma, a, b);
            if rn.0.hypot(rn.1) < norm {
                next = Some((a, b, rn));
                break;
            }
            scale *= 0.5;
        }
        let (a, b, rn) = next.unwrap_or_else(|| {
            let (a, b) = (t1 - d1, t2 - d2);
            (a, b, imaginary_axis_residuals(v, alpha, k, gamma, a, b))
        });
        if !(a.is_finite() && b.is_finite()) || a.abs() > 1e9 || b.abs() > 1e9 {
            return None;
        }
        t1 = a;
        t2 = b;
        r = rn;
    }
    (r.0.hypot(r.1) <= BOUNDARY_TOL).then_some((t1, t2))
}

/// Solves the crossing equations at frequency `v` from `seed = (τ₁, τ₂)`.
///
/// A negative converged `τ₁` is shifted by whole periods `2π/v`, each shift
/// counted in `branch`. Returns `None` on non-convergence or negative `τ₂`.
pub fn solve_boundary_point(
    v: f64,
    alpha: f64,
    k: f64,
    gamma: f64,
    seed: (f64, f64),
) -> Option<BoundaryPoint> {
    let Some((mut t1, t2)) = newton_pair(v, alpha, k, gamma, seed) else {
        log::debug!("boundary solve did not converge at v = {v} from {seed:?}");
        return None;
    };
    if t2 < 0.0 {
        return None;
    }
    let period = 2.0 * PI / v;
    let mut branch = 0;
    while t1 < 0.0 {
        t1 += period;
        branch += 1;
    }
    let p = SystemParams {
        alpha,
        k,
        gamma,
        tau1: t1,
        tau2: t2,
    };
    (char_value(Complex64::new(0.0, v), &p).norm() <= BOUNDARY_ACCEPT).then_some(BoundaryPoint {
        v,
        tau1: t1,
        tau2: t2,
        branch,
        curve: 0,
        arc: 0,
    })
}

/// `|k(1 − E e^{−ivτ₂})|² − |(iv)^α + γ|²`, zero exactly when some `τ₁`
/// completes a crossing at `(v, τ₂)`.
pub fn magnitude_gap(v: f64, alpha: f64, k: f64, gamma: f64, tau2: f64) -> f64 {
    let e = (-gamma * tau2).exp();
    let c = (alpha * FRAC_PI_2).cos();
    let va = v.powf(alpha);
    k * k * (1.0 - 2.0 * e * (v * tau2).cos() + e * e)
        - (va * va + 2.0 * gamma * va * c + gamma * gamma)
}

/// The `τ₁ ∈ [0, 2π/v)` that completes a crossing at `(v, τ₂)`.
pub fn phase_tau1(v: f64, alpha: f64, k: f64, gamma: f64, tau2: f64) -> f64 {
    let e = (-gamma * tau2).exp();
    let num = frac_pow(Complex64::new(0.0, v), alpha) + gamma;
    let den = k * (1.0 - e * Complex64::from_polar(1.0, -v * tau2));
    let period = 2.0 * PI / v;
    (-(num / den).arg() / v).rem_euclid(period)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if (fm > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All crossings at frequency `v` with `τ₂ ∈ [0, tau2_max]`, as
/// `(τ₁ ∈ [0, 2π/v), τ₂)`.
fn crossings_at(v: f64, alpha: f64, k: f64, gamma: f64, tau2_max: f64) -> Vec<(f64, f64)> {
    let n = ((tau2_max * v / (2.0 * PI)) * 60.0).ceil().max(400.0) as usize;
    let m = |t: f64| magnitude_gap(v, alpha, k, gamma, t);
    let mut out = Vec::new();
    let mut prev = (0.0, m(0.0));
    for i in 1..=n {
        let t = tau2_max * i as f64 / n as f64;
        let f = m(t);
        if (prev.1 > 0.0) != (f > 0.0) || f == 0.0 {
            let root = if f == 0.0 { t } else { bisect(m, prev.0, t) };
            out.push((phase_tau1(v, alpha, k, gamma, root), root));
        }
        prev = (t, f);
    }
    out
}

/// Uniform grid of `samples` frequencies strictly inside `(0, v_max)`.
pub fn default_v_grid(v_max: f64, samples: usize) -> Vec<f64> {
    (1..=samples)
        .map(|i| v_max * i as f64 / (samples + 1) as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceGap {
    pub v: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrace {
    pub points: Vec<BoundaryPoint>,
    pub diagnostics: Vec<TraceGap>,
}

/// Crossings continued over consecutive grid frequencies, as
/// `(v, ψ, τ₂)` with the phase `ψ = vτ₁` unwrapped; `first` and `last` are
/// grid indices. Tracking `ψ` rather than `τ₁` keeps continuation from
/// sliding between the `2π/v` copies when `τ₁` is large.
struct Track {
    pts: Vec<(f64, f64, f64)>,
    first: usize,
    last: usize,
}

impl Track {
    fn predict(&self, v: f64) -> (f64, f64) {
        let n = self.pts.len();
        let (v1, a1, b1) = self.pts[n - 1];
        if n < 2 {
            return (a1, b1);
        }
        let (v0, a0, b0) = self.pts[n - 2];
        let s = (v - v1) / (v1 - v0);
        (a1 + s * (a1 - a0), b1 + s * (b1 - b0))
    }
}

/// Distance between two `τ₁` values modulo the period, as a fraction of it.
fn phase_gap(d: f64, period: f64) -> f64 {
    let r = (d / period).rem_euclid(1.0);
    r.min(1.0 - r)
}

fn close_in_tau2(d: f64, tau2: f64, scale: f64) -> bool {
    d.abs() <= scale * (1.0 + tau2.abs())
}

fn continue_tracks(
    alpha: f64,
    k: f64,
    gamma: f64,
    grid: &[f64],
    tau2_max: f64,
    diagnostics: &mut Vec<TraceGap>,
) -> Vec<Track> {
    let mut tracks: Vec<Track> = Vec::new();
    let mut alive: Vec<usize> = Vec::new();
    for (gi, &v) in grid.iter().enumerate() {
        let fresh = crossings_at(v, alpha, k, gamma, tau2_max);
        let mut claimed = vec![false; fresh.len()];
        let mut still_alive = Vec::new();
        for &id in &alive {
            let (psi_p, p2) = tracks[id].predict(v);
            let nearest = fresh
                .iter()
                .enumerate()
                .filter(|&(i, &(f1, f2))| {
                    !claimed[i]
                        && close_in_tau2(f2 - p2, p2, 0.25)
                        && phase_gap(v * f1 - psi_p, TAU) <= 0.15
                })
                .map(|(i, &(f1, f2))| {
                    (
                        i,
                        (f2 - p2).abs() / (1.0 + p2.abs()) + phase_gap(v * f1 - psi_p, TAU),
                    )
                })
                .min_by(|a, b| a.1.total_cmp(&b.1));
            let Some((idx, _)) = nearest else {
                continue;
            };
            let (f1, f2) = fresh[idx];
            // The copy of the fresh root nearest the prediction.
            let psi_f = v * f1 + ((psi_p - v * f1) / TAU).round() * TAU;
            let matches = |t1: f64, t2: f64| {
                (t2 - f2).abs() <= 1e-6 * (1.0 + f2) && (v * t1 - psi_f).abs() <= 1e-6
            };
            let solved = newton_pair(v, alpha, k, gamma, (psi_p / v, p2))
                .filter(|&(t1, t2)| matches(t1, t2))
                .or_else(|| newton_pair(v, alpha, k, gamma, (psi_f / v, f2)));
            match solved {
                Some((t1, t2)) => {
                    tracks[id].pts.push((v, v * t1, t2));
                    tracks[id].last = gi;
                    claimed[idx] = true;
                    still_alive.push(id);
                }
                None => diagnostics.push(TraceGap {
                    v,
                    reason: format!(
                        "continuation lost near (τ₁, τ₂) = ({:.6}, {p2:.6})",
                        psi_p / v
                    ),
                }),
            }
        }
        for (i, &(f1, f2)) in fresh.iter().enumerate() {
            if claimed[i] {
                continue;
            }
            match newton_pair(v, alpha, k, gamma, (f1, f2)) {
                Some((t1, t2)) => {
                    tracks.push(Track {
                        pts: vec![(v, v * t1, t2)],
                        first: gi,
                        last: gi,
                    });
                    still_alive.push(tracks.len() - 1);
                }
                None => diagnostics.push(TraceGap {
                    v,
                    reason: format!(
                        "no convergence from magnitude seed (τ₁, τ₂) = ({f1:.6}, {f2:.6})"
                    ),
                }),
            }
        }
        still_alive.sort_unstable();
        alive = still_alive;
    }
    tracks
}

/// Joins tracks that end (or begin) at the same grid frequency close to each
/// other: the two halves of a curve turning back in `v`.
fn stitch_folds(tracks: &[Track], n_grid: usize) -> Vec<Vec<(f64, f64, f64)>> {
    // side 0 = first point, side 1 = last point
    let endpoint = |t: usize, side: usize| {
        let tr = &tracks[t];
        if side == 0 {
            (tr.first, tr.pts[0])
        } else {
            (tr.last, tr.pts[tr.pts.len() - 1])
        }
    };
    let mut pairs: Vec<(f64, (usize, usize), (usize, usize))> = Vec::new();
    for side in 0..2 {
        for a in 0..tracks.len() {
            let (ga, pa) = endpoint(a, side);
            let interior = if side == 0 { ga > 0 } else { ga + 1 < n_grid };
            if !interior {
                continue;
            }
            for b in a + 1..tracks.len() {
                let (gb, pb) = endpoint(b, side);
                if gb != ga {
                    continue;
                }
                let ph = phase_gap(pa.1 - pb.1, TAU);
                if close_in_tau2(pa.2 - pb.2, pa.2, 0.5) && ph <= 0.25 {
                    let d = (pa.2 - pb.2).abs() / (1.0 + pa.2.abs()) + ph;
                    pairs.push((d, (a, side), (b, side)));
                }
            }
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut link: Vec<[Option<(usize, usize)>; 2]> = vec![[None, None]; tracks.len()];
    for (_, (a, sa), (b, sb)) in pairs {
        if link[a][sa].is_none() && link[b][sb].is_none() {
            link[a][sa] = Some((b, sb));
            link[b][sb] = Some((a, sa));
        }
    }

    let mut visited = vec![false; tracks.len()];
    let mut chains = Vec::new();
    let walk = |start: usize, entry: usize, visited: &mut Vec<bool>| {
        let mut chain: Vec<(f64, f64, f64)> = Vec::new();
        let (mut t, mut side_in) = (start, entry);
        loop {
            visited[t] = true;
            let mut pts = tracks[t].pts.clone();
            if side_in == 1 {
                pts.reverse();
            }
            if let Some(&(_, tail_psi, _)) = chain.last() {
                let shift = ((tail_psi - pts[0].1) / TAU).round() * TAU;
                for p in &mut pts {
                    p.1 += shift;
                }
            }
            chain.extend(pts);
            match link[t][1 - side_in] {
                Some((u, su)) if !visited[u] => {
                    t = u;
                    side_in = su;
                }
                _ => break,
            }
        }
        chain
    };
    for t in 0..tracks.len() {
        if visited[t] {
            continue;
        }
        if link[t][0].is_none() {
            chains.push(walk(t, 0, &mut visited));
        } else if link[t][1].is_none() {
            chains.push(walk(t, 1, &mut visited));
        }
    }
    for t in 0..tracks.len() {
        if !visited[t] {
            chains.push(walk(t, 0, &mut visited));
        }
    }
    chains
}

/// Crossing curves over a frequency grid.
///
/// Each curve is continued from the previous frequency by Newton; the
/// magnitude equation supplies the complete set of crossings at every `v`,
/// which seeds new curves and guards continuation against branch hopping.
/// Pieces that meet where a curve turns back in `v` are joined. Every curve
/// is emitted together with its shifts `τ₁ + m·2π/v`, keeping points whose
/// `branch` is at most `max_branch`. Output is sorted by `v`.
pub fn trace_boundary(
    alpha: f64,
    k: f64,
    gamma: f64,
    v_grid: &[f64],
    max_branch: u32,
    tau2_max: f64,
) -> Result<BoundaryTrace> {
    SystemParams::new(alpha, k, gamma, 0.0, 0.0)?;
    if v_grid.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParams(
            "frequency grid must be positive".into(),
        ));
    }
    if !(tau2_max > 0.0 && tau2_max.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "tau2_max = {tau2_max} must be positive"
        )));
    }
    let mut grid = v_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut diagnostics = Vec::new();
    let tracks = continue_tracks(alpha, k, gamma, &grid, tau2_max, &mut diagnostics);
    let chains = stitch_folds(&tracks, grid.len());

    let mut curve_ids: HashMap<(usize, i64), usize> = HashMap::new();
    let mut points = Vec::new();
    for (cid, chain) in chains.iter().enumerate() {
        for (arc, &(v, psi, t2)) in chain.iter().enumerate() {
            if t2 < 0.0 {
                continue;
            }
            let period = 2.0 * PI / v;
            let t1u = psi / v;
            let m0 = (-t1u / period).ceil() as i64;
            for m in m0..=m0 + max_branch as i64 + 1 {
                let t1 = t1u + m as f64 * period;
                if t1 < 0.0 {
                    continue;
                }
                let branch = (t1 / period).floor() as i64;
                if branch > max_branch as i64 {
                    continue;
                }
                let p = SystemParams {
                    alpha,
                    k,
                    gamma,
                    tau1: t1,
                    tau2: t2,
                };
                if char_value(Complex64::new(0.0, v), &p).norm() > BOUNDARY_ACCEPT {
                    diagnostics.push(TraceGap {
                        v,
                        reason: format!("residual check failed at (τ₁, τ₂) = ({t1:.6}, {t2:.6})"),
                    });
                    continue;
                }
                let next_id = curve_ids.len();
                let curve = *curve_ids.entry((cid, m)).or_insert(next_id);
                points.push(BoundaryPoint {
                    v,
                    tau1: t1,
                    tau2: t2,
                    branch: branch as u32,
                    curve,
                    arc,
                });
            }
        }
    }
    points.sort_by(|a, b| {
        a.v.total_cmp(&b.v)
            .then(a.curve.cmp(&b.curve))
            .then(a.arc.cmp(&b.arc))
    });
    points.dedup_by(|b, a| {
        a.curve == b.curve
            && a.v == b.v
            && (a.tau1 - b.tau1).abs() <= DEDUP_RADIUS
            && (a.tau2 - b.tau2).abs() <= DEDUP_RADIUS
    });
    Ok(BoundaryTrace {
        points,
        diagnostics,
    })
}

/// Points grouped by curve, each group in arc order.
pub fn curves(points: &[BoundaryPoint]) -> Vec<Vec<BoundaryPoint>> {
    let mut map: HashMap<usize, Vec<BoundaryPoint>> = HashMap::new();
    for p in points {
        map.entry(p.curve).or_default().push(*p);
    }
    let mut out: Vec<(usize, Vec<BoundaryPoint>)> = map.into_iter().collect();
    out.sort_by_key(|(id, _)| *id);
    out.into_iter()
        .map(|(_, mut c)| {
            c.sort_by_key(|p| p.arc);
            c
        })
        .collect()
}

/// Neighbouring points along a curve.
fn segments(curve: &[BoundaryPoint]) -> impl Iterator<Item = (BoundaryPoint, BoundaryPoint)> + '_ {
    curve
        .windows(2)
        .filter(|w| w[1].arc == w[0].arc + 1)
        .map(|w| (w[0], w[1]))
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
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
    0.5 * (a + b)
}

/// Lowest `τ₂` on the traced boundary, refined between the neighbouring grid
/// frequencies by golden-section search along the curve.
pub fn boundary_tau2_min(
    alpha: f64,
    k: f64,
    gamma: f64,
    trace: &BoundaryTrace,
) -> Option<BoundaryPoint> {
    let best = *trace
        .points
        .iter()
        .min_by(|a, b| a.tau2.total_cmp(&b.tau2).then(a.tau1.total_cmp(&b.tau1)))?;
    let curve = curves(&trace.points)
        .into_iter()
        .find(|c| c[0].curve == best.curve)?;
    let i = curve.iter().position(|p| *p == best)?;
    let neighbour = |j: Option<usize>| {
        j.and_then(|j| curve.get(j))
            .filter(|p| p.arc.abs_diff(best.arc) == 1)
    };
    let (Some(prev), Some(next)) = (neighbour(i.checked_sub(1)), neighbour(Some(i + 1))) else {
        return Some(best);
    };
    let (lo, hi) = (prev.v.min(next.v), prev.v.max(next.v));
    let solve = |v: f64| newton_pair(v, alpha, k, gamma, (best.tau1, best.tau2));
    let v = golden_min(|v| solve(v).map_or(f64::INFINITY, |s| s.1), lo, hi);
    let (t1, t2) = solve(v)?;
    if t2 > best.tau2 {
        return Some(best);
    }
    let period = 2.0 * PI / v;
    let t1 = t1 - ((t1 - best.tau1) / period).round() * period;
    Some(BoundaryPoint {
        v,
        tau1: t1,
        tau2: t2,
        branch: (t1 / period).floor().max(0.0) as u32,
        ..best
    })
}

/// Newton in `(v, τ₁)` on `Δ(iv) = 0` with `τ₂` held fixed.
fn solve_at_tau2(
    alpha: f64,
    k: f64,
    gamma: f64,
    tau2: f64,
    seed: (f64, f64),
) -> Option<(f64, f64)> {
    let (mut v, mut t1) = seed;
    let e = (-gamma * tau2).exp();
    let i = Complex64::new(0.0, 1.0);
    for _ in 0..BOUNDARY_MAX_ITER {
        if !(v > 0.0) {
            return None;
        }
        let p = SystemParams {
            alpha,
            k,
            gamma,
            tau1: t1,
            tau2,
        };
        let r = char_value(Complex64::new(0.0, v), &p);
        if r.norm() <= BOUNDARY_TOL {
            return Some((v, t1));
        }
        let theta = t1 + tau2;
        let d1 = (-i * v * t1).exp();
        let d2 = (-i * v * theta).exp();
        let jv = alpha * frac_pow(i * v, alpha) / v + i * k * t1 * d1 - i * k * e * theta * d2;
        let jt = i * k * v * d1 - i * k * e * v * d2;
        let det = jv.re * jt.im - jt.re * jv.im;
        if !det.is_finite() || det.abs() < 1e-300 {
            return None;
        }
        v -= (r.re * jt.im - jt.re * r.im) / det;
        t1 -= (jv.re * r.im - r.re * jv.im) / det;
    }
    None
}

/// Points where the horizontal line `τ₂ = tau2` meets the boundary, refined on
/// the exact crossing set.
pub fn slice_crossings(
    alpha: f64,
    k: f64,
    gamma: f64,
    tau2: f64,
    boundary: &[BoundaryPoint],
) -> Vec<f64> {
    let mut cuts = Vec::new();
    for curve in curves(boundary) {
        for (a, b) in segments(&curve) {
            let (da, db) = (a.tau2 - tau2, b.tau2 - tau2);
            if da * db > 0.0 || da == db {
                continue;
            }
            let s = da / (da - db);
            let guess = (a.v + s * (b.v - a.v), a.tau1 + s * (b.tau1 - a.tau1));
            let span = (b.v - a.v).abs().max(1e-9);
            let exact = solve_at_tau2(alpha, k, gamma, tau2, guess).filter(|&(v, t1)| {
                (v - guess.0).abs() <= 2.0 * span
                    && (t1 - guess.1).abs() <= (b.tau1 - a.tau1).abs() + 1e-6
            });
            cuts.push(exact.map_or(guess.1, |x| x.1));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    cuts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceInterval {
    pub tau1_lo: f64,
    pub tau1_hi: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tau2SliceReport {
    pub tau2: f64,
    pub intervals: Vec<SliceInterval>,
}

/// Stability along `τ₁ ∈ [0, tau1_max]` at fixed `τ₂`.
///
/// The boundary cuts the line into intervals; each interval's verdict comes
/// from the root oracle at its midpoint, and equal neighbours are merged.
pub fn classify_tau2_slice(
    alpha: f64,
    k: f64,
    gamma: f64,
    tau2: f64,
    tau1_max: f64,
    boundary: &[BoundaryPoint],
) -> Result<Tau2SliceReport> {
    SystemParams::new(alpha, k, gamma, 0.0, tau2)?;
    if !(tau1_max > 0.0 && tau1_max.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "tau1_max = {tau1_max} must be positive"
        )));
    }
    if let Ok(t) = zero_root_branch_raw(k, gamma) {
        if (t - tau2).abs() <= 1e-9 * t.abs().max(1.0) {
            return Err(Error::InconclusiveVerdict(format!(
                "τ₂ = {tau2} lies on the λ = 0 line, every τ₁ is on the boundary"
            )));
        }
    }
    let mut edges = vec![0.0];
    edges.extend(
        slice_crossings(alpha, k, gamma, tau2, boundary)
            .into_iter()
            .filter(|&c| c > 0.0 && c < tau1_max),
    );
    edges.push(tau1_max);

    let mut intervals: Vec<SliceInterval> = Vec::new();
    for w in edges.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let p = SystemParams::new(alpha, k, gamma, mid, tau2)?;
        let rs = root_stability(&p)?;
        if rs.verdict == Verdict::Inconclusive {
            return Err(Error::InconclusiveVerdict(format!(
                "rightmost root {:?} within {AXIS_BAND} of the axis at τ₁ = {mid}",
                rs.rightmost
            )));
        }
        match intervals.last_mut() {
            Some(last) if last.verdict == rs.verdict => last.tau1_hi = w[1],
            _ => intervals.push(SliceInterval {
                tau1_lo: w[0],
                tau1_hi: w[1],
                verdict: rs.verdict,
            }),
        }
    }
    Ok(Tau2SliceReport { tau2, intervals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::char_eq::find_real_positive_root;
    use crate::char_eq::rhp_root_bound;
    use proptest::prelude::*;

    #[test]
    fn delta_zero_values() {
        assert_eq!(delta_zero(1.3, 0.7, 0.0), 0.7);
        assert!(delta_zero(1.02, 0.3, 1.16102).abs() < 1e-4);
        assert!(delta_zero(1.4, 0.8, 1.2) < 0.0);
    }

    #[test]
    fn thresholds() {
        assert!((instability_threshold(1.4, 0.8).unwrap() - 1.0591).abs() < 1e-4);
        assert!((instability_threshold(3.4, -1.6).unwrap() - 0.2410).abs() < 1e-4);
        assert!((instability_threshold(1.02, 0.3).unwrap() - 1.16102).abs() < 1e-5);
        assert!(matches!(
            instability_threshold(1.0, 1.5),
            Err(Error::Domain(_))
        ));
        assert!(instability_threshold(-1.0, 0.5).is_err());
    }

    #[test]
    fn instability_certificates() {
        assert!(is_unstable_all_tau1(1.4, 0.8, 1.2));
        assert!(is_unstable_all_tau1(3.4, -1.6, 0.15));
        assert!(!is_unstable_all_tau1(1.02, 0.3, 1.04));
    }

    #[test]
    fn zero_root_branch_values() {
        assert!((zero_root_branch(1.02, 0.3).unwrap().unwrap() - 1.16102).abs() < 1e-5);
        assert_eq!(zero_root_branch(-1.02, 0.3).unwrap(), None);
        assert!((zero_root_branch_raw(-1.02, 0.3).unwrap() + 0.85943).abs() < 1e-5);
        assert!((zero_root_branch_raw(2.0, 1e-12).unwrap() - 0.5).abs() < 1e-9);
        assert_eq!(zero_root_branch_raw(2.0, 0.0).unwrap(), 0.5);
        assert!(matches!(zero_root_branch(1.0, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn residuals_without_feedback() {
        let (r1, r2) = imaginary_axis_residuals(1.7, 0.6, 0.0, 0.4, 2.0, 3.0);
        let va = 1.7f64.powf(0.6);
        assert!((r1 - (va * (0.3 * PI).cos() + 0.4)).abs() < 1e-15);
        assert!((r2 - va * (0.3 * PI).sin()).abs() < 1e-15);
    }

    #[test]
    fn slice_endpoint_crossings_are_solutions() {
        let p = solve_boundary_point(2.75, 0.4, 1.02, 0.3, (2.1, 1.1)).unwrap();
        assert!(
            (p.tau1 - 2.11).abs() < 0.01 && (p.tau2 - 1.1).abs() < 0.01,
            "{p:?}"
        );
        let (r1, r2) = imaginary_axis_residuals(p.v, 0.4, 1.02, 0.3, p.tau1, p.tau2);
        assert!(r1.hypot(r2) < 1e-8);
    }

    #[test]
    fn negative_tau1_is_wrapped() {
        let p = solve_boundary_point(2.75, 0.4, 1.02, 0.3, (2.1 - 2.0 * PI / 2.75, 1.1)).unwrap();
        assert_eq!(p.branch, 1);
        assert!(p.tau1 >= 0.0);
    }

    #[test]
    fn empty_grid_gives_empty_trace() {
        let t = trace_boundary(0.4, 1.02, 0.3, &[], 3, 10.0).unwrap();
        assert!(t.points.is_empty());
    }

    fn example_trace() -> BoundaryTrace {
        trace_boundary(0.4, 1.02, 0.3, &default_v_grid(DEFAULT_V_MAX, 600), 3, 4.0).unwrap()
    }

    #[test]
    fn traced_points_lie_on_the_axis() {
        let t = example_trace();
        assert!(!t.points.is_empty());
        for p in &t.points {
            assert!(residual_norm(p.v, 0.4, 1.02, 0.3, p.tau1, p.tau2) <= 1e-8);
            assert!(p.branch <= 3 && p.tau1 >= 0.0 && p.tau2 >= 0.0);
        }
        assert!(t.points.windows(2).all(|w| w[0].v <= w[1].v));
    }

    #[test]
    fn slice_at_1_1_has_unstable_band() {
        let t = example_trace();
        let r = classify_tau2_slice(0.4, 1.02, 0.3, 1.1, 4.0, &t.points).unwrap();
        let v: Vec<Verdict> = r.intervals.iter().map(|i| i.verdict).collect();
        assert_eq!(v, [Verdict::Stable, Verdict::Unstable, Verdict::Stable]);
        assert!((r.intervals[1].tau1_lo - 2.11).abs() < 0.05);
        assert!((r.intervals[1].tau1_hi - 3.03).abs() < 0.05);
    }

    #[test]
    fn slice_above_zero_branch_is_unstable() {
        let t = example_trace();
        let r = classify_tau2_slice(0.4, 1.02, 0.3, 1.21, 4.0, &t.points).unwrap();
        assert_eq!(r.intervals.len(), 1);
        assert_eq!(r.intervals[0].verdict, Verdict::Unstable);
    }

    #[test]
    fn tau2_minimum_is_refined_on_the_curve() {
        let t = example_trace();
        let grid_min = t
            .points
            .iter()
            .map(|p| p.tau2)
            .fold(f64::INFINITY, f64::min);
        let m = boundary_tau2_min(0.4, 1.02, 0.3, &t).unwrap();
        assert!(m.tau2 <= grid_min);
        assert!(residual_norm(m.v, 0.4, 1.02, 0.3, m.tau1, m.tau2) <= 1e-8);
        // Located independently by a magnitude-equation sweep.
        assert!((m.tau2 - 1.01327).abs() < 1e-4, "{m:?}");
    }

    #[test]
    fn negative_feedback_boundary_has_local_min_and_max() {
        let t = trace_boundary(
            0.4,
            -1.02,
            0.3,
            &default_v_grid(DEFAULT_V_MAX, 600),
            0,
            10.0,
        )
        .unwrap();
        let mut has_min = false;
        let mut has_max = false;
        for curve in curves(&t.points) {
            for w in curve.windows(3) {
                has_min |= w[1].tau2 < w[0].tau2 && w[1].tau2 < w[2].tau2;
                has_max |= w[1].tau2 > w[0].tau2 && w[1].tau2 > w[2].tau2;
            }
        }
        assert!(has_min && has_max);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn residuals_match_char_value(
            v in 0.01f64..10.0, alpha in 0.05f64..=1.0, k in -5.0f64..5.0,
            gamma in -5.0f64..5.0, t1 in 0.0f64..10.0, t2 in 0.0f64..10.0,
        ) {
            let p = SystemParams::new(alpha, k, gamma, t1, t2).unwrap();
            let d = char_value(Complex64::new(0.0, v), &p);
            let (r1, r2) = imaginary_axis_residuals(v, alpha, k, gamma, t1, t2);
            let scale = 1.0 + v.powf(alpha) + gamma.abs() + 2.0 * k.abs() * (1.0 + (-gamma * t2).exp());
            prop_assert!((d.re - r1).abs() <= 1e-14 * scale);
            prop_assert!((d.im - r2).abs() <= 1e-14 * scale);
        }

        #[test]
        fn threshold_zeroes_delta(k in 0.1f64..10.0, frac in 0.01f64..0.99, neg in any::<bool>()) {
            let gamma = if neg { -frac * 3.0 * k } else { frac * k };
            let t = instability_threshold(k, gamma).unwrap();
            prop_assert!(delta_zero(k, gamma, t).abs() <= 1e-12 * k.max(1.0));
        }

        #[test]
        fn certificate_implies_real_root(k in 0.1f64..5.0, frac in 0.05f64..0.95, tau1 in 0.0f64..20.0) {
            let gamma = frac * k;
            let tau2 = 1.5 * instability_threshold(k, gamma).unwrap();
            prop_assert!(is_unstable_all_tau1(k, gamma, tau2));
            for alpha in [0.3, 0.6, 1.0] {
                let p = SystemParams::new(alpha, k, gamma, tau1, tau2).unwrap();
                let root = find_real_positive_root(&p, rhp_root_bound(&p) * 1.02 + 1e-3).unwrap();
                prop_assert!(root.is_some());
            }
        }

        #[test]
        fn wrapping_preserves_residual(v in 0.2f64..6.0, t2 in 0.0f64..3.0, k in 0.5f64..3.0, gamma in -1.0f64..1.0) {
            let t1 = phase_tau1(v, 0.4, k, gamma, t2);
            let base = residual_norm(v, 0.4, k, gamma, t1, t2);
            let shifted = residual_norm(v, 0.4, k, gamma, t1 + 2.0 * PI / v, t2);
            prop_assert!((base - shifted).abs() <= 1e-12);
        }
    }
}
