//! Characteristic function of the linearized two-delay equation
//!
//! `Δ(λ) = λ^α + γ − k e^{−λτ₁} + k e^{−γτ₂} e^{−λ(τ₁+τ₂)}`
//!
//! together with the single-delay form `λ^α − a − b e^{−λτ}` and the root
//! finders built on them: bracketed bisection on the positive real axis,
//! damped Newton in the complex plane, and a brute-force grid of Newton
//! launches that serves as the independent stability oracle.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{SystemParams, Verdict};

pub type ComplexValue = Complex64;

/// Residual accepted as a root by [`newton_root`].
pub const ROOT_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 100;
/// Step halvings tried before an undamped step is taken.
pub const NEWTON_MAX_HALVINGS: u32 = 20;
/// Two converged roots closer than this are the same root.
pub const DEDUP_RADIUS: f64 = 1e-6;
/// Roots with `|Re λ|` below this cannot be told apart from the imaginary axis.
pub const AXIS_BAND: f64 = 1e-5;

const DERIVATIVE_FLOOR: f64 = 1e-14;
const REAL_SCAN_POINTS: usize = 10_000;
const BISECTION_MAX_ITER: usize = 200;

/// Principal branch `z^α = |z|^α e^{iα arg z}` with `arg z ∈ (−π, π]`.
pub fn frac_pow(z: Complex64, alpha: f64) -> Complex64 {
    if z.re == 0.0 && z.im == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let r = z.norm();
    // atan2 returns −π for (−x, −0.0); the principal branch wants +π there.
    let theta = if z.im == 0.0 && z.re < 0.0 {
        std::f64::consts::PI
    } else {
        z.im.atan2(z.re)
    };
    Complex64::from_polar(r.powf(alpha), alpha * theta)
}

pub fn char_value(lambda: Complex64, p: &SystemParams) -> Complex64 {
    let delayed = (-lambda * p.tau1).exp();
    let doubly_delayed = (-lambda * p.total_delay()).exp();
    frac_pow(lambda, p.alpha) + p.gamma - p.k * delayed + p.k * p.decay_factor() * doubly_delayed
}

/// `dΔ/dλ`, used by Newton. Infinite at `λ = 0` when `α < 1`.
pub fn char_derivative(lambda: Complex64, p: &SystemParams) -> Complex64 {
    let power_term = if p.alpha == 1.0 {
        Complex64::new(1.0, 0.0)
    } else {
        p.alpha * frac_pow(lambda, p.alpha) / lambda
    };
    let total = p.total_delay();
    power_term + p.k * p.tau1 * (-lambda * p.tau1).exp()
        - p.k * p.decay_factor() * total * (-lambda * total).exp()
}

/// Single-delay characteristic function `λ^α − a − b e^{−λτ}`.
pub fn char_value_single(lambda: Complex64, a: f64, b: f64, tau: f64, alpha: f64) -> Complex64 {
    frac_pow(lambda, alpha) - a - b * (-lambda * tau).exp()
}

/// Closed form of `Δ(0) = γ − k + k e^{−γτ₂}`.
pub fn delta_at_zero(p: &SystemParams) -> f64 {
    p.gamma - p.k + p.k * p.decay_factor()
}

/// Every root with `Re λ ≥ 0` satisfies `|λ| ≤` this bound, since the
/// exponentials have modulus at most one there.
pub fn rhp_root_bound(p: &SystemParams) -> f64 {
    let m = p.gamma.abs() + p.k.abs() * (1.0 + p.decay_factor());
    m.powf(1.0 / p.alpha)
}

fn real_delta(x: f64, p: &SystemParams) -> f64 {
    char_value(Complex64::new(x, 0.0), p).re
}

/// Positive real root of Δ by dense scan plus bisection.
///
/// Returns `Ok(None)` when `Δ(0) ≥ 0` and no sign change exists on the scan
/// grid, and [`Error::BracketNotFound`] when `Δ(0) < 0` yet `lambda_max` is too
/// small to reach the sign change guaranteed by `Δ → +∞`.
pub fn find_real_positive_root(p: &SystemParams, lambda_max: f64) -> Result<Option<f64>> {
    p.validate()?;
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "lambda_max = {lambda_max} must be positive"
        )));
    }
    let d0 = delta_at_zero(p);
    let mut prev_x = 0.0;
    let mut prev_f = d0;
    for i in 1..=REAL_SCAN_POINTS {
        let x = lambda_max * i as f64 / REAL_SCAN_POINTS as f64;
        let f = real_delta(x, p);
        if f == 0.0 {
            return Ok(Some(x));
        }
        if prev_f != 0.0 && (prev_f < 0.0) != (f < 0.0) {
            return bisect_real(p, prev_x, prev_f, x).map(Some);
        }
        prev_x = x;
        prev_f = f;
    }
    if d0 < 0.0 {
        Err(Error::BracketNotFound { lambda_max })
    } else {
        Ok(None)
    }
}

fn bisect_real(p: &SystemParams, mut lo: f64, f_lo: f64, mut hi: f64) -> Result<f64> {
    let lo_negative = f_lo < 0.0;
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = real_delta(mid, p);
        if f == 0.0 {
            return Ok(mid);
        }
        if (f < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (best, residual) = [lo, hi]
        .into_iter()
        .map(|x| (x, real_delta(x, p).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("two candidates");
    if residual <= ROOT_TOL {
        Ok(best)
    } else {
        Err(Error::NoConvergence(format!(
            "bisection stalled at λ = {best} with |Δ| = {residual:.3e}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    pub root: Complex64,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Damped Newton iteration on Δ from `seed`.
///
/// Each step is halved (at most [`NEWTON_MAX_HALVINGS`] times) until `|Δ|`
/// decreases; if no halving helps the full step is taken. Only iterates with
/// `|Δ| ≤ ROOT_TOL` are reported as roots.
pub fn newton_root(p: &SystemParams, seed: Complex64) -> Result<RootReport> {
    if !(seed.re.is_finite() && seed.im.is_finite()) {
        return Err(Error::InvalidParams(format!("seed {seed} is not finite")));
    }
    let mut z = seed;
    let mut f = char_value(z, p);
    for iter in 0..NEWTON_MAX_ITER {
        let residual = f.norm();
        if !residual.is_finite() {
            return Err(Error::Diverged { iterations: iter });
        }
        if residual <= ROOT_TOL {
            return Ok(RootReport {
                root: z,
                residual_norm: residual,
                iterations: iter,
            });
        }
        let d = char_derivative(z, p);
        let dn = d.norm();
        if !dn.is_finite() || dn < DERIVATIVE_FLOOR {
            return Err(Error::DerivativeNearZero {
                at: z,
                derivative_norm: dn,
            });
        }
        let step = f / d;
        let mut accepted = None;
        let mut scale = 1.0;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let cand = z - step * scale;
            let fc = char_value(cand, p);
            if fc.norm() < residual {
                accepted = Some((cand, fc));
                break;
            }
            scale *= 0.5;
        }
        let (next, fnext) = accepted.unwrap_or_else(|| {
            let cand = z - step;
            (cand, char_value(cand, p))
        });
        if !(next.re.is_finite() && next.im.is_finite()) || next.norm() > 1e12 {
            return Err(Error::Diverged {
                iterations: iter + 1,
            });
        }
        z = next;
        f = fnext;
    }
    let residual = f.norm();
    if residual <= ROOT_TOL {
        return Ok(RootReport {
            root: z,
            residual_norm: residual,
            iterations: NEWTON_MAX_ITER,
        });
    }
    Err(Error::IterationLimit {
        last: z,
        residual,
        iterations: NEWTON_MAX_ITER,
    })
}

/// Launches [`newton_root`] from every node of a `grid × grid` lattice over the
/// window and returns the distinct converged roots, rightmost first.
pub fn scan_roots(
    p: &SystemParams,
    re_range: (f64, f64),
    im_range: (f64, f64),
    grid: usize,
) -> Result<Vec<RootReport>> {
    scan_roots_grid(p, re_range, im_range, (grid, grid))
}

/// Same as [`scan_roots`] with separate node counts along the real and
/// imaginary axes.
pub fn scan_roots_grid(
    p: &SystemParams,
    re_range: (f64, f64),
    im_range: (f64, f64),
    grid: (usize, usize),
) -> Result<Vec<RootReport>> {
    p.validate()?;
    if grid.0 < 2 || grid.1 < 2 {
        return Err(Error::InvalidParams(format!(
            "root scan needs at least 2 nodes per axis, got {grid:?}"
        )));
    }
    let node = |range: (f64, f64), n: usize, i: usize| {
        range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
    };
    let seeds: Vec<Complex64> = (0..grid.0)
        .flat_map(|i| {
            (0..grid.1)
                .map(move |j| Complex64::new(node(re_range, grid.0, i), node(im_range, grid.1, j)))
        })
        .collect();
    let mut found: Vec<RootReport> = seeds
        .par_iter()
        .filter_map(|&s| newton_root(p, s).ok())
        .collect();
    found.sort_by(|a, b| {
        b.root
            .re
            .total_cmp(&a.root.re)
            .then(b.root.im.total_cmp(&a.root.im))
    });
    let mut distinct: Vec<RootReport> = Vec::new();
    for r in found {
        if distinct
            .iter()
            .all(|d| (d.root - r.root).norm() > DEDUP_RADIUS)
        {
            distinct.push(r);
        }
    }
    Ok(distinct)
}

/// Window and lattice used when the root scan acts as a stability oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleWindow {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    pub grid: (usize, usize),
}

impl OracleWindow {
    /// Covers the disc that contains every right-half-plane root, with lattice
    /// spacing at most a quarter of the period of the longest delay.
    pub fn covering(p: &SystemParams) -> Self {
        let radius = rhp_root_bound(p) * 1.02 + 1e-3;
        let re_lo = -(0.25 * radius).min(1.0);
        let mut spacing = radius / 23.0;
        if p.total_delay() > 0.0 {
            spacing = spacing.min(std::f64::consts::FRAC_PI_2 / p.total_delay());
        }
        let count =
            |len: f64, lo: usize, hi: usize| ((len / spacing).ceil() as usize + 1).clamp(lo, hi);
        Self {
            re_range: (re_lo, radius),
            im_range: (0.0, radius),
            grid: (count(radius - re_lo, 12, 80), count(radius, 24, 200)),
        }
    }
}

/// Outcome of the root-based stability check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootStability {
    pub verdict: Verdict,
    /// Rightmost root found, if any.
    pub rightmost: Option<Complex64>,
    /// Positive real root, when one exists.
    pub real_root: Option<f64>,
}

/// Stability from root locations alone: unstable iff some root has `Re λ > 0`.
///
/// `Δ(0) < 0` certifies a positive real root outright. Otherwise the verdict
/// comes from [`scan_roots_grid`] over [`OracleWindow::covering`]; a rightmost
/// root inside the `±AXIS_BAND` strip yields `Inconclusive`.
pub fn root_stability(p: &SystemParams) -> Result<RootStability> {
    root_stability_in(p, &OracleWindow::covering(p))
}

pub fn root_stability_in(p: &SystemParams, window: &OracleWindow) -> Result<RootStability> {
    p.validate()?;
    let bound = window.re_range.1.max(rhp_root_bound(p) * 1.02 + 1e-3);
    let real_root = find_real_positive_root(p, bound)?;
    let roots = scan_roots_grid(p, window.re_range, window.im_range, window.grid)?;
    let mut rightmost = roots.first().map(|r| r.root);
    if let Some(x) = real_root {
        if rightmost.is_none_or(|z| z.re < x) {
            rightmost = Some(Complex64::new(x, 0.0));
        }
    }
    let verdict = if delta_at_zero(p) < 0.0 {
        Verdict::Unstable
    } else {
        match rightmost {
            None => Verdict::Stable,
            Some(z) if z.re > AXIS_BAND => Verdict::Unstable,
            Some(z) if z.re < -AXIS_BAND => Verdict::Stable,
            Some(_) => Verdict::Inconclusive,
        }
    };
    Ok(RootStability {
        verdict,
        rightmost,
        real_root,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn frac_pow_principal_branch() {
        assert_eq!(frac_pow(c(0.0, 0.0), 0.3), c(0.0, 0.0));
        let z = frac_pow(c(-4.0, 0.0), 0.5);
        assert!((z - c(0.0, 2.0)).norm() < 1e-14);
        let z = frac_pow(c(-4.0, -0.0), 0.5);
        assert!((z - c(0.0, 2.0)).norm() < 1e-14);
        let z = frac_pow(c(0.0, 1.0), 0.4);
        assert!((z - Complex64::from_polar(1.0, 0.2 * PI)).norm() < 1e-15);
    }

    #[test]
    fn delta_zero_matches_closed_form() {
        let p = SystemParams::new(0.7, 1.3, 0.4, 2.0, 0.9).unwrap();
        let direct = char_value(c(0.0, 0.0), &p);
        assert!((direct.re - delta_at_zero(&p)).abs() < 1e-14);
        assert_eq!(direct.im, 0.0);
    }

    #[test]
    fn vanishes_at_zero_on_the_lambda_zero_line() {
        let p = SystemParams::new(0.4, 1.02, 0.3, 3.0, 1.16102).unwrap();
        assert!(char_value(c(0.0, 0.0), &p).norm() < 1e-5);
    }

    #[test]
    fn example_root_residual_is_small() {
        let p = SystemParams::new(0.4, 1.02, 0.3, 2.9, 1.1).unwrap();
        assert!(char_value(c(0.00200287, 2.10566), &p).norm() < 1e-4);
    }

    #[test]
    fn single_delay_trivial_zeros() {
        assert!(char_value_single(c(0.0, 0.0), -1.0, 1.0, 3.7, 0.6).norm() < 1e-15);
        assert!(char_value_single(c(0.0, 1.0), 0.0, -1.0, PI / 2.0, 1.0).norm() < 1e-15);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let p = SystemParams::new(0.6, 1.4, -0.3, 0.8, 0.5).unwrap();
        let z = c(0.3, 1.7);
        let h = 1e-6;
        let fd = (char_value(z + h, &p) - char_value(z - h, &p)) / (2.0 * h);
        assert!((fd - char_derivative(z, &p)).norm() < 1e-7);
    }

    #[test]
    fn real_root_cases() {
        let p = SystemParams::new(0.3, 1.4, 0.8, 2.3, 1.2).unwrap();
        let r = find_real_positive_root(&p, rhp_root_bound(&p))
            .unwrap()
            .unwrap();
        assert!(r > 0.0 && real_delta(r, &p).abs() <= 1e-10);

        let p = SystemParams::new(0.8, 3.4, -1.6, 3.4, 0.15).unwrap();
        let r = find_real_positive_root(&p, rhp_root_bound(&p))
            .unwrap()
            .unwrap();
        assert!(r > 0.0 && real_delta(r, &p).abs() <= 1e-10);

        let p = SystemParams::new(1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(find_real_positive_root(&p, 100.0).unwrap(), None);
    }

    #[test]
    fn bracket_failure_is_reported() {
        // Δ(λ) = λ − 5 has its root beyond lambda_max.
        let p = SystemParams::new(1.0, 0.0, -5.0, 0.0, 0.0).unwrap();
        assert_eq!(
            find_real_positive_root(&p, 1.0),
            Err(Error::BracketNotFound { lambda_max: 1.0 })
        );
    }

    #[test]
    fn newton_reproduces_reported_root() {
        let p = SystemParams::new(0.4, 1.02, 0.3, 2.9, 1.1).unwrap();
        let r = newton_root(&p, c(0.1, 2.0)).unwrap();
        assert!(r.residual_norm <= ROOT_TOL);
        assert!((r.root.re - 0.00200287).abs() < 1e-6, "{:?}", r.root);
        assert!((r.root.im - 2.10566).abs() < 1e-5, "{:?}", r.root);
    }

    #[test]
    fn newton_delay_free_closed_form() {
        // k = 0: Δ(λ) = λ^α + γ, the only root is (−γ)^{1/α}.
        let p = SystemParams::new(0.5, 0.0, -0.7, 1.0, 1.0).unwrap();
        let r = newton_root(&p, c(1.0, 0.0)).unwrap();
        assert!((r.root - c(0.7f64.powf(2.0), 0.0)).norm() < 1e-9);
    }

    #[test]
    fn newton_near_boundary_point_is_near_axis() {
        let p = SystemParams::new(0.4, 1.02, 0.3, 2.11, 1.1).unwrap();
        let r = newton_root(&p, c(0.0, 2.1)).unwrap();
        assert!(r.root.re.abs() <= 5e-3, "{:?}", r.root);
    }

    #[test]
    fn newton_rejects_bad_seeds() {
        let p = SystemParams::new(1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        assert!(newton_root(&p, c(f64::NAN, 0.0)).is_err());
        // λ^{α−1} is unbounded at the origin when α < 1.
        let p = SystemParams::new(0.5, 1.0, 2.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            newton_root(&p, c(0.0, 0.0)),
            Err(Error::DerivativeNearZero { .. })
        ));
    }

    #[test]
    fn scan_finds_single_root_of_linear_case() {
        let p = SystemParams::new(1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        let roots = scan_roots(&p, (-3.0, 1.0), (0.0, 5.0), 20).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].root - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn scan_rejects_degenerate_grid() {
        let p = SystemParams::new(1.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        assert!(scan_roots(&p, (-1.0, 1.0), (0.0, 1.0), 1).is_err());
    }

    #[test]
    fn scan_detects_example_instability_and_stability() {
        let unstable = SystemParams::new(0.4, 1.02, 0.3, 2.9, 1.1).unwrap();
        let roots = scan_roots(&unstable, (-0.5, 2.0), (0.0, 6.0), 40).unwrap();
        assert!(roots.iter().any(|r| r.root.re > 0.0));

        let stable = SystemParams::new(0.4, 1.02, 0.3, 1.8, 1.1).unwrap();
        let roots = scan_roots(&stable, (-0.5, 2.0), (0.0, 6.0), 40).unwrap();
        assert!(!roots.is_empty());
        assert!(roots.iter().all(|r| r.root.re < 0.0));
    }

    #[test]
    fn oracle_verdicts_on_examples() {
        let cases = [
            ((0.4, 1.02, 0.3, 2.9, 1.1), Verdict::Unstable),
            ((0.4, 1.02, 0.3, 1.8, 1.1), Verdict::Stable),
            ((0.4, 1.02, 0.3, 3.5, 1.1), Verdict::Stable),
            ((0.4, 2.0, 0.6, 0.0, 0.14), Verdict::Stable),
            ((0.4, 2.0, 0.6, 0.0, 0.52), Verdict::Unstable),
            ((0.4, 1.02, 0.3, 1.8, 1.21), Verdict::Unstable),
        ];
        for ((a, k, g, t1, t2), want) in cases {
            let p = SystemParams::new(a, k, g, t1, t2).unwrap();
            let got = root_stability(&p).unwrap();
            assert_eq!(got.verdict, want, "{p:?}: {got:?}");
        }
    }
}
