//! Stability regions of `D^α x = a x(t) + b x(t−τ)` in the `(a, b)` plane and
//! the closed-form first Hopf delay of the single stable region.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Round-off allowance when clamping the arccos argument.
const ARCCOS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SingleDelayTag {
    StableAllDelays,
    UnstableAllDelays,
    /// Stable below one critical delay, unstable above it.
    Ssr,
    /// On one of the lines `b = −|a|`, `b = −a`, `b = a`.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleDelayClass {
    pub tag: SingleDelayTag,
    /// Present exactly when `tag == Ssr`.
    pub hopf_delay: Option<f64>,
}

fn on_line(x: f64, y: f64, a: f64, b: f64) -> bool {
    (x - y).abs() <= 1e-12 * 1f64.max(a.abs()).max(b.abs())
}

pub fn classify(a: f64, b: f64) -> SingleDelayTag {
    if on_line(b, -a, a, b) || on_line(b, a, a, b) {
        return SingleDelayTag::Boundary;
    }
    if b < -a.abs() {
        SingleDelayTag::Ssr
    } else if b > -a {
        SingleDelayTag::UnstableAllDelays
    } else {
        // a < 0 and a < b < −a is all that remains.
        SingleDelayTag::StableAllDelays
    }
}

/// Classification plus the Hopf delay when the pair lies in the SSR.
pub fn classify_with_delay(a: f64, b: f64, alpha: f64) -> Result<SingleDelayClass> {
    let tag = classify(a, b);
    let hopf_delay = match tag {
        SingleDelayTag::Ssr => Some(hopf_delay(a, b, alpha)?),
        _ => None,
    };
    Ok(SingleDelayClass { tag, hopf_delay })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "alpha = {alpha} must lie in (0, 1]"
        )))
    }
}

/// `ω^α = a cos(απ/2) + √(b² − a² sin²(απ/2))`, the modulus condition for a
/// root `iω` of the single-delay characteristic function.
fn crossing_power(a: f64, b: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let (s, c) = (alpha * FRAC_PI_2).sin_cos();
    let disc = b * b - a * a * s * s;
    if disc < 0.0 {
        return Err(Error::Domain(format!(
            "b² − a² sin²(απ/2) = {disc:.6e} < 0 for a = {a}, b = {b}, alpha = {alpha}"
        )));
    }
    let base = a * c + disc.sqrt();
    if base <= 0.0 {
        return Err(Error::Domain(format!(
            "a cos(απ/2) + √(b² − a² sin²(απ/2)) = {base:.6e} is not positive for a = {a}, b = {b}"
        )));
    }
    Ok(base)
}

pub fn crossing_frequency(a: f64, b: f64, alpha: f64) -> Result<f64> {
    crossing_power(a, b, alpha).map(|base| base.powf(1.0 / alpha))
}

/// First delay at which `iω` becomes a root, `arccos((ω^α c − a)/b) / ω`.
pub fn hopf_delay(a: f64, b: f64, alpha: f64) -> Result<f64> {
    let base = crossing_power(a, b, alpha)?;
    let omega = base.powf(1.0 / alpha);
    let c = (alpha * FRAC_PI_2).cos();
    let mut arg = (base * c - a) / b;
    if !arg.is_finite() {
        return Err(Error::Domain(format!(
            "arccos argument undefined for b = {b}"
        )));
    }
    if arg.abs() > 1.0 {
        if arg.abs() <= 1.0 + ARCCOS_SLACK {
            arg = arg.signum();
        } else {
            return Err(Error::Domain(format!(
                "arccos argument {arg:.12} outside [−1, 1] for a = {a}, b = {b}, alpha = {alpha}"
            )));
        }
    }
    Ok(arg.acos() / omega)
}
