//! Stability analysis for the scalar fractional delay equation
//!
//! ```text
//! D^α x(t) = −γ x(t) + g(x(t−τ₁)) − e^{−γτ₂} g(x(t−τ₁−τ₂)),   0 < α ≤ 1
//! ```
//!
//! around its zero equilibrium. The crate computes critical delays and
//! switch patterns for `τ₁ = 0`, bifurcation curves in the `(k, γ)` plane,
//! imaginary-axis crossing sets in the `(τ₁, τ₂)` plane, and checks every
//! analytic verdict against characteristic roots and a time-domain
//! fractional predictor–corrector.

pub mod case_tau1_zero;
pub mod char_eq;
pub mod error;
pub mod fdde_sim;
pub mod params;
pub mod single_delay;
pub mod two_delay;

pub use error::{Error, Result};
pub use params::{SystemParams, Verdict};
