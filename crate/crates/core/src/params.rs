//! Parameter tuple of the linearized two-delay equation and the shared
//! stability verdict vocabulary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One instance of `D^α x = −γ x(t) + k x(t−τ₁) − k e^{−γτ₂} x(t−τ₁−τ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub alpha: f64,
    /// Slope of the nonlinearity at the equilibrium, `g'(0)`.
    pub k: f64,
    pub gamma: f64,
    pub tau1: f64,
    pub tau2: f64,
}

impl SystemParams {
    pub fn new(alpha: f64, k: f64, gamma: f64, tau1: f64, tau2: f64) -> Result<Self> {
        let p = Self {
            alpha,
            k,
            gamma,
            tau1,
            tau2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.k, self.gamma, self.tau1, self.tau2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "non-finite entry in {self:?}"
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "alpha = {} must lie in (0, 1]",
                self.alpha
            )));
        }
        if self.tau1 < 0.0 || self.tau2 < 0.0 {
            return Err(Error::InvalidParams(format!(
                "delays must be non-negative (tau1 = {}, tau2 = {})",
                self.tau1, self.tau2
            )));
        }
        Ok(())
    }

    /// The delay-dependent coefficient `e^{−γτ₂}`.
    pub fn decay_factor(&self) -> f64 {
        (-self.gamma * self.tau2).exp()
    }

    pub fn total_delay(&self) -> f64 {
        self.tau1 + self.tau2
    }

    pub fn with_delays(&self, tau1: f64, tau2: f64) -> Self {
        Self {
            tau1,
            tau2,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

impl Verdict {
    pub fn flip(self) -> Self {
        match self {
            Verdict::Stable => Verdict::Unstable,
            Verdict::Unstable => Verdict::Stable,
            Verdict::Inconclusive => Verdict::Inconclusive,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Verdict::Stable => 'S',
            Verdict::Unstable => 'U',
            Verdict::Inconclusive => '?',
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}
