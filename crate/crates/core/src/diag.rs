//! Diagonal betting: one 1-D coin-betting learner per coordinate, each
//! choosing its betting fraction by FTRL with a quadratic regularizer, and
//! each clipped to [−1/2, 1/2] through the unconstrained-to-constrained
//! reduction.
//!
//! Per coordinate and round:
//!
//! ```text
//! x = v·wealth,  w = clip(x, −½, ½)                    (predict)
//! g̃ = 0 if g·(x − w) < 0 else g
//! wealth ← wealth − x·g̃
//! z = g̃ / (1 − g̃·v),  A ← A + z²                       (A starts at 5)
//! v ← clip(−2η·Σz / A, −½, ½)                          (fraction for next round)
//! ```
//!
//! The fraction assignment at the end of a round produces the fraction for the
//! *next* round; the current round's `v` is the one that was used for `x`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::learner::{check_dim, LearnerStep, NormBound, OnlineLearner};
use crate::safeguards::InitFractionClamp;
use crate::vectorlab::{clip, GradientVector, Norm};

/// Initial value of the FTRL accumulator A.
pub const A_INIT: f64 = 5.0;
/// Bound on the betting fraction and on the clipped iterate.
pub const FRACTION_LIMIT: f64 = 0.5;
pub const DEFAULT_ETA: f64 = 0.5;

/// clip(−2η·Σz / (5 + Σz²), −½, ½): the minimizer over v ∈ [−½, ½] of
/// Σz·v + v²/(4η)·(5 + Σz²).
pub fn ftrl_fraction(z_history: &[f64], eta: f64) -> f64 {
    let sum: f64 = z_history.iter().sum();
    let sq: f64 = z_history.iter().map(|z| z * z).sum();
    clip(-2.0 * eta * sum / (A_INIT + sq), -FRACTION_LIMIT, FRACTION_LIMIT)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagCoordState {
    pub wealth: f64,
    /// A = 5 + Σ z².
    pub a: f64,
    /// Betting fraction for the upcoming round.
    pub v: f64,
    pub z_sum: f64,
    pub eta: f64,
}

impl DiagCoordState {
    fn new(epsilon: f64, eta: f64) -> Self {
        DiagCoordState {
            wealth: epsilon,
            a: A_INIT,
            v: 0.0,
            z_sum: 0.0,
            eta,
        }
    }

    /// Unclipped iterate x = v·wealth.
    pub fn unclipped(&self) -> f64 {
        self.v * self.wealth
    }

    pub fn iterate(&self) -> f64 {
        clip(self.unclipped(), -FRACTION_LIMIT, FRACTION_LIMIT)
    }

    fn update(&mut self, g: f64) -> Result<(ReductionTrace, f64)> {
        let x = self.unclipped();
        let w = clip(x, -FRACTION_LIMIT, FRACTION_LIMIT);
        let g_tilde = if g * (x - w) < 0.0 { 0.0 } else { g };
        self.wealth -= x * g_tilde;
        let denom = 1.0 - g_tilde * self.v;
        if denom < 0.5 {
            return Err(Error::InvariantFailure(format!(
                "1 - g·v = {denom} < 1/2 (g = {g_tilde}, v = {})",
                self.v
            )));
        }
        let z = g_tilde / denom;
        self.a += z * z;
        self.z_sum += z;
        self.v = clip(
            -2.0 * self.eta * self.z_sum / self.a,
            -FRACTION_LIMIT,
            FRACTION_LIMIT,
        );
        Ok((
            ReductionTrace {
                x,
                w,
                g,
                g_tilde,
            },
            z,
        ))
    }
}

/// One round of the clip reduction on one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionTrace {
    pub x: f64,
    pub w: f64,
    pub g: f64,
    pub g_tilde: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagConfig {
    /// Total initial wealth.
    pub epsilon: f64,
    pub eta: f64,
    /// Give each coordinate ε/d instead of ε.
    pub split_epsilon: bool,
    pub clamp: Option<InitFractionClamp>,
}

impl Default for DiagConfig {
    fn default() -> Self {
        DiagConfig {
            epsilon: 1.0,
            eta: DEFAULT_ETA,
            split_epsilon: true,
            clamp: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiagOptimizer {
    coords: Vec<DiagCoordState>,
    coord_epsilon: f64,
    round: u64,
    clamp: Option<InitFractionClamp>,
    last_trace: Vec<ReductionTrace>,
    last_z: Vec<f64>,
}

impl DiagOptimizer {
    /// ε split across coordinates, η = 1/2, no clamp.
    pub fn new(dim: usize, epsilon: f64) -> Result<Self> {
        Self::with_config(dim, DiagConfig {
            epsilon,
            ..DiagConfig::default()
        })
    }

    pub fn with_config(dim: usize, config: DiagConfig) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dim must be positive".into()));
        }
        if !(config.epsilon > 0.0 && config.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {}",
                config.epsilon
            )));
        }
        if !(config.eta > 0.0 && config.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "eta must be positive, got {}",
                config.eta
            )));
        }
        if let Some(clamp) = &config.clamp {
            check_dim(dim, clamp.dim())?;
        }
        let coord_epsilon = if config.split_epsilon {
            config.epsilon / dim as f64
        } else {
            config.epsilon
        };
        Ok(DiagOptimizer {
            coords: vec![DiagCoordState::new(coord_epsilon, config.eta); dim],
            coord_epsilon,
            round: 0,
            clamp: config.clamp,
            last_trace: Vec::new(),
            last_z: Vec::new(),
        })
    }

    pub fn coords(&self) -> &[DiagCoordState] {
        &self.coords
    }

    /// Initial wealth of each coordinate.
    pub fn coord_epsilon(&self) -> f64 {
        self.coord_epsilon
    }

    /// Reduction trace of the most recent update (empty before the first).
    pub fn last_trace(&self) -> &[ReductionTrace] {
        &self.last_trace
    }

    /// z_{t,i} of the most recent update.
    pub fn last_z(&self) -> &[f64] {
        &self.last_z
    }

    pub fn clamp(&self) -> Option<&InitFractionClamp> {
        self.clamp.as_ref()
    }
}

impl OnlineLearner for DiagOptimizer {
    fn dim(&self) -> usize {
        self.coords.len()
    }

    fn round(&self) -> u64 {
        self.round
    }

    fn predict(&self) -> Result<LearnerStep> {
        Ok(LearnerStep {
            iterate: self.coords.iter().map(|c| c.iterate()).collect(),
            round: self.round + 1,
        })
    }

    fn update(&mut self, g: &GradientVector) -> Result<()> {
        check_dim(self.dim(), g.dim())?;
        NormBound::new(Norm::Linf, 1.0).check(g)?;
        let mut trace = Vec::with_capacity(self.coords.len());
        let mut zs = Vec::with_capacity(self.coords.len());
        for (i, (coord, gi)) in self.coords.iter_mut().zip(g.iter()).enumerate() {
            let played = coord.v;
            let (t, z) = coord.update(gi.clamp(-1.0, 1.0))?;
            if let Some(clamp) = self.clamp.as_mut() {
                clamp.observe(i, z, played);
                coord.v = clamp.clamp_fraction(coord.v, i);
            }
            trace.push(t);
            zs.push(z);
        }
        self.last_trace = trace;
        self.last_z = zs;
        self.round += 1;
        Ok(())
    }

    fn gradient_bound(&self) -> Option<NormBound> {
        Some(NormBound::new(Norm::Linf, 1.0))
    }

    fn wealth(&self) -> Option<f64> {
        Some(self.coords.iter().map(|c| c.wealth).sum())
    }

    fn name(&self) -> String {
        "diag".into()
    }
}
