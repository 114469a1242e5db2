//! Practical wrappers around the betting learners.
//!
//! Composition order used by the harness, outermost first:
//!
//! ```text
//! MomentumOffset( GmaxScaler( RecursiveOptimizer( DiagOptimizer + InitFractionClamp ) ) )
//! ```
//!
//! `MomentumOffset` only changes the reported iterate, `GmaxScaler` only
//! changes the gradient, and the clamp lives inside the diagonal learner's
//! per-coordinate fraction update.

use serde::Serialize;

use crate::error::Result;
use crate::learner::{check_dim, LearnerStep, NormBound, OnlineLearner};
use crate::vectorlab::{clip, GradientVector, Norm};

/// Running maximum of ‖g‖_1 and the rescaling it induces.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct GmaxTracker {
    g_max: f64,
}

impl GmaxTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn g_max(&self) -> f64 {
        self.g_max
    }

    /// Updates g_max and returns g / g_max. While every gradient so far has
    /// been zero, zeros are returned as-is.
    pub fn forward(&mut self, g: &GradientVector) -> GradientVector {
        self.g_max = self.g_max.max(g.norm(Norm::L1));
        if self.g_max == 0.0 {
            return GradientVector::zeros(g.dim());
        }
        g.scaled(1.0 / self.g_max)
    }
}

/// Rescales gradients by the running maximum of their L1 norm so the wrapped
/// learner always sees ‖g‖_1 ≤ 1.
#[derive(Debug, Clone)]
pub struct GmaxScaler<L> {
    inner: L,
    tracker: GmaxTracker,
}

impl<L: OnlineLearner> GmaxScaler<L> {
    pub fn new(inner: L) -> Self {
        GmaxScaler {
            inner,
            tracker: GmaxTracker::new(),
        }
    }

    pub fn g_max(&self) -> f64 {
        self.tracker.g_max()
    }

    pub fn inner(&self) -> &L {
        &self.inner
    }

    /// Updates g_max and returns the gradient to hand to the wrapped learner.
    pub fn forward(&mut self, g: &GradientVector) -> GradientVector {
        self.tracker.forward(g)
    }
}

impl<L: OnlineLearner> OnlineLearner for GmaxScaler<L> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn round(&self) -> u64 {
        self.inner.round()
    }

    fn predict(&self) -> Result<LearnerStep> {
        self.inner.predict()
    }

    fn update(&mut self, g: &GradientVector) -> Result<()> {
        check_dim(self.dim(), g.dim())?;
        let forwarded = self.forward(g);
        self.inner.update(&forwarded)
    }

    fn wealth(&self) -> Option<f64> {
        self.inner.wealth()
    }

    fn name(&self) -> String {
        format!("gmax({})", self.inner.name())
    }
}

/// Adds the ‖g‖²-weighted average of past iterates to the current iterate:
/// reported w_t + w̄_t, where w̄_t = Σ ‖g_s‖² w_s / Σ ‖g_s‖² over rounds s < t.
#[derive(Debug, Clone)]
pub struct MomentumOffset<L> {
    inner: L,
    weighted_sum: Vec<f64>,
    weight_total: f64,
    norm: Norm,
}

impl<L: OnlineLearner> MomentumOffset<L> {
    /// `norm` is the norm applied to gradients for the weights; the learners in
    /// this crate measure gradients in L1.
    pub fn new(inner: L, norm: Norm) -> Self {
        let d = inner.dim();
        MomentumOffset {
            inner,
            weighted_sum: vec![0.0; d],
            weight_total: 0.0,
            norm,
        }
    }

    pub fn inner(&self) -> &L {
        &self.inner
    }

    pub fn weight_total(&self) -> f64 {
        self.weight_total
    }

    /// w̄, or zero before any nonzero gradient.
    pub fn average(&self) -> Vec<f64> {
        if self.weight_total == 0.0 {
            return vec![0.0; self.weighted_sum.len()];
        }
        self.weighted_sum
            .iter()
            .map(|s| s / self.weight_total)
            .collect()
    }

    /// Inner iterate plus the weighted average of past inner iterates.
    pub fn momentum_iterate(&self) -> Result<Vec<f64>> {
        let step = self.inner.predict()?;
        Ok(step
            .iterate
            .iter()
            .zip(self.average())
            .map(|(w, bar)| w + bar)
            .collect())
    }
}

impl<L: OnlineLearner> OnlineLearner for MomentumOffset<L> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn round(&self) -> u64 {
        self.inner.round()
    }

    fn predict(&self) -> Result<LearnerStep> {
        Ok(LearnerStep {
            iterate: self.momentum_iterate()?,
            round: self.inner.round() + 1,
        })
    }

    fn update(&mut self, g: &GradientVector) -> Result<()> {
        check_dim(self.dim(), g.dim())?;
        let w = self.inner.predict()?.iterate;
        let weight = g.norm(self.norm).powi(2);
        self.inner.update(g)?;
        for (s, wi) in self.weighted_sum.iter_mut().zip(&w) {
            *s += weight * wi;
        }
        self.weight_total += weight;
        Ok(())
    }

    fn gradient_bound(&self) -> Option<NormBound> {
        self.inner.gradient_bound()
    }

    fn wealth(&self) -> Option<f64> {
        self.inner.wealth()
    }

    fn name(&self) -> String {
        format!("momentum({})", self.inner.name())
    }
}

/// Which per-coordinate statistic retires the initial fraction clamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClampStatistic {
    /// Σ z_{t,i}², the squared gradients seen by the coordinate's fraction learner.
    InnerGradientSquares,
    /// Σ v_{t,i}², the squared betting fractions actually played.
    FractionSquares,
}

pub const DEFAULT_CLAMP_THRESHOLD: f64 = 0.1;

/// Keeps each coordinate's betting fraction within ±threshold until that
/// coordinate's statistic reaches 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitFractionClamp {
    threshold: f64,
    statistic: ClampStatistic,
    accumulators: Vec<f64>,
}

impl InitFractionClamp {
    pub fn new(dim: usize) -> Self {
        Self::with_options(dim, DEFAULT_CLAMP_THRESHOLD, ClampStatistic::InnerGradientSquares)
    }

    pub fn with_options(dim: usize, threshold: f64, statistic: ClampStatistic) -> Self {
        InitFractionClamp {
            threshold,
            statistic,
            accumulators: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.accumulators.len()
    }

    pub fn statistic(&self) -> ClampStatistic {
        self.statistic
    }

    pub fn accumulator(&self, coord: usize) -> f64 {
        self.accumulators[coord]
    }

    pub fn is_active(&self, coord: usize) -> bool {
        self.accumulators[coord] < 1.0
    }

    /// Feeds one round of coordinate `coord`: its inner gradient `z` and the
    /// fraction `v_played` it bet with.
    pub fn observe(&mut self, coord: usize, z: f64, v_played: f64) {
        let x = match self.statistic {
            ClampStatistic::InnerGradientSquares => z,
            ClampStatistic::FractionSquares => v_played,
        };
        self.accumulators[coord] += x * x;
    }

    pub fn clamp_fraction(&self, v: f64, coord: usize) -> f64 {
        if self.is_active(coord) {
            clip(v, -self.threshold, self.threshold)
        } else {
            v
        }
    }
}
