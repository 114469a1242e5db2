//! The online-learner protocol shared by every algorithm in the crate, plus
//! wealth and regret bookkeeping.
//!
//! A round is two-phase: [`OnlineLearner::predict`] reveals `w_t` without
//! touching state, then [`OnlineLearner::update`] consumes `g_t`. Harnesses can
//! therefore inspect (or wrap) the iterate before the gradient is known.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::vectorlab::{dot, norm, GradientVector, Norm};

/// Relative slack allowed when checking declared norm bounds, so that
/// gradients rescaled to exactly norm 1 are not rejected over rounding.
pub const CONTRACT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnerStep {
    pub iterate: Vec<f64>,
    /// 1-based round this iterate is played in.
    pub round: u64,
}

/// A learner's declared input contract: `‖g‖ ≤ bound` in the given norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormBound {
    pub norm: Norm,
    pub bound: f64,
}

impl NormBound {
    pub fn new(norm: Norm, bound: f64) -> Self {
        NormBound { norm, bound }
    }

    pub fn check(&self, g: &[f64]) -> Result<()> {
        let observed = norm(g, self.norm);
        if observed > self.bound * (1.0 + CONTRACT_SLACK) {
            return Err(Error::contract(
                format!("gradient {} norm exceeds declared bound", self.norm),
                observed,
                self.bound,
            ));
        }
        Ok(())
    }
}

pub trait OnlineLearner {
    fn dim(&self) -> usize;

    /// Completed updates so far.
    fn round(&self) -> u64;

    /// The iterate for the upcoming round. Never mutates state.
    fn predict(&self) -> Result<LearnerStep>;

    /// Consumes the gradient for the current round and advances the round counter.
    fn update(&mut self, g: &GradientVector) -> Result<()>;

    /// The norm bound gradients must satisfy, if the learner has one.
    fn gradient_bound(&self) -> Option<NormBound> {
        None
    }

    /// Current total wealth, for betting learners.
    fn wealth(&self) -> Option<f64> {
        None
    }

    fn name(&self) -> String;
}

impl<L: OnlineLearner + ?Sized> OnlineLearner for Box<L> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn round(&self) -> u64 {
        (**self).round()
    }
    fn predict(&self) -> Result<LearnerStep> {
        (**self).predict()
    }
    fn update(&mut self, g: &GradientVector) -> Result<()> {
        (**self).update(g)
    }
    fn gradient_bound(&self) -> Option<NormBound> {
        (**self).gradient_bound()
    }
    fn wealth(&self) -> Option<f64> {
        (**self).wealth()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Wealth_t = ε − Σ_{s≤t} g_s·w_s.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WealthLedger {
    epsilon: f64,
    wealth: f64,
    cumulative_payout: f64,
}

impl WealthLedger {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "initial wealth must be positive, got {epsilon}"
            )));
        }
        Ok(WealthLedger {
            epsilon,
            wealth: epsilon,
            cumulative_payout: 0.0,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn wealth(&self) -> f64 {
        self.wealth
    }

    pub fn cumulative_payout(&self) -> f64 {
        self.cumulative_payout
    }

    /// Books a round's loss `g·w` and returns the new wealth.
    pub fn record(&mut self, payout: f64) -> f64 {
        self.wealth -= payout;
        self.cumulative_payout += payout;
        self.wealth
    }

    /// |wealth − (ε − payout)| relative to the magnitudes involved.
    pub fn consistency_error(&self) -> f64 {
        let scale = self.epsilon.abs() + self.cumulative_payout.abs() + self.wealth.abs();
        (self.wealth - (self.epsilon - self.cumulative_payout)).abs() / scale
    }
}

/// Per-round gradients and payouts, for computing R_T(ẘ) after the fact.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RegretLedger {
    dim: usize,
    keep_history: bool,
    gradient_history: Vec<GradientVector>,
    iterate_payouts: Vec<f64>,
    gradient_sum: Vec<f64>,
    payout_sum: f64,
    rounds: u64,
}

impl RegretLedger {
    pub fn new(dim: usize) -> Self {
        RegretLedger {
            dim,
            keep_history: true,
            gradient_sum: vec![0.0; dim],
            ..Default::default()
        }
    }

    /// Keeps only running sums; enough for [`RegretLedger::regret_at`] but not
    /// for the energy statistics.
    pub fn summary_only(dim: usize) -> Self {
        RegretLedger {
            keep_history: false,
            ..Self::new(dim)
        }
    }

    pub fn record(&mut self, g: &GradientVector, w: &[f64]) -> Result<()> {
        check_dim(self.dim, g.dim())?;
        check_dim(self.dim, w.len())?;
        let payout = dot(g, w);
        for (s, gi) in self.gradient_sum.iter_mut().zip(g.iter()) {
            *s += gi;
        }
        self.payout_sum += payout;
        self.rounds += 1;
        if self.keep_history {
            self.gradient_history.push(g.clone());
            self.iterate_payouts.push(payout);
        }
        Ok(())
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn gradients(&self) -> &[GradientVector] {
        &self.gradient_history
    }

    pub fn payouts(&self) -> &[f64] {
        &self.iterate_payouts
    }

    pub fn gradient_sum(&self) -> &[f64] {
        &self.gradient_sum
    }

    /// R_T(ẘ) = Σ g_t·w_t − (Σ g_t)·ẘ.
    pub fn regret_at(&self, comparator: &[f64]) -> Result<f64> {
        check_dim(self.dim, comparator.len())?;
        Ok(self.payout_sum - dot(&self.gradient_sum, comparator))
    }

    /// Σ_t (g_t·u)².
    pub fn directional_energy(&self, u: &[f64]) -> Result<f64> {
        self.require_history()?;
        check_dim(self.dim, u.len())?;
        Ok(self
            .gradient_history
            .iter()
            .map(|g| dot(g, u).powi(2))
            .sum())
    }

    /// G_i = Σ_t g_{t,i}².
    pub fn coordinate_energy(&self) -> Result<Vec<f64>> {
        self.require_history()?;
        let mut energy = vec![0.0; self.dim];
        for g in &self.gradient_history {
            for (e, gi) in energy.iter_mut().zip(g.iter()) {
                *e += gi * gi;
            }
        }
        Ok(energy)
    }

    fn require_history(&self) -> Result<()> {
        if !self.keep_history && self.rounds > 0 {
            return Err(Error::InvalidArgument(
                "ledger was created without gradient history".into(),
            ));
        }
        Ok(())
    }
}

/// Plays `learner` against a fixed gradient sequence and returns the ledger.
pub fn play<L: OnlineLearner + ?Sized>(
    learner: &mut L,
    gradients: &[GradientVector],
) -> Result<RegretLedger> {
    let mut ledger = RegretLedger::new(learner.dim());
    for (t, g) in gradients.iter().enumerate() {
        let step = learner.predict().map_err(|e| e.at_step(t as u64 + 1))?;
        learner.update(g).map_err(|e| e.at_step(t as u64 + 1))?;
        ledger.record(g, &step.iterate)?;
    }
    Ok(ledger)
}

/// A one-dimensional learner, liftable to d dimensions with [`PerCoordinate`].
pub trait ScalarBettor {
    fn predict(&self) -> f64;
    fn update(&mut self, g: f64) -> Result<()>;
    fn wealth(&self) -> f64;
}

/// Runs an independent copy of a 1-D bettor on each coordinate.
///
/// Coordinates must satisfy |g_i| ≤ 1, i.e. ‖g‖_∞ ≤ 1.
#[derive(Debug, Clone)]
pub struct PerCoordinate<B> {
    coords: Vec<B>,
    round: u64,
    label: String,
}

impl<B: ScalarBettor> PerCoordinate<B> {
    pub fn new(coords: Vec<B>, label: impl Into<String>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("need at least one coordinate".into()));
        }
        Ok(PerCoordinate {
            coords,
            round: 0,
            label: label.into(),
        })
    }

    pub fn coords(&self) -> &[B] {
        &self.coords
    }
}

impl<B: ScalarBettor> OnlineLearner for PerCoordinate<B> {
    fn dim(&self) -> usize {
        self.coords.len()
    }

    fn round(&self) -> u64 {
        self.round
    }

    fn predict(&self) -> Result<LearnerStep> {
        Ok(LearnerStep {
            iterate: self.coords.iter().map(|c| c.predict()).collect(),
            round: self.round + 1,
        })
    }

    fn update(&mut self, g: &GradientVector) -> Result<()> {
        check_dim(self.dim(), g.dim())?;
        NormBound::new(Norm::Linf, 1.0).check(g)?;
        for (c, gi) in self.coords.iter_mut().zip(g.iter()) {
            c.update(gi.clamp(-1.0, 1.0))?;
        }
        self.round += 1;
        Ok(())
    }

    fn gradient_bound(&self) -> Option<NormBound> {
        Some(NormBound::new(Norm::Linf, 1.0))
    }

    fn wealth(&self) -> Option<f64> {
        Some(self.coords.iter().map(|c| c.wealth()).sum())
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gv(v: &[f64]) -> GradientVector {
        GradientVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn regret_of_empty_history_is_zero() {
        let ledger = RegretLedger::new(3);
        assert_eq!(ledger.regret_at(&[1.0, -2.0, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn regret_direct_formula() {
        let mut ledger = RegretLedger::new(2);
        ledger.record(&gv(&[1.0, 0.0]), &[0.0, 0.0]).unwrap();
        assert_eq!(ledger.regret_at(&[1.0, 0.0]).unwrap(), -1.0);

        let mut ledger = RegretLedger::new(1);
        for _ in 0..3 {
            ledger.record(&gv(&[1.0]), &[0.0]).unwrap();
        }
        assert_eq!(ledger.regret_at(&[-0.5]).unwrap(), 1.5);
        assert_eq!(ledger.payouts().len(), 3);
        assert_eq!(ledger.gradients().len(), 3);
    }

    #[test]
    fn regret_dimension_mismatch() {
        let ledger = RegretLedger::new(2);
        assert!(matches!(
            ledger.regret_at(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn summary_ledger_refuses_energy_queries() {
        let mut ledger = RegretLedger::summary_only(1);
        ledger.record(&gv(&[0.5]), &[1.0]).unwrap();
        assert_eq!(ledger.regret_at(&[0.0]).unwrap(), 0.5);
        assert!(ledger.coordinate_energy().is_err());
    }

    #[test]
    fn wealth_ledger_tracks_payouts() {
        let mut w = WealthLedger::new(1.0).unwrap();
        assert_eq!(w.record(0.25), 0.75);
        assert_eq!(w.record(-1.0), 1.75);
        assert_eq!(w.cumulative_payout(), -0.75);
        assert!(w.consistency_error() < 1e-15);
        assert!(WealthLedger::new(0.0).is_err());
        assert!(WealthLedger::new(-1.0).is_err());
    }

    #[test]
    fn norm_bound_rejects_oversized_gradients() {
        let b = NormBound::new(Norm::L1, 1.0);
        assert!(b.check(&[0.5, -0.5]).is_ok());
        assert!(b.check(&[0.5, 0.6]).is_err());
        // rounding-level excess is tolerated
        assert!(b.check(&[1.0 + 1e-15]).is_ok());
    }

    proptest! {
        #[test]
        fn regret_is_affine_in_comparator(
            seed in any::<u64>(),
            rounds in 1usize..40,
        ) {
            let mut rng = crate::vectorlab::SeededRng::new(seed);
            let d = 4;
            let mut ledger = RegretLedger::new(d);
            for _ in 0..rounds {
                let g: Vec<f64> = (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect();
                let w: Vec<f64> = (0..d).map(|_| rng.uniform(-5.0, 5.0)).collect();
                ledger.record(&gv(&g), &w).unwrap();
            }
            let a: Vec<f64> = (0..d).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let b: Vec<f64> = (0..d).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let combo = ledger.regret_at(&a).unwrap() + ledger.regret_at(&b).unwrap()
                - ledger.regret_at(&[0.0; 4]).unwrap()
                - ledger.regret_at(&ab).unwrap();
            prop_assert!(combo.abs() < 1e-10);
        }
    }
}
