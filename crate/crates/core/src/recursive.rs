//! The outer coin-betting learner. It bets `w_t = Wealth_{t−1}·v_t` where the
//! betting fraction `v_t` comes from an arbitrary inner learner, and feeds the
//! inner learner the gradient of `v ↦ −log(1 − g_t·v)` at `v_t`.
//!
//! Iterates are measured in L∞ (so gradients in L1, ‖g‖_1 ≤ 1) and the inner
//! learner must keep ‖v_t‖_∞ ≤ 1/2. Under those two contracts
//! `‖z_t‖_∞ ≤ 2‖g_t‖_∞`, so by default the inner learner receives `z_t / 2`.
//!
//! The update never needs the wealth itself, only `v_t`. Wealth is booked twice:
//! in a [`WealthLedger`] as ε − Σ g_t·w_t, and as
//! log ε + Σ log(1 − g_t·v_t). On a persistently biased stream wealth grows
//! exponentially and eventually leaves the f64 range; from then on the ledger
//! is frozen, `log_wealth` stays exact, and `predict` reports
//! [`Error::WealthOverflow`].

use crate::diag::{DiagConfig, DiagOptimizer, FRACTION_LIMIT};
use crate::error::{Error, Result};
use crate::learner::{
    check_dim, LearnerStep, NormBound, OnlineLearner, WealthLedger, CONTRACT_SLACK,
};
use crate::vectorlab::{dot, norm, GradientVector, Norm};

pub const DEFAULT_INNER_GRADIENT_SCALE: f64 = 0.5;

/// Below this the run is aborted instead of continuing in subnormal range.
pub const WEALTH_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct RecursiveOptimizer<I> {
    ledger: WealthLedger,
    log_wealth: f64,
    // the ledger stopped at the first non-finite wealth
    overflowed: bool,
    inner: I,
    inner_gradient_scale: f64,
    // v_t, requested from the inner learner once per round.
    fraction: Vec<f64>,
    round: u64,
    last_z: Vec<f64>,
}

impl RecursiveOptimizer<DiagOptimizer> {
    /// The standard stack: a diagonal inner learner holding `config.epsilon`
    /// of its own initial wealth.
    pub fn with_diag(dim: usize, epsilon: f64, config: DiagConfig) -> Result<Self> {
        RecursiveOptimizer::new(epsilon, DiagOptimizer::with_config(dim, config)?)
    }
}

impl<I: OnlineLearner> RecursiveOptimizer<I> {
    pub fn new(epsilon: f64, inner: I) -> Result<Self> {
        let ledger = WealthLedger::new(epsilon)?;
        let fraction = checked_fraction(&inner)?;
        Ok(RecursiveOptimizer {
            log_wealth: epsilon.ln(),
            overflowed: false,
            ledger,
            inner,
            inner_gradient_scale: DEFAULT_INNER_GRADIENT_SCALE,
            fraction,
            round: 0,
            last_z: Vec::new(),
        })
    }

    /// Use scale 1 for an inner learner that accepts ‖z‖_∞ ≤ 2 directly.
    pub fn with_inner_gradient_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "inner gradient scale must be positive, got {scale}"
            )));
        }
        self.inner_gradient_scale = scale;
        Ok(self)
    }

    pub fn inner_gradient_scale(&self) -> f64 {
        self.inner_gradient_scale
    }

    /// Linear wealth bookkeeping; frozen once wealth overflows.
    pub fn ledger(&self) -> &WealthLedger {
        &self.ledger
    }

    /// log Wealth_t = log ε + Σ log(1 − g_s·v_s); finite even after the
    /// linear wealth overflows.
    pub fn log_wealth(&self) -> f64 {
        self.log_wealth
    }

    fn current_wealth(&self) -> f64 {
        if self.overflowed {
            self.log_wealth.exp()
        } else {
            self.ledger.wealth()
        }
    }

    pub fn inner(&self) -> &I {
        &self.inner
    }

    /// The betting fraction v_t for the upcoming round.
    pub fn betting_fraction(&self) -> &[f64] {
        &self.fraction
    }

    /// z_t = g_t / (1 − g_t·v_t) from the most recent update, before scaling.
    pub fn last_z(&self) -> &[f64] {
        &self.last_z
    }
}

fn checked_fraction<I: OnlineLearner>(inner: &I) -> Result<Vec<f64>> {
    let v = inner.predict()?.iterate;
    let size = norm(&v, Norm::Linf);
    if size > FRACTION_LIMIT * (1.0 + CONTRACT_SLACK) {
        return Err(Error::contract(
            "inner learner emitted betting fraction with Linf norm above 1/2",
            size,
            FRACTION_LIMIT,
        ));
    }
    Ok(v)
}

impl<I: OnlineLearner> OnlineLearner for RecursiveOptimizer<I> {
    fn dim(&self) -> usize {
        self.fraction.len()
    }

    fn round(&self) -> u64 {
        self.round
    }

    fn predict(&self) -> Result<LearnerStep> {
        let wealth = self.current_wealth();
        if !wealth.is_finite() {
            return Err(Error::WealthOverflow {
                round: self.round,
                log_wealth: self.log_wealth,
            });
        }
        Ok(LearnerStep {
            iterate: self.fraction.iter().map(|v| wealth * v).collect(),
            round: self.round + 1,
        })
    }

    fn update(&mut self, g: &GradientVector) -> Result<()> {
        check_dim(self.dim(), g.dim())?;
        NormBound::new(Norm::L1, 1.0).check(g)?;
        let bet = dot(g, &self.fraction);
        let denom = 1.0 - bet;
        if denom <= 0.0 {
            return Err(Error::InvariantFailure(format!(
                "1 - g·v = {denom} is not positive"
            )));
        }
        let log_wealth = self.log_wealth + (-bet).ln_1p();
        if log_wealth < WEALTH_FLOOR.ln() {
            return Err(Error::WealthUnderflow {
                round: self.round + 1,
                wealth: log_wealth.exp(),
            });
        }
        let z: Vec<f64> = g.iter().map(|gi| gi / denom).collect();
        let forwarded = GradientVector::new(
            z.iter().map(|zi| zi * self.inner_gradient_scale).collect(),
        )?;
        self.inner.update(&forwarded)?;
        let fraction = checked_fraction(&self.inner)?;
        if !self.overflowed {
            let wealth = self.ledger.wealth();
            let mut next = self.ledger.clone();
            if next.record(wealth * bet).is_finite() {
                self.ledger = next;
            } else {
                self.overflowed = true;
            }
        }
        self.log_wealth = log_wealth;
        self.fraction = fraction;
        self.last_z = z;
        self.round += 1;
        Ok(())
    }

    fn gradient_bound(&self) -> Option<NormBound> {
        Some(NormBound::new(Norm::L1, 1.0))
    }

    fn wealth(&self) -> Option<f64> {
        Some(self.current_wealth())
    }

    fn name(&self) -> String {
        format!("recursive({})", self.inner.name())
    }
}
