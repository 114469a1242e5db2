//! One-dimensional coin bettor with a fixed FTRL regularizer per epoch and
//! doubling restarts.
//!
//! Within an epoch the fraction is `v ← clip(−2·Σz / A, −½, ½)` (η = 1, A
//! fixed). After each round the epoch's Σg² is compared against A; once
//! `2·Σg² > A` the epoch ends: A doubles and the FTRL sums and fraction reset.
//! Wealth is carried across epochs.

use serde::Serialize;

use crate::diag::{A_INIT, FRACTION_LIMIT};
use crate::error::{Error, Result};
use crate::learner::{ScalarBettor, CONTRACT_SLACK};
use crate::vectorlab::clip;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingState {
    /// Current epoch's regularizer strength.
    pub a: f64,
    /// 1-based epoch index.
    pub epoch: u32,
    /// Σ g² within the current epoch.
    pub z_epoch: f64,
    pub z_sum: f64,
    pub z_sq_sum: f64,
    pub wealth: f64,
    /// Fraction for the upcoming round.
    pub v: f64,
}

/// What happened in one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoublingTrace {
    /// Epoch the round was played in.
    pub epoch: u32,
    pub a: f64,
    pub v: f64,
    pub x: f64,
    pub g: f64,
    pub z: f64,
    /// The round ended its epoch.
    pub restarted: bool,
}

#[derive(Debug, Clone)]
pub struct DoublingBettor {
    state: DoublingState,
    a_init: f64,
    round: u64,
    last: Option<DoublingTrace>,
}

impl DoublingBettor {
    pub fn new(epsilon: f64) -> Result<Self> {
        Self::with_initial_a(epsilon, A_INIT)
    }

    pub fn with_initial_a(epsilon: f64, a_init: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(a_init > 0.0 && a_init.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "initial A must be positive, got {a_init}"
            )));
        }
        Ok(DoublingBettor {
            state: DoublingState {
                a: a_init,
                epoch: 1,
                z_epoch: 0.0,
                z_sum: 0.0,
                z_sq_sum: 0.0,
                wealth: epsilon,
                v: 0.0,
            },
            a_init,
            round: 0,
            last: None,
        })
    }

    pub fn state(&self) -> &DoublingState {
        &self.state
    }

    pub fn a_init(&self) -> f64 {
        self.a_init
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn last_trace(&self) -> Option<&DoublingTrace> {
        self.last.as_ref()
    }

    /// Plays one round with gradient `g ∈ [−1, 1]`.
    pub fn step(&mut self, g: f64) -> Result<DoublingTrace> {
        if !g.is_finite() || g.abs() > 1.0 + CONTRACT_SLACK {
            return Err(Error::contract("doubling bettor needs |g| <= 1", g.abs(), 1.0));
        }
        let g = g.clamp(-1.0, 1.0);
        let s = &mut self.state;
        let v = s.v;
        let x = v * s.wealth;
        s.wealth -= x * g;
        let z = g / (1.0 - g * v);
        s.z_sum += z;
        s.z_sq_sum += z * z;
        s.v = clip(-2.0 * s.z_sum / s.a, -FRACTION_LIMIT, FRACTION_LIMIT);
        s.z_epoch += g * g;
        let trace = DoublingTrace {
            epoch: s.epoch,
            a: s.a,
            v,
            x,
            g,
            z,
            restarted: 2.0 * s.z_epoch > s.a,
        };
        if trace.restarted {
            s.a *= 2.0;
            s.epoch += 1;
            s.z_epoch = 0.0;
            s.z_sum = 0.0;
            s.z_sq_sum = 0.0;
            s.v = 0.0;
        }
        self.round += 1;
        self.last = Some(trace);
        Ok(trace)
    }
}

impl ScalarBettor for DoublingBettor {
    fn predict(&self) -> f64 {
        self.state.v * self.state.wealth
    }

    fn update(&mut self, g: f64) -> Result<()> {
        self.step(g).map(|_| ())
    }

    fn wealth(&self) -> f64 {
        self.state.wealth
    }
}
