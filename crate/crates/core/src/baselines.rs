//! Reference learners: diagonal Adagrad and the fixed-fraction bettor.

use crate::error::{Error, Result};
use crate::learner::{check_dim, LearnerStep, NormBound, OnlineLearner, WealthLedger};
use crate::vectorlab::{dot, norm, GradientVector, Norm};

pub const DEFAULT_ADAGRAD_GUARD: f64 = 1e-8;

/// Diagonal Adagrad: w_i ← w_i − lr·g_i / (√(Σ g_i²) + guard).
#[derive(Debug, Clone)]
pub struct Adagrad {
    w: Vec<f64>,
    accumulator: Vec<f64>,
    learning_rate: f64,
    epsilon_div: f64,
    round: u64,
}

impl Adagrad {
    pub fn new(dim: usize, learning_rate: f64) -> Result<Self> {
        Self::with_guard(dim, learning_rate, DEFAULT_ADAGRAD_GUARD)
    }

    pub fn with_guard(dim: usize, learning_rate: f64, epsilon_div: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dim must be positive".into()));
        }
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        if !(epsilon_div > 0.0) {
            return Err(Error::InvalidArgument("guard must be positive".into()));
        }
        Ok(Adagrad {
            w: vec![0.0; dim],
            accumulator: vec![0.0; dim],
            learning_rate,
            epsilon_div,
            round: 0,
        })
    }

    pub fn accumulator(&self) -> &[f64] {
        &self.accumulator
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }
}

impl OnlineLearner for Adagrad {
    fn dim(&self) -> usize {
        self.w.len()
    }

    fn round(&self) -> u64 {
        self.round
    }

    fn predict(&self) -> Result<LearnerStep> {
        Ok(LearnerStep {
            iterate: self.w.clone(),
            round: self.round + 1,
        })
    }

    fn update(&mut self, g: &GradientVector) -> Result<()> {
        check_dim(self.dim(), g.dim())?;
        for ((w, acc), gi) in self.w.iter_mut().zip(&mut self.accumulator).zip(g.iter()) {
            *acc += gi * gi;
            *w -= self.learning_rate * gi / (acc.sqrt() + self.epsilon_div);
        }
        self.round += 1;
        Ok(())
    }

    fn name(&self) -> String {
        "adagrad".into()
    }
}

/// Always bets the same fraction: w_t = Wealth_{t−1}·v̊.
#[derive(Debug, Clone)]
pub struct FixedFractionBettor {
    v_star: Vec<f64>,
    ledger: WealthLedger,
    norm: Norm,
    round: u64,
}

impl FixedFractionBettor {
    /// `norm` measures iterates; gradients are then bounded in its dual.
    pub fn new(epsilon: f64, v_star: Vec<f64>, norm_kind: Norm) -> Result<Self> {
        let size = norm(&v_star, norm_kind);
        if !(size <= 0.5) {
            return Err(Error::InvalidArgument(format!(
                "fixed fraction must have norm <= 1/2, got {size}"
            )));
        }
        Ok(FixedFractionBettor {
            v_star,
            ledger: WealthLedger::new(epsilon)?,
            norm: norm_kind,
            round: 0,
        })
    }

    pub fn ledger(&self) -> &WealthLedger {
        &self.ledger
    }
}

impl OnlineLearner for FixedFractionBettor {
    fn dim(&self) -> usize {
        self.v_star.len()
    }

    fn round(&self) -> u64 {
        self.round
    }

    fn predict(&self) -> Result<LearnerStep> {
        let wealth = self.ledger.wealth();
        Ok(LearnerStep {
            iterate: self.v_star.iter().map(|v| v * wealth).collect(),
            round: self.round + 1,
        })
    }

    fn update(&mut self, g: &GradientVector) -> Result<()> {
        check_dim(self.dim(), g.dim())?;
        NormBound::new(self.norm.dual(), 1.0).check(g)?;
        let wealth = self.ledger.wealth();
        self.ledger.record(wealth * dot(g, &self.v_star));
        self.round += 1;
        Ok(())
    }

    fn gradient_bound(&self) -> Option<NormBound> {
        Some(NormBound::new(self.norm.dual(), 1.0))
    }

    fn wealth(&self) -> Option<f64> {
        Some(self.ledger.wealth())
    }

    fn name(&self) -> String {
        "fixed-fraction".into()
    }
}

/// ε·∏(1 − g_t·v̊).
pub fn fixed_fraction_run(epsilon: f64, v_star: &[f64], gradients: &[GradientVector]) -> Result<f64> {
    let mut wealth = epsilon;
    for g in gradients {
        check_dim(v_star.len(), g.dim())?;
        wealth *= 1.0 - dot(g, v_star);
    }
    Ok(wealth)
}

/// S = Σ g_t·u and Q = Σ (g_t·u)² for u = ẘ/‖ẘ‖.
fn direction_stats(gradients: &[GradientVector], comparator: &[f64], norm_kind: Norm) -> (Vec<f64>, f64, f64) {
    let size = norm(comparator, norm_kind);
    let u: Vec<f64> = comparator.iter().map(|c| c / size).collect();
    let mut s = 0.0;
    let mut q = 0.0;
    for g in gradients {
        let p = dot(g, &u);
        s += p;
        q += p * p;
    }
    (u, s, q)
}

/// The hindsight-optimal fixed fraction along ẘ/‖ẘ‖:
/// v̊ = −u·S / (2|S| + 2Q).
pub fn optimal_fixed_fraction(
    gradients: &[GradientVector],
    comparator: &[f64],
    norm_kind: Norm,
) -> Result<Vec<f64>> {
    if norm(comparator, norm_kind) == 0.0 {
        return Err(Error::InvalidArgument("comparator must be nonzero".into()));
    }
    let (u, s, q) = direction_stats(gradients, comparator, norm_kind);
    let denom = 2.0 * s.abs() + 2.0 * q;
    if denom == 0.0 {
        return Ok(vec![0.0; u.len()]);
    }
    Ok(u.iter().map(|ui| -ui * s / denom).collect())
}

/// ε·exp[S² / (4|S| + 4Q)], the guaranteed wealth of the optimal fixed fraction.
pub fn fixed_fraction_wealth_lower_bound(
    epsilon: f64,
    gradients: &[GradientVector],
    comparator: &[f64],
    norm_kind: Norm,
) -> f64 {
    let (_, s, q) = direction_stats(gradients, comparator, norm_kind);
    let denom = 4.0 * s.abs() + 4.0 * q;
    if denom == 0.0 {
        return epsilon;
    }
    epsilon * (s * s / denom).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::play;
    use crate::vectorlab::SeededRng;
    use proptest::prelude::*;

    fn gv(v: &[f64]) -> GradientVector {
        GradientVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn adagrad_single_step() {
        let mut a = Adagrad::new(2, 1.0).unwrap();
        a.update(&gv(&[1.0, 0.0])).unwrap();
        assert_eq!(a.accumulator(), &[1.0, 0.0]);
        let w = a.predict().unwrap().iterate;
        assert_eq!(w, vec![-1.0 / (1.0 + 1e-8), 0.0]);
    }

    #[test]
    fn adagrad_zero_gradient_is_noop() {
        let mut a = Adagrad::new(3, 0.1).unwrap();
        a.update(&gv(&[0.5, -0.2, 1.0])).unwrap();
        let before = a.predict().unwrap().iterate;
        a.update(&GradientVector::zeros(3)).unwrap();
        assert_eq!(a.predict().unwrap().iterate, before);
    }

    #[test]
    fn adagrad_two_steps() {
        let mut a = Adagrad::new(1, 1.0).unwrap();
        a.update(&gv(&[1.0])).unwrap();
        a.update(&gv(&[1.0])).unwrap();
        let expected = -1.0 / (1.0 + 1e-8) - 1.0 / (2f64.sqrt() + 1e-8);
        let w = a.predict().unwrap().iterate[0];
        assert_eq!(w, expected);
        assert!((w + 1.70711).abs() < 1e-5);
    }

    #[test]
    fn adagrad_rejects_bad_rate() {
        assert!(Adagrad::new(2, 0.0).is_err());
        assert!(Adagrad::new(2, f64::NAN).is_err());
    }

    #[test]
    fn fixed_fraction_examples() {
        let grads = vec![gv(&[-1.0]), gv(&[-1.0])];
        assert_eq!(fixed_fraction_run(1.0, &[0.0], &grads).unwrap(), 1.0);
        assert_eq!(fixed_fraction_run(1.0, &[0.5], &grads).unwrap(), 2.25);

        let mut b = FixedFractionBettor::new(1.0, vec![0.5], Norm::Linf).unwrap();
        let ledger = play(&mut b, &grads).unwrap();
        assert_eq!(b.wealth(), Some(2.25));
        assert_eq!(ledger.rounds(), 2);
        assert!(FixedFractionBettor::new(1.0, vec![0.6], Norm::Linf).is_err());
    }

    #[test]
    fn adagrad_permutation_equivariance() {
        let mut rng = SeededRng::new(12);
        let perm = [2usize, 0, 3, 1];
        let mut a = Adagrad::new(4, 0.3).unwrap();
        let mut b = Adagrad::new(4, 0.3).unwrap();
        for _ in 0..100 {
            let g: Vec<f64> = (0..4).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let pg: Vec<f64> = perm.iter().map(|&i| g[i]).collect();
            a.update(&gv(&g)).unwrap();
            b.update(&gv(&pg)).unwrap();
        }
        let wa = a.predict().unwrap().iterate;
        let wb = b.predict().unwrap().iterate;
        for (k, &i) in perm.iter().enumerate() {
            assert_eq!(wb[k], wa[i]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn optimal_fraction_meets_wealth_lower_bound(seed in any::<u64>(), len in 1usize..60) {
            let mut rng = SeededRng::new(seed);
            let d = 3;
            let bias: Vec<f64> = (0..d).map(|_| rng.uniform(-0.3, 0.3)).collect();
            let grads: Vec<GradientVector> = (0..len)
                .map(|_| {
                    let raw: Vec<f64> = (0..d).map(|i| bias[i] + rng.uniform(-1.0, 1.0)).collect();
                    let n = norm(&raw, Norm::L1).max(1.0);
                    gv(&raw.iter().map(|x| x / n).collect::<Vec<_>>())
                })
                .collect();
            let comparator: Vec<f64> = (0..d).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let v = optimal_fixed_fraction(&grads, &comparator, Norm::Linf).unwrap();
            prop_assert!(norm(&v, Norm::Linf) <= 0.5);
            let wealth = fixed_fraction_run(1.0, &v, &grads).unwrap();
            let bound = fixed_fraction_wealth_lower_bound(1.0, &grads, &comparator, Norm::Linf);
            prop_assert!(wealth >= bound * (1.0 - 1e-12), "wealth {} < bound {}", wealth, bound);
        }
    }
}
