//! Brute-force reference computations and the randomized property suite run
//! by `betfree verify`.
//!
//! Each oracle evaluates its objective on a fixed grid and shares no code with
//! the closed forms it checks.

use serde::Serialize;

use crate::diag::ftrl_fraction;
use crate::theory::{balancelog_bound, fenchel_conjugate_exp, log_one_minus_gap, log_sum_pair};
use crate::vectorlab::SeededRng;

pub const CONJUGATE_GRID_STEP: f64 = 1e-4;
pub const CONJUGATE_GRID_HALF_WIDTH: f64 = 50.0;
pub const CONJUGATE_TOLERANCE: f64 = 1e-3;
pub const BALANCE_GRID_STEP: f64 = 1e-4;
pub const BALANCE_TOLERANCE: f64 = 1e-9;
pub const FRACTION_GRID_STEP: f64 = 1e-4;

/// sup over x ∈ [−50, 50] (step 1e-4) of y·x − a·exp(b·x).
pub fn grid_conjugate_exp(a: f64, b: f64, y: f64) -> f64 {
    let n = (2.0 * CONJUGATE_GRID_HALF_WIDTH / CONJUGATE_GRID_STEP).round() as i64;
    (0..=n)
        .map(|k| {
            let x = -CONJUGATE_GRID_HALF_WIDTH + k as f64 * CONJUGATE_GRID_STEP;
            y * x - a * (b * x).exp()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// min over x ∈ {1e-4, 2e-4, …, 1/2} of (A/x)·(log(B/x) − C) + D·x.
pub fn grid_balancelog(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let n = (0.5 / BALANCE_GRID_STEP).round() as i64;
    (1..=n)
        .map(|k| {
            let x = k as f64 * BALANCE_GRID_STEP;
            a / x * ((b / x).ln() - c) + d * x
        })
        .fold(f64::INFINITY, f64::min)
}

/// argmin over v ∈ [−½, ½] (step 1e-4) of Σz·v + v²·(5 + Σz²)/(4η).
pub fn grid_ftrl_fraction(z_history: &[f64], eta: f64) -> f64 {
    let s: f64 = z_history.iter().sum();
    let q: f64 = 5.0 + z_history.iter().map(|z| z * z).sum::<f64>();
    let n = (1.0 / FRACTION_GRID_STEP).round() as i64;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=n {
        let v = -0.5 + k as f64 * FRACTION_GRID_STEP;
        let val = s * v + v * v * q / (4.0 * eta);
        if val < best.0 {
            best = (val, v);
        }
    }
    best.1
}

/// Outcome of one randomized property.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub cases: usize,
    pub violations: usize,
    /// Largest observed excess over the allowed tolerance (≤ 0 when passing).
    pub worst: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

struct Tally {
    report: CheckReport,
}

impl Tally {
    fn new(name: &str) -> Self {
        Tally {
            report: CheckReport {
                name: name.into(),
                cases: 0,
                violations: 0,
                worst: f64::NEG_INFINITY,
            },
        }
    }

    /// Records a case whose `excess` must be ≤ 0.
    fn case(&mut self, excess: f64) {
        self.report.cases += 1;
        if !(excess <= 0.0) {
            self.report.violations += 1;
        }
        if excess > self.report.worst || excess.is_nan() {
            self.report.worst = excess;
        }
    }
}

/// Conjugate closed form against its grid oracle. Parameters are drawn so the
/// maximizer log(y/(ab))/b lies inside the grid.
pub fn check_conjugate(cases: usize, rng: &mut SeededRng) -> CheckReport {
    let mut t = Tally::new("fenchel conjugate vs grid sup");
    for _ in 0..cases {
        let a = rng.uniform(0.1, 10.0);
        let b = rng.uniform(0.2, 5.0);
        let y = rng.uniform(0.01, 20.0);
        let closed = fenchel_conjugate_exp(a, b, y).unwrap_or(f64::NAN);
        t.case((closed - grid_conjugate_exp(a, b, y)).abs() - CONJUGATE_TOLERANCE);
    }
    t.report
}

/// Balancing bound against the grid infimum, on the domain D ≥ A.
pub fn check_balancelog(cases: usize, rng: &mut SeededRng) -> CheckReport {
    let mut t = Tally::new("balancelog bound vs grid inf (D >= A)");
    for _ in 0..cases {
        let a = 10f64.powf(rng.uniform(-3.0, 1.0));
        let b = 10f64.powf(rng.uniform(-2.0, 4.0));
        let c = rng.uniform(0.0, 5.0);
        let d = a * 10f64.powf(rng.uniform(0.0, 6.0));
        t.case(grid_balancelog(a, b, c, d) - balancelog_bound(a, b, c, d) - BALANCE_TOLERANCE);
    }
    t.report
}

/// log(1 − x) ≥ −x − x² on a dense grid of [−100, ½].
pub fn check_log_one_minus(points: usize) -> CheckReport {
    let mut t = Tally::new("log(1-x) >= -x - x^2 on [-100, 1/2]");
    for k in 0..=points {
        let x = -100.0 + 100.5 * k as f64 / points as f64;
        t.case(-log_one_minus_gap(x));
    }
    t.report
}

/// Random z histories, |z| ≤ 2, lengths ≤ 200: closed-form fraction within
/// one grid step of the grid argmin.
pub fn check_ftrl_fraction(cases: usize, rng: &mut SeededRng) -> CheckReport {
    let mut t = Tally::new("ftrl fraction vs grid argmin");
    for _ in 0..cases {
        let len = rng.index(201);
        let bias = rng.uniform(-2.0, 2.0);
        let z: Vec<f64> = (0..len)
            .map(|_| (bias + rng.uniform(-2.0, 2.0)).clamp(-2.0, 2.0))
            .collect();
        let eta = rng.uniform(0.1, 2.0);
        let diff = (ftrl_fraction(&z, eta) - grid_ftrl_fraction(&z, eta)).abs();
        t.case(diff - FRACTION_GRID_STEP);
    }
    t.report
}

/// Σ z_t²/(5 + Σ_{s<t} z_s²) ≤ log(1 + Σ z_t²) for |z_t| ≤ 2.
pub fn check_log_sum(cases: usize, rng: &mut SeededRng) -> CheckReport {
    let mut t = Tally::new("FTRL log-sum inequality");
    for _ in 0..cases {
        let len = 1 + rng.index(500);
        let z: Vec<f64> = (0..len).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let (lhs, rhs) = log_sum_pair(&z);
        t.case(lhs - rhs);
    }
    t.report
}

/// Every check with its default size.
pub fn run_suite(seed: u64) -> Vec<CheckReport> {
    let mut rng = SeededRng::with_stream(seed, 7);
    vec![
        check_conjugate(1000, &mut rng),
        check_balancelog(1000, &mut rng),
        check_log_one_minus(1_000_000),
        check_ftrl_fraction(100, &mut rng),
        check_log_sum(1000, &mut rng),
    ]
}
