//! Synthetic absolute-loss experiments and their CSV output.
//!
//! Features are x ~ N(0, Σ) with a prescribed spectrum and the loss at round
//! t is ℓ_t(w) = |x_t·(w − ẘ)| for a target ẘ that is either the top or the
//! bottom eigenvector of Σ.
//!
//! One seed feeds three independent ChaCha streams: the covariance basis
//! (stream 0), the holdout set (stream 1) and the training samples
//! (stream 2). Every optimizer run with the same seed therefore sees the same
//! problem, holdout and training sequence.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::baselines::Adagrad;
use crate::diag::{DiagConfig, DiagOptimizer};
use crate::doubling::DoublingBettor;
use crate::error::{Error, Result};
use crate::learner::{OnlineLearner, PerCoordinate, RegretLedger};
use crate::recursive::{RecursiveOptimizer, DEFAULT_INNER_GRADIENT_SCALE};
use crate::safeguards::{GmaxScaler, GmaxTracker, InitFractionClamp, MomentumOffset};
use crate::vectorlab::{
    dot, make_covariance, sample_gaussian, CovarianceFactor, GradientVector, Norm, SeededRng,
    RNG_ALGORITHM,
};

pub const PROBLEM_STREAM: u64 = 0;
pub const HOLDOUT_STREAM: u64 = 1;
pub const TRAIN_STREAM: u64 = 2;

pub const CSV_HEADER: &str = "step,train_loss,holdout_loss,regret,wealth,g_max";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetMode {
    MinEig,
    MaxEig,
}

impl FromStr for TargetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min-eig" | "min_eig" => Ok(TargetMode::MinEig),
            "max-eig" | "max_eig" => Ok(TargetMode::MaxEig),
            other => Err(Error::Config(format!("unknown target mode '{other}'"))),
        }
    }
}

impl fmt::Display for TargetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetMode::MinEig => "min-eig",
            TargetMode::MaxEig => "max-eig",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    pub cov: CovarianceFactor,
    pub target: Vec<f64>,
    pub dim: usize,
    pub seed: u64,
    pub target_mode: TargetMode,
}

impl SyntheticProblem {
    pub fn new(dim: usize, cond: f64, target_mode: TargetMode, seed: u64) -> Result<Self> {
        let mut rng = SeededRng::with_stream(seed, PROBLEM_STREAM);
        let cov = make_covariance(dim, cond, &mut rng)?;
        let target = match target_mode {
            TargetMode::MaxEig => cov.eigenvector(0),
            TargetMode::MinEig => cov.eigenvector(dim - 1),
        };
        Ok(SyntheticProblem {
            cov,
            target,
            dim,
            seed,
            target_mode,
        })
    }
}

/// |x·(w − ẘ)| and its subgradient sign(x·(w − ẘ))·x, with sign(0) = 0.
pub fn loss_and_grad_at(x: &[f64], w: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    let r: f64 = x.iter().zip(w).zip(target).map(|((xi, wi), ti)| xi * (wi - ti)).sum();
    let s = if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    };
    (r.abs(), x.iter().map(|xi| s * xi).collect())
}

/// Draws x ~ N(0, Σ) and returns the loss and subgradient at `w`.
pub fn synthetic_loss_and_grad(
    problem: &SyntheticProblem,
    w: &[f64],
    rng: &mut SeededRng,
) -> Result<(f64, GradientVector)> {
    if w.len() != problem.dim {
        return Err(Error::DimensionMismatch {
            expected: problem.dim,
            got: w.len(),
        });
    }
    let x = sample_gaussian(&problem.cov, rng);
    let (loss, g) = loss_and_grad_at(&x, w, &problem.target);
    Ok((loss, GradientVector::new(g)?))
}

/// A fixed evaluation set: features and their targets x·ẘ.
#[derive(Debug, Clone)]
pub struct Holdout {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

impl Holdout {
    pub fn draw(problem: &SyntheticProblem, size: usize) -> Self {
        let mut rng = SeededRng::with_stream(problem.seed, HOLDOUT_STREAM);
        let features: Vec<Vec<f64>> = (0..size)
            .map(|_| sample_gaussian(&problem.cov, &mut rng).into_inner())
            .collect();
        let labels = features.iter().map(|x| dot(x, &problem.target)).collect();
        Holdout { features, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn mean_loss(&self, w: &[f64]) -> f64 {
        let total: f64 = self
            .features
            .iter()
            .zip(&self.labels)
            .map(|(x, y)| (dot(x, w) - y).abs())
            .sum();
        total / self.labels.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Recursive,
    Diag,
    Doubling1d,
    Adagrad,
}

impl OptimizerKind {
    pub fn is_betting(self) -> bool {
        !matches!(self, OptimizerKind::Adagrad)
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recursive" => Ok(OptimizerKind::Recursive),
            "diag" => Ok(OptimizerKind::Diag),
            "doubling1d" => Ok(OptimizerKind::Doubling1d),
            "adagrad" => Ok(OptimizerKind::Adagrad),
            other => Err(Error::Config(format!("unknown optimizer '{other}'"))),
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Recursive => "recursive",
            OptimizerKind::Diag => "diag",
            OptimizerKind::Doubling1d => "doubling1d",
            OptimizerKind::Adagrad => "adagrad",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub optimizer: OptimizerKind,
    pub dim: usize,
    pub steps: u64,
    pub seed: u64,
    pub epsilon: f64,
    pub eta: f64,
    /// Required for Adagrad, ignored otherwise.
    pub learning_rate: Option<f64>,
    pub cond_number: f64,
    pub target_mode: TargetMode,
    pub gmax_scale: bool,
    pub momentum: bool,
    pub init_clamp: bool,
    pub holdout_size: usize,
    pub eval_every: u64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            optimizer: OptimizerKind::Recursive,
            dim: 100,
            steps: 20_000,
            seed: 0,
            epsilon: 1.0,
            eta: 0.5,
            learning_rate: None,
            cond_number: 750.0,
            target_mode: TargetMode::MinEig,
            gmax_scale: true,
            momentum: false,
            init_clamp: false,
            holdout_size: 1000,
            eval_every: 100,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if self.holdout_size == 0 {
            return Err(Error::Config("holdout size must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be at least 1".into()));
        }
        if self.dim == 0 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if self.optimizer == OptimizerKind::Adagrad && self.learning_rate.is_none() {
            return Err(Error::Config("adagrad needs a learning rate".into()));
        }
        if self.init_clamp && !matches!(self.optimizer, OptimizerKind::Recursive | OptimizerKind::Diag) {
            return Err(Error::Config(format!(
                "the initial fraction clamp only applies to diagonal fractions, not '{}'",
                self.optimizer
            )));
        }
        Ok(())
    }
}

/// Builds the learner stack for `config`, outermost wrapper first:
/// momentum, g_max scaling, then the learner itself.
pub fn build_learner(config: &ExperimentConfig) -> Result<Box<dyn OnlineLearner>> {
    let d = config.dim;
    let diag_config = DiagConfig {
        epsilon: config.epsilon,
        eta: config.eta,
        split_epsilon: true,
        clamp: config.init_clamp.then(|| InitFractionClamp::new(d)),
    };
    let base: Box<dyn OnlineLearner> = match config.optimizer {
        OptimizerKind::Recursive => Box::new(RecursiveOptimizer::with_diag(d, config.epsilon, diag_config)?),
        OptimizerKind::Diag => Box::new(DiagOptimizer::with_config(d, diag_config)?),
        OptimizerKind::Doubling1d => {
            let coords = (0..d)
                .map(|_| DoublingBettor::new(config.epsilon / d as f64))
                .collect::<Result<Vec<_>>>()?;
            Box::new(PerCoordinate::new(coords, "doubling1d")?)
        }
        OptimizerKind::Adagrad => {
            let lr = config
                .learning_rate
                .ok_or_else(|| Error::Config("adagrad needs a learning rate".into()))?;
            Box::new(Adagrad::new(d, lr)?)
        }
    };
    let scaled: Box<dyn OnlineLearner> = if config.gmax_scale && config.optimizer.is_betting() {
        Box::new(GmaxScaler::new(base))
    } else {
        base
    };
    Ok(if config.momentum {
        Box::new(MomentumOffset::new(scaled, Norm::L1))
    } else {
        scaled
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub step: u64,
    /// Mean training loss over the rounds since the previous record.
    pub train_loss: f64,
    pub holdout_loss: f64,
    pub empirical_regret_at_target: f64,
    pub wealth: Option<f64>,
    pub g_max: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    /// Raw subgradients against the played iterates, kept independently of
    /// the per-round regret sum in `records`.
    pub ledger: RegretLedger,
    pub target: Vec<f64>,
    pub final_iterate: Vec<f64>,
}

impl RunOutcome {
    pub fn final_holdout_loss(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.holdout_loss)
    }
}

/// Runs the online loop and, when `config.output` is set, writes the CSV and
/// its `.meta.json` sidecar.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let problem = SyntheticProblem::new(config.dim, config.cond_number, config.target_mode, config.seed)?;
    let holdout = Holdout::draw(&problem, config.holdout_size);
    let mut learner = build_learner(config)?;
    let mut rng = SeededRng::with_stream(config.seed, TRAIN_STREAM);
    let mut ledger = RegretLedger::summary_only(config.dim);
    let mut tracker = GmaxTracker::new();
    let report_gmax = config.gmax_scale && config.optimizer.is_betting();

    let mut records = Vec::new();
    let mut regret = 0.0;
    let mut window_loss = 0.0;
    let mut window_len = 0u64;
    for step in 1..=config.steps {
        let w = learner.predict().map_err(|e| e.at_step(step))?.iterate;
        let (loss, g) = synthetic_loss_and_grad(&problem, &w, &mut rng)?;
        regret += dot(&g, &w) - dot(&g, &problem.target);
        ledger.record(&g, &w)?;
        tracker.forward(&g);
        learner.update(&g).map_err(|e| e.at_step(step))?;
        window_loss += loss;
        window_len += 1;
        if step % config.eval_every == 0 || step == config.steps {
            let live = learner.predict().map_err(|e| e.at_step(step))?.iterate;
            records.push(RunRecord {
                step,
                train_loss: window_loss / window_len as f64,
                holdout_loss: holdout.mean_loss(&live),
                empirical_regret_at_target: regret,
                wealth: learner.wealth(),
                g_max: report_gmax.then(|| tracker.g_max()),
            });
            window_loss = 0.0;
            window_len = 0;
        }
    }
    let final_iterate = learner.predict()?.iterate;
    if let Some(path) = &config.output {
        write_csv(path, &records)?;
        write_metadata(&metadata_path(path), config)?;
    }
    Ok(RunOutcome {
        records,
        ledger,
        target: problem.target,
        final_iterate,
    })
}

/// printf-style `%.12g`.
pub fn format_g12(x: f64) -> String {
    const PREC: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (PREC - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PREC).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (PREC - 1 - exp) as usize, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(format_g12).unwrap_or_default()
}

pub fn render_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.step,
            format_g12(r.train_loss),
            format_g12(r.holdout_loss),
            format_g12(r.empirical_regret_at_target),
            cell(r.wealth),
            cell(r.g_max),
        ));
    }
    out
}

pub fn write_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(render_csv(records).as_bytes())?;
    Ok(())
}

/// `run.csv` → `run.meta.json`.
pub fn metadata_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

#[derive(Serialize)]
struct Metadata<'a> {
    rng_algorithm: &'static str,
    rng_streams: [(&'static str, u64); 3],
    inner_gradient_scale: f64,
    config: &'a ExperimentConfig,
}

fn write_metadata(path: &Path, config: &ExperimentConfig) -> Result<()> {
    let meta = Metadata {
        rng_algorithm: RNG_ALGORITHM,
        rng_streams: [
            ("problem", PROBLEM_STREAM),
            ("holdout", HOLDOUT_STREAM),
            ("train", TRAIN_STREAM),
        ],
        inner_gradient_scale: DEFAULT_INNER_GRADIENT_SCALE,
        config,
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Adagrad learning rates tried when tuning the baseline.
pub const ADAGRAD_LR_GRID: [f64; 6] = [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];

/// (learning rate, run) of the best run and (learning rate, final holdout
/// loss) of every run in grid order.
pub type SweepResult = ((f64, RunOutcome), Vec<(f64, f64)>);

/// Runs Adagrad once per learning rate and keeps the run with the lowest
/// final holdout loss.
pub fn adagrad_lr_sweep(base: &ExperimentConfig, grid: &[f64]) -> Result<SweepResult> {
    let mut best: Option<(f64, RunOutcome)> = None;
    let mut all = Vec::with_capacity(grid.len());
    for &lr in grid {
        let config = ExperimentConfig {
            optimizer: OptimizerKind::Adagrad,
            learning_rate: Some(lr),
            output: None,
            ..base.clone()
        };
        let out = run_experiment(&config)?;
        let loss = out.final_holdout_loss();
        all.push((lr, loss));
        let better = match &best {
            None => true,
            Some((_, b)) => loss < b.final_holdout_loss(),
        };
        if better {
            best = Some((lr, out));
        }
    }
    let best = best.ok_or_else(|| Error::Config("empty learning-rate grid".into()))?;
    Ok((best, all))
}

/// Gradients g_t = x_t − √bias·x_min with x_t ~ N(0, Σ) and x_min the bottom
/// eigenvector of Σ, divided by the running maximum of ‖g‖_1 so that every
/// emitted gradient has ‖g‖_1 ≤ 1.
#[derive(Debug, Clone)]
pub struct BiasedGradientStream {
    cov: CovarianceFactor,
    shift: Vec<f64>,
    rng: SeededRng,
    tracker: GmaxTracker,
}

/// The biased stream for which the recursive learner's full-matrix bound
/// kicks in.
pub fn full_matrix_regime_problem(dim: usize, cond: f64, epsilon_bias: f64, seed: u64) -> Result<BiasedGradientStream> {
    if !(epsilon_bias > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bias must be positive, got {epsilon_bias}"
        )));
    }
    let mut rng = SeededRng::with_stream(seed, PROBLEM_STREAM);
    let cov = make_covariance(dim, cond, &mut rng)?;
    let shift = cov
        .eigenvector(dim - 1)
        .iter()
        .map(|x| -epsilon_bias.sqrt() * x)
        .collect();
    Ok(BiasedGradientStream {
        cov,
        shift,
        rng: SeededRng::with_stream(seed, TRAIN_STREAM),
        tracker: GmaxTracker::new(),
    })
}

impl BiasedGradientStream {
    pub fn x_min(&self) -> Vec<f64> {
        self.cov.eigenvector(self.cov.dim() - 1)
    }

    pub fn covariance(&self) -> &CovarianceFactor {
        &self.cov
    }

    pub fn g_max(&self) -> f64 {
        self.tracker.g_max()
    }
}

impl Iterator for BiasedGradientStream {
    type Item = GradientVector;

    fn next(&mut self) -> Option<GradientVector> {
        let x = sample_gaussian(&self.cov, &mut self.rng);
        let raw: Vec<f64> = x.iter().zip(&self.shift).map(|(a, b)| a + b).collect();
        let raw = GradientVector::new(raw).expect("finite gaussian sample");
        Some(self.tracker.forward(&raw))
    }
}
