//! Bilevel variational search for the closest fully separable state: an
//! upper level proposes product-state angles, and for every proposal a
//! convex lower-level solve picks the mixing probabilities.

pub mod anneal;
pub mod lower;
pub mod sinusoidal;
pub mod witness;

pub use anneal::AnnealSchedule;
pub use lower::{lower_solve, LowerSolution, DEFAULT_LOWER_TOLERANCE};
pub use sinusoidal::{coordinate_sinusoidal_step, AngleKind, SinusoidalStepInfo};
pub use witness::{build_witness, WitnessResult};

pub use crate::trace::{IterationRecord, OptimizationTrace, RunClock};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ensemble::{
    build_cache, component_cap, estimator_calls, EvalMode, SeparableEnsemble,
};
use crate::error::{Error, Result};
use crate::qstate::{DensityMatrix, ProductStateParams};
use crate::random::rng_from_seed;
use crate::swap_test::ShotConfig;

/// All upper-level angle parameters of an s-component ansatz on n qubits,
/// flattened as all thetas (row-major) followed by all phis.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AnsatzAngles {
    s: usize,
    n: usize,
    thetas: Vec<f64>,
    phis: Vec<f64>,
}

impl AnsatzAngles {
    pub fn from_flat(s: usize, n: usize, thetas: Vec<f64>, phis: Vec<f64>) -> Self {
        assert_eq!(thetas.len(), s * n);
        assert_eq!(phis.len(), s * n);
        Self { s, n, thetas, phis }
    }

    pub fn random_init(s: usize, n: usize, rng: &mut ChaCha8Rng) -> Self {
        let tau = std::f64::consts::TAU;
        let thetas = (0..s * n).map(|_| rng.gen::<f64>() * tau).collect();
        let phis = (0..s * n).map(|_| rng.gen::<f64>() * tau).collect();
        Self { s, n, thetas, phis }
    }

    pub fn components(&self) -> usize {
        self.s
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    /// Number of angle parameters, 2 s n (the mixing probabilities bring
    /// the total variational count to s(2n + 1)).
    pub fn param_count(&self) -> usize {
        2 * self.s * self.n
    }

    pub fn kind(&self, param: usize) -> AngleKind {
        assert!(param < self.param_count());
        if param < self.s * self.n {
            AngleKind::Theta
        } else {
            AngleKind::Phi
        }
    }

    pub fn get(&self, param: usize) -> f64 {
        let half = self.s * self.n;
        if param < half {
            self.thetas[param]
        } else {
            self.phis[param - half]
        }
    }

    pub fn set(&mut self, param: usize, value: f64) {
        let half = self.s * self.n;
        if param < half {
            self.thetas[param] = value;
        } else {
            self.phis[param - half] = value;
        }
    }

    /// Angle rows as product-state parameters.
    pub fn rows(&self) -> Vec<ProductStateParams> {
        (0..self.s)
            .map(|i| {
                ProductStateParams::new(
                    self.thetas[i * self.n..(i + 1) * self.n].to_vec(),
                    self.phis[i * self.n..(i + 1) * self.n].to_vec(),
                )
                .expect("angles are finite")
            })
            .collect()
    }
}

/// Upper-level search strategy.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum UpperOptimizer {
    Annealing(AnnealSchedule),
    CoordinateSinusoidal,
}

impl Default for UpperOptimizer {
    fn default() -> Self {
        UpperOptimizer::CoordinateSinusoidal
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VsvConfig {
    /// Ensemble component count; defaults to d = 2^n, capped at d^2.
    pub s: Option<usize>,
    pub optimizer: UpperOptimizer,
    /// Budget of cost evaluations (cache build + lower solve).
    pub max_evaluations: u64,
    /// KKT tolerance of the lower-level solve.
    pub lower_tolerance: f64,
    pub mode: EvalMode,
    pub seed: u64,
    /// Stop a sinusoidal run once a full sweep improves the best cost by
    /// less than this; ignored in shot mode where improvements are noisy.
    pub convergence_tolerance: Option<f64>,
    /// Tag recorded into the trace, e.g. "ghz-convergence".
    pub experiment: Option<String>,
}

impl Default for VsvConfig {
    fn default() -> Self {
        Self {
            s: None,
            optimizer: UpperOptimizer::default(),
            max_evaluations: 10_000,
            lower_tolerance: DEFAULT_LOWER_TOLERANCE,
            mode: EvalMode::Exact,
            seed: 0,
            convergence_tolerance: Some(1e-12),
            experiment: None,
        }
    }
}

impl VsvConfig {
    pub fn resolve_components(&self, n: usize) -> Result<usize> {
        let s = self.s.unwrap_or(1usize << n);
        if s == 0 || s > component_cap(n) {
            return Err(Error::InvalidConfig(format!(
                "component count {s} outside [1, {}]",
                component_cap(n)
            )));
        }
        Ok(s)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.resolve_components(n)?;
        if self.max_evaluations == 0 {
            return Err(Error::InvalidConfig("evaluation budget must be positive".into()));
        }
        if self.lower_tolerance <= 0.0 {
            return Err(Error::InvalidConfig("lower tolerance must be positive".into()));
        }
        if let UpperOptimizer::Annealing(sched) = &self.optimizer {
            sched.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct VsvResult {
    pub best_ensemble: SeparableEnsemble,
    /// Hilbert-Schmidt entanglement estimate: the best cost found.
    pub hse: f64,
    pub trace: OptimizationTrace,
    pub evaluation_count: u64,
    /// Total estimator (device) calls behind all cache builds.
    pub estimator_calls: u64,
    /// False when any lower-level solve missed its KKT tolerance.
    pub lower_level_clean: bool,
}

/// Shared evaluation engine: builds a cache for a proposal, runs the
/// lower-level solve, tracks best-so-far and the trace.
pub(crate) struct Evaluator<'a> {
    rho: &'a DensityMatrix,
    mode: EvalMode,
    shot_seed_stream: Option<ChaCha8Rng>,
    lower_tolerance: f64,
    budget: u64,
    evaluations: u64,
    estimator_call_count: u64,
    lower_level_clean: bool,
    clock: RunClock,
    trace: OptimizationTrace,
    best: Option<(AnsatzAngles, Vec<f64>, f64)>,
}

impl<'a> Evaluator<'a> {
    fn new(rho: &'a DensityMatrix, cfg: &VsvConfig, budget: u64) -> Self {
        let shot_seed_stream = match cfg.mode {
            EvalMode::Exact => None,
            EvalMode::Shots(sc) => Some(rng_from_seed(sc.seed)),
        };
        let mut trace = OptimizationTrace::new(cfg.seed, format!("{cfg:?}"));
        trace.experiment = cfg.experiment.clone();
        Self {
            rho,
            mode: cfg.mode,
            shot_seed_stream,
            lower_tolerance: cfg.lower_tolerance,
            budget,
            evaluations: 0,
            estimator_call_count: 0,
            lower_level_clean: true,
            clock: RunClock::start(),
            trace,
            best: None,
        }
    }

    pub(crate) fn remaining(&self) -> u64 {
        self.budget - self.evaluations
    }

    pub(crate) fn best(&self) -> Option<(AnsatzAngles, Vec<f64>, f64)> {
        self.best.clone()
    }

    pub(crate) fn best_cost(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.2)
    }

    pub(crate) fn evaluate(&mut self, angles: &AnsatzAngles) -> f64 {
        assert!(self.remaining() > 0, "evaluation budget exhausted");
        let call_mode = match (&self.mode, self.shot_seed_stream.as_mut()) {
            (EvalMode::Exact, _) => EvalMode::Exact,
            (EvalMode::Shots(sc), Some(stream)) => EvalMode::Shots(ShotConfig {
                shots: sc.shots,
                seed: stream.gen::<u64>(),
            }),
            _ => unreachable!("shot mode always has a seed stream"),
        };
        let rows = angles.rows();
        let cache = build_cache(self.rho, &rows, call_mode)
            .expect("rows match rho by construction");
        let sol = lower_solve(&cache, self.lower_tolerance);
        if !sol.converged {
            self.lower_level_clean = false;
        }
        self.evaluations += 1;
        self.estimator_call_count += estimator_calls(rows.len());
        // strict improvement keeps the earlier proposal on ties
        if sol.value < self.best_cost() {
            self.best = Some((angles.clone(), sol.p.clone(), sol.value));
        }
        self.trace.push(IterationRecord {
            iteration: self.evaluations - 1,
            proposal_hsd: sol.value,
            best_hsd: self.best_cost(),
            evaluations: self.evaluations,
            elapsed_seconds: self.clock.elapsed_seconds(),
        });
        sol.value
    }
}

fn run_sinusoidal(eval: &mut Evaluator, mut angles: AnsatzAngles, sweep_tol: Option<f64>) {
    let count = angles.param_count();
    loop {
        let sweep_start_best = eval.best_cost();
        let mut completed_sweep = true;
        for param in 0..count {
            if eval.remaining() < 3 {
                completed_sweep = false;
                break;
            }
            let (next, _info) = coordinate_sinusoidal_step(&angles, param, |a| eval.evaluate(a));
            angles = next;
        }
        if !completed_sweep || eval.remaining() == 0 {
            break;
        }
        if let Some(tol) = sweep_tol {
            if sweep_start_best - eval.best_cost() < tol {
                break;
            }
        }
    }
    if eval.remaining() > 0 {
        eval.evaluate(&angles);
    }
}

/// Run the bilevel search and return the best separable ensemble found,
/// its Hilbert-Schmidt distance to rho, and the full trace.
/// Deterministic given the config seed(s).
pub fn run_vsv(rho: &DensityMatrix, cfg: &VsvConfig) -> Result<VsvResult> {
    let n = rho.qubits();
    cfg.validate(n)?;
    let s = cfg.resolve_components(n)?;

    let mut rng = rng_from_seed(cfg.seed);
    let init = AnsatzAngles::random_init(s, n, &mut rng);
    let mut eval = Evaluator::new(rho, cfg, cfg.max_evaluations);

    match &cfg.optimizer {
        UpperOptimizer::CoordinateSinusoidal => {
            let sweep_tol = match cfg.mode {
                EvalMode::Exact => cfg.convergence_tolerance,
                EvalMode::Shots(_) => None,
            };
            run_sinusoidal(&mut eval, init, sweep_tol);
        }
        UpperOptimizer::Annealing(schedule) => {
            anneal::run_annealing(&mut eval, init, schedule, &mut rng);
        }
    }

    let (angles, mut p, cost) = eval
        .best
        .clone()
        .expect("positive budget guarantees at least one evaluation");
    let total: f64 = p.iter().sum();
    for x in p.iter_mut() {
        *x /= total;
    }
    let best_ensemble = SeparableEnsemble::new(p, angles.rows())?;
    let hse = if cfg.mode.is_exact() { cost.max(0.0) } else { cost };
    Ok(VsvResult {
        best_ensemble,
        hse,
        trace: eval.trace,
        evaluation_count: eval.evaluations,
        estimator_calls: eval.estimator_call_count,
        lower_level_clean: eval.lower_level_clean,
    })
}
