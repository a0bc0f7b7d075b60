//! Gilbert-style baseline: draw random product states, keep the ones that
//! pass a linear-functional preselection, mix each accepted candidate into
//! the running state with the closed-form optimal weight, and track purity
//! and overlap through the iterative recursions so the cost never needs a
//! dense rebuild.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qstate::{build_product_state, DensityMatrix, ProductStateParams, PureState};
use crate::random::{bloch_uniform_product_params, rng_from_seed};
use crate::trace::{IterationRecord, OptimizationTrace, RunClock};

/// Exponent of the empirical success-count growth law c_s ~ c_t^0.44127.
pub const DEFAULT_SUCCESS_EXPONENT: f64 = 0.44127;

/// Stop conditions; at least one bound must be finite.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HaltCriterion {
    pub max_trials: Option<u64>,
    pub max_successes: Option<u64>,
    /// Stop once a success improves the distance by less than this.
    pub min_improvement: f64,
    /// Consecutive failed trials before stopping; None selects the
    /// adaptive default of 10 (current successes + 1).
    pub stall_window: Option<u64>,
}

impl Default for HaltCriterion {
    fn default() -> Self {
        Self {
            max_trials: Some(100_000),
            max_successes: None,
            min_improvement: 1e-8,
            stall_window: None,
        }
    }
}

impl HaltCriterion {
    pub fn validate(&self) -> Result<()> {
        if self.max_trials.is_none() && self.max_successes.is_none() && self.stall_window.is_none()
        {
            return Err(Error::InvalidConfig(
                "halt criterion needs at least one finite bound".into(),
            ));
        }
        Ok(())
    }

    fn stall_bound(&self, successes: u64) -> u64 {
        self.stall_window.unwrap_or(10 * (successes + 1))
    }
}

/// One stored mixture component.
#[derive(Debug, Clone)]
pub struct QgaComponent {
    pub params: ProductStateParams,
    pub state: PureState,
}

/// Running state of the algorithm: the component list with its convex
/// weights, the recursion-tracked purity/overlap/distance, and the trial
/// and success counters.
#[derive(Debug, Clone)]
pub struct QgaState {
    components: Vec<QgaComponent>,
    weights: Vec<f64>,
    mixing_weights: Vec<f64>,
    purity: f64,
    overlap: f64,
    rho_purity: f64,
    hsd: f64,
    trials: u64,
    successes: u64,
}

impl QgaState {
    /// Start from a pure product state sigma_0.
    pub fn start(rho: &DensityMatrix, initial: ProductStateParams) -> Result<Self> {
        if initial.qubits() != rho.qubits() {
            return Err(Error::DimensionMismatch {
                left: initial.qubits(),
                right: rho.qubits(),
            });
        }
        let state = build_product_state(&initial);
        let overlap = state.expectation(rho)?;
        let rho_purity = rho.purity();
        Ok(Self {
            components: vec![QgaComponent {
                params: initial,
                state,
            }],
            weights: vec![1.0],
            mixing_weights: Vec::new(),
            purity: 1.0,
            overlap,
            rho_purity,
            hsd: rho_purity + 1.0 - 2.0 * overlap,
            trials: 0,
            successes: 0,
        })
    }

    pub fn components(&self) -> &[QgaComponent] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mixing_weights(&self) -> &[f64] {
        &self.mixing_weights
    }

    pub fn purity(&self) -> f64 {
        self.purity
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    pub fn hsd(&self) -> f64 {
        self.hsd
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    /// Tr[rho_current sigma_candidate] accumulated over the stored
    /// component list, the way a device-backed run would combine the
    /// pairwise overlaps.
    pub fn overlap_with(&self, candidate: &PureState) -> Result<f64> {
        let mut acc = 0.0;
        for (component, w) in self.components.iter().zip(self.weights.iter()) {
            acc += w * component.state.overlap_sq(candidate)?;
        }
        Ok(acc)
    }

    /// Dense reconstruction of the current mixture for oracle checks.
    pub fn densify(&self) -> DensityMatrix {
        let ens = crate::ensemble::SeparableEnsemble::new(
            {
                let total: f64 = self.weights.iter().sum();
                self.weights.iter().map(|w| w / total).collect()
            },
            self.components.iter().map(|c| c.params.clone()).collect(),
        )
        .expect("weights stay on the simplex");
        crate::ensemble::densify(&ens)
    }
}

/// Linear-functional preselection: Tr[(sigma_n - rho_(n-1))(rho - rho_(n-1))] > 0,
/// evaluated in the rearranged overlap form
/// Tr[rho_(n-1)^2] + Tr[rho sigma_n] > Tr[rho rho_(n-1)] + Tr[rho_(n-1) sigma_n].
pub fn preselect(state: &QgaState, candidate: &PureState, rho: &DensityMatrix) -> Result<bool> {
    let rho_overlap = candidate.expectation(rho)?;
    let state_overlap = state.overlap_with(candidate)?;
    Ok(preselect_cached(state, rho_overlap, state_overlap))
}

fn preselect_cached(state: &QgaState, rho_overlap: f64, state_overlap: f64) -> bool {
    state.purity + rho_overlap > state.overlap + state_overlap
}

/// Unconstrained minimizer of Tr[(rho - p rho_(n-1) - (1-p) sigma_n)^2]:
/// p* = Tr[AB]/Tr[B^2] with A = rho - sigma_n, B = rho_(n-1) - sigma_n,
/// assembled from cached overlaps. Errors when Tr[B^2] vanishes (the
/// candidate equals the current state).
pub fn optimal_mixing_weight(
    state: &QgaState,
    candidate: &PureState,
    rho: &DensityMatrix,
) -> Result<f64> {
    let rho_overlap = candidate.expectation(rho)?;
    let state_overlap = state.overlap_with(candidate)?;
    mixing_weight_cached(state, rho_overlap, state_overlap)
}

fn mixing_weight_cached(state: &QgaState, rho_overlap: f64, state_overlap: f64) -> Result<f64> {
    let tr_ab = state.overlap - rho_overlap - state_overlap + 1.0;
    let tr_b2 = state.purity - 2.0 * state_overlap + 1.0;
    if tr_b2 <= 1e-15 {
        return Err(Error::InvalidParameter(
            "candidate coincides with the current state".into(),
        ));
    }
    Ok(tr_ab / tr_b2)
}

/// Fold an accepted candidate into the state with mixing weight p via the
/// purity and overlap recursions.
pub fn qga_update(
    state: &QgaState,
    candidate_params: ProductStateParams,
    rho: &DensityMatrix,
    p: f64,
) -> Result<QgaState> {
    let candidate = build_product_state(&candidate_params);
    let rho_overlap = candidate.expectation(rho)?;
    let state_overlap = state.overlap_with(&candidate)?;
    Ok(update_cached(
        state,
        candidate_params,
        candidate,
        rho_overlap,
        state_overlap,
        p,
    ))
}

fn update_cached(
    state: &QgaState,
    candidate_params: ProductStateParams,
    candidate: PureState,
    rho_overlap: f64,
    state_overlap: f64,
    p: f64,
) -> QgaState {
    let q = 1.0 - p;
    let purity = p * p * state.purity + q * q + 2.0 * p * q * state_overlap;
    let overlap = p * state.overlap + q * rho_overlap;
    let mut out = state.clone();
    for w in out.weights.iter_mut() {
        *w *= p;
    }
    out.weights.push(q);
    out.components.push(QgaComponent {
        params: candidate_params,
        state: candidate,
    });
    out.mixing_weights.push(p);
    out.purity = purity;
    out.overlap = overlap;
    out.hsd = state.rho_purity + purity - 2.0 * overlap;
    out.successes += 1;
    out
}

/// Full run: seeded random product trials against rho until the halt
/// criterion fires. The trace records one entry per success.
pub fn run_qga(
    rho: &DensityMatrix,
    halt: &HaltCriterion,
    seed: u64,
) -> Result<(QgaState, OptimizationTrace)> {
    halt.validate()?;
    let n = rho.qubits();
    let mut rng: ChaCha8Rng = rng_from_seed(seed);
    let mut state = QgaState::start(rho, bloch_uniform_product_params(n, &mut rng))?;

    let clock = RunClock::start();
    let mut trace = OptimizationTrace::new(seed, format!("qga {halt:?}"));
    trace.push(IterationRecord {
        iteration: 0,
        proposal_hsd: state.hsd,
        best_hsd: state.hsd,
        evaluations: 0,
        elapsed_seconds: clock.elapsed_seconds(),
    });

    let mut stall = 0u64;
    loop {
        if let Some(max_trials) = halt.max_trials {
            if state.trials >= max_trials {
                break;
            }
        }
        if let Some(max_successes) = halt.max_successes {
            if state.successes >= max_successes {
                break;
            }
        }
        if stall >= halt.stall_bound(state.successes) {
            break;
        }

        state.trials += 1;
        let params = bloch_uniform_product_params(n, &mut rng);
        let candidate = build_product_state(&params);
        let rho_overlap = candidate.expectation(rho)?;
        let state_overlap = state.overlap_with(&candidate)?;

        if !preselect_cached(&state, rho_overlap, state_overlap) {
            stall += 1;
            continue;
        }
        let p = match mixing_weight_cached(&state, rho_overlap, state_overlap) {
            Ok(p) => p,
            Err(_) => {
                stall += 1;
                continue;
            }
        };
        // success needs the minimum inside [0, 1); p = 1 leaves the state
        // unchanged and is counted as a failure
        if !(0.0..1.0).contains(&p) {
            stall += 1;
            continue;
        }
        let previous_hsd = state.hsd;
        state = update_cached(&state, params, candidate, rho_overlap, state_overlap, p);
        stall = 0;
        trace.push(IterationRecord {
            iteration: state.trials,
            proposal_hsd: state.hsd,
            best_hsd: state.hsd,
            evaluations: state.successes,
            elapsed_seconds: clock.elapsed_seconds(),
        });
        if previous_hsd - state.hsd < halt.min_improvement {
            break;
        }
    }
    Ok((state, trace))
}

/// Modeled number of overlap evaluations (device calls) for c_t trials
/// under the even-split growth assumption: the success count starts at 1
/// and increments every c_t^(1-exponent) trials, and trial i costs
/// c_s(i)(c_s(i)+1)/2 overlap evaluations.
pub fn qga_call_count(trials: u64, exponent: f64) -> u128 {
    if trials == 0 {
        return 0;
    }
    let spacing = (trials as f64).powf(1.0 - exponent);
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    let mut next_bump = spacing;
    for i in 0..trials {
        if i as f64 >= next_bump {
            level += 1;
            next_bump += spacing;
        }
        total += level * (level + 1) / 2;
    }
    total
}
