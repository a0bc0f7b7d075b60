//! Annealing upper-level optimizer: temperature-scaled coordinate
//! perturbations with Metropolis acceptance, geometric visiting and
//! acceptance temperature decay, and periodic restarts from the best
//! point. The exact schedule is a config knob.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::qstate::wrap_angle;
use crate::vsv::{AnsatzAngles, Evaluator};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AnnealSchedule {
    /// Acceptance temperature at the start of the run.
    pub t_initial: f64,
    /// Acceptance temperature at budget exhaustion (geometric decay).
    pub t_final: f64,
    /// Step scale in radians at full temperature.
    pub step_scale: f64,
    /// Exponent tying the visiting step scale to the temperature ratio.
    pub visiting_power: f64,
    /// Floor on the step scale so late-stage moves stay finite.
    pub min_step: f64,
    /// Expected number of coordinates perturbed per proposal.
    pub moves_per_step: f64,
    /// Evaluations between restarts from the best point; 0 disables.
    pub restart_interval: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            t_initial: 0.2,
            t_final: 1e-8,
            step_scale: std::f64::consts::PI,
            visiting_power: 1.2,
            min_step: 5e-3,
            moves_per_step: 2.0,
            restart_interval: 400,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.t_initial > 0.0 && self.t_final > 0.0 && self.t_final <= self.t_initial) {
            return Err(crate::Error::InvalidConfig(
                "annealing temperatures must satisfy 0 < t_final <= t_initial".into(),
            ));
        }
        if self.step_scale <= 0.0 || self.min_step <= 0.0 || self.moves_per_step <= 0.0 {
            return Err(crate::Error::InvalidConfig(
                "annealing step parameters must be positive".into(),
            ));
        }
        Ok(())
    }
}

pub(crate) fn run_annealing(
    eval: &mut Evaluator,
    start: AnsatzAngles,
    schedule: &AnnealSchedule,
    rng: &mut ChaCha8Rng,
) {
    let mut current = start;
    if eval.remaining() == 0 {
        return;
    }
    let mut current_cost = eval.evaluate(&current);
    let horizon = eval.remaining().max(1);
    let count = current.param_count();
    let coord_prob = (schedule.moves_per_step / count as f64).min(1.0);
    let mut step_index = 0u64;

    while eval.remaining() > 0 {
        let frac = step_index as f64 / horizon as f64;
        let temp = schedule.t_initial * (schedule.t_final / schedule.t_initial).powf(frac);
        let scale = (schedule.step_scale
            * (temp / schedule.t_initial).powf(schedule.visiting_power))
        .max(schedule.min_step);

        let mut proposal = current.clone();
        let anchor = rng.gen_range(0..count);
        for k in 0..count {
            if k == anchor || rng.gen::<f64>() < coord_prob {
                let delta: f64 = rng.sample::<f64, _>(StandardNormal) * scale;
                proposal.set(k, wrap_angle(proposal.get(k) + delta));
            }
        }
        let cost = eval.evaluate(&proposal);
        let accept = cost <= current_cost
            || rng.gen::<f64>() < ((current_cost - cost) / temp).exp();
        if accept {
            current = proposal;
            current_cost = cost;
        }
        step_index += 1;
        if schedule.restart_interval > 0 && step_index % schedule.restart_interval == 0 {
            if let Some((angles, _, cost)) = eval.best() {
                current = angles;
                current_cost = cost;
            }
        }
    }
}
