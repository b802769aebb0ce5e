//! Simulated-annealing baseline on the same neighborhood and feasibility gate
//! as the BO engine.

use std::collections::HashSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bo_engine::{finish, new_record, sample_feasible, OutlineGate, DEFAULT_MAX_DRAWS};
use crate::error::{Error, Result};
use crate::hpwl_eval::{evaluate_sp, ObjectiveValue};
use crate::netlist::Design;
use crate::run_record::{Algo, RunRecord};
use crate::seqpair::SequencePair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Linear,
    Exponential,
    Stepdown,
}

impl Schedule {
    pub const ALL: [Schedule; 3] = [Schedule::Linear, Schedule::Exponential, Schedule::Stepdown];
}

impl std::str::FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Self::Linear),
            "exponential" | "exp" => Ok(Self::Exponential),
            "stepdown" => Ok(Self::Stepdown),
            _ => Err(Error::invalid(format!(
                "unknown schedule `{s}` (expected linear, exponential or stepdown)"
            ))),
        }
    }
}

impl std::fmt::Display for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Exponential => "exponential",
            Self::Stepdown => "stepdown",
        })
    }
}

pub const DEFAULT_PROPOSAL_RETRIES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaConfig {
    pub t0: f64,
    pub schedule: Schedule,
    /// Number of objective evaluations, including the starting point.
    pub budget: usize,
    /// Temperature at the last step of the exponential schedule.
    pub t_final: f64,
    /// Infeasible proposals drawn before a step is counted as a rejection.
    pub proposal_retries: usize,
    pub max_draws: usize,
    pub seed: u64,
    #[serde(default)]
    pub timing: bool,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            t0: 1e4,
            schedule: Schedule::Exponential,
            budget: 520,
            t_final: 1.0,
            proposal_retries: DEFAULT_PROPOSAL_RETRIES,
            max_draws: DEFAULT_MAX_DRAWS,
            seed: 0,
            timing: false,
        }
    }
}

impl SaConfig {
    fn check(&self) -> Result<()> {
        if !(self.t0 > 0.0) || !self.t0.is_finite() {
            return Err(Error::invalid("initial temperature must be positive"));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::invalid("final temperature must be positive"));
        }
        if self.budget == 0 {
            return Err(Error::invalid("budget must be at least 1"));
        }
        Ok(())
    }

    /// Steps per stage of the stepdown schedule.
    pub fn steps_per_stage(&self) -> usize {
        self.budget.div_ceil(5).max(1)
    }
}

/// Temperature at step `t` (0-based evaluation index).
pub fn temperature(cfg: &SaConfig, t: usize) -> Result<f64> {
    if t >= cfg.budget {
        return Err(Error::invalid(format!(
            "step {t} is outside the budget of {}",
            cfg.budget
        )));
    }
    Ok(match cfg.schedule {
        Schedule::Linear => {
            let frac = 1.0 - t as f64 / cfg.budget as f64;
            (cfg.t0 * frac).max(cfg.t0 * 1e-6)
        }
        Schedule::Exponential => {
            if t == 0 {
                cfg.t0
            } else if t == cfg.budget - 1 {
                cfg.t_final
            } else {
                let ratio = (cfg.t_final / cfg.t0).ln() / (cfg.budget - 1) as f64;
                cfg.t0 * (ratio * t as f64).exp()
            }
        }
        Schedule::Stepdown => {
            let stage = (t / cfg.steps_per_stage()) as i32;
            cfg.t0 * 10f64.powi(-stage)
        }
    })
}

/// Metropolis rule: accept if `delta <= 0`, otherwise if `u < exp(-delta / T)`
/// for a uniform draw `u` in [0, 1).
pub fn metropolis_accept(delta: f64, temperature: f64, u: f64) -> bool {
    delta <= 0.0 || u < (-delta / temperature).exp()
}

/// Uniform random feasible neighbor of `sp`, or `None` after `retries`
/// infeasible draws.
fn propose<R: Rng + ?Sized>(
    sp: &SequencePair,
    gate: &OutlineGate,
    retries: usize,
    rng: &mut R,
) -> Option<SequencePair> {
    let count = 2 * (sp.len() - 1);
    for _ in 0..retries {
        let cand = sp.neighbor(rng.random_range(0..count));
        if gate.admits(&cand) {
            return Some(cand);
        }
    }
    None
}

pub fn run_sa(design: &Design, cfg: &SaConfig) -> Result<RunRecord> {
    cfg.check()?;
    let started = cfg.timing.then(Instant::now);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let config = serde_json::to_value(cfg).expect("config serializes");
    let mut record = new_record(design, Algo::Sa, cfg.seed, config);
    let mut best = None;
    let outcome = sa_loop(design, cfg, &mut rng, &mut record, &mut best, started);
    finish(&mut record, best, outcome, started);
    Ok(record)
}

fn sa_loop(
    design: &Design,
    cfg: &SaConfig,
    rng: &mut ChaCha8Rng,
    record: &mut RunRecord,
    best: &mut Option<(SequencePair, ObjectiveValue)>,
    started: Option<Instant>,
) -> Result<()> {
    let start = sample_feasible(design, 1, &HashSet::new(), cfg.max_draws, rng)?;
    record.meta.init_acceptance_rate = start.acceptance_rate();
    let mut current = start.points.into_iter().next().expect("one point");
    let mut current_value = evaluate_sp(design, &current)?;
    let push = |record: &mut RunRecord,
                    best: &mut Option<(SequencePair, ObjectiveValue)>,
                    t: usize,
                    sp: &SequencePair,
                    v: &ObjectiveValue,
                    accepted: bool| {
        record.push(t, sp.clone(), v.hpwl, Some(accepted));
        if let (Some(t0), Some(row)) = (started, record.rows.last_mut()) {
            row.wall_time_s = Some(t0.elapsed().as_secs_f64());
        }
        if best.as_ref().is_none_or(|(_, b)| v.hpwl < b.hpwl) {
            *best = Some((sp.clone(), v.clone()));
        }
    };
    push(record, best, 0, &current, &current_value, true);

    let gate = OutlineGate::new(design);
    let mut t = 1;
    while t < cfg.budget {
        let Some(cand) = (if current.len() > 1 {
            propose(&current, &gate, cfg.proposal_retries, rng)
        } else {
            None
        }) else {
            if !current.neighbors().iter().any(|n| gate.admits(n)) {
                return Err(Error::Infeasible(format!(
                    "annealing chain is stuck at {current}: no neighbor fits the outline"
                )));
            }
            continue;
        };
        let value = evaluate_sp(design, &cand)?;
        let temp = temperature(cfg, t)?;
        let delta = value.hpwl - current_value.hpwl;
        let accepted = metropolis_accept(delta, temp, rng.random::<f64>());
        push(record, best, t, &cand, &value, accepted);
        if accepted {
            current = cand;
            current_value = value;
        }
        t += 1;
    }
    Ok(())
}
