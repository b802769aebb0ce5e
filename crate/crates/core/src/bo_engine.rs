//! Batch Bayesian optimization loop: fit the surrogate, optimize the batch
//! acquisition, evaluate the batch, grow the dataset and the feasible set.

use std::collections::HashSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acq_optimizer::{optimize_batch, BatchContext, FeasibleSet, DEFAULT_MAX_ROUNDS};
use crate::acquisition::{AcqConfig, AcqKind, BatchAcqConfig};
use crate::error::{Error, Result};
use crate::hpwl_eval::{evaluate_sp, ObjectiveValue};
use crate::lcs_pack::{is_feasible, MacroShape, Outline};
use crate::netlist::Design;
use crate::run_record::{Algo, BestPlacement, RunMeta, RunRecord};
use crate::seqpair::{random_sp, SequencePair, SpKey};
use crate::surrogate_gp::{train, Dataset, FitOptions};

pub const DEFAULT_MAX_DRAWS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoConfig {
    pub n_init: usize,
    pub rounds: usize,
    pub batch: BatchAcqConfig,
    pub acq: AcqKind,
    pub ucb_beta: f64,
    pub fit: FitOptions,
    /// Cap on coordinate rounds inside the batch optimizer.
    pub max_opt_rounds: usize,
    /// Rejection-sampling budget for random feasible sequence pairs.
    pub max_draws: usize,
    pub seed: u64,
    /// Record wall-clock times (makes records differ between reruns).
    #[serde(default)]
    pub timing: bool,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            n_init: 20,
            rounds: 50,
            batch: BatchAcqConfig::default(),
            acq: AcqKind::Ei,
            ucb_beta: 4.0,
            fit: FitOptions::default(),
            max_opt_rounds: DEFAULT_MAX_ROUNDS,
            max_draws: DEFAULT_MAX_DRAWS,
            seed: 0,
            timing: false,
        }
    }
}

impl BoConfig {
    pub fn total_evaluations(&self) -> usize {
        self.n_init + self.rounds * self.batch.batch_size
    }

    fn check(&self) -> Result<()> {
        if self.n_init == 0 {
            return Err(Error::invalid("n_init must be at least 1"));
        }
        if self.batch.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if !(self.batch.rho_scale > 0.0) {
            return Err(Error::invalid("rho scale must be positive"));
        }
        if !(self.ucb_beta > 0.0) {
            return Err(Error::invalid("UCB beta must be positive"));
        }
        Ok(())
    }
}

/// Feasibility gate for one design.
#[derive(Debug, Clone)]
pub struct OutlineGate {
    shapes: Vec<MacroShape>,
    outline: Outline,
}

impl OutlineGate {
    pub fn new(design: &Design) -> Self {
        Self {
            shapes: design.shapes(),
            outline: design.outline,
        }
    }

    pub fn admits(&self, sp: &SequencePair) -> bool {
        is_feasible(sp, &self.shapes, &self.outline).unwrap_or(false)
    }
}

/// Number of distinct sequence pairs on `n` macros, saturating.
pub fn sequence_pair_count(n: usize) -> usize {
    let mut f: usize = 1;
    for k in 2..=n {
        f = f.saturating_mul(k);
    }
    f.saturating_mul(f)
}

/// Random feasible sequence pairs by rejection sampling.
#[derive(Debug, Clone)]
pub struct FeasibleSample {
    pub points: Vec<SequencePair>,
    pub draws: usize,
    pub feasible_draws: usize,
}

impl FeasibleSample {
    pub fn acceptance_rate(&self) -> f64 {
        if self.draws == 0 {
            0.0
        } else {
            self.feasible_draws as f64 / self.draws as f64
        }
    }
}

/// Draws uniform sequence pairs until `count` distinct feasible ones not in
/// `skip` are found.
pub fn sample_feasible<R: Rng + ?Sized>(
    design: &Design,
    count: usize,
    skip: &HashSet<SpKey>,
    max_draws: usize,
    rng: &mut R,
) -> Result<FeasibleSample> {
    let gate = OutlineGate::new(design);
    let n = design.num_macros();
    let mut seen: HashSet<SpKey> = HashSet::new();
    let mut out = FeasibleSample {
        points: Vec::with_capacity(count),
        draws: 0,
        feasible_draws: 0,
    };
    while out.points.len() < count {
        if out.draws >= max_draws {
            let msg = if out.feasible_draws == 0 {
                format!(
                    "no feasible sequence pair in {max_draws} random draws; the {}x{} outline is \
                     probably too tight, try a larger outline or more whitespace",
                    design.outline.width, design.outline.height
                )
            } else {
                format!(
                    "found only {} of {count} new feasible sequence pairs in {max_draws} draws",
                    out.points.len()
                )
            };
            return Err(Error::Infeasible(msg));
        }
        out.draws += 1;
        let sp = random_sp(n, rng)?;
        if !gate.admits(&sp) {
            continue;
        }
        out.feasible_draws += 1;
        let key = sp.canonical_key();
        if skip.contains(&key) || !seen.insert(key) {
            continue;
        }
        out.points.push(sp);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct InitialDesign {
    /// Objective values stored negated, so larger is better.
    pub dataset: Dataset,
    pub feasible: FeasibleSet,
    pub evaluations: Vec<ObjectiveValue>,
    pub acceptance_rate: f64,
}

fn evaluate_all(design: &Design, points: &[SequencePair]) -> Vec<Result<ObjectiveValue>> {
    points.par_iter().map(|sp| evaluate_sp(design, sp)).collect()
}

/// Samples `n_init` feasible sequence pairs (fewer if the design has fewer
/// sequence pairs in total) and evaluates them.
pub fn initial_design<R: Rng + ?Sized>(
    design: &Design,
    n_init: usize,
    max_draws: usize,
    rng: &mut R,
) -> Result<InitialDesign> {
    let n = n_init.min(sequence_pair_count(design.num_macros()));
    let sample = sample_feasible(design, n, &HashSet::new(), max_draws, rng)?;
    let mut dataset = Dataset::new();
    let mut feasible = FeasibleSet::new();
    let mut evaluations = Vec::with_capacity(n);
    for (sp, r) in sample.points.iter().zip(evaluate_all(design, &sample.points)) {
        let v = r?;
        dataset.push(sp.clone(), -v.hpwl)?;
        feasible.insert(sp.clone());
        evaluations.push(v);
    }
    Ok(InitialDesign {
        dataset,
        feasible,
        evaluations,
        acceptance_rate: sample.acceptance_rate(),
    })
}

fn config_json<T: Serialize>(cfg: &T) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

pub(crate) fn new_record(
    design: &Design,
    algo: Algo,
    seed: u64,
    config: serde_json::Value,
) -> RunRecord {
    RunRecord {
        meta: RunMeta {
            design: design.name.clone(),
            algo,
            seed,
            config,
            num_macros: design.num_macros(),
            outline: design.outline,
            init_acceptance_rate: 0.0,
            complete: false,
            error: None,
            best: None,
            wall_time_s: None,
        },
        rows: Vec::new(),
    }
}

pub(crate) fn finish(
    record: &mut RunRecord,
    best: Option<(SequencePair, ObjectiveValue)>,
    outcome: Result<()>,
    started: Option<Instant>,
) {
    match outcome {
        Ok(()) => record.meta.complete = true,
        Err(e) => record.meta.error = Some(e.to_string()),
    }
    record.meta.best = best.map(|(sp, v)| BestPlacement {
        sp,
        hpwl: v.hpwl,
        positions: v.placement.positions,
    });
    record.meta.wall_time_s = started.map(|t| t.elapsed().as_secs_f64());
}

struct BoState {
    dataset: Dataset,
    feasible: FeasibleSet,
    best: Option<(SequencePair, ObjectiveValue)>,
}

impl BoState {
    fn absorb(&mut self, sp: SequencePair, v: ObjectiveValue) -> Result<()> {
        self.dataset.push(sp.clone(), -v.hpwl)?;
        self.feasible.insert(sp.clone());
        if self.best.as_ref().is_none_or(|(_, b)| v.hpwl < b.hpwl) {
            self.best = Some((sp, v));
        }
        Ok(())
    }
}

/// Runs batch BO on `design`. Failures after the run has started return a
/// partial record with `complete == false` and the error message.
pub fn run_bo(design: &Design, cfg: &BoConfig) -> Result<RunRecord> {
    cfg.check()?;
    let started = cfg.timing.then(Instant::now);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut record = new_record(design, Algo::Bo, cfg.seed, config_json(cfg));
    let mut state = BoState {
        dataset: Dataset::new(),
        feasible: FeasibleSet::new(),
        best: None,
    };
    let outcome = bo_loop(design, cfg, &mut rng, &mut record, &mut state, started);
    finish(&mut record, state.best, outcome, started);
    Ok(record)
}

fn stamp(record: &mut RunRecord, started: Option<Instant>) {
    if let (Some(t), Some(row)) = (started, record.rows.last_mut()) {
        row.wall_time_s = Some(t.elapsed().as_secs_f64());
    }
}

fn bo_loop(
    design: &Design,
    cfg: &BoConfig,
    rng: &mut ChaCha8Rng,
    record: &mut RunRecord,
    state: &mut BoState,
    started: Option<Instant>,
) -> Result<()> {
    let init = initial_design(design, cfg.n_init, cfg.max_draws, rng)?;
    record.meta.init_acceptance_rate = init.acceptance_rate;
    for (sp, v) in init.dataset.points().iter().zip(init.evaluations) {
        record.push(0, sp.clone(), v.hpwl, None);
        stamp(record, started);
        state.absorb(sp.clone(), v)?;
    }

    let gate = OutlineGate::new(design);
    for round in 1..=cfg.rounds {
        let (post, _) = train(&state.dataset, &cfg.fit)?;
        let incumbent = state.dataset.best().expect("nonempty").1;
        let ctx = BatchContext {
            posterior: &post,
            acq: AcqConfig {
                kind: cfg.acq,
                ucb_beta: cfg.ucb_beta,
                incumbent,
            },
            batch: cfg.batch,
            is_feasible: |sp: &SequencePair| gate.admits(sp),
            exclude: Some(&state.dataset),
        };
        let feasible = std::mem::take(&mut state.feasible);
        let proposal = optimize_batch(&ctx, feasible, rng, cfg.max_opt_rounds)?;
        state.feasible = proposal.expanded_feasible;

        let batch = fresh_batch(design, cfg, proposal.points, state, rng)?;
        let results = evaluate_all(design, &batch);
        for (sp, r) in batch.into_iter().zip(results) {
            let v = r?;
            record.push(round, sp.clone(), v.hpwl, None);
            stamp(record, started);
            state.absorb(sp, v)?;
        }
    }
    Ok(())
}

/// Replaces proposals that were already evaluated (or repeated) with
/// unevaluated feasible points, first from the feasible set, then by fresh
/// random draws.
fn fresh_batch(
    design: &Design,
    cfg: &BoConfig,
    proposed: Vec<SequencePair>,
    state: &BoState,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SequencePair>> {
    let want = cfg.batch.batch_size;
    let mut taken: HashSet<SpKey> = HashSet::new();
    let mut batch = Vec::with_capacity(want);
    for sp in proposed {
        let key = sp.canonical_key();
        if !state.dataset.contains(&key) && taken.insert(key) {
            batch.push(sp);
        }
    }
    if batch.len() < want {
        let mut spare: Vec<&SequencePair> = state
            .feasible
            .points()
            .iter()
            .filter(|sp| {
                let k = sp.canonical_key();
                !state.dataset.contains(&k) && !taken.contains(&k)
            })
            .collect();
        while batch.len() < want && !spare.is_empty() {
            let sp = spare.swap_remove(rng.random_range(0..spare.len())).clone();
            taken.insert(sp.canonical_key());
            batch.push(sp);
        }
    }
    if batch.len() < want {
        let mut skip = taken;
        skip.extend(state.dataset.points().iter().map(|sp| sp.canonical_key()));
        let extra = sample_feasible(design, want - batch.len(), &skip, cfg.max_draws, rng)?;
        batch.extend(extra.points);
    }
    Ok(batch)
}
