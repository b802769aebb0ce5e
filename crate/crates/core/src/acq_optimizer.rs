//! Maximizes the batch acquisition over feasible sequence pairs.
//!
//! The first batch member is the single-point argmax over the known feasible
//! set. The others start at random feasible points and are improved by
//! synchronous rounds of one hill-climbing step each: every coordinate moves to
//! its best feasible neighbor given the other coordinates from the previous
//! round. All feasible neighbors seen along the way join the feasible set.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;

use crate::acquisition::{acq_value, log_batch_value, AcqConfig, BatchAcqConfig, RhoMap, ScoredPoint};
use crate::error::{Error, Result};
use crate::seqpair::{SequencePair, SpKey};
use crate::surrogate_gp::{Dataset, GpPosterior};

pub const DEFAULT_MAX_ROUNDS: usize = 20;

/// Sequence pairs known to fit the outline, in discovery order.
#[derive(Debug, Clone, Default)]
pub struct FeasibleSet {
    points: Vec<SequencePair>,
    keys: HashSet<SpKey>,
}

impl FeasibleSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `x` if it is new. Returns whether it was added.
    pub fn insert(&mut self, x: SequencePair) -> bool {
        if self.keys.insert(x.canonical_key()) {
            self.points.push(x);
            true
        } else {
            false
        }
    }

    pub fn extend(&mut self, xs: impl IntoIterator<Item = SequencePair>) {
        for x in xs {
            self.insert(x);
        }
    }

    pub fn contains(&self, key: &SpKey) -> bool {
        self.keys.contains(key)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SequencePair] {
        &self.points
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&SequencePair> {
        if self.points.is_empty() {
            None
        } else {
            Some(&self.points[rng.random_range(0..self.points.len())])
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchProposal {
    pub points: Vec<SequencePair>,
    pub expanded_feasible: FeasibleSet,
    /// Coordinate rounds actually run.
    pub rounds: usize,
}

/// One hill-climbing step: the best feasible neighbor of `x_old` under `g` if
/// it strictly improves on `x_old`, else `x_old`. Ties go to the smaller
/// canonical key. Also returns every feasible neighbor.
pub fn local_update<G, C, N>(
    mut g: G,
    x_old: &SequencePair,
    mut is_feasible: C,
    neighbors: N,
) -> (SequencePair, Vec<SequencePair>)
where
    G: FnMut(&SequencePair) -> f64,
    C: FnMut(&SequencePair) -> bool,
    N: FnOnce(&SequencePair) -> Vec<SequencePair>,
{
    let feasible: Vec<SequencePair> = neighbors(x_old)
        .into_iter()
        .filter(|x| is_feasible(x))
        .collect();
    let mut best: Option<(f64, SpKey, usize)> = None;
    for (i, x) in feasible.iter().enumerate() {
        let v = g(x);
        if v.is_nan() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bv, bk, _)) => v > *bv || (v == *bv && x.canonical_key() < *bk),
        };
        if better {
            best = Some((v, x.canonical_key(), i));
        }
    }
    let new = match best {
        Some((v, _, i)) if v > g(x_old) => feasible[i].clone(),
        _ => x_old.clone(),
    };
    (new, feasible)
}

/// Everything the batch optimizer reads but never changes.
pub struct BatchContext<'a, F> {
    pub posterior: &'a GpPosterior,
    pub acq: AcqConfig,
    pub batch: BatchAcqConfig,
    /// Feasibility test for newly discovered sequence pairs.
    pub is_feasible: F,
    /// Points left out of the first-member argmax (typically the evaluated ones).
    pub exclude: Option<&'a Dataset>,
}

fn argmax_by_key(values: &[f64], points: &[SequencePair]) -> Option<usize> {
    let mut best: Option<(usize, SpKey)> = None;
    for (i, x) in points.iter().enumerate() {
        if values[i].is_nan() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((b, bk)) => {
                values[i] > values[*b] || (values[i] == values[*b] && x.canonical_key() < *bk)
            }
        };
        if better {
            best = Some((i, x.canonical_key()));
        }
    }
    best.map(|(i, _)| i)
}

pub fn optimize_batch<F, R>(
    ctx: &BatchContext<'_, F>,
    feasible: FeasibleSet,
    rng: &mut R,
    max_rounds: usize,
) -> Result<BatchProposal>
where
    F: Fn(&SequencePair) -> bool + Sync,
    R: Rng + ?Sized,
{
    if feasible.is_empty() {
        return Err(Error::invalid("feasible set is empty"));
    }
    let b_total = ctx.batch.batch_size;
    if b_total == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    let post = ctx.posterior;
    let mut feasible = feasible;

    let pool: Vec<SequencePair> = match ctx.exclude {
        Some(d) => {
            let fresh: Vec<SequencePair> = feasible
                .points()
                .iter()
                .filter(|x| !d.contains(&x.canonical_key()))
                .cloned()
                .collect();
            if fresh.is_empty() {
                feasible.points().to_vec()
            } else {
                fresh
            }
        }
        None => feasible.points().to_vec(),
    };
    let pool_acq: Vec<f64> = post
        .predict_many(&pool)?
        .into_iter()
        .map(|p| acq_value(p, &ctx.acq))
        .collect();
    let first = argmax_by_key(&pool_acq, &pool)
        .ok_or_else(|| Error::Numerical("acquisition is NaN over the whole feasible set".into()))?;
    let rho = RhoMap::from_pool(&pool_acq, ctx.batch.rho_scale);

    let score = |x: SequencePair| -> Result<ScoredPoint> { ScoredPoint::new(post, x, &ctx.acq) };
    let mut batch: Vec<ScoredPoint> = Vec::with_capacity(b_total);
    batch.push(score(pool[first].clone())?);
    for _ in 1..b_total {
        let x = feasible.sample(rng).expect("nonempty").clone();
        batch.push(score(x)?);
    }

    let mut rounds = 0;
    while rounds < max_rounds && b_total > 1 {
        rounds += 1;
        let frozen = &batch;
        let updates: Vec<Result<(Option<ScoredPoint>, Vec<SequencePair>)>> = (1..b_total)
            .into_par_iter()
            .map(|b| {
                let mut scored: Vec<ScoredPoint> = Vec::new();
                let mut failure = None;
                let (x_new, found) = local_update(
                    |x| {
                        let mut members: Vec<&ScoredPoint> = frozen.iter().collect();
                        if x.canonical_key() == frozen[b].key {
                            return log_batch_value(post, &members, &rho);
                        }
                        let cand = match score(x.clone()) {
                            Ok(c) => c,
                            Err(e) => {
                                failure.get_or_insert(e);
                                return f64::NAN;
                            }
                        };
                        members[b] = &cand;
                        let v = log_batch_value(post, &members, &rho);
                        drop(members);
                        scored.push(cand);
                        v
                    },
                    &frozen[b].point,
                    |x| (ctx.is_feasible)(x),
                    |x| x.neighbors(),
                );
                if let Some(e) = failure {
                    return Err(e);
                }
                let key = x_new.canonical_key();
                let moved = scored.into_iter().find(|s| s.key == key && key != frozen[b].key);
                Ok((moved, found))
            })
            .collect();

        let mut changed = false;
        let mut next = batch.clone();
        for (i, u) in updates.into_iter().enumerate() {
            let (new_point, found) = u?;
            feasible.extend(found);
            if let Some(p) = new_point {
                next[i + 1] = p;
                changed = true;
            }
        }
        batch = next;
        if !changed {
            break;
        }
    }

    let mut seen: HashSet<SpKey> = HashSet::new();
    let mut points = Vec::with_capacity(b_total);
    let mut pending = 0;
    for s in batch {
        if seen.insert(s.key.clone()) {
            points.push(s.point);
        } else {
            pending += 1;
        }
    }
    if pending > 0 {
        let mut spare: Vec<&SequencePair> = feasible
            .points()
            .iter()
            .filter(|x| !seen.contains(&x.canonical_key()))
            .collect();
        while pending > 0 && !spare.is_empty() {
            let x = spare.swap_remove(rng.random_range(0..spare.len()));
            points.push(x.clone());
            pending -= 1;
        }
    }

    Ok(BatchProposal {
        points,
        expanded_feasible: feasible,
        rounds,
    })
}
