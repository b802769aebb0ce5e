//! Gaussian-process surrogate over sequence pairs.
//!
//! The covariance of two sequence pairs is the product of two position kernels,
//! one per permutation: `exp(-sum_n w_n |pos_a(n) - pos_b(n)|)`. One weight is
//! learned per macro and per permutation by gradient ascent on the log marginal
//! likelihood. Targets are z-scored before fitting; predictions are returned in
//! the caller's units.

use std::collections::HashSet;

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqpair::{Permutation, SequencePair, SpKey};

/// Smallest admissible observation noise variance.
pub const NOISE_FLOOR: f64 = 1e-6;
const FIRST_JITTER: f64 = 1e-6;
const MAX_JITTER: f64 = 1e-2;
const LOG_WEIGHT_MIN: f64 = -12.0;
const LOG_WEIGHT_MAX: f64 = 6.0;
const EMBED_CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// Log weights for the first permutation.
    pub log_w: Vec<f64>,
    /// Log weights for the second permutation.
    pub log_w_prime: Vec<f64>,
}

impl KernelParams {
    pub fn uniform(num_macros: usize, weight: f64) -> Self {
        let lw = weight.ln();
        Self {
            log_w: vec![lw; num_macros],
            log_w_prime: vec![lw; num_macros],
        }
    }

    pub fn len(&self) -> usize {
        self.log_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_w.is_empty()
    }

    /// `[w_1..w_N, w'_1..w'_N]`.
    pub fn weights(&self) -> Vec<f64> {
        self.log_w
            .iter()
            .chain(&self.log_w_prime)
            .map(|l| l.exp())
            .collect()
    }

    fn check(&self, num_macros: usize) -> Result<()> {
        if self.log_w.len() != num_macros || self.log_w_prime.len() != num_macros {
            return Err(Error::invalid(format!(
                "kernel has {}/{} weights but sequence pairs have {num_macros} macros",
                self.log_w.len(),
                self.log_w_prime.len()
            )));
        }
        if !self.log_w.iter().chain(&self.log_w_prime).all(|v| v.is_finite()) {
            return Err(Error::invalid("kernel weights must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    pub kernel: KernelParams,
    pub noise_var: f64,
    pub mean_const: f64,
}

impl GpHyper {
    /// Starting point for fitting: uniform weights `1/N`, mean at the sample
    /// mean and noise at 1% of the sample variance.
    pub fn initial(num_macros: usize, values: &[f64]) -> Self {
        let (mean, var) = mean_var(values);
        Self {
            kernel: KernelParams::uniform(num_macros, 1.0 / num_macros.max(1) as f64),
            noise_var: (0.01 * var).max(NOISE_FLOOR),
            mean_const: mean,
        }
    }

    fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.kernel.len() + 2);
        v.extend(&self.kernel.log_w);
        v.extend(&self.kernel.log_w_prime);
        v.push(self.noise_var.ln());
        v.push(self.mean_const);
        v
    }

    fn from_vec(v: &[f64], num_macros: usize) -> Self {
        Self {
            kernel: KernelParams {
                log_w: v[..num_macros].to_vec(),
                log_w_prime: v[num_macros..2 * num_macros].to_vec(),
            },
            noise_var: v[2 * num_macros].exp(),
            mean_const: v[2 * num_macros + 1],
        }
    }

    fn check(&self, num_macros: usize) -> Result<()> {
        self.kernel.check(num_macros)?;
        if !(self.noise_var >= NOISE_FLOOR) || !self.noise_var.is_finite() {
            return Err(Error::invalid(format!(
                "noise variance {} is below the floor {NOISE_FLOOR}",
                self.noise_var
            )));
        }
        if !self.mean_const.is_finite() {
            return Err(Error::invalid("mean constant must be finite"));
        }
        Ok(())
    }
}

/// Gradient of the log marginal likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGradient {
    pub log_w: Vec<f64>,
    pub log_w_prime: Vec<f64>,
    pub log_noise: f64,
    pub mean: f64,
}

impl HyperGradient {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.log_w.len() * 2 + 2);
        v.extend(&self.log_w);
        v.extend(&self.log_w_prime);
        v.push(self.log_noise);
        v.push(self.mean);
        v
    }
}

/// Evaluated sequence pairs and their objective values, without duplicates.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    points: Vec<SequencePair>,
    values: Vec<f64>,
    keys: HashSet<SpKey>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(points: Vec<SequencePair>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::invalid("points and values differ in length"));
        }
        let mut d = Self::new();
        for (x, y) in points.into_iter().zip(values) {
            d.push(x, y)?;
        }
        Ok(d)
    }

    pub fn push(&mut self, x: SequencePair, y: f64) -> Result<()> {
        if !y.is_finite() {
            return Err(Error::invalid("objective value must be finite"));
        }
        if let Some(first) = self.points.first() {
            if first.len() != x.len() {
                return Err(Error::invalid("sequence pair size differs from the dataset"));
            }
        }
        if !self.keys.insert(x.canonical_key()) {
            return Err(Error::invalid(format!("duplicate sequence pair {x}")));
        }
        self.points.push(x);
        self.values.push(y);
        Ok(())
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, key: &SpKey) -> bool {
        self.keys.contains(key)
    }

    /// Index and value of the largest objective value.
    pub fn best(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold(None, |acc, (i, v)| match acc {
                Some((_, b)) if b >= v => acc,
                _ => Some((i, v)),
            })
    }

    fn num_macros(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Affine map between caller units and the z-scored units the GP works in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub center: f64,
    pub scale: f64,
}

impl Standardizer {
    pub fn fit(values: &[f64]) -> Self {
        let (center, var) = mean_var(values);
        let sd = var.sqrt();
        let scale = if sd > 1e-12 * center.abs().max(1.0) { sd } else { 1.0 };
        Self { center, scale }
    }

    pub fn to_latent(&self, y: f64) -> f64 {
        (y - self.center) / self.scale
    }

    pub fn from_latent(&self, z: f64) -> f64 {
        self.center + self.scale * z
    }
}

pub fn k_perm(p1: &Permutation, p2: &Permutation, weights: &[f64]) -> Result<f64> {
    if p1.len() != p2.len() || p1.len() != weights.len() {
        return Err(Error::invalid(format!(
            "permutation kernel needs equal lengths, got {}, {} and {} weights",
            p1.len(),
            p2.len(),
            weights.len()
        )));
    }
    let s: f64 = p1
        .positions()
        .iter()
        .zip(p2.positions())
        .zip(weights)
        .map(|((&a, &b), w)| w * a.abs_diff(b) as f64)
        .sum();
    Ok((-s).exp())
}

pub fn k_sp(a: &SequencePair, b: &SequencePair, params: &KernelParams) -> Result<f64> {
    let w = params.weights();
    let n = params.len();
    Ok(k_perm(&a.pi, &b.pi, &w[..n])? * k_perm(&a.pi_prime, &b.pi_prime, &w[n..])?)
}

/// Covariance matrix of `xs` under `params`.
pub fn gram(xs: &[SequencePair], params: &KernelParams) -> Result<Mat<f64>> {
    for x in xs {
        params.check(x.len())?;
    }
    let w = params.weights();
    let feats: Vec<Vec<f64>> = xs.iter().map(features).collect();
    Ok(gram_of_features(&feats, &w))
}

/// Positions of every macro in both permutations, as one vector.
fn features(x: &SequencePair) -> Vec<f64> {
    x.pi
        .positions()
        .iter()
        .chain(x.pi_prime.positions())
        .map(|&p| p as f64)
        .collect()
}

fn kernel_of(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .zip(w)
        .map(|((x, y), w)| w * (x - y).abs())
        .sum();
    (-s).exp()
}

fn gram_of_features(feats: &[Vec<f64>], w: &[f64]) -> Mat<f64> {
    let n = feats.len();
    let mut k = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in 0..i {
            let v = kernel_of(&feats[i], &feats[j], w);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Cholesky factor of `k + (noise + jitter) I`, escalating the jitter on failure.
fn factorize(k: &Mat<f64>, noise: f64) -> Result<(faer::linalg::solvers::Llt<f64>, f64)> {
    let n = k.nrows();
    let mut jitter = 0.0;
    loop {
        let a = Mat::from_fn(n, n, |i, j| {
            if i == j {
                k[(i, j)] + noise + jitter
            } else {
                k[(i, j)]
            }
        });
        if let Ok(llt) = a.llt(Side::Lower) {
            return Ok((llt, jitter));
        }
        jitter = if jitter == 0.0 { FIRST_JITTER } else { jitter * 10.0 };
        if jitter > MAX_JITTER * 1.000001 {
            return Err(Error::Numerical(format!(
                "covariance of {n} points is not positive definite even with jitter {MAX_JITTER}"
            )));
        }
    }
}

/// `(L L^T)^{-1} rhs`.
fn cholesky_solve(l: faer::MatRef<'_, f64>, rhs: &[f64]) -> Vec<f64> {
    let mut b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    l.solve_lower_triangular_in_place(b.as_mut());
    l.transpose().solve_upper_triangular_in_place(b.as_mut());
    (0..rhs.len()).map(|i| b[(i, 0)]).collect()
}

fn mll_arrays(
    hyper: &GpHyper,
    feats: &[Vec<f64>],
    y: &[f64],
    with_grad: bool,
) -> Result<(f64, Option<HyperGradient>)> {
    let n = y.len();
    let num_macros = hyper.kernel.len();
    let w = hyper.kernel.weights();
    let k = gram_of_features(feats, &w);
    let (llt, _) = factorize(&k, hyper.noise_var)?;
    let l = llt.L();
    let centered: Vec<f64> = y.iter().map(|v| v - hyper.mean_const).collect();
    let alpha = cholesky_solve(l, &centered);
    let fit_term: f64 = centered.iter().zip(&alpha).map(|(a, b)| a * b).sum();
    let log_det: f64 = 2.0 * (0..n).map(|i| l[(i, i)].ln()).sum::<f64>();
    let value =
        -0.5 * fit_term - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    if !value.is_finite() {
        return Err(Error::Numerical("log marginal likelihood is not finite".into()));
    }
    if !with_grad {
        return Ok((value, None));
    }

    // d mll / d theta = 1/2 tr((alpha alpha^T - K^{-1}) dK/dtheta)
    let inv = llt.inverse();
    let mut gw = vec![0.0; 2 * num_macros];
    let mut trace = 0.0;
    for i in 0..n {
        trace += alpha[i] * alpha[i] - inv[(i, i)];
        for j in 0..i {
            let a = (alpha[i] * alpha[j] - inv[(i, j)]) * k[(i, j)];
            if a == 0.0 {
                continue;
            }
            for (g, (fi, fj)) in gw.iter_mut().zip(feats[i].iter().zip(&feats[j])) {
                *g += a * (fi - fj).abs();
            }
        }
    }
    for (g, w) in gw.iter_mut().zip(&w) {
        *g *= -w;
    }
    let grad = HyperGradient {
        log_w_prime: gw.split_off(num_macros),
        log_w: gw,
        log_noise: 0.5 * hyper.noise_var * trace,
        mean: alpha.iter().sum(),
    };
    Ok((value, Some(grad)))
}

fn check_data(hyper: &GpHyper, data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::invalid("dataset is empty"));
    }
    hyper.check(data.num_macros())
}

/// Log marginal likelihood of `data.values()` under mean `m` and covariance
/// `K + noise I`.
pub fn mll(hyper: &GpHyper, data: &Dataset) -> Result<f64> {
    check_data(hyper, data)?;
    let feats: Vec<Vec<f64>> = data.points().iter().map(features).collect();
    Ok(mll_arrays(hyper, &feats, data.values(), false)?.0)
}

pub fn mll_grad(hyper: &GpHyper, data: &Dataset) -> Result<HyperGradient> {
    Ok(mll_with_grad(hyper, data)?.1)
}

pub fn mll_with_grad(hyper: &GpHyper, data: &Dataset) -> Result<(f64, HyperGradient)> {
    check_data(hyper, data)?;
    let feats: Vec<Vec<f64>> = data.points().iter().map(features).collect();
    let (v, g) = mll_arrays(hyper, &feats, data.values(), true)?;
    Ok((v, g.expect("gradient requested")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iters: usize,
    /// Adam step size in log-parameter units.
    pub learning_rate: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            learning_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub hyper: GpHyper,
    pub mll: f64,
    /// Best log marginal likelihood seen after each iterate, starting with `init`.
    pub best_trace: Vec<f64>,
}

/// Adam ascent on the log marginal likelihood; returns the best iterate seen.
pub fn fit(data: &Dataset, init: &GpHyper, opts: &FitOptions) -> Result<FitReport> {
    check_data(init, data)?;
    let feats: Vec<Vec<f64>> = data.points().iter().map(features).collect();
    fit_arrays(&feats, data.values(), init, opts)
}

fn fit_arrays(
    feats: &[Vec<f64>],
    y: &[f64],
    init: &GpHyper,
    opts: &FitOptions,
) -> Result<FitReport> {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;
    let num_macros = init.kernel.len();
    let mut theta = init.to_vec();
    let mut m1 = vec![0.0; theta.len()];
    let mut m2 = vec![0.0; theta.len()];
    let mut best = init.clone();
    let mut best_mll = f64::NEG_INFINITY;
    let mut best_trace = Vec::with_capacity(opts.max_iters + 1);
    let log_floor = NOISE_FLOOR.ln();

    for it in 0..=opts.max_iters {
        let hyper = GpHyper::from_vec(&theta, num_macros);
        let (value, grad) = mll_arrays(&hyper, feats, y, it < opts.max_iters)?;
        if value > best_mll {
            best_mll = value;
            best = hyper;
        }
        best_trace.push(best_mll);
        let Some(grad) = grad else { break };
        let t = (it + 1) as i32;
        for (i, g) in grad.to_vec().into_iter().enumerate() {
            m1[i] = BETA1 * m1[i] + (1.0 - BETA1) * g;
            m2[i] = BETA2 * m2[i] + (1.0 - BETA2) * g * g;
            let mh = m1[i] / (1.0 - BETA1.powi(t));
            let vh = m2[i] / (1.0 - BETA2.powi(t));
            theta[i] += opts.learning_rate * mh / (vh.sqrt() + EPS);
        }
        for lw in &mut theta[..2 * num_macros] {
            *lw = lw.clamp(LOG_WEIGHT_MIN, LOG_WEIGHT_MAX);
        }
        theta[2 * num_macros] = theta[2 * num_macros].max(log_floor);
    }
    Ok(FitReport {
        hyper: best,
        mll: best_mll,
        best_trace,
    })
}

/// Predictive mean and variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

impl Prediction {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// A candidate projected onto the training set, for repeated cheap
/// cross-covariance queries.
#[derive(Debug, Clone)]
pub struct Embedding {
    features: Vec<f64>,
    /// `L^{-1} k_{X,x}`.
    projection: Vec<f64>,
    latent: Prediction,
}

impl Embedding {
    pub fn latent(&self) -> Prediction {
        self.latent
    }
}

/// Exact GP posterior with a cached Cholesky factor. Immutable once built.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    hyper: GpHyper,
    standardizer: Standardizer,
    weights: Vec<f64>,
    train: Vec<Vec<f64>>,
    chol: Mat<f64>,
    alpha: Vec<f64>,
    jitter: f64,
}

impl GpPosterior {
    /// Builds the posterior for `data`. The values are z-scored first and
    /// `hyper` is read in those standardized units.
    pub fn new(hyper: GpHyper, data: &Dataset) -> Result<Self> {
        check_data(&hyper, data)?;
        let standardizer = Standardizer::fit(data.values());
        let z: Vec<f64> = data.values().iter().map(|&v| standardizer.to_latent(v)).collect();
        let weights = hyper.kernel.weights();
        let train: Vec<Vec<f64>> = data.points().iter().map(features).collect();
        let k = gram_of_features(&train, &weights);
        let (llt, jitter) = factorize(&k, hyper.noise_var)?;
        let chol = llt.L().to_owned();
        let centered: Vec<f64> = z.iter().map(|v| v - hyper.mean_const).collect();
        let alpha = cholesky_solve(chol.as_ref(), &centered);
        Ok(Self {
            hyper,
            standardizer,
            weights,
            train,
            chol,
            alpha,
            jitter,
        })
    }

    pub fn hyper(&self) -> &GpHyper {
        &self.hyper
    }

    pub fn standardizer(&self) -> Standardizer {
        self.standardizer
    }

    /// Diagonal jitter that was needed on top of the noise variance.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn num_train(&self) -> usize {
        self.train.len()
    }

    fn num_macros(&self) -> usize {
        self.weights.len() / 2
    }

    fn check_point(&self, x: &SequencePair) -> Result<()> {
        if x.len() != self.num_macros() {
            return Err(Error::invalid(format!(
                "sequence pair has {} macros, model expects {}",
                x.len(),
                self.num_macros()
            )));
        }
        Ok(())
    }

    fn to_caller_units(&self, p: Prediction) -> Prediction {
        let s = self.standardizer.scale;
        Prediction {
            mean: self.standardizer.from_latent(p.mean),
            variance: p.variance * s * s,
        }
    }

    pub fn embed(&self, x: &SequencePair) -> Result<Embedding> {
        Ok(self.embed_many(std::slice::from_ref(x))?.remove(0))
    }

    pub fn embed_many(&self, xs: &[SequencePair]) -> Result<Vec<Embedding>> {
        let mut out = Vec::with_capacity(xs.len());
        self.project_chunks(xs, |features, projection, latent| {
            out.push(Embedding {
                features,
                projection,
                latent,
            })
        })?;
        Ok(out)
    }

    /// Predictions in caller units for many points at once.
    pub fn predict_many(&self, xs: &[SequencePair]) -> Result<Vec<Prediction>> {
        let mut out = Vec::with_capacity(xs.len());
        self.project_chunks(xs, |_, _, latent| out.push(self.to_caller_units(latent)))?;
        Ok(out)
    }

    fn project_chunks(
        &self,
        xs: &[SequencePair],
        mut sink: impl FnMut(Vec<f64>, Vec<f64>, Prediction),
    ) -> Result<()> {
        for x in xs {
            self.check_point(x)?;
        }
        let n = self.train.len();
        for chunk in xs.chunks(EMBED_CHUNK) {
            let feats: Vec<Vec<f64>> = chunk.iter().map(features).collect();
            let mut kxc = Mat::from_fn(n, chunk.len(), |i, c| {
                kernel_of(&self.train[i], &feats[c], &self.weights)
            });
            let means: Vec<f64> = (0..chunk.len())
                .map(|c| {
                    self.hyper.mean_const
                        + (0..n).map(|i| kxc[(i, c)] * self.alpha[i]).sum::<f64>()
                })
                .collect();
            self.chol.solve_lower_triangular_in_place(kxc.as_mut());
            for (c, f) in feats.into_iter().enumerate() {
                let projection: Vec<f64> = (0..n).map(|i| kxc[(i, c)]).collect();
                let explained: f64 = projection.iter().map(|v| v * v).sum();
                let latent = Prediction {
                    mean: means[c],
                    variance: (1.0 - explained).max(0.0),
                };
                sink(f, projection, latent);
            }
        }
        Ok(())
    }

    /// Predictive mean and variance in the units of the training values.
    pub fn predict(&self, x: &SequencePair) -> Result<Prediction> {
        Ok(self.prediction(&self.embed(x)?))
    }

    /// Predictive mean and variance in standardized units.
    pub fn predict_latent(&self, x: &SequencePair) -> Result<Prediction> {
        Ok(self.embed(x)?.latent)
    }

    pub fn prediction(&self, e: &Embedding) -> Prediction {
        self.to_caller_units(e.latent)
    }

    /// Posterior covariance in the units of the training values.
    pub fn cross_cov(&self, a: &SequencePair, b: &SequencePair) -> Result<f64> {
        let ea = self.embed(a)?;
        let eb = self.embed(b)?;
        Ok(self.embedded_cross_cov(&ea, &eb))
    }

    pub fn embedded_cross_cov(&self, a: &Embedding, b: &Embedding) -> f64 {
        let prior = kernel_of(&a.features, &b.features, &self.weights);
        let explained: f64 = a.projection.iter().zip(&b.projection).map(|(x, y)| x * y).sum();
        let s = self.standardizer.scale;
        (prior - explained) * s * s
    }
}

/// Standardizes `data`, fits hyperparameters from the default start and
/// returns the resulting posterior.
pub fn train(data: &Dataset, opts: &FitOptions) -> Result<(GpPosterior, FitReport)> {
    if data.is_empty() {
        return Err(Error::invalid("dataset is empty"));
    }
    let st = Standardizer::fit(data.values());
    let z: Vec<f64> = data.values().iter().map(|&v| st.to_latent(v)).collect();
    let init = GpHyper::initial(data.num_macros(), &z);
    let feats: Vec<Vec<f64>> = data.points().iter().map(features).collect();
    let report = fit_arrays(&feats, &z, &init, opts)?;
    let post = GpPosterior::new(report.hyper.clone(), data)?;
    Ok((post, report))
}
