//! Single-point acquisition functions and the quality-weighted determinant
//! used to score a whole batch.
//!
//! All values follow the maximization convention: larger objective is better.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::seqpair::{SequencePair, SpKey};
use crate::surrogate_gp::{Embedding, GpPosterior, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcqKind {
    Ei,
    Ucb,
}

impl std::str::FromStr for AcqKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ei" => Ok(Self::Ei),
            "ucb" => Ok(Self::Ucb),
            _ => Err(crate::error::Error::invalid(format!(
                "unknown acquisition `{s}` (expected ei or ucb)"
            ))),
        }
    }
}

impl std::fmt::Display for AcqKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ei => "ei",
            Self::Ucb => "ucb",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcqConfig {
    pub kind: AcqKind,
    /// Exploration weight for UCB.
    pub ucb_beta: f64,
    /// Best objective value observed so far.
    pub incumbent: f64,
}

impl AcqConfig {
    pub fn ei(incumbent: f64) -> Self {
        Self {
            kind: AcqKind::Ei,
            ucb_beta: 4.0,
            incumbent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchAcqConfig {
    pub batch_size: usize,
    /// Temperature of the quality weights, in units of the candidate pool's
    /// acquisition standard deviation.
    pub rho_scale: f64,
}

impl Default for BatchAcqConfig {
    fn default() -> Self {
        Self {
            batch_size: 10,
            rho_scale: 1.0,
        }
    }
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `E[max(g - incumbent, 0)]` for `g ~ N(mean, std^2)`.
pub fn expected_improvement(mean: f64, std: f64, incumbent: f64) -> f64 {
    let gap = mean - incumbent;
    if std <= 0.0 {
        return gap.max(0.0);
    }
    let z = gap / std;
    (gap * std_normal_cdf(z) + std * std_normal_pdf(z)).max(0.0)
}

pub fn upper_confidence_bound(mean: f64, std: f64, beta: f64) -> f64 {
    mean + beta.sqrt() * std
}

pub fn acq_value(p: Prediction, cfg: &AcqConfig) -> f64 {
    let std = p.variance.max(0.0).sqrt();
    match cfg.kind {
        AcqKind::Ei => expected_improvement(p.mean, std, cfg.incumbent),
        AcqKind::Ucb => upper_confidence_bound(p.mean, std, cfg.ucb_beta),
    }
}

pub fn acq_single(post: &GpPosterior, x: &SequencePair, cfg: &AcqConfig) -> Result<f64> {
    Ok(acq_value(post.predict(x)?, cfg))
}

/// Positive, strictly increasing map from acquisition values to quality
/// weights: `exp((z - shift) / temperature)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoMap {
    pub shift: f64,
    pub temperature: f64,
}

impl RhoMap {
    pub fn new(shift: f64, temperature: f64) -> Self {
        Self { shift, temperature }
    }

    /// Shift at the pool maximum, temperature `rho_scale` times the pool's
    /// standard deviation (or `rho_scale` when the pool is flat).
    pub fn from_pool(values: &[f64], rho_scale: f64) -> Self {
        let shift = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shift = if shift.is_finite() { shift } else { 0.0 };
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let temperature = if sd > 0.0 && sd.is_finite() {
            rho_scale * sd
        } else {
            rho_scale
        };
        Self { shift, temperature }
    }

    pub fn apply(&self, z: f64) -> f64 {
        ((z - self.shift) / self.temperature).exp()
    }
}

/// A point with everything needed to score it inside a batch.
#[derive(Debug, Clone)]
pub struct ScoredPoint {
    pub point: SequencePair,
    pub key: SpKey,
    pub embedding: Embedding,
    pub acq: f64,
}

impl ScoredPoint {
    pub fn new(post: &GpPosterior, point: SequencePair, cfg: &AcqConfig) -> Result<Self> {
        let embedding = post.embed(&point)?;
        Ok(Self::from_embedding(post, point, embedding, cfg))
    }

    pub fn from_embedding(
        post: &GpPosterior,
        point: SequencePair,
        embedding: Embedding,
        cfg: &AcqConfig,
    ) -> Self {
        let acq = acq_value(post.prediction(&embedding), cfg);
        Self {
            key: point.canonical_key(),
            point,
            embedding,
            acq,
        }
    }
}

/// Determinant of a symmetric positive semi-definite matrix given row-major,
/// by square-root-free LDL^T. A non-positive pivot means the matrix is
/// singular up to round-off and gives 0.
pub fn psd_determinant(m: &[f64], n: usize) -> f64 {
    assert_eq!(m.len(), n * n);
    let mut l = vec![0.0; n * n];
    let mut d = vec![0.0; n];
    let mut det = 1.0;
    for j in 0..n {
        let mut dj = m[j * n + j];
        for k in 0..j {
            dj -= l[j * n + k] * l[j * n + k] * d[k];
        }
        if !(dj > 0.0) {
            return 0.0;
        }
        d[j] = dj;
        det *= dj;
        for i in j + 1..n {
            let mut v = m[i * n + j];
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k] * d[k];
            }
            l[i * n + j] = v / dj;
        }
    }
    det.max(0.0)
}

/// Natural log of [`psd_determinant`], `-inf` when singular.
pub fn psd_log_determinant(m: &[f64], n: usize) -> f64 {
    assert_eq!(m.len(), n * n);
    let mut l = vec![0.0; n * n];
    let mut d = vec![0.0; n];
    let mut log_det = 0.0;
    for j in 0..n {
        let mut dj = m[j * n + j];
        for k in 0..j {
            dj -= l[j * n + k] * l[j * n + k] * d[k];
        }
        if !(dj > 0.0) {
            return f64::NEG_INFINITY;
        }
        d[j] = dj;
        log_det += dj.ln();
        for i in j + 1..n {
            let mut v = m[i * n + j];
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k] * d[k];
            }
            l[i * n + j] = v / dj;
        }
    }
    log_det
}

fn has_duplicate(members: &[&ScoredPoint]) -> bool {
    (0..members.len()).any(|i| (0..i).any(|j| members[i].key == members[j].key))
}

fn posterior_cov(post: &GpPosterior, members: &[&ScoredPoint]) -> Vec<f64> {
    let n = members.len();
    let mut mat = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let c = if i == j {
                post.prediction(&members[i].embedding).variance
            } else {
                post.embedded_cross_cov(&members[i].embedding, &members[j].embedding)
            };
            mat[i * n + j] = c;
            mat[j * n + i] = c;
        }
    }
    mat
}

/// Log of [`batch_value`] computed without forming the quality weights, so it
/// cannot overflow. The shift of `rho` only adds a constant.
pub fn log_batch_value(post: &GpPosterior, members: &[&ScoredPoint], rho: &RhoMap) -> f64 {
    if has_duplicate(members) {
        return f64::NEG_INFINITY;
    }
    let weights: f64 = members
        .iter()
        .map(|m| 2.0 * (m.acq - rho.shift) / rho.temperature)
        .sum();
    weights + psd_log_determinant(&posterior_cov(post, members), members.len())
}

/// Quality-weighted posterior-covariance determinant of a batch.
pub fn batch_value(post: &GpPosterior, members: &[&ScoredPoint], rho: &RhoMap) -> f64 {
    let n = members.len();
    if has_duplicate(members) {
        return 0.0;
    }
    let q: Vec<f64> = members.iter().map(|m| rho.apply(m.acq)).collect();
    let mut mat = posterior_cov(post, members);
    for i in 0..n {
        for j in 0..n {
            mat[i * n + j] *= q[i] * q[j];
        }
    }
    psd_determinant(&mat, n)
}

/// Batch acquisition of `xs` with quality weights from `rho`.
pub fn acq_batch(
    post: &GpPosterior,
    xs: &[SequencePair],
    cfg: &AcqConfig,
    rho: &RhoMap,
) -> Result<f64> {
    let scored: Vec<ScoredPoint> = xs
        .iter()
        .map(|x| ScoredPoint::new(post, x.clone(), cfg))
        .collect::<Result<_>>()?;
    let refs: Vec<&ScoredPoint> = scored.iter().collect();
    Ok(batch_value(post, &refs, rho))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ei_degenerate_cases() {
        assert_eq!(expected_improvement(3.0, 0.0, 3.0), 0.0);
        assert_eq!(expected_improvement(3.5, 0.0, 3.0), 0.5);
        assert_eq!(expected_improvement(2.0, 0.0, 3.0), 0.0);
        let phi0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((expected_improvement(1.0, 1.0, 1.0) - phi0).abs() < 1e-15);
    }

    #[test]
    fn ei_far_below_incumbent_is_tiny_and_nonnegative() {
        let v = expected_improvement(-40.0, 1.0, 0.0);
        assert!(v >= 0.0 && v < 1e-300);
    }

    #[test]
    fn rho_is_one_at_shift() {
        let r = RhoMap::from_pool(&[1.0, 2.0, 3.0], 1.0);
        assert_eq!(r.apply(3.0), 1.0);
        assert!(r.apply(1.0) < r.apply(2.0));
        let flat = RhoMap::from_pool(&[5.0, 5.0], 2.0);
        assert_eq!(flat.temperature, 2.0);
    }

    #[test]
    fn determinant_small_cases() {
        assert_eq!(psd_determinant(&[4.0], 1), 4.0);
        assert!((psd_determinant(&[2.0, 1.0, 1.0, 3.0], 2) - 5.0).abs() < 1e-15);
        assert_eq!(psd_determinant(&[1.0, 1.0, 1.0, 1.0], 2), 0.0);
        assert_eq!(psd_determinant(&[], 0), 1.0);
        assert!((psd_log_determinant(&[2.0, 1.0, 1.0, 3.0], 2) - 5.0f64.ln()).abs() < 1e-15);
        assert_eq!(psd_log_determinant(&[1.0, 1.0, 1.0, 1.0], 2), f64::NEG_INFINITY);
    }

    #[test]
    fn parse_kind() {
        assert_eq!("EI".parse::<AcqKind>().unwrap(), AcqKind::Ei);
        assert_eq!("ucb".parse::<AcqKind>().unwrap(), AcqKind::Ucb);
        assert!("est".parse::<AcqKind>().is_err());
    }
}
