//! Lifecycle correction: normal-MLE longevity fitting, Z-test comparison of
//! two fitted distributions, clamped death-time sampling, successor-derived
//! end times, and mashup composition repair.

pub mod apply;
pub mod composition;

pub use apply::{
    apply_corrections, parse_corrected_jsonl, parse_corrected_jsonl_str,
    write_corrected_jsonl, CorrectedDataset, CorrectionConfig, CorrectionOutcome,
    CorrectionWarning, EntityLifecycle,
};
pub use composition::{
    correct_composition, ApplyOutcome, CompositionTimeline, DeathPattern, Segment,
    UnavailabilityEvent,
};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::date::Day;

#[derive(Debug, Error)]
pub enum CorrectionError {
    #[error("need at least 2 samples to fit, got {0}")]
    TooFewSamples(usize),
    #[error("negative longevity sample {0} (samples are day counts >= 0)")]
    NegativeSample(f64),
    #[error("sample value {0} is not finite")]
    NonFiniteSample(f64),
    #[error("entity `{id}`: start {start} is not before beta {beta}")]
    StartNotBeforeBeta { id: String, start: Day, beta: Day },
    #[error("successor start list is empty")]
    NoSuccessors,
    #[error("corrupted corrected-dataset file: {0}")]
    CorruptedFile(String),
}

/// Maximum-likelihood fit of a normal longevity distribution.
///
/// The variance is the biased 1/n estimator, not the n-1 form: that is the
/// estimator the correction method is defined with, and the fit must echo it
/// exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFit {
    /// Fitted mean, in days.
    pub mu_hat: f64,
    /// Fitted variance (biased 1/n estimator), in days^2.
    pub sigma2_hat: f64,
    /// Sample size.
    pub n: usize,
}

impl NormalFit {
    pub fn sigma_hat(&self) -> f64 {
        self.sigma2_hat.sqrt()
    }

    /// All-equal samples produce a zero-variance (degenerate) fit.
    pub fn is_degenerate(&self) -> bool {
        self.sigma2_hat == 0.0
    }
}

/// Fit a normal distribution by maximum likelihood: mean and biased (1/n)
/// variance. Requires n >= 2 and non-negative samples.
pub fn fit_normal_mle(samples: &[f64]) -> Result<NormalFit, CorrectionError> {
    if samples.len() < 2 {
        return Err(CorrectionError::TooFewSamples(samples.len()));
    }
    for &x in samples {
        if !x.is_finite() {
            return Err(CorrectionError::NonFiniteSample(x));
        }
        if x < 0.0 {
            return Err(CorrectionError::NegativeSample(x));
        }
    }
    let n = samples.len() as f64;
    let mu_hat = samples.iter().sum::<f64>() / n;
    let sigma2_hat = samples.iter().map(|&x| (x - mu_hat).powi(2)).sum::<f64>() / n;
    Ok(NormalFit {
        mu_hat,
        sigma2_hat,
        n: samples.len(),
    })
}

pub fn fit_normal_mle_days(samples: &[i64]) -> Result<NormalFit, CorrectionError> {
    let as_f64: Vec<f64> = samples.iter().map(|&d| d as f64).collect();
    fit_normal_mle(&as_f64)
}

/// Qualitative band for the Z-statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZBand {
    Same,
    Marginal,
    Significant,
    HighlySignificant,
}

impl ZBand {
    fn from_z(z: f64) -> ZBand {
        if z < 2.0 {
            ZBand::Same
        } else if z < 2.5 {
            ZBand::Marginal
        } else if z < 3.0 {
            ZBand::Significant
        } else {
            ZBand::HighlySignificant
        }
    }
}

/// Z-statistic comparing two fitted distributions:
/// `z = |mu_a - mu_b| / sqrt(sigma2_a + sigma2_b)`.
///
/// Both fits having zero variance is degenerate: equal means give z = 0,
/// unequal means give an infinite-z sentinel (highly significant).
pub fn z_test(a: &NormalFit, b: &NormalFit) -> (f64, ZBand) {
    let denom2 = a.sigma2_hat + b.sigma2_hat;
    let diff = (a.mu_hat - b.mu_hat).abs();
    if denom2 == 0.0 {
        return if diff == 0.0 {
            (0.0, ZBand::Same)
        } else {
            (f64::INFINITY, ZBand::HighlySignificant)
        };
    }
    let z = diff / denom2.sqrt();
    (z, ZBand::from_z(z))
}

/// Where a lifecycle end date came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Deathpool label inside the trust window, kept as-is.
    ObservedDeathpool,
    /// Drawn from the fitted longevity distribution, clamped at beta.
    Sampled,
    /// Latest creation date among the entity's split/transfer successors.
    DerivedSuccessor,
    /// No end: the entity is still available.
    Alive,
}

/// Corrected active interval `[start, end)` with provenance. `end` absent
/// means still alive. `beta` is the earliest confirmed-unavailable date and
/// the upper clamp for sampled ends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LifecycleEstimate {
    pub entity_id: String,
    pub start: Day,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<Day>,
    pub provenance: Provenance,
    pub beta: Day,
}

/// A sampled death time plus the raw draw, so callers (and tests) can see
/// which branch produced the end date.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledDeath {
    pub estimate: LifecycleEstimate,
    /// Longevity drawn from the truncated normal, in whole days (>= 1).
    pub longevity_draw: i64,
    /// True when `start + draw` overshot beta and the end was re-drawn
    /// uniformly inside the window instead.
    pub uniform_fallback: bool,
}

/// Draw a whole-day longevity from Normal(mu, sigma^2) truncated at >= 1 day.
///
/// The draw is rounded to whole days; rejection keeps the truncation exact.
/// A zero-variance fit returns max(round(mu), 1) directly.
pub fn sample_longevity_days<R: Rng + ?Sized>(fit: &NormalFit, rng: &mut R) -> i64 {
    if fit.sigma2_hat == 0.0 {
        return (fit.mu_hat.round() as i64).max(1);
    }
    let normal = Normal::new(fit.mu_hat, fit.sigma_hat()).expect("finite fit parameters");
    for _ in 0..10_000 {
        let draw: f64 = normal.sample(rng);
        let days = draw.round() as i64;
        if days >= 1 {
            return days;
        }
    }
    // Practically unreachable for realistic fits; fall back to the floor.
    1
}

/// Estimate a death time for an entity confirmed unavailable by `beta`.
///
/// `end = start + d` when that lands on or before beta (d drawn from the
/// truncated normal), otherwise `end` is uniform over the open interval
/// `(start, beta)` — degenerating to beta itself when the window is a single
/// day. The invariant `start < end <= beta` always holds.
pub fn sample_death_time<R: Rng + ?Sized>(
    entity_id: &str,
    start: Day,
    beta: Day,
    fit: &NormalFit,
    rng: &mut R,
) -> Result<SampledDeath, CorrectionError> {
    if start >= beta {
        return Err(CorrectionError::StartNotBeforeBeta {
            id: entity_id.to_string(),
            start,
            beta,
        });
    }
    let draw = sample_longevity_days(fit, rng);
    let window = beta.days_since(start);
    let (end, uniform_fallback) = if draw <= window {
        (start.add_days(draw), false)
    } else if window == 1 {
        // Open interval (start, beta) holds no whole day; beta is the only
        // end satisfying start < end <= beta.
        (beta, true)
    } else {
        (start.add_days(rng.random_range(1..window)), true)
    };
    debug_assert!(start < end && end <= beta);
    Ok(SampledDeath {
        estimate: LifecycleEstimate {
            entity_id: entity_id.to_string(),
            start,
            end: Some(end),
            provenance: Provenance::Sampled,
            beta,
        },
        longevity_draw: draw,
        uniform_fallback,
    })
}

/// End time of a split/transferred entity: the latest creation date among
/// its successors.
pub fn successor_end_time(successor_starts: &[Day]) -> Result<Day, CorrectionError> {
    successor_starts
        .iter()
        .max()
        .copied()
        .ok_or(CorrectionError::NoSuccessors)
}
