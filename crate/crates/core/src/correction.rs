//! Reporting-rate correction: duplicate-based propensity estimation, the
//! covariate-proxy fallback, incident-count correction, stratum
//! aggregation, and bootstrap uncertainty propagation.
//!
//! Raw complaint counts conflate true incident prevalence with filing
//! propensity. The duplicate-report rate identifies the propensity
//! without external ground truth: ρ̂ = 1 − D/C, where C is the total
//! report count in a tract-window and D the number of duplicates among
//! them. Corrected incident counts Î = C/ρ̂ then replace raw counts in
//! equity denominators.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{EquityVariant, StratumId, TractId, N_COVARIATES};
use crate::error::{Error, Result};
use crate::reward::equity_term;

/// How a propensity estimate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropensitySource {
    /// Moment estimator from duplicate-report rates.
    Duplicates,
    /// Logistic covariate proxy fit on duplicate-rich tracts.
    Proxy,
}

/// Estimated reporting propensity for one tract-window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropensityEstimate {
    pub tract_id: TractId,
    pub window_end_step: u64,
    /// In (0,1].
    pub rho_hat: f64,
    /// Sampling variance; delta-method for the duplicate estimator,
    /// training MSE for the proxy.
    pub variance: f64,
    pub source: PropensitySource,
}

/// Calibration-pipeline knobs with the documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    /// Rolling-window width in steps; the default is a four-week analog
    /// at one step per day.
    pub window_width: u64,
    /// Minimum duplicate observations for the duplicate estimator;
    /// below it the proxy is used.
    pub m_min: u64,
    /// Propensity floor; estimates are clamped here before dividing.
    pub rho_min: f64,
    /// Parametric bootstrap replicate count.
    pub bootstrap_b: u32,
    /// Demographic audit threshold on the max pairwise rate gap.
    pub audit_tau: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            window_width: 28,
            m_min: 10,
            rho_min: 0.05,
            bootstrap_b: 200,
            audit_tau: 0.05,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_width < 1 {
            return Err(Error::Config("window_width must be ≥ 1".into()));
        }
        if !(self.rho_min > 0.0 && self.rho_min < 1.0) {
            return Err(Error::Config(format!(
                "rho_min {} outside (0,1)",
                self.rho_min
            )));
        }
        if self.m_min < 1 {
            return Err(Error::Config("m_min must be ≥ 1".into()));
        }
        if self.bootstrap_b < 2 {
            return Err(Error::Config("bootstrap_b must be ≥ 2".into()));
        }
        if !(self.audit_tau > 0.0) {
            return Err(Error::Config("audit_tau must be > 0".into()));
        }
        Ok(())
    }
}

/// Moment estimator ρ̂ = 1 − D/C with delta-method variance
/// (D/C)(1 − D/C)/C under binomial duplicate sampling.
pub fn estimate_propensity_duplicates(
    tract_id: TractId,
    window_end_step: u64,
    complaints: u64,
    duplicates: u64,
) -> Result<PropensityEstimate> {
    if complaints == 0 {
        return Err(Error::InsufficientData(format!(
            "tract {tract_id}: no complaints in window; fall back to proxy"
        )));
    }
    if duplicates >= complaints {
        return Err(Error::DataIntegrity(format!(
            "tract {tract_id}: duplicates {duplicates} ≥ complaints {complaints}"
        )));
    }
    let dup_rate = duplicates as f64 / complaints as f64;
    Ok(PropensityEstimate {
        tract_id,
        window_end_step,
        rho_hat: 1.0 - dup_rate,
        variance: dup_rate * (1.0 - dup_rate) / complaints as f64,
        source: PropensitySource::Duplicates,
    })
}

/// Logistic proxy ρ̂ = σ(β₀ + βᵀx) over the four ACS-style covariates,
/// fit on tracts where duplicates are observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyModel {
    pub beta0: f64,
    pub beta: [f64; N_COVARIATES],
    /// Mean squared error on the training tracts; reported as the
    /// variance of proxy-sourced estimates.
    pub training_mse: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl ProxyModel {
    fn raw_prediction(&self, x: &[f64; N_COVARIATES]) -> f64 {
        let z = self.beta0 + self.beta.iter().zip(x).map(|(b, v)| b * v).sum::<f64>();
        sigmoid(z)
    }
}

const PROXY_LEARNING_RATE: f64 = 0.1;
const PROXY_MAX_ITERS: usize = 5000;
const PROXY_CONVERGENCE: f64 = 1e-10;
const PROXY_TARGET_CLAMP: f64 = 1e-4;

/// Fit the proxy by full-batch gradient descent on squared error over the
/// probability scale. Deterministic given input order; degenerate targets
/// are clamped to [1e-4, 1−1e-4].
pub fn fit_proxy(training: &[([f64; N_COVARIATES], f64)]) -> Result<ProxyModel> {
    if training.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "proxy fit needs ≥ 5 tracts with observed duplicates, got {}",
            training.len()
        )));
    }
    let targets: Vec<f64> = training
        .iter()
        .map(|(_, rho)| rho.clamp(PROXY_TARGET_CLAMP, 1.0 - PROXY_TARGET_CLAMP))
        .collect();
    let n = training.len() as f64;

    let mut model = ProxyModel {
        beta0: 0.0,
        beta: [0.0; N_COVARIATES],
        training_mse: 0.0,
    };
    let loss = |m: &ProxyModel| -> f64 {
        training
            .iter()
            .zip(&targets)
            .map(|((x, _), y)| {
                let p = m.raw_prediction(x);
                (p - y) * (p - y)
            })
            .sum::<f64>()
            / n
    };

    let mut prev_loss = loss(&model);
    for _ in 0..PROXY_MAX_ITERS {
        let mut g0 = 0.0;
        let mut g = [0.0; N_COVARIATES];
        for ((x, _), y) in training.iter().zip(&targets) {
            let p = model.raw_prediction(x);
            let factor = 2.0 * (p - y) * p * (1.0 - p) / n;
            g0 += factor;
            for (gj, xj) in g.iter_mut().zip(x) {
                *gj += factor * xj;
            }
        }
        model.beta0 -= PROXY_LEARNING_RATE * g0;
        for (bj, gj) in model.beta.iter_mut().zip(&g) {
            *bj -= PROXY_LEARNING_RATE * gj;
        }
        let cur = loss(&model);
        if (prev_loss - cur).abs() < PROXY_CONVERGENCE {
            prev_loss = cur;
            break;
        }
        prev_loss = cur;
    }
    model.training_mse = prev_loss;
    Ok(model)
}

/// Proxy prediction for one tract, clamped below at `rho_min`.
pub fn predict_propensity(
    model: &ProxyModel,
    tract_id: TractId,
    window_end_step: u64,
    covariates: &[f64; N_COVARIATES],
    rho_min: f64,
) -> Result<PropensityEstimate> {
    if covariates.iter().any(|c| !c.is_finite()) {
        return Err(Error::Validation(format!(
            "tract {tract_id}: non-finite covariate"
        )));
    }
    let rho = model.raw_prediction(covariates).max(rho_min);
    Ok(PropensityEstimate {
        tract_id,
        window_end_step,
        rho_hat: rho,
        variance: model.training_mse,
        source: PropensitySource::Proxy,
    })
}

/// One tract's observed window counts plus its propensity estimate —
/// the input row for count correction and the bootstrap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TractWindow {
    pub tract_id: TractId,
    /// Observed complaint count C (all reports, duplicates included).
    pub complaints: u64,
    pub stratum: Option<StratumId>,
    pub estimate: PropensityEstimate,
}

/// Corrected incident counts: per-tract Î and per-stratum N̂ over one
/// window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectedCounts {
    pub window_start: u64,
    pub window_end: u64,
    pub i_hat: BTreeMap<TractId, f64>,
    pub n_hat: BTreeMap<StratumId, f64>,
    /// Raw complaint-count aggregates per stratum, for the biased variant
    /// and audit contrast.
    pub raw_counts: BTreeMap<StratumId, f64>,
    /// Strata whose N̂ came out zero; the equity term skips these windows.
    pub flagged_strata: Vec<StratumId>,
}

/// Î = C / max(ρ̂, ρ_min), with Î = 0 when C = 0; N̂ aggregates Î over
/// each stratum's member tracts.
pub fn correct_counts(
    window: (u64, u64),
    tracts: &[TractWindow],
    strata: &[StratumId],
    config: &CalibrationConfig,
) -> CorrectedCounts {
    let mut i_hat = BTreeMap::new();
    let mut n_hat: BTreeMap<StratumId, f64> = strata.iter().map(|g| (*g, 0.0)).collect();
    let mut raw: BTreeMap<StratumId, f64> = strata.iter().map(|g| (*g, 0.0)).collect();
    for t in tracts {
        let corrected = if t.complaints == 0 {
            0.0
        } else {
            t.complaints as f64 / t.estimate.rho_hat.max(config.rho_min)
        };
        i_hat.insert(t.tract_id, corrected);
        if let Some(g) = t.stratum {
            if let Some(acc) = n_hat.get_mut(&g) {
                *acc += corrected;
                *raw.get_mut(&g).expect("same key set") += t.complaints as f64;
            }
        }
    }
    let flagged = n_hat
        .iter()
        .filter(|(_, v)| **v <= 0.0)
        .map(|(g, _)| *g)
        .collect();
    CorrectedCounts {
        window_start: window.0,
        window_end: window.1,
        i_hat,
        n_hat,
        raw_counts: raw,
        flagged_strata: flagged,
    }
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Parametric bootstrap over propensity uncertainty: draws each ρ̂ from a
/// normal truncated (clamped) to [ρ_min, 1], recomputes N̂ and the equity
/// term per draw, and returns the empirical (5th, 95th) percentile
/// interval of the equity reward.
pub fn bootstrap_equity_interval<R: Rng>(
    window: (u64, u64),
    tracts: &[TractWindow],
    escalations: &BTreeMap<StratumId, u64>,
    variant: EquityVariant,
    strata: &[StratumId],
    config: &CalibrationConfig,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if config.bootstrap_b < 2 {
        return Err(Error::Config("bootstrap_b must be ≥ 2".into()));
    }
    let n: BTreeMap<StratumId, f64> = strata
        .iter()
        .map(|g| (*g, escalations.get(g).copied().unwrap_or(0) as f64))
        .collect();
    let mut replicates = Vec::with_capacity(config.bootstrap_b as usize);
    let mut resampled = tracts.to_vec();
    for _ in 0..config.bootstrap_b {
        for (dst, src) in resampled.iter_mut().zip(tracts) {
            let rho = if src.estimate.variance > 0.0 {
                let normal = Normal::new(src.estimate.rho_hat, src.estimate.variance.sqrt())
                    .map_err(|e| Error::Computation(e.to_string()))?;
                normal.sample(rng).clamp(config.rho_min, 1.0)
            } else {
                src.estimate.rho_hat
            };
            dst.estimate.rho_hat = rho;
        }
        let counts = correct_counts(window, &resampled, strata, config);
        let denoms = match variant {
            EquityVariant::Biased => &counts.raw_counts,
            _ => &counts.n_hat,
        };
        replicates.push(equity_term(variant, &n, denoms).value);
    }
    replicates.sort_by(|a, b| a.partial_cmp(b).expect("equity values are finite"));
    Ok((quantile(&replicates, 0.05), quantile(&replicates, 0.95)))
}
