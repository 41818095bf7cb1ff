//! Scalarized multi-objective reward: speed, cost, equity, retention.
//!
//! The equity component penalizes gaps in per-incident escalation rates
//! across strata. Four variants are provided: the biased form normalizes
//! by raw complaint counts, the corrected form by estimated incident
//! counts, and the multi-group forms extend the pairwise gap to K strata
//! (maximum disparity or population-weighted variance). Every variant is
//! ≤ 0 and equals 0 exactly at parity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{ActionSet, EquityVariant, RewardWeights, StratumId};
use crate::error::{Error, Result};

/// Rolling-window escalation ledger: per-stratum correct-escalation counts
/// against frozen corrected denominators.
///
/// `n` counts only escalating actions whose complaint carried a real
/// defect, revealed at outcome resolution. Denominators are set at
/// calibration-cycle boundaries and never change mid-window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EquityLedger {
    pub window_start: u64,
    pub window_end: u64,
    pub correct_escalations: BTreeMap<StratumId, u64>,
    /// Frozen Nhat per stratum; `None` before the first calibration cycle.
    pub denominators: Option<BTreeMap<StratumId, f64>>,
    /// Raw complaint-count denominators for the same window, kept for the
    /// biased variant and for audit contrast.
    pub raw_denominators: Option<BTreeMap<StratumId, f64>>,
}

impl EquityLedger {
    pub fn record_correct_escalation(&mut self, stratum: StratumId) {
        *self.correct_escalations.entry(stratum).or_insert(0) += 1;
    }

    /// Equity term under the given variant, against this ledger's frozen
    /// denominators.
    pub fn equity_term(&self, variant: EquityVariant) -> EquityTerm {
        let denoms = match variant {
            EquityVariant::Biased => &self.raw_denominators,
            _ => &self.denominators,
        };
        let Some(denoms) = denoms else {
            return EquityTerm::skipped();
        };
        let n: BTreeMap<StratumId, f64> = denoms
            .keys()
            .map(|g| {
                (
                    *g,
                    self.correct_escalations.get(g).copied().unwrap_or(0) as f64,
                )
            })
            .collect();
        equity_term(variant, &n, denoms)
    }
}

/// An equity value plus the zero-denominator diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquityTerm {
    /// Non-positive; 0 at parity or when skipped.
    pub value: f64,
    /// Set when a zero denominator (or missing calibration) forced the
    /// term to contribute 0 for this window.
    pub skipped: bool,
}

impl EquityTerm {
    pub fn skipped() -> Self {
        Self {
            value: 0.0,
            skipped: true,
        }
    }

    pub fn of(value: f64) -> Self {
        Self {
            value,
            skipped: false,
        }
    }
}

fn rates(n: &BTreeMap<StratumId, f64>, denoms: &BTreeMap<StratumId, f64>) -> Option<Vec<f64>> {
    if denoms.is_empty() || denoms.values().any(|d| *d <= 0.0) {
        return None;
    }
    Some(
        denoms
            .iter()
            .map(|(g, d)| n.get(g).copied().unwrap_or(0.0) / d)
            .collect(),
    )
}

/// Pairwise equity gap against raw complaint-count denominators.
/// Requires exactly two strata.
pub fn equity_biased(n: &BTreeMap<StratumId, f64>, raw: &BTreeMap<StratumId, f64>) -> EquityTerm {
    pairwise_gap(n, raw)
}

/// Pairwise equity gap against corrected incident denominators.
/// Requires exactly two strata.
pub fn equity_corrected(
    n: &BTreeMap<StratumId, f64>,
    n_hat: &BTreeMap<StratumId, f64>,
) -> EquityTerm {
    pairwise_gap(n, n_hat)
}

fn pairwise_gap(n: &BTreeMap<StratumId, f64>, denoms: &BTreeMap<StratumId, f64>) -> EquityTerm {
    if denoms.len() != 2 {
        return EquityTerm::skipped();
    }
    match rates(n, denoms) {
        Some(r) => EquityTerm::of(-(r[0] - r[1]).abs()),
        None => EquityTerm::skipped(),
    }
}

/// Maximum pairwise disparity over K ≥ 2 strata. Reduces to the corrected
/// pairwise term for K = 2.
pub fn equity_multigroup_max(
    n: &BTreeMap<StratumId, f64>,
    n_hat: &BTreeMap<StratumId, f64>,
) -> EquityTerm {
    if n_hat.len() < 2 {
        return EquityTerm::skipped();
    }
    let Some(r) = rates(n, n_hat) else {
        return EquityTerm::skipped();
    };
    let mut max_gap = 0.0_f64;
    for i in 0..r.len() {
        for j in (i + 1)..r.len() {
            max_gap = max_gap.max((r[i] - r[j]).abs());
        }
    }
    EquityTerm::of(-max_gap)
}

/// Population-weighted variance of per-incident escalation rates:
/// −(1/K)·Σ(rate_k − mean)².
pub fn equity_variance(
    n: &BTreeMap<StratumId, f64>,
    n_hat: &BTreeMap<StratumId, f64>,
) -> EquityTerm {
    if n_hat.len() < 2 {
        return EquityTerm::skipped();
    }
    let Some(r) = rates(n, n_hat) else {
        return EquityTerm::skipped();
    };
    let k = r.len() as f64;
    let mean = r.iter().sum::<f64>() / k;
    let var = r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k;
    EquityTerm::of(-var)
}

/// Dispatch over the four variants. The biased variant expects raw
/// denominators in `denoms`; all others expect corrected ones.
pub fn equity_term(
    variant: EquityVariant,
    n: &BTreeMap<StratumId, f64>,
    denoms: &BTreeMap<StratumId, f64>,
) -> EquityTerm {
    match variant {
        EquityVariant::Biased => equity_biased(n, denoms),
        EquityVariant::Corrected => equity_corrected(n, denoms),
        EquityVariant::MultigroupMax => equity_multigroup_max(n, denoms),
        EquityVariant::Variance => equity_variance(n, denoms),
    }
}

/// One step's reward, componentwise and composed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct RewardBreakdown {
    pub speed: f64,
    pub cost: f64,
    /// Non-positive.
    pub equity: f64,
    pub retention: f64,
    /// α₁·speed − α₂·cost + α₃·equity + α₄·retention.
    pub total: f64,
}

/// Compose the scalarized reward from its components.
pub fn compose_reward(
    speed: f64,
    cost: f64,
    equity: f64,
    retention: f64,
    weights: &RewardWeights,
) -> Result<RewardBreakdown> {
    for (name, v) in [
        ("speed", speed),
        ("cost", cost),
        ("equity", equity),
        ("retention", retention),
    ] {
        if !v.is_finite() {
            return Err(Error::Computation(format!(
                "non-finite {name} component: {v}"
            )));
        }
    }
    let total = weights.alpha_speed * speed - weights.alpha_cost * cost
        + weights.alpha_equity * equity
        + weights.alpha_retention * retention;
    Ok(RewardBreakdown {
        speed,
        cost,
        equity,
        retention,
        total,
    })
}

/// Per-event tables behind the speed, cost, and retention terms. All three
/// are config-overridable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardTables {
    /// Speed credit per correct escalation of a defective complaint.
    pub correct_escalation_reward: f64,
    /// Speed penalty magnitude per missed defect (the 26:1 asymmetry).
    pub missed_defect_weight: f64,
    /// Per-action cost, keyed by action label. Actions absent from the
    /// table fall back to 1.0 for escalating actions and 0.0 otherwise.
    pub action_costs: BTreeMap<String, f64>,
    /// Retention credit per resolved residential defect.
    pub retention_reward: f64,
}

impl Default for RewardTables {
    fn default() -> Self {
        Self {
            correct_escalation_reward: 1.0,
            missed_defect_weight: 26.0,
            action_costs: BTreeMap::new(),
            retention_reward: 1.0,
        }
    }
}

/// What the environment resolved for one classified complaint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// Escalating action on a defective complaint.
    CorrectEscalation,
    /// Escalating action on a non-defective complaint.
    FalseEscalation,
    /// Non-escalating action on a defective complaint.
    MissedDefect,
    /// Non-escalating action on a non-defective complaint.
    CorrectDeferral,
    /// No complaint was available this step.
    NoComplaint,
}

impl RewardTables {
    /// Speed term for a resolved step outcome.
    pub fn speed_term(&self, outcome: StepOutcome) -> f64 {
        match outcome {
            StepOutcome::CorrectEscalation => self.correct_escalation_reward,
            StepOutcome::MissedDefect => -self.missed_defect_weight,
            _ => 0.0,
        }
    }

    /// Cost term for the action taken.
    pub fn cost_term(&self, actions: &ActionSet, action: usize) -> Result<f64> {
        let label = actions
            .labels()
            .get(action)
            .ok_or_else(|| Error::Config(format!("unknown action index {action}")))?;
        Ok(match self.action_costs.get(label) {
            Some(c) => *c,
            None => {
                if actions.is_escalating(action) {
                    1.0
                } else {
                    0.0
                }
            }
        })
    }

    /// Retention term: credit when a residential defect is resolved.
    pub fn retention_term(&self, outcome: StepOutcome) -> f64 {
        match outcome {
            StepOutcome::CorrectEscalation => self.retention_reward,
            _ => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(values: &[f64]) -> BTreeMap<StratumId, f64> {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| (StratumId(i as u8), *v))
            .collect()
    }

    #[test]
    fn biased_gap_examples() {
        let t = equity_biased(&map(&[10.0, 10.0]), &map(&[100.0, 100.0]));
        assert_eq!(t.value, 0.0);
        assert!(!t.skipped);
        let t = equity_biased(&map(&[20.0, 5.0]), &map(&[100.0, 100.0]));
        assert!((t.value - (-0.15)).abs() < 1e-12);
        let t = equity_biased(&map(&[10.0, 10.0]), &map(&[100.0, 50.0]));
        assert!((t.value - (-0.10)).abs() < 1e-12);
    }

    #[test]
    fn zero_denominator_skips_with_flag() {
        let t = equity_biased(&map(&[1.0, 1.0]), &map(&[100.0, 0.0]));
        assert!(t.skipped);
        assert_eq!(t.value, 0.0);
    }

    #[test]
    fn correction_masking_contrast() {
        // Equal observed counts mask under-service: biased parity while the
        // corrected denominator reveals a 0.05 gap.
        let n = map(&[10.0, 10.0]);
        let raw = map(&[100.0, 100.0]);
        let biased = equity_biased(&n, &raw);
        assert_eq!(biased.value, 0.0);
        let corrected_denoms = map(&[200.0, 100.0]); // low stratum rho = 0.5
        let corrected = equity_corrected(&n, &corrected_denoms);
        assert!((corrected.value - (-0.05)).abs() < 1e-12);
    }

    #[test]
    fn multigroup_max_gap() {
        let n = map(&[1.0, 2.0, 4.0]);
        let d = map(&[10.0, 10.0, 10.0]); // rates 0.1, 0.2, 0.4
        let t = equity_multigroup_max(&n, &d);
        assert!((t.value - (-0.3)).abs() < 1e-12);
    }

    #[test]
    fn multigroup_k2_equals_corrected() {
        let n = map(&[3.0, 9.0]);
        let d = map(&[50.0, 40.0]);
        assert_eq!(
            equity_multigroup_max(&n, &d).value,
            equity_corrected(&n, &d).value
        );
    }

    #[test]
    fn variance_example() {
        // rates (0.0, 0.2): mean 0.1, variance (0.01 + 0.01) / 2 = 0.01
        let t = equity_variance(&map(&[0.0, 2.0]), &map(&[10.0, 10.0]));
        assert!((t.value - (-0.01)).abs() < 1e-12);
    }

    #[test]
    fn compose_reward_arithmetic() {
        let w = RewardWeights::new(0.25, 0.25, 0.25, 0.25).validated().unwrap();
        let r = compose_reward(4.0, 2.0, -0.4, 1.0, &w).unwrap();
        assert!((r.total - 0.65).abs() < 1e-12);

        let w = RewardWeights::new(1.0, 0.0, 0.0, 0.0).validated().unwrap();
        let r = compose_reward(3.0, 7.0, -0.9, 2.0, &w).unwrap();
        assert_eq!(r.total, 3.0);
    }

    #[test]
    fn compose_rejects_non_finite() {
        let w = RewardWeights::default().validated().unwrap();
        assert!(compose_reward(f64::NAN, 0.0, 0.0, 0.0, &w).is_err());
    }

    #[test]
    fn zero_equity_weight_ignores_equity() {
        let w = RewardWeights::new(0.5, 0.25, 0.0, 0.25).validated().unwrap();
        let a = compose_reward(1.0, 1.0, -0.5, 1.0, &w).unwrap();
        let b = compose_reward(1.0, 1.0, -0.001, 1.0, &w).unwrap();
        assert_eq!(a.total, b.total);
    }

    #[test]
    fn default_tables() {
        let tables = RewardTables::default();
        let actions = ActionSet::boiler();
        let inspect = actions.index_of("Inspect").unwrap();
        let defer = actions.index_of("Defer").unwrap();
        assert_eq!(tables.speed_term(StepOutcome::CorrectEscalation), 1.0);
        assert_eq!(tables.speed_term(StepOutcome::MissedDefect), -26.0);
        assert_eq!(tables.cost_term(&actions, inspect).unwrap(), 1.0);
        assert_eq!(tables.cost_term(&actions, defer).unwrap(), 0.0);
        assert_eq!(tables.retention_term(StepOutcome::CorrectEscalation), 1.0);
        assert_eq!(tables.retention_term(StepOutcome::CorrectDeferral), 0.0);
        assert!(tables.cost_term(&actions, 99).is_err());
    }
}
