//! Core vocabulary shared by every module: tracts, strata, complaints,
//! reward weights, action sets.
//!
//! All types here are immutable value objects; they are `Clone + Send +
//! Sync` and safe to share across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of tract-level covariates (income index, college-attainment
/// share, English-proficiency share, renter share), each in `[0,1]`.
pub const N_COVARIATES: usize = 4;

/// Opaque census-tract identifier.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct TractId(pub u32);

impl std::fmt::Display for TractId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "t{:03}", self.0)
    }
}

/// Index into a [`StratumScheme`]'s label list.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct StratumId(pub u8);

/// Partition of income quintiles into K ≥ 2 named strata.
///
/// The default two-stratum scheme maps quintiles 1–2 to `low` and 4–5 to
/// `high`; quintile-3 tracts belong to no stratum and are excluded from
/// equity denominators (they still generate complaints and receive
/// classifications). The five-stratum scheme maps quintile k to stratum
/// k−1 (one stratum per quintile).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumScheme {
    labels: Vec<String>,
}

impl StratumScheme {
    /// Build the scheme for the given number of strata. Only K=2 and K=5
    /// are supported.
    pub fn new(k: usize) -> Result<Self> {
        match k {
            2 => Ok(Self {
                labels: vec!["low".into(), "high".into()],
            }),
            5 => Ok(Self {
                labels: (1..=5).map(|q| format!("q{q}")).collect(),
            }),
            _ => Err(Error::Config(format!(
                "unsupported stratum count K={k}; expected 2 or 5"
            ))),
        }
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, id: StratumId) -> &str {
        &self.labels[id.0 as usize]
    }

    /// Stratum for an income quintile, or `None` for quintiles outside
    /// every stratum (quintile 3 under K=2).
    pub fn stratum_for_quintile(&self, quintile: u8) -> Option<StratumId> {
        match self.k() {
            2 => match quintile {
                1 | 2 => Some(StratumId(0)),
                4 | 5 => Some(StratumId(1)),
                _ => None,
            },
            5 => Some(StratumId(quintile - 1)),
            _ => unreachable!("constructor only admits K=2 or K=5"),
        }
    }

    pub fn ids(&self) -> impl Iterator<Item = StratumId> + '_ {
        (0..self.k() as u8).map(StratumId)
    }
}

impl Default for StratumScheme {
    fn default() -> Self {
        Self::new(2).expect("K=2 is always supported")
    }
}

/// A census-tract analog: covariates, latent incident rate, reporting
/// propensity, and stratum membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TractProfile {
    pub tract_id: TractId,
    /// Synthetic ACS-style covariates in `[0,1]`.
    pub covariates: [f64; N_COVARIATES],
    /// Income quintile, 1..=5.
    pub income_quintile: u8,
    /// Expected incidents per step, ≥ 0.
    pub true_incident_rate: f64,
    /// Probability a resident files a complaint given an incident, in (0,1].
    pub reporting_propensity: f64,
    /// Stratum under the active scheme; `None` for excluded quintiles.
    pub stratum: Option<StratumId>,
}

impl TractProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.reporting_propensity > 0.0 && self.reporting_propensity <= 1.0) {
            return Err(Error::Validation(format!(
                "tract {}: reporting_propensity {} outside (0,1]",
                self.tract_id, self.reporting_propensity
            )));
        }
        if !(self.true_incident_rate >= 0.0) {
            return Err(Error::Validation(format!(
                "tract {}: true_incident_rate {} negative",
                self.tract_id, self.true_incident_rate
            )));
        }
        if !(1..=5).contains(&self.income_quintile) {
            return Err(Error::Validation(format!(
                "tract {}: income_quintile {} outside 1..=5",
                self.tract_id, self.income_quintile
            )));
        }
        for (i, c) in self.covariates.iter().enumerate() {
            if !(0.0..=1.0).contains(c) {
                return Err(Error::Validation(format!(
                    "tract {}: covariate {i} = {c} outside [0,1]",
                    self.tract_id
                )));
            }
        }
        Ok(())
    }
}

/// Assign strata to tracts under the K-stratum quintile rule.
///
/// Deterministic and idempotent: the stratum is a pure function of the
/// income quintile.
pub fn assign_strata(tracts: &mut [TractProfile], k: usize) -> Result<()> {
    let scheme = StratumScheme::new(k)?;
    for tract in tracts.iter_mut() {
        tract.stratum = scheme.stratum_for_quintile(tract.income_quintile);
    }
    Ok(())
}

/// One filed complaint. `latent_defect` is hidden from agents: it is read
/// only by environment outcome resolution and offline evaluation scoring,
/// never exposed through the observation interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplaintEvent {
    pub event_id: u64,
    pub tract_id: TractId,
    pub step_index: u64,
    /// Agent-facing observation vector (domain-specific length).
    pub features: Vec<f64>,
    /// References an incident already logged in the same tract-window.
    pub is_duplicate: bool,
    latent_defect: bool,
}

impl ComplaintEvent {
    pub fn new(
        event_id: u64,
        tract_id: TractId,
        step_index: u64,
        features: Vec<f64>,
        is_duplicate: bool,
        latent_defect: bool,
    ) -> Self {
        Self {
            event_id,
            tract_id,
            step_index,
            features,
            is_duplicate,
            latent_defect,
        }
    }

    /// The agent-facing view of this complaint.
    pub fn observation(&self) -> &[f64] {
        &self.features
    }

    /// Ground-truth defect flag. Restricted to environment outcome
    /// resolution and offline evaluation scoring by convention; nothing on
    /// the observation path may call this.
    pub fn latent_defect_for_resolution(&self) -> bool {
        self.latent_defect
    }

    pub(crate) fn set_latent_defect(&mut self, value: bool) {
        self.latent_defect = value;
    }
}

/// Which equity formulation feeds the reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EquityVariant {
    /// Raw complaint-count denominators (masks under-reporting).
    Biased,
    /// Corrected incident-estimate denominators.
    #[default]
    Corrected,
    /// Maximum pairwise disparity over K strata.
    MultigroupMax,
    /// Population-weighted variance of per-incident escalation rates.
    Variance,
}

/// Scalarization weights for the four reward objectives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub alpha_speed: f64,
    pub alpha_cost: f64,
    pub alpha_equity: f64,
    pub alpha_retention: f64,
    #[serde(default)]
    pub equity_variant: EquityVariant,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            alpha_speed: 0.45,
            alpha_cost: 0.15,
            alpha_equity: 0.15,
            alpha_retention: 0.25,
            equity_variant: EquityVariant::Corrected,
        }
    }
}

impl RewardWeights {
    pub fn new(speed: f64, cost: f64, equity: f64, retention: f64) -> Self {
        Self {
            alpha_speed: speed,
            alpha_cost: cost,
            alpha_equity: equity,
            alpha_retention: retention,
            equity_variant: EquityVariant::default(),
        }
    }

    pub fn with_variant(mut self, variant: EquityVariant) -> Self {
        self.equity_variant = variant;
        self
    }

    fn components(&self) -> [f64; 4] {
        [
            self.alpha_speed,
            self.alpha_cost,
            self.alpha_equity,
            self.alpha_retention,
        ]
    }

    /// Normalize to Σα = 1. Rejects negative, non-finite, or all-zero
    /// weight vectors.
    pub fn validated(self) -> Result<Self> {
        let comps = self.components();
        for (name, a) in ["speed", "cost", "equity", "retention"].iter().zip(comps) {
            if !a.is_finite() {
                return Err(Error::Validation(format!("alpha_{name} is not finite")));
            }
            if a < 0.0 {
                return Err(Error::Validation(format!("alpha_{name} = {a} is negative")));
            }
        }
        let sum: f64 = comps.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Validation("all reward weights are zero".into()));
        }
        Ok(Self {
            alpha_speed: self.alpha_speed / sum,
            alpha_cost: self.alpha_cost / sum,
            alpha_equity: self.alpha_equity / sum,
            alpha_retention: self.alpha_retention / sum,
            equity_variant: self.equity_variant,
        })
    }

    /// Whether Σα = 1 within 1e-9.
    pub fn is_normalized(&self) -> bool {
        (self.components().iter().sum::<f64>() - 1.0).abs() <= 1e-9
    }
}

/// Ordered action labels for one environment, with the subset counted as
/// escalations for equity accounting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSet {
    labels: Vec<String>,
    escalating: Vec<usize>,
}

impl ActionSet {
    pub fn new<S: Into<String>>(labels: Vec<S>, escalating_labels: &[&str]) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::Validation("action set must be non-empty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.clone()) {
                return Err(Error::Validation(format!("duplicate action label {l:?}")));
            }
        }
        let mut escalating = Vec::new();
        for esc in escalating_labels {
            let idx = labels
                .iter()
                .position(|l| l == esc)
                .ok_or_else(|| Error::Validation(format!("escalating label {esc:?} not in action set")))?;
            escalating.push(idx);
        }
        escalating.sort_unstable();
        Ok(Self { labels, escalating })
    }

    /// Defer / Inspect, with Inspect escalating.
    pub fn boiler() -> Self {
        Self::new(vec!["Defer", "Inspect"], &["Inspect"]).expect("static labels are valid")
    }

    /// The five scaffold actions; inspect_now and escalate escalate.
    pub fn scaffold() -> Self {
        Self::new(
            vec!["inspect_now", "delay", "batch", "escalate", "ignore"],
            &["inspect_now", "escalate"],
        )
        .expect("static labels are valid")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, action: usize) -> &str {
        &self.labels[action]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn is_escalating(&self, action: usize) -> bool {
        self.escalating.contains(&action)
    }

    pub fn escalating_indices(&self) -> &[usize] {
        &self.escalating
    }

    /// Lowest-indexed escalating action, if any.
    pub fn first_escalating(&self) -> Option<usize> {
        self.escalating.first().copied()
    }

    /// Lowest-indexed non-escalating action, if any.
    pub fn first_non_escalating(&self) -> Option<usize> {
        (0..self.len()).find(|a| !self.is_escalating(*a))
    }
}

/// Metadata describing one observation feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    /// Binary flags keep their two levels under discretization.
    pub binary: bool,
    /// Geographic / neighborhood-level features are audited as potential
    /// demographic proxies.
    pub geographic: bool,
}

impl FeatureMeta {
    pub fn binary(name: &str) -> Self {
        Self {
            name: name.into(),
            binary: true,
            geographic: false,
        }
    }

    pub fn unit(name: &str) -> Self {
        Self {
            name: name.into(),
            binary: false,
            geographic: false,
        }
    }

    pub fn geographic(mut self) -> Self {
        self.geographic = true;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tract(quintile: u8) -> TractProfile {
        TractProfile {
            tract_id: TractId(0),
            covariates: [0.5; N_COVARIATES],
            income_quintile: quintile,
            true_incident_rate: 0.1,
            reporting_propensity: 0.5,
            stratum: None,
        }
    }

    #[test]
    fn quintile_rule_k2() {
        let scheme = StratumScheme::new(2).unwrap();
        assert_eq!(scheme.stratum_for_quintile(1), Some(StratumId(0)));
        assert_eq!(scheme.stratum_for_quintile(2), Some(StratumId(0)));
        assert_eq!(scheme.stratum_for_quintile(3), None);
        assert_eq!(scheme.stratum_for_quintile(4), Some(StratumId(1)));
        assert_eq!(scheme.stratum_for_quintile(5), Some(StratumId(1)));
        assert_eq!(scheme.label(StratumId(0)), "low");
    }

    #[test]
    fn quintile_rule_k5_is_identity() {
        let scheme = StratumScheme::new(5).unwrap();
        for q in 1..=5u8 {
            assert_eq!(scheme.stratum_for_quintile(q), Some(StratumId(q - 1)));
        }
    }

    #[test]
    fn unsupported_k_is_a_config_error() {
        assert!(matches!(StratumScheme::new(3), Err(Error::Config(_))));
        assert!(matches!(StratumScheme::new(1), Err(Error::Config(_))));
    }

    #[test]
    fn assign_strata_is_idempotent() {
        let mut tracts: Vec<TractProfile> = (1..=5).map(tract).collect();
        assign_strata(&mut tracts, 2).unwrap();
        let once = tracts.clone();
        assign_strata(&mut tracts, 2).unwrap();
        assert_eq!(once, tracts);
        assert_eq!(tracts[2].stratum, None); // quintile 3 excluded
    }

    #[test]
    fn weights_already_normalized_pass_through() {
        let w = RewardWeights::new(0.25, 0.25, 0.25, 0.25).validated().unwrap();
        assert_eq!(w.alpha_speed, 0.25);
        assert!(w.is_normalized());
    }

    #[test]
    fn weights_scale_by_their_sum() {
        let w = RewardWeights::new(2.0, 0.0, 1.0, 1.0).validated().unwrap();
        assert_eq!(w.alpha_speed, 0.5);
        assert_eq!(w.alpha_cost, 0.0);
        assert_eq!(w.alpha_equity, 0.25);
        assert_eq!(w.alpha_retention, 0.25);
    }

    #[test]
    fn negative_weight_rejected() {
        assert!(RewardWeights::new(-0.1, 0.6, 0.3, 0.2).validated().is_err());
        assert!(RewardWeights::new(0.0, 0.0, 0.0, 0.0).validated().is_err());
    }

    #[test]
    fn validate_is_idempotent() {
        let w = RewardWeights::new(3.0, 1.0, 2.0, 2.0);
        let once = w.validated().unwrap();
        let twice = once.validated().unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn action_set_escalation_membership() {
        let actions = ActionSet::scaffold();
        assert!(actions.is_escalating(actions.index_of("inspect_now").unwrap()));
        assert!(actions.is_escalating(actions.index_of("escalate").unwrap()));
        assert!(!actions.is_escalating(actions.index_of("ignore").unwrap()));
        assert!(ActionSet::new(vec!["a", "a"], &[]).is_err());
        assert!(ActionSet::new(vec!["a"], &["b"]).is_err());
    }

    #[test]
    fn latent_defect_is_not_in_the_observation() {
        let ev = ComplaintEvent::new(0, TractId(1), 0, vec![1.0, 0.0], false, true);
        assert_eq!(ev.observation(), &[1.0, 0.0]);
        assert!(ev.latent_defect_for_resolution());
    }
}
