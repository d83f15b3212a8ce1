//! Provider populations, participation and the market verdict.
//!
//! A market outcome is perfect when every provider participates exactly when
//! it meets the requirement.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::betting::{replicate_betting, BettingScore, KellyConfig, Recorded};
use crate::credal::{best_mixture_response, CredalSet, MixtureSearch, TypeDependentMechanism, MEMBERSHIP_TOLERANCE};
use crate::error::{Error, Result};
use crate::evidence::{check_len, check_space, dot, mixture, Categorical};
use crate::license::{optimal_risk_averse_license, participation_decision, sup_value_over_obedient, MechanismParams};

/// What a provider must satisfy.
#[derive(Debug, Clone, PartialEq)]
pub enum Requirement {
    /// Compliant iff `E_Q[metric] > tau`.
    Threshold { metric: Vec<f64>, tau: f64 },
    /// Compliant iff `Q` lies outside the credal set.
    Credal(CredalSet),
}

impl Requirement {
    pub fn threshold(metric: Vec<f64>, tau: f64) -> Result<Self> {
        if metric.iter().any(|h| !h.is_finite()) || !tau.is_finite() {
            return Err(Error::InvalidParams("threshold metric must be finite".into()));
        }
        Ok(Self::Threshold { metric, tau })
    }
}

pub fn evaluate_requirement(req: &Requirement, q: &Categorical) -> Result<bool> {
    match req {
        Requirement::Threshold { metric, tau } => {
            check_len(q.space(), metric.len())?;
            Ok(dot(metric, q.probs()) > *tau)
        }
        Requirement::Credal(set) => Ok(!set.membership(q, MEMBERSHIP_TOLERANCE)?.inside),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attitude {
    RiskNeutral,
    RiskAverse,
    Bettor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provider {
    pub id: String,
    pub q: Categorical,
    pub attitude: Attitude,
    /// Base models a strategic provider randomises over.
    pub strategy: Option<Vec<Categorical>>,
}

impl Provider {
    pub fn new(id: impl Into<String>, q: Categorical, attitude: Attitude) -> Self {
        Self { id: id.into(), q, attitude, strategy: None }
    }

    /// A provider deploying the mixture of `base` with `weights`.
    pub fn strategic(
        id: impl Into<String>,
        base: Vec<Categorical>,
        weights: &[f64],
        attitude: Attitude,
    ) -> Result<Self> {
        if base.len() < 2 {
            return Err(Error::Precondition("a strategic provider needs at least two base models".into()));
        }
        let q = mixture(&base, weights)?;
        Ok(Self { id: id.into(), q, attitude, strategy: Some(base) })
    }
}

/// How licenses are offered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarketMechanism {
    /// Risk-neutral optimum over obedient licenses.
    OptimalLp,
    /// Log-optimal obedient license; value is `E_Q[π*]`.
    RiskAverse,
    /// Betting license; value is the mean final license over seeded replicates.
    Betting { steps: usize, runs: usize, seed: u64, kelly: KellyConfig },
}

impl MarketMechanism {
    pub fn betting(steps: usize, seed: u64) -> Self {
        Self::Betting { steps, runs: 30, seed, kelly: KellyConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    TrueIn,
    TrueOut,
    FalseIn,
    FalseOut,
}

impl Classification {
    pub fn of(compliant: bool, participated: bool) -> Self {
        match (compliant, participated) {
            (true, true) => Self::TrueIn,
            (false, false) => Self::TrueOut,
            (false, true) => Self::FalseIn,
            (true, false) => Self::FalseOut,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::TrueIn => "true-in",
            Self::TrueOut => "true-out",
            Self::FalseIn => "false-in",
            Self::FalseOut => "false-out",
        }
    }
}

/// Width of the band around `C` in which a participation verdict is not trusted.
pub const INDETERMINATE_BAND: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketRow {
    pub provider_id: String,
    pub compliant: bool,
    pub sup_value: f64,
    pub participated: bool,
    pub classification: Classification,
    /// `|sup_value − C| ≤ 1e-9`; the row is left out of the verdict.
    pub indeterminate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketReport {
    pub rows: Vec<MarketRow>,
    pub perfect: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub true_in: usize,
    pub true_out: usize,
    pub false_in: usize,
    pub false_out: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSummary {
    pub perfect: bool,
    pub counts: ClassCounts,
    pub indeterminate: Vec<String>,
}

impl MarketReport {
    fn from_rows(mut rows: Vec<MarketRow>) -> Self {
        rows.sort_by(|a, b| a.provider_id.cmp(&b.provider_id));
        let perfect = rows.iter().filter(|r| !r.indeterminate).all(|r| r.participated == r.compliant);
        Self { rows, perfect }
    }

    pub fn summary(&self) -> MarketSummary {
        let mut counts = ClassCounts::default();
        for r in &self.rows {
            match r.classification {
                Classification::TrueIn => counts.true_in += 1,
                Classification::TrueOut => counts.true_out += 1,
                Classification::FalseIn => counts.false_in += 1,
                Classification::FalseOut => counts.false_out += 1,
            }
        }
        MarketSummary {
            perfect: self.perfect,
            counts,
            indeterminate: self.rows.iter().filter(|r| r.indeterminate).map(|r| r.provider_id.clone()).collect(),
        }
    }

    /// CSV with columns `provider_id,compliant,sup_value,participated,classification,indeterminate`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("provider_id,compliant,sup_value,participated,classification,indeterminate\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.provider_id,
                r.compliant,
                r.sup_value,
                r.participated,
                r.classification.as_str(),
                r.indeterminate
            );
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary())?)
    }
}

/// Best expected license a provider of type `q` can obtain under `mechanism`.
pub fn provider_value(
    q: &Categorical,
    req: &Requirement,
    set: &CredalSet,
    params: &MechanismParams,
    mechanism: &MarketMechanism,
) -> Result<f64> {
    match mechanism {
        MarketMechanism::OptimalLp => Ok(sup_value_over_obedient(q, set, params)?.value),
        MarketMechanism::RiskAverse => Ok(optimal_risk_averse_license(q, set, params)?.value),
        MarketMechanism::Betting { steps, runs, seed, kelly } => {
            let Requirement::Threshold { metric, tau } = req else {
                return Err(Error::Precondition("the betting mechanism needs a threshold requirement".into()));
            };
            let score = BettingScore::from_metric(q.space().clone(), metric, *tau)?;
            let summary = replicate_betting(q, &score, kelly, params, *runs, *steps, *seed, Recorded::License)?;
            Ok(summary.final_mean())
        }
    }
}

pub fn simulate_market(
    providers: &[Provider],
    req: &Requirement,
    set: &CredalSet,
    params: &MechanismParams,
    mechanism: &MarketMechanism,
) -> Result<MarketReport> {
    if matches!(mechanism, MarketMechanism::Betting { .. }) && matches!(req, Requirement::Credal(_)) {
        return Err(Error::Precondition("the betting mechanism needs a threshold requirement".into()));
    }
    for p in providers {
        check_space(set.space(), p.q.space())?;
    }
    let rows = providers
        .par_iter()
        .map(|p| -> Result<MarketRow> {
            let compliant = evaluate_requirement(req, &p.q)?;
            let sup_value = provider_value(&p.q, req, set, params, mechanism)?;
            let participated = participation_decision(sup_value, params);
            Ok(MarketRow {
                provider_id: p.id.clone(),
                compliant,
                sup_value,
                participated,
                classification: Classification::of(compliant, participated),
                indeterminate: (sup_value - params.fee()).abs() <= INDETERMINATE_BAND,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MarketReport::from_rows(rows))
}

/// Mixture weights over `base_models` maximising the payoff against `mechanism`.
pub fn strategic_mixture_best_response(
    base_models: &[Categorical],
    mechanism: &dyn TypeDependentMechanism,
    search: &MixtureSearch,
) -> Result<(Vec<f64>, f64)> {
    if base_models.len() < 2 {
        return Err(Error::Precondition("a strategic provider needs at least two base models".into()));
    }
    let response = best_mixture_response(base_models, mechanism, search)?;
    Ok((response.weights, response.payoff))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::evidence::EvidenceSpace;
    use crate::license::discrete_projection_license;

    fn simplex_points() -> Vec<Categorical> {
        let space = EvidenceSpace::indexed(3).unwrap();
        [[0.35, 0.35, 0.3], [0.35, 0.3, 0.35], [0.3, 0.35, 0.35]]
            .iter()
            .map(|p| Categorical::new(Arc::clone(&space), p.to_vec()).unwrap())
            .collect()
    }

    #[test]
    fn threshold_requirement() {
        let q = Categorical::from_probs(vec![0.7, 0.3]).unwrap();
        let req = Requirement::threshold(vec![1.0, 0.0], 0.5).unwrap();
        assert!(evaluate_requirement(&req, &q).unwrap());
        let req = Requirement::threshold(vec![1.0, 0.0], 0.7).unwrap();
        assert!(!evaluate_requirement(&req, &q).unwrap());
    }

    #[test]
    fn credal_requirement() {
        let points = simplex_points();
        let set = CredalSet::new(points.clone()).unwrap();
        let req = Requirement::Credal(set.clone());
        assert!(!evaluate_requirement(&req, &points[0]).unwrap());
        let uniform = Categorical::uniform(Arc::clone(set.space()));
        assert!(!evaluate_requirement(&req, &uniform).unwrap());
        let far = Categorical::new(Arc::clone(set.space()), vec![0.8, 0.1, 0.1]).unwrap();
        assert!(evaluate_requirement(&req, &far).unwrap());
    }

    #[test]
    fn simplex_market_is_perfect_under_lp() {
        let points = simplex_points();
        let set = CredalSet::new(points.clone()).unwrap();
        let params = MechanismParams::default();
        let mut providers: Vec<Provider> = points
            .iter()
            .enumerate()
            .map(|(i, p)| Provider::new(format!("p{}", i + 1), p.clone(), Attitude::RiskNeutral))
            .collect();
        providers.push(
            Provider::strategic("strategic", points.clone(), &[1.0 / 3.0; 3], Attitude::RiskNeutral).unwrap(),
        );
        let report =
            simulate_market(&providers, &Requirement::Credal(set.clone()), &set, &params, &MarketMechanism::OptimalLp)
                .unwrap();
        assert_eq!(report.rows.len(), 4);
        assert!(report.rows.iter().all(|r| !r.participated && !r.compliant));
        assert!(report.perfect);
        assert_eq!(report.summary().counts.true_out, 4);
        assert!(report.to_csv().starts_with("provider_id,compliant,sup_value,participated,classification,indeterminate\n"));
    }

    #[test]
    fn compliant_outsider_participates() {
        let points = simplex_points();
        let set = CredalSet::new(points).unwrap();
        let params = MechanismParams::default();
        let far = Categorical::new(Arc::clone(set.space()), vec![0.5, 0.25, 0.25]).unwrap();
        let providers = vec![Provider::new("far", far, Attitude::RiskAverse)];
        for mech in [MarketMechanism::OptimalLp, MarketMechanism::RiskAverse] {
            let report =
                simulate_market(&providers, &Requirement::Credal(set.clone()), &set, &params, &mech).unwrap();
            assert!(report.rows[0].participated);
            assert_eq!(report.rows[0].classification, Classification::TrueIn);
            assert!(report.perfect);
        }
    }

    #[test]
    fn empty_market_is_perfect() {
        let set = CredalSet::new(simplex_points()).unwrap();
        let report = simulate_market(
            &[],
            &Requirement::Credal(set.clone()),
            &set,
            &MechanismParams::default(),
            &MarketMechanism::OptimalLp,
        )
        .unwrap();
        assert!(report.perfect);
        assert!(report.summary_json().unwrap().contains("\"perfect\": true"));
    }

    #[test]
    fn betting_needs_threshold() {
        let set = CredalSet::new(simplex_points()).unwrap();
        let err = simulate_market(
            &[],
            &Requirement::Credal(set.clone()),
            &set,
            &MechanismParams::default(),
            &MarketMechanism::betting(10, 0),
        );
        assert!(err.is_err());
    }

    #[test]
    fn betting_market_separates_by_threshold() {
        let space = EvidenceSpace::new(["pass", "fail"]).unwrap();
        let good = Categorical::new(Arc::clone(&space), vec![0.8, 0.2]).unwrap();
        let bad = Categorical::new(Arc::clone(&space), vec![0.4, 0.6]).unwrap();
        let req = Requirement::threshold(vec![1.0, 0.0], 0.6).unwrap();
        let set = CredalSet::singleton(Categorical::new(Arc::clone(&space), vec![0.6, 0.4]).unwrap());
        let providers =
            vec![Provider::new("good", good, Attitude::Bettor), Provider::new("bad", bad, Attitude::Bettor)];
        let report = simulate_market(
            &providers,
            &req,
            &set,
            &MechanismParams::default(),
            &MarketMechanism::betting(500, 1),
        )
        .unwrap();
        assert!(report.perfect, "{:?}", report.rows);
        assert_eq!(report.rows[0].provider_id, "bad");
    }

    #[test]
    fn naive_regulator_is_gamed_but_credal_is_not() {
        let points = simplex_points();
        let params = MechanismParams::default();
        let naive_points = points.clone();
        let naive = move |q: &Categorical| -> Result<f64> {
            discrete_projection_license(q, &naive_points, &params)?.0.expected_payout(q)
        };
        let search = MixtureSearch::default();
        let (w, payoff) = strategic_mixture_best_response(&points, &naive, &search).unwrap();
        assert!(payoff > params.fee(), "{payoff}");
        assert!(w.iter().all(|&x| x > 0.2), "{w:?}");

        let set = CredalSet::new(points.clone()).unwrap();
        let credal = |q: &Categorical| -> Result<f64> { Ok(sup_value_over_obedient(q, &set, &params)?.value) };
        let (_, payoff) = strategic_mixture_best_response(&points, &credal, &search).unwrap();
        assert!(payoff <= params.fee() + 1e-9);
    }

    #[test]
    fn identical_base_models() {
        let p = simplex_points()[0].clone();
        let params = MechanismParams::default();
        let set = CredalSet::new(simplex_points()).unwrap();
        let mech = |q: &Categorical| -> Result<f64> { Ok(sup_value_over_obedient(q, &set, &params)?.value) };
        let (_, payoff) = strategic_mixture_best_response(&[p.clone(), p.clone()], &mech, &MixtureSearch::default())
            .unwrap();
        assert!((payoff - mech(&p).unwrap()).abs() < 1e-12);
    }
}
