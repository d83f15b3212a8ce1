//! Licenses, obedience audits and the providers' optimal responses.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::credal::CredalSet;
use crate::error::{Error, Result};
use crate::evidence::{check_len, check_space, dot, Categorical, EvidenceSpace};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::projection::{self, capped_log_ratio_sum};

/// Entry fee `C` and market cap `R`, with `0 < C < R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct MechanismParams {
    fee: f64,
    cap: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    #[serde(rename = "C")]
    fee: f64,
    #[serde(rename = "R")]
    cap: f64,
}

impl TryFrom<RawParams> for MechanismParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        Self::new(raw.fee, raw.cap)
    }
}

impl From<MechanismParams> for RawParams {
    fn from(p: MechanismParams) -> Self {
        Self { fee: p.fee, cap: p.cap }
    }
}

impl MechanismParams {
    pub fn new(fee: f64, cap: f64) -> Result<Self> {
        if !(fee.is_finite() && cap.is_finite() && fee > 0.0 && fee < cap) {
            return Err(Error::InvalidParams(format!("need 0 < C < R, got C={fee}, R={cap}")));
        }
        Ok(Self { fee, cap })
    }

    /// `C`.
    pub fn fee(&self) -> f64 {
        self.fee
    }

    /// `R`.
    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// `R/C`.
    pub fn cap_ratio(&self) -> f64 {
        self.cap / self.fee
    }

    /// `ln(R/C)`.
    pub fn log_cap_ratio(&self) -> f64 {
        self.cap_ratio().ln()
    }
}

impl Default for MechanismParams {
    /// `C = 15`, `R = 250`.
    fn default() -> Self {
        Self { fee: 15.0, cap: 250.0 }
    }
}

/// Slack allowed on the `[0, R]` payout bounds for values produced by solvers.
const PAYOUT_SLACK: f64 = 1e-9;

/// A payout vector `π: outcomes → [0, R]`.
#[derive(Debug, Clone, PartialEq)]
pub struct License {
    space: Arc<EvidenceSpace>,
    payout: Vec<f64>,
    params: MechanismParams,
}

impl License {
    pub fn new(space: Arc<EvidenceSpace>, payout: Vec<f64>, params: MechanismParams) -> Result<Self> {
        check_len(&space, payout.len())?;
        if let Some((z, v)) = payout
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < -PAYOUT_SLACK || **v > params.cap + PAYOUT_SLACK)
        {
            return Err(Error::InvalidLicense(format!("payout[{z}] = {v} lies outside [0, {}]", params.cap)));
        }
        let payout = payout.into_iter().map(|v| v.clamp(0.0, params.cap)).collect();
        Ok(Self { space, payout, params })
    }

    /// The constant license paying `value` everywhere.
    pub fn constant(space: Arc<EvidenceSpace>, value: f64, params: MechanismParams) -> Result<Self> {
        let m = space.size();
        Self::new(space, vec![value; m], params)
    }

    pub fn space(&self) -> &Arc<EvidenceSpace> {
        &self.space
    }

    pub fn payout(&self) -> &[f64] {
        &self.payout
    }

    pub fn params(&self) -> &MechanismParams {
        &self.params
    }

    /// `E_dist[π]`.
    pub fn expected_payout(&self, dist: &Categorical) -> Result<f64> {
        check_space(&self.space, dist.space())?;
        Ok(dot(&self.payout, dist.probs()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&LicenseJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: LicenseJson = crate::error::from_json_str(text)?;
        raw.try_into()
    }
}

/// On-disk form: `{"space": [labels], "payout": [...], "params": {"C": .., "R": ..}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LicenseJson {
    pub space: Vec<String>,
    pub payout: Vec<f64>,
    pub params: MechanismParams,
}

impl From<&License> for LicenseJson {
    fn from(l: &License) -> Self {
        Self { space: l.space.labels().to_vec(), payout: l.payout.clone(), params: l.params }
    }
}

impl TryFrom<LicenseJson> for License {
    type Error = Error;

    fn try_from(raw: LicenseJson) -> Result<Self> {
        License::new(EvidenceSpace::new(raw.space)?, raw.payout, raw.params)
    }
}

/// Default tolerance for obedience audits.
pub const OBEDIENCE_TOLERANCE: f64 = 1e-6;

/// `sup_{P ∈ set} E_P[π] ≤ C + tol`.
pub fn is_obedient(license: &License, set: &CredalSet, params: &MechanismParams, tol: f64) -> Result<bool> {
    check_space(set.space(), license.space())?;
    Ok(set.upper_expectation(license.payout())? <= params.fee() + tol)
}

/// A provider enters iff its best expected license strictly exceeds the fee.
pub fn participation_decision(sup_value: f64, params: &MechanismParams) -> bool {
    sup_value > params.fee()
}

/// An optimal license together with its certificate data.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalLicenseResult {
    pub license: License,
    /// `E_Q[π*]`.
    pub value: f64,
    /// Normalised multipliers on the credal vertices.
    pub tight_vertex_weights: Vec<f64>,
    /// Reference member `P*` of the truncated likelihood ratio (risk-averse only).
    pub projection: Option<Categorical>,
    /// Multiplier mass `s` in `π* = min{C·Q/(s·P*), R}` (risk-averse only).
    pub scale: Option<f64>,
    pub converged: bool,
}

/// Risk-neutral optimum: `max_π E_Q[π]` over obedient licenses, as an LP.
pub fn sup_value_over_obedient(q: &Categorical, set: &CredalSet, params: &MechanismParams) -> Result<OptimalLicenseResult> {
    check_space(set.space(), q.space())?;
    let m = q.len();
    let mut lp = LinearProgram::new(Sense::Maximize, q.probs().to_vec());
    for v in set.vertices() {
        lp.add_constraint(v.probs().to_vec(), Relation::LessEq, params.fee());
    }
    for z in 0..m {
        let mut row = vec![0.0; m];
        row[z] = 1.0;
        lp.add_constraint(row, Relation::LessEq, params.cap());
    }
    let sol = lp.solve()?;
    let license = License::new(Arc::clone(q.space()), sol.x, *params)?;
    let value = license.expected_payout(q)?;
    let vertex_duals: Vec<f64> = sol.duals[..set.num_vertices()].iter().map(|d| d.max(0.0)).collect();
    let total: f64 = vertex_duals.iter().sum();
    let tight_vertex_weights = if total > 0.0 {
        vertex_duals.iter().map(|d| d / total).collect()
    } else {
        vec![0.0; set.num_vertices()]
    };
    Ok(OptimalLicenseResult {
        license,
        value,
        tight_vertex_weights,
        projection: None,
        scale: None,
        converged: true,
    })
}

/// Likelihood ratio `Q(z)/P(z)` with `+∞` where only `P` vanishes and `0` where `Q` does.
fn likelihood_ratio(qz: f64, pz: f64) -> f64 {
    if qz <= 0.0 {
        0.0
    } else if pz <= 0.0 {
        f64::INFINITY
    } else {
        qz / pz
    }
}

/// Closed-form risk-neutral optimum against a single null `P`: pay `R` on
/// outcomes in decreasing likelihood-ratio order until `E_P[π] = C`, with a
/// fractional payout on the boundary outcome. Ties go to the lower index.
pub fn neyman_pearson_license(q: &Categorical, p: &Categorical, params: &MechanismParams) -> Result<License> {
    check_space(q.space(), p.space())?;
    let m = q.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        likelihood_ratio(q.prob(b), p.prob(b))
            .total_cmp(&likelihood_ratio(q.prob(a), p.prob(a)))
            .then(a.cmp(&b))
    });
    let mut payout = vec![0.0; m];
    let mut budget = params.fee();
    for z in order {
        if q.prob(z) <= 0.0 {
            continue;
        }
        let cost = params.cap() * p.prob(z);
        if cost <= budget {
            payout[z] = params.cap();
            budget -= cost;
        } else {
            payout[z] = budget / p.prob(z);
            break;
        }
    }
    License::new(Arc::clone(q.space()), payout, *params)
}

/// `κ_Q(P) = Σ_z Q(z)·min{ln(Q(z)/P(z)), ln(R/C)}`, finite even where `P(z) = 0 < Q(z)`.
pub fn kappa(q: &Categorical, p: &Categorical, params: &MechanismParams) -> Result<f64> {
    check_space(q.space(), p.space())?;
    Ok(capped_log_ratio_sum(q.probs(), p.probs(), params.log_cap_ratio()))
}

/// The same functional written as `KL(Q‖P) − Σ_{A_P} Q·ln(Q·C/(P·R))` with the
/// tail region `A_P = {z : Q(z)/P(z) > R/C}`. Requires `P > 0` wherever `Q > 0`.
pub fn kappa_two_term(q: &Categorical, p: &Categorical, params: &MechanismParams) -> Result<f64> {
    let kl = crate::evidence::kl_divergence(q, p)?;
    if !kl.is_finite() {
        return Err(Error::Precondition("two-term κ needs Q ≪ P".into()));
    }
    let ratio_cap = params.cap_ratio();
    let tail: f64 = q
        .probs()
        .iter()
        .zip(p.probs())
        .filter(|(&qz, &pz)| qz > 0.0 && qz / pz > ratio_cap)
        .map(|(&qz, &pz)| qz * (qz * params.fee() / (pz * params.cap())).ln())
        .sum();
    Ok(kl.value() - tail)
}

/// Truncated likelihood-ratio payout `min{C·Q(z)/(scale·P(z)), R}` with
/// payout `R` where `P(z) = 0 < Q(z)` and `0` where `Q(z) = 0`.
pub fn truncated_ratio_payout(q: &[f64], p: &[f64], scale: f64, params: &MechanismParams) -> Vec<f64> {
    q.iter()
        .zip(p)
        .map(|(&qz, &pz)| {
            if qz <= 0.0 {
                0.0
            } else if pz <= 0.0 || scale <= 0.0 {
                params.cap()
            } else {
                (params.fee() * qz / (scale * pz)).min(params.cap())
            }
        })
        .collect()
}

/// Risk-averse (log-utility) optimum over obedient licenses.
///
/// The κ-projection seeds the dual multipliers; the dual is then solved to
/// KKT tolerance. `converged` is false when either stage stopped early, in
/// which case the best point found is still returned.
pub fn optimal_risk_averse_license(
    q: &Categorical,
    set: &CredalSet,
    params: &MechanismParams,
) -> Result<OptimalLicenseResult> {
    optimal_risk_averse_license_with(q, set, params, &projection::ProjectionConfig::default())
}

pub fn optimal_risk_averse_license_with(
    q: &Categorical,
    set: &CredalSet,
    params: &MechanismParams,
    cfg: &projection::ProjectionConfig,
) -> Result<OptimalLicenseResult> {
    check_space(set.space(), q.space())?;
    // Inside the hull no license beats the constant fee in log utility.
    let membership = set.membership(q, crate::credal::MEMBERSHIP_TOLERANCE)?;
    if membership.inside {
        return Ok(OptimalLicenseResult {
            license: License::constant(Arc::clone(q.space()), params.fee(), *params)?,
            value: params.fee(),
            tight_vertex_weights: membership.weights,
            projection: Some(q.clone()),
            scale: Some(1.0),
            converged: true,
        });
    }
    let kappa_proj = projection::kappa_projection(q, set, params, cfg)?;
    let dual = projection::log_optimal_dual(q, set, params, Some(&kappa_proj.weights))?;
    let scale: f64 = dual.multipliers.iter().sum();
    let payout: Vec<f64> = dual.scaled_payout.iter().map(|v| (v * params.fee()).min(params.cap())).collect();
    let license = License::new(Arc::clone(q.space()), payout, *params)?;
    let value = license.expected_payout(q)?;
    let (weights, reference) = if scale > 0.0 {
        let w: Vec<f64> = dual.multipliers.iter().map(|m| m / scale).collect();
        let p = set.point(&w)?;
        (w, Some(p))
    } else {
        (vec![0.0; set.num_vertices()], None)
    };
    Ok(OptimalLicenseResult {
        license,
        value,
        tight_vertex_weights: weights,
        projection: reference,
        scale: (scale > 0.0).then_some(scale),
        converged: dual.converged,
    })
}

/// A sequential truncated likelihood-ratio license `min{C·∏ Q(z_i)/(s·P(z_i)), R}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioLicense {
    log_ratio: Vec<f64>,
    params: MechanismParams,
}

impl RatioLicense {
    pub fn new(q: &Categorical, reference: &Categorical, scale: f64, params: &MechanismParams) -> Result<Self> {
        check_space(q.space(), reference.space())?;
        let log_ratio = q
            .probs()
            .iter()
            .zip(reference.probs())
            .map(|(&qz, &pz)| {
                if qz <= 0.0 {
                    f64::NEG_INFINITY
                } else if pz <= 0.0 || scale <= 0.0 {
                    f64::INFINITY
                } else {
                    (qz / (scale * pz)).ln()
                }
            })
            .collect();
        Ok(Self { log_ratio, params: *params })
    }

    /// Per-outcome log-ratio increments.
    pub fn log_ratios(&self) -> &[f64] {
        &self.log_ratio
    }

    /// License value for an accumulated log-ratio.
    pub fn value_at(&self, log_ratio_sum: f64) -> f64 {
        if log_ratio_sum == f64::NEG_INFINITY {
            return 0.0;
        }
        let log_fee = self.params.fee().ln();
        if log_fee + log_ratio_sum >= self.params.cap().ln() {
            self.params.cap()
        } else {
            (log_fee + log_ratio_sum).exp().min(self.params.cap())
        }
    }

    /// Adds one observation to a running log-ratio sum.
    pub fn accumulate(&self, sum: f64, outcome: usize) -> f64 {
        let inc = self.log_ratio[outcome];
        if sum == f64::NEG_INFINITY || inc == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            sum + inc
        }
    }

    pub fn value(&self, outcomes: &[usize]) -> Result<f64> {
        let mut sum = 0.0;
        for &z in outcomes {
            if z >= self.log_ratio.len() {
                return Err(Error::OutcomeOutOfRange { outcome: z, size: self.log_ratio.len() });
            }
            sum = self.accumulate(sum, z);
        }
        Ok(self.value_at(sum))
    }

    /// License value after each prefix (`n + 1` values, starting at `C`).
    pub fn trajectory(&self, outcomes: &[usize]) -> Result<Vec<f64>> {
        let mut sum = 0.0;
        let mut out = Vec::with_capacity(outcomes.len() + 1);
        out.push(self.value_at(0.0));
        for &z in outcomes {
            if z >= self.log_ratio.len() {
                return Err(Error::OutcomeOutOfRange { outcome: z, size: self.log_ratio.len() });
            }
            sum = self.accumulate(sum, z);
            out.push(self.value_at(sum));
        }
        Ok(out)
    }
}

/// `min{C·∏ Q(z_i)/P*(z_i), R}` computed in log space.
pub fn cumulative_license(
    outcomes: &[usize],
    q: &Categorical,
    p_star: &Categorical,
    params: &MechanismParams,
) -> Result<f64> {
    RatioLicense::new(q, p_star, 1.0, params)?.value(outcomes)
}

/// Truncated-ratio license against the single most κ-similar point of a
/// discrete (non-convexified) set. Obedient at each point on its own, but not
/// over their hull.
pub fn discrete_projection_license(
    q: &Categorical,
    points: &[Categorical],
    params: &MechanismParams,
) -> Result<(License, usize)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        let k = kappa(q, p, params)?;
        if best.map_or(true, |(_, b)| k < b) {
            best = Some((i, k));
        }
    }
    let (index, _) = best.ok_or(Error::EmptyCredalSet)?;
    let payout = truncated_ratio_payout(q.probs(), points[index].probs(), 1.0, params);
    Ok((License::new(Arc::clone(q.space()), payout, *params)?, index))
}

/// True iff the payout is non-increasing along `order` (best evidence first).
pub fn improvement_incentive_check(license: &License, order: &[usize]) -> Result<bool> {
    let m = license.payout.len();
    let mut seen = vec![false; m];
    if order.len() != m {
        return Err(Error::Precondition(format!("order lists {} outcomes, space has {m}", order.len())));
    }
    for &z in order {
        if z >= m || seen[z] {
            return Err(Error::Precondition("order must be a permutation of the outcomes".into()));
        }
        seen[z] = true;
    }
    Ok(order.windows(2).all(|w| license.payout[w[0]] >= license.payout[w[1]]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(probs: [f64; 2]) -> Categorical {
        Categorical::from_probs(probs.to_vec()).unwrap()
    }

    fn simplex_set() -> CredalSet {
        let space = EvidenceSpace::indexed(3).unwrap();
        CredalSet::new(
            [[0.35, 0.35, 0.3], [0.35, 0.3, 0.35], [0.3, 0.35, 0.35]]
                .iter()
                .map(|p| Categorical::new(Arc::clone(&space), p.to_vec()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(MechanismParams::new(1.0, 1.0).is_err());
        assert!(MechanismParams::new(0.0, 1.0).is_err());
        assert!(MechanismParams::new(2.0, 1.0).is_err());
        let p: MechanismParams = serde_json::from_str(r#"{"C": 15, "R": 250}"#).unwrap();
        assert_eq!(p, MechanismParams::default());
        assert!(serde_json::from_str::<MechanismParams>(r#"{"C": 300, "R": 250}"#).is_err());
    }

    #[test]
    fn obedience_examples() {
        let space = EvidenceSpace::indexed(3).unwrap();
        let set = CredalSet::singleton(Categorical::uniform(Arc::clone(&space)));
        let params = MechanismParams::new(0.5, 1.0).unwrap();
        let half = License::constant(Arc::clone(&space), 0.5, params).unwrap();
        assert!(is_obedient(&half, &set, &params, 0.0).unwrap());
        let full = License::constant(Arc::clone(&space), 1.0, params).unwrap();
        assert!(!is_obedient(&full, &set, &params, 1e-6).unwrap());

        let params = MechanismParams::new(0.3, 1.0).unwrap();
        let set = simplex_set();
        let bet = License::new(Arc::clone(set.space()), vec![1.0, 0.0, 0.0], params).unwrap();
        assert!(!is_obedient(&bet, &set, &params, 1e-6).unwrap());
    }

    #[test]
    fn participation_boundary() {
        let params = MechanismParams::new(15.0, 250.0).unwrap();
        assert!(!participation_decision(15.0, &params));
        assert!(participation_decision(250.0, &params));
        assert!(!participation_decision(0.0, &params));
    }

    #[test]
    fn license_bounds_and_json() {
        let params = MechanismParams::new(0.5, 1.0).unwrap();
        let space = EvidenceSpace::indexed(2).unwrap();
        assert!(License::new(Arc::clone(&space), vec![1.5, 0.0], params).is_err());
        assert!(License::new(Arc::clone(&space), vec![-0.1, 0.0], params).is_err());
        let l = License::new(space, vec![1.0, 0.25], params).unwrap();
        let text = l.to_json().unwrap();
        assert!(text.contains("\"C\": 0.5"));
        assert_eq!(License::from_json(&text).unwrap(), l);
    }

    #[test]
    fn lp_two_outcome_example() {
        let p = two([0.5, 0.5]);
        let q = Categorical::new(Arc::clone(p.space()), vec![0.9, 0.1]).unwrap();
        let params = MechanismParams::new(0.5, 1.0).unwrap();
        let res = sup_value_over_obedient(&q, &CredalSet::singleton(p), &params).unwrap();
        assert!((res.value - 0.9).abs() < 1e-12);
        assert!((res.license.payout()[0] - 1.0).abs() < 1e-12);
        assert!(res.license.payout()[1].abs() < 1e-12);
        assert_eq!(res.tight_vertex_weights, vec![1.0]);
    }

    #[test]
    fn lp_value_is_fee_inside_hull() {
        let set = simplex_set();
        let params = MechanismParams::default();
        for q in set.vertices().iter().cloned().chain([Categorical::uniform(Arc::clone(set.space()))]) {
            let res = sup_value_over_obedient(&q, &set, &params).unwrap();
            assert!(res.value <= params.fee() + 1e-9, "{}", res.value);
        }
    }

    #[test]
    fn np_examples() {
        let params = MechanismParams::new(0.5, 1.0).unwrap();
        let p = two([0.5, 0.5]);
        let q = Categorical::new(Arc::clone(p.space()), vec![0.9, 0.1]).unwrap();
        assert_eq!(neyman_pearson_license(&q, &p, &params).unwrap().payout(), &[1.0, 0.0]);

        let l = neyman_pearson_license(&p, &p, &params).unwrap();
        assert!((l.expected_payout(&p).unwrap() - 0.5).abs() < 1e-15);

        let p = two([0.25, 0.75]);
        let q = Categorical::new(Arc::clone(p.space()), vec![0.6, 0.4]).unwrap();
        let l = neyman_pearson_license(&q, &p, &params).unwrap();
        assert!((l.payout()[0] - 1.0).abs() < 1e-15);
        assert!((l.payout()[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((l.expected_payout(&p).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn np_pays_cap_where_null_vanishes() {
        let params = MechanismParams::new(0.5, 1.0).unwrap();
        let p = Categorical::from_probs(vec![0.0, 0.5, 0.5]).unwrap();
        let q = Categorical::new(Arc::clone(p.space()), vec![0.2, 0.4, 0.4]).unwrap();
        let l = neyman_pearson_license(&q, &p, &params).unwrap();
        assert_eq!(l.payout()[0], 1.0);
        assert!((l.expected_payout(&p).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kappa_examples() {
        let p = two([0.5, 0.5]);
        let big = MechanismParams::new(1.0, 10.0).unwrap();
        assert_eq!(kappa(&p, &p, &big).unwrap(), 0.0);

        let q = Categorical::new(Arc::clone(p.space()), vec![1.0, 0.0]).unwrap();
        let other = Categorical::new(Arc::clone(p.space()), vec![0.0, 1.0]).unwrap();
        assert!((kappa(&q, &other, &big).unwrap() - 10f64.ln()).abs() < 1e-15);

        let q = Categorical::new(Arc::clone(p.space()), vec![0.9, 0.1]).unwrap();
        let double = MechanismParams::new(1.0, 2.0).unwrap();
        let expected = 0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln();
        assert!((kappa(&q, &p, &double).unwrap() - expected).abs() < 1e-15);
        assert!((kappa_two_term(&q, &p, &double).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn risk_averse_singleton_example() {
        let p = two([0.5, 0.5]);
        let q = Categorical::new(Arc::clone(p.space()), vec![0.9, 0.1]).unwrap();
        let params = MechanismParams::new(0.5, 1.0).unwrap();
        let res = optimal_risk_averse_license(&q, &CredalSet::singleton(p.clone()), &params).unwrap();
        assert!(res.converged);
        assert!((res.license.payout()[0] - 0.9).abs() < 1e-9);
        assert!((res.license.payout()[1] - 0.1).abs() < 1e-9);
        assert!((res.license.expected_payout(&p).unwrap() - 0.5).abs() < 1e-9);
        assert!((res.scale.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn risk_averse_member_gets_the_fee() {
        let set = simplex_set();
        let params = MechanismParams::default();
        let q = set.vertices()[1].clone();
        let res = optimal_risk_averse_license(&q, &set, &params).unwrap();
        for v in res.license.payout() {
            assert!((v - params.fee()).abs() < 1e-6, "{:?}", res.license.payout());
        }
        assert!((res.value - params.fee()).abs() < 1e-6);
    }

    #[test]
    fn risk_averse_two_vertex_example_matches_formula() {
        let space = EvidenceSpace::indexed(2).unwrap();
        let q = Categorical::new(Arc::clone(&space), vec![0.8, 0.2]).unwrap();
        let set = CredalSet::new(vec![
            Categorical::new(Arc::clone(&space), vec![0.5, 0.5]).unwrap(),
            Categorical::new(Arc::clone(&space), vec![0.6, 0.4]).unwrap(),
        ])
        .unwrap();
        let params = MechanismParams::new(1.0, 4.0).unwrap();
        let res = optimal_risk_averse_license(&q, &set, &params).unwrap();
        // 1-D grid oracle for P* at resolution 1e-4.
        let (mut best_w, mut best) = (0.0, f64::INFINITY);
        for i in 0..=10_000 {
            let w = i as f64 / 1e4;
            let p = Categorical::new(Arc::clone(&space), vec![0.5 * w + 0.6 * (1.0 - w), 0.5 * w + 0.4 * (1.0 - w)])
                .unwrap();
            let k = kappa(&q, &p, &params).unwrap();
            if k < best {
                best = k;
                best_w = w;
            }
        }
        let p_grid = [0.5 * best_w + 0.6 * (1.0 - best_w), 0.5 * best_w + 0.4 * (1.0 - best_w)];
        let expected = truncated_ratio_payout(q.probs(), &p_grid, 1.0, &params);
        for (a, b) in res.license.payout().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-3, "{:?} vs {expected:?}", res.license.payout());
        }
        assert!((res.scale.unwrap() - 1.0).abs() < 1e-9);
        assert!(is_obedient(&res.license, &set, &params, 1e-9).unwrap());
    }

    #[test]
    fn cumulative_examples() {
        let params = MechanismParams::new(15.0, 250.0).unwrap();
        let p = two([0.5, 0.5]);
        let q = Categorical::new(Arc::clone(p.space()), vec![0.9, 0.1]).unwrap();
        assert_eq!(cumulative_license(&[], &q, &p, &params).unwrap(), 15.0);
        assert!((cumulative_license(&[0, 1, 1, 0], &p, &p, &params).unwrap() - 15.0).abs() < 1e-12);
        assert_eq!(cumulative_license(&[0; 20], &q, &p, &params).unwrap(), 250.0);
        let two_steps = cumulative_license(&[0, 1], &q, &p, &params).unwrap();
        assert!((two_steps - 15.0 * 1.8 * 0.2).abs() < 1e-12);
    }

    #[test]
    fn cumulative_zero_mass_conventions() {
        let params = MechanismParams::new(1.0, 5.0).unwrap();
        let p = Categorical::from_probs(vec![0.0, 1.0]).unwrap();
        let q = Categorical::new(Arc::clone(p.space()), vec![0.5, 0.5]).unwrap();
        assert_eq!(cumulative_license(&[1, 0], &q, &p, &params).unwrap(), 5.0);
        let q0 = Categorical::new(Arc::clone(p.space()), vec![0.0, 1.0]).unwrap();
        let p0 = Categorical::new(Arc::clone(p.space()), vec![0.5, 0.5]).unwrap();
        assert_eq!(cumulative_license(&[0], &q0, &p0, &params).unwrap(), 0.0);
    }

    #[test]
    fn improvement_examples() {
        let params = MechanismParams::new(1.0, 5.0).unwrap();
        let space = EvidenceSpace::indexed(3).unwrap();
        let natural = [0, 1, 2];
        let dec = License::new(Arc::clone(&space), vec![3.0, 2.0, 1.0], params).unwrap();
        let inc = License::new(Arc::clone(&space), vec![1.0, 2.0, 3.0], params).unwrap();
        let flat = License::constant(Arc::clone(&space), 2.0, params).unwrap();
        assert!(improvement_incentive_check(&dec, &natural).unwrap());
        assert!(!improvement_incentive_check(&inc, &natural).unwrap());
        assert!(improvement_incentive_check(&flat, &natural).unwrap());
        assert!(improvement_incentive_check(&inc, &[2, 1, 0]).unwrap());
        assert!(improvement_incentive_check(&inc, &[0, 0, 1]).is_err());
    }

    #[test]
    fn discrete_projection_license_is_gamed_by_the_uniform_mixture() {
        let set = simplex_set();
        let params = MechanismParams::default();
        for v in set.vertices() {
            let (l, _) = discrete_projection_license(v, set.vertices(), &params).unwrap();
            assert!((l.expected_payout(v).unwrap() - params.fee()).abs() < 1e-12);
        }
        let uniform = Categorical::uniform(Arc::clone(set.space()));
        let (l, idx) = discrete_projection_license(&uniform, set.vertices(), &params).unwrap();
        assert_eq!(idx, 0);
        assert!(l.expected_payout(&uniform).unwrap() > params.fee());
    }

    /// With a binding cap the κ-argmin license `min{C·Q/P*, R}` can break
    /// obedience; the dual-scaled license does not.
    #[test]
    fn capped_kappa_license_can_be_disobedient() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let space = EvidenceSpace::indexed(3).unwrap();
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
            Categorical::new(Arc::clone(&space), crate::simplex::random_point(3, rng)).unwrap()
        };
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let q = draw(&mut rng);
            let set = CredalSet::new(vec![draw(&mut rng), draw(&mut rng)]).unwrap();
            let params = MechanismParams::new(1.0, 1.5 + 6.0 * rand::Rng::gen::<f64>(&mut rng)).unwrap();
            let proj = projection::kappa_projection(&q, &set, &params, &Default::default()).unwrap();
            let naive = truncated_ratio_payout(q.probs(), proj.point.probs(), 1.0, &params);
            worst = worst.max(set.upper_expectation(&naive).unwrap());

            let res = optimal_risk_averse_license(&q, &set, &params).unwrap();
            assert!(res.converged);
            assert!(is_obedient(&res.license, &set, &params, 1e-9).unwrap());
        }
        assert!(worst > 1.0 + 1e-3, "{worst}");
    }
}
