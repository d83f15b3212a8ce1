//! Spurious-feature regulation on declared surrogate evidence distributions.
//!
//! Outcomes cross an easy/hard group with correct/wrong predictions. The
//! non-compliant set is the hull of an ERM-like model and a uniform predictor.
//! The two surrogates are documented defaults, not measured model outputs.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{calibrated_license, opt_to_f64, steps_to_cap, stream_id, ExperimentConfig, ExperimentReport, ResultTable};
use crate::betting::{aggregate_replicates, ReplicateSummary};
use crate::credal::CredalSet;
use crate::error::{Error, Result};
use crate::evidence::{validate_simplex, Categorical, EvidenceSpace};
use crate::license::{optimal_risk_averse_license, MechanismParams, RatioLicense};
use crate::sampling::{replicate_rng, CategoricalSampler};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpuriousConfig {
    pub labels: Vec<String>,
    /// Group of each outcome (`0` easy, `1` hard).
    pub groups: Vec<usize>,
    /// Non-compliant surrogate (relies on the spurious feature).
    pub q_erm: Vec<f64>,
    /// Compliant surrogate (robust across groups).
    pub q_dro: Vec<f64>,
    pub burn_in: usize,
}

impl Default for SpuriousConfig {
    fn default() -> Self {
        Self {
            labels: ["easy_correct", "easy_wrong", "hard_correct", "hard_wrong"].map(String::from).to_vec(),
            groups: vec![0, 0, 1, 1],
            q_erm: vec![0.48, 0.02, 0.30, 0.20],
            q_dro: vec![0.47, 0.03, 0.44, 0.06],
            burn_in: 300,
        }
    }
}

impl SpuriousConfig {
    pub fn validate(&self, steps: usize) -> Result<()> {
        let m = self.labels.len();
        if m < 2 || self.groups.len() != m || self.q_erm.len() != m || self.q_dro.len() != m {
            return Err(Error::Config(
                "synthetic_spurious: labels, groups, q_erm and q_dro need one entry per outcome".into(),
            ));
        }
        validate_simplex(&self.q_erm).map_err(|e| Error::Config(format!("synthetic_spurious.q_erm: {e}")))?;
        validate_simplex(&self.q_dro).map_err(|e| Error::Config(format!("synthetic_spurious.q_dro: {e}")))?;
        if self.burn_in >= steps {
            return Err(Error::Config("synthetic_spurious.burn_in must be smaller than steps".into()));
        }
        Ok(())
    }
}

fn calibrated_curve(
    cfg: &ExperimentConfig,
    source: &Categorical,
    set: &CredalSet,
    params: &MechanismParams,
    burn_in: usize,
) -> Result<ReplicateSummary> {
    let sampler = CategoricalSampler::new(source);
    let licenses: Vec<RatioLicense> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(cfg.seed, stream_id(0, r));
            let burn: Vec<usize> = (0..burn_in).map(|_| sampler.sample(&mut rng)).collect();
            calibrated_license(&burn, Arc::clone(source.space()), set, params)
        })
        .collect::<Result<_>>()?;
    Ok(aggregate_replicates(cfg.runs, cfg.steps + 1, params.fee(), |r, buf| {
        let license = &licenses[r as usize];
        let mut rng = replicate_rng(cfg.seed, stream_id(0, r));
        for _ in 0..burn_in {
            sampler.sample(&mut rng);
        }
        let mut sum = 0.0;
        for (t, slot) in buf.iter_mut().enumerate() {
            if t > burn_in {
                sum = license.accumulate(sum, sampler.sample(&mut rng));
            }
            *slot = license.value_at(sum);
        }
    }))
}

pub fn run_synthetic_spurious(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let sc = cfg
        .synthetic_spurious
        .as_ref()
        .ok_or_else(|| Error::Config("missing section `synthetic_spurious`".into()))?;
    sc.validate(cfg.steps)?;
    let params = cfg.params;
    let space = EvidenceSpace::new(sc.labels.iter().cloned())?;
    let erm = Categorical::new(Arc::clone(&space), sc.q_erm.clone())?;
    let dro = Categorical::new(Arc::clone(&space), sc.q_dro.clone())?;
    let set = CredalSet::new(vec![erm.clone(), Categorical::uniform(Arc::clone(&space))])?;

    let erm_curve = calibrated_curve(cfg, &erm, &set, &params, sc.burn_in)?;
    let dro_curve = calibrated_curve(cfg, &dro, &set, &params, sc.burn_in)?;

    let mut table = ResultTable::new(
        ["step", "erm_mean", "erm_se", "dro_mean", "dro_se"].map(String::from).to_vec(),
        cfg.provenance(),
    );
    for t in 0..=cfg.steps {
        table.push(vec![
            t as f64,
            erm_curve.means[t],
            erm_curve.std_errors[t],
            dro_curve.means[t],
            dro_curve.std_errors[t],
        ]);
    }

    // Population single-step licenses and their ratio per outcome.
    let erm_license = optimal_risk_averse_license(&erm, &set, &params)?;
    let dro_license = optimal_risk_averse_license(&dro, &set, &params)?;
    let mut ratios = ResultTable::new(
        ["outcome", "group", "q_erm", "q_dro", "license_erm", "license_dro", "ratio"].map(String::from).to_vec(),
        cfg.provenance(),
    );
    let (pe, pd) = (erm_license.license.payout(), dro_license.license.payout());
    for z in 0..space.size() {
        ratios.push(vec![z as f64, sc.groups[z] as f64, sc.q_erm[z], sc.q_dro[z], pe[z], pd[z], pd[z] / pe[z]]);
    }

    let mut headline = vec![
        ("erm_final_mean".to_string(), erm_curve.final_mean()),
        ("erm_final_se".to_string(), erm_curve.final_se()),
        ("dro_final_mean".to_string(), dro_curve.final_mean()),
        ("dro_final_se".to_string(), dro_curve.final_se()),
        ("dro_steps_to_cap".to_string(), opt_to_f64(steps_to_cap(&dro_curve.means, params.cap()))),
    ];
    // Group ratio: expected licenses within each group under each provider's own type.
    let groups = sc.groups.iter().copied().max().unwrap_or(0) + 1;
    for g in 0..groups {
        let (mut num, mut den, mut md, mut me) = (0.0, 0.0, 0.0, 0.0);
        for z in (0..space.size()).filter(|&z| sc.groups[z] == g) {
            num += sc.q_dro[z] * pd[z];
            md += sc.q_dro[z];
            den += sc.q_erm[z] * pe[z];
            me += sc.q_erm[z];
        }
        headline.push((format!("group_{g}_ratio"), (num / md) / (den / me)));
    }
    Ok(ExperimentReport { table, extra_tables: vec![("ratios".to_string(), ratios)], headline })
}
