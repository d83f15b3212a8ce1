//! Demographic-parity auditing: implicit (betting) and explicit (credal) licenses.
//!
//! Group `A ∈ {0, 1}` is uniform and `Y | A=a ~ Bernoulli(base + Γ·a)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{calibrated_license, opt_to_f64, steps_to_cap, ExperimentConfig, ExperimentReport, ResultTable};
use crate::betting::{aggregate_replicates, replicate_betting, BetPolicy, BettingScore, KellyConfig, Recorded};
use crate::credal::{approximate_constraint_set, parity_space, ConstraintCredalSpec, CredalSet, ParityRegion};
use crate::error::{Error, Result};
use crate::evidence::{Categorical, EvidenceSpace};
use crate::license::{MechanismParams, RatioLicense};
use crate::sampling::{replicate_rng, CategoricalSampler};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FairnessConfig {
    /// Parity threshold `τ`.
    pub tau: f64,
    /// Gap parameters `Γ`.
    pub gammas: Vec<f64>,
    /// `P(Y=1 | A=0)`.
    pub base_rate: f64,
    /// Calibration samples before the explicit license is issued.
    pub burn_in: usize,
    /// Grid steps per unit on the joint simplex for the parity credal set.
    pub grid_resolution: usize,
    /// Draws used to check the analytic betting drift.
    pub drift_draws: usize,
    /// Fixed bet fraction; adaptive Kelly when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_bet: Option<f64>,
}

impl Default for FairnessConfig {
    fn default() -> Self {
        Self {
            tau: 0.6,
            gammas: vec![0.4, 0.6],
            base_rate: 0.1,
            burn_in: 300,
            grid_resolution: 20,
            drift_draws: 100_000,
            constant_bet: None,
        }
    }
}

impl FairnessConfig {
    pub fn validate(&self, steps: usize) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config("fairness.tau must lie in (0, 1)".into()));
        }
        if self.gammas.is_empty() {
            return Err(Error::Config("fairness.gammas must be non-empty".into()));
        }
        if !(0.0..=1.0).contains(&self.base_rate) {
            return Err(Error::Config("fairness.base_rate must lie in [0, 1]".into()));
        }
        for g in &self.gammas {
            if !(*g >= 0.0 && g + self.base_rate <= 1.0) {
                return Err(Error::Config(format!("fairness: Γ = {g} gives a group rate outside [0, 1]")));
            }
        }
        if self.burn_in >= steps {
            return Err(Error::Config("fairness.burn_in must be smaller than steps".into()));
        }
        if self.grid_resolution < 2 {
            return Err(Error::Config("fairness.grid_resolution must be at least 2".into()));
        }
        if self.drift_draws < 2 {
            return Err(Error::Config("fairness.drift_draws must be at least 2".into()));
        }
        if matches!(self.constant_bet, Some(l) if !(l >= 0.0)) {
            return Err(Error::Config("fairness.constant_bet must be non-negative".into()));
        }
        Ok(())
    }
}

/// Law of one paired draw `(Y0, Y1)`, ordered `00, 01, 10, 11`.
pub fn pair_distribution(base_rate: f64, gamma: f64) -> Result<Categorical> {
    let (p0, p1) = (base_rate, base_rate + gamma);
    let space = EvidenceSpace::new(["y0=0,y1=0", "y0=0,y1=1", "y0=1,y1=0", "y0=1,y1=1"])?;
    Categorical::new(space, vec![(1.0 - p0) * (1.0 - p1), (1.0 - p0) * p1, p0 * (1.0 - p1), p0 * p1])
}

/// Joint law of `(Y, A)` on the parity space.
pub fn parity_joint(base_rate: f64, gamma: f64) -> Result<Categorical> {
    let (p0, p1) = (base_rate, base_rate + gamma);
    Categorical::new(parity_space(), vec![0.5 * (1.0 - p0), 0.5 * (1.0 - p1), 0.5 * p0, 0.5 * p1])
}

/// Pair outcome `(y0, y1)` as joint outcomes `(Y=y0, A=0)` and `(Y=y1, A=1)`.
fn pair_to_joint(pair: usize) -> [usize; 2] {
    let (y0, y1) = (pair / 2, pair % 2);
    [2 * y0, 2 * y1 + 1]
}

/// Score `τ − |Y0 − Y1|` on the pair space.
fn parity_score(space: Arc<EvidenceSpace>, tau: f64) -> Result<BettingScore> {
    BettingScore::new(space, vec![tau, tau - 1.0, tau - 1.0, tau], tau)
}

struct GammaResult {
    betting: crate::betting::ReplicateSummary,
    explicit: crate::betting::ReplicateSummary,
    drift_analytic: f64,
    drift_empirical: f64,
    drift_se: f64,
}

fn run_gamma(
    cfg: &ExperimentConfig,
    fc: &FairnessConfig,
    set: &CredalSet,
    params: &MechanismParams,
    gamma: f64,
    index: u64,
) -> Result<GammaResult> {
    let pair = pair_distribution(fc.base_rate, gamma)?;
    let score = parity_score(Arc::clone(pair.space()), fc.tau)?;
    let kelly = KellyConfig {
        policy: fc.constant_bet.map_or(BetPolicy::Adaptive, BetPolicy::Constant),
        ..Default::default()
    };
    let mut betting = replicate_betting(
        &pair,
        &score,
        &kelly,
        params,
        cfg.runs,
        cfg.steps,
        cfg.seed.wrapping_add(3 * index),
        Recorded::License,
    )?;
    betting.means.insert(0, params.fee());
    betting.std_errors.insert(0, 0.0);

    // Explicit license on the same paired draws, each pair read as the two
    // joint observations (Y0, A=0) and (Y1, A=1); calibrated on the first
    // `burn_in` pairs.
    let joint = parity_joint(fc.base_rate, gamma)?;
    let sampler = CategoricalSampler::new(&pair);
    let seed = cfg.seed.wrapping_add(3 * index);
    let burn_in = fc.burn_in;
    let licenses: Vec<RatioLicense> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r);
            let burn: Vec<usize> =
                (0..burn_in).flat_map(|_| pair_to_joint(sampler.sample(&mut rng))).collect();
            calibrated_license(&burn, Arc::clone(joint.space()), set, params)
        })
        .collect::<Result<_>>()?;
    let explicit = aggregate_replicates(cfg.runs, cfg.steps + 1, params.fee(), |r, buf| {
        let license = &licenses[r as usize];
        let mut rng = replicate_rng(seed, r);
        for _ in 0..burn_in {
            sampler.sample(&mut rng);
        }
        let mut sum = 0.0;
        for (t, slot) in buf.iter_mut().enumerate() {
            if t > burn_in {
                for z in pair_to_joint(sampler.sample(&mut rng)) {
                    sum = license.accumulate(sum, z);
                }
            }
            *slot = license.value_at(sum);
        }
    });

    let drift_analytic = score.drift(&pair)?;
    let drift_sampler = CategoricalSampler::new(&pair);
    let mut rng = replicate_rng(cfg.seed.wrapping_add(3 * index + 2), 0);
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..fc.drift_draws {
        let b = score.score()[drift_sampler.sample(&mut rng)];
        sum += b;
        sq += b * b;
    }
    let n = fc.drift_draws as f64;
    let drift_empirical = sum / n;
    let var = (sq - sum * sum / n) / (n - 1.0);
    Ok(GammaResult { betting, explicit, drift_analytic, drift_empirical, drift_se: (var / n).sqrt() })
}

/// The one-sided parity credal set `{P(Y=1|A=1) − P(Y=1|A=0) ≥ τ}` on a grid, pruned to its hull vertices.
pub(crate) fn parity_credal_set(tau: f64, resolution: usize) -> Result<CredalSet> {
    let spec = ConstraintCredalSpec::new(tau, resolution, ParityRegion::Exceeding)?;
    approximate_constraint_set(&spec)?.pruned()
}

pub fn run_fairness(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let fc = cfg.fairness.as_ref().ok_or_else(|| Error::Config("missing section `fairness`".into()))?;
    fc.validate(cfg.steps)?;
    let params = cfg.params;
    let set = parity_credal_set(fc.tau, fc.grid_resolution)?;

    let results: Vec<GammaResult> = fc
        .gammas
        .iter()
        .enumerate()
        .map(|(i, &g)| run_gamma(cfg, fc, &set, &params, g, i as u64))
        .collect::<Result<_>>()?;

    let mut columns = vec!["step".to_string()];
    for g in &fc.gammas {
        for c in ["betting_mean", "betting_se", "explicit_mean", "explicit_se"] {
            columns.push(format!("{c}_g{g}"));
        }
    }
    let mut table = ResultTable::new(columns, cfg.provenance());
    for t in 0..=cfg.steps {
        let mut row = vec![t as f64];
        for r in &results {
            row.extend([r.betting.means[t], r.betting.std_errors[t], r.explicit.means[t], r.explicit.std_errors[t]]);
        }
        table.push(row);
    }

    let mut headline = vec![("credal_vertices".to_string(), set.num_vertices() as f64)];
    for (g, r) in fc.gammas.iter().zip(&results) {
        let explicit_cap = steps_to_cap(&r.explicit.means, params.cap());
        headline.extend([
            (format!("betting_final_mean_g{g}"), r.betting.final_mean()),
            (format!("betting_final_se_g{g}"), r.betting.final_se()),
            (format!("betting_steps_to_cap_g{g}"), opt_to_f64(steps_to_cap(&r.betting.means, params.cap()))),
            (format!("explicit_final_mean_g{g}"), r.explicit.final_mean()),
            (format!("explicit_final_se_g{g}"), r.explicit.final_se()),
            (format!("explicit_steps_to_cap_g{g}"), opt_to_f64(explicit_cap)),
            (
                format!("explicit_steps_to_cap_after_burn_in_g{g}"),
                opt_to_f64(explicit_cap.map(|s| s.saturating_sub(fc.burn_in))),
            ),
            (format!("drift_analytic_g{g}"), r.drift_analytic),
            (format!("drift_empirical_g{g}"), r.drift_empirical),
            (format!("drift_se_g{g}"), r.drift_se),
        ]);
    }
    Ok(ExperimentReport { table, extra_tables: Vec::new(), headline })
}
