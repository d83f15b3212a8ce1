//! A strategic provider mixing three individually excluded models.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{stream_id, ExperimentConfig, ExperimentReport, ResultTable};
use crate::betting::aggregate_replicates;
use crate::credal::{gaming_witness, CredalSet, MixtureSearch};
use crate::error::{Error, Result};
use crate::evidence::{mixture, validate_simplex, Categorical, EvidenceSpace};
use crate::license::{discrete_projection_license, optimal_risk_averse_license, sup_value_over_obedient, RatioLicense};
use crate::sampling::{replicate_rng, CategoricalSampler};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexGamingConfig {
    /// The individually non-compliant models.
    pub vertices: Vec<Vec<f64>>,
    /// Mixture weights of the strategic provider.
    pub strategic_weights: Vec<f64>,
    /// Replaces the strategic mixture with an explicit provider type.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<Vec<f64>>,
    /// Grid spacing of the gaming-witness search.
    pub search_resolution: f64,
}

impl Default for SimplexGamingConfig {
    fn default() -> Self {
        Self {
            vertices: vec![vec![0.35, 0.35, 0.3], vec![0.35, 0.3, 0.35], vec![0.3, 0.35, 0.35]],
            strategic_weights: vec![1.0 / 3.0; 3],
            provider: None,
            search_resolution: 0.02,
        }
    }
}

impl SimplexGamingConfig {
    pub fn validate(&self) -> Result<()> {
        let m = self.vertices.first().map_or(0, Vec::len);
        if self.vertices.is_empty() || m == 0 {
            return Err(Error::Config("simplex_gaming.vertices must be non-empty".into()));
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if v.len() != m {
                return Err(Error::Config(format!("simplex_gaming.vertices[{i}] has length {}, expected {m}", v.len())));
            }
            validate_simplex(v).map_err(|e| Error::Config(format!("simplex_gaming.vertices[{i}]: {e}")))?;
        }
        if self.strategic_weights.len() != self.vertices.len() {
            return Err(Error::Config("simplex_gaming.strategic_weights needs one weight per vertex".into()));
        }
        validate_simplex(&self.strategic_weights)
            .map_err(|e| Error::Config(format!("simplex_gaming.strategic_weights: {e}")))?;
        if let Some(p) = &self.provider {
            if p.len() != m {
                return Err(Error::Config("simplex_gaming.provider has the wrong length".into()));
            }
            validate_simplex(p).map_err(|e| Error::Config(format!("simplex_gaming.provider: {e}")))?;
        }
        if !(self.search_resolution > 0.0 && self.search_resolution <= 0.5) {
            return Err(Error::Config("simplex_gaming.search_resolution must lie in (0, 0.5]".into()));
        }
        Ok(())
    }
}

/// Per-step mean and SE of `license` on `runs` seeded streams from `source`; step 0 is `C`.
pub(crate) fn ratio_license_curve(
    source: &Categorical,
    license: &RatioLicense,
    fee: f64,
    runs: usize,
    steps: usize,
    seed: u64,
    family: u64,
) -> crate::betting::ReplicateSummary {
    let sampler = CategoricalSampler::new(source);
    aggregate_replicates(runs, steps + 1, fee, |r, buf| {
        let mut rng = replicate_rng(seed, stream_id(family, r));
        let mut sum = 0.0;
        buf[0] = license.value_at(0.0);
        for slot in buf[1..].iter_mut() {
            sum = license.accumulate(sum, sampler.sample(&mut rng));
            *slot = license.value_at(sum);
        }
    })
}

pub fn run_simplex_gaming(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let sc = cfg.simplex_gaming.as_ref().ok_or_else(|| Error::Config("missing section `simplex_gaming`".into()))?;
    sc.validate()?;
    let params = cfg.params;
    let space = EvidenceSpace::indexed(sc.vertices[0].len())?;
    let points: Vec<Categorical> = sc
        .vertices
        .iter()
        .map(|v| Categorical::new(Arc::clone(&space), v.clone()))
        .collect::<Result<_>>()?;
    let set = CredalSet::new(points.clone())?;
    let q = match &sc.provider {
        Some(p) => Categorical::new(Arc::clone(&space), p.clone())?,
        None => mixture(&points, &sc.strategic_weights)?,
    };

    let (naive_payout, naive_index) = discrete_projection_license(&q, &points, &params)?;
    let naive = RatioLicense::new(&q, &points[naive_index], 1.0, &params)?;
    let credal_opt = optimal_risk_averse_license(&q, &set, &params)?;
    let reference = credal_opt.projection.as_ref().ok_or(Error::Infeasible)?;
    let credal = RatioLicense::new(&q, reference, credal_opt.scale.unwrap_or(1.0), &params)?;
    let lp_value = sup_value_over_obedient(&q, &set, &params)?.value;

    let naive_points = points.clone();
    let naive_mechanism = move |d: &Categorical| -> Result<f64> {
        discrete_projection_license(d, &naive_points, &params)?.0.expected_payout(d)
    };
    let search = MixtureSearch { resolution: sc.search_resolution, seed: cfg.seed, ..Default::default() };
    let witness = gaming_witness(&points, &params, &naive_mechanism, &search)?;

    let naive_curve = ratio_license_curve(&q, &naive, params.fee(), cfg.runs, cfg.steps, cfg.seed, 0);
    let credal_curve = ratio_license_curve(&q, &credal, params.fee(), cfg.runs, cfg.steps, cfg.seed, 0);

    let mut table = ResultTable::new(
        ["step", "naive_mean", "naive_se", "credal_mean", "credal_se"].map(String::from).to_vec(),
        cfg.provenance(),
    );
    for t in 0..=cfg.steps {
        table.push(vec![
            t as f64,
            naive_curve.means[t],
            naive_curve.std_errors[t],
            credal_curve.means[t],
            credal_curve.std_errors[t],
        ]);
    }

    let mut headline = vec![
        ("naive_final_mean".to_string(), naive_curve.final_mean()),
        ("naive_final_se".to_string(), naive_curve.final_se()),
        ("credal_final_mean".to_string(), credal_curve.final_mean()),
        ("credal_final_se".to_string(), credal_curve.final_se()),
        ("naive_one_step_value".to_string(), naive_payout.expected_payout(&q)?),
        ("credal_one_step_value".to_string(), credal_opt.value),
        ("lp_sup_value".to_string(), lp_value),
        ("naive_reference_vertex".to_string(), naive_index as f64),
    ];
    match witness {
        Some(w) => {
            headline.push(("witness_payoff".to_string(), w.payoff));
            for (i, x) in w.weights.iter().enumerate() {
                headline.push((format!("witness_weight_{i}"), *x));
            }
        }
        None => headline.push(("witness_payoff".to_string(), f64::NAN)),
    }
    Ok(ExperimentReport { table, extra_tables: Vec::new(), headline })
}
