//! Scenario runners producing CSV-ready result tables.
//!
//! Every runner is a pure function of its [`ExperimentConfig`]: replicate `r`
//! draws from stream `r` of the configured seed and aggregation order is fixed,
//! so equal configs give byte-identical tables.

mod chi2;
mod fairness;
mod simplex_gaming;
mod spurious;

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evidence::{outcome_counts, Categorical, EvidenceSpace};
use crate::license::{optimal_risk_averse_license, MechanismParams, RatioLicense};
use crate::credal::CredalSet;

pub use chi2::{run_chi2_strategic, Chi2Config};
pub use fairness::{pair_distribution, parity_joint, run_fairness, FairnessConfig};
pub use simplex_gaming::{run_simplex_gaming, SimplexGamingConfig};
pub use spurious::{run_synthetic_spurious, SpuriousConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SimplexGaming,
    Fairness,
    Chi2Strategic,
    SyntheticSpurious,
}

impl Scenario {
    pub const ALL: [Scenario; 4] =
        [Scenario::SimplexGaming, Scenario::Fairness, Scenario::Chi2Strategic, Scenario::SyntheticSpurious];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SimplexGaming => "simplex_gaming",
            Scenario::Fairness => "fairness",
            Scenario::Chi2Strategic => "chi2_strategic",
            Scenario::SyntheticSpurious => "synthetic_spurious",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{name}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub params: MechanismParams,
    pub runs: usize,
    /// Observations per replicate (including any burn-in).
    pub steps: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simplex_gaming: Option<SimplexGamingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness: Option<FairnessConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi2_strategic: Option<Chi2Config>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_spurious: Option<SpuriousConfig>,
}

impl ExperimentConfig {
    /// Defaults for a scenario: `C = 15`, `R = 250` (`R = 100` for the
    /// chi-squared scenario, i.e. `C/R = 0.15`), 30 runs.
    pub fn default_for(scenario: Scenario) -> Self {
        let mut cfg = Self {
            scenario,
            params: MechanismParams::default(),
            runs: 30,
            steps: 500,
            seed: 2024,
            simplex_gaming: None,
            fairness: None,
            chi2_strategic: None,
            synthetic_spurious: None,
        };
        match scenario {
            Scenario::SimplexGaming => cfg.simplex_gaming = Some(SimplexGamingConfig::default()),
            Scenario::Fairness => {
                cfg.steps = 5000;
                cfg.fairness = Some(FairnessConfig::default());
            }
            Scenario::Chi2Strategic => {
                cfg.params = MechanismParams::new(15.0, 100.0).expect("valid defaults");
                cfg.runs = 1;
                cfg.steps = 0;
                cfg.chi2_strategic = Some(Chi2Config::default());
            }
            Scenario::SyntheticSpurious => {
                cfg.steps = 1000;
                cfg.synthetic_spurious = Some(SpuriousConfig::default());
            }
        }
        cfg
    }

    /// Parses a (possibly partial) JSON config; missing fields take the
    /// scenario defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let user: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let Value::Object(ref map) = user else {
            return Err(Error::Config("config must be a JSON object".into()));
        };
        let scenario = match map.get("scenario") {
            Some(Value::String(s)) => Scenario::parse(s)?,
            Some(_) => return Err(Error::Config("`scenario` must be a string".into())),
            None => return Err(Error::Config("missing field `scenario`".into())),
        };
        let mut merged = serde_json::to_value(Self::default_for(scenario))?;
        merge(&mut merged, user);
        let cfg: Self = crate::error::from_json_value(merged)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("`runs` must be at least 1".into()));
        }
        let missing = |section: &str| Error::Config(format!("missing section `{section}` for the chosen scenario"));
        match self.scenario {
            Scenario::SimplexGaming => self.simplex_gaming.as_ref().ok_or_else(|| missing("simplex_gaming"))?.validate(),
            Scenario::Fairness => self.fairness.as_ref().ok_or_else(|| missing("fairness"))?.validate(self.steps),
            Scenario::Chi2Strategic => self.chi2_strategic.as_ref().ok_or_else(|| missing("chi2_strategic"))?.validate(),
            Scenario::SyntheticSpurious => {
                self.synthetic_spurious.as_ref().ok_or_else(|| missing("synthetic_spurious"))?.validate(self.steps)
            }
        }
    }

    /// SHA-256 of the compact JSON serialisation, hex encoded.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serialises").as_bytes())
    }

    fn provenance(&self) -> Provenance {
        Provenance { scenario: self.scenario.name().to_string(), seed: self.seed, config_hash: self.hash() }
    }
}

/// Lower-case hex SHA-256 digest.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub scenario: String,
    pub seed: u64,
    pub config_hash: String,
}

/// A rectangular numeric table with a provenance line.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl ResultTable {
    pub fn new(columns: Vec<String>, provenance: Provenance) -> Self {
        Self { columns, rows: Vec::new(), provenance }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// `# scenario=.. seed=.. config_sha256=..`, the header, then the rows.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# scenario={} seed={} config_sha256={}\n",
            self.provenance.scenario, self.provenance.seed, self.provenance.config_hash
        );
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Main table, optional side tables, and named headline numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub table: ResultTable,
    pub extra_tables: Vec<(String, ResultTable)>,
    pub headline: Vec<(String, f64)>,
}

impl ExperimentReport {
    pub fn headline(&self, key: &str) -> Option<f64> {
        self.headline.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    match cfg.scenario {
        Scenario::SimplexGaming => run_simplex_gaming(cfg),
        Scenario::Fairness => run_fairness(cfg),
        Scenario::Chi2Strategic => run_chi2_strategic(cfg),
        Scenario::SyntheticSpurious => run_synthetic_spurious(cfg),
    }
}

/// Empirical distribution with one pseudo-count per outcome.
pub fn smoothed_empirical(samples: &[usize], space: Arc<EvidenceSpace>) -> Result<Categorical> {
    let counts = outcome_counts(samples, space.size())?;
    let weights = counts.iter().map(|&c| c as f64 + 1.0).collect();
    Categorical::normalized(space, weights)
}

/// Truncated-ratio license calibrated on a burn-in sample: the smoothed
/// empirical `Q̂` against the reference of its log-optimal obedient license.
pub fn calibrated_license(
    burn_in: &[usize],
    space: Arc<EvidenceSpace>,
    set: &CredalSet,
    params: &MechanismParams,
) -> Result<RatioLicense> {
    let q_hat = smoothed_empirical(burn_in, space)?;
    let opt = optimal_risk_averse_license(&q_hat, set, params)?;
    match (&opt.projection, opt.scale) {
        (Some(p), Some(s)) => RatioLicense::new(&q_hat, p, s, params),
        _ => Err(Error::Precondition("optimal license has no binding vertex".into())),
    }
}

/// First step at which a mean curve reaches `cap` (to 1e-12 relative).
pub fn steps_to_cap(means: &[f64], cap: f64) -> Option<usize> {
    means.iter().position(|&m| m >= cap * (1.0 - 1e-12))
}

/// Stream index for replicate `r` of sub-experiment `family`.
pub(crate) fn stream_id(family: u64, r: u64) -> u64 {
    (family << 32) | r
}

fn opt_to_f64(v: Option<usize>) -> f64 {
    v.map_or(f64::NAN, |x| x as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_takes_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"scenario": "fairness", "seed": 7}"#).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.steps, 5000);
        assert_eq!(cfg.fairness.as_ref().unwrap().tau, 0.6);
        let cfg = ExperimentConfig::from_json(r#"{"scenario": "fairness", "fairness": {"tau": 0.5}}"#).unwrap();
        assert_eq!(cfg.fairness.as_ref().unwrap().tau, 0.5);
        assert_eq!(cfg.fairness.as_ref().unwrap().gammas, vec![0.4, 0.6]);
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"scenario": "nope"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"seed": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"scenario": "fairness", "runs": 0}"#).is_err());
        let err = ExperimentConfig::from_json(r#"{"scenario": "fairness", "bogus": 1}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        assert!(ExperimentConfig::from_json(r#"{"scenario": "fairness", "params": {"C": 300}}"#).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default_for(Scenario::SimplexGaming);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn defaults_round_trip() {
        for s in Scenario::ALL {
            let cfg = ExperimentConfig::default_for(s);
            cfg.validate().unwrap();
            assert_eq!(ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);
        }
        assert_eq!(ExperimentConfig::default_for(Scenario::Chi2Strategic).params.cap_ratio(), 100.0 / 15.0);
    }

    #[test]
    fn csv_layout() {
        let mut t = ResultTable::new(
            vec!["a".into(), "b".into()],
            Provenance { scenario: "x".into(), seed: 3, config_hash: "abc".into() },
        );
        t.push(vec![0.0, 1.5]);
        assert_eq!(t.to_csv(), "# scenario=x seed=3 config_sha256=abc\na,b\n0,1.5\n");
    }

    #[test]
    fn smoothing() {
        let space = EvidenceSpace::indexed(2).unwrap();
        let d = smoothed_empirical(&[0, 0], space).unwrap();
        assert_eq!(d.probs(), &[0.75, 0.25]);
    }
}
