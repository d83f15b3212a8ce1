use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use regmech_core::betting::{run_sequential_license, BetPolicy, BettingScore, KellyConfig};
use regmech_core::experiments::{run_experiment, sha256_hex, ExperimentConfig, Scenario};
use regmech_core::license::{
    is_obedient, optimal_risk_averse_license, participation_decision, sup_value_over_obedient, LicenseJson,
    OBEDIENCE_TOLERANCE,
};
use regmech_core::market::{simulate_market, Attitude, MarketMechanism, Provider, Requirement};
use regmech_core::sampling::SampleStream;
use regmech_core::{Categorical, CredalSet, Error, EvidenceSpace, MechanismParams};

use crate::{BettingArgs, ExperimentArgs, LicenseArgs, MarketArgs};

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type CmdResult<T = ()> = std::result::Result<T, Failure>;

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

fn runtime(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: error.into() }
}

/// Input and configuration problems exit with 2, everything else with 1.
fn classify(error: Error) -> Failure {
    match error {
        Error::Config(_)
        | Error::Serialization(_)
        | Error::InvalidSpace(_)
        | Error::InvalidDistribution(_)
        | Error::InvalidWeights(_)
        | Error::InvalidParams(_)
        | Error::InvalidLicense(_)
        | Error::SpaceMismatch { .. }
        | Error::OutcomeOutOfRange { .. }
        | Error::EmptyCredalSet => usage(error),
        _ => runtime(error),
    }
}

fn read(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).map_err(|e| usage(anyhow!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CmdResult<T> {
    let text = read(path)?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        usage(anyhow!("{}: field `{field}`: {}", path.display(), e.inner()))
    })
}

fn load_credal(path: &Path) -> CmdResult<CredalSet> {
    CredalSet::from_json(&read(path)?).map_err(|e| usage(anyhow!("{}: {e}", path.display())))
}

fn refuse_overwrite(paths: &[PathBuf], force: bool) -> CmdResult {
    if force {
        return Ok(());
    }
    match paths.iter().find(|p| p.exists()) {
        Some(p) => Err(usage(anyhow!("refusing to overwrite {} (pass --force)", p.display()))),
        None => Ok(()),
    }
}

fn write(path: &Path, contents: &str) -> CmdResult {
    fs::write(path, contents).map_err(|e| runtime(anyhow!("cannot write {}: {e}", path.display())))
}

fn sibling(path: &Path, suffix: &str, extension: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}.{extension}"))
}

fn fmt_vec(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", cells.join(", "))
}

fn params_with(base: Option<MechanismParams>, fee: Option<f64>, cap: Option<f64>) -> CmdResult<MechanismParams> {
    let base = base.unwrap_or_default();
    MechanismParams::new(fee.unwrap_or(base.fee()), cap.unwrap_or(base.cap())).map_err(classify)
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LicenseQuery {
    #[serde(default)]
    provider: Option<Vec<f64>>,
    #[serde(default)]
    params: Option<MechanismParams>,
}

#[derive(Serialize)]
struct LicenseOutput {
    risk_neutral: LicenseJson,
    risk_neutral_value: f64,
    risk_averse: LicenseJson,
    risk_averse_value: f64,
    reference: Option<Vec<f64>>,
    scale: Option<f64>,
    tight_vertex_weights: Vec<f64>,
    obedient: bool,
    participates: bool,
    converged: bool,
}

pub fn license(args: &LicenseArgs, verbose: bool) -> CmdResult {
    let set = load_credal(&args.credal)?;
    let query: LicenseQuery = match &args.config {
        Some(p) => parse_json(p)?,
        None => LicenseQuery::default(),
    };
    let provider = args
        .provider
        .clone()
        .or(query.provider)
        .ok_or_else(|| usage(anyhow!("no provider type given (use --provider or `provider` in --config)")))?;
    let params = params_with(query.params, args.fee, args.cap)?;
    let q = Categorical::new(set.space().clone(), provider.clone()).map_err(|e| usage(anyhow!("provider: {e}")))?;
    let out = args.output.out.clone().unwrap_or_else(|| PathBuf::from("license.json"));
    refuse_overwrite(std::slice::from_ref(&out), args.output.force)?;

    let neutral = sup_value_over_obedient(&q, &set, &params).map_err(classify)?;
    let averse = optimal_risk_averse_license(&q, &set, &params).map_err(classify)?;
    let obedient = is_obedient(&neutral.license, &set, &params, OBEDIENCE_TOLERANCE).map_err(classify)?
        && is_obedient(&averse.license, &set, &params, OBEDIENCE_TOLERANCE).map_err(classify)?;
    let participates = participation_decision(neutral.value, &params);

    let hash_input = serde_json::json!({
        "credal": read(&args.credal)?,
        "provider": provider,
        "params": params,
    });
    println!("config_sha256={}", sha256_hex(hash_input.to_string().as_bytes()));
    println!("risk-neutral license: {} value={:.6}", fmt_vec(neutral.license.payout()), neutral.value);
    println!("risk-averse license: {} value={:.6}", fmt_vec(averse.license.payout()), averse.value);
    println!("obedient: {}", if obedient { "yes" } else { "no" });
    if participates {
        println!("verdict: participates (sup > C)");
    } else {
        println!("verdict: excluded (sup ≤ C)");
    }
    if verbose {
        eprintln!("tight vertex weights: {}", fmt_vec(&neutral.tight_vertex_weights));
        if let Some(p) = &averse.projection {
            eprintln!("risk-averse reference: {} scale={:?}", fmt_vec(p.probs()), averse.scale);
        }
    }

    let output = LicenseOutput {
        risk_neutral: LicenseJson::from(&neutral.license),
        risk_neutral_value: neutral.value,
        risk_averse: LicenseJson::from(&averse.license),
        risk_averse_value: averse.value,
        reference: averse.projection.as_ref().map(|p| p.probs().to_vec()),
        scale: averse.scale,
        tight_vertex_weights: neutral.tight_vertex_weights.clone(),
        obedient,
        participates,
        converged: averse.converged,
    };
    let text = serde_json::to_string_pretty(&output).map_err(runtime)?;
    write(&out, &(text + "\n"))?;
    if !averse.converged {
        return Err(runtime(anyhow!("risk-averse optimizer did not converge; best point written to {}", out.display())));
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RequirementConfig {
    /// Non-compliant iff inside the credal set.
    Credal,
    Threshold { metric: Vec<f64>, tau: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProviderConfig {
    id: String,
    #[serde(default)]
    q: Option<Vec<f64>>,
    #[serde(default = "default_attitude")]
    attitude: Attitude,
    #[serde(default)]
    base_models: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

fn default_attitude() -> Attitude {
    Attitude::RiskNeutral
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum MechanismKind {
    OptimalLp,
    RiskAverse,
    Betting,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketConfig {
    #[serde(default)]
    params: Option<MechanismParams>,
    mechanism: MechanismKind,
    requirement: RequirementConfig,
    providers: Vec<ProviderConfig>,
    #[serde(default = "default_market_steps")]
    steps: usize,
    #[serde(default = "default_runs")]
    runs: usize,
    #[serde(default)]
    seed: u64,
}

fn default_market_steps() -> usize {
    500
}

fn default_runs() -> usize {
    30
}

pub fn market(args: &MarketArgs, verbose: bool) -> CmdResult {
    let set = load_credal(&args.credal)?;
    let mut cfg: MarketConfig = parse_json(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let params = params_with(cfg.params, None, None)?;
    let space = set.space().clone();
    let dist = |v: &[f64], what: &str| {
        Categorical::new(space.clone(), v.to_vec()).map_err(|e| usage(anyhow!("{what}: {e}")))
    };
    let mut providers = Vec::with_capacity(cfg.providers.len());
    for p in &cfg.providers {
        let provider = match (&p.q, &p.base_models) {
            (Some(q), None) => Provider::new(p.id.clone(), dist(q, &format!("providers[{}].q", p.id))?, p.attitude),
            (None, Some(base)) => {
                let base: Vec<Categorical> = base
                    .iter()
                    .map(|b| dist(b, &format!("providers[{}].base_models", p.id)))
                    .collect::<CmdResult<_>>()?;
                let weights = p.weights.clone().unwrap_or_else(|| vec![1.0 / base.len() as f64; base.len()]);
                Provider::strategic(p.id.clone(), base, &weights, p.attitude).map_err(classify)?
            }
            _ => return Err(usage(anyhow!("providers[{}]: give exactly one of `q` and `base_models`", p.id))),
        };
        providers.push(provider);
    }
    let requirement = match &cfg.requirement {
        RequirementConfig::Credal => Requirement::Credal(set.clone()),
        RequirementConfig::Threshold { metric, tau } => {
            Requirement::threshold(metric.clone(), *tau).map_err(classify)?
        }
    };
    let mechanism = match cfg.mechanism {
        MechanismKind::OptimalLp => MarketMechanism::OptimalLp,
        MechanismKind::RiskAverse => MarketMechanism::RiskAverse,
        MechanismKind::Betting => MarketMechanism::Betting {
            steps: cfg.steps,
            runs: cfg.runs,
            seed: cfg.seed,
            kelly: KellyConfig::default(),
        },
    };
    if matches!(mechanism, MarketMechanism::Betting { .. }) && matches!(requirement, Requirement::Credal(_)) {
        return Err(usage(anyhow!("the betting mechanism needs a threshold requirement")));
    }
    let out = args.output.out.clone().unwrap_or_else(|| PathBuf::from("market.csv"));
    let summary_path = sibling(&out, ".summary", "json");
    refuse_overwrite(&[out.clone(), summary_path.clone()], args.output.force)?;

    let report = simulate_market(&providers, &requirement, &set, &params, &mechanism).map_err(classify)?;
    let hash = sha256_hex(
        serde_json::json!({"credal": read(&args.credal)?, "market": serde_json::to_value(&cfg).map_err(runtime)?})
            .to_string()
            .as_bytes(),
    );
    write(&out, &format!("# seed={} config_sha256={hash}\n{}", cfg.seed, report.to_csv()))?;
    write(&summary_path, &(report.summary_json().map_err(runtime)? + "\n"))?;

    println!("config_sha256={hash} seed={}", cfg.seed);
    for r in &report.rows {
        println!(
            "{}: sup_value={:.6} compliant={} participated={} {}{}",
            r.provider_id,
            r.sup_value,
            r.compliant,
            r.participated,
            r.classification.as_str(),
            if r.indeterminate { " (indeterminate)" } else { "" }
        );
    }
    println!("perfect={}", report.perfect);
    if verbose {
        eprintln!("wrote {} and {}", out.display(), summary_path.display());
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BettingConfig {
    #[serde(default)]
    params: Option<MechanismParams>,
    #[serde(default)]
    labels: Option<Vec<String>>,
    /// Distribution the evidence is drawn from.
    source: Vec<f64>,
    metric: Vec<f64>,
    tau: f64,
    #[serde(default = "default_betting_steps")]
    steps: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default = "default_max_bet")]
    max_bet: f64,
    #[serde(default)]
    constant_bet: Option<f64>,
}

fn default_betting_steps() -> usize {
    1000
}

fn default_epsilon() -> f64 {
    0.01
}

fn default_max_bet() -> f64 {
    10.0
}

pub fn betting(args: &BettingArgs, verbose: bool) -> CmdResult {
    let mut cfg: BettingConfig = parse_json(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let params = params_with(cfg.params, None, None)?;
    let space = match &cfg.labels {
        Some(l) => EvidenceSpace::new(l.iter().cloned()),
        None => EvidenceSpace::indexed(cfg.source.len()),
    }
    .map_err(classify)?;
    let source = Categorical::new(space.clone(), cfg.source.clone()).map_err(|e| usage(anyhow!("source: {e}")))?;
    let score = BettingScore::from_metric(space, &cfg.metric, cfg.tau).map_err(|e| usage(anyhow!("metric: {e}")))?;
    let kelly = KellyConfig {
        epsilon: cfg.epsilon,
        max_bet: cfg.max_bet,
        policy: cfg.constant_bet.map_or(BetPolicy::Adaptive, BetPolicy::Constant),
        ..Default::default()
    };
    kelly.validate().map_err(classify)?;
    if cfg.steps == 0 {
        return Err(usage(anyhow!("steps must be at least 1")));
    }
    let out = args.output.out.clone().unwrap_or_else(|| PathBuf::from("betting.csv"));
    refuse_overwrite(std::slice::from_ref(&out), args.output.force)?;

    let mut stream = SampleStream::new(source.clone(), cfg.seed);
    let trajectory = run_sequential_license(&mut stream, &score, &kelly, &params, cfg.steps).map_err(classify)?;
    let hash = sha256_hex(serde_json::to_string(&cfg).map_err(runtime)?.as_bytes());
    write(&out, &format!("# seed={} config_sha256={hash}\n{}", cfg.seed, trajectory.to_csv()))?;

    let values = trajectory.license_values();
    let to_cap = values.iter().position(|&v| v >= params.cap()).map(|i| i + 1);
    println!("config_sha256={hash} seed={}", cfg.seed);
    println!("drift={:.6}", score.drift(&source).map_err(classify)?);
    println!("final_license={:.6}", trajectory.final_license().unwrap_or(params.fee()));
    match to_cap {
        Some(s) => println!("steps_to_cap={s}"),
        None => println!("steps_to_cap=none"),
    }
    if verbose {
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}

pub fn experiment(args: &ExperimentArgs, verbose: bool) -> CmdResult {
    let scenario = Scenario::parse(&args.scenario).map_err(classify)?;
    let mut value = match &args.config {
        Some(p) => serde_json::from_str::<Value>(&read(p)?).map_err(|e| usage(anyhow!("{}: {e}", p.display())))?,
        None => Value::Object(Default::default()),
    };
    let Value::Object(map) = &mut value else {
        return Err(usage(anyhow!("config must be a JSON object")));
    };
    match map.get("scenario") {
        Some(Value::String(s)) if s != scenario.name() => {
            return Err(usage(anyhow!("config is for scenario `{s}`, not `{}`", scenario.name())));
        }
        _ => {
            map.insert("scenario".into(), Value::String(scenario.name().into()));
        }
    }
    if let Some(seed) = args.seed {
        map.insert("seed".into(), Value::from(seed));
    }
    let cfg = ExperimentConfig::from_json(&value.to_string()).map_err(classify)?;

    let out = args.output.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", scenario.name())));
    // Side tables are named after the scenario's report; list them before running.
    let side_names: &[&str] = match scenario {
        Scenario::SyntheticSpurious => &["ratios"],
        _ => &[],
    };
    let mut paths = vec![out.clone()];
    paths.extend(side_names.iter().map(|n| sibling(&out, &format!("_{n}"), "csv")));
    refuse_overwrite(&paths, args.output.force)?;

    let report = run_experiment(&cfg).map_err(classify)?;
    write(&out, &report.table.to_csv())?;
    for (name, table) in &report.extra_tables {
        write(&sibling(&out, &format!("_{name}"), "csv"), &table.to_csv())?;
    }
    println!("scenario={} config_sha256={} seed={}", scenario.name(), cfg.hash(), cfg.seed);
    for (k, v) in &report.headline {
        println!("{k}={v}");
    }
    if verbose {
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}
