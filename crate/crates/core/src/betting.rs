//! Sequential licenses built from a testing-by-betting wealth process.
//!
//! Wealth starts at the fee `C` and is multiplied by `1 + λ·b(z)` after each
//! observation, where `b = h − τ` has non-positive mean under every
//! non-compliant distribution. The issued license is `min{wealth, R}`.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evidence::{check_len, check_space, dot, Categorical, EvidenceSpace};
use crate::license::MechanismParams;
use crate::sampling::{replicate_rng, CategoricalSampler, SampleStream};

/// Per-outcome betting score `b(z) = h(z) − τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BettingScore {
    space: Arc<EvidenceSpace>,
    score: Vec<f64>,
    tau: f64,
}

impl BettingScore {
    /// Score from a metric `h` and threshold `τ`.
    pub fn from_metric(space: Arc<EvidenceSpace>, metric: &[f64], tau: f64) -> Result<Self> {
        let score = metric.iter().map(|h| h - tau).collect();
        Self::new(space, score, tau)
    }

    /// Score given directly; `tau` is kept for reporting only.
    pub fn new(space: Arc<EvidenceSpace>, score: Vec<f64>, tau: f64) -> Result<Self> {
        check_len(&space, score.len())?;
        if score.iter().any(|s| !s.is_finite()) || !tau.is_finite() {
            return Err(Error::InvalidParams("betting score must be finite".into()));
        }
        Ok(Self { space, score, tau })
    }

    pub fn space(&self) -> &Arc<EvidenceSpace> {
        &self.space
    }

    pub fn score(&self) -> &[f64] {
        &self.score
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `E_dist[b]`.
    pub fn drift(&self, dist: &Categorical) -> Result<f64> {
        check_space(&self.space, dist.space())?;
        Ok(dot(&self.score, dist.probs()))
    }

    /// Largest single-step loss `max_z (−b(z))`, or 0 if no outcome loses.
    pub fn max_loss(&self) -> f64 {
        self.score.iter().fold(0.0f64, |acc, &s| acc.max(-s))
    }
}

/// How the bet fraction is chosen at each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetPolicy {
    /// Plug-in Kelly on the add-one smoothed empirical distribution of the past.
    Adaptive,
    /// The same fraction every step (clamped to the ceiling).
    Constant(f64),
}

/// How `kelly_optimal_bet` maximises the expected log-growth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KellySolver {
    /// Safeguarded Newton on the derivative, bracketed by bisection.
    Newton { tolerance: f64 },
    /// Best point of a uniform grid over `[0, B]`.
    Grid { points: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KellyConfig {
    /// Admissibility margin: every permitted bet keeps `1 + λ·b(z) ≥ ε`.
    pub epsilon: f64,
    /// Ceiling used when no outcome can lose (and an overall upper bound).
    pub max_bet: f64,
    pub solver: KellySolver,
    pub policy: BetPolicy,
}

impl Default for KellyConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            max_bet: 10.0,
            solver: KellySolver::Newton { tolerance: 1e-13 },
            policy: BetPolicy::Adaptive,
        }
    }
}

impl KellyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParams(format!("admissibility margin must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.max_bet > 0.0 && self.max_bet.is_finite()) {
            return Err(Error::InvalidParams(format!("max_bet must be positive, got {}", self.max_bet)));
        }
        match self.solver {
            KellySolver::Newton { tolerance } if !(tolerance > 0.0) => {
                Err(Error::InvalidParams("Newton tolerance must be positive".into()))
            }
            KellySolver::Grid { points } if points < 2 => Err(Error::InvalidParams("grid needs at least 2 points".into())),
            _ => Ok(()),
        }
    }

    /// Bet ceiling `B = min{(1 − ε)/max_loss, max_bet}`.
    pub fn ceiling(&self, b: &BettingScore) -> f64 {
        let loss = b.max_loss();
        if loss > 0.0 {
            ((1.0 - self.epsilon) / loss).min(self.max_bet)
        } else {
            self.max_bet
        }
    }
}

/// Expected log-growth `f(λ) = Σ_z d(z)·ln(1 + λ·b(z))`.
pub fn log_growth(dist: &[f64], score: &[f64], lambda: f64) -> f64 {
    dist.iter()
        .zip(score)
        .filter(|(&d, _)| d > 0.0)
        .map(|(&d, &s)| d * (1.0 + lambda * s).ln())
        .sum()
}

fn growth_derivatives(dist: &[f64], score: &[f64], lambda: f64) -> (f64, f64) {
    let mut first = 0.0;
    let mut second = 0.0;
    for (&d, &s) in dist.iter().zip(score) {
        if d > 0.0 {
            let r = s / (1.0 + lambda * s);
            first += d * r;
            second -= d * r * r;
        }
    }
    (first, second)
}

fn kelly_on(dist: &[f64], score: &[f64], ceiling: f64, solver: KellySolver) -> f64 {
    let (d0, _) = growth_derivatives(dist, score, 0.0);
    if d0 <= 0.0 {
        return 0.0;
    }
    match solver {
        KellySolver::Grid { points } => {
            let mut best = (0.0, 0.0);
            for i in 1..points {
                let lambda = ceiling * i as f64 / (points - 1) as f64;
                let v = log_growth(dist, score, lambda);
                if v > best.1 {
                    best = (lambda, v);
                }
            }
            best.0
        }
        KellySolver::Newton { tolerance } => {
            if growth_derivatives(dist, score, ceiling).0 >= 0.0 {
                return ceiling;
            }
            // f' is decreasing on [lo, hi] with f'(lo) > 0 > f'(hi).
            let (mut lo, mut hi) = (0.0, ceiling);
            let mut x = 0.5 * ceiling;
            for _ in 0..200 {
                let (g, h) = growth_derivatives(dist, score, x);
                if g == 0.0 {
                    break;
                }
                if g > 0.0 {
                    lo = x;
                } else {
                    hi = x;
                }
                let newton = x - g / h;
                let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
                let moved = (next - x).abs();
                x = next;
                if moved <= tolerance || hi - lo <= tolerance {
                    break;
                }
            }
            x.clamp(0.0, ceiling)
        }
    }
}

/// Kelly fraction `argmax_{λ ∈ [0, B]} E_dist[ln(1 + λ·b)]`; zero when `E_dist[b] ≤ 0`.
pub fn kelly_optimal_bet(dist: &Categorical, b: &BettingScore, cfg: &KellyConfig) -> Result<f64> {
    check_space(b.space(), dist.space())?;
    cfg.validate()?;
    Ok(kelly_on(dist.probs(), b.score(), cfg.ceiling(b), cfg.solver))
}

/// Running outcome counts for the plug-in strategy.
#[derive(Debug, Clone)]
struct PlugIn {
    counts: Vec<f64>,
    total: f64,
    scratch: Vec<f64>,
}

impl PlugIn {
    fn new(m: usize) -> Self {
        Self { counts: vec![0.0; m], total: 0.0, scratch: vec![0.0; m] }
    }

    fn observe(&mut self, z: usize) {
        self.counts[z] += 1.0;
        self.total += 1.0;
    }

    fn bet(&mut self, score: &[f64], ceiling: f64, solver: KellySolver) -> f64 {
        if self.total == 0.0 {
            return 0.0;
        }
        let denom = self.total + self.counts.len() as f64;
        for (s, c) in self.scratch.iter_mut().zip(&self.counts) {
            *s = (c + 1.0) / denom;
        }
        kelly_on(&self.scratch, score, ceiling, solver)
    }
}

/// Plug-in Kelly bet from past outcomes, with add-one smoothing. Zero on an empty history.
pub fn adaptive_bet(history: &[usize], b: &BettingScore, cfg: &KellyConfig) -> Result<f64> {
    cfg.validate()?;
    let m = b.score().len();
    let mut plug = PlugIn::new(m);
    for &z in history {
        if z >= m {
            return Err(Error::OutcomeOutOfRange { outcome: z, size: m });
        }
        plug.observe(z);
    }
    Ok(plug.bet(b.score(), cfg.ceiling(b), cfg.solver))
}

/// Wealth `C·∏(1 + λ_i·b(z_i))`, tracked in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthProcess {
    log_wealth: f64,
    params: MechanismParams,
    history: Vec<(f64, usize)>,
}

impl WealthProcess {
    pub fn new(params: MechanismParams) -> Self {
        Self { log_wealth: params.fee().ln(), params, history: Vec::new() }
    }

    /// Multiplies wealth by `1 + λ·b(z)`; rejects `λ` that could make wealth non-positive.
    pub fn step(&mut self, b: &BettingScore, lambda: f64, z: usize) -> Result<()> {
        let m = b.score().len();
        if z >= m {
            return Err(Error::OutcomeOutOfRange { outcome: z, size: m });
        }
        if !(lambda >= 0.0) || !lambda.is_finite() || 1.0 - lambda * b.max_loss() <= 0.0 {
            let ceiling = if b.max_loss() > 0.0 { 1.0 / b.max_loss() } else { f64::INFINITY };
            return Err(Error::InadmissibleBet { lambda, ceiling });
        }
        self.log_wealth += (1.0 + lambda * b.score()[z]).ln();
        self.history.push((lambda, z));
        Ok(())
    }

    pub fn wealth(&self) -> f64 {
        self.log_wealth.exp()
    }

    pub fn log_wealth(&self) -> f64 {
        self.log_wealth
    }

    /// `min{wealth, R}`.
    pub fn license_value(&self) -> f64 {
        if self.log_wealth >= self.params.cap().ln() {
            self.params.cap()
        } else {
            self.wealth().min(self.params.cap())
        }
    }

    pub fn steps(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &[(f64, usize)] {
        &self.history
    }

    pub fn params(&self) -> &MechanismParams {
        &self.params
    }
}

/// One row of a betting run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub step: usize,
    pub lambda: f64,
    pub outcome: usize,
    pub wealth: f64,
    pub license_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BettingTrajectory {
    pub rows: Vec<TrajectoryRow>,
}

impl BettingTrajectory {
    /// Issued license value after each step.
    pub fn license_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.license_value).collect()
    }

    pub fn final_license(&self) -> Option<f64> {
        self.rows.last().map(|r| r.license_value)
    }

    /// CSV with columns `step,lambda,outcome,wealth,license_value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,lambda,outcome,wealth,license_value\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.step, r.lambda, r.outcome, r.wealth, r.license_value);
        }
        out
    }
}

/// Drives one betting run: choose `λ`, draw an outcome, update wealth.
struct Bettor<'a> {
    b: &'a BettingScore,
    ceiling: f64,
    cfg: KellyConfig,
    plug: PlugIn,
}

impl<'a> Bettor<'a> {
    fn new(b: &'a BettingScore, cfg: &KellyConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { b, ceiling: cfg.ceiling(b), cfg: *cfg, plug: PlugIn::new(b.score().len()) })
    }

    fn next_bet(&mut self) -> f64 {
        match self.cfg.policy {
            BetPolicy::Adaptive => self.plug.bet(self.b.score(), self.ceiling, self.cfg.solver),
            BetPolicy::Constant(l) => l.clamp(0.0, self.ceiling),
        }
    }

    fn factor(&mut self, lambda: f64, z: usize) -> f64 {
        self.plug.observe(z);
        (1.0 + lambda * self.b.score()[z]).ln()
    }
}

/// Runs `n` steps of the betting license on outcomes drawn from `stream`.
pub fn run_sequential_license(
    stream: &mut SampleStream,
    b: &BettingScore,
    cfg: &KellyConfig,
    params: &MechanismParams,
    n: usize,
) -> Result<BettingTrajectory> {
    check_space(b.space(), stream.source().space())?;
    if n == 0 {
        return Err(Error::Precondition("need at least one step".into()));
    }
    let mut bettor = Bettor::new(b, cfg)?;
    let mut process = WealthProcess::new(*params);
    let mut rows = Vec::with_capacity(n);
    for step in 1..=n {
        let lambda = bettor.next_bet();
        let z = stream.next_outcome();
        bettor.plug.observe(z);
        process.step(b, lambda, z)?;
        rows.push(TrajectoryRow {
            step,
            lambda,
            outcome: z,
            wealth: process.wealth(),
            license_value: process.license_value(),
        });
    }
    Ok(BettingTrajectory { rows })
}

/// Per-step mean and standard error of a quantity over independent replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSummary {
    pub runs: usize,
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
}

impl ReplicateSummary {
    pub fn final_mean(&self) -> f64 {
        *self.means.last().expect("summary has at least one step")
    }

    pub fn final_se(&self) -> f64 {
        *self.std_errors.last().expect("summary has at least one step")
    }
}

/// Runs per parallel work unit; fixed so float aggregation order never depends on scheduling.
const CHUNK: usize = 64;

/// Aggregates per-step values of `runs` replicates; `path(r, buf)` fills `buf`
/// (length `n`) for replicate `r`. Sums are taken around `center` for accuracy.
pub(crate) fn aggregate_replicates<F>(runs: usize, n: usize, center: f64, path: F) -> ReplicateSummary
where
    F: Fn(u64, &mut [f64]) + Sync,
{
    let indices: Vec<u64> = (0..runs as u64).collect();
    let partials: Vec<(Vec<f64>, Vec<f64>)> = indices
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut sum = vec![0.0; n];
            let mut sq = vec![0.0; n];
            let mut buf = vec![0.0; n];
            for &r in chunk {
                path(r, &mut buf);
                for ((s, q), v) in sum.iter_mut().zip(sq.iter_mut()).zip(&buf) {
                    let d = v - center;
                    *s += d;
                    *q += d * d;
                }
            }
            (sum, sq)
        })
        .collect();
    let mut sum = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for (s, q) in &partials {
        for i in 0..n {
            sum[i] += s[i];
            sq[i] += q[i];
        }
    }
    let rf = runs as f64;
    let means = sum.iter().map(|s| center + s / rf).collect();
    let std_errors = sum
        .iter()
        .zip(&sq)
        .map(|(s, q)| {
            if runs < 2 {
                0.0
            } else {
                let var = ((q - s * s / rf) / (rf - 1.0)).max(0.0);
                (var / rf).sqrt()
            }
        })
        .collect();
    ReplicateSummary { runs, means, std_errors }
}

/// What a replicate records at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recorded {
    /// Uncapped wealth.
    Wealth,
    /// Issued license `min{wealth, R}`.
    License,
}

/// Per-step mean and SE over `runs` seeded betting runs with outcomes from `source`.
/// Replicate `r` uses stream `r` of `seed`.
pub fn replicate_betting(
    source: &Categorical,
    b: &BettingScore,
    cfg: &KellyConfig,
    params: &MechanismParams,
    runs: usize,
    n: usize,
    seed: u64,
    recorded: Recorded,
) -> Result<ReplicateSummary> {
    check_space(b.space(), source.space())?;
    cfg.validate()?;
    if runs == 0 || n == 0 {
        return Err(Error::Precondition("need at least one run and one step".into()));
    }
    let sampler = CategoricalSampler::new(source);
    let log_cap = params.cap().ln();
    let cap = params.cap();
    let log_fee = params.fee().ln();
    Ok(aggregate_replicates(runs, n, params.fee(), |r, buf| {
        let mut rng = replicate_rng(seed, r);
        let mut bettor = Bettor::new(b, cfg).expect("config validated");
        let mut log_wealth = log_fee;
        for slot in buf.iter_mut() {
            let lambda = bettor.next_bet();
            let z = sampler.sample(&mut rng);
            log_wealth += bettor.factor(lambda, z);
            *slot = match recorded {
                Recorded::Wealth => log_wealth.exp(),
                Recorded::License if log_wealth >= log_cap => cap,
                Recorded::License => log_wealth.exp().min(cap),
            };
        }
    }))
}

/// Monte Carlo check that uncapped wealth is a supermartingale under `null_dist`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupermartingaleReport {
    pub fee: f64,
    pub summary: ReplicateSummary,
}

impl SupermartingaleReport {
    pub fn mean_final_wealth(&self) -> f64 {
        self.summary.final_mean()
    }

    pub fn standard_error(&self) -> f64 {
        self.summary.final_se()
    }

    /// Mean and SE after `step` observations (1-based).
    pub fn at(&self, step: usize) -> Option<(f64, f64)> {
        let i = step.checked_sub(1)?;
        Some((*self.summary.means.get(i)?, self.summary.std_errors[i]))
    }

    /// Mean wealth stays within `C + 3·SE` at each listed checkpoint.
    pub fn is_obedient_at(&self, checkpoints: &[usize]) -> bool {
        checkpoints
            .iter()
            .filter_map(|&c| self.at(c))
            .all(|(mean, se)| mean <= self.fee + 3.0 * se)
    }
}

/// Tolerance on the null drift precondition.
const DRIFT_TOLERANCE: f64 = 1e-12;

pub fn verify_supermartingale(
    null_dist: &Categorical,
    b: &BettingScore,
    cfg: &KellyConfig,
    params: &MechanismParams,
    runs: usize,
    n: usize,
    seed: u64,
) -> Result<SupermartingaleReport> {
    let drift = b.drift(null_dist)?;
    if drift > DRIFT_TOLERANCE {
        return Err(Error::Precondition(format!("null drift E[b] = {drift} is positive")));
    }
    let summary = replicate_betting(null_dist, b, cfg, params, runs, n, seed, Recorded::Wealth)?;
    Ok(SupermartingaleReport { fee: params.fee(), summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin(p: f64) -> (Categorical, BettingScore) {
        let space = EvidenceSpace::new(["win", "loss"]).unwrap();
        let d = Categorical::new(Arc::clone(&space), vec![p, 1.0 - p]).unwrap();
        let b = BettingScore::new(space, vec![1.0, -1.0], 0.0).unwrap();
        (d, b)
    }

    fn params() -> MechanismParams {
        MechanismParams::new(15.0, 250.0).unwrap()
    }

    #[test]
    fn step_examples() {
        let (_, b) = coin(0.5);
        let mut w = WealthProcess::new(params());
        w.step(&b, 0.0, 1).unwrap();
        assert_eq!(w.wealth(), 15.0);
        let half = BettingScore::new(Arc::clone(b.space()), vec![0.5, -0.5], 0.0).unwrap();
        w.step(&half, 1.0, 0).unwrap();
        assert!((w.wealth() - 22.5).abs() < 1e-12);
        assert!(w.step(&b, 1.0, 0).is_err());
        assert!(w.step(&b, -0.1, 0).is_err());
        assert_eq!(w.steps(), 2);
    }

    #[test]
    fn license_is_capped() {
        let (_, b) = coin(0.5);
        let mut w = WealthProcess::new(params());
        for _ in 0..10 {
            w.step(&b, 0.9, 0).unwrap();
        }
        assert!(w.wealth() > 250.0);
        assert_eq!(w.license_value(), 250.0);
    }

    #[test]
    fn kelly_even_money() {
        let cfg = KellyConfig::default();
        for p in [0.6, 0.75, 0.9] {
            let (d, b) = coin(p);
            let l = kelly_optimal_bet(&d, &b, &cfg).unwrap();
            assert!((l - (2.0 * p - 1.0)).abs() < 1e-9, "{p}: {l}");
        }
        let (d, b) = coin(0.5);
        assert_eq!(kelly_optimal_bet(&d, &b, &cfg).unwrap(), 0.0);
        let (d, b) = coin(0.3);
        assert_eq!(kelly_optimal_bet(&d, &b, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn kelly_degenerate_win_takes_ceiling() {
        let space = EvidenceSpace::indexed(2).unwrap();
        let b = BettingScore::new(Arc::clone(&space), vec![0.4, 0.4], 0.0).unwrap();
        let cfg = KellyConfig::default();
        let d = Categorical::uniform(space);
        assert_eq!(kelly_optimal_bet(&d, &b, &cfg).unwrap(), cfg.ceiling(&b));
    }

    #[test]
    fn kelly_grid_agrees_with_newton() {
        let space = EvidenceSpace::indexed(4).unwrap();
        let d = Categorical::new(Arc::clone(&space), vec![0.45, 0.45, 0.05, 0.05]).unwrap();
        let b = BettingScore::new(space, vec![0.6, -0.4, -0.4, 0.6], 0.6).unwrap();
        let newton = kelly_optimal_bet(&d, &b, &KellyConfig::default()).unwrap();
        let grid_cfg = KellyConfig { solver: KellySolver::Grid { points: 100_001 }, ..Default::default() };
        let grid = kelly_optimal_bet(&d, &b, &grid_cfg).unwrap();
        assert!((newton - grid).abs() < 1e-4);
        assert!((newton - 5.0 / 12.0).abs() < 1e-9);
    }

    #[test]
    fn adaptive_examples() {
        let (_, b) = coin(0.5);
        let cfg = KellyConfig::default();
        assert_eq!(adaptive_bet(&[], &b, &cfg).unwrap(), 0.0);
        let l = adaptive_bet(&[0; 20], &b, &cfg).unwrap();
        assert!((l - (2.0 * 21.0 / 22.0 - 1.0)).abs() < 1e-9);
        assert!(l < cfg.ceiling(&b));
        assert!(adaptive_bet(&[2], &b, &cfg).is_err());
    }

    #[test]
    fn adaptive_is_consistent() {
        let (d, b) = coin(0.7);
        let cfg = KellyConfig::default();
        let history = SampleStream::new(d.clone(), 3).sample(10_000);
        let l = adaptive_bet(&history, &b, &cfg).unwrap();
        assert!((l - kelly_optimal_bet(&d, &b, &cfg).unwrap()).abs() < 0.02);
    }

    #[test]
    fn zero_bets_stay_flat() {
        let (d, b) = coin(0.9);
        let cfg = KellyConfig { policy: BetPolicy::Constant(0.0), ..Default::default() };
        let mut s = SampleStream::new(d, 1);
        let t = run_sequential_license(&mut s, &b, &cfg, &params(), 50).unwrap();
        assert!(t.license_values().iter().all(|&v| v == 15.0));
        assert!(t.to_csv().starts_with("step,lambda,outcome,wealth,license_value\n"));
        assert_eq!(t.to_csv().lines().count(), 51);
    }

    #[test]
    fn compliant_run_reaches_cap() {
        let (d, b) = coin(0.75);
        let mut s = SampleStream::new(d, 5);
        let t = run_sequential_license(&mut s, &b, &KellyConfig::default(), &params(), 400).unwrap();
        assert_eq!(t.final_license(), Some(250.0));
    }

    #[test]
    fn supermartingale_zero_bets_exact() {
        let (d, b) = coin(0.5);
        let cfg = KellyConfig { policy: BetPolicy::Constant(0.0), ..Default::default() };
        let r = verify_supermartingale(&d, &b, &cfg, &params(), 100, 20, 0).unwrap();
        assert_eq!(r.mean_final_wealth(), 15.0);
        assert_eq!(r.standard_error(), 0.0);
    }

    #[test]
    fn supermartingale_rejects_positive_drift() {
        let (d, b) = coin(0.6);
        assert!(verify_supermartingale(&d, &b, &KellyConfig::default(), &params(), 10, 10, 0).is_err());
    }

    #[test]
    fn replicates_are_deterministic() {
        let (d, b) = coin(0.55);
        let cfg = KellyConfig::default();
        let a = replicate_betting(&d, &b, &cfg, &params(), 200, 30, 9, Recorded::License).unwrap();
        let c = replicate_betting(&d, &b, &cfg, &params(), 200, 30, 9, Recorded::License).unwrap();
        assert_eq!(a, c);
    }
}
