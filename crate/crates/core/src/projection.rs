//! Optimisation over credal sets for the risk-averse provider.
//!
//! Two problems live here:
//!
//! * the κ-projection `argmin_{P ∈ co(V)} κ_Q(P)`, solved by multi-start
//!   projected gradient descent on the mixture weights (κ is not convex in the
//!   weights, so several starts are compared);
//! * the log-optimal obedient license `argmax E_Q[ln π]` subject to
//!   `E_{V_j}[π] ≤ C` and `0 ≤ π ≤ R`, solved through its convex dual over
//!   unnormalised vertex multipliers `μ ≥ 0`. Its optimum has the truncated
//!   likelihood-ratio form `π = min{C·Q/(s·P_ref), R}` with `s = Σμ` and
//!   `P_ref = Σ (μ_j/s)·V_j`; whenever the cap is slack at the optimum `s = 1`
//!   and `P_ref` is the κ-projection.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::credal::CredalSet;
use crate::error::Result;
use crate::evidence::{check_space, Categorical};
use crate::license::MechanismParams;
use crate::simplex;

/// Multi-start projected-gradient settings for the κ-projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConfig {
    pub starts: usize,
    pub max_iterations: usize,
    /// Stop when the gradient-mapping norm falls below this.
    pub gradient_tolerance: f64,
    pub seed: u64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self { starts: 8, max_iterations: 500, gradient_tolerance: 1e-8, seed: 0x5eed }
    }
}

/// Result of the κ-projection.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaProjection {
    pub weights: Vec<f64>,
    pub point: Categorical,
    pub kappa: f64,
    /// True when the winning start met the gradient tolerance.
    pub converged: bool,
    pub iterations: usize,
}

/// Vertex probabilities laid out per vertex, plus `Q` and `ln(R/C)`.
struct KappaObjective<'a> {
    q: &'a [f64],
    vertices: Vec<&'a [f64]>,
    log_cap: f64,
}

impl<'a> KappaObjective<'a> {
    fn mix(&self, w: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.q.len()];
        for (v, &wi) in self.vertices.iter().zip(w) {
            if wi != 0.0 {
                for (pz, vz) in p.iter_mut().zip(v.iter()) {
                    *pz += wi * vz;
                }
            }
        }
        p
    }

    fn value_at(&self, p: &[f64]) -> f64 {
        capped_log_ratio_sum(self.q, p, self.log_cap)
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.value_at(&self.mix(w))
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let p = self.mix(w);
        // d/dP(z) of the uncapped terms.
        let dp: Vec<f64> = self
            .q
            .iter()
            .zip(&p)
            .map(|(&qz, &pz)| {
                if qz > 0.0 && pz > 0.0 && (qz / pz).ln() < self.log_cap {
                    -qz / pz
                } else {
                    0.0
                }
            })
            .collect();
        self.vertices.iter().map(|v| v.iter().zip(&dp).map(|(a, b)| a * b).sum()).collect()
    }
}

/// `Σ_z Q(z)·min{ln(Q(z)/P(z)), log_cap}` with the zero-mass conventions.
pub(crate) fn capped_log_ratio_sum(q: &[f64], p: &[f64], log_cap: f64) -> f64 {
    q.iter()
        .zip(p)
        .filter(|(&qz, _)| qz > 0.0)
        .map(|(&qz, &pz)| if pz <= 0.0 { qz * log_cap } else { qz * (qz / pz).ln().min(log_cap) })
        .sum()
}

fn projected_gradient(
    objective: &KappaObjective<'_>,
    start: Vec<f64>,
    cfg: &ProjectionConfig,
) -> (Vec<f64>, f64, usize, bool) {
    let mut w = start;
    let mut value = objective.value(&w);
    let mut step = 1.0;
    for iter in 0..cfg.max_iterations {
        let g = objective.gradient(&w);
        let mut accepted = None;
        while step > 1e-30 {
            let trial: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - step * gi).collect();
            let candidate = simplex::project(&trial);
            let diff: Vec<f64> = candidate.iter().zip(&w).map(|(a, b)| a - b).collect();
            let linear: f64 = g.iter().zip(&diff).map(|(a, b)| a * b).sum();
            let sq: f64 = diff.iter().map(|d| d * d).sum();
            let trial_value = objective.value(&candidate);
            if trial_value <= value + linear + sq / (2.0 * step) + 1e-15 {
                accepted = Some((candidate, trial_value, sq.sqrt() / step));
                break;
            }
            step *= 0.5;
        }
        let Some((candidate, trial_value, mapping_norm)) = accepted else {
            return (w, value, iter, true);
        };
        w = candidate;
        value = trial_value;
        if mapping_norm < cfg.gradient_tolerance {
            return (w, value, iter + 1, true);
        }
        step = (step * 2.0).min(1e6);
    }
    (w, value, cfg.max_iterations, false)
}

/// `argmin_{P ∈ set} κ_Q(P)` over mixture weights.
///
/// Starts: the barycentre, the best vertices by κ, and seeded random simplex
/// points. Ties on κ keep the lowest start index.
pub fn kappa_projection(
    q: &Categorical,
    set: &CredalSet,
    params: &MechanismParams,
    cfg: &ProjectionConfig,
) -> Result<KappaProjection> {
    check_space(set.space(), q.space())?;
    let objective = KappaObjective {
        q: q.probs(),
        vertices: set.vertices().iter().map(|v| v.probs()).collect(),
        log_cap: params.log_cap_ratio(),
    };
    let k = set.num_vertices();

    let mut starts: Vec<Vec<f64>> = vec![vec![1.0 / k as f64; k]];
    let total = cfg.starts.max(1);
    let vertex_starts = k.min(total.saturating_sub(1).div_ceil(2).max(1));
    let mut by_value: Vec<(usize, f64)> =
        (0..k).map(|i| (i, objective.value_at(objective.vertices[i]))).collect();
    by_value.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    for &(i, _) in by_value.iter().take(vertex_starts) {
        let mut w = vec![0.0; k];
        w[i] = 1.0;
        starts.push(w);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    while starts.len() < total {
        starts.push(simplex::random_point(k, &mut rng));
    }

    let mut best: Option<(Vec<f64>, f64, usize, bool)> = None;
    for start in starts {
        let run = projected_gradient(&objective, start, cfg);
        if best.as_ref().map_or(true, |b| run.1 < b.1) {
            best = Some(run);
        }
    }
    let (weights, kappa, iterations, converged) = best.expect("at least one start");
    let point = set.point(&weights)?;
    Ok(KappaProjection { weights, point, kappa, converged, iterations })
}

/// Dual solution of the log-optimal obedient license problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LogOptimalDual {
    /// Unnormalised vertex multipliers `μ ≥ 0`.
    pub multipliers: Vec<f64>,
    /// Payout in units of the fee: `π/C`.
    pub scaled_payout: Vec<f64>,
    /// Largest KKT residual at termination.
    pub kkt_residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

const DUAL_MAX_ITERATIONS: usize = 500;
const DUAL_TOLERANCE: f64 = 1e-13;

struct DualProblem<'a> {
    q: &'a [f64],
    vertices: Vec<&'a [f64]>,
    cap: f64,
}

impl DualProblem<'_> {
    fn load(&self, mu: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.q.len()];
        for (v, &m) in self.vertices.iter().zip(mu) {
            if m != 0.0 {
                for (uz, vz) in u.iter_mut().zip(v.iter()) {
                    *uz += m * vz;
                }
            }
        }
        u
    }

    fn payout(&self, u: &[f64]) -> Vec<f64> {
        self.q
            .iter()
            .zip(u)
            .map(|(&qz, &uz)| if qz <= 0.0 { 0.0 } else if qz >= self.cap * uz { self.cap } else { qz / uz })
            .collect()
    }

    /// `g(μ) = Σ_z max_{0≤π≤L} [Q ln π − u π] + Σ μ`.
    fn value(&self, mu: &[f64]) -> f64 {
        let u = self.load(mu);
        let mut total: f64 = mu.iter().sum();
        for (&qz, &uz) in self.q.iter().zip(&u) {
            if qz <= 0.0 {
                continue;
            }
            if qz >= self.cap * uz {
                total += qz * self.cap.ln() - uz * self.cap;
            } else {
                total += qz * (qz / uz).ln() - qz;
            }
        }
        total
    }

    fn gradient(&self, pi: &[f64]) -> Vec<f64> {
        self.vertices.iter().map(|v| 1.0 - v.iter().zip(pi).map(|(a, b)| a * b).sum::<f64>()).collect()
    }

    fn hessian(&self, u: &[f64], free: &[usize]) -> Vec<Vec<f64>> {
        let weights: Vec<f64> = self
            .q
            .iter()
            .zip(u)
            .map(|(&qz, &uz)| if qz > 0.0 && qz < self.cap * uz { qz / (uz * uz) } else { 0.0 })
            .collect();
        free.iter()
            .map(|&i| {
                free.iter()
                    .map(|&j| {
                        self.vertices[i]
                            .iter()
                            .zip(self.vertices[j].iter())
                            .zip(&weights)
                            .map(|((a, b), w)| a * b * w)
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }
}

fn kkt_residual(mu: &[f64], grad: &[f64]) -> f64 {
    mu.iter().zip(grad).map(|(&m, &g)| m.min(g).abs()).fold(0.0, f64::max)
}

/// Solves `H x = b` by Gaussian elimination with partial pivoting; `None` if singular.
fn solve_dense(mut h: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &c| h[a][col].abs().total_cmp(&h[c][col].abs()))?;
        if h[pivot][col].abs() < 1e-300 {
            return None;
        }
        h.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = h[row][col] / h[col][col];
            if f != 0.0 {
                for c in col..n {
                    h[row][c] -= f * h[col][c];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| h[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / h[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Projected-Newton minimisation of the dual `g(μ)` over `μ ≥ 0`.
pub fn log_optimal_dual(
    q: &Categorical,
    set: &CredalSet,
    params: &MechanismParams,
    start: Option<&[f64]>,
) -> Result<LogOptimalDual> {
    check_space(set.space(), q.space())?;
    let problem = DualProblem {
        q: q.probs(),
        vertices: set.vertices().iter().map(|v| v.probs()).collect(),
        cap: params.cap_ratio(),
    };
    let k = set.num_vertices();
    let mut mu: Vec<f64> = match start {
        Some(s) if s.len() == k => s.iter().map(|v| v.max(0.0)).collect(),
        _ => vec![1.0 / k as f64; k],
    };
    let mut value = problem.value(&mu);
    let mut iterations = 0;
    let mut converged = false;
    let mut residual = f64::INFINITY;

    while iterations < DUAL_MAX_ITERATIONS {
        let u = problem.load(&mu);
        let pi = problem.payout(&u);
        let grad = problem.gradient(&pi);
        residual = kkt_residual(&mu, &grad);
        if residual <= DUAL_TOLERANCE {
            converged = true;
            break;
        }
        iterations += 1;

        // Bound-active set: at zero with a non-negative gradient.
        let eps = residual.min(1e-9);
        let free: Vec<usize> = (0..k).filter(|&j| !(mu[j] <= eps && grad[j] > 0.0)).collect();
        let mut direction: Vec<f64> = grad.iter().map(|g| -g).collect();
        if !free.is_empty() {
            let mut h = problem.hessian(&u, &free);
            let trace: f64 = (0..free.len()).map(|i| h[i][i]).sum();
            let ridge = 1e-14 * (1.0 + trace / free.len() as f64);
            for (i, row) in h.iter_mut().enumerate() {
                row[i] += ridge;
            }
            let rhs: Vec<f64> = free.iter().map(|&j| -grad[j]).collect();
            if let Some(step) = solve_dense(h, rhs) {
                let descent: f64 = free.iter().zip(&step).map(|(&j, s)| grad[j] * s).sum();
                if descent < 0.0 {
                    for (&j, s) in free.iter().zip(step) {
                        direction[j] = s;
                    }
                }
            }
        }

        let mut alpha = 1.0;
        let mut moved = false;
        while alpha > 1e-20 {
            let trial: Vec<f64> = mu.iter().zip(&direction).map(|(m, d)| (m + alpha * d).max(0.0)).collect();
            let decrease: f64 = grad.iter().zip(trial.iter().zip(&mu)).map(|(g, (t, m))| g * (t - m)).sum();
            let trial_value = problem.value(&trial);
            if trial_value <= value + 1e-4 * decrease.min(0.0) + 1e-15 * value.abs().max(1.0) {
                moved = trial != mu;
                mu = trial;
                value = trial_value;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }

    let u = problem.load(&mu);
    let scaled_payout = problem.payout(&u);
    if !converged {
        residual = kkt_residual(&mu, &problem.gradient(&scaled_payout));
        converged = residual <= 1e-9;
    }
    Ok(LogOptimalDual { multipliers: mu, scaled_payout, kkt_residual: residual, converged, iterations })
}
