//! Credal sets: closed convex sets of categorical distributions, stored as the
//! convex hull of a finite vertex list.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::{check_len, check_space, dot, mixture, Categorical, EvidenceSpace};
use crate::license::MechanismParams;
use crate::lp::{LinearProgram, Relation, Sense};
use crate::simplex;

/// Default ∞-norm tolerance for hull membership.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-9;

/// The convex hull of a non-empty list of distributions on one space.
#[derive(Debug, Clone, PartialEq)]
pub struct CredalSet {
    space: Arc<EvidenceSpace>,
    vertices: Vec<Categorical>,
}

impl CredalSet {
    pub fn new(vertices: Vec<Categorical>) -> Result<Self> {
        let first = vertices.first().ok_or(Error::EmptyCredalSet)?;
        let space = Arc::clone(first.space());
        for v in &vertices {
            check_space(&space, v.space())?;
        }
        Ok(Self { space, vertices })
    }

    pub fn singleton(p: Categorical) -> Self {
        Self { space: Arc::clone(p.space()), vertices: vec![p] }
    }

    pub fn space(&self) -> &Arc<EvidenceSpace> {
        &self.space
    }

    pub fn vertices(&self) -> &[Categorical] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// True when every vertex coincides (within `1e-15`) with the first.
    pub fn is_degenerate(&self) -> bool {
        let first = &self.vertices[0];
        self.vertices.iter().all(|v| v.max_abs_diff(first).map(|d| d <= 1e-15).unwrap_or(false))
    }

    /// The member `Σ weights[i]·vertex_i`.
    pub fn point(&self, weights: &[f64]) -> Result<Categorical> {
        mixture(&self.vertices, weights)
    }

    /// `E_{vertex_i}[payoff]` for every vertex.
    pub fn vertex_expectations(&self, payoff: &[f64]) -> Result<Vec<f64>> {
        check_len(&self.space, payoff.len())?;
        Ok(self.vertices.iter().map(|v| dot(v.probs(), payoff)).collect())
    }

    /// Upper prevision `max_{P ∈ set} E_P[payoff]`, attained at a vertex.
    pub fn upper_expectation(&self, payoff: &[f64]) -> Result<f64> {
        Ok(self.vertex_expectations(payoff)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Lower prevision, `-upper(-payoff)`.
    pub fn lower_expectation(&self, payoff: &[f64]) -> Result<f64> {
        let negated: Vec<f64> = payoff.iter().map(|x| -x).collect();
        Ok(-self.upper_expectation(&negated)?)
    }

    /// Hull membership in ∞-norm, decided by the LP
    /// `min t  s.t. |Σ w_i·vertex_i − q|_∞ ≤ t, w ∈ simplex`.
    pub fn membership(&self, q: &Categorical, tol: f64) -> Result<Membership> {
        check_space(&self.space, q.space())?;
        let k = self.vertices.len();
        let m = self.space.size();
        // Variables: w_0..w_{k-1}, t.
        let mut objective = vec![0.0; k + 1];
        objective[k] = 1.0;
        let mut lp = LinearProgram::new(Sense::Minimize, objective);
        for z in 0..m {
            let mut upper: Vec<f64> = self.vertices.iter().map(|v| v.prob(z)).collect();
            let mut lower = upper.clone();
            upper.push(-1.0);
            lower.push(1.0);
            lp.add_constraint(upper, Relation::LessEq, q.prob(z));
            lp.add_constraint(lower, Relation::GreaterEq, q.prob(z));
        }
        let mut sum = vec![1.0; k + 1];
        sum[k] = 0.0;
        lp.add_constraint(sum, Relation::Equal, 1.0);
        let sol = lp.solve()?;
        let weights = simplex::project(&sol.x[..k]);
        let distance = self.point(&weights)?.max_abs_diff(q)?;
        Ok(Membership { inside: distance <= tol, distance, weights })
    }

    pub fn contains(&self, q: &Categorical) -> Result<bool> {
        Ok(self.membership(q, MEMBERSHIP_TOLERANCE)?.inside)
    }

    /// Drops vertices lying in the hull of the remaining ones.
    pub fn pruned(&self) -> Result<Self> {
        let mut kept: Vec<Categorical> = Vec::new();
        // Deduplicate first so the LP sees each point once.
        for v in &self.vertices {
            if !kept.iter().any(|u| u.max_abs_diff(v).map(|d| d <= 1e-15).unwrap_or(false)) {
                kept.push(v.clone());
            }
        }
        let mut i = 0;
        while i < kept.len() && kept.len() > 1 {
            let others: Vec<Categorical> =
                kept.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v.clone()).collect();
            let rest = CredalSet::new(others)?;
            if rest.membership(&kept[i], 1e-12)?.inside {
                kept.remove(i);
            } else {
                i += 1;
            }
        }
        CredalSet::new(kept)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&CredalSetJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: CredalSetJson = crate::error::from_json_str(text)?;
        raw.try_into()
    }
}

/// Result of a hull membership query.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub inside: bool,
    /// ∞-norm distance from the query to the closest hull point found.
    pub distance: f64,
    /// Mixture weights of that closest point.
    pub weights: Vec<f64>,
}

/// On-disk form: `{"space": [labels], "vertices": [[p, ...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CredalSetJson {
    pub space: Vec<String>,
    pub vertices: Vec<Vec<f64>>,
}

impl From<&CredalSet> for CredalSetJson {
    fn from(set: &CredalSet) -> Self {
        Self {
            space: set.space.labels().to_vec(),
            vertices: set.vertices.iter().map(|v| v.probs().to_vec()).collect(),
        }
    }
}

impl TryFrom<CredalSetJson> for CredalSet {
    type Error = Error;

    fn try_from(raw: CredalSetJson) -> Result<Self> {
        let space = EvidenceSpace::new(raw.space)?;
        let vertices = raw
            .vertices
            .into_iter()
            .enumerate()
            .map(|(i, probs)| {
                Categorical::new(Arc::clone(&space), probs)
                    .map_err(|e| Error::InvalidDistribution(format!("vertices[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        CredalSet::new(vertices)
    }
}

/// The payoff a provider of a given type extracts from a mechanism that is
/// allowed to depend on the type (a regulator computing licenses from reported
/// evidence, for example).
pub trait TypeDependentMechanism {
    fn payoff(&self, q: &Categorical) -> Result<f64>;
}

impl<F> TypeDependentMechanism for F
where
    F: Fn(&Categorical) -> Result<f64>,
{
    fn payoff(&self, q: &Categorical) -> Result<f64> {
        self(q)
    }
}

/// Mixture-weight search settings shared by the gaming witness and the
/// strategic best response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureSearch {
    /// Grid spacing on the weight simplex.
    pub resolution: f64,
    /// Run one Nelder–Mead pass from the best grid point.
    pub refine: bool,
    /// Above this many grid points, random simplex points are used instead.
    pub max_grid_points: usize,
    pub seed: u64,
}

impl Default for MixtureSearch {
    fn default() -> Self {
        Self { resolution: 0.02, refine: true, max_grid_points: 200_000, seed: 0 }
    }
}

/// Best mixture found against a mechanism.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureResponse {
    pub weights: Vec<f64>,
    pub mixture: Categorical,
    pub payoff: f64,
}

/// Searches mixture weights over `points` maximising the mechanism payoff.
pub fn best_mixture_response(
    points: &[Categorical],
    mechanism: &dyn TypeDependentMechanism,
    search: &MixtureSearch,
) -> Result<MixtureResponse> {
    let k = points.len();
    if k == 0 {
        return Err(Error::Precondition("mixture search needs at least one point".into()));
    }
    let payoff_at = |w: &[f64]| -> Result<f64> { mechanism.payoff(&mixture(points, w)?) };

    let steps = ((1.0 / search.resolution).round() as usize).max(1);
    let mut best_w = vec![0.0; k];
    best_w[0] = 1.0;
    let mut best = payoff_at(&best_w)?;
    let mut failure = None;
    let mut consider = |w: &[f64]| match payoff_at(w) {
        Ok(v) if v > best => {
            best = v;
            best_w.copy_from_slice(w);
        }
        Ok(_) => {}
        Err(e) => failure = Some(e),
    };
    if simplex::grid_size(k, steps) <= search.max_grid_points as u128 {
        simplex::for_each_grid_point(k, steps, &mut consider);
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
        for _ in 0..search.max_grid_points {
            let w = simplex::random_point(k, &mut rng);
            consider(&w);
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }

    if search.refine && k > 1 {
        let objective = |w: &[f64]| payoff_at(w).map(|v| -v).unwrap_or(f64::INFINITY);
        let (w, neg) = simplex::nelder_mead(&objective, &best_w, search.resolution, 400 * k);
        if -neg > best {
            best = -neg;
            best_w = w;
        }
    }
    Ok(MixtureResponse { mixture: mixture(points, &best_w)?, weights: best_w, payoff: best })
}

/// A mixture of individually excluded points that earns more than the fee.
#[derive(Debug, Clone, PartialEq)]
pub struct GamingWitness {
    pub weights: Vec<f64>,
    pub payoff: f64,
    /// `payoff − C`, strictly positive.
    pub gap: f64,
}

/// Looks for a mixture of `points` whose payoff against `naive` exceeds `C`.
///
/// `naive` is expected to exclude each point on its own; the witness shows
/// that its acceptance region is not closed under mixing.
pub fn gaming_witness(
    points: &[Categorical],
    params: &MechanismParams,
    naive: &dyn TypeDependentMechanism,
    search: &MixtureSearch,
) -> Result<Option<GamingWitness>> {
    if points.len() < 2 {
        return Ok(None);
    }
    let response = best_mixture_response(points, naive, search)?;
    let gap = response.payoff - params.fee();
    Ok((gap > 0.0).then_some(GamingWitness { weights: response.weights, payoff: response.payoff, gap }))
}

/// Which side of the demographic-parity threshold a grid approximation keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityRegion {
    /// `|P(Y=1|A=0) − P(Y=1|A=1)| < τ` (closed at `τ − ε`).
    Within,
    /// `P(Y=1|A=1) − P(Y=1|A=0) ≥ τ`: group 1 favoured by at least `τ`.
    Exceeding,
}

/// Grid description of a demographic-parity credal set over the joint
/// `Y × A` space ordered `(θ00, θ01, θ10, θ11)` with `θ_ij = P(Y=i, A=j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCredalSpec {
    pub space: Arc<EvidenceSpace>,
    pub tau: f64,
    pub resolution: usize,
    pub region: ParityRegion,
}

/// Slack used to close the strict inequality of [`ParityRegion::Within`].
pub const PARITY_EPSILON: f64 = 1e-12;

/// The four-outcome joint space `Y × A`.
pub fn parity_space() -> Arc<EvidenceSpace> {
    EvidenceSpace::new(["y0_a0", "y0_a1", "y1_a0", "y1_a1"]).expect("static labels are valid")
}

/// `P(Y=1|A=1) − P(Y=1|A=0)` for a joint `θ`, `None` when a group has no mass.
pub fn parity_gap(theta: &[f64]) -> Option<f64> {
    let (t00, t01, t10, t11) = (theta[0], theta[1], theta[2], theta[3]);
    let a0 = t10 + t00;
    let a1 = t11 + t01;
    if a0 <= 0.0 || a1 <= 0.0 {
        return None;
    }
    Some(t11 / a1 - t10 / a0)
}

impl ConstraintCredalSpec {
    pub fn new(tau: f64, resolution: usize, region: ParityRegion) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidParams(format!("parity threshold must lie in (0, 1), got {tau}")));
        }
        if resolution < 2 {
            return Err(Error::InvalidParams(format!("grid resolution must be at least 2, got {resolution}")));
        }
        Ok(Self { space: parity_space(), tau, resolution, region })
    }

    pub fn admits(&self, theta: &[f64]) -> bool {
        match parity_gap(theta) {
            None => false,
            Some(gap) => match self.region {
                ParityRegion::Within => gap.abs() <= self.tau - PARITY_EPSILON,
                ParityRegion::Exceeding => gap >= self.tau - PARITY_EPSILON,
            },
        }
    }
}

/// Grid inner approximation of a parity-constrained credal set; every grid
/// point satisfying the predicate becomes a vertex. Points where a group has
/// zero mass have no conditional rate and are skipped.
pub fn approximate_constraint_set(spec: &ConstraintCredalSpec) -> Result<CredalSet> {
    if spec.space.size() != 4 {
        return Err(Error::SpaceMismatch { expected: 4, found: spec.space.size() });
    }
    let mut vertices = Vec::new();
    simplex::for_each_grid_point(4, spec.resolution, |theta| {
        if spec.admits(theta) {
            vertices.push(theta.to_vec());
        }
    });
    if vertices.is_empty() {
        return Err(Error::EmptyFeasibleSet { resolution: spec.resolution });
    }
    let vertices = vertices
        .into_iter()
        .map(|theta| Categorical::normalized(Arc::clone(&spec.space), theta))
        .collect::<Result<Vec<_>>>()?;
    CredalSet::new(vertices)
}
