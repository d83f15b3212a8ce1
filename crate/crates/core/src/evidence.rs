//! Finite evidence spaces and categorical distributions over them.
//!
//! Every expectation, projection and linear program in the crate runs over a
//! finite outcome set, so a distribution is just a probability vector tied to
//! the labelled space it lives on.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a probability vector.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// An ordered, labelled, finite outcome set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EvidenceSpace {
    labels: Vec<String>,
}

impl EvidenceSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Arc<Self>> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidSpace("an evidence space needs at least one outcome".into()));
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(Error::InvalidSpace(format!("duplicate outcome label {label:?}")));
            }
        }
        Ok(Arc::new(Self { labels }))
    }

    /// A space labelled `z0, z1, ...`.
    pub fn indexed(size: usize) -> Result<Arc<Self>> {
        Self::new((0..size).map(|i| format!("z{i}")))
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Two spaces are interchangeable when they carry the same labels in the same order.
pub(crate) fn same_space(a: &Arc<EvidenceSpace>, b: &Arc<EvidenceSpace>) -> bool {
    Arc::ptr_eq(a, b) || a.labels == b.labels
}

pub(crate) fn check_space(a: &Arc<EvidenceSpace>, b: &Arc<EvidenceSpace>) -> Result<()> {
    if same_space(a, b) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch { expected: a.size(), found: b.size() })
    }
}

pub(crate) fn check_len(space: &EvidenceSpace, len: usize) -> Result<()> {
    if space.size() == len {
        Ok(())
    } else {
        Err(Error::SpaceMismatch { expected: space.size(), found: len })
    }
}

/// A probability vector over an [`EvidenceSpace`].
#[derive(Debug, Clone)]
pub struct Categorical {
    space: Arc<EvidenceSpace>,
    probs: Vec<f64>,
}

impl PartialEq for Categorical {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.probs == other.probs
    }
}

impl Categorical {
    /// Validates non-negativity and unit mass (within [`MASS_TOLERANCE`]).
    pub fn new(space: Arc<EvidenceSpace>, probs: Vec<f64>) -> Result<Self> {
        check_len(&space, probs.len())?;
        validate_simplex(&probs).map_err(Error::InvalidDistribution)?;
        Ok(Self { space, probs })
    }

    /// Builds a distribution on a fresh indexed space.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let space = EvidenceSpace::indexed(probs.len())?;
        Self::new(space, probs)
    }

    /// Uniform distribution over `space`.
    pub fn uniform(space: Arc<EvidenceSpace>) -> Self {
        let m = space.size();
        Self { space, probs: vec![1.0 / m as f64; m] }
    }

    /// Point mass on `outcome`.
    pub fn point_mass(space: Arc<EvidenceSpace>, outcome: usize) -> Result<Self> {
        let m = space.size();
        if outcome >= m {
            return Err(Error::OutcomeOutOfRange { outcome, size: m });
        }
        let mut probs = vec![0.0; m];
        probs[outcome] = 1.0;
        Ok(Self { space, probs })
    }

    /// Accepts any non-negative vector with positive mass and rescales it.
    pub fn normalized(space: Arc<EvidenceSpace>, weights: Vec<f64>) -> Result<Self> {
        check_len(&space, weights.len())?;
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights have zero total mass".into()));
        }
        Ok(Self { space, probs: weights.into_iter().map(|w| w / total).collect() })
    }

    pub fn space(&self) -> &Arc<EvidenceSpace> {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, outcome: usize) -> f64 {
        self.probs[outcome]
    }

    /// `E[payoff]` under this distribution.
    pub fn expectation(&self, payoff: &[f64]) -> Result<f64> {
        check_len(&self.space, payoff.len())?;
        Ok(dot(&self.probs, payoff))
    }

    /// Largest coordinate-wise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Categorical) -> Result<f64> {
        check_space(&self.space, &other.space)?;
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Re-labels the distribution onto an equal-sized space.
    pub fn with_space(self, space: Arc<EvidenceSpace>) -> Result<Self> {
        check_len(&space, self.probs.len())?;
        Ok(Self { space, probs: self.probs })
    }
}

impl fmt::Display for Categorical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, p) in self.probs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p:.6}")?;
        }
        write!(f, "]")
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn validate_simplex(values: &[f64]) -> std::result::Result<(), String> {
    if values.is_empty() {
        return Err("empty vector".into());
    }
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(format!("entry {i} is {v}, expected a finite non-negative number"));
    }
    let total: f64 = values.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(format!("entries sum to {total}, expected 1"));
    }
    Ok(())
}

/// `Σ weights[i]·dists[i]`.
pub fn mixture(dists: &[Categorical], weights: &[f64]) -> Result<Categorical> {
    let first = dists
        .first()
        .ok_or_else(|| Error::InvalidWeights("mixture of zero distributions".into()))?;
    if dists.len() != weights.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} distributions",
            weights.len(),
            dists.len()
        )));
    }
    validate_simplex(weights).map_err(Error::InvalidWeights)?;
    let mut probs = vec![0.0; first.len()];
    for (dist, &w) in dists.iter().zip(weights) {
        check_space(&first.space, &dist.space)?;
        for (acc, p) in probs.iter_mut().zip(&dist.probs) {
            *acc += w * p;
        }
    }
    Ok(Categorical { space: Arc::clone(&first.space), probs })
}

/// A divergence value; infinite divergences are kept symbolic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Finite(f64),
    Infinite,
}

impl Divergence {
    pub fn is_finite(self) -> bool {
        matches!(self, Divergence::Finite(_))
    }

    /// The numeric value, mapping the infinite sentinel to `f64::INFINITY`.
    pub fn value(self) -> f64 {
        match self {
            Divergence::Finite(v) => v,
            Divergence::Infinite => f64::INFINITY,
        }
    }
}

/// `KL(q ‖ p)` in nats, with `0·ln(0/·) = 0`.
pub fn kl_divergence(q: &Categorical, p: &Categorical) -> Result<Divergence> {
    check_space(&q.space, &p.space)?;
    let mut total = 0.0;
    for (&qz, &pz) in q.probs.iter().zip(&p.probs) {
        if qz == 0.0 {
            continue;
        }
        if pz == 0.0 {
            return Ok(Divergence::Infinite);
        }
        total += qz * (qz / pz).ln();
    }
    Ok(Divergence::Finite(total))
}

/// Normalized outcome counts.
pub fn empirical_distribution(samples: &[usize], space: Arc<EvidenceSpace>) -> Result<Categorical> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let counts = outcome_counts(samples, space.size())?;
    let n = samples.len() as f64;
    let probs = counts.into_iter().map(|c| c as f64 / n).collect();
    Ok(Categorical { space, probs })
}

pub(crate) fn outcome_counts(samples: &[usize], size: usize) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; size];
    for &z in samples {
        if z >= size {
            return Err(Error::OutcomeOutOfRange { outcome: z, size });
        }
        counts[z] += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simplex_vertices() -> Vec<Categorical> {
        let space = EvidenceSpace::indexed(3).unwrap();
        [[0.35, 0.35, 0.3], [0.35, 0.3, 0.35], [0.3, 0.35, 0.35]]
            .iter()
            .map(|p| Categorical::new(Arc::clone(&space), p.to_vec()).unwrap())
            .collect()
    }

    #[test]
    fn uniform_mixture_of_simplex_vertices() {
        let third = 1.0 / 3.0;
        let mix = mixture(&simplex_vertices(), &[third, third, third]).unwrap();
        for p in mix.probs() {
            assert!((p - third).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_identity_and_interpolation() {
        let p = simplex_vertices().remove(0);
        assert_eq!(mixture(std::slice::from_ref(&p), &[1.0]).unwrap().probs(), p.probs());

        let space = EvidenceSpace::indexed(2).unwrap();
        let a = Categorical::point_mass(Arc::clone(&space), 0).unwrap();
        let b = Categorical::point_mass(space, 1).unwrap();
        let mix = mixture(&[a, b], &[0.25, 0.75]).unwrap();
        assert_eq!(mix.probs(), &[0.25, 0.75]);
    }

    #[test]
    fn mixture_rejects_bad_inputs() {
        let verts = simplex_vertices();
        assert!(matches!(mixture(&verts, &[0.5, 0.5, 0.5]), Err(Error::InvalidWeights(_))));
        assert!(matches!(mixture(&verts, &[0.5, 0.5]), Err(Error::InvalidWeights(_))));
        let other = Categorical::from_probs(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            mixture(&[verts[0].clone(), other], &[0.5, 0.5]),
            Err(Error::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn kl_examples() {
        let p = Categorical::from_probs(vec![0.5, 0.5]).unwrap();
        let space = Arc::clone(p.space());
        assert_eq!(kl_divergence(&p, &p).unwrap(), Divergence::Finite(0.0));

        let point = Categorical::new(Arc::clone(&space), vec![1.0, 0.0]).unwrap();
        let kl = kl_divergence(&point, &p).unwrap().value();
        assert!((kl - std::f64::consts::LN_2).abs() < 1e-15);

        let q = Categorical::new(Arc::clone(&space), vec![0.9, 0.1]).unwrap();
        let expected = 0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln();
        assert!((kl_divergence(&q, &p).unwrap().value() - expected).abs() < 1e-15);

        assert_eq!(kl_divergence(&p, &point).unwrap(), Divergence::Infinite);
    }

    #[test]
    fn empirical_examples() {
        let two = EvidenceSpace::indexed(2).unwrap();
        let three = EvidenceSpace::indexed(3).unwrap();
        assert_eq!(empirical_distribution(&[0, 0, 1, 1], two).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(
            empirical_distribution(&[2, 2, 2], Arc::clone(&three)).unwrap().probs(),
            &[0.0, 0.0, 1.0]
        );
        assert_eq!(empirical_distribution(&[], Arc::clone(&three)), Err(Error::EmptySample));
        assert!(matches!(
            empirical_distribution(&[3], three),
            Err(Error::OutcomeOutOfRange { outcome: 3, size: 3 })
        ));
    }

    #[test]
    fn space_validation() {
        assert!(EvidenceSpace::new(Vec::<String>::new()).is_err());
        assert!(EvidenceSpace::new(["a", "b", "a"]).is_err());
        let space = EvidenceSpace::new(["a", "b"]).unwrap();
        assert_eq!(space.index_of("b"), Some(1));
        assert!(Categorical::new(space, vec![0.6, 0.6]).is_err());
    }
}
