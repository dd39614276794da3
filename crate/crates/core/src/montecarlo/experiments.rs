use serde::Serialize;

use super::replicate;
use crate::error::{param, Result};
use crate::graph::{sample_gnp, sample_graphon, GraphonKernel};
use crate::homogeneity::{confidence_set_from_counts, ConfidenceSet, GraphCounts, SearchDomain};
use crate::permstat::{standardized_descent_inversion, Permutation};
use crate::report::sig17;
use crate::rng::StreamRng;

/// A binomial frequency with a ±3σ band, 3·√(f(1−f)/reps).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyEstimate {
    pub hits: usize,
    pub reps: usize,
    #[serde(serialize_with = "sig17")]
    pub frequency: f64,
    #[serde(serialize_with = "sig17")]
    pub ci_half_width: f64,
}

impl FrequencyEstimate {
    pub fn new(hits: usize, reps: usize) -> Result<Self> {
        if reps == 0 || hits > reps {
            return param(format!("{hits} hits out of {reps} replications"));
        }
        let f = hits as f64 / reps as f64;
        Ok(Self { hits, reps, frequency: f, ci_half_width: 3.0 * (f * (1.0 - f) / reps as f64).sqrt() })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.frequency - self.ci_half_width, self.frequency + self.ci_half_width)
    }
}

/// (W₁, W₂) of one G(n, p) draw, standardised at the true p.
pub fn graph_trial(n: usize, p: f64, rng: &mut StreamRng) -> Result<[f64; 2]> {
    let st = GraphCounts::of(&sample_gnp(n, p, rng)?)?.stats(p)?;
    Ok([st.w1, st.w2])
}

/// Standardised (descents, inversions) of one uniform permutation.
pub fn permutation_trial(n: usize, rng: &mut StreamRng) -> Result<[f64; 2]> {
    let (a, b) = standardized_descent_inversion(&Permutation::random(n, rng))?;
    Ok([a, b])
}

/// Draws G(n, p) and reports (W at p, p ∈ C₁₋α).
pub fn coverage_trial(
    n: usize,
    p: f64,
    alpha: f64,
    domain: SearchDomain,
    rng: &mut StreamRng,
) -> Result<([f64; 2], bool)> {
    if !(domain.p_lo <= p && p <= domain.p_hi) {
        return param(format!("true p = {p} lies outside the search domain [{}, {}]", domain.p_lo, domain.p_hi));
    }
    let counts = GraphCounts::of(&sample_gnp(n, p, rng)?)?;
    let st = counts.stats(p)?;
    let set = confidence_set_from_counts(&counts, alpha, domain)?;
    Ok(([st.w1, st.w2], set.contains(p)))
}

/// Confidence set of one G(n, κ) draw.
pub fn power_trial(
    n: usize,
    kernel: &GraphonKernel,
    alpha: f64,
    domain: SearchDomain,
    rng: &mut StreamRng,
) -> Result<ConfidenceSet> {
    confidence_set_from_counts(&GraphCounts::of(&sample_graphon(n, kernel, rng)?)?, alpha, domain)
}

/// Frequency of p ∉ C₁₋α(G(n, p)) over the default search domain.
pub fn coverage_experiment(n: usize, p: f64, alpha: f64, reps: usize, seed: u64) -> Result<FrequencyEstimate> {
    let domain = SearchDomain::default();
    let covered = replicate(reps, seed, None, |_, rng| Ok(coverage_trial(n, p, alpha, domain, rng)?.1))?;
    FrequencyEstimate::new(covered.iter().filter(|&&c| !c).count(), reps)
}

/// Frequency of an empty confidence set for G(n, κ).
pub fn power_experiment(
    n: usize,
    kernel: &GraphonKernel,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<FrequencyEstimate> {
    let domain = SearchDomain::default();
    let empty = replicate(reps, seed, None, |_, rng| Ok(power_trial(n, kernel, alpha, domain, rng)?.is_empty()))?;
    FrequencyEstimate::new(empty.iter().filter(|&&e| e).count(), reps)
}
