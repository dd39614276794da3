//! Multivariate Stein couplings: triples (W, W′, G) with
//! E[Gᵗ(F(W′) − F(W))] = E[WᵗF(W)] for every admissible F.
//!
//! A [`CouplingModel`] is a sampler with an optional exact enumerator of its
//! joint law and an optional [`Conditioner`]. The conditioner exposes, for
//! one draw of the outer randomness (the whole graph, the whole permutation),
//! the exact average over the inner index draw of the products entering the
//! error bound; see [`bounds`].

mod bounds;
mod graph;
mod local;
mod pairs;
mod size_bias;
mod verify;

pub use bounds::{bound_evaluate, bound_evaluate_cov, bound_terms, bound_terms_exact, BoundTerms};
pub use graph::GraphCoupling;
pub use local::{GraphField, IidCoins, LocalDependenceCoupling, LocalField};
pub use pairs::{
    drift_mc, pair_relations, EqualMarginalCoupling, ExchangeablePairCoupling, FinitePair, FulmanPair, PairModel,
    PairRelations, PairState, SignFlipPair,
};
pub use size_bias::SizeBiasCoupling;
pub use verify::{
    moment_relations, test_family, verify_identity, FunctionResidual, MomentRelations, TestFunction, VerifyMode,
    VerifyReport,
};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{param, Result};
use crate::rng::StreamRng;

/// One draw of (W, W′, G).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSample {
    pub w: Vec<f64>,
    pub w_prime: Vec<f64>,
    pub g: Vec<f64>,
}

impl CouplingSample {
    pub fn new(w: Vec<f64>, w_prime: Vec<f64>, g: Vec<f64>) -> Self {
        debug_assert!(w.len() == w_prime.len() && w.len() == g.len());
        Self { w, w_prime, g }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// D = W′ − W.
    pub fn d(&self) -> Vec<f64> {
        self.w_prime.iter().zip(&self.w).map(|(a, b)| a - b).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.w_prime).chain(&self.g).all(|x| x.is_finite())
    }
}

/// Whether the model is a genuine Stein coupling or only an equal-marginal
/// pair with linear drift, for which just the moment relations are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    Stein,
    EqualMarginalLambda,
}

pub trait CouplingModel: Sync {
    fn dim(&self) -> usize;

    fn kind(&self) -> CouplingKind {
        CouplingKind::Stein
    }

    fn sample(&self, rng: &mut StreamRng) -> CouplingSample;

    /// The full joint law as (probability, sample) atoms, when finite.
    fn enumerate(&self) -> Option<Vec<(f64, CouplingSample)>> {
        None
    }

    fn conditioner(&self) -> Option<&dyn Conditioner> {
        None
    }
}

/// Conditional moments of (G, D) given one outer state F.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMoments {
    pub d: usize,
    /// E^F |D|²
    pub d2: f64,
    /// E^F D_i D_j, row-major d×d
    pub dd: Vec<f64>,
    /// E^F G_i D_j, row-major d×d
    pub gd: Vec<f64>,
    /// E^F G_i D_j D_k, row-major d×d×d
    pub gdd: Vec<f64>,
    /// max |G| over inner outcomes of positive probability
    pub g_max: f64,
    /// max |D| over the same outcomes
    pub d_max: f64,
}

impl ConditionalMoments {
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            d2: 0.0,
            dd: vec![0.0; d * d],
            gd: vec![0.0; d * d],
            gdd: vec![0.0; d * d * d],
            g_max: 0.0,
            d_max: 0.0,
        }
    }

    /// Accumulates one inner outcome with weight `prob`.
    pub fn add(&mut self, prob: f64, g: &[f64], dv: &[f64]) {
        let d = self.d;
        if prob > 0.0 {
            self.g_max = self.g_max.max(norm(g));
            self.d_max = self.d_max.max(norm(dv));
        }
        self.d2 += prob * dv.iter().map(|x| x * x).sum::<f64>();
        for i in 0..d {
            for j in 0..d {
                self.dd[i * d + j] += prob * dv[i] * dv[j];
                let gdij = prob * g[i] * dv[j];
                self.gd[i * d + j] += gdij;
                for k in 0..d {
                    self.gdd[(i * d + j) * d + k] += gdij * dv[k];
                }
            }
        }
    }

    /// Moments of an explicit inner distribution.
    pub fn from_inner(d: usize, inner: &[(f64, CouplingSample)]) -> Self {
        let mut m = Self::zeros(d);
        for (prob, s) in inner {
            m.add(*prob, &s.g, &s.d());
        }
        m
    }
}

/// Draws outer states and returns exact inner averages.
pub trait Conditioner: Sync {
    fn dim(&self) -> usize;

    fn draw(&self, rng: &mut StreamRng) -> ConditionalMoments;

    /// All outer states with their probabilities, when finite.
    fn states(&self) -> Option<Vec<(f64, ConditionalMoments)>> {
        None
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn mat_vec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (0..a.nrows()).map(|r| (0..a.ncols()).map(|c| a[(r, c)] * x[c]).sum()).collect()
}

/// (AW, AW′, AG) for an m×d matrix A.
pub struct LinearImage<'a> {
    inner: &'a dyn CouplingModel,
    a: DMatrix<f64>,
}

impl<'a> LinearImage<'a> {
    pub fn new(inner: &'a dyn CouplingModel, a: DMatrix<f64>) -> Result<Self> {
        if a.ncols() != inner.dim() || a.nrows() == 0 {
            return param(format!("matrix is {}x{}, coupling has dimension {}", a.nrows(), a.ncols(), inner.dim()));
        }
        Ok(Self { inner, a })
    }

    fn map(&self, s: &CouplingSample) -> CouplingSample {
        CouplingSample::new(mat_vec(&self.a, &s.w), mat_vec(&self.a, &s.w_prime), mat_vec(&self.a, &s.g))
    }
}

impl CouplingModel for LinearImage<'_> {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn kind(&self) -> CouplingKind {
        self.inner.kind()
    }

    fn sample(&self, rng: &mut StreamRng) -> CouplingSample {
        self.map(&self.inner.sample(rng))
    }

    fn enumerate(&self) -> Option<Vec<(f64, CouplingSample)>> {
        Some(self.inner.enumerate()?.iter().map(|(p, s)| (*p, self.map(s))).collect())
    }
}

/// G multiplied by a constant. With c ≠ 1 this is no longer a coupling;
/// used to check that the verifier notices.
pub struct ScaledG<'a> {
    inner: &'a dyn CouplingModel,
    c: f64,
}

impl<'a> ScaledG<'a> {
    pub fn new(inner: &'a dyn CouplingModel, c: f64) -> Self {
        Self { inner, c }
    }

    fn map(&self, mut s: CouplingSample) -> CouplingSample {
        s.g.iter_mut().for_each(|x| *x *= self.c);
        s
    }
}

impl CouplingModel for ScaledG<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn kind(&self) -> CouplingKind {
        self.inner.kind()
    }

    fn sample(&self, rng: &mut StreamRng) -> CouplingSample {
        self.map(self.inner.sample(rng))
    }

    fn enumerate(&self) -> Option<Vec<(f64, CouplingSample)>> {
        Some(self.inner.enumerate()?.into_iter().map(|(p, s)| (p, self.map(s))).collect())
    }
}

/// W′ = W = G = 0.
pub struct Degenerate {
    pub d: usize,
}

impl CouplingModel for Degenerate {
    fn dim(&self) -> usize {
        self.d
    }

    fn sample(&self, _: &mut StreamRng) -> CouplingSample {
        CouplingSample::new(vec![0.0; self.d], vec![0.0; self.d], vec![0.0; self.d])
    }

    fn enumerate(&self) -> Option<Vec<(f64, CouplingSample)>> {
        Some(vec![(1.0, self.sample(&mut crate::rng::from_seed(0)))])
    }

    fn conditioner(&self) -> Option<&dyn Conditioner> {
        Some(self)
    }
}

impl Conditioner for Degenerate {
    fn dim(&self) -> usize {
        self.d
    }

    fn draw(&self, _: &mut StreamRng) -> ConditionalMoments {
        ConditionalMoments::zeros(self.d)
    }

    fn states(&self) -> Option<Vec<(f64, ConditionalMoments)>> {
        Some(vec![(1.0, ConditionalMoments::zeros(self.d))])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_moments_accumulate() {
        let a = CouplingSample::new(vec![1.0, 0.0], vec![2.0, 1.0], vec![1.0, -1.0]);
        let b = CouplingSample::new(vec![0.0, 0.0], vec![0.0, 0.0], vec![3.0, 4.0]);
        let m = ConditionalMoments::from_inner(2, &[(0.5, a), (0.5, b)]);
        assert_eq!(m.d2, 1.0);
        assert_eq!(m.dd, vec![0.5, 0.5, 0.5, 0.5]);
        assert_eq!(m.gd, vec![0.5, 0.5, -0.5, -0.5]);
        assert_eq!(m.gdd[0], 0.5);
        assert_eq!(m.g_max, 5.0);
        assert!((m.d_max - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn linear_image_checks_shape() {
        let base = Degenerate { d: 2 };
        assert!(LinearImage::new(&base, DMatrix::zeros(3, 3)).is_err());
        let img = LinearImage::new(&base, DMatrix::from_element(3, 2, 1.0)).unwrap();
        assert_eq!(img.dim(), 3);
        assert_eq!(img.enumerate().unwrap()[0].1.w.len(), 3);
    }
}
