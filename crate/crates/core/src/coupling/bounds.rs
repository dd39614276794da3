//! Ingredients of the convex-set error bound for a coupling with D = W′ − W:
//! α ≥ |G|, β ≥ |D|, E|D|², and
//!
//!   B₁ = √Var E^F|D|²,  B₂ = Σ_ij √Var E^F(G_i D_j),
//!   B₃ = Σ_ijk √Var E^F(G_i D_j D_k),  B₄ = Σ_i √Var E^F D_i²,
//!
//! where F ⊇ σ(W) is the outer randomness of the conditioner. Conditioning
//! on F instead of W can only increase these variances.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use super::{ConditionalMoments, Conditioner, CouplingModel};
use crate::error::{param, Error, Result};
use crate::report::sig17;
use crate::rng;

#[derive(Debug, Clone, Default, Serialize)]
pub struct BoundErrors {
    #[serde(serialize_with = "sig17")]
    pub e_d2: f64,
    #[serde(serialize_with = "sig17")]
    pub b1: f64,
    #[serde(serialize_with = "sig17")]
    pub b2: f64,
    #[serde(serialize_with = "sig17")]
    pub b3: f64,
    #[serde(serialize_with = "sig17")]
    pub b4: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundTerms {
    pub d: usize,
    /// largest |G| seen; a lower bound on the true sup unless `sup_exact`
    #[serde(serialize_with = "sig17")]
    pub alpha_sup: f64,
    #[serde(serialize_with = "sig17")]
    pub beta_sup: f64,
    pub sup_exact: bool,
    #[serde(serialize_with = "sig17")]
    pub e_d2: f64,
    #[serde(serialize_with = "sig17")]
    pub b1: f64,
    #[serde(serialize_with = "sig17")]
    pub b2: f64,
    #[serde(serialize_with = "sig17")]
    pub b3: f64,
    #[serde(serialize_with = "sig17")]
    pub b4: f64,
    /// jackknife standard errors (zero when exact)
    pub std_errors: BoundErrors,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
}

/// The scalar series whose variances enter B₁..B₄, grouped by term.
fn series(m: &ConditionalMoments) -> [Vec<f64>; 4] {
    let d = m.d;
    [vec![m.d2], m.gd.clone(), m.gdd.clone(), (0..d).map(|i| m.dd[i * d + i]).collect()]
}

fn conditioner_of(model: &dyn CouplingModel) -> Result<&dyn Conditioner> {
    model.conditioner().ok_or_else(|| Error::Capability("bound terms need a conditioner for the coupling".into()))
}

/// Monte Carlo over outer states, with jackknife standard errors.
pub fn bound_terms(model: &dyn CouplingModel, reps: usize, seed: u64) -> Result<BoundTerms> {
    let cond = conditioner_of(model)?;
    if reps < 3 {
        return param("bound terms need at least three replications");
    }
    let draws: Vec<ConditionalMoments> =
        (0..reps as u64).into_par_iter().map(|r| cond.draw(&mut rng::stream(seed, r))).collect();
    let k = reps as f64;
    let alpha = draws.iter().map(|m| m.g_max).fold(0.0, f64::max);
    let beta = draws.iter().map(|m| m.d_max).fold(0.0, f64::max);

    let cols: Vec<[Vec<f64>; 4]> = draws.iter().map(series).collect();
    let mut values = [0.0; 4];
    let mut errors = [0.0; 4];
    for t in 0..4 {
        let width = cols[0][t].len();
        // centre each series first; leave-one-out variances then come from
        // running sums without cancellation
        let mut b_full = 0.0;
        let mut loo = vec![0.0; reps];
        for q in 0..width {
            let xs: Vec<f64> = cols.iter().map(|c| c[t][q]).collect();
            let mean = xs.iter().sum::<f64>() / k;
            let c: Vec<f64> = xs.iter().map(|x| x - mean).collect();
            let s2: f64 = c.iter().map(|x| x * x).sum();
            b_full += (s2 / (k - 1.0)).sqrt();
            for (r, &x) in c.iter().enumerate() {
                let m_r = -x / (k - 1.0);
                let var_r = ((s2 - x * x) - (k - 1.0) * m_r * m_r) / (k - 2.0);
                loo[r] += var_r.max(0.0).sqrt();
            }
        }
        let loo_mean = loo.iter().sum::<f64>() / k;
        values[t] = b_full;
        errors[t] = ((k - 1.0) / k * loo.iter().map(|v| (v - loo_mean).powi(2)).sum::<f64>()).sqrt();
    }
    let d2: Vec<f64> = draws.iter().map(|m| m.d2).collect();
    let e_d2 = d2.iter().sum::<f64>() / k;
    let se_d2 = (d2.iter().map(|x| (x - e_d2).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt();

    Ok(BoundTerms {
        d: cond.dim(),
        alpha_sup: alpha,
        beta_sup: beta,
        sup_exact: false,
        e_d2,
        b1: values[0],
        b2: values[1],
        b3: values[2],
        b4: values[3],
        std_errors: BoundErrors { e_d2: se_d2, b1: errors[0], b2: errors[1], b3: errors[2], b4: errors[3] },
        reps: Some(reps),
        seed: Some(seed),
    })
}

/// Exact terms from the full list of outer states.
pub fn bound_terms_exact(model: &dyn CouplingModel) -> Result<BoundTerms> {
    let cond = conditioner_of(model)?;
    let states =
        cond.states().ok_or_else(|| Error::Capability("exact bound terms need enumerable outer states".into()))?;
    let total: f64 = states.iter().map(|s| s.0).sum();
    let alpha = states.iter().filter(|s| s.0 > 0.0).map(|s| s.1.g_max).fold(0.0, f64::max);
    let beta = states.iter().filter(|s| s.0 > 0.0).map(|s| s.1.d_max).fold(0.0, f64::max);
    let cols: Vec<(f64, [Vec<f64>; 4])> = states.iter().map(|(p, m)| (p / total, series(m))).collect();
    let mut values = [0.0; 4];
    for (t, v) in values.iter_mut().enumerate() {
        for q in 0..cols[0].1[t].len() {
            let mean: f64 = cols.iter().map(|(p, c)| p * c[t][q]).sum();
            let var: f64 = cols.iter().map(|(p, c)| p * (c[t][q] - mean).powi(2)).sum();
            *v += var.max(0.0).sqrt();
        }
    }
    Ok(BoundTerms {
        d: cond.dim(),
        alpha_sup: alpha,
        beta_sup: beta,
        sup_exact: true,
        e_d2: states.iter().map(|(p, m)| p / total * m.d2).sum(),
        b1: values[0],
        b2: values[1],
        b3: values[2],
        b4: values[3],
        std_errors: BoundErrors::default(),
        reps: None,
        seed: None,
    })
}

/// d^{7/4}αE|D|² + d^{1/4}β + d^{7/8}α^{1/2}B₁^{1/2} + d^{3/8}B₂ + d^{1/8}B₃^{1/2},
/// the bound without its universal constant.
pub fn bound_evaluate(d: usize, t: &BoundTerms) -> f64 {
    let d = d as f64;
    d.powf(1.75) * t.alpha_sup * t.e_d2
        + d.powf(0.25) * t.beta_sup
        + d.powf(0.875) * (t.alpha_sup * t.b1).sqrt()
        + d.powf(0.375) * t.b2
        + d.powf(0.125) * t.b3.sqrt()
}

/// The variant for Cov(W) = Σ:
/// α s₂² E|D|² + s₂β + s∞ α^{1/2} B₄^{1/2} + s∞² B₂ + s∞^{3/2} B₃^{1/2},
/// with s₂ = ‖Σ^{-1/2}‖₂ and s∞ the largest entry of Σ^{-1/2} in modulus.
pub fn bound_evaluate_cov(t: &BoundTerms, sigma: &DMatrix<f64>) -> Result<f64> {
    if sigma.nrows() != t.d || sigma.ncols() != t.d {
        return param(format!("Σ must be {0}x{0}", t.d));
    }
    let eig = SymmetricEigen::new(sigma.clone());
    let lmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(lmin > 0.0) {
        return param("Σ must be positive definite");
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let root = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    let s2 = 1.0 / lmin.sqrt();
    let sinf = root.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    Ok(t.alpha_sup * s2 * s2 * t.e_d2
        + s2 * t.beta_sup
        + sinf * (t.alpha_sup * t.b4).sqrt()
        + sinf * sinf * t.b2
        + sinf.powf(1.5) * t.b3.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{Degenerate, ExchangeablePairCoupling, GraphCoupling, SignFlipPair, SizeBiasCoupling};

    fn terms(alpha: f64, beta: f64, e_d2: f64, b: [f64; 4]) -> BoundTerms {
        BoundTerms {
            d: 1,
            alpha_sup: alpha,
            beta_sup: beta,
            sup_exact: true,
            e_d2,
            b1: b[0],
            b2: b[1],
            b3: b[2],
            b4: b[3],
            std_errors: BoundErrors::default(),
            reps: None,
            seed: None,
        }
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(bound_evaluate(2, &terms(0.0, 0.0, 0.0, [0.0; 4])), 0.0);
        assert_eq!(bound_evaluate(1, &terms(1.0, 1.0, 1.0, [0.0; 4])), 2.0);
        let sigma = DMatrix::identity(1, 1);
        assert_eq!(bound_evaluate_cov(&terms(1.0, 1.0, 1.0, [0.0; 4]), &sigma).unwrap(), 2.0);
        assert!(bound_evaluate_cov(&terms(1.0, 1.0, 1.0, [0.0; 4]), &DMatrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn evaluate_is_monotone_in_each_term() {
        let base = [0.3, 0.2, 0.5, 0.1, 0.4, 0.7, 0.6];
        let make = |v: &[f64]| terms(v[0], v[1], v[2], [v[3], v[4], v[5], v[6]]);
        let sigma = DMatrix::from_element(1, 1, 2.0);
        for k in 0..base.len() {
            let mut up = base;
            up[k] += 0.25;
            for d in [1, 2, 5] {
                assert!(bound_evaluate(d, &make(&up)) >= bound_evaluate(d, &make(&base)));
            }
            let lo = bound_evaluate_cov(&make(&base), &sigma).unwrap();
            assert!(bound_evaluate_cov(&make(&up), &sigma).unwrap() >= lo);
        }
    }

    #[test]
    fn covariance_variant_norms() {
        // Σ = diag(4, 1): Σ^{-1/2} = diag(1/2, 1), so s₂ = s∞ = 1
        let mut t = terms(1.0, 1.0, 1.0, [0.0; 4]);
        t.d = 2;
        let sigma = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0]));
        assert!((bound_evaluate_cov(&t, &sigma).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_coupling_has_zero_terms() {
        let t = bound_terms(&Degenerate { d: 2 }, 10, 1).unwrap();
        assert_eq!([t.alpha_sup, t.beta_sup, t.e_d2, t.b1, t.b2, t.b3, t.b4], [0.0; 7]);
        let e = bound_terms_exact(&Degenerate { d: 2 }).unwrap();
        assert_eq!(bound_evaluate(2, &e), 0.0);
    }

    #[test]
    fn monte_carlo_terms_track_exact_ones() {
        let pair = SignFlipPair::new(8).unwrap();
        let lam = pair.lambda();
        let c = ExchangeablePairCoupling::scalar(pair, lam).unwrap();
        let exact = bound_terms_exact(&c).unwrap();
        let mc = bound_terms(&c, 4000, 7).unwrap();
        for (x, y, se) in [
            (exact.b1, mc.b1, mc.std_errors.b1),
            (exact.b2, mc.b2, mc.std_errors.b2),
            (exact.b3, mc.b3, mc.std_errors.b3),
            (exact.b4, mc.b4, mc.std_errors.b4),
        ] {
            assert!((x - y).abs() <= 4.0 * se + 1e-12, "{x} vs {y} ± {se}");
        }
        assert!((exact.e_d2 - mc.e_d2).abs() <= 4.0 * mc.std_errors.e_d2 + 1e-12);
        // |D| = 2 always; E^F D² = 4 is constant, so B₁ = B₄ = 0
        assert_eq!(exact.beta_sup, 2.0);
        assert!(exact.b1 < 1e-12 && exact.b4 < 1e-12);
    }

    #[test]
    fn size_bias_terms_are_finite() {
        let atoms = (0..8u32)
            .map(|m| {
                let b: Vec<f64> = (0..3).map(|k| f64::from(m >> k & 1)).collect();
                (0.125, vec![b[0] + b[1], b[1] + b[2]])
            })
            .collect();
        let c = SizeBiasCoupling::from_pmf(atoms).unwrap();
        let t = bound_terms_exact(&c).unwrap();
        assert!(t.b2 > 0.0 && t.alpha_sup == 2.0);
        assert!(bound_evaluate(2, &t).is_finite());
    }

    #[test]
    fn graph_terms_need_reps() {
        let c = GraphCoupling::new(8, 0.5).unwrap();
        assert!(bound_terms(&c, 2, 0).is_err());
        let t = bound_terms(&c, 20, 0).unwrap();
        assert!(t.b2 > 0.0 && t.e_d2 > 0.0);
        assert!(bound_terms_exact(&c).is_err());
    }
}
