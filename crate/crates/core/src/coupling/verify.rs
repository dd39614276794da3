//! Checks of E[Gᵗ(F(W′) − F(W))] = E[WᵗF(W)] over a fixed finite family of
//! test functions, exactly (by enumeration) or by Monte Carlo.
//!
//! Passing is evidence, not proof: the family is finite. For equal-marginal
//! λ pairs only the projections and linear monomials are used, which is
//! exactly the content of E W = 0 and E[G Dᵗ] = Cov(W).

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{CouplingKind, CouplingModel, CouplingSample};
use crate::error::{Error, Result};
use crate::report::{sig17, sig17_matrix, sig17_vec};
use crate::rng;

/// A map F: R^d → R^d.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// F = e_i
    Projection { i: usize },
    /// F(w) = w_j e_i
    Monomial { i: usize, j: usize },
    /// F(w) = tanh(w_j) e_i
    Tanh { i: usize, j: usize },
    /// F_i(w) = Σ_m c[i][m] w^{e_m} over all exponents e_m of total degree ≤ 3
    Cubic { exponents: Vec<Vec<u32>>, coeffs: Vec<Vec<f64>> },
}

/// Seed of the random cubic in [`test_family`].
pub const CUBIC_SEED: u64 = 0x5eed_c0b1c;

fn exponents(d: usize, max_deg: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|e: Vec<u32>| {
                let used: u32 = e.iter().sum();
                (0..=max_deg - used).map(move |k| {
                    let mut f = e.clone();
                    f.push(k);
                    f
                })
            })
            .collect();
    }
    out
}

impl TestFunction {
    pub fn cubic(d: usize, seed: u64) -> Self {
        let exponents = exponents(d, 3);
        let mut r = rng::from_seed(seed);
        let coeffs = (0..d).map(|_| exponents.iter().map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        TestFunction::Cubic { exponents, coeffs }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Projection { i } => format!("e{}", i + 1),
            Self::Monomial { i, j } => format!("w{}*e{}", j + 1, i + 1),
            Self::Tanh { i, j } => format!("tanh(w{})*e{}", j + 1, i + 1),
            Self::Cubic { .. } => "cubic".to_string(),
        }
    }

    /// Whether F is among the maps used for equal-marginal λ pairs.
    fn is_linear(&self) -> bool {
        matches!(self, Self::Projection { .. } | Self::Monomial { .. })
    }

    pub fn eval(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; w.len()];
        match self {
            Self::Projection { i } => out[*i] = 1.0,
            Self::Monomial { i, j } => out[*i] = w[*j],
            Self::Tanh { i, j } => out[*i] = w[*j].tanh(),
            Self::Cubic { exponents, coeffs } => {
                let monos: Vec<f64> =
                    exponents.iter().map(|e| e.iter().zip(w).map(|(&k, x)| x.powi(k as i32)).product()).collect();
                for (o, c) in out.iter_mut().zip(coeffs) {
                    *o = c.iter().zip(&monos).map(|(a, b)| a * b).sum();
                }
            }
        }
        out
    }
}

/// Projections, linear monomials, tanh maps and the pinned random cubic.
pub fn test_family(d: usize) -> Vec<TestFunction> {
    let mut fam: Vec<TestFunction> = (0..d).map(|i| TestFunction::Projection { i }).collect();
    for i in 0..d {
        for j in 0..d {
            fam.push(TestFunction::Monomial { i, j });
        }
    }
    for i in 0..d {
        for j in 0..d {
            fam.push(TestFunction::Tanh { i, j });
        }
    }
    fam.push(TestFunction::cubic(d, CUBIC_SEED));
    fam
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VerifyMode {
    Exact,
    MonteCarlo { reps: usize, seed: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionResidual {
    pub name: String,
    /// E[Gᵗ(F(W′) − F(W))] − E[WᵗF(W)]
    #[serde(serialize_with = "sig17")]
    pub residual: f64,
    /// zero in exact mode
    #[serde(serialize_with = "sig17")]
    pub std_error: f64,
    /// E|GᵗF(W′)| + E|GᵗF(W)| + E|WᵗF(W)|, the size the residual is judged against
    #[serde(serialize_with = "sig17")]
    pub scale: f64,
    pub pass: bool,
}

/// E W, Cov(W) and E[G Dᵗ].
#[derive(Debug, Clone, Serialize)]
pub struct MomentRelations {
    #[serde(serialize_with = "sig17_vec")]
    pub mean_w: Vec<f64>,
    #[serde(serialize_with = "sig17_matrix")]
    pub cov_w: Vec<Vec<f64>>,
    #[serde(serialize_with = "sig17_matrix")]
    pub gd: Vec<Vec<f64>>,
    /// max of |E W_i| and |E[G Dᵗ] − Cov(W)|_ij
    #[serde(serialize_with = "sig17")]
    pub max_defect: f64,
}

pub fn moment_relations(atoms: &[(f64, CouplingSample)]) -> MomentRelations {
    let d = atoms.first().map_or(0, |a| a.1.dim());
    let total: f64 = atoms.iter().map(|a| a.0).sum();
    let mut mean = vec![0.0; d];
    for (p, s) in atoms {
        for i in 0..d {
            mean[i] += p * s.w[i] / total;
        }
    }
    let mut cov = vec![vec![0.0; d]; d];
    let mut gd = vec![vec![0.0; d]; d];
    for (p, s) in atoms {
        let dv = s.d();
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += p * (s.w[i] - mean[i]) * (s.w[j] - mean[j]) / total;
                gd[i][j] += p * s.g[i] * dv[j] / total;
            }
        }
    }
    let mut defect = mean.iter().fold(0.0f64, |a, m| a.max(m.abs()));
    for i in 0..d {
        for j in 0..d {
            defect = defect.max((gd[i][j] - cov[i][j]).abs());
        }
    }
    MomentRelations { mean_w: mean, cov_w: cov, gd, max_defect: defect }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub mode: &'static str,
    pub kind: CouplingKind,
    pub dim: usize,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub cubic_seed: u64,
    /// false for equal-marginal λ pairs: only linear test maps were run
    pub identity_asserted: bool,
    pub functions: Vec<FunctionResidual>,
    pub moments: MomentRelations,
    pub pass: bool,
}

/// Relative tolerance of exact mode.
pub const EXACT_TOL: f64 = 1e-10;
/// Monte Carlo pass band in standard errors.
pub const MC_SIGMAS: f64 = 4.0;

/// (identity term, |GᵗF(W′)| + |GᵗF(W)| + |WᵗF(W)|) for one sample.
fn terms(f: &TestFunction, s: &CouplingSample) -> (f64, f64) {
    let fw = f.eval(&s.w);
    let fwp = f.eval(&s.w_prime);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let (a, b, c) = (dot(&s.g, &fwp), dot(&s.g, &fw), dot(&s.w, &fw));
    (a - b - c, a.abs() + b.abs() + c.abs())
}

pub fn verify_identity(model: &dyn CouplingModel, family: &[TestFunction], mode: VerifyMode) -> Result<VerifyReport> {
    let kind = model.kind();
    let asserted = kind == CouplingKind::Stein;
    let family: Vec<&TestFunction> = family.iter().filter(|f| asserted || f.is_linear()).collect();
    let (functions, moments, reps, seed) = match mode {
        VerifyMode::Exact => {
            let atoms = model
                .enumerate()
                .ok_or_else(|| Error::Capability("exact verification needs an enumerable coupling".into()))?;
            let total: f64 = atoms.iter().map(|a| a.0).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Consistency(format!("enumerator probabilities sum to {total}")));
            }
            let functions: Vec<FunctionResidual> = family
                .iter()
                .map(|f| {
                    let (res, scale) = atoms.iter().fold((0.0, 0.0), |(r, sc), (p, s)| {
                        let (t, a) = terms(f, s);
                        (r + p * t, sc + p * a)
                    });
                    FunctionResidual {
                        name: f.name(),
                        residual: res,
                        std_error: 0.0,
                        scale,
                        pass: res.abs() <= EXACT_TOL * scale.max(1.0),
                    }
                })
                .collect();
            (functions, moment_relations(&atoms), None, None)
        }
        VerifyMode::MonteCarlo { reps, seed } => {
            if reps < 2 {
                return Err(Error::Parameter("Monte Carlo verification needs at least two replications".into()));
            }
            let samples: Vec<CouplingSample> =
                (0..reps as u64).into_par_iter().map(|r| model.sample(&mut rng::stream(seed, r))).collect();
            let k = reps as f64;
            let functions: Vec<FunctionResidual> = family
                .iter()
                .map(|f| {
                    let vals: Vec<(f64, f64)> = samples.iter().map(|s| terms(f, s)).collect();
                    let mean = vals.iter().map(|v| v.0).sum::<f64>() / k;
                    let scale = vals.iter().map(|v| v.1).sum::<f64>() / k;
                    let var = vals.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / (k - 1.0);
                    let se = (var / k).sqrt();
                    let pass =
                        if se > 0.0 { mean.abs() <= MC_SIGMAS * se } else { mean.abs() <= EXACT_TOL * scale.max(1.0) };
                    FunctionResidual { name: f.name(), residual: mean, std_error: se, scale, pass }
                })
                .collect();
            let atoms: Vec<(f64, CouplingSample)> = samples.into_iter().map(|s| (1.0 / k, s)).collect();
            (functions, moment_relations(&atoms), Some(reps), Some(seed))
        }
    };
    let pass = functions.iter().all(|f: &FunctionResidual| f.pass);
    Ok(VerifyReport {
        mode: if reps.is_some() { "mc" } else { "exact" },
        kind,
        dim: model.dim(),
        reps,
        seed,
        cubic_seed: CUBIC_SEED,
        identity_asserted: asserted,
        functions,
        moments,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{
        EqualMarginalCoupling, ExchangeablePairCoupling, FinitePair, FulmanPair, GraphCoupling, IidCoins, LinearImage,
        LocalDependenceCoupling, ScaledG, SignFlipPair, SizeBiasCoupling,
    };
    use nalgebra::DMatrix;

    fn eight_point() -> SizeBiasCoupling {
        let atoms = (0..8u32)
            .map(|m| {
                let b: Vec<f64> = (0..3).map(|k| f64::from(m >> k & 1)).collect();
                (0.125, vec![b[0] + b[1], b[1] + b[2]])
            })
            .collect();
        SizeBiasCoupling::from_pmf(atoms).unwrap()
    }

    fn assert_exact(model: &dyn CouplingModel) -> VerifyReport {
        let r = verify_identity(model, &test_family(model.dim()), VerifyMode::Exact).unwrap();
        for f in &r.functions {
            assert!(f.pass, "{}: residual {:e}", f.name, f.residual);
        }
        assert!(r.moments.max_defect < 1e-10, "{:?}", r.moments);
        r
    }

    #[test]
    fn family_shape() {
        let fam = test_family(2);
        assert_eq!(fam.len(), 2 + 4 + 4 + 1);
        assert_eq!(fam[2].name(), "w1*e1");
        if let TestFunction::Cubic { exponents, .. } = &fam[10] {
            assert_eq!(exponents.len(), 10);
        } else {
            panic!("last member should be the cubic");
        }
        assert_eq!(TestFunction::Monomial { i: 1, j: 0 }.eval(&[3.0, 4.0]), vec![0.0, 3.0]);
    }

    #[test]
    fn coins_satisfy_identity() {
        let c = LocalDependenceCoupling::new(IidCoins::new(5, 0.3).unwrap()).unwrap();
        let r = assert_exact(&c);
        assert!((r.moments.cov_w[0][0] - 5.0 * 0.21).abs() < 1e-12);
    }

    #[test]
    fn graph_coupling_at_five_vertices() {
        for p in [0.3, 0.5] {
            let c = GraphCoupling::new(5, p).unwrap();
            let r = assert_exact(&c);
            for i in 0..2 {
                for j in 0..2 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((r.moments.cov_w[i][j] - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn pair_couplings() {
        assert_exact(&ExchangeablePairCoupling::scalar(SignFlipPair::new(6).unwrap(), 1.0 / 3.0).unwrap());
        let reflect = FinitePair::new(vec![(0.5, vec![1.0], vec![-1.0]), (0.5, vec![-1.0], vec![1.0])]).unwrap();
        assert_exact(&ExchangeablePairCoupling::scalar(reflect, 2.0).unwrap());
    }

    #[test]
    fn equal_marginal_pairs_check_only_moments() {
        let c = EqualMarginalCoupling::new(FulmanPair::descent_inversion(5).unwrap(), 0.4).unwrap();
        let r = assert_exact(&c);
        assert!(!r.identity_asserted);
        assert_eq!(r.functions.len(), 6);
    }

    #[test]
    fn size_bias_examples() {
        let b = SizeBiasCoupling::from_pmf(vec![(0.7, vec![0.0]), (0.3, vec![1.0])]).unwrap();
        assert_exact(&b);
        let r = assert_exact(&eight_point());
        assert!((r.moments.cov_w[0][1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn linear_images_stay_couplings() {
        let base = eight_point();
        let mut rr = rng::from_seed(21);
        for rows in [1, 2, 3, 2, 3] {
            let a = DMatrix::from_fn(rows, 2, |_, _| rr.random_range(-2.0..2.0));
            let img = LinearImage::new(&base, a).unwrap();
            let r = verify_identity(&img, &test_family(rows), VerifyMode::Exact).unwrap();
            assert!(r.pass);
        }
    }

    #[test]
    fn scaled_g_is_detected() {
        let base = GraphCoupling::new(5, 0.5).unwrap();
        let broken = ScaledG::new(&base, 1.1);
        let r = verify_identity(&broken, &test_family(2), VerifyMode::Exact).unwrap();
        assert!(!r.pass);
        // linear in G: the w_j e_i residual is 0.1·E[G_i D_j] = 0.1·Cov_ij
        for f in &r.functions[2..6] {
            let (i, j) = match f.name.as_bytes() {
                [b'w', j, b'*', b'e', i] => ((i - b'1') as usize, (j - b'1') as usize),
                _ => unreachable!(),
            };
            let want = if i == j { 0.1 } else { 0.0 };
            assert!((f.residual - want).abs() < 1e-10, "{}: {}", f.name, f.residual);
        }
    }

    #[test]
    fn exact_mode_needs_enumerator() {
        let c = GraphCoupling::new(8, 0.5).unwrap();
        assert!(matches!(verify_identity(&c, &test_family(2), VerifyMode::Exact), Err(Error::Capability(_))));
    }

    #[test]
    fn monte_carlo_mode_is_calibrated() {
        let model = eight_point();
        let fam = test_family(2);
        let mut inside = 0;
        let mut total = 0;
        for run in 0..100 {
            let r = verify_identity(&model, &fam, VerifyMode::MonteCarlo { reps: 400, seed: run }).unwrap();
            total += r.functions.len();
            inside += r.functions.iter().filter(|f| f.pass).count();
        }
        assert!(inside as f64 >= 0.99 * total as f64, "{inside}/{total}");
    }

    #[test]
    fn graph_coupling_monte_carlo() {
        let c = GraphCoupling::new(12, 0.5).unwrap();
        let r = verify_identity(&c, &test_family(2), VerifyMode::MonteCarlo { reps: 4000, seed: 3 }).unwrap();
        let failures = r.functions.iter().filter(|f| !f.pass).count();
        assert!(failures <= 1, "{:?}", r.functions);
    }
}
