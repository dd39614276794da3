//! Replication engine and the experiment suite.
//!
//! Replication r of a run keyed by `seed` draws only from `rng::stream(seed, r)`
//! and results are collected by index, so outputs never depend on the number
//! of worker threads. Multi-n runs key the k-th sample size with `seed + k`.

mod distance;
mod experiments;
mod rate;

pub use distance::{chi2_2_cdf, chi2_ks, convex_class_distance, ks_distance, normal_cdf, ConvexClass, DistanceReport};
pub use experiments::{
    coverage_experiment, coverage_trial, graph_trial, permutation_trial, power_experiment, power_trial,
    FrequencyEstimate,
};
pub use rate::{rate_fit, RateFit};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::graph::GraphonKernel;
use crate::homogeneity::SearchDomain;
use crate::report::sig17;
use crate::rng::{self, StreamRng};

/// Largest reps × outputs a single run may materialise.
pub const MAX_CELLS: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Coverage,
    Power,
    Distance,
    Rate,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Gnp {
        #[serde(serialize_with = "sig17")]
        p: f64,
    },
    Graphon {
        label: String,
        #[serde(skip)]
        kernel: GraphonKernel,
    },
    /// Uniform permutations, standardised descent and inversion counts.
    Permutation,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub ns: Vec<usize>,
    #[serde(flatten)]
    pub model: ModelSpec,
    #[serde(serialize_with = "sig17")]
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    /// Worker-thread hint; never changes results.
    pub jobs: Option<usize>,
    pub domain: SearchDomain,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return param("reps must be at least 1");
        }
        if self.ns.is_empty() {
            return param("need at least one n");
        }
        if self.jobs == Some(0) {
            return param("jobs must be at least 1");
        }
        let graph = !matches!(self.model, ModelSpec::Permutation);
        if let Some(&n) = self.ns.iter().find(|&&n| if graph { n < 5 } else { n < 2 }) {
            return param(format!("n = {n} is too small for this model"));
        }
        match (&self.kind, &self.model) {
            (ExperimentKind::Coverage, ModelSpec::Gnp { .. }) => {}
            (ExperimentKind::Coverage, _) => return param("coverage needs a G(n, p) model"),
            (ExperimentKind::Power, ModelSpec::Permutation) => return param("power needs a graph model"),
            (ExperimentKind::Distance | ExperimentKind::Rate, ModelSpec::Graphon { .. }) => {
                return param("distance and rate experiments take G(n, p) or permutations")
            }
            _ => {}
        }
        if let ModelSpec::Gnp { p } = self.model {
            if !(p > 0.0 && p < 1.0) {
                return param(format!("p must lie in (0, 1), got {p}"));
            }
        }
        if matches!(self.kind, ExperimentKind::Coverage | ExperimentKind::Power) {
            crate::homogeneity::chi2_quantile(self.alpha)?;
            self.domain.validate()?;
        }
        if self.kind == ExperimentKind::Rate && self.ns.len() < 2 {
            return param("a rate fit needs at least two values of n");
        }
        Ok(())
    }

    pub fn columns(&self) -> Vec<&'static str> {
        match self.kind {
            ExperimentKind::Coverage => vec!["w1", "w2", "covered"],
            ExperimentKind::Power => vec!["empty", "statistic_min"],
            ExperimentKind::Distance | ExperimentKind::Rate => vec!["w1", "w2"],
        }
    }

    /// Seed for the k-th sample size.
    pub fn seed_for(&self, k: usize) -> u64 {
        self.seed.wrapping_add(k as u64)
    }

    /// One replication at sample size `n`.
    fn trial(&self, n: usize, rng: &mut StreamRng) -> Result<Vec<f64>> {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        Ok(match (&self.kind, &self.model) {
            (ExperimentKind::Coverage, ModelSpec::Gnp { p }) => {
                let (w, covered) = coverage_trial(n, *p, self.alpha, self.domain, rng)?;
                vec![w[0], w[1], flag(covered)]
            }
            (ExperimentKind::Power, model) => {
                let kernel = match model {
                    ModelSpec::Gnp { p } => GraphonKernel::constant(*p)?,
                    ModelSpec::Graphon { kernel, .. } => kernel.clone(),
                    ModelSpec::Permutation => unreachable!("rejected by validate"),
                };
                let set = power_trial(n, &kernel, self.alpha, self.domain, rng)?;
                vec![flag(set.is_empty()), set.statistic_min]
            }
            (_, ModelSpec::Gnp { p }) => graph_trial(n, *p, rng)?.to_vec(),
            (_, ModelSpec::Permutation) => permutation_trial(n, rng)?.to_vec(),
            _ => unreachable!("rejected by validate"),
        })
    }
}

/// Runs `f(r, stream r)` for r in 0..reps and returns the results in order.
pub fn replicate<T, F>(reps: usize, seed: u64, jobs: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut StreamRng) -> Result<T> + Sync,
{
    let run = || (0..reps).into_par_iter().map(|r| f(r, &mut rng::stream(seed, r as u64))).collect();
    match jobs {
        None => run(),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::Parameter(format!("cannot build a pool of {j} workers: {e}")))?
            .install(run),
    }
}

/// One row per replication; `n` and `rep` lead every row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SampleMatrix {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|x| x == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    /// Rows with a given n.
    pub fn for_n(&self, n: usize) -> SampleMatrix {
        let rows = self.rows.iter().filter(|r| r[0] == n as f64).cloned().collect();
        SampleMatrix { columns: self.columns.clone(), rows }
    }

    /// CSV with a header line; reals in 17 significant digits.
    pub fn write_csv(&self, mut out: impl std::io::Write) -> Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .zip(&self.columns)
                .map(|(x, c)| if c == "n" || c == "rep" { format!("{x}") } else { format!("{x:.16e}") })
                .collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

pub fn run_replications(config: &ExperimentConfig) -> Result<SampleMatrix> {
    config.validate()?;
    let cols = config.columns();
    let cells = config.ns.len().checked_mul(config.reps).and_then(|x| x.checked_mul(cols.len() + 2));
    if cells.is_none_or(|c| c > MAX_CELLS) {
        return Err(Error::Size(format!(
            "{} sample sizes × {} replications exceeds the {MAX_CELLS}-cell limit",
            config.ns.len(),
            config.reps
        )));
    }
    let mut rows = Vec::with_capacity(config.ns.len() * config.reps);
    for (k, &n) in config.ns.iter().enumerate() {
        let block = replicate(config.reps, config.seed_for(k), config.jobs, |r, rng| {
            let mut row = vec![n as f64, r as f64];
            row.extend(config.trial(n, rng)?);
            Ok(row)
        })?;
        rows.extend(block);
    }
    let mut columns = vec!["n".to_string(), "rep".to_string()];
    columns.extend(cols.iter().map(|c| c.to_string()));
    Ok(SampleMatrix { columns, rows })
}

/// Per-n outcome of an experiment.
#[derive(Debug, Clone, Serialize)]
pub struct NSummary {
    pub n: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency: Option<FrequencyEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<DistanceReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub results: Vec<NSummary>,
    /// Fit of log KS(W₁) against log n, for rate experiments.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_w1: Option<RateFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_w2: Option<RateFit>,
}

pub fn summarize(config: &ExperimentConfig, samples: &SampleMatrix) -> Result<ExperimentSummary> {
    let mut results = Vec::new();
    for (k, &n) in config.ns.iter().enumerate() {
        let block = samples.for_n(n);
        let col = |c: &str| block.column(c).ok_or_else(|| Error::Consistency(format!("missing column {c}")));
        let (frequency, distance) = match config.kind {
            ExperimentKind::Coverage => {
                let misses = col("covered")?.iter().filter(|&&c| c == 0.0).count();
                (Some(FrequencyEstimate::new(misses, block.rows.len())?), None)
            }
            ExperimentKind::Power => {
                let hits = col("empty")?.iter().filter(|&&c| c == 1.0).count();
                (Some(FrequencyEstimate::new(hits, block.rows.len())?), None)
            }
            ExperimentKind::Distance | ExperimentKind::Rate => {
                let pts: Vec<[f64; 2]> = col("w1")?.into_iter().zip(col("w2")?).map(|(a, b)| [a, b]).collect();
                (None, Some(convex_class_distance(&pts)?))
            }
        };
        results.push(NSummary { n, seed: config.seed_for(k), frequency, distance });
    }
    let (rate_w1, rate_w2) = if config.kind == ExperimentKind::Rate {
        let ns: Vec<f64> = config.ns.iter().map(|&n| n as f64).collect();
        let ks = |c: usize| results.iter().map(move |r| r.distance.as_ref().map_or(f64::NAN, |d| d.ks_marginals[c]));
        (Some(rate_fit(&ns, &ks(0).collect::<Vec<_>>())?), Some(rate_fit(&ns, &ks(1).collect::<Vec<_>>())?))
    } else {
        (None, None)
    };
    Ok(ExperimentSummary { config: config.clone(), results, rate_w1, rate_w2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: ExperimentKind, model: ModelSpec, ns: Vec<usize>, reps: usize) -> ExperimentConfig {
        ExperimentConfig { kind, ns, model, alpha: 0.05, reps, seed: 11, jobs: None, domain: SearchDomain::default() }
    }

    #[test]
    fn single_replication_is_stream_zero() {
        let c = config(ExperimentKind::Distance, ModelSpec::Gnp { p: 0.4 }, vec![12], 1);
        let m = run_replications(&c).unwrap();
        assert_eq!(m.rows.len(), 1);
        let direct = graph_trial(12, 0.4, &mut rng::stream(11, 0)).unwrap();
        assert_eq!(m.rows[0], vec![12.0, 0.0, direct[0], direct[1]]);
    }

    #[test]
    fn thread_count_does_not_change_output() {
        for model in [ModelSpec::Gnp { p: 0.5 }, ModelSpec::Permutation] {
            let mut c = config(ExperimentKind::Rate, model, vec![10, 20], 64);
            c.jobs = Some(1);
            let one = run_replications(&c).unwrap();
            c.jobs = Some(8);
            assert_eq!(one, run_replications(&c).unwrap());
        }
        let mut c = config(ExperimentKind::Coverage, ModelSpec::Gnp { p: 0.3 }, vec![20], 40);
        c.jobs = Some(1);
        let one = run_replications(&c).unwrap();
        c.jobs = Some(3);
        assert_eq!(one, run_replications(&c).unwrap());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = config(ExperimentKind::Coverage, ModelSpec::Gnp { p: 0.5 }, vec![10], 5);
        let mut c = base.clone();
        c.reps = 0;
        assert!(run_replications(&c).is_err());
        let mut c = base.clone();
        c.ns = vec![4];
        assert!(run_replications(&c).is_err());
        let mut c = base.clone();
        c.model = ModelSpec::Permutation;
        assert!(run_replications(&c).is_err());
        let mut c = base.clone();
        c.kind = ExperimentKind::Rate;
        assert!(run_replications(&c).is_err());
        let mut c = base;
        c.reps = MAX_CELLS;
        assert!(matches!(run_replications(&c), Err(Error::Size(_))));
    }

    #[test]
    fn summary_and_csv() {
        let c = config(ExperimentKind::Power, ModelSpec::Gnp { p: 0.5 }, vec![30], 20);
        let m = run_replications(&c).unwrap();
        let s = summarize(&c, &m).unwrap();
        let f = s.results[0].frequency.as_ref().unwrap();
        assert_eq!(f.reps, 20);
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["config"]["model"], "gnp");
        assert_eq!(json["config"]["seed"], 11);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("n,rep,empty,statistic_min"));
        assert_eq!(text.lines().count(), 21);
        assert!(text.lines().nth(1).unwrap().starts_with("30,0,"));
    }

    #[test]
    fn rate_summary_fits_both_coordinates() {
        let c = config(ExperimentKind::Rate, ModelSpec::Permutation, vec![20, 40, 80], 500);
        let s = summarize(&c, &run_replications(&c).unwrap()).unwrap();
        assert!(s.rate_w1.unwrap().slope.is_finite());
        assert_eq!(s.results.len(), 3);
        assert_eq!(s.results[2].seed, 13);
    }
}
