use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use graphstein::coupling::{
    bound_terms, bound_terms_exact, test_family, verify_identity, CouplingModel, EqualMarginalCoupling,
    ExchangeablePairCoupling, FinitePair, FulmanPair, GraphCoupling, IidCoins, LocalDependenceCoupling, SignFlipPair,
    SizeBiasCoupling, VerifyMode,
};
use graphstein::graph::io::{read_edge_list_file, write_edge_list};
use graphstein::graph::{count_edges, count_four_cycles, count_triangles, gen_gnp, gen_graphon};
use graphstein::homogeneity::{confidence_set, ConfidenceReport};
use graphstein::montecarlo::{
    convex_class_distance, permutation_trial, replicate, run_replications, summarize, ExperimentConfig, ExperimentKind,
    ModelSpec,
};
use graphstein::numeric::binom;
use graphstein::permstat::{
    builtin_matrices, descents, inversions, standardized_descent_inversion, MatrixKind, PermStatVector, Permutation,
};
use graphstein::{rng, Error, GraphonKernel, Result, SearchDomain};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Builtin, Cli, Command, DomainArgs, Kind, Mode, Pattern, SeedArg};

fn need_seed(s: &SeedArg, what: &str) -> Result<u64> {
    s.seed.ok_or_else(|| Error::Parameter(format!("{what} is stochastic: pass --seed or set GRAPHSTEIN_SEED")))
}

fn domain(d: &DomainArgs) -> SearchDomain {
    SearchDomain { p_lo: d.p_lo, p_hi: d.p_hi, grid_step: d.grid }
}

fn parse_kernel(spec: &str) -> Result<GraphonKernel> {
    match spec.split_once(':') {
        Some(("const", p)) => GraphonKernel::constant(
            p.parse().map_err(|_| Error::Parameter(format!("bad constant kernel value '{p}'")))?,
        ),
        Some(("block", path)) => GraphonKernel::from_json(&std::fs::read_to_string(path)?),
        _ => Err(Error::Parameter(format!("kernel must be const:P or block:FILE, got '{spec}'"))),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

struct Emitter {
    timestamp: bool,
}

impl Emitter {
    /// Writes a JSON report to `out` or stdout, adding a timestamp unless disabled.
    fn emit(&self, report: &impl Serialize, out: Option<&Path>) -> Result<()> {
        let mut v = serde_json::to_value(report)?;
        if self.timestamp {
            if let Value::Object(m) = &mut v {
                let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
                m.insert("timestamp".into(), json!(secs));
            }
        }
        let text = serde_json::to_string_pretty(&v)?;
        match out {
            Some(p) => {
                let mut f = create(p)?;
                writeln!(f, "{text}")?;
                f.flush()?;
            }
            None => writeln!(std::io::stdout().lock(), "{text}")?,
        }
        Ok(())
    }
}

pub fn dispatch(cli: &Cli) -> Result<u8> {
    let em = Emitter { timestamp: !cli.no_timestamp };
    let log = |msg: &str| {
        if cli.verbose {
            eprintln!("graphstein: {msg}");
        }
    };
    match &cli.command {
        Command::Gen { n, p, kernel, seed, out } => {
            let seed = need_seed(seed, "gen")?;
            let g = match (p, kernel) {
                (Some(p), _) => gen_gnp(*n, *p, seed)?,
                (None, Some(k)) => gen_graphon(*n, &parse_kernel(k)?, seed)?,
                (None, None) => return Err(Error::Parameter("gen needs --p or --kernel".into())),
            };
            log(&format!("sampled {n} vertices, {} edges", count_edges(&g)));
            match out {
                Some(path) => {
                    let mut f = create(path)?;
                    write_edge_list(&g, &mut f)?;
                    f.flush()?;
                }
                None => write_edge_list(&g, std::io::stdout().lock())?,
            }
            Ok(0)
        }
        Command::Count { input, pattern, out } => {
            let g = read_edge_list_file(input)?;
            let (key, value) = match pattern {
                Pattern::K2 => ("t1", count_edges(&g)),
                Pattern::K3 => ("triangles", count_triangles(&g)),
                Pattern::C4 => ("t2", count_four_cycles(&g)),
            };
            let mut m = serde_json::Map::new();
            m.insert("n".into(), json!(g.n()));
            m.insert(key.into(), json!(value));
            em.emit(&m, out.as_deref())?;
            Ok(0)
        }
        Command::Test { input, domain: d, out } | Command::Confset { input, domain: d, out } => {
            let g = read_edge_list_file(input)?;
            let set = confidence_set(&g, d.alpha, domain(d))?;
            let report = ConfidenceReport::new(g.n(), &set);
            log(&format!("{} interval(s), min statistic {}", set.intervals.len(), set.statistic_min));
            em.emit(&report, out.as_deref())?;
            let testing = matches!(cli.command, Command::Test { .. });
            Ok(if testing && report.reject { 1 } else { 0 })
        }
        Command::Permstat { perm, input, n, reps, seed, jobs, csv, out } => {
            if let (Some(n), Some(reps)) = (n, reps) {
                let seed = need_seed(seed, "random permutations")?;
                let pts = replicate(*reps, seed, *jobs, |_, r| permutation_trial(*n, r))?;
                if let Some(path) = csv {
                    let mut f = create(path)?;
                    writeln!(f, "rep,w1,w2")?;
                    for (r, p) in pts.iter().enumerate() {
                        writeln!(f, "{r},{:.16e},{:.16e}", p[0], p[1])?;
                    }
                    f.flush()?;
                }
                let report = json!({
                    "n": n, "reps": reps, "seed": seed,
                    "distance": convex_class_distance(&pts)?,
                });
                em.emit(&report, out.as_deref())?;
                return Ok(0);
            }
            let pi = match (perm, input, n) {
                (Some(s), _, _) => Permutation::parse(s)?,
                (None, Some(path), _) => Permutation::parse(&std::fs::read_to_string(path)?)?,
                (None, None, Some(n)) => {
                    Permutation::random(*n, &mut rng::from_seed(need_seed(seed, "a random permutation")?))
                }
                _ => return Err(Error::Parameter("permstat needs --perm, --in or --n".into())),
            };
            em.emit(&permstat_report(&pi)?, out.as_deref())?;
            Ok(0)
        }
        Command::VerifyCoupling { builtin, n, p, mode, reps, seed, bounds, out } => {
            let model = build_coupling(*builtin, *n, *p)?;
            let mode = match mode {
                Mode::Exact => VerifyMode::Exact,
                Mode::Mc => VerifyMode::MonteCarlo { reps: *reps, seed: need_seed(seed, "--mode mc")? },
            };
            log(&format!("verifying {builtin:?} (n={n}, p={p})"));
            let report = verify_identity(model.as_ref(), &test_family(model.dim()), mode)?;
            let mut v = serde_json::to_value(&report)?;
            v["builtin"] = json!(builtin.to_possible_value().map(|v| v.get_name().to_owned()));
            v["n"] = json!(n);
            v["p"] = json!(p);
            if *bounds {
                let terms = match mode {
                    VerifyMode::Exact => bound_terms_exact(model.as_ref())?,
                    VerifyMode::MonteCarlo { reps, seed } => bound_terms(model.as_ref(), reps.max(3), seed)?,
                };
                v["bound_terms"] = serde_json::to_value(&terms)?;
            }
            em.emit(&v, out.as_deref())?;
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::Experiment { kind, n, p, kernel, permutations, domain: d, reps, seed, jobs, csv, out } => {
            let model = match (p, kernel, permutations) {
                (_, _, true) => ModelSpec::Permutation,
                (Some(p), None, false) => ModelSpec::Gnp { p: *p },
                (None, Some(k), false) => ModelSpec::Graphon { label: k.clone(), kernel: parse_kernel(k)? },
                _ => return Err(Error::Parameter("experiment needs one of --p, --kernel, --permutations".into())),
            };
            let config = ExperimentConfig {
                kind: match kind {
                    Kind::Coverage => ExperimentKind::Coverage,
                    Kind::Power => ExperimentKind::Power,
                    Kind::Distance => ExperimentKind::Distance,
                    Kind::Rate => ExperimentKind::Rate,
                },
                ns: n.clone(),
                model,
                alpha: d.alpha,
                reps: *reps,
                seed: need_seed(seed, "experiment")?,
                jobs: *jobs,
                domain: domain(d),
            };
            log(&format!("running {kind:?} over n = {n:?}, {reps} replications each"));
            let samples = run_replications(&config)?;
            if let Some(path) = csv {
                let mut f = create(path)?;
                samples.write_csv(&mut f)?;
                f.flush()?;
            }
            em.emit(&summarize(&config, &samples)?, out.as_deref())?;
            Ok(0)
        }
    }
}

fn permstat_report(pi: &Permutation) -> Result<Value> {
    let n = pi.len();
    let (w1, w2) = standardized_descent_inversion(pi)?;
    let mats = vec![builtin_matrices(n, MatrixKind::Descent)?, builtin_matrices(n, MatrixKind::Inversion)?];
    let via = PermStatVector::evaluate(&mats, pi)?;
    Ok(json!({
        "n": n,
        "permutation": pi.to_one_line(),
        "descents": descents(pi),
        "inversions": inversions(pi),
        "w": [w1, w2],
        // Σ_{i<j} M_{π(i)π(j)}: the standardised statistics of π⁻¹
        "matrix_statistics": via,
    }))
}

fn build_coupling(b: Builtin, n: usize, p: f64) -> Result<Box<dyn CouplingModel>> {
    Ok(match b {
        Builtin::Graph => Box::new(GraphCoupling::new(n, p)?),
        Builtin::Coins => Box::new(LocalDependenceCoupling::new(IidCoins::new(n, p)?)?),
        Builtin::SignFlip => {
            let pair = SignFlipPair::new(n)?;
            let lambda = pair.lambda();
            Box::new(ExchangeablePairCoupling::scalar(pair, lambda)?)
        }
        Builtin::Reflection => {
            let pair = FinitePair::new(vec![(0.5, vec![1.0], vec![-1.0]), (0.5, vec![-1.0], vec![1.0])])?;
            Box::new(ExchangeablePairCoupling::scalar(pair, 2.0)?)
        }
        Builtin::SizeBias => {
            if n == 0 || n > 1000 || !(p > 0.0 && p <= 1.0) {
                return Err(Error::Parameter(format!(
                    "size-bias builtin needs 1 <= n <= 1000 and 0 < p <= 1, got n={n}, p={p}"
                )));
            }
            let atoms = (0..=n)
                .map(|k| {
                    let mass = binom(n as u64, k as u64) as f64 * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
                    (mass, vec![k as f64])
                })
                .filter(|a| a.0 > 0.0)
                .collect();
            Box::new(SizeBiasCoupling::from_pmf(atoms)?)
        }
        Builtin::Fulman => {
            let pair = FulmanPair::descent_inversion(n)?;
            let lambda = pair.lambda();
            Box::new(EqualMarginalCoupling::new(pair, lambda)?)
        }
    })
}
