//! Replicate experiments and the estimators applied to their output.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::construct::{build_brw_path, build_heavy_path, heavy_params, ParamOverride};
use crate::env::{gen_poisson_layers, EnvParams, EnvironmentKind, EnvironmentSpec, WeightField};
use crate::error::{domain, Error, Result};
use crate::lattice::LatticeWeights;
use crate::lpp::{self, ScaleKey, MAX_CHAIN_POINTS};
use crate::par::{map_collect, with_threads};
use crate::rng::replicate_seed;

/// BRW fields up to this side are filled densely before solving.
const BRW_DENSE_MAX_SIDE: u32 = 1 << 11;

/// Environment of an experiment; size and seed are supplied per replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentTemplate {
    pub kind: EnvironmentKind,
    #[serde(default = "one")]
    pub d: u32,
    #[serde(default)]
    pub params: EnvParams,
}

fn one() -> u32 {
    1
}

impl EnvironmentTemplate {
    pub fn new(kind: EnvironmentKind) -> Self {
        Self {
            kind,
            d: 1,
            params: EnvParams::default(),
        }
    }

    pub fn instantiate(&self, n: u64, seed: u64) -> EnvironmentSpec {
        EnvironmentSpec {
            kind: self.kind,
            n,
            d: self.d,
            seed,
            params: self.params,
        }
    }
}

/// Quantities recorded for each replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Value,
    Geodesic,
    ScaleSums,
    Transversal,
    ConstructedPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvironmentTemplate,
    pub n_list: Vec<u64>,
    pub replicates: u32,
    #[serde(default = "default_measures")]
    pub measure: Vec<Measure>,
    /// Separation and level count for constructed paths; the BRW uses `s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<ParamOverride>,
    pub seed: u64,
    /// Worker threads; `None` uses every available core.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Thresholds `t` for the tail frequencies `P(|L − mean|/n > t)`.
    #[serde(default = "default_thresholds")]
    pub tail_thresholds: Vec<f64>,
}

fn default_measures() -> Vec<Measure> {
    vec![Measure::Value]
}

fn default_thresholds() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0]
}

impl ExperimentConfig {
    pub fn new(environment: EnvironmentTemplate, n_list: Vec<u64>, replicates: u32, seed: u64) -> Self {
        Self {
            environment,
            n_list,
            replicates,
            measure: default_measures(),
            construction: None,
            seed,
            threads: None,
            tail_thresholds: default_thresholds(),
        }
    }

    pub fn with_measures(mut self, measures: &[Measure]) -> Self {
        self.measure = measures.to_vec();
        self
    }

    pub fn with_construction(mut self, c: ParamOverride) -> Self {
        self.construction = Some(c);
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    fn wants(&self, m: Measure) -> bool {
        self.measure.contains(&m)
    }

    fn needs_geodesic(&self) -> bool {
        self.wants(Measure::Geodesic) || self.wants(Measure::ScaleSums) || self.wants(Measure::Transversal)
    }

    /// Checks every size against the solver budgets before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(domain("replicates must be at least 1"));
        }
        if self.n_list.is_empty() {
            return Err(domain("n_list is empty"));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain("n_list must be strictly increasing"));
        }
        if self.threads == Some(0) {
            return Err(domain("threads must be at least 1"));
        }
        let kind = self.environment.kind;
        for &n in &self.n_list {
            let spec = self.environment.instantiate(n, self.seed);
            spec.validate()?;
            if kind == EnvironmentKind::PoissonLayers {
                if self.needs_geodesic() || self.wants(Measure::ConstructedPath) {
                    return Err(Error::Unsupported(
                        "poisson experiments record the value only".into(),
                    ));
                }
                let expected: f64 = (0..spec.layer_count()).map(|k| 4f64.powi(k as i32)).sum();
                if expected > MAX_CHAIN_POINTS as f64 {
                    return Err(Error::Size(format!(
                        "n = {n}: about {expected:.0} poisson points exceed {MAX_CHAIN_POINTS}"
                    )));
                }
                continue;
            }
            let side = spec.side().expect("validated");
            let (limit, dim) = if spec.d == 1 {
                (lpp::MAX_SIDE_2D, 2)
            } else if spec.d == 2 {
                (lpp::MAX_SIDE_3D, 3)
            } else {
                return Err(Error::Unsupported(format!("d = {} has no lattice solver", spec.d)));
            };
            if side > limit {
                return Err(Error::Size(format!(
                    "n = {n} exceeds the solver budget in dimension {dim}"
                )));
            }
            if self.wants(Measure::Transversal) && spec.d != 1 {
                return Err(Error::Unsupported("transversal fluctuation needs d = 1".into()));
            }
            if self.wants(Measure::ConstructedPath) {
                self.construction_for(&spec)?;
            }
        }
        Ok(())
    }

    fn construction_for(&self, spec: &EnvironmentSpec) -> Result<Construction> {
        let c = self
            .construction
            .ok_or_else(|| domain("constructed_path needs a construction block"))?;
        match (spec.kind, spec.d) {
            (EnvironmentKind::IidPareto2, 1) => {
                let params = heavy_params(spec.n, Some(c))?;
                Ok(Construction::Heavy(params))
            }
            (EnvironmentKind::Brw, 1) => {
                if c.s == 0 || c.s > spec.n.ilog2() {
                    return Err(Error::Infeasible(format!(
                        "s = {} must lie in 1..=log2 n for n = {}",
                        c.s, spec.n
                    )));
                }
                Ok(Construction::Brw(c.s))
            }
            (kind, d) => Err(Error::Unsupported(format!(
                "no path construction for {kind} with d = {d}"
            ))),
        }
    }
}

enum Construction {
    Heavy(crate::construct::MultiScaleParams),
    Brw(u32),
}

/// One replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub model: EnvironmentKind,
    pub n: u64,
    pub d: u32,
    pub replicate: u32,
    pub seed: u64,
    #[serde(rename = "L")]
    pub value: f64,
    pub transversal: Option<u64>,
    #[serde(rename = "constructed_L")]
    pub constructed: Option<f64>,
    /// Wall time; excluded from reproducibility comparisons.
    pub runtime_ms: Option<f64>,
    #[serde(skip)]
    pub scale_sums: BTreeMap<ScaleKey, f64>,
}

impl ReplicateRecord {
    /// Equality of everything except the wall time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        Self {
            runtime_ms: None,
            ..self.clone()
        } == Self {
            runtime_ms: None,
            ..other.clone()
        }
    }
}

/// Runs every replicate of every size and returns the records sorted by
/// `(n, replicate)`. Tables are identical at any thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ReplicateRecord>> {
    config.validate()?;
    let jobs: Vec<(u64, u32)> = config
        .n_list
        .iter()
        .flat_map(|&n| (0..config.replicates).map(move |i| (n, i)))
        .collect();
    let mut records = run_jobs(config, &jobs)?;
    records.sort_by_key(|r| (r.n, r.replicate));
    Ok(records)
}

fn run_jobs(config: &ExperimentConfig, jobs: &[(u64, u32)]) -> Result<Vec<ReplicateRecord>> {
    with_threads(config.threads, || {
        map_collect(jobs, |&(n, i)| run_replicate(config, n, i))
            .into_iter()
            .collect()
    })?
}

fn run_replicate(config: &ExperimentConfig, n: u64, index: u32) -> Result<ReplicateRecord> {
    let start = Instant::now();
    let seed = replicate_seed(config.seed, n, index as u64);
    let spec = config.environment.instantiate(n, seed);
    let mut record = ReplicateRecord {
        model: spec.kind,
        n,
        d: spec.d,
        replicate: index,
        seed,
        value: 0.0,
        transversal: None,
        constructed: None,
        runtime_ms: None,
        scale_sums: BTreeMap::new(),
    };
    if spec.kind == EnvironmentKind::PoissonLayers {
        let layers = gen_poisson_layers(n, spec.layer_count(), seed)?;
        record.value = lpp::poisson_last_passage(&layers)?;
    } else {
        let mut field = WeightField::new(spec)?;
        if spec.kind == EnvironmentKind::Brw && spec.d == 1 && field.side() <= BRW_DENSE_MAX_SIDE {
            field.materialize()?;
        }
        if config.needs_geodesic() {
            let res = lpp::geodesic(&field)?;
            record.value = res.value;
            if config.wants(Measure::Transversal) {
                record.transversal = res.transversal;
            }
            if config.wants(Measure::ScaleSums) {
                record.scale_sums = res.scale_sums;
            }
        } else {
            record.value = lpp::last_passage(&field)?;
        }
        if config.wants(Measure::ConstructedPath) {
            record.constructed = Some(match config.construction_for(&spec)? {
                Construction::Heavy(params) => build_heavy_path(&field, &params)?.0.weight(&field),
                Construction::Brw(s) => build_brw_path(&field, s)?.path.weight(&field),
            });
        }
    }
    record.runtime_ms = Some((start.elapsed().as_secs_f64() * 1e6).round() / 1e3);
    Ok(record)
}

/// Least-squares slope with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    /// Effective exponent `p` in `mean ≈ c n (log2 n)^p`.
    pub exponent: f64,
    pub stderr: f64,
    pub intercept: f64,
}

/// Regresses `log2(mean/n)` on `log2 log2 n`.
pub fn fit_log_correction(ns: &[u64], means: &[f64]) -> Result<LogFit> {
    if ns.len() != means.len() {
        return Err(domain("sizes and means differ in length"));
    }
    if ns.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "the fit needs at least 3 sizes, got {}",
            ns.len()
        )));
    }
    if ns.iter().any(|&n| n < 4) || means.iter().any(|&m| !(m > 0.0)) {
        return Err(domain("the fit needs n ≥ 4 and positive means"));
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).log2().log2()).collect();
    let ys: Vec<f64> = ns
        .iter()
        .zip(means)
        .map(|(&n, &m)| (m / n as f64).log2())
        .collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-300 {
        return Err(domain("all sizes are equal; the slope is not identified"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (rss / (k - 2.0) / sxx).sqrt();
    Ok(LogFit {
        exponent: slope,
        stderr,
        intercept,
    })
}

/// Empirical tail frequency with a 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub t: f64,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub exceed: u64,
    pub samples: u64,
}

const Z95: f64 = 1.959_963_984_540_054;

fn wilson(k: u64, n: u64) -> (f64, f64) {
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// `P(|L − mean| / n > t)` for each threshold.
pub fn concentration_tail(samples: &[f64], n: u64, ts: &[f64]) -> Result<Vec<TailPoint>> {
    if samples.len() < 100 {
        return Err(Error::InsufficientData(format!(
            "tail frequencies need at least 100 samples, got {}",
            samples.len()
        )));
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let total = samples.len() as u64;
    Ok(ts
        .iter()
        .map(|&t| {
            let exceed = samples
                .iter()
                .filter(|&&x| (x - mean).abs() / n as f64 > t)
                .count() as u64;
            let (ci_low, ci_high) = wilson(exceed, total);
            TailPoint {
                t,
                frequency: exceed as f64 / total as f64,
                ci_low,
                ci_high,
                exceed,
                samples: total,
            }
        })
        .collect())
}

/// Sample variance of `L` at one size, with jackknife standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariancePoint {
    pub n: u64,
    pub replicates: u64,
    pub variance: f64,
    pub variance_se: f64,
    /// `Var(L) / n²`.
    pub ratio: f64,
    pub ratio_se: f64,
}

/// Unbiased variance and its delete-one jackknife standard error.
pub fn variance_with_jackknife(xs: &[f64]) -> (f64, f64) {
    let k = xs.len();
    let kf = k as f64;
    let mean = xs.iter().sum::<f64>() / kf;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let var = ss / (kf - 1.0);
    if k < 3 {
        return (var, f64::NAN);
    }
    // leaving out x_i removes d_i² plus the shift of the mean
    let loo: Vec<f64> = xs
        .iter()
        .map(|x| {
            let d = x - mean;
            (ss - d * d - d * d / (kf - 1.0)) / (kf - 2.0)
        })
        .collect();
    let loo_mean = loo.iter().sum::<f64>() / kf;
    let se = ((kf - 1.0) / kf * loo.iter().map(|v| (v - loo_mean).powi(2)).sum::<f64>()).sqrt();
    (var, se)
}

/// Variance curve from per-size samples.
pub fn variance_curve_from(groups: &[(u64, Vec<f64>)]) -> Result<Vec<VariancePoint>> {
    if groups.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "the variance curve needs at least 2 sizes, got {}",
            groups.len()
        )));
    }
    groups
        .iter()
        .map(|(n, xs)| {
            if xs.len() < 100 {
                return Err(Error::InsufficientData(format!(
                    "n = {n} has {} replicates; at least 100 are needed",
                    xs.len()
                )));
            }
            let (variance, variance_se) = variance_with_jackknife(xs);
            let n2 = (*n as f64).powi(2);
            Ok(VariancePoint {
                n: *n,
                replicates: xs.len() as u64,
                variance,
                variance_se,
                ratio: variance / n2,
                ratio_se: variance_se / n2,
            })
        })
        .collect()
}

/// `Var(L)` and `Var(L)/n²` per size.
pub fn variance_curve(records: &[ReplicateRecord]) -> Result<Vec<VariancePoint>> {
    variance_curve_from(&group_by_n(records))
}

fn group_by_n(records: &[ReplicateRecord]) -> Vec<(u64, Vec<f64>)> {
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry(r.n).or_default().push(r.value);
    }
    groups.into_iter().collect()
}

/// Per-size aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: u64,
    pub replicates: u64,
    pub mean: f64,
    pub variance: f64,
    pub mean_over_n: f64,
    /// Median of `L / (n log2 n)`.
    pub median_over_n_log_n: Option<f64>,
    pub mean_constructed: Option<f64>,
    pub mean_transversal: Option<f64>,
    pub tails: Option<Vec<TailPoint>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub model: EnvironmentKind,
    pub d: u32,
    pub seed: u64,
    pub sizes: Vec<SizeSummary>,
    /// Slope of `log2(mean/n)` against `log2 log2 n`, labelled an
    /// effective exponent since log log factors are not separated out.
    pub effective_exponent: Option<LogFit>,
    pub variance_curve: Option<Vec<VariancePoint>>,
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Aggregates a record table. Estimators whose preconditions fail are left
/// out rather than reported as errors.
pub fn summarize(config: &ExperimentConfig, records: &[ReplicateRecord]) -> ExperimentSummary {
    let mut sizes = Vec::new();
    for (n, values) in group_by_n(records) {
        let rows: Vec<&ReplicateRecord> = records.iter().filter(|r| r.n == n).collect();
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let variance = if values.len() > 1 {
            values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        let log_n = (n as f64).log2();
        let normalized: Vec<f64> = values.iter().map(|v| v / (n as f64 * log_n)).collect();
        let mean_of = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
        sizes.push(SizeSummary {
            n,
            replicates: values.len() as u64,
            mean,
            variance,
            mean_over_n: mean / n as f64,
            median_over_n_log_n: if n >= 2 { median(&normalized) } else { None },
            mean_constructed: mean_of(rows.iter().filter_map(|r| r.constructed).collect()),
            mean_transversal: mean_of(rows.iter().filter_map(|r| r.transversal.map(|t| t as f64)).collect()),
            tails: concentration_tail(&values, n, &config.tail_thresholds).ok(),
        });
    }
    let ns: Vec<u64> = sizes.iter().map(|s| s.n).collect();
    let means: Vec<f64> = sizes.iter().map(|s| s.mean).collect();
    ExperimentSummary {
        model: config.environment.kind,
        d: config.environment.d,
        seed: config.seed,
        sizes,
        effective_exponent: fit_log_correction(&ns, &means).ok(),
        variance_curve: variance_curve(records).ok(),
    }
}
