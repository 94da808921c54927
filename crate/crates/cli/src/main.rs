use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lpplab::construct::{
    build_brw_path, build_heavy_path, heavy_params, verify_apriori, ParamOverride,
};
use lpplab::lattice::LatticeWeights;
use lpplab::stats::{run_experiment, summarize, ExperimentConfig};
use lpplab::{io, lpp, with_threads, EnvironmentKind, EnvironmentSpec, Error, WeightField};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

const EXIT_OTHER: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_SIZE: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;

#[derive(Parser)]
#[command(name = "lpplab", version, about = "Last passage percolation in hierarchical random environments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact last passage value, optionally with the geodesic.
    Solve(SolveArgs),
    /// Constructive lower-bound path.
    Construct(ConstructArgs),
    /// Replicate experiment from a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    #[value(name = "iid-pareto2")]
    IidPareto2,
    #[value(name = "iid-logcorrected")]
    IidLogcorrected,
    Brw,
    Poisson,
}

impl From<Model> for EnvironmentKind {
    fn from(m: Model) -> Self {
        match m {
            Model::IidPareto2 => EnvironmentKind::IidPareto2,
            Model::IidLogcorrected => EnvironmentKind::IidLogCorrected,
            Model::Brw => EnvironmentKind::Brw,
            Model::Poisson => EnvironmentKind::PoissonLayers,
        }
    }
}

#[derive(Args)]
struct EnvArgs {
    #[arg(long, value_enum, default_value = "iid-pareto2")]
    model: Model,
    #[arg(long)]
    n: u64,
    /// Codimension; the lattice has dimension d + 1.
    #[arg(long, default_value_t = 1)]
    d: u32,
    #[arg(long)]
    beta: Option<f64>,
    /// Master seed; required whenever randomness is drawn.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl EnvArgs {
    fn spec(&self) -> Result<EnvironmentSpec, Failure> {
        let seed = self
            .seed
            .ok_or_else(|| Failure::invalid(anyhow!("--seed is required")))?;
        let mut spec = EnvironmentSpec::new(self.model.into(), self.n, seed).with_d(self.d);
        if let Some(b) = self.beta {
            spec = spec.with_beta(b);
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    env: EnvArgs,
    /// Also write the geodesic and its scale decomposition.
    #[arg(long)]
    geodesic: bool,
}

#[derive(Args)]
struct ConstructArgs {
    #[command(flatten)]
    env: EnvArgs,
    #[arg(long)]
    s: Option<u32>,
    #[arg(long = "M")]
    levels: Option<u32>,
    /// Use the asymptotic parameter choices instead of --s/--M.
    #[arg(long, conflicts_with_all = ["s", "levels"])]
    paper_params: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config thread count.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn invalid(error: anyhow::Error) -> Self {
        Self {
            code: EXIT_INVALID,
            error,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Domain(_) | Error::Unsupported(_) => EXIT_INVALID,
            Error::Size(_) => EXIT_SIZE,
            Error::Degenerate { .. } | Error::Infeasible(_) => EXIT_DEGENERATE,
            Error::InsufficientData(_) | Error::Internal(_) => EXIT_OTHER,
        };
        Self {
            code,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self {
            code: EXIT_OTHER,
            error,
        }
    }
}

#[derive(Serialize)]
struct OutputDigest {
    file: String,
    bytes: u64,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: Value,
    started_unix_ms: u128,
    finished_unix_ms: u128,
    outputs: Vec<OutputDigest>,
}

/// Collects output files under one directory and records their digests.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write<F>(&mut self, name: &str, f: F) -> Result<(), Failure>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), Failure>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(anyhow::Error::from)?;
            w.write_all(b"\n").map_err(anyhow::Error::from)?;
            Ok(())
        })
    }

    fn manifest(self, command: &'static str, config: Value, started: u128) -> Result<(), Failure> {
        let mut outputs = Vec::with_capacity(self.written.len());
        for name in &self.written {
            let bytes = fs::read(self.dir.join(name)).with_context(|| format!("reading {name}"))?;
            outputs.push(OutputDigest {
                file: name.clone(),
                bytes: bytes.len() as u64,
                sha256: format!("{:x}", Sha256::digest(&bytes)),
            });
        }
        let manifest = RunManifest {
            tool: "lpplab",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            started_unix_ms: started,
            finished_unix_ms: now_ms(),
            outputs,
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(anyhow::Error::from)? + "\n";
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn solve(args: &SolveArgs) -> Result<(), Failure> {
    let started = now_ms();
    let spec = args.env.spec()?;
    let config = json!({ "environment": spec, "geodesic": args.geodesic, "threads": args.env.threads });
    if spec.kind == EnvironmentKind::PoissonLayers {
        if args.geodesic {
            return Err(Error::Unsupported("the poisson model has no lattice geodesic".into()).into());
        }
        let layers = lpplab::env::gen_poisson_layers(spec.n, spec.layer_count(), spec.seed)?;
        let value = with_threads(args.env.threads, || lpp::poisson_last_passage(&layers))??;
        let mut out = Outputs::new(&args.env.out)?;
        out.json("summary.json", &json!({ "value": value, "points": layers.total_points() }))?;
        println!("{value}");
        return out.manifest("solve", config, started);
    }
    check_lattice_budget(&spec)?;
    let field = WeightField::new(spec)?;
    let mut out = Outputs::new(&args.env.out)?;
    if args.geodesic {
        let res = with_threads(args.env.threads, || lpp::geodesic(&field))??;
        let path = res.geodesic.as_ref().expect("geodesic requested");
        out.write(&format!("geodesic_{}.csv", spec.seed), |w| Ok(io::write_geodesic(w, path)?))?;
        out.write("scales.csv", |w| Ok(io::write_scale_sums(w, &res.scale_sums)?))?;
        out.json(
            "summary.json",
            &json!({ "value": res.value, "transversal": res.transversal, "path_vertices": path.len() }),
        )?;
        println!("{}", res.value);
    } else {
        let value = with_threads(args.env.threads, || lpp::last_passage(&field))??;
        out.json("summary.json", &json!({ "value": value }))?;
        println!("{value}");
    }
    out.manifest("solve", config, started)
}

/// Rejects oversize grids before any allocation.
fn check_lattice_budget(spec: &EnvironmentSpec) -> Result<(), Failure> {
    let side = spec.side().unwrap_or(u32::MAX);
    let limit = match spec.d {
        1 => lpp::MAX_SIDE_2D,
        2 => lpp::MAX_SIDE_3D,
        d => return Err(Error::Unsupported(format!("d = {d} has no lattice solver")).into()),
    };
    if side > limit {
        return Err(Error::Size(format!(
            "n = {} with d = {} exceeds the solver budget (side {limit})",
            spec.n, spec.d
        ))
        .into());
    }
    Ok(())
}

fn construct(args: &ConstructArgs) -> Result<(), Failure> {
    let started = now_ms();
    let kind: EnvironmentKind = args.env.model.into();
    match kind {
        EnvironmentKind::IidPareto2 => construct_heavy(args, started),
        EnvironmentKind::Brw => construct_brw(args, started),
        other => Err(Error::Unsupported(format!("no path construction for {other}")).into()),
    }
}

fn construct_heavy(args: &ConstructArgs, started: u128) -> Result<(), Failure> {
    let over = match (args.paper_params, args.s, args.levels) {
        (true, _, _) => None,
        (false, Some(s), Some(m)) => Some(ParamOverride::new(s, m)),
        _ => return Err(Failure::invalid(anyhow!("give --s and --M, or --paper-params"))),
    };
    if args.env.d != 1 {
        return Err(Error::Unsupported("the heavy-tail construction is planar".into()).into());
    }
    let params = heavy_params(args.env.n, over)?;
    if params.is_degenerate() {
        return Err(Error::Degenerate {
            level: 0,
            reason: format!(
                "M=0: the asymptotic choice s = round(100 log2 log2 n) = {} leaves \
                 floor(log2 n / (10 s)) = 0 levels at n = {}; pass --s and --M",
                params.s, params.n
            ),
        }
        .into());
    }
    let spec = args.env.spec()?;
    let field = WeightField::new(spec)?;
    let (path, sets) = with_threads(args.env.threads, || build_heavy_path(&field, &params))??;
    let report = verify_apriori(&sets, &params);
    let constructed = path.weight(&field);
    let exact = if field.side() <= lpp::FULL_TABLE_MAX_SIDE {
        Some(with_threads(args.env.threads, || lpp::last_passage(&field))??)
    } else {
        None
    };
    let mut out = Outputs::new(&args.env.out)?;
    out.write(&format!("levels_{}.csv", spec.seed), |w| Ok(io::write_levels(w, &sets)?))?;
    out.write(&format!("geodesic_{}.csv", spec.seed), |w| Ok(io::write_geodesic(w, &path)?))?;
    let hit_fractions: Vec<Option<f64>> = (0..sets.rects.len()).map(|l| sets.hit_fraction(l)).collect();
    let level_sizes: Vec<usize> = sets.levels.iter().map(Vec::len).collect();
    out.json(
        "summary.json",
        &json!({
            "params": params,
            "constructed_L": constructed,
            "L": exact,
            "level_sizes": level_sizes,
            "hit_fractions": hit_fractions,
            "apriori_ok": report.all_ok(),
            "apriori_failures": report.failures().collect::<Vec<_>>(),
        }),
    )?;
    let config = json!({ "environment": spec, "params": params, "threads": args.env.threads });
    out.manifest("construct", config, started)?;
    println!("{constructed}");
    if !report.all_ok() {
        return Err(anyhow!("a priori checks failed; see summary.json").into());
    }
    Ok(())
}

fn construct_brw(args: &ConstructArgs, started: u128) -> Result<(), Failure> {
    if args.paper_params || args.levels.is_some() {
        return Err(Failure::invalid(anyhow!(
            "the brw construction takes --s only; the level count is log2 n / s"
        )));
    }
    let s = args
        .s
        .ok_or_else(|| Failure::invalid(anyhow!("--s is required")))?;
    let spec = args.env.spec()?;
    check_lattice_budget(&spec)?;
    let field = WeightField::new(spec)?;
    let c = with_threads(args.env.threads, || build_brw_path(&field, s))??;
    let mut out = Outputs::new(&args.env.out)?;
    out.write(&format!("skeletons_{}.csv", spec.seed), |w| Ok(io::write_skeletons(w, &c.choices)?))?;
    out.write(&format!("geodesic_{}.csv", spec.seed), |w| Ok(io::write_geodesic(w, &c.path)?))?;
    out.json(
        "summary.json",
        &json!({
            "s": s,
            "constructed_L": c.weight,
            "l1": c.l1,
            "l2": c.l2,
            "squares_per_level": c.squares_per_level,
            "skeleton_points": c.points.len(),
        }),
    )?;
    let config = json!({ "environment": spec, "s": s, "threads": args.env.threads });
    out.manifest("construct", config, started)?;
    println!("{}", c.weight);
    Ok(())
}

const CONFIG_KEYS: &[&str] = &[
    "environment",
    "n_list",
    "replicates",
    "measure",
    "construction",
    "seed",
    "threads",
    "tail_thresholds",
];
const ENVIRONMENT_KEYS: &[&str] = &["kind", "d", "params"];
const PARAMS_KEYS: &[&str] = &["t0", "beta", "layer_count"];
const CONSTRUCTION_KEYS: &[&str] = &["s", "M", "lambda", "rho"];

/// Dotted paths of every key the config schema does not know.
fn unknown_keys(v: &Value) -> Vec<String> {
    fn scan(v: Option<&Value>, prefix: &str, known: &[&str], out: &mut Vec<String>) {
        if let Some(Value::Object(map)) = v {
            out.extend(
                map.keys()
                    .filter(|k| !known.contains(&k.as_str()))
                    .map(|k| format!("{prefix}{k}")),
            );
        }
    }
    let mut out = Vec::new();
    scan(Some(v), "", CONFIG_KEYS, &mut out);
    let env = v.get("environment");
    scan(env, "environment.", ENVIRONMENT_KEYS, &mut out);
    scan(env.and_then(|e| e.get("params")), "environment.params.", PARAMS_KEYS, &mut out);
    scan(v.get("construction"), "construction.", CONSTRUCTION_KEYS, &mut out);
    out
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::invalid(anyhow!("{}: {e}", path.display())))?;
    let unknown = unknown_keys(&raw);
    if !unknown.is_empty() {
        return Err(Failure::invalid(anyhow!(
            "{}: unknown config keys: {}",
            path.display(),
            unknown.join(", ")
        )));
    }
    serde_json::from_value(raw).map_err(|e| Failure::invalid(anyhow!("{}: {e}", path.display())))
}

fn experiment(args: &ExperimentArgs) -> Result<(), Failure> {
    let started = now_ms();
    let mut config = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.threads.is_some() {
        config.threads = args.threads;
    }
    let records = run_experiment(&config)?;
    let summary = summarize(&config, &records);
    let mut out = Outputs::new(&args.out)?;
    out.write("records.csv", |w| Ok(io::write_records(w, &records)?))?;
    out.write("scales.csv", |w| Ok(io::write_scale_table(w, &records)?))?;
    out.json("summary.json", &summary)?;
    let echo = serde_json::to_value(&config).map_err(anyhow::Error::from)?;
    out.manifest("experiment", echo, started)?;
    println!("{} records written to {}", records.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Construct(a) => construct(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
