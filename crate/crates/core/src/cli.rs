//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 oracle failure.
//! Options may also come from a TOML file given with `--config`, whose keys
//! are the long flag names with dashes replaced by underscores; flags given
//! on the command line take precedence.

pub mod experiment;

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::generators::{Gamma, Hypothesis, ModelParams, Sample};
use crate::graph::{header_value, load_edge_list, save_edge_list, Graph};
use crate::inference::{
    calibrate_constant, default_t_n, detect, estimate_k, identify, FMode, IdentificationReport,
};
use crate::oracle;
use crate::triangles::triangle_statistics;
use crate::weights::{load_weights, render_weights, save_weights, VertexType, WeightMode, WeightSequence};
use crate::FORMAT_TAG;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "geodetect", version, about = "Weighted-triangle detection of planted geometric communities")]
struct Cli {
    /// Base seed; replica r uses seed ^ r.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML file with default option values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a graph; writes graph.edges, weights.tsv and ground_truth.tsv.
    Generate(ModelArgs),
    /// Triangle count, W(G) and all W(a); writes stats.json and per_vertex.csv.
    Stats(InputArgs),
    /// Weighted-triangle test; writes detection.json.
    Detect {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        opts: InferenceArgs,
    },
    /// Per-vertex identification; writes identification.json and .csv.
    Identify {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        opts: InferenceArgs,
    },
    /// Fit the identification constant on a labeled sample; writes calibration.json.
    #[command(name = "calibrate-C")]
    CalibrateC {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        opts: InferenceArgs,
    },
    /// Community-size estimates from identified weights; writes size_estimate.json.
    EstimateK {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        opts: InferenceArgs,
    },
    /// Detection, identification and size estimation in one pass; writes pipeline.json.
    Pipeline {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        opts: InferenceArgs,
    },
    /// Replicated experiments; writes CSV tables and a JSON summary.
    Experiment(ExperimentArgs),
    /// Run every oracle check; writes oracle_report.json.
    OracleCheck,
}

#[derive(Debug, Args, Default)]
struct ModelArgs {
    /// `h0` or `h1`; inferred from `k` when absent.
    #[arg(long, value_parser = parse_hypothesis)]
    hypothesis: Option<Hypothesis>,
    #[arg(long)]
    n: Option<usize>,
    /// Community size; 0 samples the null model.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    w0: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    /// Positive number or `inf` for the threshold rule.
    #[arg(long)]
    gamma: Option<Gamma>,
    /// Sparse-community connection rule.
    #[arg(long)]
    sparse: bool,
    /// `iid_pareto` or `deterministic_quantile`.
    #[arg(long)]
    weight_mode: Option<WeightMode>,
    /// Disable the 1/(1 + C1) correction.
    #[arg(long)]
    no_correction: bool,
}

fn parse_hypothesis(s: &str) -> std::result::Result<Hypothesis, String> {
    match s.to_ascii_lowercase().as_str() {
        "h0" => Ok(Hypothesis::H0),
        "h1" => Ok(Hypothesis::H1),
        _ => Err(format!("expected h0 or h1, got `{s}`")),
    }
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Edge-list file.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Weights file (optionally typed).
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Ground-truth or typed weights file supplying labels.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Tail exponent, when the weights header lacks it.
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Debug, Args)]
struct InferenceArgs {
    /// `log_n`, `sqrt_n` or a positive number.
    #[arg(long)]
    f_mode: Option<FMode>,
    /// Identification constant.
    #[arg(long = "calib-C")]
    calib_c: Option<f64>,
    /// Weight cutoff for the restricted sets.
    #[arg(long)]
    t_n: Option<f64>,
    /// Number of order statistics for the size estimates.
    #[arg(long = "M")]
    m: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scale {
    Desk,
    Paper,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    experiment: Figure,
    #[arg(long, value_enum)]
    scale: Option<Scale>,
    /// Replicas per group (fig1), fresh replicas (fig2, fig3) or samples (custom).
    #[arg(long)]
    replicas: Option<usize>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    opts: InferenceArgs,
}

enum Failure {
    Usage(String),
    Data(String),
    Oracle(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::Guard { .. } | Error::InfeasibleWindow { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Data(e.to_string()),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

/// Parses `std::env::args`, runs the command and returns the exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            EXIT_DATA
        }
        Err(Failure::Oracle(m)) => {
            eprintln!("oracle failure: {m}");
            EXIT_ORACLE
        }
    }
}

// ---------------------------------------------------------------- config

const CONFIG_KEYS: &[&str] = &[
    "seed", "jobs", "out", "n", "k", "tau", "w0", "d", "gamma", "sparse", "weight_mode",
    "correction", "f_mode", "calib_C", "t_n", "M", "replicas", "scale", "graph", "weights",
    "truth",
];

#[derive(Default)]
struct Config(toml::Table);

impl Config {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        if let Some(bad) = table.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(Failure::Usage(format!("{}: unknown key `{bad}`", path.display())));
        }
        Ok(Self(table))
    }

    fn bad(key: &str, want: &str) -> Failure {
        Failure::Usage(format!("config key `{key}` must be {want}"))
    }

    fn f64(&self, key: &str) -> CliResult<Option<f64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(*x)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(Self::bad(key, "a number")),
        }
    }

    fn u64(&self, key: &str) -> CliResult<Option<u64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(Self::bad(key, "a non-negative integer")),
        }
    }

    fn usize(&self, key: &str) -> CliResult<Option<usize>> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    fn bool(&self, key: &str) -> CliResult<Option<bool>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(Self::bad(key, "true or false")),
        }
    }

    /// Strings, or numbers rendered as strings (for `gamma`, `f_mode`).
    fn text(&self, key: &str) -> CliResult<Option<String>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(toml::Value::Integer(i)) => Ok(Some(i.to_string())),
            Some(toml::Value::Float(x)) => Ok(Some(x.to_string())),
            Some(_) => Err(Self::bad(key, "a string")),
        }
    }

    fn parsed<T: FromStr<Err = Error>>(&self, key: &str) -> CliResult<Option<T>> {
        self.text(key)?
            .map(|s| s.parse::<T>().map_err(Failure::from))
            .transpose()
    }

    fn path(&self, key: &str) -> CliResult<Option<PathBuf>> {
        Ok(self.text(key)?.map(PathBuf::from))
    }
}

/// Global settings after merging flags over the config file.
struct Context {
    seed: u64,
    out: PathBuf,
    config: Config,
}

impl Context {
    fn output(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> CliResult {
        let path = self.output(name);
        fs::write(&path, contents).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        eprintln!("wrote {}", path.display());
        Ok(())
    }

    /// JSON object whose first field is the provenance header.
    fn write_json<T: Serialize>(&self, name: &str, header: &str, body: &T) -> CliResult {
        #[derive(Serialize)]
        struct Envelope<'a, T> {
            header: &'a str,
            #[serde(flatten)]
            body: &'a T,
        }
        let mut text = serde_json::to_string_pretty(&Envelope { header, body })
            .map_err(|e| Failure::Data(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }
}

fn execute(cli: Cli) -> CliResult {
    let config = Config::load(cli.config.as_deref())?;
    let jobs = cli.jobs.or(config.usize("jobs")?);
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        // A second initialisation in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    let out = cli.out.or(config.path("out")?).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out).map_err(|e| Failure::Data(format!("{}: {e}", out.display())))?;
    let ctx = Context {
        seed: cli.seed.or(config.u64("seed")?).unwrap_or(0),
        out,
        config,
    };
    match cli.command {
        Command::Generate(m) => cmd_generate(&ctx, &m),
        Command::Stats(i) => cmd_stats(&ctx, &i),
        Command::Detect { input, opts } => cmd_detect(&ctx, &input, &opts),
        Command::Identify { input, opts } => cmd_identify(&ctx, &input, &opts),
        Command::CalibrateC { input, opts } => cmd_calibrate(&ctx, &input, &opts),
        Command::EstimateK { input, opts } => cmd_estimate(&ctx, &input, &opts),
        Command::Pipeline { input, opts } => cmd_pipeline(&ctx, &input, &opts),
        Command::Experiment(e) => cmd_experiment(&ctx, &e),
        Command::OracleCheck => cmd_oracle(&ctx),
    }
}

// ---------------------------------------------------------------- model

/// Resolves model flags over config values over `defaults`.
fn model_params(ctx: &Context, m: &ModelArgs, defaults: ModelParams) -> CliResult<ModelParams> {
    let c = &ctx.config;
    let mut p = defaults;
    p.n = m.n.or(c.usize("n")?).unwrap_or(p.n);
    p.k = m.k.or(c.usize("k")?).unwrap_or(p.k);
    p.tau = m.tau.or(c.f64("tau")?).unwrap_or(p.tau);
    p.w0 = m.w0.or(c.f64("w0")?).unwrap_or(p.w0);
    p.d = m.d.or(c.usize("d")?).unwrap_or(p.d);
    p.gamma = m.gamma.or(c.parsed("gamma")?).unwrap_or(p.gamma);
    p.sparse_mode = m.sparse || c.bool("sparse")?.unwrap_or(p.sparse_mode);
    p.weight_mode = m.weight_mode.or(c.parsed("weight_mode")?).unwrap_or(p.weight_mode);
    p.correction = !m.no_correction && c.bool("correction")?.unwrap_or(p.correction);
    p.seed = ctx.seed;
    match m.hypothesis {
        Some(Hypothesis::H1) if p.k == 0 => {
            return Err(Failure::Usage(
                "the alternative needs a community size k >= 1; use --hypothesis h0 for the null model".into(),
            ))
        }
        Some(Hypothesis::H0) => p.k = 0,
        _ => {}
    }
    p.validate()?;
    Ok(p)
}

fn params_header(params: &str) -> String {
    format!("{FORMAT_TAG} params: {params}")
}

fn cmd_generate(ctx: &Context, m: &ModelArgs) -> CliResult {
    let params = model_params(ctx, m, ModelParams::new(1000, 2.5, 1.0))?;
    let sample = Sample::generate(&params)?;
    let canonical = params.canonical();
    save_edge_list(&sample.graph, &ctx.output("graph.edges"), Some(&canonical))?;
    eprintln!("wrote {}", ctx.output("graph.edges").display());
    save_weights(&ctx.output("weights.tsv"), &sample.render_weights())?;
    eprintln!("wrote {}", ctx.output("weights.tsv").display());
    let truth = match sample.render_ground_truth() {
        Some(t) => t,
        None => {
            let types = vec![VertexType::A; params.n];
            render_weights(sample.weights.values(), Some(&types), None, &params_header(&canonical))
        }
    };
    ctx.write("ground_truth.tsv", &truth)?;
    println!(
        "n={} m={} k={} seed={}",
        sample.graph.n(),
        sample.graph.m(),
        params.k,
        params.seed
    );
    Ok(())
}

// ---------------------------------------------------------------- inputs

struct Input {
    graph: Graph,
    weights: WeightSequence,
    /// Community labels, when available.
    truth: Option<Vec<bool>>,
    /// Parameter string inherited from the weights header.
    params: String,
    /// Community size recorded in the header, when positive.
    k: Option<usize>,
}

fn load_input(ctx: &Context, args: &InputArgs) -> CliResult<Input> {
    let c = &ctx.config;
    let need = |flag: &Option<PathBuf>, key: &str| -> CliResult<PathBuf> {
        match flag {
            Some(p) => Ok(p.clone()),
            None => c
                .path(key)?
                .ok_or_else(|| Failure::Usage(format!("--{key} is required"))),
        }
    };
    let graph_path = need(&args.graph, "graph")?;
    let weights_path = need(&args.weights, "weights")?;
    let file = load_weights(&weights_path)?;
    let params = file
        .header
        .as_deref()
        .and_then(|h| h.split_once("params:").map(|(_, p)| p.trim().to_string()))
        .unwrap_or_default();
    let tau = match args.tau.or(c.f64("tau")?) {
        Some(t) => t,
        None => header_value(&params, "tau")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Failure::Usage("--tau is required when the weights header lacks tau=".into()))?,
    };
    let w0 = header_value(&params, "w0").and_then(|v| v.parse().ok());
    let k = header_value(&params, "k")
        .and_then(|v| v.parse().ok())
        .filter(|&k: &usize| k > 0);
    let mut truth = file
        .types
        .as_ref()
        .map(|t| t.iter().map(|&x| x == VertexType::B).collect::<Vec<bool>>());
    let weights = file.into_sequence(tau, w0)?;
    let graph = load_edge_list(&graph_path, Some(weights.len()))?;
    if let Some(path) = args.truth.clone().or(c.path("truth")?) {
        let labels = load_weights(&path)?;
        let types = labels.types.ok_or_else(|| {
            Failure::Data(format!("{}: no type column", path.display()))
        })?;
        if types.len() != weights.len() {
            return Err(Failure::Data(format!(
                "{}: {} labels for {} vertices",
                path.display(),
                types.len(),
                weights.len()
            )));
        }
        truth = Some(types.iter().map(|&x| x == VertexType::B).collect());
    }
    let params = if params.is_empty() {
        format!("n={} tau={tau}", weights.len())
    } else {
        params
    };
    Ok(Input {
        graph,
        weights,
        truth,
        params,
        k,
    })
}

/// Inference options merged over config; `t_n` defaults from the bounds.
struct Resolved {
    f_mode: FMode,
    constant: f64,
    t_n: f64,
    m: usize,
}

fn resolve(ctx: &Context, o: &InferenceArgs, n: usize, k: Option<usize>, tau: f64) -> CliResult<Resolved> {
    let c = &ctx.config;
    let t_n = match o.t_n.or(c.f64("t_n")?) {
        Some(t) => t,
        None => default_t_n(n, k, tau)?,
    };
    Ok(Resolved {
        f_mode: o.f_mode.or(c.parsed("f_mode")?).unwrap_or_default(),
        constant: o.calib_c.or(c.f64("calib_C")?).unwrap_or(1.0),
        t_n,
        m: o.m.or(c.usize("M")?).unwrap_or(20),
    })
}

fn resolved_params(r: &Resolved) -> String {
    let f = match r.f_mode {
        FMode::LogN => "log_n".to_string(),
        FMode::SqrtN => "sqrt_n".to_string(),
        FMode::Custom(x) => x.to_string(),
    };
    format!("f_mode={f} C={} t_n={} M={}", r.constant, r.t_n, r.m)
}

fn header_for(input: &Input, cmd: &str, extra: &str) -> String {
    let mut h = params_header(&input.params);
    h.push_str(&format!(" cmd={cmd}"));
    if !extra.is_empty() {
        h.push(' ');
        h.push_str(extra);
    }
    h
}

fn per_vertex_csv(header: &str, ws: &WeightSequence, per_vertex: &[f64]) -> String {
    use std::fmt::Write as _;
    let mut out = format!("# {header}\nvertex,weight,W_a\n");
    for (v, (w, x)) in ws.values().iter().zip(per_vertex).enumerate() {
        let _ = writeln!(out, "{v},{w},{x}");
    }
    out
}

fn identification_csv(header: &str, report: &IdentificationReport) -> String {
    use std::fmt::Write as _;
    let mut out = format!("# {header}\nvertex,weight,W_a,flag,truth\n");
    for r in &report.rows {
        let truth = match r.truth {
            Some(true) => "B",
            Some(false) => "A",
            None => "",
        };
        let _ = writeln!(out, "{},{},{},{},{truth}", r.vertex, r.weight, r.w_a, u8::from(r.flag));
    }
    out
}

fn cmd_stats(ctx: &Context, args: &InputArgs) -> CliResult {
    let input = load_input(ctx, args)?;
    let stats = triangle_statistics(&input.graph, &input.weights)?;
    let header = header_for(&input, "stats", "");
    ctx.write_json("stats.json", &header, &stats)?;
    ctx.write("per_vertex.csv", &per_vertex_csv(&header, &input.weights, &stats.per_vertex))?;
    println!(
        "n={} m={} triangles={} W={} runtime_ms={}",
        stats.n, stats.m, stats.triangle_count, stats.w_global, stats.runtime_ms
    );
    Ok(())
}

fn cmd_detect(ctx: &Context, args: &InputArgs, opts: &InferenceArgs) -> CliResult {
    let input = load_input(ctx, args)?;
    let r = resolve(ctx, opts, input.graph.n(), input.k, input.weights.tau())?;
    let stats = triangle_statistics(&input.graph, &input.weights)?;
    let report = detect(stats.w_global, input.graph.n(), r.f_mode)?;
    ctx.write_json("detection.json", &header_for(&input, "detect", &resolved_params(&r)), &report)?;
    println!("W={} threshold={} decision={:?}", report.w_value, report.threshold, report.decision);
    Ok(())
}

fn run_identify(input: &Input, r: &Resolved, per_vertex: &[f64]) -> CliResult<IdentificationReport> {
    Ok(identify(
        per_vertex,
        &input.weights,
        input.graph.n(),
        r.constant,
        r.t_n,
        input.truth.as_deref(),
    )?)
}

fn cmd_identify(ctx: &Context, args: &InputArgs, opts: &InferenceArgs) -> CliResult {
    let input = load_input(ctx, args)?;
    let r = resolve(ctx, opts, input.graph.n(), input.k, input.weights.tau())?;
    let stats = triangle_statistics(&input.graph, &input.weights)?;
    let report = run_identify(&input, &r, &stats.per_vertex)?;
    let header = header_for(&input, "identify", &resolved_params(&r));
    ctx.write_json("identification.json", &header, &report)?;
    ctx.write("identification.csv", &identification_csv(&header, &report))?;
    println!("identified={} restricted={}", report.identified.len(), report.restricted.len());
    Ok(())
}

fn cmd_calibrate(ctx: &Context, args: &InputArgs, opts: &InferenceArgs) -> CliResult {
    let input = load_input(ctx, args)?;
    let r = resolve(ctx, opts, input.graph.n(), input.k, input.weights.tau())?;
    let truth = input
        .truth
        .as_ref()
        .ok_or_else(|| Failure::Usage("calibration needs labels: typed weights or --truth".into()))?;
    let stats = triangle_statistics(&input.graph, &input.weights)?;
    let cal = calibrate_constant(&stats.per_vertex, input.weights.values(), truth, input.graph.n(), r.t_n)?;
    let header = header_for(&input, "calibrate-C", &format!("t_n={}", r.t_n));
    ctx.write_json("calibration.json", &header, &cal)?;
    println!("C={} errors={} candidates={}", cal.constant, cal.errors, cal.candidates);
    Ok(())
}

fn cmd_estimate(ctx: &Context, args: &InputArgs, opts: &InferenceArgs) -> CliResult {
    let input = load_input(ctx, args)?;
    let r = resolve(ctx, opts, input.graph.n(), input.k, input.weights.tau())?;
    let stats = triangle_statistics(&input.graph, &input.weights)?;
    let ident = run_identify(&input, &r, &stats.per_vertex)?;
    let est = estimate_k(&ident.identified_weights(), input.weights.tau(), r.m)?;
    ctx.write_json("size_estimate.json", &header_for(&input, "estimate-k", &resolved_params(&r)), &est)?;
    let shown: Vec<String> = est.estimates.iter().map(|e| format!("{e:.1}")).collect();
    println!("k_hat = [{}]", shown.join(", "));
    Ok(())
}

fn cmd_pipeline(ctx: &Context, args: &InputArgs, opts: &InferenceArgs) -> CliResult {
    #[derive(Serialize)]
    struct Pipeline<'a> {
        detection: &'a crate::inference::DetectionReport,
        identification: &'a IdentificationReport,
        size_estimate: &'a crate::inference::SizeEstimateReport,
    }
    let input = load_input(ctx, args)?;
    let r = resolve(ctx, opts, input.graph.n(), input.k, input.weights.tau())?;
    let stats = triangle_statistics(&input.graph, &input.weights)?;
    let detection = detect(stats.w_global, input.graph.n(), r.f_mode)?;
    let mut ident = run_identify(&input, &r, &stats.per_vertex)?;
    ident.caveat_keep_h0 = detection.decision == crate::inference::Decision::KeepH0;
    let est = estimate_k(&ident.identified_weights(), input.weights.tau(), r.m)?;
    let header = header_for(&input, "pipeline", &resolved_params(&r));
    ctx.write_json(
        "pipeline.json",
        &header,
        &Pipeline {
            detection: &detection,
            identification: &ident,
            size_estimate: &est,
        },
    )?;
    ctx.write("identification.csv", &identification_csv(&header, &ident))?;
    println!(
        "decision={:?} W={} identified={} k_hat_M={}",
        detection.decision,
        detection.w_value,
        ident.identified.len(),
        est.estimates.last().map_or(f64::NAN, |x| *x)
    );
    Ok(())
}

// ---------------------------------------------------------------- experiments

fn cmd_experiment(ctx: &Context, e: &ExperimentArgs) -> CliResult {
    let c = &ctx.config;
    let scale = match e.scale {
        Some(s) => s,
        None => match c.text("scale")?.as_deref() {
            None | Some("desk") => Scale::Desk,
            Some("paper") => Scale::Paper,
            Some(other) => return Err(Failure::Usage(format!("unknown scale `{other}`"))),
        },
    };
    let replicas_flag = e.replicas.or(c.usize("replicas")?);
    if replicas_flag == Some(0) {
        return Err(Failure::Usage("--replicas must be at least 1".into()));
    }
    let paper = scale == Scale::Paper;
    let scale_name = if paper { "paper" } else { "desk" };
    match e.experiment {
        Figure::Fig1 => {
            let base = model_params(ctx, &e.model, ModelParams::new(10_000, 2.5, 1.0))?;
            let replicas = replicas_flag.unwrap_or(if paper { 10_000 } else { 200 });
            let r = resolve(ctx, &e.opts, base.n, None, base.tau)?;
            let ks = [100, 200, 300];
            let out = experiment::fig1(&base, &ks, replicas, r.f_mode)?;
            let header = params_header(&format!(
                "{} experiment=fig1 scale={scale_name} ks=100,200,300 replicas={replicas} {}",
                base.canonical(),
                resolved_params(&r)
            ));
            ctx.write("fig1_W.csv", &out.csv(&header))?;
            ctx.write_json("fig1_summary.json", &header, &out)?;
            for g in &out.groups {
                println!(
                    "{:?} k={} mean_W={:.4} sd={:.4} reject_rate={:.3}{}",
                    g.hypothesis,
                    g.k,
                    g.mean_w,
                    g.sd_w,
                    g.reject_rate,
                    g.risk.map_or(String::new(), |x| format!(" risk={x:.3}"))
                );
            }
        }
        Figure::Fig2 | Figure::Fig3 => {
            let fig3 = e.experiment == Figure::Fig3;
            let (n, k) = if paper { (1_000_000, 10_000) } else { (100_000, 5_000) };
            let mut defaults = ModelParams::new(n, 2.5, 1.0).with_k(k);
            if fig3 {
                defaults.d = 1;
            }
            if paper {
                eprintln!("warning: paper scale (n = {n}) takes much longer than desk scale");
            }
            let base = model_params(ctx, &e.model, defaults)?;
            let mut opts_t_n = e.opts.t_n.or(c.f64("t_n")?);
            if opts_t_n.is_none() && !paper {
                opts_t_n = Some(20.0);
            }
            let t_n = match opts_t_n {
                Some(t) => t,
                None => default_t_n(base.n, Some(base.k), base.tau)?,
            };
            let constant = e.opts.calib_c.or(c.f64("calib_C")?);
            let m = e.opts.m.or(c.usize("M")?).unwrap_or(20);
            let c_text = constant.map_or("calibrated".to_string(), |x| x.to_string());
            if fig3 {
                let replicas = replicas_flag.unwrap_or(15);
                let out = experiment::fig3(&base, t_n, constant, m, replicas)?;
                let header = params_header(&format!(
                    "{} experiment=fig3 scale={scale_name} replicas={replicas} t_n={t_n} C={c_text} M={m}",
                    base.canonical()
                ));
                ctx.write("fig3_estimates.csv", &out.estimates_csv(&header))?;
                ctx.write("fig3_means.csv", &out.means_csv(&header))?;
                ctx.write_json("fig3_summary.json", &header, &out)?;
                println!(
                    "C={} median mean(k_hat_m)/k over m>=5: {:.3}",
                    out.constant, out.median_ratio
                );
            } else {
                let replicas = replicas_flag.unwrap_or(1);
                let out = experiment::fig2(&base, t_n, constant, replicas)?;
                let header = params_header(&format!(
                    "{} experiment=fig2 scale={scale_name} replicas={replicas} t_n={t_n} C={c_text}",
                    base.canonical()
                ));
                ctx.write("fig2_vertices.csv", &out.table_csv(&header))?;
                ctx.write("fig2_curve.csv", &out.curve_csv(&header))?;
                ctx.write_json("fig2_summary.json", &header, &out)?;
                println!(
                    "C={} recall={:.3} precision={:.3} risk={:.3}",
                    out.constant, out.mean_recall, out.mean_precision, out.mean_risk
                );
            }
        }
        Figure::Custom => {
            let base = model_params(ctx, &e.model, ModelParams::new(1000, 2.5, 1.0))?;
            let replicas = replicas_flag.unwrap_or(100);
            let r = resolve(ctx, &e.opts, base.n, Some(base.k).filter(|&k| k > 0), base.tau)?;
            let out = experiment::custom(&base, replicas, r.f_mode)?;
            let header = params_header(&format!(
                "{} experiment=custom replicas={replicas} {}",
                base.canonical(),
                resolved_params(&r)
            ));
            ctx.write("custom_W.csv", &out.csv(&header))?;
            ctx.write_json("custom_summary.json", &header, &out)?;
            println!(
                "mean_W={:.4} sd={:.4} reject_rate={:.3} failures={}",
                out.mean_w, out.sd_w, out.reject_rate, out.failures
            );
        }
    }
    Ok(())
}

fn cmd_oracle(ctx: &Context) -> CliResult {
    #[derive(Serialize)]
    struct Suite<'a> {
        pass: bool,
        reports: &'a [oracle::OracleReport],
    }
    let reports = oracle::full_suite(ctx.seed)?;
    let pass = reports.iter().all(|r| r.pass);
    for r in &reports {
        println!(
            "{} {} observed={:.6} expected={:.6} z={:.3}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.observed,
            r.expected,
            r.z_score
        );
    }
    let header = params_header(&format!("seed={} cmd=oracle-check", ctx.seed));
    ctx.write_json("oracle_report.json", &header, &Suite { pass, reports: &reports })?;
    if pass {
        Ok(())
    } else {
        let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
        Err(Failure::Oracle(failed.join(", ")))
    }
}
