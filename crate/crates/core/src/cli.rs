//! Command-line front end: `estimate`, `simulate`, `mc` and `tree-dump`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{
    estimate_dr, estimate_or, estimate_propensity, EffectEstimate, EstimateReport, PropensityKind,
    PropensityModel, DEFAULT_CLIP,
};
use crate::interference::{fit, fit_decoupled, InterferenceConfig, InterferenceFit, SigmaMode};
use crate::io::{read_edge_list, read_node_table, write_edge_list, NodeTable};
use crate::patterns::PatternIndex;
use crate::rng::StreamKey;
use crate::simulation::{monte_carlo, simulate_on, DgpSpec, EstimatorConfig, FitMode, PropensitySource};

#[derive(Debug, Parser)]
#[command(name = "adaptive-interference", version, about = "Direct effects under network interference with adaptive radii")]
pub struct Cli {
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the interference tree and report OR and DR estimates.
    Estimate(EstimateArgs),
    /// Draw one data set from a DGP spec.
    Simulate(SimulateArgs),
    /// Run a Monte-Carlo study from a DGP spec.
    Mc(McArgs),
    /// Dump the pattern tree.
    TreeDump(TreeDumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SigmaModeArg {
    Supplied,
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Observed,
    Decoupled,
    Oracle,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_bar: f64,
    #[arg(long, value_enum, default_value_t = SigmaModeArg::Supplied)]
    pub sigma_mode: SigmaModeArg,
    /// Depth cap; defaults to min(diameter, 10).
    #[arg(long)]
    pub max_depth: Option<usize>,
}

impl FitArgs {
    pub fn config(&self) -> InterferenceConfig {
        InterferenceConfig {
            lambda: self.lambda,
            delta: self.delta,
            sigma_bar: self.sigma_bar,
            sigma_mode: match self.sigma_mode {
                SigmaModeArg::Supplied => SigmaMode::Supplied,
                SigmaModeArg::Pooled => SigmaMode::PooledControlSd,
            },
            max_depth: self.max_depth,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Edge list CSV (`u,v` per line).
    #[arg(long)]
    pub graph: PathBuf,
    /// Node table CSV with columns id,z,y[,x][,e].
    #[arg(long)]
    pub nodes: PathBuf,
    /// The edge list starts with a header row.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Build patterns from synthetic labels drawn from the propensity model.
    #[arg(long)]
    pub decouple: bool,
    /// `constant:<e0>`, `stratified` or `supplied` (node table column `e`).
    #[arg(long, default_value = "stratified")]
    pub propensity: String,
    #[arg(long, default_value_t = DEFAULT_CLIP)]
    pub clip: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Overrides the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub rep: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Observed)]
    pub mode: ModeArg,
    /// `truth` or a model as in `estimate`.
    #[arg(long, default_value = "truth")]
    pub propensity: String,
    #[arg(long, default_value_t = DEFAULT_CLIP)]
    pub clip: f64,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TreeDumpArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Dump every key of the index instead of the kept keys.
    #[arg(long)]
    pub all: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command on a pool of `workers` threads.
pub fn run(cli: Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Estimate(args) => cmd_estimate(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Mc(args) => cmd_mc(&args),
        Command::TreeDump(args) => cmd_tree_dump(&args),
    })
}

fn parse_propensity(spec: &str, clip: f64) -> Result<PropensityModel> {
    let model = match spec.split_once(':') {
        Some(("constant", v)) => PropensityModel::constant(
            v.parse()
                .map_err(|_| Error::Config(format!("bad constant propensity {v:?}")))?,
        ),
        None if spec == "stratified" => PropensityModel::stratified(),
        None if spec == "supplied" => PropensityModel::supplied(Vec::new()),
        _ => return Err(Error::Config(format!("unknown propensity model {spec:?}"))),
    };
    let model = model.with_clip(clip);
    model.validate()?;
    Ok(model)
}

fn load(input: &InputArgs) -> Result<(crate::graph::Graph, NodeTable)> {
    let table = read_node_table(&input.nodes)?;
    let graph = read_edge_list(&input.graph, input.header, &table.ids)?;
    Ok((graph, table))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct EstimateEcho<'a> {
    interference: &'a crate::interference::ResolvedConfig,
    propensity: &'a PropensityModel,
    decouple: bool,
    seed: u64,
    level: f64,
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let config = args.fit.config();
    config.validate()?;
    let mut model = parse_propensity(&args.propensity, args.clip)?;
    let (graph, table) = load(&args.input)?;
    let obs = &table.observations;
    if let PropensityKind::Supplied(values) = &mut model.kind {
        *values = table
            .propensity
            .clone()
            .ok_or_else(|| Error::Config("--propensity supplied needs an `e` column".into()))?;
    }
    let propensities = estimate_propensity(obs, &model)?;

    let fitted: InterferenceFit = if args.decouple {
        let synthetic: Vec<u8> = (0..obs.len())
            .map(|i| {
                let u = StreamKey::new(args.seed, "synthetic", 0, i as u64).uniform();
                u8::from(u < propensities.values[i])
            })
            .collect();
        fit_decoupled(&graph, obs, &synthetic, &config)?
    } else {
        fit(&graph, obs, &config)?
    };
    let f_hat = fitted.f_hat();
    let estimates: Vec<EffectEstimate> = vec![
        estimate_or(obs, &f_hat)?,
        estimate_dr(obs, &f_hat, &propensities, args.level)?,
    ];
    let report = EstimateReport {
        schema_version: crate::SCHEMA_VERSION,
        estimates,
        config: serde_json::to_value(EstimateEcho {
            interference: &fitted.config,
            propensity: &model,
            decouple: args.decouple,
            seed: args.seed,
            level: args.level,
        })?,
        fit_digest: Some(fitted.digest()),
    };

    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("fit.json"), &fitted.report(obs))?;
    if !table.ids.is_identity() {
        table.ids.write_csv(fs::File::create(args.out.join("id_map.csv"))?)?;
    }
    match args.format {
        OutputFormat::Json => write_json(&args.out.join("estimate.json"), &report)?,
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_path(args.out.join("estimate.csv"))
                .map_err(|e| Error::Input(e.to_string()))?;
            w.write_record(["method", "tau_hat", "variance", "ci_low", "ci_high", "n_treated"])
                .map_err(|e| Error::Input(e.to_string()))?;
            for e in &report.estimates {
                let (lo, hi) = e.ci.map_or((String::new(), String::new()), |(l, h)| (l.to_string(), h.to_string()));
                w.write_record([
                    serde_json::to_value(e.method)?.as_str().unwrap_or_default().to_string(),
                    e.tau_hat.to_string(),
                    e.variance.map(|v| v.to_string()).unwrap_or_default(),
                    lo,
                    hi,
                    e.n_treated.to_string(),
                ])
                .map_err(|e| Error::Input(e.to_string()))?;
            }
            w.flush()?;
        }
        OutputFormat::Text => {
            let mut text = String::new();
            for e in &report.estimates {
                text.push_str(&format!("{:?}\ttau_hat={}", e.method, e.tau_hat));
                if let Some((lo, hi)) = e.ci {
                    text.push_str(&format!("\tci=[{lo}, {hi}]"));
                }
                text.push('\n');
            }
            fs::write(args.out.join("estimate.txt"), text)?;
        }
    }
    Ok(())
}

fn read_spec(path: &Path, seed: Option<u64>) -> Result<DgpSpec> {
    let mut spec: DgpSpec = serde_json::from_str(&fs::read_to_string(path)?)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate()?;
    Ok(spec)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let spec = read_spec(&args.spec, args.seed)?;
    let graph = spec.build_graph()?;
    let data = simulate_on(&spec, &graph, args.rep)?;
    fs::create_dir_all(&args.out)?;
    write_edge_list(&graph, fs::File::create(args.out.join("edges.csv"))?)?;

    let mut w = csv::Writer::from_path(args.out.join("nodes.csv")).map_err(|e| Error::Input(e.to_string()))?;
    w.write_record(["id", "z", "y", "x", "e", "f", "tau", "epsilon"])
        .map_err(|e| Error::Input(e.to_string()))?;
    for i in 0..data.n() {
        w.write_record([
            i.to_string(),
            data.z[i].to_string(),
            data.y[i].to_string(),
            data.x[i].to_string(),
            data.e[i].to_string(),
            data.f[i].to_string(),
            data.tau[i].to_string(),
            data.epsilon[i].to_string(),
        ])
        .map_err(|e| Error::Input(e.to_string()))?;
    }
    w.flush()?;

    #[derive(Serialize)]
    struct Truth<'a> {
        schema_version: u32,
        spec: &'a DgpSpec,
        rep: u64,
        true_adtt: Option<f64>,
        true_adte: f64,
        equilibrium_residual: Option<f64>,
    }
    write_json(
        &args.out.join("truth.json"),
        &Truth {
            schema_version: crate::SCHEMA_VERSION,
            spec: &spec,
            rep: args.rep,
            true_adtt: data.true_adtt,
            true_adte: data.true_adte,
            equilibrium_residual: data.equilibrium_residual,
        },
    )
}

pub fn cmd_mc(args: &McArgs) -> Result<()> {
    let spec = read_spec(&args.spec, args.seed)?;
    let propensity = if args.propensity == "truth" {
        PropensitySource::Truth
    } else {
        PropensitySource::Model(parse_propensity(&args.propensity, args.clip)?)
    };
    let est = EstimatorConfig {
        interference: args.fit.config(),
        mode: match args.mode {
            ModeArg::Observed => FitMode::Observed,
            ModeArg::Decoupled => FitMode::Decoupled,
            ModeArg::Oracle => FitMode::Oracle,
        },
        propensity,
        level: args.level,
    };
    let report = monte_carlo(&spec, args.reps, &est)?;
    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("mc_report.json"), &report)?;
    report.write_csv(fs::File::create(args.out.join("mc_rows.csv"))?)
}

pub fn cmd_tree_dump(args: &TreeDumpArgs) -> Result<()> {
    let config = args.fit.config();
    let (graph, table) = load(&args.input)?;
    let fitted = fit(&graph, &table.observations, &config)?;
    let index: &PatternIndex = &fitted.index;
    let keep = |id: usize| args.all || fitted.tree.is_kept(id);
    let mut buf = Vec::new();
    match args.format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut buf, &index.dump_json(keep))?;
            buf.push(b'\n');
        }
        OutputFormat::Text | OutputFormat::Csv => index.write_dump(&mut buf, keep)?,
    }
    match &args.out {
        Some(path) => fs::write(path, buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}
