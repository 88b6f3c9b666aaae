//! Subcommand definitions and their drivers.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use bbmlab::analytics::{derive_params, merger_rates, CsbpParams};
use bbmlab::coalescent::{first_event_k, sample_path, uniform_subset, CoalescentKind};
use bbmlab::engine::{run, GenealogyDetail, InitialCondition, RightBarrier, SimConfig};
use bbmlab::fkpp::{estimate_w_samples, solve_fkpp_wave_with_step, tail_analysis, tail_constant, ZyConfig, MIN_TAIL_SAMPLES};
use bbmlab::flows::{bridge_from_flow, ln_csbp_trajectory, partition_from_flow_bridge, DEFAULT_GAP_COUNT};
use bbmlab::genealogy::{ancestral_partition_at, GenealogyLog, WeightedLog};
use bbmlab::rng::{open01, StreamRng};
use bbmlab::stats::chi_square;
use bbmlab::verify::{run_criterion, suite, Severity, SUITES};
use clap::{ArgMatches, Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{overlay, Output};
use crate::{io, out_dir, CliError};

#[derive(Parser, Debug)]
#[command(name = "bbmlab", version, about = "Branching Brownian motion with absorption: simulation and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate BBM with absorption and write the (t, Z, Y, M, R) trajectory.
    SimulateBbm(SimulateBbm),
    /// Sample coalescent paths and the first-merger size histogram.
    SampleCoalescent(SampleCoalescent),
    /// Sample CSBP trajectories from the subordinator flow.
    SampleCsbp(SampleCsbp),
    /// Sample a flow bridge and the partition it induces.
    FlowBridges(FlowBridges),
    /// Rescaled particle counts w for the critical FKPP tree.
    EstimateW(EstimateW),
    /// Solve for the critical FKPP travelling wave.
    SolveFkpp(SolveFkpp),
    /// Ancestral partition and discrete bridge from a saved genealogy.
    GenealogyExtract(GenealogyExtract),
    /// Run an acceptance suite.
    Verify(Verify),
}

#[derive(Args, Debug, Clone, Default)]
pub struct IoArgs {
    /// TOML file; its `[subcommand]` table supplies unset parameters.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "BBMLAB_OUT", global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Barrier {
    Kill,
    None,
    Record,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct SimulateBbm {
    #[arg(long, default_value_t = 1000)]
    pub n: u64,
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, default_value_t = 20.0)]
    pub horizon: f64,
    /// Spacing of the checkpoints, starting at 0.
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
    #[arg(long, value_enum, default_value_t = Barrier::Kill)]
    pub barrier: Barrier,
    #[arg(long, default_value_t = 1.0)]
    pub dt_max: f64,
    #[arg(long, default_value_t = 50_000_000)]
    pub max_particles: usize,
    /// Start all `n` particles here instead of the stable profile.
    #[arg(long)]
    pub start: Option<f64>,
    /// Also write genealogy.json.
    #[arg(long)]
    pub genealogy: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Bsz,
    Kingman,
}

impl From<Kind> for CoalescentKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Bsz => CoalescentKind::BolthausenSznitman,
            Kind::Kingman => CoalescentKind::Kingman,
        }
    }
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct SampleCoalescent {
    #[arg(long, value_enum, default_value_t = Kind::Bsz)]
    pub kind: Kind,
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// First-merger draws for the histogram.
    #[arg(long, default_value_t = 100_000)]
    pub replicates: usize,
    /// Horizon of the single path written to events.csv.
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct SampleCsbp {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 1.0)]
    pub z0: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 10)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct FlowBridges {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 1.0)]
    pub z0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub s: f64,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    /// Largest jumps kept explicitly.
    #[arg(long, default_value_t = DEFAULT_GAP_COUNT)]
    pub gaps: usize,
    /// Grid intervals in bridge.csv.
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    /// Uniform labels in the induced partition.
    #[arg(long, default_value_t = 10)]
    pub sample: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct EstimateW {
    #[arg(long, default_value_t = 8.0)]
    pub y: f64,
    #[arg(long, default_value_t = 10_000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct SolveFkpp {
    /// Half-width of the solution interval.
    #[arg(long, default_value_t = 15.0)]
    pub domain: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct GenealogyExtract {
    /// genealogy.json written by simulate-bbm.
    #[arg(long)]
    pub input: PathBuf,
    /// Population parameter of the run, for the weights.
    #[arg(long, default_value_t = 1000)]
    pub n: u64,
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, default_value_t = 10)]
    pub sample: usize,
    /// Generation to trace back to.
    #[arg(long, default_value_t = 0)]
    pub to: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct Verify {
    /// One of identities, martingale, coalescent, csbp, genealogy, w, mrca, population, all.
    pub suite: String,
    #[arg(long, default_value_t = 20_240_601)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

fn prepare<T: Serialize + DeserializeOwned>(args: T, io: IoArgs, section: &str, m: &ArgMatches, set_io: fn(&mut T, IoArgs)) -> Result<T, CliError> {
    let mut a = match &io.config {
        Some(path) => overlay(args, path, section, m)?,
        None => args,
    };
    set_io(&mut a, io);
    Ok(a)
}

macro_rules! prepared {
    ($args:expr, $m:expr, $name:literal) => {{
        let io = $args.io.clone();
        let sub = $m.subcommand_matches($name).expect("subcommand matches");
        prepare($args, io, $name, sub, |a, io| a.io = io)?
    }};
}

pub fn dispatch(cli: Cli, m: &ArgMatches) -> Result<u8, CliError> {
    match cli.command {
        Command::SimulateBbm(a) => simulate_bbm(prepared!(a, m, "simulate-bbm")),
        Command::SampleCoalescent(a) => sample_coalescent(prepared!(a, m, "sample-coalescent")),
        Command::SampleCsbp(a) => sample_csbp(prepared!(a, m, "sample-csbp")),
        Command::FlowBridges(a) => flow_bridges(prepared!(a, m, "flow-bridges")),
        Command::EstimateW(a) => estimate_w(prepared!(a, m, "estimate-w")),
        Command::SolveFkpp(a) => solve_fkpp(prepared!(a, m, "solve-fkpp")),
        Command::GenealogyExtract(a) => genealogy_extract(prepared!(a, m, "genealogy-extract")),
        Command::Verify(a) => verify(prepared!(a, m, "verify")),
    }
}

fn finish<T: Serialize>(out: Output, name: &str, args: &T, summary: serde_json::Value) -> Result<u8, CliError> {
    let dir = out.dir.clone();
    let hash = out.finish(name, args, summary)?;
    println!("wrote {} (config {})", dir.display(), &hash[..12]);
    Ok(0)
}

fn simulate_bbm(a: SimulateBbm) -> Result<u8, CliError> {
    let p = derive_params(a.n, a.a)?;
    if !(a.spacing > 0.0) {
        return Err(CliError::Config("spacing must be positive".into()));
    }
    let steps = (a.horizon / a.spacing).floor() as usize;
    let mut checkpoints: Vec<f64> = (0..=steps).map(|i| i as f64 * a.spacing).collect();
    if checkpoints.last() != Some(&a.horizon) {
        checkpoints.push(a.horizon);
    }
    let init = match a.start {
        Some(x) => InitialCondition::PointMass { x, count: a.n as usize },
        None => InitialCondition::StableProfile { n: a.n as usize },
    };
    let mut cfg = SimConfig::from_params(&p, init, a.horizon, checkpoints);
    cfg.right_barrier = match a.barrier {
        Barrier::Kill => RightBarrier::KillAt(p.l_a),
        Barrier::None => RightBarrier::None,
        Barrier::Record => RightBarrier::RecordHits(p.l_a),
    };
    cfg.dt_max = a.dt_max;
    cfg.max_particles = a.max_particles;
    cfg.seed = a.seed;
    cfg.genealogy = if a.genealogy { GenealogyDetail::Ancestry } else { GenealogyDetail::Off };
    let res = run(&cfg)?;
    let mut out = Output::create(out_dir(&a.io.out))?;
    io::write_trajectory(&mut io::create(&out.file("trajectory.csv"))?, &res.trajectory)?;
    if a.genealogy {
        io::write_json(&mut io::create(&out.file("genealogy.json"))?, &res.genealogy)?;
    }
    let summary = json!({ "params": p, "status": res.status, "events": res.events });
    finish(out, "simulate-bbm", &a, summary)
}

fn sample_coalescent(a: SampleCoalescent) -> Result<u8, CliError> {
    if a.n < 2 {
        return Err(CliError::Config("n must be at least 2".into()));
    }
    let kind: CoalescentKind = a.kind.into();
    let mut rng = StreamRng::new(a.seed, 0);
    let mut counts = vec![0u64; a.n - 1];
    for _ in 0..a.replicates {
        counts[first_event_k(a.n, kind, &mut rng)? - 2] += 1;
    }
    let rates = merger_rates(a.n, kind.measure());
    let total: f64 = rates.iter().sum();
    let expected: Vec<f64> = rates.iter().map(|r| r / total * a.replicates as f64).collect();
    let mut out = Output::create(out_dir(&a.io.out))?;
    let mut w = io::create(&out.file("histogram.csv"))?;
    writeln!(w, "k,count,expected")?;
    for (i, (c, e)) in counts.iter().zip(&expected).enumerate() {
        writeln!(w, "{},{c},{e:.6}", i + 2)?;
    }
    w.flush()?;
    let path = sample_path(a.n, a.horizon, kind, &mut StreamRng::new(a.seed, 1))?;
    io::write_events(&mut io::create(&out.file("events.csv"))?, &path)?;
    let gof = (a.replicates > 0).then(|| chi_square(&counts, &expected, 0.01)).transpose()?;
    finish(out, "sample-coalescent", &a, json!({ "chi_square": gof }))
}

fn sample_csbp(a: SampleCsbp) -> Result<u8, CliError> {
    let params = CsbpParams::new(a.a, a.b)?;
    let times: Vec<f64> = (0..=a.steps).map(|i| i as f64 * a.dt).collect();
    let paths = (0..a.paths)
        .map(|i| ln_csbp_trajectory(a.z0, &times, &params, &mut StreamRng::replicate(a.seed, i as u64)))
        .collect::<bbmlab::Result<Vec<_>>>()?;
    let mut out = Output::create(out_dir(&a.io.out))?;
    io::write_csbp(&mut io::create(&out.file("csbp.csv"))?, &times, &paths)?;
    finish(out, "sample-csbp", &a, json!({ "stable_index_per_step": params.stable_index(a.dt) }))
}

fn flow_bridges(a: FlowBridges) -> Result<u8, CliError> {
    let params = CsbpParams::new(a.a, a.b)?;
    let mut rng = StreamRng::new(a.seed, 0);
    let fb = bridge_from_flow(a.s, a.t, a.z0, &params, a.gaps, &mut rng)?;
    let us: Vec<f64> = (0..a.sample).map(|_| open01(&mut rng)).collect();
    let partition = partition_from_flow_bridge(&fb, &us);
    let mut out = Output::create(out_dir(&a.io.out))?;
    io::write_bridge(&mut io::create(&out.file("bridge.csv"))?, &fb.bridge, a.points.max(1))?;
    io::write_json(&mut io::create(&out.file("partition.json"))?, &io::partition_json(&partition))?;
    let summary = json!({ "alpha": fb.alpha, "largest_gap": fb.largest_gap(), "residual": fb.residual });
    finish(out, "flow-bridges", &a, summary)
}

fn estimate_w(a: EstimateW) -> Result<u8, CliError> {
    let e = estimate_w_samples(&ZyConfig::new(a.y)?, a.replicates, a.seed, true)?;
    let mut out = Output::create(out_dir(&a.io.out))?;
    io::write_column(&mut io::create(&out.file("w.csv"))?, "w", &e.w_samples)?;
    let tail = if e.w_samples.len() >= MIN_TAIL_SAMPLES {
        Some(tail_analysis(&e.w_samples, &[5.0, 10.0, 20.0])?)
    } else {
        None
    };
    let summary = json!({
        "samples": e.w_samples.len(),
        "horizon_flagged": e.horizon_flagged,
        "cap_flagged": e.cap_flagged,
        "median": (!e.w_samples.is_empty()).then(|| bbmlab::stats::median(&e.w_samples)),
        "tail": tail,
    });
    finish(out, "estimate-w", &a, summary)
}

fn solve_fkpp(a: SolveFkpp) -> Result<u8, CliError> {
    let wave = solve_fkpp_wave_with_step(a.domain, a.tol, a.step)?;
    let mut out = Output::create(out_dir(&a.io.out))?;
    io::write_wave(&mut io::create(&out.file("wave.csv"))?, &wave)?;
    let tail = (a.domain >= 10.0).then(|| tail_constant(&wave, 0.8 * a.domain, a.domain)).transpose()?;
    let summary = json!({
        "ode_residual": wave.ode_residual(),
        "monotone": wave.is_strictly_decreasing(),
        "tail_fit": tail.map(|(c, k)| json!({ "constant": c, "correction": k })),
    });
    finish(out, "solve-fkpp", &a, summary)
}

fn genealogy_extract(a: GenealogyExtract) -> Result<u8, CliError> {
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let log: GenealogyLog = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", a.input.display())))?;
    log.validate()?;
    if log.is_empty() || a.to + 1 >= log.len() {
        return Err(CliError::Config(format!("need to < {} generations - 1", log.len())));
    }
    let p = derive_params(a.n, a.a)?;
    let last = log.len() - 1;
    let m = log.generations[last].len();
    if a.sample > m {
        return Err(CliError::Config(format!("sample {} exceeds the {m} particles at the last checkpoint", a.sample)));
    }
    let sample = uniform_subset(m, a.sample, &mut StreamRng::new(a.seed, 0));
    let partition = ancestral_partition_at(&log, &sample, last, a.to)?;
    let wl = WeightedLog::new(&log, p.mu, p.l)?;
    let bridge = wl.discrete_bridge(a.to, last)?;
    let mut out = Output::create(out_dir(&a.io.out))?;
    let labelled = json!({ "sample": sample, "partition": io::partition_json(&partition) });
    io::write_json(&mut io::create(&out.file("partition.json"))?, &labelled)?;
    io::write_bridge(&mut io::create(&out.file("bridge.csv"))?, &bridge, 1000)?;
    finish(out, "genealogy-extract", &a, json!({ "generations": log.len(), "blocks": partition.block_count() }))
}

fn verify(a: Verify) -> Result<u8, CliError> {
    let ids = suite(&a.suite).ok_or_else(|| CliError::Config(format!("unknown suite `{}`; expected one of {}", a.suite, SUITES.join(", "))))?;
    let mut results = Vec::new();
    for id in ids {
        let r = run_criterion(id, a.seed)?;
        println!("{}", r.line());
        results.push(r);
    }
    let hard = results.iter().any(|r| !r.passed && r.severity == Severity::Hard);
    let soft = results.iter().any(|r| !r.passed && r.severity == Severity::Soft);
    let mut out = Output::create(out_dir(&a.io.out))?;
    io::write_json(&mut io::create(&out.file("report.json"))?, &results)?;
    finish(out, "verify", &a, json!({ "hard_failure": hard, "soft_failure": soft }))?;
    Ok(if hard {
        4
    } else if soft {
        1
    } else {
        0
    })
}
