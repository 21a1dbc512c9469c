use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gaussnet_core::experiments::{parse_range, PolicyKind};
use gaussnet_core::{DistanceMode, GaussianInt, NetworkModulus};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

mod commands;
mod output;

const PRECEDENCE: &str = "\
Settings are resolved as built-in defaults, then the JSON document given \
with --config (keys mirror the resolved config.json written by a previous \
run), then command-line flags. Flags always win.";

#[derive(Parser)]
#[command(name = "gaussnet", version, about = "Fault-tolerant routing on Gaussian integer networks", after_help = PRECEDENCE)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Network size shorthand: α = k + (k+1)i.
    #[arg(long, global = true, conflicts_with = "alpha")]
    k: Option<i64>,
    /// Network generator, e.g. 3+4i.
    #[arg(long, global = true)]
    alpha: Option<GaussianInt>,
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

impl Global {
    fn alpha(&self) -> Result<Option<GaussianInt>> {
        match (self.k, self.alpha) {
            (Some(k), _) => Ok(Some(NetworkModulus::from_k(k)?.alpha())),
            (None, Some(a)) => Ok(Some(NetworkModulus::new(a)?.alpha())),
            (None, None) => Ok(None),
        }
    }

    fn load<T: Serialize + DeserializeOwned + Default>(&self) -> Result<T> {
        self.load_over(T::default())
    }

    /// `defaults` overlaid with the config file, if any. Nested objects merge
    /// key by key.
    fn load_over<T: Serialize + DeserializeOwned>(&self, defaults: T) -> Result<T> {
        let Some(path) = &self.config else {
            return Ok(defaults);
        };
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if !file.is_object() {
            bail!("{}: expected a JSON object", path.display());
        }
        let mut merged = serde_json::to_value(defaults)?;
        merge(&mut merged, file);
        serde_json::from_value(merged).with_context(|| format!("applying {}", path.display()))
    }

    fn out_or(&self, default: &str) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from("out").join(default))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Dump node coordinates, neighbors and quadrants as CSV.
    Topology,
    /// Train a PPO router over random pairs and fault layouts.
    Train(TrainArgs),
    /// Route one packet and print its hop trace.
    Route(RouteArgs),
    /// Scan every single-fault placement between two nodes.
    Demo(DemoArgs),
    /// Packet delivery ratio against fault density.
    SweepPdr(SweepArgs),
    /// Normalized throughput against offered load.
    SweepThroughput(SweepArgs),
    /// Route lengths into the first quadrant with a few faults inside it.
    Quadrant(QuadrantArgs),
}

#[derive(Args, Debug, Default)]
struct TrainFlags {
    /// Training episodes.
    #[arg(long)]
    episodes: Option<usize>,
    /// Adam step size.
    #[arg(long)]
    lr: Option<f64>,
    /// Entropy bonus coefficient.
    #[arg(long)]
    entropy_coef: Option<f64>,
}

impl TrainFlags {
    fn apply(&self, cfg: &mut gaussnet_core::PpoConfig) {
        if let Some(e) = self.episodes {
            cfg.episodes = e;
        }
        if let Some(lr) = self.lr {
            cfg.learning_rate = lr;
        }
        if let Some(c) = self.entropy_coef {
            cfg.entropy_coef = c;
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Fault density of the training layouts.
    #[arg(long)]
    density: Option<f64>,
    /// Episodes between fault layout changes.
    #[arg(long)]
    resample_every: Option<usize>,
    /// Independent runs, each with its own derived seed.
    #[arg(long)]
    runs: Option<usize>,
    #[command(flatten)]
    training: TrainFlags,
}

#[derive(Args, Debug)]
struct RouteArgs {
    /// Source node index.
    #[arg(long)]
    src: Option<usize>,
    /// Destination node index.
    #[arg(long)]
    dst: Option<usize>,
    /// greedy or rl.
    #[arg(long)]
    policy: Option<PolicyKind>,
    /// Trained parameter file (required for --policy rl).
    #[arg(long)]
    params: Option<PathBuf>,
    /// Faulty nodes, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "density")]
    faults: Option<Vec<usize>>,
    /// Random uniform faults at this density, endpoints excluded.
    #[arg(long)]
    density: Option<f64>,
    /// plain or modular greedy distance.
    #[arg(long)]
    distance_mode: Option<DistanceMode>,
}

#[derive(Args, Debug)]
struct DemoArgs {
    /// Source node index.
    #[arg(long)]
    src: Option<usize>,
    /// Destination as a Gaussian integer, e.g. 3.
    #[arg(long)]
    dst: Option<GaussianInt>,
    /// Trainings per placement; the best argmax rollout is kept.
    #[arg(long)]
    restarts: Option<usize>,
    /// plain or modular greedy distance.
    #[arg(long)]
    distance_mode: Option<DistanceMode>,
    #[command(flatten)]
    training: TrainFlags,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Fault densities as start:stop:step or a comma list.
    #[arg(long)]
    densities: Option<String>,
    /// Offered loads as start:stop:step or a comma list.
    #[arg(long)]
    loads: Option<String>,
    /// Fault density of the throughput sweep.
    #[arg(long)]
    throughput_density: Option<f64>,
    /// Trials per density, each with its own fault layout.
    #[arg(long)]
    trials: Option<usize>,
    /// Packets per trial.
    #[arg(long)]
    packets: Option<usize>,
    /// Throughput decay coefficient; calibrated from the run when omitted.
    #[arg(long)]
    beta: Option<f64>,
    /// Comma list of greedy, rl.
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<PolicyKind>>,
    /// plain or modular greedy distance.
    #[arg(long)]
    distance_mode: Option<DistanceMode>,
    /// Clustered faults with this many centers.
    #[arg(long)]
    clusters: Option<usize>,
    /// Spread of clustered faults in hops.
    #[arg(long, requires = "clusters")]
    cluster_sigma: Option<f64>,
    #[command(flatten)]
    training: TrainFlags,
}

#[derive(Args, Debug)]
struct QuadrantArgs {
    /// Fault counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    fault_counts: Option<Vec<usize>>,
    /// Trials per fault count.
    #[arg(long)]
    trials: Option<usize>,
    /// Comma list of greedy, rl.
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<PolicyKind>>,
    /// Trainings per layout; the best argmax rollout is kept.
    #[arg(long)]
    restarts: Option<usize>,
    /// plain or modular greedy distance.
    #[arg(long)]
    distance_mode: Option<DistanceMode>,
    #[command(flatten)]
    training: TrainFlags,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = g.jobs {
        if jobs == 0 {
            bail!("--jobs must be positive");
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build()?;
    pool.install(|| match &cli.command {
        Command::Topology => commands::topology(g),
        Command::Train(a) => commands::train(g, a),
        Command::Route(a) => commands::route(g, a),
        Command::Demo(a) => commands::demo(g, a),
        Command::SweepPdr(a) => commands::sweep_pdr(g, a),
        Command::SweepThroughput(a) => commands::sweep_throughput(g, a),
        Command::Quadrant(a) => commands::quadrant(g, a),
    })
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    Ok(parse_range(s)?)
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_is_recursive() {
        let mut base = serde_json::json!({"a": 1, "t": {"x": 1, "y": 2}, "l": [1, 2]});
        merge(
            &mut base,
            serde_json::json!({"t": {"y": 5}, "l": [3], "n": null}),
        );
        assert_eq!(
            base,
            serde_json::json!({"a": 1, "t": {"x": 1, "y": 5}, "l": [3], "n": null})
        );
    }
}
