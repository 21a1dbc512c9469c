use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use gaussnet_core::experiments::{
    convergence_runs, detour_demo, fmt6, quadrant_study, run_pdr_sweep, run_throughput_sweep,
    ConvergenceConfig, DetourConfig, LineChart, PdrSweep, PolicyKind, QuadrantConfig, Router,
    Series, SweepConfig, ThroughputSweep,
};
use gaussnet_core::ppo::PolicyFile;
use gaussnet_core::seed::derive_seed;
use gaussnet_core::{
    DistanceMode, FaultMode, FaultSet, FaultSpec, GaussianInt, NetworkModulus, Topology,
};
use serde::{Deserialize, Serialize};

use crate::output::OutDir;
use crate::{parse_list, DemoArgs, Global, QuadrantArgs, RouteArgs, SweepArgs, TrainArgs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct TopologyConfig {
    alpha: GaussianInt,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            alpha: GaussianInt::new(3, 4),
        }
    }
}

pub fn topology(g: &Global) -> Result<()> {
    let mut cfg: TopologyConfig = g.load()?;
    if let Some(a) = g.alpha()? {
        cfg.alpha = a;
    }
    let t = Topology::from_alpha(cfg.alpha)?;
    let csv = t.to_csv();
    match &g.out {
        None => print!("{csv}"),
        Some(root) => {
            let dir = OutDir::create(root, &cfg)?;
            dir.write("topology.csv", &csv)?;
            dir.finish()?;
        }
    }
    Ok(())
}

fn train_config(g: &Global, a: &TrainArgs) -> Result<ConvergenceConfig> {
    let mut cfg = g.load_over(ConvergenceConfig {
        runs: 1,
        ..Default::default()
    })?;
    if let Some(alpha) = g.alpha()? {
        cfg.alpha = alpha;
    }
    if let Some(s) = g.seed {
        cfg.master_seed = s;
    }
    if let Some(d) = a.density {
        cfg.density = d;
    }
    if let Some(r) = a.resample_every {
        cfg.resample_every = r;
    }
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
    a.training.apply(&mut cfg.training);
    if cfg.runs == 0 {
        bail!("runs must be positive");
    }
    cfg.training.validate()?;
    Ok(cfg)
}

pub fn train(g: &Global, a: &TrainArgs) -> Result<()> {
    let cfg = train_config(g, a)?;
    let dir = OutDir::create(&g.out_or("train"), &cfg)?;
    let modulus = NetworkModulus::new(cfg.alpha)?;
    let reports = convergence_runs(&cfg)?;

    let mut csv = String::from("run,episode,return,smoothed\n");
    let mut chart = LineChart::new("Training reward", "Episode", "Return (moving average)");
    for (run, r) in reports.iter().enumerate() {
        for (ep, (ret, sm)) in r.returns.iter().zip(&r.smoothed).enumerate() {
            let _ = writeln!(csv, "{run},{},{},{}", ep + 1, fmt6(*ret), fmt6(*sm));
        }
        let points = r
            .smoothed
            .iter()
            .enumerate()
            .map(|(ep, &v)| ((ep + 1) as f64, v))
            .collect();
        chart = chart.with_series(Series::new(format!("run {run}"), points));

        let name = if reports.len() == 1 {
            "policy.json".to_string()
        } else {
            format!("policy-{run}.json")
        };
        let config = gaussnet_core::PpoConfig {
            seed: derive_seed(cfg.master_seed, "convergence/train", run as u64),
            ..cfg.training.clone()
        };
        PolicyFile::new(r.params.clone(), config, modulus, cfg.master_seed)
            .save(&dir.path(&name))?;
        let last = r.smoothed.last().copied().unwrap_or(f64::NAN);
        println!(
            "run {run}: final smoothed return {} in {:.1}s",
            fmt6(last),
            r.wall_seconds
        );
    }
    dir.write("rewards.csv", &csv)?;
    dir.write("rewards.svg", &chart.to_svg())?;
    dir.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct RouteConfig {
    alpha: GaussianInt,
    src: usize,
    dst: usize,
    policy: PolicyKind,
    params: Option<std::path::PathBuf>,
    faults: Vec<usize>,
    /// Random faults at this density instead of `faults`.
    density: Option<f64>,
    distance_mode: DistanceMode,
    master_seed: u64,
}

impl Default for RouteConfig {
    fn default() -> Self {
        Self {
            alpha: GaussianInt::new(3, 4),
            src: 0,
            dst: 3,
            policy: PolicyKind::Greedy,
            params: None,
            faults: Vec::new(),
            density: None,
            distance_mode: DistanceMode::Plain,
            master_seed: 0,
        }
    }
}

pub fn route(g: &Global, a: &RouteArgs) -> Result<()> {
    let mut cfg: RouteConfig = g.load()?;
    if let Some(alpha) = g.alpha()? {
        cfg.alpha = alpha;
    }
    if let Some(s) = g.seed {
        cfg.master_seed = s;
    }
    cfg.src = a.src.unwrap_or(cfg.src);
    cfg.dst = a.dst.unwrap_or(cfg.dst);
    cfg.policy = a.policy.unwrap_or(cfg.policy);
    cfg.distance_mode = a.distance_mode.unwrap_or(cfg.distance_mode);
    if a.params.is_some() {
        cfg.params = a.params.clone();
    }
    if let Some(f) = &a.faults {
        cfg.faults = f.clone();
        cfg.density = None;
    }
    if a.density.is_some() {
        cfg.density = a.density;
        cfg.faults.clear();
    }

    let t = Topology::from_alpha(cfg.alpha)?;
    t.check_node(cfg.src)?;
    t.check_node(cfg.dst)?;
    let faults = match cfg.density {
        Some(d) => FaultSpec::uniform(d, derive_seed(cfg.master_seed, "route/faults", 0))
            .generate(&t, &[cfg.src, cfg.dst])?,
        None => FaultSet::from_nodes(t.len(), cfg.faults.iter().copied())?,
    };
    let policy_file = match (cfg.policy, &cfg.params) {
        (PolicyKind::Rl, Some(p)) => {
            Some(PolicyFile::load(p).with_context(|| format!("loading {}", p.display()))?)
        }
        (PolicyKind::Rl, None) => bail!("--policy rl needs --params FILE"),
        (PolicyKind::Greedy, _) => None,
    };
    let router = match &policy_file {
        Some(f) => Router::Rl(&f.params),
        None => Router::Greedy(cfg.distance_mode),
    };
    let result = router.route(&t, cfg.src, cfg.dst, &faults)?;

    let mut csv = String::from("step,node_index,re,im\n");
    for (step, &k) in result.path.iter().enumerate() {
        let c = t.coord(k);
        let _ = writeln!(csv, "{step},{k},{},{}", c.re, c.im);
    }
    let status = format!("status={} hops={}", result.status.label(), result.hops);
    print!("{csv}");
    println!("{status}");
    if let Some(root) = &g.out {
        let dir = OutDir::create(root, &cfg)?;
        dir.write("route.csv", &csv)?;
        dir.write("faults.csv", &faults.to_csv())?;
        dir.write("status.txt", &(status + "\n"))?;
        dir.finish()?;
    }
    Ok(())
}

pub fn demo(g: &Global, a: &DemoArgs) -> Result<()> {
    let mut cfg: DetourConfig = g.load()?;
    if let Some(alpha) = g.alpha()? {
        cfg.alpha = alpha;
    }
    if let Some(s) = g.seed {
        cfg.master_seed = s;
    }
    cfg.src = a.src.unwrap_or(cfg.src);
    cfg.dst = a.dst.unwrap_or(cfg.dst);
    cfg.restarts = a.restarts.unwrap_or(cfg.restarts);
    cfg.distance_mode = a.distance_mode.unwrap_or(cfg.distance_mode);
    a.training.apply(&mut cfg.training);

    let dir = OutDir::create(&g.out_or("demo"), &cfg)?;
    let t = Topology::from_alpha(cfg.alpha)?;
    let report = detour_demo(&cfg)?;
    dir.write("detour.csv", &report.csv(&t))?;
    dir.write("detour_traces.csv", &report.traces_csv(&t))?;

    println!(
        "src {} -> dst {}: fault-free greedy {} hops, rl {} hops",
        report.src, report.dst, report.baseline.greedy.hops, report.baseline.rl.hops
    );
    for row in report.rl_wins() {
        let f = row.fault_node.expect("placements carry a fault");
        let hops = |h: i64| {
            if h < 0 {
                "failed".to_string()
            } else {
                h.to_string()
            }
        };
        println!(
            "fault at node {f} ({}): greedy {}, rl {}, shortest {}",
            t.coord(f),
            hops(row.greedy.hops),
            hops(row.rl.hops),
            row.bfs_hops
                .map(|h| h.to_string())
                .unwrap_or_else(|| "none".into())
        );
    }
    dir.finish()
}

fn sweep_config(g: &Global, a: &SweepArgs) -> Result<SweepConfig> {
    let mut cfg: SweepConfig = g.load()?;
    if let Some(alpha) = g.alpha()? {
        cfg.alpha = alpha;
    }
    if let Some(s) = g.seed {
        cfg.master_seed = s;
    }
    if let Some(d) = &a.densities {
        cfg.densities = parse_list(d)?;
    }
    if let Some(l) = &a.loads {
        cfg.loads = parse_list(l)?;
    }
    cfg.throughput_density = a.throughput_density.unwrap_or(cfg.throughput_density);
    cfg.trials_per_density = a.trials.unwrap_or(cfg.trials_per_density);
    cfg.packets_per_trial = a.packets.unwrap_or(cfg.packets_per_trial);
    if a.beta.is_some() {
        cfg.beta = a.beta;
    }
    if let Some(p) = &a.policies {
        cfg.policies = p.clone();
    }
    cfg.distance_mode = a.distance_mode.unwrap_or(cfg.distance_mode);
    if let Some(num_clusters) = a.clusters {
        cfg.fault_mode = FaultMode::Clustered {
            cluster_sigma: a.cluster_sigma.unwrap_or(1.0),
            num_clusters,
        };
    }
    a.training.apply(&mut cfg.training);
    cfg.validate()?;
    Ok(cfg)
}

fn pdr_charts(sweep: &PdrSweep, policies: &[PolicyKind]) -> (String, String) {
    let mut pdr =
        LineChart::new("Packet delivery ratio", "Fault density", "PDR").with_y_range(0.0, 1.0);
    let mut score =
        LineChart::new("Adaptive score", "Fault density", "Adaptive score").with_y_range(0.0, 1.05);
    for &p in policies {
        let recs = sweep.aggregate.iter().filter(|r| r.policy == p);
        pdr = pdr.with_series(Series::new(
            p.label(),
            recs.clone().map(|r| (r.density, r.pdr_mean)).collect(),
        ));
        let pts = recs
            .filter_map(|r| r.adaptive_score.map(|s| (r.density, s)))
            .collect();
        score = score.with_series(Series::new(p.label(), pts));
    }
    (pdr.to_svg(), score.to_svg())
}

pub fn sweep_pdr(g: &Global, a: &SweepArgs) -> Result<()> {
    let cfg = sweep_config(g, a)?;
    let dir = OutDir::create(&g.out_or("sweep-pdr"), &cfg)?;
    let sweep = run_pdr_sweep(&cfg)?;
    dir.write("pdr_raw.csv", &sweep.raw_csv())?;
    dir.write("pdr.csv", &sweep.aggregate_csv())?;
    dir.write("reachability.csv", &sweep.reachability_csv())?;
    let (pdr, score) = pdr_charts(&sweep, &cfg.policies);
    dir.write("pdr.svg", &pdr)?;
    dir.write("adaptive_score.svg", &score)?;
    print!("{}", sweep.aggregate_csv());
    dir.finish()
}

fn throughput_chart(sweep: &ThroughputSweep, policies: &[PolicyKind]) -> String {
    let title = format!(
        "Normalized throughput at density {} (beta {})",
        fmt6(sweep.density),
        fmt6(sweep.beta)
    );
    let mut chart =
        LineChart::new(title, "Offered load", "Normalized throughput").with_y_range(0.0, 1.0);
    for &p in policies {
        let pts = sweep
            .curve(p)
            .iter()
            .map(|r| (r.load, r.throughput_mean))
            .collect();
        chart = chart.with_series(Series::new(p.label(), pts));
    }
    chart.to_svg()
}

#[derive(Serialize)]
struct ThroughputSummary {
    density: f64,
    beta: f64,
    beta_calibrated: bool,
}

pub fn sweep_throughput(g: &Global, a: &SweepArgs) -> Result<()> {
    let cfg = sweep_config(g, a)?;
    let dir = OutDir::create(&g.out_or("sweep-throughput"), &cfg)?;
    let (sweep, _) = run_throughput_sweep(&cfg)?;
    dir.write("throughput.csv", &sweep.csv())?;
    dir.write("throughput.svg", &throughput_chart(&sweep, &cfg.policies))?;
    let summary = ThroughputSummary {
        density: sweep.density,
        beta: sweep.beta,
        beta_calibrated: sweep.beta_calibrated,
    };
    dir.write(
        "throughput_summary.json",
        &(serde_json::to_string_pretty(&summary)? + "\n"),
    )?;
    let how = if sweep.beta_calibrated {
        "calibrated"
    } else {
        "fixed"
    };
    println!("beta = {} ({how})", fmt6(sweep.beta));
    print!("{}", sweep.csv());
    dir.finish()
}

pub fn quadrant(g: &Global, a: &QuadrantArgs) -> Result<()> {
    let mut cfg: QuadrantConfig = g.load()?;
    if let Some(alpha) = g.alpha()? {
        cfg.alpha = alpha;
    }
    if let Some(s) = g.seed {
        cfg.master_seed = s;
    }
    if let Some(f) = &a.fault_counts {
        cfg.fault_counts = f.clone();
    }
    cfg.trials = a.trials.unwrap_or(cfg.trials);
    if let Some(p) = &a.policies {
        cfg.policies = p.clone();
    }
    cfg.restarts = a.restarts.unwrap_or(cfg.restarts);
    cfg.distance_mode = a.distance_mode.unwrap_or(cfg.distance_mode);
    a.training.apply(&mut cfg.training);

    let dir = OutDir::create(&g.out_or("quadrant"), &cfg)?;
    let study = quadrant_study(&cfg)?;
    dir.write("quadrant.csv", &study.csv())?;
    print!("{}", study.csv());
    dir.finish()
}
