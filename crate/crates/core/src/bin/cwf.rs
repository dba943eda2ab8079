use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use cwf::config::{load_config, ExperimentConfig};
use cwf::constants::{ConstantCache, Moments};
use cwf::diffusion::{observe_trajectory, sample_stationary, simulate_cwf, ObservationSet, Trajectory};
use cwf::dual::{PrunePolicy, TransitionKernel};
use cwf::filtering::{run_filter, FilterTrace, Mixture};
use cwf::grid::{density_grid, marginal_grids};
use cwf::io::{self, Manifest, StagedDir};
use cwf::model::{ModelParams, MultiIndex};
use cwf::smoothing::run_smoother;
use cwf::{Error, Result};

#[derive(Parser)]
#[command(name = "cwf", version, about = "Filtering and smoothing for coupled Wright-Fisher diffusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a signal path and observations at the configured times.
    Simulate(Common),
    /// Run the filter on configured, supplied or simulated data.
    Filter(DataArgs),
    /// Run the filter and the smoother.
    Smooth(DataArgs),
    /// Tabulate normalising constants for all labels up to a total degree.
    Constants {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        max_degree: u32,
    },
    /// Estimate one dual transition distribution.
    DualTransition {
        #[command(flatten)]
        common: Common,
        /// Origin label, dash-joined (e.g. 4-6-4-6).
        #[arg(long)]
        origin: MultiIndex,
        #[arg(long)]
        dt: f64,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output` or `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    mc_samples: Option<usize>,
    /// `threshold:ε`, `topmass:τ` or `none`.
    #[arg(long)]
    prune: Option<PrunePolicy>,
    #[arg(long)]
    grid: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct DataArgs {
    #[command(flatten)]
    common: Common,
    /// Observations CSV (`time,locus,type,count`) overriding the config.
    #[arg(long)]
    observations: Option<PathBuf>,
}

struct Run {
    name: &'static str,
    config: ExperimentConfig,
    config_hash: String,
    params: ModelParams,
    workers: usize,
    out: PathBuf,
    started: Instant,
}

impl Run {
    fn new(name: &'static str, common: &Common) -> Result<Self> {
        let text = std::fs::read(&common.config).map_err(|e| Error::Io {
            path: common.config.display().to_string(),
            source: e,
        })?;
        let mut config = load_config(&common.config)?;
        if let Some(s) = common.seed {
            config.seed = s;
        }
        if let Some(r) = common.replicates {
            config.inference.replicates = r;
        }
        if let Some(b) = common.mc_samples {
            config.inference.mc_samples = b;
        }
        if let Some(p) = common.prune {
            config.inference.prune = p;
        }
        if let Some(g) = common.grid {
            config.inference.grid = g;
        }
        config.validate()?;
        if let Some(w) = common.workers {
            if w == 0 {
                return Err(Error::Config("--workers must be positive".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build_global()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        let out = common
            .out
            .clone()
            .or_else(|| config.output.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Self {
            name,
            params: config.params()?,
            config_hash: io::sha256_hex(&text),
            config,
            workers: rayon::current_num_threads(),
            out,
            started: Instant::now(),
        })
    }

    fn cache(&self) -> Result<ConstantCache> {
        ConstantCache::new(self.params.clone(), self.config.inference.mc_samples, self.config.seed)
    }

    fn finish(&self, staged: StagedDir) -> Result<PathBuf> {
        io::write_json(&staged.path("config.json"), &self.config)?;
        let mut files = staged.files()?;
        files.push("manifest.json".into());
        let manifest = Manifest {
            command: self.name.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: self.config_hash.clone(),
            root_seed: self.config.seed,
            mc_samples: self.config.inference.mc_samples,
            replicates: self.config.inference.replicates,
            prune: self.config.inference.prune.to_string(),
            workers: self.workers,
            started_unix_secs: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
                .saturating_sub(self.started.elapsed().as_secs()),
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
            files,
        };
        io::write_json(&staged.path("manifest.json"), &manifest)?;
        staged.commit()
    }
}

/// Simulates a path (from the configured start or the stationary law) and
/// observations with the configured sample sizes.
fn simulate_data(run: &Run, cache: &ConstantCache) -> Result<(Trajectory, ObservationSet)> {
    let cfg = &run.config;
    let x0 = match run.config.initial_point(&run.params)? {
        Some(x) => x,
        None => sample_stationary(cache, cfg.seed)?,
    };
    let traj = simulate_cwf(&run.params, &x0, &cfg.observation.times, cfg.simulation.pop_size, cfg.seed)?;
    let sizes = cfg
        .observation
        .sizes
        .clone()
        .ok_or_else(|| Error::Config("observation.sizes is required to simulate data".into()))?;
    let obs = observe_trajectory(run.params.shape(), &traj, &sizes, cfg.seed)?;
    Ok((traj, obs))
}

fn cmd_simulate(common: &Common) -> Result<PathBuf> {
    let run = Run::new("simulate", common)?;
    let cache = run.cache()?;
    let staged = StagedDir::create(&run.out)?;
    let (traj, obs) = simulate_data(&run, &cache)?;
    io::write_trajectory_csv(&staged.path("trajectory.csv"), run.params.shape(), &traj)?;
    io::write_observations_csv(&staged.path("observations.csv"), run.params.shape(), &obs)?;
    run.finish(staged)
}

fn write_mixture_grid(
    run: &Run,
    cache: &ConstantCache,
    staged: &StagedDir,
    stem: &str,
    mixture: &Mixture,
) -> Result<()> {
    if run.params.shape().alleles() == [2, 2] {
        let grid = density_grid(cache, mixture.iter(), run.config.inference.grid)?;
        io::write_grid_csv(&staged.path(&format!("{stem}.csv")), &grid)
    } else {
        let grids = marginal_grids(cache, mixture.iter(), run.config.inference.grid)?;
        io::write_marginal_csv(&staged.path(&format!("{stem}_marginal.csv")), &grids)
    }
}

fn load_data(run: &Run, args: &DataArgs, cache: &ConstantCache, staged: &StagedDir) -> Result<ObservationSet> {
    let obs = if let Some(path) = &args.observations {
        io::read_observations_csv(path, run.params.shape())?
    } else if run.config.observation.counts.is_some() {
        run.config.observations(&run.params)?
    } else {
        let (traj, obs) = simulate_data(run, cache)?;
        io::write_trajectory_csv(&staged.path("trajectory.csv"), run.params.shape(), &traj)?;
        obs
    };
    io::write_observations_csv(&staged.path("observations.csv"), run.params.shape(), &obs)?;
    Ok(obs)
}

fn filter_outputs(
    run: &Run,
    cache: &ConstantCache,
    kernel: &TransitionKernel<'_>,
    obs: &ObservationSet,
    staged: &StagedDir,
) -> Result<FilterTrace> {
    let trace = run_filter(kernel, obs, run.config.inference.prune)?;
    io::write_filter_json(&staged.path("filtering.json"), &trace)?;
    io::write_filter_diagnostics_csv(&staged.path("filtering_diagnostics.csv"), &trace)?;
    let mut means = Vec::new();
    for step in &trace.steps {
        write_mixture_grid(run, cache, staged, &format!("filtering_grid_{}", step.index), &step.filtering)?;
        means.push((step.index, step.time, step.filtering.mean(cache)?));
    }
    io::write_means_csv(&staged.path("filtering_means.csv"), run.params.shape(), &means)?;
    let prior = Mixture::prior(run.params.shape().total());
    write_mixture_grid(run, cache, staged, "prior_grid", &prior)?;
    Ok(trace)
}

fn cmd_filter(args: &DataArgs, smooth: bool) -> Result<PathBuf> {
    let run = Run::new(if smooth { "smooth" } else { "filter" }, &args.common)?;
    let cache = run.cache()?;
    let staged = StagedDir::create(&run.out)?;
    let obs = load_data(&run, args, &cache, &staged)?;
    let kernel = TransitionKernel::new(&cache, run.config.inference.replicates, run.config.seed);
    let trace = filter_outputs(&run, &cache, &kernel, &obs, &staged)?;
    if smooth {
        let smoothed = run_smoother(&kernel, &obs, &trace, run.config.inference.prune)?;
        io::write_smoothing_json(&staged.path("smoothing.json"), &smoothed)?;
        io::write_smoothing_diagnostics_csv(&staged.path("smoothing_diagnostics.csv"), &smoothed)?;
        let mut means = Vec::new();
        for step in &smoothed.steps {
            let collapsed = step.mixture.collapse()?;
            write_mixture_grid(&run, &cache, &staged, &format!("smoothing_grid_{}", step.index), &collapsed)?;
            means.push((step.index, step.time, collapsed.mean(&cache)?));
        }
        io::write_means_csv(&staged.path("smoothing_means.csv"), run.params.shape(), &means)?;
    }
    io::write_constants_csv(&staged.path("constants.csv"), &cache.table_snapshot())?;
    run.finish(staged)
}

fn cmd_constants(common: &Common, max_degree: u32) -> Result<PathBuf> {
    let run = Run::new("constants", common)?;
    let cache = run.cache()?;
    let staged = StagedDir::create(&run.out)?;
    for m in MultiIndex::all_up_to(run.params.shape().total(), max_degree) {
        cache.log_c_tilde(&m)?;
    }
    io::write_constants_csv(&staged.path("constants.csv"), &cache.table_snapshot())?;
    run.finish(staged)
}

fn cmd_dual_transition(common: &Common, origin: &MultiIndex, dt: f64) -> Result<PathBuf> {
    let run = Run::new("dual-transition", common)?;
    let cache = run.cache()?;
    let staged = StagedDir::create(&run.out)?;
    let kernel = TransitionKernel::new(&cache, run.config.inference.replicates, run.config.seed);
    let t = kernel.transition(origin, dt)?;
    io::write_transition_csv(&staged.path("transition.csv"), &t)?;
    run.finish(staged)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => cmd_simulate(c),
        Command::Filter(a) => cmd_filter(a, false),
        Command::Smooth(a) => cmd_filter(a, true),
        Command::Constants { common, max_degree } => cmd_constants(common, *max_degree),
        Command::DualTransition { common, origin, dt } => cmd_dual_transition(common, origin, *dt),
    };
    match result {
        Ok(out) => {
            println!("{}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = serde_json::json!({ "error": e.category(), "message": e.to_string() });
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
