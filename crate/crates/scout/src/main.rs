//! Command-line front end: run episodes and suites, synthesize scenario
//! files, and inspect score maps. Exit codes: 0 success, 2 bad input,
//! 3 runtime failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scout::bench::{render_table, run_episode, run_suite, EpisodeConfig, SuiteConfig};
use scout::error::{Error, Result};
use scout::priors::{
    load_score_map, map_quality, save_features, save_score_map, ScenarioParams,
};
use scout::world::{load_world, save_world};

#[derive(Parser)]
#[command(name = "scout", version, about = "Budgeted grid search with online map adaptation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single episode from a JSON config and print the result record.
    RunEpisode {
        /// Episode config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Also write result.json and the final belief map here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full suite: templates × seeds × arms, in parallel.
    RunSuite {
        /// Suite config (JSON).
        #[arg(long)]
        suite: PathBuf,
        /// Output directory for report.json, episodes.jsonl, and maps/.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: one per core).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Synthesize scenario files (world, base map, features) for later runs.
    GenScenarios {
        /// Scenario parameters (JSON); its seed field seeds the first
        /// scenario and increments per scenario.
        #[arg(long)]
        params: PathBuf,
        /// How many scenarios to generate.
        #[arg(long)]
        count: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print summary stats for a score map (plus quality against a world).
    InspectMap {
        /// Score map CSV.
        #[arg(long)]
        map: PathBuf,
        /// Optional world JSON to score the map against.
        #[arg(long)]
        world: Option<PathBuf>,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

fn cmd_run_episode(config: &Path, out: Option<&Path>) -> Result<()> {
    let cfg: EpisodeConfig = read_json(config)?;
    let (mut result, final_map) = run_episode(&cfg)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let map_rel = "lambda_map.csv";
        save_score_map(&final_map, dir.join(map_rel))?;
        result.lambda_map_path = Some(map_rel.to_string());
        let path = dir.join("result.json");
        let pretty = serde_json::to_string_pretty(&result)
            .map_err(|e| Error::Json { path: None, source: e })?;
        fs::write(&path, pretty + "\n").map_err(|e| Error::io(&path, e))?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&result).map_err(|e| Error::Json { path: None, source: e })?
    );
    Ok(())
}

fn cmd_run_suite(suite: &Path, out: &Path, jobs: Option<usize>) -> Result<()> {
    let cfg: SuiteConfig = read_json(suite)?;
    let report = run_suite(&cfg, out, jobs)?;
    print!("{}", render_table(&report));
    println!("wrote {} episodes to {}", report.episodes, out.display());
    Ok(())
}

fn cmd_gen_scenarios(params: &Path, count: u64, out: &Path) -> Result<()> {
    if count == 0 {
        return Err(Error::Config("count must be at least 1".into()));
    }
    let base_params: ScenarioParams = read_json(params)?;
    base_params.validate()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for i in 0..count {
        let mut p = base_params.clone();
        p.seed = base_params.seed.wrapping_add(i);
        let (world, base, features) = scout::priors::synth_scenario(&p)?;
        let tag = format!("{:04}", i);
        let gt_name = format!("gt_{tag}.csv");
        save_world(&world, out.join(format!("world_{tag}.json")), Some(&gt_name))?;
        save_score_map(&base, out.join(format!("base_{tag}.csv")))?;
        save_features(&features, out.join(format!("features_{tag}.json")))?;
    }
    println!("wrote {count} scenarios to {}", out.display());
    Ok(())
}

fn cmd_inspect_map(map_path: &Path, world_path: Option<&Path>) -> Result<()> {
    let map = load_score_map(map_path)?;
    let (min, max, mean) = map.stats();
    println!("side: {}", map.side());
    println!("cells: {}", map.len());
    println!("min: {min:.6}");
    println!("max: {max:.6}");
    println!("mean: {mean:.6}");
    if let Some(wp) = world_path {
        let world = load_world(wp)?;
        let quality = map_quality(&map, &world)?;
        println!("targets: {}", world.targets_total());
        println!("quality: {quality:.6}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::RunEpisode { config, out } => cmd_run_episode(config, out.as_deref()),
        Command::RunSuite { suite, out, jobs } => cmd_run_suite(suite, out, *jobs),
        Command::GenScenarios { params, count, out } => cmd_gen_scenarios(params, *count, out),
        Command::InspectMap { map, world } => cmd_inspect_map(map, world.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
