//! `skyvote` command line: wires city generation, placement, link tradeoffs,
//! protocol simulation, fusion, and ledger auditing into reproducible runs.
//!
//! Every subcommand is non-interactive, writes outputs atomically
//! (temp + rename), and drops a `manifest.json` beside them recording the
//! tool version, config hash, seed, and file paths.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use skyvote_core::fusion::{build_crisis_map, TrustWeights};
use skyvote_core::geometry::visibility_matrix;
use skyvote_core::geometry::{
    load_urban_model, Building, CityFile, GroundGrid, Point3, Rect, UrbanModel,
};
use skyvote_core::ledger::{ChainStatus, Ledger, ALL_LABELS};
use skyvote_core::optics::{tradeoff_sweep, ScanConfig};
use skyvote_core::placement::{greedy_place, grid_candidates, PlacementProblem};
use skyvote_core::protocol::{
    run_scenario, AssignmentPolicy, GroundAgentSpec, ProtocolLink, ScenarioConfig, VerifierSpec,
};

/// Embedded default configuration; `--config` swaps in another file.
pub const DEFAULT_CONFIG: &str = include_str!("../config/defaults.json");

// ---------------------------------------------------------------- config

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    pub gen_city: GenCityDefaults,
    pub plan: PlanDefaults,
    pub link: ProtocolLink,
    pub scan: ScanConfig,
    pub sweep: SweepDefaults,
    pub weights: TrustWeights,
    pub fuse: FuseDefaults,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenCityDefaults {
    pub rows: u32,
    pub cols: u32,
    pub extent_m: [f64; 2],
    pub building_side_m: f64,
    pub height_range_m: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDefaults {
    pub grid_cell_m: f64,
    pub sample_height_m: f64,
    pub candidate_spacing_m: f64,
    pub altitude_m: f64,
    pub n_los: u32,
    pub max_uavs: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDefaults {
    pub wz_values_m: Vec<f64>,
    pub range_m: f64,
    pub jitter_fraction: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuseDefaults {
    pub grid_cell_m: f64,
    pub sample_height_m: f64,
}

impl Config {
    /// Loads `path` or the embedded defaults, returning the parsed config and
    /// the SHA-256 of the exact bytes it came from.
    pub fn load(path: Option<&Path>) -> Result<(Config, String)> {
        let text = match path {
            Some(p) => {
                fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?
            }
            None => DEFAULT_CONFIG.to_string(),
        };
        let config: Config = serde_json::from_str(&text).context("parsing config")?;
        if config.version != 1 {
            bail!("unsupported config version {} (expected 1)", config.version);
        }
        Ok((config, hex::encode(Sha256::digest(text.as_bytes()))))
    }
}

// ---------------------------------------------------------------- manifest

/// Provenance record written as `manifest.json` beside every run's outputs.
/// The duration field is informational and is the one artifact byte that may
/// differ between otherwise identical runs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub duration_ms: u64,
}

/// Writes `bytes` to `path` via a temp file in the same directory plus an
/// atomic rename, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    use std::io::Write;
    tmp.write_all(bytes).context("writing temp file")?;
    tmp.persist(path)
        .with_context(|| format!("renaming temp file to {}", path.display()))?;
    Ok(())
}

struct RunContext {
    config: Config,
    config_sha256: String,
    out_dir: PathBuf,
    seed: Option<u64>,
    started: Instant,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl RunContext {
    fn input(&mut self, p: &Path) {
        self.inputs.push(p.display().to_string());
    }

    fn write_output(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        write_atomic(&path, bytes)?;
        self.outputs.push(path.display().to_string());
        Ok(path)
    }

    fn finish(mut self, command: &str) -> Result<()> {
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: self.config_sha256.clone(),
            seed: self.seed,
            inputs: std::mem::take(&mut self.inputs),
            outputs: std::mem::take(&mut self.outputs),
            duration_ms: self.started.elapsed().as_millis() as u64,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        write_atomic(
            &self.out_dir.join("manifest.json"),
            format!("{text}\n").as_bytes(),
        )
    }
}

// ---------------------------------------------------------------- CLI types

#[derive(Debug, Parser)]
#[command(
    name = "skyvote",
    version,
    about = "Crisis-vote verification simulator"
)]
pub struct Cli {
    /// Config file; defaults to the embedded configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (falls back to $SKYVOTE_OUT_DIR, then ".").
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Seed for seeded subcommands (gen-city default 0; overrides the
    /// scenario seed in simulate). Ignored by deterministic subcommands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded Manhattan-grid synthetic city (city.json).
    GenCity(GenCityArgs),
    /// Plan UAV placement for a city (placement.json, coverage_curve.csv).
    Plan(PlanArgs),
    /// Emit the beam-footprint scan-time/outage tradeoff (tradeoff.csv).
    ScanTradeoff(ScanTradeoffArgs),
    /// Run a t1–t5 scenario (report.json, ledger.ndjson, metrics.csv).
    Simulate(SimulateArgs),
    /// Fuse a ledger into a trust-weighted crisis map (crisis_map.csv).
    Fuse(FuseArgs),
    /// Audit a ledger dump; exit 0 when intact, 1 printing the corrupt index.
    VerifyLedger(VerifyLedgerArgs),
}

#[derive(Debug, Args)]
pub struct GenCityArgs {
    #[arg(long)]
    pub rows: Option<u32>,
    #[arg(long)]
    pub cols: Option<u32>,
    /// Square building side, meters; must leave a street within each grid cell.
    #[arg(long)]
    pub building_side_m: Option<f64>,
    #[arg(long)]
    pub height_min_m: Option<f64>,
    #[arg(long)]
    pub height_max_m: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// City JSON produced by gen-city (or hand-written, same schema).
    #[arg(long)]
    pub city: PathBuf,
    #[arg(long)]
    pub n_los: Option<u32>,
    #[arg(long)]
    pub max_uavs: Option<usize>,
    #[arg(long)]
    pub altitude_m: Option<f64>,
    /// Candidate-site grid spacing, meters.
    #[arg(long)]
    pub spacing_m: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScanTradeoffArgs {
    #[arg(long)]
    pub range_m: Option<f64>,
    /// Pointing jitter as a fraction of each beam radius.
    #[arg(long)]
    pub jitter_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON (keys: seed, city, placement, agents, link, epochs,
    /// assignment_policy); relative paths resolve against its directory.
    #[arg(long)]
    pub scenario: PathBuf,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Ledger dump to score (ledger.ndjson).
    #[arg(long)]
    pub ledger: PathBuf,
    /// City JSON whose bounds define the crisis-map grid extent.
    #[arg(long)]
    pub city: PathBuf,
    /// Trust weights JSON; defaults to the config's weights.
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyLedgerArgs {
    #[arg(long)]
    pub ledger: PathBuf,
}

// ---------------------------------------------------------------- scenario file

/// On-disk scenario, as documented for `simulate`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    seed: u64,
    city: PathBuf,
    placement: PathBuf,
    agents: AgentsSection,
    #[serde(default)]
    link: Option<ProtocolLink>,
    epochs: u32,
    #[serde(default)]
    assignment_policy: Option<AssignmentSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentsSection {
    ground: Vec<GroundAgentSpec>,
    verifiers: Vec<VerifierSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssignmentSection {
    policy: AssignmentPolicy,
    #[serde(default)]
    min_assignees: Option<usize>,
}

/// On-disk placement, as emitted by `plan`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementFile {
    pub version: u32,
    pub sites: Vec<Point3>,
}

pub fn load_placement(path: &Path) -> Result<Vec<Point3>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading placement {}", path.display()))?;
    let file: PlacementFile = serde_json::from_str(&text).context("parsing placement")?;
    if file.version != 1 {
        bail!(
            "unsupported placement version {} (expected 1)",
            file.version
        );
    }
    Ok(file.sites)
}

// ---------------------------------------------------------------- dispatch

pub fn run(cli: Cli) -> Result<ExitCode> {
    let (config, config_sha256) = Config::load(cli.config.as_deref())?;
    let out_dir = cli
        .out_dir
        .or_else(|| std::env::var_os("SKYVOTE_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let mut ctx = RunContext {
        config,
        config_sha256,
        out_dir,
        seed: cli.seed,
        started: Instant::now(),
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    match cli.command {
        Command::GenCity(args) => {
            gen_city(&mut ctx, &args)?;
            ctx.finish("gen-city")?;
        }
        Command::Plan(args) => {
            plan(&mut ctx, &args)?;
            ctx.finish("plan")?;
        }
        Command::ScanTradeoff(args) => {
            scan_tradeoff(&mut ctx, &args)?;
            ctx.finish("scan-tradeoff")?;
        }
        Command::Simulate(args) => {
            simulate(&mut ctx, &args)?;
            ctx.finish("simulate")?;
        }
        Command::Fuse(args) => {
            fuse(&mut ctx, &args)?;
            ctx.finish("fuse")?;
        }
        Command::VerifyLedger(args) => {
            let verdict = verify_ledger(&mut ctx, &args)?;
            ctx.finish("verify-ledger")?;
            return Ok(verdict);
        }
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------- gen-city

/// Builds the Manhattan-grid city: cell (row r, col c) spans a
/// `pitch = extent / count` square; its building is the centered square of
/// side `building_side_m`; heights are drawn row-major (rows outer) from
/// ChaCha8(seed) uniformly over `height_range_m`.
pub fn generate_city(
    rows: u32,
    cols: u32,
    extent_m: [f64; 2],
    building_side_m: f64,
    height_range_m: [f64; 2],
    seed: u64,
) -> Result<CityFile> {
    if !(extent_m[0] > 0.0 && extent_m[1] > 0.0) {
        bail!("extent must be positive, got {extent_m:?}");
    }
    let [h_min, h_max] = height_range_m;
    if !(h_min > 0.0 && h_max >= h_min && h_max.is_finite()) {
        bail!("height range must satisfy 0 < min ≤ max, got {height_range_m:?}");
    }
    let bounds = Rect::new([0.0, 0.0], extent_m);
    let mut buildings = Vec::with_capacity((rows * cols) as usize);
    if rows > 0 && cols > 0 {
        let pitch = [extent_m[0] / cols as f64, extent_m[1] / rows as f64];
        if !(building_side_m > 0.0 && building_side_m < pitch[0] && building_side_m < pitch[1]) {
            bail!(
                "building side {building_side_m} m must be positive and smaller than the \
                 {:.1} m × {:.1} m grid pitch",
                pitch[0],
                pitch[1]
            );
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = building_side_m / 2.0;
        for r in 0..rows {
            for c in 0..cols {
                let cx = (c as f64 + 0.5) * pitch[0];
                let cy = (r as f64 + 0.5) * pitch[1];
                let height = if h_min == h_max {
                    h_min
                } else {
                    rng.gen_range(h_min..h_max)
                };
                buildings.push(Building {
                    footprint: vec![
                        [cx - half, cy - half],
                        [cx + half, cy - half],
                        [cx + half, cy + half],
                        [cx - half, cy + half],
                    ],
                    height,
                });
            }
        }
    }
    let city = CityFile {
        version: 1,
        bounds,
        buildings,
    };
    UrbanModel::from_city_file(city.clone()).context("generated city failed validation")?;
    Ok(city)
}

fn gen_city(ctx: &mut RunContext, args: &GenCityArgs) -> Result<()> {
    let d = ctx.config.gen_city.clone();
    let seed = ctx.seed.unwrap_or(0);
    ctx.seed = Some(seed);
    let city = generate_city(
        args.rows.unwrap_or(d.rows),
        args.cols.unwrap_or(d.cols),
        d.extent_m,
        args.building_side_m.unwrap_or(d.building_side_m),
        [
            args.height_min_m.unwrap_or(d.height_range_m[0]),
            args.height_max_m.unwrap_or(d.height_range_m[1]),
        ],
        seed,
    )?;
    let text = serde_json::to_string_pretty(&city)?;
    ctx.write_output("city.json", format!("{text}\n").as_bytes())?;
    Ok(())
}

// ---------------------------------------------------------------- plan

fn plan(ctx: &mut RunContext, args: &PlanArgs) -> Result<()> {
    let d = ctx.config.plan.clone();
    let n_los = args.n_los.unwrap_or(d.n_los);
    let model = load_urban_model(&args.city)
        .with_context(|| format!("loading city {}", args.city.display()))?;
    ctx.input(&args.city);

    let grid = GroundGrid::covering(&model.bounds(), d.grid_cell_m, d.sample_height_m)?;
    let candidates = grid_candidates(
        &model.bounds(),
        args.spacing_m.unwrap_or(d.candidate_spacing_m),
        args.altitude_m.unwrap_or(d.altitude_m),
    );
    // Coverage is over open area: cells whose center sits inside a building
    // cannot host a voter and are unreachable by construction.
    let targets: Vec<_> = grid
        .cell_centers()
        .into_iter()
        .filter(|c| model.is_open_ground(c.xy()))
        .collect();
    let vis = visibility_matrix(&candidates, &targets, &model)?;
    let problem = PlacementProblem::new(
        candidates,
        targets,
        n_los,
        args.max_uavs.unwrap_or(d.max_uavs),
    )?;
    let result = greedy_place(&problem, &vis)?;

    let placement = PlacementFile {
        version: 1,
        sites: result.chosen_sites.clone(),
    };
    let text = serde_json::to_string_pretty(&placement)?;
    ctx.write_output("placement.json", format!("{text}\n").as_bytes())?;

    let mut csv = String::from("k,n_los,coverage_fraction\n");
    for &(k, fraction) in &result.coverage_curve {
        csv.push_str(&format!("{k},{n_los},{fraction}\n"));
    }
    ctx.write_output("coverage_curve.csv", csv.as_bytes())?;
    Ok(())
}

// ---------------------------------------------------------------- scan-tradeoff

fn scan_tradeoff(ctx: &mut RunContext, args: &ScanTradeoffArgs) -> Result<()> {
    let sweep = ctx.config.sweep.clone();
    let rows = tradeoff_sweep(
        &sweep.wz_values_m,
        args.range_m.unwrap_or(sweep.range_m),
        &ctx.config.link.beam,
        &ctx.config.link.mrr,
        &ctx.config.link.noise,
        &ctx.config.scan,
        args.jitter_fraction.unwrap_or(sweep.jitter_fraction),
    )?;
    let mut csv = String::from("wz_m,scan_time_s,outage_probability\n");
    for row in rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            row.wz_m, row.scan_time_s, row.outage_probability
        ));
    }
    ctx.write_output("tradeoff.csv", csv.as_bytes())?;
    Ok(())
}

// ---------------------------------------------------------------- simulate

fn simulate(ctx: &mut RunContext, args: &SimulateArgs) -> Result<()> {
    let text = fs::read_to_string(&args.scenario)
        .with_context(|| format!("reading scenario {}", args.scenario.display()))?;
    let file: ScenarioFile = serde_json::from_str(&text).context("parsing scenario")?;
    ctx.input(&args.scenario);

    let base = args.scenario.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let city_path = resolve(&file.city);
    let placement_path = resolve(&file.placement);
    let model = load_urban_model(&city_path)
        .with_context(|| format!("loading city {}", city_path.display()))?;
    let sites = load_placement(&placement_path)?;
    ctx.input(&city_path);
    ctx.input(&placement_path);

    let seed = ctx.seed.unwrap_or(file.seed);
    ctx.seed = Some(seed);
    let (policy, min_assignees) = match file.assignment_policy {
        Some(a) => (
            a.policy,
            a.min_assignees.unwrap_or(ctx.config.plan.n_los as usize),
        ),
        None => (AssignmentPolicy::Nearest, ctx.config.plan.n_los as usize),
    };
    let scenario = ScenarioConfig {
        seed,
        model,
        sites,
        ground: file.agents.ground,
        verifiers: file.agents.verifiers,
        link: file.link.unwrap_or(ctx.config.link),
        epochs: file.epochs,
        policy,
        min_assignees,
    };
    let run = run_scenario(scenario)?;

    #[derive(Serialize)]
    struct Report<'a> {
        summary: &'a skyvote_core::protocol::ScenarioSummary,
        epochs: &'a [skyvote_core::protocol::EpochReport],
    }
    let report = Report {
        summary: &run.summary,
        epochs: &run.reports,
    };
    let text = serde_json::to_string_pretty(&report)?;
    ctx.write_output("report.json", format!("{text}\n").as_bytes())?;

    ctx.write_output("ledger.ndjson", run.ledger.to_ndjson().as_bytes())?;

    let mut csv =
        String::from("epoch,votes,verified,unverified,unknown,false_verified,suppressed\n");
    for r in &run.reports {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.epoch,
            r.votes_submitted,
            r.verified(),
            r.unverified(),
            r.unknown(),
            r.false_verified,
            r.suppressed
        ));
    }
    ctx.write_output("metrics.csv", csv.as_bytes())?;

    if !run.summary.chain_ok {
        bail!("final ledger failed chain verification");
    }
    Ok(())
}

// ---------------------------------------------------------------- fuse

fn fuse(ctx: &mut RunContext, args: &FuseArgs) -> Result<()> {
    let ledger_text = fs::read_to_string(&args.ledger)
        .with_context(|| format!("reading ledger {}", args.ledger.display()))?;
    let ledger = Ledger::from_ndjson(&ledger_text).context("loading ledger")?;
    ctx.input(&args.ledger);
    let model = load_urban_model(&args.city)
        .with_context(|| format!("loading city {}", args.city.display()))?;
    ctx.input(&args.city);

    let weights = match &args.weights {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading weights {}", p.display()))?;
            ctx.input(p);
            serde_json::from_str::<TrustWeights>(&text).context("parsing weights")?
        }
        None => ctx.config.weights,
    };

    let grid = GroundGrid::covering(
        &model.bounds(),
        ctx.config.fuse.grid_cell_m,
        ctx.config.fuse.sample_height_m,
    )?;
    let everywhere = Rect::new([f64::NEG_INFINITY; 2], [f64::INFINITY; 2]);
    let entries = ledger.query_votes(&everywhere, (i64::MIN, i64::MAX));
    let map = build_crisis_map(&entries, &weights, &grid)?;

    let mut csv = String::from("cell_x,cell_y,label,score\n");
    for cell in 0..grid.n_cells() {
        let (cell_x, cell_y) = grid.cell_coords(cell);
        for &label in &ALL_LABELS {
            let score = map.score(cell, label);
            if score > 0.0 {
                csv.push_str(&format!("{cell_x},{cell_y},{},{score}\n", label.as_str()));
            }
        }
    }
    ctx.write_output("crisis_map.csv", csv.as_bytes())?;
    if map.out_of_extent() > 0 {
        println!(
            "out-of-extent votes skipped from the map: {}",
            map.out_of_extent()
        );
    }
    Ok(())
}

// ---------------------------------------------------------------- verify-ledger

fn verify_ledger(ctx: &mut RunContext, args: &VerifyLedgerArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.ledger)
        .with_context(|| format!("reading ledger {}", args.ledger.display()))?;
    ctx.input(&args.ledger);
    match Ledger::from_ndjson(&text) {
        Err(e) => {
            // A line that fails the strict parse is a corrupt entry; lines are
            // 1-based, entries 0-based.
            println!(
                "corrupt at index {}: {}",
                e.line.saturating_sub(1),
                e.reason
            );
            Ok(ExitCode::from(1))
        }
        Ok(ledger) => match ledger.verify_chain() {
            ChainStatus::CorruptAt(i) => {
                println!("corrupt at index {i}");
                Ok(ExitCode::from(1))
            }
            ChainStatus::Ok => {
                println!("ok: {} entries", ledger.len());
                Ok(ExitCode::SUCCESS)
            }
        },
    }
}
