//! End-to-end runs: configuration, stage sequencing, caching and artifacts.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{HyperRect, Partition, StateId};
use crate::imdp::{
    assemble_imdp, export_prism, map_spec, robust_value_iteration, write_file, write_values_csv, AbstractionStats,
    Horizon, IntervalImdp, ReachAvoidSpec, Scheduler, ViSettings,
};
use crate::intervals::NoiseSet;
use crate::reachability::{build_action_table, ActionTable};
use crate::synthesis::{
    monte_carlo_validate, value_heatmap, write_trajectory_csv, ContinuousSpec, RefinedPolicy, TrajectoryRecord,
    ValidationSummary,
};
use crate::systems::{DynamicsModel, SamplingGrid, SystemConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub states_per_cell: Vec<usize>,
    pub inputs: Vec<usize>,
    pub voxels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbstractionConfig {
    /// Maximum scaling factor `Λ`.
    pub lambda_max: f64,
    pub noise_samples: usize,
    #[serde(default = "default_risk")]
    pub overall_risk: f64,
}

fn default_risk() -> f64 {
    0.05
}

/// `"inf"` or a step count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HorizonSetting {
    Steps(usize),
    Named(InfiniteHorizon),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfiniteHorizon {
    #[serde(rename = "inf")]
    Inf,
}

impl HorizonSetting {
    pub fn horizon(self) -> Horizon {
        match self {
            HorizonSetting::Steps(h) => Horizon::Finite(h),
            HorizonSetting::Named(InfiniteHorizon::Inf) => Horizon::Infinite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    /// Initial continuous state `x_I`.
    pub initial: Vec<f64>,
    pub goal: Vec<HyperRect>,
    #[serde(rename = "unsafe", default)]
    pub unsafe_boxes: Vec<HyperRect>,
    /// Leaving the partitioned domain is unsafe.
    pub outside_unsafe: bool,
    pub horizon: HorizonSetting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    ViSettings::default().tol
}

fn default_max_iter() -> usize {
    ViSettings::default().max_iter
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    /// Monte Carlo episodes; 0 skips validation.
    pub runs: usize,
    pub max_steps: usize,
    /// Trajectories written as CSV.
    pub trajectories: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            runs: 2000,
            max_steps: 1000,
            trajectories: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Reuse cached scaling-factor tables.
    #[serde(default = "default_true")]
    pub cache: bool,
}

fn default_true() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            cache: true,
        }
    }
}

/// Complete description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub seed: u64,
    pub system: SystemConfig,
    pub partition: PartitionConfig,
    pub sampling: SamplingConfig,
    pub abstraction: AbstractionConfig,
    pub spec: SpecConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub validation: ValidationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format(path, e))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let a = &self.abstraction;
        if !(a.lambda_max > 0.0) {
            return bad(format!("lambda_max must be positive, got {}", a.lambda_max));
        }
        if !(a.overall_risk > 0.0 && a.overall_risk < 1.0) {
            return bad(format!("overall_risk must be in (0, 1), got {}", a.overall_risk));
        }
        if a.noise_samples == 0 {
            return bad("noise_samples must be at least 1".into());
        }
        let s = &self.sampling;
        for (name, grid) in [
            ("partition.cells", &self.partition.cells),
            ("sampling.states_per_cell", &s.states_per_cell),
            ("sampling.inputs", &s.inputs),
            ("sampling.voxels", &s.voxels),
        ] {
            if grid.is_empty() || grid.contains(&0) {
                return bad(format!("{name} entries must be at least 1"));
            }
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return bad("solver needs a positive tolerance and iteration cap".into());
        }
        if self.validation.runs != 0 && (self.validation.runs < 100 || self.validation.max_steps == 0) {
            return bad("validation needs at least 100 runs and 1 step (or runs = 0 to skip)".into());
        }
        Ok(())
    }

    /// Hash of everything the scaling-factor table depends on.
    pub fn action_table_key(&self) -> String {
        let key = serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "system": self.system,
            "partition": self.partition,
            "sampling": self.sampling,
        });
        let digest = Sha256::digest(key.to_string().as_bytes());
        hex::encode(&digest[..8])
    }
}

fn validated(b: &HyperRect) -> Result<HyperRect> {
    HyperRect::new(b.lower().to_vec(), b.upper().to_vec())
}

/// Wall time of one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Default)]
pub struct Timer {
    stages: Vec<StageTiming>,
}

impl Timer {
    /// Runs `f` as stage `name`: logs its duration and tags errors with it.
    pub fn stage<T>(&mut self, name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        log::info!("stage {name}: start");
        let start = Instant::now();
        let out = f().map_err(|e| Error::Stage {
            stage: name,
            source: Box::new(e),
        });
        let seconds = start.elapsed().as_secs_f64();
        log::info!("stage {name}: {seconds:.3} s");
        self.stages.push(StageTiming {
            stage: name.to_string(),
            seconds,
        });
        out
    }

    pub fn into_stages(self) -> Vec<StageTiming> {
        self.stages
    }
}

/// Everything derived from a [`RunConfig`] before any heavy work.
pub struct Pipeline {
    config: RunConfig,
    model: Arc<dyn DynamicsModel>,
    partition: Partition,
    grid: SamplingGrid,
    spec: ReachAvoidSpec,
    continuous: ContinuousSpec,
    initial_state: StateId,
}

/// RNG stream reserved for the noise set; Monte Carlo runs use streams
/// `0..runs`.
const NOISE_STREAM: u64 = u64::MAX;

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let model = config.system.build()?;
        let domain = HyperRect::new(config.partition.lower.clone(), config.partition.upper.clone())?;
        let partition = Partition::new(domain.clone(), config.partition.cells.clone())?;
        let n = partition.dim();
        if model.state_dim() != n || config.sampling.voxels.len() != n {
            return Err(Error::Config(format!(
                "partition, voxel grid and system must agree on the state dimension {}",
                model.state_dim()
            )));
        }
        let grid = SamplingGrid {
            states_per_cell: config.sampling.states_per_cell.clone(),
            inputs: config.sampling.inputs.clone(),
        };
        grid.validate(model.state_dim(), model.input_dim())
            .map_err(|e| Error::Config(e.to_string()))?;
        let goal = config.spec.goal.iter().map(validated).collect::<Result<Vec<_>>>()?;
        let unsafe_boxes = config
            .spec
            .unsafe_boxes
            .iter()
            .map(validated)
            .collect::<Result<Vec<_>>>()?;
        let spec = map_spec(
            &partition,
            &goal,
            &unsafe_boxes,
            config.spec.outside_unsafe,
            config.spec.horizon.horizon(),
        )?;
        if config.spec.initial.len() != n {
            return Err(Error::Config("initial state has the wrong dimension".into()));
        }
        let initial_state = partition.region_of(&config.spec.initial);
        let continuous = ContinuousSpec {
            goal,
            unsafe_boxes,
            safe_domain: config.spec.outside_unsafe.then_some(domain),
        };
        Ok(Self {
            config,
            model,
            partition,
            grid,
            spec,
            continuous,
            initial_state,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn model(&self) -> &dyn DynamicsModel {
        self.model.as_ref()
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn spec(&self) -> &ReachAvoidSpec {
        &self.spec
    }

    pub fn continuous_spec(&self) -> &ContinuousSpec {
        &self.continuous
    }

    pub fn initial_state(&self) -> StateId {
        self.initial_state
    }

    pub fn output_dir(&self) -> &Path {
        &self.config.output.dir
    }

    fn cache_path(&self) -> PathBuf {
        self.output_dir()
            .join("cache")
            .join(format!("actions-{}.bin", self.config.action_table_key()))
    }

    /// Scaling factors for every sampled pair, thresholded at the
    /// configured `Λ`. Read from and written to the cache when enabled.
    pub fn action_table(&self) -> Result<ActionTable> {
        let lambda_max = self.config.abstraction.lambda_max;
        let path = self.cache_path();
        if self.config.output.cache && path.exists() {
            log::info!("reusing scaling factors from {}", path.display());
            let table: ActionTable = read_bin(&path)?;
            return Ok(table.with_lambda_max(lambda_max));
        }
        let table = build_action_table(
            self.model(),
            &self.partition,
            &self.grid,
            &self.config.sampling.voxels,
            lambda_max,
        )?;
        if table.degenerate_samples() > 0 {
            log::warn!("{} samples had r(x', 2) <= r(x', 1) and were skipped", table.degenerate_samples());
        }
        if self.config.output.cache {
            write_bin(&path, &table)?;
        }
        Ok(table)
    }

    /// The shared noise set, reproducible from the seed.
    pub fn noise(&self) -> Result<NoiseSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(NOISE_STREAM);
        NoiseSet::draw(self.model(), &mut rng, self.config.abstraction.noise_samples)
    }

    pub fn abstraction(&self, table: &ActionTable) -> Result<(IntervalImdp, AbstractionStats)> {
        let noise = self.noise()?;
        assemble_imdp(
            &self.partition,
            table,
            &noise,
            self.config.abstraction.overall_risk,
            self.initial_state,
        )
    }

    pub fn synthesize(&self, imdp: &IntervalImdp) -> Result<Scheduler> {
        robust_value_iteration(
            imdp,
            &self.spec,
            ViSettings {
                tol: self.config.solver.tol,
                max_iter: self.config.solver.max_iter,
            },
        )
    }

    /// Monte Carlo check of the value at `x_I`; `None` when disabled.
    pub fn validate(
        &self,
        table: &ActionTable,
        scheduler: &Scheduler,
    ) -> Result<Option<(ValidationSummary, Vec<TrajectoryRecord>)>> {
        let v = &self.config.validation;
        if v.runs == 0 {
            return Ok(None);
        }
        let policy = RefinedPolicy::new(scheduler, table, &self.partition)?;
        monte_carlo_validate(
            self.model(),
            &policy,
            &self.continuous,
            &self.config.spec.initial,
            v.runs,
            v.max_steps,
            self.config.seed,
            scheduler.values[self.initial_state],
            v.trajectories,
        )
        .map(Some)
    }
}

fn write_bin<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    bincode::serialize_into(BufWriter::new(f), value).map_err(|e| Error::format(path, e))
}

fn read_bin<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    bincode::deserialize_from(BufReader::new(f)).map_err(|e| Error::format(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Run record. Everything except `timing` is a function of the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub imdp: AbstractionStats,
    pub degenerate_samples: usize,
    pub initial_state: StateId,
    pub initial_value: f64,
    pub solver: SolverReport,
    pub validation: Option<ValidationSummary>,
    /// SHA-256 of each artifact, by file name relative to the output dir.
    pub artifacts: Vec<(String, String)>,
    pub timing: Vec<StageTiming>,
}

impl Manifest {
    /// JSON text without the timing section.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("manifest serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("manifest serializes")
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";
const ACTIONS_BIN: &str = "actions.bin";
const IMDP_BIN: &str = "imdp.bin";
const SCHEDULER_BIN: &str = "scheduler.bin";

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_trajectories(dir: &Path, records: &[TrajectoryRecord], input_dim: usize) -> Result<Vec<String>> {
    let sub = dir.join("trajectories");
    create_dir(&sub)?;
    let mut names = Vec::new();
    for (r, rec) in records.iter().enumerate() {
        let name = format!("trajectories/traj_{r:03}.csv");
        write_trajectory_csv(rec, input_dim, &dir.join(&name))?;
        names.push(name);
    }
    Ok(names)
}

/// All stages after the scaling-factor table, writing artifacts to the
/// configured output directory.
fn run_from_table(pipeline: &Pipeline, table: &ActionTable, mut timer: Timer) -> Result<Manifest> {
    let dir = pipeline.output_dir().to_path_buf();
    create_dir(&dir)?;
    let mut artifacts = vec!["config.toml".to_string()];
    write_file(&dir.join("config.toml"), pipeline.config().to_toml_string()?.as_bytes())?;

    timer.stage("diagnostics", || {
        table.write_diagnostics(&dir.join("actions.jsonl"))?;
        write_bin(&dir.join(ACTIONS_BIN), table)
    })?;
    artifacts.push("actions.jsonl".into());

    let (imdp, stats) = timer.stage("intervals", || pipeline.abstraction(table))?;
    log::info!(
        "IMDP: {} states, {} actions, {} transitions, beta = {:.4e}",
        stats.num_states,
        stats.num_actions,
        stats.num_transitions,
        stats.beta
    );
    timer.stage("export", || {
        write_bin(&dir.join(IMDP_BIN), &(&imdp, &stats))?;
        export_prism(&imdp, pipeline.spec(), &dir.join("model.tra"), &dir.join("model.lab"))
    })?;
    artifacts.extend(["model.tra".into(), "model.lab".into()]);

    let scheduler = timer.stage("synthesis", || pipeline.synthesize(&imdp))?;
    let initial_value = scheduler.values[pipeline.initial_state()];
    log::info!(
        "value at initial state {}: {initial_value:.6} ({} sweeps)",
        pipeline.initial_state(),
        scheduler.iterations
    );
    timer.stage("values", || {
        write_bin(&dir.join(SCHEDULER_BIN), &scheduler)?;
        write_values_csv(pipeline.partition(), &scheduler, &dir.join("values.csv"))?;
        value_heatmap(&scheduler, pipeline.partition(), &dir.join("heatmap.csv"))
    })?;
    artifacts.extend(["values.csv".into(), "heatmap.csv".into()]);

    let validation = timer.stage("validation", || {
        let Some((summary, records)) = pipeline.validate(table, &scheduler)? else {
            return Ok(None);
        };
        write_json(&dir.join("validation.json"), &summary)?;
        let names = write_trajectories(&dir, &records, pipeline.model().input_dim())?;
        Ok(Some((summary, names)))
    })?;
    let validation = validation.map(|(summary, names)| {
        artifacts.push("validation.json".into());
        artifacts.extend(names);
        log::info!(
            "validation: {}/{} successes, Wilson upper {:.4} vs bound {:.4}: {}",
            summary.successes,
            summary.runs,
            summary.wilson_upper,
            summary.imdp_bound,
            if summary.pass { "pass" } else { "FAIL" }
        );
        summary
    });

    let artifacts = artifacts
        .into_iter()
        .map(|name| sha256_file(&dir.join(&name)).map(|h| (name, h)))
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        config: pipeline.config().clone(),
        imdp: stats,
        degenerate_samples: table.degenerate_samples(),
        initial_state: pipeline.initial_state(),
        initial_value,
        solver: SolverReport {
            iterations: scheduler.iterations,
            residual: scheduler.residual,
            converged: scheduler.converged,
        },
        validation,
        artifacts,
        timing: timer.into_stages(),
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Full pipeline: scaling factors, intervals, IMDP, synthesis, validation.
pub fn run_pipeline(config: RunConfig) -> Result<Manifest> {
    let mut timer = Timer::default();
    let pipeline = timer.stage("setup", || Pipeline::new(config))?;
    let table = timer.stage("actions", || pipeline.action_table())?;
    run_from_table(&pipeline, &table, timer)
}

/// Reruns everything downstream of the scaling factors for each `Λ`, each
/// into `<output>/lambda_<Λ>/`, and writes `<output>/sweep.csv`.
pub fn run_sweep(config: RunConfig, lambdas: &[f64]) -> Result<Vec<Manifest>> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one lambda".into()));
    }
    let root = config.output.dir.clone();
    let mut timer = Timer::default();
    let base = timer.stage("setup", || Pipeline::new(config.clone()))?;
    let table = timer.stage("actions", || base.action_table())?;
    let base_timing = timer.into_stages();

    let mut manifests = Vec::new();
    let mut csv = String::from("lambda_max,actions,transitions,initial_value\n");
    for &lambda in lambdas {
        let mut cfg = config.clone();
        cfg.abstraction.lambda_max = lambda;
        cfg.output.dir = root.join(format!("lambda_{lambda}"));
        let pipeline = Pipeline::new(cfg)?;
        let timer = Timer {
            stages: base_timing.clone(),
        };
        let m = run_from_table(&pipeline, &table.with_lambda_max(lambda), timer)?;
        csv.push_str(&format!(
            "{lambda},{},{},{}\n",
            m.imdp.num_actions, m.imdp.num_transitions, m.initial_value
        ));
        manifests.push(m);
    }
    create_dir(&root)?;
    write_file(&root.join("sweep.csv"), csv.as_bytes())?;
    Ok(manifests)
}

/// `abstract` subcommand: scaling factors, intervals and the IMDP, stored in
/// the output directory for the later subcommands.
pub fn run_abstract(config: RunConfig) -> Result<AbstractionStats> {
    let mut timer = Timer::default();
    let pipeline = timer.stage("setup", || Pipeline::new(config))?;
    let dir = pipeline.output_dir().to_path_buf();
    create_dir(&dir)?;
    let table = timer.stage("actions", || pipeline.action_table())?;
    timer.stage("diagnostics", || {
        table.write_diagnostics(&dir.join("actions.jsonl"))?;
        write_bin(&dir.join(ACTIONS_BIN), &table)
    })?;
    let (imdp, stats) = timer.stage("intervals", || pipeline.abstraction(&table))?;
    write_bin(&dir.join(IMDP_BIN), &(&imdp, &stats))?;
    Ok(stats)
}

fn load_imdp(dir: &Path) -> Result<(IntervalImdp, AbstractionStats)> {
    read_bin(&dir.join(IMDP_BIN))
}

/// `synthesize` subcommand: robust value iteration on a stored IMDP.
pub fn run_synthesize(config: RunConfig) -> Result<Scheduler> {
    let pipeline = Pipeline::new(config)?;
    let dir = pipeline.output_dir();
    let (imdp, _) = load_imdp(dir)?;
    let scheduler = Timer::default().stage("synthesis", || pipeline.synthesize(&imdp))?;
    write_bin(&dir.join(SCHEDULER_BIN), &scheduler)?;
    write_values_csv(pipeline.partition(), &scheduler, &dir.join("values.csv"))?;
    value_heatmap(&scheduler, pipeline.partition(), &dir.join("heatmap.csv"))?;
    Ok(scheduler)
}

/// `simulate` subcommand: Monte Carlo validation of a stored scheduler.
pub fn run_simulate(config: RunConfig) -> Result<Option<ValidationSummary>> {
    let pipeline = Pipeline::new(config)?;
    let dir = pipeline.output_dir();
    let table: ActionTable = read_bin(&dir.join(ACTIONS_BIN))?;
    let table = table.with_lambda_max(pipeline.config().abstraction.lambda_max);
    let scheduler: Scheduler = read_bin(&dir.join(SCHEDULER_BIN))?;
    let Some((summary, records)) = Timer::default().stage("validation", || pipeline.validate(&table, &scheduler))?
    else {
        return Ok(None);
    };
    write_json(&dir.join("validation.json"), &summary)?;
    write_trajectories(dir, &records, pipeline.model().input_dim())?;
    Ok(Some(summary))
}

/// `export` subcommand: interval model and labels of a stored IMDP.
pub fn run_export(config: RunConfig) -> Result<(PathBuf, PathBuf)> {
    let pipeline = Pipeline::new(config)?;
    let dir = pipeline.output_dir();
    let (imdp, _) = load_imdp(dir)?;
    let (tra, lab) = (dir.join("model.tra"), dir.join("model.lab"));
    export_prism(&imdp, pipeline.spec(), &tra, &lab)?;
    Ok((tra, lab))
}
