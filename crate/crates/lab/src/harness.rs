//! Seeded experiment runs, result CSV and summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use relutrap_core::attack::{run_attack, AttackConfig, AttackOutcome, DecisionConfig, DEFAULT_THRESHOLD};
use relutrap_core::data::{sample_run, Dataset};
use relutrap_core::fedsim::ClientConfig;
use relutrap_core::metrics::{compute_metrics, MetricsReport, RunRecord};
use relutrap_core::nn::OptimizerConfig;
use relutrap_core::seed::{derive_seed, substream};
use relutrap_core::trap::DEFAULT_EPSILON;
use relutrap_core::Architecture;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::io::{load_pool, DatasetKind};

const STREAM_POOL: u64 = 1;
const STREAM_DRAW: u64 = 2;
const STREAM_SHUFFLE: u64 = 3;
const STREAM_CRAFT: u64 = 4;

pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const DEFAULT_RUNS: usize = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(rename = "E")]
    pub e: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub optimizer: OptimizerConfig,
    /// Whether the learning rate is the built-in default rather than given.
    pub lr_assumed: bool,
    pub epsilon: f64,
    pub xi: f64,
    pub runs: usize,
    pub master_seed: u64,
    pub data_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetKind::Synthetic,
            m: 4,
            j: 1,
            e: 1,
            b: DEFAULT_BATCH_SIZE,
            optimizer: OptimizerConfig::sgd(),
            lr_assumed: true,
            epsilon: DEFAULT_EPSILON,
            xi: DEFAULT_THRESHOLD,
            runs: DEFAULT_RUNS,
            master_seed: 0,
            data_dir: PathBuf::from("data"),
        }
    }
}

impl ExperimentConfig {
    /// N = B·J
    pub fn dataset_size(&self) -> usize {
        self.b * self.j
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::Config(msg));
        for (name, v) in [("M", self.m), ("J", self.j), ("E", self.e), ("B", self.b)] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.runs < 2 || !self.runs.is_multiple_of(2) {
            return bad(format!("runs must be even and at least 2, got {}", self.runs));
        }
        for (name, v) in [("eps", self.epsilon), ("xi", self.xi), ("lr", self.optimizer.lr())] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    pub fn client_config(&self, shuffle_seed: u64) -> ClientConfig {
        let mut c = ClientConfig::new(self.b, self.j, self.e, self.optimizer);
        c.shuffle_seed = shuffle_seed;
        c
    }

    pub fn attack_config(&self, shuffle_seed: u64) -> Result<AttackConfig> {
        Ok(AttackConfig {
            m: self.m,
            epsilon: self.epsilon,
            client: self.client_config(shuffle_seed),
            decision: DecisionConfig::new(self.xi, self.b)?,
        })
    }

    /// Effective settings with the ones not fixed by the reference
    /// experiments marked as assumptions.
    pub fn echo(&self) -> serde_json::Value {
        let mut assumed = Vec::new();
        if self.lr_assumed {
            assumed.push(format!("lr = {} (assumed default, not reported for the original experiments)", self.optimizer.lr()));
        }
        if let OptimizerConfig::Adam(a) = self.optimizer {
            assumed.push(format!("adam beta1 = {}, beta2 = {}, eps = {} (assumed defaults)", a.beta1, a.beta2, a.eps));
        }
        assumed.push("architecture: conv(6,5)-pool-conv(16,5)-pool-fc120-fc84-fcL with split after flatten (assumed)".into());
        assumed.push("f0 init: uniform(+-1/sqrt(fan_in)) (assumed)".into());
        serde_json::json!({
            "config": self,
            "N": self.dataset_size(),
            "assumed": assumed,
        })
    }
}

/// Training pool for `cfg`, normalized.
pub fn prepare_pool(cfg: &ExperimentConfig) -> Result<Dataset> {
    let seed = substream(cfg.master_seed, STREAM_POOL);
    let pool = load_pool(cfg.dataset, &cfg.data_dir, cfg.dataset_size(), seed)?;
    Ok(pool.normalize()?)
}

/// The default host network for a pool's image shape and class count.
pub fn architecture_for(pool: &Dataset) -> Result<Architecture> {
    let s = pool.image_shape();
    if s.len() != 3 {
        return Err(LabError::Config(format!("expected C×H×W images, got shape {s:?}")));
    }
    Ok(Architecture::lenet(s[0], s[1], s[2], pool.num_classes())?)
}

/// Run `run_id`: even ids are member runs, odd ids non-member runs.
pub fn run_one(
    cfg: &ExperimentConfig,
    arch: &Architecture,
    pool: &Dataset,
    run_id: usize,
) -> Result<(RunRecord, AttackOutcome)> {
    let seed = derive_seed(cfg.master_seed, run_id as u64);
    let member = run_id.is_multiple_of(2);
    let start = Instant::now();
    let wrap = |source| LabError::Run { run_id, seed, source };
    let draw = sample_run(pool, cfg.dataset_size(), member, substream(seed, STREAM_DRAW)).map_err(wrap)?;
    let acfg = cfg.attack_config(substream(seed, STREAM_SHUFFLE))?;
    let outcome = run_attack::<f32, _>(arch, draw.training_set.samples(), &draw.target, &acfg, substream(seed, STREAM_CRAFT))
        .map_err(wrap)?;
    let record = RunRecord {
        run_id,
        member,
        delta: outcome.delta,
        t_hat: outcome.decision,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        seed,
    };
    Ok((record, outcome))
}

/// All runs of `cfg` over `pool`, ordered by run id.
pub fn run_experiment_on(cfg: &ExperimentConfig, pool: &Dataset) -> Result<(Vec<RunRecord>, MetricsReport)> {
    cfg.validate()?;
    if pool.len() <= cfg.dataset_size() {
        return Err(LabError::Config(format!(
            "pool of {} samples cannot supply N = {} plus an outside target",
            pool.len(),
            cfg.dataset_size()
        )));
    }
    let arch = architecture_for(pool)?;
    let records = (0..cfg.runs)
        .into_par_iter()
        .map(|id| run_one(cfg, &arch, pool, id).map(|(r, _)| r))
        .collect::<Result<Vec<_>>>()?;
    let report = compute_metrics(&records)?;
    Ok((records, report))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Vec<RunRecord>, MetricsReport)> {
    cfg.validate()?;
    let pool = prepare_pool(cfg)?;
    run_experiment_on(cfg, &pool)
}

/// One CSV line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: usize,
    pub dataset: DatasetKind,
    pub optimizer: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(rename = "E")]
    pub e: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub epsilon: f64,
    pub xi: f64,
    pub seed: u64,
    pub t: u8,
    pub delta: f64,
    pub t_hat: u8,
}

pub const CSV_HEADER: &str = "run_id,dataset,optimizer,M,J,E,B,epsilon,xi,seed,t,delta,t_hat";

impl ResultRow {
    pub fn new(cfg: &ExperimentConfig, r: &RunRecord) -> Self {
        ResultRow {
            run_id: r.run_id,
            dataset: cfg.dataset,
            optimizer: cfg.optimizer.name().into(),
            m: cfg.m,
            j: cfg.j,
            e: cfg.e,
            b: cfg.b,
            epsilon: cfg.epsilon,
            xi: cfg.xi,
            seed: r.seed,
            t: r.member as u8,
            delta: r.delta,
            t_hat: r.t_hat as u8,
        }
    }
}

/// `results.csv` → `results.summary.json`.
pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("summary.json")
}

pub fn write_rows<W: std::io::Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| LabError::io("<csv>", e))?;
    Ok(())
}

/// Writes the per-run CSV at `path` and the summary (config echo, metrics,
/// timing) next to it.
pub fn emit_results(
    cfg: &ExperimentConfig,
    records: &[RunRecord],
    report: Option<&MetricsReport>,
    path: &Path,
) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    let rows: Vec<ResultRow> = records.iter().map(|r| ResultRow::new(cfg, r)).collect();
    let file = fs::File::create(path).map_err(|e| LabError::io(path, e))?;
    write_rows(std::io::BufWriter::new(file), &rows)?;

    let wall: Vec<f64> = records.iter().map(|r| r.wall_time_ms).collect();
    let mut summary = cfg.echo();
    summary["metrics"] = serde_json::to_value(report)?;
    summary["runs_completed"] = records.len().into();
    summary["wall_time_ms"] = serde_json::json!({
        "total": wall.iter().sum::<f64>(),
        "max": wall.iter().copied().fold(0.0, f64::max),
    });
    let sp = summary_path(path);
    let text = serde_json::to_string_pretty(&summary)?;
    fs::write(&sp, text + "\n").map_err(|e| LabError::io(sp, e))
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<ResultRow>, _>>()?)
}
