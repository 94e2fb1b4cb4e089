//! Command line: `experiment`, `attack-one`, `dedup`, `gradcheck`, `fixtures`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use relutrap_core::data::{cifar_records, find_duplicates_raw, find_exact_duplicates, CifarVariant, DuplicatePair, DuplicateReport, Split};
use relutrap_core::nn::gradcheck::{check_gradient, random_problem, FD_STEP};
use relutrap_core::nn::{Adam, OptimizerConfig};

use crate::error::{LabError, Result};
use crate::harness::{
    architecture_for, emit_results, prepare_pool, run_experiment_on, run_one, summary_path, write_rows, ExperimentConfig,
    ResultRow, DEFAULT_BATCH_SIZE, DEFAULT_RUNS,
};
use crate::io::{self, read_bytes, DatasetKind};

#[derive(Parser, Debug)]
#[command(name = "relutrap", version, about = "ReLU-trap membership inference against simulated federated clients")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run many seeded attacks and write per-run CSV plus a summary.
    Experiment {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
    },
    /// Run a single attack and print its CSV row.
    AttackOne {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Even ids are member runs, odd ids non-member runs.
        #[arg(long, default_value_t = 0)]
        run_id: usize,
    },
    /// Report byte-identical images within a training file and across to a
    /// test file.
    Dedup(DedupArgs),
    /// Finite-difference check of backpropagation on random small networks.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        nets: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        max_params: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Write small parser fixtures into a directory.
    Fixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OptKind {
    Sgd,
    Adam,
}

#[derive(Args, Debug, Clone)]
pub struct ExperimentArgs {
    #[arg(long, value_enum, default_value = "synthetic")]
    pub dataset: DatasetKind,
    /// Number of matched f0 components.
    #[arg(long = "M", default_value_t = 4)]
    pub m: usize,
    /// Mini-batches per epoch.
    #[arg(long = "J", default_value_t = 1)]
    pub j: usize,
    /// Local epochs.
    #[arg(long = "E", default_value_t = 1)]
    pub e: usize,
    /// Batch size.
    #[arg(long = "B", default_value_t = DEFAULT_BATCH_SIZE)]
    pub b: usize,
    #[arg(long, value_enum, default_value = "sgd")]
    pub opt: OptKind,
    /// Learning rate (default: 1e-2 for SGD, 1e-3 for Adam).
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    pub runs: usize,
    #[arg(long, default_value_t = relutrap_core::trap::DEFAULT_EPSILON)]
    pub eps: f64,
    #[arg(long, default_value_t = relutrap_core::attack::DEFAULT_THRESHOLD)]
    pub xi: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "data")]
    pub data_dir: PathBuf,
}

impl ExperimentArgs {
    pub fn to_config(&self) -> ExperimentConfig {
        let base = match self.opt {
            OptKind::Sgd => OptimizerConfig::sgd(),
            OptKind::Adam => OptimizerConfig::Adam(Adam::default()),
        };
        ExperimentConfig {
            dataset: self.dataset,
            m: self.m,
            j: self.j,
            e: self.e,
            b: self.b,
            optimizer: self.lr.map_or(base, |lr| base.with_lr(lr)),
            lr_assumed: self.lr.is_none(),
            epsilon: self.eps,
            xi: self.xi,
            runs: self.runs,
            master_seed: self.seed,
            data_dir: self.data_dir.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DedupFormat {
    Mnist,
    Cifar10,
    Cifar100,
}

#[derive(Args, Debug)]
pub struct DedupArgs {
    #[arg(long, value_enum)]
    pub format: DedupFormat,
    /// Training file (MNIST: the image file).
    #[arg(long)]
    pub train: PathBuf,
    /// Test file (MNIST: the image file).
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// MNIST label file for --train.
    #[arg(long)]
    pub train_labels: Option<PathBuf>,
    /// MNIST label file for --test.
    #[arg(long)]
    pub test_labels: Option<PathBuf>,
    /// Label names, one per line (default: the names file shipped next to
    /// a CIFAR training file, if present).
    #[arg(long)]
    pub names: Option<PathBuf>,
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Experiment { exp, out } => experiment(&exp.to_config(), &out),
        Command::AttackOne { exp, run_id } => attack_one(&exp.to_config(), run_id),
        Command::Dedup(args) => dedup(&args),
        Command::Gradcheck {
            nets,
            seed,
            max_params,
            tol,
        } => gradcheck(nets, seed, max_params, tol),
        Command::Fixtures { out } => {
            let f = io::write_fixtures(&out)?;
            println!("wrote fixtures to {} ({:?})", out.display(), f);
            Ok(())
        }
    }
}

fn experiment(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    let pool = prepare_pool(cfg)?;
    let (records, report) = run_experiment_on(cfg, &pool)?;
    emit_results(cfg, &records, Some(&report), out)?;
    println!(
        "FPR {:.2}  FNR {:.2}  Acc {:.2}  AUC {:.2}  ({} runs)",
        report.fpr, report.fnr, report.accuracy, report.auc, report.runs
    );
    println!("results: {}  summary: {}", out.display(), summary_path(out).display());
    Ok(())
}

fn attack_one(cfg: &ExperimentConfig, run_id: usize) -> Result<()> {
    cfg.validate()?;
    let pool = prepare_pool(cfg)?;
    if pool.len() <= cfg.dataset_size() {
        return Err(LabError::Config(format!("pool of {} samples is too small for N = {}", pool.len(), cfg.dataset_size())));
    }
    let arch = architecture_for(&pool)?;
    let (record, outcome) = run_one(cfg, &arch, &pool, run_id)?;
    write_rows(std::io::stdout().lock(), &[ResultRow::new(cfg, &record)])?;
    eprintln!(
        "eps {:e} -> client {:e}, reference {:e}",
        outcome.eps_initial, outcome.eps_client, outcome.eps_reference
    );
    Ok(())
}

fn default_names(train: &Path, format: DedupFormat) -> Option<PathBuf> {
    let file = match format {
        DedupFormat::Cifar100 => "fine_label_names.txt",
        DedupFormat::Cifar10 => "batches.meta.txt",
        DedupFormat::Mnist => return None,
    };
    Some(train.parent()?.join(file)).filter(|p| p.is_file())
}

fn scan(args: &DedupArgs) -> Result<DuplicateReport> {
    match args.format {
        DedupFormat::Mnist => {
            let load = |images: &Path, labels: Option<&PathBuf>, split| -> Result<_> {
                let labels = labels.ok_or_else(|| LabError::Config("MNIST dedup needs --train-labels/--test-labels".into()))?;
                Ok(relutrap_core::data::parse_idx(&read_bytes(images)?, &read_bytes(labels)?, split)?)
            };
            let train = load(&args.train, args.train_labels.as_ref(), Split::Train)?;
            let test = match &args.test {
                Some(t) => Some(load(t, args.test_labels.as_ref(), Split::Test)?),
                None => None,
            };
            Ok(find_exact_duplicates(&train, test.as_ref())?)
        }
        DedupFormat::Cifar10 | DedupFormat::Cifar100 => {
            let variant = if args.format == DedupFormat::Cifar10 {
                CifarVariant::Cifar10
            } else {
                CifarVariant::Cifar100
            };
            let train_bytes = read_bytes(&args.train)?;
            let test_bytes = match &args.test {
                Some(t) => read_bytes(t)?,
                None => Vec::new(),
            };
            let train = cifar_records(&train_bytes, variant, 0)?;
            let test = if test_bytes.is_empty() {
                Vec::new()
            } else {
                cifar_records(&test_bytes, variant, 0)?
            };
            Ok(find_duplicates_raw(&train, &test)?)
        }
    }
}

/// Writes the report as `kind,train_id,other_id,label_a,label_b` rows.
pub fn write_report<W: Write>(out: W, pairs: &[DuplicatePair], names: Option<&[String]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "train_id", "other_id", "label_a", "label_b"])?;
    let label = |l: relutrap_core::Label| match names.and_then(|n| n.get(l.index())) {
        Some(name) => name.clone(),
        None => l.get().to_string(),
    };
    for p in pairs {
        w.write_record([
            p.kind.as_str().to_string(),
            p.train_id.to_string(),
            p.other_id.to_string(),
            label(p.label_a),
            label(p.label_b),
        ])?;
    }
    w.flush().map_err(|e| LabError::io("<stdout>", e))?;
    Ok(())
}

fn dedup(args: &DedupArgs) -> Result<()> {
    let report = scan(args)?;
    let names = match args.names.clone().or_else(|| default_names(&args.train, args.format)) {
        Some(p) => Some(io::read_label_names(&p)?),
        None => None,
    };
    let pairs = report.pairs();
    write_report(std::io::stdout().lock(), &pairs, names.as_deref())?;
    let train_pairs = report.train_pairs();
    let cross = &report.cross_split;
    eprintln!(
        "within-train: {} groups, {} pairs ({} with differing labels); cross-split: {} pairs ({} with differing labels)",
        report.within_train.len(),
        train_pairs.len(),
        train_pairs.iter().filter(|p| p.labels_differ()).count(),
        cross.len(),
        cross.iter().filter(|p| p.labels_differ()).count()
    );
    Ok(())
}

fn gradcheck(nets: u64, seed: u64, max_params: usize, tol: f64) -> Result<()> {
    let mut failed = 0;
    for k in 0..nets {
        let s = seed.wrapping_add(k);
        let (net, batch) = random_problem(s, max_params)?;
        let r = check_gradient(&net, &batch, FD_STEP, 1e-6)?;
        let ok = r.max_rel_error < tol;
        failed += (!ok) as usize;
        println!(
            "net {s}: {} params, {} checked, {} kink-skipped, max rel err {:.3e} {}",
            net.arch().param_count(),
            r.checked,
            r.skipped,
            r.max_rel_error,
            if ok { "ok" } else { "FAIL" }
        );
    }
    if failed > 0 {
        return Err(LabError::Core(relutrap_core::Error::InvalidArchitecture(format!(
            "{failed} of {nets} networks exceeded relative error {tol}"
        ))));
    }
    Ok(())
}
