//! One-process FedAvg: local client training, averaging, server rounds.
//!
//! FedSGD is the `epochs = 1, num_batches = 1` special case of
//! [`client_train`].

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::nn::{Labeled, Network, OptimizerConfig, ParameterVector, Real};
use crate::{seed, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClientConfig {
    /// B
    pub batch_size: usize,
    /// J
    pub num_batches: usize,
    /// E
    pub epochs: usize,
    pub optimizer: OptimizerConfig,
    pub shuffle_seed: u64,
    pub shuffle_per_epoch: bool,
}

impl ClientConfig {
    pub fn new(batch_size: usize, num_batches: usize, epochs: usize, optimizer: OptimizerConfig) -> Self {
        ClientConfig {
            batch_size,
            num_batches,
            epochs,
            optimizer,
            shuffle_seed: 0,
            shuffle_per_epoch: true,
        }
    }

    /// N = B·J
    pub fn dataset_size(&self) -> usize {
        self.batch_size * self.num_batches
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("batch_size", self.batch_size), ("num_batches", self.num_batches), ("epochs", self.epochs)] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        let lr = self.optimizer.lr();
        if !(lr > 0.0) || !lr.is_finite() {
            return Err(Error::InvalidConfig(format!("learning rate must be positive, got {lr}")));
        }
        Ok(())
    }
}

/// Trains a copy of `theta` on `dataset` for E epochs of J mini-batches and
/// returns the full parameter vector.
///
/// Each epoch optionally reshuffles the sample order (seeded by
/// `shuffle_seed`), then takes J contiguous blocks of B samples. The
/// optimizer state starts fresh on every call.
pub fn client_train<F: Real, S: Labeled<F>>(
    theta: &Network<F>,
    dataset: &[S],
    cfg: &ClientConfig,
) -> Result<ParameterVector<F>> {
    cfg.validate()?;
    if dataset.len() != cfg.dataset_size() {
        return Err(Error::DatasetSize {
            expected: cfg.dataset_size(),
            actual: dataset.len(),
        });
    }
    let mut net = theta.clone();
    let mut opt = cfg.optimizer.start(net.params());
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = seed::rng(cfg.shuffle_seed);
    let mut batch: Vec<&S> = Vec::with_capacity(cfg.batch_size);
    for _ in 0..cfg.epochs {
        if cfg.shuffle_per_epoch {
            order.shuffle(&mut rng);
        }
        for block in order.chunks_exact(cfg.batch_size) {
            batch.clear();
            batch.extend(block.iter().map(|&i| &dataset[i]));
            let grad = net.backward(&batch)?;
            opt.step(net.params_mut(), &grad)?;
        }
    }
    Ok(net.into_parameters())
}

/// Componentwise arithmetic mean.
pub fn aggregate<F: Real>(answers: &[ParameterVector<F>]) -> Result<ParameterVector<F>> {
    let (first, rest) = answers.split_first().ok_or(Error::NoAnswers)?;
    let mut sum = first.clone();
    for a in rest {
        sum.check_layout(a)?;
        for (s, &v) in sum.values_mut().iter_mut().zip(a.values()) {
            *s += v;
        }
    }
    if !rest.is_empty() {
        sum.scale(F::one() / F::lit(answers.len() as f64));
    }
    Ok(sum)
}

/// Something the server can query with a parameter vector.
pub trait Client<F> {
    fn answer(&self, theta: &Network<F>) -> Result<ParameterVector<F>>;
}

/// A client holding its own data and training configuration.
#[derive(Clone, Debug)]
pub struct LocalClient<S> {
    pub dataset: Vec<S>,
    pub config: ClientConfig,
}

impl<F: Real, S: Labeled<F>> Client<F> for LocalClient<S> {
    fn answer(&self, theta: &Network<F>) -> Result<ParameterVector<F>> {
        client_train(theta, &self.dataset, &self.config)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SelectPolicy {
    All,
    Fixed(Vec<usize>),
    /// Each round picks `ceil(fraction · |C|)` distinct clients.
    RandomFraction { fraction: f64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServerConfig {
    /// I
    pub iterations: usize,
    pub policy: SelectPolicy,
}

/// Client indices queried in a given round.
pub fn select_subset(policy: &SelectPolicy, num_clients: usize, round: usize) -> Result<Vec<usize>> {
    let picked = match policy {
        SelectPolicy::All => (0..num_clients).collect(),
        SelectPolicy::Fixed(list) => {
            if let Some(&bad) = list.iter().find(|&&i| i >= num_clients) {
                return Err(Error::InvalidConfig(format!("client {bad} does not exist")));
            }
            list.clone()
        }
        SelectPolicy::RandomFraction { fraction, seed: s } => {
            if !(*fraction > 0.0 && *fraction <= 1.0) {
                return Err(Error::InvalidConfig(format!("fraction {fraction} outside (0, 1]")));
            }
            let k = libm::ceil(fraction * num_clients as f64) as usize;
            let mut rng = seed::rng(seed::substream(*s, round as u64));
            let mut v = rand::seq::index::sample(&mut rng, num_clients, k.min(num_clients)).into_vec();
            v.sort_unstable();
            v
        }
    };
    if picked.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(picked)
}

/// One iteration: query the selected clients with `theta` and average.
pub fn server_round<F: Real, C: Client<F>>(
    theta: &Network<F>,
    clients: &[C],
    policy: &SelectPolicy,
    round: usize,
) -> Result<ParameterVector<F>> {
    let selected = select_subset(policy, clients.len(), round)?;
    let answers = selected
        .iter()
        .map(|&i| clients[i].answer(theta))
        .collect::<Result<Vec<_>>>()?;
    aggregate(&answers)
}

/// Runs `cfg.iterations` rounds starting from `theta`.
pub fn run_server<F: Real, C: Client<F>>(
    mut theta: Network<F>,
    clients: &[C],
    cfg: &ServerConfig,
) -> Result<Network<F>> {
    if cfg.iterations == 0 {
        return Err(Error::InvalidConfig("iterations must be at least 1".into()));
    }
    for round in 0..cfg.iterations {
        let next = server_round(&theta, clients, &cfg.policy, round)?;
        theta.unflatten(next)?;
    }
    Ok(theta)
}
