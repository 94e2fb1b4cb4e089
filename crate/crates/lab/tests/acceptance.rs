//! One `ACCEPTANCE n PASS|FAIL` line per criterion on stderr (run with
//! `--nocapture` to see them), then the assertion.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;
use rand::Rng;
use relutrap::cli::Cli;
use relutrap::harness::{prepare_pool, run_experiment_on, ExperimentConfig};
use relutrap::io::{cifar_test_path, cifar_train_bytes, read_bytes, read_label_names, write_fixtures, DatasetKind};
use relutrap_core::attack::{decision_statistic, reference_eps, run_attack, AttackConfig, DecisionConfig};
use relutrap_core::data::{cifar_records, find_duplicates_raw, synth_dataset, CifarVariant, Dataset, DuplicateReport};
use relutrap_core::fedsim::{client_train, ClientConfig};
use relutrap_core::metrics::RunRecord;
use relutrap_core::nn::gradcheck::{check_gradient, random_problem, FD_STEP};
use relutrap_core::nn::{Example, LayerSpec, OptimizerConfig};
use relutrap_core::trap::{craft_parameters, trap_eps_grad_oracle, trap_output_oracle};
use relutrap_core::{seed, Architecture, Label, Network, Tensor};

fn report(n: u32, pass: bool, detail: impl AsRef<str>) {
    let line = format!("ACCEPTANCE {n} {} {}\n", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(pass, "{}", line.trim_end());
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn config(dataset: DatasetKind, m: usize, j: usize, e: usize, optimizer: OptimizerConfig) -> ExperimentConfig {
    ExperimentConfig {
        dataset,
        m,
        j,
        e,
        optimizer,
        data_dir: data_dir(),
        ..ExperimentConfig::default()
    }
}

fn run(cfg: &ExperimentConfig, pool: &Dataset) -> Vec<RunRecord> {
    run_experiment_on(cfg, pool).unwrap().0
}

fn min_member_delta(records: &[RunRecord]) -> f64 {
    records.iter().filter(|r| r.member).map(|r| r.delta).fold(f64::INFINITY, f64::min)
}

#[test]
fn criterion_1_gradients_match_finite_differences() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for s in 0..20 {
        let (net, batch) = random_problem(1000 + s, 2000).unwrap();
        assert!(net.arch().param_count() <= 2000);
        let r = check_gradient(&net, &batch, FD_STEP, 1e-6).unwrap();
        worst = worst.max(r.max_rel_error);
        checked += r.checked;
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        worst < 1e-4 && secs < 60.0,
        format!("20 nets, {checked} parameters, max rel err {worst:.2e} (< 1e-4), {secs:.1}s (< 60s)"),
    );
}

/// Input is the f0 output itself, so `a` can be set directly.
fn identity_host(m: usize, num_classes: usize) -> Architecture {
    Architecture::new(
        vec![m],
        vec![
            LayerSpec::Linear { in_dim: m, out_dim: 2 * m },
            LayerSpec::Relu,
            LayerSpec::Linear { in_dim: 2 * m, out_dim: 3 },
            LayerSpec::Relu,
            LayerSpec::Linear { in_dim: 3, out_dim: num_classes },
        ],
        0,
        num_classes,
    )
    .unwrap()
}

#[test]
fn criterion_2_network_matches_closed_form() {
    let mut rng = seed::rng(2);
    let (mut worst_out, mut grad_mismatch, mut inside, mut tuples) = (0.0f64, 0, 0, 0);
    while tuples < 1000 {
        let m = rng.gen_range(1..=8);
        let l = rng.gen_range(2..=10);
        let eps = 10f64.powf(rng.gen_range(-4.0..-1.0));
        let etas: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let spread = eps * rng.gen_range(0.1..3.0) / m as f64;
        let a: Vec<f64> = etas.iter().map(|e| e + rng.gen_range(-spread..spread)).collect();
        let dev: f64 = a.iter().zip(&etas).map(|(x, e)| (x - e).abs()).sum();
        if (dev - eps).abs() < 1e-12 {
            continue;
        }
        tuples += 1;
        let arch = identity_host(m, l);
        let target = Example {
            input: Tensor::new(vec![m], etas.clone()).unwrap(),
            label: Label::from_index(rng.gen_range(0..l)),
        };
        let (p, spec) = craft_parameters::<f64, _>(&arch, &target, m, eps, 0).unwrap();
        let net = Network::with_parameters(arch, p).unwrap();
        let x = Tensor::new(vec![m], a).unwrap();
        let sel = spec.selected(x.as_slice());
        let sel_etas = spec.etas.clone();
        let b = trap_output_oracle(&sel, &sel_etas, eps).unwrap();
        let y = spec.target_label.index();
        let logit = net.forward(&x).unwrap().as_slice()[y];
        worst_out = worst_out.max((logit + 1.0 - b).abs());
        let mut onehot = vec![0.0; l];
        onehot[y] = 1.0;
        let g = net.vjp(&x, &onehot).unwrap().values()[spec.epsilon_index(net.arch()).unwrap()];
        let expected = trap_eps_grad_oracle(&sel, &sel_etas, eps).unwrap();
        grad_mismatch += (g != expected) as usize;
        inside += (expected == 1.0) as usize;
    }
    report(
        2,
        worst_out < 1e-10 && grad_mismatch == 0 && inside > 100 && inside < 900,
        format!(
            "{tuples} tuples ({inside} inside), max |logit+1-b| {worst_out:.2e} (< 1e-10), eps-gradient mismatches {grad_mismatch}"
        ),
    );
}

#[test]
fn criterion_3_non_triggering_batches_leave_parameters_untouched() {
    let arch = Architecture::lenet(1, 28, 28, 10).unwrap();
    let keep = arch.layers()[arch.output_layer()].bias_range();
    let optimizers = [OptimizerConfig::sgd(), OptimizerConfig::adam()];
    let (mut batches, mut trainings, mut violations, mut nonzero_delta) = (0, 0, 0, 0);
    for s in 0..100u64 {
        let data = synth_dataset(9, 10, &[1, 28, 28], 3000 + s).unwrap().normalize().unwrap();
        let (target, rest) = data.samples().split_first().unwrap();
        let (p, spec) = craft_parameters::<f32, _>(&arch, target, 4, 1e-3, s).unwrap();
        let theta = Network::with_parameters(arch.clone(), p).unwrap();
        if rest.iter().any(|x| spec.triggers(theta.forward_f0(&x.image).unwrap().as_slice())) {
            continue;
        }
        batches += 1;
        let eps_idx = spec.epsilon_index(&arch).unwrap();
        for opt in optimizers {
            for e in [1, 2, 4] {
                let mut cfg = ClientConfig::new(4, 2, e, opt);
                cfg.shuffle_seed = s;
                let phi = client_train(&theta, rest, &cfg).unwrap();
                trainings += 1;
                let before = theta.params().values();
                violations += phi
                    .values()
                    .iter()
                    .zip(before)
                    .enumerate()
                    .filter(|(i, (a, b))| !keep.contains(i) && a.to_bits() != b.to_bits())
                    .count();
                let tilde = reference_eps(&theta, &spec, target, &opt).unwrap();
                let delta = decision_statistic(spec.epsilon, phi.values()[eps_idx] as f64, tilde as f64, 4).unwrap();
                nonzero_delta += (delta != 0.0) as usize;
            }
        }
    }
    report(
        3,
        batches >= 100 && violations == 0 && nonzero_delta == 0,
        format!(
            "{batches} batches, {trainings} trainings (SGD/Adam, E in 1,2,4): {violations} changed non-final-bias params, {nonzero_delta} nonzero deltas"
        ),
    );
}

/// Criteria 4, 5 and 6 share their runs.
#[test]
fn criteria_4_5_6_desk_scale_accuracy_margin_and_m8() {
    let start = Instant::now();
    let (mut imperfect, mut min_delta_m4, mut configs) = (Vec::new(), f64::INFINITY, 0);
    let (mut min_m4_sgd_e1, mut min_m8) = (f64::INFINITY, f64::INFINITY);
    for dataset in [DatasetKind::Mnist, DatasetKind::Synthetic] {
        for j in [1, 16] {
            for e in [1, 2] {
                for opt in [OptimizerConfig::sgd(), OptimizerConfig::adam()] {
                    let cfg = config(dataset, 4, j, e, opt);
                    let pool = prepare_pool(&cfg).unwrap();
                    let (records, m) = run_experiment_on(&cfg, &pool).unwrap();
                    configs += 1;
                    if (m.fpr, m.fnr, m.accuracy, m.auc) != (0.0, 0.0, 100.0, 1.0) || m.runs != 40 {
                        imperfect.push(format!(
                            "{} J={j} E={e} {}: {:.2}/{:.2}/{:.2}/{:.2}",
                            dataset.as_str(),
                            opt.name(),
                            m.fpr,
                            m.fnr,
                            m.accuracy,
                            m.auc
                        ));
                    }
                    let d = min_member_delta(&records);
                    min_delta_m4 = min_delta_m4.min(d);
                    if e == 1 && matches!(opt, OptimizerConfig::Sgd { .. }) {
                        min_m4_sgd_e1 = min_m4_sgd_e1.min(d);
                        let cfg8 = ExperimentConfig { m: 8, ..cfg };
                        min_m8 = min_m8.min(min_member_delta(&run(&cfg8, &pool)));
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let m4_ok = imperfect.is_empty() && configs == 16;
    let margin_ok = min_delta_m4 >= 0.1;
    let exact = min_m8 >= 1.0 - 1e-3;
    let fallback = min_m8 >= min_m4_sgd_e1;
    let branch = if exact {
        "exact bound held"
    } else if fallback {
        "fallback held"
    } else {
        "neither held"
    };
    let lines = [
        (
            4,
            m4_ok && secs < 600.0,
            format!("{configs} configs x 40 runs, all FPR 0.00 FNR 0.00 Acc 100.00 AUC 1.00: {m4_ok} {imperfect:?}, {secs:.0}s (< 600s incl. M=8 reruns)"),
        ),
        (5, margin_ok, format!("min member delta at M=4 {min_delta_m4:.4} (>= 0.1)")),
        (
            6,
            exact || fallback,
            format!("{branch}: min member delta M=8 {min_m8:.6} (>= 0.999), M=4 {min_m4_sgd_e1:.4} (SGD, E=1)"),
        ),
    ];
    let mut err = std::io::stderr();
    for (n, pass, detail) in &lines {
        let line = format!("ACCEPTANCE {n} {} {detail}\n", if *pass { "PASS" } else { "FAIL" });
        err.write_all(line.as_bytes()).unwrap();
    }
    for (n, pass, detail) in &lines {
        assert!(pass, "criterion {n}: {detail}");
    }
}

#[test]
fn criterion_7_single_component_degrades() {
    let cfg = config(DatasetKind::Mnist, 1, 16, 1, OptimizerConfig::sgd());
    let pool = prepare_pool(&cfg).unwrap();
    let (_, m) = run_experiment_on(&cfg, &pool).unwrap();
    report(
        7,
        m.fpr > 50.0,
        format!("MNIST M=1 J=16 SGD, 40 runs: FPR {:.2} (> 50), FNR {:.2}, AUC {:.2}", m.fpr, m.fnr, m.auc),
    );
}

#[test]
fn criterion_8_fedsgd_special_case() {
    let arch = Architecture::lenet(1, 28, 28, 10).unwrap();
    let data = synth_dataset(33, 10, &[1, 28, 28], 8).unwrap().normalize().unwrap();
    let examples: Vec<Example<f64>> = data.samples().iter().map(|s| s.to_example()).collect();
    let (outside, train) = examples.split_last().unwrap();
    let opt = OptimizerConfig::sgd();
    let lr = opt.lr();
    let cfg = ClientConfig::new(32, 1, 1, opt);

    let mut mismatched = 0;
    let mut worst_diff = 0.0f64;
    for target in [&train[5], outside] {
        let (p, _) = craft_parameters::<f64, _>(&arch, target, 4, 1e-3, 9).unwrap();
        let theta = Network::with_parameters(arch.clone(), p).unwrap();
        let phi = client_train(&theta, train, &cfg).unwrap();
        let g = theta.backward(train).unwrap();
        for ((t, f), g) in theta.params().values().iter().zip(phi.values()).zip(g.values()) {
            mismatched += ((t - lr * g).to_bits() != f.to_bits()) as usize;
            worst_diff = worst_diff.max(((t - f) - lr * g).abs());
        }
    }

    let acfg = AttackConfig {
        m: 4,
        epsilon: 1e-3,
        client: cfg.clone(),
        decision: DecisionConfig::new(0.1, 32).unwrap(),
    };
    let out = run_attack::<f64, _>(&arch, train, &train[5], &acfg, 9).unwrap();
    report(
        8,
        mismatched == 0 && worst_diff < 1e-15 && (out.delta - 1.0).abs() < 1e-6,
        format!(
            "phi == theta - lr*g bit-exact ({mismatched} mismatches, max |theta-phi-lr*g| {worst_diff:.1e}); single-trigger delta {:.9} (1 +- 1e-6)",
            out.delta
        ),
    );
}

fn real_cifar100_dir() -> Option<PathBuf> {
    let candidates = [std::env::var_os("RELUTRAP_CIFAR100_DIR").map(PathBuf::from), Some(data_dir().join("cifar-100-binary"))];
    candidates.into_iter().flatten().find(|d| d.join("train.bin").is_file())
}

fn summarize(r: &DuplicateReport) -> (usize, usize, usize, usize) {
    let train = r.train_pairs();
    (
        train.len(),
        train.iter().filter(|p| p.labels_differ()).count(),
        r.cross_split.len(),
        r.cross_split.iter().filter(|p| p.labels_differ()).count(),
    )
}

#[test]
fn criterion_9_duplicate_scanner() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_fixtures(dir.path()).unwrap();
    let (tb, sb) = (read_bytes(&f.dedup_train).unwrap(), read_bytes(&f.dedup_test).unwrap());
    let train = cifar_records(&tb, CifarVariant::Cifar100, 0).unwrap();
    let test = cifar_records(&sb, CifarVariant::Cifar100, 0).unwrap();
    let planted = find_duplicates_raw(&train, &test).unwrap();
    let counts = summarize(&planted);
    let pairs = planted.train_pairs();
    let planted_ok = counts == (1, 1, 0, 0) && (pairs[0].train_id, pairs[0].other_id) == (1, 6);

    let Some(real) = real_cifar100_dir() else {
        report(
            9,
            planted_ok,
            format!("CIFAR-100 not present, planted substitute: pairs/mismatched/cross/cross-mismatched {counts:?} (expected (1, 1, 0, 0))"),
        );
        return;
    };
    let tb = cifar_train_bytes(&real, CifarVariant::Cifar100).unwrap();
    let sb = read_bytes(&cifar_test_path(&real, CifarVariant::Cifar100)).unwrap();
    let train = cifar_records(&tb, CifarVariant::Cifar100, 0).unwrap();
    let test = cifar_records(&sb, CifarVariant::Cifar100, 0).unwrap();
    let r = find_duplicates_raw(&train, &test).unwrap();
    let real_counts = summarize(&r);
    let names = read_label_names(&real.join("fine_label_names.txt")).ok();
    let aquarium = r.train_pairs().into_iter().find(|p| (p.train_id, p.other_id) == (4348, 30931)).is_some_and(|p| {
        !p.labels_differ() && names.as_ref().is_none_or(|n| n[p.label_a.index()] == "aquarium_fish")
    });
    report(
        9,
        planted_ok && real_counts == (14, 9, 10, 6) && aquarium,
        format!("CIFAR-100 at {}: {real_counts:?} (expected (14, 9, 10, 6)), pair 4348/30931 aquarium_fish: {aquarium}; planted {counts:?}", real.display()),
    );
}

#[test]
fn criterion_10_full_scale_flags_validate() {
    let mut accepted = 0;
    for j in [1usize, 2, 4, 8, 16, 32, 64, 128, 256] {
        for opt in ["sgd", "adam"] {
            let js = j.to_string();
            let cli = Cli::try_parse_from([
                "relutrap", "experiment", "--dataset", "mnist", "--M", "4", "--J", &js, "--E", "1", "--opt", opt, "--runs", "400",
            ])
            .unwrap();
            let relutrap::cli::Command::Experiment { exp, .. } = cli.command else {
                panic!("parsed into the wrong subcommand")
            };
            let cfg = exp.to_config();
            accepted += (cfg.validate().is_ok() && cfg.runs == 400 && cfg.j == j && cfg.dataset_size() == 32 * j) as usize;
        }
    }
    report(10, accepted == 18, format!("{accepted}/18 full-scale configurations (runs=400, J up to 256) parse and validate; not executed"));
}
