//! Acceptance suite: one test per numbered criterion, each ending with a
//! `[PASS] criterion N` line. Heavy end-to-end runs use fixed seeds and the
//! desk-scale width-32 configuration throughout.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::time::Instant;

use ndarray::Array1;
use statrs::distribution::{ContinuousCDF, Normal};

use hnh::estimator::{
    hybrid_estimate, mc_estimate, sample, CostLedger, FailureLabelVector, Fidelity,
    HybridConfig, ParameterDistribution,
};
use hnh::hnh::{
    compose_hnh_value, estimate_failure_probability, iterate, mixture_weights, modify_labels,
    predicted_cost, training_layer_units, StopReason,
};
use hnh::models::{
    benchmark_evaluate, diffusion_solve, helmholtz_solve, kl_build, sensor_read,
    BenchmarkModel, DiffusionModel, DiffusionSpec, Grid, GridField, HelmholtzModel,
    HelmholtzSpec, LimitStateModel,
};
use hnh::surrogate::{
    backward, build_hierarchy, forward, Activation, FidelityLevels, MlpSurrogate,
    SurrogateError, SurrogateHierarchy, TrainOptions, TrainingSet,
};

/// Phi(-3.5), the closed-form failure probability of the benchmark.
fn phi_minus_beta() -> f64 {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let p = normal.cdf(-3.5);
    assert!((p - 2.32629e-4).abs() < 1e-9, "oracle sanity: {p}");
    p
}

fn benchmark_training_set(seed: u64) -> (BenchmarkModel, ParameterDistribution, TrainingSet) {
    let model = BenchmarkModel::new(3.5, 50).unwrap();
    let dist = ParameterDistribution::standard_normal(50);
    let batch = sample(&dist, 1000, seed).unwrap();
    let targets = Array1::from_iter(
        (0..1000).map(|i| model.evaluate(batch.row(i).as_slice().unwrap()).unwrap()),
    );
    let training = TrainingSet::new(batch.values, targets, 0.1, seed).unwrap();
    (model, dist, training)
}

fn desk_options(seed: u64) -> TrainOptions {
    TrainOptions {
        epochs: 800,
        learning_rate: 2e-2,
        lr_decay: 0.996,
        dropout_rate: 0.3,
        seed,
        ..TrainOptions::default()
    }
}

#[test]
fn criterion_01_benchmark_oracle_accuracy() {
    let started = Instant::now();
    let seed = 20_240_801u64;
    let (model, dist, training) = benchmark_training_set(seed);
    let training_solves = training.len() as u64;
    let (hier, _) = build_hierarchy(&training, &[2, 4, 6], 32, &desk_options(seed)).unwrap();

    let m = 1_000_000usize;
    let cfg = HybridConfig::for_samples(m);
    assert_eq!(cfg.delta_m, 500);
    let outcome = estimate_failure_probability(&model, &dist, &hier, m, &cfg, seed + 1).unwrap();

    let p_ref = phi_minus_beta();
    let se = (p_ref * (1.0 - p_ref) / m as f64).sqrt();
    let err = (outcome.estimate.p_hat - p_ref).abs();
    assert!(
        err <= 3.0 * se,
        "|p_hat - Phi(-3.5)| = {err:.3e} exceeds 3 se = {:.3e}",
        3.0 * se
    );
    let correction = outcome.ledger.true_solves;
    let total = correction + training_solves;
    assert!(
        total <= 2000,
        "true-model budget exceeded: {correction} correction + {training_solves} training"
    );
    println!(
        "[PASS] criterion 1: benchmark p_hat {:.6e} vs Phi(-3.5) {:.6e} (err {err:.2e} <= {:.2e}), {total} true solves, {:.1?}",
        outcome.estimate.p_hat,
        p_ref,
        3.0 * se,
        started.elapsed()
    );
}

#[test]
fn criterion_02_hybrid_degeneracy_gamma_infinite() {
    let model = BenchmarkModel::new(3.5, 50).unwrap();
    let dist = ParameterDistribution::standard_normal(50);
    let m = 100_000;
    let batch = sample(&dist, m, 7).unwrap();

    // surrogate values deliberately unrelated to the truth
    let junk: Vec<f64> = (0..m).map(|i| ((i as f64) * 0.37).sin() + 0.2).collect();
    let mut ledger = CostLedger::new(vec![2, 4, 6], 32);
    let hybrid = hybrid_estimate(&junk, &model, &batch, f64::INFINITY, &mut ledger).unwrap();

    let labels = FailureLabelVector::uniform(
        (0..m)
            .map(|i| {
                u8::from(model.evaluate(batch.row(i).as_slice().unwrap()).unwrap() < 0.0)
            })
            .collect(),
        Fidelity::TrueModel,
    )
    .unwrap();
    let plain = mc_estimate(&labels).unwrap();

    assert_eq!(hybrid.failures, plain.failures);
    assert_eq!(hybrid.p_hat.to_bits(), plain.p_hat.to_bits());
    assert_eq!(hybrid.std_err.to_bits(), plain.std_err.to_bits());
    assert_eq!(ledger.true_solves, m as u64);
    println!(
        "[PASS] criterion 2: gamma = inf hybrid equals plain MC bit-exactly (p_hat {:.6e}, {} solves)",
        hybrid.p_hat, ledger.true_solves
    );
}

// ---------------------------------------------------------------------------
// criterion 3: golden traces
// ---------------------------------------------------------------------------

/// Levels reading sample coordinates: level k returns z[k-1].
struct CoordinateLevels {
    levels: usize,
    dim: usize,
}

impl FidelityLevels for CoordinateLevels {
    fn levels(&self) -> usize {
        self.levels
    }
    fn input_dim(&self) -> usize {
        self.dim
    }
    fn eval_level(&self, level: usize, z: &[f64]) -> Result<f64, SurrogateError> {
        Ok(z[level - 1])
    }
}

/// True model reading the last coordinate.
struct LastCoordinate {
    dim: usize,
}

impl LimitStateModel for LastCoordinate {
    fn dim(&self) -> usize {
        self.dim
    }
    fn evaluate(&self, z: &[f64]) -> Result<f64, hnh::models::ModelError> {
        Ok(z[self.dim - 1])
    }
    fn cost_class(&self) -> hnh::models::CostClass {
        hnh::models::CostClass::Analytic
    }
}

fn golden(path: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(format!("tests/golden/{path}")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn batch_from_json(v: &serde_json::Value) -> hnh::estimator::SampleBatch {
    let rows: Vec<Vec<f64>> = serde_json::from_value(v.clone()).unwrap();
    let d = rows[0].len();
    let mut values = ndarray::Array2::zeros((rows.len(), d));
    for (i, row) in rows.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            values[[i, j]] = x;
        }
    }
    hnh::estimator::SampleBatch::from_matrix(
        values,
        ParameterDistribution::uniform(d, -100.0, 100.0),
        0,
    )
    .unwrap()
}

fn provenance_from_json(v: &serde_json::Value) -> Vec<Fidelity> {
    serde_json::from_value(v.clone()).unwrap()
}

#[test]
fn criterion_03_algorithm_golden_traces() {
    // modification on the L=2, M=4 fixture
    let doc = golden("modify_m4.json");
    let batch = batch_from_json(&doc["samples"]);
    let eta = doc["eta"].as_f64().unwrap();
    let levels = CoordinateLevels { levels: 2, dim: 2 };
    let mut ledger = CostLedger::new(vec![1, 2], 1);
    let (labels, state) = modify_labels(&levels, &batch, eta, &mut ledger).unwrap();

    let exp = &doc["expected"];
    let want_order: Vec<usize> = serde_json::from_value(exp["order"].clone()).unwrap();
    assert_eq!(state.order, want_order);
    let want_parts: Vec<(usize, usize)> = serde_json::from_value(exp["parts"].clone()).unwrap();
    assert_eq!(
        state.parts,
        want_parts.iter().map(|&(a, b)| a..b).collect::<Vec<_>>()
    );
    let want_eps: Vec<f64> = serde_json::from_value(exp["per_part_eps"].clone()).unwrap();
    assert_eq!(state.per_part_eps, want_eps);
    assert_eq!(
        state.parts_visited,
        exp["parts_visited"].as_u64().unwrap() as usize
    );
    assert_eq!(
        state.corrections_applied,
        exp["corrections_applied"].as_u64().unwrap() as usize
    );
    let want_labels: Vec<u8> = serde_json::from_value(exp["labels"].clone()).unwrap();
    assert_eq!(labels.labels(), &want_labels[..]);
    assert_eq!(labels.provenance(), &provenance_from_json(&exp["provenance"])[..]);

    // modification + iteration on the L=2, M=10, delta_m=2 fixture
    let doc = golden("iterate_m10.json");
    let batch = batch_from_json(&doc["samples"]);
    let m = batch.len();
    let levels = CoordinateLevels { levels: 2, dim: 3 };
    let mut ledger = CostLedger::new(vec![1, 2], 1);
    let (mut labels, state) =
        modify_labels(&levels, &batch, doc["eta"].as_f64().unwrap(), &mut ledger).unwrap();

    let expm = &doc["expected_modification"];
    let want_order: Vec<usize> = serde_json::from_value(expm["order"].clone()).unwrap();
    assert_eq!(state.order, want_order);
    let want_eps: Vec<f64> = serde_json::from_value(expm["per_part_eps"].clone()).unwrap();
    assert_eq!(state.per_part_eps, want_eps);
    assert_eq!(
        state.corrections_applied,
        expm["corrections_applied"].as_u64().unwrap() as usize
    );
    let want_labels: Vec<u8> = serde_json::from_value(expm["labels"].clone()).unwrap();
    assert_eq!(labels.labels(), &want_labels[..]);
    assert_eq!(
        labels.provenance(),
        &provenance_from_json(&expm["provenance"])[..]
    );

    let cfg = HybridConfig {
        delta_m: doc["delta_m"].as_u64().unwrap() as usize,
        eps_opt: doc["eps_opt"].as_f64().unwrap(),
        ..HybridConfig::for_samples(m)
    };
    let model = LastCoordinate { dim: 3 };
    let (est, trace) = iterate(&mut labels, &state, &batch, &model, &cfg, &mut ledger).unwrap();

    let expi = &doc["expected_iteration"];
    let fail_seq: Vec<u64> = serde_json::from_value(expi["failure_sequence"].clone()).unwrap();
    let want_p: Vec<f64> = fail_seq.iter().map(|&f| f as f64 / m as f64).collect();
    assert_eq!(trace.p_sequence, want_p);
    for k in 1..want_p.len() {
        assert_eq!(trace.delta_p[k - 1], want_p[k] - want_p[k - 1]);
        assert_eq!(trace.eps[k - 1], (want_p[k] - want_p[k - 1]).abs());
    }
    assert_eq!(trace.stop_reason, StopReason::Converged);
    assert_eq!(
        trace.true_solves_used,
        expi["true_solves"].as_u64().unwrap()
    );
    assert_eq!(est.p_hat, *want_p.last().unwrap());
    let want_final: Vec<u8> = serde_json::from_value(expi["final_labels"].clone()).unwrap();
    assert_eq!(labels.labels(), &want_final[..]);
    assert_eq!(
        labels.provenance(),
        &provenance_from_json(&expi["final_provenance"])[..]
    );
    println!("[PASS] criterion 3: modification and iteration reproduce both hand traces exactly");
}

#[test]
fn criterion_04_mixture_identities() {
    // weight sum over the sweep
    for &l in &[1usize, 2, 3, 5] {
        for &total in &[10usize, 100] {
            for m in 0..=total {
                let w = mixture_weights(m, total, l).unwrap();
                let sum: f64 = w.iter().sum();
                assert!(
                    (sum - 1.0).abs() <= 1e-15,
                    "weights sum {sum} at m={m} M={total} L={l}"
                );
            }
        }
    }

    // reductions on random networks
    let nets: Vec<MlpSurrogate> = (0..3)
        .map(|i| MlpSurrogate::glorot(4, i + 1, 6, Activation::Tanh, 100 + i as u64))
        .collect();
    let hier = SurrogateHierarchy::new(nets, "golden".into()).unwrap();
    let points = sample(&ParameterDistribution::standard_normal(4), 50, 3).unwrap();
    for i in 0..50 {
        let z = points.row(i).to_vec();
        let g1 = forward(hier.level(1).unwrap(), &z).unwrap();
        let zero_m = compose_hnh_value(&hier, 0, 100, &z).unwrap();
        assert!((zero_m - g1).abs() <= 1e-12 * g1.abs().max(1.0));

        let equal: f64 = (1..=3)
            .map(|l| forward(hier.level(l).unwrap(), &z).unwrap())
            .sum::<f64>()
            / 3.0;
        let full_m = compose_hnh_value(&hier, 100, 100, &z).unwrap();
        assert!((full_m - equal).abs() <= 1e-12 * equal.abs().max(1.0));
    }
    println!("[PASS] criterion 4: mixture weights sum to 1 over the sweep; m=0 and m=M reductions hold to 1e-12");
}

/// Synthetic hierarchy g_l = g + e_l with zero-mean deterministic noise
/// derived by hashing (level, z-bits) into a Box-Muller normal.
struct NoisyBenchmark {
    model: BenchmarkModel,
    levels: usize,
    noise_std: f64,
}

impl NoisyBenchmark {
    fn noise(&self, level: usize, z: &[f64]) -> f64 {
        let mut h = DefaultHasher::new();
        level.hash(&mut h);
        for v in z {
            v.to_bits().hash(&mut h);
        }
        let a = h.finish();
        let u1 = ((a >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
        0xdead_beefu64.hash(&mut h);
        let b = h.finish();
        let u2 = ((b >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos() * self.noise_std
    }
}

impl FidelityLevels for NoisyBenchmark {
    fn levels(&self) -> usize {
        self.levels
    }
    fn input_dim(&self) -> usize {
        self.model.n
    }
    fn eval_level(&self, level: usize, z: &[f64]) -> Result<f64, SurrogateError> {
        let g = benchmark_evaluate(&self.model, z).unwrap();
        Ok(g + self.noise(level, z))
    }
}

#[test]
fn criterion_05_mixture_unbiasedness() {
    let started = Instant::now();
    let levels = NoisyBenchmark {
        model: BenchmarkModel::new(3.5, 50).unwrap(),
        levels: 3,
        noise_std: 1.0,
    };
    let m_samples = 100_000usize;
    let applied = 40_000usize; // xi = 2: a genuinely mixed estimator
    let batch = sample(&ParameterDistribution::standard_normal(50), m_samples, 11).unwrap();

    let mut sum_d = 0.0;
    let mut sum_d2 = 0.0;
    for i in 0..m_samples {
        let z = batch.row(i);
        let z = z.as_slice().unwrap();
        let mixed = compose_hnh_value(&levels, applied, m_samples, z).unwrap();
        let g = benchmark_evaluate(&levels.model, z).unwrap();
        let d = mixed - g;
        sum_d += d;
        sum_d2 += d * d;
    }
    let n = m_samples as f64;
    let mean = sum_d / n;
    let sd = ((sum_d2 - sum_d * sum_d / n) / (n - 1.0)).sqrt();
    let bound = 4.0 * sd / n.sqrt();
    assert!(
        mean.abs() <= bound,
        "|mean(g_hat - g)| = {:.3e} exceeds 4 se = {:.3e}",
        mean.abs(),
        bound
    );
    println!(
        "[PASS] criterion 5: |mean(g_hat - g)| = {:.3e} within 4 se = {:.3e} over 1e5 samples ({:.1?})",
        mean.abs(),
        bound,
        started.elapsed()
    );
}

#[test]
fn criterion_06_cost_formula_and_trend() {
    let started = Instant::now();
    let seed = 60_606u64;
    let (model, dist, training) = benchmark_training_set(seed);
    // depth quality is irrelevant for counting, keep training short
    let opts = TrainOptions {
        epochs: 50,
        learning_rate: 1e-2,
        lr_decay: 0.99,
        dropout_rate: 0.2,
        seed,
        ..TrainOptions::default()
    };
    let depths = [6usize, 15, 30];
    let width = 32usize;
    let (hier, reports) = build_hierarchy(&training, &depths, width, &opts).unwrap();
    let train_evals: Vec<u64> = reports.iter().map(|r| r.train_evals).collect();
    let training_units = training_layer_units(&train_evals, &depths, width);

    let mut ratios = Vec::new();
    for &m in &[10_000usize, 100_000, 1_000_000] {
        // eta = 0 never stops the modification early: both modifiable parts
        // are always visited, making the counted units deterministic in M
        let cfg = HybridConfig {
            eta: 0.0,
            ..HybridConfig::for_samples(m)
        };
        let outcome =
            estimate_failure_probability(&model, &dist, &hier, m, &cfg, seed + m as u64)
                .unwrap();
        let counted = outcome.ledger.layer_units();
        let predicted = predicted_cost(m, &depths, width, outcome.modification.corrections_applied);
        assert_eq!(
            counted, predicted.hierarchical_units,
            "counted vs closed form at M = {m}"
        );

        // single-fidelity baseline: all samples through the deepest level
        let batch = sample(&dist, m, seed + m as u64).unwrap();
        let mut nh_ledger = CostLedger::new(depths.to_vec(), width);
        let deep = hier.levels();
        let _values = hier.eval_level_batch(deep, batch.values.view()).unwrap();
        nh_ledger.surrogate_evals[deep - 1] += m as u64;
        let nh_counted = nh_ledger.layer_units();
        assert_eq!(nh_counted, predicted.single_fidelity_units);
        assert!(
            counted < nh_counted,
            "hierarchical {counted} not below single-fidelity {nh_counted} at M = {m}"
        );

        let ratio = (training_units + counted) as f64 / (training_units + nh_counted) as f64;
        ratios.push((m, ratio));
    }
    for pair in ratios.windows(2) {
        assert!(
            pair[1].1 < pair[0].1,
            "cost ratio should fall as M grows: {ratios:?}"
        );
    }
    println!(
        "[PASS] criterion 6: counted units equal the closed form, beat single fidelity, ratio falls {:?} ({:.1?})",
        ratios
            .iter()
            .map(|(m, r)| format!("M=1e{}: {r:.3}", (*m as f64).log10() as u32))
            .collect::<Vec<_>>(),
        started.elapsed()
    );
}

#[test]
fn criterion_07_gradient_check_50_nets() {
    let step = 1e-5;
    let mut nets = 0;
    for seed in 0..50u64 {
        let d = 1 + (seed as usize % 5);
        let p = seed as usize % 4;
        let n = if p == 0 { 0 } else { 2 + (seed as usize % 7) };
        let net = MlpSurrogate::glorot(d, p, n, Activation::Tanh, 7000 + seed);
        let z: Vec<f64> = (0..d)
            .map(|i| ((seed as f64 + 1.0) * (i as f64 + 0.7)).sin())
            .collect();
        let target = ((seed as f64) * 0.31).cos();
        let grad = backward(&net, &z, target).unwrap();

        let loss = |net: &MlpSurrogate| {
            let f = forward(net, &z).unwrap();
            (f - target) * (f - target)
        };
        for layer in 0..net.layer_count() {
            let cols = net.weights[layer].ncols();
            for idx in 0..net.weights[layer].len() {
                let (r, c) = (idx / cols, idx % cols);
                let mut plus = net.clone();
                plus.weights[layer][[r, c]] += step;
                let mut minus = net.clone();
                minus.weights[layer][[r, c]] -= step;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * step);
                let an = grad.weights[layer][[r, c]];
                let rel = (fd - an).abs() / (fd.abs() + an.abs()).max(1e-8);
                assert!(
                    rel < 1e-5,
                    "net {seed} layer {layer} weight ({r},{c}): fd {fd:.6e} vs an {an:.6e}"
                );
            }
            for i in 0..net.biases[layer].len() {
                let mut plus = net.clone();
                plus.biases[layer][i] += step;
                let mut minus = net.clone();
                minus.biases[layer][i] -= step;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * step);
                let an = grad.biases[layer][i];
                let rel = (fd - an).abs() / (fd.abs() + an.abs()).max(1e-8);
                assert!(rel < 1e-5, "net {seed} layer {layer} bias {i}");
            }
        }
        nets += 1;
    }
    assert_eq!(nets, 50);
    println!("[PASS] criterion 7: backprop matches central differences on 50 random nets");
}

#[test]
fn criterion_08_kl_truncation_and_residuals() {
    let started = Instant::now();
    let grid = Grid::unit_square(65);
    let field = kl_build(1.0, 0.42, 0.8, grid, 48).unwrap();
    assert!(
        field.captured_variance_ratio >= 0.95,
        "captured variance {:.4}",
        field.captured_variance_ratio
    );

    // residual against the dense assembled covariance operator C W
    let nodes = grid.nodes();
    let w = field.quad_weights();
    let sigma2 = 0.42f64 * 0.42;
    let coord = |n: usize| (grid.x(n % grid.nx), grid.y(n / grid.nx));
    let mut worst: f64 = 0.0;
    // one row of C at a time keeps memory modest
    let mut cw_f = vec![vec![0.0f64; 48]; nodes];
    for i in 0..nodes {
        let (xi, yi) = coord(i);
        for j in 0..nodes {
            let (xj, yj) = coord(j);
            let cov = sigma2 * (-(xi - xj).abs() / 0.8 - (yi - yj).abs() / 0.8).exp();
            let wj = w[j];
            for (k, slot) in cw_f[i].iter_mut().enumerate() {
                *slot += cov * wj * field.eigenfunctions[[k, j]];
            }
        }
    }
    for k in 0..48 {
        let lambda = field.eigenvalues[k];
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..nodes {
            let r = cw_f[i][k] - lambda * field.eigenfunctions[[k, i]];
            num += r * r;
            den += field.eigenfunctions[[k, i]].powi(2);
        }
        let rel = (num / den).sqrt();
        worst = worst.max(rel);
        assert!(rel <= 1e-8, "eigenpair {k} residual {rel:.3e}");
    }
    println!(
        "[PASS] criterion 8: d=48 captures {:.4} of variance, worst eigen-residual {worst:.2e} ({:.1?})",
        field.captured_variance_ratio,
        started.elapsed()
    );
}

#[test]
fn criterion_09_fem_verification() {
    let started = Instant::now();
    // diffusion: second-order self-convergence on a smooth coefficient
    let coeff = |x: f64, y: f64| {
        1.0 + 0.5 * (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).cos()
    };
    let value_at = |n: usize| {
        let grid = Grid::unit_square(n);
        let a = GridField::from_fn(grid, coeff);
        let u = diffusion_solve(&grid, &a).unwrap();
        sensor_read(&u, 0.5, 0.5).unwrap()
    };
    let (u17, u33, u65) = (value_at(17), value_at(33), value_at(65));
    let ratio = (u17 - u33) / (u33 - u65);
    assert!(
        (3.5..=4.5).contains(&ratio),
        "diffusion refinement ratio {ratio}"
    );

    // constant-coefficient cross-section equals the 1-d parabola
    let grid = Grid::unit_square(65);
    let a = GridField::from_fn(grid, |_, _| 1.0);
    let u = diffusion_solve(&grid, &a).unwrap();
    let mut worst_parabola: f64 = 0.0;
    for ix in 0..65 {
        let x = grid.x(ix);
        let expected = x * (1.0 - x) / 2.0;
        worst_parabola = worst_parabola.max((u.values[[ix, 32]] - expected).abs());
    }
    assert!(worst_parabola <= 1e-8, "parabola error {worst_parabola:.3e}");

    // Helmholtz at k = 0 against the separable Laplace series, with the
    // O(h^2) refinement confirming "within discretization error"
    let helm_err = |n: usize| {
        let grid = Grid::unit_square(n);
        let u = helmholtz_solve(&grid, &GridField::zeros(grid), 1.0).unwrap();
        let mut worst: f64 = 0.0;
        for iy in 0..n {
            for ix in 0..n {
                let exact = (std::f64::consts::PI * grid.y(iy)).sin()
                    * (std::f64::consts::PI * (1.0 - grid.x(ix))).sinh()
                    / std::f64::consts::PI.sinh();
                worst = worst.max((u.values[[ix, iy]] - exact).abs());
            }
        }
        worst
    };
    let (e33, e65) = (helm_err(33), helm_err(65));
    assert!(e65 < 1e-3, "Helmholtz k=0 error {e65:.3e} at 65^2");
    assert!(
        e65 < e33 / 3.0,
        "Helmholtz error not contracting at second order: {e33:.3e} -> {e65:.3e}"
    );
    println!(
        "[PASS] criterion 9: diffusion ratio {ratio:.2}, parabola {worst_parabola:.1e}, Laplace series err {e65:.1e} ({:.1?})",
        started.elapsed()
    );
}

fn pde_training_set(
    model: &dyn LimitStateModel,
    dist: &ParameterDistribution,
    seed: u64,
) -> TrainingSet {
    use rayon::prelude::*;
    let batch = sample(dist, 1000, seed).unwrap();
    let targets: Vec<f64> = (0..1000)
        .into_par_iter()
        .map(|i| model.evaluate(batch.row(i).as_slice().unwrap()).unwrap())
        .collect();
    TrainingSet::new(batch.values, Array1::from_vec(targets), 0.1, seed).unwrap()
}

fn mc_reference(
    model: &dyn LimitStateModel,
    dist: &ParameterDistribution,
    m: usize,
    seed: u64,
) -> (f64, f64) {
    use rayon::prelude::*;
    let batch = sample(dist, m, seed).unwrap();
    let fails: u64 = (0..m)
        .into_par_iter()
        .map(|i| {
            u64::from(model.evaluate(batch.row(i).as_slice().unwrap()).unwrap() < 0.0)
        })
        .sum();
    let p = fails as f64 / m as f64;
    (p, (p * (1.0 - p) / m as f64).sqrt())
}

#[test]
fn criterion_10_diffusion_self_consistency() {
    let started = Instant::now();
    // CI downscale sanctioned by the criterion: 33^2 grid, M = 2e4
    let model = DiffusionModel::from_spec(&DiffusionSpec {
        grid_n: 33,
        sigma: 0.42,
        corr_len: 0.8,
        truncation: 48,
        mean: 1.0,
        sensor: (0.5, 0.5),
        threshold: 0.19,
    })
    .unwrap();
    let dist = ParameterDistribution::uniform(48, -1.0, 1.0);

    let training = pde_training_set(&model, &dist, 31_415);
    let (hier, _) = build_hierarchy(&training, &[2, 4, 6], 32, &desk_options(31_415)).unwrap();

    let m = 20_000usize;
    let (p_ref, se_ref) = mc_reference(&model, &dist, m, 271_828);

    // order-of-magnitude agreement with the reported reference 1.2e-3: the
    // solver internals behind that number are unknown, so the check is
    // |log10 p_ref - log10 1.2e-3| <= 0.5 (within half a decade)
    let log_gap = (p_ref.log10() - 1.2e-3f64.log10()).abs();
    assert!(
        log_gap <= 0.5,
        "reference p {p_ref:.3e} is {log_gap:.2} decades from 1.2e-3"
    );

    let cfg = HybridConfig::for_samples(m);
    let outcome =
        estimate_failure_probability(&model, &dist, &hier, m, &cfg, 161_803).unwrap();
    assert!(
        outcome.ledger.true_solves + training.len() as u64 <= 2000,
        "diffusion run used {} correction solves",
        outcome.ledger.true_solves
    );
    let se_hnh = outcome.estimate.std_err;
    let band = 3.0 * (se_ref * se_ref + se_hnh * se_hnh).sqrt();
    let gap = (outcome.estimate.p_hat - p_ref).abs();
    assert!(
        gap <= band,
        "HNH {:.3e} vs reference {p_ref:.3e}: gap {gap:.3e} > band {band:.3e}",
        outcome.estimate.p_hat
    );
    println!(
        "[PASS] criterion 10: diffusion HNH {:.3e} vs own MC {p_ref:.3e} (gap {gap:.2e} <= {band:.2e}), {} true solves, {:.1?}",
        outcome.estimate.p_hat,
        outcome.ledger.true_solves + training.len() as u64,
        started.elapsed()
    );
}

#[test]
fn criterion_11_helmholtz_self_consistency() {
    let started = Instant::now();
    let model = HelmholtzModel::from_spec(&HelmholtzSpec {
        grid_n: 33,
        sigma: 0.42,
        corr_len: 0.8,
        truncation: 48,
        k0: 5.0,
        forcing_amplitude: 1.0,
        sensor: (0.7264, 0.4912),
        threshold: 1.09,
    })
    .unwrap();
    let dist = ParameterDistribution::uniform(48, -1.0, 1.0);

    let training = pde_training_set(&model, &dist, 31_415);
    let (hier, _) = build_hierarchy(&training, &[2, 4, 6], 32, &desk_options(31_415)).unwrap();

    let m = 10_000usize;
    let (p_ref, se_ref) = mc_reference(&model, &dist, m, 271_828);

    let cfg = HybridConfig::for_samples(m);
    let outcome =
        estimate_failure_probability(&model, &dist, &hier, m, &cfg, 161_803).unwrap();
    let se_hnh = outcome.estimate.std_err;
    let band = 3.0 * (se_ref * se_ref + se_hnh * se_hnh).sqrt();
    let gap = (outcome.estimate.p_hat - p_ref).abs();
    assert!(
        gap <= band,
        "HNH {:.3e} vs reference {p_ref:.3e}: gap {gap:.3e} > band {band:.3e}",
        outcome.estimate.p_hat
    );
    println!(
        "[PASS] criterion 11: Helmholtz HNH {:.4e} vs own MC {p_ref:.4e} (gap {gap:.2e} <= {band:.2e}), {:.1?}",
        outcome.estimate.p_hat,
        started.elapsed()
    );
}
