//! Mini-batch SGD training with momentum, train/validation tracking,
//! optional dropout and K-fold cross-validation.
//!
//! Inputs and targets are standardized internally (per-column z-scores from
//! the training partition); the affine maps are folded back into the first
//! and last layers afterwards, so the returned network consumes raw inputs
//! and produces raw-unit outputs.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::mlp::{backward_from_cache, forward_cached, MlpGradient, MlpSurrogate};
use super::SurrogateError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    SgdMomentum,
}

/// Training hyperparameters. `seed` drives initialization, shuffling, and
/// dropout; identical options and data give bit-identical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiplicative per-epoch learning-rate factor; 1.0 keeps the rate
    /// constant, values just below 1 anneal the SGD noise floor away.
    pub lr_decay: f64,
    pub momentum: f64,
    pub optimizer: OptimizerKind,
    pub dropout_rate: f64,
    pub cv_folds: usize,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 300,
            batch_size: 32,
            learning_rate: 1e-3,
            lr_decay: 1.0,
            momentum: 0.9,
            optimizer: OptimizerKind::SgdMomentum,
            dropout_rate: 0.0,
            cv_folds: 5,
            seed: 0,
        }
    }
}

impl TrainOptions {
    pub fn validate(&self) -> Result<(), SurrogateError> {
        if self.epochs == 0 {
            return Err(SurrogateError::InvalidOptions("epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(SurrogateError::InvalidOptions(
                "learning rate must be positive".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(SurrogateError::InvalidOptions(
                "batch size must be >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(SurrogateError::InvalidOptions(
                "dropout rate must be in [0, 1)".into(),
            ));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(SurrogateError::InvalidOptions(
                "lr decay must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Shared training data with a fixed train/validation split.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub inputs: Array2<f64>,
    pub targets: Array1<f64>,
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
    pub seed: u64,
}

impl TrainingSet {
    /// Splits off `validation_fraction` of the rows (at least one point
    /// stays in training), shuffled deterministically by `seed`.
    pub fn new(
        inputs: Array2<f64>,
        targets: Array1<f64>,
        validation_fraction: f64,
        seed: u64,
    ) -> Result<Self, SurrogateError> {
        if inputs.nrows() == 0 || inputs.nrows() != targets.len() {
            return Err(SurrogateError::InvalidOptions(format!(
                "inputs ({}) and targets ({}) must be nonempty and equal length",
                inputs.nrows(),
                targets.len()
            )));
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(SurrogateError::NonFiniteInput);
        }
        if !(0.0..1.0).contains(&validation_fraction) {
            return Err(SurrogateError::InvalidOptions(
                "validation fraction must be in [0, 1)".into(),
            ));
        }
        let m = inputs.nrows();
        let mut order: Vec<usize> = (0..m).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let n_val = ((m as f64) * validation_fraction).floor() as usize;
        let n_val = n_val.min(m - 1);
        let validation_indices = order[..n_val].to_vec();
        let train_indices = order[n_val..].to_vec();
        Ok(TrainingSet {
            inputs,
            targets,
            train_indices,
            validation_indices,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    /// SHA-256 over the little-endian bytes of inputs, targets, split, and
    /// seed; identifies the dataset in weight files and manifests.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for v in self.inputs.iter() {
            hasher.update(v.to_le_bytes());
        }
        for v in self.targets.iter() {
            hasher.update(v.to_le_bytes());
        }
        for &i in &self.train_indices {
            hasher.update((i as u64).to_le_bytes());
        }
        hasher.update(u64::MAX.to_le_bytes());
        for &i in &self.validation_indices {
            hasher.update((i as u64).to_le_bytes());
        }
        hasher.update(self.seed.to_le_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub validation_mse: f64,
}

/// Per-epoch losses (raw units) and bookkeeping from one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub epochs: Vec<EpochStats>,
    pub initial_validation_mse: f64,
    pub final_validation_mse: f64,
    pub final_train_mse: f64,
    pub best_epoch: usize,
    /// Forward evaluations spent on optimization (samples x epochs).
    pub train_evals: u64,
    pub dataset_hash: String,
}

struct Standardizer {
    x_mean: Array1<f64>,
    x_scale: Array1<f64>,
    t_mean: f64,
    t_scale: f64,
}

impl Standardizer {
    fn fit(inputs: &Array2<f64>, targets: &Array1<f64>, rows: &[usize]) -> Self {
        let d = inputs.ncols();
        let n = rows.len() as f64;
        let mut x_mean = Array1::zeros(d);
        for &r in rows {
            x_mean += &inputs.row(r);
        }
        x_mean /= n;
        let mut x_var = Array1::<f64>::zeros(d);
        for &r in rows {
            let diff = &inputs.row(r) - &x_mean;
            x_var += &diff.mapv(|v| v * v);
        }
        x_var /= n;
        let x_scale = x_var.mapv(|v| v.sqrt().max(1e-12));

        let t_mean = rows.iter().map(|&r| targets[r]).sum::<f64>() / n;
        let t_var = rows
            .iter()
            .map(|&r| (targets[r] - t_mean) * (targets[r] - t_mean))
            .sum::<f64>()
            / n;
        let t_scale = t_var.sqrt().max(1e-12);
        Standardizer {
            x_mean,
            x_scale,
            t_mean,
            t_scale,
        }
    }

    fn normalize_inputs(&self, inputs: &Array2<f64>) -> Array2<f64> {
        let mut out = inputs.clone();
        for mut row in out.axis_iter_mut(Axis(0)) {
            row -= &self.x_mean;
            row /= &self.x_scale;
        }
        out
    }

    fn normalize_target(&self, t: f64) -> f64 {
        (t - self.t_mean) / self.t_scale
    }

    /// Folds the standardization into the first and last layers so the
    /// network consumes raw inputs and emits raw-unit values.
    fn bake(&self, net: &mut MlpSurrogate) {
        // input side: w0' = w0 / scale (columnwise), b0' = b0 - w0' . mean
        for (mut col, &s) in net.weights[0].axis_iter_mut(Axis(1)).zip(self.x_scale.iter()) {
            col.mapv_inplace(|v| v / s);
        }
        let correction = net.weights[0].dot(&self.x_mean);
        net.biases[0] -= &correction;
        // output side: f = t_scale * f' + t_mean
        let last = net.layer_count() - 1;
        net.weights[last].mapv_inplace(|v| v * self.t_scale);
        net.biases[last].mapv_inplace(|v| v * self.t_scale + self.t_mean);
    }
}

fn mse(
    net: &MlpSurrogate,
    inputs: &Array2<f64>,
    targets: &Array1<f64>,
    rows: &[usize],
    standardizer: &Standardizer,
) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let mut acc = 0.0;
    for &r in rows {
        let cache = forward_cached(net, inputs.row(r), None);
        let pred = cache.activations[net.layer_count()][0];
        let raw_pred = pred * standardizer.t_scale + standardizer.t_mean;
        let diff = raw_pred - targets[r];
        acc += diff * diff;
    }
    acc / rows.len() as f64
}

/// Trains `net` on the training partition by mini-batch SGD with momentum,
/// tracking validation MSE each epoch. The returned network is the best
/// validation snapshot (epoch 0 included), so its validation MSE never
/// exceeds the initial one; standardization is baked in before returning.
pub fn train(
    net: MlpSurrogate,
    data: &TrainingSet,
    opts: &TrainOptions,
) -> Result<(MlpSurrogate, TrainingReport), SurrogateError> {
    opts.validate()?;
    if data.is_empty() {
        return Err(SurrogateError::InvalidOptions("empty training set".into()));
    }
    if data.dim() != net.input_dim {
        return Err(SurrogateError::DimensionMismatch {
            expected: net.input_dim,
            got: data.dim(),
        });
    }
    let mut net = net;
    net.dropout_rate = opts.dropout_rate;

    let standardizer = Standardizer::fit(&data.inputs, &data.targets, &data.train_indices);
    let norm_inputs = standardizer.normalize_inputs(&data.inputs);
    let norm_targets: Array1<f64> = data.targets.mapv(|t| standardizer.normalize_target(t));

    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
    let mut velocity = MlpGradient::zeros_like(&net);
    let mut batch_grad = MlpGradient::zeros_like(&net);

    let val_rows = &data.validation_indices;
    let train_rows_fixed = &data.train_indices;

    let initial_val = mse(&net, &norm_inputs, &data.targets, val_rows, &standardizer);
    let initial_train = mse(
        &net,
        &norm_inputs,
        &data.targets,
        train_rows_fixed,
        &standardizer,
    );

    let mut best = net.clone();
    // without a validation partition the snapshot criterion falls back to
    // the training loss
    let mut best_val = if val_rows.is_empty() {
        initial_train
    } else {
        initial_val
    };
    let mut best_epoch = 0usize;
    let mut epochs = vec![EpochStats {
        epoch: 0,
        train_mse: initial_train,
        validation_mse: initial_val,
    }];
    let mut train_evals = 0u64;

    let mut order: Vec<usize> = data.train_indices.clone();
    let mut lr = opts.learning_rate;
    for epoch in 1..=opts.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(opts.batch_size) {
            zero_gradient(&mut batch_grad);
            for &r in batch {
                let dropout = if opts.dropout_rate > 0.0 {
                    Some((&mut rng, opts.dropout_rate))
                } else {
                    None
                };
                let cache = forward_cached(&net, norm_inputs.row(r), dropout);
                let g = backward_from_cache(&net, &cache, norm_targets[r]);
                batch_grad.scaled_add(1.0 / batch.len() as f64, &g);
            }
            // momentum step: v <- momentum v - lr g; w <- w + v
            for j in 0..net.weights.len() {
                velocity.weights[j].mapv_inplace(|v| v * opts.momentum);
                velocity.weights[j].scaled_add(-lr, &batch_grad.weights[j]);
                net.weights[j] += &velocity.weights[j];
                velocity.biases[j].mapv_inplace(|v| v * opts.momentum);
                velocity.biases[j].scaled_add(-lr, &batch_grad.biases[j]);
                net.biases[j] += &velocity.biases[j];
            }
            train_evals += batch.len() as u64;
        }
        lr *= opts.lr_decay;

        let train_mse = mse(
            &net,
            &norm_inputs,
            &data.targets,
            train_rows_fixed,
            &standardizer,
        );
        let val_mse = mse(&net, &norm_inputs, &data.targets, val_rows, &standardizer);
        if !train_mse.is_finite() || !val_mse.is_finite() {
            return Err(SurrogateError::Divergence { epoch });
        }
        epochs.push(EpochStats {
            epoch,
            train_mse,
            validation_mse: val_mse,
        });
        // prefer the later epoch on ties so a flat validation curve still
        // returns the most-trained parameters
        let criterion = if val_rows.is_empty() { train_mse } else { val_mse };
        if criterion <= best_val {
            best_val = criterion;
            best = net.clone();
            best_epoch = epoch;
        }
    }

    let final_train = epochs[best_epoch].train_mse;
    let final_val = epochs[best_epoch].validation_mse;
    standardizer.bake(&mut best);
    best.validate()?;

    let report = TrainingReport {
        epochs,
        initial_validation_mse: initial_val,
        final_validation_mse: final_val,
        final_train_mse: final_train,
        best_epoch,
        train_evals,
        dataset_hash: data.content_hash(),
    };
    Ok((best, report))
}

fn zero_gradient(grad: &mut MlpGradient) {
    for w in &mut grad.weights {
        w.fill(0.0);
    }
    for b in &mut grad.biases {
        b.fill(0.0);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationReport {
    pub folds: usize,
    pub fold_validation_mse: Vec<f64>,
    pub mean_validation_mse: f64,
}

/// Simple K-fold cross-validation over the whole dataset, for reporting: a
/// fresh network per fold, trained on the other folds, scored on the held
/// fold in raw units.
pub fn cross_validate(
    template: &MlpSurrogate,
    data: &TrainingSet,
    opts: &TrainOptions,
) -> Result<CrossValidationReport, SurrogateError> {
    opts.validate()?;
    let k = opts.cv_folds;
    if k < 2 || k > data.len() {
        return Err(SurrogateError::InvalidOptions(format!(
            "cv_folds must be in 2..=#samples, got {k}"
        )));
    }
    let m = data.len();
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed ^ 0x6b66_6f6c_645f_6376);
    order.shuffle(&mut rng);

    let mut fold_mse = Vec::with_capacity(k);
    for fold in 0..k {
        let held: Vec<usize> = order
            .iter()
            .enumerate()
            .filter(|(i, _)| i % k == fold)
            .map(|(_, &r)| r)
            .collect();
        let kept: Vec<usize> = order
            .iter()
            .enumerate()
            .filter(|(i, _)| i % k != fold)
            .map(|(_, &r)| r)
            .collect();
        let fold_data = TrainingSet {
            inputs: data.inputs.clone(),
            targets: data.targets.clone(),
            train_indices: kept,
            validation_indices: held.clone(),
            seed: data.seed,
        };
        let fresh = MlpSurrogate::glorot(
            template.input_dim,
            template.hidden_layers,
            template.width,
            template.activation,
            opts.seed.wrapping_add(fold as u64),
        );
        let (trained, _) = train(fresh, &fold_data, opts)?;
        // trained nets are baked: score directly in raw units
        let mut acc = 0.0;
        for &r in &held {
            let view: ArrayView1<f64> = fold_data.inputs.row(r);
            let pred = super::mlp::forward(&trained, view.as_slice().unwrap())?;
            let diff = pred - fold_data.targets[r];
            acc += diff * diff;
        }
        fold_mse.push(acc / held.len() as f64);
    }
    let mean = fold_mse.iter().sum::<f64>() / k as f64;
    Ok(CrossValidationReport {
        folds: k,
        fold_validation_mse: fold_mse,
        mean_validation_mse: mean,
    })
}
