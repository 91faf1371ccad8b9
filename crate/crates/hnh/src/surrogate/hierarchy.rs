//! Depth-ordered surrogate hierarchies trained on one shared dataset, and
//! the level-evaluation abstraction the estimator works against.

use ndarray::ArrayView2;

use super::mlp::{forward, forward_batch, Activation, MlpSurrogate};
use super::train::{train, TrainOptions, TrainingReport, TrainingSet};
use super::SurrogateError;

/// Anything that exposes L fidelity levels over the same input space,
/// level 1 coarsest. Trained hierarchies implement this; tests substitute
/// hand-built tables.
pub trait FidelityLevels: Sync {
    fn levels(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// Evaluates level `level` (1-based) at one point.
    fn eval_level(&self, level: usize, z: &[f64]) -> Result<f64, SurrogateError>;
    /// Evaluates level `level` on every row. The default loops `eval_level`.
    fn eval_level_batch(
        &self,
        level: usize,
        inputs: ArrayView2<f64>,
    ) -> Result<Vec<f64>, SurrogateError> {
        let mut out = Vec::with_capacity(inputs.nrows());
        for row in inputs.rows() {
            out.push(self.eval_level(level, row.as_slice().expect("contiguous rows"))?);
        }
        Ok(out)
    }
}

/// L trained networks of strictly increasing depth sharing input dimension,
/// width, and training data (identified by the dataset hash).
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateHierarchy {
    levels: Vec<MlpSurrogate>,
    dataset_hash: String,
}

impl SurrogateHierarchy {
    pub fn new(levels: Vec<MlpSurrogate>, dataset_hash: String) -> Result<Self, SurrogateError> {
        if levels.is_empty() {
            return Err(SurrogateError::InvalidHierarchy("no levels".into()));
        }
        let d = levels[0].input_dim;
        let width = levels[0].width;
        for pair in levels.windows(2) {
            if pair[0].hidden_layers >= pair[1].hidden_layers {
                return Err(SurrogateError::InvalidHierarchy(format!(
                    "depths must be strictly ascending, got {} then {}",
                    pair[0].hidden_layers, pair[1].hidden_layers
                )));
            }
        }
        for (i, net) in levels.iter().enumerate() {
            net.validate()?;
            if net.input_dim != d || net.width != width {
                return Err(SurrogateError::InvalidHierarchy(format!(
                    "level {} does not share input_dim/width",
                    i + 1
                )));
            }
        }
        Ok(SurrogateHierarchy {
            levels,
            dataset_hash,
        })
    }

    pub fn depths(&self) -> Vec<usize> {
        self.levels.iter().map(|n| n.hidden_layers).collect()
    }

    pub fn width(&self) -> usize {
        self.levels[0].width
    }

    pub fn dataset_hash(&self) -> &str {
        &self.dataset_hash
    }

    pub fn level(&self, level: usize) -> Result<&MlpSurrogate, SurrogateError> {
        if level == 0 || level > self.levels.len() {
            return Err(SurrogateError::LevelOutOfRange {
                level,
                levels: self.levels.len(),
            });
        }
        Ok(&self.levels[level - 1])
    }

    pub fn iter(&self) -> impl Iterator<Item = &MlpSurrogate> {
        self.levels.iter()
    }
}

impl FidelityLevels for SurrogateHierarchy {
    fn levels(&self) -> usize {
        self.levels.len()
    }

    fn input_dim(&self) -> usize {
        self.levels[0].input_dim
    }

    fn eval_level(&self, level: usize, z: &[f64]) -> Result<f64, SurrogateError> {
        forward(self.level(level)?, z)
    }

    fn eval_level_batch(
        &self,
        level: usize,
        inputs: ArrayView2<f64>,
    ) -> Result<Vec<f64>, SurrogateError> {
        Ok(forward_batch(self.level(level)?, inputs)?.to_vec())
    }
}

/// Trains one network per depth on the identical dataset and assembles the
/// hierarchy. Per-level initialization seeds derive from `opts.seed` and the
/// level index; everything else is shared.
pub fn build_hierarchy(
    data: &TrainingSet,
    depths: &[usize],
    width: usize,
    opts: &TrainOptions,
) -> Result<(SurrogateHierarchy, Vec<TrainingReport>), SurrogateError> {
    if depths.is_empty() {
        return Err(SurrogateError::InvalidHierarchy("no depths".into()));
    }
    for pair in depths.windows(2) {
        if pair[0] >= pair[1] {
            return Err(SurrogateError::InvalidHierarchy(format!(
                "depths must be strictly ascending, got {:?}",
                depths
            )));
        }
    }
    let mut levels = Vec::with_capacity(depths.len());
    let mut reports = Vec::with_capacity(depths.len());
    for (i, &p) in depths.iter().enumerate() {
        let init_seed = opts.seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1));
        let net = MlpSurrogate::glorot(data.dim(), p, width, Activation::Tanh, init_seed);
        let (trained, report) = train(net, data, opts).map_err(|e| match e {
            SurrogateError::Divergence { epoch } => SurrogateError::InvalidHierarchy(format!(
                "level {} (depth {p}) diverged at epoch {epoch}",
                i + 1
            )),
            other => other,
        })?;
        levels.push(trained);
        reports.push(report);
    }
    let hierarchy = SurrogateHierarchy::new(levels, data.content_hash())?;
    Ok((hierarchy, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    fn easy_data(m: usize, seed: u64) -> TrainingSet {
        let batch =
            crate::estimator::sample(&crate::ParameterDistribution::standard_normal(2), m, seed)
                .unwrap();
        let targets = Array1::from_iter((0..m).map(|i| batch.values[[i, 0]]));
        TrainingSet::new(batch.values, targets, 0.1, seed).unwrap()
    }

    #[test]
    fn degenerate_hierarchy_equals_single_train() {
        let data = easy_data(100, 21);
        let opts = TrainOptions {
            epochs: 40,
            seed: 6,
            ..TrainOptions::default()
        };
        let (hier, reports) = build_hierarchy(&data, &[2], 4, &opts).unwrap();
        assert_eq!(hier.levels(), 1);
        assert_eq!(reports.len(), 1);

        let init_seed = 6u64.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let net = MlpSurrogate::glorot(2, 2, 4, Activation::Tanh, init_seed);
        let (trained, _) = train(net, &data, &opts).unwrap();
        assert_eq!(hier.level(1).unwrap(), &trained);
    }

    #[test]
    fn declared_shapes_come_out() {
        let data = easy_data(60, 22);
        let opts = TrainOptions {
            epochs: 5,
            seed: 7,
            ..TrainOptions::default()
        };
        let (hier, _) = build_hierarchy(&data, &[2, 4, 6], 8, &opts).unwrap();
        assert_eq!(hier.depths(), vec![2, 4, 6]);
        assert_eq!(hier.width(), 8);
        for (net, p) in hier.iter().zip([2, 4, 6]) {
            assert_eq!(net.hidden_layers, p);
            assert_eq!(net.weights.len(), p + 1);
        }
    }

    #[test]
    fn easy_target_both_levels_accurate() {
        // g(z) = z_1 is learnable by shallow and deep nets alike.
        let data = easy_data(400, 23);
        let opts = TrainOptions {
            epochs: 500,
            learning_rate: 5e-3,
            seed: 8,
            ..TrainOptions::default()
        };
        let (_, reports) = build_hierarchy(&data, &[2, 4], 8, &opts).unwrap();
        for (i, r) in reports.iter().enumerate() {
            assert!(
                r.final_validation_mse < 1e-3,
                "level {} val mse {}",
                i + 1,
                r.final_validation_mse
            );
        }
    }

    #[test]
    fn non_ascending_depths_rejected() {
        let data = easy_data(30, 24);
        let opts = TrainOptions {
            epochs: 1,
            ..TrainOptions::default()
        };
        assert!(build_hierarchy(&data, &[4, 4], 4, &opts).is_err());
        assert!(build_hierarchy(&data, &[6, 2], 4, &opts).is_err());
    }
}
