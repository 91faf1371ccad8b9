//! End-to-end estimation: sample, modify labels through the hierarchy, then
//! correct with the true model.

use serde::Serialize;

use super::{iterate, modify_labels_with, EpsAccumulation, HnhError, IterationTrace,
    ModificationState};
use crate::estimator::{
    sample, CostLedger, FailureEstimate, FailureLabelVector, HybridConfig,
    ParameterDistribution, SampleBatch,
};
use crate::models::LimitStateModel;
use crate::surrogate::{FidelityLevels, SurrogateHierarchy};

/// Everything one estimation run produces, sufficient for a manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub estimate: FailureEstimate,
    pub trace: IterationTrace,
    pub modification: ModificationState,
    pub ledger: CostLedger,
    pub sample_seed: u64,
    pub samples: usize,
    #[serde(skip)]
    pub labels: FailureLabelVector,
}

/// Samples M points, runs the modification pass and the correction loop.
/// The ledger separates estimation cost from training cost (which the
/// caller tracks when building the hierarchy).
pub fn estimate_failure_probability(
    model: &dyn LimitStateModel,
    dist: &ParameterDistribution,
    hierarchy: &SurrogateHierarchy,
    total_samples: usize,
    cfg: &HybridConfig,
    seed: u64,
) -> Result<RunOutcome, HnhError> {
    if model.dim() != dist.dim() || model.dim() != hierarchy.input_dim() {
        return Err(HnhError::DimensionMismatch {
            batch: dist.dim(),
            levels: hierarchy.input_dim(),
        });
    }
    let batch = sample(dist, total_samples, seed)?;
    run_on_batch(model, hierarchy, &batch, cfg)
}

/// Same pipeline on a prepared batch (replay, fixtures).
pub fn run_on_batch(
    model: &dyn LimitStateModel,
    hierarchy: &SurrogateHierarchy,
    batch: &SampleBatch,
    cfg: &HybridConfig,
) -> Result<RunOutcome, HnhError> {
    let mut ledger = CostLedger::new(hierarchy.depths(), hierarchy.width());
    let accumulation = if cfg.signed_eps {
        EpsAccumulation::Signed
    } else {
        EpsAccumulation::Absolute
    };
    let (mut labels, modification) =
        modify_labels_with(hierarchy, batch, cfg.eta, accumulation, &mut ledger)?;
    let (estimate, trace) = iterate(&mut labels, &modification, batch, model, cfg, &mut ledger)?;
    Ok(RunOutcome {
        estimate,
        trace,
        modification,
        ledger,
        sample_seed: batch.seed,
        samples: batch.len(),
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::mc_estimate;
    use crate::models::BenchmarkModel;
    use crate::surrogate::{
        build_hierarchy, train, MlpSurrogate, TrainOptions, TrainingSet, Activation,
    };
    use crate::estimator::Fidelity;
    use ndarray::Array1;

    /// Hierarchy of one network trained to mimic the benchmark closely; a
    /// perfect single level makes the pipeline collapse to plain MC after
    /// the first correction batch confirms everything.
    #[test]
    fn near_perfect_single_level_matches_plain_mc() {
        let model = BenchmarkModel::new(1.0, 2).unwrap();
        let dist = ParameterDistribution::standard_normal(2);

        // train a tiny affine net on the exact linear target
        let data_batch = sample(&dist, 400, 50).unwrap();
        let targets = Array1::from_iter((0..400).map(|i| {
            crate::models::benchmark_evaluate(&model, data_batch.row(i).as_slice().unwrap())
                .unwrap()
        }));
        let training = TrainingSet::new(data_batch.values, targets, 0.1, 50).unwrap();
        let net = MlpSurrogate::glorot(2, 0, 0, Activation::Identity, 51);
        let opts = TrainOptions {
            epochs: 600,
            learning_rate: 5e-3,
            seed: 51,
            ..TrainOptions::default()
        };
        let (trained, _) = train(net, &training, &opts).unwrap();
        let hierarchy =
            crate::surrogate::SurrogateHierarchy::new(vec![trained], training.content_hash())
                .unwrap();

        let m = 2000;
        let cfg = HybridConfig {
            delta_m: 100,
            ..HybridConfig::for_samples(m)
        };
        let outcome =
            estimate_failure_probability(&model, &dist, &hierarchy, m, &cfg, 99).unwrap();

        // reference: plain MC over the same batch
        let batch = sample(&dist, m, 99).unwrap();
        let labels = FailureLabelVector::uniform(
            (0..m)
                .map(|i| {
                    u8::from(
                        crate::models::benchmark_evaluate(
                            &model,
                            batch.row(i).as_slice().unwrap(),
                        )
                        .unwrap()
                            < 0.0,
                    )
                })
                .collect(),
            Fidelity::TrueModel,
        )
        .unwrap();
        let reference = mc_estimate(&labels).unwrap();

        // the affine net recovers the linear limit state to ~1e-3, so the
        // pipeline's labels agree with the truth everywhere and the loop
        // stops after confirming one batch
        assert_eq!(outcome.estimate.p_hat, reference.p_hat);
        assert!(outcome.ledger.true_solves <= 2 * cfg.delta_m as u64);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let model = BenchmarkModel::new(1.0, 3).unwrap();
        let dist = ParameterDistribution::standard_normal(2);
        let data = sample(&dist, 50, 1).unwrap();
        let targets = Array1::from_iter((0..50).map(|i| data.values[[i, 0]]));
        let training = TrainingSet::new(data.values, targets, 0.1, 1).unwrap();
        let opts = TrainOptions {
            epochs: 2,
            ..TrainOptions::default()
        };
        let (hier, _) = build_hierarchy(&training, &[2], 4, &opts).unwrap();
        let cfg = HybridConfig::for_samples(100);
        assert!(matches!(
            estimate_failure_probability(&model, &dist, &hier, 100, &cfg, 0),
            Err(HnhError::DimensionMismatch { .. })
        ));
    }
}
