//! Multi-label discipline classification: tf-idf features, a linear encoder and
//! classifier trained on BCE plus a batch InfoNCE term, and ranking metrics.

pub mod augment;
pub mod dataset;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod vocab;

pub use augment::augment;
pub use dataset::{load_training_set, parse_training_set};
pub use loss::{bce_loss, bce_with_logits, info_nce_loss, sigmoid, total_loss, AugmentedPair, InfoNceGrad, LossGrad};
pub use metrics::{auc_rank_statistic, evaluate, metrics_report, PredictionRecord, RankingMetrics};
pub use model::{
    argmax, make_batch, train, BatchItem, BatchLoss, DisciplineModel, Gradients, Prediction, TrainConfig, TrainReport,
    TrainingExample,
};
pub use vocab::{build_vocabulary, FeatureVector, Vocabulary};
