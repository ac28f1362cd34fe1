//! Class-specific residual attention (CSRA) for multi-label recognition on
//! precomputed feature tensors.
//!
//! The residual head combines the classic global average feature with a
//! per-class, temperature-softmax attention pooling of the same feature
//! tensor, reusing the classifier weights as the attention query. The crate
//! covers:
//!
//! - [`tensor`]: a deliberately small dense-array kernel with fixed
//!   accumulation order (bitwise-reproducible results);
//! - [`attention`]: the per-image, per-class residual attention math,
//!   including the max-pooling limit and the training-free `mean + lambda*max`
//!   rescoring trick;
//! - [`multihead`]: parallel attention branches over a fixed temperature
//!   schedule with logit-sum fusion;
//! - [`training`]: BCE + SGD head training with hand-derived gradients,
//!   validated against finite differences;
//! - [`metrics`]: mAP and the macro/micro precision-recall-F1 blocks;
//! - [`io`]: the binary tensor container, label tables, model files, and
//!   heatmap export.

pub mod attention;
pub mod error;
pub mod io;
pub mod label;
pub mod metrics;
pub mod multihead;
pub mod tensor;
pub mod training;

pub use attention::{
    attention_scores, class_feature, csra_feature, csra_logits, csra_logits_via_features,
    fused_weights, global_feature, max_limit_logits, raw_scores, AttentionMap,
    ClassifierWeights, FeatureTensor, ModelFamily, ScoreTensor,
};
pub use error::{Error, Result};
pub use label::Label;
pub use metrics::{evaluate, EvalSet, MetricsReport};
pub use multihead::{
    default_schedule, is_canonical_head_count, multihead_logits, normalize_rows, HeadConfig,
    MultiHeadModel,
};
pub use tensor::{matvec, reduce, softmax_t, Axis, Reduce, Temperature, Tensor};
pub use training::{
    bce_loss, forward_logits, loss_grad, sigmoid, train, train_with_options, LabeledFeatureSet,
    LossReport, Pooling, TrainConfig,
};
