//! Classifier heads: Euclidean MLR in anchor and margin form, the matrix-map
//! heads used after covariance pooling, and SPD MLRs.

mod classifier;
mod euclidean;
mod loss;
mod spd_mlr;

pub use classifier::{
    fc_forward, head_backward, head_feature, head_forward, HeadCache, HeadGrads, HeadKind, HeadTag,
};
pub use euclidean::{bias_to_anchor, emlr_logits, emlr_logits_anchor, emlr_logits_margin, EuclideanMlrParams};
pub use loss::{softmax, softmax_xent};
pub use spd_mlr::{spd_mlr_logits_lem, spd_mlr_logits_pem, SpdMlrParams};
