//! Runs a prototype bank over a sequence of per-frame clips to produce a
//! trace.

use rayon::prelude::*;

use crate::label::Label;
use crate::proto::{predict_label, prototype_layer, LatentClip, ProtoError, PrototypeBank};
use crate::trace::Trace;

/// How per-frame similarity vectors are combined before the classifier head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Mean,
    Sum,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceGenError {
    #[error("a video needs at least one frame")]
    NoFrames,
    #[error(transparent)]
    Proto(#[from] ProtoError),
    #[error(transparent)]
    Trace(#[from] crate::trace::TraceError),
}

/// Frame `t` holds `prototype_layer(clips[t], bank)`; the predicted label is
/// the classifier's verdict on the aggregated similarity vector.
pub fn generate_trace(
    video_id: &str,
    clips: &[LatentClip],
    bank: &PrototypeBank,
    ground_truth: Label,
    aggregation: Aggregation,
) -> Result<Trace, TraceGenError> {
    if clips.is_empty() {
        return Err(TraceGenError::NoFrames);
    }
    let scores = clips
        .par_iter()
        .map(|clip| prototype_layer(clip, bank))
        .collect::<Result<Vec<_>, _>>()?;
    let mut pooled = vec![0.0; bank.m()];
    for frame in &scores {
        for (acc, s) in pooled.iter_mut().zip(frame) {
            *acc += s;
        }
    }
    if aggregation == Aggregation::Mean {
        let n = scores.len() as f64;
        pooled.iter_mut().for_each(|v| *v /= n);
    }
    let predicted = predict_label(&pooled, bank)?;
    Ok(Trace::from_scores(video_id, scores, bank.catalog(), ground_truth, predicted)?)
}
