use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::forward::sq_dist;
use super::{
    gradients, loss_terms, predict_label, prototype_layer, Dataset, Grounding, LatentClip, LossTerms, ProtoError,
    PrototypeBank, TrainConfig,
};
use crate::label::Label;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Objective before this epoch's update.
    pub loss: LossTerms,
    pub projected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub bank: PrototypeBank,
    pub initial: LossTerms,
    pub last: LossTerms,
    pub accuracy: f64,
    pub history: Vec<EpochStats>,
}

/// Fraction of clips whose predicted label matches their own.
pub fn accuracy(bank: &PrototypeBank, clips: &[LatentClip]) -> Result<f64, ProtoError> {
    if clips.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for clip in clips {
        if predict_label(&prototype_layer(clip, bank)?, bank)? == clip.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / clips.len() as f64)
}

/// Replaces every prototype with the closest training patch of its own
/// class and records where it came from. Clips are scanned in dataset
/// order and patches row-major; the first minimum wins, which makes the
/// operation idempotent.
pub fn project(bank: &PrototypeBank, dataset: &Dataset) -> Result<PrototypeBank, ProtoError> {
    if bank.c != dataset.c {
        return Err(ProtoError::DimensionMismatch { expected: bank.c, found: dataset.c });
    }
    let mut out = bank.clone();
    for p in &mut out.prototypes {
        let mut best: Option<(f64, &LatentClip, usize)> = None;
        for clip in dataset.clips.iter().filter(|c| c.label == p.class) {
            for (i, z) in clip.patches().enumerate() {
                let d = sq_dist(z, &p.vector);
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, clip, i));
                }
            }
        }
        let (_, clip, i) = best.ok_or(ProtoError::EmptyClass(p.class))?;
        let (row, col) = clip.row_col(i);
        p.vector = clip.patch(i).to_vec();
        p.grounding = Some(Grounding { clip: clip.id.clone(), row, col });
    }
    Ok(out)
}

fn finite(terms: LossTerms, epoch: usize) -> Result<LossTerms, ProtoError> {
    if terms.total.is_finite() {
        Ok(terms)
    } else {
        Err(ProtoError::Diverged { epoch, loss: terms.total })
    }
}

/// Full-batch gradient descent, one update per epoch, projecting after
/// every `projection_period`-th epoch.
pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome, ProtoError> {
    cfg.validate()?;
    for class in Label::ALL {
        if dataset.count(class) == 0 {
            return Err(ProtoError::EmptyClass(class));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut bank = PrototypeBank::initialize(dataset.c, cfg.m_k, &mut rng);
    let clips = &dataset.clips;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut initial = None;

    for epoch in 0..cfg.epochs {
        let (terms, grad) = gradients(clips, &bank, cfg)?;
        let terms = finite(terms, epoch)?;
        initial.get_or_insert(terms);
        for (p, g) in bank.prototypes.iter_mut().zip(&grad.prototypes) {
            for (v, d) in p.vector.iter_mut().zip(g) {
                *v -= cfg.lr_proto * d;
            }
            p.grounding = None;
        }
        for (row, g) in bank.fc_weights.iter_mut().zip(&grad.fc) {
            for (w, d) in row.iter_mut().zip(g) {
                *w -= cfg.lr_fc * d;
            }
        }
        let projected = (epoch + 1) % cfg.projection_period == 0;
        if projected {
            bank = project(&bank, dataset)?;
        }
        debug!("epoch {epoch}: loss {:.6} (ce {:.6}){}", terms.total, terms.ce, if projected { ", projected" } else { "" });
        history.push(EpochStats { epoch, loss: terms, projected });
    }

    let last = finite(loss_terms(clips, &bank, cfg)?, cfg.epochs)?;
    let initial = initial.unwrap_or(last);
    let accuracy = accuracy(&bank, clips)?;
    info!("trained {} epochs: loss {:.6} -> {:.6}, accuracy {:.4}", cfg.epochs, initial.total, last.total, accuracy);
    Ok(TrainOutcome { bank, initial, last, accuracy, history })
}
