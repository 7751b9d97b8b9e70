use super::{LatentClip, ProtoError, PrototypeBank};
use crate::label::Label;

pub(super) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_dim(expected: usize, found: usize) -> Result<(), ProtoError> {
    if expected == found {
        Ok(())
    } else {
        Err(ProtoError::DimensionMismatch { expected, found })
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> Result<f64, ProtoError> {
    check_dim(a.len(), b.len())?;
    Ok(sq_dist(a, b))
}

/// `1 / (1 + ||patch - proto||^2)`, in `(0, 1]`.
pub fn patch_similarity(patch: &[f64], proto: &[f64]) -> Result<f64, ProtoError> {
    Ok(1.0 / (1.0 + squared_distance(patch, proto)?))
}

/// Max-pooled score of one prototype and the patch that attains it (first
/// in row-major order on ties).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pooled {
    pub score: f64,
    pub patch: usize,
}

pub(super) fn pool(clip: &LatentClip, proto: &[f64]) -> Pooled {
    let mut best = Pooled { score: f64::NEG_INFINITY, patch: 0 };
    for (i, z) in clip.patches().enumerate() {
        let s = 1.0 / (1.0 + sq_dist(z, proto));
        if s > best.score {
            best = Pooled { score: s, patch: i };
        }
    }
    best
}

pub(super) fn pool_all(clip: &LatentClip, bank: &PrototypeBank) -> Result<Vec<Pooled>, ProtoError> {
    check_dim(bank.c, clip.c)?;
    Ok(bank.prototypes.iter().map(|p| pool(clip, &p.vector)).collect())
}

/// The m-vector of max-pooled similarity scores of `clip`.
pub fn prototype_layer(clip: &LatentClip, bank: &PrototypeBank) -> Result<Vec<f64>, ProtoError> {
    Ok(pool_all(clip, bank)?.into_iter().map(|p| p.score).collect())
}

/// `W s`.
pub fn logits(scores: &[f64], bank: &PrototypeBank) -> Result<Vec<f64>, ProtoError> {
    check_dim(bank.m(), scores.len())?;
    Ok(bank.fc_weights.iter().map(|row| row.iter().zip(scores).map(|(w, s)| w * s).sum()).collect())
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|a| (a - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub(super) fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|a| (a - max).exp()).sum::<f64>().ln();
    logits.iter().map(|a| a - lse).collect()
}

/// Class probabilities, indexed by [`Label::index`].
pub fn predict(scores: &[f64], bank: &PrototypeBank) -> Result<Vec<f64>, ProtoError> {
    Ok(softmax(&logits(scores, bank)?))
}

/// Arg-max of the logits; ties go to the lower class index.
pub fn predict_label(scores: &[f64], bank: &PrototypeBank) -> Result<Label, ProtoError> {
    let a = logits(scores, bank)?;
    let mut best = 0;
    for (k, v) in a.iter().enumerate() {
        if *v > a[best] {
            best = k;
        }
    }
    Ok(Label::from_index(best).expect("two classes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proto::Prototype;

    fn bank(protos: Vec<Vec<f64>>) -> PrototypeBank {
        let c = protos[0].len();
        let m = protos.len();
        let prototypes = protos
            .into_iter()
            .enumerate()
            .map(|(id, vector)| Prototype { id, class: Label::ALL[id % 2], vector, grounding: None })
            .collect();
        PrototypeBank::new(c, prototypes, vec![vec![0.0; m]; 2]).unwrap()
    }

    #[test]
    fn similarity_values() {
        assert_eq!(patch_similarity(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(patch_similarity(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 0.5);
        assert!(matches!(patch_similarity(&[1.0], &[1.0, 0.0]), Err(ProtoError::DimensionMismatch { .. })));
    }

    #[test]
    fn max_pooling() {
        // squared distances 4, 1, 9 from the prototype at the origin
        let clip = LatentClip::from_patches("c", Label::Real, 1, 3, &[vec![2.0], vec![1.0], vec![3.0]]).unwrap();
        let b = bank(vec![vec![0.0]]);
        assert_eq!(prototype_layer(&clip, &b).unwrap(), vec![0.5]);
        assert_eq!(pool(&clip, &[0.0]).patch, 1);
    }

    #[test]
    fn softmax_properties() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        assert_eq!(softmax(&[700.0, 700.0]), vec![0.5, 0.5]);
        let p = softmax(&[1.0, 0.0]);
        assert!((p[0] - 0.7310585786300049).abs() < 1e-15);
        assert!((p[1] - 0.2689414213699951).abs() < 1e-15);
        let mut b = bank(vec![vec![0.0], vec![1.0]]);
        b.fc_weights = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(predict(&[1.0, 0.0], &b).unwrap(), p);
        assert_eq!(predict_label(&[0.3, 0.3], &b).unwrap(), Label::Real);
        assert_eq!(predict_label(&[0.3, 0.4], &b).unwrap(), Label::Fake);
    }

    #[test]
    fn log_softmax_is_stable() {
        let l = log_softmax(&[1000.0, 0.0]);
        assert_eq!(l[0], 0.0);
        assert_eq!(l[1], -1000.0);
    }
}
