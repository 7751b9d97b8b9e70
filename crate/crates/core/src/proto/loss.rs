use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forward::{log_softmax, pool_all, sq_dist, Pooled};
use super::{LatentClip, ProtoError, PrototypeBank};
use crate::label::Label;

/// Objective weights and optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lambda_c: f64,
    pub lambda_s: f64,
    pub lambda_d: f64,
    pub s_max: f64,
    pub m_k: usize,
    pub lr_proto: f64,
    pub lr_fc: f64,
    pub epochs: usize,
    pub projection_period: usize,
    pub seed: u64,
    /// Multiply the separation term by `lambda_s` as given instead of by
    /// `|lambda_s|`. With the default negative `lambda_s` this rewards
    /// closeness to wrong-class prototypes.
    pub literal_lambda_signs: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda_c: 0.2,
            lambda_s: -0.2,
            lambda_d: 0.1,
            s_max: 0.3,
            m_k: 10,
            lr_proto: 1e-3,
            lr_fc: 2e-4,
            epochs: 200,
            projection_period: 5,
            seed: 0,
            literal_lambda_signs: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ProtoError> {
        let bad = |msg: String| Err(ProtoError::InvalidConfig(msg));
        if self.projection_period == 0 {
            return bad("projection_period must be at least 1".into());
        }
        if !(self.lr_proto > 0.0 && self.lr_proto.is_finite()) {
            return bad(format!("lr_proto must be positive, got {}", self.lr_proto));
        }
        if !(self.lr_fc > 0.0 && self.lr_fc.is_finite()) {
            return bad(format!("lr_fc must be positive, got {}", self.lr_fc));
        }
        if self.m_k == 0 {
            return bad("m_k must be at least 1".into());
        }
        for (name, v) in [
            ("lambda_c", self.lambda_c),
            ("lambda_s", self.lambda_s),
            ("lambda_d", self.lambda_d),
            ("s_max", self.s_max),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        Ok(())
    }

    /// Weight applied to the separation term.
    pub fn separation_weight(&self) -> f64 {
        if self.literal_lambda_signs {
            self.lambda_s
        } else {
            self.lambda_s.abs()
        }
    }
}

/// The four objective terms and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossTerms {
    pub ce: f64,
    pub clus: f64,
    pub sep: f64,
    pub div: f64,
    pub total: f64,
}

/// Gradient of the total objective; same shapes as the bank.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub prototypes: Vec<Vec<f64>>,
    pub fc: Vec<Vec<f64>>,
}

struct Nearest {
    dist: f64,
    proto: usize,
    patch: usize,
}

/// Closest (prototype, patch) pair among prototypes of `class`; prototypes
/// scanned in id order, patches row-major, first minimum wins.
fn nearest(clip: &LatentClip, bank: &PrototypeBank, class: Label) -> Result<Nearest, ProtoError> {
    let mut best: Option<Nearest> = None;
    for j in bank.ids_of(class) {
        for (i, z) in clip.patches().enumerate() {
            let d = sq_dist(z, &bank.prototypes[j].vector);
            if best.as_ref().is_none_or(|b| d < b.dist) {
                best = Some(Nearest { dist: d, proto: j, patch: i });
            }
        }
    }
    best.ok_or(ProtoError::NoPrototypes(class))
}

struct Sample {
    pooled: Vec<Pooled>,
    log_probs: Vec<f64>,
    own: Nearest,
    other: Nearest,
}

fn sample(clip: &LatentClip, bank: &PrototypeBank) -> Result<Sample, ProtoError> {
    let pooled = pool_all(clip, bank)?;
    let scores: Vec<f64> = pooled.iter().map(|p| p.score).collect();
    let logits = super::logits(&scores, bank)?;
    Ok(Sample {
        pooled,
        log_probs: log_softmax(&logits),
        own: nearest(clip, bank, clip.label)?,
        other: nearest(clip, bank, clip.label.opposite())?,
    })
}

fn samples(batch: &[LatentClip], bank: &PrototypeBank) -> Result<Vec<Sample>, ProtoError> {
    if batch.is_empty() {
        return Err(ProtoError::InvalidConfig("empty batch".into()));
    }
    batch.par_iter().map(|clip| sample(clip, bank)).collect()
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

/// Mean negative log-probability of the true class.
pub fn loss_ce(batch: &[LatentClip], bank: &PrototypeBank) -> Result<f64, ProtoError> {
    let s = samples(batch, bank)?;
    Ok(mean(s.iter().zip(batch).map(|(s, c)| -s.log_probs[c.label.index()]), batch.len()))
}

/// Mean over samples of the smallest squared distance between any patch and
/// any prototype of the sample's class.
pub fn loss_clus(batch: &[LatentClip], bank: &PrototypeBank) -> Result<f64, ProtoError> {
    let s = samples(batch, bank)?;
    Ok(mean(s.iter().map(|s| s.own.dist), batch.len()))
}

/// Negated mean smallest squared distance to prototypes of the other class.
pub fn loss_sep(batch: &[LatentClip], bank: &PrototypeBank) -> Result<f64, ProtoError> {
    let s = samples(batch, bank)?;
    Ok(-mean(s.iter().map(|s| s.other.dist), batch.len()))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(super) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (norm(a) * norm(b))
}

fn check_nonzero(bank: &PrototypeBank) -> Result<(), ProtoError> {
    match bank.prototypes.iter().find(|p| norm(&p.vector) == 0.0) {
        Some(p) => Err(ProtoError::ZeroPrototype(p.id)),
        None => Ok(()),
    }
}

/// Sum over ordered same-class pairs `i != j` of `max(0, cos(p_i, p_j) - s_max)`.
pub fn loss_div(bank: &PrototypeBank, s_max: f64) -> Result<f64, ProtoError> {
    check_nonzero(bank)?;
    let mut total = 0.0;
    for a in &bank.prototypes {
        for b in &bank.prototypes {
            if a.id != b.id && a.class == b.class {
                total += (cosine(&a.vector, &b.vector) - s_max).max(0.0);
            }
        }
    }
    Ok(total)
}

fn combine(ce: f64, clus: f64, sep: f64, div: f64, cfg: &TrainConfig) -> LossTerms {
    let total = ce + cfg.lambda_c * clus + cfg.separation_weight() * sep + cfg.lambda_d * div;
    LossTerms { ce, clus, sep, div, total }
}

pub fn loss_terms(batch: &[LatentClip], bank: &PrototypeBank, cfg: &TrainConfig) -> Result<LossTerms, ProtoError> {
    let s = samples(batch, bank)?;
    let n = batch.len();
    let ce = mean(s.iter().zip(batch).map(|(s, c)| -s.log_probs[c.label.index()]), n);
    let clus = mean(s.iter().map(|s| s.own.dist), n);
    let sep = -mean(s.iter().map(|s| s.other.dist), n);
    Ok(combine(ce, clus, sep, loss_div(bank, cfg.s_max)?, cfg))
}

pub fn loss_total(batch: &[LatentClip], bank: &PrototypeBank, cfg: &TrainConfig) -> Result<f64, ProtoError> {
    Ok(loss_terms(batch, bank, cfg)?.total)
}

/// Loss terms and analytic gradients with respect to every prototype entry
/// and every fc weight. Max and min operators contribute a subgradient at
/// the element selected by the tie-break.
pub fn gradients(
    batch: &[LatentClip],
    bank: &PrototypeBank,
    cfg: &TrainConfig,
) -> Result<(LossTerms, Gradients), ProtoError> {
    let s = samples(batch, bank)?;
    let n = batch.len() as f64;
    let k = bank.fc_weights.len();
    let mut gp = vec![vec![0.0; bank.c]; bank.m()];
    let mut gw = vec![vec![0.0; bank.m()]; k];
    let (mut ce, mut clus, mut sep) = (0.0, 0.0, 0.0);
    let lambda_s = cfg.separation_weight();

    for (sample, clip) in s.iter().zip(batch) {
        let y = clip.label.index();
        ce -= sample.log_probs[y];
        clus += sample.own.dist;
        sep -= sample.other.dist;

        let delta: Vec<f64> = sample
            .log_probs
            .iter()
            .enumerate()
            .map(|(c, lp)| (lp.exp() - if c == y { 1.0 } else { 0.0 }) / n)
            .collect();
        for (j, pooled) in sample.pooled.iter().enumerate() {
            let mut ds = 0.0;
            for c in 0..k {
                gw[c][j] += delta[c] * pooled.score;
                ds += bank.fc_weights[c][j] * delta[c];
            }
            let z = clip.patch(pooled.patch);
            let factor = ds * 2.0 * pooled.score * pooled.score;
            for (g, (zi, pi)) in gp[j].iter_mut().zip(z.iter().zip(&bank.prototypes[j].vector)) {
                *g += factor * (zi - pi);
            }
        }

        for (near, weight) in [(&sample.own, cfg.lambda_c), (&sample.other, -lambda_s)] {
            let z = clip.patch(near.patch);
            let p = &bank.prototypes[near.proto].vector;
            for (g, (pi, zi)) in gp[near.proto].iter_mut().zip(p.iter().zip(z)) {
                *g += weight * 2.0 * (pi - zi) / n;
            }
        }
    }

    check_nonzero(bank)?;
    let mut div = 0.0;
    for a in &bank.prototypes {
        for b in &bank.prototypes {
            if a.id == b.id || a.class != b.class {
                continue;
            }
            let cos = cosine(&a.vector, &b.vector);
            div += (cos - cfg.s_max).max(0.0);
            if cos > cfg.s_max {
                for (x, y) in [(a, b), (b, a)] {
                    let (nx, ny) = (norm(&x.vector), norm(&y.vector));
                    for (g, (xi, yi)) in gp[x.id].iter_mut().zip(x.vector.iter().zip(&y.vector)) {
                        *g += cfg.lambda_d * (yi / (nx * ny) - cos * xi / (nx * nx));
                    }
                }
            }
        }
    }

    let terms = combine(ce / n, clus / n, sep / n, div, cfg);
    Ok((terms, Gradients { prototypes: gp, fc: gw }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proto::Prototype;

    fn bank(protos: Vec<(Label, Vec<f64>)>, fc: Vec<Vec<f64>>) -> PrototypeBank {
        let c = protos[0].1.len();
        let prototypes = protos
            .into_iter()
            .enumerate()
            .map(|(id, (class, vector))| Prototype { id, class, vector, grounding: None })
            .collect();
        PrototypeBank::new(c, prototypes, fc).unwrap()
    }

    fn clip(label: Label, patches: &[Vec<f64>]) -> LatentClip {
        LatentClip::from_patches("c", label, 1, patches.len(), patches).unwrap()
    }

    #[test]
    fn cross_entropy_values() {
        use Label::*;
        // equal logits: p = 0.5
        let b = bank(vec![(Real, vec![0.0]), (Fake, vec![0.0])], vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        let half = clip(Real, &[vec![0.0]]);
        assert!((loss_ce(std::slice::from_ref(&half), &b).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        // logit_real = 2 ln 3 (s0 - s1): patch 0.5 gives p = 1/2, patch 0 gives p_fake = 1/4
        let a = 2.0 * 3f64.ln();
        let b = bank(vec![(Real, vec![0.0]), (Fake, vec![1.0])], vec![vec![a, -a], vec![0.0, 0.0]]);
        let both = [clip(Fake, &[vec![0.5]]), clip(Fake, &[vec![0.0]])];
        assert!((loss_ce(&both, &b).unwrap() - 1.0397207708399179).abs() < 1e-12);
    }

    #[test]
    fn cluster_and_separation_geometry() {
        use Label::*;
        let b = bank(
            vec![(Real, vec![0.0, 0.0]), (Real, vec![3.0, 0.0]), (Fake, vec![0.0, 0.0]), (Fake, vec![3.0, 0.0])],
            vec![vec![0.0; 4]; 2],
        );
        let real = clip(Real, &[vec![1.0, 0.0], vec![2.0, 0.0]]);
        assert_eq!(loss_clus(std::slice::from_ref(&real), &b).unwrap(), 1.0);
        assert_eq!(loss_sep(std::slice::from_ref(&real), &b).unwrap(), -1.0);
        let far = clip(Real, &[vec![3.0, 3f64.sqrt()]]);
        assert!((loss_clus(&[real, far], &b).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn diversity_values() {
        use Label::*;
        let w = vec![vec![0.0; 2]; 2];
        let orthogonal = bank(vec![(Real, vec![1.0, 0.0]), (Real, vec![0.0, 1.0])], w.clone());
        assert_eq!(loss_div(&orthogonal, 0.3).unwrap(), 0.0);
        let parallel = bank(vec![(Real, vec![1.0, 1.0]), (Real, vec![2.0, 2.0])], w.clone());
        assert!((loss_div(&parallel, 0.3).unwrap() - 1.4).abs() < 1e-15);
        let zero = bank(vec![(Real, vec![0.0, 0.0]), (Real, vec![2.0, 2.0])], w);
        assert!(matches!(loss_div(&zero, 0.3), Err(ProtoError::ZeroPrototype(0))));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn total_sign_conventions() {
        let default = TrainConfig::default();
        let literal = TrainConfig { literal_lambda_signs: true, ..TrainConfig::default() };
        let c = combine(0.6931, 1.0, -1.0, 0.0, &literal);
        assert!((c.total - 1.0931).abs() < 1e-12);
        let d = combine(0.6931, 1.0, -1.0, 0.0, &default);
        assert!((d.total - 0.6931).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { projection_period: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { lr_fc: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn missing_class_prototypes() {
        let b = bank(vec![(Label::Real, vec![0.0])], vec![vec![0.0], vec![0.0]]);
        let c = clip(Label::Real, &[vec![0.0]]);
        assert!(matches!(loss_sep(&[c], &b), Err(ProtoError::NoPrototypes(Label::Fake))));
    }
}
