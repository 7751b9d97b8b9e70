use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ProtoError;
use crate::label::Label;
use crate::trace::PrototypeMeta;

/// Training patch a prototype was projected onto.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grounding {
    pub clip: String,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prototype {
    pub id: usize,
    pub class: Label,
    pub vector: Vec<f64>,
    pub grounding: Option<Grounding>,
}

/// `m` class-assigned prototypes plus the K×m fully connected weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeBank {
    pub c: usize,
    pub prototypes: Vec<Prototype>,
    /// `fc_weights[k][j]` weighs prototype `j` in the logit of class `k`.
    pub fc_weights: Vec<Vec<f64>>,
}

impl PrototypeBank {
    /// `m_k` prototypes per class (REAL first), each drawn uniformly from
    /// `[0, 1)^c`; weights are 1 for the prototype's own class and -0.5
    /// otherwise.
    pub fn initialize<R: Rng>(c: usize, m_k: usize, rng: &mut R) -> PrototypeBank {
        let prototypes: Vec<Prototype> = Label::ALL
            .iter()
            .flat_map(|&class| std::iter::repeat_n(class, m_k))
            .enumerate()
            .map(|(id, class)| Prototype {
                id,
                class,
                vector: (0..c).map(|_| rng.gen::<f64>()).collect(),
                grounding: None,
            })
            .collect();
        let fc_weights = Label::ALL
            .iter()
            .map(|&k| prototypes.iter().map(|p| if p.class == k { 1.0 } else { -0.5 }).collect())
            .collect();
        PrototypeBank { c, prototypes, fc_weights }
    }

    pub fn new(c: usize, prototypes: Vec<Prototype>, fc_weights: Vec<Vec<f64>>) -> Result<PrototypeBank, ProtoError> {
        let bank = PrototypeBank { c, prototypes, fc_weights };
        bank.validate()?;
        Ok(bank)
    }

    pub fn validate(&self) -> Result<(), ProtoError> {
        let bad = |msg: String| Err(ProtoError::InvalidModel(msg));
        if self.c == 0 {
            return bad("C must be at least 1".into());
        }
        for (i, p) in self.prototypes.iter().enumerate() {
            if p.id != i {
                return bad(format!("prototype at position {i} has id {}", p.id));
            }
            if p.vector.len() != self.c {
                return Err(ProtoError::DimensionMismatch { expected: self.c, found: p.vector.len() });
            }
            if p.vector.iter().any(|v| !v.is_finite()) {
                return bad(format!("prototype {i} has a non-finite entry"));
            }
        }
        if self.fc_weights.len() != Label::ALL.len() {
            return bad(format!("fc_weights has {} rows, expected {}", self.fc_weights.len(), Label::ALL.len()));
        }
        for row in &self.fc_weights {
            if row.len() != self.m() {
                return bad(format!("fc_weights row has {} columns, expected {}", row.len(), self.m()));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return bad("fc_weights has a non-finite entry".into());
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.prototypes.len()
    }

    pub fn class_of(&self, j: usize) -> Label {
        self.prototypes[j].class
    }

    pub fn ids_of(&self, class: Label) -> impl Iterator<Item = usize> + '_ {
        self.prototypes.iter().filter(move |p| p.class == class).map(|p| p.id)
    }

    pub fn catalog(&self) -> Vec<PrototypeMeta> {
        self.prototypes.iter().map(|p| PrototypeMeta { id: p.id, class: p.class }).collect()
    }

    pub fn is_grounded(&self) -> bool {
        self.prototypes.iter().all(|p| p.grounding.is_some())
    }

    /// Largest cosine similarity between two distinct prototypes of the same
    /// class.
    pub fn max_intra_class_cosine(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for a in &self.prototypes {
            for b in &self.prototypes {
                if a.id != b.id && a.class == b.class {
                    let cos = super::loss::cosine(&a.vector, &b.vector);
                    best = Some(best.map_or(cos, |x| x.max(cos)));
                }
            }
        }
        best
    }
}
