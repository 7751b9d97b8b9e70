//! Prototype layer over latent patch grids: similarity scoring, the
//! classifier head, the training objective with analytic gradients,
//! projection onto training patches and a full-batch training loop.

mod bank;
mod clip;
mod forward;
mod io;
mod loss;
mod train;

pub use bank::{Grounding, Prototype, PrototypeBank};
pub use clip::{Dataset, LatentClip};
pub use forward::{
    logits, patch_similarity, predict, predict_label, prototype_layer, softmax, squared_distance, Pooled,
};
pub use io::{read_dataset, read_model, write_dataset, write_model};
pub use loss::{
    gradients, loss_ce, loss_clus, loss_div, loss_sep, loss_terms, loss_total, Gradients, LossTerms, TrainConfig,
};
pub use train::{accuracy, project, train, EpochStats, TrainOutcome};

use crate::label::Label;

#[derive(Debug, thiserror::Error)]
pub enum ProtoError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid clip {id}: {reason}")]
    InvalidClip { id: String, reason: String },
    #[error("no prototypes of class {0}")]
    NoPrototypes(Label),
    #[error("no training patches of class {0}")]
    EmptyClass(Label),
    #[error("prototype {0} is the zero vector; cosine similarity is undefined")]
    ZeroPrototype(usize),
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
