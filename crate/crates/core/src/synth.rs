//! Synthetic latent clips (Gaussian blobs around per-class centers) and
//! hand-scripted traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::label::Label;
use crate::proto::{Dataset, LatentClip, ProtoError};
use crate::trace::{PrototypeMeta, Trace, TraceError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassCenters {
    #[serde(rename = "REAL")]
    pub real: Vec<Vec<f64>>,
    #[serde(rename = "FAKE")]
    pub fake: Vec<Vec<f64>>,
}

impl ClassCenters {
    pub fn of(&self, label: Label) -> &[Vec<f64>] {
        match label {
            Label::Real => &self.real,
            Label::Fake => &self.fake,
        }
    }
}

/// Generator settings, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub clips_per_class: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub class_centers: ClassCenters,
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    /// Two centers at distance 10 in an 8-dimensional latent space.
    fn default() -> Self {
        let real = vec![2.0; 8];
        let mut fake = real.clone();
        fake[0] = 12.0;
        SynthSpec {
            clips_per_class: 50,
            h: 4,
            w: 4,
            c: 8,
            class_centers: ClassCenters { real: vec![real], fake: vec![fake] },
            noise_scale: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Toml { path: String, source: toml::de::Error },
    #[error(transparent)]
    Proto(#[from] ProtoError),
}

impl SynthSpec {
    pub fn from_toml(text: &str) -> Result<SynthSpec, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<SynthSpec, SynthError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| SynthError::Io { path: shown.clone(), source })?;
        let spec = SynthSpec::from_toml(&text).map_err(|source| SynthError::Toml { path: shown, source })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::Invalid(msg));
        if self.h == 0 || self.w == 0 || self.c == 0 {
            return bad(format!("grid {}x{}x{} has an empty axis", self.h, self.w, self.c));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return bad(format!("noise_scale must be non-negative, got {}", self.noise_scale));
        }
        for label in Label::ALL {
            let centers = self.class_centers.of(label);
            if centers.is_empty() {
                return bad(format!("class {label} has no centers"));
            }
            if let Some(c) = centers.iter().find(|c| c.len() != self.c) {
                return bad(format!("a {label} center has dimension {}, expected {}", c.len(), self.c));
            }
            if centers.iter().flatten().any(|v| !v.is_finite()) {
                return bad(format!("a {label} center has a non-finite entry"));
            }
        }
        Ok(())
    }

    /// One clip from the class distribution: every patch picks a center
    /// uniformly and adds isotropic Gaussian noise.
    fn clip(&self, id: String, label: Label, rng: &mut ChaCha8Rng) -> LatentClip {
        let centers = self.class_centers.of(label);
        let mut data = Vec::with_capacity(self.h * self.w * self.c);
        for _ in 0..self.h * self.w {
            let center = &centers[rng.gen_range(0..centers.len())];
            for &x in center {
                let n: f64 = rng.sample(StandardNormal);
                data.push(x + self.noise_scale * n);
            }
        }
        LatentClip { id, label, h: self.h, w: self.w, c: self.c, data }
    }

    fn rng(&self, stream: u64, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(index as u64));
        rng.set_stream(stream);
        rng
    }
}

/// `clips_per_class` REAL clips followed by as many FAKE clips; clip `i` is
/// drawn from its own generator seeded with `seed + i`.
pub fn generate_dataset(spec: &SynthSpec) -> Result<Dataset, SynthError> {
    spec.validate()?;
    let n = spec.clips_per_class;
    let clips = Label::ALL
        .iter()
        .flat_map(|&label| (0..n).map(move |k| (label, k)))
        .enumerate()
        .map(|(i, (label, k))| {
            let id = format!("{}-{k:04}", label.as_str().to_lowercase());
            spec.clip(id, label, &mut spec.rng(0, i))
        })
        .collect();
    Ok(Dataset::new(clips)?)
}

/// A video as a sequence of per-frame clips.
#[derive(Debug, Clone, PartialEq)]
pub struct Video {
    pub id: String,
    pub label: Label,
    pub frames: Vec<LatentClip>,
}

/// `videos_per_class` videos of each class with `frames` clips apiece,
/// drawn from a generator stream separate from [`generate_dataset`].
pub fn generate_videos(spec: &SynthSpec, videos_per_class: usize, frames: usize) -> Result<Vec<Video>, SynthError> {
    spec.validate()?;
    if frames == 0 {
        return Err(SynthError::Invalid("videos need at least one frame".into()));
    }
    let mut videos = Vec::with_capacity(2 * videos_per_class);
    let mut index = 0;
    for label in Label::ALL {
        for v in 0..videos_per_class {
            let id = format!("video-{}-{v:04}", label.as_str().to_lowercase());
            let clips = (0..frames)
                .map(|f| {
                    let clip = spec.clip(format!("{id}/{f:04}"), label, &mut spec.rng(1, index));
                    index += 1;
                    clip
                })
                .collect();
            videos.push(Video { id, label, frames: clips });
        }
    }
    Ok(videos)
}

/// Builds a trace directly from a score table; prototype `j` belongs to
/// `classes[j]`.
pub fn script_trace(
    video_id: &str,
    schedule: Vec<Vec<f64>>,
    classes: &[Label],
    ground_truth: Label,
    predicted: Label,
) -> Result<Trace, TraceError> {
    let catalog = classes.iter().enumerate().map(|(id, &class)| PrototypeMeta { id, class }).collect();
    Trace::from_scores(video_id, schedule, catalog, ground_truth, predicted)
}
