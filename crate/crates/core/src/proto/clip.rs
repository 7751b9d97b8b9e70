use super::ProtoError;
use crate::label::Label;

/// An H×W grid of C-dimensional latent patches, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentClip {
    pub id: String,
    pub label: Label,
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub data: Vec<f64>,
}

impl LatentClip {
    pub fn new(
        id: impl Into<String>,
        label: Label,
        h: usize,
        w: usize,
        c: usize,
        data: Vec<f64>,
    ) -> Result<LatentClip, ProtoError> {
        let clip = LatentClip { id: id.into(), label, h, w, c, data };
        clip.validate()?;
        Ok(clip)
    }

    /// Builds a clip from a list of patches laid out row-major.
    pub fn from_patches(
        id: impl Into<String>,
        label: Label,
        h: usize,
        w: usize,
        patches: &[Vec<f64>],
    ) -> Result<LatentClip, ProtoError> {
        let id = id.into();
        let c = patches.first().map_or(0, Vec::len);
        if patches.len() != h * w {
            return Err(ProtoError::InvalidClip {
                id,
                reason: format!("expected {} patches, found {}", h * w, patches.len()),
            });
        }
        if let Some(p) = patches.iter().find(|p| p.len() != c) {
            return Err(ProtoError::DimensionMismatch { expected: c, found: p.len() });
        }
        LatentClip::new(id, label, h, w, c, patches.concat())
    }

    pub fn validate(&self) -> Result<(), ProtoError> {
        let bad = |reason: String| Err(ProtoError::InvalidClip { id: self.id.clone(), reason });
        if self.h == 0 || self.w == 0 || self.c == 0 {
            return bad(format!("grid {}x{}x{} has an empty axis", self.h, self.w, self.c));
        }
        if self.data.len() != self.h * self.w * self.c {
            return bad(format!("expected {} values, found {}", self.h * self.w * self.c, self.data.len()));
        }
        if let Some(i) = self.data.iter().position(|v| !v.is_finite()) {
            return bad(format!("value {i} is not finite"));
        }
        Ok(())
    }

    pub fn num_patches(&self) -> usize {
        self.h * self.w
    }

    /// Patch at flat index `i = row * w + col`.
    pub fn patch(&self, i: usize) -> &[f64] {
        &self.data[i * self.c..(i + 1) * self.c]
    }

    pub fn patches(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.c)
    }

    pub fn row_col(&self, i: usize) -> (usize, usize) {
        (i / self.w, i % self.w)
    }
}

/// Labeled clips sharing one grid shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub clips: Vec<LatentClip>,
}

impl Dataset {
    pub fn new(clips: Vec<LatentClip>) -> Result<Dataset, ProtoError> {
        let first = clips.first().ok_or_else(|| ProtoError::InvalidConfig("dataset has no clips".into()))?;
        let (h, w, c) = (first.h, first.w, first.c);
        for clip in &clips {
            clip.validate()?;
            if (clip.h, clip.w) != (h, w) {
                return Err(ProtoError::InvalidClip {
                    id: clip.id.clone(),
                    reason: format!("grid {}x{} differs from {h}x{w}", clip.h, clip.w),
                });
            }
            if clip.c != c {
                return Err(ProtoError::DimensionMismatch { expected: c, found: clip.c });
            }
        }
        Ok(Dataset { h, w, c, clips })
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.clips.iter().filter(|c| c.label == label).count()
    }
}
