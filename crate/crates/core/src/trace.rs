//! Per-frame prototype-similarity traces and their line-oriented file format.
//!
//! A trace file is UTF-8 text. The first line is a header object:
//!
//! ```text
//! {"T_V":2,"catalog":[{"class":"REAL","id":0},{"class":"FAKE","id":1}],"ground_truth":"FAKE","predicted":"FAKE","version":"1","video_id":"v0"}
//! ```
//!
//! followed by exactly `T_V` frame objects, one per line:
//!
//! ```text
//! {"frame_index":0,"similarities":[0.20000000000000001,0.94999999999999996]}
//! ```
//!
//! Keys are sorted and floats carry 17 significant digits, so writing a parsed
//! canonical file reproduces it byte for byte.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::canon;
use crate::label::Label;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrototypeMeta {
    pub id: usize,
    pub class: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub frame_index: usize,
    pub similarities: Vec<f64>,
}

/// Which stored label `class() == ...` atoms read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassSource {
    #[default]
    Predicted,
    GroundTruth,
}

/// A video viewed as a data stream: one similarity vector per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub video_id: String,
    pub frames: Vec<FrameRecord>,
    pub ground_truth: Label,
    pub predicted: Label,
    pub catalog: Vec<PrototypeMeta>,
}

/// A violated trace invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyTrace,
    LengthMismatch { declared: usize, actual: usize },
    FrameIndexOrder { expected: usize, found: usize },
    ArityMismatch { frame: usize, expected: usize, found: usize },
    OutOfRange { frame: usize, prototype: usize, value: f64 },
    CatalogIds { position: usize, found: usize },
    UnsupportedVersion(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyTrace => write!(f, "empty trace: T_V must be at least 1"),
            Violation::LengthMismatch { declared, actual } => {
                write!(f, "trace length mismatch: header declares T_V={declared}, found {actual} frames")
            }
            Violation::FrameIndexOrder { expected, found } => {
                write!(f, "frame index out of order: expected {expected}, found {found}")
            }
            Violation::ArityMismatch { frame, expected, found } => write!(
                f,
                "similarity arity mismatch: frame {frame} has {found} scores, catalog has {expected} prototypes"
            ),
            Violation::OutOfRange { frame, prototype, value } => write!(
                f,
                "similarity out of range: frame {frame}, prototype {prototype} has {value} (must lie in (0, 1])"
            ),
            Violation::CatalogIds { position, found } => write!(
                f,
                "catalog ids not contiguous: entry {position} has id {found}, expected {position}"
            ),
            Violation::UnsupportedVersion(v) => write!(f, "unsupported trace version `{v}` (expected \"1\")"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}{violation}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invariant { line: Option<usize>, violation: Violation },
}

impl TraceError {
    pub fn violation(&self) -> Option<&Violation> {
        match self {
            TraceError::Invariant { violation, .. } => Some(violation),
            _ => None,
        }
    }
}

fn invariant(violation: Violation) -> TraceError {
    TraceError::Invariant { line: None, violation }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    version: String,
    video_id: String,
    #[serde(rename = "T_V")]
    length: usize,
    ground_truth: Label,
    predicted: Label,
    catalog: Vec<PrototypeMeta>,
}

impl Trace {
    /// Builds a trace from a score table (`scores[t][j]`), numbering frames
    /// from zero and validating every invariant.
    pub fn from_scores(
        video_id: impl Into<String>,
        scores: Vec<Vec<f64>>,
        catalog: Vec<PrototypeMeta>,
        ground_truth: Label,
        predicted: Label,
    ) -> Result<Trace, TraceError> {
        let frames = scores
            .into_iter()
            .enumerate()
            .map(|(frame_index, similarities)| FrameRecord { frame_index, similarities })
            .collect();
        let trace = Trace { video_id: video_id.into(), frames, ground_truth, predicted, catalog };
        trace.validate()?;
        Ok(trace)
    }

    /// T_V.
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// m.
    pub fn num_prototypes(&self) -> usize {
        self.catalog.len()
    }

    /// S(frame, prototype).
    pub fn score(&self, frame: usize, prototype: usize) -> f64 {
        self.frames[frame].similarities[prototype]
    }

    pub fn prototype_class(&self, prototype: usize) -> Label {
        self.catalog[prototype].class
    }

    pub fn video_class(&self, source: ClassSource) -> Label {
        match source {
            ClassSource::Predicted => self.predicted,
            ClassSource::GroundTruth => self.ground_truth,
        }
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        validate_catalog(&self.catalog)?;
        if self.frames.is_empty() {
            return Err(invariant(Violation::EmptyTrace));
        }
        for (t, frame) in self.frames.iter().enumerate() {
            validate_frame(frame, t, self.catalog.len())?;
        }
        Ok(())
    }

    /// Canonical file contents, newline-terminated.
    pub fn to_canonical_string(&self) -> Result<String, TraceError> {
        self.validate()?;
        let header = Header {
            version: FORMAT_VERSION.to_string(),
            video_id: self.video_id.clone(),
            length: self.frames.len(),
            ground_truth: self.ground_truth,
            predicted: self.predicted,
            catalog: self.catalog.clone(),
        };
        let mut out = encode_line(&header)?;
        out.push('\n');
        for frame in &self.frames {
            out.push_str(&encode_line(frame)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn parse(text: &str) -> Result<Trace, TraceError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty());

        let (header_line, raw) = lines
            .next()
            .ok_or(TraceError::Parse { line: 1, message: "missing header line".into() })?;
        let header: Header = decode_line(header_line, raw)?;
        let at = |violation| TraceError::Invariant { line: Some(header_line), violation };
        if header.version != FORMAT_VERSION {
            return Err(at(Violation::UnsupportedVersion(header.version)));
        }
        validate_catalog(&header.catalog).map_err(|e| match e {
            TraceError::Invariant { violation, .. } => at(violation),
            other => other,
        })?;
        if header.length == 0 {
            return Err(at(Violation::EmptyTrace));
        }

        let m = header.catalog.len();
        let mut frames = Vec::with_capacity(header.length);
        for (line, raw) in lines {
            let frame: FrameRecord = decode_line(line, raw)?;
            validate_frame(&frame, frames.len(), m).map_err(|e| match e {
                TraceError::Invariant { violation, .. } => {
                    TraceError::Invariant { line: Some(line), violation }
                }
                other => other,
            })?;
            frames.push(frame);
        }
        if frames.len() != header.length {
            return Err(at(Violation::LengthMismatch { declared: header.length, actual: frames.len() }));
        }

        Ok(Trace {
            video_id: header.video_id,
            frames,
            ground_truth: header.ground_truth,
            predicted: header.predicted,
            catalog: header.catalog,
        })
    }
}

fn validate_catalog(catalog: &[PrototypeMeta]) -> Result<(), TraceError> {
    for (position, meta) in catalog.iter().enumerate() {
        if meta.id != position {
            return Err(invariant(Violation::CatalogIds { position, found: meta.id }));
        }
    }
    Ok(())
}

fn validate_frame(frame: &FrameRecord, expected_index: usize, m: usize) -> Result<(), TraceError> {
    if frame.frame_index != expected_index {
        return Err(invariant(Violation::FrameIndexOrder {
            expected: expected_index,
            found: frame.frame_index,
        }));
    }
    if frame.similarities.len() != m {
        return Err(invariant(Violation::ArityMismatch {
            frame: frame.frame_index,
            expected: m,
            found: frame.similarities.len(),
        }));
    }
    for (prototype, &value) in frame.similarities.iter().enumerate() {
        // NaN fails this check too.
        if !(value > 0.0 && value <= 1.0) {
            return Err(invariant(Violation::OutOfRange { frame: frame.frame_index, prototype, value }));
        }
    }
    Ok(())
}

fn encode_line<T: Serialize>(value: &T) -> Result<String, TraceError> {
    canon::to_line(value).map_err(|e| TraceError::Parse { line: 0, message: e.to_string() })
}

fn decode_line<'a, T: Deserialize<'a>>(line: usize, raw: &'a str) -> Result<T, TraceError> {
    serde_json::from_str(raw).map_err(|e| TraceError::Parse { line, message: e.to_string() })
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|source| TraceError::Io { path: path.display().to_string(), source })?;
    Trace::parse(&text)
}

/// Validates, then writes the canonical serialization. Nothing is written
/// when the trace violates an invariant.
pub fn write_trace(trace: &Trace, path: impl AsRef<Path>) -> Result<(), TraceError> {
    let path = path.as_ref();
    let text = trace.to_canonical_string()?;
    fs::write(path, text).map_err(|source| TraceError::Io { path: path.display().to_string(), source })
}
