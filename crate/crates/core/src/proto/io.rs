//! Line-oriented model and dataset files: one JSON header line followed by
//! one JSON line per prototype (model) or per clip (dataset), with floats in
//! canonical form.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Grounding, LatentClip, ProtoError, Prototype, PrototypeBank};
use crate::canon;
use crate::label::Label;

const VERSION: &str = "1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelHeader {
    version: String,
    #[serde(rename = "C")]
    c: usize,
    m: usize,
    fc_weights: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PrototypeLine {
    id: usize,
    class: Label,
    vector: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grounding: Option<Grounding>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetHeader {
    version: String,
    #[serde(rename = "H")]
    h: usize,
    #[serde(rename = "W")]
    w: usize,
    #[serde(rename = "C")]
    c: usize,
    clips: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClipLine {
    id: String,
    label: Label,
    patches: Vec<f64>,
}

fn encode<T: Serialize>(value: &T, out: &mut String) {
    out.push_str(&canon::to_line(value).expect("plain data serializes"));
    out.push('\n');
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty())
}

fn decode<'a, T: Deserialize<'a>>(line: usize, raw: &'a str) -> Result<T, ProtoError> {
    serde_json::from_str(raw).map_err(|e| ProtoError::Parse { line, message: e.to_string() })
}

fn check_version(line: usize, version: &str) -> Result<(), ProtoError> {
    if version == VERSION {
        Ok(())
    } else {
        Err(ProtoError::Parse { line, message: format!("unsupported version {version:?}") })
    }
}

fn read(path: &Path) -> Result<String, ProtoError> {
    fs::read_to_string(path).map_err(|source| ProtoError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, text: String) -> Result<(), ProtoError> {
    fs::write(path, text).map_err(|source| ProtoError::Io { path: path.display().to_string(), source })
}

impl PrototypeBank {
    pub fn to_canonical_string(&self) -> Result<String, ProtoError> {
        self.validate()?;
        let mut out = String::new();
        let header = ModelHeader {
            version: VERSION.into(),
            c: self.c,
            m: self.m(),
            fc_weights: self.fc_weights.clone(),
        };
        encode(&header, &mut out);
        for p in &self.prototypes {
            let line =
                PrototypeLine { id: p.id, class: p.class, vector: p.vector.clone(), grounding: p.grounding.clone() };
            encode(&line, &mut out);
        }
        Ok(out)
    }

    pub fn parse(text: &str) -> Result<PrototypeBank, ProtoError> {
        let mut it = lines(text);
        let (first, raw) = it.next().ok_or(ProtoError::Parse { line: 1, message: "missing header line".into() })?;
        let header: ModelHeader = decode(first, raw)?;
        check_version(first, &header.version)?;
        let mut prototypes = Vec::with_capacity(header.m);
        for (line, raw) in it {
            let p: PrototypeLine = decode(line, raw)?;
            prototypes.push(Prototype { id: p.id, class: p.class, vector: p.vector, grounding: p.grounding });
        }
        if prototypes.len() != header.m {
            return Err(ProtoError::InvalidModel(format!(
                "header declares {} prototypes, found {}",
                header.m,
                prototypes.len()
            )));
        }
        PrototypeBank::new(header.c, prototypes, header.fc_weights)
    }
}

impl Dataset {
    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        let header = DatasetHeader { version: VERSION.into(), h: self.h, w: self.w, c: self.c, clips: self.len() };
        encode(&header, &mut out);
        for clip in &self.clips {
            encode(&ClipLine { id: clip.id.clone(), label: clip.label, patches: clip.data.clone() }, &mut out);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Dataset, ProtoError> {
        let mut it = lines(text);
        let (first, raw) = it.next().ok_or(ProtoError::Parse { line: 1, message: "missing header line".into() })?;
        let header: DatasetHeader = decode(first, raw)?;
        check_version(first, &header.version)?;
        let mut clips = Vec::with_capacity(header.clips);
        for (line, raw) in it {
            let c: ClipLine = decode(line, raw)?;
            let clip = LatentClip::new(c.id, c.label, header.h, header.w, header.c, c.patches)
                .map_err(|e| ProtoError::Parse { line, message: e.to_string() })?;
            clips.push(clip);
        }
        if clips.len() != header.clips {
            return Err(ProtoError::Parse {
                line: first,
                message: format!("header declares {} clips, found {}", header.clips, clips.len()),
            });
        }
        Dataset::new(clips)
    }
}

pub fn read_model(path: impl AsRef<Path>) -> Result<PrototypeBank, ProtoError> {
    PrototypeBank::parse(&read(path.as_ref())?)
}

pub fn write_model(bank: &PrototypeBank, path: impl AsRef<Path>) -> Result<(), ProtoError> {
    write(path.as_ref(), bank.to_canonical_string()?)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset, ProtoError> {
    Dataset::parse(&read(path.as_ref())?)
}

pub fn write_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), ProtoError> {
    write(path.as_ref(), dataset.to_canonical_string())
}
