use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AnnotationRecord, FormatError};

/// One image and its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_id: String,
    pub image_path: String,
    /// `[width, height]` in pixels.
    pub image_size: [u32; 2],
    pub calibration_ref: String,
    #[serde(default)]
    pub annotations: Vec<AnnotationRecord>,
    /// Free-form tags such as weather or time of day.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tags: BTreeMap<String, String>,
}

impl FrameRecord {
    pub fn new(frame_id: impl Into<String>, image_size: [u32; 2]) -> Self {
        let frame_id = frame_id.into();
        Self {
            image_path: format!("images/{frame_id}.png"),
            calibration_ref: String::new(),
            frame_id,
            image_size,
            annotations: Vec::new(),
            tags: BTreeMap::new(),
        }
    }
}

/// A dataset: frames plus the class taxonomy they are labeled with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub class_taxonomy: Vec<String>,
    pub frames: Vec<FrameRecord>,
}

impl DatasetManifest {
    pub fn new(name: impl Into<String>, class_taxonomy: Vec<String>) -> Self {
        Self {
            name: name.into(),
            class_taxonomy,
            frames: Vec::new(),
        }
    }

    pub fn frame(&self, frame_id: &str) -> Option<&FrameRecord> {
        self.frames.iter().find(|f| f.frame_id == frame_id)
    }

    pub fn frame_ids(&self) -> BTreeSet<&str> {
        self.frames.iter().map(|f| f.frame_id.as_str()).collect()
    }

    /// Checks frame-id uniqueness, taxonomy membership and record invariants,
    /// and fills annotation frame ids from their frame.
    pub fn validate(&mut self) -> Result<(), FormatError> {
        let taxonomy: BTreeSet<&str> = self.class_taxonomy.iter().map(String::as_str).collect();
        let mut seen = BTreeSet::new();
        for frame in &mut self.frames {
            if !seen.insert(frame.frame_id.clone()) {
                return Err(FormatError::Schema(format!(
                    "duplicate frame_id '{}'",
                    frame.frame_id
                )));
            }
            for a in &mut frame.annotations {
                if a.frame_id.is_empty() {
                    a.frame_id = frame.frame_id.clone();
                } else if a.frame_id != frame.frame_id {
                    return Err(FormatError::Schema(format!(
                        "annotation frame_id '{}' inside frame '{}'",
                        a.frame_id, frame.frame_id
                    )));
                }
                if !taxonomy.contains(a.class_name.as_str()) {
                    return Err(FormatError::Schema(format!(
                        "class '{}' in frame '{}' is not in the taxonomy",
                        a.class_name, frame.frame_id
                    )));
                }
                a.validate(None)?;
            }
        }
        Ok(())
    }
}

pub fn parse_manifest(text: &str) -> Result<DatasetManifest, FormatError> {
    let mut m: DatasetManifest = serde_json::from_str(text)?;
    m.validate()?;
    Ok(m)
}

pub fn write_manifest(m: &DatasetManifest) -> Result<String, FormatError> {
    let mut m = m.clone();
    m.validate()
        .map_err(|e| FormatError::Serialization(e.to_string()))?;
    let mut s =
        serde_json::to_string_pretty(&m).map_err(|e| FormatError::Serialization(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Source-class → target-class table for merging dataset taxonomies.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassMapping(pub BTreeMap<String, String>);

impl ClassMapping {
    /// A JSON object `{"source": "target", ...}`.
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn map(&self, class: &str) -> Option<&str> {
        self.0.get(class).map(String::as_str)
    }

    /// Renames classes; unmapped annotations are dropped. Returns the number
    /// of dropped annotations.
    pub fn apply(&self, m: &mut DatasetManifest) -> usize {
        let mut dropped = 0;
        for frame in &mut m.frames {
            let before = frame.annotations.len();
            frame
                .annotations
                .retain_mut(|a| match self.map(&a.class_name) {
                    Some(target) => {
                        a.class_name = target.to_string();
                        true
                    }
                    None => false,
                });
            dropped += before - frame.annotations.len();
        }
        let mut taxonomy: Vec<String> = Vec::new();
        for class in &m.class_taxonomy {
            if let Some(t) = self.map(class) {
                if !taxonomy.iter().any(|c| c == t) {
                    taxonomy.push(t.to_string());
                }
            }
        }
        m.class_taxonomy = taxonomy;
        if dropped > 0 {
            log::warn!("class mapping dropped {dropped} annotations with unmapped classes");
        }
        dropped
    }
}
