use std::fmt::Write as _;

use crate::camera::Rect2D;
use crate::geometry::{Box3D, GeometryError};

use super::{format_number, validate_score, AnnotationRecord, FormatError, LabelRecord, Occlusion};

const FIELDS: [&str; 18] = [
    "class",
    "truncation",
    "occlusion",
    "alpha",
    "x1",
    "y1",
    "x2",
    "y2",
    "h",
    "w",
    "l",
    "x",
    "y",
    "z",
    "yaw",
    "pitch",
    "roll",
    "score",
];

const MISSING_BOX2D: f64 = -1.0;

struct Line<'a> {
    number: usize,
    tokens: Vec<&'a str>,
}

impl Line<'_> {
    fn parse_error(
        &self,
        column: usize,
        field: &'static str,
        message: impl Into<String>,
    ) -> FormatError {
        FormatError::Parse {
            line: self.number,
            column,
            field,
            message: message.into(),
        }
    }

    /// Parses token `idx` (0-based) as a finite float named `FIELDS[field]`.
    fn float(&self, idx: usize, field: usize) -> Result<f64, FormatError> {
        let tok = self.tokens[idx];
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.parse_error(
                idx + 1,
                FIELDS[field],
                format!("'{tok}' is not a finite number"),
            )),
        }
    }
}

fn parse_line(line: Line<'_>, frame_id: &str) -> Result<LabelRecord, FormatError> {
    let n = line.tokens.len();
    // (has pitch/roll, has score)
    let (extended, scored) = match n {
        15 => (false, false),
        16 => (false, true),
        17 => (true, false),
        18 => (true, true),
        _ => {
            let column = n.min(18) + 1;
            let field = FIELDS[n.min(17)];
            return Err(line.parse_error(
                column,
                field,
                format!("expected 15 to 18 columns, found {n}"),
            ));
        }
    };
    let class_name = line.tokens[0].to_string();
    let truncation = line.float(1, 1)?;
    let occl_tok = line.tokens[2];
    let occl_code: i64 = occl_tok
        .parse()
        .map_err(|_| line.parse_error(3, "occlusion", format!("'{occl_tok}' is not an integer")))?;
    let occlusion = Occlusion::try_from(occl_code)
        .map_err(|m| FormatError::validation(Some(line.number), m))?;
    let alpha = line.float(3, 3)?;
    let rect: Vec<f64> = (4..8).map(|i| line.float(i, i)).collect::<Result<_, _>>()?;
    let box2d = if rect.iter().all(|v| *v == MISSING_BOX2D) {
        None
    } else {
        Some(Rect2D {
            x1: rect[0],
            y1: rect[1],
            x2: rect[2],
            y2: rect[3],
        })
    };
    let hwl = [line.float(8, 8)?, line.float(9, 9)?, line.float(10, 10)?];
    let center = [
        line.float(11, 11)?,
        line.float(12, 12)?,
        line.float(13, 13)?,
    ];
    let yaw = line.float(14, 14)?;
    let (pitch, roll) = if extended {
        (line.float(15, 15)?, line.float(16, 16)?)
    } else {
        (0.0, 0.0)
    };
    let score = if scored {
        Some(line.float(n - 1, 17)?)
    } else {
        None
    };

    let box3d = Box3D::from_parts(center, hwl, [yaw, pitch, roll]).map_err(|e| match e {
        GeometryError::InvalidDimension { name, value } => {
            let idx = 8 + ["h", "w", "l"].iter().position(|f| *f == name).unwrap_or(0);
            line.parse_error(
                idx + 1,
                FIELDS[idx],
                format!("dimension must be > 0, got {value}"),
            )
        }
        other => FormatError::validation(Some(line.number), other),
    })?;
    let annotation = AnnotationRecord {
        class_name,
        truncation,
        occlusion,
        alpha,
        box2d,
        box3d,
        frame_id: frame_id.to_string(),
    };
    annotation.validate(Some(line.number))?;
    validate_score(score, Some(line.number))?;
    Ok(LabelRecord { annotation, score })
}

/// Parses `kitti_ext` text; blank lines are skipped.
pub fn parse_kitti(text: &str, frame_id: &str) -> Result<Vec<LabelRecord>, FormatError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_line(
                Line {
                    number: i + 1,
                    tokens: l.split_whitespace().collect(),
                },
                frame_id,
            )
        })
        .collect()
}

/// Writes `kitti_ext` text with pitch/roll always present.
pub fn write_kitti(records: &[LabelRecord]) -> Result<String, FormatError> {
    let mut out = String::new();
    for r in records {
        let a = &r.annotation;
        if a.class_name.is_empty() || a.class_name.chars().any(char::is_whitespace) {
            return Err(FormatError::Serialization(format!(
                "class name '{}' is empty or contains whitespace",
                a.class_name
            )));
        }
        let rect = a
            .box2d
            .map_or([MISSING_BOX2D; 4], |b| [b.x1, b.y1, b.x2, b.y2]);
        let b = &a.box3d;
        let mut line = a.class_name.clone();
        let _ = write!(
            line,
            " {} {}",
            format_number(a.truncation),
            a.occlusion.code()
        );
        let mut nums = vec![a.alpha];
        nums.extend_from_slice(&rect);
        nums.extend_from_slice(&[b.dims.h, b.dims.w, b.dims.l]);
        nums.extend_from_slice(&[b.center.x, b.center.y, b.center.z]);
        nums.extend_from_slice(&[b.orientation.yaw, b.orientation.pitch, b.orientation.roll]);
        if let Some(s) = r.score {
            nums.push(s);
        }
        for v in nums {
            let _ = write!(line, " {}", format_number(v));
        }
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}
