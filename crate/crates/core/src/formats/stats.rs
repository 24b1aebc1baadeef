use std::collections::{BTreeMap, BTreeSet};
use std::ops::Add;

use serde::{Deserialize, Serialize};

use super::DatasetManifest;

/// Counts in the spirit of a dataset comparison table.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub frames: usize,
    pub boxes: usize,
    pub per_class: BTreeMap<String, usize>,
    /// Distinct `[width, height]` pairs.
    pub resolutions: BTreeSet<[u32; 2]>,
}

impl Add for DatasetStats {
    type Output = DatasetStats;

    fn add(mut self, rhs: DatasetStats) -> DatasetStats {
        self.frames += rhs.frames;
        self.boxes += rhs.boxes;
        for (class, n) in rhs.per_class {
            *self.per_class.entry(class).or_default() += n;
        }
        self.resolutions.extend(rhs.resolutions);
        self
    }
}

impl DatasetStats {
    /// `Dataset | Resolution | Images | 3D Boxes` row.
    pub fn table_row(&self, name: &str) -> String {
        let res = self
            .resolutions
            .iter()
            .map(|[w, h]| format!("{w}x{h}"))
            .collect::<Vec<_>>()
            .join(", ");
        format!(
            "| {name} | {} | {} | {} |",
            if res.is_empty() { "-".to_string() } else { res },
            format_count(self.frames),
            format_count(self.boxes)
        )
    }

    pub fn table(&self, name: &str) -> String {
        format!(
            "| Dataset | Resolution | Images | 3D Boxes |\n|---|---|---|---|\n{}\n",
            self.table_row(name)
        )
    }
}

/// Compact count: `950`, `1k`, `27.7k`, `1.4M`.
pub fn format_count(n: usize) -> String {
    let scaled = |div: f64, suffix: &str| {
        let v = (n as f64 / div * 10.0).round() / 10.0;
        let s = format!("{v:.1}");
        format!("{}{suffix}", s.trim_end_matches('0').trim_end_matches('.'))
    };
    match n {
        0..=999 => n.to_string(),
        1_000..=999_949 => scaled(1e3, "k"),
        _ => scaled(1e6, "M"),
    }
}

pub fn dataset_stats(m: &DatasetManifest) -> DatasetStats {
    let mut s = DatasetStats {
        frames: m.frames.len(),
        ..Default::default()
    };
    for f in &m.frames {
        s.boxes += f.annotations.len();
        s.resolutions.insert(f.image_size);
        for a in &f.annotations {
            *s.per_class.entry(a.class_name.clone()).or_default() += 1;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{AnnotationRecord, FrameRecord};
    use crate::geometry::Box3D;

    fn manifest_with(counts: &[usize], size: [u32; 2]) -> DatasetManifest {
        let mut m = DatasetManifest::new("m", vec!["Car".into()]);
        for (i, &n) in counts.iter().enumerate() {
            let mut f = FrameRecord::new(format!("{i}"), size);
            let b = Box3D::cube([0.0, 0.0, 10.0], 1.0).unwrap();
            f.annotations = (0..n)
                .map(|_| AnnotationRecord::new("Car", b, ""))
                .collect();
            m.frames.push(f);
        }
        m
    }

    #[test]
    fn empty_manifest_is_zero() {
        assert_eq!(
            dataset_stats(&DatasetManifest::new("e", vec![])),
            DatasetStats::default()
        );
    }

    #[test]
    fn three_frames() {
        let s = dataset_stats(&manifest_with(&[2, 0, 5], [1920, 1080]));
        assert_eq!((s.frames, s.boxes), (3, 7));
        assert_eq!(s.per_class["Car"], 7);
        assert_eq!(s.resolutions.len(), 1);
    }

    #[test]
    fn highway_shaped_fixture() {
        let s = dataset_stats(&manifest_with(&[15; 1000], [1920, 1200]));
        assert_eq!((s.frames, s.boxes), (1000, 15000));
        assert_eq!(
            s.table_row("TUMTraf-A9"),
            "| TUMTraf-A9 | 1920x1200 | 1k | 15k |"
        );
    }

    #[test]
    fn stats_add_over_disjoint_frames() {
        let a = manifest_with(&[1, 2], [1920, 1080]);
        let mut b = manifest_with(&[3], [1920, 1200]);
        b.frames[0].frame_id = "x".into();
        let mut u = a.clone();
        u.frames.extend(b.frames.clone());
        assert_eq!(dataset_stats(&u), dataset_stats(&a) + dataset_stats(&b));
    }

    #[test]
    fn count_formatting() {
        assert_eq!(format_count(950), "950");
        assert_eq!(format_count(1000), "1k");
        assert_eq!(format_count(27_700), "27.7k");
        assert_eq!(format_count(1_400_000), "1.4M");
        assert_eq!(format_count(999_999), "1M");
    }
}
