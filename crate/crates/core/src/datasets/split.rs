use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::formats::DatasetManifest;

use super::DatasetError;

/// SplitMix64 (Steele, Lea & Flood), the generator behind every split.
///
/// `state += 0x9E3779B97F4A7C15`, then the output is mixed with
/// `z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9`,
/// `z = (z ^ (z >> 27)) * 0x94D049BB133111EB`, `z ^ (z >> 31)`.
/// Integer-only, so identical on every platform.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Integer in `[0, bound)` by multiply-shift: `(x · bound) >> 64`.
    pub fn below(&mut self, bound: u64) -> u64 {
        ((u128::from(self.next_u64()) * u128::from(bound)) >> 64) as u64
    }

    /// In-place Fisher–Yates: for `i` from `n-1` down to 1, swap `i` with
    /// `below(i + 1)`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    Train,
    Test,
}

/// A frame-level train/test partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub fraction: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub stratified: bool,
    pub assignment: BTreeMap<String, SplitRole>,
}

impl SplitSpec {
    pub fn count(&self, role: SplitRole) -> usize {
        self.assignment.values().filter(|r| **r == role).count()
    }

    pub fn frames(&self, role: SplitRole) -> impl Iterator<Item = &str> {
        self.assignment
            .iter()
            .filter(move |(_, r)| **r == role)
            .map(|(f, _)| f.as_str())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).unwrap_or_default();
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        serde_json::from_str(text).map_err(|e| DatasetError::Split(e.to_string()))
    }

    /// Manifest restricted to frames with `role`, in manifest order.
    pub fn subset(&self, m: &DatasetManifest, role: SplitRole) -> DatasetManifest {
        let mut out = m.clone();
        out.frames
            .retain(|f| self.assignment.get(&f.frame_id) == Some(&role));
        out.name = format!(
            "{} {}",
            m.name,
            match role {
                SplitRole::Train => "Train",
                SplitRole::Test => "Test",
            }
        );
        out
    }
}

fn shuffled_ids(ids: &[&str], seed: u64) -> Vec<String> {
    let mut ids: Vec<String> = ids.iter().map(|s| s.to_string()).collect();
    SplitMix64::new(seed).shuffle(&mut ids);
    ids
}

/// Shuffles frame ids (manifest order) with SplitMix64 seeded by `seed` and
/// assigns the first `round(fraction · N)` to train.
pub fn make_split(
    m: &DatasetManifest,
    train_fraction: f64,
    seed: u64,
) -> Result<SplitSpec, DatasetError> {
    check_inputs(m, train_fraction)?;
    let ids: Vec<&str> = m.frames.iter().map(|f| f.frame_id.as_str()).collect();
    let n_train = (train_fraction * ids.len() as f64).round() as usize;
    let assignment = shuffled_ids(&ids, seed)
        .into_iter()
        .enumerate()
        .map(|(i, id)| {
            (
                id,
                if i < n_train {
                    SplitRole::Train
                } else {
                    SplitRole::Test
                },
            )
        })
        .collect();
    Ok(SplitSpec {
        fraction: train_fraction,
        seed,
        stratified: false,
        assignment,
    })
}

/// Like [`make_split`] but splits each calibration group separately. Group
/// quotas use largest remainders so the total train count is still
/// `round(fraction · N)`. Group `k` (in sorted `calibration_ref` order) is
/// shuffled with seed `seed + k`.
pub fn make_stratified_split(
    m: &DatasetManifest,
    train_fraction: f64,
    seed: u64,
) -> Result<SplitSpec, DatasetError> {
    check_inputs(m, train_fraction)?;
    let mut groups: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for f in &m.frames {
        groups
            .entry(f.calibration_ref.as_str())
            .or_default()
            .push(f.frame_id.as_str());
    }
    let total = (train_fraction * m.frames.len() as f64).round() as usize;
    let exact: Vec<f64> = groups
        .values()
        .map(|g| train_fraction * g.len() as f64)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..quota.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut missing = total.saturating_sub(quota.iter().sum());
    for &g in order.iter().cycle().take(order.len() * 2) {
        if missing == 0 {
            break;
        }
        if quota[g] < groups.values().nth(g).map_or(0, Vec::len) {
            quota[g] += 1;
            missing -= 1;
        }
    }
    let mut assignment = BTreeMap::new();
    for (k, (ids, q)) in groups.values().zip(quota).enumerate() {
        for (i, id) in shuffled_ids(ids, seed.wrapping_add(k as u64))
            .into_iter()
            .enumerate()
        {
            assignment.insert(
                id,
                if i < q {
                    SplitRole::Train
                } else {
                    SplitRole::Test
                },
            );
        }
    }
    Ok(SplitSpec {
        fraction: train_fraction,
        seed,
        stratified: true,
        assignment,
    })
}

fn check_inputs(m: &DatasetManifest, f: f64) -> Result<(), DatasetError> {
    if m.frames.is_empty() {
        return Err(DatasetError::EmptyInput("manifest has no frames".into()));
    }
    if !(f > 0.0 && f < 1.0) {
        return Err(DatasetError::InvalidFraction(f));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::FrameRecord;
    use proptest::prelude::*;

    fn manifest(n: usize) -> DatasetManifest {
        let mut m = DatasetManifest::new("d", vec![]);
        m.frames = (0..n)
            .map(|i| {
                let mut f = FrameRecord::new(format!("{i:06}"), [1920, 1080]);
                f.calibration_ref = format!("cam{}", i % 3);
                f
            })
            .collect();
        m
    }

    #[test]
    fn splitmix_reference_values() {
        // first outputs for seed 0 of the published reference implementation
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn ten_frames_sixty_forty() {
        let s = make_split(&manifest(10), 0.6, 42).unwrap();
        assert_eq!(
            (s.count(SplitRole::Train), s.count(SplitRole::Test)),
            (6, 4)
        );
    }

    #[test]
    fn split_is_deterministic() {
        let a = make_split(&manifest(10), 0.6, 42).unwrap();
        let b = make_split(&manifest(10), 0.6, 42).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let c = make_split(&manifest(10), 0.6, 43).unwrap();
        assert_ne!(a.assignment, c.assignment);
    }

    #[test]
    fn thousand_frames() {
        let s = make_split(&manifest(1000), 0.6, 7).unwrap();
        assert_eq!(
            (s.count(SplitRole::Train), s.count(SplitRole::Test)),
            (600, 400)
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(
            make_split(&manifest(0), 0.6, 1),
            Err(DatasetError::EmptyInput(_))
        ));
        assert!(matches!(
            make_split(&manifest(5), 1.0, 1),
            Err(DatasetError::InvalidFraction(_))
        ));
        assert!(matches!(
            make_split(&manifest(5), 0.0, 1),
            Err(DatasetError::InvalidFraction(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let s = make_stratified_split(&manifest(20), 0.6, 3).unwrap();
        assert_eq!(SplitSpec::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn subset_keeps_role() {
        let m = manifest(10);
        let s = make_split(&m, 0.6, 42).unwrap();
        let train = s.subset(&m, SplitRole::Train);
        assert_eq!(train.frames.len(), 6);
        assert_eq!(train.name, "d Train");
    }

    proptest! {
        #[test]
        fn partition_and_count(n in 2usize..300, f in 0.01f64..0.99, seed in any::<u64>()) {
            let m = manifest(n);
            for s in [make_split(&m, f, seed).unwrap(), make_stratified_split(&m, f, seed).unwrap()] {
                prop_assert_eq!(s.assignment.len(), n);
                let train = s.count(SplitRole::Train) as f64;
                prop_assert!((train - (f * n as f64).round()).abs() <= 1.0);
            }
        }
    }
}
