use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::DatasetError;

/// Name of a dataset split known to a [`DatasetRegistry`], e.g.
/// `"TUMTraf-A9 Train"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DatasetRef(pub String);

impl DatasetRef {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DatasetRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for DatasetRef {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// The set of dataset names a plan may reference.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRegistry {
    names: BTreeSet<String>,
}

impl DatasetRegistry {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            names: names.into_iter().map(Into::into).collect(),
        }
    }

    pub fn register(&mut self, name: impl Into<String>) {
        self.names.insert(name.into());
    }

    pub fn contains(&self, r: &DatasetRef) -> bool {
        self.names.contains(&r.0)
    }

    fn require(&self, r: &DatasetRef) -> Result<(), DatasetError> {
        if self.contains(r) {
            Ok(())
        } else {
            Err(DatasetError::Registry(r.0.clone()))
        }
    }
}

/// Shape of a training schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanKind {
    /// No pretraining and no fine-tuning: the untrained baseline.
    Scratch,
    /// One training stage.
    SingleStage,
    /// Pretraining followed by one fine-tuning stage.
    SingleStep,
    /// Pretraining followed by two or more fine-tuning stages.
    MultiStep,
}

/// Pretraining set, ordered fine-tuning chain and evaluation set.
/// `training_metadata` is carried verbatim and never interpreted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub pretrain: Option<DatasetRef>,
    pub finetune_chain: Vec<DatasetRef>,
    pub eval: DatasetRef,
    #[serde(default)]
    pub training_metadata: BTreeMap<String, Value>,
}

impl ExperimentPlan {
    pub fn kind(&self) -> PlanKind {
        match (self.pretrain.is_some(), self.finetune_chain.len()) {
            (false, 0) => PlanKind::Scratch,
            (true, 0) | (false, 1) => PlanKind::SingleStage,
            (true, 1) | (false, 2) => PlanKind::SingleStep,
            _ => PlanKind::MultiStep,
        }
    }

    pub fn with_metadata(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.training_metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn pretrain_label(&self) -> String {
        self.pretrain
            .as_ref()
            .map_or_else(|| "-".to_string(), |r| r.0.clone())
    }

    /// Fine-tuning chain joined with arrows, `-` when empty.
    pub fn chain_label(&self) -> String {
        if self.finetune_chain.is_empty() {
            "-".to_string()
        } else {
            self.finetune_chain
                .iter()
                .map(|r| r.as_str())
                .collect::<Vec<_>>()
                .join(" → ")
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).unwrap_or_default();
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let plan: ExperimentPlan =
            serde_json::from_str(text).map_err(|e| DatasetError::Plan(e.to_string()))?;
        plan.check_shape()?;
        Ok(plan)
    }

    fn check_shape(&self) -> Result<(), DatasetError> {
        if self.eval.0.trim().is_empty() {
            return Err(DatasetError::Plan("evaluation set is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for r in &self.finetune_chain {
            if !seen.insert(r) {
                return Err(DatasetError::Plan(format!(
                    "'{r}' appears twice in the fine-tuning chain"
                )));
            }
        }
        Ok(())
    }
}

/// Validates references against `registry` and builds a plan.
pub fn build_experiment_plan(
    registry: &DatasetRegistry,
    pretrain: Option<DatasetRef>,
    chain: Vec<DatasetRef>,
    eval: DatasetRef,
) -> Result<ExperimentPlan, DatasetError> {
    let plan = ExperimentPlan {
        pretrain,
        finetune_chain: chain,
        eval,
        training_metadata: BTreeMap::new(),
    };
    plan.check_shape()?;
    for r in plan
        .pretrain
        .iter()
        .chain(&plan.finetune_chain)
        .chain(std::iter::once(&plan.eval))
    {
        registry.require(r)?;
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> DatasetRegistry {
        DatasetRegistry::new([
            "RoadSense3D Train",
            "TUMTraf-A9 Train",
            "TUMTraf-A9 Test",
            "DAIR-V2X-I Train",
            "DAIR-V2X-I Test",
        ])
    }

    #[test]
    fn single_step_plan() {
        let p = build_experiment_plan(
            &registry(),
            Some("RoadSense3D Train".into()),
            vec!["TUMTraf-A9 Train".into()],
            "TUMTraf-A9 Test".into(),
        )
        .unwrap();
        assert_eq!(p.kind(), PlanKind::SingleStep);
        assert_eq!(p.chain_label(), "TUMTraf-A9 Train");
    }

    #[test]
    fn multi_step_plan() {
        let p = build_experiment_plan(
            &registry(),
            Some("RoadSense3D Train".into()),
            vec!["DAIR-V2X-I Train".into(), "TUMTraf-A9 Train".into()],
            "TUMTraf-A9 Test".into(),
        )
        .unwrap();
        assert_eq!(p.kind(), PlanKind::MultiStep);
        assert_eq!(p.chain_label(), "DAIR-V2X-I Train → TUMTraf-A9 Train");
    }

    #[test]
    fn scratch_plan() {
        let p = build_experiment_plan(&registry(), None, vec![], "TUMTraf-A9 Test".into()).unwrap();
        assert_eq!(p.kind(), PlanKind::Scratch);
        assert_eq!(
            (p.pretrain_label(), p.chain_label()),
            ("-".into(), "-".into())
        );
    }

    #[test]
    fn duplicate_chain_entry() {
        let e = build_experiment_plan(
            &registry(),
            None,
            vec!["TUMTraf-A9 Train".into(), "TUMTraf-A9 Train".into()],
            "TUMTraf-A9 Test".into(),
        );
        assert!(matches!(e, Err(DatasetError::Plan(_))));
    }

    #[test]
    fn unknown_dataset() {
        let e = build_experiment_plan(
            &registry(),
            Some("KITTI Train".into()),
            vec![],
            "TUMTraf-A9 Test".into(),
        );
        assert!(matches!(e, Err(DatasetError::Registry(name)) if name == "KITTI Train"));
    }

    #[test]
    fn json_round_trip_keeps_metadata() {
        let p = build_experiment_plan(
            &registry(),
            Some("RoadSense3D Train".into()),
            vec!["TUMTraf-A9 Train".into()],
            "TUMTraf-A9 Test".into(),
        )
        .unwrap()
        .with_metadata("iterations", 250_000)
        .with_metadata("learning_rate", 0.0025)
        .with_metadata("backbone", "DLA34");
        let back = ExperimentPlan::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_json(), p.to_json());
    }
}
