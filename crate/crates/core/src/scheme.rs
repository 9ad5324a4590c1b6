//! Universal clustering hierarchies.
//!
//! Instead of clustering each object on its own graph, one shared partition
//! per recurrence is computed from the mean affinity over a training set.
//! Every object is then pooled with the same partitions, at training and at
//! test time, which also freezes the cluster assignments for end-to-end
//! gradient training.

use std::borrow::Borrow;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::affinity::{average_affinities, build_affinity_view, FeatureMatrix};
use crate::cluster_pool::{
    forward_schedule, pool_level, Level, PoolMode, PoolSchedule, PoolStructure, RecurrenceTrace, StructureKind,
};
use crate::domset::{peel_partition, DomSetConfig, Partition};
use crate::error::{Error, Result};

/// A recorded clustering program shared by all objects with `n` views.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HierarchyJson", into = "HierarchyJson")]
pub struct ClusteringHierarchy {
    structure: StructureKind,
    schedule: PoolSchedule,
}

#[derive(Serialize, Deserialize)]
struct LevelJson {
    partition: Vec<Vec<usize>>,
    mode: PoolMode,
}

#[derive(Serialize, Deserialize)]
struct HierarchyJson {
    n: usize,
    structure: StructureKind,
    levels: Vec<LevelJson>,
    final_mode: PoolMode,
}

impl TryFrom<HierarchyJson> for ClusteringHierarchy {
    type Error = Error;

    fn try_from(raw: HierarchyJson) -> Result<Self> {
        let levels = raw
            .levels
            .into_iter()
            .enumerate()
            .map(|(t, l)| {
                let partition =
                    Partition::new(l.partition).map_err(|e| Error::InvalidHierarchy(format!("level {t}: {e}")))?;
                Ok(Level {
                    partition,
                    mode: l.mode,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ClusteringHierarchy::new(raw.structure, PoolSchedule::new(raw.n, levels, raw.final_mode)?)
    }
}

impl From<ClusteringHierarchy> for HierarchyJson {
    fn from(h: ClusteringHierarchy) -> Self {
        HierarchyJson {
            n: h.schedule.n_views(),
            structure: h.structure,
            levels: h
                .schedule
                .levels()
                .iter()
                .map(|l| LevelJson {
                    partition: l.partition.clusters().to_vec(),
                    mode: l.mode,
                })
                .collect(),
            final_mode: h.schedule.final_mode(),
        }
    }
}

impl ClusteringHierarchy {
    /// Validates that the schedule is one the structure could have produced:
    /// matching pool modes, strictly shrinking node counts, and a stable or
    /// single-node last level.
    pub fn new(structure: StructureKind, schedule: PoolSchedule) -> Result<Self> {
        let levels = schedule.levels();
        if schedule.final_mode() != structure.final_mode() {
            return Err(Error::InvalidHierarchy(format!(
                "{structure} ends with a {} pool, found {}",
                structure.final_mode(),
                schedule.final_mode()
            )));
        }
        if !structure.uses_clustering() {
            if !levels.is_empty() {
                return Err(Error::InvalidHierarchy(format!("{structure} has no recurrences")));
            }
            return Ok(ClusteringHierarchy { structure, schedule });
        }
        if levels.is_empty() && schedule.n_views() > 1 {
            return Err(Error::InvalidHierarchy(
                "a clustering hierarchy over several views needs at least one level".into(),
            ));
        }
        if let Some(cap) = structure.phase_cap() {
            if levels.len() > cap {
                return Err(Error::InvalidHierarchy(format!(
                    "{structure} runs at most {cap} clustering phase, found {}",
                    levels.len()
                )));
            }
        }
        for (t, level) in levels.iter().enumerate() {
            let expected = structure.level_mode(t).expect("clustering structure");
            if level.mode != expected {
                return Err(Error::InvalidHierarchy(format!(
                    "level {t} of {structure} must use {expected} pooling, found {}",
                    level.mode
                )));
            }
            let is_last = t + 1 == levels.len();
            if level.partition.n_nodes() == 1 && !is_last {
                return Err(Error::InvalidHierarchy(format!("level {t} already has a single node")));
            }
            if level.partition.is_all_singletons() && !is_last {
                return Err(Error::InvalidHierarchy(format!(
                    "level {t} merges nothing but is followed by further levels"
                )));
            }
        }
        Ok(ClusteringHierarchy { structure, schedule })
    }

    pub fn structure(&self) -> StructureKind {
        self.structure
    }

    pub fn views_per_object(&self) -> usize {
        self.schedule.n_views()
    }

    pub fn levels(&self) -> &[Level] {
        self.schedule.levels()
    }

    pub fn final_mode(&self) -> PoolMode {
        self.schedule.final_mode()
    }

    pub fn schedule(&self) -> &PoolSchedule {
        &self.schedule
    }

    pub fn node_counts(&self) -> Vec<usize> {
        self.schedule.node_counts()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl AsRef<PoolSchedule> for ClusteringHierarchy {
    fn as_ref(&self) -> &PoolSchedule {
        &self.schedule
    }
}

/// Builds the shared hierarchy for a set of objects with a common view
/// ordering.
///
/// At every recurrence the affinity of each object's current (pooled) nodes
/// is computed, the affinities are averaged, and the mean graph is peeled
/// into the shared partition. Termination follows the per-object rule.
pub fn build_universal_hierarchy<X: Borrow<FeatureMatrix>>(
    dataset: &[X],
    structure: &PoolStructure,
    cfg: &DomSetConfig,
) -> Result<ClusteringHierarchy> {
    let first = dataset
        .first()
        .ok_or_else(|| Error::InvalidInput("cannot build a hierarchy from an empty dataset".into()))?;
    let n = first.borrow().n_views();
    let objects: Vec<&FeatureMatrix> = dataset.iter().map(Borrow::borrow).collect();
    if let Some((i, x)) = objects.iter().enumerate().find(|(_, x)| x.n_views() != n) {
        return Err(Error::shape(
            format!("{n} views per object"),
            format!("{} views for object {i}", x.n_views()),
        ));
    }

    let mut current: Vec<Array2<f64>> = objects.iter().map(|x| x.view().to_owned()).collect();
    let mut levels = Vec::new();
    for t in 0..structure.phase_limit() {
        let nodes = current[0].nrows();
        if nodes == 1 {
            break;
        }
        let graphs: Vec<_> = current.iter().map(|x| build_affinity_view(x.view())).collect();
        let partition = peel_partition(&average_affinities(&graphs)?, cfg)?;
        let mode = structure.kind.level_mode(t).expect("clustering structure");
        current = current
            .iter()
            .map(|x| Ok(pool_level(x.view(), &partition, mode)?.0))
            .collect::<Result<_>>()?;
        let stable = partition.is_all_singletons();
        levels.push(Level { partition, mode });
        if stable {
            break;
        }
    }
    ClusteringHierarchy::new(
        structure.kind,
        PoolSchedule::new(n, levels, structure.kind.final_mode())?,
    )
}

/// Pools one object with a recorded hierarchy; no per-object clustering.
pub fn apply_hierarchy(x: &FeatureMatrix, h: &ClusteringHierarchy) -> Result<(Array1<f64>, RecurrenceTrace)> {
    forward_schedule(x.view(), &h.schedule)
}

pub fn save_hierarchy(h: &ClusteringHierarchy, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, h.to_json()? + "\n")?;
    Ok(())
}

pub fn load_hierarchy(path: impl AsRef<Path>) -> Result<ClusteringHierarchy> {
    ClusteringHierarchy::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster_pool::{forward, Clustering};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_object(rng: &mut impl Rng, n: usize, d: usize) -> FeatureMatrix {
        FeatureMatrix::new(Array2::from_shape_fn((n, d), |_| rng.random::<f64>())).unwrap()
    }

    // Views {0,1} live on channels 0..2 and views {2,3} on channels 2..4.
    fn block_object(rng: &mut impl Rng) -> FeatureMatrix {
        FeatureMatrix::new(Array2::from_shape_fn((4, 4), |(v, c)| {
            if (v < 2) == (c < 2) {
                0.5 + rng.random::<f64>()
            } else {
                0.0
            }
        }))
        .unwrap()
    }

    fn cfg() -> DomSetConfig {
        DomSetConfig::default()
    }

    #[test]
    fn single_object_hierarchy_matches_its_own_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in StructureKind::ALL {
            let x = random_object(&mut rng, 9, 6);
            let structure = PoolStructure::from(kind);
            let h = build_universal_hierarchy(std::slice::from_ref(&x), &structure, &cfg()).unwrap();
            let (y, trace) = forward(&x, &structure, Clustering::PerObject(&cfg())).unwrap();
            assert_eq!(&trace.schedule(), h.schedule());
            let (replayed, _) = apply_hierarchy(&x, &h).unwrap();
            assert_eq!(replayed, y);
            let (fixed, _) = forward(&x, &structure, Clustering::Fixed(&h)).unwrap();
            assert_eq!(fixed, y);
        }
    }

    #[test]
    fn duplicated_object_gives_the_same_hierarchy() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_object(&mut rng, 8, 5);
        let s = PoolStructure::from(StructureKind::DsAltFMax);
        let one = build_universal_hierarchy(std::slice::from_ref(&x), &s, &cfg()).unwrap();
        let two = build_universal_hierarchy(&[x.clone(), x], &s, &cfg()).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn shared_blocks_give_the_first_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<_> = (0..6).map(|_| block_object(&mut rng)).collect();
        let h = build_universal_hierarchy(&data, &StructureKind::DsAvgFMax.into(), &cfg()).unwrap();
        assert_eq!(
            h.levels()[0].partition.as_sets(),
            [vec![0, 1], vec![2, 3]]
                .into_iter()
                .map(|c| c.into_iter().collect())
                .collect()
        );
    }

    #[test]
    fn single_phase_structures_cluster_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<_> = (0..4).map(|_| random_object(&mut rng, 10, 3)).collect();
        for kind in [StructureKind::DsAvgFMax, StructureKind::DsMaxFAvg] {
            let h = build_universal_hierarchy(&data, &kind.into(), &cfg()).unwrap();
            assert_eq!(h.levels().len(), 1, "{kind}");
        }
        let h = build_universal_hierarchy(&data, &StructureKind::DsAltFMax.into(), &cfg()).unwrap();
        assert!(h.levels().len() > 1);
    }

    #[test]
    fn singleton_hierarchy_is_plain_max() {
        let levels = vec![Level {
            partition: Partition::singletons(3),
            mode: PoolMode::Max,
        }];
        let h = ClusteringHierarchy::new(
            StructureKind::DsAltFMax,
            PoolSchedule::new(3, levels, PoolMode::Max).unwrap(),
        )
        .unwrap();
        let x = FeatureMatrix::from_rows(&[vec![0.1, 0.9], vec![0.7, 0.2], vec![0.3, 0.3]]).unwrap();
        let (y, _) = apply_hierarchy(&x, &h).unwrap();
        assert_eq!(y.to_vec(), vec![0.7, 0.9]);
    }

    #[test]
    fn apply_rejects_wrong_view_count() {
        let h = ClusteringHierarchy::new(StructureKind::FMax, PoolSchedule::flat(3, PoolMode::Max)).unwrap();
        let x = FeatureMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(apply_hierarchy(&x, &h).is_err());
    }

    #[test]
    fn mismatched_objects_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = vec![random_object(&mut rng, 4, 3), random_object(&mut rng, 5, 3)];
        assert!(build_universal_hierarchy(&data, &StructureKind::DsAltFMax.into(), &cfg()).is_err());
        assert!(build_universal_hierarchy(&[] as &[FeatureMatrix], &StructureKind::DsAltFMax.into(), &cfg()).is_err());
    }

    #[test]
    fn json_schema_round_trip() {
        let text = r#"{"n": 5, "structure": "ds-alt-f-max",
            "levels": [{"partition": [[0,1,4],[2,3]], "mode": "max"},
                       {"partition": [[0],[1]], "mode": "avg"}],
            "final_mode": "max"}"#;
        let h = ClusteringHierarchy::from_json(text).unwrap();
        assert_eq!(h.node_counts(), vec![5, 2, 2]);
        assert_eq!(ClusteringHierarchy::from_json(&h.to_json().unwrap()).unwrap(), h);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.json");
        save_hierarchy(&h, &path).unwrap();
        assert_eq!(load_hierarchy(&path).unwrap(), h);
    }

    #[test]
    fn invalid_hierarchies_are_rejected() {
        let cases = [
            // overlapping clusters
            r#"{"n": 3, "structure": "ds-avg-f-max", "levels": [{"partition": [[0,1],[1,2]], "mode": "avg"}], "final_mode": "max"}"#,
            // chained node counts do not match
            r#"{"n": 4, "structure": "ds-alt-f-max", "levels": [{"partition": [[0,1],[2,3]], "mode": "max"}, {"partition": [[0,1,2]], "mode": "avg"}], "final_mode": "max"}"#,
            // wrong alternation phase
            r#"{"n": 3, "structure": "ds-alt-f-max", "levels": [{"partition": [[0,1],[2]], "mode": "avg"}], "final_mode": "max"}"#,
            // wrong final pool
            r#"{"n": 3, "structure": "ds-max-f-avg", "levels": [{"partition": [[0,1],[2]], "mode": "max"}], "final_mode": "max"}"#,
            // stable level followed by more levels
            r#"{"n": 2, "structure": "ds-alt-f-max", "levels": [{"partition": [[0],[1]], "mode": "max"}, {"partition": [[0,1]], "mode": "avg"}], "final_mode": "max"}"#,
            // second phase for a single-phase structure
            r#"{"n": 4, "structure": "ds-avg-f-max", "levels": [{"partition": [[0,1],[2],[3]], "mode": "avg"}, {"partition": [[0,1],[2]], "mode": "avg"}], "final_mode": "max"}"#,
            // baseline with recurrences
            r#"{"n": 2, "structure": "f-max", "levels": [{"partition": [[0,1]], "mode": "max"}], "final_mode": "max"}"#,
            // clustering structure without levels
            r#"{"n": 2, "structure": "ds-avg-f-max", "levels": [], "final_mode": "max"}"#,
            "not json",
        ];
        for text in cases {
            assert!(ClusteringHierarchy::from_json(text).is_err(), "{text}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn built_hierarchies_are_consistent_and_order_free(seed in any::<u64>(), objects in 1usize..6, n in 2usize..10, k in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<_> = (0..objects).map(|_| random_object(&mut rng, n, 4)).collect();
            let s = PoolStructure::from(StructureKind::ALL[k]);
            let h = build_universal_hierarchy(&data, &s, &cfg()).unwrap();
            let counts = h.node_counts();
            for w in counts.windows(2).take(counts.len().saturating_sub(2)) {
                prop_assert!(w[1] < w[0]);
            }
            let reversed: Vec<_> = data.iter().rev().cloned().collect();
            let h2 = build_universal_hierarchy(&reversed, &s, &cfg()).unwrap();
            prop_assert_eq!(h.node_counts(), h2.node_counts());
            for (a, b) in h.levels().iter().zip(h2.levels()) {
                prop_assert_eq!(a.partition.as_sets(), b.partition.as_sets());
            }
            for x in &data {
                let (y1, _) = apply_hierarchy(x, &h).unwrap();
                let (y2, _) = apply_hierarchy(x, &h).unwrap();
                prop_assert_eq!(&y1, &y2);
                for c in 0..4 {
                    let col = x.view().column(c).to_owned();
                    prop_assert!(y1[c] >= col.fold(f64::INFINITY, |a, b| a.min(*b)) - 1e-12);
                    prop_assert!(y1[c] <= col.fold(f64::NEG_INFINITY, |a, b| a.max(*b)) + 1e-12);
                }
            }
        }
    }
}
