use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::affordance::{scene_features, KernelConfig, POSE_FEATURE_DIM};
use crate::dataset::{validate_reference, Rejection};
use crate::domain::{Dataset, RefType, Tier};
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};

/// Stable category -> row mapping (sorted category names).
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryIndex {
    names: Vec<String>,
    ids: HashMap<String, usize>,
}

impl CategoryIndex {
    pub fn new(mut names: Vec<String>) -> Self {
        names.sort();
        names.dedup();
        let ids = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Self { names, ids }
    }

    pub fn from_dataset(dataset: &Dataset) -> Self {
        Self::new(dataset.categories())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Frozen vectors for every category, looked up by category name.
    pub fn frozen_vectors(&self, store: &EmbeddingStore) -> Result<Vec<Vec<f64>>> {
        self.names.iter().map(|n| store.lookup(n).map(<[f64]>::to_vec)).collect()
    }
}

/// One reference, ready for the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub ref_id: String,
    pub room_id: String,
    /// `N x 6` row-major pose features.
    pub pose_features: Vec<f64>,
    pub utterance: Arc<[f64]>,
    pub category_ids: Vec<usize>,
    pub target: usize,
    pub tier: Tier,
    pub ref_type: RefType,
}

impl Sample {
    pub fn num_candidates(&self) -> usize {
        self.category_ids.len()
    }

    pub fn feature_row(&self, n: usize) -> &[f64] {
        &self.pose_features[n * POSE_FEATURE_DIM..(n + 1) * POSE_FEATURE_DIM]
    }

    /// Reorders candidates so that new candidate `i` is old candidate `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Sample {
        assert_eq!(perm.len(), self.num_candidates());
        let mut out = self.clone();
        out.pose_features = perm.iter().flat_map(|&p| self.feature_row(p).to_vec()).collect();
        out.category_ids = perm.iter().map(|&p| self.category_ids[p]).collect();
        out.target = perm.iter().position(|&p| p == self.target).expect("permutation");
        out
    }

    pub fn validate(&self, num_categories: usize) -> Result<()> {
        let n = self.num_candidates();
        if n < 2 || self.target >= n || self.pose_features.len() != n * POSE_FEATURE_DIM {
            return Err(Error::invalid(&self.ref_id, "malformed sample"));
        }
        if let Some(&c) = self.category_ids.iter().find(|&&c| c >= num_categories) {
            return Err(Error::invalid(&self.ref_id, format!("category id {c} out of range")));
        }
        Ok(())
    }
}

/// Precomputed per-reference pose features, keyed by ref_id.
pub type FeatureCache = BTreeMap<String, Vec<[f64; POSE_FEATURE_DIM]>>;

/// Builds samples for every accepted reference (dataset order) and counts
/// rejections per reason. Features come from `cache` when present.
pub fn build_samples(
    dataset: &Dataset,
    embed: &EmbeddingStore,
    kernel: &KernelConfig,
    categories: &CategoryIndex,
    cache: Option<&FeatureCache>,
) -> Result<(Vec<Sample>, BTreeMap<Rejection, usize>)> {
    let mut samples = Vec::new();
    let mut rejected = BTreeMap::new();
    let mut utterances: HashMap<&str, Arc<[f64]>> = HashMap::new();
    for event in &dataset.events {
        if let Err(r) = validate_reference(event, dataset, embed, kernel) {
            *rejected.entry(r).or_insert(0) += 1;
            continue;
        }
        let scene = &dataset.scenes[&event.room_id];
        let features: Vec<f64> = match cache.and_then(|c| c.get(&event.ref_id)) {
            Some(rows) => {
                if rows.len() != scene.objects.len() {
                    return Err(Error::invalid(&event.ref_id, "cached feature rows do not match scene"));
                }
                rows.iter().flatten().copied().collect()
            }
            None => {
                let track = &dataset.tracks[&event.ref_id];
                scene_features(event, track, scene, kernel)?
                    .into_iter()
                    .flat_map(|f| f.to_array())
                    .collect()
            }
        };
        let category_ids = scene
            .objects
            .iter()
            .map(|o| {
                categories
                    .id(&o.category)
                    .ok_or_else(|| Error::invalid(&o.object_id, format!("category {:?} not indexed", o.category)))
            })
            .collect::<Result<Vec<_>>>()?;
        let utterance = utterances
            .entry(event.utterance_key.as_str())
            .or_insert_with(|| Arc::from(embed.lookup(&event.utterance_key).expect("validated")))
            .clone();
        samples.push(Sample {
            ref_id: event.ref_id.clone(),
            room_id: event.room_id.clone(),
            pose_features: features,
            utterance,
            category_ids,
            target: scene.object_index(&event.target_id).expect("validated"),
            tier: event.tier,
            ref_type: event.ref_type,
        });
    }
    Ok((samples, rejected))
}
