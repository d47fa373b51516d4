//! Top-k accuracy, stratification and the singleton oracle. Accuracies are
//! percentages.

use serde::{Deserialize, Serialize};

use super::records::ResultRecord;
use crate::domain::{RefType, Tier};

/// Hit iff `rank <= k`. Panics when `k == 0`.
pub fn topk(rank: usize, k: usize) -> bool {
    assert!(k >= 1, "k must be >= 1");
    rank <= k
}

pub fn hits(records: &[&ResultRecord], k: usize) -> usize {
    records.iter().filter(|r| topk(r.rank_of_target, k)).count()
}

pub fn percent(hits: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| 100.0 * hits as f64 / n as f64)
}

/// Top-k accuracy in percent; `None` for no records.
pub fn aggregate(records: &[&ResultRecord], k: usize) -> Option<f64> {
    percent(hits(records, k), records.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Tier,
    RefType,
    /// Pointing-like tiers (T1, T2, T5) against the rest.
    Regime,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Tier, Axis::RefType, Axis::Regime];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Tier => "tier",
            Axis::RefType => "ref_type",
            Axis::Regime => "regime",
        }
    }

    /// Every stratum of the axis, in report order.
    pub fn strata(self) -> Vec<&'static str> {
        match self {
            Axis::Tier => Tier::ALL.iter().map(|t| t.name()).collect(),
            Axis::RefType => RefType::ALL.iter().map(|t| t.name()).collect(),
            Axis::Regime => vec![POINTING, NON_POINTING],
        }
    }

    pub fn key(self, record: &ResultRecord) -> &'static str {
        match self {
            Axis::Tier => record.tier.name(),
            Axis::RefType => record.ref_type.name(),
            Axis::Regime if record.tier.is_pointing() => POINTING,
            Axis::Regime => NON_POINTING,
        }
    }
}

pub const POINTING: &str = "pointing";
pub const NON_POINTING: &str = "non_pointing";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub key: String,
    pub n: usize,
    pub hits1: usize,
    pub hits5: usize,
}

impl Stratum {
    pub fn top1(&self) -> Option<f64> {
        percent(self.hits1, self.n)
    }

    pub fn top5(&self) -> Option<f64> {
        percent(self.hits5, self.n)
    }
}

/// Per-stratum counts for every stratum of `axis`, empty ones included.
pub fn stratify(records: &[&ResultRecord], axis: Axis) -> Vec<Stratum> {
    axis.strata()
        .into_iter()
        .map(|key| {
            let inside: Vec<&ResultRecord> = records.iter().copied().filter(|r| axis.key(r) == key).collect();
            Stratum {
                key: key.to_string(),
                n: inside.len(),
                hits1: hits(&inside, 1),
                hits5: hits(&inside, 5),
            }
        })
        .collect()
}

/// Count-weighted mean of stratum accuracies, recombined from integer counts
/// so it equals the unstratified aggregate exactly.
pub fn recombine(strata: &[Stratum], k: usize) -> Option<f64> {
    let n = strata.iter().map(|s| s.n).sum();
    let h = strata.iter().map(|s| if k == 1 { s.hits1 } else { s.hits5 }).sum();
    percent(h, n)
}

/// Accuracy of picking, per subset, the singleton that is better there.
/// Takes each subset's chosen accuracy (percent) and size.
pub fn singleton_oracle(acc_a: f64, n_a: usize, acc_b: f64, n_b: usize) -> f64 {
    assert!(n_a > 0 && n_b > 0, "subset sizes must be positive");
    (n_a as f64 * acc_a + n_b as f64 * acc_b) / (n_a + n_b) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(rank: usize, tier: Tier, ref_type: RefType) -> ResultRecord {
        ResultRecord {
            ref_id: format!("r{rank}"),
            config_name: "P".into(),
            seed: 0,
            fold: 0,
            room_id: "a".into(),
            rank_of_target: rank,
            num_candidates: 50,
            tier,
            ref_type,
        }
    }

    #[test]
    fn topk_edges() {
        assert!(topk(1, 1));
        assert!(!topk(6, 5));
        assert!(topk(5, 5));
    }

    #[test]
    fn oracle_values() {
        assert!((singleton_oracle(27.9, 2068, 27.2, 1696) - 27.58).abs() < 0.05);
        assert_eq!(singleton_oracle(31.0, 7, 31.0, 9), 31.0);
        assert_eq!(singleton_oracle(100.0, 1, 0.0, 1), 50.0);
    }

    #[test]
    fn empty_strata_are_reported() {
        let rs = [rec(1, Tier::T1, RefType::ExactNp), rec(7, Tier::T1, RefType::Pronominal)];
        let refs: Vec<&ResultRecord> = rs.iter().collect();
        let strata = stratify(&refs, Axis::Tier);
        assert_eq!(strata.len(), 5);
        assert_eq!(strata[0].n, 2);
        assert_eq!(strata[0].top1(), Some(50.0));
        assert_eq!(strata[2].n, 0);
        assert_eq!(strata[2].top1(), None);
        assert_eq!(recombine(&strata, 1), aggregate(&refs, 1));
        assert_eq!(aggregate(&[], 1), None);
    }
}
