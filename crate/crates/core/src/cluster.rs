//! Group hunks with identical shape keys into patch clusters.
//!
//! Grouping is exact key equality. Singleton keys are counted as unique
//! hunks and excluded from inference. A cluster is vertical when some patch
//! contributes at least two members, horizontal when the members span at
//! least two patches; both can hold at once.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::editscript::ShapeKey;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterMember {
    pub hunk_id: String,
    pub patch_id: String,
    pub project_id: String,
    pub file_path: String,
    pub function_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchCluster {
    /// Hash of the shape key.
    pub cluster_id: String,
    pub shape_key: ShapeKey,
    pub members: Vec<ClusterMember>,
    pub size: usize,
    pub is_vertical: bool,
    pub is_horizontal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub total_hunks: usize,
    /// Hunks whose key occurs exactly once.
    pub unique_hunks: usize,
    pub clusterable_hunks: usize,
    pub cluster_count: usize,
    /// cluster size -> number of clusters
    pub size_histogram: BTreeMap<usize, usize>,
    pub vertical_clusters: usize,
    pub horizontal_clusters: usize,
}

/// Spread flags for a member set of size >= 2.
pub fn classify_spread(members: &[ClusterMember]) -> (bool, bool) {
    let mut per_patch: BTreeMap<&str, usize> = BTreeMap::new();
    for m in members {
        *per_patch.entry(m.patch_id.as_str()).or_insert(0) += 1;
    }
    let vertical = per_patch.values().any(|&n| n >= 2);
    let horizontal = per_patch.len() >= 2;
    (vertical, horizontal)
}

/// Exact grouping by shape key. Clusters come back sorted by size descending
/// then cluster id, so downstream iteration is reproducible.
pub fn cluster(items: Vec<(ClusterMember, ShapeKey)>) -> (Vec<PatchCluster>, ClusterStats) {
    let total_hunks = items.len();
    let mut groups: BTreeMap<String, (ShapeKey, Vec<ClusterMember>)> = BTreeMap::new();
    for (member, key) in items {
        groups
            .entry(key.canonical_text.clone())
            .or_insert_with(|| (key, Vec::new()))
            .1
            .push(member);
    }

    let mut clusters = Vec::new();
    let mut unique_hunks = 0;
    for (_, (key, members)) in groups {
        if members.len() < 2 {
            unique_hunks += members.len();
            continue;
        }
        let (is_vertical, is_horizontal) = classify_spread(&members);
        clusters.push(PatchCluster {
            cluster_id: key.id(),
            size: members.len(),
            shape_key: key,
            members,
            is_vertical,
            is_horizontal,
        });
    }
    clusters.sort_by(|a, b| b.size.cmp(&a.size).then(a.cluster_id.cmp(&b.cluster_id)));

    let mut size_histogram = BTreeMap::new();
    for c in &clusters {
        *size_histogram.entry(c.size).or_insert(0) += 1;
    }
    let stats = ClusterStats {
        total_hunks,
        unique_hunks,
        clusterable_hunks: total_hunks - unique_hunks,
        cluster_count: clusters.len(),
        size_histogram,
        vertical_clusters: clusters.iter().filter(|c| c.is_vertical).count(),
        horizontal_clusters: clusters.iter().filter(|c| c.is_horizontal).count(),
    };
    (clusters, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn member(hunk: &str, patch: &str) -> ClusterMember {
        ClusterMember {
            hunk_id: hunk.into(),
            patch_id: patch.into(),
            project_id: "proj".into(),
            file_path: "f.c".into(),
            function_name: None,
        }
    }

    fn key(s: &str) -> ShapeKey {
        ShapeKey {
            canonical_text: s.into(),
        }
    }

    #[test]
    fn basic_grouping_and_stats() {
        let items = vec![
            (member("h1", "p1"), key("A")),
            (member("h2", "p2"), key("A")),
            (member("h3", "p3"), key("B")),
        ];
        let (clusters, stats) = cluster(items);
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].size, 2);
        assert_eq!(stats.total_hunks, 3);
        assert_eq!(stats.unique_hunks, 1);
        assert_eq!(stats.clusterable_hunks, 2);
        assert_eq!(stats.cluster_count, 1);
        assert_eq!(stats.total_hunks, stats.unique_hunks + stats.clusterable_hunks);
    }

    #[test]
    fn all_distinct_no_clusters() {
        let items = vec![
            (member("h1", "p1"), key("A")),
            (member("h2", "p2"), key("B")),
        ];
        let (clusters, stats) = cluster(items);
        assert!(clusters.is_empty());
        assert_eq!(stats.unique_hunks, 2);
    }

    #[test]
    fn spread_classification() {
        // two members from one patch: vertical only
        assert_eq!(classify_spread(&[member("h1", "p1"), member("h2", "p1")]), (true, false));
        // two members from two patches: horizontal only
        assert_eq!(classify_spread(&[member("h1", "p1"), member("h2", "p2")]), (false, true));
        // 2 in one patch + 1 in another: both
        assert_eq!(
            classify_spread(&[member("h1", "p1"), member("h2", "p1"), member("h3", "p2")]),
            (true, true)
        );
    }

    #[test]
    fn permutation_invariance() {
        let items = vec![
            (member("h1", "p1"), key("A")),
            (member("h2", "p2"), key("A")),
            (member("h3", "p1"), key("B")),
            (member("h4", "p4"), key("B")),
            (member("h5", "p5"), key("C")),
        ];
        let mut rev = items.clone();
        rev.reverse();
        let (mut c1, s1) = cluster(items);
        let (mut c2, s2) = cluster(rev);
        for c in c1.iter_mut().chain(c2.iter_mut()) {
            c.members.sort_by(|a, b| a.hunk_id.cmp(&b.hunk_id));
        }
        assert_eq!(c1, c2);
        assert_eq!(s1, s2);
    }

    #[test]
    fn ordering_size_desc_then_id() {
        let items = vec![
            (member("h1", "p1"), key("A")),
            (member("h2", "p2"), key("A")),
            (member("h3", "p3"), key("A")),
            (member("h4", "p4"), key("B")),
            (member("h5", "p5"), key("B")),
        ];
        let (clusters, _) = cluster(items);
        assert_eq!(clusters[0].size, 3);
        assert_eq!(clusters[1].size, 2);
    }

    #[test]
    fn every_member_key_equals_cluster_key() {
        let items: Vec<_> = (0..6)
            .map(|i| (member(&format!("h{i}"), &format!("p{i}")), key(if i % 2 == 0 { "X" } else { "Y" })))
            .collect();
        let (clusters, _) = cluster(items);
        let total: usize = clusters.iter().map(|c| c.size).sum();
        assert_eq!(total, 6);
        for c in &clusters {
            assert_eq!(c.cluster_id, c.shape_key.id());
        }
    }
}
