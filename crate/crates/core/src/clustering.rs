//! Threshold clustering over a similarity matrix.

use std::fmt;
use std::str::FromStr;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::commonality::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::index::SeqNo;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMethod {
    /// Connected components of the graph with edges where `sim >= tau`.
    #[default]
    Components,
    /// Agglomerative single linkage, cut at `tau`.
    SingleLinkage,
}

impl FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "components" => Ok(ClusterMethod::Components),
            "single_linkage" | "single-linkage" => Ok(ClusterMethod::SingleLinkage),
            other => Err(Error::Config(format!("unknown cluster method '{other}'"))),
        }
    }
}

impl fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClusterMethod::Components => "components",
            ClusterMethod::SingleLinkage => "single_linkage",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub threshold: f64,
    pub method: ClusterMethod,
    /// 1-based sequence numbers; members ascending, clusters ordered by
    /// their smallest member.
    pub clusters: Vec<Vec<SeqNo>>,
}

impl Clustering {
    /// Cluster label of every sequence, in sequence order.
    pub fn labels(&self) -> Vec<usize> {
        let m = self.clusters.iter().map(Vec::len).sum();
        let mut labels = vec![0; m];
        for (c, members) in self.clusters.iter().enumerate() {
            for &s in members {
                labels[s as usize - 1] = c;
            }
        }
        labels
    }
}

fn canonical(mut clusters: Vec<Vec<SeqNo>>) -> Vec<Vec<SeqNo>> {
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters.retain(|c| !c.is_empty());
    clusters.sort_unstable_by_key(|c| c[0]);
    clusters
}

fn check_tau(tau: f64) -> Result<()> {
    if (0.0..=1.0).contains(&tau) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "threshold must lie in [0, 1], got {tau}"
        )))
    }
}

pub fn cluster_threshold(
    sim: &SimilarityMatrix,
    tau: f64,
    method: ClusterMethod,
) -> Result<Clustering> {
    check_tau(tau)?;
    let m = sim.m;
    let clusters = match method {
        ClusterMethod::Components => {
            let mut uf = UnionFind::<usize>::new(m);
            for i in 1..=m as SeqNo {
                for j in i + 1..=m as SeqNo {
                    if sim.get(i, j) >= tau {
                        uf.union(i as usize - 1, j as usize - 1);
                    }
                }
            }
            let mut by_root: Vec<Vec<SeqNo>> = vec![Vec::new(); m];
            for s in 0..m {
                by_root[uf.find(s)].push(s as SeqNo + 1);
            }
            by_root
        }
        ClusterMethod::SingleLinkage => {
            let mut members: Vec<Vec<SeqNo>> = (1..=m as SeqNo).map(|s| vec![s]).collect();
            for merge in dendrogram(sim) {
                if merge.similarity < tau {
                    break;
                }
                let right = std::mem::take(&mut members[merge.right_slot]);
                members[merge.left_slot].extend(right);
            }
            members
        }
    };
    Ok(Clustering {
        threshold: tau,
        method,
        clusters: canonical(clusters),
    })
}

/// One agglomeration step.
///
/// Nodes `0..m` are the sequences (sequence `s` is node `s - 1`); the
/// `k`-th merge creates node `m + k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub similarity: f64,
    pub size: usize,
    #[serde(skip)]
    left_slot: usize,
    #[serde(skip)]
    right_slot: usize,
}

/// Single-linkage merges in order of decreasing similarity. Ties go to
/// the pair of active clusters with the smallest slot indices.
pub fn dendrogram(sim: &SimilarityMatrix) -> Vec<Merge> {
    let m = sim.m;
    // Cluster-to-cluster similarity, kept at the max over member pairs.
    let mut link: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| sim.get(i as SeqNo + 1, j as SeqNo + 1))
                .collect()
        })
        .collect();
    let mut active: Vec<bool> = vec![true; m];
    let mut node: Vec<usize> = (0..m).collect();
    let mut size: Vec<usize> = vec![1; m];
    let mut merges = Vec::with_capacity(m.saturating_sub(1));

    for k in 0..m.saturating_sub(1) {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in (0..m).filter(|&a| active[a]) {
            for b in (a + 1..m).filter(|&b| active[b]) {
                if best.is_none_or(|(_, _, s)| link[a][b] > s) {
                    best = Some((a, b, link[a][b]));
                }
            }
        }
        let (a, b, s) = best.expect("at least two active clusters");
        merges.push(Merge {
            left: node[a],
            right: node[b],
            similarity: s,
            size: size[a] + size[b],
            left_slot: a,
            right_slot: b,
        });
        active[b] = false;
        size[a] += size[b];
        node[a] = m + k;
        #[allow(clippy::needless_range_loop)]
        for c in 0..m {
            let v = link[a][c].max(link[b][c]);
            link[a][c] = v;
            link[c][a] = v;
        }
    }
    merges
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn worked() -> SimilarityMatrix {
        SimilarityMatrix::from_pairs(3, vec![0.8, 0.6, 0.5]).unwrap()
    }

    #[test]
    fn worked_example_threshold() {
        for method in [ClusterMethod::Components, ClusterMethod::SingleLinkage] {
            let c = cluster_threshold(&worked(), 0.7, method).unwrap();
            assert_eq!(c.clusters, vec![vec![1, 2], vec![3]]);
            assert_eq!(
                cluster_threshold(&worked(), 0.0, method).unwrap().clusters,
                vec![vec![1, 2, 3]]
            );
            assert_eq!(
                cluster_threshold(&worked(), 1.0, method).unwrap().clusters,
                vec![vec![1], vec![2], vec![3]]
            );
        }
        assert!(cluster_threshold(&worked(), 1.2, ClusterMethod::Components).is_err());
    }

    #[test]
    fn worked_example_dendrogram() {
        let d = dendrogram(&worked());
        let heights: Vec<f64> = d.iter().map(|m| m.similarity).collect();
        assert_eq!(heights, vec![0.8, 0.6]);
        assert_eq!((d[0].left, d[0].right, d[0].size), (0, 1, 2));
        assert_eq!((d[1].left, d[1].right, d[1].size), (3, 2, 3));
    }

    #[test]
    fn small_dendrograms() {
        assert!(dendrogram(&SimilarityMatrix::from_pairs(1, vec![]).unwrap()).is_empty());
        let two = dendrogram(&SimilarityMatrix::from_pairs(2, vec![0.35]).unwrap());
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].similarity, 0.35);
    }

    fn sims() -> impl Strategy<Value = SimilarityMatrix> {
        (1usize..9).prop_flat_map(|m| {
            prop::collection::vec(0u8..=10, m * (m - 1) / 2).prop_map(move |v| {
                SimilarityMatrix::from_pairs(m, v.into_iter().map(|x| x as f64 / 10.0).collect())
                    .unwrap()
            })
        })
    }

    fn refines(fine: &Clustering, coarse: &Clustering) -> bool {
        let labels = coarse.labels();
        fine.clusters.iter().all(|c| {
            c.iter()
                .all(|&s| labels[s as usize - 1] == labels[c[0] as usize - 1])
        })
    }

    proptest! {
        #[test]
        fn higher_threshold_refines(sim in sims(), a in 0u8..=10, b in 0u8..=10) {
            let (lo, hi) = (a.min(b) as f64 / 10.0, a.max(b) as f64 / 10.0);
            let fine = cluster_threshold(&sim, hi, ClusterMethod::Components).unwrap();
            let coarse = cluster_threshold(&sim, lo, ClusterMethod::Components).unwrap();
            prop_assert!(refines(&fine, &coarse));
        }

        #[test]
        fn methods_agree(sim in sims(), t in 0u8..=10) {
            let tau = t as f64 / 10.0;
            let a = cluster_threshold(&sim, tau, ClusterMethod::Components).unwrap();
            let b = cluster_threshold(&sim, tau, ClusterMethod::SingleLinkage).unwrap();
            prop_assert_eq!(a.clusters, b.clusters);
        }

        #[test]
        fn relabeling_is_equivariant(sim in sims(), t in 0u8..=10, seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let m = sim.m;
            let mut perm: Vec<SeqNo> = (1..=m as SeqNo).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            // Sequence s of the original is sequence perm[s-1] of the permuted matrix.
            let mut inv = vec![0; m];
            for (s, &p) in perm.iter().enumerate() {
                inv[p as usize - 1] = s as SeqNo + 1;
            }
            let mut values = Vec::new();
            for i in 1..=m as SeqNo {
                for j in i + 1..=m as SeqNo {
                    values.push(sim.get(inv[i as usize - 1], inv[j as usize - 1]));
                }
            }
            let permuted = SimilarityMatrix::from_pairs(m, values).unwrap();
            let tau = t as f64 / 10.0;
            let a = cluster_threshold(&sim, tau, ClusterMethod::Components).unwrap();
            let b = cluster_threshold(&permuted, tau, ClusterMethod::Components).unwrap();
            let mapped = canonical(a.clusters.iter().map(|c| c.iter().map(|&s| perm[s as usize - 1]).collect()).collect());
            prop_assert_eq!(mapped, b.clusters);
        }
    }
}
