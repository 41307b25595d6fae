//! Positioned solid kmers and the kmer overlap graph.
//!
//! Nodes are kmers seen strictly more than T times, disambiguated by their
//! approximate offset in the (trimmed) reads: the same string at well
//! separated offsets yields distinct nodes. A directed edge u -> v with
//! weight K - o exists when a suffix of u of length o >= L equals the
//! prefix of v of the same length; only the longest qualifying overlap per
//! ordered pair is kept.

use crate::error::{Error, Result};
use crate::preprocess::{PrimerPair, TrimmedRead};
use crate::seqio::DnaSeq;
use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

pub const DEFAULT_K_MAX: usize = 26;
pub const DEFAULT_K_MIN: usize = 10;

/// Minimum overlap defaults to floor(2K/3), never below 1.
pub fn default_min_overlap(k: usize) -> usize {
    (2 * k / 3).max(1)
}

/// Parameters of one graph construction at a fixed kmer size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KmerParams {
    /// Kmer size (nt).
    pub k: usize,
    /// Solidity threshold: a cluster is kept when its occurrence count is
    /// strictly greater than `t`.
    pub t: usize,
    /// Minimum suffix/prefix overlap for an edge (nt).
    pub l: usize,
    /// Position-cluster gap: occurrence offsets whose consecutive sorted
    /// gap exceeds `d` belong to different clusters.
    pub d: usize,
}

impl KmerParams {
    pub fn for_k(k: usize, t: usize) -> Self {
        KmerParams {
            k,
            t,
            l: default_min_overlap(k),
            d: k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.l < 1 || self.l >= self.k {
            return Err(Error::InvalidParam(format!(
                "need 1 <= L < K, got K={} L={}",
                self.k, self.l
            )));
        }
        if self.t < 1 {
            return Err(Error::InvalidParam("solidity threshold T must be >= 1".into()));
        }
        if self.d < 1 {
            return Err(Error::InvalidParam("position gap D must be >= 1".into()));
        }
        Ok(())
    }
}

/// A solid kmer tied to a representative offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionedKmer {
    pub kmer: DnaSeq,
    /// Lower median of the cluster's occurrence offsets.
    pub position: usize,
    /// Number of occurrences in the cluster.
    pub weight: usize,
}

/// Directed overlap edge; `weight = K - overlap` is the number of
/// nucleotides appended when traversing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub to: u32,
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KmerOverlapGraph {
    nodes: Vec<PositionedKmer>,
    out_edges: Vec<Vec<Edge>>,
    params: KmerParams,
}

impl KmerOverlapGraph {
    /// Assemble a graph from explicit parts, validating the edge rule.
    /// Node order is preserved as given. Solidity (weight > T) is an
    /// extraction-time property and is not re-checked here.
    pub fn from_parts(
        nodes: Vec<PositionedKmer>,
        edges: Vec<(u32, u32, u32)>,
        params: KmerParams,
    ) -> Result<Self> {
        params.validate()?;
        let k = params.k;
        for node in &nodes {
            if node.kmer.len() != k {
                return Err(Error::InvalidGraph(format!(
                    "node {} has length {}, expected K={k}",
                    node.kmer,
                    node.kmer.len()
                )));
            }
        }
        let mut seen: HashSet<(&[u8], usize)> = HashSet::new();
        for node in &nodes {
            if !seen.insert((node.kmer.as_bytes(), node.position)) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate node {}@{}",
                    node.kmer, node.position
                )));
            }
        }
        for a in &nodes {
            for b in &nodes {
                if a.kmer == b.kmer
                    && a.position != b.position
                    && a.position.abs_diff(b.position) <= params.d
                {
                    return Err(Error::InvalidGraph(format!(
                        "positions {} and {} of kmer {} are within D={}",
                        a.position, b.position, a.kmer, params.d
                    )));
                }
            }
        }
        let mut out_edges: Vec<Vec<Edge>> = vec![Vec::new(); nodes.len()];
        for (from, to, weight) in edges {
            let (fu, tu, w) = (from as usize, to as usize, weight as usize);
            if fu >= nodes.len() || tu >= nodes.len() {
                return Err(Error::InvalidGraph(format!("edge ({from},{to}) out of range")));
            }
            if from == to {
                return Err(Error::InvalidGraph(format!("self-edge on node {from}")));
            }
            if w < 1 || w > k - params.l {
                return Err(Error::InvalidGraph(format!(
                    "edge weight {w} outside [1, K-L={}]",
                    k - params.l
                )));
            }
            let o = k - w;
            if nodes[fu].kmer[w..] != nodes[tu].kmer[..o] {
                return Err(Error::InvalidGraph(format!(
                    "suffix/prefix mismatch on edge {} -> {} (overlap {o})",
                    nodes[fu].kmer, nodes[tu].kmer
                )));
            }
            out_edges[fu].push(Edge { to, weight });
        }
        for edges in &mut out_edges {
            edges.sort_unstable_by_key(|e| e.to);
        }
        Ok(KmerOverlapGraph {
            nodes,
            out_edges,
            params,
        })
    }

    pub fn nodes(&self) -> &[PositionedKmer] {
        &self.nodes
    }

    pub fn node(&self, id: u32) -> &PositionedKmer {
        &self.nodes[id as usize]
    }

    pub fn out_edges(&self, id: u32) -> &[Edge] {
        &self.out_edges[id as usize]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    pub fn params(&self) -> &KmerParams {
        &self.params
    }
}

/// Extract positioned solid kmers from trimmed reads.
///
/// For each distinct kmer string the occurrence offsets are sorted and
/// split into clusters wherever consecutive offsets differ by more than D;
/// every cluster with size strictly greater than T becomes one node whose
/// position is the cluster's lower median. Output is sorted by
/// (position, kmer).
pub fn extract_solid_kmers(reads: &[TrimmedRead], params: &KmerParams) -> Vec<PositionedKmer> {
    let k = params.k;
    let mut occurrences: HashMap<&[u8], Vec<u32>> = HashMap::new();
    for tr in reads {
        let seq = tr.seq();
        if seq.len() < k {
            continue;
        }
        for (offset, window) in seq.windows(k).enumerate() {
            occurrences.entry(window).or_default().push(offset as u32);
        }
    }

    let mut out = Vec::new();
    for (kmer, mut offsets) in occurrences {
        offsets.sort_unstable();
        let mut cluster_start = 0usize;
        for idx in 1..=offsets.len() {
            let split = idx == offsets.len()
                || (offsets[idx] - offsets[idx - 1]) as usize > params.d;
            if !split {
                continue;
            }
            let cluster = &offsets[cluster_start..idx];
            if cluster.len() > params.t {
                out.push(PositionedKmer {
                    kmer: DnaSeq::from_validated(kmer.to_vec()),
                    position: cluster[(cluster.len() - 1) / 2] as usize,
                    weight: cluster.len(),
                });
            }
            cluster_start = idx;
        }
    }
    out.sort_unstable_by(|a, b| (a.position, &a.kmer).cmp(&(b.position, &b.kmer)));
    out
}

/// Build the overlap graph over the given solid kmers.
///
/// Nodes are canonicalized to (position, kmer) order. For every ordered
/// pair only the longest qualifying overlap is kept, found by indexing
/// prefixes per overlap length instead of scanning all pairs.
pub fn build_overlap_graph(kmers: Vec<PositionedKmer>, params: KmerParams) -> KmerOverlapGraph {
    let k = params.k;
    let mut nodes = kmers;
    nodes.sort_unstable_by(|a, b| (a.position, &a.kmer).cmp(&(b.position, &b.kmer)));

    let mut out_edges: Vec<Vec<Edge>> = vec![Vec::new(); nodes.len()];
    let mut connected: HashSet<(u32, u32)> = HashSet::new();

    for overlap in (params.l..k).rev() {
        let mut by_prefix: HashMap<&[u8], Vec<u32>> = HashMap::new();
        for (j, node) in nodes.iter().enumerate() {
            by_prefix
                .entry(&node.kmer[..overlap])
                .or_default()
                .push(j as u32);
        }
        for (i, node) in nodes.iter().enumerate() {
            let i = i as u32;
            let suffix = &node.kmer[k - overlap..];
            let Some(candidates) = by_prefix.get(suffix) else {
                continue;
            };
            for &j in candidates {
                if i != j && connected.insert((i, j)) {
                    out_edges[i as usize].push(Edge {
                        to: j,
                        weight: (k - overlap) as u32,
                    });
                }
            }
        }
    }
    for edges in &mut out_edges {
        edges.sort_unstable_by_key(|e| e.to);
    }
    KmerOverlapGraph {
        nodes,
        out_edges,
        params,
    }
}

/// Number of connected components ignoring edge direction. Empty graph: 0.
pub fn count_weak_components(graph: &KmerOverlapGraph) -> usize {
    let n = graph.node_count();
    let mut parent: Vec<u32> = (0..n as u32).collect();

    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }

    for u in 0..n as u32 {
        for edge in graph.out_edges(u) {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, edge.to));
            if ru != rv {
                parent[ru as usize] = rv;
            }
        }
    }
    (0..n as u32).filter(|&i| find(&mut parent, i) == i).count()
}

/// Does any node's kmer occur as a substring of `primer`?
pub fn has_anchor(graph: &KmerOverlapGraph, primer: &DnaSeq) -> bool {
    let k = graph.params.k;
    if primer.len() < k {
        return false;
    }
    graph
        .nodes
        .iter()
        .any(|n| primer.windows(k).any(|w| w == n.kmer.as_bytes()))
}

/// Adaptive-K construction settings.
#[derive(Debug, Clone)]
pub struct KogConfig {
    pub k_max: usize,
    pub k_min: usize,
    /// Resolved solidity threshold T.
    pub solidity: usize,
    /// Override for L; `None` uses floor(2K/3). Values are clamped to
    /// [1, K-1] as K descends.
    pub min_overlap: Option<usize>,
    /// Override for D; `None` uses K.
    pub pos_gap: Option<usize>,
}

impl KogConfig {
    pub fn params_for(&self, k: usize) -> KmerParams {
        let l = self
            .min_overlap
            .map(|l| l.clamp(1, k - 1))
            .unwrap_or_else(|| default_min_overlap(k));
        KmerParams {
            k,
            t: self.solidity,
            l,
            d: self.pos_gap.unwrap_or(k),
        }
    }
}

/// Per-K outcome recorded while descending from Kmax to Kmin.
#[derive(Debug, Clone)]
pub struct KAttempt {
    pub k: usize,
    pub nodes: usize,
    pub components: usize,
    pub left_anchor: bool,
    pub right_anchor: bool,
}

/// Descend K from `k_max` to `k_min` and return the first graph that is a
/// single weak component with both primer anchors present.
pub fn make_kog(
    reads: &[TrimmedRead],
    cfg: &KogConfig,
    primers: &PrimerPair,
) -> Result<(KmerOverlapGraph, usize)> {
    if cfg.k_min < 2 || cfg.k_min > cfg.k_max {
        return Err(Error::InvalidParam(format!(
            "need 2 <= kmin <= kmax, got kmin={} kmax={}",
            cfg.k_min, cfg.k_max
        )));
    }
    let mut attempts: Vec<KAttempt> = Vec::new();
    for k in (cfg.k_min..=cfg.k_max).rev() {
        let params = cfg.params_for(k);
        params.validate()?;
        let kmers = extract_solid_kmers(reads, &params);
        let graph = build_overlap_graph(kmers, params);
        let components = count_weak_components(&graph);
        let left_anchor = has_anchor(&graph, &primers.left);
        let right_anchor = has_anchor(&graph, &primers.right);
        if components == 1 && left_anchor && right_anchor {
            return Ok((graph, k));
        }
        attempts.push(KAttempt {
            k,
            nodes: graph.node_count(),
            components,
            left_anchor,
            right_anchor,
        });
    }
    let mut diagnostics = String::new();
    for a in &attempts {
        writeln!(
            diagnostics,
            "  K={}: {} nodes, {} components, left anchor {}, right anchor {}",
            a.k, a.nodes, a.components, a.left_anchor, a.right_anchor
        )
        .expect("writing to String cannot fail");
    }
    Err(Error::NoAnchoredGraph {
        k_min: cfg.k_min,
        k_max: cfg.k_max,
        diagnostics,
    })
}

/// Plain-text edge list for debugging:
/// `<kmer>@<pos> <weight_u> -> <kmer>@<pos> <weight_v> w=<edge weight>`.
pub fn dump_edges(graph: &KmerOverlapGraph) -> String {
    let mut out = String::new();
    for u in 0..graph.node_count() as u32 {
        let from = graph.node(u);
        for edge in graph.out_edges(u) {
            let to = graph.node(edge.to);
            writeln!(
                out,
                "{}@{} {} -> {}@{} {} w={}",
                from.kmer, from.position, from.weight, to.kmer, to.position, to.weight, edge.weight
            )
            .expect("writing to String cannot fail");
        }
    }
    out
}
