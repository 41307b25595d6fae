//! Constrained best-path search between primer anchors.
//!
//! The search is a dynamic program layered by spelled length. Every edge
//! appends at least one nucleotide, so the (node, length) state graph is
//! acyclic even when the overlap graph has cycles: an entry at length l can
//! only depend on entries at strictly smaller lengths.

use crate::error::{Error, Result};
use crate::kog::{self, KmerOverlapGraph, KogConfig};
use crate::preprocess::{self, AnchorIndex, PrimerPair, TrimmedRead};
use crate::seqio::{DnaSeq, Read};
use std::collections::hash_map::Entry;
use std::collections::HashMap;

/// Candidate lengths are reported within +/- slack of the target.
pub const DEFAULT_SLACK: usize = 5;

/// The chosen START/END nodes and where their kmers sit in the primers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnchorSelection {
    pub start: u32,
    pub end: u32,
    /// Offset of the start kmer within the left primer.
    pub start_offset: usize,
    /// Offset just past the end kmer within the right primer.
    pub end_offset: usize,
}

/// Best score and backpointer per (node, spelled length).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathEntry {
    pub score: u64,
    /// Predecessor (node, spelled length); `None` for seeded entries.
    pub prev: Option<(u32, u32)>,
}

/// Layered DP table over spelled lengths in `[base_len, max_len]`.
#[derive(Debug, Clone)]
pub struct PathTable {
    base_len: usize,
    max_len: usize,
    layers: Vec<HashMap<u32, PathEntry>>,
}

impl PathTable {
    pub fn new(base_len: usize, max_len: usize) -> Self {
        assert!(base_len <= max_len, "base_len must not exceed max_len");
        PathTable {
            base_len,
            max_len,
            layers: vec![HashMap::new(); max_len - base_len + 1],
        }
    }

    pub fn base_len(&self) -> usize {
        self.base_len
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Install an initial entry with no predecessor.
    pub fn seed(&mut self, node: u32, len: usize, score: u64) {
        assert!(
            (self.base_len..=self.max_len).contains(&len),
            "seed length outside table range"
        );
        self.layers[len - self.base_len].insert(node, PathEntry { score, prev: None });
    }

    pub fn get(&self, node: u32, len: usize) -> Option<PathEntry> {
        if !(self.base_len..=self.max_len).contains(&len) {
            return None;
        }
        self.layers[len - self.base_len].get(&node).copied()
    }

    pub fn entry_count(&self) -> usize {
        self.layers.iter().map(HashMap::len).sum()
    }

    /// All populated entries as (node, length, entry).
    pub fn entries(&self) -> impl Iterator<Item = (u32, usize, PathEntry)> + '_ {
        self.layers.iter().enumerate().flat_map(move |(li, layer)| {
            let len = self.base_len + li;
            layer.iter().map(move |(&node, &entry)| (node, len, entry))
        })
    }
}

/// Rank nodes by (kmer, position); used to break exact score ties
/// deterministically in favour of the lexicographically smaller predecessor.
fn lex_ranks(graph: &KmerOverlapGraph) -> Vec<u32> {
    let mut idx: Vec<u32> = (0..graph.node_count() as u32).collect();
    idx.sort_unstable_by(|&a, &b| {
        let na = graph.node(a);
        let nb = graph.node(b);
        (&na.kmer, na.position).cmp(&(&nb.kmer, nb.position))
    });
    let mut ranks = vec![0u32; graph.node_count()];
    for (rank, &node) in idx.iter().enumerate() {
        ranks[node as usize] = rank as u32;
    }
    ranks
}

/// Fill the table forward from its seeded entries.
///
/// For every populated (u, l) and edge (u, v, w), the candidate at
/// (v, l + w) scores `score(u, l) + w * weight(v)`. A candidate replaces an
/// existing entry only when its score is strictly greater, or equal with a
/// lexicographically smaller predecessor (seeded entries win all ties).
pub fn propagate(graph: &KmerOverlapGraph, table: &mut PathTable) {
    let ranks = lex_ranks(graph);
    let base_len = table.base_len;
    let max_len = table.max_len;
    let pred_rank =
        |entry: &PathEntry| -> Option<u32> { entry.prev.map(|(node, _)| ranks[node as usize]) };

    for li in 0..table.layers.len() {
        let len = base_len + li;
        let (head, rest) = table.layers.split_at_mut(li + 1);
        let current = &head[li];
        for (&u, entry) in current.iter() {
            let score_u = entry.score;
            for edge in graph.out_edges(u) {
                let next_len = len + edge.weight as usize;
                if next_len > max_len {
                    continue;
                }
                let cand = PathEntry {
                    score: score_u + edge.weight as u64 * graph.node(edge.to).weight as u64,
                    prev: Some((u, len as u32)),
                };
                match rest[edge.weight as usize - 1].entry(edge.to) {
                    Entry::Vacant(slot) => {
                        slot.insert(cand);
                    }
                    Entry::Occupied(mut slot) => {
                        let old = *slot.get();
                        if cand.score > old.score
                            || (cand.score == old.score
                                && pred_rank(&cand) < pred_rank(&old))
                        {
                            slot.insert(cand);
                        }
                    }
                }
            }
        }
    }
}

/// Pick START (in the left primer, largest offset, i.e. closest to the
/// payload) and END (in the right primer, smallest offset). Ties fall to
/// the heavier node, then the lexicographically smaller kmer, then the
/// smaller position.
pub fn select_anchors(graph: &KmerOverlapGraph, primers: &PrimerPair) -> Result<AnchorSelection> {
    let k = graph.params().k;

    let occurrences = |haystack: &DnaSeq, needle: &DnaSeq| -> Vec<usize> {
        if haystack.len() < k {
            return Vec::new();
        }
        haystack
            .windows(k)
            .enumerate()
            .filter(|(_, w)| *w == needle.as_bytes())
            .map(|(i, _)| i)
            .collect()
    };

    let mut start: Option<(usize, u32)> = None; // (offset, node)
    for id in 0..graph.node_count() as u32 {
        let node = graph.node(id);
        let Some(&offset) = occurrences(&primers.left, &node.kmer).iter().max() else {
            continue;
        };
        let better = match start {
            None => true,
            Some((best_off, best_id)) => {
                let best = graph.node(best_id);
                // kmer/position are swapped across the tuples so that on
                // offset+weight ties the smaller (kmer, position) wins
                (offset, node.weight, &best.kmer, best.position)
                    > (best_off, best.weight, &node.kmer, node.position)
            }
        };
        if better {
            start = Some((offset, id));
        }
    }
    let (start_offset, start) = start.ok_or(Error::AnchorNotFound { side: "left" })?;

    let mut end: Option<(usize, u32)> = None;
    for id in 0..graph.node_count() as u32 {
        let node = graph.node(id);
        let Some(&offset) = occurrences(&primers.right, &node.kmer).iter().min() else {
            continue;
        };
        let better = match end {
            None => true,
            Some((best_off, best_id)) => {
                let best = graph.node(best_id);
                (best_off, node.weight, &best.kmer, best.position)
                    > (offset, best.weight, &node.kmer, node.position)
            }
        };
        if better {
            end = Some((offset, id));
        }
    }
    let (end_start, end) = end.ok_or(Error::AnchorNotFound { side: "right" })?;

    Ok(AnchorSelection {
        start,
        end,
        start_offset,
        end_offset: end_start + k,
    })
}

/// Run the layered DP from (START, K) up to `target_path_len + slack`.
pub fn layered_path_search(
    graph: &KmerOverlapGraph,
    anchors: &AnchorSelection,
    target_path_len: usize,
    slack: usize,
) -> PathTable {
    let k = graph.params().k;
    assert!(target_path_len >= k, "target path length below kmer size");
    let mut table = PathTable::new(k, target_path_len + slack);
    let start_weight = graph.node(anchors.start).weight as u64;
    table.seed(anchors.start, k, k as u64 * start_weight);
    propagate(graph, &mut table);
    table
}

/// A spelled path completed with the primer remainders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsensusCandidate {
    /// left primer + spelled payload region + right primer.
    pub full_sequence: DnaSeq,
    /// The part strictly between the primers.
    pub payload: DnaSeq,
    pub total_length: usize,
    pub score: u64,
}

/// Spell every END entry within `target_path_len +/- slack`, completing the
/// primers on both sides. Candidates are ordered by distance from the
/// target length, then descending score.
pub fn reconstruct_consensus(
    table: &PathTable,
    graph: &KmerOverlapGraph,
    anchors: &AnchorSelection,
    primers: &PrimerPair,
    target_path_len: usize,
    slack: usize,
) -> Vec<ConsensusCandidate> {
    let k = graph.params().k;
    let lo = target_path_len.saturating_sub(slack).max(table.base_len());
    let hi = (target_path_len + slack).min(table.max_len());

    let mut found: Vec<(usize, ConsensusCandidate)> = Vec::new();
    for len in lo..=hi {
        let Some(entry) = table.get(anchors.end, len) else {
            continue;
        };
        let mut chain = vec![(anchors.end, len as u32)];
        let mut cursor = entry;
        while let Some((prev_node, prev_len)) = cursor.prev {
            chain.push((prev_node, prev_len));
            cursor = table
                .get(prev_node, prev_len as usize)
                .expect("backpointer chains stay within the table");
        }
        chain.reverse();

        let mut spelled = graph.node(chain[0].0).kmer.as_bytes().to_vec();
        for step in chain.windows(2) {
            let (_, from_len) = step[0];
            let (to_node, to_len) = step[1];
            let w = (to_len - from_len) as usize;
            let kmer = graph.node(to_node).kmer.as_bytes();
            spelled.extend_from_slice(&kmer[k - w..]);
        }
        debug_assert_eq!(spelled.len(), len, "spelled length must equal table length");

        let mut full = primers.left[..anchors.start_offset].to_vec();
        full.extend_from_slice(&spelled);
        full.extend_from_slice(&primers.right[anchors.end_offset..]);
        let total_length = full.len();

        let flank = primers.left.len() + primers.right.len();
        let payload = if total_length >= flank {
            full[primers.left.len()..total_length - primers.right.len()].to_vec()
        } else {
            Vec::new()
        };

        found.push((
            len,
            ConsensusCandidate {
                full_sequence: DnaSeq::from_validated(full),
                payload: DnaSeq::from_validated(payload),
                total_length,
                score: entry.score,
            },
        ));
    }

    found.sort_by_key(|(len, cand)| {
        (
            len.abs_diff(target_path_len),
            std::cmp::Reverse(cand.score),
            *len,
        )
    });
    found.into_iter().map(|(_, cand)| cand).collect()
}

/// Knobs for the full decoding pipeline.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub k_anchor: usize,
    pub k_max: usize,
    pub k_min: usize,
    /// `None` resolves to max(1, surviving reads / 10).
    pub solid_threshold: Option<usize>,
    pub min_overlap: Option<usize>,
    pub pos_gap: Option<usize>,
    pub slack: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k_anchor: preprocess::DEFAULT_K_ANCHOR,
            k_max: kog::DEFAULT_K_MAX,
            k_min: kog::DEFAULT_K_MIN,
            solid_threshold: None,
            min_overlap: None,
            pos_gap: None,
            slack: DEFAULT_SLACK,
        }
    }
}

/// Everything a pipeline run produced, candidates first.
#[derive(Debug)]
pub struct PipelineRun {
    pub candidates: Vec<ConsensusCandidate>,
    pub chosen_k: usize,
    pub graph: KmerOverlapGraph,
    pub anchors: AnchorSelection,
    pub target_path_len: usize,
    pub reads_in: usize,
    pub reads_used: usize,
}

/// Full composition: length filter, anchor trim (with a second length
/// check, since trimming only shrinks reads), adaptive graph build, anchor
/// selection, layered search, reconstruction.
pub fn consensus_pipeline(
    reads: Vec<Read>,
    primers: &PrimerPair,
    payload_len: usize,
    cfg: &PipelineConfig,
) -> Result<PipelineRun> {
    if payload_len == 0 {
        return Err(Error::InvalidParam("payload length must be >= 1".into()));
    }
    if cfg.k_anchor == 0
        || cfg.k_anchor > primers.left.len()
        || cfg.k_anchor > primers.right.len()
    {
        return Err(Error::InvalidParam(format!(
            "k_anchor {} must be in [1, min(primer lengths)={}]",
            cfg.k_anchor,
            primers.left.len().min(primers.right.len())
        )));
    }

    let reads_in = reads.len();
    let min_total = payload_len + primers.left.len() + primers.right.len();
    let kept = preprocess::filter_by_length(reads, min_total);

    let index = AnchorIndex::new(primers, cfg.k_anchor);
    let trimmed: Vec<TrimmedRead> = kept
        .iter()
        .filter_map(|r| index.trim(r))
        .filter(|t| t.len() >= min_total)
        .collect();
    if trimmed.is_empty() {
        return Err(Error::NoUsableReads);
    }

    let solidity = cfg
        .solid_threshold
        .unwrap_or_else(|| (trimmed.len() / 10).max(1));
    let kog_cfg = KogConfig {
        k_max: cfg.k_max,
        k_min: cfg.k_min,
        solidity,
        min_overlap: cfg.min_overlap,
        pos_gap: cfg.pos_gap,
    };
    let (graph, chosen_k) = kog::make_kog(&trimmed, &kog_cfg, primers)?;
    let anchors = select_anchors(&graph, primers)?;

    let target_path_len =
        (primers.left.len() - anchors.start_offset) + payload_len + anchors.end_offset;
    let table = layered_path_search(&graph, &anchors, target_path_len, cfg.slack);
    let candidates =
        reconstruct_consensus(&table, &graph, &anchors, primers, target_path_len, cfg.slack);

    Ok(PipelineRun {
        candidates,
        chosen_k,
        graph,
        anchors,
        target_path_len,
        reads_in,
        reads_used: trimmed.len(),
    })
}
