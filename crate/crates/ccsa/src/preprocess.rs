//! Pre-graph read filters: length filtering and primer-anchored trimming.
//!
//! A read survives trimming when it contains at least one exact k-anchor-mer
//! of the left primer and, further right, one of the right primer. The trim
//! window extends each anchor outward to the inferred primer boundary,
//! clamped to the read.

use crate::seqio::{DnaSeq, Read};
use std::collections::HashMap;

/// Default anchor kmer size for trimming. Long enough that a random hit in
/// a ~1 kb read is unlikely (4^12 ≈ 1.7e7), short enough to survive ~10%
/// error within ~40-base primers.
pub const DEFAULT_K_ANCHOR: usize = 12;

/// The two known sequences flanking every payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimerPair {
    pub left: DnaSeq,
    pub right: DnaSeq,
}

/// A read restricted to the window `[trim_start, trim_end)` of its original
/// sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrimmedRead {
    pub read: Read,
    pub trim_start: usize,
    pub trim_end: usize,
}

impl TrimmedRead {
    pub fn seq(&self) -> &[u8] {
        &self.read.seq[self.trim_start..self.trim_end]
    }

    pub fn len(&self) -> usize {
        self.trim_end - self.trim_start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Keep exactly the reads of length >= `min_total_len` ("shorter than" is
/// strict), preserving order.
pub fn filter_by_length(mut reads: Vec<Read>, min_total_len: usize) -> Vec<Read> {
    reads.retain(|r| r.seq.len() >= min_total_len);
    reads
}

/// Exact-match lookup tables from primer k-anchor-mers to their offset
/// within the primer. When a kmer occurs at several offsets the first
/// (smallest) offset is recorded.
#[derive(Debug, Clone)]
pub struct AnchorIndex {
    left: HashMap<Vec<u8>, usize>,
    right: HashMap<Vec<u8>, usize>,
    right_len: usize,
    k_anchor: usize,
}

impl AnchorIndex {
    /// Requires `k_anchor <= min(primer lengths)`.
    pub fn new(primers: &PrimerPair, k_anchor: usize) -> Self {
        assert!(
            k_anchor >= 1 && k_anchor <= primers.left.len() && k_anchor <= primers.right.len(),
            "k_anchor must be in [1, min(primer lengths)]"
        );
        let index = |seq: &[u8]| {
            let mut map: HashMap<Vec<u8>, usize> = HashMap::new();
            for (off, win) in seq.windows(k_anchor).enumerate() {
                map.entry(win.to_vec()).or_insert(off);
            }
            map
        };
        AnchorIndex {
            left: index(&primers.left),
            right: index(&primers.right),
            right_len: primers.right.len(),
            k_anchor,
        }
    }

    /// Trim a read to the window spanned by the leftmost left-primer anchor
    /// and the rightmost right-primer anchor, each extended outward to the
    /// inferred primer boundary. Returns `None` (discard) when the anchoring
    /// rule fails.
    pub fn trim(&self, read: &Read) -> Option<TrimmedRead> {
        let seq = read.seq.as_bytes();
        if seq.len() < self.k_anchor {
            return None;
        }

        let mut left_hit = None;
        for (pos, win) in seq.windows(self.k_anchor).enumerate() {
            if let Some(&off) = self.left.get(win) {
                left_hit = Some((pos, off));
                break;
            }
        }
        let (m_left, o_left) = left_hit?;

        let mut right_hit = None;
        for pos in (0..=seq.len() - self.k_anchor).rev() {
            let win = &seq[pos..pos + self.k_anchor];
            if let Some(&off) = self.right.get(win) {
                right_hit = Some((pos, off));
                break;
            }
        }
        let (m_right, o_right) = right_hit?;

        if m_left + self.k_anchor > m_right {
            return None;
        }

        let trim_start = m_left.saturating_sub(o_left);
        let trim_end = (m_right + (self.right_len - o_right)).min(seq.len());
        Some(TrimmedRead {
            read: read.clone(),
            trim_start,
            trim_end,
        })
    }
}

/// One-shot form of [`AnchorIndex::trim`].
pub fn anchor_trim(read: &Read, primers: &PrimerPair, k_anchor: usize) -> Option<TrimmedRead> {
    AnchorIndex::new(primers, k_anchor).trim(read)
}
