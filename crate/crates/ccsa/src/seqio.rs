//! Sequence I/O: FASTQ reads in, FASTA primers/references in, FASTA
//! consensus candidates out.
//!
//! FASTQ records are strict 4-line records (no wrapping); FASTA input may
//! wrap freely and output wraps at 80 columns. All sequences are held
//! uppercase over the {A,C,G,T} alphabet.

use crate::error::{Error, Result};
use crate::pathsearch::ConsensusCandidate;
use std::fmt;
use std::io::BufRead;
use std::ops::Deref;

/// Width of FASTA output body lines.
pub const FASTA_LINE_WIDTH: usize = 80;

/// An offending byte found while canonicalizing a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BadBase {
    pub pos: usize,
    pub byte: u8,
}

/// Nucleotide sequence, canonical uppercase {A,C,G,T}.
///
/// Lowercase input is accepted and uppercased; anything else (including N)
/// is rejected at construction. Empty sequences are representable so that
/// a fully deleted simulated read can flow through and be dropped by the
/// length filter; parsers that require nonempty bodies enforce that
/// themselves.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DnaSeq(Vec<u8>);

impl DnaSeq {
    /// Canonicalize raw bytes into a sequence, or report the first bad byte.
    pub fn from_bytes(raw: &[u8]) -> std::result::Result<Self, BadBase> {
        let mut out = Vec::with_capacity(raw.len());
        for (pos, &b) in raw.iter().enumerate() {
            match b {
                b'A' | b'C' | b'G' | b'T' => out.push(b),
                b'a' | b'c' | b'g' | b't' => out.push(b.to_ascii_uppercase()),
                _ => return Err(BadBase { pos, byte: b }),
            }
        }
        Ok(DnaSeq(out))
    }

    /// Wrap bytes that are already canonical uppercase ACGT.
    pub(crate) fn from_validated(bytes: Vec<u8>) -> Self {
        debug_assert!(bytes.iter().all(|b| matches!(b, b'A' | b'C' | b'G' | b'T')));
        DnaSeq(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Deref for DnaSeq {
    type Target = [u8];
    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for DnaSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(std::str::from_utf8(&self.0).expect("ACGT is ASCII"))
    }
}

impl fmt::Debug for DnaSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DnaSeq({self})")
    }
}

/// A sequencing read. Quality is carried verbatim but never interpreted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Read {
    pub id: String,
    pub seq: DnaSeq,
    pub qual: Option<String>,
}

/// A named FASTA record (primer or reference).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedSequence {
    pub name: String,
    pub seq: DnaSeq,
}

/// Result of parsing a FASTQ stream: kept reads plus the number of records
/// dropped because they contained symbols outside {A,C,G,T,a,c,g,t}.
#[derive(Debug, Clone)]
pub struct FastqReads {
    pub reads: Vec<Read>,
    pub dropped: usize,
}

fn trim_newline(line: &str) -> &str {
    line.trim_end_matches('\n').trim_end_matches('\r')
}

/// Parse 4-line-per-record FASTQ. Records with non-ACGT symbols are dropped
/// and counted; a record cut short by EOF is a fatal error naming the byte
/// offset at which the record started.
pub fn parse_fastq(mut input: impl BufRead) -> Result<FastqReads> {
    let mut reads = Vec::new();
    let mut dropped = 0usize;
    let mut offset: u64 = 0;
    let mut line = String::new();

    loop {
        let record_start = offset;
        line.clear();
        let n = input.read_line(&mut line)?;
        if n == 0 {
            break; // clean EOF at a record boundary
        }
        offset += n as u64;
        let header = trim_newline(&line).to_string();
        let Some(id) = header.strip_prefix('@') else {
            return Err(Error::MalformedFastq {
                offset: record_start,
                what: format!("expected '@' header, found {header:?}"),
            });
        };
        let id = id.to_string();

        let mut next_line = |offset: &mut u64| -> Result<String> {
            line.clear();
            let n = input.read_line(&mut line)?;
            if n == 0 {
                return Err(Error::TruncatedFastq {
                    offset: record_start,
                });
            }
            *offset += n as u64;
            Ok(trim_newline(&line).to_string())
        };

        let seq_line = next_line(&mut offset)?;
        let plus_line = next_line(&mut offset)?;
        let qual_line = next_line(&mut offset)?;

        if !plus_line.starts_with('+') {
            return Err(Error::MalformedFastq {
                offset: record_start,
                what: format!("expected '+' separator, found {plus_line:?}"),
            });
        }
        if qual_line.len() != seq_line.len() {
            return Err(Error::MalformedFastq {
                offset: record_start,
                what: format!(
                    "quality length {} != sequence length {}",
                    qual_line.len(),
                    seq_line.len()
                ),
            });
        }

        match DnaSeq::from_bytes(seq_line.as_bytes()) {
            Ok(seq) => reads.push(Read {
                id,
                seq,
                qual: Some(qual_line),
            }),
            Err(_) => dropped += 1,
        }
    }

    Ok(FastqReads { reads, dropped })
}

/// Parse FASTA with arbitrary line wrapping. Fatal on content before the
/// first '>', on empty record names, on empty bodies and on non-ACGT
/// symbols.
pub fn parse_fasta(input: impl BufRead) -> Result<Vec<NamedSequence>> {
    let mut records: Vec<NamedSequence> = Vec::new();
    let mut cur: Option<(String, Vec<u8>)> = None;

    let mut flush = |cur: &mut Option<(String, Vec<u8>)>,
                     records: &mut Vec<NamedSequence>|
     -> Result<()> {
        if let Some((name, body)) = cur.take() {
            if body.is_empty() {
                return Err(Error::FastaEmptyBody { name });
            }
            records.push(NamedSequence {
                name,
                seq: DnaSeq::from_validated(body),
            });
        }
        Ok(())
    };

    for line in input.lines() {
        let line = line?;
        let line = trim_newline(&line);
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            flush(&mut cur, &mut records)?;
            let name = header.trim().to_string();
            if name.is_empty() {
                return Err(Error::FastaEmptyName);
            }
            cur = Some((name, Vec::new()));
        } else {
            let Some((name, body)) = cur.as_mut() else {
                return Err(Error::FastaLeadingContent);
            };
            match DnaSeq::from_bytes(line.as_bytes()) {
                Ok(seq) => body.extend_from_slice(seq.as_bytes()),
                Err(bad) => {
                    return Err(Error::BadSymbol {
                        symbol: bad.byte as char,
                        context: format!("FASTA record {name:?}"),
                    })
                }
            }
        }
    }
    flush(&mut cur, &mut records)?;
    Ok(records)
}

/// Serialize consensus candidates as FASTA, ordered by increasing total
/// length with ties broken by descending score. Headers encode length and
/// score as `>ccsa_len=<L>_score=<S>`.
pub fn write_fasta_consensus(candidates: &[ConsensusCandidate]) -> Vec<u8> {
    let mut sorted: Vec<&ConsensusCandidate> = candidates.iter().collect();
    sorted.sort_by(|a, b| {
        a.total_length
            .cmp(&b.total_length)
            .then(b.score.cmp(&a.score))
    });

    let mut out = Vec::new();
    for cand in sorted {
        out.extend_from_slice(
            format!(">ccsa_len={}_score={}\n", cand.total_length, cand.score).as_bytes(),
        );
        for chunk in cand.full_sequence.as_bytes().chunks(FASTA_LINE_WIDTH) {
            out.extend_from_slice(chunk);
            out.push(b'\n');
        }
    }
    out
}

/// Parse a `ccsa_len=<L>_score=<S>` consensus header back into (length, score).
pub fn parse_consensus_header(name: &str) -> Option<(usize, u64)> {
    let rest = name.strip_prefix("ccsa_len=")?;
    let (len, score) = rest.split_once("_score=")?;
    Some((len.parse().ok()?, score.parse().ok()?))
}

/// Serialize reads as 4-line FASTQ. Reads without a stored quality string
/// get a constant dummy quality.
pub fn write_fastq(reads: &[Read]) -> Vec<u8> {
    let mut out = Vec::new();
    for read in reads {
        out.push(b'@');
        out.extend_from_slice(read.id.as_bytes());
        out.push(b'\n');
        out.extend_from_slice(read.seq.as_bytes());
        out.extend_from_slice(b"\n+\n");
        match &read.qual {
            Some(q) => out.extend_from_slice(q.as_bytes()),
            None => out.extend(std::iter::repeat(b'I').take(read.seq.len())),
        }
        out.push(b'\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fastq_minimal_record() {
        let parsed = parse_fastq(&b"@r1\nACGT\n+\n!!!!\n"[..]).unwrap();
        assert_eq!(parsed.dropped, 0);
        assert_eq!(parsed.reads.len(), 1);
        assert_eq!(parsed.reads[0].id, "r1");
        assert_eq!(parsed.reads[0].seq.as_bytes(), b"ACGT");
        assert_eq!(parsed.reads[0].qual.as_deref(), Some("!!!!"));
    }

    #[test]
    fn fastq_drops_ambiguous_reads() {
        let parsed = parse_fastq(&b"@r1\nACNT\n+\n!!!!\n@r2\nGGGG\n+\n!!!!\n"[..]).unwrap();
        assert_eq!(parsed.dropped, 1);
        assert_eq!(parsed.reads.len(), 1);
        assert_eq!(parsed.reads[0].id, "r2");
    }

    #[test]
    fn fastq_lowercase_is_canonicalized() {
        let parsed = parse_fastq(&b"@r1\nacgt\n+\n!!!!\n"[..]).unwrap();
        assert_eq!(parsed.reads[0].seq.as_bytes(), b"ACGT");
    }

    #[test]
    fn fastq_truncated_record_names_offset() {
        // first record is 16 bytes; the second starts at offset 16 and is cut short
        let err = parse_fastq(&b"@r1\nACGT\n+\n!!!!\n@r2\nACGT\n"[..]).unwrap_err();
        match err {
            Error::TruncatedFastq { offset } => assert_eq!(offset, 16),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn fastq_qual_length_mismatch_is_fatal() {
        let err = parse_fastq(&b"@r1\nACGT\n+\n!!!\n"[..]).unwrap_err();
        assert!(matches!(err, Error::MalformedFastq { .. }));
    }

    #[test]
    fn fasta_wrapped_lines_concatenate() {
        let recs = parse_fasta(&b">left\nCCAAC\nAACAA\n"[..]).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].name, "left");
        assert_eq!(recs[0].seq.as_bytes(), b"CCAACAACAA");
    }

    #[test]
    fn fasta_content_before_header_is_fatal() {
        let err = parse_fasta(&b"ACGT\n>x\nACGT\n"[..]).unwrap_err();
        assert!(matches!(err, Error::FastaLeadingContent));
    }

    #[test]
    fn fasta_empty_body_is_fatal() {
        let err = parse_fasta(&b">x\n>y\nACGT\n"[..]).unwrap_err();
        assert!(matches!(err, Error::FastaEmptyBody { .. }));
    }

    #[test]
    fn fasta_bad_symbol_is_fatal() {
        let err = parse_fasta(&b">x\nACNT\n"[..]).unwrap_err();
        assert!(matches!(err, Error::BadSymbol { symbol: 'N', .. }));
    }

    fn candidate(seq: &str, score: u64) -> ConsensusCandidate {
        let full = DnaSeq::from_bytes(seq.as_bytes()).unwrap();
        ConsensusCandidate {
            total_length: full.len(),
            payload: full.clone(),
            full_sequence: full,
            score,
        }
    }

    #[test]
    fn consensus_writer_empty_list_is_empty_output() {
        assert!(write_fasta_consensus(&[]).is_empty());
    }

    #[test]
    fn consensus_writer_orders_by_length() {
        let a = candidate(&"A".repeat(900), 5);
        let b = candidate(&"C".repeat(899), 1);
        let out = write_fasta_consensus(&[a, b]);
        let text = String::from_utf8(out).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, ">ccsa_len=899_score=1");
    }

    #[test]
    fn consensus_writer_wraps_at_80() {
        let c = candidate(&"G".repeat(120), 7);
        let out = write_fasta_consensus(&[c]);
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].len(), 80);
        assert_eq!(lines[2].len(), 40);
    }

    #[test]
    fn consensus_header_round_trip() {
        assert_eq!(parse_consensus_header("ccsa_len=984_score=12345"), Some((984, 12345)));
        assert_eq!(parse_consensus_header("other"), None);
    }

    proptest! {
        #[test]
        fn parsed_fastq_reads_are_pure_acgt(records in proptest::collection::vec(("[A-Za-z]{1,8}", "[ACGTNacgtn]{1,40}"), 0..8)) {
            let mut input = Vec::new();
            for (id, seq) in &records {
                input.extend_from_slice(format!("@{id}\n{seq}\n+\n{}\n", "I".repeat(seq.len())).as_bytes());
            }
            let parsed = parse_fastq(&input[..]).unwrap();
            prop_assert_eq!(parsed.reads.len() + parsed.dropped, records.len());
            for read in &parsed.reads {
                prop_assert!(read.seq.iter().all(|b| matches!(b, b'A' | b'C' | b'G' | b'T')));
            }
        }

        #[test]
        fn consensus_fasta_round_trips(seqs in proptest::collection::vec(("[ACGT]{1,200}", 0u64..1000), 0..6)) {
            let cands: Vec<ConsensusCandidate> = seqs
                .iter()
                .map(|(s, score)| candidate(s, *score))
                .collect();
            let bytes = write_fasta_consensus(&cands);
            let parsed = parse_fasta(&bytes[..]).unwrap();
            prop_assert_eq!(parsed.len(), cands.len());

            let mut expect: Vec<&ConsensusCandidate> = cands.iter().collect();
            expect.sort_by(|a, b| a.total_length.cmp(&b.total_length).then(b.score.cmp(&a.score)));
            for (rec, cand) in parsed.iter().zip(expect) {
                let (len, score) = parse_consensus_header(&rec.name).unwrap();
                prop_assert_eq!(len, cand.total_length);
                prop_assert_eq!(score, cand.score);
                prop_assert_eq!(rec.seq.as_bytes(), cand.full_sequence.as_bytes());
            }
        }
    }
}
