//! Error type shared across the pipeline.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid nucleotide {symbol:?} in {context}")]
    BadSymbol { symbol: char, context: String },

    #[error("truncated FASTQ record starting at byte offset {offset}")]
    TruncatedFastq { offset: u64 },

    #[error("malformed FASTQ record at byte offset {offset}: {what}")]
    MalformedFastq { offset: u64, what: String },

    #[error("FASTA: sequence data before the first '>' header")]
    FastaLeadingContent,

    #[error("FASTA: record {name:?} has an empty sequence body")]
    FastaEmptyBody { name: String },

    #[error("FASTA: record with an empty name")]
    FastaEmptyName,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("no usable reads after length filtering and primer trimming")]
    NoUsableReads,

    #[error(
        "no connected anchored graph for any K in [{k_min}, {k_max}]; per-K diagnostics:\n{diagnostics}"
    )]
    NoAnchoredGraph {
        k_min: usize,
        k_max: usize,
        diagnostics: String,
    },

    #[error("anchor kmer not found in the {side} primer")]
    AnchorNotFound { side: &'static str },

    #[error("coverage {coverage} exceeds the {available} reads available after length filtering")]
    CoverageTooLarge { coverage: usize, available: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for pipeline-fatal conditions,
    /// 1 for usage and input-parse errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoUsableReads | Error::NoAnchoredGraph { .. } | Error::AnchorNotFound { .. } => {
                2
            }
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
