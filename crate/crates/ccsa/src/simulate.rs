//! Read simulation: reference generation under a homopolymer cap and a
//! substitution/insertion/deletion channel standing in for long-read noise.
//!
//! All randomness is ChaCha-based and stream-split: the reference payload
//! uses stream 0 of the master seed, read `i` uses stream `i + 1`, so any
//! read is reproducible in isolation.

use crate::error::{Error, Result};
use crate::preprocess::PrimerPair;
use crate::seqio::{DnaSeq, Read};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BASES: [u8; 4] = [b'A', b'C', b'G', b'T'];

/// Per-base error probabilities of the i.i.d. channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorModel {
    pub p_sub: f64,
    pub p_ins: f64,
    pub p_del: f64,
}

impl ErrorModel {
    /// Each probability must lie in [0, 1] and their sum must not exceed 1
    /// (the all-delete channel is the permitted degenerate boundary).
    pub fn new(p_sub: f64, p_ins: f64, p_del: f64) -> Result<Self> {
        for (name, p) in [("p_sub", p_sub), ("p_ins", p_ins), ("p_del", p_del)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParam(format!("{name}={p} outside [0, 1]")));
            }
        }
        if p_sub + p_ins + p_del > 1.0 {
            return Err(Error::InvalidParam(format!(
                "error rates sum to {} > 1",
                p_sub + p_ins + p_del
            )));
        }
        Ok(ErrorModel { p_sub, p_ins, p_del })
    }

    /// The identity channel.
    pub fn error_free() -> Self {
        ErrorModel {
            p_sub: 0.0,
            p_ins: 0.0,
            p_del: 0.0,
        }
    }
}

/// Shape of the molecule to synthesize.
#[derive(Debug, Clone)]
pub struct MoleculeSpec {
    pub payload_len: usize,
    /// Maximum homopolymer run length, enforced inside the payload and
    /// across both primer junctions.
    pub hp_cap: usize,
    pub primers: PrimerPair,
}

impl MoleculeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.payload_len < 1 {
            return Err(Error::InvalidParam("payload_len must be >= 1".into()));
        }
        if self.hp_cap < 1 {
            return Err(Error::InvalidParam("hp_cap must be >= 1".into()));
        }
        Ok(())
    }

    /// left primer + payload + right primer.
    pub fn assemble(&self, payload: &DnaSeq) -> DnaSeq {
        let mut m = self.primers.left.to_vec();
        m.extend_from_slice(payload);
        m.extend_from_slice(&self.primers.right);
        DnaSeq::from_validated(m)
    }
}

fn trailing_run(seq: &[u8]) -> (u8, usize) {
    match seq.last() {
        None => (0, 0),
        Some(&last) => {
            let run = seq.iter().rev().take_while(|&&b| b == last).count();
            (last, run)
        }
    }
}

fn leading_run(seq: &[u8]) -> (u8, usize) {
    match seq.first() {
        None => (0, 0),
        Some(&first) => {
            let run = seq.iter().take_while(|&&b| b == first).count();
            (first, run)
        }
    }
}

/// Generate a uniform random payload whose homopolymer runs never exceed
/// `hp_cap`, including runs continuing out of the left primer or into the
/// right primer. Deterministic for a given seed.
pub fn generate_reference(spec: &MoleculeSpec, seed: u64) -> DnaSeq {
    spec.validate().expect("molecule spec validated by caller");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (mut run_char, mut run_len) = trailing_run(&spec.primers.left);
    let (right_char, right_run) = leading_run(&spec.primers.right);

    let mut payload = Vec::with_capacity(spec.payload_len);
    for i in 0..spec.payload_len {
        let last = i + 1 == spec.payload_len;
        let mut allowed: Vec<u8> = Vec::with_capacity(4);
        for &b in &BASES {
            let run_if_chosen = if b == run_char { run_len + 1 } else { 1 };
            if run_if_chosen > spec.hp_cap {
                continue;
            }
            if last && b == right_char && run_if_chosen + right_run > spec.hp_cap {
                continue;
            }
            allowed.push(b);
        }
        let b = allowed[rng.random_range(0..allowed.len())];
        if b == run_char {
            run_len += 1;
        } else {
            run_char = b;
            run_len = 1;
        }
        payload.push(b);
    }
    DnaSeq::from_validated(payload)
}

fn apply_channel(molecule: &[u8], model: &ErrorModel, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut out = Vec::with_capacity(molecule.len() + molecule.len() / 8);
    for &base in molecule {
        if rng.random_bool(model.p_del) {
            continue;
        }
        let emitted = if rng.random_bool(model.p_sub) {
            // uniform over the three other bases
            let others: [u8; 3] = match base {
                b'A' => [b'C', b'G', b'T'],
                b'C' => [b'A', b'G', b'T'],
                b'G' => [b'A', b'C', b'T'],
                _ => [b'A', b'C', b'G'],
            };
            others[rng.random_range(0..3)]
        } else {
            base
        };
        out.push(emitted);
        if rng.random_bool(model.p_ins) {
            out.push(BASES[rng.random_range(0..4)]);
        }
    }
    out
}

/// RNG for read `index` under `master_seed` (stream `index + 1`; stream 0
/// belongs to the reference).
fn read_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index + 1);
    rng
}

/// One noisy read of `molecule`, reproducible from (master seed, index).
pub fn mutate_read(molecule: &[u8], model: &ErrorModel, master_seed: u64, index: u64) -> Read {
    let mut rng = read_rng(master_seed, index);
    let seq = apply_channel(molecule, model, &mut rng);
    let qual = "I".repeat(seq.len());
    Read {
        id: format!("sim_{index}"),
        seq: DnaSeq::from_validated(seq),
        qual: Some(qual),
    }
}

/// `n_reads` independent reads of `molecule` in index order.
pub fn simulate_reads(
    molecule: &[u8],
    model: &ErrorModel,
    n_reads: usize,
    master_seed: u64,
) -> Vec<Read> {
    (0..n_reads)
        .map(|i| mutate_read(molecule, model, master_seed, i as u64))
        .collect()
}

/// A generated reference plus the reads simulated over it.
#[derive(Debug, Clone)]
pub struct SimulatedDataset {
    pub payload: DnaSeq,
    pub molecule: DnaSeq,
    pub reads: Vec<Read>,
}

impl SimulatedDataset {
    pub fn to_fastq(&self) -> Vec<u8> {
        crate::seqio::write_fastq(&self.reads)
    }
}

/// Generate a payload for `spec`, then simulate `n_reads` noisy reads of
/// primer + payload + primer.
pub fn simulate_dataset(
    spec: &MoleculeSpec,
    model: &ErrorModel,
    n_reads: usize,
    master_seed: u64,
) -> Result<SimulatedDataset> {
    spec.validate()?;
    let payload = generate_reference(spec, master_seed);
    let molecule = spec.assemble(&payload);
    let reads = simulate_reads(&molecule, model, n_reads, master_seed);
    Ok(SimulatedDataset {
        payload,
        molecule,
        reads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn primer(seq: &str) -> DnaSeq {
        DnaSeq::from_bytes(seq.as_bytes()).unwrap()
    }

    fn spec(payload_len: usize, hp_cap: usize, left: &str, right: &str) -> MoleculeSpec {
        MoleculeSpec {
            payload_len,
            hp_cap,
            primers: PrimerPair {
                left: primer(left),
                right: primer(right),
            },
        }
    }

    fn max_run(seq: &[u8]) -> usize {
        let mut best = 0;
        let mut cur = 0;
        let mut last = 0u8;
        for &b in seq {
            cur = if b == last { cur + 1 } else { 1 };
            last = b;
            best = best.max(cur);
        }
        best
    }

    #[test]
    fn hp_cap_one_strictly_alternates() {
        let spec = spec(200, 1, "ACGT", "TGCA");
        let payload = generate_reference(&spec, 7);
        assert!(payload.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn junctions_respect_the_cap() {
        // left ends with TT, right starts with CC; cap 2 forbids T first
        // and C last
        let spec = spec(50, 2, "ACGTT", "CCGTA");
        for seed in 0..200 {
            let payload = generate_reference(&spec, seed);
            assert_ne!(payload[0], b'T', "seed {seed}");
            assert_ne!(payload[payload.len() - 1], b'C', "seed {seed}");
            assert!(max_run(&payload) <= 2);
        }
    }

    #[test]
    fn zero_rates_are_the_identity_channel() {
        let spec = spec(120, 3, "ACGTACG", "TGCATGC");
        let payload = generate_reference(&spec, 3);
        let molecule = spec.assemble(&payload);
        let read = mutate_read(&molecule, &ErrorModel::error_free(), 9, 0);
        assert_eq!(read.seq.as_bytes(), molecule.as_bytes());
    }

    #[test]
    fn all_delete_channel_yields_empty_read() {
        let model = ErrorModel::new(0.0, 0.0, 1.0).unwrap();
        let read = mutate_read(b"ACGTACGT", &model, 1, 0);
        assert!(read.seq.is_empty());
    }

    #[test]
    fn rate_sum_above_one_is_rejected() {
        assert!(ErrorModel::new(0.5, 0.4, 0.2).is_err());
        assert!(ErrorModel::new(-0.1, 0.0, 0.0).is_err());
        assert!(ErrorModel::new(0.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn same_seed_same_fastq_bytes() {
        let spec = spec(80, 3, "ACGTACG", "TGCATGC");
        let model = ErrorModel::new(0.03, 0.03, 0.03).unwrap();
        let a = simulate_dataset(&spec, &model, 20, 42).unwrap();
        let b = simulate_dataset(&spec, &model, 20, 42).unwrap();
        assert_eq!(a.to_fastq(), b.to_fastq());
    }

    #[test]
    fn reads_are_reproducible_in_isolation() {
        let spec = spec(80, 3, "ACGTACG", "TGCATGC");
        let model = ErrorModel::new(0.05, 0.02, 0.04).unwrap();
        let ds = simulate_dataset(&spec, &model, 10, 7).unwrap();
        let lone = mutate_read(&ds.molecule, &model, 7, 5);
        assert_eq!(ds.reads[5], lone);
    }

    #[test]
    fn zero_rate_dataset_is_n_copies_of_the_molecule() {
        let spec = spec(60, 3, "ACGTACG", "TGCATGC");
        let ds = simulate_dataset(&spec, &ErrorModel::error_free(), 20, 5).unwrap();
        assert_eq!(ds.reads.len(), 20);
        assert!(ds.reads.iter().all(|r| r.seq == ds.molecule));
    }

    #[test]
    fn read_length_mean_tracks_the_molecule() {
        let spec = spec(900, 3, "ACGTACG", "TGCATGC");
        let model = ErrorModel::new(0.03, 0.03, 0.03).unwrap();
        let ds = simulate_dataset(&spec, &model, 100, 11).unwrap();
        let mean: f64 = ds.reads.iter().map(|r| r.seq.len() as f64).sum::<f64>() / 100.0;
        let expect = ds.molecule.len() as f64;
        assert!((mean - expect).abs() <= 0.02 * expect, "mean {mean} vs {expect}");
    }

    #[test]
    fn mean_edit_distance_matches_the_event_rate() {
        let spec = spec(600, 3, "ACGTACG", "TGCATGC");
        let model = ErrorModel::new(0.03, 0.03, 0.03).unwrap();
        let ds = simulate_dataset(&spec, &model, 400, 13).unwrap();
        let mean: f64 = ds
            .reads
            .iter()
            .map(|r| crate::harness::count_errors(&r.seq, &ds.molecule) as f64)
            .sum::<f64>()
            / 400.0;
        // expected edit events per base: del + (1-del)*sub + (1-del)*ins
        let per_base = 0.03 + 0.97 * 0.03 + 0.97 * 0.03;
        let expect = ds.molecule.len() as f64 * per_base;
        assert!(
            (mean - expect).abs() <= 0.05 * expect,
            "mean {mean} vs expected {expect}"
        );
    }

    proptest! {
        #[test]
        fn hp_cap_is_never_violated(
            seed in 0u64..1000,
            hp_cap in 1usize..4,
            payload_len in 20usize..120,
        ) {
            let spec = spec(payload_len, hp_cap, "ACGGT", "TTGCA");
            let payload = generate_reference(&spec, seed);
            prop_assert_eq!(payload.len(), payload_len);
            prop_assert!(max_run(&payload) <= hp_cap);
            // any run crossing a primer junction also respects the cap
            let molecule = spec.assemble(&payload);
            let run_across = |boundary: usize| -> usize {
                if molecule[boundary] != molecule[boundary - 1] {
                    return 0;
                }
                let c = molecule[boundary];
                let left = molecule[..boundary].iter().rev().take_while(|&&b| b == c).count();
                let right = molecule[boundary..].iter().take_while(|&&b| b == c).count();
                left + right
            };
            for boundary in [spec.primers.left.len(), spec.primers.left.len() + payload_len] {
                let crossing = run_across(boundary);
                prop_assert!(crossing == 0 || crossing <= hp_cap);
            }
        }
    }
}
