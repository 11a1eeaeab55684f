//! Deterministic character-trigram feature hashing.
//!
//! Text is lowercased, whitespace is collapsed to single spaces and one space
//! pads each end. Every character trigram is hashed with seeded FNV-1a plus a
//! SplitMix64 finalizer and counted in the bucket it picks. Counts are
//! unsigned so a non-empty text never cancels to a zero vector. Results are
//! identical on every platform.

use ndarray::Array2;

use super::{EmbeddingError, EmbeddingProvider};
use crate::ontology::Iri;

const SEED: u64 = 0x5eed_a11e_c0de_2024;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    dimension: usize,
}

impl HashEmbedder {
    pub fn new(dimension: usize) -> Self {
        Self { dimension }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Unnormalized feature vector for one text.
    pub fn features(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        for gram in trigrams(text) {
            let h = hash_gram(&gram);
            v[(h % self.dimension as u64) as usize] += 1.0;
        }
        v
    }
}

/// Character trigrams of the normalized, space-padded text.
pub fn trigrams(text: &str) -> Vec<String> {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let padded: Vec<char> = format!(" {collapsed} ").chars().collect();
    padded.windows(3).map(|w| w.iter().collect()).collect()
}

fn hash_gram(gram: &str) -> u64 {
    let mut h = FNV_OFFSET ^ SEED;
    for b in gram.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    // SplitMix64 finalizer spreads FNV's weak low bits.
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

impl EmbeddingProvider for HashEmbedder {
    fn id(&self) -> String {
        format!("hash-trigram-{}", self.dimension)
    }

    fn embed_raw(&self, texts: &[(Iri, String)]) -> Result<Array2<f64>, EmbeddingError> {
        let mut out = Array2::zeros((texts.len(), self.dimension));
        for (i, (_, text)) in texts.iter().enumerate() {
            for (j, x) in self.features(text).into_iter().enumerate() {
                out[[i, j]] = x;
            }
        }
        Ok(out)
    }
}
