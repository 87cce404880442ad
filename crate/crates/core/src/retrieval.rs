//! Static `r`-bit retrieval over fuse graphs.
//!
//! Each key hashes to a fuse edge. Building solves, for every key `x`,
//! `z[v_0] ^ ... ^ z[v_{k-1}] = value(x)` over the edge `{v_t}` of `x`, by
//! peeling the key graph and assigning cells in reverse peel order. A query
//! XORs the `k` cells of its edge. Keys outside the build set get an
//! arbitrary value.
//!
//! # Edge derivation
//!
//! `(hi, lo) = xxh3_128(key, seed)`. The edge type is `hi mod ell` and offset
//! `t` is `mix(lo, t) mod n`, with [`rng::mix`] the SplitMix64-based mixer.
//!
//! # Serialized format
//!
//! All integers little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4 | magic `FUSR` |
//! | 1 | version (1) |
//! | 1 | k |
//! | 1 | r_bits |
//! | 1 | reserved (0) |
//! | 4 | ell (u32) |
//! | 8 | n, segment size (u64) |
//! | 8 | m, key count (u64) |
//! | 8 | c (IEEE-754 double) |
//! | 8 | successful seed (u64) |
//! | 8·W | cells, `W = ceil(cells·r_bits/64)` u64 words |
//! | 8 | CRC-64/XZ of all preceding bytes |
//!
//! Cell `v` occupies bits `v·r .. (v+1)·r` of the word stream, least
//! significant bit first. CRC-64/XZ uses the ECMA-182 polynomial
//! `0x42F0E1EBA9EA3693`, reflected, with init and xorout `0xFFFFFFFFFFFFFFFF`.

use crc::{Crc, CRC_64_XZ};
use serde::Serialize;
use thiserror::Error;
use xxhash_rust::xxh3::{xxh3_128_with_seed, xxh3_64};

use crate::exec::Execution;
use crate::hypergraph::{zeroed, FuseEdge, Hypergraph, SegmentLayout};
use crate::peeler::peel_sequential;
use crate::rng;
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"FUSR";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 44;
pub const CHECKSUM_LEN: usize = 8;

const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic {0:02x?}")]
    MagicMismatch([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("truncated: need {needed} bytes, have {got}")]
    Truncated { needed: usize, got: usize },
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
    #[error("checksum mismatch: stored {stored:016x}, computed {computed:016x}")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("invalid header: {0}")]
    InvalidHeader(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RetrievalParams {
    pub k: usize,
    pub c: f64,
    pub ell: usize,
    /// Bits per value, 1 to 64.
    pub r_bits: u32,
    /// Attempts after the first before giving up.
    pub max_retries: u32,
    pub seed: u64,
}

impl RetrievalParams {
    pub fn new(k: usize, c: f64, ell: usize, r_bits: u32) -> Self {
        Self { k, c, ell, r_bits, max_retries: 100, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(3..=u8::MAX as usize).contains(&self.k) {
            return Err(Error::InvalidParams(format!("k must be in 3..=255, got {}", self.k)));
        }
        if self.ell < 1 || self.ell > u32::MAX as usize {
            return Err(Error::InvalidParams(format!("ell must be in 1..=2^32-1, got {}", self.ell)));
        }
        if !(1..=64).contains(&self.r_bits) {
            return Err(Error::InvalidParams(format!("r_bits must be in 1..=64, got {}", self.r_bits)));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidParams(format!("c must be positive, got {}", self.c)));
        }
        let density = self.c * self.ell as f64 / (self.ell + self.k - 1) as f64;
        if density >= 1.0 {
            return Err(Error::InvalidParams(format!(
                "edge density {density} >= 1: more equations than cells"
            )));
        }
        Ok(())
    }

    /// Segment size for `m` keys: `ceil(m / (c·ell))`.
    pub fn segment_size(&self, m: usize) -> u64 {
        (m as f64 / (self.c * self.ell as f64)).ceil() as u64
    }

    fn mask(&self) -> u64 {
        value_mask(self.r_bits)
    }
}

fn value_mask(r_bits: u32) -> u64 {
    if r_bits == 64 {
        u64::MAX
    } else {
        (1u64 << r_bits) - 1
    }
}

/// The edge of `key` under `seed` in a fuse graph with `n`-vertex segments.
pub fn edge_of(key: &[u8], seed: u64, k: usize, ell: usize, n: u64) -> FuseEdge {
    let h = xxh3_128_with_seed(key, seed);
    let (hi, lo) = ((h >> 64) as u64, h as u64);
    FuseEdge {
        ty: (hi % ell as u64) as usize,
        offsets: (0..k as u64).map(|t| rng::mix(lo, t) % n).collect(),
    }
}

/// Seed for attempt `i`.
pub fn attempt_seed(seed: u64, attempt: u32) -> u64 {
    rng::mix(seed, attempt as u64)
}

/// Fixed-width cells packed into little-endian `u64` words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackedCells {
    width: u32,
    len: usize,
    words: Vec<u64>,
}

impl PackedCells {
    pub fn new(width: u32, len: usize) -> Self {
        assert!((1..=64).contains(&width));
        let words = vec![0; (len * width as usize).div_ceil(64)];
        Self { width, len, words }
    }

    fn from_words(width: u32, len: usize, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), (len * width as usize).div_ceil(64));
        Self { width, len, words }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        debug_assert!(i < self.len);
        let w = self.width as usize;
        let bit = i * w;
        let (word, shift) = (bit / 64, bit % 64);
        let mut v = self.words[word] >> shift;
        if shift + w > 64 {
            v |= self.words[word + 1] << (64 - shift);
        }
        v & value_mask(self.width)
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: u64) {
        debug_assert!(i < self.len);
        let w = self.width as usize;
        let mask = value_mask(self.width);
        let value = value & mask;
        let bit = i * w;
        let (word, shift) = (bit / 64, bit % 64);
        self.words[word] = (self.words[word] & !(mask << shift)) | (value << shift);
        if shift + w > 64 {
            let spill = 64 - shift;
            self.words[word + 1] =
                (self.words[word + 1] & !(mask >> spill)) | (value >> spill);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RetrievalStructure {
    params: RetrievalParams,
    successful_seed: u64,
    n: u64,
    m: u64,
    cells: PackedCells,
}

/// What happened during a build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BuildStats {
    /// Attempts made, including the successful one.
    pub attempts: u32,
}

impl RetrievalStructure {
    /// Builds a structure mapping each key to its value. Keys must be distinct.
    pub fn build<K: AsRef<[u8]> + Sync>(pairs: &[(K, u64)], params: &RetrievalParams) -> Result<Self> {
        Self::build_with(pairs, params, Execution::default()).map(|(s, _)| s)
    }

    pub fn build_with<K: AsRef<[u8]> + Sync>(
        pairs: &[(K, u64)],
        params: &RetrievalParams,
        exec: Execution,
    ) -> Result<(Self, BuildStats)> {
        params.validate()?;
        if let Some((_, v)) = pairs.iter().find(|(_, v)| v & !params.mask() != 0) {
            return Err(Error::InvalidParams(format!(
                "value {v:#x} does not fit in {} bits",
                params.r_bits
            )));
        }
        let m = pairs.len();
        let n = params.segment_size(m);
        let layout = SegmentLayout { n, ell: params.ell, k: params.k };
        let num_cells = layout.num_vertices()?;
        if num_cells.checked_mul(params.r_bits as u64).is_none() {
            return Err(Error::Capacity(format!("{num_cells} cells of {} bits", params.r_bits)));
        }
        let k = params.k;

        if m == 0 {
            let s = Self {
                params: *params,
                successful_seed: attempt_seed(params.seed, 0),
                n,
                m: 0,
                cells: PackedCells::new(params.r_bits, 0),
            };
            return Ok((s, BuildStats { attempts: 1 }));
        }

        let attempts = params.max_retries.saturating_add(1);
        let mut incidences = zeroed(m.saturating_mul(k))?;
        for attempt in 0..attempts {
            let seed = attempt_seed(params.seed, attempt);
            exec.for_each_chunk(&mut incidences, k, |i, out| {
                let e = edge_of(pairs[i].0.as_ref(), seed, k, params.ell, n);
                for (t, slot) in out.iter_mut().enumerate() {
                    *slot = e.vertex(t, n);
                }
            });
            let h = Hypergraph::new(num_cells, k, std::mem::take(&mut incidences))?
                .with_layout(layout)?;
            let peel = peel_sequential(&h);
            if !peel.is_peelable() {
                incidences = h.into_incidences();
                continue;
            }

            let mut z = vec![0u64; num_cells as usize];
            for rec in peel.peel_order.iter().rev() {
                let Some(e) = rec.edge else { continue };
                let acc = h
                    .edge(e)
                    .iter()
                    .filter(|&&w| w != rec.vertex)
                    .fold(pairs[e].1, |acc, &w| acc ^ z[w as usize]);
                z[rec.vertex as usize] = acc;
            }
            let mut cells = PackedCells::new(params.r_bits, z.len());
            for (i, &v) in z.iter().enumerate() {
                cells.set(i, v);
            }
            let s = Self { params: *params, successful_seed: seed, n, m: m as u64, cells };
            return Ok((s, BuildStats { attempts: attempt + 1 }));
        }
        Err(Error::BuildFailed { attempts })
    }

    /// XOR of the cells at the key's edge.
    pub fn query(&self, key: &[u8]) -> u64 {
        if self.cells.is_empty() {
            return 0;
        }
        let e = edge_of(key, self.successful_seed, self.params.k, self.params.ell, self.n);
        (0..self.params.k).fold(0, |acc, t| acc ^ self.cells.get(e.vertex(t, self.n) as usize))
    }

    pub fn params(&self) -> &RetrievalParams {
        &self.params
    }

    pub fn successful_seed(&self) -> u64 {
        self.successful_seed
    }

    /// Segment size.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of keys encoded.
    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &PackedCells {
        &self.cells
    }

    /// `cells / m - 1`: space beyond one `r`-bit cell per key.
    pub fn raw_overhead(&self) -> f64 {
        self.num_cells() as f64 / self.m as f64 - 1.0
    }

    /// `(cells·r + header_bits) / (m·r) - 1`, counting the fixed header and
    /// checksum.
    pub fn total_overhead(&self) -> f64 {
        let r = self.params.r_bits as f64;
        let header_bits = ((HEADER_LEN + CHECKSUM_LEN) * 8) as f64;
        (self.num_cells() as f64 * r + header_bits) / (self.m as f64 * r) - 1.0
    }

    pub fn serialized_len(&self) -> usize {
        HEADER_LEN + 8 * self.cells.words.len() + CHECKSUM_LEN
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.params.k as u8);
        out.push(self.params.r_bits as u8);
        out.push(0);
        out.extend_from_slice(&(self.params.ell as u32).to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.m.to_le_bytes());
        out.extend_from_slice(&self.params.c.to_le_bytes());
        out.extend_from_slice(&self.successful_seed.to_le_bytes());
        for w in &self.cells.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        let sum = CRC64.checksum(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        out
    }

    /// Parses the serialized form. `max_retries` and the base seed are not
    /// stored and come back as their defaults.
    pub fn deserialize(bytes: &[u8]) -> Result<Self, FormatError> {
        let need = |needed: usize| {
            if bytes.len() < needed {
                Err(FormatError::Truncated { needed, got: bytes.len() })
            } else {
                Ok(())
            }
        };
        need(4)?;
        let magic: [u8; 4] = bytes[..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(FormatError::MagicMismatch(magic));
        }
        need(5)?;
        if bytes[4] != VERSION {
            return Err(FormatError::UnsupportedVersion(bytes[4]));
        }
        need(HEADER_LEN)?;
        let u64_at = |off: usize| u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let k = bytes[5] as usize;
        let r_bits = bytes[6] as u32;
        if bytes[7] != 0 {
            return Err(FormatError::InvalidHeader(format!("reserved byte {}", bytes[7])));
        }
        let ell = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let n = u64_at(12);
        let m = u64_at(20);
        let c = f64::from_le_bytes(bytes[28..36].try_into().unwrap());
        let successful_seed = u64_at(36);

        let params = RetrievalParams { k, c, ell, r_bits, max_retries: 100, seed: 0 };
        params.validate().map_err(|e| FormatError::InvalidHeader(e.to_string()))?;
        let total = n
            .checked_mul((ell + k - 1) as u64)
            .and_then(|cells| cells.checked_mul(r_bits as u64))
            .map(|bits| bits.div_ceil(64))
            .and_then(|words| words.checked_mul(8))
            .and_then(|b| b.checked_add((HEADER_LEN + CHECKSUM_LEN) as u64))
            .filter(|&t| t <= usize::MAX as u64)
            .ok_or_else(|| FormatError::InvalidHeader(format!("n={n} is too large")))?
            as usize;
        let num_cells = (n * (ell + k - 1) as u64) as usize;
        let num_words = (total - HEADER_LEN - CHECKSUM_LEN) / 8;
        need(total)?;
        if bytes.len() > total {
            return Err(FormatError::TrailingBytes(bytes.len() - total));
        }
        let stored = u64_at(total - CHECKSUM_LEN);
        let computed = CRC64.checksum(&bytes[..total - CHECKSUM_LEN]);
        if stored != computed {
            return Err(FormatError::ChecksumMismatch { stored, computed });
        }
        let words = (0..num_words).map(|i| u64_at(HEADER_LEN + 8 * i)).collect();
        Ok(Self {
            params,
            successful_seed,
            n,
            m,
            cells: PackedCells::from_words(r_bits, num_cells, words),
        })
    }
}

/// `count` distinct synthetic keys derived from `seed`.
pub fn synthetic_keys(count: usize, seed: u64) -> Vec<String> {
    (0..count as u64).map(|i| format!("key-{i:010}-{:016x}", rng::mix(seed, i))).collect()
}

/// Default value of a key when none is given: the low `r_bits` bits of its
/// 64-bit xxh3 hash.
pub fn default_value(key: &[u8], r_bits: u32) -> u64 {
    xxh3_64(key) & value_mask(r_bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(m: usize, r_bits: u32, seed: u64) -> Vec<(String, u64)> {
        synthetic_keys(m, seed)
            .into_iter()
            .enumerate()
            .map(|(i, k)| (k, rng::mix(seed ^ 0xabc, i as u64) & value_mask(r_bits)))
            .collect()
    }

    #[test]
    fn edge_of_is_deterministic() {
        let a = edge_of(b"hello", 7, 3, 100, 1000);
        assert_eq!(a, edge_of(b"hello", 7, 3, 100, 1000));
        assert_ne!(a, edge_of(b"hello", 8, 3, 100, 1000));
        assert!(a.ty < 100 && a.offsets.iter().all(|&o| o < 1000));
        assert!((0..1000).all(|i| edge_of(format!("{i}").as_bytes(), 1, 4, 1, 50).ty == 0));
    }

    #[test]
    fn packed_cells_straddle_words() {
        for width in [1, 3, 7, 13, 31, 33, 63, 64] {
            let mut p = PackedCells::new(width, 200);
            let mask = value_mask(width);
            for i in 0..200 {
                p.set(i, rng::mix(width as u64, i as u64));
            }
            for i in 0..200 {
                assert_eq!(p.get(i), rng::mix(width as u64, i as u64) & mask, "w={width} i={i}");
            }
            p.set(5, 0);
            assert_eq!(p.get(5), 0);
            assert_eq!(p.get(4), rng::mix(width as u64, 4) & mask);
            assert_eq!(p.get(6), rng::mix(width as u64, 6) & mask);
        }
    }

    #[test]
    fn empty_build() {
        let s = RetrievalStructure::build::<&[u8]>(&[], &RetrievalParams::new(3, 0.91, 100, 1)).unwrap();
        assert_eq!(s.num_cells(), 0);
        assert_eq!(s.m(), 0);
        let _ = s.query(b"anything");
        let bytes = s.serialize();
        assert_eq!(bytes.len(), HEADER_LEN + CHECKSUM_LEN);
        assert_eq!(RetrievalStructure::deserialize(&bytes).unwrap().serialize(), bytes);
    }

    #[test]
    fn small_builds_are_exact() {
        for (r_bits, m) in [(1, 1), (1, 1000), (8, 5000), (64, 3000), (17, 10)] {
            let p = RetrievalParams { seed: r_bits as u64, ..RetrievalParams::new(3, 0.88, 20, r_bits) };
            let data = pairs(m, r_bits, 3);
            let s = RetrievalStructure::build(&data, &p).unwrap();
            for (k, v) in &data {
                assert_eq!(s.query(k.as_bytes()), *v);
            }
            assert_eq!(s.num_cells() as u64, 22 * p.segment_size(m));
        }
    }

    #[test]
    fn rejects_bad_params() {
        let data = pairs(10, 1, 0);
        let too_dense = RetrievalParams::new(3, 2.0, 3, 1);
        assert!(matches!(RetrievalStructure::build(&data, &too_dense), Err(Error::InvalidParams(_))));
        assert!(RetrievalStructure::build(&data, &RetrievalParams::new(3, 0.9, 10, 0)).is_err());
        assert!(RetrievalStructure::build(&data, &RetrievalParams::new(3, 0.9, 10, 65)).is_err());
        assert!(RetrievalStructure::build(&data, &RetrievalParams::new(2, 0.9, 10, 1)).is_err());
        let wide = vec![("x", 2u64)];
        assert!(RetrievalStructure::build(&wide, &RetrievalParams::new(3, 0.9, 10, 1)).is_err());
    }

    #[test]
    fn duplicate_keys_fail_to_build() {
        let data = vec![("same", 0u64), ("same", 1), ("other", 1)];
        let p = RetrievalParams { max_retries: 5, ..RetrievalParams::new(3, 0.5, 4, 1) };
        assert!(matches!(
            RetrievalStructure::build(&data, &p),
            Err(Error::BuildFailed { attempts: 6 })
        ));
    }

    #[test]
    fn retries_change_the_edges() {
        let a = edge_of(b"k", attempt_seed(1, 0), 3, 100, 1000);
        let b = edge_of(b"k", attempt_seed(1, 1), 3, 100, 1000);
        assert_ne!(a, b);
    }

    #[test]
    fn format_errors() {
        let data = pairs(500, 5, 1);
        let s = RetrievalStructure::build(&data, &RetrievalParams::new(3, 0.9, 10, 5)).unwrap();
        let bytes = s.serialize();
        assert_eq!(bytes.len(), s.serialized_len());

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(RetrievalStructure::deserialize(&bad), Err(FormatError::MagicMismatch(_))));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert_eq!(RetrievalStructure::deserialize(&bad), Err(FormatError::UnsupportedVersion(2)));
        assert!(matches!(
            RetrievalStructure::deserialize(&bytes[..bytes.len() - 1]),
            Err(FormatError::Truncated { .. })
        ));
        assert!(matches!(
            RetrievalStructure::deserialize(&bytes[..10]),
            Err(FormatError::Truncated { .. })
        ));
        let mut bad = bytes.clone();
        bad[HEADER_LEN + 3] ^= 1;
        assert!(matches!(
            RetrievalStructure::deserialize(&bad),
            Err(FormatError::ChecksumMismatch { .. })
        ));
        let mut bad = bytes.clone();
        bad.push(0);
        assert_eq!(RetrievalStructure::deserialize(&bad), Err(FormatError::TrailingBytes(1)));
    }

    #[test]
    fn crc_is_crc64_xz() {
        // Standard check value for "123456789".
        assert_eq!(CRC64.checksum(b"123456789"), 0x995d_c9bb_df19_39fa);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn serialization_round_trips(m in 0usize..400, r_bits in 1u32..=64, seed: u64) {
            let p = RetrievalParams { seed, ..RetrievalParams::new(4, 0.8, 2, r_bits) };
            let data = pairs(m, r_bits, seed);
            let s = RetrievalStructure::build(&data, &p).unwrap();
            let bytes = s.serialize();
            let back = RetrievalStructure::deserialize(&bytes).unwrap();
            prop_assert_eq!(back.serialize(), bytes);
            for (k, v) in &data {
                prop_assert_eq!(back.query(k.as_bytes()), *v);
            }
        }
    }
}
