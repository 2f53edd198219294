//! Bit-string descriptors and the four agreement/disagreement tallies
//! between two of them.

use crate::error::{Error, Result};

/// Widest descriptor accepted. Keeps every count product exact in an `f64`.
pub const MAX_BITS: usize = 4096;

/// An immutable fixed-width bit string.
///
/// Bit `i` lives in bit `i % 8` of byte `i / 8` (little-endian within each
/// byte). Bits past `n_bits` in the last byte are always zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryDescriptor {
    bytes: Box<[u8]>,
    n_bits: usize,
}

impl BinaryDescriptor {
    /// Wraps `bytes` as an `n_bits`-wide descriptor, rejecting wrong lengths
    /// and set pad bits.
    pub fn from_bytes(bytes: impl Into<Vec<u8>>, n_bits: usize) -> Result<Self> {
        let bytes = bytes.into();
        if n_bits == 0 || n_bits > MAX_BITS {
            return Err(Error::InvalidDescriptor(format!(
                "width must be in 1..={MAX_BITS}, got {n_bits}"
            )));
        }
        if bytes.len() != n_bits.div_ceil(8) {
            return Err(Error::InvalidDescriptor(format!(
                "{n_bits} bits need {} bytes, got {}",
                n_bits.div_ceil(8),
                bytes.len()
            )));
        }
        let tail = n_bits % 8;
        if tail != 0 && bytes[bytes.len() - 1] >> tail != 0 {
            return Err(Error::InvalidDescriptor("pad bits are not zero".into()));
        }
        Ok(Self {
            bytes: bytes.into_boxed_slice(),
            n_bits,
        })
    }

    /// Builds a full-width descriptor from whole bytes (`n_bits = 8 * len`).
    pub fn from_full_bytes(bytes: impl Into<Vec<u8>>) -> Result<Self> {
        let bytes = bytes.into();
        let n = bytes.len() * 8;
        Self::from_bytes(bytes, n)
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let mut bytes = vec![0u8; bits.len().div_ceil(8)];
        for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
            bytes[i / 8] |= 1 << (i % 8);
        }
        Self::from_bytes(bytes, bits.len())
    }

    /// Parses a string of `0`/`1` characters; character `i` becomes bit `i`.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidDescriptor(format!(
                    "unexpected character {other:?} in bit string"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(&bits)
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.n_bits, "bit index {i} out of range");
        self.bytes[i / 8] >> (i % 8) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        popcount_bytes(&self.bytes)
    }
}

/// The four per-position tallies between two equal-width bit strings.
///
/// `f01` counts positions where the first string has 0 and the second 1;
/// `f10` the opposite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContingencyCounts {
    f00: u32,
    f01: u32,
    f10: u32,
    f11: u32,
}

impl ContingencyCounts {
    pub fn new(f00: u32, f01: u32, f10: u32, f11: u32) -> Result<Self> {
        let n = f00 as u64 + f01 as u64 + f10 as u64 + f11 as u64;
        if n == 0 || n > MAX_BITS as u64 {
            return Err(Error::InvalidDescriptor(format!(
                "counts must sum to 1..={MAX_BITS}, got {n}"
            )));
        }
        Ok(Self { f00, f01, f10, f11 })
    }

    /// Counts from the set-bit totals of each string and of their AND.
    /// Callers guarantee `f11 <= ones_a, ones_b` and `ones_a + ones_b - f11 <= n_bits`.
    pub(crate) fn from_overlap(n_bits: u32, ones_a: u32, ones_b: u32, f11: u32) -> Self {
        let f10 = ones_a - f11;
        let f01 = ones_b - f11;
        Self {
            f00: n_bits - f11 - f10 - f01,
            f01,
            f10,
            f11,
        }
    }

    pub fn f00(&self) -> u32 {
        self.f00
    }
    pub fn f01(&self) -> u32 {
        self.f01
    }
    pub fn f10(&self) -> u32 {
        self.f10
    }
    pub fn f11(&self) -> u32 {
        self.f11
    }

    pub fn n_bits(&self) -> u32 {
        self.f00 + self.f01 + self.f10 + self.f11
    }

    /// Number of disagreeing positions.
    pub fn mismatches(&self) -> u32 {
        self.f01 + self.f10
    }

    /// The counts seen from the other descriptor's side.
    pub fn swapped(&self) -> Self {
        Self {
            f00: self.f00,
            f01: self.f10,
            f10: self.f01,
            f11: self.f11,
        }
    }
}

/// Number of set bits in `bytes`.
pub fn popcount_bytes(bytes: &[u8]) -> usize {
    let mut chunks = bytes.chunks_exact(8);
    let mut total: usize = chunks
        .by_ref()
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()).count_ones() as usize)
        .sum();
    total += chunks
        .remainder()
        .iter()
        .map(|b| b.count_ones() as usize)
        .sum::<usize>();
    total
}

/// Computes `(f00, f01, f10, f11)` with word-wide AND/NOT and popcounts.
///
/// `f00` is derived by subtraction so zeroed pad bits are never counted.
pub fn contingency(a: &BinaryDescriptor, b: &BinaryDescriptor) -> Result<ContingencyCounts> {
    if a.n_bits != b.n_bits {
        return Err(Error::DescriptorLength {
            left: a.n_bits,
            right: b.n_bits,
        });
    }
    let (mut f11, mut f10, mut f01) = (0u32, 0u32, 0u32);
    let mut ca = a.bytes.chunks_exact(8);
    let mut cb = b.bytes.chunks_exact(8);
    for (x, y) in ca.by_ref().zip(cb.by_ref()) {
        let x = u64::from_le_bytes(x.try_into().unwrap());
        let y = u64::from_le_bytes(y.try_into().unwrap());
        f11 += (x & y).count_ones();
        f10 += (x & !y).count_ones();
        f01 += (!x & y).count_ones();
    }
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        f11 += (x & y).count_ones();
        f10 += (x & !y).count_ones();
        f01 += (!x & y).count_ones();
    }
    let f00 = a.n_bits as u32 - f11 - f10 - f01;
    Ok(ContingencyCounts { f00, f01, f10, f11 })
}
