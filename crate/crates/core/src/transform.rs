//! The polarizing transform `G_N = B_N F^{(x)n}` over GF(2).

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};

/// A block of `N = 2^n` bits, one bit per byte.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct BitBlock(Vec<u8>);

impl TryFrom<Vec<u8>> for BitBlock {
    type Error = crate::Error;

    fn try_from(bits: Vec<u8>) -> Result<Self> {
        BitBlock::new(bits)
    }
}

impl From<BitBlock> for Vec<u8> {
    fn from(b: BitBlock) -> Self {
        b.0
    }
}

impl BitBlock {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if !bits.len().is_power_of_two() {
            return Err(usage(format!("block length {} is not a power of two", bits.len())));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(usage("bit values must be 0 or 1"));
        }
        Ok(BitBlock(bits))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        BitBlock::new(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.0
    }

    pub fn xor(&self, other: &BitBlock) -> Result<BitBlock> {
        if self.len() != other.len() {
            return Err(usage("xor of blocks with different lengths"));
        }
        Ok(BitBlock(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect()))
    }
}

/// `log2(n)` for a power of two.
pub fn log2_exact(n: usize) -> Result<u32> {
    if n.is_power_of_two() {
        Ok(n.trailing_zeros())
    } else {
        Err(usage(format!("{n} is not a power of two")))
    }
}

/// Reverse the low `bits` bits of `i`.
pub fn reverse_bits(i: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - bits)
    }
}

/// The bit-reversal permutation of `[2^n]`: position `i` holds `rev_n(i)`.
pub fn bit_reversal_perm(n: u32) -> Vec<usize> {
    (0..1usize << n).map(|i| reverse_bits(i, n)).collect()
}

/// `u G_N` for a row vector `u`.
pub fn apply_transform(u: &BitBlock) -> BitBlock {
    let mut bits = u.0.clone();
    transform_in_place(&mut bits);
    BitBlock(bits)
}

/// In-place `u <- u G_N`: a bit-reversal pass followed by the `F^{(x)n}` butterflies.
///
/// Panics if the length is not a power of two.
pub fn transform_in_place(bits: &mut [u8]) {
    let n = bits.len();
    assert!(n.is_power_of_two(), "length {n} is not a power of two");
    let levels = n.trailing_zeros();
    for i in 0..n {
        let j = reverse_bits(i, levels);
        if i < j {
            bits.swap(i, j);
        }
    }
    // row vector times F = [[1,0],[1,1]]: (a, b) -> (a ^ b, b)
    let mut half = 1;
    while half < n {
        for block in bits.chunks_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
}
