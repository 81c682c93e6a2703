//! Layouts of rich sequences.
//!
//! The shortlex layout writes every binary word in shortlex order
//! (`0, 1, 00, 01, 10, 11, 000, ...`) one after the other starting at index 1.
//! The sparse layout writes the `j`-th shortlex word at index `64 (j+1)^2`
//! over a Sturmian background, so the words occupy a vanishing fraction of
//! every symmetric window.
//!
//! In both layouts a word `w` reappears as the prefix of every longer word
//! `w·x`, which gives an explicit increasing list of occurrences.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Bit, BitSequence, Descriptor};

/// Total length of the shortlex blocks of word lengths `1..=len`:
/// `sum_{l <= len} l 2^l = (len - 1) 2^{len + 1} + 2`.
fn block_total(len: u64) -> BigInt {
    if len == 0 {
        return BigInt::zero();
    }
    (BigInt::from(len - 1) << (len as usize + 1)) + 2
}

fn block_total_u128(len: u32) -> u128 {
    if len == 0 {
        return 0;
    }
    ((len as u128 - 1) << (len + 1)) + 2
}

fn word_bit(value: &BigInt, len: u64, pos: u64) -> Bit {
    value.bit(len - 1 - pos) as Bit
}

/// Bit of the shortlex rich sequence at `k`.
pub fn shortlex_bit(k: &BigInt) -> Bit {
    if !k.is_positive() {
        return 0;
    }
    let p = k - 1u32;
    if let Some(p) = p.to_u128().filter(|p| *p < 1 << 100) {
        // smallest len with block_total(len) > p
        let (mut lo, mut hi) = (1u32, 101u32);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if block_total_u128(mid) > p {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let off = p - block_total_u128(lo - 1);
        let (x, b) = (off / lo as u128, off % lo as u128);
        return ((x >> (lo as u128 - 1 - b)) & 1) as Bit;
    }
    let (mut lo, mut hi) = (1u64, p.bits() + 2);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if block_total(mid) > p {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let off = &p - block_total(lo - 1);
    let (x, b) = off.div_rem(&BigInt::from(lo));
    word_bit(&x, lo, b.to_u64().expect("bit position below word length"))
}

const SPARSE_SPACING: u32 = 64;

/// Length and value of the `j`-th shortlex word.
fn shortlex_word(j: &BigInt) -> (u64, BigInt) {
    let j2 = j + 2u32;
    let len = j2.bits() - 1;
    let value = j2 - (BigInt::one() << len as usize);
    (len, value)
}

/// Bit of the sparse word layout at `k`, or `None` outside every word.
pub fn sparse_bit(k: &BigInt) -> Option<Bit> {
    if k < &BigInt::from(SPARSE_SPACING) {
        return None;
    }
    let m = (k / SPARSE_SPACING).sqrt();
    let start = &m * &m * SPARSE_SPACING;
    let (len, value) = shortlex_word(&(&m - 1u32));
    let pos = k - start;
    if pos.is_negative() || pos >= BigInt::from(len) {
        return None;
    }
    Some(word_bit(&value, len, pos.to_u64().expect("small offset")))
}

/// Where the words of a rich layout start.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WordLayout {
    Shortlex,
    Sparse,
}

impl WordLayout {
    pub fn of(seq: &BitSequence) -> Option<Self> {
        match seq.descriptor() {
            Descriptor::Rich => Some(WordLayout::Shortlex),
            Descriptor::RichSturmian(_) => Some(WordLayout::Sparse),
            _ => None,
        }
    }

    /// Index of the first bit of the word of length `len` with binary value
    /// `value`.
    pub fn word_start(self, len: u64, value: &BigInt) -> BigInt {
        match self {
            WordLayout::Shortlex => 1 + block_total(len - 1) + BigInt::from(len) * value,
            WordLayout::Sparse => {
                let j = (BigInt::one() << len as usize) - 2 + value;
                let j1 = j + 1;
                &j1 * &j1 * SPARSE_SPACING
            }
        }
    }

    /// Start indices of `word` as a prefix of the layout's words, increasing.
    pub fn aligned_occurrences(self, word: &[Bit]) -> impl Iterator<Item = BigInt> + '_ {
        let base_len = word.len().max(1) as u64;
        let prefix = word
            .iter()
            .fold(BigInt::zero(), |acc, &b| (acc << 1) + BigInt::from(b));
        let word_len = word.len() as u64;
        (base_len..).flat_map(move |len| {
            let free = len - word_len;
            let head = &prefix << free as usize;
            let count = BigInt::one() << free as usize;
            num_iter_range(count).map(move |tail| self.word_start(len, &(&head + tail)))
        })
    }
}

fn num_iter_range(count: BigInt) -> impl Iterator<Item = BigInt> {
    let mut next = BigInt::zero();
    std::iter::from_fn(move || {
        if next >= count {
            return None;
        }
        let out = next.clone();
        next += 1;
        Some(out)
    })
}
