//! Finitely described bi-infinite 0-1 sequences.
//!
//! A [`BitSequence`] is an immutable, cheaply clonable descriptor that can be
//! evaluated at any integer index. Indices are arbitrary-precision because
//! cones sample sequences at `s_n + k`, and the exponents `s_n` leave the
//! machine word range after a few dozen terms.

mod family;
mod json;
pub mod rich;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::scaling::ScalingSet;

pub use family::{Family, FamilyKind, FamilyMember};
pub use json::{DescriptorJson, FamilyJson, FamilyKindJson, PatchJson};

/// A single sequence entry, always 0 or 1.
pub type Bit = u8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeqError {
    #[error("patch delegation exceeded its depth bound of {0} hops")]
    RecursionBudgetExceeded(usize),
    #[error("lazy cone value at index {0} did not stabilize")]
    UnstableLimit(BigInt),
    #[error("scaling set has no exponent {0}")]
    ScalingExhausted(usize),
    #[error("invalid descriptor: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Descriptor {
    Constant(Bit),
    /// `a_k = pattern[(k + offset) mod |pattern|]`.
    Periodic { pattern: Vec<Bit>, offset: i64 },
    /// `a_k = floor((k+1)t) - floor(kt)`.
    Sturmian(Rational64),
    /// `a_k = 1` iff `d | k`.
    DivisibleBy(u64),
    /// Zero on `k <= 0`, the shortlex concatenation of all binary words on
    /// `k >= 1`.
    Rich,
    /// `Sturmian(t)` with the `j`-th shortlex word written at `64 (j+1)^2`.
    RichSturmian(Rational64),
    SingleOnes(BTreeSet<i64>),
    /// `b_k = base_{k + by}`.
    Shifted { base: BitSequence, by: BigInt },
    Patched { base: BitSequence, patches: PatchFamily },
    Member(FamilyMember),
    /// `b_k = lim_n base_{s_n + k}`, evaluated lazily.
    ConeOf { base: BitSequence, scaling: ScalingSet },
}

/// Immutable sequence descriptor.
#[derive(Clone)]
pub struct BitSequence(Arc<Descriptor>);

impl PartialEq for BitSequence {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for BitSequence {}

impl fmt::Debug for BitSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One patch: on `[center - radius, center + radius]` the sequence reads
/// `source` at `k - center + source_offset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Patch {
    pub center: i64,
    pub radius: u64,
    pub source: BitSequence,
    pub source_offset: i64,
}

impl Patch {
    pub fn lo(&self) -> i64 {
        self.center - self.radius as i64
    }

    pub fn hi(&self) -> i64 {
        self.center + self.radius as i64
    }
}

/// Finitely many disjoint patches, sorted by left endpoint.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PatchFamily {
    intervals: Vec<Patch>,
}

impl PatchFamily {
    pub fn new(mut intervals: Vec<Patch>) -> Result<Self, SeqError> {
        intervals.sort_by_key(Patch::lo);
        for pair in intervals.windows(2) {
            if pair[1].lo() <= pair[0].hi() {
                return Err(SeqError::Invalid(format!(
                    "patches centred at {} and {} overlap",
                    pair[0].center, pair[1].center
                )));
            }
        }
        Ok(PatchFamily { intervals })
    }

    pub fn intervals(&self) -> &[Patch] {
        &self.intervals
    }

    fn find(&self, k: i64) -> Option<&Patch> {
        let p = self.intervals.partition_point(|iv| iv.lo() <= k);
        let iv = self.intervals.get(p.checked_sub(1)?)?;
        (k <= iv.hi()).then_some(iv)
    }
}

impl BitSequence {
    pub fn new(d: Descriptor) -> Result<Self, SeqError> {
        match &d {
            Descriptor::Constant(b) if *b > 1 => {
                return Err(SeqError::Invalid(format!("constant bit {b}")))
            }
            Descriptor::Periodic { pattern, .. } => {
                if pattern.is_empty() {
                    return Err(SeqError::Invalid("empty periodic pattern".into()));
                }
                if pattern.iter().any(|&b| b > 1) {
                    return Err(SeqError::Invalid("pattern entries must be 0 or 1".into()));
                }
            }
            Descriptor::Sturmian(t) | Descriptor::RichSturmian(t) => {
                if *t < Rational64::zero() || *t > Rational64::one() {
                    return Err(SeqError::Invalid(format!("slope {t} outside [0, 1]")));
                }
            }
            Descriptor::DivisibleBy(0) => {
                return Err(SeqError::Invalid("divisor must be at least 1".into()))
            }
            _ => {}
        }
        Ok(BitSequence(Arc::new(d)))
    }

    fn from_valid(d: Descriptor) -> Self {
        BitSequence(Arc::new(d))
    }

    pub fn constant(b: Bit) -> Self {
        assert!(b <= 1);
        Self::from_valid(Descriptor::Constant(b))
    }

    pub fn periodic(pattern: Vec<Bit>, offset: i64) -> Result<Self, SeqError> {
        Self::new(Descriptor::Periodic { pattern, offset })
    }

    pub fn sturmian(t: Rational64) -> Result<Self, SeqError> {
        Self::new(Descriptor::Sturmian(t))
    }

    /// `Sturmian(p/q)` for a valid slope; panics otherwise.
    pub fn sturmian_ratio(p: i64, q: i64) -> Self {
        Self::sturmian(Rational64::new(p, q)).expect("slope in [0, 1]")
    }

    pub fn divisible_by(d: u64) -> Result<Self, SeqError> {
        Self::new(Descriptor::DivisibleBy(d))
    }

    pub fn rich() -> Self {
        Self::from_valid(Descriptor::Rich)
    }

    pub fn rich_sturmian(t: Rational64) -> Result<Self, SeqError> {
        Self::new(Descriptor::RichSturmian(t))
    }

    pub fn single_ones(positions: impl IntoIterator<Item = i64>) -> Self {
        Self::from_valid(Descriptor::SingleOnes(positions.into_iter().collect()))
    }

    /// `b_k = self_{k + by}`.
    pub fn shifted(&self, by: impl Into<BigInt>) -> Self {
        let by = by.into();
        if by.is_zero() {
            return self.clone();
        }
        match self.descriptor() {
            Descriptor::Shifted { base, by: inner } => {
                base.shifted(inner + by)
            }
            _ => Self::from_valid(Descriptor::Shifted {
                base: self.clone(),
                by,
            }),
        }
    }

    pub fn patched(&self, patches: PatchFamily) -> Self {
        Self::from_valid(Descriptor::Patched {
            base: self.clone(),
            patches,
        })
    }

    pub fn member(family: Arc<Family>, index: u64) -> Self {
        Self::from_valid(Descriptor::Member(FamilyMember::new(family, index)))
    }

    pub fn cone_of(&self, scaling: ScalingSet) -> Self {
        Self::from_valid(Descriptor::ConeOf {
            base: self.clone(),
            scaling,
        })
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.0
    }

    pub fn as_member(&self) -> Option<&FamilyMember> {
        match self.descriptor() {
            Descriptor::Member(m) => Some(m),
            _ => None,
        }
    }

    pub fn evaluate(&self, k: &BigInt) -> Result<Bit, SeqError> {
        evaluate(self, k)
    }

    pub fn at(&self, k: i64) -> Result<Bit, SeqError> {
        evaluate(self, &BigInt::from(k))
    }

    /// Values on `[lo, hi]`.
    pub fn window(&self, lo: i64, hi: i64) -> Result<Vec<Bit>, SeqError> {
        (lo..=hi).map(|k| self.at(k)).collect()
    }
}

/// Evaluates `seq` at `k`.
pub fn evaluate(seq: &BitSequence, k: &BigInt) -> Result<Bit, SeqError> {
    match seq.descriptor() {
        Descriptor::Constant(b) => Ok(*b),
        Descriptor::Periodic { pattern, offset } => {
            let len = BigInt::from(pattern.len());
            let idx = (k + offset).mod_floor(&len);
            Ok(pattern[idx.to_usize().expect("index below pattern length")])
        }
        Descriptor::Sturmian(t) => Ok(sturmian_bit(t, k)),
        Descriptor::DivisibleBy(d) => Ok(k.mod_floor(&BigInt::from(*d)).is_zero() as Bit),
        Descriptor::Rich => Ok(rich::shortlex_bit(k)),
        Descriptor::RichSturmian(t) => Ok(rich::sparse_bit(k).unwrap_or_else(|| sturmian_bit(t, k))),
        Descriptor::SingleOnes(set) => Ok(k.to_i64().is_some_and(|k| set.contains(&k)) as Bit),
        Descriptor::Shifted { base, by } => evaluate(base, &(k + by)),
        Descriptor::Patched { base, patches } => {
            match k.to_i64().and_then(|ki| patches.find(ki).map(|p| (ki, p))) {
                Some((ki, p)) => p.source.at(ki - p.center + p.source_offset),
                None => evaluate(base, k),
            }
        }
        Descriptor::Member(m) => m.evaluate(k),
        Descriptor::ConeOf { base, scaling } => crate::cone::lazy_cone_value(base, scaling, k),
    }
}

/// `floor((k+1)t) - floor(kt)` in exact arithmetic.
pub(crate) fn sturmian_bit(t: &Rational64, k: &BigInt) -> Bit {
    let (p, q) = (*t.numer(), *t.denom());
    if let Some(k) = k.to_i64().filter(|k| k.unsigned_abs() < 1 << 40) {
        let (p, q, k) = (p as i128, q as i128, k as i128);
        return ((k + 1) * p).div_euclid(q).wrapping_sub((k * p).div_euclid(q)) as Bit;
    }
    let (p, q) = (BigInt::from(p), BigInt::from(q));
    let hi = ((k + 1u32) * &p).div_floor(&q);
    let lo = (k * &p).div_floor(&q);
    (hi - lo).to_u8().expect("floor difference is 0 or 1")
}
