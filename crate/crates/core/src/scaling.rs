//! Scaling factors stored as exponent sequences.
//!
//! A scaling factor `α_n = 2^{s_n}` is represented by its exponents `s_n`.
//! Rescaling a bullseye space by `α_n` moves bridge `k` to bridge `k + s_n`,
//! so every sequence-level operation works with the exponents directly.
//!
//! [`VariableParts`] pairs a scaling set with a radius rule and describes
//! the intervals `[s_n - r_n, s_n + r_n]` on which the recursive families
//! are patched.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wire::BigIntJson;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalingError {
    #[error("exponents are not strictly increasing at index {0}")]
    NotIncreasing(usize),
    #[error("exponent {0} is negative")]
    Negative(usize),
    #[error("variable intervals {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("variable interval {0} reaches non-positive indices")]
    NonPositive(usize),
    #[error("schedule parameter c must be at least 2, got {0}")]
    BadParameter(u32),
}

/// How the exponents `s_n` are produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// `s_n = 4^{n+c}`.
    PowerOfFour { c: u32 },
    /// `s_n = (n+1)!`.
    Factorial,
    /// `s_n = 2^{(n+2)(n+3)}`, the centres of the nested-interval scheme.
    NestedPowers,
    /// A finite prefix given explicitly.
    Custom(Arc<[BigInt]>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthClass {
    DefaultSchedule,
    Factorial,
    Custom,
}

/// A strictly increasing exponent sequence.
#[derive(Clone, PartialEq, Eq)]
pub struct ScalingSet {
    schedule: Schedule,
}

impl fmt::Debug for ScalingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.schedule {
            Schedule::PowerOfFour { c } => write!(f, "ScalingSet(4^(n+{c}))"),
            Schedule::Factorial => write!(f, "ScalingSet((n+1)!)"),
            Schedule::NestedPowers => write!(f, "ScalingSet(2^((n+2)(n+3)))"),
            Schedule::Custom(e) => write!(f, "ScalingSet(custom, {} terms)", e.len()),
        }
    }
}

/// The default schedule `s_n = 4^{n+c}`.
pub fn default_schedule(c: u32) -> Result<ScalingSet, ScalingError> {
    if c < 2 {
        return Err(ScalingError::BadParameter(c));
    }
    Ok(ScalingSet {
        schedule: Schedule::PowerOfFour { c },
    })
}

impl ScalingSet {
    pub fn factorial() -> Self {
        ScalingSet {
            schedule: Schedule::Factorial,
        }
    }

    pub fn nested_powers() -> Self {
        ScalingSet {
            schedule: Schedule::NestedPowers,
        }
    }

    pub fn custom(exponents: Vec<BigInt>) -> Result<Self, ScalingError> {
        for (i, e) in exponents.iter().enumerate() {
            if e.is_negative() {
                return Err(ScalingError::Negative(i));
            }
            if i > 0 && *e <= exponents[i - 1] {
                return Err(ScalingError::NotIncreasing(i));
            }
        }
        Ok(ScalingSet {
            schedule: Schedule::Custom(exponents.into()),
        })
    }

    pub fn custom_u64(exponents: &[u64]) -> Result<Self, ScalingError> {
        Self::custom(exponents.iter().map(|&e| BigInt::from(e)).collect())
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn growth_class(&self) -> GrowthClass {
        match self.schedule {
            Schedule::PowerOfFour { .. } => GrowthClass::DefaultSchedule,
            Schedule::Factorial => GrowthClass::Factorial,
            Schedule::NestedPowers | Schedule::Custom(_) => GrowthClass::Custom,
        }
    }

    /// Number of available exponents, `None` when the schedule is infinite.
    pub fn len(&self) -> Option<usize> {
        match &self.schedule {
            Schedule::Custom(e) => Some(e.len()),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// Whether `s_0..=s_horizon` are all available.
    pub fn covers(&self, horizon: usize) -> bool {
        self.len().is_none_or(|len| horizon < len)
    }

    pub fn exponent(&self, n: usize) -> Option<BigInt> {
        match &self.schedule {
            Schedule::PowerOfFour { c } => Some(BigInt::one() << (2 * (n + *c as usize))),
            Schedule::Factorial => Some((1..=n as u64 + 1).fold(BigInt::one(), |acc, m| acc * m)),
            Schedule::NestedPowers => Some(BigInt::one() << ((n + 2) * (n + 3))),
            Schedule::Custom(e) => e.get(n).cloned(),
        }
    }

    /// `exponent(n)` for schedules known to cover `n`.
    pub(crate) fn exp(&self, n: usize) -> BigInt {
        self.exponent(n)
            .unwrap_or_else(|| panic!("scaling set has no exponent {n}"))
    }

    /// Largest `n` with `s_n <= k`, if any.
    pub fn floor_index(&self, k: &BigInt) -> Option<usize> {
        if k.is_negative() {
            return None;
        }
        match &self.schedule {
            Schedule::PowerOfFour { c } => {
                if k.is_zero() {
                    return None;
                }
                let log = (k.bits() - 1) as usize;
                (log / 2).checked_sub(*c as usize)
            }
            Schedule::NestedPowers => {
                if k.is_zero() {
                    return None;
                }
                let log = (k.bits() - 1) as usize;
                let mut best = None;
                let mut n = 0;
                while (n + 2) * (n + 3) <= log {
                    best = Some(n);
                    n += 1;
                }
                best
            }
            Schedule::Factorial => {
                let mut best = None;
                let mut f = BigInt::one();
                let mut n = 0usize;
                loop {
                    f *= n as u64 + 1;
                    if &f > k {
                        return best;
                    }
                    best = Some(n);
                    n += 1;
                }
            }
            Schedule::Custom(e) => {
                let p = e.partition_point(|x| x <= k);
                p.checked_sub(1)
            }
        }
    }

    /// `Some(r)` when `s_n mod p == r` for every `n` in `[horizon/2, horizon]`.
    pub fn eventual_residue(&self, p: u64, horizon: usize) -> Option<u64> {
        if p == 0 || !self.covers(horizon) {
            return None;
        }
        let modulus = BigInt::from(p);
        let mut residue = None;
        for n in horizon / 2..=horizon {
            let r = self.exp(n).mod_floor(&modulus).to_u64()?;
            match residue {
                None => residue = Some(r),
                Some(prev) if prev != r => return None,
                _ => {}
            }
        }
        residue
    }
}

/// Whether consecutive value ratios `2^{s_{n+1} - s_n}` exceed `bound` from
/// some `n0 <= horizon/2` on, through `horizon`.
pub fn thin_check(s: &ScalingSet, horizon: usize, bound: &BigInt) -> bool {
    if horizon < 2 || !s.covers(horizon) {
        return false;
    }
    let exceeds: Vec<bool> = (0..horizon)
        .map(|n| ratio_exceeds(&(s.exp(n + 1) - s.exp(n)), bound))
        .collect();
    // least n0 such that every gap from n0 on is large enough
    let n0 = exceeds.iter().rposition(|ok| !ok).map_or(0, |i| i + 1);
    n0 <= horizon / 2 && n0 < horizon
}

fn ratio_exceeds(gap: &BigInt, bound: &BigInt) -> bool {
    if gap.is_negative() {
        return false;
    }
    if bound.bits() < gap.to_u64().unwrap_or(u64::MAX) {
        return true;
    }
    let ratio = BigInt::one() << gap.to_usize().expect("small gap");
    &ratio > bound
}

/// Radius of the `n`-th variable interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusRule {
    /// `r_n = n`.
    Index,
    /// `r_n = floor(s_n / (4(n+1)))`.
    Thin,
    /// `r_n = 2^{(n+2)^2}`.
    NestedPowers,
}

impl RadiusRule {
    pub fn radius(self, n: usize, center: &BigInt) -> BigInt {
        match self {
            RadiusRule::Index => BigInt::from(n),
            RadiusRule::Thin => center / BigInt::from(4 * (n as u64 + 1)),
            RadiusRule::NestedPowers => BigInt::one() << ((n + 2) * (n + 2)),
        }
    }
}

/// The variable part `⋃_n [s_n - r_n, s_n + r_n]` of a patched family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableParts {
    pub scaling: ScalingSet,
    pub radius: RadiusRule,
}

/// Location of an index inside the variable part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hit {
    pub n: usize,
    pub center: BigInt,
}

impl VariableParts {
    pub fn new(scaling: ScalingSet, radius: RadiusRule) -> Self {
        VariableParts { scaling, radius }
    }

    pub fn interval(&self, n: usize) -> Option<(BigInt, BigInt)> {
        let center = self.scaling.exponent(n)?;
        let r = self.radius.radius(n, &center);
        Some((&center - &r, &center + &r))
    }

    /// The interval containing `k`, if `k` lies in the variable part.
    pub fn locate(&self, k: &BigInt) -> Option<Hit> {
        if !k.is_positive() {
            return None;
        }
        let below = self.scaling.floor_index(k);
        let candidates = match below {
            Some(n) => [Some(n), Some(n + 1)],
            None => [Some(0), None],
        };
        for n in candidates.into_iter().flatten() {
            let Some(center) = self.scaling.exponent(n) else {
                continue;
            };
            let r = self.radius.radius(n, &center);
            if (k - &center).abs() <= r {
                return Some(Hit { n, center });
            }
        }
        None
    }

    /// Checks that the first `count` intervals are positive and pairwise
    /// disjoint (sorted, so adjacent pairs suffice).
    pub fn check_disjoint(&self, count: usize) -> Result<(), ScalingError> {
        let mut prev_hi: Option<BigInt> = None;
        for n in 0..count {
            let Some((lo, hi)) = self.interval(n) else {
                break;
            };
            if !lo.is_positive() {
                return Err(ScalingError::NonPositive(n));
            }
            if let Some(p) = &prev_hi {
                if &lo <= p {
                    return Err(ScalingError::Overlap(n - 1, n));
                }
            }
            prev_hi = Some(hi);
        }
        Ok(())
    }

    /// Upper bound on the number of patch hops when evaluating at `k`.
    ///
    /// A hop out of interval `n` lands at magnitude `<= r_n`, which is below
    /// the left endpoint of interval `n`, so only lower intervals remain.
    pub fn depth_budget(&self, k: &BigInt) -> usize {
        let m = k.abs();
        match self.scaling.floor_index(&m) {
            Some(n) => n + 3,
            None => 2,
        }
    }

    /// Depth bound for every index of magnitude at most `s_horizon + horizon`.
    pub fn depth_bound(&self, horizon: usize) -> usize {
        match self.scaling.exponent(horizon) {
            Some(s) => self.depth_budget(&(s + BigInt::from(horizon))),
            None => self.scaling.len().unwrap_or(0) + 2,
        }
    }
}

/// Wire form of a scaling set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "schedule", rename_all = "snake_case")]
pub enum ScalingJson {
    Default { c: u32 },
    Factorial,
    NestedPowers,
    Custom { exponents: Vec<BigIntJson> },
}

impl From<&ScalingSet> for ScalingJson {
    fn from(s: &ScalingSet) -> Self {
        match &s.schedule {
            Schedule::PowerOfFour { c } => ScalingJson::Default { c: *c },
            Schedule::Factorial => ScalingJson::Factorial,
            Schedule::NestedPowers => ScalingJson::NestedPowers,
            Schedule::Custom(e) => ScalingJson::Custom {
                exponents: e.iter().cloned().map(BigIntJson).collect(),
            },
        }
    }
}

impl TryFrom<ScalingJson> for ScalingSet {
    type Error = ScalingError;

    fn try_from(j: ScalingJson) -> Result<Self, Self::Error> {
        match j {
            ScalingJson::Default { c } => default_schedule(c),
            ScalingJson::Factorial => Ok(ScalingSet::factorial()),
            ScalingJson::NestedPowers => Ok(ScalingSet::nested_powers()),
            ScalingJson::Custom { exponents } => {
                ScalingSet::custom(exponents.into_iter().map(|e| e.0).collect())
            }
        }
    }
}

impl Serialize for ScalingSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ScalingJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ScalingSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let j = ScalingJson::deserialize(deserializer)?;
        ScalingSet::try_from(j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn default_schedule_first_terms() {
        let s = default_schedule(2).unwrap();
        let first: Vec<_> = (0..3).map(|n| s.exp(n)).collect();
        assert_eq!(first, vec![big(16), big(64), big(256)]);
        assert!(default_schedule(1).is_err());
    }

    #[test]
    fn value_ratio_of_default_schedule() {
        let s = default_schedule(2).unwrap();
        // α_1 / α_0 = 2^(64 - 16)
        assert_eq!(s.exp(1) - s.exp(0), big(48));
        assert!(thin_check(&s, 20, &big(1_000_000)));
    }

    #[test]
    fn thin_check_examples() {
        assert!(thin_check(&ScalingSet::factorial(), 12, &big(1000)));
        let linear = ScalingSet::custom_u64(&(0..40).collect::<Vec<_>>()).unwrap();
        assert!(!thin_check(&linear, 12, &big(3)));
        // constant ratio 2 does exceed bound 1
        assert!(thin_check(&linear, 12, &big(1)));
    }

    #[test]
    fn exponent_value_coherence() {
        // value ratio computed from exact powers agrees with the gap criterion
        let s = ScalingSet::custom_u64(&[1, 2, 4, 7, 11, 16, 22, 29, 37]).unwrap();
        let bound = big(100);
        for n in 0..8 {
            let a = BigInt::one() << s.exp(n).to_usize().unwrap();
            let b = BigInt::one() << s.exp(n + 1).to_usize().unwrap();
            assert_eq!(&b / &a > bound, ratio_exceeds(&(s.exp(n + 1) - s.exp(n)), &bound));
        }
    }

    #[test]
    fn custom_rejects_non_increasing() {
        assert_eq!(
            ScalingSet::custom_u64(&[1, 3, 3]).unwrap_err(),
            ScalingError::NotIncreasing(2)
        );
    }

    #[test]
    fn floor_index_matches_scan() {
        for s in [
            default_schedule(2).unwrap(),
            ScalingSet::factorial(),
            ScalingSet::nested_powers(),
            ScalingSet::custom_u64(&[3, 9, 30, 31, 100]).unwrap(),
        ] {
            for k in 0..5000u64 {
                let k = big(k);
                let scan = (0..12).rev().find(|&n| s.exponent(n).is_some_and(|e| e <= k));
                assert_eq!(s.floor_index(&k), scan, "{s:?} at {k}");
            }
        }
    }

    #[test]
    fn index_radius_intervals_disjoint() {
        let parts = VariableParts::new(default_schedule(2).unwrap(), RadiusRule::Index);
        parts.check_disjoint(101).unwrap();
        // all pairs, not just neighbours
        let iv: Vec<_> = (0..101).map(|n| parts.interval(n).unwrap()).collect();
        for i in 0..iv.len() {
            for j in i + 1..iv.len() {
                assert!(iv[i].1 < iv[j].0 || iv[j].1 < iv[i].0);
            }
        }
    }

    #[test]
    fn thin_radius_intervals_disjoint() {
        let parts = VariableParts::new(default_schedule(2).unwrap(), RadiusRule::Thin);
        parts.check_disjoint(200).unwrap();
        assert_eq!(parts.interval(0).unwrap(), (big(12), big(20)));
        assert_eq!(parts.interval(4).unwrap(), (big(4096 - 204), big(4096 + 204)));
    }

    #[test]
    fn locate_agrees_with_interval_scan() {
        let parts = VariableParts::new(default_schedule(2).unwrap(), RadiusRule::Thin);
        let iv: Vec<_> = (0..6).map(|n| parts.interval(n).unwrap()).collect();
        for k in -10..20_000i64 {
            let k = BigInt::from(k);
            let scan = iv.iter().position(|(lo, hi)| lo <= &k && &k <= hi);
            assert_eq!(parts.locate(&k).map(|h| h.n), scan);
        }
    }

    #[test]
    fn residues_of_default_schedule() {
        let s = default_schedule(2).unwrap();
        assert_eq!(s.eventual_residue(4, 64), Some(0));
        assert_eq!(s.eventual_residue(3, 64), Some(1));
        // 4^j mod 5 alternates
        assert_eq!(s.eventual_residue(5, 64), None);
    }

    #[test]
    fn json_round_trip() {
        for s in [
            default_schedule(3).unwrap(),
            ScalingSet::custom_u64(&[1, 5, 9]).unwrap(),
            ScalingSet::nested_powers(),
        ] {
            let text = serde_json::to_string(&s).unwrap();
            let back: ScalingSet = serde_json::from_str(&text).unwrap();
            assert_eq!(back, s);
        }
        let parsed: ScalingSet = serde_json::from_str(r#"{"schedule":"default","c":2}"#).unwrap();
        assert_eq!(parsed, default_schedule(2).unwrap());
    }
}
