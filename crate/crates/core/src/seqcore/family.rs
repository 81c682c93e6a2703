//! Recursively patched sequence families.
//!
//! Member `i` of a family agrees with its base sequence on the fixed part.
//! On the variable interval around `s_n` it reads member `next(i)` at
//! `k - s_n`, so the cone of member `i` along `s` is member `next(i)`.
//! Every hop lands strictly inside a lower interval (or the fixed part), so
//! evaluation terminates after at most `parts.depth_budget(k)` hops.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::Signed;

use super::{evaluate, Bit, BitSequence, SeqError};
use crate::scaling::VariableParts;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    /// Bases `Sturmian(1/(i+1))`, member `i` patched from member `i+1`.
    InfMany,
    /// Bases `Sturmian(1/((i mod m)+2))`, member `i` patched from `(i+1) mod m`.
    Periodic { m: u64 },
    /// Tower level `level >= 1`. Member `i` equals `target` on `[-i, i]`.
    Transfinite { level: u32, target: BitSequence },
    /// Bases `DivisibleBy(i+2)`.
    OnlyCount,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family {
    pub kind: FamilyKind,
    pub parts: VariableParts,
    /// Members with index `>= levels` are left unpatched.
    pub levels: u64,
}

impl Family {
    pub fn canonical(&self, i: u64) -> u64 {
        match self.kind {
            FamilyKind::Periodic { m } => i % m,
            _ => i,
        }
    }

    pub fn next(&self, i: u64) -> u64 {
        self.canonical(i + 1)
    }

    pub fn is_patched(&self, i: u64) -> bool {
        match self.kind {
            FamilyKind::Periodic { .. } => true,
            _ => i < self.levels,
        }
    }

    /// Density of the base of member `i`.
    pub fn base_density(&self, i: u64) -> Rational64 {
        let i = self.canonical(i) as i64;
        match &self.kind {
            FamilyKind::InfMany => Rational64::new(1, i + 1),
            FamilyKind::Periodic { .. } => Rational64::new(1, i + 2),
            FamilyKind::Transfinite { level: 1, .. } => Rational64::new(1, i + 1),
            FamilyKind::Transfinite { level, .. } => {
                let j = *level as i64;
                Rational64::new(j, j * (i + 1) + 1)
            }
            FamilyKind::OnlyCount => Rational64::new(1, i + 2),
        }
    }

    pub fn base(&self, i: u64) -> BitSequence {
        match self.kind {
            FamilyKind::OnlyCount => {
                BitSequence::divisible_by(self.canonical(i) + 2).expect("divisor at least 2")
            }
            _ => BitSequence::sturmian(self.base_density(i)).expect("density in [0, 1]"),
        }
    }

    fn pin(&self, i: u64) -> Option<(u64, &BitSequence)> {
        match &self.kind {
            FamilyKind::Transfinite { target, .. } => Some((i, target)),
            _ => None,
        }
    }
}

/// Member `index` of a family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyMember {
    family: Arc<Family>,
    index: u64,
}

impl FamilyMember {
    pub fn new(family: Arc<Family>, index: u64) -> Self {
        let index = family.canonical(index);
        FamilyMember { family, index }
    }

    pub fn family(&self) -> &Arc<Family> {
        &self.family
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn evaluate(&self, k: &BigInt) -> Result<Bit, SeqError> {
        let fam = &*self.family;
        let budget = fam.parts.depth_budget(k);
        let mut i = self.index;
        let mut k = k.clone();
        let mut hops = 0usize;
        loop {
            if let Some((w, target)) = fam.pin(i) {
                if k.abs() <= BigInt::from(w) {
                    return evaluate(target, &k);
                }
            }
            if !fam.is_patched(i) {
                break;
            }
            let Some(hit) = fam.parts.locate(&k) else {
                break;
            };
            hops += 1;
            if hops > budget {
                return Err(SeqError::RecursionBudgetExceeded(budget));
            }
            k -= hit.center;
            i = fam.next(i);
        }
        evaluate(&fam.base(i), &k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::{default_schedule, RadiusRule, ScalingSet};

    fn infmany(levels: u64) -> Arc<Family> {
        Arc::new(Family {
            kind: FamilyKind::InfMany,
            parts: VariableParts::new(default_schedule(2).unwrap(), RadiusRule::Thin),
            levels,
        })
    }

    #[test]
    fn fixed_part_reads_base() {
        let fam = infmany(6);
        let m0 = BitSequence::member(fam.clone(), 0);
        // outside [12, 20], [56, 72], [235, 277], ... member 0 is all ones
        for k in -100..12 {
            assert_eq!(m0.at(k).unwrap(), 1);
        }
        let m1 = BitSequence::member(fam, 1);
        assert_eq!(m1.window(-4, 3).unwrap(), BitSequence::sturmian_ratio(1, 2).window(-4, 3).unwrap());
    }

    #[test]
    fn variable_part_reads_next_member() {
        let fam = infmany(6);
        let m0 = BitSequence::member(fam.clone(), 0);
        let m1 = BitSequence::member(fam, 1);
        for k in -4..=4 {
            assert_eq!(m0.at(16 + k).unwrap(), m1.at(k).unwrap());
        }
        let big = BigInt::from(1) << 200u32;
        let radius = RadiusRule::Thin.radius(98, &big);
        assert!(radius > BigInt::from(1000));
        for k in -50i64..=50 {
            assert_eq!(m0.evaluate(&(&big + k)).unwrap(), m1.at(k).unwrap());
        }
    }

    #[test]
    fn members_beyond_levels_are_bases() {
        let fam = infmany(2);
        let m2 = BitSequence::member(fam.clone(), 2);
        let base = fam.base(2);
        for k in [16i64, 64, 256, 1024] {
            assert_eq!(m2.at(k).unwrap(), base.at(k).unwrap());
        }
    }

    #[test]
    fn periodic_members_wrap() {
        let fam = Arc::new(Family {
            kind: FamilyKind::Periodic { m: 3 },
            parts: VariableParts::new(default_schedule(2).unwrap(), RadiusRule::Thin),
            levels: 0,
        });
        assert_eq!(BitSequence::member(fam.clone(), 4), BitSequence::member(fam, 1));
    }

    #[test]
    fn malformed_family_hits_budget() {
        // centre 1 with radius 16: every hop only moves one step down
        let fam = Arc::new(Family {
            kind: FamilyKind::InfMany,
            parts: VariableParts::new(
                ScalingSet::custom_u64(&[1]).unwrap(),
                RadiusRule::NestedPowers,
            ),
            levels: u64::MAX,
        });
        assert!(fam.parts.check_disjoint(1).is_err());
        let m = BitSequence::member(fam, 0);
        assert_eq!(m.at(2).unwrap(), BitSequence::sturmian_ratio(1, 3).at(0).unwrap());
        assert!(matches!(m.at(17), Err(SeqError::RecursionBudgetExceeded(3))));
    }
}
