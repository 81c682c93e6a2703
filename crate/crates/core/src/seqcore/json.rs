//! JSON interchange format for descriptors.
//!
//! ```json
//! {"type": "divisible", "d": 3}
//! {"type": "sturmian", "t": {"num": 1, "den": 2}}
//! {"type": "family", "family": {"kind": "infmany", "scaling": {"schedule": "default", "c": 2},
//!  "radius": "thin", "levels": 6}, "member": 0}
//! ```

use std::sync::Arc;

use num_rational::Rational64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{BitSequence, Descriptor, Family, FamilyKind, Patch, PatchFamily, SeqError};
use crate::scaling::{RadiusRule, ScalingSet, VariableParts};
use crate::wire::{BigIntJson, RationalJson};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DescriptorJson {
    Constant {
        bit: u8,
    },
    Periodic {
        pattern: Vec<u8>,
        #[serde(default)]
        offset: i64,
    },
    Sturmian {
        t: RationalJson,
    },
    Divisible {
        d: u64,
    },
    Rich,
    RichSturmian {
        t: RationalJson,
    },
    SingleOnes {
        positions: Vec<i64>,
    },
    Shifted {
        base: BitSequence,
        by: BigIntJson,
    },
    Patched {
        base: BitSequence,
        patches: Vec<PatchJson>,
    },
    Family {
        family: FamilyJson,
        member: u64,
    },
    Cone {
        base: BitSequence,
        scaling: ScalingSet,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PatchJson {
    pub center: i64,
    pub radius: u64,
    pub source: BitSequence,
    #[serde(default)]
    pub source_offset: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKindJson {
    Infmany,
    Periodic { m: u64 },
    Transfinite { level: u32, target: BitSequence },
    Onlycount,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyJson {
    #[serde(flatten)]
    pub kind: FamilyKindJson,
    pub scaling: ScalingSet,
    pub radius: RadiusRule,
    pub levels: u64,
}

impl From<&Family> for FamilyJson {
    fn from(f: &Family) -> Self {
        let kind = match &f.kind {
            FamilyKind::InfMany => FamilyKindJson::Infmany,
            FamilyKind::Periodic { m } => FamilyKindJson::Periodic { m: *m },
            FamilyKind::Transfinite { level, target } => FamilyKindJson::Transfinite {
                level: *level,
                target: target.clone(),
            },
            FamilyKind::OnlyCount => FamilyKindJson::Onlycount,
        };
        FamilyJson {
            kind,
            scaling: f.parts.scaling.clone(),
            radius: f.parts.radius,
            levels: f.levels,
        }
    }
}

/// Intervals checked for disjointness when a family is read from JSON.
const FAMILY_CHECK_INTERVALS: usize = 64;

impl TryFrom<FamilyJson> for Family {
    type Error = SeqError;

    fn try_from(j: FamilyJson) -> Result<Self, Self::Error> {
        let kind = match j.kind {
            FamilyKindJson::Infmany => FamilyKind::InfMany,
            FamilyKindJson::Periodic { m: 0 } => {
                return Err(SeqError::Invalid("periodic family needs m >= 1".into()))
            }
            FamilyKindJson::Periodic { m } => FamilyKind::Periodic { m },
            FamilyKindJson::Transfinite { level: 0, .. } => {
                return Err(SeqError::Invalid("transfinite level starts at 1".into()))
            }
            FamilyKindJson::Transfinite { level, target } => {
                FamilyKind::Transfinite { level, target }
            }
            FamilyKindJson::Onlycount => FamilyKind::OnlyCount,
        };
        let parts = VariableParts::new(j.scaling, j.radius);
        let count = parts.scaling.len().unwrap_or(FAMILY_CHECK_INTERVALS);
        parts
            .check_disjoint(count.min(FAMILY_CHECK_INTERVALS))
            .map_err(|e| SeqError::Invalid(e.to_string()))?;
        Ok(Family {
            kind,
            parts,
            levels: j.levels,
        })
    }
}

impl From<&BitSequence> for DescriptorJson {
    fn from(seq: &BitSequence) -> Self {
        match seq.descriptor() {
            Descriptor::Constant(b) => DescriptorJson::Constant { bit: *b },
            Descriptor::Periodic { pattern, offset } => DescriptorJson::Periodic {
                pattern: pattern.clone(),
                offset: *offset,
            },
            Descriptor::Sturmian(t) => DescriptorJson::Sturmian { t: (*t).into() },
            Descriptor::DivisibleBy(d) => DescriptorJson::Divisible { d: *d },
            Descriptor::Rich => DescriptorJson::Rich,
            Descriptor::RichSturmian(t) => DescriptorJson::RichSturmian { t: (*t).into() },
            Descriptor::SingleOnes(set) => DescriptorJson::SingleOnes {
                positions: set.iter().copied().collect(),
            },
            Descriptor::Shifted { base, by } => DescriptorJson::Shifted {
                base: base.clone(),
                by: BigIntJson(by.clone()),
            },
            Descriptor::Patched { base, patches } => DescriptorJson::Patched {
                base: base.clone(),
                patches: patches
                    .intervals()
                    .iter()
                    .map(|p| PatchJson {
                        center: p.center,
                        radius: p.radius,
                        source: p.source.clone(),
                        source_offset: p.source_offset,
                    })
                    .collect(),
            },
            Descriptor::Member(m) => DescriptorJson::Family {
                family: FamilyJson::from(&**m.family()),
                member: m.index(),
            },
            Descriptor::ConeOf { base, scaling } => DescriptorJson::Cone {
                base: base.clone(),
                scaling: scaling.clone(),
            },
        }
    }
}

impl TryFrom<DescriptorJson> for BitSequence {
    type Error = SeqError;

    fn try_from(j: DescriptorJson) -> Result<Self, Self::Error> {
        let rational = |t: RationalJson| Rational64::try_from(t).map_err(SeqError::Invalid);
        match j {
            DescriptorJson::Constant { bit } => BitSequence::new(Descriptor::Constant(bit)),
            DescriptorJson::Periodic { pattern, offset } => BitSequence::periodic(pattern, offset),
            DescriptorJson::Sturmian { t } => BitSequence::sturmian(rational(t)?),
            DescriptorJson::Divisible { d } => BitSequence::divisible_by(d),
            DescriptorJson::Rich => Ok(BitSequence::rich()),
            DescriptorJson::RichSturmian { t } => BitSequence::rich_sturmian(rational(t)?),
            DescriptorJson::SingleOnes { positions } => Ok(BitSequence::single_ones(positions)),
            DescriptorJson::Shifted { base, by } => Ok(BitSequence::new(Descriptor::Shifted {
                base,
                by: by.0,
            })?),
            DescriptorJson::Patched { base, patches } => {
                let patches = PatchFamily::new(
                    patches
                        .into_iter()
                        .map(|p| Patch {
                            center: p.center,
                            radius: p.radius,
                            source: p.source,
                            source_offset: p.source_offset,
                        })
                        .collect(),
                )?;
                Ok(base.patched(patches))
            }
            DescriptorJson::Family { family, member } => {
                Ok(BitSequence::member(Arc::new(Family::try_from(family)?), member))
            }
            DescriptorJson::Cone { base, scaling } => Ok(base.cone_of(scaling)),
        }
    }
}

impl Serialize for BitSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        DescriptorJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BitSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let j = DescriptorJson::deserialize(deserializer)?;
        BitSequence::try_from(j).map_err(serde::de::Error::custom)
    }
}

impl BitSequence {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("descriptors always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, SeqError> {
        serde_json::from_str(text).map_err(|e| SeqError::Invalid(e.to_string()))
    }
}
