//! JSON helpers shared by the descriptor and report formats.

use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An integer written as a JSON number when it fits in `i64`, otherwise as a
/// decimal string. Both forms are accepted on input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigIntJson(pub BigInt);

impl Serialize for BigIntJson {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(v) => serializer.serialize_i64(v),
            None => serializer.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for BigIntJson {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Either {
            Int(i64),
            Text(String),
        }
        match Either::deserialize(deserializer)? {
            Either::Int(v) => Ok(BigIntJson(BigInt::from(v))),
            Either::Text(t) => t
                .trim()
                .parse::<BigInt>()
                .map(BigIntJson)
                .map_err(serde::de::Error::custom),
        }
    }
}

/// `{"num": p, "den": q}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalJson {
    pub num: i64,
    pub den: i64,
}

impl From<Rational64> for RationalJson {
    fn from(r: Rational64) -> Self {
        RationalJson {
            num: *r.numer(),
            den: *r.denom(),
        }
    }
}

impl TryFrom<RationalJson> for Rational64 {
    type Error = String;

    fn try_from(r: RationalJson) -> Result<Self, Self::Error> {
        if r.den == 0 {
            return Err("rational with zero denominator".into());
        }
        Ok(Rational64::new(r.num, r.den))
    }
}

pub fn rational_text(r: &Rational64) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
