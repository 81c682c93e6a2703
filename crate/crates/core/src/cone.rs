//! The asymptotic cone at the level of sequences: `b_k = lim_n a_{s_n + k}`.
//!
//! [`cone`] computes certified limits on a window. Each result also carries
//! a descriptor for the whole limit sequence when one of the closed forms in
//! [`symbolic_cone`] agrees with the certified window; iteration continues
//! from that descriptor.

use num_bigint::BigInt;
use num_traits::Signed;
use serde::Serialize;
use thiserror::Error;

use crate::limits::{
    product_limit, try_filter_limit, try_tail_limit, inner_horizon, LimitError, LimitOutcome,
    StabilizedLimit,
};
use crate::scaling::ScalingSet;
use crate::seqcore::{Bit, BitSequence, Descriptor, SeqError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConeError {
    #[error("limit at index {k} did not stabilize")]
    UnstableAt { k: i64, trace: Vec<Bit> },
    #[error("step {step} of the iteration has no descriptor to continue from")]
    Unidentified { step: usize },
    #[error("product limit at index {k}: {source}")]
    Table { k: i64, source: LimitError },
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Seq(#[from] SeqError),
}

/// Default number of sampled scaling terms for a window.
pub fn default_horizon(window: u64) -> usize {
    64.max(2 * window as usize + 16)
}

/// What a [`ConeResult`] was sampled from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConeSource {
    /// The input itself (zero iterations).
    Input(BitSequence),
    /// `n -> base(s_n + k)`.
    Shift { base: BitSequence, scaling: ScalingSet },
    /// `i -> chain[i](k)`.
    Omega { chain: Vec<BitSequence> },
}

/// Certified window `[-window, window]` of a cone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeResult {
    pub window: u64,
    pub values: Vec<Bit>,
    /// One per index, in window order; empty for zero iterations.
    pub certificates: Vec<StabilizedLimit<Bit>>,
    /// A descriptor that agrees with `values` on the window.
    pub identified: Option<BitSequence>,
    pub source: ConeSource,
}

impl ConeResult {
    pub fn input(seq: &BitSequence, window: u64) -> Result<Self, SeqError> {
        let w = window as i64;
        Ok(ConeResult {
            window,
            values: seq.window(-w, w)?,
            certificates: Vec::new(),
            identified: Some(seq.clone()),
            source: ConeSource::Input(seq.clone()),
        })
    }

    pub fn value(&self, k: i64) -> Option<Bit> {
        let i = k.checked_add(self.window as i64)?;
        self.values.get(usize::try_from(i).ok()?).copied()
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        let w = self.window as i64;
        -w..=w
    }

    pub fn max_stable_from(&self) -> usize {
        self.certificates.iter().map(|c| c.stable_from).max().unwrap_or(0)
    }

    fn sample(&self, k: i64, n: usize) -> Result<Bit, SeqError> {
        match &self.source {
            ConeSource::Input(seq) => seq.at(k),
            ConeSource::Shift { base, scaling } => {
                let s = scaling
                    .exponent(n)
                    .ok_or(SeqError::ScalingExhausted(n))?;
                base.evaluate(&(s + k))
            }
            ConeSource::Omega { chain } => chain
                .get(n)
                .ok_or(SeqError::ScalingExhausted(n))?
                .at(k),
        }
    }

    /// Re-samples every certificate along `stable_from + offset + stride * j`.
    pub fn subsample_consistent(&self, offset: usize, stride: usize) -> Result<bool, SeqError> {
        for (k, cert) in self.indices().zip(&self.certificates) {
            let mut failure = None;
            let ok = cert.subsample_consistent(
                |n| match self.sample(k, n) {
                    Ok(b) => b,
                    Err(e) => {
                        failure.get_or_insert(e);
                        Bit::MAX
                    }
                },
                offset,
                stride,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Every certificate value equals the stored window value.
    pub fn certificates_agree(&self) -> bool {
        self.certificates
            .iter()
            .zip(&self.values)
            .all(|(c, v)| c.value == *v)
    }
}

#[derive(Serialize)]
struct CertificateJson {
    k: i64,
    value: Bit,
    stable_from: usize,
    horizon: usize,
}

#[derive(Serialize)]
struct ConeResultJson<'a> {
    window: u64,
    values: &'a [Bit],
    certificates: Vec<CertificateJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    identified: Option<&'a BitSequence>,
}

impl Serialize for ConeResult {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ConeResultJson {
            window: self.window,
            values: &self.values,
            certificates: self
                .indices()
                .zip(&self.certificates)
                .map(|(k, c)| CertificateJson {
                    k,
                    value: c.value,
                    stable_from: c.stable_from,
                    horizon: c.horizon,
                })
                .collect(),
            identified: self.identified.as_ref(),
        }
        .serialize(serializer)
    }
}

fn check_window(window: u64, horizon: usize) -> Result<(), ConeError> {
    if window == 0 {
        return Err(ConeError::Precondition("window must be at least 1".into()));
    }
    if (horizon as u64) < 2 * window {
        return Err(ConeError::Precondition(format!(
            "horizon {horizon} is below twice the window {window}"
        )));
    }
    Ok(())
}

fn exponents(s: &ScalingSet, upto: usize) -> Result<Vec<BigInt>, SeqError> {
    (0..=upto)
        .map(|n| s.exponent(n).ok_or(SeqError::ScalingExhausted(n)))
        .collect()
}

/// Certified cone of `a` along `s` on `[-window, window]`.
pub fn cone(a: &BitSequence, s: &ScalingSet, window: u64, horizon: usize) -> Result<ConeResult, ConeError> {
    check_window(window, horizon)?;
    let exps = exponents(s, horizon)?;
    let w = window as i64;
    let mut values = Vec::with_capacity(2 * window as usize + 1);
    let mut certificates = Vec::with_capacity(values.capacity());
    for k in -w..=w {
        match try_filter_limit(|n| a.evaluate(&(&exps[n] + k)), horizon)? {
            LimitOutcome::Stable(c) => {
                values.push(c.value);
                certificates.push(c);
            }
            LimitOutcome::Unstable(trace) => return Err(ConeError::UnstableAt { k, trace }),
        }
    }
    let candidate = symbolic_cone(a, s, horizon);
    let identified = match candidate.window(-w, w) {
        Ok(v) if v == values => Some(candidate),
        _ => None,
    };
    Ok(ConeResult {
        window,
        values,
        certificates,
        identified,
        source: ConeSource::Shift {
            base: a.clone(),
            scaling: s.clone(),
        },
    })
}

/// Closed-form candidate for the cone of `a` along `s`.
///
/// Residues of the exponents are read off `[horizon/2, horizon]`. When no
/// closed form applies the candidate is the lazy [`Descriptor::ConeOf`].
pub fn symbolic_cone(a: &BitSequence, s: &ScalingSet, horizon: usize) -> BitSequence {
    let lazy = || a.cone_of(s.clone());
    match a.descriptor() {
        Descriptor::Constant(_) => a.clone(),
        Descriptor::Periodic { pattern, offset } => {
            let p = pattern.len() as u64;
            match s.eventual_residue(p, horizon) {
                Some(r) => BitSequence::periodic(pattern.clone(), (offset + r as i64).rem_euclid(p as i64))
                    .expect("pattern already validated"),
                None => lazy(),
            }
        }
        Descriptor::Sturmian(t) => match s.eventual_residue(*t.denom() as u64, horizon) {
            Some(r) => a.shifted(r),
            None => lazy(),
        },
        Descriptor::DivisibleBy(d) => match s.eventual_residue(*d, horizon) {
            Some(r) => a.shifted(r),
            None => lazy(),
        },
        Descriptor::SingleOnes(_) => BitSequence::constant(0),
        // finitely many patches are eventually left behind
        Descriptor::Patched { base, .. } => symbolic_cone(base, s, horizon),
        Descriptor::Shifted { base, by } => symbolic_cone(base, s, horizon).shifted(by.clone()),
        Descriptor::Member(m) => {
            let fam = m.family();
            let i = m.index();
            if !fam.is_patched(i) {
                symbolic_cone(&fam.base(i), s, horizon)
            } else if fam.parts.scaling == *s {
                BitSequence::member(fam.clone(), fam.next(i))
            } else {
                lazy()
            }
        }
        Descriptor::Rich | Descriptor::RichSturmian(_) | Descriptor::ConeOf { .. } => lazy(),
    }
}

/// Samples in the tail certificate of a lazily evaluated cone value.
const LAZY_TAIL: usize = 32;

/// `lim_n base(s_n + k)`, certified on a short tail that starts once `s_n`
/// dominates `2|k|`.
pub fn lazy_cone_value(base: &BitSequence, s: &ScalingSet, k: &BigInt) -> Result<Bit, SeqError> {
    let reach: BigInt = 2 * k.abs() + 1;
    let start = s.floor_index(&reach).map_or(0, |n| n + 1);
    let mut end = start + LAZY_TAIL;
    if let Some(len) = s.len() {
        if len <= start + 2 {
            return Err(SeqError::ScalingExhausted(start + 2));
        }
        end = end.min(len - 1);
    }
    match try_tail_limit(|n| base.evaluate(&(s.exp(n) + k)), start, end)? {
        LimitOutcome::Stable(c) => Ok(c.value),
        LimitOutcome::Unstable(_) => Err(SeqError::UnstableLimit(k.clone())),
    }
}

/// Iterates `0..=depth`: entry `i` is the `i`-th iterated cone.
pub fn iterate_chain(
    a: &BitSequence,
    s: &ScalingSet,
    depth: usize,
    window: u64,
    horizon: usize,
) -> Result<Vec<ConeResult>, ConeError> {
    check_window(window, horizon)?;
    let mut chain = vec![ConeResult::input(a, window)?];
    for step in 1..=depth {
        let prev = chain[step - 1]
            .identified
            .clone()
            .ok_or(ConeError::Unidentified { step })?;
        chain.push(cone(&prev, s, window, horizon)?);
    }
    Ok(chain)
}

/// The `depth`-th iterated cone.
pub fn iterate_cone(
    a: &BitSequence,
    s: &ScalingSet,
    depth: usize,
    window: u64,
    horizon: usize,
) -> Result<ConeResult, ConeError> {
    let mut chain = iterate_chain(a, s, depth, window, horizon)?;
    Ok(chain.pop().expect("chain contains the input"))
}

/// Both sides of the composition law on a window.
#[derive(Clone, Debug, Serialize)]
pub struct CompositionReport {
    pub first: ConeResult,
    pub double: ConeResult,
    /// Iterated limits of `(i, n) -> a(s'_i + s_n + k)`.
    pub product: Vec<Bit>,
    /// Whether every product limit agreed with its diagonal.
    pub diagonal_agrees: bool,
}

impl CompositionReport {
    pub fn holds(&self) -> bool {
        self.diagonal_agrees && self.product == self.double.values
    }
}

/// `cone(cone(a, s), s2)` against the limit along the product scheme with
/// exponents `s2_i + s_n`.
pub fn composition_check(
    a: &BitSequence,
    s: &ScalingSet,
    s2: &ScalingSet,
    window: u64,
    horizon: usize,
) -> Result<CompositionReport, ConeError> {
    let first = cone(a, s, window, horizon)?;
    let inner = first
        .identified
        .clone()
        .ok_or(ConeError::Unidentified { step: 1 })?;
    let double = cone(&inner, s2, window, horizon)?;
    let outer_exps = exponents(s2, horizon)?;
    let inner_exps = exponents(s, inner_horizon(horizon))?;
    let w = window as i64;
    let mut product = Vec::with_capacity(double.values.len());
    let mut diagonal_agrees = true;
    for k in -w..=w {
        let table = |i: usize, n: usize| a.evaluate(&(&outer_exps[i] + &inner_exps[n] + k));
        match product_limit(table, horizon)? {
            Ok(p) => {
                diagonal_agrees &= p.agree;
                product.push(p.iterated.value);
            }
            Err(source) => return Err(ConeError::Table { k, source }),
        }
    }
    Ok(CompositionReport {
        first,
        double,
        product,
        diagonal_agrees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{build_infmany, build_periodic};
    use crate::scaling::default_schedule;
    use num_rational::Rational64;

    fn s2() -> ScalingSet {
        default_schedule(2).unwrap()
    }

    #[test]
    fn constant_cone() {
        let r = cone(&BitSequence::constant(1), &s2(), 10, 64).unwrap();
        assert!(r.values.iter().all(|&b| b == 1));
        assert_eq!(r.max_stable_from(), 0);
        assert_eq!(r.identified, Some(BitSequence::constant(1)));
    }

    #[test]
    fn single_ones_escape() {
        let r = cone(&BitSequence::single_ones([0]), &s2(), 10, 64).unwrap();
        assert!(r.values.iter().all(|&b| b == 0));
        assert!(r.subsample_consistent(1, 2).unwrap());
    }

    #[test]
    fn oscillating_base_is_refused() {
        // s_n = n and a_k = 1 iff k is even: the samples alternate
        let s = ScalingSet::custom_u64(&(0..=64).collect::<Vec<_>>()).unwrap();
        let a = BitSequence::divisible_by(2).unwrap();
        match cone(&a, &s, 3, 64) {
            Err(ConeError::UnstableAt { k, trace }) => {
                assert_eq!(k, -3);
                assert_eq!(&trace[..4], &[0, 1, 0, 1]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn preconditions() {
        assert!(matches!(
            cone(&BitSequence::constant(0), &s2(), 40, 64),
            Err(ConeError::Precondition(_))
        ));
        let short = ScalingSet::custom_u64(&[5, 9, 20]).unwrap();
        assert!(matches!(
            cone(&BitSequence::constant(0), &short, 1, 4),
            Err(ConeError::Seq(SeqError::ScalingExhausted(3)))
        ));
    }

    #[test]
    fn periodic_absorption() {
        // 4^{n+2} = 1 mod 3 and = 0 mod 4
        let p = BitSequence::periodic(vec![1, 0, 0], 0).unwrap();
        let r = cone(&p, &s2(), 20, 64).unwrap();
        let oracle: Vec<Bit> = (-20..=20).map(|k: i64| ((k + 1).rem_euclid(3) == 0) as Bit).collect();
        assert_eq!(r.values, oracle);
        assert_eq!(r.identified, Some(BitSequence::periodic(vec![1, 0, 0], 1).unwrap()));
        let d = cone(&BitSequence::divisible_by(4).unwrap(), &s2(), 20, 64).unwrap();
        assert_eq!(d.identified, Some(BitSequence::divisible_by(4).unwrap()));
    }

    #[test]
    fn sturmian_shift_by_residue() {
        let a = BitSequence::sturmian_ratio(1, 3);
        let r = cone(&a, &s2(), 15, 64).unwrap();
        let oracle: Vec<Bit> = (-15..=15).map(|k| a.at(k + 1).unwrap()).collect();
        assert_eq!(r.values, oracle);
    }

    #[test]
    fn infmany_member_cone() {
        let fam = build_infmany(&s2(), 6).unwrap();
        let r = cone(&fam.member(0), &s2(), 50, default_horizon(50)).unwrap();
        assert_eq!(r.values, fam.member(1).window(-50, 50).unwrap());
        assert_eq!(r.identified, Some(fam.member(1)));
        assert!(r.certificates_agree());
        assert!(r.subsample_consistent(0, 3).unwrap());
    }

    #[test]
    fn iterate_depths() {
        let fam = build_infmany(&s2(), 6).unwrap();
        let zero = iterate_cone(&fam.member(0), &s2(), 0, 20, 64).unwrap();
        assert_eq!(zero.values, fam.member(0).window(-20, 20).unwrap());
        let two = iterate_cone(&fam.member(0), &s2(), 2, 20, 64).unwrap();
        assert_eq!(two.values, fam.member(2).window(-20, 20).unwrap());

        let per = build_periodic(3, &s2()).unwrap();
        let three = iterate_cone(&per.member(0), &s2(), 3, 50, default_horizon(50)).unwrap();
        assert_eq!(three.values, per.member(0).window(-50, 50).unwrap());
    }

    #[test]
    fn lazy_values_match_numeric_cone() {
        let a = BitSequence::rich_sturmian(Rational64::new(1, 3)).unwrap();
        let s = ScalingSet::factorial();
        let lazy = a.cone_of(s.clone());
        let numeric = cone(&BitSequence::sturmian_ratio(1, 3), &s, 5, 64).unwrap();
        // the sparse words never reach (n+1)! + k for these n, so the two agree
        for k in -5..=5 {
            assert_eq!(lazy.at(k).unwrap(), numeric.value(k).unwrap());
        }
    }

    #[test]
    fn composition_examples() {
        let s = s2();
        assert!(composition_check(&BitSequence::constant(0), &s, &s, 10, 32).unwrap().holds());
        let d4 = BitSequence::divisible_by(4).unwrap();
        let r = composition_check(&d4, &s, &s, 10, 32).unwrap();
        assert!(r.holds());
        assert_eq!(r.product, d4.window(-10, 10).unwrap());
        let fam = build_infmany(&s, 6).unwrap();
        let r = composition_check(&fam.member(0), &s, &s, 10, 32).unwrap();
        assert!(r.holds());
        assert_eq!(r.product, fam.member(2).window(-10, 10).unwrap());
    }

    #[test]
    fn serializes_certificates() {
        let r = cone(&BitSequence::constant(1), &s2(), 1, 64).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["values"], serde_json::json!([1, 1, 1]));
        assert_eq!(v["certificates"][0]["k"], -1);
        assert_eq!(v["certificates"][2]["horizon"], 64);
    }
}
