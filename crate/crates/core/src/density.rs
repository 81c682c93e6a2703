//! Asymptotic density `limsup_n (2n+1)^{-1} sum_{|k| <= n} a_k`.
//!
//! Closed forms are returned where the descriptor determines the limit;
//! everything else is reported as exact window averages.

use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::seqcore::{BitSequence, Descriptor, SeqError};
use crate::wire::RationalJson;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DensityError {
    #[error("no closed-form density for this descriptor")]
    NotClosedForm,
    #[error(transparent)]
    Seq(#[from] SeqError),
}

/// Exact density for descriptors with a closed form.
pub fn adn_exact(seq: &BitSequence) -> Result<Rational64, DensityError> {
    match seq.descriptor() {
        Descriptor::Constant(b) => Ok(Rational64::from(*b as i64)),
        Descriptor::Periodic { pattern, .. } => {
            let ones = pattern.iter().filter(|&&b| b == 1).count() as i64;
            Ok(Rational64::new(ones, pattern.len() as i64))
        }
        Descriptor::Sturmian(t) | Descriptor::RichSturmian(t) => Ok(*t),
        Descriptor::DivisibleBy(d) => Ok(Rational64::new(1, *d as i64)),
        Descriptor::SingleOnes(_) => Ok(Rational64::zero()),
        Descriptor::Shifted { base, .. } => adn_exact(base),
        // finitely many patches never change a density
        Descriptor::Patched { base, .. } => adn_exact(base),
        // the variable part of a thin family is a vanishing fraction of every
        // window, so member i keeps the density of its base
        Descriptor::Member(m) => Ok(m.family().base_density(m.index())),
        Descriptor::Rich | Descriptor::ConeOf { .. } => Err(DensityError::NotClosedForm),
    }
}

/// `(2n+1)^{-1} sum_{k=-n}^{n} a_k`.
pub fn adn_estimate(seq: &BitSequence, n: u64) -> Result<Rational64, SeqError> {
    assert!(n >= 1, "window radius must be positive");
    let ones = window_sum(seq, -(n as i64), n as i64)?;
    Ok(Rational64::new(ones, 2 * n as i64 + 1))
}

fn window_sum(seq: &BitSequence, lo: i64, hi: i64) -> Result<i64, SeqError> {
    let mut ones = 0i64;
    for k in lo..=hi {
        ones += seq.at(k)? as i64;
    }
    Ok(ones)
}

/// Difference between the window averages of `seq` and its shift by `shift`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftBound {
    pub difference: Rational64,
    pub bound: Rational64,
}

impl ShiftBound {
    pub fn holds(&self) -> bool {
        self.difference <= self.bound
    }
}

/// `|avg_n(a) - avg_n(a shifted by N)|` against `|N|/(2n+1)`.
pub fn shift_bound(seq: &BitSequence, shift: i64, n: u64) -> Result<ShiftBound, SeqError> {
    assert!(n > shift.unsigned_abs(), "window radius must exceed the shift");
    let plain = adn_estimate(seq, n)?;
    let moved = adn_estimate(&seq.shifted(BigInt::from(shift)), n)?;
    Ok(ShiftBound {
        difference: (plain - moved).abs(),
        bound: Rational64::new(shift.abs(), 2 * n as i64 + 1),
    })
}

pub fn shift_bound_check(seq: &BitSequence, shift: i64, n: u64) -> Result<bool, SeqError> {
    Ok(shift_bound(seq, shift, n)?.holds())
}

/// Error envelope `C/(2n+1)` of the window averages around the exact
/// density, when the descriptor class has one.
pub fn coherence_constant(seq: &BitSequence) -> Option<i64> {
    match seq.descriptor() {
        Descriptor::Constant(_) => Some(0),
        Descriptor::Periodic { pattern, .. } => Some(pattern.len() as i64),
        Descriptor::Sturmian(_) => Some(2),
        Descriptor::DivisibleBy(d) => Some(*d as i64),
        Descriptor::SingleOnes(set) => Some(set.len() as i64),
        Descriptor::Shifted { base, by } => {
            let by: i64 = by.try_into().ok()?;
            coherence_constant(base).map(|c| c + 2 * by.abs())
        }
        _ => None,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowAverage {
    pub n: u64,
    pub average: RationalJson,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityReport {
    pub exact: Option<RationalJson>,
    pub window_averages: Vec<WindowAverage>,
    pub bound: Option<RationalJson>,
}

/// Exact density (if any) and the window averages at `n = 1, 10, 100, ...`
/// up to `max_n`, plus `max_n` itself.
pub fn density_report(seq: &BitSequence, max_n: u64) -> Result<DensityReport, SeqError> {
    let exact = match adn_exact(seq) {
        Ok(r) => Some(r),
        Err(DensityError::NotClosedForm) => None,
        Err(DensityError::Seq(e)) => return Err(e),
    };
    let mut radii = Vec::new();
    let mut n = 1;
    while n < max_n {
        radii.push(n);
        n *= 10;
    }
    radii.push(max_n.max(1));
    // one pass over [-max_n, max_n], reading off the nested windows
    let top = max_n.max(1) as i64;
    let mut ones = seq.at(0)? as i64;
    let mut window_averages = Vec::new();
    let mut reached = 0i64;
    for &r in &radii {
        let r = r as i64;
        for k in reached + 1..=r {
            ones += seq.at(k)? as i64 + seq.at(-k)? as i64;
        }
        reached = r;
        window_averages.push(WindowAverage {
            n: r as u64,
            average: Rational64::new(ones, 2 * r + 1).into(),
        });
    }
    debug_assert_eq!(reached, top);
    let bound = coherence_constant(seq).map(|c| Rational64::new(c, 2 * top + 1).into());
    Ok(DensityReport {
        exact: exact.map(Into::into),
        window_averages,
        bound,
    })
}

/// `true` iff every window average lies in `[0, 1]`.
pub fn averages_in_unit_interval(report: &DensityReport) -> bool {
    report.window_averages.iter().all(|w| {
        let r = Rational64::new(w.average.num, w.average.den);
        r >= Rational64::zero() && r <= Rational64::one()
    })
}
