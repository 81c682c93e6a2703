//! Certified limits of eventually constant sequences.
//!
//! Non-principal ultrafilters cannot be represented, but every one of them
//! contains all cofinite sets, so a sequence that is constant from some index
//! on has the same limit along every non-principal ultrafilter. A
//! [`StabilizedLimit`] is the finite witness: the sampled terms are constant
//! on `[stable_from, horizon]`, with `stable_from <= horizon / 2`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizedLimit<T> {
    pub value: T,
    pub stable_from: usize,
    pub horizon: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LimitOutcome<T> {
    Stable(StabilizedLimit<T>),
    /// The sampled terms, for diagnosis.
    Unstable(Vec<T>),
}

impl<T> LimitOutcome<T> {
    pub fn stable(self) -> Option<StabilizedLimit<T>> {
        match self {
            LimitOutcome::Stable(s) => Some(s),
            LimitOutcome::Unstable(_) => None,
        }
    }

    pub fn is_stable(&self) -> bool {
        matches!(self, LimitOutcome::Stable(_))
    }
}

/// Certifies the limit of `sample(0..=horizon)`.
///
/// `stable_from` is the least index from which the samples are constant; it
/// must be at most `horizon / 2`.
pub fn filter_limit<T, F>(mut sample: F, horizon: usize) -> LimitOutcome<T>
where
    T: PartialEq,
    F: FnMut(usize) -> T,
{
    let values: Vec<T> = (0..=horizon).map(&mut sample).collect();
    certify(values, 0)
}

/// Like [`filter_limit`] for fallible samplers. Errors abort the scan.
pub fn try_filter_limit<T, E, F>(mut sample: F, horizon: usize) -> Result<LimitOutcome<T>, E>
where
    T: PartialEq,
    F: FnMut(usize) -> Result<T, E>,
{
    let values = (0..=horizon).map(&mut sample).collect::<Result<Vec<T>, E>>()?;
    Ok(certify(values, 0))
}

/// Tail certificate: samples `start..=horizon` only, and requires the
/// constant run to cover at least the upper half of that range.
pub fn try_tail_limit<T, E, F>(
    mut sample: F,
    start: usize,
    horizon: usize,
) -> Result<LimitOutcome<T>, E>
where
    T: PartialEq,
    F: FnMut(usize) -> Result<T, E>,
{
    assert!(start <= horizon);
    let values = (start..=horizon).map(&mut sample).collect::<Result<Vec<T>, E>>()?;
    Ok(certify(values, start))
}

fn certify<T: PartialEq>(mut values: Vec<T>, start: usize) -> LimitOutcome<T> {
    let last = values.len() - 1;
    let mut first = last;
    while first > 0 && values[first - 1] == values[last] {
        first -= 1;
    }
    let horizon = start + last;
    let stable_from = start + first;
    if first <= last / 2 {
        let value = values.swap_remove(last);
        LimitOutcome::Stable(StabilizedLimit {
            value,
            stable_from,
            horizon,
        })
    } else {
        LimitOutcome::Unstable(values)
    }
}

impl<T: PartialEq> StabilizedLimit<T> {
    /// Re-samples `[stable_from, horizon]` and compares with the stored value.
    pub fn recheck<F: FnMut(usize) -> T>(&self, mut sample: F) -> bool {
        (self.stable_from..=self.horizon).all(|n| sample(n) == self.value)
    }

    /// Samples the sub-sequence `stable_from + offset + stride * j` up to the
    /// horizon; every infinite sub-sequence of an eventually constant
    /// sequence has the same limit.
    pub fn subsample_consistent<F: FnMut(usize) -> T>(
        &self,
        mut sample: F,
        offset: usize,
        stride: usize,
    ) -> bool {
        assert!(stride >= 1);
        let mut n = self.stable_from + offset;
        let mut seen = false;
        while n <= self.horizon {
            if sample(n) != self.value {
                return false;
            }
            seen = true;
            n += stride;
        }
        seen || offset > self.horizon - self.stable_from
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LimitError {
    #[error("inner limit of row {row} did not stabilize")]
    UnstableRow { row: usize },
    #[error("outer limit did not stabilize")]
    UnstableOuter,
}

/// Result of comparing the iterated limit of a double table with its limit
/// along a dominating diagonal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductLimit<T> {
    pub iterated: StabilizedLimit<T>,
    pub diagonal: LimitOutcome<T>,
    pub agree: bool,
}

/// Horizon of the inner limit in row `row`. Rows further out need their
/// inner samples to reach further before they settle.
pub fn inner_horizon(row: usize) -> usize {
    2 * row + 16
}

/// Iterated limit `lim_i lim_j table(i, j)` against the limit along the
/// diagonal `i -> (i, d(i))`, where `d(i)` dominates every inner
/// stabilization index seen so far. For a product ultrafilter the set
/// `{(i, j) : j >= d(i)}` is large, so the two must agree.
pub fn product_limit<T, E, F>(mut table: F, horizon: usize) -> Result<Result<ProductLimit<T>, LimitError>, E>
where
    T: PartialEq + Clone,
    F: FnMut(usize, usize) -> Result<T, E>,
{
    let mut rows = Vec::with_capacity(horizon + 1);
    for i in 0..=horizon {
        match try_filter_limit(|j| table(i, j), inner_horizon(i))? {
            LimitOutcome::Stable(s) => rows.push(s),
            LimitOutcome::Unstable(_) => return Ok(Err(LimitError::UnstableRow { row: i })),
        }
    }
    let iterated = match filter_limit(|i| rows[i].value.clone(), horizon) {
        LimitOutcome::Stable(s) => s,
        LimitOutcome::Unstable(_) => return Ok(Err(LimitError::UnstableOuter)),
    };
    let mut reach = 0;
    let mut diag_points = Vec::with_capacity(horizon + 1);
    for (i, row) in rows.iter().enumerate() {
        reach = reach.max(row.stable_from).max(i);
        diag_points.push(reach.min(row.horizon));
    }
    let diagonal = try_filter_limit(|i| table(i, diag_points[i]), horizon)?;
    let agree = matches!(&diagonal, LimitOutcome::Stable(d) if d.value == iterated.value);
    Ok(Ok(ProductLimit {
        iterated,
        diagonal,
        agree,
    }))
}

/// `true` iff the iterated limit equals the diagonal product limit.
pub fn product_limit_check<T, F>(mut table: F, horizon: usize) -> Result<bool, LimitError>
where
    T: PartialEq + Clone,
    F: FnMut(usize, usize) -> T,
{
    let r: Result<_, std::convert::Infallible> = product_limit(|i, j| Ok(table(i, j)), horizon);
    match r {
        Ok(inner) => inner.map(|p| p.agree),
        Err(never) => match never {},
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_sequence() {
        let l = filter_limit(|_| 1u8, 100).stable().unwrap();
        assert_eq!((l.value, l.stable_from, l.horizon), (1, 0, 100));
    }

    #[test]
    fn eventually_constant() {
        let l = filter_limit(|n| (n >= 5) as u8, 100).stable().unwrap();
        assert_eq!((l.value, l.stable_from), (1, 5));
        assert!(l.recheck(|n| (n >= 5) as u8));
    }

    #[test]
    fn parity_has_no_certificate() {
        assert!(!filter_limit(|n| n % 2, 100).is_stable());
    }

    #[test]
    fn late_stabilization_is_refused() {
        // constant only on the last third of the samples
        assert!(!filter_limit(|n| (n >= 70) as u8, 100).is_stable());
        assert!(filter_limit(|n| (n >= 50) as u8, 100).is_stable());
    }

    #[test]
    fn tail_certificates() {
        let r: Result<_, ()> = try_tail_limit(|n| Ok((n >= 12) as u8), 10, 30);
        let l = r.unwrap().stable().unwrap();
        assert_eq!((l.stable_from, l.horizon), (12, 30));
    }

    #[test]
    fn product_examples() {
        assert_eq!(product_limit_check(|_, _| 1u8, 40), Ok(true));
        assert_eq!(product_limit_check(|i, j| (j >= i) as u8, 40), Ok(true));
        assert_eq!(
            product_limit_check(|i, j| ((i + j) % 2) as u8, 40),
            Err(LimitError::UnstableRow { row: 0 })
        );
    }

    #[test]
    fn product_by_enumeration() {
        // oracle: enumerate the j >= i table directly
        let h = 30;
        let rows: Vec<u8> = (0..=h)
            .map(|i| {
                let vals: Vec<u8> = (0..=inner_horizon(i)).map(|j| (j >= i) as u8).collect();
                *vals.last().unwrap()
            })
            .collect();
        assert!(rows.iter().all(|&v| v == 1));
        let p: Result<_, ()> = product_limit(|i, j| Ok((j >= i) as u8), h);
        let p = p.unwrap().unwrap();
        assert_eq!(p.iterated.value, 1);
        assert!(p.agree);
    }

    #[test]
    fn seeded_random_eventually_constant_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let row_from: Vec<usize> = (0..=40).map(|_| rng.gen_range(0..8)).collect();
            let row_val: Vec<u8> = (0..=40).map(|_| rng.gen_range(0..=1)).collect();
            let outer_from = rng.gen_range(0..10);
            let limit = rng.gen_range(0..=1u8);
            let noise: Vec<u8> = (0..2000).map(|_| rng.gen_range(0..=1)).collect();
            let table = |i: usize, j: usize| {
                let row_limit = if i >= outer_from { limit } else { row_val[i] };
                if j >= row_from[i] + i / 4 {
                    row_limit
                } else {
                    noise[(i * 37 + j) % noise.len()]
                }
            };
            assert_eq!(product_limit_check(table, 40), Ok(true));
        }
    }

    proptest! {
        #[test]
        fn certificate_soundness(prefix in prop::collection::vec(0u8..=1, 0..40), tail in 0u8..=1, h in 1usize..200) {
            let f = |n: usize| prefix.get(n).copied().unwrap_or(tail);
            if let LimitOutcome::Stable(l) = filter_limit(f, h) {
                prop_assert!(l.stable_from <= l.horizon);
                prop_assert!(l.recheck(f));
                prop_assert!(l.subsample_consistent(f, 1, 3));
            }
        }

        #[test]
        fn monotone_horizon(prefix in prop::collection::vec(0u8..=1, 0..40), tail in 0u8..=1) {
            let f = |n: usize| prefix.get(n).copied().unwrap_or(tail);
            // before the true stabilization point a constant prefix can certify
            // a different value, so monotonicity starts at the prefix length
            let mut first = None;
            for h in prefix.len().max(1)..200 {
                match (filter_limit(f, h), first) {
                    (LimitOutcome::Stable(l), None) => first = Some(l.value),
                    (LimitOutcome::Stable(l), Some(v)) => prop_assert_eq!(l.value, v),
                    (LimitOutcome::Unstable(_), Some(_)) => prop_assert!(false, "lost stability at {}", h),
                    _ => {}
                }
            }
            prop_assert_eq!(first, Some(tail));
        }
    }
}
