//! Sequence families whose iterated cones behave in prescribed ways.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::cone::{cone, default_horizon, iterate_chain, ConeError, ConeResult, ConeSource};
use crate::limits::{filter_limit, LimitOutcome};
use crate::scaling::{RadiusRule, ScalingError, ScalingSet, VariableParts};
use crate::seqcore::rich::WordLayout;
use crate::seqcore::{Bit, BitSequence, Family, FamilyJson, FamilyKind, SeqError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructionError {
    #[error(transparent)]
    Disjointness(#[from] ScalingError),
    #[error("interval {0} is too wide for patch hops to terminate")]
    DepthExceeded(usize),
    #[error("{0}")]
    BadParameter(String),
    #[error("no occurrence for exponent {n} within the search limit")]
    SearchExhausted { n: usize },
    #[error("scheme implication fails for n = {n}, m = {m}")]
    SchemeViolation { n: usize, m: usize },
    #[error("step {step} does not reproduce its target on the window")]
    StepMismatch { step: usize },
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Seq(#[from] SeqError),
}

/// Intervals checked when a family is built over an infinite schedule.
const CHECKED_INTERVALS: usize = 64;

/// A patched family together with its scaling factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilySpec {
    family: Arc<Family>,
}

impl FamilySpec {
    fn new(kind: FamilyKind, parts: VariableParts, levels: u64) -> Result<Self, ConstructionError> {
        let count = parts.scaling.len().unwrap_or(CHECKED_INTERVALS).min(CHECKED_INTERVALS);
        parts.check_disjoint(count)?;
        // a hop out of interval n must land below its left end
        for n in 0..count {
            let center = parts.scaling.exp(n);
            if 2 * parts.radius.radius(n, &center) >= center {
                return Err(ConstructionError::DepthExceeded(n));
            }
        }
        Ok(FamilySpec {
            family: Arc::new(Family { kind, parts, levels }),
        })
    }

    pub fn family(&self) -> &Arc<Family> {
        &self.family
    }

    pub fn scaling(&self) -> &ScalingSet {
        &self.family.parts.scaling
    }

    pub fn member(&self, i: u64) -> BitSequence {
        BitSequence::member(self.family.clone(), i)
    }

    pub fn density(&self, i: u64) -> Rational64 {
        self.family.base_density(i)
    }
}

impl Serialize for FamilySpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        FamilyJson::from(&*self.family).serialize(serializer)
    }
}

/// Member `i` has density `1/(i+1)`; its cone along `s` is member `i+1`.
pub fn build_infmany(s: &ScalingSet, levels: u64) -> Result<FamilySpec, ConstructionError> {
    if levels < 2 {
        return Err(ConstructionError::BadParameter("levels must be at least 2".into()));
    }
    FamilySpec::new(
        FamilyKind::InfMany,
        VariableParts::new(s.clone(), RadiusRule::Thin),
        levels,
    )
}

/// Member `i` equals member `i + m`; members `0..m` have densities
/// `1/2, ..., 1/(m+1)`.
pub fn build_periodic(m: u64, s: &ScalingSet) -> Result<FamilySpec, ConstructionError> {
    if m == 0 {
        return Err(ConstructionError::BadParameter("period must be at least 1".into()));
    }
    FamilySpec::new(
        FamilyKind::Periodic { m },
        VariableParts::new(s.clone(), RadiusRule::Thin),
        0,
    )
}

/// Levels `1..=k` of the transfinite tower.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransfiniteTower {
    pub levels: Vec<FamilySpec>,
}

impl TransfiniteTower {
    /// Level `j` (1-based).
    pub fn level(&self, j: usize) -> &FamilySpec {
        &self.levels[j - 1]
    }

    /// The sequence the ω-cone of level `j` reproduces.
    pub fn target(&self, j: usize) -> &BitSequence {
        match &self.level(j).family.kind {
            FamilyKind::Transfinite { target, .. } => target,
            _ => unreachable!("tower levels are transfinite families"),
        }
    }
}

/// Default number of patched members per tower level.
pub const TRANSFINITE_LEVELS: u64 = 64;

/// Level 1 is pinned to `Sturmian(3/5)`; level `j` is pinned to member 0 of
/// level `j - 1`. Member `i` agrees with its target on `[-i, i]`.
pub fn build_transfinite(k: u32, s: &ScalingSet, levels: u64) -> Result<TransfiniteTower, ConstructionError> {
    if k == 0 {
        return Err(ConstructionError::BadParameter("tower height must be at least 1".into()));
    }
    let mut out: Vec<FamilySpec> = Vec::new();
    let mut target = BitSequence::sturmian_ratio(3, 5);
    for level in 1..=k {
        let spec = FamilySpec::new(
            FamilyKind::Transfinite { level, target },
            VariableParts::new(s.clone(), RadiusRule::Thin),
            levels,
        )?;
        target = spec.member(0);
        out.push(spec);
    }
    Ok(TransfiniteTower { levels: out })
}

/// `lim_i` of the `i`-th iterated cone of `a`, over `i <= iterations`.
pub fn cone_omega(
    a: &BitSequence,
    s: &ScalingSet,
    window: u64,
    iterations: usize,
    horizon: usize,
) -> Result<ConeResult, ConeError> {
    let chain = iterate_chain(a, s, iterations, window, horizon)?;
    let w = window as i64;
    let mut values = Vec::new();
    let mut certificates = Vec::new();
    for (idx, k) in (-w..=w).enumerate() {
        match filter_limit(|i| chain[i].values[idx], iterations) {
            LimitOutcome::Stable(c) => {
                values.push(c.value);
                certificates.push(c);
            }
            LimitOutcome::Unstable(trace) => return Err(ConeError::UnstableAt { k, trace }),
        }
    }
    let chain = chain
        .into_iter()
        .map(|r| r.identified.expect("iterate_chain only continues from identified steps"))
        .collect();
    Ok(ConeResult {
        window,
        values,
        certificates,
        identified: None,
        source: ConeSource::Omega { chain },
    })
}

/// Exponents `i_0 < i_1 < ...` such that `rich` agrees with `target` on
/// `[i_n - r_n, i_n + r_n]` recentred at 0, where `r_n = min(n, terms)`.
///
/// `default_horizon(terms) + 1` exponents are returned so that
/// `cone(rich, result, terms, default_horizon(terms))` certifies the whole
/// window. The prefix `[1, search_limit]` is scanned first; for rich layouts
/// the search continues over the explicit word occurrences.
pub fn find_scaling_for_density(
    rich: &BitSequence,
    target: &BitSequence,
    terms: u64,
    search_limit: u64,
) -> Result<ScalingSet, ConstructionError> {
    if terms == 0 {
        return Ok(ScalingSet::custom(Vec::new())?);
    }
    let count = default_horizon(terms) + 1;
    let prefix = rich.window(1, search_limit as i64)?;
    let patterns: Vec<Vec<Bit>> = (0..=terms as i64)
        .map(|r| target.window(-r, r))
        .collect::<Result<_, _>>()?;
    let layout = WordLayout::of(rich);
    let mut exponents: Vec<BigInt> = Vec::with_capacity(count);
    let mut next_scan = 1u64;
    for n in 0..count {
        let r = (n as u64).min(terms);
        let pattern = &patterns[r as usize];
        let floor = exponents.last().map_or(BigInt::zero(), |e| e + 1u32);
        // centres c with [c - r, c + r] inside the prefix
        let first = next_scan.max(r + 1);
        let found = (first..=search_limit.saturating_sub(r)).find(|&c| {
            let lo = (c - r - 1) as usize;
            &prefix[lo..lo + pattern.len()] == pattern.as_slice()
        });
        let centre = match found {
            Some(c) => {
                next_scan = c + 1;
                BigInt::from(c)
            }
            None => {
                next_scan = u64::MAX;
                let layout = layout.ok_or(ConstructionError::SearchExhausted { n })?;
                layout
                    .aligned_occurrences(pattern)
                    .map(|start| start + r)
                    .find(|c| c >= &floor)
                    .expect("rich layouts repeat every word")
            }
        };
        exponents.push(centre);
    }
    Ok(ScalingSet::custom(exponents)?)
}

/// Rich sequence with embedded density `1/(v+2)` for assignment value `v`.
pub fn varying_beta(v: u64) -> BitSequence {
    BitSequence::rich_sturmian(Rational64::new(1, v as i64 + 2)).expect("slope in [0, 1]")
}

#[derive(Clone, Debug, Serialize)]
pub struct VaryingStep {
    pub value: u64,
    pub beta: BitSequence,
    /// Scaling factor leading from the previous step to this one.
    pub scaling: Option<ScalingSet>,
    pub cone: ConeResult,
}

/// Step `1` is `β(a_0)`; step `j + 1` is the cone of step `j` along a
/// scaling found so that it reproduces `β(a_j)` on `[-window, window]`.
pub fn build_varying(
    assignment: &[u64],
    window: u64,
    search_limit: u64,
) -> Result<Vec<VaryingStep>, ConstructionError> {
    let Some((&a0, rest)) = assignment.split_first() else {
        return Ok(Vec::new());
    };
    if window == 0 {
        return Err(ConstructionError::BadParameter("window must be at least 1".into()));
    }
    let first = varying_beta(a0);
    let mut steps = vec![VaryingStep {
        value: a0,
        beta: first.clone(),
        scaling: None,
        cone: ConeResult::input(&first, window)?,
    }];
    for &v in rest {
        let prev = steps.last().expect("at least one step").beta.clone();
        let beta = varying_beta(v);
        let s = find_scaling_for_density(&prev, &beta, window, search_limit)?;
        let mut c = cone(&prev, &s, window, default_horizon(window))?;
        let w = window as i64;
        if c.values != beta.window(-w, w)? {
            return Err(ConstructionError::StepMismatch { step: steps.len() + 1 });
        }
        c.identified = Some(beta.clone());
        steps.push(VaryingStep {
            value: v,
            beta,
            scaling: Some(s),
            cone: c,
        });
    }
    Ok(steps)
}

/// Interval centres `α_j` and radii `k(j)` of the nested scheme, in
/// exponent space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NestedIntervalScheme {
    parts: VariableParts,
}

/// First `(n, m)` at which either implication fails:
/// `α_m - k(m) <= k(n)  =>  α_m + k(m) <= k(n) - n` and
/// `α_m + k(m) >= k(n)  =>  α_m - k(m) >= k(n) + n`.
pub fn scheme_violation(alphas: &[BigInt], radii: &[BigInt]) -> Option<(usize, usize)> {
    for (n, kn) in radii.iter().enumerate() {
        for (m, (am, km)) in alphas.iter().zip(radii).enumerate() {
            let lo = am - km;
            let hi = am + km;
            let first = lo > *kn || hi <= kn - n;
            let second = hi < *kn || lo >= kn + n;
            if !(first && second) {
                return Some((n, m));
            }
        }
    }
    None
}

impl NestedIntervalScheme {
    pub fn new(parts: VariableParts) -> Self {
        NestedIntervalScheme { parts }
    }

    pub fn parts(&self) -> &VariableParts {
        &self.parts
    }

    pub fn alpha(&self, j: usize) -> BigInt {
        self.parts.scaling.exp(j)
    }

    pub fn radius(&self, j: usize) -> BigInt {
        self.parts.radius.radius(j, &self.alpha(j))
    }

    /// Checks both implications and `k(n) >= n` for `n, m < count`.
    pub fn check(&self, count: usize) -> Result<(), ConstructionError> {
        let alphas: Vec<BigInt> = (0..count).map(|j| self.alpha(j)).collect();
        let radii: Vec<BigInt> = (0..count).map(|j| self.radius(j)).collect();
        if let Some(n) = (0..count).find(|&n| radii[n] < BigInt::from(n)) {
            return Err(ConstructionError::SchemeViolation { n, m: n });
        }
        match scheme_violation(&alphas, &radii) {
            Some((n, m)) => Err(ConstructionError::SchemeViolation { n, m }),
            None => Ok(()),
        }
    }

    /// Number of nested variable parts containing `k`.
    pub fn depth(&self, k: &BigInt) -> usize {
        let mut k = k.clone();
        let mut t = 0;
        while let Some(hit) = self.parts.locate(&k) {
            k -= hit.center;
            t += 1;
        }
        t
    }
}

/// Indices `n, m` covered by the scheme check.
pub const SCHEME_CHECK: usize = 13;

/// Bases `DivisibleBy(i+2)`, patched along the nested scheme
/// `α_j = 2^{(j+2)(j+3)}`, `k(j) = 2^{(j+2)^2}`.
pub fn build_onlycount(levels: u64) -> Result<(FamilySpec, NestedIntervalScheme), ConstructionError> {
    if levels == 0 {
        return Err(ConstructionError::BadParameter("levels must be at least 1".into()));
    }
    let parts = VariableParts::new(ScalingSet::nested_powers(), RadiusRule::NestedPowers);
    let scheme = NestedIntervalScheme::new(parts.clone());
    scheme.check(SCHEME_CHECK)?;
    let spec = FamilySpec::new(FamilyKind::OnlyCount, parts, levels)?;
    Ok((spec, scheme))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ConeClass {
    /// At most two ones on the window.
    Class1 { ones: usize },
    /// `DivisibleBy(i+2)` before `cut` and `DivisibleBy(i+3)` from `cut` on,
    /// each up to a shift; `reversed` swaps the two pieces.
    Class2 { i: u64, cut: i64, reversed: bool },
    Unclassified,
}

fn divisible(d: u64, shift: u64, k: i64) -> Bit {
    ((k + shift as i64).rem_euclid(d as i64) == 0) as Bit
}

/// Longest prefix (or suffix) of `values` matching some shift of `1_{d | k}`.
fn best_run(values: &[Bit], lo: i64, d: u64, from_end: bool) -> usize {
    (0..d)
        .map(|shift| {
            let matches = |(idx, &v): (usize, &Bit)| v == divisible(d, shift, lo + idx as i64);
            if from_end {
                values.iter().enumerate().rev().take_while(|p| matches(*p)).count()
            } else {
                values.iter().enumerate().take_while(|p| matches(*p)).count()
            }
        })
        .max()
        .unwrap_or(0)
}

/// Classifies the window `values` on `[-w, w]` against consecutive
/// divisibility bases.
pub fn classify_window(values: &[Bit]) -> ConeClass {
    let ones = values.iter().filter(|&&b| b == 1).count();
    if ones <= 2 {
        return ConeClass::Class1 { ones };
    }
    let len = values.len();
    let w = (len / 2) as i64;
    let lo = -w;
    // beyond this divisor a window has at most two ones
    let max_i = len as u64;
    for i in 0..=max_i {
        if best_run(values, lo, i + 2, false) == len {
            return ConeClass::Class2 { i, cut: w + 1, reversed: false };
        }
    }
    for i in 0..=max_i {
        for reversed in [false, true] {
            let (d1, d2) = if reversed { (i + 3, i + 2) } else { (i + 2, i + 3) };
            let head = best_run(values, lo, d1, false);
            let tail = best_run(values, lo, d2, true);
            if head + tail >= len {
                let cut = lo + (len - tail) as i64;
                return ConeClass::Class2 { i, cut, reversed };
            }
        }
    }
    ConeClass::Unclassified
}

pub fn classify_cone(c: &ConeResult) -> ConeClass {
    classify_window(&c.values)
}

/// How a sampled scaling factor was drawn.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum SampleRegime {
    /// `x_n = α_1 + ... + α_{n+1} + δ`: nesting depth grows with `n`.
    Unbounded { delta: i64 },
    /// `x_n = α_{n+depth+1} + ... + α_{n+2} + δ`: nesting depth `depth`.
    FixedDepth { depth: usize, delta: i64 },
}

#[derive(Clone, Debug)]
pub struct ScalingSample {
    pub regime: SampleRegime,
    pub scaling: ScalingSet,
}

/// Members reached by sampled scalings over `horizon` terms.
pub fn onlycount_levels_needed(horizon: usize) -> u64 {
    horizon as u64 + 4
}

/// `count` seeded scaling factors for the onlycount family, half of them
/// (in expectation) with unbounded nesting depth.
pub fn sample_onlycount_scalings(seed: u64, count: usize, horizon: usize) -> Vec<ScalingSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = |j: usize| BigInt::one() << ((j + 2) * (j + 3));
    (0..count)
        .map(|_| {
            let regime = if rng.gen_bool(0.5) {
                SampleRegime::Unbounded { delta: rng.gen_range(-8..=8) }
            } else {
                SampleRegime::FixedDepth {
                    depth: rng.gen_range(1..=3),
                    delta: rng.gen_range(-100..=100),
                }
            };
            let exponents = (0..=horizon)
                .map(|n| match regime {
                    SampleRegime::Unbounded { delta } => {
                        (1..=n + 1).map(alpha).sum::<BigInt>() + delta
                    }
                    SampleRegime::FixedDepth { depth, delta } => {
                        (n + 2..=n + depth + 1).map(alpha).sum::<BigInt>() + delta
                    }
                })
                .collect();
            ScalingSample {
                regime,
                scaling: ScalingSet::custom(exponents).expect("sums of increasing powers increase"),
            }
        })
        .collect()
}
