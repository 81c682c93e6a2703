//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bullseye::cone::{composition_check, cone, default_horizon, iterate_chain, ConeResult};
use bullseye::constructions::{
    build_infmany, build_onlycount, build_periodic, build_transfinite, build_varying, classify_cone,
    cone_omega, find_scaling_for_density, onlycount_levels_needed, sample_onlycount_scalings, ConeClass,
    SCHEME_CHECK, TRANSFINITE_LEVELS,
};
use bullseye::density::{adn_exact, adn_estimate, shift_bound};
use bullseye::geometry::{build_window, render_svg, self_similarity_check, shift_equivalent, ShiftMatch};
use bullseye::limits::{product_limit, product_limit_check};
use bullseye::scaling::default_schedule;
use bullseye::BitSequence;

type Outcome = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Debug>(err: E) -> String {
    format!("{err:?}")
}

fn pairwise_distinct<T: PartialEq>(xs: &[T]) -> bool {
    xs.iter().enumerate().all(|(i, x)| xs[i + 1..].iter().all(|y| x != y))
}

fn within(limit: Duration, start: Instant) -> Outcome {
    let took = start.elapsed();
    ensure(took <= limit, || format!("took {took:?}, limit {limit:?}"))
}

fn infmany(cones: &mut Vec<ConeResult>) -> Outcome {
    let start = Instant::now();
    let s = default_schedule(2).map_err(e)?;
    let fam = build_infmany(&s, 6).map_err(e)?;
    for i in 0..6u64 {
        let d = adn_exact(&fam.member(i)).map_err(e)?;
        ensure(d == Rational64::new(1, i as i64 + 1), || format!("member {i} has density {d}"))?;
        let c = cone(&fam.member(i), &s, 200, default_horizon(200)).map_err(e)?;
        let want = fam.member(i + 1).window(-200, 200).map_err(e)?;
        ensure(c.values == want, || format!("cone of member {i} differs from member {}", i + 1))?;
        ensure(c.max_stable_from() <= 8, || format!("member {i}: stable-from {}", c.max_stable_from()))?;
        cones.push(c);
    }
    for i in 0..6u64 {
        for j in i + 1..6 {
            let r = shift_equivalent(&fam.member(i), &fam.member(j), 200, 2000).map_err(e)?;
            ensure(
                r == ShiftMatch::NotEquivalentUpTo { horizon: 2000 },
                || format!("members {i} and {j}: {r:?}"),
            )?;
        }
    }
    within(Duration::from_secs(30), start)
}

fn shift_bounds() -> Outcome {
    let s = default_schedule(2).map_err(e)?;
    let fam = build_infmany(&s, 6).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = Vec::new();
    for t in 0..100 {
        let seq = match t % 5 {
            0 => {
                let q = rng.gen_range(1..50);
                BitSequence::sturmian_ratio(rng.gen_range(0..=q), q)
            }
            1 => {
                let len = rng.gen_range(1..12);
                let pattern = (0..len).map(|_| rng.gen_range(0..=1)).collect();
                BitSequence::periodic(pattern, rng.gen_range(-20..20)).map_err(e)?
            }
            2 => BitSequence::divisible_by(rng.gen_range(1..30)).map_err(e)?,
            3 => BitSequence::rich(),
            _ => fam.member(rng.gen_range(0..6)),
        };
        let shift: i64 = rng.gen_range(-200..=200);
        let n = rng.gen_range(shift.unsigned_abs() + 1..=10_000);
        let r = shift_bound(&seq, shift, n).map_err(e)?;
        // oracle: only the 2|N| boundary terms can differ, each by at most one
        let (w, sh) = (n as i64, shift);
        let plain: i64 = (-w..=w).map(|k| seq.at(k).map(i64::from)).sum::<Result<_, _>>().map_err(e)?;
        let moved: i64 = (-w..=w).map(|k| seq.at(k + sh).map(i64::from)).sum::<Result<_, _>>().map_err(e)?;
        let direct = Rational64::new((plain - moved).abs(), 2 * w + 1);
        if !r.holds() || r.difference != direct || (plain - moved).abs() > sh.abs() {
            failures.push((t, shift, n));
        }
    }
    ensure(failures.is_empty(), || format!("failures: {failures:?}"))
}

fn composition(cones: &mut Vec<ConeResult>) -> Outcome {
    let s = default_schedule(2).map_err(e)?;
    let s2 = default_schedule(3).map_err(e)?;
    let fam = build_infmany(&s, 6).map_err(e)?;
    let corpus = vec![
        BitSequence::constant(0),
        BitSequence::constant(1),
        BitSequence::divisible_by(2).map_err(e)?,
        BitSequence::divisible_by(4).map_err(e)?,
        BitSequence::periodic(vec![1, 1, 0], 1).map_err(e)?,
        BitSequence::sturmian_ratio(1, 4),
        BitSequence::single_ones([-3, 0, 7]),
        fam.member(0),
        fam.member(2),
        fam.member(4),
    ];
    for (idx, a) in corpus.iter().enumerate() {
        let r = composition_check(a, &s, &s2, 50, default_horizon(50)).map_err(e)?;
        ensure(r.diagonal_agrees, || format!("descriptor {idx}: diagonal disagrees"))?;
        ensure(r.product == r.double.values, || format!("descriptor {idx}: double cone differs"))?;
        cones.push(r.first);
        cones.push(r.double);
    }
    Ok(())
}

fn periodic(cones: &mut Vec<ConeResult>) -> Outcome {
    let s = default_schedule(2).map_err(e)?;
    for m in [1u64, 2, 3, 5] {
        let start = Instant::now();
        let fam = build_periodic(m, &s).map_err(e)?;
        let chain = iterate_chain(&fam.member(0), &s, m as usize, 50, default_horizon(50)).map_err(e)?;
        ensure(chain[m as usize].values == chain[0].values, || format!("m = {m}: depth m is not the identity"))?;
        let mut densities = Vec::new();
        for step in &chain[..m as usize] {
            let id = step.identified.as_ref().ok_or_else(|| format!("m = {m}: unidentified step"))?;
            densities.push(adn_exact(id).map_err(e)?);
        }
        ensure(pairwise_distinct(&densities), || format!("m = {m}: densities {densities:?}"))?;
        within(Duration::from_secs(10), start).map_err(|msg| format!("m = {m}: {msg}"))?;
        cones.extend(chain.into_iter().skip(1));
    }
    Ok(())
}

fn rich(cones: &mut Vec<ConeResult>) -> Outcome {
    let targets: Vec<BitSequence> = [(1, 4), (1, 3), (1, 2), (2, 3), (3, 4)]
        .iter()
        .map(|&(p, q)| BitSequence::sturmian_ratio(p, q))
        .collect();
    let rich = BitSequence::rich();
    for t in &targets {
        let s = find_scaling_for_density(&rich, t, 10, 1 << 20).map_err(e)?;
        let c = cone(&rich, &s, 10, default_horizon(10)).map_err(e)?;
        ensure(c.values == t.window(-10, 10).map_err(e)?, || format!("{t:?}: cone differs"))?;
        cones.push(c);
    }
    for i in 0..targets.len() {
        for j in i + 1..targets.len() {
            // oracle: shifts preserve density, and the densities differ
            let (di, dj) = (adn_estimate(&targets[i], 10_000).map_err(e)?, adn_estimate(&targets[j], 10_000).map_err(e)?);
            ensure(di != dj, || format!("targets {i}, {j} have equal window averages"))?;
            let r = shift_equivalent(&targets[i], &targets[j], 50, 10_000).map_err(e)?;
            ensure(
                r == ShiftMatch::NotEquivalentUpTo { horizon: 10_000 },
                || format!("targets {i}, {j}: {r:?}"),
            )?;
        }
    }
    Ok(())
}

fn varying(cones: &mut Vec<ConeResult>) -> Outcome {
    let steps = build_varying(&[0, 1, 0, 2], 20, 1 << 20).map_err(e)?;
    ensure(steps.len() == 4, || format!("{} steps", steps.len()))?;
    ensure(steps[0].cone.values == steps[2].cone.values, || "steps 1 and 3 differ".into())?;
    let densities: Vec<Rational64> = [0, 1, 3]
        .iter()
        .map(|&i| adn_exact(&steps[i].beta))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    ensure(pairwise_distinct(&densities), || format!("densities {densities:?}"))?;
    // oracle: long window averages separate the three densities too
    let averages: Vec<Rational64> = [0, 1, 3]
        .iter()
        .map(|&i| adn_estimate(&steps[i].beta, 20_000))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    for (a, d) in averages.iter().zip(&densities) {
        ensure((a - d).abs() < Rational64::new(1, 50), || format!("average {a} far from {d}"))?;
    }
    cones.extend(steps.into_iter().map(|s| s.cone));
    Ok(())
}

fn transfinite(cones: &mut Vec<ConeResult>) -> Outcome {
    let s = default_schedule(2).map_err(e)?;
    let tower = build_transfinite(2, &s, TRANSFINITE_LEVELS).map_err(e)?;
    let h = default_horizon(20);
    for j in 1..=2usize {
        let level = tower.level(j);
        let omega = cone_omega(&level.member(0), &s, 20, h, h).map_err(e)?;
        ensure(omega.values == tower.target(j).window(-20, 20).map_err(e)?, || format!("level {j}: omega cone differs"))?;
        ensure(
            omega.certificates.len() == 41 && omega.certificates_agree(),
            || format!("level {j}: incomplete certificates"),
        )?;
        let chain = iterate_chain(&level.member(0), &s, 8, 20, h).map_err(e)?;
        let mut densities = Vec::new();
        for step in &chain {
            let id = step.identified.as_ref().ok_or_else(|| format!("level {j}: unidentified iterate"))?;
            densities.push(adn_exact(id).map_err(e)?);
        }
        ensure(pairwise_distinct(&densities), || format!("level {j}: densities {densities:?}"))?;
        cones.push(omega);
        cones.extend(chain.into_iter().skip(1));
    }
    Ok(())
}

fn onlycount(cones: &mut Vec<ConeResult>) -> Outcome {
    let h = default_horizon(16);
    let (fam, scheme) = build_onlycount(onlycount_levels_needed(h)).map_err(e)?;
    scheme.check(SCHEME_CHECK).map_err(e)?;
    // oracle: both implications recomputed from the closed forms
    let alpha = |j: usize| BigInt::one() << ((j + 2) * (j + 3));
    let radius = |j: usize| BigInt::one() << ((j + 2) * (j + 2));
    for n in 0..=12usize {
        for m in 0..=12usize {
            let (am, km, kn) = (alpha(m), radius(m), radius(n));
            ensure(scheme.alpha(m) == am && scheme.radius(m) == km, || format!("scheme parameters at {m}"))?;
            let first = &am - &km > kn || &am + &km <= &kn - n;
            let second = &am + &km < kn || &am - &km >= &kn + n;
            ensure(first && second, || format!("implication fails at n = {n}, m = {m}"))?;
        }
    }
    let member = fam.member(0);
    let (mut class1, mut class2) = (0, 0);
    for (idx, sample) in sample_onlycount_scalings(0, 50, h).into_iter().enumerate() {
        let c = cone(&member, &sample.scaling, 16, h).map_err(e)?;
        match classify_cone(&c) {
            ConeClass::Class1 { .. } => class1 += 1,
            ConeClass::Class2 { .. } => class2 += 1,
            ConeClass::Unclassified => return Err(format!("sample {idx} ({:?}) unclassified", sample.regime)),
        }
        cones.push(c);
    }
    ensure(class1 > 0 && class2 > 0, || format!("class counts {class1}, {class2}"))
}

fn geometry() -> Outcome {
    let corpus = [
        BitSequence::constant(1),
        BitSequence::constant(0),
        BitSequence::divisible_by(2).map_err(e)?,
        BitSequence::sturmian_ratio(2, 5),
        BitSequence::single_ones([1, 3]),
    ];
    for (idx, seq) in corpus.iter().enumerate() {
        let w = build_window(seq, 0, 5, 64).map_err(e)?;
        for k in 0..5 {
            let d = w.distance(w.top(k), w.top(k + 1)).map_err(e)?;
            let scale = f64::from(1u32 << k);
            if seq.at(k as i64).map_err(e)? == 1 {
                ensure(d == scale, || format!("descriptor {idx}, k = {k}: bridge distance {d}"))?;
            } else {
                let bound = scale * (1.0 + PI / 2.0) * 0.95;
                ensure(d > bound, || format!("descriptor {idx}, k = {k}: distance {d} <= {bound}"))?;
            }
        }
        roxmltree::Document::parse(&render_svg(&w)).map_err(|err| format!("descriptor {idx}: {err}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for t in 0..5 {
        let seq = if t % 2 == 0 {
            let q = rng.gen_range(2..9);
            BitSequence::sturmian_ratio(rng.gen_range(0..=q), q)
        } else {
            let len = rng.gen_range(1..7);
            BitSequence::periodic((0..len).map(|_| rng.gen_range(0..=1)).collect(), rng.gen_range(-5..5)).map_err(e)?
        };
        ensure(self_similarity_check(&seq, 0, 5, 64).map_err(e)?, || format!("{seq:?} not self-similar"))?;
        let w = build_window(&seq, 0, 5, 64).map_err(e)?;
        roxmltree::Document::parse(&render_svg(&w)).map_err(|err| format!("{seq:?}: {err}"))?;
    }
    Ok(())
}

fn limits(cones: &[ConeResult]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let horizon = 40;
    for t in 0..20 {
        let limit: u8 = rng.gen_range(0..=1);
        let settle = rng.gen_range(0..=horizon / 2);
        let rows: Vec<(u8, usize, Vec<u8>)> = (0..=horizon)
            .map(|i| {
                let v = if i >= settle { limit } else { rng.gen_range(0..=1) };
                let from = rng.gen_range(0..=i + 8);
                let noise = (0..2 * i + 17).map(|_| rng.gen_range(0..=1)).collect();
                (v, from, noise)
            })
            .collect();
        let table = |i: usize, j: usize| {
            let (v, from, noise) = &rows[i];
            if j >= *from { *v } else { noise[j] }
        };
        ensure(product_limit_check(table, horizon) == Ok(true), || format!("table {t} rejected"))?;
        let r: Result<_, ()> = product_limit(|i, j| Ok(table(i, j)), horizon);
        let p = r.expect("infallible").map_err(e)?;
        ensure(p.iterated.value == limit, || format!("table {t}: limit {} instead of {limit}", p.iterated.value))?;
    }
    ensure(
        product_limit_check(|i, j| ((i + j) % 2) as u8, horizon).is_err(),
        || "parity table accepted".into(),
    )?;
    let mut checked = 0;
    for (idx, c) in cones.iter().enumerate() {
        for (offset, stride) in [(0, 2), (1, 2), (0, 3), (2, 5)] {
            ensure(c.subsample_consistent(offset, stride).map_err(e)?, || format!("cone {idx}: sub-sample ({offset}, {stride}) differs"))?;
        }
        checked += c.certificates.len();
    }
    ensure(checked > 0, || "no certificates to check".into())
}

fn main() {
    let mut cones = Vec::new();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    macro_rules! run {
        ($name:expr, $body:expr) => {{
            let start = Instant::now();
            let r = $body;
            let line = match &r {
                Ok(()) => format!("PASS {} ({:.1?})", $name, start.elapsed()),
                Err(msg) => format!("FAIL {}: {}", $name, msg),
            };
            println!("{line}");
            results.push(($name, r));
        }};
    }
    run!("1 infmany", infmany(&mut cones));
    run!("2 shift bound", shift_bounds());
    run!("3 composition", composition(&mut cones));
    run!("4 periodic cones", periodic(&mut cones));
    run!("5 rich sequence", rich(&mut cones));
    run!("6 varying factors", varying(&mut cones));
    run!("7 transfinite", transfinite(&mut cones));
    run!("8 onlycount", onlycount(&mut cones));
    run!("9 geometry", geometry());
    run!("10 limits", limits(&cones));
    let failed = results.iter().filter(|(_, r)| r.is_err()).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
