//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 when a check fails (unstable limit,
//! unclassified cone, asserted equivalence that does not hold), 2 on usage
//! errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Rational64;
use serde::Serialize;
use serde_json::json;

use crate::cone::{composition_check, cone, default_horizon, iterate_cone, ConeError, ConeResult};
use crate::constructions::{
    build_infmany, build_onlycount, build_periodic, build_transfinite, build_varying, classify_cone,
    cone_omega, find_scaling_for_density, onlycount_levels_needed, sample_onlycount_scalings, ConeClass,
    ConstructionError, TRANSFINITE_LEVELS,
};
use crate::density::{adn_exact, density_report, shift_bound_check};
use crate::geometry::{build_window, render_svg, self_similarity_check, shift_equivalent, ShiftMatch};
use crate::limits::product_limit_check;
use crate::scaling::{default_schedule, ScalingSet};
use crate::seqcore::BitSequence;
use crate::wire::rational_text;

#[derive(Parser, Debug)]
#[command(name = "bullseye", version, about = "Bullseye spaces and sequence-level asymptotic cones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Svg,
}

#[derive(Args, Debug)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConeArgs {
    /// Descriptor as inline JSON or a path to a JSON file.
    #[arg(long)]
    descriptor: String,
    /// Scaling set as inline JSON or a path; defaults to 4^(n+2).
    #[arg(long)]
    scaling: Option<String>,
    #[arg(long, default_value_t = 20)]
    window: u64,
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact density and window averages.
    Density {
        #[arg(long)]
        descriptor: String,
        #[arg(long, default_value_t = 1000)]
        n: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Certified cone on a window.
    Cone {
        #[command(flatten)]
        cone: ConeArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Iterated cone.
    Iterate {
        #[command(flatten)]
        cone: ConeArgs,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Double cone against the product-scheme cone.
    ComposeCheck {
        #[command(flatten)]
        cone: ConeArgs,
        /// Second scaling set; defaults to the first.
        #[arg(long)]
        scaling2: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Build one of the sequence families.
    Construct {
        #[command(subcommand)]
        kind: Construct,
    },
    /// Search a rich sequence for a scaling whose cone is the target.
    FindScaling {
        /// Target descriptor.
        #[arg(long)]
        descriptor: String,
        /// Rich sequence to search; defaults to the shortlex rich sequence.
        #[arg(long)]
        rich: Option<String>,
        #[arg(long, default_value_t = 10)]
        terms: u64,
        #[arg(long, default_value_t = 1 << 20)]
        search_limit: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Classify cones of the onlycount family.
    Classify {
        /// Scaling set to classify; without it, seeded samples are drawn.
        #[arg(long)]
        scaling: Option<String>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        window: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Least shift between two sequences on a window.
    ShiftEquiv {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 100)]
        max_shift: u64,
        #[arg(long, default_value_t = 500)]
        horizon: u64,
        /// Fail when no shift is found.
        #[arg(long)]
        assert: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Metric window as SVG or JSON.
    Render {
        #[arg(long)]
        descriptor: String,
        #[arg(long, default_value_t = 0)]
        k_min: i32,
        #[arg(long, default_value_t = 5)]
        k_max: i32,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Run the invariant suite.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args, Debug)]
struct ConstructCommon {
    #[arg(long)]
    scaling: Option<String>,
    #[arg(long, default_value_t = 50)]
    window: u64,
    #[arg(long)]
    horizon: Option<usize>,
    /// Check the construction's cone contract on the window.
    #[arg(long)]
    verify: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Subcommand, Debug)]
enum Construct {
    Infmany {
        #[arg(long, default_value_t = 6)]
        levels: u64,
        #[command(flatten)]
        common: ConstructCommon,
    },
    Periodic {
        #[arg(long)]
        m: u64,
        #[command(flatten)]
        common: ConstructCommon,
    },
    Varying {
        /// Comma-separated assignment, e.g. 0,1,0,2.
        #[arg(long, value_delimiter = ',')]
        assignment: Vec<u64>,
        #[arg(long, default_value_t = 1 << 20)]
        search_limit: u64,
        #[command(flatten)]
        common: ConstructCommon,
    },
    Transfinite {
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = TRANSFINITE_LEVELS)]
        levels: u64,
        #[command(flatten)]
        common: ConstructCommon,
    },
    Onlycount {
        #[arg(long, default_value_t = 68)]
        levels: u64,
        #[command(flatten)]
        common: ConstructCommon,
    },
}

enum Failure {
    Usage(String),
    Checked(String),
}

impl From<ConeError> for Failure {
    fn from(e: ConeError) -> Self {
        match e {
            ConeError::UnstableAt { k, trace } => {
                let trace: String = trace.iter().map(|b| char::from(b'0' + b)).collect();
                Failure::Checked(format!("UnstableAt k = {k}; samples n = 0.. : {trace}"))
            }
            ConeError::Precondition(msg) => Failure::Usage(msg),
            other => Failure::Checked(other.to_string()),
        }
    }
}

impl From<ConstructionError> for Failure {
    fn from(e: ConstructionError) -> Self {
        match e {
            ConstructionError::Cone(c) => c.into(),
            ConstructionError::BadParameter(msg) => Failure::Usage(msg),
            other => Failure::Checked(other.to_string()),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Inline JSON, or the contents of the named file.
fn read_json_arg(arg: &str) -> Result<String, Failure> {
    if arg.trim_start().starts_with('{') {
        Ok(arg.to_string())
    } else {
        fs::read_to_string(arg).map_err(|e| Failure::Usage(format!("{arg}: {e}")))
    }
}

fn descriptor(arg: &str) -> Result<BitSequence, Failure> {
    BitSequence::from_json(&read_json_arg(arg)?).map_err(usage)
}

fn scaling(arg: Option<&str>) -> Result<ScalingSet, Failure> {
    match arg {
        None => Ok(default_schedule(2).expect("c = 2 is valid")),
        Some(a) => serde_json::from_str(&read_json_arg(a)?).map_err(usage),
    }
}

/// `BULLSEYE_HORIZON` overrides the default horizon; an explicit flag
/// overrides both.
fn horizon(flag: Option<usize>, window: u64) -> Result<usize, Failure> {
    if let Some(h) = flag {
        return Ok(h);
    }
    match std::env::var("BULLSEYE_HORIZON") {
        Ok(v) => v
            .parse()
            .map_err(|_| Failure::Usage(format!("BULLSEYE_HORIZON={v} is not a number"))),
        Err(_) => Ok(default_horizon(window)),
    }
}

fn emit(out: &Output, text: String) -> Result<(), Failure> {
    match &out.output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not worth a failure
            let _ = stdout.write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn bits(values: &[u8]) -> String {
    values.iter().map(|b| char::from(b'0' + b)).collect()
}

fn cone_text(c: &ConeResult) -> String {
    let mut s = format!("window [-{w}, {w}]\nvalues {}\n", bits(&c.values), w = c.window);
    if !c.certificates.is_empty() {
        s += &format!("max stable-from {}\n", c.max_stable_from());
    }
    if let Some(id) = &c.identified {
        s += &format!("identified {}\n", id.to_json());
    }
    s
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Checked(msg)) => {
            eprintln!("{msg}");
            1
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Density { descriptor: d, n, out } => {
            if n == 0 {
                return Err(Failure::Usage("--n must be at least 1".into()));
            }
            let seq = descriptor(&d)?;
            let report = density_report(&seq, n).map_err(|e| Failure::Checked(e.to_string()))?;
            let text = match out.format {
                Format::Json => to_json(&report),
                _ => {
                    let mut s = match &report.exact {
                        Some(r) => format!("exact {}\n", rational_text(&Rational64::new(r.num, r.den))),
                        None => "exact none (no closed form)\n".to_string(),
                    };
                    s += "n\taverage\n";
                    for w in &report.window_averages {
                        s += &format!("{}\t{}\n", w.n, rational_text(&Rational64::new(w.average.num, w.average.den)));
                    }
                    s
                }
            };
            emit(&out, text)
        }
        Command::Cone { cone: args, out } => {
            let seq = descriptor(&args.descriptor)?;
            let s = scaling(args.scaling.as_deref())?;
            let h = horizon(args.horizon, args.window)?;
            let c = cone(&seq, &s, args.window, h)?;
            emit(&out, if out.format == Format::Json { to_json(&c) } else { cone_text(&c) })
        }
        Command::Iterate { cone: args, depth, out } => {
            let seq = descriptor(&args.descriptor)?;
            let s = scaling(args.scaling.as_deref())?;
            let h = horizon(args.horizon, args.window)?;
            let c = iterate_cone(&seq, &s, depth, args.window, h)?;
            emit(&out, if out.format == Format::Json { to_json(&c) } else { cone_text(&c) })
        }
        Command::ComposeCheck { cone: args, scaling2, out } => {
            let seq = descriptor(&args.descriptor)?;
            let s = scaling(args.scaling.as_deref())?;
            let s2 = match scaling2 {
                Some(a) => scaling(Some(&a))?,
                None => s.clone(),
            };
            let h = horizon(args.horizon, args.window)?;
            let r = composition_check(&seq, &s, &s2, args.window, h)?;
            let text = match out.format {
                Format::Json => to_json(&json!({
                    "holds": r.holds(),
                    "double": r.double.values,
                    "product": r.product,
                    "diagonal_agrees": r.diagonal_agrees,
                })),
                _ => format!(
                    "double  {}\nproduct {}\ncomposition {}\n",
                    bits(&r.double.values),
                    bits(&r.product),
                    if r.holds() { "holds" } else { "FAILS" }
                ),
            };
            emit(&out, text)?;
            if r.holds() {
                Ok(())
            } else {
                Err(Failure::Checked("double cone differs from the product-scheme cone".into()))
            }
        }
        Command::Construct { kind } => construct(kind),
        Command::FindScaling { descriptor: d, rich, terms, search_limit, out } => {
            let target = descriptor(&d)?;
            let rich = match rich {
                Some(r) => descriptor(&r)?,
                None => BitSequence::rich(),
            };
            let s = find_scaling_for_density(&rich, &target, terms, search_limit)?;
            let mut report = json!({ "scaling": &s });
            if terms > 0 {
                let c = cone(&rich, &s, terms, default_horizon(terms))?;
                let w = terms as i64;
                let matches = target.window(-w, w).map_err(|e| Failure::Checked(e.to_string()))? == c.values;
                report["cone"] = serde_json::to_value(&c).expect("serializes");
                report["matches_target"] = json!(matches);
            }
            emit(&out, to_json(&report))
        }
        Command::Classify { scaling: s, samples, seed, window, out } => {
            let h = default_horizon(window);
            let (fam, _) = build_onlycount(onlycount_levels_needed(h))?;
            let member = fam.member(0);
            let scalings: Vec<(serde_json::Value, ScalingSet)> = match s {
                Some(a) => vec![(json!("given"), scaling(Some(&a))?)],
                None => sample_onlycount_scalings(seed, samples, h)
                    .into_iter()
                    .map(|x| (serde_json::to_value(&x.regime).expect("serializes"), x.scaling))
                    .collect(),
            };
            let mut rows = Vec::new();
            let mut unclassified = 0;
            for (regime, sc) in scalings {
                let c = cone(&member, &sc, window, h)?;
                let class = classify_cone(&c);
                unclassified += (class == ConeClass::Unclassified) as usize;
                rows.push(json!({ "regime": regime, "window": bits(&c.values), "class": class }));
            }
            let text = match out.format {
                Format::Json => to_json(&rows),
                _ => rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| format!("{i}\t{}\t{}\n", r["class"], r["window"].as_str().unwrap_or("")))
                    .collect(),
            };
            emit(&out, text)?;
            if unclassified > 0 {
                Err(Failure::Checked(format!("{unclassified} cones unclassified")))
            } else {
                Ok(())
            }
        }
        Command::ShiftEquiv { a, b, max_shift, horizon, assert, out } => {
            let (a, b) = (descriptor(&a)?, descriptor(&b)?);
            let r = shift_equivalent(&a, &b, max_shift, horizon).map_err(|e| Failure::Checked(e.to_string()))?;
            let text = match (&r, out.format) {
                (_, Format::Json) => to_json(&r),
                (ShiftMatch::Shift { shift }, _) => format!("shift {shift}\n"),
                (ShiftMatch::NotEquivalentUpTo { horizon }, _) => format!("not equivalent up to horizon {horizon}\n"),
            };
            emit(&out, text)?;
            match r {
                ShiftMatch::NotEquivalentUpTo { .. } if assert => {
                    Err(Failure::Checked("sequences are not shift-equivalent".into()))
                }
                _ => Ok(()),
            }
        }
        Command::Render { descriptor: d, k_min, k_max, resolution, out } => {
            let seq = descriptor(&d)?;
            let w = build_window(&seq, k_min, k_max, resolution).map_err(usage)?;
            let text = match out.format {
                Format::Json => to_json(&w),
                _ => render_svg(&w),
            };
            emit(&out, text)
        }
        Command::Verify { seed, out } => {
            let checks = verify_suite(seed);
            let failed = checks.iter().filter(|c| !c.pass).count();
            let text = match out.format {
                Format::Json => to_json(&checks),
                _ => checks
                    .iter()
                    .map(|c| format!("{} {}: {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail))
                    .collect(),
            };
            emit(&out, text)?;
            if failed > 0 {
                Err(Failure::Checked(format!("{failed} checks failed")))
            } else {
                Ok(())
            }
        }
    }
}

fn construct(kind: Construct) -> Result<(), Failure> {
    match kind {
        Construct::Infmany { levels, common } => {
            let s = scaling(common.scaling.as_deref())?;
            let fam = build_infmany(&s, levels)?;
            let mut report = json!({ "family": &fam });
            let mut lines = format!("infmany, {levels} patched members\n");
            if common.verify {
                let h = horizon(common.horizon, common.window)?;
                let w = common.window as i64;
                let mut ok = true;
                for i in 0..levels {
                    let c = cone(&fam.member(i), &s, common.window, h)?;
                    let want = fam.member(i + 1).window(-w, w).map_err(|e| Failure::Checked(e.to_string()))?;
                    ok &= c.values == want;
                    lines += &format!(
                        "member {i}: density {}, cone = member {} {}\n",
                        rational_text(&fam.density(i)),
                        i + 1,
                        if c.values == want { "yes" } else { "NO" }
                    );
                }
                report["verified"] = json!(ok);
                finish(&common.out, report, lines, ok)
            } else {
                finish(&common.out, report, lines, true)
            }
        }
        Construct::Periodic { m, common } => {
            let s = scaling(common.scaling.as_deref())?;
            let fam = build_periodic(m, &s)?;
            let mut report = json!({ "family": &fam });
            let mut lines = format!("periodic, period {m}\n");
            for i in 0..m {
                lines += &format!("member {i}: density {}\n", rational_text(&fam.density(i)));
            }
            let mut ok = true;
            if common.verify {
                let h = horizon(common.horizon, common.window)?;
                let c = iterate_cone(&fam.member(0), &s, m as usize, common.window, h)?;
                let w = common.window as i64;
                ok = c.values == fam.member(0).window(-w, w).map_err(|e| Failure::Checked(e.to_string()))?;
                lines += &format!(
                    "Cone^{m} = id on [-{w}, {w}]: {}\n",
                    if ok { "yes" } else { "NO" }
                );
                report["verified"] = json!(ok);
            }
            finish(&common.out, report, lines, ok)
        }
        Construct::Varying { assignment, search_limit, common } => {
            if assignment.is_empty() {
                return Err(Failure::Usage("--assignment must not be empty".into()));
            }
            let steps = build_varying(&assignment, common.window, search_limit)?;
            let mut lines = String::new();
            for (i, st) in steps.iter().enumerate() {
                let d = adn_exact(&st.beta).map(|r| rational_text(&r)).unwrap_or_else(|_| "?".into());
                lines += &format!("step {}: value {}, density {d}, window {}\n", i + 1, st.value, bits(&st.cone.values));
            }
            finish(&common.out, json!({ "steps": steps }), lines, true)
        }
        Construct::Transfinite { k, levels, common } => {
            let s = scaling(common.scaling.as_deref())?;
            let tower = build_transfinite(k, &s, levels)?;
            let mut lines = String::new();
            let mut ok = true;
            let mut verified = Vec::new();
            if common.verify {
                let h = horizon(common.horizon, common.window)?;
                let iterations = default_horizon(common.window).min(levels as usize);
                let w = common.window as i64;
                for j in 1..=k as usize {
                    let omega = cone_omega(&tower.level(j).member(0), &s, common.window, iterations, h)?;
                    let want = tower.target(j).window(-w, w).map_err(|e| Failure::Checked(e.to_string()))?;
                    let hit = omega.values == want;
                    ok &= hit;
                    lines += &format!("level {j}: omega cone reproduces the target: {}\n", if hit { "yes" } else { "NO" });
                    verified.push(hit);
                }
            } else {
                lines += &format!("transfinite tower of height {k}\n");
            }
            let report = json!({ "levels": tower.levels, "verified": verified });
            finish(&common.out, report, lines, ok)
        }
        Construct::Onlycount { levels, common } => {
            let (fam, scheme) = build_onlycount(levels)?;
            let depths: Vec<usize> = (0..4).map(|j| scheme.depth(&scheme.alpha(j))).collect();
            let lines = format!("onlycount, {levels} members; scheme check passed for n, m <= 12\n");
            finish(&common.out, json!({ "family": &fam, "depth_at_alphas": depths }), lines, true)
        }
    }
}

fn finish(out: &Output, report: serde_json::Value, text: String, ok: bool) -> Result<(), Failure> {
    emit(out, if out.format == Format::Json { to_json(&report) } else { text })?;
    if ok {
        Ok(())
    } else {
        Err(Failure::Checked("construction contract failed on the window".into()))
    }
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

/// A reduced version of the acceptance checks, deterministic for a seed.
fn verify_suite(seed: u64) -> Vec<Check> {
    use rand::{Rng, SeedableRng};
    let mut checks = Vec::new();
    let mut push = |name, pass, detail: String| checks.push(Check { name, pass, detail });
    let s = default_schedule(2).expect("c = 2 is valid");

    let infmany = build_infmany(&s, 6).and_then(|fam| {
        let mut ok = true;
        for i in 0..6 {
            let c = cone(&fam.member(i), &s, 50, 116)?;
            ok &= c.values == fam.member(i + 1).window(-50, 50)?;
            ok &= adn_exact(&fam.member(i)).ok() == Some(Rational64::new(1, i as i64 + 1));
        }
        Ok(ok)
    });
    push("infmany cones and densities", matches!(infmany, Ok(true)), format!("{infmany:?}"));

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..20 {
        let q = rng.gen_range(1..20);
        let seq = BitSequence::sturmian_ratio(rng.gen_range(0..=q), q);
        let shift = rng.gen_range(-30..=30i64);
        let n = shift.unsigned_abs() + rng.gen_range(1..500);
        failures += !matches!(shift_bound_check(&seq, shift, n), Ok(true)) as usize;
    }
    push("shift bound", failures == 0, format!("{failures} failures in 20 triples"));

    let d4 = BitSequence::divisible_by(4).expect("valid divisor");
    let comp = composition_check(&d4, &s, &s, 10, 32).map(|r| r.holds());
    push("composition", matches!(comp, Ok(true)), format!("{comp:?}"));

    let periodic = build_periodic(3, &s).map_err(ConeError::from_construction).and_then(|fam| {
        let c = iterate_cone(&fam.member(0), &s, 3, 20, 64)?;
        Ok(c.values == fam.member(0).window(-20, 20)?)
    });
    push("periodic cones", matches!(periodic, Ok(true)), format!("{periodic:?}"));

    let scheme = build_onlycount(8).map(|_| ());
    push("onlycount scheme", scheme.is_ok(), format!("{scheme:?}"));

    let geometry = build_window(&BitSequence::single_ones([1]), 0, 5, 64).and_then(|w| {
        let bridge = w.distance(w.top(1), w.top(2))?;
        let gap = w.distance(w.top(2), w.top(3))?;
        Ok(bridge == 2.0 && gap > 4.0 * (1.0 + std::f64::consts::PI / 2.0) * 0.95)
    });
    push("bridge distances", matches!(geometry, Ok(true)), format!("{geometry:?}"));

    let similar = self_similarity_check(&BitSequence::sturmian_ratio(2, 5), 0, 4, 16);
    push("scale self-similarity", matches!(similar, Ok(true)), format!("{similar:?}"));

    let tables = product_limit_check(|i, j| (j >= i) as u8, 40) == Ok(true)
        && product_limit_check(|i, j| ((i + j) % 2) as u8, 40).is_err();
    push("product limits", tables, String::new());

    checks
}

impl ConeError {
    fn from_construction(e: ConstructionError) -> ConeError {
        match e {
            ConstructionError::Cone(c) => c,
            other => ConeError::Precondition(other.to_string()),
        }
    }
}
