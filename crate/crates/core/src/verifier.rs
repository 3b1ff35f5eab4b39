//! Independent checks: certificates, the local LYM inequality, and the Hall
//! condition with surplus.
//!
//! Nothing here calls the matching engine. Certificates are re-read from raw
//! masks and comparability is recomputed with plain bit operations.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::{parse_decimal, parse_hex, parse_levels, split_lines, CERT_HEADER};
use crate::lattice::{
    choose, for_each_related, level_iter, rank, shadow, unrank, SubFamily, MAX_N,
};
use crate::matching::{CertificateKind, MatchingCertificate};
use crate::search::{IdentitySpec, Profile};

/// splitmix64. The state advances by a constant per draw, so a stream can be
/// jumped ahead in O(1).
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Inclusion with probability 1/2: the top bit of one draw.
    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    /// Skip `draws` outputs.
    pub fn jump(&mut self, draws: u64) {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA.wrapping_mul(draws));
    }
}

// ---------------------------------------------------------------------------
// certificates

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FailureCode {
    Malformed,
    UnsortedPairs,
    OverlappingLevels,
    SumCondition,
    WrongLevel,
    DuplicateSource,
    NotInjective,
    IncomparablePair,
    PairCountMismatch,
}

impl FailureCode {
    pub fn name(self) -> &'static str {
        match self {
            FailureCode::Malformed => "MALFORMED",
            FailureCode::UnsortedPairs => "UNSORTED_PAIRS",
            FailureCode::OverlappingLevels => "OVERLAPPING_LEVELS",
            FailureCode::SumCondition => "SUM_CONDITION",
            FailureCode::WrongLevel => "WRONG_LEVEL",
            FailureCode::DuplicateSource => "DUPLICATE_SOURCE",
            FailureCode::NotInjective => "NOT_INJECTIVE",
            FailureCode::IncomparablePair => "INCOMPARABLE_PAIR",
            FailureCode::PairCountMismatch => "PAIR_COUNT_MISMATCH",
        }
    }
}

impl fmt::Display for FailureCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub code: FailureCode,
    pub line: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{} (line {l}): {}", self.code, self.detail),
            None => write!(f, "{}: {}", self.code, self.detail),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub pairs_checked: usize,
    pub failures: Vec<Failure>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn has(&self, code: FailureCode) -> bool {
        self.failures.iter().any(|f| f.code == code)
    }

    fn fail(&mut self, code: FailureCode, line: Option<usize>, detail: impl Into<String>) {
        self.failures.push(Failure {
            code,
            line,
            detail: detail.into(),
        });
    }
}

/// Pairs as read, with the 1-based line each came from.
struct RawPair {
    source: u64,
    image: u64,
    line: usize,
}

struct RawCert {
    n: u32,
    a: Vec<u32>,
    b: Vec<u32>,
    kind: Option<CertificateKind>,
    declared: Option<usize>,
    pairs: Vec<RawPair>,
}

/// Semantic checks, reported in the documented order.
fn check(cert: &RawCert, report: &mut VerifyReport) {
    let n = cert.n;
    if n == 0 || n > MAX_N {
        report.fail(
            FailureCode::Malformed,
            Some(2),
            format!("n = {n} outside 1..={MAX_N}"),
        );
        return;
    }
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    for (key, levels, line) in [("A", &cert.a, 3), ("B", &cert.b, 4)] {
        if let Some(l) = levels.iter().find(|&&l| l > n) {
            report.fail(
                FailureCode::Malformed,
                Some(line),
                format!("{key} level {l} exceeds n"),
            );
        }
    }
    for l in cert.a.iter().filter(|l| cert.b.contains(l)) {
        report.fail(
            FailureCode::OverlappingLevels,
            None,
            format!("level {l} in both A and B"),
        );
    }

    let family = |ls: &[u32]| ls.iter().map(|&l| choose(n, l)).sum::<u128>();
    let (a_size, b_size) = (family(&cert.a), family(&cert.b));
    match cert.kind {
        Some(CertificateKind::Perfect) if a_size != b_size => report.fail(
            FailureCode::SumCondition,
            Some(5),
            format!("type=perfect but sums differ: {a_size} vs {b_size}"),
        ),
        Some(CertificateKind::Injection) if a_size > b_size => report.fail(
            FailureCode::SumCondition,
            Some(5),
            format!("type=injection but A sum {a_size} exceeds B sum {b_size}"),
        ),
        _ => {}
    }

    for p in &cert.pairs {
        if (p.source | p.image) & !full != 0 {
            report.fail(
                FailureCode::Malformed,
                Some(p.line),
                format!("mask outside [{n}] in {:#x} {:#x}", p.source, p.image),
            );
            continue;
        }
        let (ls, lt) = (p.source.count_ones(), p.image.count_ones());
        if !cert.a.contains(&ls) {
            report.fail(
                FailureCode::WrongLevel,
                Some(p.line),
                format!("source {:#x} has size {ls}, not in A", p.source),
            );
        }
        if !cert.b.contains(&lt) {
            report.fail(
                FailureCode::WrongLevel,
                Some(p.line),
                format!("image {:#x} has size {lt}, not in B", p.image),
            );
        }
    }

    for (code, key) in [
        (FailureCode::DuplicateSource, 0usize),
        (FailureCode::NotInjective, 1),
    ] {
        let mut seen: Vec<(u64, usize)> = cert
            .pairs
            .iter()
            .map(|p| (if key == 0 { p.source } else { p.image }, p.line))
            .collect();
        seen.sort_unstable();
        for w in seen.windows(2) {
            if w[0].0 == w[1].0 {
                let what = if key == 0 { "source" } else { "image" };
                report.fail(
                    code,
                    Some(w[1].1),
                    format!("{what} {:#x} also used on line {}", w[1].0, w[0].1),
                );
            }
        }
    }

    for p in &cert.pairs {
        let meet = p.source & p.image;
        let ok = p.source != p.image && (meet == p.source || meet == p.image);
        if !ok {
            report.fail(
                FailureCode::IncomparablePair,
                Some(p.line),
                format!("{:#x} and {:#x} are not strictly nested", p.source, p.image),
            );
        }
    }

    let actual = cert.pairs.len();
    if let Some(d) = cert.declared {
        if d != actual {
            report.fail(
                FailureCode::PairCountMismatch,
                Some(6),
                format!("header declares {d} pairs, body has {actual}"),
            );
        }
    }
    if actual as u128 != a_size {
        report.fail(
            FailureCode::PairCountMismatch,
            None,
            format!("{actual} pairs but the A family has {a_size} sets"),
        );
    }
    report.pairs_checked = actual;
}

/// Check an in-memory certificate.
pub fn verify(cert: &MatchingCertificate) -> VerifyReport {
    let mut report = VerifyReport::default();
    for (key, levels, line) in [("A", &cert.a, 3), ("B", &cert.b, 4)] {
        if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
            report.fail(
                FailureCode::Malformed,
                Some(line),
                format!("{key} must be a nonempty ascending list"),
            );
        }
    }
    for w in cert.pairs.windows(2) {
        if w[1].0.bits() < w[0].0.bits() {
            report.fail(
                FailureCode::UnsortedPairs,
                None,
                format!("{} after {}", w[1].0, w[0].0),
            );
        }
    }
    let raw = RawCert {
        n: cert.n,
        a: cert.a.clone(),
        b: cert.b.clone(),
        kind: Some(cert.kind),
        declared: None,
        pairs: cert
            .pairs
            .iter()
            .enumerate()
            .map(|(i, (s, t))| RawPair {
                source: s.bits(),
                image: t.bits(),
                line: 7 + i,
            })
            .collect(),
    };
    check(&raw, &mut report);
    report
}

/// Check certificate text. Formatting problems become failures; the
/// remaining checks still run on whatever could be read.
pub fn verify_text(text: &str) -> VerifyReport {
    let mut report = VerifyReport::default();
    let lines = match split_lines(text) {
        Ok(l) => l,
        Err(e) => {
            report.fail(FailureCode::Malformed, None, e.to_string());
            let mut best_effort: Vec<&str> =
                text.split('\n').map(|l| l.trim_end_matches('\r')).collect();
            if best_effort.last() == Some(&"") {
                best_effort.pop();
            }
            best_effort
        }
    };
    let line = |i: usize| lines.get(i).copied().unwrap_or("");

    if line(0) != CERT_HEADER {
        report.fail(
            FailureCode::Malformed,
            Some(1),
            format!("expected '{CERT_HEADER}'"),
        );
    }
    let header = |i: usize, key: &str, report: &mut VerifyReport| -> Option<String> {
        match line(i).strip_prefix(key) {
            Some(v) => Some(v.to_string()),
            None => {
                report.fail(
                    FailureCode::Malformed,
                    Some(i + 1),
                    format!("expected '{key}…'"),
                );
                None
            }
        }
    };
    let n = header(1, "n=", &mut report).and_then(|v| match parse_decimal(&v, 2) {
        Ok(n) => Some(n),
        Err(e) => {
            report.fail(FailureCode::Malformed, Some(2), e.to_string());
            None
        }
    });
    let levels = |i: usize, key: &str, report: &mut VerifyReport| {
        header(i, key, report).and_then(|v| match parse_levels(&v, i + 1) {
            Ok(ls) => Some(ls),
            Err(e) => {
                report.fail(FailureCode::Malformed, Some(i + 1), e.to_string());
                None
            }
        })
    };
    let a = levels(2, "A=", &mut report);
    let b = levels(3, "B=", &mut report);
    let kind = header(4, "type=", &mut report).and_then(|v| match v.as_str() {
        "perfect" => Some(CertificateKind::Perfect),
        "injection" => Some(CertificateKind::Injection),
        other => {
            report.fail(
                FailureCode::Malformed,
                Some(5),
                format!("unknown type '{other}'"),
            );
            None
        }
    });
    let declared = header(5, "pairs=", &mut report).and_then(|v| match parse_decimal(&v, 6) {
        Ok(d) => Some(d as usize),
        Err(e) => {
            report.fail(FailureCode::Malformed, Some(6), e.to_string());
            None
        }
    });

    let mut pairs = Vec::new();
    for (i, l) in lines.iter().enumerate().skip(6) {
        let lineno = i + 1;
        let mut parts = l.split(' ');
        let parsed = match (parts.next(), parts.next(), parts.next()) {
            (Some(s), Some(t), None) => {
                parse_hex(s, lineno).and_then(|s| Ok((s, parse_hex(t, lineno)?)))
            }
            _ => Err(Error::parse(
                lineno,
                format!("expected '<source> <image>', found '{l}'"),
            )),
        };
        match parsed {
            Ok((source, image)) => pairs.push(RawPair {
                source,
                image,
                line: lineno,
            }),
            Err(e) => report.fail(FailureCode::Malformed, Some(lineno), e.to_string()),
        }
    }
    for w in pairs.windows(2) {
        if w[1].source < w[0].source {
            report.fail(
                FailureCode::UnsortedPairs,
                Some(w[1].line),
                format!("source {:#x} after {:#x}", w[1].source, w[0].source),
            );
        }
    }

    let (Some(n), Some(a), Some(b)) = (n, a, b) else {
        return report;
    };
    check(
        &RawCert {
            n,
            a,
            b,
            kind,
            declared,
            pairs,
        },
        &mut report,
    );
    report
}

pub fn verify_file(path: &Path) -> Result<VerifyReport> {
    let bytes = std::fs::read(path)?;
    Ok(match String::from_utf8(bytes) {
        Ok(text) => verify_text(&text),
        Err(_) => {
            let mut r = VerifyReport::default();
            r.fail(FailureCode::Malformed, None, "file is not UTF-8");
            r
        }
    })
}

// ---------------------------------------------------------------------------
// local LYM

/// Upper bound on `n` for [`lym_test`].
pub const MAX_LYM_N: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LymCase {
    Empty,
    Singleton,
    Full,
    Random(u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LymReport {
    pub n: u32,
    pub a: u32,
    pub b: u32,
    pub case: LymCase,
    pub family_size: u128,
    pub shadow_size: u128,
    /// `|family| / C(n, a)` in lowest terms.
    pub fraction: (u128, u128),
    /// `|shadow| · C(n,a) >= |family| · C(n,b)`.
    pub bound_holds: bool,
    /// The bound holds strictly.
    pub strict: bool,
}

impl LymReport {
    /// Empty or the full level.
    pub fn is_trivial_family(&self) -> bool {
        self.family_size == 0 || self.family_size == choose(self.n, self.a)
    }
}

fn gcd(mut x: u128, mut y: u128) -> u128 {
    while y != 0 {
        (x, y) = (y, x % y);
    }
    x
}

/// Evaluate the local LYM inequality for one family.
pub fn lym_report(family: &SubFamily, b: u32, case: LymCase) -> Result<LymReport> {
    let (n, a) = (family.n(), family.level());
    let sh = shadow(family, b)?;
    let family_size = family.len() as u128;
    let shadow_size = sh.len() as u128;
    let level_a = choose(n, a);
    let lhs = shadow_size * level_a;
    let rhs = family_size * choose(n, b);
    let g = gcd(family_size, level_a).max(1);
    Ok(LymReport {
        n,
        a,
        b,
        case,
        family_size,
        shadow_size,
        fraction: (family_size / g, level_a / g),
        bound_holds: lhs >= rhs,
        strict: lhs > rhs,
    })
}

/// Three boundary families (empty, a random singleton, the full level)
/// followed by `trials` random families, each `a`-set kept with probability 1/2.
pub fn lym_test(n: u32, a: u32, b: u32, trials: u64, seed: u64) -> Result<Vec<LymReport>> {
    if n > MAX_LYM_N || a > n || b > n {
        return Err(Error::domain(format!(
            "lym_test needs 0 <= a, b <= n <= {MAX_LYM_N}; got n={n} a={a} b={b}"
        )));
    }
    if trials == 0 {
        return Err(Error::domain("lym_test needs at least one trial"));
    }
    let mut rng = SplitMix64::new(seed);
    let level: Vec<u64> = level_iter(n, a)?.map(|m| m.bits()).collect();
    let mut out = Vec::with_capacity(trials as usize + 3);

    out.push(lym_report(&SubFamily::empty(n, a)?, b, LymCase::Empty)?);
    let pick = rng.next_u64() % level.len() as u64;
    let single = unrank(n, a, pick)?.bits();
    out.push(lym_report(
        &SubFamily::new(n, a, vec![single])?,
        b,
        LymCase::Singleton,
    )?);
    out.push(lym_report(&SubFamily::full_level(n, a)?, b, LymCase::Full)?);

    for t in 0..trials {
        let members: Vec<u64> = level.iter().copied().filter(|_| rng.coin()).collect();
        let family = SubFamily::new(n, a, members)?;
        out.push(lym_report(&family, b, LymCase::Random(t))?);
    }
    Ok(out)
}

/// The bound holds everywhere, and when `a != b` equality happens exactly
/// for the empty family and the full level.
pub fn lym_consistent(report: &LymReport) -> bool {
    let equality = report.bound_holds && !report.strict;
    report.bound_holds && (report.a == report.b || equality == report.is_trivial_family())
}

// ---------------------------------------------------------------------------
// Hall condition

/// Largest `A` family accepted in exhaustive mode.
pub const MAX_EXHAUSTIVE_FAMILY: u128 = 22;

/// Neighbourhood bitsets are used when `|B family|` is at most this.
const BITSET_B_LIMIT: usize = 1 << 20;
const BITSET_BYTES_LIMIT: usize = 1 << 28;
const MAX_STORED_VIOLATIONS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HallMode {
    Exhaustive,
    Sampled { trials: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HallViolation {
    /// Members of `Z`; empty when `Z` was too large to keep.
    pub members: Vec<u64>,
    pub z_size: usize,
    pub shadow_size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HallReport {
    pub spec: IdentitySpec,
    pub mode: HallMode,
    /// Proper nonempty `Z` examined.
    pub samples_checked: u64,
    /// `min |Sh_B(Z)| - |Z|` over the examined `Z`.
    pub min_surplus: Option<i64>,
    pub violation_count: u64,
    /// First few violations, in enumeration order.
    pub violations: Vec<HallViolation>,
    pub family_size: u128,
    /// `|Sh_B(A family)|`.
    pub full_shadow_size: u128,
}

impl HallReport {
    /// `Z = A family` reaches all of the `B` family, which has the same size.
    pub fn full_family_equality(&self) -> bool {
        self.full_shadow_size == self.family_size
    }

    pub fn passed(&self) -> bool {
        self.violation_count == 0 && self.full_family_equality()
    }
}

/// `A` family and dense indexing of the `B` family.
struct HallGraph {
    n: u32,
    a_members: Vec<u64>,
    b_levels: Vec<u32>,
    b_offset: Vec<Option<usize>>,
    b_size: usize,
}

impl HallGraph {
    fn new(spec: &IdentitySpec) -> Result<Self> {
        let n = spec.n;
        let mut a_members = Vec::new();
        for &l in &spec.a {
            a_members.extend(level_iter(n, l)?.map(|m| m.bits()));
        }
        let mut b_offset = vec![None; n as usize + 1];
        let mut b_size = 0usize;
        for &l in &spec.b {
            b_offset[l as usize] = Some(b_size);
            b_size += choose(n, l) as usize;
        }
        Ok(HallGraph {
            n,
            a_members,
            b_levels: spec.b.clone(),
            b_offset,
            b_size,
        })
    }

    fn for_each_neighbour(&self, u: usize, mut f: impl FnMut(usize)) {
        let bits = self.a_members[u];
        for &lb in &self.b_levels {
            let base = self.b_offset[lb as usize].expect("B level");
            for_each_related(bits, self.n, lb, |t| f(base + rank(t) as usize));
        }
    }

    fn words(&self) -> usize {
        self.b_size.div_ceil(64)
    }

    fn bitsets_fit(&self) -> bool {
        self.b_size <= BITSET_B_LIMIT
            && self.a_members.len().saturating_mul(self.words() * 8) <= BITSET_BYTES_LIMIT
    }

    fn neighbourhood_bitsets(&self) -> Vec<u64> {
        let w = self.words();
        let mut out = vec![0u64; self.a_members.len() * w];
        for u in 0..self.a_members.len() {
            let row = &mut out[u * w..(u + 1) * w];
            self.for_each_neighbour(u, |v| row[v / 64] |= 1 << (v % 64));
        }
        out
    }
}

fn popcount(words: &[u64]) -> usize {
    words.iter().map(|w| w.count_ones() as usize).sum()
}

/// Check `|Sh_B(Z)| >= |Z| + 1` for proper nonempty `Z ⊂ A family`, and
/// `|Sh_B(A family)| = |A family|`.
pub fn hall_test(spec: &IdentitySpec, mode: HallMode) -> Result<HallReport> {
    let violations = spec.validate(Profile::Any);
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    let graph = HallGraph::new(spec)?;
    let m = graph.a_members.len();
    match mode {
        HallMode::Exhaustive => {
            if m as u128 > MAX_EXHAUSTIVE_FAMILY {
                return Err(Error::domain(format!(
                    "exhaustive Hall check needs |A family| <= {MAX_EXHAUSTIVE_FAMILY}, \
                     got {m}; use sampled mode"
                )));
            }
            Ok(exhaustive(spec, &graph))
        }
        HallMode::Sampled { trials, seed } => Ok(sampled(spec, &graph, trials, seed)),
    }
}

struct Tally {
    checked: u64,
    min_surplus: Option<i64>,
    violation_count: u64,
    violations: Vec<HallViolation>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            checked: 0,
            min_surplus: None,
            violation_count: 0,
            violations: Vec::new(),
        }
    }

    /// A proper nonempty `Z` with its shadow size; `members` is built only on violation.
    fn record(&mut self, z_size: usize, shadow_size: usize, members: impl FnOnce() -> Vec<u64>) {
        self.checked += 1;
        let surplus = shadow_size as i64 - z_size as i64;
        self.min_surplus = Some(self.min_surplus.map_or(surplus, |s| s.min(surplus)));
        if surplus < 1 {
            self.violation_count += 1;
            if self.violations.len() < MAX_STORED_VIOLATIONS {
                self.violations.push(HallViolation {
                    members: members(),
                    z_size,
                    shadow_size,
                });
            }
        }
    }
}

fn exhaustive(spec: &IdentitySpec, graph: &HallGraph) -> HallReport {
    let m = graph.a_members.len();
    let w = graph.words();
    let nb = graph.neighbourhood_bitsets();
    let mut tally = Tally::new();
    let mut full_shadow = 0usize;
    // unions[d] is the shadow of the current Z with d members
    let mut unions = vec![vec![0u64; w]; m + 1];
    let mut chosen: Vec<usize> = Vec::with_capacity(m);

    // iterative depth-first walk: each include step yields a distinct nonempty Z
    let mut next = vec![0usize; m + 1];
    let mut depth = 0usize;
    next[0] = 0;
    loop {
        if next[depth] >= m {
            if depth == 0 {
                break;
            }
            depth -= 1;
            chosen.pop();
            continue;
        }
        let j = next[depth];
        next[depth] += 1;
        let (lower, upper) = unions.split_at_mut(depth + 1);
        let cur = &mut upper[0];
        for ((c, p), q) in cur
            .iter_mut()
            .zip(&lower[depth])
            .zip(&nb[j * w..(j + 1) * w])
        {
            *c = p | q;
        }
        chosen.push(j);
        let z_size = depth + 1;
        let shadow_size = popcount(cur);
        if z_size == m {
            full_shadow = shadow_size;
        } else {
            tally.record(z_size, shadow_size, || {
                chosen.iter().map(|&i| graph.a_members[i]).collect()
            });
        }
        depth += 1;
        next[depth] = j + 1;
    }

    HallReport {
        spec: spec.clone(),
        mode: HallMode::Exhaustive,
        samples_checked: tally.checked,
        min_surplus: tally.min_surplus,
        violation_count: tally.violation_count,
        violations: tally.violations,
        family_size: m as u128,
        full_shadow_size: full_shadow as u128,
    }
}

fn sampled(spec: &IdentitySpec, graph: &HallGraph, trials: u64, seed: u64) -> HallReport {
    let m = graph.a_members.len();
    let w = graph.words();
    let bitsets = graph.bitsets_fit().then(|| graph.neighbourhood_bitsets());

    // Trial t consumes draws [t*m, (t+1)*m) of one splitmix64 stream.
    let draw_z = |t: u64| -> Vec<usize> {
        let mut rng = SplitMix64::new(seed);
        rng.jump(t.wrapping_mul(m as u64));
        (0..m).filter(|_| rng.coin()).collect()
    };
    let shadow_of = |z: &[usize], scratch: &mut Vec<u64>| -> usize {
        scratch.clear();
        scratch.resize(w, 0);
        match &bitsets {
            Some(nb) => {
                for &u in z {
                    for (s, q) in scratch.iter_mut().zip(&nb[u * w..(u + 1) * w]) {
                        *s |= q;
                    }
                }
            }
            None => {
                for &u in z {
                    graph.for_each_neighbour(u, |v| scratch[v / 64] |= 1 << (v % 64));
                }
            }
        }
        popcount(scratch)
    };

    let results: Vec<Option<(usize, usize)>> = (0..trials)
        .into_par_iter()
        .map_init(Vec::new, |scratch, t| {
            let z = draw_z(t);
            (!z.is_empty() && z.len() < m).then(|| (z.len(), shadow_of(&z, scratch)))
        })
        .collect();

    let mut tally = Tally::new();
    for (t, r) in results.into_iter().enumerate() {
        if let Some((z_size, shadow_size)) = r {
            tally.record(z_size, shadow_size, || {
                draw_z(t as u64)
                    .into_iter()
                    .map(|u| graph.a_members[u])
                    .collect()
            });
        }
    }
    let all: Vec<usize> = (0..m).collect();
    let full_shadow = shadow_of(&all, &mut Vec::new());

    HallReport {
        spec: spec.clone(),
        mode: HallMode::Sampled { trials, seed },
        samples_checked: tally.checked,
        min_surplus: tally.min_surplus,
        violation_count: tally.violation_count,
        violations: tally.violations,
        family_size: m as u128,
        full_shadow_size: full_shadow as u128,
    }
}
