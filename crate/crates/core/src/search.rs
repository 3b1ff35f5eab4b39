//! Binomial identities `Σ_{a∈A} C(n,a) = Σ_{b∈B} C(n,b)`: validation and
//! exhaustive enumeration.
//!
//! Enumeration is a meet-in-the-middle join over signed level assignments
//! (`+` puts a level in `A`, `-` in `B`). Since `C(n,k) = C(n,n-k)`, levels
//! `k` and `n-k` are folded into one value class whose net coefficient lies
//! in `-2..=2`; the join runs over class coefficients and each zero-sum
//! coefficient vector is then expanded back into concrete index sets.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{choose, MAX_N};

/// Largest `n` accepted by [`search`].
pub const MAX_SEARCH_N: u32 = 40;

/// Largest `n` accepted by [`brute_force_search`].
pub const MAX_BRUTE_FORCE_N: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Profile {
    /// Only the defining constraints: disjoint, nonempty, equal sums.
    Any,
    /// `0 ∈ A`, every other level of `A` and all of `B` inside `[1, n-1]`.
    Fundamental,
    /// Fundamental with `1 ∈ B`, other `A` levels in `[3, n-1]`, other `B` levels in `[2, n-1]`.
    Wsb,
}

impl Profile {
    pub const ALL: [Profile; 3] = [Profile::Any, Profile::Fundamental, Profile::Wsb];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Any => "any",
            Profile::Fundamental => "fundamental",
            Profile::Wsb => "wsb",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "any" => Ok(Profile::Any),
            "fundamental" => Ok(Profile::Fundamental),
            "wsb" => Ok(Profile::Wsb),
            other => Err(Error::domain(format!("unknown profile '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

/// One reason a candidate identity (or inequality) is rejected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    GroundSetSize {
        n: u32,
    },
    EmptySide(Side),
    NotAscending(Side),
    LevelOutOfRange {
        side: Side,
        level: u32,
    },
    Overlap {
        level: u32,
    },
    MissingLevel {
        profile: Profile,
        side: Side,
        level: u32,
    },
    LevelNotAllowed {
        profile: Profile,
        side: Side,
        level: u32,
    },
    SumMismatch {
        a_sum: u128,
        b_sum: u128,
    },
    SumExceeds {
        a_sum: u128,
        b_sum: u128,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::GroundSetSize { n } => write!(f, "n = {n} outside 1..={MAX_N}"),
            Violation::EmptySide(s) => write!(f, "{s} is empty"),
            Violation::NotAscending(s) => write!(f, "{s} is not strictly ascending"),
            Violation::LevelOutOfRange { side, level } => {
                write!(f, "level {level} in {side} exceeds n")
            }
            Violation::Overlap { level } => write!(f, "level {level} appears in both A and B"),
            Violation::MissingLevel {
                profile,
                side,
                level,
            } => write!(f, "profile {profile} requires level {level} in {side}"),
            Violation::LevelNotAllowed {
                profile,
                side,
                level,
            } => write!(f, "profile {profile} forbids level {level} in {side}"),
            Violation::SumMismatch { a_sum, b_sum } => {
                write!(f, "sums differ: A gives {a_sum}, B gives {b_sum}")
            }
            Violation::SumExceeds { a_sum, b_sum } => {
                write!(f, "A sum {a_sum} exceeds B sum {b_sum}")
            }
        }
    }
}

/// The index data `(n, A, B)` of a binomial identity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IdentitySpec {
    pub n: u32,
    pub a: Vec<u32>,
    pub b: Vec<u32>,
}

/// Same shape as [`IdentitySpec`] but only `Σ_A ≤ Σ_B` is required.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InequalitySpec {
    pub n: u32,
    pub a: Vec<u32>,
    pub b: Vec<u32>,
}

impl IdentitySpec {
    pub fn new(n: u32, a: Vec<u32>, b: Vec<u32>) -> Self {
        IdentitySpec { n, a, b }
    }

    pub fn validate(&self, profile: Profile) -> Vec<Violation> {
        let mut out = structural_violations(self.n, &self.a, &self.b);
        profile_violations(self.n, &self.a, &self.b, profile, &mut out);
        let (a_sum, b_sum) = side_sums(self.n, &self.a, &self.b);
        if a_sum != b_sum {
            out.push(Violation::SumMismatch { a_sum, b_sum });
        }
        out
    }

    /// `Σ_{a∈A} C(n,a)`, the size of each family.
    pub fn family_size(&self) -> u128 {
        side_sums(self.n, &self.a, &self.b).0
    }

    fn sort_key(&self) -> (usize, &[u32], &[u32]) {
        (self.a.len() + self.b.len(), &self.a, &self.b)
    }
}

impl InequalitySpec {
    pub fn new(n: u32, a: Vec<u32>, b: Vec<u32>) -> Self {
        InequalitySpec { n, a, b }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = structural_violations(self.n, &self.a, &self.b);
        let (a_sum, b_sum) = side_sums(self.n, &self.a, &self.b);
        if a_sum > b_sum {
            out.push(Violation::SumExceeds { a_sum, b_sum });
        }
        out
    }
}

impl Ord for IdentitySpec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key()
            .cmp(&other.sort_key())
            .then(self.n.cmp(&other.n))
    }
}

impl PartialOrd for IdentitySpec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn join_levels(levels: &[u32]) -> String {
    levels
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for IdentitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} A={} B={}",
            self.n,
            join_levels(&self.a),
            join_levels(&self.b)
        )
    }
}

fn side_sums(n: u32, a: &[u32], b: &[u32]) -> (u128, u128) {
    if n > MAX_N {
        return (0, 0);
    }
    let sum = |levels: &[u32]| levels.iter().map(|&l| choose(n, l)).sum::<u128>();
    (sum(a), sum(b))
}

fn structural_violations(n: u32, a: &[u32], b: &[u32]) -> Vec<Violation> {
    let mut out = Vec::new();
    if n == 0 || n > MAX_N {
        out.push(Violation::GroundSetSize { n });
    }
    for (side, levels) in [(Side::A, a), (Side::B, b)] {
        if levels.is_empty() {
            out.push(Violation::EmptySide(side));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            out.push(Violation::NotAscending(side));
        }
        for &level in levels.iter().filter(|&&l| l > n) {
            out.push(Violation::LevelOutOfRange { side, level });
        }
    }
    let mut shared: Vec<u32> = a.iter().copied().filter(|l| b.contains(l)).collect();
    shared.sort_unstable();
    shared.dedup();
    out.extend(shared.into_iter().map(|level| Violation::Overlap { level }));
    out
}

fn profile_violations(n: u32, a: &[u32], b: &[u32], profile: Profile, out: &mut Vec<Violation>) {
    let (a_lo, b_lo, b_required) = match profile {
        Profile::Any => return,
        Profile::Fundamental => (1, 1, None),
        Profile::Wsb => (3, 2, Some(1)),
    };
    if !a.contains(&0) {
        out.push(Violation::MissingLevel {
            profile,
            side: Side::A,
            level: 0,
        });
    }
    if let Some(level) = b_required {
        if !b.contains(&level) {
            out.push(Violation::MissingLevel {
                profile,
                side: Side::B,
                level,
            });
        }
    }
    let hi = n.saturating_sub(1);
    for &level in a.iter().filter(|&&l| l != 0) {
        if level < a_lo || level > hi {
            out.push(Violation::LevelNotAllowed {
                profile,
                side: Side::A,
                level,
            });
        }
    }
    for &level in b {
        let ok = if Some(level) == b_required {
            level <= hi
        } else {
            level >= b_lo && level <= hi
        };
        if !ok {
            out.push(Violation::LevelNotAllowed {
                profile,
                side: Side::B,
                level,
            });
        }
    }
}

/// Orient so that the smallest level of `A ∪ B` lies in `A`.
pub fn canonicalize(spec: &IdentitySpec) -> IdentitySpec {
    let min_a = spec.a.iter().min();
    let min_b = spec.b.iter().min();
    match (min_a, min_b) {
        (Some(x), Some(y)) if y < x => IdentitySpec::new(spec.n, spec.b.clone(), spec.a.clone()),
        _ => spec.clone(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    /// Every identity, globally sorted.
    All,
    /// Stop at the first identity met during enumeration.
    First,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub n: u32,
    pub profile: Profile,
    /// Sorted by `(|A|+|B|, A, B)`; truncated to the limit when one was given.
    pub identities: Vec<IdentitySpec>,
    /// Number of identities that exist, when the enumeration was complete.
    pub total: Option<u128>,
    /// Whether `total` accounts for every identity of the profile.
    pub exhaustive: bool,
}

const SIGNS: [i8; 3] = [1, -1, 0];

/// Signs each level may take under `profile`.
fn allowed_signs(n: u32, level: u32, profile: Profile) -> Vec<i8> {
    SIGNS
        .iter()
        .copied()
        .filter(|&s| match profile {
            Profile::Any => true,
            Profile::Fundamental | Profile::Wsb => {
                let base = if level == 0 {
                    s == 1
                } else if level == n {
                    s == 0
                } else {
                    true
                };
                let wsb = match (profile, level) {
                    (Profile::Wsb, 1) => s == -1,
                    (Profile::Wsb, 2) => s != 1,
                    _ => true,
                };
                base && wsb
            }
        })
        .collect()
}

/// Levels `k` and `n - k` (or just `k` in the middle) with the concrete sign
/// pairs grouped by their net coefficient.
#[derive(Debug)]
struct ValueClass {
    low: u32,
    high: Option<u32>,
    value: i64,
    options: Vec<(i64, Vec<(i8, i8)>)>,
}

fn value_classes(n: u32, profile: Profile) -> Vec<ValueClass> {
    (0..=n / 2)
        .map(|low| {
            let high = (n - low != low).then_some(n - low);
            let lo_signs = allowed_signs(n, low, profile);
            let hi_signs = match high {
                Some(h) => allowed_signs(n, h, profile),
                None => vec![0],
            };
            let mut options: Vec<(i64, Vec<(i8, i8)>)> = Vec::new();
            for &s in &lo_signs {
                for &t in &hi_signs {
                    let coef = (s + t) as i64;
                    match options.iter_mut().find(|(c, _)| *c == coef) {
                        Some((_, combos)) => combos.push((s, t)),
                        None => options.push((coef, vec![(s, t)])),
                    }
                }
            }
            options.sort_by_key(|(c, _)| *c);
            ValueClass {
                low,
                high,
                value: choose(n, low) as i64,
                options,
            }
        })
        .collect()
}

/// Mixed-radix decoding of a half assignment into per-class option indices.
fn decode(classes: &[ValueClass], mut code: u64, digits: &mut Vec<usize>) {
    digits.clear();
    for c in classes {
        let radix = c.options.len() as u64;
        digits.push((code % radix) as usize);
        code /= radix;
    }
}

fn half_sum(classes: &[ValueClass], digits: &[usize]) -> i64 {
    classes
        .iter()
        .zip(digits)
        .map(|(c, &d)| c.options[d].0 * c.value)
        .sum()
}

fn radix_product(classes: &[ValueClass]) -> u64 {
    classes.iter().map(|c| c.options.len() as u64).product()
}

/// Expands one zero-sum coefficient vector into concrete identities.
fn expand(
    n: u32,
    profile: Profile,
    classes: &[ValueClass],
    digits: &[usize],
    mut emit: impl FnMut(IdentitySpec) -> bool,
) -> bool {
    let choices: Vec<&[(i8, i8)]> = classes
        .iter()
        .zip(digits)
        .map(|(c, &d)| c.options[d].1.as_slice())
        .collect();
    let mut idx = vec![0usize; choices.len()];
    let mut signs = vec![0i8; n as usize + 1];
    loop {
        for (k, class) in classes.iter().enumerate() {
            let (s, t) = choices[k][idx[k]];
            signs[class.low as usize] = s;
            if let Some(h) = class.high {
                signs[h as usize] = t;
            }
        }
        if let Some(spec) = spec_from_signs(n, profile, &signs) {
            if !emit(spec) {
                return false;
            }
        }
        // odometer over the per-class sign choices
        let mut k = 0;
        loop {
            if k == idx.len() {
                return true;
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn spec_from_signs(n: u32, profile: Profile, signs: &[i8]) -> Option<IdentitySpec> {
    let first = signs.iter().position(|&s| s != 0)?;
    if profile == Profile::Any && signs[first] != 1 {
        return None;
    }
    let pick = |want: i8| {
        signs
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == want)
            .map(|(l, _)| l as u32)
            .collect::<Vec<_>>()
    };
    let (a, b) = (pick(1), pick(-1));
    if a.is_empty() || b.is_empty() {
        return None;
    }
    Some(IdentitySpec::new(n, a, b))
}

/// Keeps the `limit` smallest identities seen, or all of them.
enum Collector {
    All(Vec<IdentitySpec>),
    Smallest(usize, BinaryHeap<IdentitySpec>),
}

impl Collector {
    fn push(&mut self, spec: IdentitySpec) {
        match self {
            Collector::All(v) => v.push(spec),
            Collector::Smallest(limit, heap) => {
                if *limit == 0 {
                    return;
                }
                if heap.len() < *limit {
                    heap.push(spec);
                } else if heap.peek().is_some_and(|top| spec < *top) {
                    heap.pop();
                    heap.push(spec);
                }
            }
        }
    }

    fn finish(self) -> Vec<IdentitySpec> {
        let mut v = match self {
            Collector::All(v) => v,
            Collector::Smallest(_, heap) => heap.into_vec(),
        };
        v.sort();
        v
    }
}

/// Enumerate identities for `n` under `profile`.
///
/// With [`SearchMode::All`] the enumeration is complete and `total` counts
/// every identity even when `limit` truncates the returned list. With
/// [`SearchMode::First`] the search stops as soon as `limit` identities
/// (default one) have been found; the outcome is then marked non-exhaustive
/// unless the enumeration happened to run to completion.
pub fn search(
    n: u32,
    profile: Profile,
    limit: Option<usize>,
    mode: SearchMode,
) -> Result<SearchOutcome> {
    if !(1..=MAX_SEARCH_N).contains(&n) {
        return Err(Error::domain(format!(
            "search supports 1 <= n <= {MAX_SEARCH_N}, got {n}"
        )));
    }
    let classes = value_classes(n, profile);
    if classes.iter().any(|c| c.options.is_empty()) {
        return Ok(SearchOutcome {
            n,
            profile,
            identities: Vec::new(),
            total: Some(0),
            exhaustive: true,
        });
    }

    // Index the smaller half; stream the larger one.
    let total_space: f64 = classes.iter().map(|c| c.options.len() as f64).product();
    let mut split = 0;
    let mut indexed = 1.0;
    while split < classes.len()
        && indexed * (classes[split].options.len() as f64) <= total_space.sqrt()
    {
        indexed *= classes[split].options.len() as f64;
        split += 1;
    }
    let (left, right) = classes.split_at(split);

    let mut index: Vec<(i64, u64)> = Vec::with_capacity(radix_product(left) as usize);
    let mut digits = Vec::new();
    for code in 0..radix_product(left) {
        decode(left, code, &mut digits);
        index.push((half_sum(left, &digits), code));
    }
    index.sort_unstable();

    let lookup = |sum: i64| {
        let start = index.partition_point(|&(s, _)| s < -sum);
        index[start..]
            .iter()
            .take_while(move |&&(s, _)| s == -sum)
            .map(|&(_, code)| code)
    };
    let full_digits = |lcode: u64, rcode: u64| {
        let mut l = Vec::new();
        let mut r = Vec::new();
        decode(left, lcode, &mut l);
        decode(right, rcode, &mut r);
        l.extend(r);
        l
    };

    match mode {
        SearchMode::All => {
            let matches: Vec<(u64, u64)> = (0..radix_product(right))
                .into_par_iter()
                .map_init(Vec::new, |digits, rcode| {
                    decode(right, rcode, digits);
                    let sum = half_sum(right, digits);
                    lookup(sum).map(|lcode| (lcode, rcode)).collect::<Vec<_>>()
                })
                .flatten_iter()
                .collect();
            let mut collector = match limit {
                Some(k) => Collector::Smallest(k, BinaryHeap::new()),
                None => Collector::All(Vec::new()),
            };
            let mut total = 0u128;
            for (lcode, rcode) in matches {
                let digits = full_digits(lcode, rcode);
                expand(n, profile, &classes, &digits, |spec| {
                    total += 1;
                    collector.push(spec);
                    true
                });
            }
            Ok(SearchOutcome {
                n,
                profile,
                identities: collector.finish(),
                total: Some(total),
                exhaustive: true,
            })
        }
        SearchMode::First => {
            let want = limit.unwrap_or(1);
            let mut found = Vec::new();
            let mut completed = true;
            'outer: for rcode in 0..radix_product(right) {
                decode(right, rcode, &mut digits);
                let sum = half_sum(right, &digits);
                for lcode in lookup(sum) {
                    let digits = full_digits(lcode, rcode);
                    let keep_going = expand(n, profile, &classes, &digits, |spec| {
                        found.push(spec);
                        found.len() < want
                    });
                    if !keep_going || found.len() >= want {
                        completed = false;
                        break 'outer;
                    }
                }
            }
            found.sort();
            let total = completed.then_some(found.len() as u128);
            Ok(SearchOutcome {
                n,
                profile,
                identities: found,
                total,
                exhaustive: completed,
            })
        }
    }
}

/// Naive enumeration of all `3^(n+1)` level assignments. Independent oracle
/// for [`search`]; shares only [`IdentitySpec::validate`] and [`canonicalize`].
pub fn brute_force_search(n: u32, profile: Profile) -> Result<Vec<IdentitySpec>> {
    if !(1..=MAX_BRUTE_FORCE_N).contains(&n) {
        return Err(Error::domain(format!(
            "brute force supports 1 <= n <= {MAX_BRUTE_FORCE_N}, got {n}"
        )));
    }
    let levels = n as usize + 1;
    let values: Vec<i128> = (0..=n).map(|k| choose(n, k) as i128).collect();
    let mut out = Vec::new();
    for code in 0..3u64.pow(levels as u32) {
        let mut c = code;
        let mut sum = 0i128;
        let mut signs = vec![0i8; levels];
        for (l, sign) in signs.iter_mut().enumerate() {
            *sign = match c % 3 {
                0 => 0,
                1 => 1,
                _ => -1,
            };
            sum += *sign as i128 * values[l];
            c /= 3;
        }
        if sum != 0 {
            continue;
        }
        let a: Vec<u32> = (0..=n).filter(|&l| signs[l as usize] == 1).collect();
        let b: Vec<u32> = (0..=n).filter(|&l| signs[l as usize] == -1).collect();
        let spec = IdentitySpec::new(n, a, b);
        if !spec.validate(profile).is_empty() {
            continue;
        }
        if profile == Profile::Any && canonicalize(&spec) != spec {
            continue;
        }
        out.push(spec);
    }
    out.sort();
    Ok(out)
}
