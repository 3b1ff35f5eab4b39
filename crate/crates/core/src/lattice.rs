//! Exact combinatorics over the boolean lattice of subsets of `[n] = {1, …, n}`.
//!
//! A subset is a 64-bit word: element `i` lives in bit `i - 1`, so `{n}` is
//! `1 << (n - 1)`. Within one level (fixed cardinality) ascending numeric
//! order coincides with colexicographic order, which is the order of the
//! combinatorial number system used by [`rank`] and [`unrank`].

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported ground-set size.
pub const MAX_N: u32 = 64;

/// Levels larger than this are deduplicated by sorting instead of a rank bitset.
const BITSET_DEDUP_LIMIT: u128 = 1 << 26;

const fn pascal() -> [[u128; 65]; 65] {
    let mut t = [[0u128; 65]; 65];
    let mut n = 0;
    while n <= 64 {
        t[n][0] = 1;
        let mut k = 1;
        while k <= n {
            t[n][k] = t[n - 1][k - 1] + t[n - 1][k];
            k += 1;
        }
        n += 1;
    }
    t
}

static BINOM: [[u128; 65]; 65] = pascal();

/// `C(n, k)` for `n <= 64`, exact. Zero when `k < 0` or `k > n`.
pub fn binom(n: u32, k: i64) -> Result<u128> {
    if n > MAX_N {
        return Err(Error::domain(format!("binom: n = {n} exceeds {MAX_N}")));
    }
    if k < 0 || k > n as i64 {
        return Ok(0);
    }
    Ok(BINOM[n as usize][k as usize])
}

/// Unchecked table lookup; callers guarantee `n <= 64`.
#[inline]
pub(crate) fn choose(n: u32, k: u32) -> u128 {
    if k > n {
        0
    } else {
        BINOM[n as usize][k as usize]
    }
}

#[inline]
pub(crate) fn choose_u64(n: u32, k: u32) -> u64 {
    // C(64, 32) < 2^63, so every entry fits.
    choose(n, k) as u64
}

/// Sum of `C(n, l)` over the given levels.
pub fn level_sum(n: u32, levels: &[u32]) -> Result<u128> {
    if n > MAX_N {
        return Err(Error::domain(format!("n = {n} exceeds {MAX_N}")));
    }
    Ok(levels.iter().map(|&l| choose(n, l)).sum())
}

#[inline]
pub(crate) fn low_bits(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// A subset of `[n]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetMask {
    bits: u64,
    n: u32,
}

impl SubsetMask {
    pub fn new(bits: u64, n: u32) -> Result<Self> {
        if n > MAX_N {
            return Err(Error::domain(format!("n = {n} exceeds {MAX_N}")));
        }
        if bits & !low_bits(n) != 0 {
            return Err(Error::domain(format!(
                "mask {bits:#x} has bits outside [{n}]"
            )));
        }
        Ok(SubsetMask { bits, n })
    }

    pub(crate) fn new_unchecked(bits: u64, n: u32) -> Self {
        debug_assert!(bits & !low_bits(n) == 0);
        SubsetMask { bits, n }
    }

    pub fn empty(n: u32) -> Result<Self> {
        Self::new(0, n)
    }

    /// Build from 1-based elements of `[n]`.
    pub fn from_elements(n: u32, elements: &[u32]) -> Result<Self> {
        let mut bits = 0u64;
        for &e in elements {
            if e == 0 || e > n {
                return Err(Error::domain(format!("element {e} not in [1, {n}]")));
            }
            bits |= 1 << (e - 1);
        }
        Self::new(bits, n)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn cardinality(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Elements of the subset as 1-based integers, ascending.
    pub fn elements(&self) -> impl Iterator<Item = u32> {
        let mut rest = self.bits;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let i = rest.trailing_zeros();
            rest &= rest - 1;
            Some(i + 1)
        })
    }

    pub fn complement(&self) -> Self {
        SubsetMask {
            bits: !self.bits & low_bits(self.n),
            n: self.n,
        }
    }

    pub fn is_subset_of(&self, other: &SubsetMask) -> bool {
        self.bits & !other.bits == 0
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.bits)
    }
}

/// Strict containment in either direction.
pub fn comparable(s: SubsetMask, t: SubsetMask) -> bool {
    debug_assert_eq!(s.n, t.n, "comparable: masks over different ground sets");
    strictly_comparable(s.bits, t.bits)
}

#[inline]
pub(crate) fn strictly_comparable(s: u64, t: u64) -> bool {
    let meet = s & t;
    s != t && (meet == s || meet == t)
}

/// Position of a `k`-subset in ascending order of its level.
pub fn rank(bits: u64) -> u64 {
    let mut r = 0u64;
    let mut rest = bits;
    let mut i = 1;
    while rest != 0 {
        let pos = rest.trailing_zeros();
        r += choose_u64(pos, i);
        rest &= rest - 1;
        i += 1;
    }
    r
}

/// Inverse of [`rank`] on level `k` of `[n]`.
pub fn unrank(n: u32, k: u32, mut r: u64) -> Result<SubsetMask> {
    if k > n || n > MAX_N {
        return Err(Error::domain(format!("unrank: level {k} of [{n}]")));
    }
    if r as u128 >= choose(n, k) {
        return Err(Error::domain(format!("unrank: rank {r} >= C({n}, {k})")));
    }
    let mut bits = 0u64;
    let mut hi = n;
    for i in (1..=k).rev() {
        // largest c < hi with C(c, i) <= r
        let mut c = hi - 1;
        while choose_u64(c, i) > r {
            c -= 1;
        }
        bits |= 1 << c;
        r -= choose_u64(c, i);
        hi = c;
    }
    Ok(SubsetMask::new_unchecked(bits, n))
}

/// Scatter the low bits of `src` onto the set bits of `mask`, lowest first.
#[inline]
pub(crate) fn deposit(mut src: u64, mask: u64) -> u64 {
    let mut out = 0u64;
    let mut m = mask;
    while src != 0 && m != 0 {
        let low = m & m.wrapping_neg();
        if src & 1 == 1 {
            out |= low;
        }
        src >>= 1;
        m &= m - 1;
    }
    out
}

/// All `k`-element words over the low `width` bits, ascending.
#[derive(Clone, Debug)]
pub(crate) struct Combinations {
    current: u64,
    remaining: u128,
}

impl Combinations {
    pub(crate) fn new(width: u32, k: u32) -> Self {
        let remaining = choose(width, k);
        let current = if k == 0 { 0 } else { low_bits(k) };
        Combinations { current, remaining }
    }
}

impl Iterator for Combinations {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.remaining == 0 {
            return None;
        }
        let out = self.current;
        self.remaining -= 1;
        if self.remaining > 0 {
            let x = self.current;
            let c = x & x.wrapping_neg();
            let r = x.wrapping_add(c);
            self.current = (((r ^ x) >> 2) / c) | r;
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (r, usize::try_from(self.remaining).ok())
    }
}

/// Ascending stream over the `k`-th level of `[n]`.
#[derive(Clone, Debug)]
pub struct LevelIter {
    n: u32,
    inner: Combinations,
}

impl Iterator for LevelIter {
    type Item = SubsetMask;

    fn next(&mut self) -> Option<SubsetMask> {
        self.inner
            .next()
            .map(|bits| SubsetMask::new_unchecked(bits, self.n))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.inner.size_hint()
    }
}

pub fn level_iter(n: u32, k: u32) -> Result<LevelIter> {
    if n > MAX_N {
        return Err(Error::domain(format!("n = {n} exceeds {MAX_N}")));
    }
    if k > n {
        return Err(Error::domain(format!("level {k} outside 0..={n}")));
    }
    Ok(LevelIter {
        n,
        inner: Combinations::new(n, k),
    })
}

/// Calls `f` with every strict subset or superset of `bits` that has
/// cardinality `b`, in ascending order. Nothing is produced when `b` equals
/// the cardinality of `bits`.
#[inline]
pub(crate) fn for_each_related(bits: u64, n: u32, b: u32, mut f: impl FnMut(u64)) {
    let a = bits.count_ones();
    if b < a {
        for c in Combinations::new(a, b) {
            f(deposit(c, bits));
        }
    } else if b > a && b <= n {
        let free = !bits & low_bits(n);
        for c in Combinations::new(n - a, b - a) {
            f(bits | deposit(c, free));
        }
    }
}

/// A family of subsets of `[n]`, all of one cardinality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubFamily {
    n: u32,
    level: u32,
    members: Vec<u64>,
}

impl SubFamily {
    /// Members are sorted and deduplicated; every member must have
    /// cardinality `level` and lie inside `[n]`.
    pub fn new(n: u32, level: u32, mut members: Vec<u64>) -> Result<Self> {
        if n > MAX_N || level > n {
            return Err(Error::domain(format!("level {level} of [{n}]")));
        }
        let outside = !low_bits(n);
        if let Some(&bad) = members
            .iter()
            .find(|&&m| m & outside != 0 || m.count_ones() != level)
        {
            return Err(Error::domain(format!(
                "{bad:#x} is not a {level}-subset of [{n}]"
            )));
        }
        members.sort_unstable();
        members.dedup();
        Ok(SubFamily { n, level, members })
    }

    pub fn empty(n: u32, level: u32) -> Result<Self> {
        Self::new(n, level, Vec::new())
    }

    pub fn full_level(n: u32, level: u32) -> Result<Self> {
        let members = level_iter(n, level)?.map(|m| m.bits()).collect();
        Ok(SubFamily { n, level, members })
    }

    pub(crate) fn from_sorted_unchecked(n: u32, level: u32, members: Vec<u64>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        SubFamily { n, level, members }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[u64] {
        &self.members
    }

    pub fn masks(&self) -> impl Iterator<Item = SubsetMask> + '_ {
        self.members
            .iter()
            .map(move |&b| SubsetMask::new_unchecked(b, self.n))
    }

    pub fn contains(&self, bits: u64) -> bool {
        self.members.binary_search(&bits).is_ok()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() as u128 == choose(self.n, self.level)
    }

    /// Member-wise complement; lands on level `n - level`.
    pub fn complement(&self) -> SubFamily {
        let full = low_bits(self.n);
        let mut members: Vec<u64> = self.members.iter().map(|&m| !m & full).collect();
        members.sort_unstable();
        SubFamily {
            n: self.n,
            level: self.n - self.level,
            members,
        }
    }
}

/// The `b`-shadow: all `b`-sets below (when `b <= level`) or above
/// (when `b >= level`) some member of `family`.
pub fn shadow(family: &SubFamily, b: u32) -> Result<SubFamily> {
    let n = family.n;
    if b > n {
        return Err(Error::domain(format!("shadow level {b} outside 0..={n}")));
    }
    if b == family.level {
        return Ok(family.clone());
    }
    let level_size = choose(n, b);
    let mut out = Vec::new();
    if level_size <= BITSET_DEDUP_LIMIT {
        let mut seen = vec![0u64; (level_size as usize).div_ceil(64)];
        for &m in &family.members {
            for_each_related(m, n, b, |t| {
                let r = rank(t) as usize;
                let (w, bit) = (r / 64, 1u64 << (r % 64));
                if seen[w] & bit == 0 {
                    seen[w] |= bit;
                    out.push(t);
                }
            });
        }
        out.sort_unstable();
    } else {
        for &m in &family.members {
            for_each_related(m, n, b, |t| out.push(t));
        }
        out.sort_unstable();
        out.dedup();
    }
    Ok(SubFamily::from_sorted_unchecked(n, b, out))
}

/// Shadow over a set of levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowUnion {
    pub per_level: Vec<SubFamily>,
    pub total: u128,
}

/// Union of [`shadow`] over `levels`. Levels are disjoint, so the total is
/// the sum of per-level sizes.
pub fn shadow_union(family: &SubFamily, levels: &[u32]) -> Result<ShadowUnion> {
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    let per_level = levels
        .iter()
        .map(|&b| shadow(family, b))
        .collect::<Result<Vec<_>>>()?;
    let total = per_level.iter().map(|f| f.len() as u128).sum();
    Ok(ShadowUnion { per_level, total })
}
