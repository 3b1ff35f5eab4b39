//! Number-theoretic obstructions to fundamental and WSB-type identities.
//!
//! Both checks are one-sided: they either prove that no identity exists or
//! return [`Verdict::Inconclusive`], in which case exhaustive search is the
//! authority.

use std::fmt;

use crate::lattice::{choose, MAX_N};
use crate::search::Profile;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    NoneExists,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reason {
    /// `n = 1`: the right-hand side has no admissible level.
    DegenerateN1,
    /// `n = p^alpha`: the left side is `1 mod p`, every right-side term is `0 mod p`.
    PrimePower { p: u64, alpha: u32 },
    /// `n = p^k q^m` with `p >= 2^(q^m)`.
    PropPq { p: u64, k: u32, q: u64, m: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NonexistenceVerdict {
    pub n: u32,
    pub verdict: Verdict,
    pub reason: Option<Reason>,
}

impl NonexistenceVerdict {
    fn inconclusive(n: u32) -> Self {
        NonexistenceVerdict {
            n,
            verdict: Verdict::Inconclusive,
            reason: None,
        }
    }

    fn none_exists(n: u32, reason: Reason) -> Self {
        NonexistenceVerdict {
            n,
            verdict: Verdict::NoneExists,
            reason: Some(reason),
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reason::DegenerateN1 => f.write_str("degenerate_n1"),
            Reason::PrimePower { p, alpha } => write!(f, "prime_power p={p} alpha={alpha}"),
            Reason::PropPq { p, k, q, m } => write!(f, "prop_pq p={p} k={k} q={q} m={m}"),
        }
    }
}

impl fmt::Display for NonexistenceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.verdict, self.reason) {
            (Verdict::NoneExists, Some(r)) => write!(f, "none_exists {r}"),
            (Verdict::NoneExists, None) => f.write_str("none_exists"),
            (Verdict::Inconclusive, _) => f.write_str("inconclusive"),
        }
    }
}

/// Prime factorization by trial division, ascending primes.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn prime_power_check(n: u32) -> NonexistenceVerdict {
    if n == 1 {
        return NonexistenceVerdict::none_exists(n, Reason::DegenerateN1);
    }
    if n == 0 || n > MAX_N {
        return NonexistenceVerdict::inconclusive(n);
    }
    match factorize(n as u64)[..] {
        [(p, alpha)] => NonexistenceVerdict::none_exists(n, Reason::PrimePower { p, alpha }),
        _ => NonexistenceVerdict::inconclusive(n),
    }
}

/// `2^(q^m)`, saturating at `u128::MAX`.
fn two_pow_q_pow_m(q: u64, m: u32) -> u128 {
    match q.checked_pow(m) {
        Some(e) if e < 128 => 1u128 << e,
        _ => u128::MAX,
    }
}

/// The two-prime obstruction. Only applies to WSB-type identities.
pub fn prop_pq_check(n: u32) -> NonexistenceVerdict {
    if n == 0 || n > MAX_N {
        return NonexistenceVerdict::inconclusive(n);
    }
    let factors = factorize(n as u64);
    match factors[..] {
        [_] => prime_power_check(n),
        [(p1, e1), (p2, e2)] => {
            for ((p, k), (q, m)) in [((p1, e1), (p2, e2)), ((p2, e2), (p1, e1))] {
                if p as u128 >= two_pow_q_pow_m(q, m) {
                    return NonexistenceVerdict::none_exists(n, Reason::PropPq { p, k, q, m });
                }
            }
            NonexistenceVerdict::inconclusive(n)
        }
        _ => NonexistenceVerdict::inconclusive(n),
    }
}

/// Combine the checks that are sound for `profile`. Never asserts existence.
pub fn verdict(n: u32, profile: Profile) -> NonexistenceVerdict {
    match profile {
        Profile::Any => NonexistenceVerdict::inconclusive(n),
        Profile::Fundamental => prime_power_check(n),
        Profile::Wsb => {
            let pp = prime_power_check(n);
            if pp.verdict == Verdict::NoneExists {
                pp
            } else {
                prop_pq_check(n)
            }
        }
    }
}

/// Largest `|Σ ε_i C(q^m, i)|` over `ε_i ∈ {-1, 0, 1}`, `0 < i < q^m`:
/// all inner binomials of row `q^m` taken with sign `+1`.
pub fn max_signed_inner_row_sum(q: u64, m: u32) -> Option<u128> {
    let row = q.checked_pow(m)?;
    if row > MAX_N as u64 {
        return None;
    }
    let row = row as u32;
    Some((1..row).map(|i| choose(row, i)).sum())
}
