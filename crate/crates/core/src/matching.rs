//! Containment-respecting matchings between unions of lattice levels.
//!
//! The bipartite graph joins a set on an `A` level to every set on a `B`
//! level it strictly contains or is strictly contained in. It is never
//! materialized: neighbours are generated on demand, nearest levels first
//! (`|b - a|` ascending, then `b` ascending), masks ascending within a level.
//! Vertices are indexed densely by `(level offset) + rank within level`.
//! Maximum matching is Hopcroft–Karp seeded by a greedy pass; everything is
//! sequential, so the result is a deterministic function of the input.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::lattice::{choose, for_each_related, level_iter, rank, SubsetMask, MAX_N};
use crate::search::{IdentitySpec, InequalitySpec, Profile};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateKind {
    /// A bijection between the two families.
    Perfect,
    /// An injection saturating the `A` side.
    Injection,
}

impl CertificateKind {
    pub fn name(self) -> &'static str {
        match self {
            CertificateKind::Perfect => "perfect",
            CertificateKind::Injection => "injection",
        }
    }
}

/// An explicit map from the `A` family into the `B` family in which every set
/// is comparable to its image. Pairs are sorted by source mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingCertificate {
    pub n: u32,
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub kind: CertificateKind,
    pub pairs: Vec<(SubsetMask, SubsetMask)>,
}

impl MatchingCertificate {
    pub fn image_of(&self, source: u64) -> Option<SubsetMask> {
        self.pairs
            .binary_search_by_key(&source, |(s, _)| s.bits())
            .ok()
            .map(|i| self.pairs[i].1)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MatchLimits {
    /// Upper bound on `|A family| + |B family|`.
    pub max_vertices: usize,
}

impl Default for MatchLimits {
    fn default() -> Self {
        MatchLimits {
            max_vertices: 1 << 26,
        }
    }
}

const NIL: u32 = u32::MAX;
const INF: u32 = u32::MAX;

/// All sets on a collection of levels, indexed densely.
struct LevelUnion {
    masks: Vec<u64>,
    offset: [Option<usize>; MAX_N as usize + 1],
}

impl LevelUnion {
    fn new(n: u32, levels: &[u32]) -> Self {
        let mut offset = [None; MAX_N as usize + 1];
        let mut masks = Vec::new();
        for &l in levels {
            offset[l as usize] = Some(masks.len());
            masks.extend(
                level_iter(n, l)
                    .expect("level checked by caller")
                    .map(|m| m.bits()),
            );
        }
        LevelUnion { masks, offset }
    }

    #[inline]
    fn index_of(&self, bits: u64) -> usize {
        let base = self.offset[bits.count_ones() as usize].expect("mask on a member level");
        base + rank(bits) as usize
    }

    fn len(&self) -> usize {
        self.masks.len()
    }
}

struct Engine {
    n: u32,
    left: LevelUnion,
    right: LevelUnion,
    /// For each cardinality on the left, the right levels in neighbour order.
    level_order: Vec<Vec<u32>>,
    blocked_left: Option<usize>,
    blocked_right: Option<usize>,
    pair_left: Vec<u32>,
    pair_right: Vec<u32>,
    dist: Vec<u32>,
    pool: Vec<Vec<u32>>,
}

struct Frame {
    u: usize,
    neighbours: Vec<u32>,
    pos: usize,
}

impl Engine {
    fn new(n: u32, a: &[u32], b: &[u32], pinned: Option<(u64, u64)>) -> Self {
        let left = LevelUnion::new(n, a);
        let right = LevelUnion::new(n, b);
        let mut level_order = vec![Vec::new(); n as usize + 1];
        for &la in a {
            let mut order = b.to_vec();
            order.sort_by_key(|&lb| (lb.abs_diff(la), lb));
            level_order[la as usize] = order;
        }
        let (blocked_left, blocked_right) = match pinned {
            Some((s, t)) => (Some(left.index_of(s)), Some(right.index_of(t))),
            None => (None, None),
        };
        let (l, r) = (left.len(), right.len());
        Engine {
            n,
            left,
            right,
            level_order,
            blocked_left,
            blocked_right,
            pair_left: vec![NIL; l],
            pair_right: vec![NIL; r],
            dist: vec![INF; l],
            pool: Vec::new(),
        }
    }

    fn neighbours(&mut self, u: usize) -> Vec<u32> {
        let mut out = self.pool.pop().unwrap_or_default();
        out.clear();
        let bits = self.left.masks[u];
        let a = bits.count_ones() as usize;
        for &lb in &self.level_order[a] {
            let right = &self.right;
            let blocked = self.blocked_right;
            for_each_related(bits, self.n, lb, |t| {
                let v = right.index_of(t);
                if Some(v) != blocked {
                    out.push(v as u32);
                }
            });
        }
        out
    }

    fn is_free_left(&self, u: usize) -> bool {
        self.pair_left[u] == NIL && Some(u) != self.blocked_left
    }

    fn greedy(&mut self) {
        for u in 0..self.left.len() {
            if !self.is_free_left(u) {
                continue;
            }
            let nb = self.neighbours(u);
            if let Some(&v) = nb.iter().find(|&&v| self.pair_right[v as usize] == NIL) {
                self.pair_left[u] = v;
                self.pair_right[v as usize] = u as u32;
            }
            self.pool.push(nb);
        }
    }

    /// Layers the alternating-path graph; true if some free right vertex is reachable.
    fn bfs(&mut self) -> bool {
        let mut queue = VecDeque::new();
        for u in 0..self.left.len() {
            if self.is_free_left(u) {
                self.dist[u] = 0;
                queue.push_back(u);
            } else {
                self.dist[u] = INF;
            }
        }
        let mut limit = INF;
        while let Some(u) = queue.pop_front() {
            if self.dist[u] >= limit {
                continue;
            }
            let nb = self.neighbours(u);
            for &v in &nb {
                let w = self.pair_right[v as usize];
                if w == NIL {
                    limit = limit.min(self.dist[u] + 1);
                } else if self.dist[w as usize] == INF {
                    self.dist[w as usize] = self.dist[u] + 1;
                    queue.push_back(w as usize);
                }
            }
            self.pool.push(nb);
        }
        limit != INF
    }

    fn augment_from(&mut self, root: usize) -> bool {
        let mut stack = vec![Frame {
            u: root,
            neighbours: self.neighbours(root),
            pos: 0,
        }];
        while let Some(top) = stack.last_mut() {
            if top.pos == top.neighbours.len() {
                self.dist[top.u] = INF;
                let done = stack.pop().expect("non-empty");
                self.pool.push(done.neighbours);
                continue;
            }
            let v = top.neighbours[top.pos];
            top.pos += 1;
            let w = self.pair_right[v as usize];
            if w == NIL {
                for f in &stack {
                    let v = f.neighbours[f.pos - 1];
                    self.pair_left[f.u] = v;
                    self.pair_right[v as usize] = f.u as u32;
                }
                for f in stack {
                    self.pool.push(f.neighbours);
                }
                return true;
            }
            let next_dist = self.dist[top.u] + 1;
            if self.dist[w as usize] == next_dist {
                let w = w as usize;
                let neighbours = self.neighbours(w);
                stack.push(Frame {
                    u: w,
                    neighbours,
                    pos: 0,
                });
            }
        }
        false
    }

    fn run(&mut self) {
        self.greedy();
        while self.bfs() {
            for u in 0..self.left.len() {
                if self.is_free_left(u) && self.dist[u] == 0 {
                    self.augment_from(u);
                }
            }
        }
    }
}

/// Checks shared by every entry point; returns the two family sizes.
fn check_levels(n: u32, a: &[u32], b: &[u32], limits: MatchLimits) -> Result<(u128, u128)> {
    if n == 0 || n > MAX_N {
        return Err(Error::domain(format!("n = {n} outside 1..={MAX_N}")));
    }
    for levels in [a, b] {
        if levels.windows(2).any(|w| w[0] >= w[1]) || levels.iter().any(|&l| l > n) {
            return Err(Error::domain(format!(
                "levels {levels:?} must be strictly ascending within 0..={n}"
            )));
        }
    }
    if let Some(l) = a.iter().find(|l| b.contains(l)) {
        return Err(Error::domain(format!("level {l} on both sides")));
    }
    let size = |ls: &[u32]| ls.iter().map(|&l| choose(n, l)).sum::<u128>();
    let (left, right) = (size(a), size(b));
    let cap = (limits.max_vertices as u128).min(NIL as u128 - 1);
    if left + right > cap {
        return Err(Error::Resource(format!(
            "{} vertices exceed the limit of {cap}",
            left + right
        )));
    }
    Ok((left, right))
}

fn build_certificate(
    n: u32,
    a: &[u32],
    b: &[u32],
    pinned: Option<(u64, u64)>,
    limits: MatchLimits,
) -> Result<MatchingCertificate> {
    let (left_size, right_size) = check_levels(n, a, b, limits)?;
    if left_size > right_size {
        return Err(Error::domain(format!(
            "A family ({left_size}) is larger than B family ({right_size}); no injection exists"
        )));
    }
    let mut engine = Engine::new(n, a, b, pinned);
    engine.run();

    let mut pairs = Vec::with_capacity(engine.left.len());
    let mut unmatched = 0usize;
    for u in 0..engine.left.len() {
        let source = engine.left.masks[u];
        let image = if Some(u) == engine.blocked_left {
            pinned.map(|(_, t)| t)
        } else {
            match engine.pair_left[u] {
                NIL => None,
                v => Some(engine.right.masks[v as usize]),
            }
        };
        match image {
            Some(t) => pairs.push((
                SubsetMask::new_unchecked(source, n),
                SubsetMask::new_unchecked(t, n),
            )),
            None => unmatched += 1,
        }
    }
    if unmatched > 0 {
        return Err(Error::InternalInvariant(format!(
            "maximum matching leaves {unmatched} of {left_size} sources unmatched \
             although |A family| <= |B family|"
        )));
    }
    pairs.sort_unstable_by_key(|(s, _)| s.bits());
    let kind = if left_size == right_size {
        CertificateKind::Perfect
    } else {
        CertificateKind::Injection
    };
    Ok(MatchingCertificate {
        n,
        a: a.to_vec(),
        b: b.to_vec(),
        kind,
        pairs,
    })
}

/// A maximum matching of the comparability graph between the `A` and `B`
/// families. Requires `Σ_A C(n,a) <= Σ_B C(n,b)`; the result then saturates
/// the `A` side, and is perfect when the sums agree.
pub fn maximum_matching(n: u32, a: &[u32], b: &[u32]) -> Result<MatchingCertificate> {
    build_certificate(n, a, b, None, MatchLimits::default())
}

pub fn maximum_matching_with_limits(
    n: u32,
    a: &[u32],
    b: &[u32],
    limits: MatchLimits,
) -> Result<MatchingCertificate> {
    build_certificate(n, a, b, None, limits)
}

/// The orderable bijection for a binomial identity.
///
/// With `pin_wsb`, the empty set is sent to `{n}` and the remaining sets are
/// matched among themselves.
pub fn order(spec: &IdentitySpec, pin_wsb: bool) -> Result<MatchingCertificate> {
    order_with_limits(spec, pin_wsb, MatchLimits::default())
}

pub fn order_with_limits(
    spec: &IdentitySpec,
    pin_wsb: bool,
    limits: MatchLimits,
) -> Result<MatchingCertificate> {
    let profile = if pin_wsb { Profile::Wsb } else { Profile::Any };
    let violations = spec.validate(profile);
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    let pinned = pin_wsb.then(|| (0u64, 1u64 << (spec.n - 1)));
    let cert = build_certificate(spec.n, &spec.a, &spec.b, pinned, limits)?;
    if cert.kind != CertificateKind::Perfect {
        return Err(Error::InternalInvariant(
            "equal family sizes but the matching is not perfect".into(),
        ));
    }
    Ok(cert)
}

/// An injection from the `A` family into the larger `B` family.
pub fn inject(spec: &InequalitySpec) -> Result<MatchingCertificate> {
    let violations = spec.validate();
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    build_certificate(spec.n, &spec.a, &spec.b, None, MatchLimits::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::strictly_comparable;
    use crate::search::{search, SearchMode};

    fn assert_sound(cert: &MatchingCertificate) {
        let n = cert.n;
        let size = |ls: &[u32]| ls.iter().map(|&l| choose(n, l)).sum::<u128>();
        assert_eq!(cert.pairs.len() as u128, size(&cert.a));
        assert!(cert.pairs.windows(2).all(|w| w[0].0 < w[1].0));
        let mut images: Vec<u64> = cert.pairs.iter().map(|p| p.1.bits()).collect();
        images.sort_unstable();
        images.dedup();
        assert_eq!(images.len(), cert.pairs.len());
        for (s, t) in &cert.pairs {
            assert!(cert.a.contains(&s.cardinality()));
            assert!(cert.b.contains(&t.cardinality()));
            assert!(strictly_comparable(s.bits(), t.bits()), "{s} {t}");
        }
    }

    fn bits(cert: &MatchingCertificate) -> Vec<(u64, u64)> {
        cert.pairs
            .iter()
            .map(|(s, t)| (s.bits(), t.bits()))
            .collect()
    }

    #[test]
    fn tiny_identity_is_deterministic() {
        let cert = order(&IdentitySpec::new(2, vec![0, 2], vec![1]), false).unwrap();
        assert_eq!(bits(&cert), vec![(0x0, 0x1), (0x3, 0x2)]);
        assert_eq!(cert.kind, CertificateKind::Perfect);
    }

    #[test]
    fn symmetric_identity_maps_up() {
        let cert = order(&IdentitySpec::new(5, vec![2], vec![3]), false).unwrap();
        assert_eq!(cert.pairs.len(), 10);
        assert_sound(&cert);
        assert!(cert.pairs.iter().all(|(s, t)| s.is_subset_of(t)));
    }

    #[test]
    fn small_wsb_identity() {
        let spec = IdentitySpec::new(6, vec![0, 3], vec![1, 2]);
        let cert = order(&spec, false).unwrap();
        assert_eq!(cert.pairs.len(), 21);
        assert_sound(&cert);
        let pinned = order(&spec, true).unwrap();
        assert_sound(&pinned);
        assert_eq!(pinned.image_of(0).unwrap().bits(), 1 << 5);
    }

    #[test]
    fn pinned_pair_is_exclusive() {
        let spec = IdentitySpec::new(15, vec![0, 4, 6, 13], vec![1, 3, 5, 10]);
        let cert = order(&spec, true).unwrap();
        assert_eq!(cert.pairs.len(), 6476);
        assert_sound(&cert);
        assert_eq!(bits(&cert)[0], (0x0, 0x4000));
        assert_eq!(
            cert.pairs.iter().filter(|p| p.1.bits() == 0x4000).count(),
            1
        );
    }

    #[test]
    fn reruns_are_identical() {
        let found = search(12, Profile::Wsb, Some(1), SearchMode::All).unwrap();
        let spec = &found.identities[0];
        assert_eq!(order(spec, false).unwrap(), order(spec, false).unwrap());
        let spec = IdentitySpec::new(6, vec![0, 3], vec![1, 2]);
        assert_eq!(order(&spec, true).unwrap(), order(&spec, true).unwrap());
    }

    #[test]
    fn injections() {
        let cert = inject(&InequalitySpec::new(4, vec![1], vec![2])).unwrap();
        assert_eq!(cert.kind, CertificateKind::Injection);
        assert_eq!(cert.pairs.len(), 4);
        assert_sound(&cert);
        let cert = inject(&InequalitySpec::new(6, vec![2], vec![3])).unwrap();
        assert_eq!(cert.pairs.len(), 15);
        assert_sound(&cert);
        let cert = inject(&InequalitySpec::new(6, vec![0, 3], vec![1, 2])).unwrap();
        assert_eq!(cert.kind, CertificateKind::Perfect);
        assert!(matches!(
            inject(&InequalitySpec::new(6, vec![3], vec![2])),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn rejects_invalid_identities() {
        let err = order(&IdentitySpec::new(6, vec![0, 3], vec![1, 3]), false).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        // valid identity, but not of WSB type
        let err = order(&IdentitySpec::new(5, vec![2], vec![3]), true).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn resource_limit() {
        let err =
            maximum_matching_with_limits(20, &[10], &[11], MatchLimits { max_vertices: 1000 })
                .unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn every_searched_identity_is_orderable() {
        for n in 2..=12 {
            let found = search(n, Profile::Any, None, SearchMode::All).unwrap();
            for spec in found.identities.iter().take(40) {
                assert_sound(&order(spec, false).unwrap());
            }
        }
    }
}
