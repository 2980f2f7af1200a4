//! Minimal covers and maximal masses of a frontier at a fixed resolution.
//!
//! Fix a frontier `f` of depth `k`, a resolution `n`, and a dimension
//! parameter `s`.  An admissible cover is an antichain of nodes, with
//! lengths between `n` and `max(n, k)`, whose cylinders jointly contain
//! every point passing through `f`; its weight is the sum of `2^(-s*|σ|)`
//! over its members.  [`min_cover`] returns the cheapest admissible cover,
//! which is the value of the covering outer measure at stage `2^(-n)`
//! applied to the hull of `f`.
//!
//! The dual problem distributes mass over the frontier nodes subject to the
//! cylinder capacities `2^(-s*d)` at every constrained depth; by max-flow
//! min-cut on the tree the optimal total equals the minimal cover weight,
//! and [`max_mass`] returns an explicit optimal distribution.  Both
//! directions produce witnesses that can be rechecked from scratch with
//! [`verify_cover`] and [`verify_mass`].
//!
//! [`brute_cover`] is deliberately unsophisticated: it enumerates every
//! admissible cover, tracking only the multiset of member lengths, and
//! keeps the best.  It exists to check `min_cover` on small inputs and
//! refuses anything big.

use crate::algebraic::{Dyadic, RootWeight, SIndex};
use crate::trees::{BitString, Frontier, TreeSource, ValidationError};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use std::cmp::Ordering;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoverError {
    #[error("candidate set has {attempted} nodes, over the limit {limit}")]
    SizeLimit { limit: usize, attempted: usize },
    #[error("witness rejected: {0}")]
    BadWitness(String),
}

/// A cover together with its exact weight.  The cover is sorted and is an
/// antichain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverResult {
    pub weight: RootWeight,
    pub cover: Vec<BitString>,
}

/// An optimal mass distribution: one nonnegative mass per frontier node, in
/// the frontier's order, summing to `total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MassResult {
    pub total: RootWeight,
    pub masses: Vec<(BitString, RootWeight)>,
}

/// Costs and chosen actions for one level of the dynamic program.
struct DpLevel {
    nodes: Vec<BitString>,
    costs: Vec<RootWeight>,
    take: Vec<bool>,
}

/// The distinct prefixes of a sorted level, each paired with the sum of the
/// values over its group of children.
fn group_to_parents(
    depth: usize,
    nodes: &[BitString],
    values: &[RootWeight],
) -> (Vec<BitString>, Vec<RootWeight>) {
    let mut parents: Vec<BitString> = Vec::new();
    let mut sums: Vec<RootWeight> = Vec::new();
    for (node, value) in nodes.iter().zip(values) {
        let p = node.prefix(depth);
        if parents.last() == Some(&p) {
            let last = sums.last_mut().unwrap();
            *last = &*last + value;
        } else {
            parents.push(p);
            sums.push(value.clone());
        }
    }
    (parents, sums)
}

/// All extensions of the frontier's nodes out to the given length.
fn extend_frontier(frontier: &Frontier, len: usize) -> Vec<BitString> {
    let extra = len - frontier.depth();
    let mut out = Vec::new();
    for node in frontier.nodes() {
        for i in 0u64..1 << extra {
            let mut ext = node.clone();
            for j in 0..extra {
                ext.push(((i >> (extra - 1 - j)) & 1) as u8);
            }
            out.push(ext);
        }
    }
    out
}

/// The cheapest admissible cover of the frontier at the given resolution.
///
/// Covers below the frontier (`resolution > depth`) are forced: the unique
/// admissible cover is the set of all length-`resolution` extensions.
/// Otherwise each node between the two depths either enters the cover or
/// delegates to its children, and the optimum is computed bottom-up; ties
/// prefer the shorter node, so returned covers are deterministic.
pub fn min_cover(frontier: &Frontier, resolution: usize, s: SIndex) -> CoverResult {
    let k = frontier.depth();
    if frontier.is_empty() {
        return CoverResult {
            weight: RootWeight::zero(s.den()),
            cover: Vec::new(),
        };
    }
    if resolution > k {
        let count = BigInt::from(frontier.len()) << (resolution - k);
        let weight = RootWeight::cylinder(s, resolution as u64).scalar_mul(&count);
        return CoverResult {
            weight,
            cover: extend_frontier(frontier, resolution),
        };
    }

    let mut levels: Vec<DpLevel> = Vec::with_capacity(k - resolution + 1);
    let leaf_cost = RootWeight::cylinder(s, k as u64);
    levels.push(DpLevel {
        nodes: frontier.nodes().to_vec(),
        costs: vec![leaf_cost; frontier.len()],
        take: vec![true; frontier.len()],
    });
    for depth in (resolution..k).rev() {
        let child = levels.last().unwrap();
        let (parents, sums) = group_to_parents(depth, &child.nodes, &child.costs);
        let own = RootWeight::cylinder(s, depth as u64);
        let mut costs = Vec::with_capacity(parents.len());
        let mut take = Vec::with_capacity(parents.len());
        for sum in sums {
            if own <= sum {
                costs.push(own.clone());
                take.push(true);
            } else {
                costs.push(sum);
                take.push(false);
            }
        }
        levels.push(DpLevel {
            nodes: parents,
            costs,
            take,
        });
    }
    levels.reverse();

    let top = &levels[0];
    let mut weight = RootWeight::zero(s.den());
    for cost in &top.costs {
        weight = &weight + cost;
    }
    let mut cover = Vec::new();
    for root in 0..top.nodes.len() {
        collect_cover(&levels, 0, root, &mut cover);
    }
    CoverResult { weight, cover }
}

fn collect_cover(levels: &[DpLevel], li: usize, ni: usize, out: &mut Vec<BitString>) {
    let level = &levels[li];
    if level.take[ni] {
        out.push(level.nodes[ni].clone());
        return;
    }
    let next = &levels[li + 1];
    for bit in 0..2u8 {
        let child = level.nodes[ni].child(bit);
        if let Ok(ci) = next.nodes.binary_search(&child) {
            collect_cover(levels, li + 1, ci, out);
        }
    }
}

/// The heaviest mass distribution on the frontier respecting every cylinder
/// capacity between the resolution and the frontier depth.
///
/// The optimal flow through each node is `min(2^(-s*d), flow into its
/// children)`; masses are then handed down greedily, first child first.
/// The total always equals [`min_cover`]'s weight.
pub fn max_mass(frontier: &Frontier, resolution: usize, s: SIndex) -> MassResult {
    let k = frontier.depth();
    if frontier.is_empty() {
        return MassResult {
            total: RootWeight::zero(s.den()),
            masses: Vec::new(),
        };
    }
    if resolution > k {
        let per = RootWeight::cylinder(s, resolution as u64).times_pow2((resolution - k) as u64);
        let total = per.scalar_mul(&BigInt::from(frontier.len()));
        let masses = frontier
            .nodes()
            .iter()
            .map(|n| (n.clone(), per.clone()))
            .collect();
        return MassResult { total, masses };
    }

    // flows bottom-up, then grants top-down
    let mut levels: Vec<(Vec<BitString>, Vec<RootWeight>)> = Vec::new();
    let leaf_cap = RootWeight::cylinder(s, k as u64);
    levels.push((frontier.nodes().to_vec(), vec![leaf_cap; frontier.len()]));
    for depth in (resolution..k).rev() {
        let (nodes, flows) = levels.last().unwrap();
        let (parents, sums) = group_to_parents(depth, nodes, flows);
        let cap = RootWeight::cylinder(s, depth as u64);
        let flows = sums
            .into_iter()
            .map(|sum| if cap <= sum { cap.clone() } else { sum })
            .collect();
        levels.push((parents, flows));
    }
    levels.reverse();

    let mut total = RootWeight::zero(s.den());
    for flow in &levels[0].1 {
        total = &total + flow;
    }
    let mut grants = levels[0].1.clone();
    for li in 0..levels.len() - 1 {
        let (nodes, _) = &levels[li];
        let (next_nodes, next_flows) = &levels[li + 1];
        let mut next_grants = vec![RootWeight::zero(s.den()); next_nodes.len()];
        for (ni, node) in nodes.iter().enumerate() {
            let mut remaining = grants[ni].clone();
            for bit in 0..2u8 {
                if let Ok(ci) = next_nodes.binary_search(&node.child(bit)) {
                    let flow = &next_flows[ci];
                    let give = if *flow <= remaining {
                        flow.clone()
                    } else {
                        remaining.clone()
                    };
                    remaining = &remaining - &give;
                    next_grants[ci] = give;
                }
            }
            debug_assert!(remaining.is_zero());
        }
        grants = next_grants;
    }

    let masses = levels
        .last()
        .unwrap()
        .0
        .iter()
        .cloned()
        .zip(grants)
        .collect();
    MassResult { total, masses }
}

const FILTER_BITS: u64 = 96;

/// `floor(d * 2^FILTER_BITS)` for a nonnegative dyadic, or `None` if it
/// does not fit.
fn fixed_floor(d: &Dyadic) -> Option<u128> {
    let exp = d.exp();
    let shifted = if exp <= FILTER_BITS {
        d.num() << (FILTER_BITS - exp) as usize
    } else {
        d.num() >> (exp - FILTER_BITS) as usize
    };
    shifted.to_u128()
}

/// Fixed-point enclosure of a weight, rounded outward.
fn fixed_bounds(w: &RootWeight) -> Option<(u128, u128)> {
    let iv = w.interval(FILTER_BITS);
    let lo = fixed_floor(&iv.lo)?;
    let hi = fixed_floor(&iv.hi)?.checked_add(1)?;
    Some((lo, hi))
}

fn weight_of_counts(counts: &[u64], resolution: usize, s: SIndex) -> RootWeight {
    let mut w = RootWeight::zero(s.den());
    for (offset, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let term =
            RootWeight::cylinder(s, (resolution + offset) as u64).scalar_mul(&BigInt::from(count));
        w = &w + &term;
    }
    w
}

struct BruteState<'a> {
    levels: &'a [Vec<BitString>],
    bounds: Vec<Option<(u128, u128)>>,
    resolution: usize,
    s: SIndex,
    counts: Vec<u64>,
    chosen: Vec<(usize, usize)>,
    best: Option<BruteBest>,
}

struct BruteBest {
    counts: Vec<u64>,
    chosen: Vec<(usize, usize)>,
    weight: Option<RootWeight>,
}

impl BruteState<'_> {
    /// Interval sum of the current counts; `None` when any depth lacks
    /// finite bounds, which forces the exact comparison path.
    fn interval_sum(&self, counts: &[u64]) -> Option<(u128, u128)> {
        let mut lo: u128 = 0;
        let mut hi: u128 = 0;
        for (offset, &count) in counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let (blo, bhi) = self.bounds[offset]?;
            lo = lo.checked_add(blo.checked_mul(count as u128)?)?;
            hi = hi.checked_add(bhi.checked_mul(count as u128)?)?;
        }
        Some((lo, hi))
    }

    fn consider(&mut self) {
        let better = match &self.best {
            None => true,
            Some(best) => {
                let decided = match (self.interval_sum(&self.counts), self.interval_sum(&best.counts)) {
                    (Some((clo, chi)), Some((blo, bhi))) => {
                        if chi < blo {
                            Some(true)
                        } else if clo > bhi {
                            Some(false)
                        } else {
                            None
                        }
                    }
                    _ => None,
                };
                match decided {
                    Some(b) => b,
                    None => {
                        let cand = weight_of_counts(&self.counts, self.resolution, self.s);
                        let best_w = weight_of_counts(&best.counts, self.resolution, self.s);
                        cand < best_w
                    }
                }
            }
        };
        if better {
            self.best = Some(BruteBest {
                counts: self.counts.clone(),
                chosen: self.chosen.clone(),
                weight: None,
            });
        }
    }

    fn explore(&mut self, work: &mut Vec<(usize, usize)>) {
        let Some((li, ni)) = work.pop() else {
            self.consider();
            return;
        };

        self.counts[li] += 1;
        self.chosen.push((li, ni));
        self.explore(work);
        self.chosen.pop();
        self.counts[li] -= 1;

        if li + 1 < self.levels.len() {
            let node = &self.levels[li][ni];
            let mark = work.len();
            for bit in 0..2u8 {
                if let Ok(ci) = self.levels[li + 1].binary_search(&node.child(bit)) {
                    work.push((li + 1, ci));
                }
            }
            self.explore(work);
            work.truncate(mark);
        }

        work.push((li, ni));
    }
}

/// Exhaustive minimum over every admissible cover, by literal enumeration.
///
/// Distinct subtrees above the resolution admit independent choices, so the
/// enumeration runs once per depth-`resolution` node and the per-subtree
/// minima are summed; every cover of every subtree is visited.  Refuses to
/// start if the candidate node count exceeds `size_limit`.
pub fn brute_cover(
    frontier: &Frontier,
    resolution: usize,
    s: SIndex,
    size_limit: usize,
) -> Result<CoverResult, CoverError> {
    let k = frontier.depth();
    if frontier.is_empty() {
        return Ok(CoverResult {
            weight: RootWeight::zero(s.den()),
            cover: Vec::new(),
        });
    }
    if resolution > k {
        let extra = resolution - k;
        let attempted = if extra >= 100 {
            u128::MAX
        } else {
            (frontier.len() as u128) << extra
        };
        if attempted > size_limit as u128 {
            return Err(CoverError::SizeLimit {
                limit: size_limit,
                attempted: attempted.try_into().unwrap_or(usize::MAX),
            });
        }
        let cover = extend_frontier(frontier, resolution);
        let mut weight = RootWeight::zero(s.den());
        let term = RootWeight::cylinder(s, resolution as u64);
        for _ in &cover {
            weight = &weight + &term;
        }
        return Ok(CoverResult { weight, cover });
    }

    let mut levels: Vec<Vec<BitString>> = vec![frontier.nodes().to_vec()];
    for depth in (resolution..k).rev() {
        let child = levels.last().unwrap();
        let mut parents: Vec<BitString> = child.iter().map(|n| n.prefix(depth)).collect();
        parents.dedup();
        levels.push(parents);
    }
    levels.reverse();
    let attempted: usize = levels.iter().map(|l| l.len()).sum();
    if attempted > size_limit {
        return Err(CoverError::SizeLimit {
            limit: size_limit,
            attempted,
        });
    }

    let bounds = (resolution..=k)
        .map(|d| fixed_bounds(&RootWeight::cylinder(s, d as u64)))
        .collect();
    let mut state = BruteState {
        levels: &levels,
        bounds,
        resolution,
        s,
        counts: vec![0; k - resolution + 1],
        chosen: Vec::new(),
        best: None,
    };

    let mut weight = RootWeight::zero(s.den());
    let mut cover: Vec<BitString> = Vec::new();
    for root in 0..levels[0].len() {
        state.best = None;
        let mut work = vec![(0usize, root)];
        state.explore(&mut work);
        let best = state.best.take().unwrap();
        let w = best
            .weight
            .unwrap_or_else(|| weight_of_counts(&best.counts, resolution, s));
        weight = &weight + &w;
        cover.extend(
            best.chosen
                .iter()
                .map(|&(li, ni)| levels[li][ni].clone()),
        );
    }
    cover.sort();
    Ok(CoverResult { weight, cover })
}

/// Rechecks a claimed minimal cover from scratch: member lengths in range,
/// antichain, full coverage of the frontier, and the weight resumming to
/// the claimed value.
pub fn verify_cover(
    frontier: &Frontier,
    resolution: usize,
    s: SIndex,
    result: &CoverResult,
) -> Result<(), CoverError> {
    let bad = |msg: String| Err(CoverError::BadWitness(msg));
    let k = frontier.depth();
    let lo = resolution.min(k);
    let hi = resolution.max(k);
    if frontier.is_empty() {
        if !result.cover.is_empty() || !result.weight.is_zero() {
            return bad("empty frontier needs an empty cover of weight 0".into());
        }
        return Ok(());
    }
    for member in &result.cover {
        if member.len() < lo || member.len() > hi {
            return bad(format!("member {} has length outside [{}, {}]", member, lo, hi));
        }
    }
    let mut sorted = result.cover.clone();
    sorted.sort();
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            return bad(format!("duplicate member {}", pair[0]));
        }
        if pair[0].is_prefix_of(&pair[1]) {
            return bad(format!("{} and {} violate the antichain", pair[0], pair[1]));
        }
    }
    if resolution <= k {
        for node in frontier.nodes() {
            let covered = (resolution..=k).any(|d| {
                d <= node.len() && sorted.binary_search(&node.prefix(d)).is_ok()
            });
            if !covered {
                return bad(format!("frontier node {} is not covered", node));
            }
        }
    } else {
        let expected = (frontier.len() as u128) << (resolution - k);
        if sorted.len() as u128 != expected {
            return bad(format!(
                "forced cover needs {} members, found {}",
                expected,
                sorted.len()
            ));
        }
        for member in &sorted {
            if !frontier.contains(&member.prefix(k)) {
                return bad(format!("member {} does not extend the frontier", member));
            }
        }
    }
    let mut resummed = RootWeight::zero(s.den());
    for member in &sorted {
        resummed = &resummed + &RootWeight::cylinder(s, member.len() as u64);
    }
    if resummed != result.weight {
        return bad("weight does not resum to the claimed value".into());
    }
    Ok(())
}

/// Rechecks a claimed mass distribution: alignment with the frontier,
/// nonnegativity, every cylinder capacity between the resolution and the
/// frontier depth, and the total.
pub fn verify_mass(
    frontier: &Frontier,
    resolution: usize,
    s: SIndex,
    result: &MassResult,
) -> Result<(), CoverError> {
    let bad = |msg: String| Err(CoverError::BadWitness(msg));
    let k = frontier.depth();
    if result.masses.len() != frontier.len() {
        return bad("one mass per frontier node required".into());
    }
    let mut sum = RootWeight::zero(s.den());
    for ((node, mass), expected) in result.masses.iter().zip(frontier.nodes()) {
        if node != expected {
            return bad(format!("mass entry {} out of order", node));
        }
        if mass.sign() == Ordering::Less {
            return bad(format!("negative mass at {}", node));
        }
        sum = &sum + mass;
    }
    if sum != result.total {
        return bad("masses do not sum to the claimed total".into());
    }
    if resolution > k {
        let cap = RootWeight::cylinder(s, resolution as u64).times_pow2((resolution - k) as u64);
        for (node, mass) in &result.masses {
            if *mass > cap {
                return bad(format!("mass at {} exceeds its extension capacity", node));
            }
        }
        return Ok(());
    }
    let mut nodes: Vec<BitString> = frontier.nodes().to_vec();
    let mut values: Vec<RootWeight> = result.masses.iter().map(|(_, m)| m.clone()).collect();
    for depth in (resolution..=k).rev() {
        if depth < k {
            let (parents, sums) = group_to_parents(depth, &nodes, &values);
            nodes = parents;
            values = sums;
        }
        let cap = RootWeight::cylinder(s, depth as u64);
        for (node, value) in nodes.iter().zip(&values) {
            if *value > cap {
                return bad(format!("capacity exceeded at {} (depth {})", node, depth));
            }
        }
    }
    Ok(())
}

/// The cover weights of a source's levels from the resolution out to
/// `depth_max`, after validating the source that far.
pub fn premeasure_profile(
    source: &TreeSource,
    resolution: usize,
    depth_max: usize,
    s: SIndex,
) -> Result<Vec<RootWeight>, ValidationError> {
    crate::trees::validate_source(source, depth_max)?;
    let mut rows = Vec::new();
    for k in resolution..=depth_max {
        let level = source.level(k)?;
        rows.push(min_cover(&level, resolution, s).weight);
    }
    Ok(rows)
}

/// Brackets where the level-`depth` cover weight crosses 1, at resolution
/// `depth/2`: the largest listed `s` whose weight exceeds 1 and the
/// smallest whose weight falls below it.  Weights are decreasing in `s`, so
/// the bracket is well-defined on any sorted grid.
pub fn dimension_bracket(
    source: &TreeSource,
    depth: usize,
    s_list: &[SIndex],
) -> Result<(Option<SIndex>, Option<SIndex>), ValidationError> {
    crate::trees::validate_source(source, depth)?;
    let level = source.level(depth)?;
    let resolution = depth / 2;
    let one = RootWeight::one();
    let mut grid: Vec<SIndex> = s_list.to_vec();
    grid.sort();
    grid.dedup();
    let mut s_low = None;
    let mut s_high = None;
    for &s in &grid {
        let weight = min_cover(&level, resolution, s).weight;
        match weight.cmp(&one) {
            Ordering::Greater => s_low = Some(s),
            Ordering::Less => {
                if s_high.is_none() {
                    s_high = Some(s);
                }
            }
            Ordering::Equal => {}
        }
    }
    Ok((s_low, s_high))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::{full_source, hull_source, singleton_source};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn frontier(depth: usize, nodes: &[&str]) -> Frontier {
        Frontier::new(depth, nodes.iter().map(|n| bs(n)).collect()).unwrap()
    }

    fn s(num: u32, den: u32) -> SIndex {
        SIndex::new(num, den).unwrap()
    }

    fn u_pow(si: SIndex, e: u64) -> RootWeight {
        let mut coeffs = vec![BigInt::from(0); si.den() as usize];
        coeffs[(e % si.den() as u64) as usize] = 1.into();
        RootWeight::from_parts(si.den(), e / si.den() as u64, coeffs).unwrap()
    }

    #[test]
    fn full_depth_two_at_resolution_one() {
        let result = min_cover(&Frontier::full(2), 1, s(1, 2));
        assert_eq!(result.weight, u_pow(s(1, 2), 1).scalar_mul(&2.into()));
        assert_eq!(result.cover, vec![bs("0"), bs("1")]);
        verify_cover(&Frontier::full(2), 1, s(1, 2), &result).unwrap();
    }

    #[test]
    fn sparse_frontier_prefers_the_leaves() {
        let f = frontier(2, &["00", "10"]);
        let result = min_cover(&f, 1, s(1, 2));
        assert_eq!(result.weight, RootWeight::one());
        assert_eq!(result.cover, vec![bs("00"), bs("10")]);
        verify_cover(&f, 1, s(1, 2), &result).unwrap();
    }

    #[test]
    fn resolution_below_the_frontier_forces_extensions() {
        let f = frontier(2, &["00", "10"]);
        let result = min_cover(&f, 3, s(1, 2));
        assert_eq!(result.cover.len(), 4);
        assert_eq!(result.weight, u_pow(s(1, 2), 1).scalar_mul(&2.into()));
        verify_cover(&f, 3, s(1, 2), &result).unwrap();

        let brute = brute_cover(&f, 3, s(1, 2), 64).unwrap();
        assert_eq!(brute.weight, result.weight);
        assert_eq!(brute.cover, result.cover);
    }

    #[test]
    fn empty_frontier_is_free() {
        let f = Frontier::empty(3);
        let result = min_cover(&f, 1, s(1, 2));
        assert!(result.weight.is_zero() && result.cover.is_empty());
        verify_cover(&f, 1, s(1, 2), &result).unwrap();
        let mass = max_mass(&f, 1, s(1, 2));
        assert!(mass.total.is_zero() && mass.masses.is_empty());
        verify_mass(&f, 1, s(1, 2), &mass).unwrap();
    }

    #[test]
    fn mass_distribution_saturates_the_cut() {
        let f = Frontier::full(2);
        let mass = max_mass(&f, 1, s(1, 2));
        assert_eq!(mass.total, u_pow(s(1, 2), 1).scalar_mul(&2.into()));
        verify_mass(&f, 1, s(1, 2), &mass).unwrap();
        let half = u_pow(s(1, 2), 2);
        let rest = &u_pow(s(1, 2), 1) - &half;
        let got: Vec<RootWeight> = mass.masses.iter().map(|(_, m)| m.clone()).collect();
        assert_eq!(got, vec![half.clone(), rest.clone(), half, rest]);
    }

    #[test]
    fn duality_holds_on_handpicked_frontiers() {
        for f in [
            Frontier::full(3),
            frontier(3, &["000", "011", "100", "110", "111"]),
            frontier(4, &["0000", "0110", "1011"]),
            frontier(1, &["1"]),
        ] {
            for si in [s(1, 2), s(2, 3)] {
                for n in 0..=3 {
                    let cover = min_cover(&f, n, si);
                    let mass = max_mass(&f, n, si);
                    assert_eq!(cover.weight, mass.total);
                    verify_cover(&f, n, si, &cover).unwrap();
                    verify_mass(&f, n, si, &mass).unwrap();
                }
            }
        }
    }

    #[test]
    fn brute_matches_dp_exhaustively_at_depth_two() {
        let cases: Vec<Frontier> = (0u32..16)
            .map(|mask| {
                let nodes = (0..4)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| {
                        BitString::from_bits([(i / 2) as u8, (i % 2) as u8])
                    })
                    .collect();
                Frontier::new(2, nodes).unwrap()
            })
            .collect();
        for f in &cases {
            for si in [s(1, 2), s(2, 3), s(3, 4)] {
                for n in 0..=3 {
                    let dp = min_cover(f, n, si);
                    let brute = brute_cover(f, n, si, 1 << 12).unwrap();
                    assert_eq!(dp.weight, brute.weight, "f={:?} s={} n={}", f, si, n);
                    verify_cover(f, n, si, &dp).unwrap();
                    verify_cover(f, n, si, &brute).unwrap();
                }
            }
        }
    }

    #[test]
    fn brute_refuses_oversized_instances() {
        let result = brute_cover(&Frontier::full(6), 0, s(1, 2), 10);
        assert_eq!(
            result,
            Err(CoverError::SizeLimit {
                limit: 10,
                attempted: 127
            })
        );
    }

    #[test]
    fn profiles_match_the_hand_computed_values() {
        let rows = premeasure_profile(&full_source(), 1, 4, s(1, 2)).unwrap();
        let two_u = u_pow(s(1, 2), 1).scalar_mul(&2.into());
        assert_eq!(rows, vec![two_u.clone(), two_u.clone(), two_u.clone(), two_u]);

        let rows = premeasure_profile(&singleton_source(|_| 0), 0, 4, s(1, 2)).unwrap();
        let expected: Vec<RootWeight> = (0..=4).map(|k| u_pow(s(1, 2), k)).collect();
        assert_eq!(rows, expected);

        let rows = premeasure_profile(&hull_source(Frontier::empty(0)), 0, 3, s(1, 2)).unwrap();
        assert!(rows.iter().all(|w| w.is_zero()));
    }

    #[test]
    fn profile_entries_do_not_increase_with_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let nodes: Vec<BitString> = (0u32..32)
                .filter(|_| rng.random_bool(0.4))
                .map(|i| BitString::from_bits((0..5).map(|j| ((i >> (4 - j)) & 1) as u8)))
                .collect();
            let f = Frontier::new(5, nodes).unwrap();
            let src = hull_source(f);
            let rows = premeasure_profile(&src, 1, 7, s(2, 3)).unwrap();
            for pair in rows.windows(2) {
                assert!(pair[1] <= pair[0]);
            }
        }
    }

    #[test]
    fn resolution_and_set_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let nodes: Vec<BitString> = (0u32..16)
                .filter(|_| rng.random_bool(0.5))
                .map(|i| BitString::from_bits((0..4).map(|j| ((i >> (3 - j)) & 1) as u8)))
                .collect();
            let f = Frontier::new(4, nodes.clone()).unwrap();
            for si in [s(1, 2), s(1, 3)] {
                for n in 0..=4 {
                    let w0 = min_cover(&f, n, si).weight;
                    let w1 = min_cover(&f, n + 1, si).weight;
                    assert!(w1 >= w0);
                }
            }
            let mut extra = nodes;
            extra.push(BitString::from_bits([1, 1, 1, 1]));
            let g = Frontier::new(4, extra).unwrap();
            let wf = min_cover(&f, 2, s(1, 2)).weight;
            let wg = min_cover(&g, 2, s(1, 2)).weight;
            assert!(wf <= wg);
        }
    }

    #[test]
    fn bracket_straddles_the_crossing() {
        let src = hull_source(frontier(2, &["00", "10"]));
        let grid = [s(1, 4), s(1, 2), s(3, 4)];
        let (lo, hi) = dimension_bracket(&src, 2, &grid).unwrap();
        assert_eq!(lo, Some(s(1, 4)));
        assert_eq!(hi, Some(s(3, 4)));

        let (lo, hi) = dimension_bracket(&full_source(), 6, &grid).unwrap();
        assert_eq!(lo, Some(s(3, 4)));
        assert_eq!(hi, None);

        let (lo, hi) = dimension_bracket(&singleton_source(|_| 1), 6, &grid).unwrap();
        assert_eq!(lo, None);
        assert_eq!(hi, Some(s(1, 4)));
    }
}
