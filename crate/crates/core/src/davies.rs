//! Witness-bounded trees and the stagewise threshold search.
//!
//! A scheme is a decidable relation `R(σ, τ)` between bit strings and
//! equal-length sequences of naturals.  Each natural sequence `τ` carves
//! out the set of points whose every prefix passes `R` against the matching
//! prefix of `τ`; bounding the entries of `τ` pointwise and taking the
//! union over all bounded witnesses gives a closed set per bound.
//! [`cf_frontier`] computes its depth-`k` frontier by running the witness
//! search with pruning: a `(σ, τ)` pair is abandoned the moment some prefix
//! fails `R`, and the live pair count is capped by an explicit budget.
//!
//! Schemes come from a fixed catalog rather than user code: the constant
//! relation, equality with the graph of a stored function, the positions
//! test of a canonical interleaving, and conjunctions or disjunctions of
//! those.  The catalog is closed under the parser syntax accepted by
//! [`SouslinScheme::from_str`].
//!
//! [`davies_search`] chooses bound values one stage at a time: stage `i`
//! looks at the depth-`i` frontier under the bounds chosen so far and keeps
//! the least new value whose frontier weight strictly beats that stage's
//! integer target at that stage's resolution.  Every accepted stage returns
//! the frontier and the exact weight as a recheckable certificate.

use crate::algebraic::{RootWeight, SIndex};
use crate::cover::min_cover;
use crate::trees::{BitString, Frontier, LevelOracle, SourceError, TreeSource};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DaviesError {
    #[error("witness search exceeded its budget of {budget} live states ({attempted} reached)")]
    BudgetExceeded { budget: usize, attempted: usize },
    #[error("stage {stage}: no bound value up to {r_bound} beat the target; best weight {best}")]
    SearchFailed {
        stage: usize,
        r_bound: u32,
        best: RootWeight,
    },
    #[error("cannot parse scheme: {0}")]
    Parse(String),
}

/// A function on naturals with finitely many explicit values and a constant
/// tail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundFunction {
    values: Vec<u32>,
    tail: u32,
}

impl BoundFunction {
    pub fn new(values: Vec<u32>, tail: u32) -> BoundFunction {
        BoundFunction { values, tail }
    }

    pub fn constant(value: u32) -> BoundFunction {
        BoundFunction {
            values: Vec::new(),
            tail: value,
        }
    }

    pub fn value(&self, index: usize) -> u32 {
        self.values.get(index).copied().unwrap_or(self.tail)
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn tail(&self) -> u32 {
        self.tail
    }

    /// Pointwise comparison on indices below `n`.
    pub fn le_upto(&self, other: &BoundFunction, n: usize) -> bool {
        (0..n).all(|i| self.value(i) <= other.value(i))
    }
}

impl fmt::Display for BoundFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.values.is_empty() {
            return write!(f, "tail={}", self.tail);
        }
        let list: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "{};tail={}", list.join(","), self.tail)
    }
}

impl FromStr for BoundFunction {
    type Err = DaviesError;

    /// Accepts `3,5,2;tail=2`, a bare list `3,5,2` (tail 0), or a bare
    /// `tail=2` (no explicit values).
    fn from_str(text: &str) -> Result<BoundFunction, DaviesError> {
        let bad = || DaviesError::Parse(format!("invalid bound function {text:?}"));
        let (list, tail_part) = match text.split_once(';') {
            Some((l, t)) => (l, Some(t)),
            None if text.starts_with("tail=") => ("", Some(text)),
            None => (text, None),
        };
        let tail = match tail_part {
            Some(t) => t
                .strip_prefix("tail=")
                .ok_or_else(bad)?
                .parse()
                .map_err(|_| bad())?,
            None => 0,
        };
        let values = if list.is_empty() {
            Vec::new()
        } else {
            list.split(',')
                .map(|v| v.trim().parse().map_err(|_| bad()))
                .collect::<Result<_, _>>()?
        };
        Ok(BoundFunction { values, tail })
    }
}

/// A catalog relation between bit strings and equal-length witness
/// sequences of naturals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SouslinScheme {
    /// Accepts everything.
    AlwaysTrue,
    /// Accepts only the all-zero string paired with the graph values of the
    /// stored function.
    GraphEquals { graph: BoundFunction },
    /// Accepts strings that are zero outside the kept positions of the
    /// canonical mask for `s`; the witness is ignored.
    JoinWitness { s: SIndex },
    And(Vec<SouslinScheme>),
    Or(Vec<SouslinScheme>),
}

impl SouslinScheme {
    /// Evaluates the relation on a string and a witness of the same length.
    pub fn check(&self, sigma: &BitString, tau: &[u32]) -> bool {
        debug_assert_eq!(sigma.len(), tau.len());
        match self {
            SouslinScheme::AlwaysTrue => true,
            SouslinScheme::GraphEquals { graph } => {
                tau.iter().enumerate().all(|(i, &v)| v == graph.value(i))
                    && (0..sigma.len()).all(|i| sigma.bit(i) == 0)
            }
            SouslinScheme::JoinWitness { s } => {
                let (a, b) = (s.num() as u64, s.den() as u64);
                (0..sigma.len()).all(|p| (p as u64 % b) < a || sigma.bit(p) == 0)
            }
            SouslinScheme::And(parts) => parts.iter().all(|p| p.check(sigma, tau)),
            SouslinScheme::Or(parts) => parts.iter().any(|p| p.check(sigma, tau)),
        }
    }
}

fn split_top_level(text: &str) -> Result<Vec<&str>, DaviesError> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| DaviesError::Parse(format!("unbalanced parentheses in {text:?}")))?
            }
            ';' if depth == 0 => {
                parts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(DaviesError::Parse(format!(
            "unbalanced parentheses in {text:?}"
        )));
    }
    parts.push(&text[start..]);
    Ok(parts)
}

impl FromStr for SouslinScheme {
    type Err = DaviesError;

    /// Accepts `always-true`, `graph:<bound function>`, `join:a/b`, and
    /// nested `and(...)` / `or(...)` with `;`-separated parts.  `or()` is
    /// the empty disjunction, which rejects everything.
    fn from_str(text: &str) -> Result<SouslinScheme, DaviesError> {
        let text = text.trim();
        if text == "always-true" {
            return Ok(SouslinScheme::AlwaysTrue);
        }
        if let Some(rest) = text.strip_prefix("graph:") {
            return Ok(SouslinScheme::GraphEquals {
                graph: rest.parse()?,
            });
        }
        if let Some(rest) = text.strip_prefix("join:") {
            let s = rest
                .parse()
                .map_err(|e| DaviesError::Parse(format!("{e} in {text:?}")))?;
            return Ok(SouslinScheme::JoinWitness { s });
        }
        for (name, combine) in [
            ("and", SouslinScheme::And as fn(Vec<SouslinScheme>) -> SouslinScheme),
            ("or", SouslinScheme::Or as fn(Vec<SouslinScheme>) -> SouslinScheme),
        ] {
            let Some(rest) = text.strip_prefix(name) else {
                continue;
            };
            let Some(inner) = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')) else {
                return Err(DaviesError::Parse(format!(
                    "{name} needs parenthesized parts in {text:?}"
                )));
            };
            if inner.trim().is_empty() {
                return Ok(combine(Vec::new()));
            }
            let parts = split_top_level(inner)?
                .into_iter()
                .map(|p| p.parse())
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(combine(parts));
        }
        Err(DaviesError::Parse(format!(
            "unknown scheme {text:?}, expected always-true, graph:, join:, and(...), or or(...)"
        )))
    }
}

/// Runs the pruned witness search to depth `k`: a pair survives when every
/// prefix length up to the current depth passes the relation, including
/// length zero.  `budget` caps the live pair count at any depth.
fn survivors(
    scheme: &SouslinScheme,
    bound: &BoundFunction,
    k: usize,
    budget: usize,
) -> Result<Vec<(BitString, Vec<u32>)>, DaviesError> {
    let mut states = Vec::new();
    if scheme.check(&BitString::empty(), &[]) {
        states.push((BitString::empty(), Vec::new()));
    }
    for depth in 0..k {
        let mut next = Vec::new();
        for (sigma, tau) in &states {
            for bit in 0..2u8 {
                let extended = sigma.child(bit);
                for value in 0..=bound.value(depth) {
                    let mut witness = tau.clone();
                    witness.push(value);
                    if scheme.check(&extended, &witness) {
                        next.push((extended.clone(), witness));
                        if next.len() > budget {
                            return Err(DaviesError::BudgetExceeded {
                                budget,
                                attempted: next.len(),
                            });
                        }
                    }
                }
            }
        }
        states = next;
    }
    Ok(states)
}

fn survivor_frontier(
    scheme: &SouslinScheme,
    bound: &BoundFunction,
    k: usize,
    budget: usize,
) -> Result<Frontier, DaviesError> {
    let nodes: BTreeSet<BitString> = survivors(scheme, bound, k, budget)?
        .into_iter()
        .map(|(sigma, _)| sigma)
        .collect();
    Ok(Frontier::from_sorted_unchecked(
        k,
        nodes.into_iter().collect(),
    ))
}

/// The depth-`k` frontier of the union over all witnesses pointwise below
/// the majorizing function.
pub fn cf_frontier(
    scheme: &SouslinScheme,
    f: &BoundFunction,
    k: usize,
    budget: usize,
) -> Result<Frontier, DaviesError> {
    survivor_frontier(scheme, f, k, budget)
}

/// The depth-`n` frontier of the clopen union over witnesses below the
/// chosen bound prefix.  Same computation as [`cf_frontier`]; the two names
/// mark the two roles a bound plays.
pub fn cn_frontier(
    scheme: &SouslinScheme,
    r: &BoundFunction,
    n: usize,
    budget: usize,
) -> Result<Frontier, DaviesError> {
    survivor_frontier(scheme, r, n, budget)
}

struct WitnessOracle {
    scheme: SouslinScheme,
    bound: BoundFunction,
    budget: usize,
}

impl LevelOracle for WitnessOracle {
    fn level(&self, depth: usize) -> Result<Frontier, SourceError> {
        cf_frontier(&self.scheme, &self.bound, depth, self.budget).map_err(|e| match e {
            DaviesError::BudgetExceeded { budget, attempted } => SourceError::TooLarge {
                depth,
                estimate: attempted as u128,
                bound: budget,
            },
            other => unreachable!("witness search failed: {other}"),
        })
    }

    fn pruned(&self) -> bool {
        false
    }
}

/// The witness-bounded tree as a level source.  Levels are parent
/// consistent because witnesses restrict, but branches can die later, so
/// the source does not claim pruning.
pub fn cf_source(scheme: &SouslinScheme, f: &BoundFunction, budget: usize) -> TreeSource {
    TreeSource::new(Arc::new(WitnessOracle {
        scheme: scheme.clone(),
        bound: f.clone(),
        budget,
    }))
}

/// One accepted stage of the threshold search: the chosen bound value and
/// the frontier whose weight beat the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageCertificate {
    pub stage: usize,
    pub chosen: u32,
    pub resolution: usize,
    pub target: u64,
    pub frontier: Frontier,
    pub weight: RootWeight,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DaviesOutcome {
    /// The chosen bound values `r_1, ..., r_N` as a function (tail unused).
    pub r: BoundFunction,
    pub certificates: Vec<StageCertificate>,
}

/// Chooses bound values stage by stage.  Stage `i` (1-based) examines the
/// depth-`i` frontier under the bounds chosen so far plus a candidate
/// `r_i`, and keeps the least candidate up to `r_bound` whose weight at
/// resolution `m_i` strictly exceeds the integer target.  The comparison is
/// exact; equality fails.
pub fn davies_search(
    scheme: &SouslinScheme,
    s: SIndex,
    thresholds: &[(usize, u64)],
    r_bound: u32,
    depth_budget: usize,
) -> Result<DaviesOutcome, DaviesError> {
    let mut chosen: Vec<u32> = Vec::new();
    let mut certificates = Vec::new();
    for (index, &(resolution, target)) in thresholds.iter().enumerate() {
        let stage = index + 1;
        let goal = RootWeight::integer(target);
        let mut best: Option<(u32, RootWeight, Frontier)> = None;
        for candidate in 0..=r_bound {
            let mut prefix = chosen.clone();
            prefix.push(candidate);
            let bound = BoundFunction::new(prefix, 0);
            let frontier = cn_frontier(scheme, &bound, stage, depth_budget)?;
            let weight = min_cover(&frontier, resolution, s).weight;
            let improves = match &best {
                Some((_, w, _)) => weight > *w,
                None => true,
            };
            if improves {
                best = Some((candidate, weight.clone(), frontier));
            }
            if weight > goal {
                break;
            }
        }
        let (value, weight, frontier) = best.expect("at least one candidate was tried");
        if weight <= goal {
            return Err(DaviesError::SearchFailed {
                stage,
                r_bound,
                best: weight,
            });
        }
        chosen.push(value);
        certificates.push(StageCertificate {
            stage,
            chosen: value,
            resolution,
            target,
            frontier,
            weight,
        });
    }
    Ok(DaviesOutcome {
        r: BoundFunction::new(chosen, 0),
        certificates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joins::{canonical_mask, join_sources};
    use crate::trees::{full_source, validate_source, zero_source, Frontier};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const BUDGET: usize = 200_000;

    fn s(num: u32, den: u32) -> SIndex {
        SIndex::new(num, den).unwrap()
    }

    fn bf(text: &str) -> BoundFunction {
        text.parse().unwrap()
    }

    fn scheme(text: &str) -> SouslinScheme {
        text.parse().unwrap()
    }

    /// Enumerates every witness below the bound with no pruning at all.
    fn brute_frontier(sch: &SouslinScheme, bound: &BoundFunction, k: usize) -> Frontier {
        let mut taus: Vec<Vec<u32>> = vec![Vec::new()];
        for depth in 0..k {
            taus = taus
                .iter()
                .flat_map(|t| {
                    (0..=bound.value(depth)).map(|v| {
                        let mut extended = t.clone();
                        extended.push(v);
                        extended
                    })
                })
                .collect();
        }
        let mut nodes = Vec::new();
        for code in 0..(1u32 << k) {
            let sigma = BitString::from_bits((0..k).map(|i| ((code >> i) & 1) as u8));
            let admitted = taus.iter().any(|tau| {
                (0..=k).all(|n| sch.check(&sigma.prefix(n), &tau[..n]))
            });
            if admitted {
                nodes.push(sigma);
            }
        }
        Frontier::new(k, nodes).unwrap()
    }

    #[test]
    fn bound_functions_parse_and_display() {
        let f = bf("3,5,2;tail=2");
        assert_eq!(f.values(), &[3, 5, 2]);
        assert_eq!(f.value(1), 5);
        assert_eq!(f.value(7), 2);
        assert_eq!(f.to_string(), "3,5,2;tail=2");
        assert_eq!(bf("3,5,2").tail(), 0);
        assert_eq!(bf("tail=4"), BoundFunction::constant(4));
        assert_eq!(bf(""), BoundFunction::constant(0));
        assert!("1,x".parse::<BoundFunction>().is_err());
        assert!("1;tail".parse::<BoundFunction>().is_err());

        assert!(bf("1,2").le_upto(&bf("2,2,0"), 2));
        assert!(!bf("1,2").le_upto(&bf("2,1"), 2));
    }

    #[test]
    fn the_constant_scheme_keeps_everything() {
        let frontier = cf_frontier(&SouslinScheme::AlwaysTrue, &bf("tail=1"), 3, BUDGET).unwrap();
        assert_eq!(frontier, Frontier::full(3));
    }

    #[test]
    fn graph_schemes_need_the_bound_to_majorize() {
        let sch = scheme("graph:1,0");
        let hit = cf_frontier(&sch, &bf("1,0"), 2, BUDGET).unwrap();
        assert_eq!(hit.nodes(), &["00".parse::<BitString>().unwrap()]);
        let over = cf_frontier(&sch, &bf("3;tail=1"), 2, BUDGET).unwrap();
        assert_eq!(over, hit);
        let starved = cf_frontier(&sch, &bf("0,0"), 2, BUDGET).unwrap();
        assert!(starved.is_empty());
    }

    #[test]
    fn join_witness_matches_the_join_source() {
        let sch = scheme("join:1/2");
        let frontier = cf_frontier(&sch, &bf("tail=0"), 4, BUDGET).unwrap();
        let join = join_sources(&full_source(), &zero_source(), &canonical_mask(s(1, 2)));
        assert_eq!(frontier, join.level(4).unwrap());
    }

    #[test]
    fn empty_disjunction_rejects_even_the_root() {
        let sch = scheme("or()");
        for k in 0..4 {
            assert!(cf_frontier(&sch, &bf("tail=2"), k, BUDGET).unwrap().is_empty());
        }
        let root = cf_frontier(&scheme("and()"), &bf("tail=0"), 0, BUDGET).unwrap();
        assert_eq!(root, Frontier::full(0));
    }

    #[test]
    fn pruned_search_agrees_with_the_unpruned_enumeration() {
        let cases = [
            scheme("always-true"),
            scheme("graph:1,0,1"),
            scheme("join:2/3"),
            scheme("and(join:1/2;always-true)"),
            scheme("or(graph:1;join:2/3)"),
            scheme("or()"),
            scheme("and(or(join:1/2;graph:1,1);always-true)"),
        ];
        for sch in &cases {
            for (bound, k) in [(bf("1,0,1,2"), 4), (bf("tail=1"), 3), (bf("2;tail=0"), 3)] {
                let pruned = cf_frontier(sch, &bound, k, BUDGET).unwrap();
                assert_eq!(pruned, brute_frontier(sch, &bound, k), "{sch:?} {bound}");
            }
        }
    }

    #[test]
    fn larger_bounds_keep_more_strings() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let catalog = [
            scheme("graph:1,0,2"),
            scheme("or(graph:1,1;join:1/2)"),
            scheme("and(always-true;or(graph:0,2;join:2/3))"),
        ];
        for _ in 0..25 {
            let sch = &catalog[rng.random_range(0..catalog.len())];
            let small: Vec<u32> = (0..4).map(|_| rng.random_range(0..2)).collect();
            let big: Vec<u32> = small.iter().map(|&v| v + rng.random_range(0..2)).collect();
            let f = BoundFunction::new(small, 0);
            let g = BoundFunction::new(big, 1);
            for k in 0..=4 {
                let lo = cf_frontier(sch, &f, k, BUDGET).unwrap();
                let hi = cf_frontier(sch, &g, k, BUDGET).unwrap();
                assert!(lo.nodes().iter().all(|n| hi.contains(n)));
            }
        }
    }

    #[test]
    fn witness_budgets_refuse_blowups() {
        let err = cf_frontier(&SouslinScheme::AlwaysTrue, &bf("tail=3"), 8, 1000);
        assert!(matches!(
            err,
            Err(DaviesError::BudgetExceeded { budget: 1000, attempted }) if attempted > 1000
        ));
    }

    #[test]
    fn witness_trees_are_parent_consistent() {
        let src = cf_source(&scheme("or(graph:1,0,1;join:1/2)"), &bf("1;tail=1"), BUDGET);
        assert!(!src.pruned());
        validate_source(&src, 5).unwrap();
    }

    #[test]
    fn search_on_the_constant_scheme_stops_at_zero() {
        let outcome = davies_search(
            &SouslinScheme::AlwaysTrue,
            s(1, 2),
            &[(2, 1)],
            3,
            BUDGET,
        )
        .unwrap();
        assert_eq!(outcome.r.values(), &[0]);
        let cert = &outcome.certificates[0];
        assert_eq!(cert.weight, RootWeight::integer(2));
        assert_eq!(
            min_cover(&cert.frontier, cert.resolution, s(1, 2)).weight,
            cert.weight
        );
    }

    #[test]
    fn block_boundaries_fail_strict_comparison() {
        let ladder = [(1, 0), (2, 0), (3, 1)];
        let err = davies_search(&scheme("join:2/3"), s(2, 3), &ladder, 2, BUDGET);
        assert_eq!(
            err,
            Err(DaviesError::SearchFailed {
                stage: 3,
                r_bound: 2,
                best: RootWeight::one(),
            })
        );

        let relaxed = davies_search(&scheme("join:2/3"), s(2, 3), &[(1, 0), (2, 0), (3, 0)], 2, BUDGET)
            .unwrap();
        assert_eq!(relaxed.r.values(), &[0, 0, 0]);
    }

    #[test]
    fn empty_schemes_fail_immediately_with_zero_weight() {
        let err = davies_search(&scheme("or()"), s(1, 2), &[(1, 0)], 2, BUDGET);
        assert_eq!(
            err,
            Err(DaviesError::SearchFailed {
                stage: 1,
                r_bound: 2,
                best: RootWeight::zero(1),
            })
        );
    }

    #[test]
    fn scheme_literals_parse() {
        assert_eq!(scheme("always-true"), SouslinScheme::AlwaysTrue);
        assert_eq!(
            scheme("graph:2,1;tail=1"),
            SouslinScheme::GraphEquals { graph: bf("2,1;tail=1") }
        );
        assert_eq!(scheme("join:1/2"), SouslinScheme::JoinWitness { s: s(1, 2) });
        assert_eq!(
            scheme("and(join:1/2;or(always-true;graph:1))"),
            SouslinScheme::And(vec![
                SouslinScheme::JoinWitness { s: s(1, 2) },
                SouslinScheme::Or(vec![
                    SouslinScheme::AlwaysTrue,
                    SouslinScheme::GraphEquals { graph: bf("1") },
                ]),
            ])
        );
        assert_eq!(scheme("or()"), SouslinScheme::Or(vec![]));
        assert!("join:7/3".parse::<SouslinScheme>().is_err());
        assert!("graph:x".parse::<SouslinScheme>().is_err());
        assert!("frobnicate".parse::<SouslinScheme>().is_err());
        assert!("and(join:1/2".parse::<SouslinScheme>().is_err());
        assert!("and join:1/2".parse::<SouslinScheme>().is_err());
    }
}
