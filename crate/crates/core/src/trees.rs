//! Finite binary strings and level-by-level views of trees.
//!
//! A closed subset of Cantor space is presented here by the tree of its
//! finite prefixes.  Code that consumes a tree never walks it node by node;
//! it asks a [`TreeSource`] for complete levels, so a source is just a rule
//! producing the depth-`k` [`Frontier`] for any requested `k`.  A source
//! must be parent-consistent (every node of level `k+1` extends a node of
//! level `k`), and may additionally promise prunedness, meaning every node
//! of a level has an extension in the next one; [`validate_source`] checks
//! both promises up to a depth.
//!
//! Frontiers travel between runs as `.ctf` files, a line-oriented text
//! format with a two-line header; see [`parse_ctf`] and [`write_ctf`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

/// Hard bound on how many nodes a single materialized level may hold.
///
/// Levels grow like `2^k`, so this is a guard against a mistyped depth
/// turning into an allocation of gigabytes; computations this crate targets
/// stay far below it.
pub const MAX_LEVEL_NODES: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("node {node} has length {got}, expected {expected}")]
    WrongLength {
        node: BitString,
        got: usize,
        expected: usize,
    },
    #[error("set is not prefix-closed at {node}")]
    NotPrefixClosed { node: BitString },
    #[error("level {index} of an explicit source has depth {got}")]
    LevelDepthMismatch { index: usize, got: usize },
    #[error("bit strings contain only 0 and 1, found {found:?}")]
    BadCharacter { found: char },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SourceError {
    #[error("level {depth} would hold about {estimate} nodes, past the bound {bound}")]
    TooLarge {
        depth: usize,
        estimate: u128,
        bound: usize,
    },
    #[error("level {depth} requested but only depths below {limit} are available")]
    OutOfRange { depth: usize, limit: u64 },
}

pub(crate) fn ensure_level_size(depth: usize, estimate: u128) -> Result<(), SourceError> {
    if estimate > MAX_LEVEL_NODES as u128 {
        Err(SourceError::TooLarge {
            depth,
            estimate,
            bound: MAX_LEVEL_NODES,
        })
    } else {
        Ok(())
    }
}

/// A finite binary string.  The derived ordering is lexicographic with a
/// proper prefix sorting before its extensions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn empty() -> Self {
        BitString(Vec::new())
    }

    pub fn from_bits(bits: impl IntoIterator<Item = u8>) -> Self {
        let v: Vec<u8> = bits.into_iter().collect();
        debug_assert!(v.iter().all(|&b| b <= 1));
        BitString(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn push(&mut self, bit: u8) {
        debug_assert!(bit <= 1);
        self.0.push(bit);
    }

    pub fn child(&self, bit: u8) -> BitString {
        let mut c = self.clone();
        c.push(bit);
        c
    }

    pub fn parent(&self) -> Option<BitString> {
        if self.is_empty() {
            None
        } else {
            Some(BitString(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn prefix(&self, len: usize) -> BitString {
        BitString(self.0[..len].to_vec())
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// The first position where the two strings disagree, if both are long
    /// enough to disagree at all.
    pub fn first_difference(&self, other: &BitString) -> Option<usize> {
        self.0
            .iter()
            .zip(other.0.iter())
            .position(|(a, b)| a != b)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{}", b)?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = Vec::with_capacity(s.len());
        for ch in s.chars() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                other => return Err(TreeError::BadCharacter { found: other }),
            }
        }
        Ok(BitString(bits))
    }
}

/// All nodes of one level of a tree: distinct strings of a common length,
/// kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frontier {
    depth: usize,
    nodes: Vec<BitString>,
}

impl Frontier {
    pub fn new(depth: usize, mut nodes: Vec<BitString>) -> Result<Self, TreeError> {
        for node in &nodes {
            if node.len() != depth {
                return Err(TreeError::WrongLength {
                    node: node.clone(),
                    got: node.len(),
                    expected: depth,
                });
            }
        }
        nodes.sort();
        nodes.dedup();
        Ok(Frontier { depth, nodes })
    }

    pub(crate) fn from_sorted_unchecked(depth: usize, nodes: Vec<BitString>) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(nodes.iter().all(|n| n.len() == depth));
        Frontier { depth, nodes }
    }

    pub fn empty(depth: usize) -> Self {
        Frontier {
            depth,
            nodes: Vec::new(),
        }
    }

    /// Every string of the given length.
    pub fn full(depth: usize) -> Self {
        assert!(depth < usize::BITS as usize, "depth out of range");
        let nodes = (0u64..1 << depth)
            .map(|i| {
                BitString::from_bits((0..depth).map(|j| ((i >> (depth - 1 - j)) & 1) as u8))
            })
            .collect();
        Frontier { depth, nodes }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn nodes(&self) -> &[BitString] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, node: &BitString) -> bool {
        self.nodes.binary_search(node).is_ok()
    }
}

/// A finite prefix-closed set of strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteTree {
    nodes: BTreeSet<BitString>,
}

impl FiniteTree {
    pub fn new(nodes: BTreeSet<BitString>) -> Result<Self, TreeError> {
        for node in &nodes {
            if let Some(parent) = node.parent() {
                if !nodes.contains(&parent) {
                    return Err(TreeError::NotPrefixClosed { node: node.clone() });
                }
            }
        }
        Ok(FiniteTree { nodes })
    }

    /// The set of all prefixes of the frontier's nodes.
    pub fn from_frontier(frontier: &Frontier) -> Self {
        let mut nodes = BTreeSet::new();
        for node in frontier.nodes() {
            for len in 0..=node.len() {
                nodes.insert(node.prefix(len));
            }
        }
        FiniteTree { nodes }
    }

    pub fn contains(&self, node: &BitString) -> bool {
        self.nodes.contains(node)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &BitString> {
        self.nodes.iter()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.len()).max().unwrap_or(0)
    }

    pub fn level(&self, depth: usize) -> Frontier {
        let nodes: Vec<BitString> = self
            .nodes
            .iter()
            .filter(|n| n.len() == depth)
            .cloned()
            .collect();
        Frontier::from_sorted_unchecked(depth, nodes)
    }
}

/// One level of a tree on demand.
///
/// `level(k)` must be deterministic, and levels must be parent-consistent.
/// A source returning `pruned() == true` additionally promises that every
/// node of every level has a child in the level below it.
pub trait LevelOracle: Send + Sync {
    fn level(&self, depth: usize) -> Result<Frontier, SourceError>;
    fn pruned(&self) -> bool;
}

/// A shared handle to a level oracle.
#[derive(Clone)]
pub struct TreeSource {
    oracle: Arc<dyn LevelOracle>,
}

impl TreeSource {
    pub fn new(oracle: Arc<dyn LevelOracle>) -> Self {
        TreeSource { oracle }
    }

    pub fn level(&self, depth: usize) -> Result<Frontier, SourceError> {
        let f = self.oracle.level(depth)?;
        debug_assert_eq!(f.depth(), depth);
        Ok(f)
    }

    pub fn pruned(&self) -> bool {
        self.oracle.pruned()
    }

    /// A source backed by an explicit list of levels; requests beyond the
    /// list fail.  Levels are not cross-checked here, which is exactly what
    /// makes this useful for exercising [`validate_source`].
    pub fn from_levels(levels: Vec<Frontier>, pruned: bool) -> Result<TreeSource, TreeError> {
        for (index, level) in levels.iter().enumerate() {
            if level.depth() != index {
                return Err(TreeError::LevelDepthMismatch {
                    index,
                    got: level.depth(),
                });
            }
        }
        Ok(TreeSource::new(Arc::new(ExplicitOracle { levels, pruned })))
    }
}

impl fmt::Debug for TreeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TreeSource")
            .field("pruned", &self.pruned())
            .finish_non_exhaustive()
    }
}

struct ExplicitOracle {
    levels: Vec<Frontier>,
    pruned: bool,
}

impl LevelOracle for ExplicitOracle {
    fn level(&self, depth: usize) -> Result<Frontier, SourceError> {
        self.levels.get(depth).cloned().ok_or(SourceError::OutOfRange {
            depth,
            limit: self.levels.len() as u64,
        })
    }

    fn pruned(&self) -> bool {
        self.pruned
    }
}

struct FullOracle;

impl LevelOracle for FullOracle {
    fn level(&self, depth: usize) -> Result<Frontier, SourceError> {
        if depth >= 64 {
            return Err(SourceError::TooLarge {
                depth,
                estimate: u128::MAX,
                bound: MAX_LEVEL_NODES,
            });
        }
        ensure_level_size(depth, 1u128 << depth)?;
        Ok(Frontier::full(depth))
    }

    fn pruned(&self) -> bool {
        true
    }
}

/// The tree of all binary strings.
pub fn full_source() -> TreeSource {
    TreeSource::new(Arc::new(FullOracle))
}

struct SingletonOracle {
    rule: Box<dyn Fn(usize) -> u8 + Send + Sync>,
    bits: Mutex<Vec<u8>>,
}

impl LevelOracle for SingletonOracle {
    fn level(&self, depth: usize) -> Result<Frontier, SourceError> {
        let mut bits = self.bits.lock().unwrap();
        while bits.len() < depth {
            let b = (self.rule)(bits.len());
            debug_assert!(b <= 1);
            bits.push(b);
        }
        let node = BitString::from_bits(bits[..depth].iter().copied());
        Ok(Frontier::from_sorted_unchecked(depth, vec![node]))
    }

    fn pruned(&self) -> bool {
        true
    }
}

/// The tree of one point, whose bit at each position is given by the rule.
pub fn singleton_source(rule: impl Fn(usize) -> u8 + Send + Sync + 'static) -> TreeSource {
    TreeSource::new(Arc::new(SingletonOracle {
        rule: Box::new(rule),
        bits: Mutex::new(Vec::new()),
    }))
}

/// The all-zeros point.
pub fn zero_source() -> TreeSource {
    singleton_source(|_| 0)
}

struct HullOracle {
    frontier: Frontier,
}

impl LevelOracle for HullOracle {
    fn level(&self, depth: usize) -> Result<Frontier, SourceError> {
        let base = self.frontier.depth();
        if depth <= base {
            let mut nodes: Vec<BitString> = self
                .frontier
                .nodes()
                .iter()
                .map(|n| n.prefix(depth))
                .collect();
            nodes.dedup();
            Ok(Frontier::from_sorted_unchecked(depth, nodes))
        } else {
            let extra = depth - base;
            if extra >= 64 {
                return Err(SourceError::TooLarge {
                    depth,
                    estimate: u128::MAX,
                    bound: MAX_LEVEL_NODES,
                });
            }
            let estimate = self.frontier.len() as u128 * (1u128 << extra);
            ensure_level_size(depth, estimate)?;
            let mut nodes = Vec::with_capacity(estimate as usize);
            for node in self.frontier.nodes() {
                for i in 0u64..1 << extra {
                    let mut ext = node.clone();
                    for j in 0..extra {
                        ext.push(((i >> (extra - 1 - j)) & 1) as u8);
                    }
                    nodes.push(ext);
                }
            }
            Ok(Frontier::from_sorted_unchecked(depth, nodes))
        }
    }

    fn pruned(&self) -> bool {
        true
    }
}

/// The smallest closed set containing all points through the frontier: its
/// levels are the frontier's prefixes below it and all extensions above it.
pub fn hull_source(frontier: Frontier) -> TreeSource {
    TreeSource::new(Arc::new(HullOracle { frontier }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    MissingParent,
    DeadEnd,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::MissingParent => write!(f, "has no parent in the previous level"),
            ViolationKind::DeadEnd => write!(f, "has no child in the next level"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("node {node} at level {level} {kind}")]
    Violation {
        kind: ViolationKind,
        node: BitString,
        level: usize,
    },
    #[error(transparent)]
    Source(#[from] SourceError),
}

/// Checks parent-consistency of all levels up to `depth`, and prunedness
/// too when the source claims it; reports the first violation found.
pub fn validate_source(source: &TreeSource, depth: usize) -> Result<(), ValidationError> {
    let mut current = source.level(0)?;
    for k in 0..depth {
        let next = source.level(k + 1)?;
        for node in next.nodes() {
            if !current.contains(&node.prefix(k)) {
                return Err(ValidationError::Violation {
                    kind: ViolationKind::MissingParent,
                    node: node.clone(),
                    level: k + 1,
                });
            }
        }
        if source.pruned() {
            for node in current.nodes() {
                if !next.contains(&node.child(0)) && !next.contains(&node.child(1)) {
                    return Err(ValidationError::Violation {
                        kind: ViolationKind::DeadEnd,
                        node: node.clone(),
                        level: k,
                    });
                }
            }
        }
        current = next;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CtfError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {msg}")]
    Invariant { line: usize, msg: String },
}

/// Reads a frontier from the `.ctf` text format:
///
/// ```text
/// ctf 1
/// depth 3
/// # optional comments
/// 001
/// 010
/// ```
///
/// Node lines must have exactly the header's length, be strictly
/// increasing, and contain only `0` and `1`.  At depth 0 the single node is
/// written as an empty line.
pub fn parse_ctf(text: &str) -> Result<Frontier, CtfError> {
    let syntax = |line: usize, msg: &str| CtfError::Syntax {
        line,
        msg: msg.to_string(),
    };
    let invariant = |line: usize, msg: String| CtfError::Invariant { line, msg };

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| syntax(1, "empty file, expected header `ctf 1`"))?;
    if header.trim_end() != "ctf 1" {
        return Err(syntax(line_no, "expected header `ctf 1`"));
    }
    let (line_no, depth_line) = lines
        .next()
        .ok_or_else(|| syntax(2, "missing `depth <k>` line"))?;
    let depth: usize = depth_line
        .strip_prefix("depth ")
        .and_then(|d| d.trim().parse().ok())
        .ok_or_else(|| syntax(line_no, "expected `depth <k>`"))?;

    let mut nodes: Vec<BitString> = Vec::new();
    for (line_no, raw) in lines {
        if raw.starts_with('#') {
            continue;
        }
        if raw.is_empty() && depth > 0 {
            continue;
        }
        let node: BitString = raw.parse().map_err(|e: TreeError| match e {
            TreeError::BadCharacter { found } => {
                syntax(line_no, &format!("invalid character {:?} in node", found))
            }
            other => syntax(line_no, &other.to_string()),
        })?;
        if node.len() != depth {
            return Err(invariant(
                line_no,
                format!("node has length {}, header says depth {}", node.len(), depth),
            ));
        }
        if let Some(last) = nodes.last() {
            if *last == node {
                return Err(invariant(line_no, format!("duplicate node {}", node)));
            }
            if *last > node {
                return Err(invariant(
                    line_no,
                    format!("node {} is out of order after {}", node, last),
                ));
            }
        }
        nodes.push(node);
    }
    Ok(Frontier::from_sorted_unchecked(depth, nodes))
}

/// Writes a frontier in the `.ctf` text format; each entry of `comments`
/// becomes one `#` line between the header and the nodes.
pub fn write_ctf(frontier: &Frontier, comments: &[String]) -> String {
    let mut out = String::new();
    out.push_str("ctf 1\n");
    out.push_str(&format!("depth {}\n", frontier.depth()));
    for comment in comments {
        out.push_str(&format!("# {}\n", comment));
    }
    for node in frontier.nodes() {
        out.push_str(&format!("{}\n", node));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn frontier(depth: usize, nodes: &[&str]) -> Frontier {
        Frontier::new(depth, nodes.iter().map(|n| bs(n)).collect()).unwrap()
    }

    #[test]
    fn bitstring_order_puts_prefixes_first() {
        let mut v = vec![bs("1"), bs("01"), bs("0"), bs("00"), bs("")];
        v.sort();
        let shown: Vec<String> = v.iter().map(|b| b.to_string()).collect();
        assert_eq!(shown, ["", "0", "00", "01", "1"]);
        assert!(bs("01").is_prefix_of(&bs("0110")));
        assert!(!bs("01").is_prefix_of(&bs("00")));
        assert_eq!(bs("0110").parent(), Some(bs("011")));
        assert_eq!(bs("").parent(), None);
        assert_eq!(bs("0110").first_difference(&bs("0100")), Some(2));
        assert_eq!(bs("01").first_difference(&bs("0110")), None);
    }

    #[test]
    fn frontier_construction_sorts_and_checks_length() {
        let f = frontier(2, &["10", "00"]);
        assert_eq!(f.nodes()[0], bs("00"));
        assert!(f.contains(&bs("10")));
        assert!(!f.contains(&bs("01")));
        assert!(Frontier::new(2, vec![bs("100")]).is_err());
        assert_eq!(Frontier::full(2).len(), 4);
        assert_eq!(Frontier::full(0).nodes(), &[bs("")]);
    }

    #[test]
    fn prefix_closure_of_a_frontier() {
        let t = FiniteTree::from_frontier(&frontier(2, &["00", "10"]));
        assert_eq!(t.len(), 5);
        assert!(t.contains(&bs("")));
        assert!(t.contains(&bs("1")));
        assert!(!t.contains(&bs("11")));
        assert_eq!(t.level(2), frontier(2, &["00", "10"]));
        assert_eq!(t, FiniteTree::from_frontier(&t.level(2)));

        let mut raw: BTreeSet<BitString> = [bs(""), bs("01")].into_iter().collect();
        assert!(matches!(
            FiniteTree::new(raw.clone()),
            Err(TreeError::NotPrefixClosed { .. })
        ));
        raw.insert(bs("0"));
        assert!(FiniteTree::new(raw).is_ok());
    }

    #[test]
    fn full_and_singleton_and_hull_sources() {
        let full = full_source();
        assert_eq!(full.level(3).unwrap().len(), 8);
        assert!(validate_source(&full, 5).is_ok());
        assert!(matches!(
            full.level(40),
            Err(SourceError::TooLarge { .. })
        ));

        let alternating = singleton_source(|i| (i % 2) as u8);
        assert_eq!(alternating.level(4).unwrap().nodes(), &[bs("0101")]);
        assert_eq!(alternating.level(2).unwrap().nodes(), &[bs("01")]);
        assert!(validate_source(&alternating, 6).is_ok());

        let hull = hull_source(frontier(2, &["00", "10"]));
        assert_eq!(hull.level(1).unwrap(), frontier(1, &["0", "1"]));
        assert_eq!(
            hull.level(3).unwrap(),
            frontier(3, &["000", "001", "100", "101"])
        );
        assert!(validate_source(&hull, 5).is_ok());

        let nothing = hull_source(Frontier::empty(0));
        assert!(nothing.level(3).unwrap().is_empty());
        assert!(validate_source(&nothing, 4).is_ok());
    }

    #[test]
    fn validation_pinpoints_the_offending_node() {
        let levels = vec![
            frontier(0, &[""]),
            frontier(1, &["0"]),
            frontier(2, &["00", "11"]),
        ];
        let src = TreeSource::from_levels(levels, false).unwrap();
        assert_eq!(
            validate_source(&src, 2),
            Err(ValidationError::Violation {
                kind: ViolationKind::MissingParent,
                node: bs("11"),
                level: 2,
            })
        );

        let levels = vec![
            frontier(0, &[""]),
            frontier(1, &["0", "1"]),
            frontier(2, &["00"]),
        ];
        let src = TreeSource::from_levels(levels, true).unwrap();
        assert_eq!(
            validate_source(&src, 2),
            Err(ValidationError::Violation {
                kind: ViolationKind::DeadEnd,
                node: bs("1"),
                level: 1,
            })
        );

        let src = TreeSource::from_levels(vec![frontier(0, &[""])], false).unwrap();
        assert!(matches!(
            validate_source(&src, 3),
            Err(ValidationError::Source(SourceError::OutOfRange { .. }))
        ));
    }

    #[test]
    fn ctf_round_trip_is_exact() {
        let f = frontier(3, &["001", "010", "110"]);
        let text = write_ctf(&f, &["made by the test suite".to_string()]);
        let parsed = parse_ctf(&text).unwrap();
        assert_eq!(parsed, f);
        let text2 = write_ctf(&parsed, &[]);
        assert_eq!(parse_ctf(&text2).unwrap(), f);
        assert_eq!(write_ctf(&parse_ctf(&text2).unwrap(), &[]), text2);

        let root = frontier(0, &[""]);
        let text = write_ctf(&root, &[]);
        assert_eq!(parse_ctf(&text).unwrap(), root);

        let empty = Frontier::empty(4);
        assert_eq!(parse_ctf(&write_ctf(&empty, &[])).unwrap(), empty);
    }

    #[test]
    fn ctf_errors_carry_line_numbers() {
        let missing = parse_ctf("ctf 2\ndepth 1\n0\n");
        assert_eq!(
            missing,
            Err(CtfError::Syntax {
                line: 1,
                msg: "expected header `ctf 1`".to_string()
            })
        );
        let bad_char = parse_ctf("ctf 1\ndepth 2\n0x\n");
        assert!(matches!(bad_char, Err(CtfError::Syntax { line: 3, .. })));
        let bad_len = parse_ctf("ctf 1\ndepth 2\n011\n");
        assert!(matches!(bad_len, Err(CtfError::Invariant { line: 3, .. })));
        let out_of_order = parse_ctf("ctf 1\ndepth 2\n10\n01\n");
        assert!(matches!(out_of_order, Err(CtfError::Invariant { line: 4, .. })));
        let duplicate = parse_ctf("ctf 1\ndepth 2\n10\n10\n");
        assert!(matches!(duplicate, Err(CtfError::Invariant { line: 4, .. })));
    }
}
