//! Interleaving two trees along a membership mask.
//!
//! A mask selects a set `A` of coordinate positions.  The join `z` of `x`
//! and `y` reads its bits at positions in `A` from `x`, in order, and its
//! remaining bits from `y`; joining two sources level by level gives the
//! tree of all such interleavings ([`join_sources`]).  Projecting back out
//! of a join recovers the `x`-coordinates ([`project_left`]).
//!
//! Masks are finite objects: besides the membership rule each carries a
//! horizon, the first position at which the rule is no longer defined
//! (periodic masks have none), and querying past the horizon is an error,
//! never a silent default.  A mask may also carry a density certificate,
//! the claim `|A ∩ [0, n)| >= rate*n - slack` for all `n`; the claim is
//! checkable up to any bound with [`JoinMask::verify_certificate`].  The
//! mask of the canonical `s`-join, `a` positions out of every `b`, carries
//! the certificate `(a/b, 1)` and is what makes a join carry positive
//! measure at dimension `s`.

use crate::algebraic::SIndex;
use crate::trees::{BitString, Frontier, LevelOracle, SourceError, TreeSource};
use num_rational::Ratio;
use std::fmt;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => write!(f, "left"),
            Side::Right => write!(f, "right"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MaskError {
    #[error("position {index} is beyond the mask horizon {horizon}")]
    BeyondHorizon { index: u64, horizon: u64 },
    #[error("{side} input supplies {available} bits, {needed} needed")]
    Starved {
        side: Side,
        needed: u64,
        available: u64,
    },
    #[error("density certificate fails at n = {at}: count {count} < {rate}*{at} - {slack}")]
    CertificateViolated {
        at: u64,
        count: u64,
        rate: Ratio<u64>,
        slack: Ratio<u64>,
    },
    #[error("cannot parse mask literal: {0}")]
    Parse(String),
    #[error("invalid mask: {0}")]
    Invalid(String),
}

/// The claim that the mask keeps density at least `rate` up to an additive
/// `slack`, at every length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensityCertificate {
    pub rate: Ratio<u64>,
    pub slack: Ratio<u64>,
}

/// A maximal run of consecutive positions with known membership: the first
/// `ones` positions of the run are in the mask, the rest are not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskBlock {
    pub start: u64,
    pub ones: u64,
    pub len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum MaskRule {
    Periodic { prefix: Vec<u8>, period: Vec<u8> },
    Explicit { bits: Vec<u8> },
    Blocks { blocks: Vec<MaskBlock>, horizon: u64 },
}

/// A set of coordinate positions with an explicit horizon of definedness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinMask {
    rule: MaskRule,
    certificate: Option<DensityCertificate>,
}

fn check_bits(bits: &[u8]) -> Result<(), MaskError> {
    if bits.iter().all(|&b| b <= 1) {
        Ok(())
    } else {
        Err(MaskError::Invalid("mask bits must be 0 or 1".to_string()))
    }
}

impl JoinMask {
    /// A total mask: explicit prefix bits, then a repeating period.
    pub fn periodic(prefix: Vec<u8>, period: Vec<u8>) -> Result<JoinMask, MaskError> {
        check_bits(&prefix)?;
        check_bits(&period)?;
        if period.is_empty() {
            return Err(MaskError::Invalid("period must be nonempty".to_string()));
        }
        Ok(JoinMask {
            rule: MaskRule::Periodic { prefix, period },
            certificate: None,
        })
    }

    /// A mask defined exactly on `[0, bits.len())`.
    pub fn explicit(bits: Vec<u8>) -> Result<JoinMask, MaskError> {
        check_bits(&bits)?;
        Ok(JoinMask {
            rule: MaskRule::Explicit { bits },
            certificate: None,
        })
    }

    /// A mask defined on `[0, horizon)` by runs of known membership;
    /// positions covered by no run are out of the mask.
    pub fn from_blocks(blocks: Vec<MaskBlock>, horizon: u64) -> Result<JoinMask, MaskError> {
        let mut position = 0u64;
        for block in &blocks {
            if block.start < position {
                return Err(MaskError::Invalid(format!(
                    "block at {} overlaps its predecessor",
                    block.start
                )));
            }
            if block.ones > block.len {
                return Err(MaskError::Invalid(format!(
                    "block at {} has more ones than length",
                    block.start
                )));
            }
            position = block.start.checked_add(block.len).ok_or_else(|| {
                MaskError::Invalid("block extends past the largest index".to_string())
            })?;
        }
        if position > horizon {
            return Err(MaskError::Invalid(
                "blocks extend past the horizon".to_string(),
            ));
        }
        Ok(JoinMask {
            rule: MaskRule::Blocks { blocks, horizon },
            certificate: None,
        })
    }

    pub fn with_certificate(mut self, rate: Ratio<u64>, slack: Ratio<u64>) -> JoinMask {
        self.certificate = Some(DensityCertificate { rate, slack });
        self
    }

    pub fn certificate(&self) -> Option<&DensityCertificate> {
        self.certificate.as_ref()
    }

    /// The first undefined position, if any.
    pub fn horizon(&self) -> Option<u64> {
        match &self.rule {
            MaskRule::Periodic { .. } => None,
            MaskRule::Explicit { bits } => Some(bits.len() as u64),
            MaskRule::Blocks { horizon, .. } => Some(*horizon),
        }
    }

    fn check_in_horizon(&self, index: u64) -> Result<(), MaskError> {
        match self.horizon() {
            Some(h) if index >= h => Err(MaskError::BeyondHorizon { index, horizon: h }),
            _ => Ok(()),
        }
    }

    pub fn member(&self, index: u64) -> Result<bool, MaskError> {
        self.check_in_horizon(index)?;
        Ok(match &self.rule {
            MaskRule::Periodic { prefix, period } => {
                if (index as usize) < prefix.len() {
                    prefix[index as usize] == 1
                } else {
                    let off = (index - prefix.len() as u64) % period.len() as u64;
                    period[off as usize] == 1
                }
            }
            MaskRule::Explicit { bits } => bits[index as usize] == 1,
            MaskRule::Blocks { blocks, .. } => {
                let at = blocks.partition_point(|b| b.start + b.len <= index);
                match blocks.get(at) {
                    Some(b) => index >= b.start && index < b.start + b.ones,
                    None => false,
                }
            }
        })
    }

    /// `|A ∩ [0, n)|`; defined for `n` up to and including the horizon.
    pub fn count_prefix(&self, n: u64) -> Result<u64, MaskError> {
        if n > 0 {
            self.check_in_horizon(n - 1)?;
        }
        Ok(match &self.rule {
            MaskRule::Periodic { prefix, period } => {
                let head = (n as usize).min(prefix.len());
                let head_ones = prefix[..head].iter().filter(|&&b| b == 1).count() as u64;
                let rest = n - head as u64;
                let per_ones = period.iter().filter(|&&b| b == 1).count() as u64;
                let plen = period.len() as u64;
                let partial = period[..(rest % plen) as usize]
                    .iter()
                    .filter(|&&b| b == 1)
                    .count() as u64;
                head_ones + (rest / plen) * per_ones + partial
            }
            MaskRule::Explicit { bits } => {
                bits[..n as usize].iter().filter(|&&b| b == 1).count() as u64
            }
            MaskRule::Blocks { blocks, .. } => {
                let mut total = 0;
                for block in blocks {
                    if block.start >= n {
                        break;
                    }
                    total += block.ones.min(n - block.start);
                }
                total
            }
        })
    }

    /// Checks the stored density claim at every length `1..=up_to`.
    pub fn verify_certificate(&self, up_to: u64) -> Result<(), MaskError> {
        let Some(cert) = self.certificate else {
            return Err(MaskError::Invalid(
                "mask carries no density certificate".to_string(),
            ));
        };
        let (p, q) = (*cert.rate.numer() as u128, *cert.rate.denom() as u128);
        let (e, f) = (*cert.slack.numer() as u128, *cert.slack.denom() as u128);
        let mut count = 0u64;
        for n in 1..=up_to {
            if self.member(n - 1)? {
                count += 1;
            }
            // count >= (p/q)*n - e/f  <=>  count*q*f + e*q >= p*n*f
            if (count as u128) * q * f + e * q < p * (n as u128) * f {
                return Err(MaskError::CertificateViolated {
                    at: n,
                    count,
                    rate: cert.rate,
                    slack: cert.slack,
                });
            }
        }
        Ok(())
    }
}

/// The mask of the canonical `s`-join for `s = a/b`: the first `a`
/// positions of every length-`b` block, with density certificate `(a/b, 1)`.
pub fn canonical_mask(s: SIndex) -> JoinMask {
    let period: Vec<u8> = (0..s.den()).map(|i| (i < s.num()) as u8).collect();
    JoinMask::periodic(Vec::new(), period)
        .expect("canonical period is a valid mask")
        .with_certificate(
            Ratio::new(s.num() as u64, s.den() as u64),
            Ratio::from_integer(1),
        )
}

/// Interleaves `x` and `y` along the mask out to the given length.
pub fn join_strings(
    x: &BitString,
    y: &BitString,
    mask: &JoinMask,
    len: usize,
) -> Result<BitString, MaskError> {
    let needed_x = mask.count_prefix(len as u64)?;
    let needed_y = len as u64 - needed_x;
    if (x.len() as u64) < needed_x {
        return Err(MaskError::Starved {
            side: Side::Left,
            needed: needed_x,
            available: x.len() as u64,
        });
    }
    if (y.len() as u64) < needed_y {
        return Err(MaskError::Starved {
            side: Side::Right,
            needed: needed_y,
            available: y.len() as u64,
        });
    }
    let mut out = BitString::empty();
    let (mut xi, mut yi) = (0usize, 0usize);
    for p in 0..len {
        if mask.member(p as u64)? {
            out.push(x.bit(xi));
            xi += 1;
        } else {
            out.push(y.bit(yi));
            yi += 1;
        }
    }
    Ok(out)
}

/// The bits of `z` at mask positions, in order.
pub fn project_left(z: &BitString, mask: &JoinMask) -> Result<BitString, MaskError> {
    let mut out = BitString::empty();
    for p in 0..z.len() {
        if mask.member(p as u64)? {
            out.push(z.bit(p));
        }
    }
    Ok(out)
}

/// Whether the pair witnesses the Hölder inequality
/// `d(πz, πz') <= d(z, z')^t` for the left projection along the mask.
///
/// With first differences at `j` in the inputs and `j'` in the projections
/// this is exactly `b*j' >= a*j` for `t = a/b`; pairs that do not differ
/// witness it vacuously.
pub fn holder_check(
    z1: &BitString,
    z2: &BitString,
    mask: &JoinMask,
    t: SIndex,
) -> Result<bool, MaskError> {
    let Some(j) = z1.first_difference(z2) else {
        return Ok(true);
    };
    let p1 = project_left(z1, mask)?;
    let p2 = project_left(z2, mask)?;
    let Some(jp) = p1.first_difference(&p2) else {
        return Ok(true);
    };
    Ok(t.den() as u128 * jp as u128 >= t.num() as u128 * j as u128)
}

struct JoinOracle {
    left: TreeSource,
    right: TreeSource,
    mask: JoinMask,
    counts: Mutex<Vec<u64>>,
}

impl JoinOracle {
    /// `|A ∩ [0, depth)|` from the cache, extending it as needed.
    fn count(&self, depth: usize) -> Result<u64, MaskError> {
        let mut counts = self.counts.lock().unwrap();
        while counts.len() <= depth {
            let at = counts.len() as u64 - 1;
            let prev = *counts.last().unwrap();
            counts.push(prev + self.mask.member(at)? as u64);
        }
        Ok(counts[depth])
    }
}

impl LevelOracle for JoinOracle {
    fn level(&self, depth: usize) -> Result<Frontier, SourceError> {
        let in_mask = self.count(depth).map_err(|e| match e {
            MaskError::BeyondHorizon { horizon, .. } => SourceError::OutOfRange {
                depth,
                limit: horizon + 1,
            },
            other => unreachable!("membership query failed: {other}"),
        })? as usize;
        let left = self.left.level(in_mask)?;
        let right = self.right.level(depth - in_mask)?;
        crate::trees::ensure_level_size(depth, left.len() as u128 * right.len() as u128)?;
        let membership: Vec<bool> = (0..depth)
            .map(|p| self.mask.member(p as u64).unwrap_or(false))
            .collect();
        let mut nodes = Vec::with_capacity(left.len() * right.len());
        for x in left.nodes() {
            for y in right.nodes() {
                let mut z = BitString::empty();
                let (mut xi, mut yi) = (0usize, 0usize);
                for &m in &membership {
                    if m {
                        z.push(x.bit(xi));
                        xi += 1;
                    } else {
                        z.push(y.bit(yi));
                        yi += 1;
                    }
                }
                nodes.push(z);
            }
        }
        nodes.sort();
        Ok(Frontier::from_sorted_unchecked(depth, nodes))
    }

    fn pruned(&self) -> bool {
        self.left.pruned() && self.right.pruned()
    }
}

/// The tree of all interleavings of the two sources along the mask: bits of
/// a level-`k` node come from a left node of length `|A ∩ [0, k)|` and a
/// right node of the complementary length.  Pruned exactly when both inputs
/// are.
pub fn join_sources(left: &TreeSource, right: &TreeSource, mask: &JoinMask) -> TreeSource {
    TreeSource::new(Arc::new(JoinOracle {
        left: left.clone(),
        right: right.clone(),
        mask: mask.clone(),
        counts: Mutex::new(vec![0]),
    }))
}

/// Parses a mask literal: `canonical:a/b`, `explicit:<bits>`, or
/// `periodic:<prefix>:<period>` (the prefix may be empty).
pub fn parse_mask(text: &str) -> Result<JoinMask, MaskError> {
    let parse_bits = |bits: &str| -> Result<Vec<u8>, MaskError> {
        bits.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(MaskError::Parse(format!(
                    "invalid mask bit {other:?} in {text:?}"
                ))),
            })
            .collect()
    };
    if let Some(rest) = text.strip_prefix("canonical:") {
        let s: SIndex = rest
            .parse()
            .map_err(|e| MaskError::Parse(format!("{e} in {text:?}")))?;
        return Ok(canonical_mask(s));
    }
    if let Some(rest) = text.strip_prefix("explicit:") {
        return JoinMask::explicit(parse_bits(rest)?);
    }
    if let Some(rest) = text.strip_prefix("periodic:") {
        let (prefix, period) = rest.split_once(':').ok_or_else(|| {
            MaskError::Parse(format!("periodic mask needs <prefix>:<period> in {text:?}"))
        })?;
        return JoinMask::periodic(parse_bits(prefix)?, parse_bits(period)?);
    }
    Err(MaskError::Parse(format!(
        "unknown mask literal {text:?}, expected canonical:, explicit:, or periodic:"
    )))
}
