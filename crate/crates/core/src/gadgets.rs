//! Finite sets whose measures read off facts about an enumeration.
//!
//! An [`EnumerationTrace`] records, for each stage of some enumeration
//! procedure, whether an event happened at that stage.  Three gadgets turn
//! a trace into concrete subsets of Cantor space:
//!
//! * [`lebesgue_fin_tree`] halves the leaf count at every event stage, so
//!   the number of surviving leaves is `2^(stages - events)`.
//! * [`hausdorff_fin_mask`] stretches the coordinate scale at every event
//!   stage: block `s` of the mask runs from `l_s` to `l_{s+1}`, where the
//!   length jumps to `2^(l_s)` on an event, and only the first `a`
//!   positions of each block are kept.  Joining a full tree with a point
//!   along the resulting mask gives a set whose weight at dimension `a/b`
//!   drops strictly below one exactly when events occur, because the long
//!   blocks starve the mask of density.
//! * [`cof_mask`] grants full density on the even blocks indexed by a given
//!   set of stage numbers and canonical density everywhere else, so the
//!   join carries extra weight exactly in proportion to how many of those
//!   block indices are present.
//!
//! Lengths saturate at `u64::MAX`; a handful of event stages is enough to
//! push the schedule there, and the masks stay well defined when it happens.

use crate::algebraic::SIndex;
use crate::joins::{join_sources, JoinMask, MaskBlock};
use crate::trees::{full_source, zero_source, FiniteTree, Frontier, TreeSource, MAX_LEVEL_NODES};
use num_rational::Ratio;

const COF_HORIZON_BOUND: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GadgetError {
    #[error("event stage {stage} is out of range for a trace with {stages} stages")]
    StageOutOfRange { stage: u64, stages: u64 },
    #[error("event stage {stage} appears twice")]
    DuplicateEvent { stage: u64 },
    #[error("trace yields {leaves} leaves, more than the {bound} limit")]
    TraceTooLarge { leaves: u128, bound: usize },
    #[error("horizon {horizon} exceeds the {bound} limit for explicit masks")]
    HorizonTooLarge { horizon: u64, bound: u64 },
}

/// Which stages of an enumeration saw an event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumerationTrace {
    stages: Vec<bool>,
}

impl EnumerationTrace {
    pub fn new(stages: Vec<bool>) -> EnumerationTrace {
        EnumerationTrace { stages }
    }

    /// A trace with events exactly at the listed stages.
    pub fn from_events(events: &[u64], num_stages: u64) -> Result<EnumerationTrace, GadgetError> {
        let mut stages = vec![false; num_stages as usize];
        for &stage in events {
            if stage >= num_stages {
                return Err(GadgetError::StageOutOfRange {
                    stage,
                    stages: num_stages,
                });
            }
            if stages[stage as usize] {
                return Err(GadgetError::DuplicateEvent { stage });
            }
            stages[stage as usize] = true;
        }
        Ok(EnumerationTrace { stages })
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn event_count(&self) -> usize {
        self.stages.iter().filter(|&&e| e).count()
    }

    pub fn has_event(&self, stage: usize) -> bool {
        self.stages[stage]
    }

    pub fn stages(&self) -> &[bool] {
        &self.stages
    }
}

/// The tree that keeps both children at event-free stages and only the
/// zero child at event stages, as deep as the trace runs.
pub fn lebesgue_fin_tree(trace: &EnumerationTrace) -> Result<FiniteTree, GadgetError> {
    let free = trace.num_stages() - trace.event_count();
    let leaves = 1u128 << free.min(127);
    if free >= 127 || leaves > MAX_LEVEL_NODES as u128 {
        return Err(GadgetError::TraceTooLarge {
            leaves,
            bound: MAX_LEVEL_NODES,
        });
    }
    let mut level = vec![crate::trees::BitString::empty()];
    for stage in 0..trace.num_stages() {
        let mut next = Vec::with_capacity(level.len() * 2);
        for node in &level {
            next.push(node.child(0));
            if !trace.has_event(stage) {
                next.push(node.child(1));
            }
        }
        level = next;
    }
    let frontier = Frontier::from_sorted_unchecked(trace.num_stages(), level);
    Ok(FiniteTree::from_frontier(&frontier))
}

/// Block boundaries `l_0 = 0, l_1, ..., l_m`: each stage adds `b`, and an
/// event stage first raises the length to `2^(l_s)` if that is larger.
/// Saturates at `u64::MAX`.
pub fn length_schedule(trace: &EnumerationTrace, s: SIndex) -> Vec<u64> {
    let b = s.den() as u64;
    let mut bounds = Vec::with_capacity(trace.num_stages() + 1);
    let mut l = 0u64;
    bounds.push(l);
    for stage in 0..trace.num_stages() {
        let step = l.saturating_add(b);
        l = if trace.has_event(stage) {
            let doubled = if l >= 64 { u64::MAX } else { 1u64 << l };
            doubled.max(step)
        } else {
            step
        };
        bounds.push(l);
    }
    bounds
}

/// The mask keeping the first `a` positions of every schedule block, with
/// horizon at the final block boundary.  Carries no density certificate:
/// on event traces none holds.
pub fn hausdorff_fin_mask(trace: &EnumerationTrace, s: SIndex) -> JoinMask {
    let a = s.num() as u64;
    let bounds = length_schedule(trace, s);
    let horizon = *bounds.last().unwrap();
    let mut blocks = Vec::new();
    for pair in bounds.windows(2) {
        let len = pair[1] - pair[0];
        if len == 0 {
            continue;
        }
        blocks.push(MaskBlock {
            start: pair[0],
            ones: a.min(len),
            len,
        });
    }
    JoinMask::from_blocks(blocks, horizon).expect("schedule blocks are ordered and disjoint")
}

/// The full tree joined with a point along the trace's stretched mask.
pub fn hausdorff_fin_source(trace: &EnumerationTrace, s: SIndex) -> TreeSource {
    join_sources(&full_source(), &zero_source(), &hausdorff_fin_mask(trace, s))
}

/// The mask that is canonical for `s = a/b` except on even blocks: block
/// `[2nb, 2nb + b)` is granted in full whenever `n` is in `nonmembers`.
pub fn cof_mask(s: SIndex, nonmembers: &[u64], horizon: u64) -> Result<JoinMask, GadgetError> {
    if horizon > COF_HORIZON_BOUND {
        return Err(GadgetError::HorizonTooLarge {
            horizon,
            bound: COF_HORIZON_BOUND,
        });
    }
    let (a, b) = (s.num() as u64, s.den() as u64);
    let mut missing = nonmembers.to_vec();
    missing.sort_unstable();
    missing.dedup();
    let bits = (0..horizon)
        .map(|k| {
            let canonical = k % b < a;
            let granted = (k / b) % 2 == 0 && missing.binary_search(&(k / (2 * b))).is_ok();
            (canonical || granted) as u8
        })
        .collect();
    Ok(JoinMask::explicit(bits)
        .expect("bits are 0 or 1")
        .with_certificate(
            Ratio::new(s.num() as u64, s.den() as u64),
            Ratio::from_integer(1),
        ))
}

/// The full tree joined with a point along a cofinal-grant mask.
pub fn cof_source(s: SIndex, nonmembers: &[u64], horizon: u64) -> Result<TreeSource, GadgetError> {
    Ok(join_sources(
        &full_source(),
        &zero_source(),
        &cof_mask(s, nonmembers, horizon)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebraic::RootWeight;
    use crate::cover::min_cover;
    use crate::joins::{canonical_mask, MaskError};
    use crate::trees::BitString;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::cmp::Ordering;

    fn s(num: u32, den: u32) -> SIndex {
        SIndex::new(num, den).unwrap()
    }

    fn bs(text: &str) -> BitString {
        text.parse().unwrap()
    }

    #[test]
    fn traces_from_event_lists() {
        let trace = EnumerationTrace::from_events(&[0, 2], 4).unwrap();
        assert_eq!(trace.stages(), &[true, false, true, false]);
        assert_eq!(trace.event_count(), 2);
        assert_eq!(
            EnumerationTrace::from_events(&[4], 4),
            Err(GadgetError::StageOutOfRange { stage: 4, stages: 4 })
        );
        assert_eq!(
            EnumerationTrace::from_events(&[1, 1], 3),
            Err(GadgetError::DuplicateEvent { stage: 1 })
        );
    }

    #[test]
    fn event_stages_halve_the_leaf_count() {
        let trace = EnumerationTrace::new(vec![false, true, false]);
        let tree = lebesgue_fin_tree(&trace).unwrap();
        assert_eq!(
            tree.level(3).nodes(),
            &[bs("000"), bs("001"), bs("100"), bs("101")]
        );
        assert_eq!(tree.level(1).nodes(), &[bs("0"), bs("1")]);
        assert_eq!(tree.level(2).nodes(), &[bs("00"), bs("10")]);

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..40 {
            let m = rng.random_range(0..=10usize);
            let stages: Vec<bool> = (0..m).map(|_| rng.random_bool(0.4)).collect();
            let trace = EnumerationTrace::new(stages);
            let tree = lebesgue_fin_tree(&trace).unwrap();
            let expect = 1usize << (trace.num_stages() - trace.event_count());
            assert_eq!(tree.level(m).len(), expect);
        }
    }

    #[test]
    fn eventless_traces_give_the_canonical_mask() {
        for si in [s(1, 2), s(2, 3), s(3, 4)] {
            let trace = EnumerationTrace::new(vec![false; 7]);
            let mask = hausdorff_fin_mask(&trace, si);
            let reference = canonical_mask(si);
            let horizon = mask.horizon().unwrap();
            assert_eq!(horizon, 7 * si.den() as u64);
            for k in 0..horizon {
                assert_eq!(mask.member(k).unwrap(), reference.member(k).unwrap());
            }
        }
    }

    #[test]
    fn event_stages_stretch_the_schedule() {
        let trace = EnumerationTrace::from_events(&[0, 1, 2], 3).unwrap();
        assert_eq!(length_schedule(&trace, s(1, 2)), vec![0, 2, 4, 16]);

        let mask = hausdorff_fin_mask(&trace, s(1, 2));
        assert_eq!(mask.horizon(), Some(16));
        let members: Vec<u64> = (0..16).filter(|&k| mask.member(k).unwrap()).collect();
        assert_eq!(members, vec![0, 2, 4]);
    }

    #[test]
    fn stretched_joins_lose_weight() {
        let si = s(1, 2);
        let trace = EnumerationTrace::from_events(&[0, 1, 2], 3).unwrap();
        let level = hausdorff_fin_source(&trace, si).level(16).unwrap();
        assert_eq!(level.len(), 8);
        let weight = min_cover(&level, 0, si).weight;
        assert_eq!(weight, RootWeight::cylinder(si, 10));

        let calm = EnumerationTrace::new(vec![false; 8]);
        let baseline = hausdorff_fin_source(&calm, si).level(16).unwrap();
        let full_weight = min_cover(&baseline, 0, si).weight;
        assert_eq!(full_weight, RootWeight::one());
        assert_eq!(weight.cmp(&full_weight), Ordering::Less);
    }

    #[test]
    fn event_traces_break_the_canonical_density_claim() {
        let trace = EnumerationTrace::from_events(&[0, 1, 2], 3).unwrap();
        let claimed = hausdorff_fin_mask(&trace, s(1, 2))
            .with_certificate(Ratio::new(1, 2), Ratio::from_integer(1));
        assert_eq!(
            claimed.verify_certificate(16),
            Err(MaskError::CertificateViolated {
                at: 9,
                count: 3,
                rate: Ratio::new(1, 2),
                slack: Ratio::from_integer(1),
            })
        );

        assert!(hausdorff_fin_mask(&trace, s(1, 2)).certificate().is_none());
    }

    #[test]
    fn schedules_saturate_instead_of_overflowing() {
        let trace = EnumerationTrace::from_events(&[0, 1, 2, 3, 4, 5], 6).unwrap();
        let bounds = length_schedule(&trace, s(1, 2));
        assert_eq!(bounds, vec![0, 2, 4, 16, 65536, u64::MAX, u64::MAX]);
        let mask = hausdorff_fin_mask(&trace, s(1, 2));
        assert_eq!(mask.horizon(), Some(u64::MAX));
        assert!(mask.member(65536).unwrap());
        assert!(!mask.member(65537).unwrap());
        assert!(!mask.member(1 << 40).unwrap());
    }

    #[test]
    fn granted_blocks_add_density() {
        let mask = cof_mask(s(1, 2), &[0], 8).unwrap();
        let bits: Vec<u8> = (0..8).map(|k| mask.member(k).unwrap() as u8).collect();
        assert_eq!(bits, [1, 1, 1, 0, 1, 0, 1, 0]);
        mask.verify_certificate(8).unwrap();

        let plain = cof_mask(s(1, 2), &[], 12).unwrap();
        let reference = canonical_mask(s(1, 2));
        for k in 0..12 {
            assert_eq!(plain.member(k).unwrap(), reference.member(k).unwrap());
        }
    }

    #[test]
    fn grants_raise_the_weight_above_canonical() {
        let si = s(1, 2);
        let granted = cof_source(si, &[0, 1], 8).unwrap().level(8).unwrap();
        assert_eq!(granted.len(), 64);
        let grant_weight = min_cover(&granted, 8, si).weight;
        assert_eq!(grant_weight, RootWeight::integer(4));

        let canonical = join_sources(&full_source(), &zero_source(), &canonical_mask(si))
            .level(8)
            .unwrap();
        let base_weight = min_cover(&canonical, 8, si).weight;
        assert_eq!(base_weight, RootWeight::one());
        assert_eq!(grant_weight.cmp(&base_weight), Ordering::Greater);
    }

    #[test]
    fn oversized_requests_are_refused() {
        let trace = EnumerationTrace::new(vec![false; 40]);
        assert!(matches!(
            lebesgue_fin_tree(&trace),
            Err(GadgetError::TraceTooLarge { .. })
        ));
        assert!(matches!(
            cof_mask(s(1, 2), &[], 1 << 30),
            Err(GadgetError::HorizonTooLarge { .. })
        ));
    }
}
