//! Exact s-dimensional pre-measures of tree-represented subsets of Cantor
//! space.
//!
//! Points of Cantor space are infinite binary strings; a closed subset is
//! presented by the tree of its finite prefixes, and a computation sees that
//! tree through a [`trees::TreeSource`], one full level at a time.  For a
//! depth-`k` level and a resolution `n`, [`cover::min_cover`] finds the
//! cheapest antichain of nodes covering the level when a node of length `d`
//! costs `2^(-s*d)`, which is the value a cover-based outer measure assigns
//! before the resolution is driven to infinity.  All weights live in the ring
//! generated by `2^(-1/b)` over the dyadic rationals ([`algebraic`]), so
//! every comparison in the crate is exact: there is no floating point and no
//! tolerance anywhere.
//!
//! The remaining modules build the sets whose levels get measured:
//! [`joins`] interleaves two sources along a membership mask, [`gadgets`]
//! turns finite enumeration traces into trees and masks whose measures track
//! the trace, and [`davies`] searches for bound functions that force lower
//! bounds on the measure of unions of branches through a scheme.

pub mod algebraic;
pub mod cover;
pub mod davies;
pub mod gadgets;
pub mod joins;
pub mod trees;

pub use algebraic::{AlgebraicError, Dyadic, DyadicInterval, RootWeight, SIndex};
pub use cover::{
    brute_cover, dimension_bracket, max_mass, min_cover, premeasure_profile, verify_cover,
    verify_mass, CoverError, CoverResult, MassResult,
};
pub use davies::{
    cf_frontier, cf_source, cn_frontier, davies_search, BoundFunction, DaviesError,
    DaviesOutcome, SouslinScheme, StageCertificate,
};
pub use gadgets::{
    cof_mask, cof_source, hausdorff_fin_mask, hausdorff_fin_source, lebesgue_fin_tree,
    length_schedule, EnumerationTrace, GadgetError,
};
pub use joins::{
    canonical_mask, holder_check, join_sources, join_strings, parse_mask, project_left,
    DensityCertificate, JoinMask, MaskBlock, MaskError, Side,
};
pub use trees::{
    full_source, hull_source, parse_ctf, singleton_source, validate_source, write_ctf,
    zero_source, BitString, CtfError, FiniteTree, Frontier, LevelOracle, SourceError, TreeError,
    TreeSource, ValidationError,
};
