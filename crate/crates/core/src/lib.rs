//! Construction and spectral analysis of union-of-classes Johnson scheme
//! graphs `J_S(n,k)`, with exact verification of Godsil-McKay switching.
//!
//! The crate builds graphs whose vertices are the k-subsets of an n-set,
//! adjacent when their intersection size lies in a chosen class set `S`
//! (Kneser graphs are `S = {0}`, Johnson graphs `S = {k-1}`). On top of that
//! it provides:
//!
//! - validation and application of Godsil-McKay switching partitions, which
//!   rewire edges while provably preserving the adjacency spectrum
//!   ([`switching`]);
//! - exact cospectrality certificates via characteristic polynomials over
//!   several large prime fields ([`spectra`]);
//! - isomorphism invariants (common-neighbor pattern census) and a complete
//!   isomorphism decision for small graphs ([`invariants`]);
//! - exhaustive and shape-restricted searches for switching sets
//!   ([`search`]);
//! - graph6 and JSON interchange ([`io`]).

#![forbid(unsafe_code)]

pub mod combin;
pub mod graph;
pub mod invariants;
pub mod io;
pub mod search;
pub mod spectra;
pub mod switching;
