//! Switching-set search: anchored exhaustive scans, shape-directed
//! backtracking, and the hardcoded reference blocks with their assertions.
//!
//! The exhaustive scan examines every candidate block through one anchor
//! vertex. On a vertex-transitive graph every orbit of blocks meets the
//! anchor, so an empty anchored result proves there is no switching set of
//! that size anywhere; the outcome records which coverage claim applies.
//! Backtracking instead builds blocks shape-by-shape (valid single blocks
//! induce regular subgraphs, and at sizes 4 and 6 the interesting shapes
//! are independent sets, induced matchings, induced cycles, and cliques),
//! pruning a partial block as soon as some settled outside vertex can no
//! longer reach a legal neighbor count.

use crate::combin::{binom_small, next_colex_tuple, unrank_colex_tuple, KSubset};
use crate::graph::{words_for, Graph, JohnsonSpec};
use crate::invariants::{exact_iso, noniso_certificate, IsoError, IsoOutcome, NonIsoCertificate};
use crate::spectra::{cospectral, Cospectrality};
use crate::switching::{
    apply_switch_prevalidated, validate_partition, SwitchingPartition, ValidationReport,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound on candidates an exhaustive scan will agree to examine.
pub const SEARCH_CANDIDATE_BUDGET: u128 = 300_000_000;

/// Backtracking keeps whole-row masks on the stack; cap the graph size.
pub const BACKTRACK_VERTEX_BUDGET: usize = 4096;
const MAX_WORDS: usize = BACKTRACK_VERTEX_BUDGET / 64;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("bad search config: {0}")]
    BadConfig(String),
    #[error(
        "combinatorial budget exceeded: {estimated} candidates (from C({pool}, {tuple})) over the {budget} cap"
    )]
    Budget {
        estimated: u128,
        pool: usize,
        tuple: usize,
        budget: u128,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockShape {
    IndependentSet,
    InducedMatching,
    InducedCycle,
    Clique,
}

impl BlockShape {
    pub const ALL: [BlockShape; 4] = [
        BlockShape::IndependentSet,
        BlockShape::InducedMatching,
        BlockShape::InducedCycle,
        BlockShape::Clique,
    ];
}

impl std::fmt::Display for BlockShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BlockShape::IndependentSet => "independent-set",
            BlockShape::InducedMatching => "induced-matching",
            BlockShape::InducedCycle => "induced-cycle",
            BlockShape::Clique => "clique",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for BlockShape {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "independent-set" | "independent" => Ok(BlockShape::IndependentSet),
            "induced-matching" | "matching" => Ok(BlockShape::InducedMatching),
            "induced-cycle" | "cycle" => Ok(BlockShape::InducedCycle),
            "clique" => Ok(BlockShape::Clique),
            other => Err(format!(
                "unknown shape {other:?}; expected independent-set, induced-matching, induced-cycle, or clique"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exhaustive,
    Backtrack,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Candidate block size; even and at least 2.
    pub size: u32,
    pub mode: SearchMode,
    /// Shapes examined in backtrack mode; ignored by exhaustive scans.
    pub shapes: Vec<BlockShape>,
    /// `Some(v)`: only blocks containing `v` are examined. `None` disables
    /// the reduction and scans every subset.
    pub anchor: Option<u32>,
    /// Caller's assertion that the graph is vertex-transitive, which is
    /// what upgrades an anchored empty result to a global one. Set
    /// automatically when the graph carries construction parameters.
    pub assume_vertex_transitive: bool,
    /// Worker threads; `None` uses the ambient pool.
    pub workers: Option<usize>,
    /// Keep at most this many results (applied after the deterministic
    /// sort, so it trims output without changing what was scanned).
    pub limit: Option<usize>,
}

impl SearchConfig {
    pub fn exhaustive(size: u32) -> Self {
        SearchConfig {
            size,
            mode: SearchMode::Exhaustive,
            shapes: BlockShape::ALL.to_vec(),
            anchor: Some(0),
            assume_vertex_transitive: false,
            workers: None,
            limit: None,
        }
    }

    pub fn backtrack(size: u32) -> Self {
        SearchConfig {
            mode: SearchMode::Backtrack,
            ..SearchConfig::exhaustive(size)
        }
    }

    fn validate(&self) -> Result<(), SearchError> {
        if self.size < 2 || self.size % 2 != 0 {
            return Err(SearchError::BadConfig(format!(
                "size must be even and >= 2, got {}",
                self.size
            )));
        }
        if self.mode == SearchMode::Backtrack {
            if self.shapes.is_empty() {
                return Err(SearchError::BadConfig(
                    "backtrack mode needs at least one shape".into(),
                ));
            }
            if self.shapes.contains(&BlockShape::InducedCycle) && !(self.size == 4 || self.size == 6)
            {
                return Err(SearchError::BadConfig(
                    "induced-cycle shape is implemented for sizes 4 and 6".into(),
                ));
            }
        }
        Ok(())
    }
}

/// What an empty result list actually proves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    /// Every size-subset of the vertex set was examined.
    Full,
    /// Only subsets through the anchor were examined, and the graph is
    /// vertex-transitive, so every orbit was still covered.
    AnchoredTransitive,
    /// Only subsets through the anchor were examined; no claim about
    /// blocks avoiding it.
    AnchoredOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MateStatus {
    Isomorphic,
    Nonisomorphic,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MateEvidence {
    /// An invariant from the certificate chain separated the mates.
    Invariant { certificate: NonIsoCertificate },
    /// The exact decider settled it (either direction).
    ExactIso { nodes_explored: u64 },
    /// The exact decider gave up within its budget.
    Budget { detail: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    pub block: Vec<u32>,
    pub validation: ValidationReport,
    pub mate_status: MateStatus,
    pub mate_evidence: MateEvidence,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub results: Vec<SearchResult>,
    /// Valid blocks that switch nothing (no half-class vertex outside).
    pub trivial_blocks: Vec<Vec<u32>>,
    pub candidates_examined: u128,
    pub coverage: Coverage,
}

/// Single-block switching check for one candidate: the block must induce
/// a regular subgraph and every outside vertex must see 0, half, or all
/// of it. Returns None on failure, otherwise whether some outside vertex
/// sits in the half class (= the switch actually rewires).
fn fast_block_check(g: &Graph, verts: &[u32], mask: &[u64]) -> Option<bool> {
    let s = verts.len() as u32;
    let d0 = g.neighbors_in_mask(verts[0] as usize, mask);
    for &u in &verts[1..] {
        if g.neighbors_in_mask(u as usize, mask) != d0 {
            return None;
        }
    }
    let half = s / 2;
    let mut nontrivial = false;
    for w in 0..g.vertex_count() {
        if mask[w / 64] >> (w % 64) & 1 == 1 {
            continue;
        }
        let c = g.neighbors_in_mask(w, mask);
        if c == 0 || c == s {
            continue;
        }
        if c == half {
            nontrivial = true;
            continue;
        }
        return None;
    }
    Some(nontrivial)
}

fn decide_mate(g: &Graph, p: &SwitchingPartition, report: &ValidationReport) -> (MateStatus, MateEvidence) {
    let mate = apply_switch_prevalidated(g, p, report);
    let cert = noniso_certificate(g, &mate);
    if cert.is_distinguished() {
        return (
            MateStatus::Nonisomorphic,
            MateEvidence::Invariant { certificate: cert },
        );
    }
    match exact_iso(g, &mate) {
        Ok(r) => match r.outcome {
            IsoOutcome::Isomorphic { .. } => (
                MateStatus::Isomorphic,
                MateEvidence::ExactIso {
                    nodes_explored: r.nodes_explored,
                },
            ),
            IsoOutcome::NotIsomorphic => (
                MateStatus::Nonisomorphic,
                MateEvidence::ExactIso {
                    nodes_explored: r.nodes_explored,
                },
            ),
        },
        Err(e @ (IsoError::VertexBudget { .. } | IsoError::UndecidedBudget { .. })) => (
            MateStatus::Undecided,
            MateEvidence::Budget {
                detail: e.to_string(),
            },
        ),
    }
}

/// Dedup, re-validate, split trivial blocks out, order deterministically,
/// and attach mate verdicts.
fn finalize(
    g: &Graph,
    mut raw: Vec<Vec<u32>>,
    limit: Option<usize>,
    candidates_examined: u128,
    coverage: Coverage,
) -> SearchOutcome {
    for b in &mut raw {
        b.sort_unstable();
    }
    raw.sort();
    raw.dedup();
    let mut results = Vec::new();
    let mut trivial = Vec::new();
    for block in raw {
        let p = SwitchingPartition::single_block(g.vertex_count(), block.clone())
            .expect("search emits in-range duplicate-free blocks");
        let report = validate_partition(g, &p);
        assert!(report.valid, "search emitted a block that fails re-validation");
        if !report.nontrivial {
            trivial.push(block);
            continue;
        }
        if limit.is_some_and(|l| results.len() >= l) {
            continue;
        }
        let (mate_status, mate_evidence) = decide_mate(g, &p, &report);
        results.push(SearchResult {
            block,
            validation: report,
            mate_status,
            mate_evidence,
        });
    }
    SearchOutcome {
        results,
        trivial_blocks: trivial,
        candidates_examined,
        coverage,
    }
}

fn coverage_for(g: &Graph, cfg: &SearchConfig) -> Coverage {
    match cfg.anchor {
        None => Coverage::Full,
        Some(_) if cfg.assume_vertex_transitive || g.spec().is_some() => {
            Coverage::AnchoredTransitive
        }
        Some(_) => Coverage::AnchoredOnly,
    }
}

fn run_in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(w) if w > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .expect("worker pool")
            .install(f),
        _ => f(),
    }
}

/// Examines every size-`cfg.size` subset containing the anchor (or every
/// subset outright when the anchor is disabled). Workers claim contiguous
/// rank ranges of the candidate space and the merged output is sorted, so
/// the result list does not depend on the worker count.
pub fn search_exhaustive(g: &Graph, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    cfg.validate()?;
    let v = g.vertex_count();
    let s = cfg.size as usize;
    if let Some(a) = cfg.anchor {
        if (a as usize) >= v {
            return Err(SearchError::BadConfig(format!(
                "anchor {a} outside 0..{v}"
            )));
        }
    }
    if v < s {
        return Ok(finalize(g, Vec::new(), cfg.limit, 0, coverage_for(g, cfg)));
    }
    // Enumerate (tuple_len)-subsets of the pool by colex rank.
    let pool: Vec<u32> = match cfg.anchor {
        Some(a) => (0..v as u32).filter(|&x| x != a).collect(),
        None => (0..v as u32).collect(),
    };
    let tuple_len = if cfg.anchor.is_some() { s - 1 } else { s };
    let total = binom_small(pool.len() as u64, tuple_len as u32);
    if total > SEARCH_CANDIDATE_BUDGET {
        return Err(SearchError::Budget {
            estimated: total,
            pool: pool.len(),
            tuple: tuple_len,
            budget: SEARCH_CANDIDATE_BUDGET,
        });
    }

    let words = words_for(v);
    let chunk_count = {
        let threads = cfg.workers.unwrap_or_else(rayon::current_num_threads).max(1) as u128;
        (threads * 8).min(total.max(1))
    };
    let chunk_size = total.div_ceil(chunk_count);
    let ranges: Vec<(u128, u128)> = (0..chunk_count)
        .map(|i| {
            let start = i * chunk_size;
            (start, chunk_size.min(total.saturating_sub(start)))
        })
        .filter(|&(_, len)| len > 0)
        .collect();

    let scan_range = |&(start, len): &(u128, u128)| -> Vec<Vec<u32>> {
        let mut found = Vec::new();
        let mut tuple = unrank_colex_tuple(start, tuple_len);
        let mut verts: Vec<u32> = Vec::with_capacity(s);
        let mut mask = vec![0u64; words];
        for _ in 0..len {
            verts.clear();
            mask.iter_mut().for_each(|w| *w = 0);
            if let Some(a) = cfg.anchor {
                verts.push(a);
                mask[a as usize / 64] |= 1 << (a % 64);
            }
            for &i in &tuple {
                let x = pool[i as usize];
                verts.push(x);
                mask[x as usize / 64] |= 1 << (x % 64);
            }
            if fast_block_check(g, &verts, &mask).is_some() {
                found.push(verts.clone());
            }
            next_colex_tuple(&mut tuple);
        }
        found
    };

    let raw: Vec<Vec<u32>> = run_in_pool(cfg.workers, || {
        ranges
            .par_iter()
            .map(scan_range)
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });
    Ok(finalize(g, raw, cfg.limit, total, coverage_for(g, cfg)))
}

// ---------------------------------------------------------------------------
// Backtracking by shape
// ---------------------------------------------------------------------------

/// Incremental neighbor counts into the partial block, with the window
/// test for settled outside vertices: with `r` slots left, a vertex at
/// count `p` is dead when it can no longer finish at 0, half, or full.
struct WindowTracker {
    counts: Vec<u32>,
    size: u32,
}

impl WindowTracker {
    fn new(v: usize, size: u32) -> Self {
        WindowTracker {
            counts: vec![0; v],
            size,
        }
    }

    /// Adds `v` to the partial block; returns false (after undoing
    /// nothing — caller pops) when some settled outside vertex died.
    /// `settled_below`: ids below this can no longer join the block.
    /// `chosen_mask` marks current members (they are exempt).
    fn push(
        &mut self,
        g: &Graph,
        v: usize,
        chosen_len_after: u32,
        settled_below: u32,
        chosen_mask: &[u64],
    ) -> bool {
        let half = self.size / 2;
        let r = self.size - chosen_len_after;
        let mut alive = true;
        for w in g.neighbors(v) {
            self.counts[w] += 1;
            if !alive {
                continue;
            }
            if (w as u32) < settled_below && chosen_mask[w / 64] >> (w % 64) & 1 == 0 {
                let p = self.counts[w];
                let reach_half = p <= half && p + r >= half;
                let reach_full = p + r >= self.size;
                if p >= 1 && !reach_half && !reach_full {
                    alive = false;
                }
            }
        }
        alive
    }

    fn pop(&mut self, g: &Graph, v: usize) {
        for w in g.neighbors(v) {
            self.counts[w] -= 1;
        }
    }
}

struct ShapeScan<'g> {
    g: &'g Graph,
    words: usize,
    size: u32,
    anchor: Option<u32>,
    tracker: WindowTracker,
    chosen: Vec<u32>,
    chosen_mask: [u64; MAX_WORDS],
    out: Vec<Vec<u32>>,
    nodes: u64,
}

impl<'g> ShapeScan<'g> {
    fn new(g: &'g Graph, size: u32, anchor: Option<u32>) -> Self {
        ShapeScan {
            g,
            words: g.row_words(),
            size,
            anchor,
            tracker: WindowTracker::new(g.vertex_count(), size),
            chosen: Vec::with_capacity(size as usize),
            chosen_mask: [0; MAX_WORDS],
            out: Vec::new(),
            nodes: 0,
        }
    }

    fn push(&mut self, v: u32, settled_below: u32) -> bool {
        self.chosen.push(v);
        self.chosen_mask[v as usize / 64] |= 1 << (v % 64);
        self.nodes += 1;
        self.tracker.push(
            self.g,
            v as usize,
            self.chosen.len() as u32,
            settled_below,
            &self.chosen_mask,
        )
    }

    fn pop(&mut self) {
        let v = self.chosen.pop().expect("pop matches push");
        self.chosen_mask[v as usize / 64] &= !(1 << (v % 64));
        self.tracker.pop(self.g, v as usize);
    }

    /// Emit the current block if it passes the full window check (the
    /// tracker only sees settled vertices, so re-check everything).
    fn emit(&mut self) {
        let mut mask = vec![0u64; self.words];
        for &v in &self.chosen {
            mask[v as usize / 64] |= 1 << (v % 64);
        }
        if self
            .anchor
            .is_some_and(|a| mask[a as usize / 64] >> (a % 64) & 1 == 0)
        {
            return;
        }
        if fast_block_check(self.g, &self.chosen, &mask).is_some() {
            self.out.push(self.chosen.clone());
        }
    }

    // -- independent sets and cliques: ascending extension with a pool --

    fn regular_pool_rec(&mut self, pool: &[u64], want_neighbors: bool) {
        if self.chosen.len() == self.size as usize {
            self.emit();
            return;
        }
        let lowest = *self.chosen.last().map_or(&0, |l| l);
        for w in lowest as usize / 64..self.words {
            let mut bits = pool[w];
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let x = (w * 64 + b) as u32;
                // Candidates already exclude ids <= last by pool masking.
                let alive = self.push(x, x);
                if alive {
                    let mut next_pool = [0u64; MAX_WORDS];
                    let row = self.g.row(x as usize);
                    for i in 0..self.words {
                        let rel = if want_neighbors { row[i] } else { !row[i] };
                        next_pool[i] = pool[i] & rel;
                    }
                    // Keep only ids above x.
                    mask_below_inclusive(&mut next_pool[..self.words], x);
                    let words = self.words;
                    self.regular_pool_rec(&next_pool[..words], want_neighbors);
                }
                self.pop();
            }
        }
    }

    fn scan_regular(&mut self, want_neighbors: bool) {
        let mut pool = vec![u64::MAX; self.words];
        trim_to_vertex_count(&mut pool, self.g.vertex_count());
        self.regular_pool_rec(&pool, want_neighbors);
    }

    // -- induced matchings: ascending by first endpoint --

    fn matching_rec(&mut self, first_min: u32, blocked: &[u64]) {
        if self.chosen.len() == self.size as usize {
            self.emit();
            return;
        }
        let v = self.g.vertex_count() as u32;
        for a in first_min..v {
            if blocked[a as usize / 64] >> (a % 64) & 1 == 1 {
                continue;
            }
            let ra = self.g.row(a as usize);
            let alive_a = self.push(a, a);
            if alive_a {
                for bw in 0..self.words {
                    let mut bits = ra[bw] & !blocked[bw];
                    while bits != 0 {
                        let bit = bits.trailing_zeros() as usize;
                        bits &= bits - 1;
                        let b = (bw * 64 + bit) as u32;
                        if b <= a {
                            continue;
                        }
                        // Settled: everything below a can never join now.
                        let alive_b = self.push(b, a);
                        if alive_b {
                            let mut next_blocked = [0u64; MAX_WORDS];
                            let rb = self.g.row(b as usize);
                            for i in 0..self.words {
                                next_blocked[i] = blocked[i]
                                    | ra[i]
                                    | rb[i]
                                    | self.chosen_mask[i];
                            }
                            let words = self.words;
                            self.matching_rec(a + 1, &next_blocked[..words]);
                        }
                        self.pop();
                    }
                }
            }
            self.pop();
        }
    }

    fn scan_matchings(&mut self) {
        let blocked = vec![0u64; self.words];
        self.matching_rec(0, &blocked);
    }

    // -- induced cycles (C4 and C6) --

    fn scan_c4(&mut self) {
        let v = self.g.vertex_count();
        for v1 in 0..v as u32 {
            if !self.push(v1, v1) {
                self.pop();
                continue;
            }
            let r1 = self.g.row(v1 as usize).to_vec();
            for v2 in self.g.neighbors(v1 as usize) {
                let v2 = v2 as u32;
                if v2 <= v1 {
                    continue;
                }
                if !self.push(v2, v1) {
                    self.pop();
                    continue;
                }
                for v4 in self.g.neighbors(v1 as usize) {
                    let v4 = v4 as u32;
                    // v2 < v4 fixes the traversal direction.
                    if v4 <= v2 || self.g.adjacent(v2 as usize, v4 as usize) {
                        continue;
                    }
                    if !self.push(v4, v1) {
                        self.pop();
                        continue;
                    }
                    // v3: common neighbor of v2 and v4, not v1's neighbor.
                    let r2 = self.g.row(v2 as usize);
                    let r4 = self.g.row(v4 as usize);
                    for w in 0..self.words {
                        let mut bits = r2[w] & r4[w] & !r1[w] & !self.chosen_mask[w];
                        while bits != 0 {
                            let bit = bits.trailing_zeros() as usize;
                            bits &= bits - 1;
                            let v3 = (w * 64 + bit) as u32;
                            if v3 <= v1 || v3 == v1 {
                                continue;
                            }
                            if self.push(v3, v1) {
                                self.emit();
                            }
                            self.pop();
                        }
                    }
                    self.pop();
                }
                self.pop();
            }
            self.pop();
        }
    }

    fn c6_rec(&mut self, v1: u32, banned: &[u64], depth: usize) {
        // chosen = [v1, v2, ..., v_depth]; extend to depth 6 then close.
        let last = *self.chosen.last().unwrap() as usize;
        let rl = self.g.row(last);
        let r1 = self.g.row(v1 as usize);
        let mut cand = [0u64; MAX_WORDS];
        for i in 0..self.words {
            cand[i] = rl[i] & !banned[i] & !self.chosen_mask[i];
            // Middle vertices must avoid v1; the closer must hit it.
            if depth + 1 == 6 {
                cand[i] &= r1[i];
            } else {
                cand[i] &= !r1[i];
            }
        }
        mask_below_inclusive(&mut cand[..self.words], v1);
        for w in 0..self.words {
            let mut bits = cand[w];
            while bits != 0 {
                let bit = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let x = (w * 64 + bit) as u32;
                if depth + 1 == 6 {
                    // Direction dedup: second vertex smaller than last.
                    if self.chosen[1] > x {
                        continue;
                    }
                    if self.push(x, v1) {
                        self.emit();
                    }
                    self.pop();
                } else {
                    if self.push(x, v1) {
                        // Future vertices may not neighbor `last` anymore
                        // (only consecutive cycle edges are allowed).
                        let mut next_banned = [0u64; MAX_WORDS];
                        for i in 0..self.words {
                            next_banned[i] = banned[i] | rl[i];
                        }
                        let words = self.words;
                        self.c6_rec(v1, &next_banned[..words], depth + 1);
                    }
                    self.pop();
                }
            }
        }
    }

    fn scan_c6(&mut self) {
        for v1 in 0..self.g.vertex_count() as u32 {
            if self.push(v1, v1) {
                let banned = vec![0u64; self.words];
                self.c6_rec(v1, &banned, 1);
            }
            self.pop();
        }
    }
}

fn mask_below_inclusive(mask: &mut [u64], x: u32) {
    let w = x as usize / 64;
    for m in mask.iter_mut().take(w) {
        *m = 0;
    }
    if w < mask.len() {
        mask[w] &= !(((1u128 << (x % 64 + 1)) - 1) as u64);
    }
}

fn trim_to_vertex_count(mask: &mut [u64], v: usize) {
    let bits = mask.len() * 64;
    for b in v..bits {
        mask[b / 64] &= !(1 << (b % 64));
    }
}

/// Shape-directed enumeration. Every emitted block re-passes the full
/// switching-condition check, so shape narrowing can hide candidates but
/// never invent them; anchored configs filter at emission.
pub fn search_backtrack(g: &Graph, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    cfg.validate()?;
    if g.vertex_count() > BACKTRACK_VERTEX_BUDGET {
        return Err(SearchError::BadConfig(format!(
            "backtrack supports up to {BACKTRACK_VERTEX_BUDGET} vertices, graph has {}",
            g.vertex_count()
        )));
    }
    if let Some(a) = cfg.anchor {
        if (a as usize) >= g.vertex_count() {
            return Err(SearchError::BadConfig(format!(
                "anchor {a} outside 0..{}",
                g.vertex_count()
            )));
        }
    }
    let mut shapes = cfg.shapes.clone();
    shapes.sort_by_key(|s| BlockShape::ALL.iter().position(|x| x == s));
    shapes.dedup();
    let (raw, nodes): (Vec<Vec<u32>>, u64) = run_in_pool(cfg.workers, || {
        let scans: Vec<(Vec<Vec<u32>>, u64)> = shapes
            .par_iter()
            .map(|shape| {
                let mut scan = ShapeScan::new(g, cfg.size, cfg.anchor);
                match shape {
                    BlockShape::IndependentSet => scan.scan_regular(false),
                    BlockShape::Clique => scan.scan_regular(true),
                    BlockShape::InducedMatching => scan.scan_matchings(),
                    BlockShape::InducedCycle => match cfg.size {
                        4 => scan.scan_c4(),
                        6 => scan.scan_c6(),
                        _ => unreachable!("validated above"),
                    },
                }
                (scan.out, scan.nodes)
            })
            .collect();
        let mut raw = Vec::new();
        let mut nodes = 0;
        for (blocks, n) in scans {
            raw.extend(blocks);
            nodes += n;
        }
        (raw, nodes)
    });
    Ok(finalize(g, raw, cfg.limit, nodes as u128, coverage_for(g, cfg)))
}

// ---------------------------------------------------------------------------
// Reference blocks
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
#[error("reference block {block}: {detail}")]
pub struct FixtureError {
    pub block: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureBlockReport {
    pub sets: Vec<Vec<u8>>,
    pub valid: bool,
    pub nontrivial: bool,
    pub induced_degrees: Vec<u32>,
    pub induced_component_sizes: Vec<usize>,
    /// Degrees under the nonempty-intersection relation on the 8 sets.
    pub intersecting_degrees: Vec<u32>,
    pub cospectral_all_primes: bool,
    pub noniso: NonIsoCertificate,
    pub exact_iso_nonisomorphic: bool,
    pub exact_iso_nodes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureReport {
    pub spec: String,
    pub blocks: Vec<FixtureBlockReport>,
}

pub const FIXTURE_BLOCK_1: [[u8; 4]; 8] = [
    [1, 2, 3, 4],
    [1, 2, 5, 6],
    [1, 2, 3, 5],
    [1, 2, 4, 6],
    [3, 4, 7, 8],
    [3, 5, 7, 8],
    [4, 6, 7, 8],
    [5, 6, 7, 8],
];

pub const FIXTURE_BLOCK_2: [[u8; 4]; 8] = [
    [1, 2, 3, 4],
    [1, 2, 3, 5],
    [1, 4, 6, 7],
    [1, 5, 6, 7],
    [2, 3, 4, 8],
    [2, 3, 5, 8],
    [4, 6, 7, 8],
    [5, 6, 7, 8],
];

/// Builds the middle-layer graph on 4-subsets of [8] with adjacency at
/// intersection size 2 and checks the two published size-8 switching
/// blocks end to end: validity, induced structure (each is a union of two
/// 4-cycles whose sets pair up under nonempty intersection into a
/// 6-regular relation), cospectral mates, and genuine non-isomorphism.
///
/// The mates agree on the whole pattern census — the invariant chain is
/// honestly inconclusive on them — so the non-isomorphism assertion rests
/// on the exact decider.
pub fn verify_fixture_sets() -> Result<FixtureReport, FixtureError> {
    let spec = JohnsonSpec::new(8, 4, [2]).expect("static spec");
    let g = crate::graph::build_johnson(&spec).expect("56-bit ground set");
    let mut blocks = Vec::new();
    for (bi, sets) in [FIXTURE_BLOCK_1, FIXTURE_BLOCK_2].iter().enumerate() {
        let err = |detail: String| FixtureError {
            block: bi + 1,
            detail,
        };
        let verts: Vec<u32> = sets
            .iter()
            .map(|s| KSubset::from_elems_1based(s, 8).rank() as u32)
            .collect();
        let p = SwitchingPartition::single_block(g.vertex_count(), verts.clone())
            .map_err(|e| err(e.to_string()))?;
        let report = validate_partition(&g, &p);
        if !report.valid || !report.nontrivial {
            return Err(err(format!(
                "expected a valid nontrivial switching set, got valid={} nontrivial={}",
                report.valid, report.nontrivial
            )));
        }

        let induced_degrees: Vec<u32> = verts
            .iter()
            .map(|&u| {
                verts
                    .iter()
                    .filter(|&&w| w != u && g.adjacent(u as usize, w as usize))
                    .count() as u32
            })
            .collect();
        if induced_degrees.iter().any(|&d| d != 2) {
            return Err(err(format!(
                "induced subgraph must be 2-regular, degrees {induced_degrees:?}"
            )));
        }
        let induced_component_sizes = component_sizes(&g, &verts);
        if induced_component_sizes != vec![4, 4] {
            return Err(err(format!(
                "induced subgraph must be two 4-cycles, components {induced_component_sizes:?}"
            )));
        }

        let intersecting_degrees: Vec<u32> = sets
            .iter()
            .map(|a| {
                sets.iter()
                    .filter(|&b| {
                        b != a && a.iter().any(|x| b.contains(x))
                    })
                    .count() as u32
            })
            .collect();
        if intersecting_degrees.iter().any(|&d| d != 6) {
            return Err(err(format!(
                "sets must form a 6-regular intersecting relation, degrees {intersecting_degrees:?}"
            )));
        }

        let mate = apply_switch_prevalidated(&g, &p, &report);
        let cospec = cospectral(&g, &mate).map_err(|e| err(e.to_string()))?;
        let cospectral_all_primes =
            matches!(cospec.verdict, Cospectrality::CospectralModPrimes);
        if !cospectral_all_primes {
            return Err(err("mate must be cospectral mod all certificate primes".into()));
        }
        let noniso = noniso_certificate(&g, &mate);
        let iso = exact_iso(&g, &mate).map_err(|e| err(e.to_string()))?;
        let exact_iso_nonisomorphic = iso.outcome == IsoOutcome::NotIsomorphic;
        if !exact_iso_nonisomorphic {
            return Err(err("mate must be non-isomorphic".into()));
        }

        blocks.push(FixtureBlockReport {
            sets: sets.iter().map(|s| s.to_vec()).collect(),
            valid: report.valid,
            nontrivial: report.nontrivial,
            induced_degrees,
            induced_component_sizes,
            intersecting_degrees,
            cospectral_all_primes,
            noniso,
            exact_iso_nonisomorphic,
            exact_iso_nodes: iso.nodes_explored,
        });
    }
    Ok(FixtureReport {
        spec: spec.to_string(),
        blocks,
    })
}

fn component_sizes(g: &Graph, verts: &[u32]) -> Vec<usize> {
    let mut seen = vec![false; verts.len()];
    let mut sizes = Vec::new();
    for start in 0..verts.len() {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            for (j, &w) in verts.iter().enumerate() {
                if !seen[j] && g.adjacent(verts[i] as usize, w as usize) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable();
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_johnson;
    use crate::switching::{family_a, family_b};

    #[test]
    fn config_validation() {
        let mut cfg = SearchConfig::exhaustive(5);
        assert!(matches!(
            search_exhaustive(&Graph::from_edges(4, &[]), &cfg),
            Err(SearchError::BadConfig(_))
        ));
        cfg.size = 4;
        cfg.mode = SearchMode::Backtrack;
        cfg.shapes.clear();
        assert!(matches!(
            search_backtrack(&Graph::from_edges(4, &[]), &cfg),
            Err(SearchError::BadConfig(_))
        ));
        let mut cfg = SearchConfig::backtrack(8);
        cfg.shapes = vec![BlockShape::InducedCycle];
        assert!(matches!(
            search_backtrack(&Graph::from_edges(12, &[]), &cfg),
            Err(SearchError::BadConfig(_))
        ));
    }

    #[test]
    fn budget_estimate_refuses_up_front() {
        // C(120, 6) ≈ 3.65e9 exceeds the cap without the anchor reduction.
        let g = build_johnson(&"10,3,{0}".parse().unwrap()).unwrap();
        let mut cfg = SearchConfig::exhaustive(6);
        cfg.anchor = None;
        match search_exhaustive(&g, &cfg) {
            Err(SearchError::Budget { estimated, .. }) => {
                assert_eq!(estimated, binom_small(120, 6));
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn kneser_9_3_size4_is_empty_and_coverage_claims_transitivity() {
        let g = build_johnson(&"9,3,{0}".parse().unwrap()).unwrap();
        let out = search_exhaustive(&g, &SearchConfig::exhaustive(4)).unwrap();
        assert!(out.results.is_empty());
        assert!(out.trivial_blocks.is_empty());
        assert_eq!(out.coverage, Coverage::AnchoredTransitive);
        assert_eq!(out.candidates_examined, binom_small(83, 3));
    }

    #[test]
    fn planted_family_block_is_found_through_the_anchor() {
        // J_{0,1}(6,3) holds the all-(2m+1)-subsets-of-[2m+2] block at
        // m=1; {1,2,3} has rank 0, so the anchored scan must hit it.
        let inst = family_a(1, 6, true).unwrap();
        let g = build_johnson(&inst.spec).unwrap();
        let out = search_exhaustive(&g, &SearchConfig::exhaustive(4)).unwrap();
        let want: Vec<u32> = {
            let mut b = inst.block.clone();
            b.sort_unstable();
            b
        };
        assert!(
            out.results.iter().any(|r| r.block == want),
            "family block missing from {:?}",
            out.results.iter().map(|r| &r.block).collect::<Vec<_>>()
        );
        for r in &out.results {
            assert!(r.validation.valid && r.validation.nontrivial);
        }
    }

    #[test]
    fn exhaustive_results_do_not_depend_on_worker_count() {
        let inst = family_b(0, 3, false).unwrap();
        let g = build_johnson(&inst.spec).unwrap();
        let mut one = SearchConfig::exhaustive(4);
        one.workers = Some(1);
        let mut three = SearchConfig::exhaustive(4);
        three.workers = Some(3);
        let a = search_exhaustive(&g, &one).unwrap();
        let b = search_exhaustive(&g, &three).unwrap();
        let blocks = |o: &SearchOutcome| {
            (
                o.results.iter().map(|r| r.block.clone()).collect::<Vec<_>>(),
                o.trivial_blocks.clone(),
            )
        };
        assert_eq!(blocks(&a), blocks(&b));
        let statuses: Vec<MateStatus> = a.results.iter().map(|r| r.mate_status).collect();
        let statuses_b: Vec<MateStatus> = b.results.iter().map(|r| r.mate_status).collect();
        assert_eq!(statuses, statuses_b);
    }

    #[test]
    fn backtrack_matches_exhaustive_on_the_middle_layer_graph() {
        // Size-4 blocks induce a 0/1/2/3-regular graph on 4 vertices, so
        // the four shapes are exhaustive at this size and the two modes
        // must agree exactly. Anchored to keep mate work small.
        let g = build_johnson(&"8,4,{2}".parse().unwrap()).unwrap();
        let ex = search_exhaustive(&g, &SearchConfig::exhaustive(4)).unwrap();
        let bt = search_backtrack(&g, &SearchConfig::backtrack(4)).unwrap();
        let blocks =
            |o: &SearchOutcome| o.results.iter().map(|r| r.block.clone()).collect::<Vec<_>>();
        assert_eq!(blocks(&ex), blocks(&bt));
        assert!(!ex.results.is_empty());
        assert!(
            ex.results.iter().all(|r| r.mate_status == MateStatus::Isomorphic),
            "every switched mate of this graph is isomorphic to it"
        );
    }

    #[test]
    fn backtrack_shape_subsets_only_remove_results() {
        let g = build_johnson(&"8,4,{2}".parse().unwrap()).unwrap();
        let all = search_backtrack(&g, &SearchConfig::backtrack(4)).unwrap();
        let mut only_cycles = SearchConfig::backtrack(4);
        only_cycles.shapes = vec![BlockShape::InducedCycle];
        let cycles = search_backtrack(&g, &only_cycles).unwrap();
        let all_blocks: Vec<_> = all.results.iter().map(|r| &r.block).collect();
        for r in &cycles.results {
            assert!(all_blocks.contains(&&r.block));
        }
        assert!(cycles.results.len() <= all.results.len());
    }

    #[test]
    fn clique_shape_on_triangle_free_graph_is_empty() {
        let g = build_johnson(&"8,3,{0}".parse().unwrap()).unwrap();
        let mut cfg = SearchConfig::backtrack(4);
        cfg.shapes = vec![BlockShape::Clique];
        cfg.anchor = None;
        let out = search_backtrack(&g, &cfg).unwrap();
        assert!(out.results.is_empty() && out.trivial_blocks.is_empty());
    }

    #[test]
    fn family_b_block_appears_with_nonisomorphic_mate() {
        // K(8,3): the prefix block is one of the anchored size-6 results
        // and its mate is provably different.
        let inst = family_b(0, 3, false).unwrap();
        let g = build_johnson(&inst.spec).unwrap();
        let out = search_exhaustive(&g, &SearchConfig::exhaustive(6)).unwrap();
        let mut want = inst.block.clone();
        want.sort_unstable();
        let hit = out
            .results
            .iter()
            .find(|r| r.block == want)
            .expect("prefix block not found");
        assert_eq!(hit.mate_status, MateStatus::Nonisomorphic);
        assert!(matches!(
            hit.mate_evidence,
            MateEvidence::Invariant { .. } | MateEvidence::ExactIso { .. }
        ));
    }

    #[test]
    fn limit_trims_results_deterministically() {
        let g = build_johnson(&"8,4,{2}".parse().unwrap()).unwrap();
        let full = search_exhaustive(&g, &SearchConfig::exhaustive(4)).unwrap();
        let mut cfg = SearchConfig::exhaustive(4);
        cfg.limit = Some(3);
        let trimmed = search_exhaustive(&g, &cfg).unwrap();
        assert_eq!(trimmed.results.len(), 3.min(full.results.len()));
        for (a, b) in trimmed.results.iter().zip(&full.results) {
            assert_eq!(a.block, b.block);
        }
    }

    #[test]
    fn fixture_blocks_verify_end_to_end() {
        let report = verify_fixture_sets().unwrap();
        assert_eq!(report.blocks.len(), 2);
        for b in &report.blocks {
            assert!(b.valid && b.nontrivial);
            assert!(b.induced_degrees.iter().all(|&d| d == 2));
            assert_eq!(b.induced_component_sizes, vec![4, 4]);
            assert!(b.intersecting_degrees.iter().all(|&d| d == 6));
            assert!(b.cospectral_all_primes);
            // The census cannot see the difference; the exact decider can.
            assert_eq!(b.noniso, NonIsoCertificate::Inconclusive);
            assert!(b.exact_iso_nonisomorphic);
        }
    }
}
