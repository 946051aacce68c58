//! Godsil-McKay switching: partition validation, the switch itself, the two
//! closed-form block families, the multi-block Johnson partition, and the
//! analytic neighbor-count predictors.
//!
//! A partition `C_1 ∪ … ∪ C_t ∪ D` of the vertices admits GM switching when
//! (1) any two vertices of `C_i` have the same number of neighbors in `C_j`
//! for all `i, j`, and (2) every vertex of `D` has `0`, `|C_i|/2`, or
//! `|C_i|` neighbors in each `C_i`. Switching complements, for each
//! half-class vertex `u ∈ D`, its adjacency within the corresponding block;
//! the result is cospectral with the original graph.

use crate::combin::{binom, binom_small, KSubset};
use crate::graph::{words_for, Graph, GraphError, JohnsonSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("block {0} is empty")]
    EmptyBlock(usize),
    #[error("vertex {vertex} appears in blocks {first} and {second}")]
    OverlappingBlocks {
        vertex: u32,
        first: usize,
        second: usize,
    },
    #[error("vertex {vertex} in block {block} repeats")]
    DuplicateVertex { vertex: u32, block: usize },
    #[error("vertex {vertex} outside 0..{vertices}")]
    VertexOutOfRange { vertex: u32, vertices: usize },
}

#[derive(Debug, Error)]
pub enum SwitchError {
    #[error("partition fails the switching conditions: {0} violation(s)")]
    InvalidPartition(usize),
}

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("family {family} bounds violated: {detail}")]
    Bounds { family: char, detail: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One switching block: sorted vertex list plus a bitmask in the row layout
/// of the host graph.
#[derive(Debug, Clone)]
pub struct Block {
    verts: Vec<u32>,
    mask: Vec<u64>,
}

impl Block {
    pub fn verts(&self) -> &[u32] {
        &self.verts
    }

    pub fn mask(&self) -> &[u64] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn contains(&self, v: u32) -> bool {
        self.mask[v as usize / 64] >> (v % 64) & 1 == 1
    }
}

/// Blocks `C_1..C_t`; the rest of the vertex set is implicitly `D`.
#[derive(Debug, Clone)]
pub struct SwitchingPartition {
    vertices: usize,
    blocks: Vec<Block>,
}

impl SwitchingPartition {
    pub fn new(vertices: usize, blocks: Vec<Vec<u32>>) -> Result<Self, PartitionError> {
        let words = words_for(vertices);
        let mut seen = vec![usize::MAX; vertices];
        let mut built = Vec::with_capacity(blocks.len());
        for (bi, mut verts) in blocks.into_iter().enumerate() {
            if verts.is_empty() {
                return Err(PartitionError::EmptyBlock(bi));
            }
            verts.sort_unstable();
            let mut mask = vec![0u64; words];
            let mut prev: Option<u32> = None;
            for &v in &verts {
                if (v as usize) >= vertices {
                    return Err(PartitionError::VertexOutOfRange {
                        vertex: v,
                        vertices,
                    });
                }
                if prev == Some(v) {
                    return Err(PartitionError::DuplicateVertex {
                        vertex: v,
                        block: bi,
                    });
                }
                prev = Some(v);
                if seen[v as usize] != usize::MAX {
                    return Err(PartitionError::OverlappingBlocks {
                        vertex: v,
                        first: seen[v as usize],
                        second: bi,
                    });
                }
                seen[v as usize] = bi;
                mask[v as usize / 64] |= 1 << (v % 64);
            }
            built.push(Block { verts, mask });
        }
        Ok(SwitchingPartition {
            vertices,
            blocks: built,
        })
    }

    pub fn single_block(vertices: usize, block: Vec<u32>) -> Result<Self, PartitionError> {
        SwitchingPartition::new(vertices, vec![block])
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_of(&self, v: u32) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(v))
    }

    pub fn block_lists(&self) -> Vec<Vec<u32>> {
        self.blocks.iter().map(|b| b.verts.clone()).collect()
    }
}

/// Where a `D`-vertex's neighbor count in one block landed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborClass {
    Zero,
    Half,
    Full,
    /// The offending count — this vertex/block pair breaks condition (2).
    Violation(u32),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cond1Violation {
    pub block_i: usize,
    pub block_j: usize,
    pub vertex: u32,
    pub count: u32,
    pub expected: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cond2Violation {
    pub vertex: u32,
    pub block: usize,
    pub count: u32,
    pub half: u32,
    pub full: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DVertexClasses {
    pub vertex: u32,
    pub classes: Vec<NeighborClass>,
}

/// Outcome of checking both switching conditions; collects every violation
/// rather than stopping at the first, for search diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    /// Some `D`-vertex sits in a half class, so switching actually rewires.
    pub nontrivial: bool,
    pub block_sizes: Vec<usize>,
    /// `inner_counts[i][j]` = the constant neighbor count from `C_i` into
    /// `C_j` (None when condition (1) fails for that pair).
    pub inner_counts: Vec<Vec<Option<u32>>>,
    /// Per-D-vertex neighbor count classes, one entry per block.
    pub d_classes: Vec<DVertexClasses>,
    pub cond1_violations: Vec<Cond1Violation>,
    pub cond2_violations: Vec<Cond2Violation>,
}

impl ValidationReport {
    pub fn violation_count(&self) -> usize {
        self.cond1_violations.len() + self.cond2_violations.len()
    }

    /// Vertices whose within-block adjacency the switch will complement,
    /// paired with their block index.
    pub fn half_class_vertices(&self) -> Vec<(u32, usize)> {
        let mut out = Vec::new();
        for d in &self.d_classes {
            for (bi, class) in d.classes.iter().enumerate() {
                if *class == NeighborClass::Half {
                    out.push((d.vertex, bi));
                }
            }
        }
        out
    }
}

/// Checks both switching conditions for `p` against `g`.
pub fn validate_partition(g: &Graph, p: &SwitchingPartition) -> ValidationReport {
    assert_eq!(
        g.vertex_count(),
        p.vertices(),
        "partition built for a different vertex count"
    );
    let t = p.blocks.len();
    let mut inner_counts = vec![vec![None; t]; t];
    let mut cond1_violations = Vec::new();

    for (i, ci) in p.blocks.iter().enumerate() {
        for (j, cj) in p.blocks.iter().enumerate() {
            let mut expected: Option<u32> = None;
            let mut ok = true;
            for &u in &ci.verts {
                let count = g.neighbors_in_mask(u as usize, &cj.mask);
                match expected {
                    None => expected = Some(count),
                    Some(e) if e != count => {
                        ok = false;
                        cond1_violations.push(Cond1Violation {
                            block_i: i,
                            block_j: j,
                            vertex: u,
                            count,
                            expected: e,
                        });
                    }
                    _ => {}
                }
            }
            if ok {
                inner_counts[i][j] = expected;
            }
        }
    }

    let mut d_classes = Vec::new();
    let mut cond2_violations = Vec::new();
    let mut nontrivial = false;
    for u in 0..g.vertex_count() as u32 {
        if p.block_of(u).is_some() {
            continue;
        }
        let mut classes = Vec::with_capacity(t);
        for (bi, block) in p.blocks.iter().enumerate() {
            let count = g.neighbors_in_mask(u as usize, &block.mask);
            let full = block.len() as u32;
            let class = if count == 0 {
                NeighborClass::Zero
            } else if count == full {
                NeighborClass::Full
            } else if full % 2 == 0 && count == full / 2 {
                nontrivial = true;
                NeighborClass::Half
            } else {
                cond2_violations.push(Cond2Violation {
                    vertex: u,
                    block: bi,
                    count,
                    half: full / 2,
                    full,
                });
                NeighborClass::Violation(count)
            };
            classes.push(class);
        }
        d_classes.push(DVertexClasses { vertex: u, classes });
    }

    ValidationReport {
        valid: cond1_violations.is_empty() && cond2_violations.is_empty(),
        nontrivial,
        block_sizes: p.blocks.iter().map(Block::len).collect(),
        inner_counts,
        d_classes,
        cond1_violations,
        cond2_violations,
    }
}

/// Applies the switch: every half-class `D`-vertex has its adjacency inside
/// the corresponding block complemented; everything else is untouched. The
/// result has the same degree sequence and the same spectrum as `g`.
///
/// Validates first and refuses invalid partitions.
pub fn apply_switch(g: &Graph, p: &SwitchingPartition) -> Result<Graph, SwitchError> {
    let report = validate_partition(g, p);
    if !report.valid {
        return Err(SwitchError::InvalidPartition(report.violation_count()));
    }
    Ok(apply_switch_prevalidated(g, p, &report))
}

/// Switch application when the caller already holds a VALID report for
/// exactly this graph/partition pair.
pub fn apply_switch_prevalidated(
    g: &Graph,
    p: &SwitchingPartition,
    report: &ValidationReport,
) -> Graph {
    debug_assert!(report.valid);
    let words = g.row_words();
    let mut rows = g.rows_cloned();
    for (u, bi) in report.half_class_vertices() {
        let block = &p.blocks[bi];
        let base = u as usize * words;
        for (wi, &m) in block.mask.iter().enumerate() {
            rows[base + wi] ^= m;
        }
        for &c in &block.verts {
            rows[c as usize * words + u as usize / 64] ^= 1 << (u % 64);
        }
    }
    Graph::from_rows(
        g.vertex_count(),
        rows,
        g.labels().map(<[KSubset]>::to_vec),
        None,
    )
}

// ---------------------------------------------------------------------------
// Closed-form families
// ---------------------------------------------------------------------------

/// A constructed family instance: host parameters, the switching block (as
/// vertex indices of the rank ordering), and the named witness subsets the
/// analytic predictors talk about.
#[derive(Debug, Clone)]
pub struct FamilyInstance {
    pub spec: JohnsonSpec,
    pub block: Vec<u32>,
    pub witnesses: Vec<(&'static str, KSubset)>,
}

impl FamilyInstance {
    pub fn partition(&self) -> SwitchingPartition {
        SwitchingPartition::single_block(
            self.spec.vertex_count() as usize,
            self.block.clone(),
        )
        .expect("family blocks are within range and duplicate-free")
    }

    pub fn witness(&self, name: &str) -> KSubset {
        self.witnesses
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, s)| *s)
            .unwrap_or_else(|| panic!("no witness named {name}"))
    }

    /// Vertex index of a witness under the rank ordering.
    pub fn witness_vertex(&self, name: &str) -> usize {
        self.witness(name).rank() as usize
    }
}

/// Family over `J_{0..m}(n, 2m+1)`: the block is all `(2m+1)`-subsets of
/// `[2m+2]`. Published bounds `m ≥ 2`, `n ≥ 4m+2`; `unchecked` skips the
/// `m ≥ 2` bound without asserting anything outside it.
pub fn family_a(m: u32, n: u32, unchecked: bool) -> Result<FamilyInstance, FamilyError> {
    if !unchecked && m < 2 {
        return Err(FamilyError::Bounds {
            family: 'A',
            detail: format!("m = {m} < 2 (pass --unchecked to construct anyway)"),
        });
    }
    if m < 1 {
        return Err(FamilyError::Bounds {
            family: 'A',
            detail: "m = 0 gives k = 1, below the k >= 2 vertex type".into(),
        });
    }
    if n < 4 * m + 2 {
        return Err(FamilyError::Bounds {
            family: 'A',
            detail: format!("n = {n} < 4m+2 = {} (witness v needs it)", 4 * m + 2),
        });
    }
    if n > 64 {
        return Err(FamilyError::Bounds {
            family: 'A',
            detail: format!("n = {n} exceeds the 64-element ground set bound"),
        });
    }
    let k = 2 * m + 1;
    let spec = JohnsonSpec::new(n as u8, k as u8, 0..=m as u8)?;
    // All (2m+1)-subsets of [2m+2]: drop each element of [2m+2] in turn.
    let ground = (1u64 << (2 * m + 2)) - 1;
    let mut block: Vec<u32> = (0..2 * m + 2)
        .map(|drop| KSubset::from_bits(ground & !(1 << drop), spec.n).rank() as u32)
        .collect();
    block.sort_unstable();
    let c0 = KSubset::from_bits((1u64 << k) - 1, spec.n);
    let v_bits = ((1u64 << (4 * m + 2)) - 1) ^ ((1u64 << (2 * m + 1)) - 1);
    let v = KSubset::from_bits(v_bits, spec.n);
    debug_assert_eq!(v.k() as u32, k);
    Ok(FamilyInstance {
        spec,
        block,
        witnesses: vec![("c0", c0), ("v", v)],
    })
}

/// Family over `J_{0..m}(3k−2m−1, k)`: the block is every k-subset
/// containing the prefix `[k−1]`. Published bounds `m ≥ 0`,
/// `k ≥ max(m+2, 3)`; `unchecked` relaxes to the construction minimum
/// `k ≥ m+1`.
pub fn family_b(m: u32, k: u32, unchecked: bool) -> Result<FamilyInstance, FamilyError> {
    let published = k >= (m + 2).max(3);
    if !unchecked && !published {
        return Err(FamilyError::Bounds {
            family: 'B',
            detail: format!("k = {k} < max(m+2, 3) with m = {m} (pass --unchecked to construct anyway)"),
        });
    }
    if k < m + 1 || k < 2 {
        return Err(FamilyError::Bounds {
            family: 'B',
            detail: format!("k = {k}, m = {m}: witnesses need k >= m+1 and k >= 2"),
        });
    }
    let n = 3 * k - 2 * m - 1;
    if n > 64 {
        return Err(FamilyError::Bounds {
            family: 'B',
            detail: format!("n = 3k-2m-1 = {n} exceeds the 64-element ground set bound"),
        });
    }
    let spec = JohnsonSpec::new(n as u8, k as u8, 0..=m as u8)?;
    let prefix = (1u64 << (k - 1)) - 1;
    let mut block: Vec<u32> = (k..=n)
        .map(|x| KSubset::from_bits(prefix | 1 << (x - 1), spec.n).rank() as u32)
        .collect();
    block.sort_unstable();
    debug_assert_eq!(block.len() as u32, 2 * (k - m));
    let c0 = KSubset::from_bits((1u64 << k) - 1, spec.n);
    let c1 = KSubset::from_bits(prefix | 1 << k, spec.n);
    let w_bits = ((1u64 << (k - 2)) - 1) | 1 << (k - 1) | 1 << k;
    let w = KSubset::from_bits(w_bits, spec.n);
    Ok(FamilyInstance {
        spec,
        block,
        witnesses: vec![("c0", c0), ("c1", c1), ("w", w)],
    })
}

/// The multi-block partition of the Johnson graph `J(n,k) = J_{k−1}(n,k)`:
/// fix `Y = {1,2,3,4}`; for each `(k−3)`-subset `T` of `[n]∖Y` the block
/// `C_T` holds the four k-sets `T ∪ (Y∖{y})`. Yields `t = C(n−4, k−3)`
/// blocks of size 4.
pub fn johnson_multiblock(n: u32, k: u32) -> Result<(JohnsonSpec, Vec<Vec<u32>>), FamilyError> {
    if k < 3 || k + 3 > n || n > 64 {
        return Err(FamilyError::Bounds {
            family: 'J',
            detail: format!("need 3 <= k <= n-3 <= 61, got k={k} n={n}"),
        });
    }
    let spec = JohnsonSpec::new(n as u8, k as u8, [k as u8 - 1])?;
    if spec.vertex_count() > crate::graph::DEFAULT_VERTEX_BUDGET as u128 {
        return Err(FamilyError::Bounds {
            family: 'J',
            detail: format!(
                "C({n},{k}) = {} vertices exceeds the {} budget",
                spec.vertex_count(),
                crate::graph::DEFAULT_VERTEX_BUDGET
            ),
        });
    }
    let y_mask = 0b1111u64;
    let rest: Vec<u32> = (4..n).collect(); // 0-based positions 4..n-1
    let mut blocks = Vec::new();
    let mut chooser = vec![0u32; (k - 3) as usize];
    for (i, slot) in chooser.iter_mut().enumerate() {
        *slot = i as u32;
    }
    let t = binom((n - 4) as usize, (k - 3) as isize);
    for _ in 0..t {
        let t_mask: u64 = chooser.iter().map(|&i| 1u64 << rest[i as usize]).sum();
        let mut block: Vec<u32> = (0..4)
            .map(|y| KSubset::from_bits(t_mask | (y_mask & !(1 << y)), spec.n).rank() as u32)
            .collect();
        block.sort_unstable();
        blocks.push(block);
        if !chooser.is_empty() {
            crate::combin::next_colex_tuple(&mut chooser);
        }
    }
    blocks.sort();
    Ok((spec, blocks))
}

/// Outcome of probing why the prefix-block pattern does not extend past the
/// published family: on `J_{0..m}(3k−2m, k)` the natural multi-block
/// candidate leaves a witness vertex with `k−m+1` neighbors in the first
/// block — strictly between half and full — unless `m = k−2`, where the
/// witness lands inside a block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub m: u32,
    pub k: u32,
    pub n: u32,
    pub block_size: u32,
    pub witness: Vec<u8>,
    pub count_in_first_block: u32,
    pub half: u32,
    pub full: u32,
    pub witness_in_block: bool,
    /// True when the witness sits in `D` with a count outside `{0, half,
    /// full}` — the construction fails as a switching partition.
    pub fails: bool,
}

pub fn multiblock_generalization_check(m: u32, k: u32) -> Result<CounterexampleReport, FamilyError> {
    if m + 2 > k {
        return Err(FamilyError::Bounds {
            family: 'G',
            detail: format!("need 0 <= m <= k-2, got m={m} k={k}"),
        });
    }
    let n = 3 * k - 2 * m;
    if n > 64 {
        return Err(FamilyError::Bounds {
            family: 'G',
            detail: format!("ground set [{n}] exceeds the 64-element bound"),
        });
    }
    // Blocks are indexed by (k−1)-subsets i of the prefix [k]; block members
    // are i ∪ {t} for tail elements t ∈ [n]∖[k] (2(k−m) of them). The first
    // block takes i = [k−1].
    let prefix_k1 = (1u64 << (k - 1)) - 1;
    let tail: Vec<u32> = (k + 1..=n).collect();
    debug_assert_eq!(tail.len() as u32, 2 * (k - m));
    let first_block: Vec<u64> = tail.iter().map(|&t| prefix_k1 | 1 << (t - 1)).collect();

    // Witness: [m] ∪ {k} ∪ the first k−m−1 tail elements.
    let mut v_bits = ((1u64 << m) - 1) | 1 << (k - 1);
    for &t in tail.iter().take((k - m - 1) as usize) {
        v_bits |= 1 << (t - 1);
    }
    let witness = KSubset::from_bits(v_bits, n as u8);
    debug_assert_eq!(witness.k() as u32, k);

    let s_mask = (1u64 << (m + 1)) - 1; // classes {0..m}
    let count = first_block
        .iter()
        .filter(|&&c| {
            let inter = (c & v_bits).count_ones();
            c != v_bits && s_mask >> inter & 1 == 1
        })
        .count() as u32;

    // v belongs to some block exactly when it has k−1 prefix elements.
    let witness_in_block = (v_bits & ((1u64 << k) - 1)).count_ones() == k - 1;
    let full = 2 * (k - m);
    let half = k - m;
    let fails = !witness_in_block && count != 0 && count != half && count != full;
    Ok(CounterexampleReport {
        m,
        k,
        n,
        block_size: full,
        witness: witness.to_sorted_1based(),
        count_in_first_block: count,
        half,
        full,
        witness_in_block,
        fails,
    })
}

// ---------------------------------------------------------------------------
// Prefix-block counting and the parameter predicate
// ---------------------------------------------------------------------------

/// Closed-form neighbor counts into the block `C = {c : [k−2] ⊂ c}` of
/// `J_{0..m}(n,k)` for the two outside-vertex cases that are not forced to
/// 0 or |C|: case (iii) covers vertices with `m−1` prefix elements, case
/// (iv) those with `m`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct K2PrefixCounts {
    pub c_size: i128,
    /// `|C| − C(k−m+1, 2)`; None at `m = 0` where the case cannot occur.
    pub case_iii: Option<i128>,
    /// `|C| − (n−2k+m+2)(k−m) − C(k−m, 2)`.
    pub case_iv: i128,
}

pub fn k2prefix_counts(n: u32, k: u32, m: u32) -> Result<K2PrefixCounts, FamilyError> {
    if m + 2 > k {
        return Err(FamilyError::Bounds {
            family: 'P',
            detail: format!("need 0 <= m <= k-2, got m={m} k={k}"),
        });
    }
    if n < k {
        return Err(FamilyError::Bounds {
            family: 'P',
            detail: format!("need n >= k, got n={n} k={k}"),
        });
    }
    let c_size = binom_small((n - k + 2) as u64, 2) as i128;
    let case_iii = if m == 0 {
        None
    } else {
        Some(c_size - binom_small((k - m + 1) as u64, 2) as i128)
    };
    let case_iv = c_size
        - (n as i128 - 2 * k as i128 + m as i128 + 2) * (k - m) as i128
        - binom_small((k - m) as u64, 2) as i128;
    Ok(K2PrefixCounts {
        c_size,
        case_iii,
        case_iv,
    })
}

/// Solves the half-class coincidence condition `2n = 6k−3+√(8k²+1)`:
/// returns `n` when `8k²+1` is a perfect square and the division is exact.
pub fn k2prefix_predicate(k: u32) -> Option<u64> {
    let target = 8u64 * k as u64 * k as u64 + 1;
    let s = target.isqrt();
    if s * s != target {
        return None;
    }
    let num = 6 * k as u64 - 3 + s;
    (num % 2 == 0).then_some(num / 2)
}

/// Common-neighbor deltas at the family-A witnesses `(c0, v)` after
/// switching: `λ` loses `lost` vertices and gains `gained`, with
/// `delta = gained − lost = C(2m+1, m+1)·C(2m, m)` independent of `n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaPredictionA {
    pub lost: u128,
    pub gained: u128,
    pub delta: i128,
}

pub fn predict_lambda_a(m: u32, n: u32) -> Result<LambdaPredictionA, FamilyError> {
    if m < 2 || m > 60 || n < 4 * m + 2 {
        return Err(FamilyError::Bounds {
            family: 'A',
            detail: format!("predictor needs 2 <= m <= 60, n >= 4m+2; got m={m} n={n}"),
        });
    }
    let q = (n - 4 * m - 2) as u64;
    let sum_to = |hi: i64| -> u128 {
        (0..=hi)
            .map(|i| {
                binom(2 * m as usize, i as isize)
                    * binom_small(q, (m as i64 - i) as u32)
            })
            .sum()
    };
    let lost = binom(2 * m as usize + 1, m as isize) * sum_to(m as i64 - 1);
    let gained = binom(2 * m as usize + 1, m as isize + 1) * sum_to(m as i64);
    let delta = gained as i128 - lost as i128;
    debug_assert_eq!(
        delta,
        (binom(2 * m as usize + 1, m as isize + 1) * binom(2 * m as usize, m as isize)) as i128
    );
    Ok(LambdaPredictionA {
        lost,
        gained,
        delta,
    })
}

/// Common-neighbor deltas at the family-B witnesses `(c0, w)`: here the
/// switch strictly decreases `λ` (`lost > gained`), which is the published
/// non-isomorphism witness for the family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaPredictionB {
    pub lost: u128,
    pub gained: u128,
}

pub fn predict_lambda_b(m: u32, k: u32) -> Result<LambdaPredictionB, FamilyError> {
    if k < (m + 2).max(3) || k > 60 {
        return Err(FamilyError::Bounds {
            family: 'B',
            detail: format!("predictor needs max(m+2, 3) <= k <= 60; got m={m} k={k}"),
        });
    }
    let km = (k - m) as usize;
    let lost = binom(k as usize - 2, m as isize) * binom(2 * (km - 1), km as isize)
        + binom(k as usize - 2, m as isize - 1)
            * binom(2 * k as usize - 2 * m as usize - 1, km as isize);
    let gained =
        binom(k as usize - 2, m as isize - 1) * binom(2 * (km - 1), km as isize - 1);
    Ok(LambdaPredictionB { lost, gained })
}
