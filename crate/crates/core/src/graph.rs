//! `J_S(n,k)` construction and the immutable bitmask-adjacency graph type
//! shared by every other module.

use crate::combin::{self, binom, KSubset};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::str::FromStr;
use thiserror::Error;

/// Default cap on full adjacency materialization; larger graphs go through
/// [`JohnsonView`] and compute adjacency per query.
pub const DEFAULT_VERTEX_BUDGET: usize = 100_000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("vertex budget exceeded: C({n},{k}) = {vertices} > {budget}")]
    VertexBudget {
        n: u8,
        k: u8,
        vertices: u128,
        budget: usize,
    },
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

/// Parameters `(n, k, S)` of a union-of-classes Johnson scheme graph: the
/// vertices are k-subsets of `[n]`, adjacent when their intersection size
/// lies in `S ⊆ {0,…,k−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JohnsonSpec {
    pub n: u8,
    pub k: u8,
    pub s: BTreeSet<u8>,
}

impl JohnsonSpec {
    pub fn new(n: u8, k: u8, s: impl IntoIterator<Item = u8>) -> Result<Self, GraphError> {
        let spec = JohnsonSpec {
            n,
            k,
            s: s.into_iter().collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.n > 64 {
            return Err(GraphError::InvalidSpec(format!(
                "ground set [{}] exceeds the 64-element bitmask bound",
                self.n
            )));
        }
        if self.k < 2 || self.k > self.n {
            return Err(GraphError::InvalidSpec(format!(
                "need 2 <= k <= n, got k={} n={}",
                self.k, self.n
            )));
        }
        if self.s.is_empty() {
            return Err(GraphError::InvalidSpec("S must be nonempty".into()));
        }
        if let Some(&max) = self.s.iter().max() {
            if max > self.k - 1 {
                return Err(GraphError::InvalidSpec(format!(
                    "S contains {max} > k-1 = {}",
                    self.k - 1
                )));
            }
        }
        Ok(())
    }

    /// Number of vertices `C(n, k)`.
    pub fn vertex_count(&self) -> u128 {
        binom(self.n as usize, self.k as isize)
    }

    /// Every `J_S(n,k)` is regular with degree `Σ_{i∈S} C(k,i)·C(n−k,k−i)`.
    pub fn degree(&self) -> u128 {
        self.s
            .iter()
            .map(|&i| {
                binom(self.k as usize, i as isize)
                    * binom((self.n - self.k) as usize, (self.k - i) as isize)
            })
            .sum()
    }

    /// Intersection-size membership mask for the adjacency test.
    fn s_mask(&self) -> u64 {
        self.s.iter().fold(0u64, |m, &i| m | 1 << i)
    }

    /// The reflected parameters `(n, n−k, S+n−2k)`: that graph is isomorphic
    /// to this one (sending each subset to its complement maps intersection
    /// size `s` to `s + n − 2k`).
    pub fn reflect(&self) -> Result<JohnsonSpec, GraphError> {
        let shift = self.n as i16 - 2 * self.k as i16;
        let mut s = BTreeSet::new();
        for &i in &self.s {
            let j = i as i16 + shift;
            if j < 0 {
                return Err(GraphError::InvalidSpec(format!(
                    "reflection shifts class {i} to {j} < 0 (n={}, k={})",
                    self.n, self.k
                )));
            }
            s.insert(j as u8);
        }
        JohnsonSpec::new(self.n, self.n - self.k, s)
    }
}

impl std::fmt::Display for JohnsonSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let classes: Vec<String> = self.s.iter().map(|i| i.to_string()).collect();
        write!(f, "{},{},{{{}}}", self.n, self.k, classes.join(","))
    }
}

impl FromStr for JohnsonSpec {
    type Err = GraphError;

    /// Parses `n,k,{a,b,…}`, e.g. `10,5,{0,1,2}`.
    fn from_str(text: &str) -> Result<Self, GraphError> {
        let bad = |why: &str| GraphError::InvalidSpec(format!("cannot parse {text:?}: {why}"));
        let (nk, s_part) = text
            .split_once('{')
            .ok_or_else(|| bad("expected n,k,{...}"))?;
        let s_part = s_part
            .strip_suffix('}')
            .ok_or_else(|| bad("missing closing brace"))?;
        let mut nk_it = nk.trim_end_matches(',').split(',');
        let n: u8 = nk_it
            .next()
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| bad("bad n"))?;
        let k: u8 = nk_it
            .next()
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| bad("bad k"))?;
        if nk_it.next().is_some() {
            return Err(bad("too many fields before {"));
        }
        let mut s = BTreeSet::new();
        for tok in s_part.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            s.insert(tok.parse::<u8>().map_err(|_| bad("bad class value"))?);
        }
        JohnsonSpec::new(n, k, s)
    }
}

/// Immutable undirected graph stored as per-vertex neighbor bitmask rows.
#[derive(Clone)]
pub struct Graph {
    v: usize,
    words: usize,
    adj: Vec<u64>,
    degrees: Vec<u32>,
    labels: Option<Vec<KSubset>>,
    spec: Option<JohnsonSpec>,
}

/// Equality is edge-identity on the same vertex set; the label/spec
/// metadata is ignored (a switched graph equals its double switch even
/// though only one of them still carries construction parameters).
impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.v == other.v && self.adj == other.adj
    }
}

impl Eq for Graph {}

impl Graph {
    /// Builds from an edge list; vertices are `0..v`.
    pub fn from_edges(v: usize, edges: &[(u32, u32)]) -> Graph {
        let words = words_for(v);
        let mut adj = vec![0u64; v * words];
        for &(a, b) in edges {
            let (a, b) = (a as usize, b as usize);
            assert!(a < v && b < v, "edge ({a},{b}) outside 0..{v}");
            assert_ne!(a, b, "self-loop at {a}");
            adj[a * words + b / 64] |= 1 << (b % 64);
            adj[b * words + a / 64] |= 1 << (a % 64);
        }
        Graph::from_rows(v, adj, None, None)
    }

    pub(crate) fn from_rows(
        v: usize,
        adj: Vec<u64>,
        labels: Option<Vec<KSubset>>,
        spec: Option<JohnsonSpec>,
    ) -> Graph {
        let words = words_for(v);
        debug_assert_eq!(adj.len(), v * words);
        let degrees = (0..v)
            .map(|u| adj[u * words..(u + 1) * words].iter().map(|w| w.count_ones()).sum())
            .collect();
        let g = Graph {
            v,
            words,
            adj,
            degrees,
            labels,
            spec,
        };
        debug_assert!(g.check_symmetric_loop_free());
        g
    }

    fn check_symmetric_loop_free(&self) -> bool {
        for u in 0..self.v {
            if self.adjacent(u, u) {
                return false;
            }
            for w in 0..u {
                if self.adjacent(u, w) != self.adjacent(w, u) {
                    return false;
                }
            }
        }
        true
    }

    pub fn vertex_count(&self) -> usize {
        self.v
    }

    /// Words per adjacency row.
    pub fn row_words(&self) -> usize {
        self.words
    }

    pub fn row(&self, u: usize) -> &[u64] {
        &self.adj[u * self.words..(u + 1) * self.words]
    }

    pub fn adjacent(&self, u: usize, w: usize) -> bool {
        self.adj[u * self.words + w / 64] >> (w % 64) & 1 == 1
    }

    pub fn degree(&self, u: usize) -> u32 {
        self.degrees[u]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn edge_count(&self) -> u64 {
        self.degrees.iter().map(|&d| d as u64).sum::<u64>() / 2
    }

    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.edge_count() as usize);
        for u in 0..self.v {
            for w in self.neighbors_from(u, u + 1) {
                out.push((u as u32, w as u32));
            }
        }
        out
    }

    /// Neighbors of `u` that are `>= from`, ascending.
    pub fn neighbors_from(&self, u: usize, from: usize) -> impl Iterator<Item = usize> + '_ {
        let row = self.row(u);
        let words = self.words;
        (from / 64..words).flat_map(move |wi| {
            let mut w = row[wi];
            if wi == from / 64 && from % 64 != 0 {
                w &= !0u64 << (from % 64);
            }
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors_from(u, 0)
    }

    /// λ(x,y): number of common neighbors. λ(x,x) is the degree.
    pub fn common_neighbors(&self, x: usize, y: usize) -> u32 {
        self.row(x)
            .iter()
            .zip(self.row(y))
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    /// Number of neighbors of `u` inside the vertex mask `mask` (same word
    /// layout as adjacency rows).
    pub fn neighbors_in_mask(&self, u: usize, mask: &[u64]) -> u32 {
        self.row(u)
            .iter()
            .zip(mask)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    pub fn labels(&self) -> Option<&[KSubset]> {
        self.labels.as_deref()
    }

    pub fn label(&self, u: usize) -> Option<KSubset> {
        self.labels.as_ref().map(|l| l[u])
    }

    pub fn spec(&self) -> Option<&JohnsonSpec> {
        self.spec.as_ref()
    }

    /// New graph with every non-diagonal adjacency flipped. Labels and spec
    /// carry over with `S` complemented when present, since the complement
    /// of `J_S(n,k)` is edge-identical to `J_{K∖S}(n,k)` built over the same
    /// vertex ranking.
    pub fn complement(&self) -> Graph {
        let mut adj = vec![0u64; self.v * self.words];
        for u in 0..self.v {
            let row = self.row(u);
            let out = &mut adj[u * self.words..(u + 1) * self.words];
            for (wi, slot) in out.iter_mut().enumerate() {
                *slot = !row[wi];
            }
            // Clear the diagonal bit and the padding beyond v.
            out[u / 64] &= !(1u64 << (u % 64));
            let tail = self.v % 64;
            if tail != 0 {
                out[self.words - 1] &= (1u64 << tail) - 1;
            }
        }
        let spec = self.spec.as_ref().map(|sp| JohnsonSpec {
            n: sp.n,
            k: sp.k,
            s: (0..sp.k).filter(|i| !sp.s.contains(i)).collect(),
        });
        Graph::from_rows(self.v, adj, self.labels.clone(), spec)
    }

    /// Copy of the adjacency rows for modules that build modified graphs.
    pub(crate) fn rows_cloned(&self) -> Vec<u64> {
        self.adj.clone()
    }
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Graph(v={}, e={})", self.v, self.edge_count())
    }
}

pub(crate) fn words_for(v: usize) -> usize {
    v.div_ceil(64).max(1)
}

/// Builds `J_S(n,k)` with vertices indexed by colexicographic subset rank.
pub fn build_johnson(spec: &JohnsonSpec) -> Result<Graph, GraphError> {
    build_johnson_with_budget(spec, DEFAULT_VERTEX_BUDGET)
}

pub fn build_johnson_with_budget(spec: &JohnsonSpec, budget: usize) -> Result<Graph, GraphError> {
    spec.validate()?;
    let vcount = spec.vertex_count();
    if vcount > budget as u128 {
        return Err(GraphError::VertexBudget {
            n: spec.n,
            k: spec.k,
            vertices: vcount,
            budget,
        });
    }
    let v = vcount as usize;
    let labels = johnson_labels(spec);
    let words = words_for(v);
    let mut adj = vec![0u64; v * words];
    let s_mask = spec.s_mask();
    for i in 0..v {
        let a = labels[i].bits();
        for j in i + 1..v {
            let inter = (a & labels[j].bits()).count_ones();
            if s_mask >> inter & 1 == 1 {
                adj[i * words + j / 64] |= 1 << (j % 64);
                adj[j * words + i / 64] |= 1 << (i % 64);
            }
        }
    }
    Ok(Graph::from_rows(v, adj, Some(labels), Some(spec.clone())))
}

fn johnson_labels(spec: &JohnsonSpec) -> Vec<KSubset> {
    let v = spec.vertex_count() as usize;
    let mut labels = Vec::with_capacity(v);
    let mut bits = (1u64 << spec.k) - 1;
    for i in 0..v {
        labels.push(KSubset::from_bits(bits, spec.n));
        if i + 1 < v {
            bits = combin::next_same_popcount(bits).expect("within C(n,k) range");
        }
    }
    labels
}

/// On-demand adjacency for `J_S(n,k)` instances too large to materialize:
/// holds only the vertex labels and answers adjacency and block-neighbor
/// queries by popcount.
pub struct JohnsonView {
    spec: JohnsonSpec,
    labels: Vec<KSubset>,
    s_mask: u64,
}

impl JohnsonView {
    pub fn new(spec: &JohnsonSpec) -> Result<JohnsonView, GraphError> {
        spec.validate()?;
        Ok(JohnsonView {
            spec: spec.clone(),
            labels: johnson_labels(spec),
            s_mask: spec.s_mask(),
        })
    }

    pub fn spec(&self) -> &JohnsonSpec {
        &self.spec
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, u: usize) -> KSubset {
        self.labels[u]
    }

    pub fn adjacent(&self, u: usize, w: usize) -> bool {
        u != w && self.adjacent_labels(self.labels[u], self.labels[w])
    }

    pub fn adjacent_labels(&self, a: KSubset, b: KSubset) -> bool {
        let inter = (a.bits() & b.bits()).count_ones();
        a.bits() != b.bits() && self.s_mask >> inter & 1 == 1
    }

    /// Number of members of `block` (vertex indices) adjacent to vertex `u`.
    pub fn neighbors_in_block(&self, u: usize, block: &[usize]) -> u32 {
        let a = self.labels[u];
        block
            .iter()
            .filter(|&&c| c != u && self.adjacent_labels(a, self.labels[c]))
            .count() as u32
    }
}
