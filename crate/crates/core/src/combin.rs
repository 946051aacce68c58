//! Exact combinatorial primitives: k-subsets as bitmasks, binomial
//! coefficients, and the colexicographic rank/unrank bijection between
//! subsets and dense indices.
//!
//! Ground-set positions are 1-based in I/O and documentation (`[n] =
//! {1,…,n}`) and 0-based internally: bit `i` of a mask encodes element
//! `i + 1`.

use std::sync::OnceLock;

/// Largest `a` accepted by [`binom`]; covers every formula in play since
/// ground sets are capped at 64 elements by the bitmask encoding.
pub const BINOM_TABLE_BOUND: usize = 128;

fn pascal_table() -> &'static Vec<Vec<u128>> {
    static TABLE: OnceLock<Vec<Vec<u128>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t: Vec<Vec<u128>> = Vec::with_capacity(BINOM_TABLE_BOUND + 1);
        for a in 0..=BINOM_TABLE_BOUND {
            let mut row = vec![1u128; a + 1];
            for b in 1..a {
                row[b] = t[a - 1][b - 1] + t[a - 1][b];
            }
            t.push(row);
        }
        t
    })
}

/// Binomial coefficient `C(a, b)` as an exact `u128`.
///
/// Returns 0 when `b < 0` or `b > a` (the usual convention, so formulas with
/// shifted lower indices need no special-casing).
///
/// # Panics
/// When `a > 128`; every quantity in this crate stays far below that. Use
/// [`binom_small`] for large upper indices with small lower ones.
pub fn binom(a: usize, b: isize) -> u128 {
    assert!(
        a <= BINOM_TABLE_BOUND,
        "binom upper index {a} exceeds table bound {BINOM_TABLE_BOUND}"
    );
    if b < 0 || b as usize > a {
        return 0;
    }
    pascal_table()[a][b as usize]
}

/// `C(a, b)` for arbitrary `a` and small `b`, computed multiplicatively.
///
/// Exact as long as the result and intermediates fit in `u128`; intended for
/// candidate-space sizing in searches where `a` is a vertex count.
pub fn binom_small(a: u64, b: u32) -> u128 {
    let b = b as u64;
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    let mut acc: u128 = 1;
    for i in 1..=b {
        // Numerator term first; the running product of i consecutive
        // binomial steps is always divisible by i.
        acc = acc * (a - b + i) as u128 / i as u128;
    }
    acc
}

/// A k-element subset of `[n]`, stored as a bitmask (bit `i` ⇔ element
/// `i + 1` is present).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KSubset {
    bits: u64,
    n: u8,
}

impl KSubset {
    /// Wraps a raw mask. Panics if a bit at or above position `n` is set or
    /// `n > 64`.
    pub fn from_bits(bits: u64, n: u8) -> Self {
        assert!(n as u32 <= 64, "ground set capped at 64 elements");
        if n < 64 {
            assert!(
                bits >> n == 0,
                "subset mask {bits:#x} has elements beyond ground set [{n}]"
            );
        }
        KSubset { bits, n }
    }

    /// Builds from 1-based elements. Panics on duplicates or out-of-range
    /// values.
    pub fn from_elems_1based(elems: &[u8], n: u8) -> Self {
        let mut bits = 0u64;
        for &e in elems {
            assert!(e >= 1 && e <= n, "element {e} outside [{n}]");
            let bit = 1u64 << (e - 1);
            assert!(bits & bit == 0, "duplicate element {e}");
            bits |= bit;
        }
        KSubset::from_bits(bits, n)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    /// Number of elements (popcount).
    pub fn k(&self) -> u8 {
        self.bits.count_ones() as u8
    }

    /// Is the 1-based element `e` present?
    pub fn contains(&self, e: u8) -> bool {
        debug_assert!(e >= 1 && e <= self.n);
        self.bits >> (e - 1) & 1 == 1
    }

    /// Sorted 1-based element list, the JSON wire form.
    pub fn to_sorted_1based(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.k() as usize);
        let mut rest = self.bits;
        while rest != 0 {
            let i = rest.trailing_zeros() as u8;
            out.push(i + 1);
            rest &= rest - 1;
        }
        out
    }

    /// Colexicographic rank among all k-subsets of `[n]`:
    /// `Σ C(c_i, i)` over the ascending 0-based positions `c_1 < … < c_k`.
    pub fn rank(&self) -> u64 {
        let mut r: u128 = 0;
        let mut rest = self.bits;
        let mut i = 1usize;
        while rest != 0 {
            let c = rest.trailing_zeros() as usize;
            r += binom(c, i as isize);
            rest &= rest - 1;
            i += 1;
        }
        r as u64
    }
}

impl std::fmt::Debug for KSubset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "KSubset{:?}", self.to_sorted_1based())
    }
}

/// Inverse of [`KSubset::rank`]: the `i`-th k-subset of `[n]` in
/// colexicographic order.
///
/// # Panics
/// When `i >= C(n, k)`.
pub fn unrank(i: u64, n: u8, k: u8) -> KSubset {
    assert!(
        (i as u128) < binom(n as usize, k as isize),
        "rank {i} out of range for C({n},{k})"
    );
    let mut rem = i as u128;
    let mut bits = 0u64;
    for j in (1..=k as usize).rev() {
        // Largest position c with C(c, j) <= rem.
        let mut c = j - 1;
        while binom(c + 1, j as isize) <= rem {
            c += 1;
        }
        rem -= binom(c, j as isize);
        bits |= 1u64 << c;
    }
    KSubset::from_bits(bits, n)
}

/// Size of the intersection of two subsets over the same ground set.
///
/// # Panics
/// When the ground sets differ.
pub fn intersection_size(a: KSubset, b: KSubset) -> u32 {
    assert_eq!(a.n, b.n, "mismatched ground sets [{}] vs [{}]", a.n, b.n);
    (a.bits & b.bits).count_ones()
}

/// Successor of `bits` among masks of equal popcount (Gosper's hack), i.e.
/// the next k-subset in colexicographic order. Returns `None` when `bits`
/// was the last k-subset representable in a `u64` (callers bound iteration
/// by `C(n,k)` counts instead).
pub fn next_same_popcount(bits: u64) -> Option<u64> {
    debug_assert!(bits != 0);
    let c = bits & bits.wrapping_neg();
    let r = bits.checked_add(c)?;
    Some((((r ^ bits) >> 2) / c) | r)
}

/// In-place colexicographic successor of a strictly increasing index tuple
/// (unbounded above; callers stop after a known count). The first tuple is
/// `[0, 1, …, m-1]`.
pub fn next_colex_tuple(arr: &mut [u32]) {
    let m = arr.len();
    for i in 0..m {
        let limit = if i + 1 < m { arr[i + 1] } else { u32::MAX };
        if arr[i] + 1 < limit {
            arr[i] += 1;
            for (j, slot) in arr.iter_mut().enumerate().take(i) {
                *slot = j as u32;
            }
            return;
        }
    }
    unreachable!("colex successor called past the representable range");
}

/// The strictly increasing index tuple of length `m` with colexicographic
/// rank `r` (inverse of the tuple order walked by [`next_colex_tuple`]).
pub fn unrank_colex_tuple(r: u128, m: usize) -> Vec<u32> {
    let mut rem = r;
    let mut out = vec![0u32; m];
    for j in (1..=m).rev() {
        let mut c = (j - 1) as u64;
        while binom_small(c + 1, j as u32) <= rem {
            c += 1;
        }
        rem -= binom_small(c, j as u32);
        out[j - 1] = c as u32;
    }
    out
}
