//! Exact cospectrality: characteristic polynomials of adjacency matrices
//! computed over several large prime fields.
//!
//! A mismatch of any coefficient modulo any prime proves the spectra
//! differ. Agreement across all five ~2^62 primes is reported as
//! `CospectralModPrimes`: not a formal proof, but the chance of five
//! simultaneous collisions is astronomically small and the verdict is fully
//! deterministic and reproducible.

use crate::graph::Graph;
use crate::io::CertificateJson;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The five smallest primes above 2^62, hard-coded so certificates are
/// byte-identical across machines and runs. Bump [`PRIME_LIST_VERSION`] if
/// this list ever changes.
pub const CERT_PRIMES: [u64; 5] = [
    4_611_686_018_427_388_039,
    4_611_686_018_427_388_073,
    4_611_686_018_427_388_081,
    4_611_686_018_427_388_091,
    4_611_686_018_427_388_093,
];

pub const PRIME_LIST_VERSION: &str = "p62x5-v1";

/// Vertex cap for dense characteristic-polynomial work.
pub const DENSE_VERTEX_BUDGET: usize = 2_000;

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {p} too small for {v} vertices (need p > v^2)")]
    PrimeTooSmall { p: u64, v: usize },
    #[error("prime {0} is not below 2^63")]
    PrimeTooLarge(u64),
    #[error("graph has {0} vertices, over the dense budget {DENSE_VERTEX_BUDGET}")]
    DenseBudget(usize),
    #[error("vertex counts differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
}

// ---------------------------------------------------------------------------
// Prime-field arithmetic (p < 2^63 so sums never overflow u64 before reduce)
// ---------------------------------------------------------------------------

#[inline]
fn addm(a: u64, b: u64, p: u64) -> u64 {
    let s = a + b;
    if s >= p {
        s - p
    } else {
        s
    }
}

#[inline]
fn subm(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

#[inline]
fn mulm(a: u64, b: u64, p: u64) -> u64 {
    (a as u128 * b as u128 % p as u128) as u64
}

fn powm(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulm(acc, a, p);
        }
        a = mulm(a, a, p);
        e >>= 1;
    }
    acc
}

fn invm(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0);
    powm(a, p - 2, p)
}

/// Deterministic Miller-Rabin for u64 (the standard 12-base certificate).
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = mod_pow_128(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mod_mul_128(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

// Arbitrary-u64-modulus variants for primality testing only (the field ops
// above assume p < 2^63, which CERT_PRIMES satisfy).
fn mod_mul_128(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn mod_pow_128(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mod_mul_128(acc, a, m);
        }
        a = mod_mul_128(a, a, m);
        e >>= 1;
    }
    acc
}

// ---------------------------------------------------------------------------
// Characteristic polynomial
// ---------------------------------------------------------------------------

/// Coefficients of `det(xI − A) mod p` in descending degree order:
/// `[1, c_{n−1}, …, c_0]` (length `|V| + 1`).
///
/// The adjacency matrix is reduced to upper Hessenberg form by a similarity
/// transform over `F_p`, then the characteristic polynomial follows from the
/// last-column cofactor recurrence over leading principal minors. `O(|V|³)`.
pub fn char_poly_mod(g: &Graph, p: u64) -> Result<Vec<u64>, SpectraError> {
    let v = g.vertex_count();
    if v > DENSE_VERTEX_BUDGET {
        return Err(SpectraError::DenseBudget(v));
    }
    if p >= 1 << 63 {
        return Err(SpectraError::PrimeTooLarge(p));
    }
    if !is_prime_u64(p) {
        return Err(SpectraError::NotPrime(p));
    }
    if (p as u128) <= (v as u128) * (v as u128) {
        return Err(SpectraError::PrimeTooSmall { p, v });
    }
    if v == 0 {
        return Ok(vec![1]);
    }

    // Dense copy of A mod p.
    let mut h = vec![0u64; v * v];
    for u in 0..v {
        for w in g.neighbors(u) {
            h[u * v + w] = 1;
        }
    }

    hessenberg_in_place(&mut h, v, p);

    // p_m(x) = (x − h[m−1][m−1]) p_{m−1}(x)
    //          − Σ_{i<m−1} h[i][m−1] (Π_{l=i+1}^{m−1} h[l][l−1]) p_i(x),
    // expanding det(xI_m − H_m) along its last column. Coefficients kept in
    // ascending-degree order during the recurrence.
    let mut polys: Vec<Vec<u64>> = Vec::with_capacity(v + 1);
    polys.push(vec![1]);
    for m in 1..=v {
        let hmm = h[(m - 1) * v + (m - 1)];
        let prev = &polys[m - 1];
        let mut pm = vec![0u64; m + 1];
        for (d, &c) in prev.iter().enumerate() {
            pm[d + 1] = addm(pm[d + 1], c, p); // x · p_{m−1}
            pm[d] = subm(pm[d], mulm(hmm, c, p), p); // −h_mm · p_{m−1}
        }
        let mut beta = 1u64; // running Π of subdiagonal entries
        for i in (0..m - 1).rev() {
            beta = mulm(beta, h[(i + 1) * v + i], p);
            if beta == 0 {
                break;
            }
            let hi = h[i * v + (m - 1)];
            if hi == 0 {
                continue;
            }
            let f = mulm(hi, beta, p);
            for (d, &c) in polys[i].iter().enumerate() {
                pm[d] = subm(pm[d], mulm(f, c, p), p);
            }
        }
        polys.push(pm);
    }

    let mut out = polys.pop().expect("n-th polynomial");
    out.reverse(); // descending degree
    debug_assert_eq!(out[0], 1);
    Ok(out)
}

/// In-place Hessenberg reduction of the row-major `v×v` matrix over `F_p`
/// via similarity transforms (row elimination paired with the inverse
/// column operation, plus symmetric swaps for pivoting).
fn hessenberg_in_place(h: &mut [u64], v: usize, p: u64) {
    for j in 0..v.saturating_sub(2) {
        let pivot = (j + 1..v).find(|&r| h[r * v + j] != 0);
        let Some(r) = pivot else { continue };
        if r != j + 1 {
            for c in 0..v {
                h.swap(r * v + c, (j + 1) * v + c);
            }
            for row in 0..v {
                h.swap(row * v + r, row * v + j + 1);
            }
        }
        let inv = invm(h[(j + 1) * v + j], p);
        for i in j + 2..v {
            let f = mulm(h[i * v + j], inv, p);
            if f == 0 {
                continue;
            }
            // row_i ← row_i − f · row_{j+1}  (columns < j are already zero)
            for c in j..v {
                let sub = mulm(f, h[(j + 1) * v + c], p);
                h[i * v + c] = subm(h[i * v + c], sub, p);
            }
            // col_{j+1} ← col_{j+1} + f · col_i
            for row in 0..v {
                let add = mulm(f, h[row * v + i], p);
                h[row * v + j + 1] = addm(h[row * v + j + 1], add, p);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Certificates and the cospectrality verdict
// ---------------------------------------------------------------------------

/// Characteristic-polynomial residues of one graph across the certificate
/// primes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralCertificate {
    pub primes: Vec<u64>,
    /// Row per prime; each row in descending degree, leading 1 included.
    pub residues: Vec<Vec<u64>>,
}

impl SpectralCertificate {
    pub fn to_json_doc(&self) -> CertificateJson {
        CertificateJson {
            primes: self.primes.clone(),
            residues: self.residues.clone(),
        }
    }
}

/// Computes the certificate over [`CERT_PRIMES`], one prime per worker.
pub fn certificate(g: &Graph) -> Result<SpectralCertificate, SpectraError> {
    let residues: Result<Vec<Vec<u64>>, SpectraError> = CERT_PRIMES
        .par_iter()
        .map(|&p| char_poly_mod(g, p))
        .collect();
    Ok(SpectralCertificate {
        primes: CERT_PRIMES.to_vec(),
        residues: residues?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cospectrality {
    /// All coefficients agree modulo every certificate prime.
    CospectralModPrimes,
    /// Some coefficient differs modulo some prime — a proof the spectra
    /// differ. `coeff_degree` is the x-power of the first differing
    /// coefficient under the first differing prime.
    NotCospectral { prime: u64, coeff_degree: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CospectralReport {
    pub verdict: Cospectrality,
    pub left: SpectralCertificate,
    pub right: SpectralCertificate,
}

/// Full cospectrality comparison of two graphs on the same vertex count.
pub fn cospectral(g: &Graph, h: &Graph) -> Result<CospectralReport, SpectraError> {
    if g.vertex_count() != h.vertex_count() {
        return Err(SpectraError::SizeMismatch(
            g.vertex_count(),
            h.vertex_count(),
        ));
    }
    let (left, right) = rayon::join(|| certificate(g), || certificate(h));
    let (left, right) = (left?, right?);
    let n = g.vertex_count();
    let mut verdict = Cospectrality::CospectralModPrimes;
    'outer: for (pi, &p) in left.primes.iter().enumerate() {
        for (idx, (a, b)) in left.residues[pi]
            .iter()
            .zip(&right.residues[pi])
            .enumerate()
        {
            if a != b {
                verdict = Cospectrality::NotCospectral {
                    prime: p,
                    coeff_degree: n - idx,
                };
                break 'outer;
            }
        }
    }
    Ok(CospectralReport {
        verdict,
        left,
        right,
    })
}

/// Floating-point adjacency eigenvalues, descending. For human inspection
/// only — verdicts always come from the modular certificates.
pub fn float_eigenvalues(g: &Graph) -> Result<Vec<f64>, SpectraError> {
    let v = g.vertex_count();
    if v > DENSE_VERTEX_BUDGET {
        return Err(SpectraError::DenseBudget(v));
    }
    let mut m = nalgebra::DMatrix::<f64>::zeros(v, v);
    for u in 0..v {
        for w in g.neighbors(u) {
            m[(u, w)] = 1.0;
        }
    }
    let mut eigs: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.sort_by(|a, b| b.partial_cmp(a).expect("adjacency eigenvalues are finite"));
    Ok(eigs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_johnson, Graph};

    const P: u64 = CERT_PRIMES[0];

    fn negm(x: u64) -> u64 {
        (P - x % P) % P
    }

    #[test]
    fn empty_graph_char_poly_is_x_to_n() {
        let g = Graph::from_edges(5, &[]);
        let cp = char_poly_mod(&g, P).unwrap();
        assert_eq!(cp, vec![1, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn k4_char_poly_matches_hand_expansion() {
        // (x−3)(x+1)³ = x⁴ − 6x² − 8x − 3
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let cp = char_poly_mod(&g, P).unwrap();
        assert_eq!(cp, vec![1, 0, negm(6), negm(8), negm(3)]);
    }

    #[test]
    fn c4_char_poly() {
        // eigenvalues ±2, 0, 0 → x⁴ − 4x²
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let cp = char_poly_mod(&g, P).unwrap();
        assert_eq!(cp, vec![1, 0, negm(4), 0, 0]);
    }

    #[test]
    fn path_vs_triangle_not_cospectral() {
        let p3 = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        let k3 = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        let report = cospectral(&p3, &k3).unwrap();
        match report.verdict {
            Cospectrality::NotCospectral { coeff_degree, .. } => {
                // trace of A² differs (4 vs 6): the x^{n−2} coefficient.
                assert_eq!(coeff_degree, 1);
            }
            v => panic!("expected NotCospectral, got {v:?}"),
        }
    }

    #[test]
    fn graph_is_cospectral_with_itself() {
        let g = build_johnson(&"6,3,{0,1}".parse().unwrap()).unwrap();
        let report = cospectral(&g, &g).unwrap();
        assert_eq!(report.verdict, Cospectrality::CospectralModPrimes);
        assert_eq!(report.left, report.right);
    }

    #[test]
    fn coefficient_invariants_hold_on_scheme_graphs() {
        for spec in ["8,3,{0}", "6,3,{1}", "7,3,{0,2}", "8,4,{2}"] {
            let g = build_johnson(&spec.parse().unwrap()).unwrap();
            let n = g.vertex_count();
            let cp = char_poly_mod(&g, P).unwrap();
            assert_eq!(cp.len(), n + 1);
            assert_eq!(cp[0], 1, "leading coefficient");
            assert_eq!(cp[1], 0, "trace is zero");
            assert_eq!(cp[2], negm(g.edge_count()), "x^(n-2) = -|E| at {spec}");
            let triangles: u64 = {
                let mut t = 0u64;
                for (u, w) in g.edges() {
                    t += g.common_neighbors(u as usize, w as usize) as u64;
                }
                t / 3
            };
            assert_eq!(cp[3], negm(2 * triangles), "x^(n-3) = -2·triangles at {spec}");
        }
    }

    #[test]
    fn char_poly_agrees_with_lu_determinant_at_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..8 {
            let v = 3 + (trial % 5) as usize * 3;
            let mut edges = Vec::new();
            for i in 0..v as u32 {
                for j in i + 1..v as u32 {
                    if rng.gen_bool(0.4) {
                        edges.push((i, j));
                    }
                }
            }
            let g = Graph::from_edges(v, &edges);
            let cp = char_poly_mod(&g, P).unwrap();
            let x0: u64 = rng.gen_range(1..P);
            // Horner evaluation (descending coefficients).
            let eval = cp.iter().fold(0u64, |acc, &c| addm(mulm(acc, x0, P), c, P));
            assert_eq!(eval, det_xi_minus_a(&g, x0), "trial {trial} v={v}");
        }
    }

    /// Gaussian-elimination determinant of (x0·I − A) mod P: an oracle
    /// independent of the Hessenberg path.
    fn det_xi_minus_a(g: &Graph, x0: u64) -> u64 {
        let v = g.vertex_count();
        let mut m = vec![0u64; v * v];
        for i in 0..v {
            m[i * v + i] = x0;
            for w in g.neighbors(i) {
                m[i * v + w] = negm(1);
            }
        }
        let mut det = 1u64;
        for col in 0..v {
            let Some(piv) = (col..v).find(|&r| m[r * v + col] != 0) else {
                return 0;
            };
            if piv != col {
                for c in 0..v {
                    m.swap(piv * v + c, col * v + c);
                }
                det = negm(det);
            }
            let d = m[col * v + col];
            det = mulm(det, d, P);
            let inv = invm(d, P);
            for r in col + 1..v {
                let f = mulm(m[r * v + col], inv, P);
                if f == 0 {
                    continue;
                }
                for c in col..v {
                    let sub = mulm(f, m[col * v + c], P);
                    m[r * v + c] = subm(m[r * v + c], sub, P);
                }
            }
        }
        det
    }

    #[test]
    fn certificate_is_deterministic() {
        let g = build_johnson(&"7,3,{0}".parse().unwrap()).unwrap();
        let a = certificate(&g).unwrap();
        let b = certificate(&g).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.primes, CERT_PRIMES.to_vec());
        let json_a = serde_json::to_string(&a.to_json_doc()).unwrap();
        let json_b = serde_json::to_string(&b.to_json_doc()).unwrap();
        assert_eq!(json_a, json_b);
    }

    #[test]
    fn rejects_bad_primes_and_sizes() {
        let g = Graph::from_edges(4, &[(0, 1)]);
        assert!(matches!(
            char_poly_mod(&g, 4_611_686_018_427_388_040),
            Err(SpectraError::NotPrime(_))
        ));
        assert!(matches!(
            char_poly_mod(&g, 13),
            Err(SpectraError::PrimeTooSmall { .. })
        ));
        let h = Graph::from_edges(5, &[(0, 1)]);
        assert!(matches!(
            cospectral(&g, &h),
            Err(SpectraError::SizeMismatch(4, 5))
        ));
    }

    #[test]
    fn miller_rabin_spot_checks() {
        assert!(is_prime_u64(2));
        assert!(is_prime_u64(4_611_686_018_427_388_039));
        assert!(!is_prime_u64(1));
        assert!(!is_prime_u64(4_611_686_018_427_388_037)); // 2^62 + 133 = composite
        assert!(!is_prime_u64(3_215_031_751)); // strong pseudoprime to 2,3,5,7
        for p in CERT_PRIMES {
            assert!(is_prime_u64(p));
        }
    }

    #[test]
    fn float_eigenvalues_match_known_spectrum() {
        // C4: eigenvalues 2, 0, 0, −2.
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let eigs = float_eigenvalues(&g).unwrap();
        let want = [2.0, 0.0, 0.0, -2.0];
        for (a, b) in eigs.iter().zip(want) {
            assert!((a - b).abs() < 1e-9, "{eigs:?}");
        }
    }
}
