//! Interchange formats: the standard graph6 byte layout and the labeled
//! JSON graph/partition/certificate documents.

use crate::combin::KSubset;
use crate::graph::{words_for, Graph, JohnsonSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("graph6: {0}")]
    Graph6(String),
    #[error("json: {0}")]
    Json(String),
    #[error(transparent)]
    Serde(#[from] serde_json::Error),
    #[error(transparent)]
    File(#[from] std::io::Error),
}

const G6_HEADER: &str = ">>graph6<<";

// ---------------------------------------------------------------------------
// graph6
// ---------------------------------------------------------------------------

/// Encodes to graph6 (no header, no trailing newline). Bit-exact with the
/// published format: N(n) followed by the column-major upper triangle packed
/// into 6-bit groups, each offset by 63.
pub fn graph_to_g6(g: &Graph) -> String {
    let n = g.vertex_count();
    let mut bytes = Vec::new();
    encode_g6_size(&mut bytes, n as u64);
    let mut acc = 0u8;
    let mut filled = 0u8;
    for j in 1..n {
        for i in 0..j {
            acc = (acc << 1) | u8::from(g.adjacent(i, j));
            filled += 1;
            if filled == 6 {
                bytes.push(acc + 63);
                acc = 0;
                filled = 0;
            }
        }
    }
    if filled > 0 {
        bytes.push((acc << (6 - filled)) + 63);
    }
    String::from_utf8(bytes).expect("graph6 bytes are printable ASCII")
}

fn encode_g6_size(out: &mut Vec<u8>, n: u64) {
    if n <= 62 {
        out.push(n as u8 + 63);
    } else if n <= 258_047 {
        out.push(126);
        for shift in [12u32, 6, 0] {
            out.push(((n >> shift) & 63) as u8 + 63);
        }
    } else {
        assert!(n <= 68_719_476_735, "graph6 caps at 2^36 - 1 vertices");
        out.push(126);
        out.push(126);
        for shift in [30u32, 24, 18, 12, 6, 0] {
            out.push(((n >> shift) & 63) as u8 + 63);
        }
    }
}

/// Decodes a graph6 line (optional `>>graph6<<` header, optional trailing
/// newline).
pub fn graph_from_g6(text: &str) -> Result<Graph, IoError> {
    let text = text.trim_end_matches(['\n', '\r']);
    let text = text.strip_prefix(G6_HEADER).unwrap_or(text);
    let bytes = text.as_bytes();
    if bytes.is_empty() {
        return Err(IoError::Graph6("empty input".into()));
    }
    for &b in bytes {
        if !(63..=126).contains(&b) {
            return Err(IoError::Graph6(format!("byte {b:#x} outside graph6 range")));
        }
    }
    let (n, mut pos) = decode_g6_size(bytes)?;
    let n = usize::try_from(n).map_err(|_| IoError::Graph6("vertex count too large".into()))?;
    let need_bits = n * n.saturating_sub(1) / 2;
    let need_bytes = need_bits.div_ceil(6);
    if bytes.len() - pos != need_bytes {
        return Err(IoError::Graph6(format!(
            "expected {need_bytes} adjacency bytes for n={n}, found {}",
            bytes.len() - pos
        )));
    }
    let words = words_for(n);
    let mut adj = vec![0u64; n * words];
    let mut acc = 0u32;
    let mut avail = 0u8;
    for j in 1..n {
        for i in 0..j {
            if avail == 0 {
                acc = (bytes[pos] - 63) as u32;
                avail = 6;
                pos += 1;
            }
            avail -= 1;
            if acc >> avail & 1 == 1 {
                adj[i * words + j / 64] |= 1 << (j % 64);
                adj[j * words + i / 64] |= 1 << (i % 64);
            }
        }
    }
    // Padding bits must be zero per the format.
    if avail > 0 && acc & ((1 << avail) - 1) != 0 {
        return Err(IoError::Graph6("nonzero padding bits".into()));
    }
    Ok(Graph::from_rows(n, adj, None, None))
}

fn decode_g6_size(bytes: &[u8]) -> Result<(u64, usize), IoError> {
    if bytes[0] != 126 {
        return Ok(((bytes[0] - 63) as u64, 1));
    }
    if bytes.len() >= 2 && bytes[1] == 126 {
        if bytes.len() < 8 {
            return Err(IoError::Graph6("truncated 36-bit size".into()));
        }
        let mut n = 0u64;
        for &b in &bytes[2..8] {
            n = n << 6 | (b - 63) as u64;
        }
        Ok((n, 8))
    } else {
        if bytes.len() < 4 {
            return Err(IoError::Graph6("truncated 18-bit size".into()));
        }
        let mut n = 0u64;
        for &b in &bytes[1..4] {
            n = n << 6 | (b - 63) as u64;
        }
        Ok((n, 4))
    }
}

// ---------------------------------------------------------------------------
// JSON documents
// ---------------------------------------------------------------------------

/// Labeled graph document: `{"n":…, "k":…, "S":[…], "vertices":[[…]…],
/// "edges":[[u,v]…]}`. Vertices are sorted 1-based element lists in rank
/// order; edges use vertex indices.
#[derive(Debug, Serialize, Deserialize)]
pub struct LabeledGraphJson {
    pub n: u8,
    pub k: u8,
    #[serde(rename = "S")]
    pub s: Vec<u8>,
    pub vertices: Vec<Vec<u8>>,
    pub edges: Vec<(u32, u32)>,
}

pub fn graph_to_json(g: &Graph) -> Result<String, IoError> {
    let spec = g
        .spec()
        .ok_or_else(|| IoError::Json("graph has no J_S(n,k) spec; use graph6".into()))?;
    let labels = g
        .labels()
        .ok_or_else(|| IoError::Json("graph has no vertex labels; use graph6".into()))?;
    let doc = LabeledGraphJson {
        n: spec.n,
        k: spec.k,
        s: spec.s.iter().copied().collect(),
        vertices: labels.iter().map(|l| l.to_sorted_1based()).collect(),
        edges: g.edges(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn graph_from_json(text: &str) -> Result<Graph, IoError> {
    let doc: LabeledGraphJson = serde_json::from_str(text)?;
    let spec = JohnsonSpec::new(doc.n, doc.k, doc.s.iter().copied())
        .map_err(|e| IoError::Json(e.to_string()))?;
    let v = doc.vertices.len();
    if v as u128 != spec.vertex_count() {
        return Err(IoError::Json(format!(
            "vertex list has {v} entries, spec {spec} needs {}",
            spec.vertex_count()
        )));
    }
    let mut labels = Vec::with_capacity(v);
    for (i, elems) in doc.vertices.iter().enumerate() {
        if elems.len() != doc.k as usize {
            return Err(IoError::Json(format!("vertex {i} is not a {}-subset", doc.k)));
        }
        labels.push(KSubset::from_elems_1based(elems, doc.n));
    }
    for &(a, b) in &doc.edges {
        if a as usize >= v || b as usize >= v || a == b {
            return Err(IoError::Json(format!("bad edge ({a},{b})")));
        }
    }
    let base = Graph::from_edges(v, &doc.edges);
    Ok(Graph::from_rows(
        v,
        base.rows_cloned(),
        Some(labels),
        Some(spec),
    ))
}

/// Switching partition document: `{"blocks": [[v…]…]}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct BlocksJson {
    pub blocks: Vec<Vec<u32>>,
}

/// Cospectrality certificate document:
/// `{"primes":[…], "residues":[[…]…]}` with residues row-per-prime, each
/// row the characteristic polynomial coefficients mod that prime
/// (degree-descending, leading 1 included).
#[derive(Debug, Serialize, Deserialize)]
pub struct CertificateJson {
    pub primes: Vec<u64>,
    pub residues: Vec<Vec<u64>>,
}

/// Reads a graph file, dispatching on extension (`.json` vs graph6
/// otherwise) with a `{`-sniff fallback for extensionless files.
pub fn read_graph_file(path: &std::path::Path) -> Result<Graph, IoError> {
    let text = std::fs::read_to_string(path)?;
    let looks_json = path
        .extension()
        .map(|e| e == "json")
        .unwrap_or_else(|| text.trim_start().starts_with('{'));
    if looks_json {
        graph_from_json(&text)
    } else {
        graph_from_g6(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_johnson;
    use sha2::{Digest, Sha256};

    #[test]
    fn decodes_known_vector_dqc() {
        let g = graph_from_g6("DQc").unwrap();
        assert_eq!(g.vertex_count(), 5);
        assert_eq!(g.edges(), vec![(0, 2), (0, 4), (1, 3), (3, 4)]);
        assert_eq!(graph_to_g6(&g), "DQc");
    }

    #[test]
    fn decodes_known_vector_k4() {
        let g = graph_from_g6("C~").unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 6);
        assert_eq!(graph_to_g6(&g), "C~");
    }

    #[test]
    fn header_and_newline_accepted() {
        let g = graph_from_g6(">>graph6<<DQc\n").unwrap();
        assert_eq!(graph_to_g6(&g), "DQc");
    }

    #[test]
    fn kneser_8_3_bytes_frozen() {
        // Frozen against an independent encoder run on the same graph.
        let g = build_johnson(&"8,3,{0}".parse().unwrap()).unwrap();
        let enc = graph_to_g6(&g);
        assert_eq!(enc.len(), 258);
        assert!(enc.starts_with("w?????????_C?O?_"));
        let digest = Sha256::digest(enc.as_bytes());
        assert_eq!(&hex_prefix(&digest, 8), "7db2c1bbe212f1d5");
        let back = graph_from_g6(&enc).unwrap();
        assert_eq!(back.edges(), g.edges());
    }

    fn hex_prefix(bytes: &[u8], n: usize) -> String {
        bytes[..n].iter().map(|b| format!("{b:02x}")).collect()
    }

    #[test]
    fn large_size_header_roundtrip() {
        // 63 vertices exercises the 18-bit size form.
        let edges: Vec<(u32, u32)> = (0..62).map(|i| (i, i + 1)).collect();
        let g = Graph::from_edges(63, &edges);
        let enc = graph_to_g6(&g);
        assert_eq!(enc.as_bytes()[0], 126);
        let back = graph_from_g6(&enc).unwrap();
        assert_eq!(back.vertex_count(), 63);
        assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(graph_from_g6("").is_err());
        assert!(graph_from_g6("D").is_err()); // missing adjacency bytes
        assert!(graph_from_g6("DQcQ").is_err()); // trailing data
        assert!(graph_from_g6("D\x1fc").is_err()); // byte below 63
    }

    #[test]
    fn seeded_random_roundtrips() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for v in [1usize, 2, 13, 62, 63, 64, 65, 130] {
            let mut edges = Vec::new();
            for i in 0..v as u32 {
                for j in i + 1..v as u32 {
                    if rng.gen_bool(0.3) {
                        edges.push((i, j));
                    }
                }
            }
            let g = Graph::from_edges(v, &edges);
            let back = graph_from_g6(&graph_to_g6(&g)).unwrap();
            assert_eq!(back.edges(), g.edges(), "roundtrip failed at v={v}");
        }
    }

    #[test]
    fn labeled_json_roundtrip() {
        let g = build_johnson(&"8,4,{2}".parse().unwrap()).unwrap();
        let text = graph_to_json(&g).unwrap();
        let back = graph_from_json(&text).unwrap();
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.spec(), g.spec());
        assert_eq!(back.labels().unwrap()[3], g.labels().unwrap()[3]);
        // Wire shape: first vertex is the colex-first subset.
        let doc: LabeledGraphJson = serde_json::from_str(&text).unwrap();
        assert_eq!(doc.vertices[0], vec![1, 2, 3, 4]);
    }

    #[test]
    fn json_validation_errors() {
        let g = build_johnson(&"6,3,{0}".parse().unwrap()).unwrap();
        let mut doc: LabeledGraphJson =
            serde_json::from_str(&graph_to_json(&g).unwrap()).unwrap();
        doc.vertices.pop();
        let text = serde_json::to_string(&doc).unwrap();
        assert!(graph_from_json(&text).is_err());
        // graph6-only graphs refuse JSON export.
        let plain = graph_from_g6("DQc").unwrap();
        assert!(graph_to_json(&plain).is_err());
    }
}
