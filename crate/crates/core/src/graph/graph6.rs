//! graph6 short form (n ≤ 62): header byte `63 + n`, then the upper
//! triangle in column-major order packed into 6-bit chunks offset by 63.

use std::fs;
use std::path::Path;

use super::Graph;
use crate::error::{Error, Result};

const MAX_SHORT: usize = 62;
const HEADER: &str = ">>graph6<<";

/// Decode a graph6 line into its vertex count and adjacency rows, without
/// requiring connectivity.
pub fn decode_graph6_bits(line: &str) -> Result<(usize, Vec<u64>)> {
    let line = line.trim_end_matches(['\r', '\n']);
    let line = line.strip_prefix(HEADER).unwrap_or(line);
    let bytes = line.as_bytes();
    let (&head, payload) = bytes
        .split_first()
        .ok_or_else(|| Error::Graph6("empty line".into()))?;
    if !(63..=126).contains(&head) {
        return Err(Error::Graph6(format!("invalid header byte {head:#04x}")));
    }
    if head == 126 {
        return Err(Error::Graph6("long form (n > 62) is not supported".into()));
    }
    let n = (head - 63) as usize;
    debug_assert!(n <= MAX_SHORT);
    let bits = n * n.saturating_sub(1) / 2;
    let expected = bits.div_ceil(6);
    if let Some(&c) = payload.iter().find(|c| !(63..=126).contains(*c)) {
        return Err(Error::Graph6(format!("non-printable or out-of-range byte {c:#04x}")));
    }
    if payload.len() != expected {
        return Err(Error::Graph6(format!(
            "payload has {} bytes, expected {expected} for n = {n}",
            payload.len()
        )));
    }
    let bit = |k: usize| (payload[k / 6] - 63) >> (5 - k % 6) & 1 == 1;
    for k in bits..expected * 6 {
        if bit(k) {
            return Err(Error::Graph6("nonzero padding bits".into()));
        }
    }
    let mut rows = vec![0u64; n];
    let mut k = 0;
    for j in 1..n {
        for i in 0..j {
            if bit(k) {
                rows[i] |= 1 << j;
                rows[j] |= 1 << i;
            }
            k += 1;
        }
    }
    Ok((n, rows))
}

/// Encode adjacency rows in graph6 short form.
pub fn encode_graph6_bits(n: usize, rows: &[u64]) -> String {
    assert!(n <= MAX_SHORT, "graph6 short form holds at most 62 vertices");
    let bits = n * n.saturating_sub(1) / 2;
    let mut out = String::with_capacity(1 + bits.div_ceil(6));
    out.push((63 + n as u8) as char);
    let mut chunk = 0u8;
    let mut filled = 0;
    for j in 1..n {
        for i in 0..j {
            chunk = chunk << 1 | (rows[i] >> j & 1) as u8;
            filled += 1;
            if filled == 6 {
                out.push((chunk + 63) as char);
                chunk = 0;
                filled = 0;
            }
        }
    }
    if filled > 0 {
        out.push(((chunk << (6 - filled)) + 63) as char);
    }
    out
}

/// Parse one graph6 line into a (connected) [`Graph`].
pub fn parse_graph6(line: &str) -> Result<Graph> {
    let (n, rows) = decode_graph6_bits(line)?;
    Graph::from_rows(n, rows)
}

impl Graph {
    pub fn to_graph6(&self) -> String {
        encode_graph6_bits(self.n(), self.rows())
    }
}

/// Read every non-empty line of a graph6 file.
pub fn read_graph6_file(path: &Path) -> Result<Vec<Graph>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::GraphInput(format!("{}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(k, l)| parse_graph6(l.trim()).map_err(|e| Error::Graph6(format!("line {}: {e}", k + 1))))
        .collect()
}
