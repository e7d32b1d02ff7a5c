//! Exhaustive graph catalogs by vertex augmentation and canonical labeling.
//!
//! Every graph on `n` vertices is a graph on `n − 1` vertices plus one vertex
//! with some neighbourhood, so augmenting every isomorphism class on `n − 1`
//! vertices in every way and keeping one canonical representative per class
//! yields the complete list.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{encode_graph6_bits, rows_connected, Graph};

/// Largest order for which [`all_graphs`] is supported.
pub const MAX_CATALOG_ORDER: usize = 10;

type Partition = Vec<Vec<usize>>;

fn cell_mask(cell: &[usize]) -> u64 {
    cell.iter().fold(0, |m, &v| m | 1 << v)
}

/// Split cells by neighbour counts into other cells until the ordered
/// partition is equitable. Sub-cells are ordered by count, so the result
/// depends on the graph only up to relabeling.
fn refine(rows: &[u64], mut p: Partition) -> Partition {
    'again: loop {
        for s in 0..p.len() {
            let mask = cell_mask(&p[s]);
            for c in 0..p.len() {
                if p[c].len() == 1 {
                    continue;
                }
                let counts: Vec<u32> = p[c].iter().map(|&v| (rows[v] & mask).count_ones()).collect();
                if counts.iter().all(|&k| k == counts[0]) {
                    continue;
                }
                let keys: BTreeSet<u32> = counts.iter().copied().collect();
                let parts: Vec<Vec<usize>> = keys
                    .into_iter()
                    .map(|key| p[c].iter().zip(&counts).filter(|(_, &k)| k == key).map(|(&v, _)| v).collect())
                    .collect();
                p.splice(c..=c, parts);
                continue 'again;
            }
        }
        return p;
    }
}

/// Adjacency rows relabeled so that `order[k]` becomes vertex `k`.
fn relabel(rows: &[u64], order: &[usize]) -> Vec<u64> {
    let mut pos = vec![0usize; rows.len()];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    order
        .iter()
        .map(|&v| {
            let mut r = 0u64;
            let mut bits = rows[v];
            while bits != 0 {
                let w = bits.trailing_zeros() as usize;
                r |= 1 << pos[w];
                bits &= bits - 1;
            }
            r
        })
        .collect()
}

fn search(rows: &[u64], p: Partition, best: &mut Option<Vec<u64>>) {
    match p.iter().position(|c| c.len() > 1) {
        None => {
            let order: Vec<usize> = p.iter().map(|c| c[0]).collect();
            let cert = relabel(rows, &order);
            if best.as_ref().is_none_or(|b| cert > *b) {
                *best = Some(cert);
            }
        }
        Some(c) => {
            for &v in &p[c] {
                let mut q = p.clone();
                let rest: Vec<usize> = p[c].iter().copied().filter(|&w| w != v).collect();
                q.splice(c..=c, [vec![v], rest]);
                search(rows, refine(rows, q), best);
            }
        }
    }
}

/// Canonical adjacency rows: isomorphic inputs give identical output.
/// Individualization–refinement without automorphism pruning, so the cost
/// grows with the automorphism group; fine for catalog-sized graphs.
pub fn canonical_rows(n: usize, rows: &[u64]) -> Vec<u64> {
    if n == 0 {
        return Vec::new();
    }
    let start = refine(rows, vec![(0..n).collect()]);
    let mut best = None;
    search(rows, start, &mut best);
    best.expect("search visits at least one leaf")
}

/// graph6 string of the canonical form.
pub fn canonical_graph6(g: &Graph) -> String {
    encode_graph6_bits(g.n(), &canonical_rows(g.n(), g.rows()))
}

/// Canonical adjacency rows of every graph on `n` vertices (connected or
/// not), one per isomorphism class, in increasing order.
pub fn all_graphs(n: usize) -> Result<Vec<Vec<u64>>> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if n > MAX_CATALOG_ORDER {
        return Err(Error::SizeLimit(format!("catalog generation supports n ≤ {MAX_CATALOG_ORDER}, got {n}")));
    }
    let mut level: Vec<Vec<u64>> = vec![vec![0]];
    for m in 2..=n {
        let found: BTreeSet<Vec<u64>> = level
            .par_iter()
            .flat_map_iter(|base| {
                (0u64..1 << (m - 1)).map(move |nbhd| {
                    let mut rows = base.clone();
                    for (i, r) in rows.iter_mut().enumerate() {
                        *r |= (nbhd >> i & 1) << (m - 1);
                    }
                    rows.push(nbhd);
                    canonical_rows(m, &rows)
                })
            })
            .collect();
        level = found.into_iter().collect();
    }
    Ok(level)
}

/// Every connected graph on `n` vertices, one per isomorphism class, sorted
/// by edge count and then by graph6 string.
pub fn connected_graphs(n: usize) -> Result<Vec<Graph>> {
    let mut out: Vec<Graph> = all_graphs(n)?
        .into_iter()
        .filter(|rows| rows_connected(rows))
        .map(|rows| Graph::from_rows(n, rows))
        .collect::<Result<_>>()?;
    out.sort_by_cached_key(|g| (g.edge_count(), g.to_graph6()));
    Ok(out)
}

/// Connected graphs for every order in `1..=max_n`, smallest orders first.
pub fn connected_graphs_up_to(max_n: usize) -> Result<Vec<Graph>> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        out.extend(connected_graphs(n)?);
    }
    Ok(out)
}

/// Write one graph6 line per graph.
pub fn write_graph6_file(path: &Path, graphs: &[Graph]) -> Result<()> {
    let mut text = String::new();
    for g in graphs {
        text.push_str(&g.to_graph6());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::GraphInput(format!("{}: {e}", path.display())))
}
