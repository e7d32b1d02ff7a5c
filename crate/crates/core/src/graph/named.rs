use super::Graph;
use crate::error::{Error, Result};

/// Named fixture graphs: `path n`, `cycle n`, `complete n`, `star n`
/// (K₁,ₙ₋₁), `shrikhande` and `rook4` (the 4×4 rook's graph L₂(4)).
pub fn named_graph(name: &str, param: Option<usize>) -> Result<Graph> {
    let need = |min: usize| -> Result<usize> {
        match param {
            Some(n) if n >= min => Ok(n),
            Some(n) => Err(Error::InvalidParameter(format!("{name} needs n ≥ {min}, got {n}"))),
            None => Err(Error::InvalidParameter(format!("{name} needs a vertex count"))),
        }
    };
    let none = || -> Result<()> {
        match param {
            None => Ok(()),
            Some(_) => Err(Error::InvalidParameter(format!("{name} takes no parameter"))),
        }
    };
    match name {
        "path" => {
            let n = need(1)?;
            Graph::new(n, &(1..n).map(|i| (i - 1, i)).collect::<Vec<_>>())
        }
        "cycle" => {
            let n = need(3)?;
            Graph::new(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
        }
        "complete" => {
            let n = need(1)?;
            let edges: Vec<_> = (0..n).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
            Graph::new(n, &edges)
        }
        "star" => {
            let n = need(2)?;
            Graph::new(n, &(1..n).map(|i| (0, i)).collect::<Vec<_>>())
        }
        "shrikhande" => {
            none()?;
            Ok(shrikhande())
        }
        "rook4" => {
            none()?;
            Ok(rook4())
        }
        _ => Err(Error::UnknownGraph(name.to_string())),
    }
}

fn torus_index(a: usize, b: usize) -> usize {
    4 * (a % 4) + b % 4
}

/// Cayley graph on ℤ₄×ℤ₄ with connection set ±{(1,0), (0,1), (1,1)}.
fn shrikhande() -> Graph {
    let mut edges = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for (da, db) in [(1, 0), (0, 1), (1, 1)] {
                edges.push((torus_index(a, b), torus_index(a + da, b + db)));
            }
        }
    }
    Graph::new(16, &edges).expect("shrikhande construction is simple and connected")
}

/// 4×4 grid, adjacent iff same row or same column.
fn rook4() -> Graph {
    let mut edges = Vec::new();
    for v in 0..16 {
        for w in v + 1..16 {
            if v / 4 == w / 4 || v % 4 == w % 4 {
                edges.push((v, w));
            }
        }
    }
    Graph::new(16, &edges).expect("rook graph construction is simple and connected")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Common-neighbour count for adjacent and non-adjacent pairs.
    fn srg_parameters(g: &Graph) -> Option<(usize, usize, usize)> {
        let k = g.degree(0);
        let (mut lambda, mut mu) = (None, None);
        for i in 0..g.n() {
            if g.degree(i) != k {
                return None;
            }
            for j in i + 1..g.n() {
                let common = (g.rows()[i] & g.rows()[j]).count_ones() as usize;
                let slot = if g.has_edge(i, j) { &mut lambda } else { &mut mu };
                match *slot {
                    None => *slot = Some(common),
                    Some(c) if c != common => return None,
                    _ => {}
                }
            }
        }
        Some((k, lambda?, mu?))
    }

    #[test]
    fn strongly_regular_pair() {
        for name in ["shrikhande", "rook4"] {
            let g = named_graph(name, None).unwrap();
            assert_eq!(g.n(), 16);
            assert_eq!(g.edge_count(), 48);
            assert_eq!(srg_parameters(&g), Some((6, 2, 2)), "{name}");
        }
    }

    #[test]
    fn small_families() {
        let k2 = named_graph("complete", Some(2)).unwrap();
        assert_eq!(k2.edges(), &[(0, 1)]);
        assert_eq!(named_graph("cycle", Some(4)).unwrap().edge_count(), 4);
        assert_eq!(named_graph("path", Some(3)).unwrap().degrees(), vec![1, 2, 1]);
        assert_eq!(named_graph("star", Some(4)).unwrap().degree_multiset(), vec![1, 1, 1, 3]);
        assert_eq!(named_graph("complete", Some(5)).unwrap().edge_count(), 10);
    }

    #[test]
    fn errors() {
        assert!(matches!(named_graph("petersen", None), Err(Error::UnknownGraph(_))));
        assert!(matches!(named_graph("cycle", Some(2)), Err(Error::InvalidParameter(_))));
        assert!(matches!(named_graph("path", None), Err(Error::InvalidParameter(_))));
        assert!(matches!(named_graph("rook4", Some(3)), Err(Error::InvalidParameter(_))));
    }
}
