//! Undirected simple connected graphs and their matrix representations.

mod graph6;
mod iso;
mod named;

pub use graph6::{decode_graph6_bits, encode_graph6_bits, parse_graph6, read_graph6_file};
pub use iso::{are_isomorphic_bruteforce, are_isomorphic_bruteforce_with_limit, BRUTE_FORCE_LIMIT};
pub use named::named_graph;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real matrix; symmetric for every representation produced here.
pub type RealMatrix = DMatrix<f64>;

/// Adjacency rows are stored as 64-bit masks.
pub const MAX_VERTICES: usize = 64;

/// An undirected simple connected graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    rows: Vec<u64>,
}

impl Graph {
    /// Build a graph, rejecting self-loops, repeated edges, out-of-range
    /// vertices and disconnected inputs. Edge orientation is irrelevant.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if n > MAX_VERTICES {
            return Err(Error::TooManyVertices { n, max: MAX_VERTICES });
        }
        let mut rows = vec![0u64; n];
        for &(a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            if rows[a] >> b & 1 == 1 {
                return Err(Error::MultiEdge(a.min(b), a.max(b)));
            }
            rows[a] |= 1 << b;
            rows[b] |= 1 << a;
        }
        Graph::from_rows(n, rows)
    }

    /// Build from adjacency bit rows (bit `j` of `rows[i]` set iff i ~ j).
    /// The rows must be symmetric with an empty diagonal.
    pub fn from_rows(n: usize, rows: Vec<u64>) -> Result<Graph> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if n > MAX_VERTICES || rows.len() != n {
            return Err(Error::TooManyVertices { n, max: MAX_VERTICES });
        }
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let mut edges = Vec::new();
        for i in 0..n {
            if rows[i] & !mask != 0 {
                return Err(Error::VertexOutOfRange { vertex: 64 - rows[i].leading_zeros() as usize - 1, n });
            }
            if rows[i] >> i & 1 == 1 {
                return Err(Error::SelfLoop(i));
            }
            for j in i + 1..n {
                let ij = rows[i] >> j & 1;
                if ij != rows[j] >> i & 1 {
                    return Err(Error::GraphInput(format!("asymmetric adjacency at ({i}, {j})")));
                }
                if ij == 1 {
                    edges.push((i, j));
                }
            }
        }
        let components = count_components(&rows);
        if components > 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(Graph { n, edges, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(i, j)` with `i < j`, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Adjacency bit rows.
    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && self.rows[i] >> j & 1 == 1
    }

    pub fn degree(&self, i: usize) -> usize {
        self.rows[i].count_ones() as usize
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    /// Sorted degree sequence.
    pub fn degree_multiset(&self) -> Vec<usize> {
        let mut d = self.degrees();
        d.sort_unstable();
        d
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let row = self.rows[i];
        (0..self.n).filter(move |&j| row >> j & 1 == 1)
    }

    /// `A`: symmetric 0/1 with zero diagonal.
    pub fn adjacency(&self) -> RealMatrix {
        DMatrix::from_fn(self.n, self.n, |i, j| if self.has_edge(i, j) { 1.0 } else { 0.0 })
    }

    pub fn degree_matrix(&self) -> RealMatrix {
        DMatrix::from_fn(self.n, self.n, |i, j| if i == j { self.degree(i) as f64 } else { 0.0 })
    }

    /// `L = D - A`.
    pub fn laplacian(&self) -> RealMatrix {
        self.degree_matrix() - self.adjacency()
    }

    /// `|L| = D + A`.
    pub fn signless_laplacian(&self) -> RealMatrix {
        self.degree_matrix() + self.adjacency()
    }

    /// Adjacency of the complement, `J - A - 1`.
    pub fn complement_adjacency(&self) -> RealMatrix {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            if i == j || self.has_edge(i, j) {
                0.0
            } else {
                1.0
            }
        })
    }

    /// Relabel vertex `i` as `p(i)`.
    pub fn apply_permutation(&self, p: &Permutation) -> Result<Graph> {
        if p.len() != self.n {
            return Err(Error::PermutationLength { expected: self.n, got: p.len() });
        }
        let edges: Vec<_> = self.edges.iter().map(|&(i, j)| (p.apply(i), p.apply(j))).collect();
        Graph::new(self.n, &edges)
    }

    /// Edge-list JSON form, `{"n": .., "edges": [[i, j], ..]}` with 0-based labels.
    pub fn to_edge_list(&self) -> EdgeList {
        EdgeList {
            n: self.n,
            edges: self.edges.iter().map(|&(i, j)| [i, j]).collect(),
        }
    }
}

/// Serialized edge-list form of a graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeList {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl TryFrom<EdgeList> for Graph {
    type Error = Error;

    fn try_from(list: EdgeList) -> Result<Graph> {
        let edges: Vec<_> = list.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::new(list.n, &edges)
    }
}

fn count_components(rows: &[u64]) -> usize {
    let n = rows.len();
    let mut seen = 0u64;
    let mut components = 0;
    for start in 0..n {
        if seen >> start & 1 == 1 {
            continue;
        }
        components += 1;
        let mut frontier = 1u64 << start;
        seen |= frontier;
        while frontier != 0 {
            let mut next = 0;
            let mut f = frontier;
            while f != 0 {
                let v = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= rows[v];
            }
            frontier = next & !seen;
            seen |= frontier;
        }
    }
    components
}

/// True when the adjacency rows describe a connected graph.
pub fn rows_connected(rows: &[u64]) -> bool {
    !rows.is_empty() && count_components(rows) == 1
}

/// A bijection on `0..n`; vertex `i` maps to `image[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Permutation> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &x in &image {
            if x >= n || seen[x] {
                return Err(Error::InvalidPermutation(format!("{image:?}")));
            }
            seen[x] = true;
        }
        Ok(Permutation { image })
    }

    pub fn identity(n: usize) -> Permutation {
        Permutation { image: (0..n).collect() }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Permutation {
        let mut image: Vec<usize> = (0..n).collect();
        image.shuffle(rng);
        Permutation { image }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.image.len()];
        for (i, &p) in self.image.iter().enumerate() {
            inv[p] = i;
        }
        Permutation { image: inv }
    }

    /// `Π` with `Π[p(i), i] = 1`, so that `Π A Πᵀ` is the relabeled adjacency.
    pub fn matrix(&self) -> RealMatrix {
        let n = self.image.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &p) in self.image.iter().enumerate() {
            m[(p, i)] = 1.0;
        }
        m
    }
}

/// Random connected graph: a random spanning tree plus each remaining pair
/// independently with probability `p`.
pub fn random_connected<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    assert!((1..=MAX_VERTICES).contains(&n));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut rows = vec![0u64; n];
    for k in 1..n {
        let a = order[k];
        let b = order[rng.random_range(0..k)];
        rows[a] |= 1 << b;
        rows[b] |= 1 << a;
    }
    for i in 0..n {
        for j in i + 1..n {
            if rows[i] >> j & 1 == 0 && rng.random_bool(p) {
                rows[i] |= 1 << j;
                rows[j] |= 1 << i;
            }
        }
    }
    Graph::from_rows(n, rows).expect("spanning tree keeps the graph connected")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_invalid_input() {
        assert!(matches!(Graph::new(3, &[(0, 0)]), Err(Error::SelfLoop(0))));
        assert!(matches!(Graph::new(3, &[(0, 1), (1, 0), (1, 2)]), Err(Error::MultiEdge(0, 1))));
        assert!(matches!(Graph::new(3, &[(0, 3)]), Err(Error::VertexOutOfRange { vertex: 3, n: 3 })));
        assert!(matches!(Graph::new(4, &[(0, 1), (2, 3)]), Err(Error::Disconnected { components: 2 })));
        assert!(matches!(Graph::new(0, &[]), Err(Error::EmptyGraph)));
    }

    #[test]
    fn edges_are_normalized() {
        let g = Graph::new(3, &[(2, 1), (1, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(g.degrees(), vec![1, 2, 1]);
    }

    #[test]
    fn k2_adjacency() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        assert_eq!(g.adjacency(), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn p3_laplacian() {
        let g = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        assert_eq!(g.laplacian(), expected);
    }

    #[test]
    fn representations_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.random_range(1..=10);
            let g = random_connected(n, 0.3, &mut rng);
            let l = g.laplacian();
            for i in 0..n {
                assert_eq!(l.row(i).sum(), 0.0);
            }
            let a = g.adjacency();
            assert_eq!(a, a.transpose());
            assert!(a.diagonal().iter().all(|&x| x == 0.0));
            let sl = g.signless_laplacian();
            assert_eq!(sl, sl.transpose());
            let ca = g.complement_adjacency();
            assert_eq!(ca, ca.transpose());
            let j = DMatrix::from_element(n, n, 1.0);
            assert_eq!(ca, j - &a - DMatrix::identity(n, n));
        }
    }

    #[test]
    fn permutation_matches_matrix_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(2..=8);
            let g = random_connected(n, 0.4, &mut rng);
            let p = Permutation::random(n, &mut rng);
            let h = g.apply_permutation(&p).unwrap();
            let pm = p.matrix();
            assert_eq!(h.adjacency(), &pm * g.adjacency() * pm.transpose());
            assert_eq!(h.degree_multiset(), g.degree_multiset());
            assert_eq!(h.edge_count(), g.edge_count());
            let inv = p.inverse();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(h.has_edge(i, j), g.has_edge(inv.apply(i), inv.apply(j)));
                }
            }
        }
    }

    #[test]
    fn identity_and_reversal() {
        let g = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.apply_permutation(&Permutation::identity(3)).unwrap(), g);
        let rev = Permutation::new(vec![2, 1, 0]).unwrap();
        let h = g.apply_permutation(&rev).unwrap();
        assert_eq!(h.degrees(), vec![1, 2, 1]);
        assert!(matches!(
            g.apply_permutation(&Permutation::identity(4)),
            Err(Error::PermutationLength { expected: 3, got: 4 })
        ));
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
    }
}
