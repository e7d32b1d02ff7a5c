use super::Graph;
use crate::error::{Error, Result};

/// Largest vertex count accepted by [`are_isomorphic_bruteforce`].
pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Exhaustive isomorphism test by backtracking over vertex maps. Only
/// targets of equal degree are tried and each partial map is checked
/// against the already-placed vertices.
pub fn are_isomorphic_bruteforce(g1: &Graph, g2: &Graph) -> Result<bool> {
    are_isomorphic_bruteforce_with_limit(g1, g2, BRUTE_FORCE_LIMIT)
}

/// [`are_isomorphic_bruteforce`] with a caller-chosen size limit. Useful for
/// highly regular graphs where pruning keeps the search small.
pub fn are_isomorphic_bruteforce_with_limit(g1: &Graph, g2: &Graph, limit: usize) -> Result<bool> {
    let n = g1.n();
    if n.max(g2.n()) > limit {
        return Err(Error::SizeLimit(format!(
            "brute-force isomorphism supports n ≤ {limit}, got {}",
            n.max(g2.n())
        )));
    }
    if n != g2.n() || g1.edge_count() != g2.edge_count() || g1.degree_multiset() != g2.degree_multiset() {
        return Ok(false);
    }
    let d1 = g1.degrees();
    let d2 = g2.degrees();
    // place high-degree vertices first; they constrain the rest the most
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(d1[v]));
    let mut map = vec![usize::MAX; n];
    let mut used = 0u64;
    Ok(extend(g1, g2, &d1, &d2, &order, 0, &mut map, &mut used))
}

#[allow(clippy::too_many_arguments)]
fn extend(
    g1: &Graph,
    g2: &Graph,
    d1: &[usize],
    d2: &[usize],
    order: &[usize],
    depth: usize,
    map: &mut [usize],
    used: &mut u64,
) -> bool {
    if depth == order.len() {
        return true;
    }
    let v = order[depth];
    for w in 0..g2.n() {
        if *used >> w & 1 == 1 || d2[w] != d1[v] {
            continue;
        }
        let consistent = order[..depth]
            .iter()
            .all(|&x| g1.has_edge(v, x) == g2.has_edge(w, map[x]));
        if !consistent {
            continue;
        }
        map[v] = w;
        *used |= 1 << w;
        if extend(g1, g2, d1, d2, order, depth + 1, map, used) {
            return true;
        }
        *used &= !(1 << w);
        map[v] = usize::MAX;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{named_graph, random_connected, Permutation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn permuted_copies_are_isomorphic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(1..=8);
            let g = random_connected(n, 0.35, &mut rng);
            let p = Permutation::random(n, &mut rng);
            let h = g.apply_permutation(&p).unwrap();
            assert!(are_isomorphic_bruteforce(&g, &h).unwrap());
        }
    }

    #[test]
    fn path_vs_star() {
        let p4 = named_graph("path", Some(4)).unwrap();
        let star = named_graph("star", Some(4)).unwrap();
        assert!(!are_isomorphic_bruteforce(&p4, &star).unwrap());
    }

    #[test]
    fn same_degrees_not_isomorphic() {
        // C6 vs two triangles joined... must stay connected: C6 vs prism
        let c6 = named_graph("cycle", Some(6)).unwrap();
        let prism = Graph::new(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)]).unwrap();
        assert!(!are_isomorphic_bruteforce(&c6, &prism).unwrap());
        // 3-regular on 6: prism vs K3,3
        let k33 = Graph::new(6, &[(0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)]).unwrap();
        assert!(!are_isomorphic_bruteforce(&prism, &k33).unwrap());
    }

    #[test]
    fn shrikhande_is_not_rook4() {
        let a = named_graph("shrikhande", None).unwrap();
        let b = named_graph("rook4", None).unwrap();
        assert!(are_isomorphic_bruteforce(&a, &b).is_err());
        assert!(!are_isomorphic_bruteforce_with_limit(&a, &b, 16).unwrap());
        let p = Permutation::random(16, &mut ChaCha8Rng::seed_from_u64(5));
        assert!(are_isomorphic_bruteforce_with_limit(&a, &a.apply_permutation(&p).unwrap(), 16).unwrap());
    }

    #[test]
    fn size_limit() {
        let g = named_graph("path", Some(11)).unwrap();
        assert!(matches!(are_isomorphic_bruteforce(&g, &g), Err(Error::SizeLimit(_))));
    }
}
