//! Cospectral pairs found by exhaustive catalog search, frozen as graph6.

use qswiso_core::graph::{are_isomorphic_bruteforce, parse_graph6};
use qswiso_core::search::{parse_grid, sweep, Invariant, PeakProfile, Signature};
use qswiso_core::spectral::{compare, DEFAULT_TAU};

/// The only connected pairs on at most 9 vertices that are cospectral for
/// A, L, |L| and Ā at once (none exist on 8 or fewer vertices).
pub const FULLY_COSPECTRAL_9: [(&str, &str); 3] =
    [("HAdlbij", "HAdtRUt"), ("H?CBKXt", "H?CJ?nd"), ("HO@]pxx", "HO@{qtx")];

/// Connected L-cospectral pairs on 6 vertices with different degree sequences.
pub const LAPLACIAN_COSPECTRAL_6: [(&str, &str); 2] = [("E@ro", "EBYW"), ("EB^_", "EKdw")];

/// The connected A-cospectral pair on 6 vertices.
pub const ADJACENCY_COSPECTRAL_6: (&str, &str) = ("E@Rw", "E@]o");

#[test]
fn fully_cospectral_pairs_peak_at_intermediate_coherence() {
    let grid = parse_grid("0:1:101").unwrap();
    for (a, b) in FULLY_COSPECTRAL_9 {
        let (g1, g2) = (parse_graph6(a).unwrap(), parse_graph6(b).unwrap());
        assert!(!are_isomorphic_bruteforce(&g1, &g2).unwrap());
        assert_eq!(Signature::of(&g1).ties(&Signature::of(&g2)), Invariant::ALL.to_vec());
        assert_eq!(g1.degree_multiset(), g2.degree_multiset());
        let tol = DEFAULT_TAU * 81.0;
        let peak = PeakProfile::of(&sweep(&g1, &g2, &grid).unwrap()).unwrap();
        assert!(peak.is_peaked(tol, 1e3), "{a} {b}: {peak:?}");
        assert!(peak.argmax > 0.1 && peak.argmax < 0.4);
    }
}

#[test]
fn laplacian_pairs_separated_in_classical_limit() {
    for (a, b) in LAPLACIAN_COSPECTRAL_6 {
        let (g1, g2) = (parse_graph6(a).unwrap(), parse_graph6(b).unwrap());
        let ties = Signature::of(&g1).ties(&Signature::of(&g2));
        assert!(ties.contains(&Invariant::Laplacian) && !ties.contains(&Invariant::Adjacency));
        assert_ne!(g1.degree_multiset(), g2.degree_multiset());
        let r = compare(&g1, &g2, 0.0, DEFAULT_TAU).unwrap();
        assert!(r.delta > 1e3 * r.tolerance, "{a} {b}: δ = {}", r.delta);
    }
}

#[test]
fn adjacency_pair_separated_at_all_coherences() {
    let (g1, g2) = (parse_graph6(ADJACENCY_COSPECTRAL_6.0).unwrap(), parse_graph6(ADJACENCY_COSPECTRAL_6.1).unwrap());
    assert_eq!(Signature::of(&g1).ties(&Signature::of(&g2)), vec![Invariant::Adjacency]);
    for omega in [0.0, 0.25, 0.5, 0.75] {
        let r = compare(&g1, &g2, omega, DEFAULT_TAU).unwrap();
        assert!(r.delta > 1e3 * r.tolerance);
    }
    // the coherent limit only sees differences of A-eigenvalues
    assert!(compare(&g1, &g2, 1.0, DEFAULT_TAU).unwrap().delta < 1e-8);
}
