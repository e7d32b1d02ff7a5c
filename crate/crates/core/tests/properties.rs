use num_complex::Complex64;
use proptest::prelude::*;
use qswiso_core::catalog::canonical_graph6;
use qswiso_core::graph::{random_connected, Graph, Permutation};
use qswiso_core::liouville::{compose, AuxEdge};
use qswiso_core::spectral::{omega_spectrum, radius_bound, spectral_distance};
use qswiso_core::trajectory::k_statistics_raw;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph_and_perm(seed: u64, n: usize) -> (Graph, Permutation) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_connected(n, 0.4, &mut rng);
    let p = Permutation::random(n, &mut rng);
    (g, p)
}

fn non_edge(g: &Graph) -> Option<(usize, usize)> {
    (0..g.n()).flat_map(|i| (0..g.n()).map(move |j| (i, j))).find(|&(i, j)| i != j && !g.has_edge(i, j))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn omega_spectrum_is_relabeling_invariant(seed in any::<u64>(), n in 3usize..7, omega in 0.0f64..=1.0) {
        let (g, p) = graph_and_perm(seed, n);
        let h = g.apply_permutation(&p).unwrap();
        let d = spectral_distance(&omega_spectrum(&g, omega).unwrap(), &omega_spectrum(&h, omega).unwrap()).unwrap();
        prop_assert!(d < 1e-8, "δ = {d}");
    }

    #[test]
    fn spectrum_is_closed_under_conjugation(seed in any::<u64>(), n in 3usize..7, omega in 0.0f64..=1.0) {
        let (g, _) = graph_and_perm(seed, n);
        let s = omega_spectrum(&g, omega).unwrap();
        prop_assert!(s.conjugation_defect() < 1e-8);
        prop_assert!(s.max_real() < 1e-9);
        prop_assert!(s.max_abs() <= radius_bound(&g, omega) + 1e-9);
    }

    #[test]
    fn generator_preserves_trace(seed in any::<u64>(), n in 3usize..7, omega in 0.0f64..=1.0, eps in 0.0f64..1.0) {
        let (g, _) = graph_and_perm(seed, n);
        let aux = non_edge(&g).map(|(u, v)| AuxEdge::new(u, v, eps).unwrap());
        let s = compose(&g, omega, aux, 0.0).unwrap();
        let tr = s.trace_functional();
        prop_assert!(tr.iter().all(|z| z.norm() < 1e-12));
        prop_assert!(s.with_chi(Complex64::new(0.0, 0.0)).matrix() == s.matrix());
    }

    #[test]
    fn canonical_form_is_relabeling_invariant(seed in any::<u64>(), n in 2usize..10) {
        let (g, p) = graph_and_perm(seed, n);
        prop_assert_eq!(canonical_graph6(&g), canonical_graph6(&g.apply_permutation(&p).unwrap()));
    }

    #[test]
    fn k_statistics_shift_and_scale(xs in proptest::collection::vec(0u32..50, 8..60), shift in 0u32..20, scale in 1u32..4) {
        let x: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| scale as f64 * v + shift as f64).collect();
        let kx = k_statistics_raw(&x, 4).unwrap();
        let ky = k_statistics_raw(&y, 4).unwrap();
        let s = scale as f64;
        prop_assert!((ky[0] - (s * kx[0] + shift as f64)).abs() < 1e-9);
        for j in 1..4 {
            let want = s.powi(j as i32 + 1) * kx[j];
            prop_assert!((ky[j] - want).abs() <= 1e-8 * (1.0 + want.abs()), "k{}: {} vs {}", j + 1, ky[j], want);
        }
    }
}
