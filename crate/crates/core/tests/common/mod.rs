#![allow(dead_code)]

use qswiso_core::graph::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Classical jump process on the vertices (the ω = 0 walk): rate 1 along
/// every edge direction, rate `ε` along `u → v`. Returns the number of
/// `u → v` jumps per window after a burn-in.
pub fn gillespie_counts(g: &Graph, edge: (usize, usize), epsilon: f64, dt: f64, windows: usize, burn_in: f64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0u64; windows];
    let mut x = rng.random_range(0..g.n());
    let mut t = 0.0;
    let end = burn_in + windows as f64 * dt;
    loop {
        let nbrs: Vec<usize> = g.neighbors(x).collect();
        let aux = if x == edge.0 { epsilon } else { 0.0 };
        let total = nbrs.len() as f64 + aux;
        t += -(1.0 - rng.random::<f64>()).ln() / total;
        if t >= end {
            return out;
        }
        let pick = rng.random::<f64>() * total;
        if pick < nbrs.len() as f64 {
            x = nbrs[(pick as usize).min(nbrs.len() - 1)];
        } else {
            x = edge.1;
            if t >= burn_in {
                out[(((t - burn_in) / dt) as usize).min(windows - 1)] += 1;
            }
        }
    }
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[u64], b: &[u64]) -> (f64, f64) {
    let mut a: Vec<u64> = a.to_vec();
    let mut b: Vec<u64> = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut values: Vec<u64> = a.iter().chain(&b).copied().collect();
    values.sort_unstable();
    values.dedup();
    let mut d: f64 = 0.0;
    for v in values {
        let fa = a.partition_point(|&x| x <= v) as f64 / na;
        let fb = b.partition_point(|&x| x <= v) as f64 / nb;
        d = d.max((fa - fb).abs());
    }
    let ne = na * nb / (na + nb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_q(lambda))
}

/// `Q_KS(λ) = 2 Σ (−1)^{k−1} exp(−2k²λ²)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
