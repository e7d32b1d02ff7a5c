//! Quantum-jump unraveling of the walk with a monitored auxiliary edge:
//! jump counts per time window and their k-statistics.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::liouville::{compose, AuxEdge};
use crate::linalg::eigen;

/// Bisection depth below the coarse step when locating a jump time.
const BISECTION_LEVELS: usize = 40;
/// Windows simulated per independent stream.
pub const WINDOWS_PER_STREAM: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub source: usize,
    pub target: usize,
    pub rate: f64,
    pub counted: bool,
}

/// Jump operators `|j⟩⟨i|` of the dissipative part, one per directed graph
/// edge with rate `1−ω`, plus the counted auxiliary channel with rate `ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub n: usize,
    pub channels: Vec<Channel>,
}

impl ChannelSet {
    pub fn new(g: &Graph, omega: f64, aux: AuxEdge) -> Result<ChannelSet> {
        aux.admissible_for(g)?;
        if !(0.0..=1.0).contains(&omega) {
            return Err(Error::InvalidParameter(format!("omega = {omega} outside [0, 1]")));
        }
        let mut channels = Vec::new();
        if omega < 1.0 {
            for &(i, j) in g.edges() {
                channels.push(Channel { source: i, target: j, rate: 1.0 - omega, counted: false });
                channels.push(Channel { source: j, target: i, rate: 1.0 - omega, counted: false });
            }
        }
        channels.push(Channel { source: aux.u, target: aux.v, rate: aux.epsilon, counted: true });
        Ok(ChannelSet { n: g.n(), channels })
    }

    /// `Σ` of rates of channels leaving `i`: `(1−ω)dᵢ + ε·[i = u]`.
    pub fn total_rate(&self, i: usize) -> f64 {
        self.channels.iter().filter(|c| c.source == i).map(|c| c.rate).sum()
    }

    pub fn max_total_rate(&self) -> f64 {
        (0..self.n).map(|i| self.total_rate(i)).fold(0.0, f64::max)
    }
}

/// `H_eff = ωA − (i/2)·Σ_i rate_out(i)|i⟩⟨i|`.
pub fn effective_hamiltonian(g: &Graph, omega: f64, channels: &ChannelSet) -> DMatrix<Complex64> {
    let n = g.n();
    let mut h = g.adjacency().map(|x| Complex64::new(omega * x, 0.0));
    for i in 0..n {
        h[(i, i)] -= Complex64::new(0.0, 0.5 * channels.total_rate(i));
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub channel: usize,
}

/// One unraveled trajectory. The state is kept unnormalized between jumps so
/// that its squared norm is the survival probability since the last jump.
pub struct Trajectory {
    channels: ChannelSet,
    /// `exp(−i H_eff τ_k)` for `τ_0 = coarse` and `τ_k = coarse·2^{−k}`.
    propagators: Vec<DMatrix<Complex64>>,
    steps: Vec<f64>,
    psi: DVector<Complex64>,
    time: f64,
    threshold: f64,
    rng: ChaCha8Rng,
}

impl Trajectory {
    pub fn new(g: &Graph, omega: f64, aux: AuxEdge, start: usize, rng: ChaCha8Rng) -> Result<Trajectory> {
        let channels = ChannelSet::new(g, omega, aux)?;
        if start >= g.n() {
            return Err(Error::VertexOutOfRange { vertex: start, n: g.n() });
        }
        let h = effective_hamiltonian(g, omega, &channels);
        let coarse = 1.0 / channels.max_total_rate().max(1e-12);
        let mut steps = Vec::with_capacity(BISECTION_LEVELS + 1);
        let mut propagators = Vec::with_capacity(BISECTION_LEVELS + 1);
        for k in 0..=BISECTION_LEVELS {
            let tau = coarse * 0.5f64.powi(k as i32);
            propagators.push((&h * Complex64::new(0.0, -tau)).exp());
            steps.push(tau);
        }
        let mut psi = DVector::zeros(g.n());
        psi[start] = Complex64::new(1.0, 0.0);
        let mut t = Trajectory { channels, propagators, steps, psi, time: 0.0, threshold: 0.0, rng };
        t.threshold = t.rng.random::<f64>();
        Ok(t)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    /// Normalized current state.
    pub fn state(&self) -> DVector<Complex64> {
        let norm = self.psi.norm();
        &self.psi / Complex64::new(norm, 0.0)
    }

    /// Squared norm of the unnormalized state: survival probability since
    /// the last jump.
    pub fn survival(&self) -> f64 {
        self.psi.norm_squared()
    }

    /// Evolve until the next jump or until `horizon`, whichever is first.
    pub fn next_jump(&mut self, horizon: f64) -> Option<Jump> {
        // coarse steps while the survival stays above the drawn threshold
        loop {
            if self.time >= horizon {
                return None;
            }
            let next = &self.propagators[0] * &self.psi;
            if next.norm_squared() <= self.threshold {
                break;
            }
            self.psi = next;
            self.time += self.steps[0];
        }
        for k in 1..=BISECTION_LEVELS {
            let next = &self.propagators[k] * &self.psi;
            if next.norm_squared() > self.threshold {
                self.psi = next;
                self.time += self.steps[k];
            }
        }
        self.time += self.steps[BISECTION_LEVELS];
        if self.time >= horizon {
            return None;
        }
        let weights: Vec<f64> =
            self.channels.channels.iter().map(|c| c.rate * self.psi[c.source].norm_sqr()).collect();
        let total: f64 = weights.iter().sum();
        let mut pick = self.rng.random::<f64>() * total;
        let mut channel = weights.len() - 1;
        for (k, w) in weights.iter().enumerate() {
            if pick < *w {
                channel = k;
                break;
            }
            pick -= w;
        }
        self.psi.fill(Complex64::new(0.0, 0.0));
        self.psi[self.channels.channels[channel].target] = Complex64::new(1.0, 0.0);
        self.threshold = self.rng.random::<f64>();
        Some(Jump { time: self.time, channel })
    }
}

/// Parameters of a counting run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub omega: f64,
    /// 0-based `(u, v)`.
    pub edge: (usize, usize),
    pub epsilon: f64,
    pub dt: f64,
    pub windows: usize,
    /// Time discarded at the start of every stream; `None` selects `10/gap`.
    pub burn_in: Option<f64>,
    pub seed: u64,
}

/// Jump counts across the auxiliary edge, one per window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub n: usize,
    pub graph6: String,
    pub omega: f64,
    pub edge: (usize, usize),
    pub epsilon: f64,
    pub dt: f64,
    pub windows: usize,
    pub burn_in: f64,
    pub seed: u64,
    pub streams: usize,
    pub counts: Vec<u64>,
}

/// Sidecar metadata: every parameter of the record except the counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountMeta {
    pub n: usize,
    pub graph6: String,
    pub omega: f64,
    pub edge: (usize, usize),
    pub epsilon: f64,
    pub dt: f64,
    pub windows: usize,
    pub burn_in: f64,
    pub seed: u64,
    pub streams: usize,
}

impl CountRecord {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("window,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{k},{c}\n"));
        }
        out
    }

    pub fn meta(&self) -> CountMeta {
        CountMeta {
            n: self.n,
            graph6: self.graph6.clone(),
            omega: self.omega,
            edge: self.edge,
            epsilon: self.epsilon,
            dt: self.dt,
            windows: self.windows,
            burn_in: self.burn_in,
            seed: self.seed,
            streams: self.streams,
        }
    }

    /// Empirical `p(N)` as `(N, frequency)`.
    pub fn histogram(&self) -> Vec<(u64, f64)> {
        let max = self.counts.iter().copied().max().unwrap_or(0) as usize;
        let mut h = vec![0usize; max + 1];
        for &c in &self.counts {
            h[c as usize] += 1;
        }
        let s = self.counts.len() as f64;
        h.into_iter().enumerate().filter(|(_, k)| *k > 0).map(|(n, k)| (n as u64, k as f64 / s)).collect()
    }
}

/// Smallest nonzero `|Re ν|` over the spectrum of the generator at `χ = 0`.
pub fn relaxation_gap(g: &Graph, omega: f64, aux: AuxEdge) -> Result<f64> {
    let s = compose(g, omega, Some(aux), 0.0)?;
    let values = eigen::eigenvalues(s.matrix())?;
    Ok(values.iter().map(|z| z.re.abs()).filter(|&x| x > 1e-12).fold(f64::INFINITY, f64::min))
}

/// Random stream for index `k` of a run with master seed `seed`.
pub fn stream_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Count jumps across the auxiliary edge in `windows` consecutive windows of
/// length `dt`. Windows are split over independent streams of
/// [`WINDOWS_PER_STREAM`], each with its own burn-in and random stream.
pub fn simulate(g: &Graph, cfg: &SimulationConfig) -> Result<CountRecord> {
    let aux = AuxEdge::new(cfg.edge.0, cfg.edge.1, cfg.epsilon)?;
    aux.admissible_for(g)?;
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("window length dt = {} must be positive", cfg.dt)));
    }
    if cfg.windows == 0 {
        return Err(Error::InvalidParameter("number of windows must be positive".into()));
    }
    let burn_in = match cfg.burn_in {
        Some(b) if b >= 0.0 => b,
        Some(b) => return Err(Error::InvalidParameter(format!("burn-in {b} is negative"))),
        None => {
            let gap = relaxation_gap(g, cfg.omega, aux)?;
            if gap.is_finite() {
                10.0 / gap
            } else {
                0.0
            }
        }
    };
    let streams = cfg.windows.div_ceil(WINDOWS_PER_STREAM);
    let blocks: Vec<Vec<u64>> = (0..streams)
        .into_par_iter()
        .map(|k| {
            let len = WINDOWS_PER_STREAM.min(cfg.windows - k * WINDOWS_PER_STREAM);
            let mut rng = stream_rng(cfg.seed, k as u64);
            let start = rng.random_range(0..g.n());
            let mut traj = Trajectory::new(g, cfg.omega, aux, start, rng)?;
            let end = burn_in + len as f64 * cfg.dt;
            let mut counts = vec![0u64; len];
            while let Some(jump) = traj.next_jump(end) {
                if traj.channels.channels[jump.channel].counted && jump.time >= burn_in {
                    let w = ((jump.time - burn_in) / cfg.dt) as usize;
                    counts[w.min(len - 1)] += 1;
                }
            }
            Ok(counts)
        })
        .collect::<Result<_>>()?;
    Ok(CountRecord {
        n: g.n(),
        graph6: g.to_graph6(),
        omega: cfg.omega,
        edge: cfg.edge,
        epsilon: cfg.epsilon,
        dt: cfg.dt,
        windows: cfg.windows,
        burn_in,
        seed: cfg.seed,
        streams,
        counts: blocks.concat(),
    })
}

/// k-statistics of the counts divided by `dt`, with standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantEstimates {
    pub samples: usize,
    pub dt: f64,
    /// Estimates of the reduced cumulants `c₁..c_order`.
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Unbiased k-statistics `k₁..k_order` (order ≤ 4) of a sample.
pub fn k_statistics_raw(x: &[f64], order: usize) -> Result<Vec<f64>> {
    if !(1..=4).contains(&order) {
        return Err(Error::InvalidParameter(format!("k-statistics are available up to order 4, not {order}")));
    }
    let s = x.len();
    if s <= order {
        return Err(Error::InsufficientSamples { needed: order, have: s });
    }
    let n = s as f64;
    let mean = x.iter().sum::<f64>() / n;
    let moment = |p: i32| x.iter().map(|v| (v - mean).powi(p)).sum::<f64>() / n;
    let (m2, m3, m4) = (moment(2), moment(3), moment(4));
    let all = [
        mean,
        n / (n - 1.0) * m2,
        n * n / ((n - 1.0) * (n - 2.0)) * m3,
        n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) / ((n - 1.0) * (n - 2.0) * (n - 3.0)),
    ];
    Ok(all[..order].to_vec())
}

/// Reduced-cumulant estimates `k_j/dt`. Standard errors are analytic for
/// orders 1 and 2 and delete-a-group jackknife (20 groups) for 3 and 4.
pub fn k_statistics(rec: &CountRecord, order: usize) -> Result<CumulantEstimates> {
    let x: Vec<f64> = rec.counts.iter().map(|&c| c as f64).collect();
    let k = k_statistics_raw(&x, order)?;
    let s = x.len() as f64;
    let mut stderr = Vec::with_capacity(order);
    // the analytic forms need k₂ and k₄ of the full sample
    let k4 = if s > 4.0 { k_statistics_raw(&x, 4)?[3] } else { f64::NAN };
    let k2 = if s > 2.0 { k_statistics_raw(&x, 2)?[1] } else { f64::NAN };
    for j in 1..=order {
        let se = match j {
            1 => (k2 / s).sqrt(),
            2 => (k4 / s + 2.0 * k2 * k2 / (s - 1.0)).max(0.0).sqrt(),
            _ => jackknife(&x, j),
        };
        stderr.push(se / rec.dt);
    }
    Ok(CumulantEstimates { samples: x.len(), dt: rec.dt, values: k.iter().map(|v| v / rec.dt).collect(), stderr })
}

fn jackknife(x: &[f64], order: usize) -> f64 {
    let groups = 20usize;
    let size = x.len() / groups;
    if size == 0 || x.len() - size <= order {
        return f64::NAN;
    }
    let est: Vec<f64> = (0..groups)
        .filter_map(|gi| {
            let rest: Vec<f64> =
                x.iter().enumerate().filter(|(i, _)| i / size != gi).map(|(_, v)| *v).collect();
            k_statistics_raw(&rest, order).ok().map(|k| k[order - 1])
        })
        .collect();
    let g = est.len() as f64;
    let mean = est.iter().sum::<f64>() / g;
    ((g - 1.0) / g * est.iter().map(|e| (e - mean).powi(2)).sum::<f64>()).sqrt()
}

/// Empirical variance of `ĉ_k` over repeated batches at each sample size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceScalingReport {
    pub order: usize,
    pub batches: usize,
    /// `(s, var(ĉ_k))`.
    pub points: Vec<(usize, f64)>,
    /// `−d log var / d log s` from a least-squares fit.
    pub exponent: f64,
    pub within_tolerance: bool,
}

/// Exponent `p` of `var(ĉ_k) ∝ s^{−p}`, expected in `[0.8, 1.2]`.
pub fn variance_scaling_check(
    g: &Graph,
    base: &SimulationConfig,
    order: usize,
    sizes: &[usize],
    batches: usize,
) -> Result<VarianceScalingReport> {
    if !(1..=4).contains(&order) {
        return Err(Error::InvalidParameter(format!("order {order} outside 1..=4")));
    }
    if sizes.len() < 2 || batches < 2 {
        return Err(Error::InvalidParameter("need at least two sample sizes and two batches".into()));
    }
    let mut seeds = ChaCha8Rng::seed_from_u64(base.seed);
    let mut points = Vec::with_capacity(sizes.len());
    for &s in sizes {
        let estimates: Vec<f64> = (0..batches)
            .map(|_| {
                let cfg = SimulationConfig { windows: s, seed: seeds.random(), ..base.clone() };
                let rec = simulate(g, &cfg)?;
                let x: Vec<f64> = rec.counts.iter().map(|&c| c as f64).collect();
                Ok(k_statistics_raw(&x, order)?[order - 1] / base.dt)
            })
            .collect::<Result<_>>()?;
        let mean = estimates.iter().sum::<f64>() / batches as f64;
        let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
        if var <= 0.0 {
            return Err(Error::InvalidParameter(format!("zero variance of the order-{order} estimator at s = {s}")));
        }
        points.push((s, var));
    }
    let xs: Vec<f64> = points.iter().map(|(s, _)| (*s as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    let exponent = -least_squares_slope(&xs, &ys);
    Ok(VarianceScalingReport {
        order,
        batches,
        points,
        exponent,
        within_tolerance: (0.8..=1.2).contains(&exponent),
    })
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named_graph;

    fn p3() -> Graph {
        named_graph("path", Some(3)).unwrap()
    }

    #[test]
    fn channel_rates() {
        let g = p3();
        let ch = ChannelSet::new(&g, 0.25, AuxEdge::new(0, 2, 0.01).unwrap()).unwrap();
        assert_eq!(ch.channels.iter().filter(|c| c.counted).count(), 1);
        assert!((ch.total_rate(0) - (0.75 + 0.01)).abs() < 1e-15);
        assert!((ch.total_rate(1) - 1.5).abs() < 1e-15);
        assert!((ch.total_rate(2) - 0.75).abs() < 1e-15);
        assert!(ChannelSet::new(&g, 0.25, AuxEdge::new(0, 1, 0.01).unwrap()).is_err());
    }

    #[test]
    fn survival_matches_norm_decay() {
        // between jumps d/dt ‖ψ‖² = −Σ rate·|ψ_i|²
        let g = p3();
        let aux = AuxEdge::new(0, 2, 0.3).unwrap();
        let ch = ChannelSet::new(&g, 0.5, aux).unwrap();
        let h = effective_hamiltonian(&g, 0.5, &ch);
        let mut psi = DVector::from_vec(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8), Complex64::new(0.0, 0.0)]);
        let dt = 1e-4;
        let u = (&h * Complex64::new(0.0, -dt)).exp();
        for _ in 0..100 {
            let loss: f64 = (0..3).map(|i| ch.total_rate(i) * psi[i].norm_sqr()).sum();
            let next = &u * &psi;
            let predicted = psi.norm_squared() - loss * dt;
            assert!((next.norm_squared() - predicted).abs() < 1e-7);
            psi = next;
        }
    }

    #[test]
    fn classical_limit_stays_on_basis_states() {
        let g = named_graph("path", Some(4)).unwrap();
        let mut t = Trajectory::new(&g, 0.0, AuxEdge::new(0, 3, 0.1).unwrap(), 1, stream_rng(3, 0)).unwrap();
        for _ in 0..200 {
            t.next_jump(1e9).unwrap();
            let st = t.state();
            assert_eq!(st.iter().filter(|z| z.norm() > 1e-12).count(), 1);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let g = p3();
        let cfg = SimulationConfig { omega: 0.5, edge: (0, 2), epsilon: 0.05, dt: 5.0, windows: 1500, burn_in: None, seed: 11 };
        let a = simulate(&g, &cfg).unwrap();
        let b = simulate(&g, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts.len(), 1500);
        assert_eq!(a.streams, 2);
        let c = simulate(&g, &SimulationConfig { seed: 12, ..cfg.clone() }).unwrap();
        assert_ne!(a.counts, c.counts);
        assert!(a.to_csv().starts_with("window,count\n0,"));
        let total: f64 = a.histogram().iter().map(|(_, f)| f).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        let g = p3();
        let cfg = SimulationConfig { omega: 0.5, edge: (0, 1), epsilon: 0.05, dt: 5.0, windows: 10, burn_in: Some(0.0), seed: 1 };
        assert!(simulate(&g, &cfg).is_err());
        assert!(simulate(&g, &SimulationConfig { edge: (0, 2), dt: 0.0, ..cfg.clone() }).is_err());
        assert!(simulate(&g, &SimulationConfig { edge: (0, 2), windows: 0, ..cfg }).is_err());
    }

    #[test]
    fn k_statistics_examples() {
        let k = k_statistics_raw(&[1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(k, vec![2.0, 1.0]);
        let k = k_statistics_raw(&[1.0, 2.0, 3.0, 10.0, 2.0], 3).unwrap();
        assert!(k[2] > 0.0);
        let k = k_statistics_raw(&[1.0, 2.0, 3.0, 2.0], 3).unwrap();
        assert!(k[2].abs() < 1e-15);
        let k = k_statistics_raw(&[4.0; 10], 4).unwrap();
        assert_eq!(&k[1..], &[0.0, 0.0, 0.0]);
        assert!(matches!(k_statistics_raw(&[1.0, 2.0], 2), Err(Error::InsufficientSamples { .. })));
        assert!(k_statistics_raw(&[1.0; 10], 5).is_err());
    }

    #[test]
    fn k_statistics_on_poisson_counts() {
        // Knuth sampler; all cumulants of a Poisson law equal its mean
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let lambda: f64 = 0.8;
        let dt = 4.0;
        let counts: Vec<u64> = (0..20000)
            .map(|_| {
                let l = (-lambda * dt).exp();
                let (mut k, mut p) = (0u64, 1.0);
                loop {
                    p *= rng.random::<f64>();
                    if p <= l {
                        return k;
                    }
                    k += 1;
                }
            })
            .collect();
        let rec = CountRecord {
            n: 1,
            graph6: String::new(),
            omega: 0.0,
            edge: (0, 1),
            epsilon: 1.0,
            dt,
            windows: counts.len(),
            burn_in: 0.0,
            seed: 9,
            streams: 1,
            counts,
        };
        let est = k_statistics(&rec, 4).unwrap();
        for j in 0..4 {
            assert!((est.values[j] - lambda).abs() < 4.0 * est.stderr[j], "k{}: {} ± {}", j + 1, est.values[j], est.stderr[j]);
        }
    }
}
