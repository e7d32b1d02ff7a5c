//! Cospectral-pair search over graph catalogs and ω-sweeps of the spectral
//! distance.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{are_isomorphic_bruteforce_with_limit, Graph, BRUTE_FORCE_LIMIT};
use crate::linalg::charpoly::integer_char_poly;
use crate::spectral::{omega_spectrum, radius_bound, Spectrum};

/// Largest vertex count searched without `allow_large`.
pub const SEARCH_MAX_N: usize = 8;
/// Largest catalog searched without `allow_large`.
pub const SEARCH_MAX_GRAPHS: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Invariant {
    /// `A`
    Adjacency,
    /// `L = D − A`
    Laplacian,
    /// `|L| = D + A`
    SignlessLaplacian,
    /// `Ā = J − A − 1`
    Complement,
}

impl Invariant {
    pub const ALL: [Invariant; 4] =
        [Invariant::Adjacency, Invariant::Laplacian, Invariant::SignlessLaplacian, Invariant::Complement];

    pub fn symbol(self) -> &'static str {
        match self {
            Invariant::Adjacency => "A",
            Invariant::Laplacian => "L",
            Invariant::SignlessLaplacian => "Q",
            Invariant::Complement => "Abar",
        }
    }
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Invariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Invariant> {
        match s.trim() {
            "A" | "adjacency" => Ok(Invariant::Adjacency),
            "L" | "laplacian" => Ok(Invariant::Laplacian),
            "Q" | "|L|" | "signless" | "signless-laplacian" => Ok(Invariant::SignlessLaplacian),
            "Abar" | "complement" => Ok(Invariant::Complement),
            other => Err(Error::InvalidParameter(format!("unknown invariant {other:?} (expected A, L, Q, Abar)"))),
        }
    }
}

/// Integer characteristic polynomials of the four matrix representations.
/// Two graphs are M-cospectral iff their M-polynomials are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub n: usize,
    pub polys: [Vec<i128>; 4],
}

impl Signature {
    pub fn of(g: &Graph) -> Signature {
        let n = g.n();
        let deg = g.degrees();
        let build = |f: &dyn Fn(usize, usize) -> i64| -> Vec<i128> {
            let m: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
            integer_char_poly(&m)
        };
        let a = |i: usize, j: usize| g.has_edge(i, j) as i64;
        let d = |i: usize, j: usize| if i == j { deg[i] as i64 } else { 0 };
        Signature {
            n,
            polys: [
                build(&a),
                build(&|i, j| d(i, j) - a(i, j)),
                build(&|i, j| d(i, j) + a(i, j)),
                build(&|i, j| (i != j) as i64 - a(i, j)),
            ],
        }
    }

    pub fn get(&self, inv: Invariant) -> &[i128] {
        &self.polys[inv as usize]
    }

    pub fn ties(&self, other: &Signature) -> Vec<Invariant> {
        if self.n != other.n {
            return Vec::new();
        }
        Invariant::ALL.into_iter().filter(|&i| self.get(i) == other.get(i)).collect()
    }
}

/// Position of a pair in the A/L class diagram.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    AdjacencyOnly,
    LaplacianOnly,
    AdjacencyAndLaplacian,
    /// Tied only by `|L|` and/or `Ā`.
    Neither,
}

impl Region {
    pub fn from_ties(ties: &[Invariant]) -> Region {
        match (ties.contains(&Invariant::Adjacency), ties.contains(&Invariant::Laplacian)) {
            (true, true) => Region::AdjacencyAndLaplacian,
            (true, false) => Region::AdjacencyOnly,
            (false, true) => Region::LaplacianOnly,
            (false, false) => Region::Neither,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Region::AdjacencyOnly => "adjacency-only",
            Region::LaplacianOnly => "laplacian-only",
            Region::AdjacencyAndLaplacian => "adjacency-and-laplacian",
            Region::Neither => "neither",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CospectralPair {
    /// Catalog indices, `first < second`.
    pub first: usize,
    pub second: usize,
    pub graph6: (String, String),
    /// All representations (among the four) for which the pair is cospectral.
    pub ties: Vec<Invariant>,
    pub region: Region,
    pub same_degrees: bool,
    pub delta: f64,
    pub tolerance: f64,
    pub omega_distinguished: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub omega: f64,
    pub tau: f64,
    pub invariants: Vec<Invariant>,
    pub graphs: usize,
    pub pairs: Vec<CospectralPair>,
    /// Pair counts keyed by the tie set, e.g. `"A+L+Q+Abar"`.
    pub classes: BTreeMap<String, usize>,
    /// Pair counts per region, and how many of them the ω-spectrum separates.
    pub regions: BTreeMap<String, (usize, usize)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    pub omega: f64,
    pub tau: f64,
    pub allow_large: bool,
}

fn guard(graphs: &[Graph], allow_large: bool) -> Result<()> {
    if allow_large {
        return Ok(());
    }
    if let Some(g) = graphs.iter().find(|g| g.n() > SEARCH_MAX_N) {
        return Err(Error::SizeLimit(format!(
            "catalog contains a graph on {} vertices; searches are limited to n ≤ {SEARCH_MAX_N} unless explicitly allowed",
            g.n()
        )));
    }
    if graphs.len() > SEARCH_MAX_GRAPHS {
        return Err(Error::SizeLimit(format!(
            "catalog has {} graphs; searches are limited to {SEARCH_MAX_GRAPHS} unless explicitly allowed",
            graphs.len()
        )));
    }
    Ok(())
}

pub fn signatures(graphs: &[Graph]) -> Vec<Signature> {
    graphs.par_iter().map(Signature::of).collect()
}

/// Non-isomorphic pairs tied by at least one requested invariant, each
/// tested for ω-spectrum distinguishability. Output is sorted by index pair.
pub fn search_cospectral(graphs: &[Graph], invariants: &[Invariant], opts: SearchOptions) -> Result<SearchReport> {
    guard(graphs, opts.allow_large)?;
    if invariants.is_empty() {
        return Err(Error::InvalidParameter("at least one invariant is required".into()));
    }
    let sigs = signatures(graphs);
    let mut candidates = BTreeSet::new();
    for &inv in invariants {
        let mut groups: HashMap<(usize, &[i128]), Vec<usize>> = HashMap::new();
        for (k, s) in sigs.iter().enumerate() {
            groups.entry((s.n, s.get(inv))).or_default().push(k);
        }
        for members in groups.values() {
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    candidates.insert((i.min(j), i.max(j)));
                }
            }
        }
    }
    let candidates: Vec<(usize, usize)> = candidates.into_iter().collect();
    let limit = if opts.allow_large { crate::graph::MAX_VERTICES } else { BRUTE_FORCE_LIMIT };
    let distinct: Vec<(usize, usize)> = candidates
        .par_iter()
        .map(|&(i, j)| Ok((!are_isomorphic_bruteforce_with_limit(&graphs[i], &graphs[j], limit)?).then_some((i, j))))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let involved: BTreeSet<usize> = distinct.iter().flat_map(|&(i, j)| [i, j]).collect();
    let spectra: HashMap<usize, Spectrum> = involved
        .into_par_iter()
        .map(|k| Ok((k, omega_spectrum(&graphs[k], opts.omega)?)))
        .collect::<Result<_>>()?;

    let mut pairs: Vec<CospectralPair> = distinct
        .into_iter()
        .map(|(i, j)| {
            let ties = sigs[i].ties(&sigs[j]);
            let delta = crate::spectral::spectral_distance(&spectra[&i], &spectra[&j])?;
            let tolerance = opts.tau * spectra[&i].len() as f64;
            Ok(CospectralPair {
                first: i,
                second: j,
                graph6: (graphs[i].to_graph6(), graphs[j].to_graph6()),
                region: Region::from_ties(&ties),
                ties,
                same_degrees: graphs[i].degree_multiset() == graphs[j].degree_multiset(),
                delta,
                tolerance,
                omega_distinguished: delta > tolerance,
            })
        })
        .collect::<Result<_>>()?;
    pairs.sort_by_key(|p| (p.first, p.second));

    let mut classes = BTreeMap::new();
    let mut regions: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for p in &pairs {
        let key = p.ties.iter().map(|t| t.symbol()).collect::<Vec<_>>().join("+");
        *classes.entry(key).or_insert(0) += 1;
        let e = regions.entry(p.region.name().to_string()).or_insert((0, 0));
        e.0 += 1;
        e.1 += p.omega_distinguished as usize;
    }
    Ok(SearchReport {
        omega: opts.omega,
        tau: opts.tau,
        invariants: invariants.to_vec(),
        graphs: graphs.len(),
        pairs,
        classes,
        regions,
    })
}

/// Spectrum with real and imaginary parts sorted independently, so the
/// spectral distance of two such profiles is a plain L1 distance.
#[derive(Clone, Debug)]
pub struct SortedParts {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl SortedParts {
    pub fn new(s: &Spectrum) -> SortedParts {
        let mut re: Vec<f64> = s.values().iter().map(|z| z.re).collect();
        let mut im: Vec<f64> = s.values().iter().map(|z| z.im).collect();
        re.sort_by(f64::total_cmp);
        im.sort_by(f64::total_cmp);
        SortedParts { re, im }
    }

    pub fn distance(&self, other: &SortedParts) -> f64 {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
        d(&self.re, &other.re) + d(&self.im, &other.im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub first: usize,
    pub second: usize,
    pub graph6: (String, String),
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub omega: f64,
    pub threshold_factor: f64,
    /// Pairs on equal vertex count distinguished by the A- or L-spectrum.
    pub pairs_checked: usize,
    /// Smallest ω-distance among those pairs, relative to `τ·n²`.
    pub min_relative_delta: f64,
    pub violations: Vec<Violation>,
}

/// Check that every pair separated by the A- or L-spectrum is also separated
/// by the ω-spectrum with `δ > factor·τ·n²`.
pub fn containment_check(graphs: &[Graph], omega: f64, tau: f64, factor: f64) -> Result<ContainmentReport> {
    let sigs = signatures(graphs);
    let profiles: Vec<SortedParts> = graphs
        .par_iter()
        .map(|g| Ok(SortedParts::new(&omega_spectrum(g, omega)?)))
        .collect::<Result<_>>()?;
    let rows: Vec<(usize, f64, Vec<Violation>)> = (0..graphs.len())
        .into_par_iter()
        .map(|i| {
            let mut checked = 0;
            let mut min_rel = f64::INFINITY;
            let mut bad = Vec::new();
            for j in i + 1..graphs.len() {
                if sigs[i].n != sigs[j].n {
                    continue;
                }
                let ties = sigs[i].ties(&sigs[j]);
                if ties.contains(&Invariant::Adjacency) && ties.contains(&Invariant::Laplacian) {
                    continue;
                }
                checked += 1;
                let tol = tau * (sigs[i].n * sigs[i].n) as f64;
                let delta = profiles[i].distance(&profiles[j]);
                min_rel = min_rel.min(delta / tol);
                if delta <= factor * tol {
                    bad.push(Violation {
                        first: i,
                        second: j,
                        graph6: (graphs[i].to_graph6(), graphs[j].to_graph6()),
                        delta,
                    });
                }
            }
            (checked, min_rel, bad)
        })
        .collect();
    let mut report = ContainmentReport {
        omega,
        threshold_factor: factor,
        pairs_checked: 0,
        min_relative_delta: f64::INFINITY,
        violations: Vec::new(),
    };
    for (c, m, v) in rows {
        report.pairs_checked += c;
        report.min_relative_delta = report.min_relative_delta.min(m);
        report.violations.extend(v);
    }
    Ok(report)
}

/// Evenly spaced ω values from a `lo:hi:count` spec.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidParameter(format!("grid {spec:?} is not of the form lo:hi:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 || !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::InvalidParameter(format!("grid {spec:?} needs 0 ≤ lo ≤ hi ≤ 1 and count ≥ 1")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub omega: f64,
    pub delta: f64,
    /// `max |ν|` over both spectra.
    pub max_abs: f64,
    /// `ω‖𝓛^qm‖_F + (1−ω)‖𝓛^cl‖_F`, the larger of the two graphs.
    pub radius_bound: f64,
}

/// `δ(ω)` between the ω-spectra of two graphs over a grid.
pub fn sweep(g1: &Graph, g2: &Graph, grid: &[f64]) -> Result<Vec<SweepPoint>> {
    if g1.n() != g2.n() {
        return Err(Error::InvalidParameter(format!("sweep needs equal vertex counts, got {} and {}", g1.n(), g2.n())));
    }
    grid.par_iter()
        .map(|&omega| {
            let a = omega_spectrum(g1, omega)?;
            let b = omega_spectrum(g2, omega)?;
            Ok(SweepPoint {
                omega,
                delta: SortedParts::new(&a).distance(&SortedParts::new(&b)),
                max_abs: a.max_abs().max(b.max_abs()),
                radius_bound: radius_bound(g1, omega).max(radius_bound(g2, omega)),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakProfile {
    pub start: f64,
    pub end: f64,
    pub max: f64,
    pub argmax: f64,
}

impl PeakProfile {
    pub fn of(points: &[SweepPoint]) -> Option<PeakProfile> {
        let first = points.first()?;
        let last = points.last()?;
        let peak = points.iter().max_by(|a, b| a.delta.total_cmp(&b.delta))?;
        Some(PeakProfile { start: first.delta, end: last.delta, max: peak.delta, argmax: peak.omega })
    }

    /// Endpoints below `tol`, maximum above `factor·tol` at an interior ω.
    pub fn is_peaked(&self, tol: f64, factor: f64) -> bool {
        self.start < tol && self.end < tol && self.max > factor * tol && self.argmax > 0.0 && self.argmax < 1.0
    }
}
