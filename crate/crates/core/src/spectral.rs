//! Spectra of walk generators, their characteristic polynomials, the
//! ω-spectrum invariant and the distance used to compare two graphs.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::liouville::{build_classical, build_quantum, compose, SuperOperator};
use crate::linalg::{charpoly, eigen};

/// Default per-dimension cospectrality threshold: two spectra are
/// distinguished when `δ > tau · dim`.
pub const DEFAULT_TAU: f64 = 1e-7;

/// Faddeev–LeVerrier is used up to this dimension, Vieta above it.
pub const FADDEEV_LEVERRIER_MAX_DIM: usize = 100;

/// Allowed imaginary residue of characteristic-polynomial coefficients,
/// relative to `max(1, max_k |q_k|)`.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-9;

fn canonical_cmp(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Multiset of eigenvalues in canonical `(Re, Im)` lexicographic order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(mut values: Vec<Complex64>) -> Spectrum {
        values.sort_by(canonical_cmp);
        Spectrum { values }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_real(&self) -> f64 {
        self.values.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Number of clusters when values closer than `tol` are merged
    /// (single linkage).
    pub fn distinct_count(&self, tol: f64) -> usize {
        let n = self.values.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for i in 0..n {
            for j in i + 1..n {
                if self.values[j].re - self.values[i].re > tol {
                    break;
                }
                if (self.values[i] - self.values[j]).norm() <= tol {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        (0..n).filter(|&i| find(&mut parent, i) == i).count()
    }

    /// Largest distance between a value and its partner in the conjugate
    /// multiset, after optimal pairing of the sorted lists.
    pub fn conjugation_defect(&self) -> f64 {
        let conj = Spectrum::new(self.values.iter().map(|z| z.conj()).collect());
        spectral_distance_unchecked(self, &conj)
    }

    pub fn to_json(&self, omega: f64, n: usize) -> SpectrumJson {
        SpectrumJson {
            omega,
            n,
            values: self.values.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

/// `{"omega": x, "n": n, "values": [[re, im], ...]}` in canonical order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub omega: f64,
    pub n: usize,
    pub values: Vec<[f64; 2]>,
}

impl From<&SpectrumJson> for Spectrum {
    fn from(j: &SpectrumJson) -> Spectrum {
        Spectrum::new(j.values.iter().map(|v| Complex64::new(v[0], v[1])).collect())
    }
}

/// Monic real characteristic polynomial; `coeffs[i]` multiplies `ν^i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharPoly {
    pub coeffs: Vec<f64>,
}

impl CharPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        charpoly::eval_real(&self.coeffs, x)
    }
}

/// Whether two spectra are told apart at a given threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Distinguished,
    CospectralWithinTolerance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub delta: f64,
    pub verdict: Verdict,
    pub omega: f64,
    /// Threshold `tau · dim` the distance was compared against.
    pub tolerance: f64,
}

/// All eigenvalues of a superoperator.
pub fn eigenvalues(s: &SuperOperator) -> Result<Spectrum> {
    Ok(Spectrum::new(eigen::eigenvalues(s.matrix())?))
}

/// Characteristic polynomial of a superoperator, real to
/// [`IMAGINARY_RESIDUE_TOL`].
pub fn char_poly(s: &SuperOperator) -> Result<CharPoly> {
    char_poly_of(s.matrix())
}

pub(crate) fn char_poly_of(m: &DMatrix<Complex64>) -> Result<CharPoly> {
    let raw = if m.nrows() <= FADDEEV_LEVERRIER_MAX_DIM {
        charpoly::faddeev_leverrier(m)
    } else {
        charpoly::from_roots(&eigen::eigenvalues(m)?)
    };
    truncate_imaginary(&raw)
}

pub(crate) fn truncate_imaginary(raw: &[Complex64]) -> Result<CharPoly> {
    let scale = raw.iter().map(|c| c.norm()).fold(1.0, f64::max);
    for (k, c) in raw.iter().enumerate() {
        if c.im.abs() > IMAGINARY_RESIDUE_TOL * scale {
            return Err(Error::ImaginaryResidue { index: k, residue: c.im.abs() });
        }
    }
    Ok(CharPoly { coeffs: raw.iter().map(|c| c.re).collect() })
}

/// The ω-spectrum: eigenvalues of `ω·L_qm + (1−ω)·L_cl` (no auxiliary edge).
pub fn omega_spectrum(g: &Graph, omega: f64) -> Result<Spectrum> {
    eigenvalues(&compose(g, omega, None, 0.0)?)
}

fn symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn adjacency_eigenvalues(g: &Graph) -> Vec<f64> {
    symmetric_eigenvalues(g.adjacency())
}

pub fn laplacian_eigenvalues(g: &Graph) -> Vec<f64> {
    symmetric_eigenvalues(g.laplacian())
}

/// `{−λᵢ} ∪ {−(dᵢ+dⱼ)/2 : i ≠ j}` from the Laplacian spectrum and degrees.
pub fn closed_form_classical_spectrum(g: &Graph) -> Spectrum {
    let d = g.degrees();
    let mut values: Vec<Complex64> = laplacian_eigenvalues(g).iter().map(|&l| Complex64::new(-l, 0.0)).collect();
    for i in 0..g.n() {
        for j in 0..g.n() {
            if i != j {
                values.push(Complex64::new(-0.5 * (d[i] + d[j]) as f64, 0.0));
            }
        }
    }
    Spectrum::new(values)
}

/// `{i(αᵢ − αⱼ)}` over all ordered pairs of adjacency eigenvalues.
pub fn closed_form_quantum_spectrum(g: &Graph) -> Spectrum {
    let alpha = adjacency_eigenvalues(g);
    let values = alpha
        .iter()
        .flat_map(|&a| alpha.iter().map(move |&b| Complex64::new(0.0, a - b)))
        .collect();
    Spectrum::new(values)
}

fn spectral_distance_unchecked(a: &Spectrum, b: &Spectrum) -> f64 {
    let sorted = |s: &Spectrum, f: fn(&Complex64) -> f64| {
        let mut v: Vec<f64> = s.values.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (ra, rb) = (sorted(a, |z| z.re), sorted(b, |z| z.re));
    let (ia, ib) = (sorted(a, |z| z.im), sorted(b, |z| z.im));
    let re: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).abs()).sum();
    let im: f64 = ia.iter().zip(&ib).map(|(x, y)| (x - y).abs()).sum();
    re + im
}

/// `δ`: real parts and imaginary parts are sorted independently, then the
/// absolute differences of both sorted lists are summed.
pub fn spectral_distance(a: &Spectrum, b: &Spectrum) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "spectra have different cardinalities ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    Ok(spectral_distance_unchecked(a, b))
}

/// `ω‖L_qm‖_F + (1−ω)‖L_cl‖_F`, an upper bound on the spectral radius.
pub fn radius_bound(g: &Graph, omega: f64) -> f64 {
    omega * build_quantum(g).frobenius_norm() + (1.0 - omega) * build_classical(g).frobenius_norm()
}

/// Compare the ω-spectra of two graphs.
pub fn compare(g1: &Graph, g2: &Graph, omega: f64, tau: f64) -> Result<ComparisonResult> {
    let tolerance = tau * (g1.n().max(g2.n()).pow(2)) as f64;
    if g1.n() != g2.n() {
        return Ok(ComparisonResult { delta: f64::INFINITY, verdict: Verdict::Distinguished, omega, tolerance });
    }
    let delta = spectral_distance(&omega_spectrum(g1, omega)?, &omega_spectrum(g2, omega)?)?;
    Ok(ComparisonResult { delta, verdict: verdict(delta, tolerance), omega, tolerance })
}

pub fn verdict(delta: f64, tolerance: f64) -> Verdict {
    if delta > tolerance {
        Verdict::Distinguished
    } else {
        Verdict::CospectralWithinTolerance
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{named_graph, random_connected, Permutation};
    use crate::liouville::AuxEdge;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_spectrum(got: &Spectrum, want: Vec<Complex64>, tol: f64) {
        let want = Spectrum::new(want);
        let d = spectral_distance(got, &want).unwrap();
        assert!(d < tol, "δ = {d:e}\ngot {:?}\nwant {:?}", got.values, want.values);
    }

    #[test]
    fn k2_classical_and_quantum() {
        let k2 = named_graph("complete", Some(2)).unwrap();
        assert_spectrum(&eigenvalues(&build_classical(&k2)).unwrap(), vec![c(0., 0.), c(-2., 0.), c(-1., 0.), c(-1., 0.)], 1e-12);
        assert_spectrum(&omega_spectrum(&k2, 1.0).unwrap(), vec![c(0., 0.), c(0., 0.), c(0., 2.), c(0., -2.)], 1e-12);
        assert_spectrum(&closed_form_quantum_spectrum(&k2), vec![c(0., 0.), c(0., 0.), c(0., 2.), c(0., -2.)], 1e-12);
    }

    #[test]
    fn c4_quantum() {
        let c4 = named_graph("cycle", Some(4)).unwrap();
        let mut want = vec![c(0., 0.); 6];
        want.extend([c(0., 2.); 4]);
        want.extend([c(0., -2.); 4]);
        want.extend([c(0., 4.), c(0., -4.)]);
        assert_spectrum(&eigenvalues(&build_quantum(&c4)).unwrap(), want, 1e-10);
    }

    #[test]
    fn p3_classical() {
        let p3 = named_graph("path", Some(3)).unwrap();
        let want = vec![c(0., 0.), c(-1., 0.), c(-3., 0.), c(-1.5, 0.), c(-1.5, 0.), c(-1.5, 0.), c(-1.5, 0.), c(-1., 0.), c(-1., 0.)];
        assert_spectrum(&omega_spectrum(&p3, 0.0).unwrap(), want.clone(), 1e-12);
        assert_spectrum(&closed_form_classical_spectrum(&p3), want, 1e-12);
    }

    #[test]
    fn eigenvalues_match_polynomial_roots() {
        let p3 = named_graph("path", Some(3)).unwrap();
        let s = compose(&p3, 0.5, None, 0.0).unwrap();
        let ev = eigenvalues(&s).unwrap();
        let cp = char_poly(&s).unwrap();
        // roots of the polynomial via its companion matrix
        let d = cp.degree();
        let mut comp = DMatrix::<Complex64>::zeros(d, d);
        for j in 0..d {
            comp[(0, j)] = c(-cp.coeffs[d - 1 - j], 0.0);
        }
        for i in 1..d {
            comp[(i, i - 1)] = c(1.0, 0.0);
        }
        let roots = Spectrum::new(eigen::eigenvalues(&comp).unwrap());
        // repeated roots move by O(sqrt(eps)) under coefficient rounding
        assert!(spectral_distance(&ev, &roots).unwrap() < 1e-5);
        for z in ev.values() {
            assert!(cp.eval(*z).norm() < 1e-10);
        }
    }

    #[test]
    fn char_poly_k2_classical() {
        let k2 = named_graph("complete", Some(2)).unwrap();
        let cp = char_poly(&build_classical(&k2)).unwrap();
        let want = [0.0, 2.0, 5.0, 4.0, 1.0];
        for (a, b) in cp.coeffs.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn char_poly_invariants_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let n = rng.random_range(2..=5);
            let g = random_connected(n, 0.4, &mut rng);
            let omega = rng.random::<f64>();
            let s = compose(&g, omega, None, 0.0).unwrap();
            let cp = char_poly(&s).unwrap();
            let dim = s.dim();
            assert_eq!(cp.coeffs[dim], 1.0);
            let scale = cp.coeffs.iter().fold(1.0f64, |m, c| m.max(c.abs()));
            assert!(cp.coeffs[0].abs() < 1e-10 * scale, "{} vs {scale}", cp.coeffs[0]);
            assert!((cp.coeffs[dim - 1] + s.matrix().trace().re).abs() < 1e-10);
        }
    }

    #[test]
    fn vieta_route_agrees() {
        let g = named_graph("cycle", Some(5)).unwrap();
        let s = compose(&g, 0.3, None, 0.0).unwrap();
        let fl = char_poly(&s).unwrap();
        let vieta = truncate_imaginary(&charpoly::from_roots(&eigen::eigenvalues(s.matrix()).unwrap())).unwrap();
        let scale = fl.coeffs.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        for (a, b) in fl.coeffs.iter().zip(&vieta.coeffs) {
            assert!((a - b).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn closed_forms_match_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.random_range(1..=7);
            let g = random_connected(n, 0.35, &mut rng);
            let cl = spectral_distance(&eigenvalues(&build_classical(&g)).unwrap(), &closed_form_classical_spectrum(&g)).unwrap();
            let qm = spectral_distance(&eigenvalues(&build_quantum(&g)).unwrap(), &closed_form_quantum_spectrum(&g)).unwrap();
            assert!(cl < 1e-8 && qm < 1e-8, "n={n}: {cl:e} {qm:e}");
        }
    }

    #[test]
    fn distance_examples() {
        let s = |v: Vec<Complex64>| Spectrum::new(v);
        let a = s(vec![c(0., 0.), c(-2., 0.)]);
        assert_eq!(spectral_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(spectral_distance(&a, &s(vec![c(0., 0.), c(-1., 0.)])).unwrap(), 1.0);
        assert_eq!(spectral_distance(&s(vec![c(0., 1.), c(0., -1.)]), &s(vec![c(0., 2.), c(0., -2.)])).unwrap(), 2.0);
        assert!(spectral_distance(&a, &s(vec![c(0., 0.)])).is_err());
    }

    #[test]
    fn radius_bound_examples() {
        let k2 = named_graph("complete", Some(2)).unwrap();
        assert!((radius_bound(&k2, 1.0) - 8f64.sqrt()).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let n = rng.random_range(2..=6);
            let g = random_connected(n, 0.4, &mut rng);
            let b0 = radius_bound(&g, 0.0);
            let b1 = radius_bound(&g, 1.0);
            assert!(closed_form_classical_spectrum(&g).max_abs() <= b0 + 1e-9);
            let mid = radius_bound(&g, 0.3);
            assert!((mid - (0.3 * b1 + 0.7 * b0)).abs() < 1e-12);
            let w = rng.random::<f64>();
            assert!(omega_spectrum(&g, w).unwrap().max_abs() <= radius_bound(&g, w) + 1e-9);
        }
    }

    #[test]
    fn permutation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let n = rng.random_range(2..=6);
            let g = random_connected(n, 0.4, &mut rng);
            let h = g.apply_permutation(&Permutation::random(n, &mut rng)).unwrap();
            let w = rng.random::<f64>();
            let d = spectral_distance(&omega_spectrum(&g, w).unwrap(), &omega_spectrum(&h, w).unwrap()).unwrap();
            assert!(d < 1e-8, "{d:e}");
        }
    }

    #[test]
    fn stability_and_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let n = rng.random_range(3..=6);
            let g = random_connected(n, 0.3, &mut rng);
            let w = rng.random::<f64>();
            let s = omega_spectrum(&g, w).unwrap();
            assert!(s.max_real() <= 1e-10);
            assert!(s.conjugation_defect() < 1e-9);
        }
    }

    #[test]
    fn aux_perturbation_vanishes_linearly() {
        let g = named_graph("path", Some(4)).unwrap();
        let base = omega_spectrum(&g, 0.5).unwrap();
        let shift = |eps: f64| {
            let s = compose(&g, 0.5, Some(AuxEdge::new(0, 3, eps).unwrap()), 0.0).unwrap();
            spectral_distance(&base, &eigenvalues(&s).unwrap()).unwrap()
        };
        let k = shift(1e-4) / 1e-4;
        for eps in [1e-3, 1e-5, 1e-6] {
            let d = shift(eps);
            assert!(d <= 2.0 * k * eps + 1e-9, "eps={eps}: δ={d:e}, K={k}");
        }
        assert!(shift(1e-8) < 1e-6);
        assert!(k <= 16.0 * 4.0, "K = {k}");
    }

    #[test]
    fn distinct_count_clusters() {
        let s = Spectrum::new(vec![c(0., 0.), c(1e-9, 0.), c(1., 1.), c(1., -1.)]);
        assert_eq!(s.distinct_count(1e-6), 3);
        assert_eq!(s.distinct_count(1e-12), 4);
    }
}
