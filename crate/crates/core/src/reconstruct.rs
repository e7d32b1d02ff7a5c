//! Recover the characteristic polynomial, and from it the spectrum, out of
//! the cumulants of the jump statistics.
//!
//! Differentiating `P(ν(χ), χ) = Σᵢ qᵢ(χ) ν(χ)ⁱ = 0` `ℓ` times at `χ = 0`,
//! with `qᵢ(χ) = qᵢ⁰ + e^χ qᵢ¹`, gives one linear relation per order among
//! the unknown `qᵢ = qᵢ(0)` and `qᵢ′ = qᵢ¹`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rug::{Assign, Float};
use serde::{Deserialize, Serialize};

use crate::counting::{
    binomials, cumulants_contour, cumulants_forward, power_derivative_table, split_char_poly_of, ContourOptions,
    CumulantSet,
};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::liouville::{compose, AuxEdge, SuperOperator};
use crate::linalg::{eigen, xprec};
use crate::spectral::{spectral_distance, CharPoly, Spectrum};

/// Working precision for reconstruction. The system inherits the
/// near-degeneracy of its columns at small `ε`; condition numbers of
/// `10^70` and beyond are typical for three vertices at `ε = 10⁻³`.
pub const RECONSTRUCT_PRECISION: u32 = 512;

/// Residual bound relative to `‖rhs‖` accepted by the solver.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Number of independent coefficients for a generator of dimension `dim`.
pub fn unknown_count(dim: usize) -> usize {
    2 * (dim - 1)
}

/// The two scalars multiplying `qᵢ` and `qᵢ′` in the `ℓ`-th derivative of
/// `P(ν(χ), χ)`, given cumulants `c[0] = c₁, c[1] = c₂, …`.
pub fn monomial_derivative(l: usize, i: usize, c: &[Float], prec: u32) -> Result<(Float, Float)> {
    if l < 1 {
        return Err(Error::InvalidParameter("derivative order must be at least 1".into()));
    }
    if c.len() < l {
        return Err(Error::InsufficientCumulants { needed: l, have: c.len() });
    }
    if i > l {
        return Ok((Float::new(prec), Float::new(prec)));
    }
    let t = power_derivative_table(&c[..l], l, prec);
    let binom = binomials(l, prec);
    Ok((t[l][i].clone(), prime_coefficient(&t, &binom, l, i, prec)))
}

/// `Σ_{k=i}^{ℓ−1} C(ℓ,k) T[k][i]`; for `i = 0` only the `k = 0` term survives.
fn prime_coefficient(t: &[Vec<Float>], binom: &[Vec<Float>], l: usize, i: usize, prec: u32) -> Float {
    let mut s = Float::new(prec);
    let mut term = Float::new(prec);
    for k in i..l {
        term.assign(&binom[l][k] * &t[k][i]);
        s += &term;
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unknown {
    Q(usize),
    QPrime(usize),
}

impl std::fmt::Display for Unknown {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Unknown::Q(i) => write!(f, "q{i}"),
            Unknown::QPrime(i) => write!(f, "q'{i}"),
        }
    }
}

/// Square system over `q₁..q_{dim−1}, q₀′..q_{dim−2}′`, one row per
/// derivative order `ℓ = 1..m`.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub dim: usize,
    pub prec: u32,
    pub matrix: Vec<Vec<Float>>,
    pub rhs: Vec<Float>,
    pub labels: Vec<Unknown>,
}

impl LinearSystem {
    pub fn size(&self) -> usize {
        self.rhs.len()
    }

    pub fn to_f64(&self) -> (DMatrix<f64>, DVector<f64>) {
        let m = self.size();
        (
            DMatrix::from_fn(m, m, |i, j| self.matrix[i][j].to_f64()),
            DVector::from_fn(m, |i, _| self.rhs[i].to_f64()),
        )
    }
}

/// Build the full system for a generator on `n` vertices.
pub fn assemble_system(cumulants: &CumulantSet, n: usize) -> Result<LinearSystem> {
    let dim = n * n;
    if dim < 2 {
        return Err(Error::InvalidParameter("reconstruction needs at least two vertices".into()));
    }
    assemble_rows(cumulants.exact(), dim, unknown_count(dim), cumulants.prec)
}

/// Rows `ℓ = 1..rows` for polynomial degree `dim`, with the known
/// `q_dim = 1` moved to the right-hand side and `q₀ = q′_{dim−1} = q′_dim = 0`.
pub fn assemble_rows(c: &[Float], dim: usize, rows: usize, prec: u32) -> Result<LinearSystem> {
    let needed = rows;
    if c.len() < needed {
        return Err(Error::InsufficientCumulants { needed, have: c.len() });
    }
    let labels: Vec<Unknown> = (1..dim).map(Unknown::Q).chain((0..dim - 1).map(Unknown::QPrime)).collect();
    let t = power_derivative_table(&c[..rows], rows, prec);
    let binom = binomials(rows, prec);
    let mut matrix = Vec::with_capacity(rows);
    let mut rhs = Vec::with_capacity(rows);
    for l in 1..=rows {
        let row: Vec<Float> = labels
            .iter()
            .map(|u| match *u {
                Unknown::Q(i) if i <= l => t[l][i].clone(),
                Unknown::QPrime(i) if i < l => prime_coefficient(&t, &binom, l, i, prec),
                _ => Float::new(prec),
            })
            .collect();
        matrix.push(row);
        rhs.push(if dim <= l { Float::with_val(prec, -&t[l][dim]) } else { Float::new(prec) });
    }
    Ok(LinearSystem { dim, prec, matrix, rhs, labels })
}

/// `q₀..q_dim` and `q₀′..q_dim′`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharPolyPair {
    pub q: Vec<f64>,
    pub qprime: Vec<f64>,
}

impl CharPolyPair {
    pub fn char_poly(&self) -> CharPoly {
        CharPoly { coeffs: self.q.clone() }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub pair: CharPolyPair,
    /// Unknowns in working precision, in column order.
    pub exact: Vec<Float>,
    /// `‖A x − b‖∞ / ‖b‖∞`.
    pub residual: f64,
    /// Infinity-norm condition number after column equilibration.
    pub condition: f64,
}

fn to_pair(dim: usize, labels: &[Unknown], x: &[f64]) -> CharPolyPair {
    let mut q = vec![0.0; dim + 1];
    let mut qprime = vec![0.0; dim + 1];
    q[dim] = 1.0;
    for (u, &v) in labels.iter().zip(x) {
        match *u {
            Unknown::Q(i) => q[i] = v,
            Unknown::QPrime(i) => qprime[i] = v,
        }
    }
    CharPolyPair { q, qprime }
}

fn inf_norm(v: &[Float], prec: u32) -> Float {
    v.iter().fold(Float::new(prec), |m, x| m.max(&Float::with_val(prec, x.abs_ref())))
}

fn column_scales(matrix: &[Vec<Float>], cols: usize, prec: u32) -> Vec<Float> {
    (0..cols)
        .map(|j| {
            let s = matrix.iter().fold(Float::new(prec), |acc, row| acc.max(&Float::with_val(prec, row[j].abs_ref())));
            if s.is_zero() {
                Float::with_val(prec, 1)
            } else {
                s
            }
        })
        .collect()
}

fn scale_columns(matrix: &[Vec<Float>], scales: &[Float], prec: u32) -> Vec<Vec<Float>> {
    matrix
        .iter()
        .map(|row| row.iter().zip(scales).map(|(a, s)| Float::with_val(prec, a / s)).collect())
        .collect()
}

/// Largest `‖A x − b‖∞` over the given rows, relative to `‖b‖∞` of those rows.
fn relative_residual(matrix: &[Vec<Float>], rhs: &[Float], x: &[Float], prec: u32) -> f64 {
    let mut worst = Float::new(prec);
    let mut term = Float::new(prec);
    for (row, b) in matrix.iter().zip(rhs) {
        let mut r = Float::with_val(prec, -b);
        for (a, xi) in row.iter().zip(x) {
            term.assign(a * xi);
            r += &term;
        }
        worst = worst.max(&r.abs());
    }
    let bnorm = inf_norm(rhs, prec);
    if bnorm.is_zero() {
        worst.to_f64()
    } else {
        Float::with_val(prec, &worst / &bnorm).to_f64()
    }
}

/// Solve in working precision with column equilibration. Fails when the
/// condition estimate leaves fewer than ~10 correct digits or the residual
/// exceeds [`RESIDUAL_TOL`].
pub fn solve_coefficients(sys: &LinearSystem) -> Result<Solution> {
    let prec = sys.prec;
    let m = sys.size();
    if sys.labels.len() != m {
        return Err(Error::InvalidParameter(format!("system has {m} rows for {} unknowns", sys.labels.len())));
    }
    let scales = column_scales(&sys.matrix, m, prec);
    let scaled = scale_columns(&sys.matrix, &scales, prec);
    let inverse = xprec::invert_real(&scaled, prec).ok_or(Error::Singular { condition: f64::INFINITY })?;
    let condition = Float::with_val(prec, xprec::norm_inf(&scaled, prec) * xprec::norm_inf(&inverse, prec)).to_f64();
    // digits left after conditioning must exceed ~10
    let eps = 2f64.powi(-(prec as i32)).max(f64::MIN_POSITIVE);
    if !(condition * eps < 1e-10) {
        return Err(Error::Singular { condition });
    }
    let y = xprec::solve_real(&scaled, &sys.rhs, prec).ok_or(Error::Singular { condition })?;
    let exact: Vec<Float> = y.iter().zip(&scales).map(|(v, s)| Float::with_val(prec, v / s)).collect();
    let residual = relative_residual(&sys.matrix, &sys.rhs, &exact, prec);
    if residual > RESIDUAL_TOL {
        return Err(Error::Singular { condition });
    }
    let x: Vec<f64> = exact.iter().map(Float::to_f64).collect();
    Ok(Solution { pair: to_pair(sys.dim, &sys.labels, &x), exact, residual, condition })
}

/// Rank of the equilibrated system matrix by complete pivoting, counting
/// pivots above `2^(−prec/2)` relative to the largest entry.
pub fn numerical_rank(sys: &LinearSystem) -> usize {
    let prec = sys.prec;
    let cols = sys.labels.len();
    let scales = column_scales(&sys.matrix, cols, prec);
    let mut a = scale_columns(&sys.matrix, &scales, prec);
    let rows = a.len();
    let threshold = Float::with_val(prec, 1) >> (prec / 2);
    let mut term = Float::new(prec);
    let mut rank = 0;
    for k in 0..rows.min(cols) {
        let mut best = (k, k, Float::new(prec));
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, x) in row.iter().enumerate().skip(k) {
                let v = Float::with_val(prec, x.abs_ref());
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 <= threshold {
            break;
        }
        a.swap(k, best.0);
        for row in a.iter_mut() {
            row.swap(k, best.1);
        }
        for i in k + 1..rows {
            let f = Float::with_val(prec, &a[i][k] / &a[k][k]);
            for j in k..cols {
                term.assign(&f * &a[k][j]);
                a[i][j] -= &term;
            }
        }
        rank += 1;
    }
    rank
}

/// Part of the characteristic polynomial fixed by the cumulants when the
/// full system is singular.
#[derive(Clone, Debug)]
pub struct VisibleFactor {
    /// Degree of the identifiable factor of `P`.
    pub degree: usize,
    pub solution: Solution,
    /// Residual of the rows beyond the square block, relative to their
    /// right-hand side.
    pub consistency: f64,
}

/// Smallest-degree polynomial pair `(q, q′)` consistent with every available
/// cumulant. If `P0` and `P1` share a factor `G`, only `P/G` leaves a trace in
/// the counting statistics; this recovers that factor.
pub fn reconstruct_visible_factor(cumulants: &CumulantSet, max_degree: usize, tol: f64) -> Result<VisibleFactor> {
    let prec = cumulants.prec;
    let c = cumulants.exact();
    for degree in 2..=max_degree {
        let unknowns = unknown_count(degree);
        if unknowns > c.len() {
            break;
        }
        let tall = assemble_rows(c, degree, c.len(), prec)?;
        let square = LinearSystem {
            dim: degree,
            prec,
            matrix: tall.matrix[..unknowns].to_vec(),
            rhs: tall.rhs[..unknowns].to_vec(),
            labels: tall.labels.clone(),
        };
        let Ok(solution) = solve_coefficients(&square) else {
            continue;
        };
        let consistency = if c.len() > unknowns {
            relative_residual(&tall.matrix[unknowns..], &tall.rhs[unknowns..], &solution.exact, prec)
        } else {
            0.0
        };
        if consistency <= tol {
            return Ok(VisibleFactor { degree, solution, consistency });
        }
    }
    Err(Error::Singular { condition: f64::INFINITY })
}

/// Double-precision solve of the same system, for low-order experiments.
pub fn solve_coefficients_f64(sys: &LinearSystem) -> Result<Solution> {
    let (a, b) = sys.to_f64();
    let m = sys.size();
    let scales: Vec<f64> = (0..m)
        .map(|j| a.column(j).iter().fold(0.0f64, |s, x| s.max(x.abs())))
        .map(|s| if s == 0.0 { 1.0 } else { s })
        .collect();
    let scaled = DMatrix::from_fn(m, m, |i, j| a[(i, j)] / scales[j]);
    let inverse = scaled.clone().try_inverse().ok_or(Error::Singular { condition: f64::INFINITY })?;
    let norm = |x: &DMatrix<f64>| x.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let condition = norm(&scaled) * norm(&inverse);
    let y = scaled.lu().solve(&b).ok_or(Error::Singular { condition })?;
    let x: Vec<f64> = y.iter().zip(&scales).map(|(v, s)| v / s).collect();
    let r = &a * DVector::from_column_slice(&x) - &b;
    let bnorm = b.amax();
    let residual = if bnorm == 0.0 { r.amax() } else { r.amax() / bnorm };
    if residual > RESIDUAL_TOL || !residual.is_finite() {
        return Err(Error::Singular { condition });
    }
    let exact = x.iter().map(|&v| Float::with_val(53, v)).collect();
    Ok(Solution { pair: to_pair(sys.dim, &sys.labels, &x), exact, residual, condition })
}

/// Roots of a monic polynomial as eigenvalues of its companion matrix.
pub fn spectrum_from_coeffs(q: &CharPoly) -> Result<Spectrum> {
    let d = q.degree();
    let lead = q.coeffs[d];
    if lead != 1.0 {
        return Err(Error::InvalidParameter(format!("polynomial is not monic (leading coefficient {lead})")));
    }
    if d == 0 {
        return Ok(Spectrum::new(Vec::new()));
    }
    let mut comp = DMatrix::<Complex64>::zeros(d, d);
    for j in 0..d {
        comp[(0, j)] = Complex64::new(-q.coeffs[d - 1 - j], 0.0);
    }
    for i in 1..d {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    Ok(Spectrum::new(eigen::eigenvalues(&comp)?))
}

/// Where the cumulants fed into the reconstruction come from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CumulantSource {
    Forward,
    Contour(ContourOptions),
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub solution: Solution,
    pub spectrum: Spectrum,
    /// Directly computed spectrum of the same (perturbed) generator.
    pub direct: Spectrum,
    /// `δ(spectrum, direct)`.
    pub delta: f64,
    pub cumulants: CumulantSet,
}

impl Reconstruction {
    pub fn to_json(&self) -> ReconstructionJson {
        ReconstructionJson {
            q: self.solution.pair.q.clone(),
            qprime: self.solution.pair.qprime.clone(),
            residual: self.solution.residual,
            condition: self.solution.condition,
            delta: self.delta,
            spectrum: self.spectrum.values().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionJson {
    pub q: Vec<f64>,
    pub qprime: Vec<f64>,
    pub residual: f64,
    pub condition: f64,
    pub delta: f64,
    pub spectrum: Vec<[f64; 2]>,
}

/// Cumulants of the counting edge for `ω·L_qm + (1−ω)·L_cl + L_aux`.
pub fn tilted_cumulants(
    g: &Graph,
    omega: f64,
    aux: AuxEdge,
    m: Option<usize>,
    source: CumulantSource,
    prec: u32,
) -> Result<(SuperOperator, CumulantSet)> {
    let s = compose(g, omega, Some(aux), 0.0).map_err(|e| e.at("build"))?;
    let needed = unknown_count(s.dim());
    let m = m.unwrap_or(needed);
    if m < needed {
        return Err(Error::InsufficientCumulants { needed, have: m }.at("assemble"));
    }
    let cumulants = match source {
        CumulantSource::Forward => split_char_poly_of(&s, prec)
            .and_then(|split| cumulants_forward(&split, m))
            .map_err(|e| e.at("cumulants"))?,
        CumulantSource::Contour(opts) => {
            cumulants_contour(&s, m, ContourOptions { prec, ..opts }).map_err(|e| e.at("cumulants"))?
        }
    };
    Ok((s, cumulants))
}

/// Full pipeline: cumulants of the counting edge → linear system →
/// coefficients → roots, compared against the directly computed spectrum
/// of `ω·L_qm + (1−ω)·L_cl + L_aux`.
pub fn reconstruct_spectrum(
    g: &Graph,
    omega: f64,
    aux: AuxEdge,
    m: Option<usize>,
    source: CumulantSource,
    prec: u32,
) -> Result<Reconstruction> {
    let (s, cumulants) = tilted_cumulants(g, omega, aux, m, source, prec)?;
    let sys = assemble_system(&cumulants, g.n()).map_err(|e| e.at("assemble"))?;
    let solution = solve_coefficients(&sys).map_err(|e| e.at("solve"))?;
    let spectrum = spectrum_from_coeffs(&solution.pair.char_poly()).map_err(|e| e.at("roots"))?;
    let direct = Spectrum::new(eigen::eigenvalues(s.matrix()).map_err(|e| e.at("direct"))?);
    let delta = spectral_distance(&spectrum, &direct)?;
    Ok(Reconstruction { solution, spectrum, direct, delta, cumulants })
}

#[derive(Clone, Debug)]
pub struct VisibleReconstruction {
    pub factor: VisibleFactor,
    /// Roots of the identifiable factor.
    pub spectrum: Spectrum,
    pub direct: Spectrum,
    /// Largest distance of a recovered root from its matched direct eigenvalue.
    pub max_root_error: f64,
    /// Rank of the full `2(n²−1)` system.
    pub full_rank: usize,
    pub cumulants: CumulantSet,
}

impl VisibleReconstruction {
    pub fn to_json(&self) -> VisibleReconstructionJson {
        VisibleReconstructionJson {
            degree: self.factor.degree,
            full_rank: self.full_rank,
            q: self.factor.solution.pair.q.clone(),
            qprime: self.factor.solution.pair.qprime.clone(),
            residual: self.factor.solution.residual,
            consistency: self.factor.consistency,
            condition: self.factor.solution.condition,
            max_root_error: self.max_root_error,
            spectrum: self.spectrum.values().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibleReconstructionJson {
    pub degree: usize,
    pub full_rank: usize,
    pub q: Vec<f64>,
    pub qprime: Vec<f64>,
    pub residual: f64,
    pub consistency: f64,
    pub condition: f64,
    pub max_root_error: f64,
    pub spectrum: Vec<[f64; 2]>,
}

/// Match each value of `part` to a distinct nearest value of `whole`
/// (greedy) and return the largest distance.
pub fn submultiset_distance(part: &Spectrum, whole: &Spectrum) -> f64 {
    let mut used = vec![false; whole.len()];
    let mut worst: f64 = 0.0;
    for z in part.values() {
        let best = whole
            .values()
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .min_by(|a, b| (a.1 - z).norm().total_cmp(&(b.1 - z).norm()));
        match best {
            Some((k, w)) => {
                used[k] = true;
                worst = worst.max((w - z).norm());
            }
            None => return f64::INFINITY,
        }
    }
    worst
}

/// Recover the identifiable factor of the characteristic polynomial and
/// its roots, which form a sub-multiset of the spectrum.
pub fn reconstruct_visible_spectrum(
    g: &Graph,
    omega: f64,
    aux: AuxEdge,
    m: Option<usize>,
    source: CumulantSource,
    prec: u32,
    consistency_tol: f64,
) -> Result<VisibleReconstruction> {
    let (s, cumulants) = tilted_cumulants(g, omega, aux, m, source, prec)?;
    let full = assemble_system(&cumulants, g.n()).map_err(|e| e.at("assemble"))?;
    let full_rank = numerical_rank(&full);
    let factor = reconstruct_visible_factor(&cumulants, s.dim(), consistency_tol).map_err(|e| e.at("solve"))?;
    let spectrum = spectrum_from_coeffs(&factor.solution.pair.char_poly()).map_err(|e| e.at("roots"))?;
    let direct = Spectrum::new(eigen::eigenvalues(s.matrix()).map_err(|e| e.at("direct"))?);
    let max_root_error = submultiset_distance(&spectrum, &direct);
    Ok(VisibleReconstruction { factor, spectrum, direct, max_root_error, full_rank, cumulants })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{CumulantMethod, SplitCharPoly};
    use crate::graph::named_graph;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const PREC: u32 = RECONSTRUCT_PRECISION;

    fn xs(v: &[f64]) -> Vec<Float> {
        v.iter().map(|&x| Float::with_val(PREC, x)).collect()
    }

    fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    /// `q` monic of degree `d` with `q₀ = 0`, `q′` of degree `d − 2`; dyadic
    /// coefficients so that products are exact.
    fn random_pair(d: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        let mut q: Vec<f64> = (0..=d).map(|_| rng.random_range(4..16) as f64 / 8.0).collect();
        q[0] = 0.0;
        q[d] = 1.0;
        let mut qp: Vec<f64> = (0..=d).map(|_| rng.random_range(-8..8) as f64 / 8.0).collect();
        qp[d] = 0.0;
        qp[d - 1] = 0.0;
        (q, qp)
    }

    fn split_from(q: &[f64], qp: &[f64]) -> SplitCharPoly {
        let p0 = q.iter().zip(qp).map(|(a, b)| Float::with_val(PREC, a - b)).collect();
        SplitCharPoly { p0, p1: xs(qp), prec: PREC }
    }

    #[test]
    fn first_two_rows_symbolic() {
        let c = xs(&[0.7, -0.3]);
        let (a, b) = monomial_derivative(1, 1, &c, PREC).unwrap();
        assert_eq!((a.to_f64(), b.to_f64()), (0.7, 0.0));
        let (a, b) = monomial_derivative(1, 0, &c, PREC).unwrap();
        assert_eq!((a.to_f64(), b.to_f64()), (0.0, 1.0));
        // 2c1²q2 + c2q1 + 2c1q1' + q0'
        let (a, b) = monomial_derivative(2, 2, &c, PREC).unwrap();
        assert!((a.to_f64() - 2.0 * 0.49).abs() < 1e-15 && b.to_f64() == 0.0);
        let (a, b) = monomial_derivative(2, 1, &c, PREC).unwrap();
        assert!((a.to_f64() + 0.3).abs() < 1e-15 && (b.to_f64() - 1.4).abs() < 1e-15);
        let (a, b) = monomial_derivative(2, 0, &c, PREC).unwrap();
        assert_eq!((a.to_f64(), b.to_f64()), (0.0, 1.0));
        let (a, b) = monomial_derivative(2, 3, &c, PREC).unwrap();
        assert!(a.is_zero() && b.is_zero());
        assert!(monomial_derivative(0, 0, &c, PREC).is_err());
        assert!(matches!(monomial_derivative(3, 1, &c, PREC), Err(Error::InsufficientCumulants { .. })));
    }

    #[test]
    fn single_row_gives_first_relation() {
        let sys = assemble_rows(&xs(&[0.25]), 2, 1, PREC).unwrap();
        // q1 c1 + q0' = 0
        assert_eq!(sys.labels[0], Unknown::Q(1));
        assert_eq!(sys.matrix[0][0].to_f64(), 0.25);
        assert_eq!(sys.matrix[0][1].to_f64(), 1.0);
    }

    #[test]
    fn zero_pattern_is_triangular() {
        let g = named_graph("path", Some(3)).unwrap();
        let s = compose(&g, 0.5, Some(AuxEdge::new(0, 2, 1e-3).unwrap()), 0.0).unwrap();
        let c = cumulants_forward(&split_char_poly_of(&s, PREC).unwrap(), 16).unwrap();
        let sys = assemble_system(&c, 3).unwrap();
        assert_eq!(sys.size(), 16);
        assert_eq!(sys.matrix[0].len(), 16);
        for (r, row) in sys.matrix.iter().enumerate() {
            let l = r + 1;
            for (a, u) in row.iter().zip(&sys.labels) {
                let allowed = match *u {
                    Unknown::Q(i) => i <= l,
                    Unknown::QPrime(i) => i < l,
                };
                if !allowed {
                    assert!(a.is_zero(), "row {l} column {u}");
                }
            }
        }
    }

    #[test]
    fn round_trip_on_coprime_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [3, 5, 9] {
            let (q, qp) = random_pair(d, &mut rng);
            let c = cumulants_forward(&split_from(&q, &qp), unknown_count(d)).unwrap();
            let sys = assemble_rows(c.exact(), d, unknown_count(d), PREC).unwrap();
            assert_eq!(numerical_rank(&sys), unknown_count(d));
            let sol = solve_coefficients(&sys).unwrap();
            for i in 0..=d {
                assert!((sol.pair.q[i] - q[i]).abs() < 1e-6 * q[i].abs().max(1e-3), "d={d} q{i}");
                assert!((sol.pair.qprime[i] - qp[i]).abs() < 1e-6 * qp[i].abs().max(1e-3), "d={d} q'{i}");
            }
            // row order does not matter
            let mut rev = sys.clone();
            rev.matrix.reverse();
            rev.rhs.reverse();
            let again = solve_coefficients(&rev).unwrap();
            for (a, b) in again.pair.q.iter().zip(&sol.pair.q) {
                assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn double_precision_entry_point_for_low_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (q, qp) = random_pair(4, &mut rng);
        let c = cumulants_forward(&split_from(&q, &qp), 6).unwrap();
        let sys = assemble_rows(c.exact(), 4, 6, PREC).unwrap();
        let sol = solve_coefficients_f64(&sys).unwrap();
        for i in 0..=4 {
            assert!((sol.pair.q[i] - q[i]).abs() < 1e-6, "q{i}");
        }
    }

    #[test]
    fn shared_factor_makes_system_singular() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (a, b) = random_pair(4, &mut rng);
        // common factor (ν + 2)(ν + 3)
        let g = [6.0, 5.0, 1.0];
        let (q, qp) = (poly_mul(&a, &g), poly_mul(&b, &g));
        let c = cumulants_forward(&split_from(&q, &qp), unknown_count(6)).unwrap();
        let sys = assemble_rows(c.exact(), 6, unknown_count(6), PREC).unwrap();
        assert_eq!(numerical_rank(&sys), unknown_count(6) - 2);
        assert!(matches!(solve_coefficients(&sys), Err(Error::Singular { .. })));
        let visible = reconstruct_visible_factor(&c, 6, 1e-30).unwrap();
        assert_eq!(visible.degree, 4);
        for i in 0..=4 {
            assert!((visible.solution.pair.q[i] - a[i]).abs() < 1e-9);
            assert!((visible.solution.pair.qprime[i] - b[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn p3_full_system_is_singular_but_visible_factor_is_recovered() {
        let g = named_graph("path", Some(3)).unwrap();
        let aux = AuxEdge::new(0, 2, 1e-3).unwrap();
        for omega in [0.0, 0.5, 0.9] {
            let err = reconstruct_spectrum(&g, omega, aux, None, CumulantSource::Forward, PREC).unwrap_err();
            assert!(matches!(err, Error::Stage { stage: "solve", .. }), "{err}");
            let vis = reconstruct_visible_spectrum(&g, omega, aux, None, CumulantSource::Forward, PREC, 1e-30).unwrap();
            assert_eq!(vis.full_rank, 16 - (9 - vis.factor.degree));
            assert!(vis.factor.degree < 9);
            assert!(vis.max_root_error < 1e-6, "omega {omega}: {:e}", vis.max_root_error);
            assert!(vis.spectrum.values().iter().any(|z| z.norm() < 1e-9));
        }
        let ctr = reconstruct_visible_spectrum(&g, 0.5, aux, None, CumulantSource::Contour(ContourOptions::default()), PREC, 1e-20).unwrap();
        assert_eq!(ctr.cumulants.method, CumulantMethod::Contour);
        assert!(ctr.max_root_error < 1e-6, "{:e}", ctr.max_root_error);
    }

    #[test]
    fn companion_roots() {
        let s = spectrum_from_coeffs(&CharPoly { coeffs: vec![0.0, 2.0, 5.0, 4.0, 1.0] }).unwrap();
        let want = Spectrum::new(vec![0.0, -2.0, -1.0, -1.0].into_iter().map(|x| Complex64::new(x, 0.0)).collect());
        assert!(spectral_distance(&s, &want).unwrap() < 1e-7);
        let zero = spectrum_from_coeffs(&CharPoly { coeffs: vec![0.0, 0.0, 0.0, 1.0] }).unwrap();
        assert!(zero.values().iter().all(|z| z.norm() < 1e-12));
        assert!(spectrum_from_coeffs(&CharPoly { coeffs: vec![1.0, 2.0] }).is_err());
    }

    #[test]
    fn stage_errors() {
        let g = named_graph("path", Some(3)).unwrap();
        let err = reconstruct_spectrum(&g, 0.5, AuxEdge::new(0, 1, 1e-3).unwrap(), None, CumulantSource::Forward, PREC).unwrap_err();
        assert!(err.to_string().starts_with("build"));
        let err = reconstruct_spectrum(&g, 0.5, AuxEdge::new(0, 2, 1e-3).unwrap(), Some(4), CumulantSource::Forward, PREC).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "assemble", .. }));
    }
}
