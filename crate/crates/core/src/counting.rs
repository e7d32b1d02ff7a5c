//! Steady state, dominant eigenvalue of the tilted generator and exact
//! cumulants of the number of jumps across the auxiliary edge.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Assign, Complex, Float};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::liouville::{compose, dyad_index, AuxEdge, SuperOperator};
use crate::linalg::{eigen, xprec};

/// Smallest acceptable second-smallest singular value of the generator.
pub const NULL_SPACE_GAP: f64 = 1e-10;
/// Smallest acceptable separation of the dominant eigenvalue.
pub const DOMINANCE_GAP: f64 = 1e-9;
pub const DEFAULT_RADIUS: f64 = 0.5;
pub const DEFAULT_POINTS: usize = 64;
/// Agreement required between contour cumulants at radii `r` and `r/2`.
pub const RADIUS_CONSISTENCY: f64 = 1e-5;

/// Vectorized density matrix over the dyad basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityVector {
    pub n: usize,
    pub entries: Vec<Complex64>,
}

impl DensityVector {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }

    pub fn population(&self, i: usize) -> f64 {
        self.get(i, i).re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.population(i)).collect()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `max |ρ_ij − conj(ρ_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }
}

/// Normalized null vector of a trace-preserving generator at `χ = 0`.
pub fn steady_state(s: &SuperOperator) -> Result<DensityVector> {
    if s.meta().chi != Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidParameter("steady state requires chi = 0".into()));
    }
    let svd = s.matrix().clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    if order.len() > 1 {
        let second = svd.singular_values[order[1]];
        if second <= NULL_SPACE_GAP {
            return Err(Error::DegenerateSteadyState(second));
        }
    }
    let row = order[0];
    let n = s.n();
    let mut entries: Vec<Complex64> = (0..s.dim()).map(|k| v_t[(row, k)].conj()).collect();
    let tr: Complex64 = (0..n).map(|i| entries[i * n + i]).sum();
    for e in &mut entries {
        *e /= tr;
    }
    Ok(DensityVector { n, entries })
}

fn dominant_of(values: &[Complex64]) -> Result<Complex64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.re.total_cmp(&a.re));
    if sorted.len() > 1 {
        let gap = (sorted[0] - sorted[1]).norm();
        if gap < DOMINANCE_GAP {
            return Err(Error::AmbiguousBranch(gap));
        }
    }
    Ok(sorted[0])
}

/// Eigenvalue of maximal real part.
pub fn dominant_eigenvalue(s: &SuperOperator) -> Result<Complex64> {
    dominant_of(&eigen::eigenvalues(s.matrix())?)
}

/// Right eigenvector for an (approximate) eigenvalue by inverse iteration.
fn eigenvector(m: &DMatrix<Complex64>, lambda: Complex64) -> DVector<Complex64> {
    let dim = m.nrows();
    let shift = lambda + Complex64::new(1e-10, 1e-10) * (1.0 + lambda.norm());
    let lu = (m - DMatrix::from_diagonal_element(dim, dim, shift)).lu();
    let mut x = DVector::from_element(dim, Complex64::new(1.0, 0.3));
    for _ in 0..3 {
        if let Some(y) = lu.solve(&x) {
            let norm = y.norm();
            if norm.is_finite() && norm > 0.0 {
                x = y / Complex64::new(norm, 0.0);
            }
        }
    }
    x
}

fn overlap(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    a.dotc(b).norm()
}

/// Follow the dominant branch along a path starting at `χ = 0`, matching
/// consecutive samples by eigenvector overlap. Returns `(ν, gap)` per point,
/// where `gap` is the distance to the nearest other eigenvalue.
fn track_branch(s: &SuperOperator, path: &[Complex64]) -> Result<Vec<(Complex64, f64)>> {
    let mut out: Vec<(Complex64, f64)> = Vec::with_capacity(path.len());
    let mut prev: Option<(Complex64, DVector<Complex64>)> = None;
    for &chi in path {
        let m = s.with_chi(chi).into_matrix();
        let values = eigen::eigenvalues(&m)?;
        let nu = match &prev {
            None => dominant_of(&values)?,
            Some((last, x_prev)) => {
                let mut near = values.clone();
                near.sort_by(|a, b| (a - last).norm().total_cmp(&(b - last).norm()));
                near.truncate(3);
                let mut scored: Vec<(f64, Complex64)> =
                    near.iter().map(|&z| (overlap(x_prev, &eigenvector(&m, z)), z)).collect();
                scored.sort_by(|a, b| b.0.total_cmp(&a.0));
                let (best, z) = scored[0];
                if best < 0.5 {
                    return Err(Error::BranchCrossing(format!("eigenvector overlap {best:.3} at chi = {chi}")));
                }
                if scored.len() > 1 && scored[1].0 > 0.9 * best && (scored[1].1 - z).norm() > DOMINANCE_GAP {
                    return Err(Error::BranchCrossing(format!("two candidate branches at chi = {chi}")));
                }
                z
            }
        };
        let gap = values
            .iter()
            .map(|z| (z - nu).norm())
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
        let gap = if values.iter().filter(|z| (*z - nu).norm() == 0.0).count() > 1 { 0.0 } else { gap };
        if gap < DOMINANCE_GAP {
            return Err(Error::AmbiguousBranch(gap));
        }
        prev = Some((nu, eigenvector(&m, nu)));
        out.push((nu, gap));
    }
    Ok(out)
}

/// Newton polish of an isolated eigenvalue on the matrix itself:
/// `ν ← ν − 1 / tr((ν − M)⁻¹)`.
fn polish(m: &xprec::XMatrix, seed: Complex64, gap: f64, prec: u32) -> Result<Complex> {
    let mut nu = xprec::complex(prec, seed);
    let tol = Float::with_val(prec, 1) >> (prec - 32);
    let accept = |nu: Complex| {
        let moved = (xprec::to_c64(&nu) - seed).norm();
        if moved > 0.25 * gap {
            return Err(Error::BranchCrossing(format!("refinement moved {moved:e}, gap {gap:e}")));
        }
        Ok(nu)
    };
    for _ in 0..60 {
        // an exactly singular shift means ν is an eigenvalue to working precision
        let Some(tr) = m.resolvent_trace(&nu) else {
            return accept(nu);
        };
        let step = Complex::with_val(prec, 1 / tr);
        nu -= &step;
        let size = Float::with_val(prec, step.abs_ref());
        let scale = Float::with_val(prec, nu.abs_ref()).max(&Float::with_val(prec, 1e-300));
        if size <= Float::with_val(prec, &tol * &scale) {
            return accept(nu);
        }
    }
    Err(Error::NoConvergence { index: 0 })
}

/// Characteristic polynomial split `P(ν, χ) = P0(ν) + e^χ P1(ν)`, exact
/// in the working precision.
#[derive(Clone, Debug)]
pub struct SplitCharPoly {
    pub p0: Vec<Float>,
    pub p1: Vec<Float>,
    pub prec: u32,
}

impl SplitCharPoly {
    pub fn dim(&self) -> usize {
        self.p0.len() - 1
    }

    /// `qᵢ = qᵢ(0) = P0ᵢ + P1ᵢ`.
    pub fn q(&self) -> Vec<Float> {
        self.p0.iter().zip(&self.p1).map(|(a, b)| Float::with_val(self.prec, a + b)).collect()
    }

    /// `qᵢ′ = P1ᵢ` (all χ-derivatives coincide).
    pub fn qprime(&self) -> Vec<Float> {
        self.p1.clone()
    }

    /// Coefficients of `P(ν, χ)` at a real counting field.
    pub fn at_chi(&self, chi: f64) -> Vec<f64> {
        let e = Float::with_val(self.prec, chi).exp();
        self.p0
            .iter()
            .zip(&self.p1)
            .map(|(a, b)| Float::with_val(self.prec, a + &e * b).to_f64())
            .collect()
    }
}

fn real_parts(coeffs: Vec<Complex>, prec: u32) -> Result<Vec<Float>> {
    let scale = coeffs.iter().map(|c| Float::with_val(prec, c.abs_ref()).to_f64()).fold(1.0, f64::max);
    coeffs
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let im = c.imag().to_f64().abs();
            if im > 1e-30 * scale {
                return Err(Error::ImaginaryResidue { index: k, residue: im });
            }
            Ok(c.real().clone())
        })
        .collect()
}

/// The generator at `χ = 0` in working precision, with each population
/// diagonal entry recomputed as minus the sum of the other population
/// entries of its column. Summing rates in double precision leaves the
/// trace functional nonzero at the rounding level; here it vanishes
/// exactly, so `ν(0) = 0` and `q₀ = 0` hold in the working precision.
pub fn extended_generator(s: &SuperOperator, prec: u32) -> xprec::XMatrix {
    let n = s.n();
    let mut m = xprec::XMatrix::from_c64(s.with_chi(Complex64::new(0.0, 0.0)).matrix(), prec);
    for j in 0..n {
        let col = j * n + j;
        let mut gain = Complex::new(prec);
        for i in (0..n).filter(|&i| i != j) {
            gain += m.get(i * n + i, col);
        }
        *m.get_mut(col, col) = -gain;
    }
    m
}

/// Split the characteristic polynomial of a tilted generator.
pub fn split_char_poly_of(s: &SuperOperator, prec: u32) -> Result<SplitCharPoly> {
    let aux = s
        .aux()
        .ok_or_else(|| Error::InvalidParameter("generator has no auxiliary edge".into()))?;
    let full = extended_generator(s, prec);
    let pos = aux.tilted_position(s.n());
    let mut m0 = full.clone();
    *m0.get_mut(pos.0, pos.1) = Complex::new(prec);
    let full = real_parts(full.char_poly(), prec)?;
    let p0 = real_parts(m0.char_poly(), prec)?;
    let p1 = full.iter().zip(&p0).map(|(a, b)| Float::with_val(prec, a - b)).collect();
    Ok(SplitCharPoly { p0, p1, prec })
}

pub fn split_char_poly(g: &Graph, omega: f64, aux: AuxEdge, prec: u32) -> Result<SplitCharPoly> {
    split_char_poly_of(&compose(g, omega, Some(aux), 0.0)?, prec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CumulantMethod {
    ForwardRecursion,
    Contour,
}

/// Scaled cumulants `c₁..c_m` (jumps per unit time).
#[derive(Clone, Debug)]
pub struct CumulantSet {
    pub method: CumulantMethod,
    pub prec: u32,
    /// Contour radius and number of sample points, for the contour method.
    pub contour: Option<(f64, usize)>,
    values: Vec<Float>,
}

impl CumulantSet {
    pub fn new(method: CumulantMethod, values: Vec<Float>, prec: u32) -> CumulantSet {
        CumulantSet { method, prec, contour: None, values }
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// `c_k`, 1-based.
    pub fn get(&self, k: usize) -> f64 {
        self.values[k - 1].to_f64()
    }

    pub fn exact(&self) -> &[Float] {
        &self.values
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(Float::to_f64).collect()
    }

    pub fn truncated(&self, m: usize) -> CumulantSet {
        CumulantSet { values: self.values[..m.min(self.values.len())].to_vec(), ..self.clone() }
    }

    /// Largest relative difference `|a−b| / max(|a|,|b|)` over common orders.
    pub fn max_relative_difference(&self, other: &CumulantSet) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| relative(a, b))
            .fold(0.0, f64::max)
    }
}

fn relative(a: &Float, b: &Float) -> f64 {
    let diff = Float::with_val(a.prec(), a - b).abs().to_f64();
    let scale = a.to_f64().abs().max(b.to_f64().abs());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub(crate) fn binomials(n: usize, prec: u32) -> Vec<Vec<Float>> {
    let mut rows: Vec<Vec<Float>> = vec![vec![Float::with_val(prec, 1)]];
    for k in 1..=n {
        let prev = &rows[k - 1];
        let mut row = vec![Float::with_val(prec, 1); k + 1];
        for j in 1..k {
            row[j] = Float::with_val(prec, &prev[j - 1] + &prev[j]);
        }
        rows.push(row);
    }
    rows
}

/// `T[k][i] = (d/dχ)^k ν(χ)^i at χ = 0`, given `ν(0) = 0` and
/// `c[p-1] = ν^{(p)}(0)`, for `0 ≤ i, k ≤ kmax`.
pub(crate) fn power_derivative_table(c: &[Float], kmax: usize, prec: u32) -> Vec<Vec<Float>> {
    let binom = binomials(kmax, prec);
    let mut t = vec![vec![Float::new(prec); kmax + 1]; kmax + 1];
    t[0][0] = Float::with_val(prec, 1);
    for k in 1..=kmax {
        fill_power_row(&mut t, c, &binom, k, prec);
    }
    t
}

fn fill_power_row(t: &mut [Vec<Float>], c: &[Float], binom: &[Vec<Float>], k: usize, prec: u32) {
    let mut term = Float::new(prec);
    for i in 1..=k {
        let mut acc = Float::new(prec);
        // ν^i = ν · ν^{i-1}, splitting off the derivatives taken by the first factor
        for p in 1..=(k + 1 - i) {
            if p > c.len() || t[k - p][i - 1].is_zero() {
                continue;
            }
            term.assign(&binom[k][p] * &c[p - 1]);
            term *= &t[k - p][i - 1];
            acc += &term;
        }
        t[k][i] = acc;
    }
}

/// Cumulants `c₁..c_m` from the split polynomial by differentiating
/// `P(ν(χ), χ) = 0` order by order; the `ℓ`-th relation is linear in `c_ℓ`.
pub fn cumulants_forward(split: &SplitCharPoly, m: usize) -> Result<CumulantSet> {
    let prec = split.prec;
    if m == 0 {
        return Err(Error::InvalidParameter("cumulant order must be at least 1".into()));
    }
    let q = split.q();
    let qp = split.qprime();
    let dim = split.dim();
    if q[1].to_f64().abs() < 1e-12 {
        return Err(Error::DegenerateRoot(q[1].to_f64().abs()));
    }
    let binom = binomials(m, prec);
    let mut t = vec![vec![Float::new(prec); m + 1]; m + 1];
    t[0][0] = Float::with_val(prec, 1);
    let mut c: Vec<Float> = Vec::with_capacity(m);
    let mut term = Float::new(prec);
    for l in 1..=m {
        // row l with c_l still unknown: T[l][1] = c_l is the only place it enters
        fill_power_row(&mut t, &c, &binom, l, prec);
        let mut residual = Float::new(prec);
        for i in 0..=dim.min(l) {
            term.assign(&q[i] * &t[l][i]);
            residual += &term;
        }
        for i in 0..=dim.min(l - 1) {
            let mut s = Float::new(prec);
            for k in i..l {
                term.assign(&binom[l][k] * &t[k][i]);
                s += &term;
            }
            term.assign(&qp[i] * &s);
            residual += &term;
        }
        let cl = Float::with_val(prec, -residual / &q[1]);
        t[l][1] = cl.clone();
        c.push(cl);
    }
    Ok(CumulantSet::new(CumulantMethod::ForwardRecursion, c, prec))
}

/// Options for the contour method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourOptions {
    pub radius: f64,
    pub points: usize,
    pub prec: u32,
    /// Also evaluate at `radius / 2` and require agreement.
    pub check_half_radius: bool,
}

impl Default for ContourOptions {
    fn default() -> Self {
        ContourOptions {
            radius: DEFAULT_RADIUS,
            points: DEFAULT_POINTS,
            prec: xprec::DEFAULT_PRECISION,
            check_half_radius: true,
        }
    }
}

/// Dominant branch `ν(χ)` sampled on the circle `|χ| = r` at
/// `χ_j = r·e^{2πij/N}`, refined to the working precision.
pub fn contour_samples(s: &SuperOperator, radius: f64, points: usize, prec: u32) -> Result<Vec<Complex>> {
    if radius <= 0.0 || !radius.is_finite() || points < 4 {
        return Err(Error::InvalidParameter(format!("contour radius {radius}, points {points}")));
    }
    if s.aux().is_none() {
        return Err(Error::InvalidParameter("generator has no auxiliary edge".into()));
    }
    let approach = 16;
    let mut path: Vec<Complex64> = (0..approach).map(|k| Complex64::new(radius * k as f64 / approach as f64, 0.0)).collect();
    // fine steps around the circle, closing back on the starting point
    let sub = 4;
    let steps = points * sub;
    path.extend((0..=steps).map(|k| Complex64::from_polar(radius, 2.0 * PI * k as f64 / steps as f64)));
    let tracked = track_branch(s, &path)?;
    let circle = &tracked[approach..];
    let (start, end) = (circle[0].0, circle[steps].0);
    if (start - end).norm() > 1e-6 * (1.0 + start.norm()) {
        return Err(Error::BranchCrossing(format!("branch does not close: {start} vs {end}")));
    }
    let aux = s.aux().expect("checked above");
    let pos = aux.tilted_position(s.n());
    let mut untilted = extended_generator(s, prec);
    *untilted.get_mut(pos.0, pos.1) = Complex::new(prec);
    let two_pi = Float::with_val(prec, rug::float::Constant::Pi) * 2u32;
    (0..points)
        .into_par_iter()
        .map(|j| {
            let (seed, gap) = circle[j * sub];
            // the gain entry ε·e^χ on the exact sample point χ = r·e^{iθ}
            let theta = Float::with_val(prec, &two_pi * j as u64) / points as u64;
            let (sin, cos) = theta.sin_cos(Float::new(prec));
            let chi = Complex::with_val(prec, (cos * radius, sin * radius));
            let mut m = untilted.clone();
            *m.get_mut(pos.0, pos.1) = chi.exp() * aux.epsilon;
            polish(&m, seed, gap, prec)
        })
        .collect()
}

fn contour_cumulants(samples: &[Complex], radius: f64, m: usize, prec: u32) -> Vec<Float> {
    let n = samples.len();
    let r = Float::with_val(prec, radius);
    let two_pi = Float::with_val(prec, rug::float::Constant::Pi) * 2u32;
    let mut out = Vec::with_capacity(m);
    let mut factorial = Float::with_val(prec, 1);
    for k in 1..=m {
        factorial *= k as u32;
        let mut acc = Complex::new(prec);
        for (j, nu) in samples.iter().enumerate() {
            let theta = Float::with_val(prec, &two_pi * (j * k) as u64) / n as u64;
            let phase = Complex::with_val(prec, (theta.clone().cos(), -theta.sin()));
            acc += Complex::with_val(prec, nu * &phase);
        }
        let rk = r.clone().pow(k as u32);
        let value = Float::with_val(prec, acc.real() * &factorial) / n as u64 / rk;
        out.push(value);
    }
    out
}

/// Cumulants by Cauchy's formula on `|χ| = r`, trapezoidal in the angle.
pub fn cumulants_contour(s: &SuperOperator, m: usize, opts: ContourOptions) -> Result<CumulantSet> {
    if m == 0 {
        return Err(Error::InvalidParameter("cumulant order must be at least 1".into()));
    }
    let prec = opts.prec;
    let samples = contour_samples(s, opts.radius, opts.points, prec)?;
    let values = contour_cumulants(&samples, opts.radius, m, prec);
    if opts.check_half_radius {
        let half = contour_samples(s, 0.5 * opts.radius, opts.points, prec)?;
        let check = contour_cumulants(&half, 0.5 * opts.radius, m, prec);
        for (k, (a, b)) in values.iter().zip(&check).enumerate() {
            let rel = relative(a, b);
            if rel > RADIUS_CONSISTENCY {
                return Err(Error::RadiusConsistency { order: k + 1, relative: rel });
            }
        }
    }
    let mut set = CumulantSet::new(CumulantMethod::Contour, values, prec);
    set.contour = Some((opts.radius, opts.points));
    Ok(set)
}

/// `ε·ρ_uu` of the steady state: the mean jump rate across the auxiliary edge.
pub fn mean_current(s: &SuperOperator) -> Result<f64> {
    let aux = s
        .aux()
        .ok_or_else(|| Error::InvalidParameter("generator has no auxiliary edge".into()))?;
    let rho = steady_state(&s.with_chi(Complex64::new(0.0, 0.0)))?;
    Ok(aux.epsilon * rho.entries[dyad_index(aux.u, aux.u, s.n())?].re)
}
