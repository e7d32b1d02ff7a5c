//! Liouville-space superoperators of the quantum stochastic walk.
//!
//! A density matrix `ρ` is stored as a vector of length `n²` with the dyad
//! `|i⟩⟨j|` at position [`dyad_index`]`(i, j, n) = i·n + j`. Every builder
//! in this module goes through that function.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Row-major position of the dyad `|i⟩⟨j|`.
pub fn dyad_index(i: usize, j: usize, n: usize) -> Result<usize> {
    if i >= n || j >= n {
        return Err(Error::IndexOutOfRange { i, j, n });
    }
    Ok(i * n + j)
}

#[inline]
fn dyad(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i < n && j < n);
    i * n + j
}

/// The directed auxiliary counting edge `u → v` with weight `epsilon`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxEdge {
    pub u: usize,
    pub v: usize,
    pub epsilon: f64,
}

impl AuxEdge {
    pub fn new(u: usize, v: usize, epsilon: f64) -> Result<AuxEdge> {
        if u == v {
            return Err(Error::InvalidParameter(format!("auxiliary edge needs u ≠ v, got ({u}, {v})")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("auxiliary edge weight must be positive, got {epsilon}")));
        }
        Ok(AuxEdge { u, v, epsilon })
    }

    /// Check that `u → v` joins two vertices of `g` that are not adjacent.
    pub fn admissible_for(&self, g: &Graph) -> Result<()> {
        for x in [self.u, self.v] {
            if x >= g.n() {
                return Err(Error::VertexOutOfRange { vertex: x, n: g.n() });
            }
        }
        if g.has_edge(self.u, self.v) {
            return Err(Error::EdgeInGraph(self.u, self.v));
        }
        Ok(())
    }

    /// Position of the single counting-field-dressed entry: the transfer
    /// `|u⟩⟨u| → |v⟩⟨v|`, as `(row, column)`.
    pub fn tilted_position(&self, n: usize) -> (usize, usize) {
        (dyad(self.v, self.v, n), dyad(self.u, self.u, n))
    }
}

/// Construction parameters carried alongside a superoperator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub omega: f64,
    pub epsilon: f64,
    pub edge: Option<(usize, usize)>,
    pub chi: Complex64,
}

/// Dense `n² × n²` generator over the dyad basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOperator {
    n: usize,
    matrix: DMatrix<Complex64>,
    meta: Meta,
}

impl SuperOperator {
    fn zeros(n: usize, meta: Meta) -> SuperOperator {
        SuperOperator { n, matrix: DMatrix::zeros(n * n, n * n), meta }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    /// The auxiliary edge, when one is present.
    pub fn aux(&self) -> Option<AuxEdge> {
        self.meta.edge.map(|(u, v)| AuxEdge { u, v, epsilon: self.meta.epsilon })
    }

    /// Same generator at another (possibly complex) counting field. Only the
    /// single gain entry of the auxiliary edge depends on `chi`.
    pub fn with_chi(&self, chi: Complex64) -> SuperOperator {
        let mut out = self.clone();
        if let Some(aux) = self.aux() {
            let pos = aux.tilted_position(self.n);
            let base = self.matrix[pos] - aux.epsilon * self.meta.chi.exp();
            out.matrix[pos] = base + aux.epsilon * chi.exp();
        }
        out.meta.chi = chi;
        out
    }

    /// `vec(1)ᵀ · L`, which vanishes for a trace-preserving generator.
    pub fn trace_functional(&self) -> Vec<Complex64> {
        let n = self.n;
        (0..self.dim())
            .map(|col| (0..n).map(|i| self.matrix[(dyad(i, i, n), col)]).sum())
            .collect()
    }

    /// Apply to a vectorized density matrix.
    pub fn apply(&self, rho: &[Complex64]) -> Vec<Complex64> {
        let v = nalgebra::DVector::from_column_slice(rho);
        (&self.matrix * v).iter().copied().collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Add the Lindblad term of the jump `|src⟩ → |dst⟩` with the given rate;
/// the gain (sandwich) part is further multiplied by `gain`.
fn add_jump(m: &mut DMatrix<Complex64>, n: usize, src: usize, dst: usize, rate: f64, gain: Complex64) {
    // Υ ρ Υ† with Υ = |dst⟩⟨src| moves ρ_src,src to ρ_dst,dst
    m[(dyad(dst, dst, n), dyad(src, src, n))] += gain * rate;
    // -½{Υ†Υ, ρ} with Υ†Υ = |src⟩⟨src|
    for k in 0..n {
        m[(dyad(src, k, n), dyad(src, k, n))] -= 0.5 * rate;
        m[(dyad(k, src, n), dyad(k, src, n))] -= 0.5 * rate;
    }
}

/// Coherent part `ρ ↦ −i[A, ρ]`.
pub fn build_quantum(g: &Graph) -> SuperOperator {
    let n = g.n();
    let mut s = SuperOperator::zeros(n, Meta { omega: 1.0, epsilon: 0.0, edge: None, chi: Complex64::new(0.0, 0.0) });
    let mi = Complex64::new(0.0, -1.0);
    for &(a, b) in g.edges() {
        for (i, k) in [(a, b), (b, a)] {
            // (Aρ)_{ij} gets A_{ik} ρ_{kj}; (ρA)_{ji} gets ρ_{jk} A_{ki}
            for j in 0..n {
                s.matrix[(dyad(i, j, n), dyad(k, j, n))] += mi;
                s.matrix[(dyad(j, i, n), dyad(j, k, n))] -= mi;
            }
        }
    }
    s
}

/// Classical dissipator: one jump `i → j` of unit rate per ordered pair of
/// adjacent vertices.
pub fn build_classical(g: &Graph) -> SuperOperator {
    let n = g.n();
    let mut s = SuperOperator::zeros(n, Meta { omega: 0.0, epsilon: 0.0, edge: None, chi: Complex64::new(0.0, 0.0) });
    let one = Complex64::new(1.0, 0.0);
    for &(a, b) in g.edges() {
        add_jump(&mut s.matrix, n, a, b, 1.0, one);
        add_jump(&mut s.matrix, n, b, a, 1.0, one);
    }
    s
}

/// Auxiliary-edge dissipator with its gain term dressed by `e^χ`.
pub fn build_aux(n: usize, u: usize, v: usize, epsilon: f64, chi: f64) -> Result<SuperOperator> {
    let aux = AuxEdge::new(u, v, epsilon)?;
    if u >= n || v >= n {
        return Err(Error::VertexOutOfRange { vertex: u.max(v), n });
    }
    let chi = Complex64::new(chi, 0.0);
    let mut s = SuperOperator::zeros(n, Meta { omega: 0.0, epsilon, edge: Some((u, v)), chi });
    add_jump(&mut s.matrix, n, aux.u, aux.v, epsilon, chi.exp());
    Ok(s)
}

/// `ω·L_qm + (1−ω)·L_cl + L_aux(χ)`; the auxiliary term is omitted when
/// `aux` is `None`.
pub fn compose(g: &Graph, omega: f64, aux: Option<AuxEdge>, chi: f64) -> Result<SuperOperator> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::InvalidParameter(format!("omega must lie in [0, 1], got {omega}")));
    }
    let n = g.n();
    let mut matrix = build_quantum(g).matrix * Complex64::new(omega, 0.0);
    matrix += build_classical(g).matrix * Complex64::new(1.0 - omega, 0.0);
    let mut meta = Meta { omega, epsilon: 0.0, edge: None, chi: Complex64::new(chi, 0.0) };
    if let Some(aux) = aux {
        aux.admissible_for(g)?;
        matrix += build_aux(n, aux.u, aux.v, aux.epsilon, chi)?.matrix;
        meta.epsilon = aux.epsilon;
        meta.edge = Some((aux.u, aux.v));
    }
    Ok(SuperOperator { n, matrix, meta })
}
