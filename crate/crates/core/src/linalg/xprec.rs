//! Extended-precision kernels on MPFR/MPC scalars.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rug::{Assign, Complex, Float};

/// Default significand width, in bits.
pub const DEFAULT_PRECISION: u32 = 256;

pub fn float(prec: u32, x: f64) -> Float {
    Float::with_val(prec, x)
}

pub fn complex(prec: u32, z: Complex64) -> Complex {
    Complex::with_val(prec, (z.re, z.im))
}

pub fn to_c64(z: &Complex) -> Complex64 {
    Complex64::new(z.real().to_f64(), z.imag().to_f64())
}

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug)]
pub struct XMatrix {
    n: usize,
    prec: u32,
    data: Vec<Complex>,
}

impl XMatrix {
    /// Exact conversion of a double-precision matrix.
    pub fn from_c64(m: &DMatrix<Complex64>, prec: u32) -> XMatrix {
        let n = m.nrows();
        let data = (0..n * n).map(|k| complex(prec, m[(k / n, k % n)])).collect();
        XMatrix { n, prec, data }
    }

    pub fn zeros(n: usize, prec: u32) -> XMatrix {
        XMatrix { n, prec, data: vec![Complex::new(prec); n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Complex {
        &self.data[i * self.n + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Complex {
        &mut self.data[i * self.n + j]
    }

    fn mul(&self, other: &XMatrix) -> XMatrix {
        let n = self.n;
        let mut out = XMatrix::zeros(n, self.prec);
        let mut t = Complex::new(self.prec);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    t.assign(a * b);
                    out.data[i * n + j] += &t;
                }
            }
        }
        out
    }

    fn trace(&self) -> Complex {
        let mut t = Complex::new(self.prec);
        for i in 0..self.n {
            t += self.get(i, i);
        }
        t
    }

    /// Characteristic polynomial coefficients (index = power) by
    /// Faddeev–LeVerrier.
    pub fn char_poly(&self) -> Vec<Complex> {
        let n = self.n;
        let mut coeffs = vec![Complex::new(self.prec); n + 1];
        coeffs[n] = Complex::with_val(self.prec, 1);
        let mut m = XMatrix::zeros(n, self.prec);
        for k in 1..=n {
            let mut next = self.mul(&m);
            for i in 0..n {
                next.data[i * n + i] += &coeffs[n - k + 1];
            }
            m = next;
            let mut c = self.mul(&m).trace();
            c /= k as u32;
            coeffs[n - k] = -c;
        }
        coeffs
    }

    /// `tr((z·1 − M)⁻¹)` by LU with partial pivoting. `None` if singular.
    pub fn resolvent_trace(&self, z: &Complex) -> Option<Complex> {
        let n = self.n;
        let prec = self.prec;
        let mut a: Vec<Complex> = self.data.iter().map(|x| Complex::with_val(prec, -x)).collect();
        for i in 0..n {
            a[i * n + i] += z;
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut t = Complex::new(prec);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| {
                    let ax = Float::with_val(prec, a[x * n + k].abs_ref());
                    let ay = Float::with_val(prec, a[y * n + k].abs_ref());
                    ax.partial_cmp(&ay).unwrap()
                })
                .unwrap();
            if a[p * n + k].is_zero() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(p * n + j, k * n + j);
                }
                perm.swap(p, k);
            }
            let pivot = a[k * n + k].clone();
            for i in k + 1..n {
                let f = Complex::with_val(prec, &a[i * n + k] / &pivot);
                for j in k + 1..n {
                    t.assign(&f * &a[k * n + j]);
                    a[i * n + j] -= &t;
                }
                a[i * n + k] = f;
            }
        }
        // solve for each unit vector and accumulate the diagonal of the inverse
        let mut trace = Complex::new(prec);
        let mut y = vec![Complex::new(prec); n];
        for col in 0..n {
            for i in 0..n {
                y[i] = Complex::with_val(prec, if perm[i] == col { 1 } else { 0 });
                for j in 0..i {
                    t.assign(&a[i * n + j] * &y[j]);
                    y[i] -= &t;
                }
            }
            for i in (0..n).rev() {
                for j in i + 1..n {
                    t.assign(&a[i * n + j] * &y[j]);
                    y[i] -= &t;
                }
                y[i] /= &a[i * n + i];
            }
            trace += &y[col];
        }
        Some(trace)
    }
}

/// Solve a dense real system by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot vanishes.
pub fn solve_real(a: &[Vec<Float>], b: &[Float], prec: u32) -> Option<Vec<Float>> {
    let n = a.len();
    let mut m: Vec<Vec<Float>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r: Vec<Float> = row.iter().map(|x| Float::with_val(prec, x)).collect();
            r.push(Float::with_val(prec, bi));
            r
        })
        .collect();
    let mut t = Float::new(prec);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| m[x][k].clone().abs().partial_cmp(&m[y][k].clone().abs()).unwrap())
            .unwrap();
        if m[p][k].is_zero() {
            return None;
        }
        m.swap(p, k);
        for i in k + 1..n {
            let f = Float::with_val(prec, &m[i][k] / &m[k][k]);
            if f.is_zero() {
                continue;
            }
            for j in k..=n {
                t.assign(&f * &m[k][j]);
                m[i][j] -= &t;
            }
        }
    }
    let mut x = vec![Float::new(prec); n];
    for i in (0..n).rev() {
        let mut s = Float::with_val(prec, &m[i][n]);
        for j in i + 1..n {
            t.assign(&m[i][j] * &x[j]);
            s -= &t;
        }
        s /= &m[i][i];
        x[i] = s;
    }
    Some(x)
}

/// Inverse of a dense real matrix, column by column.
pub fn invert_real(a: &[Vec<Float>], prec: u32) -> Option<Vec<Vec<Float>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let e: Vec<Float> = (0..n).map(|i| Float::with_val(prec, if i == j { 1 } else { 0 })).collect();
        cols.push(solve_real(a, &e, prec)?);
    }
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect())
}

/// Infinity norm of a dense real matrix.
pub fn norm_inf(a: &[Vec<Float>], prec: u32) -> Float {
    let mut best = Float::new(prec);
    for row in a {
        let mut s = Float::new(prec);
        for x in row {
            s += Float::with_val(prec, x.abs_ref());
        }
        if s > best {
            best = s;
        }
    }
    best
}
