//! Characteristic polynomials `det(x·1 − M)`, coefficients indexed by
//! power: `coeffs[k]` multiplies `x^k`, `coeffs[n] = 1`.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Faddeev–LeVerrier recursion in complex double precision.
pub fn faddeev_leverrier(a: &DMatrix<Complex64>) -> Vec<Complex64> {
    let n = a.nrows();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = a * &m;
        for i in 0..n {
            next[(i, i)] += coeffs[n - k + 1];
        }
        m = next;
        let am = a * &m;
        coeffs[n - k] = -am.trace() / k as f64;
    }
    coeffs
}

/// Expand `∏(x − λᵢ)`.
pub fn from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= c * r;
        }
        coeffs = next;
    }
    coeffs
}

/// Exact Faddeev–LeVerrier for integer matrices. Every intermediate is an
/// integer; the division by `k` is exact.
pub fn integer_char_poly(a: &[Vec<i64>]) -> Vec<i128> {
    let n = a.len();
    let a: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut coeffs = vec![0i128; n + 1];
    coeffs[n] = 1;
    let mut m = vec![vec![0i128; n]; n];
    let mul = |x: &[Vec<i128>], y: &[Vec<i128>]| -> Vec<Vec<i128>> {
        let mut out = vec![vec![0i128; n]; n];
        for i in 0..n {
            for k in 0..n {
                if x[i][k] == 0 {
                    continue;
                }
                for j in 0..n {
                    out[i][j] += x[i][k] * y[k][j];
                }
            }
        }
        out
    };
    for k in 1..=n {
        let mut next = mul(&a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += coeffs[n - k + 1];
        }
        m = next;
        let am = mul(&a, &m);
        let tr: i128 = (0..n).map(|i| am[i][i]).sum();
        debug_assert_eq!(tr % k as i128, 0);
        coeffs[n - k] = -tr / k as i128;
    }
    coeffs
}

/// Evaluate a real-coefficient polynomial (Horner) at a complex point.
pub fn eval_real(coeffs: &[f64], x: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}
