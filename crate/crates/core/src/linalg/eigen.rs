//! Eigenvalues of dense general complex matrices: diagonal balancing,
//! Householder reduction to upper Hessenberg form, then single-shift
//! complex QR with Wilkinson shifts and Ahues–Tisseur deflation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest order accepted by [`eigenvalues`].
pub const MAX_ORDER: usize = 1024;

const RADIX: f64 = 2.0;

#[inline]
fn cabs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// All eigenvalues of a square complex matrix, in no particular order.
pub fn eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    let n = m.nrows();
    if n > MAX_ORDER {
        return Err(Error::SizeLimit(format!("eigenvalue problem of order {n} exceeds {MAX_ORDER}")));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mut values, active) = isolate(m);
    if !active.is_empty() {
        let mut h = m.select_rows(&active).select_columns(&active);
        balance(&mut h);
        hessenberg(&mut h);
        values.extend(hessenberg_qr(&mut h)?);
    }
    Ok(values)
}

/// Split off eigenvalues exposed by symmetric permutation: an index whose
/// row or column, restricted to the remaining indices, is zero off the
/// diagonal contributes its diagonal entry. Returns those eigenvalues and
/// the indices of the remaining block.
pub fn isolate(m: &DMatrix<Complex64>) -> (Vec<Complex64>, Vec<usize>) {
    let n = m.nrows();
    let zero = Complex64::new(0.0, 0.0);
    let mut active = vec![true; n];
    let mut values = Vec::new();
    loop {
        let found = (0..n).find(|&i| {
            active[i]
                && ((0..n).all(|j| j == i || !active[j] || m[(i, j)] == zero)
                    || (0..n).all(|j| j == i || !active[j] || m[(j, i)] == zero))
        });
        match found {
            Some(i) => {
                active[i] = false;
                values.push(m[(i, i)]);
            }
            None => break,
        }
    }
    (values, (0..n).filter(|&i| active[i]).collect())
}

/// Diagonal similarity scaling by powers of two so that row and column
/// norms are comparable. Returns the scaling factors.
pub fn balance(a: &mut DMatrix<Complex64>) -> Vec<f64> {
    let n = a.nrows();
    let mut scale = vec![1.0; n];
    let sqrdx = RADIX * RADIX;
    let mut again = true;
    while again {
        again = false;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += cabs1(a[(j, i)]);
                    r += cabs1(a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                again = true;
                scale[i] *= f;
                let finv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= finv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
    scale
}

/// In-place Householder reduction to upper Hessenberg form.
pub fn hessenberg(a: &mut DMatrix<Complex64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n - 2 {
        let xnorm: f64 = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        // v = x - alpha e1, normalized
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for vi in v.iter_mut().take(n).skip(k + 1) {
            *vi /= vnorm;
        }
        // A <- (I - 2 v v^H) A
        for j in k..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in k + 1..n {
                dot += v[i].conj() * a[(i, j)];
            }
            dot *= 2.0;
            for i in k + 1..n {
                a[(i, j)] -= v[i] * dot;
            }
        }
        // A <- A (I - 2 v v^H)
        for i in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for j in k + 1..n {
                dot += a[(i, j)] * v[j];
            }
            dot *= 2.0;
            for j in k + 1..n {
                a[(i, j)] -= dot * v[j].conj();
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Complex Givens rotation `[c s; -conj(s) c]` with real `c` that maps
/// `(a, b)` to `(r, 0)`.
#[inline]
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let na = a.norm();
    if b == Complex64::new(0.0, 0.0) {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let r = na.hypot(b.norm());
    (na / r, (a / na) * b.conj() / r)
}

/// Eigenvalues of an upper Hessenberg matrix (destroyed on return).
pub fn hessenberg_qr(h: &mut DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(w);
    }
    let ulp = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE * (n as f64 / ulp);
    let itmax = 30 * n.max(10);
    let zero = Complex64::new(0.0, 0.0);

    let mut i = n - 1;
    loop {
        let mut l = 0;
        let mut converged = false;
        for its in 0..=itmax {
            // look for a single small subdiagonal element
            let mut k = i;
            while k > l {
                if cabs1(h[(k, k - 1)]) <= smlnum {
                    break;
                }
                let mut tst = cabs1(h[(k - 1, k - 1)]) + cabs1(h[(k, k)]);
                if tst == 0.0 {
                    if k >= 2 {
                        tst += h[(k - 1, k - 2)].re.abs();
                    }
                    if k + 1 < n {
                        tst += h[(k + 1, k)].re.abs();
                    }
                }
                if cabs1(h[(k, k - 1)]) <= ulp * tst {
                    let ab = cabs1(h[(k, k - 1)]).max(cabs1(h[(k - 1, k)]));
                    let ba = cabs1(h[(k, k - 1)]).min(cabs1(h[(k - 1, k)]));
                    let aa = cabs1(h[(k, k)]).max(cabs1(h[(k - 1, k - 1)] - h[(k, k)]));
                    let bb = cabs1(h[(k, k)]).min(cabs1(h[(k - 1, k - 1)] - h[(k, k)]));
                    let s = aa + ab;
                    // the second test covers (near-)equal diagonals, where
                    // zeroing the entry moves the eigenvalues by √(ab·ba)
                    if ba * (ab / s) <= smlnum.max(ulp * (bb * (aa / s))) || ba * ab <= (ulp * aa).powi(2) {
                        break;
                    }
                }
                k -= 1;
            }
            l = k;
            if l > 0 {
                h[(l, l - 1)] = zero;
            }
            if l >= i {
                converged = true;
                break;
            }

            let shift = if its % 20 == 10 {
                Complex64::new(0.75 * h[(l + 1, l)].norm(), 0.0) + h[(l, l)]
            } else if its > 0 && its % 20 == 0 {
                Complex64::new(0.75 * h[(i, i - 1)].norm(), 0.0) + h[(i, i)]
            } else {
                wilkinson_shift(h[(i - 1, i - 1)], h[(i - 1, i)], h[(i, i - 1)], h[(i, i)])
            };

            // implicit single-shift sweep on the active block l..=i
            let (c, s) = givens(h[(l, l)] - shift, h[(l + 1, l)]);
            rotate_rows(h, l, c, s, l, i);
            rotate_cols(h, l, c, s, l, (l + 2).min(i));
            for k in l + 1..i {
                let (c, s) = givens(h[(k, k - 1)], h[(k + 1, k - 1)]);
                rotate_rows(h, k, c, s, k - 1, i);
                h[(k + 1, k - 1)] = zero;
                rotate_cols(h, k, c, s, l, (k + 2).min(i));
            }
        }
        if !converged {
            return Err(Error::NoConvergence { index: i });
        }
        w[i] = h[(i, i)];
        if i == 0 {
            break;
        }
        i -= 1;
    }
    Ok(w)
}

/// Eigenvalue of the trailing 2×2 block `[a b; c d]` closest to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let u = b.sqrt() * c.sqrt();
    let s = cabs1(u);
    if s == 0.0 {
        return d;
    }
    let x = 0.5 * (a - d);
    let sx = cabs1(x);
    let s = s.max(sx);
    let mut y = s * ((x / s) * (x / s) + (u / s) * (u / s)).sqrt();
    if sx > 0.0 && (x.re / sx) * y.re + (x.im / sx) * y.im < 0.0 {
        y = -y;
    }
    d - u * (u / (x + y))
}

/// Rows k, k+1 <- G [rows k; k+1], columns `from..=to`.
#[inline]
fn rotate_rows(h: &mut DMatrix<Complex64>, k: usize, c: f64, s: Complex64, from: usize, to: usize) {
    for j in from..=to {
        let x = h[(k, j)];
        let y = h[(k + 1, j)];
        h[(k, j)] = x * c + s * y;
        h[(k + 1, j)] = y * c - s.conj() * x;
    }
}

/// Columns k, k+1 <- [cols k, k+1] G^H, rows `from..=to`.
#[inline]
fn rotate_cols(h: &mut DMatrix<Complex64>, k: usize, c: f64, s: Complex64, from: usize, to: usize) {
    for r in from..=to {
        let x = h[(r, k)];
        let y = h[(r, k + 1)];
        h[(r, k)] = x * c + y * s.conj();
        h[(r, k + 1)] = y * c - x * s;
    }
}
