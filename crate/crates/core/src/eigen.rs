//! Dense real eigenvalues: Householder reduction to upper Hessenberg form,
//! then Francis double-shift QR with deflation.

use nalgebra::{Complex, DMatrix};
use thiserror::Error;

pub const MAX_DIM: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dense eigensolver limited to n <= {MAX_DIM}, got {0}")]
    TooLarge(usize),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("QR iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("eigenvalue {value} failed the Hessenberg determinant check (pivot ratio {ratio:e})")]
    ResidualCheck { value: Complex<f64>, ratio: f64 },
}

/// All eigenvalues of `m`, sorted by descending real part (ties by
/// descending imaginary part).
pub fn dense_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>, EigenError> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(EigenError::NotSquare { rows, cols });
    }
    if rows > MAX_DIM {
        return Err(EigenError::TooLarge(rows));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(EigenError::NonFinite);
    }
    let n = rows;
    if n == 0 {
        return Ok(Vec::new());
    }
    let hess = hessenberg(m);
    let mut work = hess.clone();
    let mut values = hessenberg_qr(&mut work)?;
    for &value in &values {
        let ratio = min_pivot_ratio(&hess, value);
        if ratio > RESIDUAL_TOL {
            return Err(EigenError::ResidualCheck { value, ratio });
        }
    }
    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(values)
}

const RESIDUAL_TOL: f64 = 1e-6;

/// Orthogonal similarity `Q^T m Q` in upper Hessenberg form.
pub fn hessenberg(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut h = m.clone();
    let mut v = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let norm = (k + 1..n).map(|i| h[(i, k)] * h[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if h[(k + 1, k)] > 0.0 { -norm } else { norm };
        for i in 0..n {
            v[i] = if i > k { h[(i, k)] } else { 0.0 };
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = v[k + 1..].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H <- (I - 2 v v^T / |v|^2) H (I - 2 v v^T / |v|^2)
        for j in 0..n {
            let dot: f64 = (k + 1..n).map(|i| v[i] * h[(i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k + 1..n {
                h[(i, j)] -= f * v[i];
            }
        }
        for i in 0..n {
            let dot: f64 = (k + 1..n).map(|j| h[(i, j)] * v[j]).sum();
            let f = 2.0 * dot / vnorm2;
            for j in k + 1..n {
                h[(i, j)] -= f * v[j];
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
    }
    h
}

fn sign_of(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of an upper Hessenberg matrix; `a` is destroyed.
fn hessenberg_qr(a: &mut DMatrix<f64>) -> Result<Vec<Complex<f64>>, EigenError> {
    let n = a.nrows();
    let max_sweeps = 100 * n;
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }

    let mut total = 0usize;
    let mut shift_acc = 0.0;
    // active block is rows/cols l..=nn
    let mut nn = n as isize - 1;
    while nn >= 0 {
        let mut its = 0;
        loop {
            // look for a negligible subdiagonal element
            let mut l = nn as usize;
            while l >= 1 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() + s == s {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let nu = nn as usize;
            let mut x = a[(nu, nu)];
            if l == nu {
                wr[nu] = x + shift_acc;
                wi[nu] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[(nu - 1, nu - 1)];
            let mut w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
            if l == nu - 1 {
                // 2x2 block
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += shift_acc;
                if q >= 0.0 {
                    let z = p + sign_of(z, p);
                    wr[nu - 1] = x + z;
                    wr[nu] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = z;
                    wi[nu] = -z;
                }
                nn -= 2;
                break;
            }
            if total >= max_sweeps {
                return Err(EigenError::NoConvergence(max_sweeps));
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                shift_acc += x;
                for i in 0..=nu {
                    a[(i, i)] -= x;
                }
                let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total += 1;

            // find two consecutive small subdiagonal elements
            let mut m = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                a[(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[(i, i - 3)] = 0.0;
                }
            }
            // double QR step on rows l..=nu and columns m..=nu
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if k != nu - 1 { a[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign_of((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[(k, k - 1)] = -a[(k, k - 1)];
                        }
                    } else {
                        a[(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                        if k != nu - 1 {
                            pp += r * a[(k + 2, j)];
                            a[(k + 2, j)] -= pp * z;
                        }
                        a[(k + 1, j)] -= pp * y;
                        a[(k, j)] -= pp * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                        if k != nu - 1 {
                            pp += z * a[(i, k + 2)];
                            a[(i, k + 2)] -= pp * r;
                        }
                        a[(i, k + 1)] -= pp * q;
                        a[(i, k)] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex::new(re, im)).collect())
}

/// Smallest pivot of a partially pivoted LU of `h - λI`, relative to the
/// matrix scale. Zero for an exact eigenvalue; Hessenberg structure keeps the
/// elimination at O(n^2).
fn min_pivot_ratio(h: &DMatrix<f64>, lambda: Complex<f64>) -> f64 {
    let n = h.nrows();
    let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(lambda.norm()).max(1.0);
    let mut rows: Vec<Vec<Complex<f64>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let v = Complex::new(h[(i, j)], 0.0);
                    if i == j {
                        v - lambda
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();
    let mut min_pivot = f64::INFINITY;
    for k in 0..n {
        if k + 1 < n && rows[k + 1][k].norm() > rows[k][k].norm() {
            rows.swap(k, k + 1);
        }
        let pivot = rows[k][k];
        min_pivot = min_pivot.min(pivot.norm());
        if k + 1 < n && pivot.norm() > 0.0 {
            let f = rows[k + 1][k] / pivot;
            if f.norm() > 0.0 {
                let (upper, lower) = rows.split_at_mut(k + 1);
                for j in k..n {
                    lower[0][j] -= f * upper[k][j];
                }
            }
        }
    }
    min_pivot / scale
}
