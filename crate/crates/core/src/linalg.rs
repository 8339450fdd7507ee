//! Dense symmetric eigensolver.
//!
//! Householder reduction to tridiagonal form followed by the implicit QL
//! algorithm with Wilkinson-style shifts, after the EISPACK routines
//! `tred2`/`tql2`. Everything runs sequentially in a fixed order, so the same
//! input bits always produce the same output bits.

use ndarray::Array2;

use crate::error::{Error, Result};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// stored as the columns of the returned matrix.
pub fn symmetric_eigen(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape(format!(
            "{}x{} matrix is not square",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), Array2::zeros((0, 0))));
    }
    let mut w: Vec<f64> = a.t().iter().copied().collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut w, &mut d, &mut e);
    if let Err(()) = tql2(n, &mut w, &mut d, &mut e) {
        let residual = residual_norm(a, &d, &w);
        return Err(Error::NoConvergence { residual });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            vectors[[row, col]] = w[k * n + row];
        }
    }
    Ok((values, vectors))
}

/// Frobenius norm of `A V - V diag(d)` where row `k` of `w` is eigenvector `k`.
fn residual_norm(a: &Array2<f64>, d: &[f64], w: &[f64]) -> f64 {
    let n = d.len();
    let mut total = 0.0;
    for k in 0..n {
        let vk = &w[k * n..(k + 1) * n];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += a[[i, j]] * vk[j];
            }
            let r = s - d[k] * vk[i];
            total += r * r;
        }
    }
    total.sqrt()
}

/// Householder tridiagonalization with accumulated transformations. The
/// working matrix is stored transposed (`t[c * n + r]` holds entry `(r, c)`)
/// so that the inner loops, which walk down columns, read contiguous memory.
/// On return row `k` of `t` is the `k`-th column of the accumulated
/// orthogonal matrix.
fn tred2(n: usize, t: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let at = |r: usize, c: usize| c * n + r;
    for j in 0..n {
        d[j] = t[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = t[at(i - 1, j)];
                t[at(i, j)] = 0.0;
                t[at(j, i)] = 0.0;
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                t[at(j, i)] = f;
                g = e[j] + t[at(j, j)] * f;
                let col = &t[j * n + j + 1..j * n + i];
                for ((&vkj, &dk), ek) in col.iter().zip(&d[j + 1..i]).zip(&mut e[j + 1..i]) {
                    g += vkj * dk;
                    *ek += vkj * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = &mut t[j * n + j..j * n + i];
                for ((v, &ek), &dk) in col.iter_mut().zip(&e[j..i]).zip(&d[j..i]) {
                    *v -= f * ek + g * dk;
                }
                d[j] = t[at(i - 1, j)];
                t[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate the transformations.
    for i in 0..n - 1 {
        t[at(n - 1, i)] = t[at(i, i)];
        t[at(i, i)] = 1.0;
        let h = d[i + 1];
        let (lo, hi) = t.split_at_mut((i + 1) * n);
        let next = &mut hi[..n];
        if h != 0.0 {
            for (dk, &v) in d[..=i].iter_mut().zip(&next[..=i]) {
                *dk = v / h;
            }
            for j in 0..=i {
                let col = &mut lo[j * n..j * n + i + 1];
                let mut g = 0.0;
                for (&a, &b) in next[..=i].iter().zip(col.iter()) {
                    g += a * b;
                }
                for (v, &dk) in col.iter_mut().zip(&d[..=i]) {
                    *v -= g * dk;
                }
            }
        }
        for v in &mut next[..=i] {
            *v = 0.0;
        }
    }
    for j in 0..n {
        d[j] = t[at(n - 1, j)];
        t[at(n - 1, j)] = 0.0;
    }
    t[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// `w` holds eigenvectors as rows.
fn tql2(n: usize, w: &mut [f64], d: &mut [f64], e: &mut [f64]) -> std::result::Result<(), ()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_SWEEPS_PER_EIGENVALUE {
                    return Err(());
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = w.split_at_mut((i + 1) * n);
                    let row_i = &mut lo[i * n..];
                    let row_next = &mut hi[..n];
                    for (a, b) in row_i.iter_mut().zip(row_next.iter_mut()) {
                        let t = *b;
                        *b = s * *a + c * t;
                        *a = c * *a - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
