//! Full symmetric eigensolver: Householder reduction to tridiagonal form
//! followed by the implicit-shift QL iteration, eigenvalues only. Runs in
//! O(n^3) time and O(n^2) memory, which is fine for the moderate matrix
//! sizes produced by the spectral comparisons.

use crate::dense::DenseMatrix;
use crate::{Error, Result};

/// Relative symmetry tolerance: inputs are expected to be symmetric by
/// construction, so anything past roundoff is treated as a caller bug.
const SYMMETRY_RTOL: f64 = 1e-12;

const MAX_QL_SWEEPS: usize = 64;

/// All eigenvalues of a symmetric matrix, sorted ascending.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: a.cols(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut scale = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            scale = scale.max(a.get(i, j).abs());
        }
    }
    let tol = SYMMETRY_RTOL * (1.0 + scale);
    let mut work = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let diff = (a.get(i, j) - a.get(j, i)).abs();
            if diff > tol {
                return Err(Error::NotSymmetric { i, j, diff });
            }
            let v = 0.5 * (a.get(i, j) + a.get(j, i));
            work[i * n + j] = v;
            work[j * n + i] = v;
        }
    }
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    tridiagonalize(&mut work, n, &mut d, &mut e);
    ql_implicit(&mut d, &mut e)?;
    d.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(d)
}

/// Householder similarity reduction of a symmetric matrix (row-major, n x n)
/// to tridiagonal form. On exit `d` holds the diagonal and `e[0..n-1]` the
/// subdiagonal (`e[n-1]` is zero).
fn tridiagonalize(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    let mut v = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    for k in 0..n.saturating_sub(2) {
        let mut norm2 = 0.0;
        for i in k + 1..n {
            norm2 += a[i * n + k] * a[i * n + k];
        }
        if norm2 == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let alpha = if x0 >= 0.0 {
            -norm2.sqrt()
        } else {
            norm2.sqrt()
        };
        let mut vnorm2 = 0.0;
        for i in k + 1..n {
            let vi = a[i * n + k] - if i == k + 1 { alpha } else { 0.0 };
            v[i] = vi;
            vnorm2 += vi * vi;
        }
        let vn = vnorm2.sqrt();
        for vi in v.iter_mut().take(n).skip(k + 1) {
            *vi /= vn;
        }
        e[k] = alpha;
        a[(k + 1) * n + k] = alpha;
        a[k * n + (k + 1)] = alpha;
        for i in k + 2..n {
            a[i * n + k] = 0.0;
            a[k * n + i] = 0.0;
        }
        // trailing block update B <- (I - 2vv')B(I - 2vv') via
        // w = Bv, c = v'w, q = w - cv, B <- B - 2vq' - 2qv'
        for i in k + 1..n {
            let mut s = 0.0;
            for j in k + 1..n {
                s += a[i * n + j] * v[j];
            }
            w[i] = s;
        }
        let c: f64 = (k + 1..n).map(|i| v[i] * w[i]).sum();
        for i in k + 1..n {
            w[i] -= c * v[i];
        }
        for i in k + 1..n {
            let vi = v[i];
            let qi = w[i];
            for j in k + 1..n {
                a[i * n + j] -= 2.0 * (vi * w[j] + qi * v[j]);
            }
        }
    }
    for i in 0..n {
        d[i] = a[i * n + i];
    }
    if n >= 2 {
        e[n - 2] = a[(n - 1) * n + (n - 2)];
    }
    e[n - 1] = 0.0;
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix.
/// `d` is the diagonal, `e[i]` couples rows i and i + 1.
fn ql_implicit(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::EigenNoConvergence(l));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                let t = (d[i] - g) * s + 2.0 * c * b;
                p = s * t;
                d[i + 1] = g + p;
                g = c * t - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues of a symmetric 3 x 3 matrix by cyclic Jacobi rotations,
/// sorted ascending. Small, allocation-free, and robust near multiple
/// eigenvalues, so it serves as the fallback path for pointwise symbol
/// diagonalization.
pub fn symmetric_eigenvalues_3x3(m: [[f64; 3]; 3]) -> [f64; 3] {
    let mut a = m;
    for _ in 0..50 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let scale = a[0][0].abs().max(a[1][1].abs()).max(a[2][2].abs());
        if off <= 1e-60 * (1.0 + scale * scale) {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
            let t = if theta >= 0.0 {
                1.0 / (theta + (1.0 + theta * theta).sqrt())
            } else {
                1.0 / (theta - (1.0 + theta * theta).sqrt())
            };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;
            let mut b = a;
            for r in 0..3 {
                b[r][p] = c * a[r][p] - s * a[r][q];
                b[r][q] = s * a[r][p] + c * a[r][q];
            }
            let mut out = b;
            for r in 0..3 {
                out[p][r] = c * b[p][r] - s * b[q][r];
                out[q][r] = s * b[p][r] + c * b[q][r];
            }
            out[p][q] = 0.0;
            out[q][p] = 0.0;
            a = out;
        }
    }
    let mut vals = [a[0][0], a[1][1], a[2][2]];
    vals.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    vals
}
