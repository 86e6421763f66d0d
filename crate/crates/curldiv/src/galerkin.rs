//! 1D Galerkin factors on the interior B-spline basis: mass, advection and
//! stiffness matrices of size m = n + p - 2 with half-bandwidth p, plus the
//! banded Toeplitz mass-like factor used by the spectral preconditioner.
//!
//! Rows whose basis functions are pure cardinal shifts get their entries from
//! the closed-form cardinal inner products; every boundary-affected entry is
//! integrated with per-span Gauss quadrature of p + 1 points, which is exact
//! for these piecewise-polynomial integrands.

use crate::banded::{BandSymmetry, BandedMatrix1D};
use crate::bspline::{cardinal_deriv, cardinal_eval, Degree, KnotVector};
use crate::gauss::gauss_legendre;
use crate::{Error, Result};

/// Entries (i, j) with both indices in this range (0-based) involve only
/// central basis functions, so the Toeplitz formula applies.
fn central_pair_range(p: usize, n: usize) -> std::ops::RangeInclusive<usize> {
    // interior function k (0-based matrix index) is basis index k + 1,
    // central iff p <= k + 1 <= n - 1
    (p - 1)..=(n - 2)
}

fn check_size(p: usize, n: usize) -> Result<usize> {
    // n >= p + 1 guarantees at least one pure cardinal basis function, which
    // is what the spectral structure of the discretization rests on.
    if n < p + 1 {
        return Err(Error::MeshTooCoarse { p, n, min: p + 1 });
    }
    Ok(n + p - 2)
}

/// Galerkin matrix of int N_{i}^{(r_row)} N_{j}^{(r_col)} dx over the
/// interior basis, assembled purely by per-span Gauss quadrature with
/// `q_points` nodes per knot span. Used for all boundary-affected entries
/// and, at higher order, as an independent reference in tests.
pub fn assemble_by_quadrature(
    p: Degree,
    n: usize,
    r_row: usize,
    r_col: usize,
    q_points: usize,
) -> Result<BandedMatrix1D> {
    let pv = p.get();
    let m = check_size(pv, n)?;
    if r_row > 1 || r_col > 1 {
        return Err(Error::DerivativeOrder {
            degree: pv,
            order: r_row.max(r_col),
        });
    }
    let kv = KnotVector::new(p, n)?;
    let rule = gauss_legendre(q_points)?;
    let w = pv.min(m - 1);
    let mut out = BandedMatrix1D::new(m, w, BandSymmetry::General)?;
    let nf = n as f64;
    for span in 0..n {
        let s = pv + span; // knot span index
        for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let x = (span as f64 + t) / nf;
            let wx = wt / nf;
            let (vals, ders) = kv.eval_nonzero(s, x);
            // active basis indices span .. span + p; interior ones are 1 ..= m
            for a in 0..=pv {
                let bi = span + a;
                if bi < 1 || bi > m {
                    continue;
                }
                let va = if r_row == 0 { vals[a] } else { ders[a] };
                if va == 0.0 {
                    continue;
                }
                for b in 0..=pv {
                    let bj = span + b;
                    if bj < 1 || bj > m {
                        continue;
                    }
                    let vb = if r_col == 0 { vals[b] } else { ders[b] };
                    out.add(bi - 1, bj - 1, wx * va * vb);
                }
            }
        }
    }
    Ok(out)
}

fn with_central_overwrite(
    p: Degree,
    n: usize,
    r_row: usize,
    r_col: usize,
    central: impl Fn(i64) -> f64,
) -> Result<BandedMatrix1D> {
    let pv = p.get();
    let mut a = assemble_by_quadrature(p, n, r_row, r_col, pv + 1)?;
    let range = central_pair_range(pv, n);
    for i in range.clone() {
        let (lo, hi) = a.row_window(i);
        for j in lo.max(*range.start())..=hi.min(*range.end()) {
            a.set(i, j, central(i as i64 - j as i64));
        }
    }
    Ok(a)
}

/// Mass matrix M: (M)_ij = int N_{i+1} N_{j+1} dx, SPD with half-bandwidth p.
/// Central entries are (1/n) phi_{2p+1}(p + 1 - (i - j)).
pub fn mass_matrix(p: Degree, n: usize) -> Result<BandedMatrix1D> {
    let pv = p.get();
    let nf = n as f64;
    let mut a = with_central_overwrite(p, n, 0, 0, |d| {
        cardinal_eval(2 * pv + 1, pv as f64 + 1.0 - d as f64) / nf
    })?;
    a.symmetrize();
    a.set_symmetry(BandSymmetry::Symmetric);
    Ok(a)
}

/// Advection matrix A: (A)_ij = int N_{i+1} N_{j+1}' dx, exactly
/// skew-symmetric. Central entries are -phi'_{2p+1}(p + 1 - (i - j)).
pub fn advection_matrix(p: Degree, n: usize) -> Result<BandedMatrix1D> {
    let pv = p.get();
    let mut a = with_central_overwrite(p, n, 0, 1, |d| {
        -cardinal_deriv(2 * pv + 1, pv as f64 + 1.0 - d as f64, 1).unwrap()
    })?;
    // the exact integrals are skew (integration by parts with vanishing
    // boundary terms); enforce the structure so transposes are sign flips
    a.skew_symmetrize();
    a.set_symmetry(BandSymmetry::Skew);
    Ok(a)
}

/// Stiffness matrix S: (S)_ij = int N_{i+1}' N_{j+1}' dx, SPD.
/// Central entries are -n phi''_{2p+1}(p + 1 - (i - j)).
pub fn stiffness_matrix(p: Degree, n: usize) -> Result<BandedMatrix1D> {
    let pv = p.get();
    let nf = n as f64;
    let mut a = with_central_overwrite(p, n, 1, 1, |d| {
        -nf * cardinal_deriv(2 * pv + 1, pv as f64 + 1.0 - d as f64, 2).unwrap()
    })?;
    a.symmetrize();
    a.set_symmetry(BandSymmetry::Symmetric);
    Ok(a)
}

/// Banded Toeplitz factor T_m generated by the degree p - 1 mass symbol:
/// (T)_ij = phi_{2p-1}(p - (i - j)) for |i - j| < p. For p = 1 this is the
/// identity. SPD for every m.
pub fn toeplitz_mass_factor(p: Degree, m: usize) -> Result<BandedMatrix1D> {
    let pv = p.get();
    if m == 0 {
        return Err(Error::BandTooWide { m, w: 0 });
    }
    let w = (pv - 1).min(m - 1);
    let mut a = BandedMatrix1D::new(m, w, BandSymmetry::Symmetric)?;
    for i in 0..m {
        let (lo, hi) = a.row_window(i);
        for j in lo..=hi {
            let d = i as i64 - j as i64;
            a.set(i, j, cardinal_eval(2 * pv - 1, pv as f64 - d as f64));
        }
    }
    Ok(a)
}
