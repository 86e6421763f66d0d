//! Krylov iterations (CG, flexible PCG, GMRES), the tensor-Toeplitz
//! preconditioner, and the small trait glue that lets them run on any
//! operator shape used in this crate.
//!
//! Conventions: the initial guess is whatever `x` holds on entry (the
//! drivers pass zero), convergence is tested on the relative residual
//! ||b - Ax|| / ||b||, the test happens before each step, and the report's
//! history records one relative residual per performed iteration.

use std::time::Instant;

use crate::banded::BandedLu;
use crate::bspline::Degree;
use crate::dense::DenseMatrix;
use crate::galerkin::toeplitz_mass_factor;
use crate::kron::KroneckerBlockOperator;
use crate::Result;

/// Anything that acts as a square matrix on contiguous vectors.
pub trait LinearOp {
    fn len(&self) -> usize;
    fn apply_to(&self, x: &[f64], y: &mut [f64]);
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl LinearOp for KroneckerBlockOperator {
    fn len(&self) -> usize {
        self.total_len()
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        self.apply(x, y);
    }
}

impl LinearOp for DenseMatrix {
    fn len(&self) -> usize {
        self.rows()
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        self.apply(x, y);
    }
}

/// A mutable preconditioner action z = P(r). Mutability admits stateful
/// actions such as a V-cycle with internal workspaces.
pub trait Preconditioner {
    fn precondition(&mut self, r: &[f64], z: &mut [f64]);
}

/// No-op preconditioner: z = r.
pub struct IdentityPrecond;

impl Preconditioner for IdentityPrecond {
    fn precondition(&mut self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

impl<F: FnMut(&[f64], &mut [f64])> Preconditioner for F {
    fn precondition(&mut self, r: &[f64], z: &mut [f64]) {
        self(r, z)
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub final_relres: f64,
    /// relative residual after each performed iteration
    pub residual_history: Vec<f64>,
    pub seconds: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Plain conjugate gradients on an SPD operator.
pub fn cg<A: LinearOp>(op: &A, b: &[f64], x: &mut [f64], tol: f64, maxit: usize) -> SolveReport {
    let start = Instant::now();
    let n = op.len();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let bnorm = norm(b);
    let mut history = Vec::new();
    if bnorm == 0.0 {
        x.fill(0.0);
        return SolveReport {
            iterations: 0,
            converged: true,
            final_relres: 0.0,
            residual_history: history,
            seconds: start.elapsed().as_secs_f64(),
        };
    }
    let mut r = vec![0.0; n];
    op.apply_to(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut relres = rr.sqrt() / bnorm;
    let mut k = 0;
    while relres >= tol && k < maxit {
        op.apply_to(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break; // loss of positive definiteness; report what we have
        }
        let alpha = rr / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
        relres = rr.sqrt() / bnorm;
        history.push(relres);
        k += 1;
    }
    SolveReport {
        iterations: k,
        converged: relres < tol,
        final_relres: relres,
        residual_history: history,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Flexible (Polak-Ribiere) preconditioned CG: the search direction is
/// re-orthogonalized against the previous one through the beta formula
/// <z_{k+1}, r_{k+1} - r_k> / <z_k, r_k>, which tolerates nonstationary
/// preconditioners such as a multigrid cycle with Krylov smoothing.
pub fn pcg_flexible<A: LinearOp, P: Preconditioner>(
    op: &A,
    pre: &mut P,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    maxit: usize,
) -> SolveReport {
    let start = Instant::now();
    let n = op.len();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let bnorm = norm(b);
    let mut history = Vec::new();
    if bnorm == 0.0 {
        x.fill(0.0);
        return SolveReport {
            iterations: 0,
            converged: true,
            final_relres: 0.0,
            residual_history: history,
            seconds: start.elapsed().as_secs_f64(),
        };
    }
    let mut r = vec![0.0; n];
    op.apply_to(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    pre.precondition(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut r_prev = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut relres = norm(&r) / bnorm;
    let mut k = 0;
    while relres >= tol && k < maxit {
        op.apply_to(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || rz == 0.0 {
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        r_prev.copy_from_slice(&r);
        axpy(-alpha, &ap, &mut r);
        pre.precondition(&r, &mut z);
        let mut zdr = 0.0; // <z_new, r_new - r_old>
        for i in 0..n {
            zdr += z[i] * (r[i] - r_prev[i]);
        }
        let beta = zdr / rz;
        rz = dot(&r, &z);
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        relres = norm(&r) / bnorm;
        history.push(relres);
        k += 1;
    }
    SolveReport {
        iterations: k,
        converged: relres < tol,
        final_relres: relres,
        residual_history: history,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Standard preconditioned CG run for exactly `steps` iterations from the
/// incoming iterate; used as a multigrid post-smoother. Never fails: on
/// breakdown (tiny curvature or residual) it simply returns early.
pub fn pcg_fixed_steps<A: LinearOp, P: Preconditioner>(
    op: &A,
    pre: &mut P,
    b: &[f64],
    x: &mut [f64],
    steps: usize,
) {
    let n = op.len();
    let mut r = vec![0.0; n];
    op.apply_to(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    pre.precondition(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let floor = f64::MIN_POSITIVE * n as f64;
    for _ in 0..steps {
        if rz.abs() <= floor {
            return;
        }
        op.apply_to(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap.abs() <= floor {
            return;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        pre.precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
}

/// How a GMRES run terminates.
#[derive(Debug, Clone, Copy)]
pub enum GmresMode {
    /// Solver: iterate until the TRUE relative residual ||b - Ax||/||b||
    /// drops below the tolerance (the iterate is reconstructed every step),
    /// or the step budget is exhausted.
    Solve { tol: f64, maxit: usize },
    /// Smoother: run exactly this many steps from the incoming iterate
    /// (fewer only on happy breakdown) and return the updated iterate.
    FixedSteps(usize),
}

/// Left-preconditioned full GMRES with modified Gram-Schmidt and Givens
/// rotations.
pub fn gmres<A: LinearOp, P: Preconditioner>(
    op: &A,
    pre: &mut P,
    b: &[f64],
    x: &mut [f64],
    mode: GmresMode,
) -> SolveReport {
    let start = Instant::now();
    let n = op.len();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let bnorm = norm(b);
    let mut history = Vec::new();
    let (solve_tol, max_steps) = match mode {
        GmresMode::Solve { tol, maxit } => (Some(tol), maxit),
        GmresMode::FixedSteps(k) => (None, k),
    };
    if bnorm == 0.0 && solve_tol.is_some() {
        x.fill(0.0);
        return SolveReport {
            iterations: 0,
            converged: true,
            final_relres: 0.0,
            residual_history: history,
            seconds: start.elapsed().as_secs_f64(),
        };
    }
    let mut scratch = vec![0.0; n];
    let mut w = vec![0.0; n];
    // preconditioned initial residual
    op.apply_to(x, &mut scratch);
    for (si, bi) in scratch.iter_mut().zip(b) {
        *si = bi - *si;
    }
    let true_res0 = norm(&scratch) / if bnorm > 0.0 { bnorm } else { 1.0 };
    if let Some(tol) = solve_tol {
        if true_res0 < tol {
            return SolveReport {
                iterations: 0,
                converged: true,
                final_relres: true_res0,
                residual_history: history,
                seconds: start.elapsed().as_secs_f64(),
            };
        }
    }
    pre.precondition(&scratch, &mut w);
    let pres0 = norm(&w);
    if pres0 == 0.0 {
        // preconditioned residual identically zero: nothing to do
        return SolveReport {
            iterations: 0,
            converged: solve_tol.is_none() || true_res0 < solve_tol.unwrap(),
            final_relres: true_res0,
            residual_history: history,
            seconds: start.elapsed().as_secs_f64(),
        };
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_steps + 1);
    basis.push(w.iter().map(|v| v / pres0).collect());
    let mut hcols: Vec<Vec<f64>> = Vec::with_capacity(max_steps);
    let mut cs: Vec<f64> = Vec::with_capacity(max_steps);
    let mut sn: Vec<f64> = Vec::with_capacity(max_steps);
    let mut g = vec![pres0];
    let x0 = x.to_vec();
    let mut relres = true_res0;
    let mut converged = false;
    let mut steps = 0;
    let breakdown_floor = 1e-14 * pres0;

    for k in 0..max_steps {
        // w = P A q_k
        op.apply_to(&basis[k], &mut scratch);
        pre.precondition(&scratch, &mut w);
        // modified Gram-Schmidt
        let mut hcol = vec![0.0; k + 2];
        for (j, q) in basis.iter().enumerate().take(k + 1) {
            let hij = dot(&w, q);
            hcol[j] = hij;
            axpy(-hij, q, &mut w);
        }
        let hlast = norm(&w);
        hcol[k + 1] = hlast;
        let happy = hlast <= breakdown_floor;
        if !happy {
            basis.push(w.iter().map(|v| v / hlast).collect());
        }
        // apply accumulated rotations to the new column
        for j in 0..k {
            let t = cs[j] * hcol[j] + sn[j] * hcol[j + 1];
            hcol[j + 1] = -sn[j] * hcol[j] + cs[j] * hcol[j + 1];
            hcol[j] = t;
        }
        let denom = (hcol[k] * hcol[k] + hcol[k + 1] * hcol[k + 1]).sqrt();
        let (c, s) = if denom == 0.0 {
            (1.0, 0.0)
        } else {
            (hcol[k] / denom, hcol[k + 1] / denom)
        };
        cs.push(c);
        sn.push(s);
        hcol[k] = denom;
        hcol[k + 1] = 0.0;
        let g_next = -s * g[k];
        g[k] *= c;
        g.push(g_next);
        hcols.push(hcol);
        steps = k + 1;

        // reconstruct the iterate: solve the triangular system R y = g
        let mut y = vec![0.0; steps];
        for i in (0..steps).rev() {
            let mut s = g[i];
            for (j, yj) in y.iter().enumerate().skip(i + 1) {
                s -= hcols[j][i] * yj;
            }
            y[i] = s / hcols[i][i];
        }
        x.copy_from_slice(&x0);
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &basis[j], x);
        }

        match solve_tol {
            Some(tol) => {
                // true residual, one extra operator application per step
                op.apply_to(x, &mut scratch);
                for (si, bi) in scratch.iter_mut().zip(b) {
                    *si = bi - *si;
                }
                relres = norm(&scratch) / bnorm;
                history.push(relres);
                if relres < tol || happy {
                    converged = relres < tol || happy;
                    break;
                }
            }
            None => {
                // smoother mode: record the preconditioned residual estimate
                relres = g[steps].abs() / pres0;
                history.push(relres);
                if happy {
                    converged = true;
                    break;
                }
            }
        }
    }
    if solve_tol.is_none() {
        converged = true;
    }
    SolveReport {
        iterations: steps,
        converged,
        final_relres: relres,
        residual_history: history,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Block-diagonal tensor-Toeplitz preconditioner: one banded Toeplitz
/// mass-like factor per direction, identical across the d vector
/// components, applied by solving along each axis in turn.
pub struct TensorToeplitzPrecond {
    components: usize,
    sizes: Vec<usize>,
    lus: Vec<BandedLu>,
}

impl TensorToeplitzPrecond {
    pub fn new(p: Degree, components: usize, sizes: &[usize]) -> Result<Self> {
        let mut lus = Vec::with_capacity(sizes.len());
        for &m in sizes {
            let t = toeplitz_mass_factor(p, m)?;
            lus.push(BandedLu::factor(&t)?);
        }
        Ok(Self {
            components,
            sizes: sizes.to_vec(),
            lus,
        })
    }

    pub fn total_len(&self) -> usize {
        self.components * self.sizes.iter().product::<usize>()
    }
}

impl Preconditioner for TensorToeplitzPrecond {
    fn precondition(&mut self, r: &[f64], z: &mut [f64]) {
        assert_eq!(r.len(), self.total_len());
        assert_eq!(z.len(), self.total_len());
        z.copy_from_slice(r);
        let clen: usize = self.sizes.iter().product();
        let d = self.sizes.len();
        for comp in 0..self.components {
            let offset = comp * clen;
            for ax in 0..d {
                let m = self.sizes[ax];
                let inner: usize = self.sizes[ax + 1..].iter().product();
                let outer: usize = self.sizes[..ax].iter().product();
                for o in 0..outer {
                    let plane = offset + o * m * inner;
                    for t in 0..inner {
                        self.lus[ax].solve_strided(z, plane + t, inner);
                    }
                }
            }
        }
    }
}
