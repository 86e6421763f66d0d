//! Geometric multigrid for the tensor-product operator: linear interpolation
//! in every direction, Galerkin-projected coarse operators computed factor by
//! factor, symmetric Gauss-Seidel smoothing (a forward sweep followed by a
//! backward sweep), and a Toeplitz-preconditioned Krylov post-smoother on the
//! finest level only.
//!
//! The symmetric sweeps keep the whole cycle self-adjoint in the energy inner
//! product away from the finest level, so the cycle works well both as a
//! stationary iteration and as a preconditioner for conjugate gradients.
//!
//! Three drivers are exported: `solve_mim` runs the V-cycle as a stationary
//! iteration, `solve_pmim` preconditions flexible CG with two V-cycle passes
//! per step, and `solve_pwl` preconditions flexible CG with a single V-cycle
//! built from the block-diagonal part of the operator only.

use std::time::Instant;

use crate::banded::{BandSymmetry, BandedMatrix1D};
use crate::bspline::Degree;
use crate::dense::DenseLu;
use crate::kron::KroneckerBlockOperator;
use crate::krylov::{
    gmres, pcg_fixed_steps, pcg_flexible, GmresMode, SolveReport, TensorToeplitzPrecond,
};
use crate::{Error, Result};

/// Interpolation weights of the 1D linear prolongator: coarse node J feeds
/// fine nodes 2J, 2J+1, 2J+2 with 1/2, 1, 1/2.
const PROL_WEIGHTS: [f64; 3] = [0.5, 1.0, 0.5];

/// 1D linear prolongation between nested uniform index sets: a fine level
/// with an odd number of unknowns m maps down to (m - 1) / 2.
#[derive(Debug, Clone)]
pub struct Prolongator1D {
    fine: usize,
    coarse: usize,
}

impl Prolongator1D {
    pub fn new(fine: usize) -> Result<Self> {
        if fine < 3 || fine % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "prolongation needs an odd fine size of at least 3, got {fine}"
            )));
        }
        Ok(Self {
            fine,
            coarse: (fine - 1) / 2,
        })
    }

    pub fn fine_len(&self) -> usize {
        self.fine
    }

    pub fn coarse_len(&self) -> usize {
        self.coarse
    }

    /// dst = P src along `axis` of a tensor with shape `sizes`
    /// (sizes[axis] == coarse); dst has the same shape with fine at `axis`.
    fn forward_axis(&self, sizes: &[usize], axis: usize, src: &[f64], dst: &mut [f64]) {
        debug_assert_eq!(sizes[axis], self.coarse);
        let inner: usize = sizes[axis + 1..].iter().product();
        let outer: usize = sizes[..axis].iter().product();
        dst.fill(0.0);
        for o in 0..outer {
            let sp = o * self.coarse * inner;
            let dp = o * self.fine * inner;
            for t in 0..inner {
                for j in 0..self.coarse {
                    let c = src[sp + j * inner + t];
                    let base = dp + 2 * j * inner + t;
                    dst[base] += PROL_WEIGHTS[0] * c;
                    dst[base + inner] += PROL_WEIGHTS[1] * c;
                    dst[base + 2 * inner] += PROL_WEIGHTS[2] * c;
                }
            }
        }
    }

    /// dst = P^T src along `axis` (sizes[axis] == fine); dst gets coarse.
    fn transpose_axis(&self, sizes: &[usize], axis: usize, src: &[f64], dst: &mut [f64]) {
        debug_assert_eq!(sizes[axis], self.fine);
        let inner: usize = sizes[axis + 1..].iter().product();
        let outer: usize = sizes[..axis].iter().product();
        for o in 0..outer {
            let sp = o * self.fine * inner;
            let dp = o * self.coarse * inner;
            for t in 0..inner {
                for j in 0..self.coarse {
                    let base = sp + 2 * j * inner + t;
                    dst[dp + j * inner + t] = PROL_WEIGHTS[0] * src[base]
                        + PROL_WEIGHTS[1] * src[base + inner]
                        + PROL_WEIGHTS[2] * src[base + 2 * inner];
                }
            }
        }
    }
}

/// fine = (P_1 x ... x P_d) coarse, one tensor per vector component.
fn tensor_prolongate(prols: &[Prolongator1D], comps: usize, coarse: &[f64], fine: &mut [f64]) {
    let coarse_clen: usize = prols.iter().map(|p| p.coarse).product();
    let fine_clen: usize = prols.iter().map(|p| p.fine).product();
    let mut a = vec![0.0; fine_clen];
    let mut b = vec![0.0; fine_clen];
    for comp in 0..comps {
        let mut sizes: Vec<usize> = prols.iter().map(|p| p.coarse).collect();
        let mut len = coarse_clen;
        a[..len].copy_from_slice(&coarse[comp * coarse_clen..][..len]);
        for (ax, prol) in prols.iter().enumerate() {
            let new_len = len / prol.coarse * prol.fine;
            prol.forward_axis(&sizes, ax, &a[..len], &mut b[..new_len]);
            sizes[ax] = prol.fine;
            len = new_len;
            std::mem::swap(&mut a, &mut b);
        }
        fine[comp * fine_clen..][..fine_clen].copy_from_slice(&a[..len]);
    }
}

/// coarse = (P_1 x ... x P_d)^T fine, one tensor per vector component.
fn tensor_restrict(prols: &[Prolongator1D], comps: usize, fine: &[f64], coarse: &mut [f64]) {
    let coarse_clen: usize = prols.iter().map(|p| p.coarse).product();
    let fine_clen: usize = prols.iter().map(|p| p.fine).product();
    let mut a = vec![0.0; fine_clen];
    let mut b = vec![0.0; fine_clen];
    for comp in 0..comps {
        let mut sizes: Vec<usize> = prols.iter().map(|p| p.fine).collect();
        let mut len = fine_clen;
        a[..len].copy_from_slice(&fine[comp * fine_clen..][..len]);
        for (ax, prol) in prols.iter().enumerate() {
            let new_len = len / prol.fine * prol.coarse;
            prol.transpose_axis(&sizes, ax, &a[..len], &mut b[..new_len]);
            sizes[ax] = prol.coarse;
            len = new_len;
            std::mem::swap(&mut a, &mut b);
        }
        coarse[comp * coarse_clen..][..coarse_clen].copy_from_slice(&a[..len]);
    }
}

/// Galerkin projection P^T X P of one banded 1D factor. The result is banded
/// with half-bandwidth (w + 2) / 2 and inherits the symmetry kind of X.
fn coarsen_banded(x: &BandedMatrix1D, prol: &Prolongator1D) -> Result<BandedMatrix1D> {
    let mf = x.size();
    debug_assert_eq!(mf, prol.fine);
    let mc = prol.coarse;
    let wc = ((x.half_bandwidth() + 2) / 2).min(mc - 1);
    let mut out = BandedMatrix1D::new(mc, wc, x.symmetry())?;
    for bi in 0..mc {
        for bj in bi.saturating_sub(wc)..=(bi + wc).min(mc - 1) {
            let mut v = 0.0;
            for (a, wa) in PROL_WEIGHTS.iter().enumerate() {
                let i = 2 * bi + a;
                if i >= mf {
                    continue;
                }
                for (b, wb) in PROL_WEIGHTS.iter().enumerate() {
                    let j = 2 * bj + b;
                    if j >= mf {
                        continue;
                    }
                    v += wa * wb * x.get(i, j);
                }
            }
            out.set(bi, bj, v);
        }
    }
    match x.symmetry() {
        BandSymmetry::Symmetric => out.symmetrize(),
        BandSymmetry::Skew => out.skew_symmetrize(),
        BandSymmetry::General => {}
    }
    Ok(out)
}

/// Nearest refinement levels n (below and above) whose per-direction size
/// n + p - 2 has the 2^k - 1 form the coarsening needs.
fn nearest_admissible_n(m: usize, p: usize) -> (usize, usize) {
    let mut below = None;
    for k in 2..usize::BITS as usize {
        let mm = (1usize << k) - 1;
        let n = (mm + 2).saturating_sub(p);
        if n < p + 1 {
            continue; // too coarse to assemble at this degree
        }
        if mm < m {
            below = Some(n);
        } else if mm > m {
            return (below.unwrap_or(n), n);
        }
    }
    unreachable!("admissible size search exhausted usize range");
}

/// Which Krylov method smooths the finest level after coarse-grid
/// correction, always preconditioned by the tensor-Toeplitz factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmootherKind {
    /// Standard PCG steps; for symmetric positive definite targets such as
    /// the block-diagonal auxiliary operator.
    PcgToeplitz,
    /// GMRES steps; robust for the full coupled operator.
    PgmresToeplitz,
}

/// Geometric hierarchy for one operator: Galerkin-coarsened levels, their
/// diagonals for Gauss-Seidel, per-level prolongators, a dense factorization
/// of the coarsest level, and the finest-level Krylov smoother.
pub struct MultigridHierarchy {
    levels: Vec<KroneckerBlockOperator>,
    diags: Vec<Vec<f64>>,
    /// prols[l] maps level l+1 (coarse) to level l (fine), one per direction
    prols: Vec<Vec<Prolongator1D>>,
    coarsest: DenseLu,
    smoother: SmootherKind,
    smoother_steps: usize,
    toeplitz: TensorToeplitzPrecond,
}

impl MultigridHierarchy {
    /// Builds the full hierarchy. Every per-direction size must be 2^k - 1;
    /// coarsening halves each direction until some direction reaches 3.
    pub fn new(
        op: &KroneckerBlockOperator,
        p: Degree,
        smoother: SmootherKind,
    ) -> Result<Self> {
        for &m in op.sizes() {
            if m < 3 || !(m + 1).is_power_of_two() {
                let (lo, hi) = nearest_admissible_n(m, p.get());
                return Err(Error::NotCoarsenable {
                    m,
                    p: p.get(),
                    lo,
                    hi,
                });
            }
        }
        let mut levels = vec![op.clone()];
        let mut prols = Vec::new();
        while levels.last().unwrap().sizes().iter().all(|&m| m > 3) {
            let cur = levels.last().unwrap();
            let level_prols: Vec<Prolongator1D> = cur
                .sizes()
                .iter()
                .map(|&m| Prolongator1D::new(m))
                .collect::<Result<_>>()?;
            let coarse = cur.map_registry(|f| coarsen_banded(f, &Prolongator1D::new(f.size())?))?;
            levels.push(coarse);
            prols.push(level_prols);
        }
        let diags = levels.iter().map(|l| l.diagonal()).collect();
        let coarsest = DenseLu::factor(&levels.last().unwrap().to_dense()?)?;
        let toeplitz = TensorToeplitzPrecond::new(p, op.components(), op.sizes())?;
        Ok(Self {
            levels,
            diags,
            prols,
            coarsest,
            smoother,
            smoother_steps: p.get(),
            toeplitz,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, l: usize) -> &KroneckerBlockOperator {
        &self.levels[l]
    }

    /// One V-cycle applied to `rhs`, refining `x` in place from its incoming
    /// value: symmetric Gauss-Seidel pre-smoothing, coarse-grid correction
    /// through all levels, and post-smoothing (finest level: the configured
    /// number of Toeplitz-preconditioned Krylov steps; other levels: one more
    /// symmetric sweep).
    pub fn vcycle(&mut self, rhs: &[f64], x: &mut [f64]) {
        self.cycle(0, rhs, x);
    }

    fn cycle(&mut self, l: usize, rhs: &[f64], x: &mut [f64]) {
        if l + 1 == self.levels.len() {
            let mut sol = vec![0.0; rhs.len()];
            self.coarsest.solve(rhs, &mut sol);
            x.copy_from_slice(&sol);
            return;
        }
        gauss_seidel(&self.levels[l], &self.diags[l], rhs, x);
        gauss_seidel_backward(&self.levels[l], &self.diags[l], rhs, x);

        let comps = self.levels[l].components();
        let mut r = vec![0.0; self.levels[l].total_len()];
        self.levels[l].apply_to_residual(x, rhs, &mut r);
        let mut rc = vec![0.0; self.levels[l + 1].total_len()];
        tensor_restrict(&self.prols[l], comps, &r, &mut rc);
        let mut ec = vec![0.0; rc.len()];
        self.cycle(l + 1, &rc, &mut ec);
        tensor_prolongate(&self.prols[l], comps, &ec, &mut r);
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi += ri;
        }

        if l == 0 {
            let (levels, toeplitz) = (&self.levels, &mut self.toeplitz);
            match self.smoother {
                SmootherKind::PcgToeplitz => {
                    pcg_fixed_steps(&levels[0], toeplitz, rhs, x, self.smoother_steps);
                }
                SmootherKind::PgmresToeplitz => {
                    gmres(
                        &levels[0],
                        toeplitz,
                        rhs,
                        x,
                        GmresMode::FixedSteps(self.smoother_steps),
                    );
                }
            }
        } else {
            gauss_seidel(&self.levels[l], &self.diags[l], rhs, x);
            gauss_seidel_backward(&self.levels[l], &self.diags[l], rhs, x);
        }
    }
}

/// One forward Gauss-Seidel sweep in the natural component-major order,
/// updating x in place.
pub fn gauss_seidel(op: &KroneckerBlockOperator, diag: &[f64], b: &[f64], x: &mut [f64]) {
    for g in 0..op.total_len() {
        let s = op.row_dot(g, x);
        x[g] += (b[g] - s) / diag[g];
    }
}

/// One backward Gauss-Seidel sweep (reverse unknown order). Following a
/// forward sweep with a backward one makes the pair self-adjoint in the
/// energy inner product of a symmetric operator.
pub fn gauss_seidel_backward(op: &KroneckerBlockOperator, diag: &[f64], b: &[f64], x: &mut [f64]) {
    for g in (0..op.total_len()).rev() {
        let s = op.row_dot(g, x);
        x[g] += (b[g] - s) / diag[g];
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Multi-iterative method: the V-cycle as a stationary iteration,
/// x <- x + V(b - Ax), down to a relative residual below `tol`.
pub fn solve_mim(
    op: &KroneckerBlockOperator,
    p: Degree,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    maxit: usize,
) -> Result<SolveReport> {
    let start = Instant::now();
    let mut mg = MultigridHierarchy::new(op, p, SmootherKind::PgmresToeplitz)?;
    let bnorm = norm(b);
    let mut history = Vec::new();
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(SolveReport {
            iterations: 0,
            converged: true,
            final_relres: 0.0,
            residual_history: history,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let n = op.total_len();
    let mut r = vec![0.0; n];
    let mut relres = {
        op.apply_to_residual(x, b, &mut r);
        norm(&r) / bnorm
    };
    let mut k = 0;
    while relres >= tol && k < maxit {
        mg.vcycle(b, x);
        op.apply_to_residual(x, b, &mut r);
        relres = norm(&r) / bnorm;
        history.push(relres);
        k += 1;
    }
    Ok(SolveReport {
        iterations: k,
        converged: relres < tol,
        final_relres: relres,
        residual_history: history,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Preconditioned multi-iterative method: flexible CG on the full operator,
/// where each preconditioner application runs the stationary V-cycle
/// iteration (GMRES smoothing) twice on the residual equation. Doubling the
/// passes squares the cycle's contraction factor, which keeps the outer CG
/// count small and nearly mesh-independent at a cost of two cycles per step.
pub fn solve_pmim(
    op: &KroneckerBlockOperator,
    p: Degree,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    maxit: usize,
) -> Result<SolveReport> {
    let mut mg = MultigridHierarchy::new(op, p, SmootherKind::PgmresToeplitz)?;
    let mut pre = |r: &[f64], z: &mut [f64]| {
        z.fill(0.0);
        mg.vcycle(r, z);
        mg.vcycle(r, z);
    };
    Ok(pcg_flexible(op, &mut pre, b, x, tol, maxit))
}

/// Auxiliary-space method: flexible CG on the full operator, preconditioned
/// by one V-cycle on its block-diagonal part (CG smoothing, which the
/// symmetric positive definite diagonal blocks admit).
pub fn solve_pwl(
    op: &KroneckerBlockOperator,
    d_op: &KroneckerBlockOperator,
    p: Degree,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    maxit: usize,
) -> Result<SolveReport> {
    let mut mg = MultigridHierarchy::new(d_op, p, SmootherKind::PcgToeplitz)?;
    let mut pre = |r: &[f64], z: &mut [f64]| {
        z.fill(0.0);
        mg.vcycle(r, z);
    };
    Ok(pcg_flexible(op, &mut pre, b, x, tol, maxit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;
    use crate::kron::assemble_isotropic;
    use crate::krylov::cg;
    use crate::manufactured::manufactured_system;

    fn deg(p: usize) -> Degree {
        Degree::new(p).unwrap()
    }

    fn rand_stream(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed.max(1);
        move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }
    }

    #[test]
    fn prolongator_shape_weights_and_duality() {
        assert!(Prolongator1D::new(4).is_err());
        assert!(Prolongator1D::new(1).is_err());
        let p = Prolongator1D::new(7).unwrap();
        assert_eq!(p.coarse_len(), 3);

        // forward of a coarse unit vector carries the 1/2, 1, 1/2 stencil
        let mut fine = vec![0.0; 7];
        p.forward_axis(&[3], 0, &[0.0, 1.0, 0.0], &mut fine);
        assert_eq!(fine, vec![0.0, 0.0, 0.5, 1.0, 0.5, 0.0, 0.0]);

        // every coarse column sums to 2
        for j in 0..3 {
            let mut e = vec![0.0; 3];
            e[j] = 1.0;
            p.forward_axis(&[3], 0, &e, &mut fine);
            assert!((fine.iter().sum::<f64>() - 2.0).abs() < 1e-15);
        }

        // tensor duality <P c, f> = <c, P^T f> on random 2-component data
        let prols = vec![Prolongator1D::new(7).unwrap(), Prolongator1D::new(15).unwrap()];
        let mut rng = rand_stream(42);
        let nc = 2 * 3 * 7;
        let nf = 2 * 7 * 15;
        let c: Vec<f64> = (0..nc).map(|_| rng()).collect();
        let f: Vec<f64> = (0..nf).map(|_| rng()).collect();
        let mut pc = vec![0.0; nf];
        tensor_prolongate(&prols, 2, &c, &mut pc);
        let mut ptf = vec![0.0; nc];
        tensor_restrict(&prols, 2, &f, &mut ptf);
        let lhs: f64 = pc.iter().zip(&f).map(|(a, b)| a * b).sum();
        let rhs: f64 = c.iter().zip(&ptf).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-13 * (1.0 + lhs.abs()));
    }

    #[test]
    fn coarsening_matches_dense_triple_product() {
        let mf = 15;
        let prol = Prolongator1D::new(mf).unwrap();
        let mc = prol.coarse_len();
        // dense prolongator for the oracle
        let mut pd = DenseMatrix::zeros(mf, mc).unwrap();
        for j in 0..mc {
            pd.set(2 * j, j, 0.5);
            pd.set(2 * j + 1, j, 1.0);
            pd.set(2 * j + 2, j, 0.5);
        }
        let mut rng = rand_stream(7);
        for sym in [BandSymmetry::Symmetric, BandSymmetry::Skew, BandSymmetry::General] {
            let w = 3;
            let mut x = BandedMatrix1D::new(mf, w, sym).unwrap();
            for i in 0..mf {
                for j in i.saturating_sub(w)..=(i + w).min(mf - 1) {
                    x.set(i, j, rng());
                }
            }
            match sym {
                BandSymmetry::Symmetric => x.symmetrize(),
                BandSymmetry::Skew => x.skew_symmetrize(),
                BandSymmetry::General => {}
            }
            let coarse = coarsen_banded(&x, &prol).unwrap();
            assert_eq!(coarse.half_bandwidth(), (w + 2) / 2);
            assert_eq!(coarse.symmetry(), sym);
            let xd = DenseMatrix::from_rows(x.to_dense_rows()).unwrap();
            let oracle = pd.transpose().matmul(&xd).unwrap().matmul(&pd).unwrap();
            for i in 0..mc {
                for j in 0..mc {
                    assert!(
                        (coarse.get(i, j) - oracle.get(i, j)).abs() < 1e-13,
                        "{sym:?} entry ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn hierarchy_level_sizes_and_galerkin_identity() {
        let op = assemble_isotropic(deg(3), 2, 30, 1.0, 0.1).unwrap();
        let mg = MultigridHierarchy::new(&op, deg(3), SmootherKind::PgmresToeplitz).unwrap();
        let sizes: Vec<usize> = (0..mg.num_levels()).map(|l| mg.level(l).sizes()[0]).collect();
        assert_eq!(sizes, vec![31, 15, 7, 3]);

        // coarse operator equals P^T A P applied to random coarse vectors
        let mut rng = rand_stream(99);
        for l in 0..mg.num_levels() - 1 {
            let fine = mg.level(l);
            let coarse = mg.level(l + 1);
            let prols: Vec<Prolongator1D> = fine
                .sizes()
                .iter()
                .map(|&m| Prolongator1D::new(m).unwrap())
                .collect();
            let nf = fine.total_len();
            let nc = coarse.total_len();
            for _ in 0..10 {
                let xc: Vec<f64> = (0..nc).map(|_| rng()).collect();
                let mut px = vec![0.0; nf];
                tensor_prolongate(&prols, 2, &xc, &mut px);
                let mut apx = vec![0.0; nf];
                fine.apply(&px, &mut apx);
                let mut want = vec![0.0; nc];
                tensor_restrict(&prols, 2, &apx, &mut want);
                let mut got = vec![0.0; nc];
                coarse.apply(&xc, &mut got);
                let scale = want.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
                for (g, w) in got.iter().zip(&want) {
                    assert!((g - w).abs() < 1e-11 * (1.0 + scale), "level {l}");
                }
            }
        }
    }

    #[test]
    fn inadmissible_sizes_report_nearest_refinements() {
        // p = 3, n = 20 gives m = 21, not of the 2^k - 1 form
        let op = assemble_isotropic(deg(3), 2, 20, 1.0, 0.1).unwrap();
        let err = MultigridHierarchy::new(&op, deg(3), SmootherKind::PgmresToeplitz)
            .err()
            .expect("size 21 must be rejected");
        let msg = err.to_string();
        assert!(msg.contains("21"), "{msg}");
        assert!(msg.contains("14") && msg.contains("30"), "{msg}");

        // nearest admissible refinements for degree 3 follow 2^k + 1 - p
        assert_eq!(nearest_admissible_n(21, 3), (14, 30));
        assert_eq!(nearest_admissible_n(40, 3), (30, 62));
        // for degree 6 the smallest grids fall below the assembly minimum
        let (lo, hi) = nearest_admissible_n(4, 6);
        assert!(lo >= 7 && hi >= lo);
    }

    #[test]
    fn gauss_seidel_matches_dense_oracle_and_fixes_solution() {
        let op = assemble_isotropic(deg(1), 2, 5, 1.0, 0.4).unwrap();
        let n = op.total_len();
        let dense = op.to_dense().unwrap();
        let diag = op.diagonal();
        let mut rng = rand_stream(5);
        let b: Vec<f64> = (0..n).map(|_| rng()).collect();
        let mut x: Vec<f64> = (0..n).map(|_| rng()).collect();
        let mut want = x.clone();
        // independent dense forward sweep
        for i in 0..n {
            let mut s = b[i];
            for j in 0..n {
                if j != i {
                    s -= dense.get(i, j) * want[j];
                }
            }
            want[i] = s / dense.get(i, i);
        }
        gauss_seidel(&op, &diag, &b, &mut x);
        for (xi, wi) in x.iter().zip(&want) {
            assert!((xi - wi).abs() < 1e-13 * (1.0 + wi.abs()));
        }

        // the exact solution is a fixed point
        let lu = DenseLu::factor(&dense).unwrap();
        let mut sol = vec![0.0; n];
        lu.solve(&b, &mut sol);
        let before = sol.clone();
        gauss_seidel(&op, &diag, &b, &mut sol);
        for (si, bi) in sol.iter().zip(&before) {
            assert!((si - bi).abs() < 1e-12 * (1.0 + bi.abs()));
        }
    }

    #[test]
    fn vcycle_preserves_zero_and_contracts_residual() {
        let op = assemble_isotropic(deg(3), 2, 30, 1.0, 0.1).unwrap();
        let mut mg = MultigridHierarchy::new(&op, deg(3), SmootherKind::PgmresToeplitz).unwrap();
        let n = op.total_len();
        let mut x = vec![0.0; n];
        mg.vcycle(&vec![0.0; n], &mut x);
        assert!(x.iter().all(|&v| v == 0.0));

        let mut rng = rand_stream(11);
        let b: Vec<f64> = (0..n).map(|_| rng()).collect();
        let mut x = vec![0.0; n];
        mg.vcycle(&b, &mut x);
        let mut r = vec![0.0; n];
        op.apply_to_residual(&x, &b, &mut r);
        let reduction = norm(&b) / norm(&r);
        assert!(reduction > 2.0, "one V-cycle only reduced by {reduction}");
    }

    #[test]
    fn stationary_vcycle_iteration_counts_match_references() {
        // 2D, degree 3, n = 30, beta = 0.1: 12 iterations
        let op = assemble_isotropic(deg(3), 2, 30, 1.0, 0.1).unwrap();
        let (_, b) = manufactured_system(&op, deg(3), &[30, 30]).unwrap();
        let mut x = vec![0.0; b.len()];
        let rep = solve_mim(&op, deg(3), &b, &mut x, 1e-7, 400).unwrap();
        assert!(rep.converged);
        assert!(
            (rep.iterations as i64 - 12).abs() <= 2,
            "got {}",
            rep.iterations
        );

        // 2D, degree 1, n = 32: 21 iterations
        let op = assemble_isotropic(deg(1), 2, 32, 1.0, 0.1).unwrap();
        let (_, b) = manufactured_system(&op, deg(1), &[32, 32]).unwrap();
        let mut x = vec![0.0; b.len()];
        let rep = solve_mim(&op, deg(1), &b, &mut x, 1e-7, 400).unwrap();
        assert!(rep.converged);
        assert!(
            (rep.iterations as i64 - 21).abs() <= 2,
            "got {}",
            rep.iterations
        );
    }

    #[test]
    fn flexible_cg_wrapped_vcycle_counts_match_references() {
        // 2D, degree 3, n = 30, beta = 0.1: 5 iterations
        let op = assemble_isotropic(deg(3), 2, 30, 1.0, 0.1).unwrap();
        let (xstar, b) = manufactured_system(&op, deg(3), &[30, 30]).unwrap();
        let mut x = vec![0.0; b.len()];
        let rep = solve_pmim(&op, deg(3), &b, &mut x, 1e-7, 400).unwrap();
        assert!(rep.converged);
        assert!(
            (rep.iterations as i64 - 5).abs() <= 2,
            "got {}",
            rep.iterations
        );

        // the returned iterate approximates the exact discrete solution
        let scale = xstar.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        let err = x
            .iter()
            .zip(&xstar)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-5 * (1.0 + scale), "error {err}");

        // 2D, degree 2, n = 15, beta = 0.01: 16 iterations
        let op = assemble_isotropic(deg(2), 2, 15, 1.0, 0.01).unwrap();
        let (_, b) = manufactured_system(&op, deg(2), &[15, 15]).unwrap();
        let mut x = vec![0.0; b.len()];
        let rep = solve_pmim(&op, deg(2), &b, &mut x, 1e-7, 400).unwrap();
        assert!(rep.converged);
        assert!(
            (rep.iterations as i64 - 16).abs() <= 2,
            "got {}",
            rep.iterations
        );
    }

    #[test]
    fn block_diagonal_preconditioned_cg_counts_match_references() {
        // 2D, degree 3, n = 30, beta = 0.1: 24 iterations
        let op = assemble_isotropic(deg(3), 2, 30, 1.0, 0.1).unwrap();
        let d_op = op.block_diagonal_part();
        let (_, b) = manufactured_system(&op, deg(3), &[30, 30]).unwrap();
        let mut x = vec![0.0; b.len()];
        let rep = solve_pwl(&op, &d_op, deg(3), &b, &mut x, 1e-7, 400).unwrap();
        assert!(rep.converged);
        assert!(
            (rep.iterations as i64 - 24).abs() <= 2,
            "got {}",
            rep.iterations
        );
        // 2D, degree 3, n = 30, beta = 0.01: 68 iterations, 20% slack (the
        // auxiliary block-diagonal target makes this the loosest anchor)
        let op = assemble_isotropic(deg(3), 2, 30, 1.0, 0.01).unwrap();
        let d_op = op.block_diagonal_part();
        let (_, b) = manufactured_system(&op, deg(3), &[30, 30]).unwrap();
        let mut x = vec![0.0; b.len()];
        let rep = solve_pwl(&op, &d_op, deg(3), &b, &mut x, 1e-7, 400).unwrap();
        assert!(rep.converged);
        assert!(
            (rep.iterations as i64 - 68).abs() <= 14,
            "got {}",
            rep.iterations
        );
    }

    #[test]
    fn three_dimensional_counts_match_references() {
        // 3D, degree 2, n = 15, beta = 0.1: MIM 15, PMIM 6
        let op = assemble_isotropic(deg(2), 3, 15, 1.0, 0.1).unwrap();
        let (_, b) = manufactured_system(&op, deg(2), &[15, 15, 15]).unwrap();
        let mut x = vec![0.0; b.len()];
        let rep = solve_mim(&op, deg(2), &b, &mut x, 1e-7, 400).unwrap();
        assert!(rep.converged);
        assert!(
            (rep.iterations as i64 - 15).abs() <= 2,
            "mim got {}",
            rep.iterations
        );
        let mut x = vec![0.0; b.len()];
        let rep = solve_pmim(&op, deg(2), &b, &mut x, 1e-7, 400).unwrap();
        assert!(rep.converged);
        assert!(
            (rep.iterations as i64 - 6).abs() <= 2,
            "pmim got {}",
            rep.iterations
        );

        // same system under plain CG for contrast: 38 iterations
        let mut x = vec![0.0; b.len()];
        let rep = cg(&op, &b, &mut x, 1e-7, 2000);
        assert!(rep.converged);
        assert!(
            (rep.iterations as f64 - 38.0).abs() <= 38.0 * 0.15 + 1.0,
            "cg got {}",
            rep.iterations
        );
    }
}
