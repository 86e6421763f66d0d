//! Spectral symbols of the discretized operator family.
//!
//! Each 1D Galerkin factor is (up to boundary corrections) a Toeplitz matrix
//! whose generating function is a short trigonometric polynomial built from
//! cardinal B-spline values at integers. The full operator inherits a d x d
//! matrix-valued symbol; its eigenvalue functions predict the asymptotic
//! spectrum of the (scaled) system matrices and drive both the solver tuning
//! and the bound checks.

use crate::bspline::{cardinal_deriv, cardinal_eval, Degree};
use crate::eigen::symmetric_eigenvalues_3x3;
use crate::{Error, Result};

/// Scalar symbols of the 1D mass, advection and stiffness factors for a
/// fixed spline degree. All three are trigonometric polynomials of degree p
/// with coefficients that are cardinal B-spline (derivative) values at the
/// integers.
#[derive(Debug, Clone)]
pub struct ScalarSymbols {
    p: Degree,
    mass_c: Vec<f64>,
    adv_c: Vec<f64>,
    stiff_c: Vec<f64>,
}

impl ScalarSymbols {
    pub fn new(p: Degree) -> Self {
        let pv = p.get();
        let q = 2 * pv + 1;
        let center = pv as f64 + 1.0;
        let mass_c: Vec<f64> = (0..=pv).map(|k| cardinal_eval(q, center - k as f64)).collect();
        let adv_c: Vec<f64> = (0..=pv)
            .map(|k| cardinal_deriv(q, center - k as f64, 1).expect("order 1 < 2p+1"))
            .collect();
        let stiff_c: Vec<f64> = (0..=pv)
            .map(|k| cardinal_deriv(q, center - k as f64, 2).expect("order 2 < 2p+1"))
            .collect();
        Self {
            p,
            mass_c,
            adv_c,
            stiff_c,
        }
    }

    pub fn degree(&self) -> Degree {
        self.p
    }

    /// Mass symbol: even, positive, equals 1 at theta = 0 and attains its
    /// minimum at theta = pi.
    pub fn mass(&self, theta: f64) -> f64 {
        let mut s = self.mass_c[0];
        for (k, c) in self.mass_c.iter().enumerate().skip(1) {
            s += 2.0 * c * (k as f64 * theta).cos();
        }
        s
    }

    /// Advection symbol: odd, vanishes at 0 and pi. The skew factor's
    /// generating function is i times this real function.
    pub fn advection(&self, theta: f64) -> f64 {
        let mut s = 0.0;
        for (k, c) in self.adv_c.iter().enumerate().skip(1) {
            s -= 2.0 * c * (k as f64 * theta).sin();
        }
        s
    }

    /// Stiffness symbol: even, nonnegative, vanishes (to second order) only
    /// at theta = 0.
    pub fn stiffness(&self, theta: f64) -> f64 {
        let mut s = -self.stiff_c[0];
        for (k, c) in self.stiff_c.iter().enumerate().skip(1) {
            s -= 2.0 * c * (k as f64 * theta).cos();
        }
        s
    }
}

/// Parameters of the continuous problem and its tensor-product mesh:
/// dimension, spline degree, the two positive coefficients weighting the
/// div-part and curl-part, and per-direction mesh density ratios.
#[derive(Debug, Clone)]
pub struct ProblemParams {
    dim: usize,
    degree: Degree,
    alpha: f64,
    beta: f64,
    stretch: [f64; 3],
}

impl ProblemParams {
    pub fn new(dim: usize, degree: Degree, alpha: f64, beta: f64, stretch: &[f64]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::BadDimension(dim));
        }
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::NonPositiveCoefficients { alpha, beta });
        }
        if stretch.len() != dim {
            return Err(Error::SizeMismatch {
                expected: dim,
                got: stretch.len(),
            });
        }
        if stretch.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::BadAnisotropy);
        }
        let mut s = [1.0f64; 3];
        s[..dim].copy_from_slice(stretch);
        Ok(Self {
            dim,
            degree,
            alpha,
            beta,
            stretch: s,
        })
    }

    pub fn isotropic(dim: usize, degree: Degree, alpha: f64, beta: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::BadDimension(dim));
        }
        let ones = [1.0f64; 3];
        Self::new(dim, degree, alpha, beta, &ones[..dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> Degree {
        self.degree
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn stretch(&self) -> &[f64] {
        &self.stretch[..self.dim]
    }

    /// gamma_i = nu_i^2 / prod(nu): the geometric weight multiplying the
    /// direction-i stiffness contribution in the symbol.
    pub fn gamma(&self, i: usize) -> f64 {
        let prod: f64 = self.stretch[..self.dim].iter().product();
        self.stretch[i] * self.stretch[i] / prod
    }

    /// delta_i = 1 / nu_i: weight on the off-diagonal coupling that leaves
    /// direction i untouched (three dimensions only).
    pub fn delta(&self, i: usize) -> f64 {
        1.0 / self.stretch[i]
    }
}

/// Pointwise evaluator for the matrix-valued symbol and derived quantities.
#[derive(Debug, Clone)]
pub struct SymbolEngine {
    params: ProblemParams,
    scal: ScalarSymbols,
}

/// Jacobi fallback threshold for the closed-form 3 x 3 eigenvalue formula:
/// when the deviatoric part is this small relative to scale, the trig
/// formula loses accuracy near triple eigenvalues.
const TRIPLE_ROOT_GUARD: f64 = 1e-28;

/// Jacobi fallback threshold for nearly double eigenvalues: the error of
/// the trigonometric roots grows like eps * norm^2 / gap as a pair
/// coalesces, so pairs closer than this fraction of the matrix scale are
/// recomputed by Jacobi rotations to keep full precision.
const DOUBLE_ROOT_GUARD: f64 = 1e-2;

impl SymbolEngine {
    pub fn new(params: ProblemParams) -> Self {
        let scal = ScalarSymbols::new(params.degree());
        Self { params, scal }
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn scalars(&self) -> &ScalarSymbols {
        &self.scal
    }

    /// Scalar Laplacian-type symbol Delta(theta) =
    /// sum_i gamma_i s(theta_i) prod_{j != i} m(theta_j). The eigenvalue
    /// functions of the full symbol are pinched between min(alpha, beta) and
    /// max(alpha, beta) times this quantity.
    pub fn laplacian(&self, theta: &[f64]) -> f64 {
        debug_assert_eq!(theta.len(), self.params.dim);
        let d = self.params.dim;
        let m: Vec<f64> = theta.iter().map(|&t| self.scal.mass(t)).collect();
        let s: Vec<f64> = theta.iter().map(|&t| self.scal.stiffness(t)).collect();
        (0..d)
            .map(|i| {
                let prod_m: f64 = (0..d).filter(|&j| j != i).map(|j| m[j]).product();
                self.params.gamma(i) * s[i] * prod_m
            })
            .sum()
    }

    /// The d x d symbol matrix at a frequency point, stored in the top-left
    /// block of a fixed 3 x 3 array.
    pub fn matrix(&self, theta: &[f64]) -> [[f64; 3]; 3] {
        debug_assert_eq!(theta.len(), self.params.dim);
        let d = self.params.dim;
        let al = self.params.alpha;
        let be = self.params.beta;
        let m: Vec<f64> = theta.iter().map(|&t| self.scal.mass(t)).collect();
        let s: Vec<f64> = theta.iter().map(|&t| self.scal.stiffness(t)).collect();
        let a: Vec<f64> = theta.iter().map(|&t| self.scal.advection(t)).collect();
        let mut f = [[0.0f64; 3]; 3];
        // direction-i stiffness term with the mass symbols of the others
        let term = |i: usize| -> f64 {
            let prod_m: f64 = (0..d).filter(|&j| j != i).map(|j| m[j]).product();
            self.params.gamma(i) * s[i] * prod_m
        };
        for r in 0..d {
            f[r][r] = (0..d)
                .map(|i| if i == r { be * term(i) } else { al * term(i) })
                .sum();
        }
        if d == 2 {
            let c = -(al - be) * a[0] * a[1];
            f[0][1] = c;
            f[1][0] = c;
        } else {
            let c01 = -(al - be) * self.params.delta(2) * a[0] * a[1] * m[2];
            let c02 = -(al - be) * self.params.delta(1) * a[0] * m[1] * a[2];
            let c12 = -(al - be) * self.params.delta(0) * m[0] * a[1] * a[2];
            f[0][1] = c01;
            f[1][0] = c01;
            f[0][2] = c02;
            f[2][0] = c02;
            f[1][2] = c12;
            f[2][1] = c12;
        }
        f
    }

    /// Eigenvalues of the symbol at one frequency point, ascending.
    pub fn eigenvalues(&self, theta: &[f64]) -> Vec<f64> {
        let f = self.matrix(theta);
        if self.params.dim == 2 {
            let half_tr = 0.5 * (f[0][0] + f[1][1]);
            let half_gap = 0.5 * (f[0][0] - f[1][1]);
            let disc = (half_gap * half_gap + f[0][1] * f[0][1]).sqrt();
            vec![half_tr - disc, half_tr + disc]
        } else {
            let e = eigenvalues_3x3(&f);
            vec![e[0], e[1], e[2]]
        }
    }
}

/// Closed-form eigenvalues of a symmetric 3 x 3 matrix through the
/// trigonometric solution of the characteristic cubic, with a Jacobi
/// fallback near triple roots where the formula is ill-conditioned.
pub fn eigenvalues_3x3(f: &[[f64; 3]; 3]) -> [f64; 3] {
    let p1 = f[0][1] * f[0][1] + f[0][2] * f[0][2] + f[1][2] * f[1][2];
    let q = (f[0][0] + f[1][1] + f[2][2]) / 3.0;
    let d0 = f[0][0] - q;
    let d1 = f[1][1] - q;
    let d2 = f[2][2] - q;
    let p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1;
    let scale = f
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    if p2 <= TRIPLE_ROOT_GUARD * (1.0 + scale * scale) {
        return symmetric_eigenvalues_3x3(*f);
    }
    let p = (p2 / 6.0).sqrt();
    let inv = 1.0 / p;
    let b00 = d0 * inv;
    let b11 = d1 * inv;
    let b22 = d2 * inv;
    let b01 = f[0][1] * inv;
    let b02 = f[0][2] * inv;
    let b12 = f[1][2] * inv;
    let detb = b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02)
        + b02 * (b01 * b12 - b11 * b02);
    let r = (detb / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let mid = 3.0 * q - hi - lo;
    let gap = (mid - lo).min(hi - mid);
    if gap < DOUBLE_ROOT_GUARD * (1.0 + scale) {
        return symmetric_eigenvalues_3x3(*f);
    }
    [lo, mid, hi]
}

/// Symbol samples over the canonical frequency grid
/// theta_k = k pi / m, k = 1..m in each direction, with m = n + p - 2
/// matching the per-direction size of the discrete operator.
#[derive(Debug, Clone)]
pub struct SymbolSamples {
    pub dim: usize,
    /// points per direction
    pub m: usize,
    /// Delta at each grid point, flat order with the last direction fastest
    pub delta: Vec<f64>,
    /// dim eigenvalues per grid point (ascending within a point), same order
    pub eigs: Vec<f64>,
}

impl SymbolSamples {
    pub fn num_points(&self) -> usize {
        self.delta.len()
    }

    /// All eigenvalue samples sorted ascending: the rank-aligned prediction
    /// of the scaled matrix spectrum.
    pub fn sorted_eigs(&self) -> Vec<f64> {
        let mut v = self.eigs.clone();
        v.sort_by(|x, y| x.partial_cmp(y).expect("finite samples"));
        v
    }

    /// Grid-point order sorted by (Delta ascending, flat index) — the
    /// canonical presentation for spectral plots.
    pub fn delta_sorted_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.delta.len()).collect();
        idx.sort_by(|&a, &b| {
            self.delta[a]
                .partial_cmp(&self.delta[b])
                .expect("finite Delta")
                .then(a.cmp(&b))
        });
        idx
    }

    pub fn max_delta(&self) -> f64 {
        self.delta.iter().fold(0.0f64, |a, &b| a.max(b))
    }
}

pub fn sample_symbol(params: &ProblemParams, n: usize) -> Result<SymbolSamples> {
    let pv = params.degree().get();
    if n < pv + 1 {
        return Err(Error::MeshTooCoarse {
            p: pv,
            n,
            min: pv + 1,
        });
    }
    let engine = SymbolEngine::new(params.clone());
    let d = params.dim();
    let m = n + pv - 2;
    let thetas: Vec<f64> = (1..=m)
        .map(|k| k as f64 * std::f64::consts::PI / m as f64)
        .collect();
    let total = m.pow(d as u32);
    let mut delta = Vec::with_capacity(total);
    let mut eigs = Vec::with_capacity(total * d);
    let mut point = vec![0.0f64; d];
    let mut index = vec![0usize; d];
    for _ in 0..total {
        for (ax, &ix) in index.iter().enumerate() {
            point[ax] = thetas[ix];
        }
        delta.push(engine.laplacian(&point));
        eigs.extend(engine.eigenvalues(&point));
        // odometer increment, last direction fastest
        for ax in (0..d).rev() {
            index[ax] += 1;
            if index[ax] < m {
                break;
            }
            index[ax] = 0;
        }
    }
    Ok(SymbolSamples {
        dim: d,
        m,
        delta,
        eigs,
    })
}

/// Result of checking the pinching bounds
/// min(alpha, beta) Delta <= lambda_i <= max(alpha, beta) Delta
/// over the full sampling grid.
#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub points: usize,
    pub checked: usize,
    pub violations: usize,
    /// smallest slack across all checks; negative means a bound failed by
    /// more than the tolerance
    pub worst_slack: f64,
    pub max_delta: f64,
    pub tolerance: f64,
}

/// Verify the eigenvalue pinching bounds on the canonical grid with an
/// absolute tolerance of `rtol * (1 + max Delta)`.
pub fn verify_bounds(params: &ProblemParams, n: usize, rtol: f64) -> Result<BoundsReport> {
    let samples = sample_symbol(params, n)?;
    let lo_c = params.alpha().min(params.beta());
    let hi_c = params.alpha().max(params.beta());
    let max_delta = samples.max_delta();
    let tol = rtol * (1.0 + max_delta);
    let d = samples.dim;
    let mut violations = 0usize;
    let mut worst = f64::INFINITY;
    for (pt, &dl) in samples.delta.iter().enumerate() {
        for i in 0..d {
            let lam = samples.eigs[pt * d + i];
            let slack_low = lam - lo_c * dl + tol;
            let slack_high = hi_c * dl - lam + tol;
            let slack = slack_low.min(slack_high);
            worst = worst.min(slack);
            if slack < 0.0 {
                violations += 1;
            }
        }
    }
    Ok(BoundsReport {
        points: samples.num_points(),
        checked: samples.num_points() * d,
        violations,
        worst_slack: worst,
        max_delta,
        tolerance: tol,
    })
}
