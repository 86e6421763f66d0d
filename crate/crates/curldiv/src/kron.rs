//! Block operators with Kronecker-product structure.
//!
//! The d-dimensional system matrix is a d x d block matrix; every block is a
//! short sum of terms, each term a scalar coefficient times a Kronecker
//! product of d banded 1D factors. The operator is stored exactly in that
//! factored form: matrix-vector products run axis by axis, single rows are
//! reconstructed on demand for relaxation sweeps, and a dense export exists
//! for small sizes only.

use crate::banded::{BandSymmetry, BandedMatrix1D};
use crate::bspline::Degree;
use crate::dense::{DenseMatrix, DENSE_GUARD};
use crate::galerkin::{advection_matrix, mass_matrix, stiffness_matrix};
use crate::{Error, Result};

/// Maximum supported half-bandwidth of a 1D factor (degree cap + 1 covers
/// every factor this crate builds, including coarsened ones).
const MAX_FACTOR_BAND: usize = 16;
const MAX_WEIGHTS: usize = 2 * MAX_FACTOR_BAND + 1;

/// One 1D factor inside a Kronecker term: an index into the operator's
/// factor registry plus a transpose flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermFactor {
    pub matrix: usize,
    pub transpose: bool,
}

impl TermFactor {
    pub fn plain(matrix: usize) -> Self {
        Self {
            matrix,
            transpose: false,
        }
    }

    pub fn transposed(matrix: usize) -> Self {
        Self {
            matrix,
            transpose: true,
        }
    }
}

/// coeff * (F_1 (x) F_2 (x) ... (x) F_d)
#[derive(Debug, Clone)]
pub struct KronTerm {
    pub coeff: f64,
    pub factors: Vec<TermFactor>,
}

/// One block of the block operator: a sum of Kronecker terms (possibly
/// empty, meaning a zero block).
#[derive(Debug, Clone, Default)]
pub struct KronBlock {
    pub terms: Vec<KronTerm>,
}

/// Block operator in factored Kronecker form. `components` is the number of
/// vector components (equal to the spatial dimension here), `sizes` the
/// per-direction 1D sizes, so vectors have length components * prod(sizes).
#[derive(Debug, Clone)]
pub struct KroneckerBlockOperator {
    components: usize,
    sizes: Vec<usize>,
    registry: Vec<BandedMatrix1D>,
    blocks: Vec<KronBlock>,
    scale: f64,
}

impl KroneckerBlockOperator {
    pub fn new(
        components: usize,
        sizes: Vec<usize>,
        registry: Vec<BandedMatrix1D>,
        blocks: Vec<KronBlock>,
    ) -> Result<Self> {
        let d = sizes.len();
        if blocks.len() != components * components {
            return Err(Error::SizeMismatch {
                expected: components * components,
                got: blocks.len(),
            });
        }
        for block in &blocks {
            for term in &block.terms {
                if term.factors.len() != d {
                    return Err(Error::SizeMismatch {
                        expected: d,
                        got: term.factors.len(),
                    });
                }
                for (ax, f) in term.factors.iter().enumerate() {
                    let mat = registry.get(f.matrix).ok_or(Error::SizeMismatch {
                        expected: registry.len(),
                        got: f.matrix,
                    })?;
                    if mat.size() != sizes[ax] {
                        return Err(Error::SizeMismatch {
                            expected: sizes[ax],
                            got: mat.size(),
                        });
                    }
                    if mat.half_bandwidth() > MAX_FACTOR_BAND {
                        return Err(Error::BandTooWide {
                            m: mat.size(),
                            w: mat.half_bandwidth(),
                        });
                    }
                }
            }
        }
        Ok(Self {
            components,
            sizes,
            registry,
            blocks,
            scale: 1.0,
        })
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Multiply the whole operator by a scalar (kept as metadata).
    pub fn scaled(mut self, s: f64) -> Self {
        self.scale *= s;
        self
    }

    pub fn component_len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn total_len(&self) -> usize {
        self.components * self.component_len()
    }

    pub fn block(&self, r: usize, c: usize) -> &KronBlock {
        &self.blocks[r * self.components + c]
    }

    pub fn factor(&self, idx: usize) -> &BandedMatrix1D {
        &self.registry[idx]
    }

    pub fn num_factors(&self) -> usize {
        self.registry.len()
    }

    /// Same block structure over a transformed factor registry (used for
    /// Galerkin coarsening, where every 1D factor is projected separately).
    pub fn map_registry(
        &self,
        mut f: impl FnMut(&BandedMatrix1D) -> Result<BandedMatrix1D>,
    ) -> Result<Self> {
        let registry: Vec<BandedMatrix1D> = self
            .registry
            .iter()
            .map(|m| f(m))
            .collect::<Result<_>>()?;
        let sizes: Vec<usize> = if registry.is_empty() {
            self.sizes.clone()
        } else {
            // recover per-axis sizes from any term of any nonempty block
            let mut sizes = self.sizes.clone();
            'outer: for block in &self.blocks {
                for term in &block.terms {
                    for (ax, fac) in term.factors.iter().enumerate() {
                        sizes[ax] = registry[fac.matrix].size();
                    }
                    break 'outer;
                }
            }
            sizes
        };
        let mut out = Self::new(
            self.components,
            sizes,
            registry,
            self.blocks.clone(),
        )?;
        out.scale = self.scale;
        Ok(out)
    }

    /// Copy with all off-diagonal blocks dropped.
    pub fn block_diagonal_part(&self) -> Self {
        let mut blocks = vec![KronBlock::default(); self.components * self.components];
        for r in 0..self.components {
            blocks[r * self.components + r] = self.block(r, r).clone();
        }
        Self {
            components: self.components,
            sizes: self.sizes.clone(),
            registry: self.registry.clone(),
            blocks,
            scale: self.scale,
        }
    }

    /// r = b - (operator) x.
    pub fn apply_to_residual(&self, x: &[f64], b: &[f64], r: &mut [f64]) {
        self.apply(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
    }

    /// y = (operator) x.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let clen = self.component_len();
        assert_eq!(x.len(), self.total_len(), "input length");
        assert_eq!(y.len(), self.total_len(), "output length");
        y.fill(0.0);
        let mut buf_a = vec![0.0f64; clen];
        let mut buf_b = vec![0.0f64; clen];
        for r in 0..self.components {
            for c in 0..self.components {
                for term in &self.block(r, c).terms {
                    let xc = &x[c * clen..(c + 1) * clen];
                    buf_a.copy_from_slice(xc);
                    for (ax, fac) in term.factors.iter().enumerate() {
                        apply_axis(
                            &self.registry[fac.matrix],
                            fac.transpose,
                            &self.sizes,
                            ax,
                            &buf_a,
                            &mut buf_b,
                        );
                        std::mem::swap(&mut buf_a, &mut buf_b);
                    }
                    let w = self.scale * term.coeff;
                    let yr = &mut y[r * clen..(r + 1) * clen];
                    for (yi, bi) in yr.iter_mut().zip(&buf_a) {
                        *yi += w * bi;
                    }
                }
            }
        }
    }

    /// Multi-index (component, i_1, ..., i_d) of a flat row index; the last
    /// direction varies fastest within a component.
    fn unflatten(&self, g: usize, idx: &mut [usize]) -> usize {
        let clen = self.component_len();
        let comp = g / clen;
        let mut rest = g % clen;
        for ax in (0..self.sizes.len()).rev() {
            idx[ax] = rest % self.sizes[ax];
            rest /= self.sizes[ax];
        }
        comp
    }

    /// Dot product of one operator row with a full-length vector.
    pub fn row_dot(&self, g: usize, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.total_len());
        let clen = self.component_len();
        let d = self.sizes.len();
        let mut idx = [0usize; 3];
        let r = self.unflatten(g, &mut idx[..d]);
        let mut acc = 0.0;
        for c in 0..self.components {
            let xc = &x[c * clen..(c + 1) * clen];
            for term in &self.block(r, c).terms {
                acc += term.coeff * term_row_dot(&self.registry, term, &self.sizes, &idx[..d], xc);
            }
        }
        self.scale * acc
    }

    /// The full diagonal of the operator.
    pub fn diagonal(&self) -> Vec<f64> {
        let d = self.sizes.len();
        let mut diag = vec![0.0f64; self.total_len()];
        let mut idx = [0usize; 3];
        for (g, slot) in diag.iter_mut().enumerate() {
            let r = self.unflatten(g, &mut idx[..d]);
            let mut acc = 0.0;
            for term in &self.block(r, r).terms {
                let mut prod = term.coeff;
                for (ax, fac) in term.factors.iter().enumerate() {
                    let m = &self.registry[fac.matrix];
                    let v = m.get(idx[ax], idx[ax]);
                    // the diagonal is transpose-invariant
                    prod *= v;
                }
                acc += prod;
            }
            *slot = self.scale * acc;
        }
        diag
    }

    /// Dense export, guarded against accidental huge allocations.
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        let nlen = self.total_len();
        if nlen > DENSE_GUARD {
            return Err(Error::DenseTooLarge {
                size: nlen,
                guard: DENSE_GUARD,
            });
        }
        let clen = self.component_len();
        let d = self.sizes.len();
        let mut out = DenseMatrix::zeros(nlen, nlen)?;
        let mut wbuf = [[0.0f64; MAX_WEIGHTS]; 3];
        let mut wlo = [0usize; 3];
        let mut whi = [0usize; 3];
        let mut idx = [0usize; 3];
        for r in 0..self.components {
            for c in 0..self.components {
                for term in &self.block(r, c).terms {
                    for gi in 0..clen {
                        let comp_check = self.unflatten(gi, &mut idx[..d]);
                        debug_assert_eq!(comp_check, 0);
                        for ax in 0..d {
                            let fac = term.factors[ax];
                            let (lo, hi) = axis_weights(
                                &self.registry[fac.matrix],
                                fac.transpose,
                                idx[ax],
                                &mut wbuf[ax],
                            );
                            wlo[ax] = lo;
                            whi[ax] = hi;
                        }
                        let row = r * clen + gi;
                        let w = self.scale * term.coeff;
                        // enumerate the Kronecker column set of this row
                        if d == 2 {
                            for j1 in wlo[0]..=whi[0] {
                                let w1 = w * wbuf[0][j1 - wlo[0]];
                                let base = j1 * self.sizes[1];
                                for j2 in wlo[1]..=whi[1] {
                                    out.add(
                                        row,
                                        c * clen + base + j2,
                                        w1 * wbuf[1][j2 - wlo[1]],
                                    );
                                }
                            }
                        } else {
                            for j1 in wlo[0]..=whi[0] {
                                let w1 = w * wbuf[0][j1 - wlo[0]];
                                for j2 in wlo[1]..=whi[1] {
                                    let w2 = w1 * wbuf[1][j2 - wlo[1]];
                                    let base = (j1 * self.sizes[1] + j2) * self.sizes[2];
                                    for j3 in wlo[2]..=whi[2] {
                                        out.add(
                                            row,
                                            c * clen + base + j3,
                                            w2 * wbuf[2][j3 - wlo[2]],
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Band weights of one row of a (possibly transposed) factor. Returns the
/// column window; `buf[k]` holds the entry for column `lo + k`.
#[inline]
fn axis_weights(
    mat: &BandedMatrix1D,
    transpose: bool,
    i: usize,
    buf: &mut [f64; MAX_WEIGHTS],
) -> (usize, usize) {
    let (lo, hi) = mat.row_window(i);
    match (transpose, mat.symmetry()) {
        (false, _) | (true, BandSymmetry::Symmetric) => {
            let row = mat.band_row(i);
            let w = mat.half_bandwidth();
            for (k, j) in (lo..=hi).enumerate() {
                buf[k] = row[j + w - i];
            }
        }
        (true, BandSymmetry::Skew) => {
            let row = mat.band_row(i);
            let w = mat.half_bandwidth();
            for (k, j) in (lo..=hi).enumerate() {
                buf[k] = -row[j + w - i];
            }
        }
        (true, BandSymmetry::General) => {
            for (k, j) in (lo..=hi).enumerate() {
                buf[k] = mat.get(j, i);
            }
        }
    }
    (lo, hi)
}

/// Apply one 1D factor along `axis` of the tensor `src` (row-major, last
/// axis fastest), writing into `dst`.
fn apply_axis(
    mat: &BandedMatrix1D,
    transpose: bool,
    sizes: &[usize],
    axis: usize,
    src: &[f64],
    dst: &mut [f64],
) {
    let m = sizes[axis];
    debug_assert_eq!(mat.size(), m);
    let inner: usize = sizes[axis + 1..].iter().product();
    let outer: usize = sizes[..axis].iter().product();
    let mut wbuf = [0.0f64; MAX_WEIGHTS];
    for o in 0..outer {
        let plane = o * m * inner;
        for i in 0..m {
            let (lo, hi) = axis_weights(mat, transpose, i, &mut wbuf);
            let out_base = plane + i * inner;
            for t in 0..inner {
                let mut s = 0.0;
                for (k, j) in (lo..=hi).enumerate() {
                    s += wbuf[k] * src[plane + j * inner + t];
                }
                dst[out_base + t] = s;
            }
        }
    }
}

/// Row-times-vector contraction for a single Kronecker term, exploiting the
/// factored structure: innermost axis first, O(prod of window widths).
fn term_row_dot(
    registry: &[BandedMatrix1D],
    term: &KronTerm,
    sizes: &[usize],
    idx: &[usize],
    x: &[f64],
) -> f64 {
    let d = sizes.len();
    let mut wbuf = [[0.0f64; MAX_WEIGHTS]; 3];
    let mut wlo = [0usize; 3];
    let mut whi = [0usize; 3];
    for ax in 0..d {
        let fac = term.factors[ax];
        let (lo, hi) = axis_weights(&registry[fac.matrix], fac.transpose, idx[ax], &mut wbuf[ax]);
        wlo[ax] = lo;
        whi[ax] = hi;
    }
    if d == 2 {
        let m2 = sizes[1];
        let mut acc = 0.0;
        for j1 in wlo[0]..=whi[0] {
            let base = j1 * m2;
            let mut inner = 0.0;
            for j2 in wlo[1]..=whi[1] {
                inner += wbuf[1][j2 - wlo[1]] * x[base + j2];
            }
            acc += wbuf[0][j1 - wlo[0]] * inner;
        }
        acc
    } else {
        let m2 = sizes[1];
        let m3 = sizes[2];
        let mut acc = 0.0;
        for j1 in wlo[0]..=whi[0] {
            let mut mid = 0.0;
            for j2 in wlo[1]..=whi[1] {
                let base = (j1 * m2 + j2) * m3;
                let mut inner = 0.0;
                for j3 in wlo[2]..=whi[2] {
                    inner += wbuf[2][j3 - wlo[2]] * x[base + j3];
                }
                mid += wbuf[1][j2 - wlo[1]] * inner;
            }
            acc += wbuf[0][j1 - wlo[0]] * mid;
        }
        acc
    }
}

/// Assemble the full curl-div block operator for spline degree `p`, mesh
/// intervals `ns` per direction, and positive weights `alpha` (div part)
/// and `beta` (curl part).
pub fn assemble_operator(
    p: Degree,
    ns: &[usize],
    alpha: f64,
    beta: f64,
) -> Result<KroneckerBlockOperator> {
    let d = ns.len();
    if d != 2 && d != 3 {
        return Err(Error::BadDimension(d));
    }
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::NonPositiveCoefficients { alpha, beta });
    }
    // registry layout: direction i holds M at 3i, A at 3i+1, S at 3i+2
    let mut registry = Vec::with_capacity(3 * d);
    let mut sizes = Vec::with_capacity(d);
    for &n in ns {
        registry.push(mass_matrix(p, n)?);
        registry.push(advection_matrix(p, n)?);
        registry.push(stiffness_matrix(p, n)?);
        sizes.push(n + p.get() - 2);
    }
    let mm = |i: usize| TermFactor::plain(3 * i);
    let aa = |i: usize| TermFactor::plain(3 * i + 1);
    let at = |i: usize| TermFactor::transposed(3 * i + 1);
    let ss = |i: usize| TermFactor::plain(3 * i + 2);
    let term = |coeff: f64, factors: Vec<TermFactor>| KronTerm { coeff, factors };

    let blocks: Vec<KronBlock> = if d == 2 {
        vec![
            // (0,0)
            KronBlock {
                terms: vec![
                    term(alpha, vec![mm(0), ss(1)]),
                    term(beta, vec![ss(0), mm(1)]),
                ],
            },
            // (0,1)
            KronBlock {
                terms: vec![
                    term(-alpha, vec![at(0), aa(1)]),
                    term(beta, vec![aa(0), at(1)]),
                ],
            },
            // (1,0)
            KronBlock {
                terms: vec![
                    term(-alpha, vec![aa(0), at(1)]),
                    term(beta, vec![at(0), aa(1)]),
                ],
            },
            // (1,1)
            KronBlock {
                terms: vec![
                    term(alpha, vec![ss(0), mm(1)]),
                    term(beta, vec![mm(0), ss(1)]),
                ],
            },
        ]
    } else {
        vec![
            // (0,0)
            KronBlock {
                terms: vec![
                    term(alpha, vec![mm(0), mm(1), ss(2)]),
                    term(alpha, vec![mm(0), ss(1), mm(2)]),
                    term(beta, vec![ss(0), mm(1), mm(2)]),
                ],
            },
            // (0,1)
            KronBlock {
                terms: vec![
                    term(-alpha, vec![at(0), aa(1), mm(2)]),
                    term(beta, vec![aa(0), at(1), mm(2)]),
                ],
            },
            // (0,2)
            KronBlock {
                terms: vec![
                    term(-alpha, vec![at(0), mm(1), aa(2)]),
                    term(beta, vec![aa(0), mm(1), at(2)]),
                ],
            },
            // (1,0)
            KronBlock {
                terms: vec![
                    term(-alpha, vec![aa(0), at(1), mm(2)]),
                    term(beta, vec![at(0), aa(1), mm(2)]),
                ],
            },
            // (1,1)
            KronBlock {
                terms: vec![
                    term(alpha, vec![ss(0), mm(1), mm(2)]),
                    term(alpha, vec![mm(0), mm(1), ss(2)]),
                    term(beta, vec![mm(0), ss(1), mm(2)]),
                ],
            },
            // (1,2)
            KronBlock {
                terms: vec![
                    term(-alpha, vec![mm(0), at(1), aa(2)]),
                    term(beta, vec![mm(0), aa(1), at(2)]),
                ],
            },
            // (2,0)
            KronBlock {
                terms: vec![
                    term(-alpha, vec![aa(0), mm(1), at(2)]),
                    term(beta, vec![at(0), mm(1), aa(2)]),
                ],
            },
            // (2,1)
            KronBlock {
                terms: vec![
                    term(-alpha, vec![mm(0), aa(1), at(2)]),
                    term(beta, vec![mm(0), at(1), aa(2)]),
                ],
            },
            // (2,2)
            KronBlock {
                terms: vec![
                    term(alpha, vec![ss(0), mm(1), mm(2)]),
                    term(alpha, vec![mm(0), ss(1), mm(2)]),
                    term(beta, vec![mm(0), mm(1), ss(2)]),
                ],
            },
        ]
    };
    KroneckerBlockOperator::new(d, sizes, registry, blocks)
}

/// Isotropic convenience wrapper: the same interval count in every
/// direction.
pub fn assemble_isotropic(
    p: Degree,
    dim: usize,
    n: usize,
    alpha: f64,
    beta: f64,
) -> Result<KroneckerBlockOperator> {
    if dim != 2 && dim != 3 {
        return Err(Error::BadDimension(dim));
    }
    assemble_operator(p, &vec![n; dim], alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(p: usize) -> Degree {
        Degree::new(p).unwrap()
    }

    fn dense_of(mat: &BandedMatrix1D) -> DenseMatrix {
        DenseMatrix::from_rows(mat.to_dense_rows()).unwrap()
    }

    // naive dense Kronecker product, test-side oracle
    fn kron_dense(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols()).unwrap();
        for i1 in 0..a.rows() {
            for j1 in 0..a.cols() {
                let v = a.get(i1, j1);
                if v == 0.0 {
                    continue;
                }
                for i2 in 0..b.rows() {
                    for j2 in 0..b.cols() {
                        out.set(i1 * b.rows() + i2, j1 * b.cols() + j2, v * b.get(i2, j2));
                    }
                }
            }
        }
        out
    }

    fn test_factor(m: usize, w: usize, seed: u64, symmetry: BandSymmetry) -> BandedMatrix1D {
        let mut mat = BandedMatrix1D::new(m, w, BandSymmetry::General).unwrap();
        let mut state = seed;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for i in 0..m {
            let (lo, hi) = mat.row_window(i);
            for j in lo..=hi {
                mat.set(i, j, next());
            }
        }
        match symmetry {
            BandSymmetry::Symmetric => {
                mat.symmetrize();
                mat.set_symmetry(BandSymmetry::Symmetric);
            }
            BandSymmetry::Skew => {
                mat.skew_symmetrize();
                mat.set_symmetry(BandSymmetry::Skew);
            }
            BandSymmetry::General => {}
        }
        mat
    }

    /// 2-component 2D operator with arbitrary banded factors, including a
    /// transposed general factor, against the dense Kronecker oracle.
    #[test]
    fn dense_export_matches_kron_oracle() {
        let f0 = test_factor(5, 2, 11, BandSymmetry::General);
        let f1 = test_factor(4, 1, 22, BandSymmetry::Symmetric);
        let f2 = test_factor(5, 1, 33, BandSymmetry::Skew);
        let f3 = test_factor(4, 2, 44, BandSymmetry::General);
        let blocks = vec![
            KronBlock {
                terms: vec![KronTerm {
                    coeff: 1.5,
                    factors: vec![TermFactor::plain(0), TermFactor::plain(1)],
                }],
            },
            KronBlock {
                terms: vec![KronTerm {
                    coeff: -0.5,
                    factors: vec![TermFactor::transposed(2), TermFactor::transposed(3)],
                }],
            },
            KronBlock::default(),
            KronBlock {
                terms: vec![
                    KronTerm {
                        coeff: 2.0,
                        factors: vec![TermFactor::transposed(0), TermFactor::plain(3)],
                    },
                    KronTerm {
                        coeff: 0.25,
                        factors: vec![TermFactor::plain(2), TermFactor::plain(1)],
                    },
                ],
            },
        ];
        let op = KroneckerBlockOperator::new(
            2,
            vec![5, 4],
            vec![f0.clone(), f1.clone(), f2.clone(), f3.clone()],
            blocks,
        )
        .unwrap();
        let dense = op.to_dense().unwrap();

        let d0 = dense_of(&f0);
        let d1 = dense_of(&f1);
        let d2 = dense_of(&f2);
        let d3 = dense_of(&f3);
        let clen = 20;
        let k00 = kron_dense(&d0, &d1);
        let k01 = kron_dense(&d2.transpose(), &d3.transpose());
        let k11a = kron_dense(&d0.transpose(), &d3);
        let k11b = kron_dense(&d2, &d1);
        for i in 0..clen {
            for j in 0..clen {
                let want00 = 1.5 * k00.get(i, j);
                let want01 = -0.5 * k01.get(i, j);
                let want11 = 2.0 * k11a.get(i, j) + 0.25 * k11b.get(i, j);
                assert!((dense.get(i, j) - want00).abs() < 1e-13);
                assert!((dense.get(i, clen + j) - want01).abs() < 1e-13);
                assert!((dense.get(clen + i, j)).abs() < 1e-15);
                assert!((dense.get(clen + i, clen + j) - want11).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn apply_and_row_dot_match_dense() {
        for (d, p, n) in [(2usize, 2usize, 6usize), (3, 1, 4), (3, 2, 5)] {
            let op = assemble_isotropic(deg(p), d, n, 1.0, 0.01)
                .unwrap()
                .scaled(1.7);
            let dense = op.to_dense().unwrap();
            let nlen = op.total_len();
            let x: Vec<f64> = (0..nlen).map(|i| ((i * 7 % 13) as f64 - 6.0) * 0.21).collect();
            let mut y = vec![0.0; nlen];
            op.apply(&x, &mut y);
            let mut yd = vec![0.0; nlen];
            dense.apply(&x, &mut yd);
            let scale: f64 = yd.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
            for (a, b) in y.iter().zip(&yd) {
                assert!((a - b).abs() < 1e-12 * scale, "d={d} p={p}");
            }
            for g in (0..nlen).step_by(nlen / 17 + 1) {
                let rd = op.row_dot(g, &x);
                assert!((rd - yd[g]).abs() < 1e-12 * scale, "row {g}");
            }
        }
    }

    #[test]
    fn diagonal_matches_dense() {
        let op = assemble_isotropic(deg(2), 2, 7, 1.3, 0.4).unwrap().scaled(0.9);
        let dense = op.to_dense().unwrap();
        let diag = op.diagonal();
        for (i, v) in diag.iter().enumerate() {
            assert!((v - dense.get(i, i)).abs() < 1e-13);
        }
    }

    #[test]
    fn operator_is_exactly_symmetric() {
        for (d, p, n) in [(2usize, 3usize, 8usize), (3, 2, 5)] {
            let op = assemble_isotropic(deg(p), d, n, 1.0, 0.1).unwrap();
            let dense = op.to_dense().unwrap();
            assert_eq!(dense.symmetry_defect(), 0.0, "d={d} p={p} n={n}");
        }
    }

    #[test]
    fn block_diagonal_part_keeps_diag_blocks_only() {
        let op = assemble_isotropic(deg(2), 2, 6, 1.0, 0.5).unwrap();
        let bd = op.block_diagonal_part();
        let full = op.to_dense().unwrap();
        let part = bd.to_dense().unwrap();
        let clen = op.component_len();
        for i in 0..clen {
            for j in 0..clen {
                assert_eq!(part.get(i, j), full.get(i, j));
                assert_eq!(part.get(clen + i, clen + j), full.get(clen + i, clen + j));
                assert_eq!(part.get(i, clen + j), 0.0);
                assert_eq!(part.get(clen + i, j), 0.0);
            }
        }
    }

    /// Exchanging the two weights is a similarity transform by the rotation
    /// J = [[0, I], [-I, 0]] in two dimensions, exactly at matrix level.
    #[test]
    fn coefficient_swap_similarity_2d() {
        let a_op = assemble_isotropic(deg(2), 2, 7, 1.0, 0.3).unwrap();
        let b_op = assemble_isotropic(deg(2), 2, 7, 0.3, 1.0).unwrap();
        let a = a_op.to_dense().unwrap();
        let b = b_op.to_dense().unwrap();
        let clen = a_op.component_len();
        let n = 2 * clen;
        let mut j = DenseMatrix::zeros(n, n).unwrap();
        for i in 0..clen {
            j.set(i, clen + i, 1.0);
            j.set(clen + i, i, -1.0);
        }
        let jt = j.transpose();
        let rotated = j.matmul(&a).unwrap().matmul(&jt).unwrap();
        for r in 0..n {
            for c in 0..n {
                assert_eq!(rotated.get(r, c), b.get(r, c), "({r},{c})");
            }
        }
    }

    #[test]
    fn map_registry_scales_operator() {
        let op = assemble_isotropic(deg(1), 2, 5, 1.0, 1.0).unwrap();
        let doubled = op
            .map_registry(|m| {
                let mut c = m.clone();
                c.scale(2.0);
                Ok(c)
            })
            .unwrap();
        let x: Vec<f64> = (0..op.total_len()).map(|i| (i as f64).cos()).collect();
        let mut y1 = vec![0.0; x.len()];
        let mut y2 = vec![0.0; x.len()];
        op.apply(&x, &mut y1);
        doubled.apply(&x, &mut y2);
        // each 2D term has two factors, so doubling both quadruples
        for (a, b) in y1.iter().zip(&y2) {
            assert!((4.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_guard_trips() {
        let op = assemble_isotropic(deg(1), 3, 40, 1.0, 1.0).unwrap();
        assert!(matches!(
            op.to_dense(),
            Err(Error::DenseTooLarge { .. })
        ));
    }

    #[test]
    fn assembly_validation() {
        assert!(matches!(
            assemble_operator(deg(2), &[8], 1.0, 1.0),
            Err(Error::BadDimension(1))
        ));
        assert!(matches!(
            assemble_isotropic(deg(2), 2, 8, -1.0, 1.0),
            Err(Error::NonPositiveCoefficients { .. })
        ));
        assert!(matches!(
            assemble_isotropic(deg(5), 2, 4, 1.0, 1.0),
            Err(Error::MeshTooCoarse { .. })
        ));
    }
}
