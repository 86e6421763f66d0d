//! Square banded matrices with a fixed symmetric band layout, and an in-band
//! LU factorization (no pivoting) for the SPD and collocation systems used
//! throughout the crate.

use crate::{Error, Result};

/// Structural tag carried by a 1D factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandSymmetry {
    Symmetric,
    Skew,
    General,
}

/// Square banded matrix of size m with half-bandwidth w. Row i stores the
/// band positions i-w ..= i+w contiguously; positions outside the matrix
/// hold structural zeros.
#[derive(Debug, Clone)]
pub struct BandedMatrix1D {
    m: usize,
    w: usize,
    symmetry: BandSymmetry,
    data: Vec<f64>,
}

impl BandedMatrix1D {
    pub fn new(m: usize, w: usize, symmetry: BandSymmetry) -> Result<Self> {
        if m == 0 || w >= m {
            return Err(Error::BandTooWide { m, w });
        }
        Ok(BandedMatrix1D {
            m,
            w,
            symmetry,
            data: vec![0.0; m * (2 * w + 1)],
        })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn half_bandwidth(&self) -> usize {
        self.w
    }

    #[inline]
    pub fn symmetry(&self) -> BandSymmetry {
        self.symmetry
    }

    pub fn set_symmetry(&mut self, s: BandSymmetry) {
        self.symmetry = s;
    }

    /// Column range of row i that lies inside the matrix.
    #[inline]
    pub fn row_window(&self, i: usize) -> (usize, usize) {
        (i.saturating_sub(self.w), (i + self.w).min(self.m - 1))
    }

    /// Full band row of row i, offset w aligned with the diagonal; positions
    /// mapping outside the matrix are zero.
    #[inline]
    pub fn band_row(&self, i: usize) -> &[f64] {
        let k = 2 * self.w + 1;
        &self.data[i * k..(i + 1) * k]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.m && j < self.m);
        if i.abs_diff(j) > self.w {
            return 0.0;
        }
        self.data[i * (2 * self.w + 1) + (j + self.w - i)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i.abs_diff(j) <= self.w, "({i},{j}) outside band w={}", self.w);
        self.data[i * (2 * self.w + 1) + (j + self.w - i)] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i.abs_diff(j) <= self.w);
        self.data[i * (2 * self.w + 1) + (j + self.w - i)] += v;
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    /// y = A x.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.m);
        debug_assert_eq!(y.len(), self.m);
        for i in 0..self.m {
            let (lo, hi) = self.row_window(i);
            let row = self.band_row(i);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += row[j + self.w - i] * x[j];
            }
            y[i] = acc;
        }
    }

    /// y = A^T x, reading the stored rows as columns.
    pub fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.m);
        debug_assert_eq!(y.len(), self.m);
        y.fill(0.0);
        for i in 0..self.m {
            let (lo, hi) = self.row_window(i);
            let row = self.band_row(i);
            let xi = x[i];
            for j in lo..=hi {
                y[j] += row[j + self.w - i] * xi;
            }
        }
    }

    /// Largest |a_ij + a_ji| over the band; zero for an exactly skew matrix.
    pub fn skewness_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.m {
            let (lo, hi) = self.row_window(i);
            for j in lo..=hi {
                worst = worst.max((self.get(i, j) + self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Largest |a_ij - a_ji| over the band.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.m {
            let (lo, hi) = self.row_window(i);
            for j in lo..=hi {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Replace A by (A + A^T)/2 within the band.
    pub fn symmetrize(&mut self) {
        for i in 0..self.m {
            let (lo, hi) = self.row_window(i);
            for j in lo..=hi {
                if j > i {
                    let v = 0.5 * (self.get(i, j) + self.get(j, i));
                    self.set(i, j, v);
                    self.set(j, i, v);
                }
            }
        }
    }

    /// Replace A by (A - A^T)/2 within the band; the diagonal becomes zero.
    pub fn skew_symmetrize(&mut self) {
        for i in 0..self.m {
            self.set(i, i, 0.0);
            let (_, hi) = self.row_window(i);
            for j in (i + 1)..=hi {
                let v = 0.5 * (self.get(i, j) - self.get(j, i));
                self.set(i, j, v);
                self.set(j, i, -v);
            }
        }
    }

    pub fn to_dense_rows(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.m]; self.m];
        for i in 0..self.m {
            let (lo, hi) = self.row_window(i);
            for j in lo..=hi {
                out[i][j] = self.get(i, j);
            }
        }
        out
    }
}

const PIVOT_FLOOR: f64 = 1e-250;

/// In-band LU factorization of a banded matrix, without pivoting. Fill stays
/// inside the band, so L (unit lower, multipliers stored) and U share the
/// original layout. Intended for the SPD mass/Toeplitz factors and the
/// diagonally dominant collocation matrices; a vanishing pivot is reported
/// as an error rather than repaired.
#[derive(Debug, Clone)]
pub struct BandedLu {
    m: usize,
    w: usize,
    data: Vec<f64>,
}

impl BandedLu {
    pub fn factor(a: &BandedMatrix1D) -> Result<Self> {
        let m = a.m;
        let w = a.w;
        let k = 2 * w + 1;
        let mut data = a.data.clone();
        for step in 0..m {
            let piv = data[step * k + w];
            if piv.abs() < PIVOT_FLOOR {
                return Err(Error::SingularBand(step));
            }
            let hi = (step + w).min(m - 1);
            for i in (step + 1)..=hi {
                // a(i, step)
                let idx = i * k + (step + w - i);
                let mult = data[idx] / piv;
                data[idx] = mult;
                if mult != 0.0 {
                    for j in (step + 1)..=hi {
                        // a(i, j) -= mult * a(step, j)
                        data[i * k + (j + w - i)] -= mult * data[step * k + (j + w - step)];
                    }
                }
            }
        }
        Ok(BandedLu { m, w, data })
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * (2 * self.w + 1) + (j + self.w - i)]
    }

    /// Solve A x = b in place on a contiguous slice.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.m);
        self.solve_strided(x, 0, 1);
    }

    /// Solve A x = b in place on the strided fiber
    /// x[base], x[base + stride], .., x[base + (m-1) stride].
    pub fn solve_strided(&self, buf: &mut [f64], base: usize, stride: usize) {
        let m = self.m;
        let w = self.w;
        // forward: L y = b
        for i in 1..m {
            let lo = i.saturating_sub(w);
            let mut acc = buf[base + i * stride];
            for j in lo..i {
                acc -= self.entry(i, j) * buf[base + j * stride];
            }
            buf[base + i * stride] = acc;
        }
        // backward: U x = y
        for i in (0..m).rev() {
            let hi = (i + w).min(m - 1);
            let mut acc = buf[base + i * stride];
            for j in (i + 1)..=hi {
                acc -= self.entry(i, j) * buf[base + j * stride];
            }
            buf[base + i * stride] = acc / self.entry(i, i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(m: usize, lo: f64, di: f64, hi: f64) -> BandedMatrix1D {
        let mut a = BandedMatrix1D::new(m, 1, BandSymmetry::General).unwrap();
        for i in 0..m {
            a.set(i, i, di);
            if i > 0 {
                a.set(i, i - 1, lo);
            }
            if i + 1 < m {
                a.set(i, i + 1, hi);
            }
        }
        a
    }

    #[test]
    fn get_set_and_windows() {
        let mut a = BandedMatrix1D::new(5, 2, BandSymmetry::General).unwrap();
        a.set(0, 2, 7.0);
        a.set(4, 2, -1.5);
        assert_eq!(a.get(0, 2), 7.0);
        assert_eq!(a.get(4, 2), -1.5);
        assert_eq!(a.get(0, 3), 0.0);
        assert_eq!(a.row_window(0), (0, 2));
        assert_eq!(a.row_window(4), (2, 4));
        assert!(BandedMatrix1D::new(3, 3, BandSymmetry::General).is_err());
    }

    #[test]
    fn apply_matches_dense() {
        let a = tridiag(6, -1.0, 2.5, -0.5);
        let dense = a.to_dense_rows();
        let x: Vec<f64> = (0..6).map(|i| (i as f64 * 0.7).sin() + 0.2).collect();
        let mut y = vec![0.0; 6];
        a.apply(&x, &mut y);
        let mut yt = vec![0.0; 6];
        a.apply_transpose(&x, &mut yt);
        for i in 0..6 {
            let want: f64 = (0..6).map(|j| dense[i][j] * x[j]).sum();
            let want_t: f64 = (0..6).map(|j| dense[j][i] * x[j]).sum();
            assert!((y[i] - want).abs() < 1e-14);
            assert!((yt[i] - want_t).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetrizers() {
        let mut a = tridiag(4, -1.0, 0.3, 1.0);
        assert!(a.skewness_defect() > 0.0 || a.symmetry_defect() > 0.0);
        let mut b = a.clone();
        b.symmetrize();
        assert_eq!(b.symmetry_defect(), 0.0);
        a.skew_symmetrize();
        assert_eq!(a.skewness_defect(), 0.0);
        assert_eq!(a.get(0, 0), 0.0);
    }

    #[test]
    fn lu_solves_small_system() {
        // 3x3 fixture solved by hand: A = [[2,1,0],[1,3,1],[0,1,2]],
        // b = [3, 10, 9] -> x = [1/2, 2, 7/2]
        // (check: 2*0.5+2 = 3, 0.5+6+3.5 = 10, 2+7 = 9).
        let mut a = BandedMatrix1D::new(3, 1, BandSymmetry::Symmetric).unwrap();
        a.set(0, 0, 2.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 3.0);
        a.set(1, 2, 1.0);
        a.set(2, 1, 1.0);
        a.set(2, 2, 2.0);
        let lu = BandedLu::factor(&a).unwrap();
        let mut x = vec![3.0, 10.0, 9.0];
        lu.solve_in_place(&mut x);
        assert!((x[0] - 0.5).abs() < 1e-14);
        assert!((x[1] - 2.0).abs() < 1e-14);
        assert!((x[2] - 3.5).abs() < 1e-14);
    }

    #[test]
    fn lu_roundtrips_apply() {
        let a = tridiag(40, -1.0, 4.0, -2.0);
        let lu = BandedLu::factor(&a).unwrap();
        let x: Vec<f64> = (0..40).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.3).collect();
        let mut b = vec![0.0; 40];
        a.apply(&x, &mut b);
        lu.solve_in_place(&mut b);
        for i in 0..40 {
            assert!((b[i] - x[i]).abs() < 1e-12, "i = {i}");
        }
    }

    #[test]
    fn strided_solve_matches_contiguous() {
        let a = tridiag(7, 0.5, 3.0, -0.25);
        let lu = BandedLu::factor(&a).unwrap();
        let b: Vec<f64> = (0..7).map(|i| (i as f64).cos()).collect();
        let mut direct = b.clone();
        lu.solve_in_place(&mut direct);
        // embed the same fiber with stride 3, offset 2
        let mut strided = vec![0.0; 2 + 7 * 3];
        for i in 0..7 {
            strided[2 + 3 * i] = b[i];
        }
        lu.solve_strided(&mut strided, 2, 3);
        for i in 0..7 {
            assert!((strided[2 + 3 * i] - direct[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn singular_matrix_reports_step() {
        let a = BandedMatrix1D::new(3, 1, BandSymmetry::General).unwrap();
        match BandedLu::factor(&a) {
            Err(Error::SingularBand(0)) => {}
            other => panic!("expected singular at step 0, got {other:?}"),
        }
    }
}
