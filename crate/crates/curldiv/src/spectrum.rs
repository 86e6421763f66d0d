//! Spectrum-versus-symbol comparison: the eigenvalues of the scaled operator
//! lined up rank by rank against the sorted symbol samples over the same
//! frequency grid. Agreement up to a small set of outliers is the discrete
//! fingerprint of the operator sequence being distributed as its symbol.

use crate::eigen::symmetric_eigenvalues;
use crate::kron::KroneckerBlockOperator;
use crate::symbol::SymbolSamples;
use crate::{Error, Result};

/// Pairs that sit below this share of the largest symbol sample are compared
/// absolutely rather than relatively: both sides are zero for all practical
/// purposes, and a ratio of two roundoff-sized numbers carries no signal.
const NEAR_ZERO_FLOOR: f64 = 1e-10;

/// Rank-aligned comparison of a matrix spectrum with symbol samples.
#[derive(Debug, Clone)]
pub struct SpectrumComparison {
    /// eigenvalues of the scaled operator, ascending
    pub matrix_eigs: Vec<f64>,
    /// merged symbol samples, ascending, same length
    pub symbol_eigs: Vec<f64>,
    /// per-rank relative gaps |matrix - symbol| / max(|matrix|, |symbol|)
    pub rel_gaps: Vec<f64>,
    /// number of ranks whose gap exceeds `threshold`
    pub outliers: usize,
    /// the gap threshold the outlier count was taken at
    pub threshold: f64,
}

impl SpectrumComparison {
    pub fn len(&self) -> usize {
        self.matrix_eigs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix_eigs.is_empty()
    }

    /// Fraction of rank-aligned pairs whose relative gap is within the
    /// threshold the comparison was built with.
    pub fn aligned_fraction(&self) -> f64 {
        if self.rel_gaps.is_empty() {
            return 1.0;
        }
        1.0 - self.outliers as f64 / self.rel_gaps.len() as f64
    }

    /// Fraction of matrix eigenvalues below `cut` times the largest symbol
    /// sample: the size of the near-zero cluster created by a small
    /// coefficient. The symbol maximum is the reference scale because the
    /// matrix maximum drifts upward with boundary outliers.
    pub fn low_cluster_fraction(&self, cut: f64) -> f64 {
        let max = self.symbol_eigs.last().copied().unwrap_or(0.0);
        if max <= 0.0 || self.matrix_eigs.is_empty() {
            return 0.0;
        }
        let below = self.matrix_eigs.iter().filter(|&&e| e < cut * max).count();
        below as f64 / self.matrix_eigs.len() as f64
    }

    /// Same fraction for the symbol samples themselves: the cluster the
    /// distribution limit predicts at this cut.
    pub fn symbol_low_cluster_fraction(&self, cut: f64) -> f64 {
        let max = self.symbol_eigs.last().copied().unwrap_or(0.0);
        if max <= 0.0 || self.symbol_eigs.is_empty() {
            return 0.0;
        }
        let below = self.symbol_eigs.iter().filter(|&&e| e < cut * max).count();
        below as f64 / self.symbol_eigs.len() as f64
    }
}

/// Compares the spectrum of `scale * op` with the symbol samples, rank by
/// rank. The operator must be small enough to materialize densely, and the
/// sample grid must carry exactly one eigenvalue tuple per matrix eigenvalue
/// (the canonical grid built from the same per-direction size does).
pub fn compare_spectrum(
    op: &KroneckerBlockOperator,
    samples: &SymbolSamples,
    scale: f64,
    threshold: f64,
) -> Result<SpectrumComparison> {
    let symbol_eigs = samples.sorted_eigs();
    if symbol_eigs.len() != op.total_len() {
        return Err(Error::SizeMismatch {
            expected: op.total_len(),
            got: symbol_eigs.len(),
        });
    }
    let dense = op.to_dense()?;
    let mut matrix_eigs = symmetric_eigenvalues(&dense)?;
    for e in &mut matrix_eigs {
        *e *= scale;
    }

    let smax = symbol_eigs
        .iter()
        .fold(0.0f64, |a, &b| a.max(b.abs()))
        .max(f64::MIN_POSITIVE);
    let floor = NEAR_ZERO_FLOOR * smax;
    let rel_gaps: Vec<f64> = matrix_eigs
        .iter()
        .zip(&symbol_eigs)
        .map(|(&a, &b)| {
            let denom = a.abs().max(b.abs());
            if denom < floor {
                0.0
            } else {
                (a - b).abs() / denom
            }
        })
        .collect();
    let outliers = rel_gaps.iter().filter(|&&g| g > threshold).count();
    Ok(SpectrumComparison {
        matrix_eigs,
        symbol_eigs,
        rel_gaps,
        outliers,
        threshold,
    })
}
