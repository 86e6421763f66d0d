//! Plot-data emitters for the spectral figures.
//!
//! Two CSV layouts cover the figures this library reproduces: the
//! rank-aligned spectrum-versus-symbol comparison, and the pointwise
//! eigenvalue bounds min(α,β)Δ ≤ λ_i ≤ max(α,β)Δ over the sampling grid in
//! Δ-sorted order. Output is locale-free CSV with '.' decimal points and 17
//! significant digits, byte-identical across repeat runs.

use crate::bspline::Degree;
use crate::kron::assemble_isotropic;
use crate::spectrum::compare_spectrum;
use crate::symbol::{sample_symbol, ProblemParams};
use crate::Result;

/// Relative-gap threshold the comparison CSV tags outliers with.
pub const COMPARISON_GAP_THRESHOLD: f64 = 0.10;

/// Which of the two plot-data layouts a preset renders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    /// sorted matrix eigenvalues against sorted symbol samples
    SpectrumComparison,
    /// symbol eigenvalues between their closed-form bounds
    SymbolBounds,
}

/// A canned figure configuration.
#[derive(Debug, Clone, Copy)]
pub struct FigurePreset {
    pub name: &'static str,
    pub kind: FigureKind,
    pub dim: usize,
    pub degree: usize,
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
}

/// The canonical figure configurations: spectrum comparisons on the square
/// (n = 40) and the cube (n = 10, the largest size a dense eigensolve
/// handles comfortably), and bound checks for the eight standard
/// configurations.
pub static FIGURE_PRESETS: [FigurePreset; 12] = [
    FigurePreset { name: "spectrum-2d-beta-0.5", kind: FigureKind::SpectrumComparison, dim: 2, degree: 3, n: 40, alpha: 1.0, beta: 0.5 },
    FigurePreset { name: "spectrum-2d-beta-0.01", kind: FigureKind::SpectrumComparison, dim: 2, degree: 3, n: 40, alpha: 1.0, beta: 0.01 },
    FigurePreset { name: "spectrum-3d-beta-0.5", kind: FigureKind::SpectrumComparison, dim: 3, degree: 3, n: 10, alpha: 1.0, beta: 0.5 },
    FigurePreset { name: "spectrum-3d-beta-0.01", kind: FigureKind::SpectrumComparison, dim: 3, degree: 3, n: 10, alpha: 1.0, beta: 0.01 },
    FigurePreset { name: "bounds-2d-p3-beta-0.5", kind: FigureKind::SymbolBounds, dim: 2, degree: 3, n: 20, alpha: 1.0, beta: 0.5 },
    FigurePreset { name: "bounds-2d-p3-beta-0.01", kind: FigureKind::SymbolBounds, dim: 2, degree: 3, n: 20, alpha: 1.0, beta: 0.01 },
    FigurePreset { name: "bounds-2d-p5-beta-0.5", kind: FigureKind::SymbolBounds, dim: 2, degree: 5, n: 20, alpha: 1.0, beta: 0.5 },
    FigurePreset { name: "bounds-2d-p5-beta-0.01", kind: FigureKind::SymbolBounds, dim: 2, degree: 5, n: 20, alpha: 1.0, beta: 0.01 },
    FigurePreset { name: "bounds-3d-p3-beta-0.5", kind: FigureKind::SymbolBounds, dim: 3, degree: 3, n: 10, alpha: 1.0, beta: 0.5 },
    FigurePreset { name: "bounds-3d-p3-beta-0.01", kind: FigureKind::SymbolBounds, dim: 3, degree: 3, n: 10, alpha: 1.0, beta: 0.01 },
    FigurePreset { name: "bounds-3d-p5-beta-0.5", kind: FigureKind::SymbolBounds, dim: 3, degree: 5, n: 10, alpha: 1.0, beta: 0.5 },
    FigurePreset { name: "bounds-3d-p5-beta-0.01", kind: FigureKind::SymbolBounds, dim: 3, degree: 5, n: 10, alpha: 1.0, beta: 0.01 },
];

/// Looks up a canned figure by name.
pub fn find_preset(name: &str) -> Option<&'static FigurePreset> {
    FIGURE_PRESETS.iter().find(|p| p.name == name)
}

/// Renders a preset to its CSV.
pub fn render_figure(preset: &FigurePreset) -> Result<String> {
    match preset.kind {
        FigureKind::SpectrumComparison => spectrum_comparison_csv(
            preset.dim,
            preset.degree,
            preset.n,
            preset.alpha,
            preset.beta,
        ),
        FigureKind::SymbolBounds => {
            symbol_bounds_csv(preset.dim, preset.degree, preset.n, preset.alpha, preset.beta)
        }
    }
}

/// CSV of the rank-aligned spectrum comparison: one row per rank with the
/// scaled matrix eigenvalue, the symbol sample of the same rank, and their
/// relative gap. Row count is d·(n+p-2)^d plus the header.
pub fn spectrum_comparison_csv(
    dim: usize,
    degree: usize,
    n: usize,
    alpha: f64,
    beta: f64,
) -> Result<String> {
    let p = Degree::new(degree)?;
    let op = assemble_isotropic(p, dim, n, alpha, beta)?;
    let params = ProblemParams::isotropic(dim, p, alpha, beta)?;
    let samples = sample_symbol(&params, n)?;
    let scale = (n as f64).powi(dim as i32 - 2);
    let cmp = compare_spectrum(&op, &samples, scale, COMPARISON_GAP_THRESHOLD)?;
    let mut out = String::from("rank,matrix_eig,symbol_eig,rel_gap\n");
    for (rank, ((a, b), g)) in cmp
        .matrix_eigs
        .iter()
        .zip(&cmp.symbol_eigs)
        .zip(&cmp.rel_gaps)
        .enumerate()
    {
        out.push_str(&format!("{rank},{a:.16e},{b:.16e},{g:.16e}\n"));
    }
    Ok(out)
}

/// CSV of the symbol eigenvalues between their closed-form bounds, one row
/// per grid point in Δ-ascending order: position, Δ, the lower bound
/// min(α,β)Δ, the d eigenvalues ascending, and the upper bound max(α,β)Δ.
pub fn symbol_bounds_csv(
    dim: usize,
    degree: usize,
    n: usize,
    alpha: f64,
    beta: f64,
) -> Result<String> {
    let p = Degree::new(degree)?;
    let params = ProblemParams::isotropic(dim, p, alpha, beta)?;
    let samples = sample_symbol(&params, n)?;
    let lo_c = alpha.min(beta);
    let hi_c = alpha.max(beta);
    let mut out = String::from("position,delta,lower_bound");
    for i in 1..=dim {
        out.push_str(&format!(",lambda_{i}"));
    }
    out.push_str(",upper_bound\n");
    for (pos, &pt) in samples.delta_sorted_indices().iter().enumerate() {
        let dl = samples.delta[pt];
        out.push_str(&format!("{pos},{dl:.16e},{:.16e}", lo_c * dl));
        for i in 0..dim {
            out.push_str(&format!(",{:.16e}", samples.eigs[pt * dim + i]));
        }
        out.push_str(&format!(",{:.16e}\n", hi_c * dl));
    }
    Ok(out)
}
