//! Gauss-Legendre quadrature on the unit interval.

use crate::{Error, Result};

/// Largest supported point count.
pub const MAX_POINTS: usize = 32;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Nodes and weights of a quadrature rule on [0, 1].
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Integrate `f` over [a, b] by mapping the rule affinely.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * h * f(a + t * h))
            .sum()
    }
}

/// q-point Gauss-Legendre rule on [0, 1], exact for polynomials of degree
/// 2q - 1. Nodes are strictly inside (0, 1) and ascending; weights are
/// positive and sum to 1. Nodes are found by Newton iteration on the
/// Legendre polynomial, no tabulated values.
pub fn gauss_legendre(q: usize) -> Result<QuadratureRule> {
    if q == 0 || q > MAX_POINTS {
        return Err(Error::QuadratureOrder(q));
    }
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    // Roots of P_q on [-1, 1] come in symmetric pairs; solve for the
    // nonnegative half and mirror.
    let half = q.div_ceil(2);
    for i in 0..half {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, d) = legendre_with_deriv(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= NEWTON_TOL {
                // one more correction so dp matches the converged x
                let (p2, d2) = legendre_with_deriv(q, x);
                x -= p2 / d2;
                dp = d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[q - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[q - 1 - i] = 0.5 * w;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// P_q(x) and P_q'(x) by the three-term recurrence.
fn legendre_with_deriv(q: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=q {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let d = q as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_rule_is_midpoint() {
        let r = gauss_legendre(1).unwrap();
        assert_eq!(r.nodes, vec![0.5]);
        assert_eq!(r.weights, vec![1.0]);
    }

    #[test]
    fn two_point_rule_matches_closed_form() {
        let r = gauss_legendre(2).unwrap();
        let s = 3.0f64.sqrt();
        assert!((r.nodes[0] - (3.0 - s) / 6.0).abs() < 1e-15);
        assert!((r.nodes[1] - (3.0 + s) / 6.0).abs() < 1e-15);
        assert!((r.weights[0] - 0.5).abs() < 1e-15);
        assert!((r.weights[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn three_points_integrate_quintic_exactly() {
        let r = gauss_legendre(3).unwrap();
        let v: f64 = r.integrate(0.0, 1.0, |x| x.powi(5));
        assert!((v - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn exactness_up_to_degree_2q_minus_1() {
        for q in 1..=MAX_POINTS {
            let r = gauss_legendre(q).unwrap();
            for deg in 0..=(2 * q - 1).min(40) {
                let exact = 1.0 / (deg as f64 + 1.0);
                let got: f64 = r.integrate(0.0, 1.0, |x| x.powi(deg as i32));
                assert!(
                    (got - exact).abs() < 1e-14,
                    "q = {q}, degree {deg}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn nodes_interior_ascending_weights_positive() {
        for q in 1..=MAX_POINTS {
            let r = gauss_legendre(q).unwrap();
            let mut sum = 0.0;
            for i in 0..q {
                assert!(r.nodes[i] > 0.0 && r.nodes[i] < 1.0);
                assert!(r.weights[i] > 0.0);
                if i > 0 {
                    assert!(r.nodes[i] > r.nodes[i - 1]);
                }
                sum += r.weights[i];
            }
            assert!((sum - 1.0).abs() < 1e-14, "weight sum off at q = {q}");
        }
    }

    #[test]
    fn rejects_zero_and_oversized_rules() {
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(MAX_POINTS + 1).is_err());
    }
}
