//! Cardinal B-splines and the boundary-adapted B-spline basis of degree p on
//! a uniform open knot vector over [0, 1].
//!
//! Conventions: the degree-0 cardinal spline is the indicator of [0, 1), so
//! every spline here is right-continuous at its knots. Basis and matrix
//! indices are 0-based throughout the crate.

use crate::{Error, Result};

/// Spline degree, validated to the supported range 1..=8.
///
/// Internal cardinal-spline evaluations go above this (inner products of two
/// degree-p splines live at degree 2p + 1), which is why [`cardinal_eval`]
/// takes a plain integer degree instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Degree(usize);

impl Degree {
    pub const MAX: usize = 8;

    pub fn new(p: usize) -> Result<Self> {
        if !(1..=Self::MAX).contains(&p) {
            return Err(Error::DegreeOutOfRange(p));
        }
        Ok(Degree(p))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

/// Largest degree the fixed-size evaluation buffer supports; 2 * MAX + 1 plus
/// headroom.
const CARDINAL_DEGREE_CAP: usize = 31;

/// Cardinal B-spline `phi_p(t)`: phi_0 is the indicator of [0, 1) and
/// phi_p(t) = t/p phi_{p-1}(t) + (p+1-t)/p phi_{p-1}(t-1).
///
/// Supported on [0, p+1), nonnegative, symmetric about (p+1)/2, and
/// right-continuous at the integer knots.
pub fn cardinal_eval(p: usize, t: f64) -> f64 {
    assert!(p <= CARDINAL_DEGREE_CAP, "cardinal degree {p} beyond buffer");
    if !t.is_finite() || t < 0.0 || t >= p as f64 + 1.0 {
        return 0.0;
    }
    // v[j] holds phi_k(t - j) while k climbs from 0 to p.
    let mut v = [0.0f64; CARDINAL_DEGREE_CAP + 2];
    let cell = t.floor() as usize;
    v[cell] = 1.0;
    for k in 1..=p {
        let kf = k as f64;
        for j in 0..=(p - k) {
            let s = t - j as f64;
            v[j] = (s * v[j] + (kf + 1.0 - s) * v[j + 1]) / kf;
        }
    }
    v[0]
}

/// r-th derivative of the cardinal B-spline, `phi_p^{(r)}(t)`, as the
/// alternating binomial sum of degree p - r shifts (the derivative recurrence
/// phi_p' = phi_{p-1}(t) - phi_{p-1}(t-1) applied r times). Requires r < p so
/// the result is still a piecewise-continuous function; r = 0 is the value.
pub fn cardinal_deriv(p: usize, t: f64, r: usize) -> Result<f64> {
    if r >= p {
        return Err(Error::DerivativeOrder {
            degree: p,
            order: r,
        });
    }
    let q = p - r;
    let mut acc = 0.0;
    let mut binom = 1.0f64;
    for i in 0..=r {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * cardinal_eval(q, t - i as f64);
        binom = binom * (r - i) as f64 / (i as f64 + 1.0);
    }
    Ok(acc)
}

/// Uniform open knot vector on [0, 1]: p + 1 zeros, the interior knots
/// 1/n .. (n-1)/n, and p + 1 ones. Carries the boundary-adapted basis
/// N_0 .. N_{n+p-1} of degree p.
#[derive(Debug, Clone)]
pub struct KnotVector {
    p: usize,
    n: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    pub fn new(degree: Degree, n: usize) -> Result<Self> {
        let p = degree.get();
        if n < 2 {
            return Err(Error::MeshTooCoarse { p, n, min: 2 });
        }
        let mut knots = Vec::with_capacity(2 * p + n + 1);
        knots.extend(std::iter::repeat(0.0).take(p + 1));
        knots.extend((1..n).map(|i| i as f64 / n as f64));
        knots.extend(std::iter::repeat(1.0).take(p + 1));
        debug_assert_eq!(knots.len(), 2 * p + n + 1);
        Ok(KnotVector { p, n, knots })
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.p
    }

    /// Number of mesh intervals.
    #[inline]
    pub fn intervals(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Total number of basis functions, n + p.
    #[inline]
    pub fn num_basis(&self) -> usize {
        self.n + self.p
    }

    /// Number of interior basis functions (those vanishing at both ends),
    /// m = n + p - 2. They are the functions with 0-based indices
    /// 1 ..= n + p - 2.
    #[inline]
    pub fn interior_count(&self) -> usize {
        self.n + self.p - 2
    }

    /// 0-based knot span index s with knots[s] <= x < knots[s+1]; x = 1 maps
    /// to the last nonempty span.
    #[inline]
    pub fn span_of(&self, x: f64) -> usize {
        let cell = ((x * self.n as f64).floor() as usize).min(self.n - 1);
        self.p + cell
    }

    /// Greville abscissa of basis function i: the average of its p interior
    /// support knots.
    pub fn greville(&self, i: usize) -> f64 {
        let s: f64 = self.knots[i + 1..=i + self.p].iter().sum();
        s / self.p as f64
    }

    /// True if basis function i is a pure cardinal shift:
    /// N_i(x) = phi_p(n x - i + p) with support strictly inside [0, 1].
    #[inline]
    pub fn is_central(&self, i: usize) -> bool {
        (self.p..self.n).contains(&i)
    }

    /// Values and first derivatives of the p + 1 basis functions that are
    /// nonzero on span s, at x. Entry k corresponds to basis index s - p + k.
    pub fn eval_nonzero(&self, s: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
        let p = self.p;
        let t = &self.knots;
        let mut vals = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        let mut lower = vec![0.0; p];
        vals[0] = 1.0;
        if p == 1 {
            lower[0] = 1.0;
        }
        for j in 1..=p {
            left[j] = x - t[s + 1 - j];
            right[j] = t[s + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let tmp = vals[r] / (right[r + 1] + left[j - r]);
                vals[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            vals[j] = saved;
            if j + 1 == p {
                lower[..=j].copy_from_slice(&vals[..=j]);
            }
        }
        // N_i' = p (L_i / (t[i+p] - t[i]) - L_{i+1} / (t[i+p+1] - t[i+1]))
        // where L is the degree p-1 row; zero-length supports contribute 0.
        let mut ders = vec![0.0; p + 1];
        for k in 0..=p {
            let i = s - p + k;
            let mut d = 0.0;
            if k >= 1 {
                let den = t[i + p] - t[i];
                if den > 0.0 {
                    d += lower[k - 1] / den;
                }
            }
            if k < p {
                let den = t[i + p + 1] - t[i + 1];
                if den > 0.0 {
                    d -= lower[k] / den;
                }
            }
            ders[k] = p as f64 * d;
        }
        (vals, ders)
    }
}

/// Value (r = 0) or first derivative (r = 1) of basis function i at x.
pub fn basis_eval(kv: &KnotVector, i: usize, x: f64, r: usize) -> Result<f64> {
    if i >= kv.num_basis() {
        return Err(Error::BasisIndex {
            index: i,
            count: kv.num_basis(),
        });
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::PointOutOfDomain(x));
    }
    if r > 1 {
        return Err(Error::DerivativeOrder {
            degree: kv.degree(),
            order: r,
        });
    }
    let s = kv.span_of(x);
    if i + kv.degree() < s || i > s {
        return Ok(0.0);
    }
    let (vals, ders) = kv.eval_nonzero(s, x);
    let k = i + kv.degree() - s;
    Ok(if r == 0 { vals[k] } else { ders[k] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TIGHT: f64 = 1e-14;

    /// Direct two-term recursion, kept deliberately naive as an oracle.
    fn cardinal_oracle(p: usize, t: f64) -> f64 {
        if p == 0 {
            return if (0.0..1.0).contains(&t) { 1.0 } else { 0.0 };
        }
        let pf = p as f64;
        (t / pf) * cardinal_oracle(p - 1, t)
            + ((pf + 1.0 - t) / pf) * cardinal_oracle(p - 1, t - 1.0)
    }

    #[test]
    fn frozen_cardinal_values() {
        assert!((cardinal_eval(1, 1.0) - 1.0).abs() < TIGHT);
        assert!((cardinal_eval(3, 2.0) - 2.0 / 3.0).abs() < TIGHT);
        assert!((cardinal_eval(5, 3.0) - 11.0 / 20.0).abs() < TIGHT);
        assert_eq!(cardinal_eval(2, -0.5), 0.0);
        assert_eq!(cardinal_eval(3, 4.0), 0.0);
        assert!((cardinal_eval(3, 1.0) - 1.0 / 6.0).abs() < TIGHT);
        assert!((cardinal_eval(5, 2.0) - 13.0 / 60.0).abs() < TIGHT);
        assert!((cardinal_eval(5, 1.0) - 1.0 / 120.0).abs() < TIGHT);
    }

    #[test]
    fn matches_naive_recursion() {
        for p in 0..=13 {
            for k in 0..200 {
                let t = -0.5 + (p as f64 + 2.0) * k as f64 / 199.0;
                let a = cardinal_eval(p, t);
                let b = cardinal_oracle(p, t);
                assert!((a - b).abs() < 1e-13, "p = {p}, t = {t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn partition_of_unity_over_shifts() {
        for p in 1..=8 {
            for k in 0..50 {
                let t = 0.013 + k as f64 * 0.21;
                let lo = (t - p as f64 - 1.0).ceil() as i64;
                let hi = t.floor() as i64;
                let sum: f64 = (lo..=hi).map(|j| cardinal_eval(p, t - j as f64)).sum();
                assert!((sum - 1.0).abs() < TIGHT, "p = {p}, t = {t}: sum {sum}");
            }
        }
    }

    #[test]
    fn symmetric_about_support_midpoint() {
        for p in 1..=10 {
            for k in 0..100 {
                let t = (p as f64 + 1.0) * k as f64 / 99.0;
                let a = cardinal_eval(p, t);
                let b = cardinal_eval(p, p as f64 + 1.0 - t);
                assert!((a - b).abs() < TIGHT, "p = {p}, t = {t}");
            }
        }
    }

    #[test]
    fn frozen_derivative_values() {
        assert!((cardinal_deriv(3, 1.0, 1).unwrap() - 0.5).abs() < TIGHT);
        assert!((cardinal_deriv(3, 2.0, 2).unwrap() + 2.0).abs() < TIGHT);
        assert!((cardinal_deriv(3, 1.0, 2).unwrap() - 1.0).abs() < TIGHT);
        // derivative vanishes at the symmetry point
        for p in 2..=8 {
            let mid = (p as f64 + 1.0) / 2.0;
            assert!(cardinal_deriv(p, mid, 1).unwrap().abs() < TIGHT);
        }
        // r = 0 is the value
        assert_eq!(
            cardinal_deriv(4, 1.7, 0).unwrap(),
            cardinal_eval(4, 1.7)
        );
    }

    #[test]
    fn derivative_order_rejected_at_degree() {
        assert!(cardinal_deriv(3, 1.0, 3).is_err());
        assert!(cardinal_deriv(1, 0.5, 1).is_err());
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let h = 1e-6;
        for p in 2..=9 {
            for k in 1..60 {
                let t = (p as f64 + 1.0) * k as f64 / 61.0 + 0.0003;
                let d = cardinal_deriv(p, t, 1).unwrap();
                let fd = (cardinal_eval(p, t + h) - cardinal_eval(p, t - h)) / (2.0 * h);
                assert!((d - fd).abs() < 1e-7, "p = {p}, t = {t}: {d} vs {fd}");
            }
        }
    }

    /// Inner products of cardinal splines collapse to a single evaluation of
    /// a higher-degree cardinal spline:
    /// int phi_{p1}^{(r1)}(t) phi_{p2}^{(r2)}(t + tau) dt
    ///   = (-1)^{r1} phi_{p1+p2+1}^{(r1+r2)}(p1 + 1 + tau).
    #[test]
    fn inner_product_identity() {
        let rule = crate::gauss::gauss_legendre(8).unwrap();
        for p1 in 1..=5usize {
            for p2 in 1..=5usize {
                for r1 in 0..=1usize {
                    for r2 in 0..=1usize {
                        if r1 >= p1 || r2 >= p2 {
                            continue;
                        }
                        for tau in -(p2 as i64 + 1)..=(p1 as i64 + 1) {
                            let tauf = tau as f64;
                            let mut quad = 0.0;
                            for cell in 0..=(p1 as i64) {
                                quad += rule.integrate(cell as f64, cell as f64 + 1.0, |t| {
                                    cardinal_deriv(p1, t, r1).unwrap()
                                        * cardinal_deriv(p2, t + tauf, r2).unwrap()
                                });
                            }
                            let sign = if r1 % 2 == 0 { 1.0 } else { -1.0 };
                            let rhs = sign
                                * cardinal_deriv(
                                    p1 + p2 + 1,
                                    p1 as f64 + 1.0 + tauf,
                                    r1 + r2,
                                )
                                .unwrap();
                            assert!(
                                (quad - rhs).abs() < 1e-12,
                                "p1={p1} p2={p2} r1={r1} r2={r2} tau={tau}: {quad} vs {rhs}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn degree_range() {
        assert!(Degree::new(0).is_err());
        assert!(Degree::new(9).is_err());
        assert_eq!(Degree::new(8).unwrap().get(), 8);
    }

    #[test]
    fn knot_vector_layout() {
        let kv = KnotVector::new(Degree::new(3).unwrap(), 8).unwrap();
        assert_eq!(kv.knots().len(), 2 * 3 + 8 + 1);
        assert_eq!(&kv.knots()[..4], &[0.0; 4]);
        assert_eq!(&kv.knots()[11..], &[1.0; 4]);
        assert!((kv.knots()[4] - 0.125).abs() < TIGHT);
        assert_eq!(kv.num_basis(), 11);
        assert_eq!(kv.interior_count(), 9);
    }

    #[test]
    fn basis_partition_of_unity_and_boundary() {
        for (p, n) in [(1usize, 5usize), (2, 6), (3, 8), (4, 9), (6, 11)] {
            let kv = KnotVector::new(Degree::new(p).unwrap(), n).unwrap();
            for k in 0..=40 {
                let x = k as f64 / 40.0;
                let mut sum = 0.0;
                let mut dsum = 0.0;
                for i in 0..kv.num_basis() {
                    let v = basis_eval(&kv, i, x, 0).unwrap();
                    assert!(v >= -TIGHT);
                    sum += v;
                    dsum += basis_eval(&kv, i, x, 1).unwrap();
                }
                assert!((sum - 1.0).abs() < TIGHT, "p={p} n={n} x={x}: {sum}");
                assert!(dsum.abs() < 1e-10, "p={p} n={n} x={x}: dsum {dsum}");
            }
            // only the first / last function survive at the endpoints
            assert!((basis_eval(&kv, 0, 0.0, 0).unwrap() - 1.0).abs() < TIGHT);
            assert!((basis_eval(&kv, kv.num_basis() - 1, 1.0, 0).unwrap() - 1.0).abs() < TIGHT);
            for i in 1..kv.num_basis() - 1 {
                assert_eq!(basis_eval(&kv, i, 0.0, 0).unwrap(), 0.0);
                assert_eq!(basis_eval(&kv, i, 1.0, 0).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn central_functions_are_cardinal_shifts() {
        // 1-based index 6 at p = 3, n = 8 is 0-based 5; at x = 0.5 the
        // cardinal argument is n x - i + p = 2.
        let kv = KnotVector::new(Degree::new(3).unwrap(), 8).unwrap();
        let v = basis_eval(&kv, 5, 0.5, 0).unwrap();
        assert!((v - cardinal_eval(3, 2.0)).abs() < TIGHT);
        assert!((v - 2.0 / 3.0).abs() < TIGHT);

        for (p, n) in [(2usize, 7usize), (3, 8), (4, 12), (5, 9)] {
            let kv = KnotVector::new(Degree::new(p).unwrap(), n).unwrap();
            for i in p..n {
                assert!(kv.is_central(i));
                for k in 0..=50 {
                    let x = k as f64 / 50.0;
                    let arg = n as f64 * x - i as f64 + p as f64;
                    let v = basis_eval(&kv, i, x, 0).unwrap();
                    assert!(
                        (v - cardinal_eval(p, arg)).abs() < 1e-13,
                        "p={p} n={n} i={i} x={x}"
                    );
                    let d = basis_eval(&kv, i, x, 1).unwrap();
                    let dref = n as f64 * cardinal_deriv(p, arg, 1).unwrap();
                    assert!((d - dref).abs() < 1e-11 * n as f64, "p={p} n={n} i={i} x={x}");
                }
            }
        }
    }

    #[test]
    fn basis_eval_cross_checks_and_errors() {
        let kv = KnotVector::new(Degree::new(2).unwrap(), 5).unwrap();
        assert!(matches!(
            basis_eval(&kv, 99, 0.5, 0),
            Err(Error::BasisIndex { .. })
        ));
        assert!(matches!(
            basis_eval(&kv, 0, 1.5, 0),
            Err(Error::PointOutOfDomain(_))
        ));
        assert!(basis_eval(&kv, 0, 0.5, 2).is_err());

        // first derivative against a central difference
        let h = 1e-6;
        for i in 0..kv.num_basis() {
            for k in 1..20 {
                let x = k as f64 / 20.0 + 0.013;
                if x + h > 1.0 {
                    continue;
                }
                let d = basis_eval(&kv, i, x, 1).unwrap();
                let fd = (basis_eval(&kv, i, x + h, 0).unwrap()
                    - basis_eval(&kv, i, x - h, 0).unwrap())
                    / (2.0 * h);
                assert!((d - fd).abs() < 1e-6, "i={i} x={x}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn greville_points_of_interior_functions_lie_inside() {
        for (p, n) in [(1usize, 4usize), (3, 8), (5, 6), (4, 5)] {
            let kv = KnotVector::new(Degree::new(p).unwrap(), n).unwrap();
            let mut prev = 0.0;
            for i in 1..=kv.interior_count() {
                let g = kv.greville(i);
                assert!(g > 0.0 && g < 1.0, "p={p} n={n} i={i}: {g}");
                assert!(g >= prev);
                prev = g;
            }
        }
    }

    proptest! {
        #[test]
        fn prop_cardinal_nonnegative_and_bounded(p in 1usize..=10, t in -2.0f64..14.0) {
            let v = cardinal_eval(p, t);
            prop_assert!(v >= 0.0);
            prop_assert!(v <= 1.0 + 1e-14);
        }

        #[test]
        fn prop_basis_partition_of_unity(p in 1usize..=6, n in 3usize..=16, x in 0.0f64..=1.0) {
            let kv = KnotVector::new(Degree::new(p).unwrap(), n).unwrap();
            let sum: f64 = (0..kv.num_basis())
                .map(|i| basis_eval(&kv, i, x, 0).unwrap())
                .sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
