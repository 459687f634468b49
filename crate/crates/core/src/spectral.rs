//! Closed-form spectral calculus of the Dirichlet Laplacian on the unit interval.
//!
//! Eigenpairs are `λ_j = (jπ)²`, `φ_j(x) = √2 sin(jπx)` with `j ≥ 1`. Every
//! quantity here is evaluated from these formulas directly; this module is the
//! analytic reference the finite element layer is checked against.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// `j`-th Dirichlet eigenvalue `(jπ)²` (1-based).
pub fn eigenvalue(j: usize) -> Result<f64> {
    if j == 0 {
        return Err(Error::domain("eigenvalue index starts at 1"));
    }
    Ok(lambda(j))
}

#[inline]
pub(crate) fn lambda(j: usize) -> f64 {
    let w = j as f64 * PI;
    w * w
}

/// Evaluates the normalized eigenfunction `√2 sin(jπx)` on `[0, 1]`.
pub fn eigenfunction_eval(j: usize, x: f64) -> Result<f64> {
    if j == 0 {
        return Err(Error::domain("eigenfunction index starts at 1"));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("x = {x} lies outside [0, 1]")));
    }
    Ok(SQRT_2 * (j as f64 * PI * x).sin())
}

/// Truncated eigen-system `{λ_1, …, λ_J}` of the unit-interval Laplacian.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralBasis {
    lambdas: Vec<f64>,
}

impl SpectralBasis {
    pub fn new(num_modes: usize) -> Result<Self> {
        if num_modes == 0 {
            return Err(Error::domain("spectral basis needs at least one mode"));
        }
        Ok(Self { lambdas: (1..=num_modes).map(lambda).collect() })
    }

    pub fn num_modes(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn domain_length(&self) -> f64 {
        1.0
    }
}

/// Coefficients `v_j = (v, φ_j)` of a truncated eigen-expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(num_modes: usize) -> Self {
        Self { coeffs: vec![0.0; num_modes] }
    }

    /// Unit vector on mode `j` (1-based) within a `num_modes` truncation.
    pub fn unit(j: usize, num_modes: usize) -> Result<Self> {
        if j == 0 || j > num_modes {
            return Err(Error::domain(format!("mode {j} outside 1..={num_modes}")));
        }
        let mut coeffs = vec![0.0; num_modes];
        coeffs[j - 1] = 1.0;
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn num_modes(&self) -> usize {
        self.coeffs.len()
    }

    /// Evaluates the truncated expansion at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * SQRT_2 * ((i + 1) as f64 * PI * x).sin())
            .sum()
    }
}

/// Real and imaginary parts `(u₁, u₂)` sharing one truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralPair {
    pub re: SpectralField,
    pub im: SpectralField,
}

impl SpectralPair {
    pub fn new(re: SpectralField, im: SpectralField) -> Result<Self> {
        if re.num_modes() != im.num_modes() {
            return Err(Error::domain(format!(
                "pair components have {} and {} modes",
                re.num_modes(),
                im.num_modes()
            )));
        }
        Ok(Self { re, im })
    }

    pub fn num_modes(&self) -> usize {
        self.re.num_modes()
    }

    /// `(‖u₁‖² + ‖u₂‖²)^{1/2}` in `L²`.
    pub fn combined_norm(&self) -> f64 {
        let a = fractional_norm(&self.re, 0.0);
        let b = fractional_norm(&self.im, 0.0);
        a.hypot(b)
    }
}

/// `‖A^{γ/2} v‖ = (Σ λ_j^γ v_j²)^{1/2}` over the truncated modes.
pub fn fractional_norm(v: &SpectralField, gamma: f64) -> f64 {
    v.coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| lambda(i + 1).powf(gamma) * c * c)
        .sum::<f64>()
        .sqrt()
}

/// Action of the unitary group `e^{t𝔸}`: each mode pair is rotated by `tλ_j`.
pub fn apply_trig_group(state: &SpectralPair, t: f64) -> SpectralPair {
    let n = state.num_modes();
    let mut re = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    for (i, (a, b)) in state.re.coeffs.iter().zip(&state.im.coeffs).enumerate() {
        let (s, c) = (t * lambda(i + 1)).sin_cos();
        re.push(c * a - s * b);
        im.push(s * a + c * b);
    }
    SpectralPair { re: SpectralField::new(re), im: SpectralField::new(im) }
}

/// Truncated Hilbert–Schmidt norm `‖A^{θ/2} Q^{1/2}‖_HS` for `Q = A^{-s}`.
///
/// Terms are accumulated from the tail towards `j = 1` so that small
/// contributions are not swamped.
pub fn hs_norm(theta: f64, s: f64, num_modes: usize) -> f64 {
    let p = theta - s;
    (1..=num_modes).rev().map(|j| lambda(j).powf(p)).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrigKind {
    Sine,
    Cosine,
}

impl TrigKind {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            TrigKind::Sine => x.sin(),
            TrigKind::Cosine => x.cos(),
        }
    }
}

/// Truncated operator norm of `(trig(tA) − trig(sA)) A^{-θ/2}`.
///
/// The operators are diagonal in the eigenbasis so the norm is the largest
/// weighted mode deviation over `j ≤ J`.
pub fn holder_deviation(t: f64, s: f64, theta: f64, kind: TrigKind, num_modes: usize) -> Result<f64> {
    if s < 0.0 || t < s {
        return Err(Error::domain(format!("need 0 <= s <= t, got s = {s}, t = {t}")));
    }
    let mut worst = 0.0f64;
    for j in 1..=num_modes {
        let l = lambda(j);
        let dev = (kind.eval(t * l) - kind.eval(s * l)).abs() * l.powf(-0.5 * theta);
        worst = worst.max(dev);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PI2: f64 = PI * PI;

    #[test]
    fn eigenvalues_closed_form() {
        assert!((eigenvalue(1).unwrap() - 9.869604401).abs() < 1e-9);
        assert!((eigenvalue(2).unwrap() - 39.478417604).abs() < 1e-9);
        assert!((eigenvalue(10).unwrap() - 100.0 * PI2).abs() < 1e-10);
        assert!(matches!(eigenvalue(0), Err(Error::Domain(_))));
    }

    #[test]
    fn eigenfunction_values() {
        assert!((eigenfunction_eval(1, 0.5).unwrap() - SQRT_2).abs() < 1e-15);
        assert!((eigenfunction_eval(2, 0.25).unwrap() - SQRT_2).abs() < 1e-15);
        for j in 1..20 {
            assert_eq!(eigenfunction_eval(j, 0.0).unwrap(), 0.0);
        }
        assert!(eigenfunction_eval(1, 1.5).is_err());
        assert!(eigenfunction_eval(1, -0.1).is_err());
    }

    #[test]
    fn eigenfunctions_are_l2_normalized() {
        for j in 1..6 {
            let v = crate::quadrature::integrate(
                |x| eigenfunction_eval(j, x).unwrap().powi(2),
                0.0,
                1.0,
                32,
                8,
            );
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn basis_invariants() {
        let b = SpectralBasis::new(50).unwrap();
        assert_eq!(b.num_modes(), 50);
        assert!(b.lambdas().windows(2).all(|w| w[1] > w[0]));
        assert!(SpectralBasis::new(0).is_err());
    }

    #[test]
    fn fractional_norm_examples() {
        let e1 = SpectralField::unit(1, 4).unwrap();
        assert!((fractional_norm(&e1, 0.0) - 1.0).abs() < 1e-15);
        assert!((fractional_norm(&e1, 2.0) - PI2).abs() < 1e-12);
        let v = SpectralField::new(vec![1.0, 1.0]);
        let expected = (PI.powi(-4) + (4.0 * PI2).powi(-2)).sqrt();
        assert!((fractional_norm(&v, -2.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn trig_group_single_mode() {
        let st = SpectralPair::new(SpectralField::new(vec![1.0]), SpectralField::new(vec![0.0])).unwrap();
        let out = apply_trig_group(&st, 0.1);
        assert!((out.re.coeffs()[0] - (0.1 * PI2).cos()).abs() < 1e-15);
        assert!((out.im.coeffs()[0] - (0.1 * PI2).sin()).abs() < 1e-15);
        assert_eq!(apply_trig_group(&st, 0.0), st);
    }

    #[test]
    fn hs_norm_examples() {
        assert!((hs_norm(2.0, 2.0, 16) - 4.0).abs() < 1e-14);
        // Σ_{j≤J} (jπ)^{-4} → ζ(4)/π⁴ = 1/90; tail below 1/(3J³π⁴).
        let v = hs_norm(0.0, 2.0, 10_000);
        assert!((v * v - 1.0 / 90.0).abs() < 1e-12);
        assert!((v - (1.0f64 / 90.0).sqrt()).abs() < 1e-7);
    }

    #[test]
    fn hs_norm_marginal_case_grows_but_stays_bounded() {
        // Σ (jπ)^{-1.002}: direct partial sums at two truncations.
        let direct = |n: usize| (1..=n).map(|j| (j as f64 * PI).powf(-1.002)).sum::<f64>().sqrt();
        let a = hs_norm(2.0, 2.501, 1000);
        let b = hs_norm(2.0, 2.501, 2000);
        assert!((a - direct(1000)).abs() < 1e-12);
        assert!(b > a);
        assert!(b < 3.0);
    }

    #[test]
    fn hs_tail_decay_rate() {
        // increments over [J, 2J] scale like J^{2(θ−s)+1}
        let inc = |j: usize| {
            let a = hs_norm(0.0, 2.0, j);
            let b = hs_norm(0.0, 2.0, 2 * j);
            b * b - a * a
        };
        let ratio = inc(400) / inc(200);
        let expected = 2f64.powf(2.0 * -2.0 + 1.0);
        assert!((ratio / expected - 1.0).abs() < 0.01);
    }

    #[test]
    fn holder_deviation_basics() {
        assert_eq!(holder_deviation(0.3, 0.3, 1.0, TrigKind::Sine, 100).unwrap(), 0.0);
        assert!(holder_deviation(0.9, 0.1, 0.0, TrigKind::Cosine, 500).unwrap() <= 2.0);
        assert!(matches!(holder_deviation(0.1, 0.2, 1.0, TrigKind::Sine, 10), Err(Error::Domain(_))));
    }

    fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn holder_slope_over_dyadic_gaps() {
        for &theta in &[0.5, 1.0, 2.0] {
            for kind in [TrigKind::Sine, TrigKind::Cosine] {
                let gaps: Vec<f64> = (8..=16).map(|p| 2f64.powi(-p)).collect();
                let base = 0.25;
                let devs: Vec<f64> = gaps
                    .iter()
                    .map(|g| holder_deviation(base + g, base, theta, kind, 1000).unwrap())
                    .collect();
                let xs: Vec<f64> = gaps.iter().map(|g| g.log2()).collect();
                let ys: Vec<f64> = devs.iter().map(|d| d.log2()).collect();
                let slope = fitted_slope(&xs, &ys);
                assert!(slope >= theta / 2.0 - 0.1, "theta={theta} {kind:?} slope={slope}");
            }
        }
    }

    fn pair_strategy(max_modes: usize) -> impl Strategy<Value = SpectralPair> {
        (1..max_modes).prop_flat_map(|n| {
            (prop::collection::vec(-5.0..5.0f64, n), prop::collection::vec(-5.0..5.0f64, n)).prop_map(|(a, b)| {
                SpectralPair::new(SpectralField::new(a), SpectralField::new(b)).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn trig_group_is_unitary(v in pair_strategy(40), t in -10.0..10.0f64) {
            let n0 = v.combined_norm();
            let n1 = apply_trig_group(&v, t).combined_norm();
            prop_assert!((n1 - n0).abs() <= 1e-12 * n0.max(1e-300));
        }

        #[test]
        fn trig_group_property(v in pair_strategy(24), t in -10.0..10.0f64, r in -10.0..10.0f64) {
            let two = apply_trig_group(&apply_trig_group(&v, t), r);
            let one = apply_trig_group(&v, t + r);
            let scale = v.combined_norm().max(1e-300);
            let diff = SpectralPair::new(
                SpectralField::new(two.re.coeffs().iter().zip(one.re.coeffs()).map(|(a, b)| a - b).collect()),
                SpectralField::new(two.im.coeffs().iter().zip(one.im.coeffs()).map(|(a, b)| a - b).collect()),
            ).unwrap();
            prop_assert!(diff.combined_norm() <= 1e-10 * scale);
        }

        #[test]
        fn parseval_at_gamma_zero(c in prop::collection::vec(-3.0..3.0f64, 1..30)) {
            let e: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            let v = SpectralField::new(c);
            prop_assert!((fractional_norm(&v, 0.0) - e).abs() <= 1e-14 * e.max(1.0));
        }

        #[test]
        fn hs_norm_nondecreasing(theta in 0.0..2.0f64, s in 0.0..4.0f64, j in 1usize..200) {
            prop_assert!(hs_norm(theta, s, j + 1) >= hs_norm(theta, s, j));
        }
    }
}
