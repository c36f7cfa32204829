//! Schwarzian derivatives, the hyperbolic sup-norms on the disk and on its
//! exterior, the Ahlfors–Weill admissibility test, and series solutions of
//! the Schwarzian differential equation `S_w = φ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, GftError, Result};
use crate::report::{ClaimReport, Verdict};
use crate::series::TruncatedSeries;

/// A holomorphic quadratic differential `φ` on the unit disk.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadDifferential {
    phi: TruncatedSeries,
    norm_cache: Option<f64>,
}

impl QuadDifferential {
    pub fn new(phi: TruncatedSeries) -> Self {
        Self {
            phi,
            norm_cache: None,
        }
    }

    /// Attaches the norm on the canonical grid.
    pub fn with_canonical_norm(mut self) -> Self {
        let norm = bnorm_series(&self.phi, &GridSpec::canonical())
            .expect("the canonical grid is non-empty");
        self.norm_cache = Some(norm);
        self
    }

    pub(crate) fn with_known_norm(mut self, norm: f64) -> Self {
        self.norm_cache = Some(norm);
        self
    }

    pub fn phi(&self) -> &TruncatedSeries {
        &self.phi
    }

    pub fn into_series(self) -> TruncatedSeries {
        self.phi
    }

    pub fn norm_cache(&self) -> Option<f64> {
        self.norm_cache
    }

    /// Cached canonical norm, computed on demand.
    pub fn canonical_norm(&self) -> f64 {
        self.norm_cache.unwrap_or_else(|| {
            bnorm_series(&self.phi, &GridSpec::canonical()).expect("canonical grid")
        })
    }
}

/// Polar sampling grid for sup-norms on the disk.
///
/// Radii are `ρ_i = i · 0.96 / (radii_count - 1)`; the canonical grid has 65
/// radii (step 0.015) and 512 angles, followed by a golden-section refinement
/// around the grid argmax.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub radii_count: usize,
    pub angles: usize,
    pub refine: bool,
}

const GRID_RADIUS_SPAN: f64 = 0.96;

impl GridSpec {
    pub fn canonical() -> Self {
        Self {
            radii_count: 65,
            angles: 512,
            refine: true,
        }
    }

    /// Twice as many radii and angles.
    pub fn doubled(&self) -> Self {
        Self {
            radii_count: 2 * self.radii_count - 1,
            angles: 2 * self.angles,
            refine: self.refine,
        }
    }

    fn radius(&self, i: usize) -> f64 {
        if self.radii_count <= 1 {
            0.0
        } else {
            i as f64 * GRID_RADIUS_SPAN / (self.radii_count - 1) as f64
        }
    }

    fn step(&self) -> f64 {
        if self.radii_count <= 1 {
            GRID_RADIUS_SPAN
        } else {
            GRID_RADIUS_SPAN / (self.radii_count - 1) as f64
        }
    }
}

/// Location and value of a sampled supremum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupPoint {
    pub value: f64,
    pub rho: f64,
    pub theta: f64,
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Sup over the grid of `(1 - ρ²)² |φ(ρ e^{iθ})|`.
pub fn weighted_sup(phi: &TruncatedSeries, grid: &GridSpec) -> Result<SupPoint> {
    if grid.radii_count == 0 || grid.angles == 0 {
        return usage("bnorm: empty grid");
    }
    let weighted = |rho: f64, theta: f64| {
        let w = 1.0 - rho * rho;
        w * w * phi.evaluate(Complex64::from_polar(rho, theta)).norm()
    };
    let dtheta = 2.0 * PI / grid.angles as f64;
    // Per-radius maxima in parallel, reduced in index order.
    let per_radius: Vec<SupPoint> = (0..grid.radii_count)
        .into_par_iter()
        .map(|i| {
            let rho = grid.radius(i);
            let mut best = SupPoint {
                value: f64::NEG_INFINITY,
                rho,
                theta: 0.0,
            };
            for j in 0..grid.angles {
                let theta = j as f64 * dtheta;
                let v = weighted(rho, theta);
                if v > best.value {
                    best = SupPoint { value: v, rho, theta };
                }
            }
            best
        })
        .collect();
    let mut best = per_radius[0];
    for p in &per_radius[1..] {
        if p.value > best.value {
            best = *p;
        }
    }
    if grid.refine {
        let step = grid.step();
        let lo = (best.rho - step).max(0.0);
        let hi = (best.rho + step).min(1.0 - 1e-9);
        let (rho, _) = golden_max(|r| weighted(r, best.theta), lo, hi);
        let (theta, _) = golden_max(|t| weighted(rho, t), best.theta - dtheta, best.theta + dtheta);
        let (rho, value) = golden_max(|r| weighted(r, theta), lo, hi);
        if value > best.value {
            best = SupPoint { value, rho, theta };
        }
    }
    Ok(best)
}

fn bnorm_series(phi: &TruncatedSeries, grid: &GridSpec) -> Result<f64> {
    Ok(weighted_sup(phi, grid)?.value)
}

/// Hyperbolic sup-norm `sup (1 - |z|²)² |φ(z)|` sampled on `grid`.
pub fn bnorm(phi: &QuadDifferential, grid: &GridSpec) -> Result<f64> {
    if *grid == GridSpec::canonical() {
        if let Some(n) = phi.norm_cache {
            return Ok(n);
        }
    }
    bnorm_series(&phi.phi, grid)
}

/// Schwarzian derivative `(f''/f')' - (f''/f')²/2` of a series of order
/// `N >= 4`. The result has order `N - 3`: its `j`-th coefficient depends
/// on `a_{j+3}`, so higher coefficients are not determined by the input.
pub fn schwarzian(f: &TruncatedSeries) -> Result<QuadDifferential> {
    let n = f.order();
    if n < 4 {
        return usage(format!("schwarzian needs a series of order >= 4, got {n}"));
    }
    if f.coeff(1) == Complex64::new(0.0, 0.0) {
        return domain("schwarzian: f'(0) = 0, f is not locally univalent at 0");
    }
    let d1 = f.derivative()?;
    let d2 = d1.derivative()?;
    let pre = d1.truncate(n - 2)?.reciprocal()?.mul(&d2)?;
    let pre_prime = pre.derivative()?;
    let pre = pre.truncate(n - 3)?;
    let half_sq = pre.mul(&pre)?.scale(Complex64::new(0.5, 0.0));
    Ok(QuadDifferential::new(pre_prime.sub(&half_sq)?))
}

/// Max coefficient modulus of `S_{f1∘f} - ((S_{f1}∘f)·f'² + S_f)`.
pub fn chain_rule_residual(f1: &TruncatedSeries, f: &TruncatedSeries) -> Result<f64> {
    let n = f.order();
    if f1.order() != n {
        return usage("chain_rule_residual: mismatched orders");
    }
    if f.coeff(0) != Complex64::new(0.0, 0.0) {
        return domain("chain_rule_residual: inner map must fix 0");
    }
    let lhs = schwarzian(&f1.compose(f)?)?.into_series();
    let m = lhs.order();
    let s1 = schwarzian(f1)?.into_series();
    let s = schwarzian(f)?.into_series();
    let s1_of_f = s1.compose(&f.truncate(m)?)?;
    let fp = f.derivative()?.truncate(m)?;
    let rhs = s1_of_f.mul(&fp.mul(&fp)?)?.add(&s)?;
    Ok(lhs.max_diff(&rhs))
}

/// Outcome of the Ahlfors–Weill test `(1-|z|²)²|S_f| <= 2k`.
pub fn ahlfors_weill_admissible(
    f: &TruncatedSeries,
    k: f64,
    grid: &GridSpec,
) -> Result<ClaimReport> {
    if !(0.0..1.0).contains(&k) {
        return usage(format!("ahlfors_weill_admissible: k = {k} outside [0, 1)"));
    }
    let s = schwarzian(f)?;
    let sup = weighted_sup(s.phi(), grid)?;
    let mut report = ClaimReport::new(
        "ahlfors-weill-admissible",
        "(1-|z|^2)^2 |S_f(z)| <= 2k on the disk implies univalence with k-quasiconformal extension",
        0.0,
    )
    .input("k", k)
    .input("order", f.order());
    report.record("sup", sup.value);
    report.record("bound", 2.0 * k);
    report.record("argmax_rho", sup.rho);
    report.record("argmax_theta", sup.theta);
    report.require(Verdict::from_bool(sup.value <= 2.0 * k));
    Ok(report)
}

/// `F(z) = z + b_0 + sum_{n=1..M} b_n z^{-n}` on `|z| > 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentTail {
    pub b0: Complex64,
    pub tail: Vec<Complex64>,
}

impl LaurentTail {
    pub fn new(b0: Complex64, tail: Vec<Complex64>) -> Self {
        Self { b0, tail }
    }

    pub fn order(&self) -> usize {
        self.tail.len()
    }

    /// The inverted map `1/f(1/z)` of a normalized `f`: writing
    /// `f(z)/z = 1 + a_2 z + ...` and `h = z/f(z)`, `F(z) = z + h_1 + h_2/z + ...`.
    pub fn inverted(f: &TruncatedSeries) -> Result<Self> {
        f.check_normalized("LaurentTail::inverted")?;
        let n = f.order();
        let shifted = TruncatedSeries::from_fn(n - 1, |j| f.coeff(j + 1));
        let h = shifted.reciprocal()?;
        Ok(Self {
            b0: h.coeff(1),
            tail: (2..=h.order()).map(|j| h.coeff(j)).collect(),
        })
    }

    /// `(F(z), F'(z), F''(z))`.
    pub fn eval_derivatives(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        let w = z.inv();
        // Horner in w for sum b_n w^n, sum n b_n w^{n+1}, sum n(n+1) b_n w^{n+2}.
        let mut s0 = Complex64::new(0.0, 0.0);
        let mut s1 = s0;
        let mut s2 = s0;
        for (i, &b) in self.tail.iter().enumerate().rev() {
            let n = (i + 1) as f64;
            s0 = (s0 + b) * w;
            s1 = (s1 + b * n) * w;
            s2 = (s2 + b * n * (n + 1.0)) * w;
        }
        let f = z + self.b0 + s0;
        let fp = Complex64::new(1.0, 0.0) - s1 * w;
        let fpp = s2 * w * w;
        (f, fp, fpp)
    }
}

/// Exterior sampling grid for the Becker norm.
#[derive(Clone, Debug, PartialEq)]
pub struct BeckerGrid {
    pub radii: Vec<f64>,
    pub angles: usize,
}

impl BeckerGrid {
    /// Radii `1 + 2^{-j}` for `j = 1..=14` plus `{2, 4, 8}`, 512 angles.
    pub fn canonical() -> Self {
        let mut radii: Vec<f64> = (1..=14).rev().map(|j| 1.0 + 0.5f64.powi(j)).collect();
        radii.extend([2.0, 4.0, 8.0]);
        Self { radii, angles: 512 }
    }
}

/// `sup (|z|² - 1) |z F''(z)/F'(z)|` over an exterior grid.
pub fn becker_norm(f: &LaurentTail, grid: &BeckerGrid) -> Result<f64> {
    if grid.radii.is_empty() || grid.angles == 0 {
        return usage("becker_norm: empty grid");
    }
    if let Some(r) = grid.radii.iter().find(|&&r| r <= 1.0) {
        return usage(format!("becker_norm: grid radius {r} is not outside the unit circle"));
    }
    let scale = 1.0
        + f.tail
            .iter()
            .enumerate()
            .map(|(i, b)| (i + 1) as f64 * b.norm())
            .sum::<f64>();
    let mut best = 0.0f64;
    for &r in &grid.radii {
        for j in 0..grid.angles {
            let z = Complex64::from_polar(r, 2.0 * PI * j as f64 / grid.angles as f64);
            let (_, fp, fpp) = f.eval_derivatives(z);
            if fp.norm() <= 1e-13 * scale {
                return Err(GftError::Singularity {
                    at: z,
                    what: "F' vanishes on the Becker grid".into(),
                });
            }
            best = best.max((r * r - 1.0) * (z * fpp / fp).norm());
        }
    }
    Ok(best)
}

/// Solves `S_w = φ` by the linearization `u'' + (φ/2) u = 0`, `w = u_1/u_2`,
/// with `u_1(0) = 0, u_1'(0) = 1, u_2(0) = 1, u_2'(0) = 0`. The solution is
/// normalized by `w(0) = 0, w'(0) = 1, w''(0) = 0` and has order `M + 3` for
/// `φ` of order `M`.
pub fn solve_schwarzian(phi: &QuadDifferential) -> Result<TruncatedSeries> {
    let m = phi.phi().order();
    let n = m + 3;
    let solve = |u0: f64, u1: f64| {
        let mut u = vec![Complex64::new(0.0, 0.0); n + 1];
        u[0] = Complex64::new(u0, 0.0);
        u[1] = Complex64::new(u1, 0.0);
        for k in 0..=n - 2 {
            let s: Complex64 = (0..=k.min(m)).map(|j| phi.phi().coeff(j) * u[k - j]).sum();
            u[k + 2] = -s * 0.5 / ((k + 2) * (k + 1)) as f64;
        }
        TruncatedSeries::new(u).expect("order >= 4")
    };
    let num = solve(0.0, 1.0);
    let den = solve(1.0, 0.0);
    num.mul(&den.reciprocal()?)
}

/// Post-composes a normalized `w` with the Möbius map `ζ ↦ ζ/(1 + cζ)`,
/// `c = a_2(w) - a2`, which fixes the normalization and sets the second
/// coefficient to `a2`. The Schwarzian is unchanged.
pub fn with_second_coefficient(w: &TruncatedSeries, a2: Complex64) -> Result<TruncatedSeries> {
    w.check_normalized("with_second_coefficient")?;
    let c = w.coeff(2) - a2;
    let den = w.scale(c).add(&TruncatedSeries::constant(Complex64::new(1.0, 0.0), w.order()))?;
    w.mul(&den.reciprocal()?)
}

/// Teichmüller distance `½ artanh k` from the origin to a point of
/// extremal dilatation `k`.
pub fn tau_from_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return domain(format!("tau_from_k: dilatation {k} outside [0, 1)"));
    }
    Ok(0.5 * k.atanh())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn schwarzian_of_koebe() {
        // Oracle: S of z/(1-z)^2 is -6/(1-z^2)^2 = -6 sum (j+1) z^{2j}.
        let s = schwarzian(&TruncatedSeries::koebe(32)).unwrap().into_series();
        assert_eq!(s.order(), 29);
        for n in 0..=29 {
            let expected = if n % 2 == 0 { -6.0 * (n / 2 + 1) as f64 } else { 0.0 };
            assert!((s.coeff(n) - c(expected)).norm() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn schwarzian_annihilates_mobius() {
        let n = 32;
        // (az+b)/(cz+d) normalized at 0: z/(1 - λ z)
        for lambda in [c(1.0), Complex64::new(0.3, -0.8), c(-0.5)] {
            let f = TruncatedSeries::from_fn(n, |k| if k == 0 { c(0.0) } else { lambda.powu(k as u32 - 1) });
            assert!(schwarzian(&f).unwrap().phi().max_abs() < 1e-10);
        }
        assert!(schwarzian(&TruncatedSeries::identity(8)).unwrap().phi().max_abs() == 0.0);
    }

    #[test]
    fn schwarzian_errors() {
        let flat = TruncatedSeries::from_real(&[0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(schwarzian(&flat), Err(GftError::Domain(_))));
        assert!(matches!(
            schwarzian(&TruncatedSeries::identity(3)),
            Err(GftError::Usage(_))
        ));
    }

    #[test]
    fn chain_rule_with_identity_inner() {
        let f1 = TruncatedSeries::koebe(16);
        let r = chain_rule_residual(&f1, &TruncatedSeries::identity(16)).unwrap();
        assert!(r < 1e-12);
        let r = chain_rule_residual(&f1, &TruncatedSeries::geometric(16)).unwrap();
        assert!(r < 1e-9);
    }

    #[test]
    fn bnorm_examples() {
        let grid = GridSpec::canonical();
        let zero = QuadDifferential::new(TruncatedSeries::zeros(8));
        assert_eq!(bnorm(&zero, &grid).unwrap(), 0.0);
        let constant = QuadDifferential::new(TruncatedSeries::constant(Complex64::new(0.3, 0.4), 8));
        let sup = weighted_sup(constant.phi(), &grid).unwrap();
        assert!((sup.value - 0.5).abs() < 1e-15);
        assert_eq!(sup.rho, 0.0);
        let empty = GridSpec {
            radii_count: 0,
            angles: 10,
            refine: false,
        };
        assert!(bnorm(&zero, &empty).is_err());
    }

    #[test]
    fn bnorm_is_homogeneous() {
        let phi = TruncatedSeries::from_fn(6, |k| Complex64::new(k as f64 - 2.5, 0.5 * k as f64));
        let grid = GridSpec::canonical();
        let base = bnorm(&QuadDifferential::new(phi.clone()), &grid).unwrap();
        for lambda in [Complex64::new(0.0, 2.0), c(-0.25), Complex64::new(3.0, 4.0)] {
            let scaled = bnorm(&QuadDifferential::new(phi.scale(lambda)), &grid).unwrap();
            assert!((scaled - lambda.norm() * base).abs() < 1e-12 * scaled.max(1.0));
        }
    }

    #[test]
    fn norm_cache_matches_canonical_bnorm() {
        let phi = TruncatedSeries::from_real(&[0.1, -0.2, 0.3, 0.0, 0.5]).unwrap();
        let q = QuadDifferential::new(phi).with_canonical_norm();
        let direct = bnorm_series(q.phi(), &GridSpec::canonical()).unwrap();
        assert_eq!(q.norm_cache(), Some(direct));
    }

    #[test]
    fn ahlfors_weill_examples() {
        let grid = GridSpec::canonical();
        let r = ahlfors_weill_admissible(&TruncatedSeries::identity(32), 0.5, &grid).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.computed["sup"], 0.0);
        let r = ahlfors_weill_admissible(&TruncatedSeries::koebe(32), 0.9, &grid).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!((r.computed["sup"] - 6.0).abs() < 1e-3);
        assert!(ahlfors_weill_admissible(&TruncatedSeries::koebe(32), 1.0, &grid).is_err());
        assert!(ahlfors_weill_admissible(&TruncatedSeries::koebe(32), -0.1, &grid).is_err());
    }

    #[test]
    fn becker_examples() {
        let grid = BeckerGrid::canonical();
        let translate = LaurentTail::new(c(0.7), vec![]);
        assert_eq!(becker_norm(&translate, &grid).unwrap(), 0.0);
        let inv_koebe = LaurentTail::inverted(&TruncatedSeries::koebe(12)).unwrap();
        assert_eq!(inv_koebe.b0, c(-2.0));
        assert!((inv_koebe.tail[0] - c(1.0)).norm() < 1e-15);
        assert!(inv_koebe.tail[1..].iter().all(|b| b.norm() < 1e-12));
        assert!((becker_norm(&inv_koebe, &grid).unwrap() - 2.0).abs() < 1e-3);
    }

    #[test]
    fn becker_matches_dense_brute_force() {
        // F = z + 0.1/z; brute force over a dense grid in the same radial range.
        let f = LaurentTail::new(c(0.0), vec![c(0.1)]);
        let grid = BeckerGrid::canonical();
        let computed = becker_norm(&f, &grid).unwrap();
        let mut brute = 0.0f64;
        for i in 1..=4000 {
            let r = 1.0 + 7.0 * i as f64 / 4000.0;
            for j in 0..720 {
                let z = Complex64::from_polar(r, 2.0 * PI * j as f64 / 720.0);
                let ratio = c(0.2) / (z * z - c(0.1));
                brute = brute.max((r * r - 1.0) * ratio.norm());
            }
        }
        assert!((computed - brute).abs() < 1e-9, "{computed} vs {brute}");
    }

    #[test]
    fn becker_singular_point_is_reported() {
        // F' = 1 - 4/z^2 vanishes at z = 2, which is on the grid.
        let f = LaurentTail::new(c(0.0), vec![c(4.0)]);
        match becker_norm(&f, &BeckerGrid::canonical()) {
            Err(GftError::Singularity { at, .. }) => assert!((at - c(2.0)).norm() < 1e-12),
            other => panic!("expected singularity, got {other:?}"),
        }
    }

    #[test]
    fn solve_examples() {
        let w = solve_schwarzian(&QuadDifferential::new(TruncatedSeries::zeros(5))).unwrap();
        assert_eq!(w, TruncatedSeries::identity(8));
        // S_Koebe is solved by z/(1+z^2), the Koebe function with a_2 moved to 0.
        let s = schwarzian(&TruncatedSeries::koebe(32)).unwrap();
        let w = solve_schwarzian(&s).unwrap();
        assert_eq!(w.order(), 32);
        for n in 0..=32 {
            let expected = if n % 2 == 1 {
                if (n / 2) % 2 == 0 { 1.0 } else { -1.0 }
            } else {
                0.0
            };
            assert!((w.coeff(n) - c(expected)).norm() < 1e-8, "n = {n}");
        }
        let k = with_second_coefficient(&w, c(2.0)).unwrap();
        assert!(k.max_diff(&TruncatedSeries::koebe(32)) < 1e-8);
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau_from_k(0.0).unwrap(), 0.0);
        assert!((tau_from_k(0.5f64.tanh()).unwrap() - 0.25).abs() < 1e-15);
        assert!(tau_from_k(0.3).unwrap() < tau_from_k(0.5).unwrap());
        assert!(tau_from_k(1.0).is_err());
    }
}
