//! Grunsky coefficients of normalized univalent-candidate maps, the norm of
//! the weighted Grunsky quadratic form, and the derived sequence norm and
//! inverse-univalence radius.
//!
//! For `f(z) = z + a_2 z^2 + ...` the kernel
//! `log((f(z) - f(ζ))/(z - ζ)) = sum_{m,n >= 0} L_mn z^m ζ^n`
//! contains pure powers (`m = 0` or `n = 0`) besides the mixed block. The
//! Grunsky matrix is the mixed block `c_mn = L_mn`, `m, n >= 1`; the pure
//! terms are kept alongside for inspection.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::config::MAX_GRUNSKY_ORDER;
use crate::error::{usage, GftError, Result};
use crate::report::{ClaimReport, Verdict};
use crate::series::TruncatedSeries;

/// Mixed block `c_mn`, `1 <= m, n <= N`, of the Grunsky expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct GrunskyMatrix {
    order: usize,
    /// Row-major `N x N`, entry `(m-1, n-1)` holds `c_mn`.
    c: Vec<Complex64>,
    pure_z: Vec<Complex64>,
    pure_zeta: Vec<Complex64>,
}

/// `B_mn = sqrt(mn) c_mn`, the matrix of the Grunsky quadratic form.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedForm {
    order: usize,
    b: Vec<Complex64>,
}

impl GrunskyMatrix {
    /// Builds a matrix from explicit coefficients (row-major, `N x N`),
    /// symmetrizing them. Pure terms are set to zero.
    pub fn from_coefficients(order: usize, c: Vec<Complex64>) -> Result<Self> {
        if c.len() != order * order {
            return usage(format!(
                "expected {} coefficients for order {order}, got {}",
                order * order,
                c.len()
            ));
        }
        let mut sym = c.clone();
        for i in 0..order {
            for j in 0..i {
                let v = (c[i * order + j] + c[j * order + i]) * 0.5;
                sym[i * order + j] = v;
                sym[j * order + i] = v;
            }
        }
        Ok(Self {
            order,
            c: sym,
            pure_z: vec![Complex64::new(0.0, 0.0); order],
            pure_zeta: vec![Complex64::new(0.0, 0.0); order],
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `c_mn` with 1-based indices.
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.c[(m - 1) * self.order + (n - 1)]
    }

    /// Coefficients of the pure `z^m` terms, `m = 1..=N`.
    pub fn pure_z(&self) -> &[Complex64] {
        &self.pure_z
    }

    /// Coefficients of the pure `ζ^n` terms; equal to [`Self::pure_z`].
    pub fn pure_zeta(&self) -> &[Complex64] {
        &self.pure_zeta
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.order;
        (0..n).all(|i| (0..i).all(|j| self.c[i * n + j] == self.c[j * n + i]))
    }

    pub fn weighted_form(&self) -> WeightedForm {
        let n = self.order;
        let b = (0..n * n)
            .map(|idx| {
                let (m, k) = (idx / n + 1, idx % n + 1);
                self.c[idx] * ((m * k) as f64).sqrt()
            })
            .collect();
        WeightedForm { order: n, b }
    }

    /// `(max sqrt(mn)|c_mn|, m, n)`; zero at `(1, 1)` for the zero matrix.
    pub fn max_weighted_coefficient(&self) -> (f64, usize, usize) {
        let form = self.weighted_form();
        let mut best = (0.0, 1, 1);
        for m in 1..=self.order {
            for n in 1..=self.order {
                let v = form.get(m, n).norm();
                if v > best.0 {
                    best = (v, m, n);
                }
            }
        }
        best
    }

    /// CSV with header `m,n,re,im`, one row per entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,n,re,im\n");
        for m in 1..=self.order {
            for n in 1..=self.order {
                let c = self.get(m, n);
                writeln!(out, "{m},{n},{},{}", c.re, c.im).expect("String write");
            }
        }
        out
    }
}

impl WeightedForm {
    pub fn from_matrix(order: usize, b: Vec<Complex64>) -> Result<Self> {
        if b.len() != order * order {
            return usage("weighted form: wrong number of entries");
        }
        Ok(Self { order, b })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.b[(m - 1) * self.order + (n - 1)]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.b
    }

    /// `D_r B D_r` with `D_r = diag(r^m)`: entries `r^{m+n} B_mn`.
    pub fn scaled(&self, r: f64) -> Self {
        let n = self.order;
        let b = (0..n * n)
            .map(|idx| self.b[idx] * r.powi((idx / n + idx % n + 2) as i32))
            .collect();
        Self { order: n, b }
    }

    /// `|x^T B x|` for a (not necessarily unit) vector `x`.
    pub fn quadratic_form(&self, x: &[Complex64]) -> Complex64 {
        let n = self.order;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let row: Complex64 = (0..n).map(|j| self.b[i * n + j] * x[j]).sum();
            acc += x[i] * row;
        }
        acc
    }
}

/// Grunsky coefficients of a normalized `f` up to `N`. Requires
/// `f.order() >= 2N + 1`, since `c_NN` depends on `a_{2N+1}`.
pub fn grunsky_matrix(f: &TruncatedSeries, order: usize) -> Result<GrunskyMatrix> {
    if order == 0 || order > MAX_GRUNSKY_ORDER {
        return usage(format!(
            "Grunsky order must be in 1..={MAX_GRUNSKY_ORDER}, got {order}"
        ));
    }
    let needed = 2 * order + 1;
    if f.order() < needed {
        return usage(format!(
            "Grunsky order {order} needs a series of order >= {needed}, got {}",
            f.order()
        ));
    }
    let kernel = f.truncate(needed)?.divided_difference()?;
    debug_assert_eq!(kernel.order(), order);
    let log = kernel.log()?;
    let n = order;
    let mut c = vec![Complex64::new(0.0, 0.0); n * n];
    for m in 1..=n {
        for k in 1..=n {
            c[(m - 1) * n + (k - 1)] = log.get(m, k);
        }
    }
    Ok(GrunskyMatrix {
        order: n,
        c,
        pure_z: (1..=n).map(|m| log.get(m, 0)).collect(),
        pure_zeta: (1..=n).map(|m| log.get(0, m)).collect(),
    })
}

/// Grunsky coefficients of the compositional inverse `f^{-1}`.
pub fn grunsky_of_inverse(f: &TruncatedSeries, order: usize) -> Result<GrunskyMatrix> {
    let needed = 2 * order + 1;
    if f.order() < needed {
        return usage(format!(
            "Grunsky order {order} needs a series of order >= {needed}, got {}",
            f.order()
        ));
    }
    let inverse = f.truncate(needed)?.lagrange_invert()?;
    grunsky_matrix(&inverse, order)
}

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 20_000;
/// The iteration runs on `(B^H B)^(2^GRAM_SQUARINGS)`, which shares its top
/// eigenvector with the Gram matrix and separates it faster.
const GRAM_SQUARINGS: u32 = 3;

fn mat_mul(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

fn mat_vec(a: &[Complex64], x: &[Complex64], n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
        .collect()
}

fn vec_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value of the square matrix `b` (row-major, `n x n`) by
/// power iteration on its Gram matrix, stopped when the eigen-residual
/// `|Gx - ρx| <= 1e-10 ρ`.
pub fn largest_singular_value(b: &[Complex64], n: usize) -> Result<f64> {
    if b.iter().all(|v| v.norm_sqr() == 0.0) {
        return Ok(0.0);
    }
    // G = B^H B
    let mut gram = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            gram[i * n + j] = (0..n).map(|k| b[k * n + i].conj() * b[k * n + j]).sum();
        }
    }
    let mut accel = gram.clone();
    for _ in 0..GRAM_SQUARINGS {
        accel = mat_mul(&accel, &accel, n);
        let scale = accel.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale > 0.0 {
            accel.iter_mut().for_each(|v| *v /= scale);
        }
    }
    // Deterministic start with no special alignment to coordinate axes.
    let mut x: Vec<Complex64> = (0..n)
        .map(|i| Complex64::from_polar(1.0 + 1.0 / (i + 1) as f64, 0.7 * i as f64))
        .collect();
    let norm = vec_norm(&x);
    x.iter_mut().for_each(|v| *v /= norm);

    let mut rayleigh = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_MAX_ITERS {
        let gx = mat_vec(&gram, &x, n);
        rayleigh = x.iter().zip(&gx).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        residual = vec_norm(
            &gx.iter()
                .zip(&x)
                .map(|(g, v)| g - v * rayleigh)
                .collect::<Vec<_>>(),
        );
        if residual <= POWER_TOL * rayleigh {
            return Ok(rayleigh.max(0.0).sqrt());
        }
        let mut next = mat_vec(&accel, &x, n);
        let norm = vec_norm(&next);
        if norm == 0.0 {
            // x was annihilated by the accelerated operator; fall back to G.
            next = gx;
        }
        let norm = vec_norm(&next);
        next.iter_mut().for_each(|v| *v /= norm);
        x = next;
    }
    Err(GftError::Numerical(format!(
        "power iteration did not converge after {POWER_MAX_ITERS} iterations \
         (order {n}, Rayleigh quotient {rayleigh:e}, residual {residual:e})"
    )))
}

/// Supremum of `|sum B_mn x_m x_n|` over unit `x`, i.e. the largest
/// singular value of the complex symmetric `B`.
pub fn grunsky_form_norm(g: &GrunskyMatrix) -> Result<f64> {
    weighted_form_norm(&g.weighted_form())
}

pub fn weighted_form_norm(form: &WeightedForm) -> Result<f64> {
    largest_singular_value(&form.b, form.order)
}

/// `sup sqrt(mn)|c_mn| + ||B||`.
pub fn seq_norm(g: &GrunskyMatrix) -> Result<f64> {
    Ok(g.max_weighted_coefficient().0 + grunsky_form_norm(g)?)
}

/// Checks `|c_mn| <= 1/sqrt(mn)` for every computed entry.
pub fn coefficient_bound_check(g: &GrunskyMatrix) -> ClaimReport {
    const TOL: f64 = 1e-9;
    let (max, m, n) = g.max_weighted_coefficient();
    let mut report = ClaimReport::new(
        "grunsky-coefficient-bound",
        "|c_mn| <= 1/sqrt(mn) for all m, n (consequence of the Grunsky inequality)",
        TOL,
    )
    .input("order", g.order());
    report.record("max_weighted_coefficient", max);
    report.record("argmax_m", m as f64);
    report.record("argmax_n", n as f64);
    report.require(Verdict::from_bool(max <= 1.0 + TOL));
    report
}

/// Largest `r <= 1` with `||D_r B D_r|| <= 1`, by 20 bisection steps;
/// 1 when the form norm itself is at most 1.
pub fn scaled_radius(g: &GrunskyMatrix) -> Result<f64> {
    let form = g.weighted_form();
    if weighted_form_norm(&form)? <= 1.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        if weighted_form_norm(&form.scaled(mid))? <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Summary numbers for a Grunsky matrix, as emitted by the CLI.
#[derive(Clone, Debug, Serialize)]
pub struct GrunskySummary {
    pub order: usize,
    pub form_norm: f64,
    pub max_weighted_coefficient: f64,
    pub seq_norm: f64,
    pub scaled_radius: f64,
    pub symmetric: bool,
}

impl GrunskySummary {
    pub fn of(g: &GrunskyMatrix) -> Result<Self> {
        let form_norm = grunsky_form_norm(g)?;
        let max = g.max_weighted_coefficient().0;
        Ok(Self {
            order: g.order(),
            form_norm,
            max_weighted_coefficient: max,
            seq_norm: max + form_norm,
            scaled_radius: scaled_radius(g)?,
            symmetric: g.is_symmetric(),
        })
    }
}
