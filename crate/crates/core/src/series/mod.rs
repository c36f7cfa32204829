//! Truncated complex power series.
//!
//! A [`TruncatedSeries`] of order `N` stores the Taylor coefficients
//! `c_0..=c_N` of a function at the origin. Every operation returns a result
//! that is exact to order `N` given exact input coefficients; nothing beyond
//! `N` is ever stored.

mod bivariate;
pub mod io;

pub use bivariate::BivariateTruncated;

use num_complex::Complex64;

use crate::error::{domain, usage, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Coefficients `c_0..=c_N` of a power series truncated at order `N >= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<Complex64>,
}

/// Binary/unary arithmetic selector for [`series_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Mul,
    Derivative,
}

/// Dispatches one of the elementary series operations. `b` is ignored by
/// [`ArithOp::Derivative`].
pub fn series_arith(
    a: &TruncatedSeries,
    b: &TruncatedSeries,
    which: ArithOp,
) -> Result<TruncatedSeries> {
    match which {
        ArithOp::Add => a.add(b),
        ArithOp::Mul => a.mul(b),
        ArithOp::Derivative => a.derivative(),
    }
}

impl TruncatedSeries {
    /// Builds a series from `c_0..=c_N`; at least two coefficients are required.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return usage(format!(
                "a truncated series needs order >= 1, got {} coefficient(s)",
                coeffs.len()
            ));
        }
        Ok(Self { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// Series whose `n`-th coefficient is `f(n)`.
    pub fn from_fn(order: usize, f: impl FnMut(usize) -> Complex64) -> Self {
        let order = order.max(1);
        Self {
            coeffs: (0..=order).map(f).collect(),
        }
    }

    pub fn zeros(order: usize) -> Self {
        Self::from_fn(order, |_| ZERO)
    }

    pub fn constant(value: Complex64, order: usize) -> Self {
        Self::from_fn(order, |n| if n == 0 { value } else { ZERO })
    }

    /// The identity map `z`.
    pub fn identity(order: usize) -> Self {
        Self::from_fn(order, |n| if n == 1 { ONE } else { ZERO })
    }

    /// The Koebe function `z/(1-z)^2`, coefficients `a_n = n`.
    pub fn koebe(order: usize) -> Self {
        Self::from_fn(order, |n| Complex64::new(n as f64, 0.0))
    }

    /// The Möbius map `z/(1-z)`, coefficients `a_n = 1` for `n >= 1`.
    pub fn geometric(order: usize) -> Self {
        Self::from_fn(order, |n| if n == 0 { ZERO } else { ONE })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of `z^n`; zero beyond the truncation order.
    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or(ZERO)
    }

    /// Restricts to a lower order.
    pub fn truncate(&self, order: usize) -> Result<Self> {
        if order == 0 || order > self.order() {
            return usage(format!(
                "cannot truncate a series of order {} to order {order}",
                self.order()
            ));
        }
        Ok(Self {
            coeffs: self.coeffs[..=order].to_vec(),
        })
    }

    /// Zero-pads (or truncates) to exactly `order`. Padding asserts the
    /// missing coefficients are zero, so callers use it only for polynomials.
    pub fn resized(&self, order: usize) -> Self {
        Self::from_fn(order, |n| self.coeff(n))
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficientwise modulus of `self - other` over the common order.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn check_orders(&self, other: &Self, op: &str) -> Result<()> {
        if self.order() != other.order() {
            return usage(format!(
                "{op}: mismatched orders {} and {}",
                self.order(),
                other.order()
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_orders(other, "add")?;
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_orders(other, "sub")?;
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Cauchy product truncated to the common order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_orders(other, "mul")?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let n = self.order();
        let mut out = vec![ZERO; n + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for (j, &b) in other.coeffs[..=n - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self { coeffs: out }
    }

    /// Termwise derivative. The result has order `N - 1` because the
    /// coefficient of `z^{N-1}` is the last one the input determines.
    pub fn derivative(&self) -> Result<Self> {
        if self.order() < 2 {
            return usage("derivative needs a series of order >= 2");
        }
        Ok(Self {
            coeffs: (1..=self.order())
                .map(|n| self.coeffs[n] * n as f64)
                .collect(),
        })
    }

    /// Coefficients of `outer(inner(z))` to the common order.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        self.check_orders(inner, "compose")?;
        if inner.coeffs[0] != ZERO {
            return domain(format!(
                "compose: inner series must vanish at 0, got {}",
                inner.coeffs[0]
            ));
        }
        let n = self.order();
        let mut acc = Self::constant(self.coeffs[n], n);
        for i in (0..n).rev() {
            acc = acc.mul_unchecked(inner);
            acc.coeffs[0] += self.coeffs[i];
        }
        Ok(acc)
    }

    /// Multiplicative inverse; requires `c_0 != 0`.
    pub fn reciprocal(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0 == ZERO {
            return domain("reciprocal of a series with zero constant term");
        }
        let inv0 = a0.inv();
        let n = self.order();
        let mut out = vec![ZERO; n + 1];
        out[0] = inv0;
        for k in 1..=n {
            let s: Complex64 = (1..=k).map(|j| self.coeffs[j] * out[k - j]).sum();
            out[k] = -s * inv0;
        }
        Ok(Self { coeffs: out })
    }

    /// Principal logarithm of a series with `c_0 = 1`, summed as
    /// `log(1 + u) = u - u^2/2 + ...` with `u = self - 1`.
    pub fn log(&self) -> Result<Self> {
        if self.coeffs[0] != ONE {
            return domain(format!(
                "log requires constant term 1, got {}",
                self.coeffs[0]
            ));
        }
        let mut u = self.clone();
        u.coeffs[0] = ZERO;
        let n = self.order();
        let alt = |j: usize| {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            Complex64::new(sign / j as f64, 0.0)
        };
        Ok(u.horner_power_sum(n, alt))
    }

    /// `exp(u)` for a series with `c_0 = 0`.
    pub fn exp(&self) -> Result<Self> {
        if self.coeffs[0] != ZERO {
            return domain("exp is only provided for series with zero constant term");
        }
        let n = self.order();
        let mut inv_fact = vec![ONE; n + 1];
        for j in 1..=n {
            inv_fact[j] = inv_fact[j - 1] / j as f64;
        }
        let mut out = self.horner_power_sum(n, |j| inv_fact[j]);
        out.coeffs[0] += ONE;
        Ok(out)
    }

    /// `sum_{j=1..terms} weight(j) * self^j` by Horner's rule; `self(0) = 0`.
    fn horner_power_sum(&self, terms: usize, weight: impl Fn(usize) -> Complex64) -> Self {
        let n = self.order();
        let mut acc = Self::constant(weight(terms), n);
        for j in (1..terms).rev() {
            acc = acc.mul_unchecked(self);
            acc.coeffs[0] += weight(j);
        }
        acc.mul_unchecked(self)
    }

    /// Compositional inverse of a normalized map `f = z + a_2 z^2 + ...`.
    ///
    /// Solves `f(g(w)) = w` order by order: the `w^n` coefficient of
    /// `f(g)` depends on `g_n` only through the linear term, so
    /// `g_n = -[w^n] sum_{j>=2} a_j g^j`. Powers of `g` are kept in a
    /// triangular table, giving `O(N^3)` work.
    pub fn lagrange_invert(&self) -> Result<Self> {
        self.check_normalized("lagrange_invert")?;
        let n = self.order();
        // pow[j][m] = [w^m] g^j, only m >= j is ever nonzero.
        let mut pow = vec![vec![ZERO; n + 1]; n + 1];
        let mut g = vec![ZERO; n + 1];
        g[1] = ONE;
        pow[1][1] = ONE;
        for m in 2..=n {
            for j in 2..=m {
                // [w^m] g^j = sum_i g_i [w^{m-i}] g^{j-1}, with g_i for i <= m-j+1.
                let s: Complex64 = (1..=m - j + 1)
                    .map(|i| g[i] * pow[j - 1][m - i])
                    .sum();
                pow[j][m] = s;
            }
            let c: Complex64 = (2..=m).map(|j| self.coeffs[j] * pow[j][m]).sum();
            g[m] = -c;
            pow[1][m] = g[m];
        }
        Ok(Self { coeffs: g })
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Value and first derivative at `z` in one Horner pass.
    pub fn evaluate_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Kernel `(f(z) - f(ζ))/(z - ζ) = sum d_pq z^p ζ^q` with `d_pq = a_{p+q+1}`.
    /// The box order is `(N-1)/2`, the largest for which every entry is
    /// determined by the input coefficients.
    pub fn divided_difference(&self) -> Result<BivariateTruncated> {
        self.check_normalized("divided_difference")?;
        let m = (self.order() - 1) / 2;
        Ok(BivariateTruncated::from_fn(m, |p, q| self.coeffs[p + q + 1]))
    }

    pub(crate) fn check_normalized(&self, op: &str) -> Result<()> {
        if self.coeffs[0] != ZERO || self.coeffs[1] != ONE {
            return domain(format!(
                "{op}: expected f(0) = 0 and f'(0) = 1, got f(0) = {}, f'(0) = {}",
                self.coeffs[0], self.coeffs[1]
            ));
        }
        Ok(())
    }
}
