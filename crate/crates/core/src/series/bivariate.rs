use num_complex::Complex64;

use crate::error::{domain, usage, Result};

/// Box-truncated bivariate series `sum_{p,q <= N} d_pq z^p ζ^q`.
///
/// Products of box-truncated series are exact on the box, since every
/// contribution to `(p, q)` comes from indices componentwise below it.
#[derive(Clone, Debug, PartialEq)]
pub struct BivariateTruncated {
    order: usize,
    coeffs: Vec<Complex64>,
}

impl BivariateTruncated {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            coeffs: vec![Complex64::new(0.0, 0.0); (order + 1) * (order + 1)],
        }
    }

    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut out = Self::zeros(order);
        for p in 0..=order {
            for q in 0..=order {
                out.coeffs[p * (order + 1) + q] = f(p, q);
            }
        }
        out
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize) -> Complex64 {
        self.coeffs[p * (self.order + 1) + q]
    }

    #[inline]
    fn set(&mut self, p: usize, q: usize, v: Complex64) {
        self.coeffs[p * (self.order + 1) + q] = v;
    }

    pub fn is_symmetric(&self) -> bool {
        (0..=self.order).all(|p| (0..p).all(|q| self.get(p, q) == self.get(q, p)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.order != other.order {
            return usage(format!(
                "bivariate mul: mismatched orders {} and {}",
                self.order, other.order
            ));
        }
        let n = self.order;
        let mut out = Self::zeros(n);
        for i in 0..=n {
            for j in 0..=n {
                let a = self.get(i, j);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for p in i..=n {
                    for q in j..=n {
                        let idx = p * (n + 1) + q;
                        out.coeffs[idx] += a * other.get(p - i, q - j);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Principal logarithm of a series with constant term 1.
    ///
    /// Uses the Euler-operator identity `E(D) = D · E(log D)` with
    /// `E = z∂_z + ζ∂_ζ`, which reads coefficientwise
    /// `(p+q) L_pq = (p+q) d_pq - sum (i+j) L_ij d_{p-i,q-j}` over
    /// `(0,0) < (i,j) < (p,q)`. Unlike the power series of `log(1+u)` this
    /// never forms large intermediate powers, so kernels with growing
    /// coefficients (Koebe: `d_pq = p+q+1`) keep full precision.
    ///
    /// Symmetric input yields an exactly symmetric result: only `p <= q`
    /// is computed and mirrored.
    pub fn log(&self) -> Result<Self> {
        let one = Complex64::new(1.0, 0.0);
        if self.get(0, 0) != one {
            return domain(format!(
                "bivariate log requires constant term 1, got {}",
                self.get(0, 0)
            ));
        }
        let n = self.order;
        let symmetric = self.is_symmetric();
        let mut out = Self::zeros(n);
        for p in 0..=n {
            let q_start = if symmetric { p } else { 0 };
            for q in q_start..=n {
                if p + q == 0 {
                    continue;
                }
                let mut acc = self.get(p, q) * (p + q) as f64;
                for i in 0..=p {
                    for j in 0..=q {
                        if (i == 0 && j == 0) || (i == p && j == q) {
                            continue;
                        }
                        acc -= out.get(i, j) * ((i + j) as f64) * self.get(p - i, q - j);
                    }
                }
                let v = acc / (p + q) as f64;
                out.set(p, q, v);
                if symmetric {
                    out.set(q, p, v);
                }
            }
        }
        Ok(out)
    }
}
