//! Sparse multivariate polynomials with complex coefficients in variables
//! indexed by coefficient position (`x_2, x_3, ...`).

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::{GftError, Result};

/// Sorted `(variable, power)` pairs with positive powers.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(usize, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Self(Vec::new())
    }

    pub fn var(n: usize) -> Self {
        Self(vec![(n, 1)])
    }

    /// Builds from arbitrary pairs, merging repeats and dropping zero powers.
    pub fn from_powers(pairs: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut map = BTreeMap::new();
        for (n, p) in pairs {
            *map.entry(n).or_insert(0) += p;
        }
        Self(map.into_iter().filter(|&(_, p)| p > 0).collect())
    }

    pub fn powers(&self) -> &[(usize, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, p)| p).sum()
    }

    pub fn power_of(&self, n: usize) -> u32 {
        self.0.iter().find(|&&(m, _)| m == n).map_or(0, |&(_, p)| p)
    }

    fn mul(&self, other: &Self) -> Self {
        Self::from_powers(self.0.iter().chain(&other.0).copied())
    }

    fn without(&self, n: usize) -> Self {
        Self(self.0.iter().copied().filter(|&(m, _)| m != n).collect())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<Monomial, Complex64>,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: Complex64) -> Self {
        Self::default().plus_term(Monomial::one(), value)
    }

    pub fn var(n: usize) -> Self {
        Self::default().plus_term(Monomial::var(n), c(1.0))
    }

    /// Adds `coeff · mono`, dropping the term if it cancels exactly.
    pub fn plus_term(mut self, mono: Monomial, coeff: Complex64) -> Self {
        self.add_term(mono, coeff);
        self
    }

    fn add_term(&mut self, mono: Monomial, coeff: Complex64) {
        if coeff == c(0.0) {
            return;
        }
        let entry = self.terms.entry(mono.clone()).or_insert(c(0.0));
        *entry += coeff;
        if *entry == c(0.0) {
            self.terms.remove(&mono);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mono: &Monomial) -> Complex64 {
        self.terms.get(mono).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.degree() == 0)
    }

    /// Variables that occur, ascending.
    pub fn variables(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .terms
            .keys()
            .flat_map(|m| m.powers().iter().map(|&(n, _)| n))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, &v) in &other.terms {
            out.add_term(m.clone(), v);
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = Self::zero();
        for (m, &v) in &self.terms {
            out.add_term(m.clone(), v * factor);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(c(-1.0)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (m1, &v1) in &self.terms {
            for (m2, &v2) in &other.terms {
                out.add_term(m1.mul(m2), v1 * v2);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::constant(c(1.0)), |acc, _| acc.mul(self))
    }

    /// `∂/∂x_n`.
    pub fn partial(&self, n: usize) -> Self {
        let mut out = Self::zero();
        for (m, &v) in &self.terms {
            let p = m.power_of(n);
            if p > 0 {
                let rest = m.without(n);
                let lowered = Monomial::from_powers(rest.powers().iter().copied().chain([(n, p - 1)]));
                out.add_term(lowered, v * p as f64);
            }
        }
        out
    }

    /// Value at `x_n = value(n)`.
    pub fn eval(&self, value: impl Fn(usize) -> Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|(m, &v)| {
                m.powers()
                    .iter()
                    .fold(v, |acc, &(n, p)| acc * value(n).powu(p))
            })
            .sum()
    }

    /// Replaces every `x_n` by `subst(n)`.
    pub fn substitute(&self, subst: impl Fn(usize) -> Poly) -> Self {
        let mut cache: BTreeMap<(usize, u32), Poly> = BTreeMap::new();
        let mut out = Self::zero();
        for (m, &v) in &self.terms {
            let mut term = Self::constant(v);
            for &(n, p) in m.powers() {
                let factor = cache.entry((n, p)).or_insert_with(|| subst(n).pow(p));
                term = term.mul(factor);
            }
            out = out.add(&term);
        }
        out
    }

    /// Lines `re im : n^p ...`, one per term.
    pub fn to_text(&self) -> String {
        self.terms
            .iter()
            .map(|(m, v)| {
                let mono: Vec<String> = m.powers().iter().map(|(n, p)| format!("{n}^{p}")).collect();
                format!("{} {} : {}\n", v.re, v.im, mono.join(" ")).replace(" \n", "\n")
            })
            .collect()
    }

    /// Parses [`Poly::to_text`] output. Blank lines and `#` comments are
    /// skipped; a bare `n` means `n^1`; repeated terms are summed.
    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |lineno: usize, msg: &str| GftError::Parse(format!("functional line {}: {msg}", lineno + 1));
        let mut out = Self::zero();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (coeff, mono) = line
                .split_once(':')
                .ok_or_else(|| bad(lineno, "expected `re im : n^p ...`"))?;
            let parts: Vec<&str> = coeff.split_whitespace().collect();
            let [re, im] = parts[..] else {
                return Err(bad(lineno, "coefficient must be two numbers `re im`"));
            };
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(lineno, &format!("{s:?}: {e}")));
            let value = Complex64::new(num(re)?, num(im)?);
            let mut pairs = Vec::new();
            for tok in mono.split_whitespace() {
                let (n, p) = tok.split_once('^').unwrap_or((tok, "1"));
                let n: usize = n.parse().map_err(|_| bad(lineno, &format!("bad index in {tok:?}")))?;
                let p: u32 = p.parse().map_err(|_| bad(lineno, &format!("bad power in {tok:?}")))?;
                pairs.push((n, p));
            }
            out.add_term(Monomial::from_powers(pairs), value);
        }
        Ok(out)
    }

    /// Human-readable form with variables named `{letter}{n}`.
    pub fn display_with(&self, letter: char) -> String {
        if self.is_zero() {
            return "0".to_owned();
        }
        let mut s = String::new();
        for (i, (m, v)) in self.terms.iter().rev().enumerate() {
            let (sign, mag) = if v.im == 0.0 && v.re < 0.0 {
                ("-", c(-v.re))
            } else {
                ("+", *v)
            };
            if i > 0 {
                s.push_str(&format!(" {sign} "));
            } else if sign == "-" {
                s.push('-');
            }
            let vars: Vec<String> = m
                .powers()
                .iter()
                .map(|&(n, p)| if p == 1 { format!("{letter}{n}") } else { format!("{letter}{n}^{p}") })
                .collect();
            let coeff = if mag.im == 0.0 {
                format!("{}", mag.re)
            } else {
                format!("({}{:+}i)", mag.re, mag.im)
            };
            match (coeff == "1", vars.is_empty()) {
                (true, false) => s.push_str(&vars.join(" ")),
                (_, true) => s.push_str(&coeff),
                (false, false) => s.push_str(&format!("{coeff} {}", vars.join(" "))),
            }
        }
        s
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with('x'))
    }
}

impl Serialize for Poly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        struct Term<'a> {
            coeff: [f64; 2],
            powers: &'a [(usize, u32)],
        }
        let mut seq = serializer.serialize_seq(Some(self.terms.len()))?;
        for (m, v) in &self.terms {
            seq.serialize_element(&Term {
                coeff: [v.re, v.im],
                powers: m.powers(),
            })?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize) -> Poly {
        Poly::var(n)
    }

    #[test]
    fn arithmetic_and_calculus() {
        // (x2 + x3)^2 - x2^2 = 2 x2 x3 + x3^2
        let p = x(2).add(&x(3)).pow(2).sub(&x(2).pow(2));
        assert_eq!(p.variables(), vec![2, 3]);
        assert_eq!(p.coeff(&Monomial::from_powers([(2, 1), (3, 1)])), c(2.0));
        assert_eq!(p.coeff(&Monomial::from_powers([(3, 2)])), c(1.0));
        assert_eq!(p.coeff(&Monomial::from_powers([(2, 2)])), c(0.0));
        assert_eq!(p.partial(3), x(2).scale(c(2.0)).add(&x(3).scale(c(2.0))));
        assert!(p.partial(4).is_zero());
        let v = p.eval(|n| c(n as f64));
        assert_eq!(v, c(2.0 * 6.0 + 9.0));
        // substitute x3 -> x2 + 1
        let q = p.substitute(|n| if n == 3 { x(2).add(&Poly::constant(c(1.0))) } else { x(n) });
        assert_eq!(q.eval(|_| c(2.0)), c(2.0 * 2.0 * 3.0 + 9.0));
    }

    #[test]
    fn text_round_trip_and_display() {
        let p = Poly::from_text("2 0 : 2^2\n-1 0 : 3\n# comment\n\n0.5 -1 :\n").unwrap();
        assert_eq!(p.variables(), vec![2, 3]);
        assert_eq!(p.coeff(&Monomial::one()), Complex64::new(0.5, -1.0));
        assert_eq!(Poly::from_text(&p.to_text()).unwrap(), p);
        let q = Poly::from_text("2 0 : 2^2\n-1 0 : 3").unwrap();
        assert_eq!(q.display_with('b'), "-b3 + 2 b2^2");
        assert!(Poly::from_text("1 : 2").is_err());
        assert!(Poly::from_text("1 0 2").is_err());
        assert!(Poly::from_text("1 0 : x^2").is_err());
    }
}
