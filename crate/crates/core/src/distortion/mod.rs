//! Polynomial coefficient functionals, their transfer to the coefficients
//! of the inverse map, the associated extremal quadratic differential and
//! Beltrami coefficient, and a lower-bound search over explicit families.

pub mod poly;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball::{extremal_fk, extremal_order, sample_map, ExtremalParams};
use crate::config::RunConfig;
use crate::error::{domain, usage, GftError, Result};
use crate::series::TruncatedSeries;

pub use poly::{Monomial, Poly};

/// Which coefficients a functional's variables stand for: those of `f`
/// (`a_n`) or those of its inverse (`b_n`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alphabet {
    A,
    B,
}

impl Alphabet {
    pub fn letter(self) -> char {
        match self {
            Alphabet::A => 'a',
            Alphabet::B => 'b',
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Alphabet::A => Alphabet::B,
            Alphabet::B => Alphabet::A,
        }
    }
}

/// A polynomial `J(x_{n_1}, ..., x_{n_s})` in the coefficients of a
/// normalized map, with `2 <= n_1 < ... < n_s` and nonzero gradient.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionalSpec {
    pub alphabet: Alphabet,
    pub indices: Vec<usize>,
    pub poly: Poly,
}

impl FunctionalSpec {
    pub fn new(alphabet: Alphabet, poly: Poly) -> Result<Self> {
        let indices = poly.variables();
        if let Some(&n) = indices.first().filter(|&&n| n < 2) {
            return usage(format!("functional uses {}{n}; indices start at 2", alphabet.letter()));
        }
        if poly.is_constant() {
            return usage("functional is constant: its gradient vanishes identically");
        }
        Ok(Self {
            alphabet,
            indices,
            poly,
        })
    }

    /// Parses the monomial-list format `re im : n1^p1 n2^p2 ...`.
    pub fn parse(text: &str, alphabet: Alphabet) -> Result<Self> {
        Self::new(alphabet, Poly::from_text(text)?)
    }

    /// `x_n` alone.
    pub fn coefficient(alphabet: Alphabet, n: usize) -> Result<Self> {
        Self::new(alphabet, Poly::var(n))
    }

    pub fn max_index(&self) -> usize {
        *self.indices.last().expect("non-constant functional has a variable")
    }

    pub fn display(&self) -> String {
        self.poly.display_with(self.alphabet.letter())
    }

    pub fn gradient(&self) -> Vec<(usize, Poly)> {
        self.indices.iter().map(|&n| (n, self.poly.partial(n))).collect()
    }
}

/// Row `n` expresses the `n`-th inverse coefficient as a polynomial in
/// `x_2..x_n`. Inversion is an involution, so the same rows map the `b`
/// coefficients back to the `a` coefficients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InversionTable {
    pub order: usize,
    rows: Vec<Poly>,
}

impl InversionTable {
    /// Row `n` for `2 <= n <= order`.
    pub fn row(&self, n: usize) -> Option<&Poly> {
        (2..=self.order).contains(&n).then(|| &self.rows[n - 2])
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// Symbolic inversion `b_n = (1/n) [z^{n-1}] (z/f)^n` with
/// `z/f = (1 + u)^{-1}`, `u = Σ a_m z^{m-1}`, expanded binomially.
pub fn inversion_polynomials(order: usize) -> Result<InversionTable> {
    if order < 2 {
        return usage(format!("inversion table needs order >= 2, got {order}"));
    }
    // u as a series in z whose coefficient of z^j is a_{j+1}, j >= 1.
    let len = order; // degrees 0..order-1
    let u: Vec<Poly> = (0..len)
        .map(|j| if j == 0 { Poly::zero() } else { Poly::var(j + 1) })
        .collect();
    let mul = |p: &[Poly], q: &[Poly]| -> Vec<Poly> {
        (0..len)
            .map(|d| (0..=d).fold(Poly::zero(), |acc, i| acc.add(&p[i].mul(&q[d - i]))))
            .collect()
    };
    // powers[j] = u^j truncated at degree order-1
    let mut powers = vec![(0..len)
        .map(|d| if d == 0 { Poly::constant(Complex64::new(1.0, 0.0)) } else { Poly::zero() })
        .collect::<Vec<_>>()];
    for j in 1..order {
        let next = mul(&powers[j - 1], &u);
        powers.push(next);
    }
    let rows = (2..=order)
        .map(|n| {
            let sum = (0..n).fold(Poly::zero(), |acc, j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                let w = sign * binomial(n + j - 1, j);
                acc.add(&powers[j][n - 1].scale(Complex64::new(w, 0.0)))
            });
            sum.scale(Complex64::new(1.0 / n as f64, 0.0))
        })
        .collect();
    Ok(InversionTable { order, rows })
}

/// Rewrites `J` in the other alphabet by substituting each variable with
/// its table row. Applying it twice returns `J`.
pub fn transform_functional(j: &FunctionalSpec, table: &InversionTable) -> Result<FunctionalSpec> {
    let max = j.max_index();
    if max > table.order {
        return usage(format!("functional uses index {max}, table stops at {}", table.order));
    }
    let poly = j.poly.substitute(|n| table.row(n).expect("index checked").clone());
    FunctionalSpec::new(j.alphabet.flipped(), poly)
}

/// `J` at the coefficients of `f`, or of `f^{-1}` for the `b` alphabet.
pub fn evaluate_functional(j: &FunctionalSpec, f: &TruncatedSeries) -> Result<Complex64> {
    let max = j.max_index();
    if f.order() < max {
        return usage(format!("series of order {} cannot supply index {max}", f.order()));
    }
    let coeffs = match j.alphabet {
        Alphabet::A => f.truncate(max)?,
        Alphabet::B => f.truncate(max)?.lagrange_invert()?,
    };
    Ok(j.poly.eval(|n| coeffs.coeff(n)))
}

/// How a scalar partial `∂J̃/∂x_n` is turned into a function of `z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelChoice {
    /// `z^{n + shift}`; `shift = 1` is the default.
    MonomialShift(usize),
}

impl Default for KernelChoice {
    fn default() -> Self {
        KernelChoice::MonomialShift(1)
    }
}

impl KernelChoice {
    pub fn exponent(self, n: usize) -> usize {
        match self {
            KernelChoice::MonomialShift(s) => n + s,
        }
    }
}

/// `φ₀(z) = Σ_l λ_l kernel_{n_l}(z)` with `λ_l` the partials at a point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Phi0 {
    #[serde(serialize_with = "serialize_series")]
    pub poly: TruncatedSeries,
    pub partials: BTreeMap<usize, [f64; 2]>,
    /// All partials vanish at the assignment, so `φ₀ = 0`.
    pub zero_gradient: bool,
}

fn serialize_series<S: serde::Serializer>(
    s: &TruncatedSeries,
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    ser.collect_seq(s.coeffs().iter().map(|c| [c.re, c.im]))
}

pub fn phi0(
    jt: &FunctionalSpec,
    at: &BTreeMap<usize, Complex64>,
    kernel: KernelChoice,
) -> Result<Phi0> {
    if let Some(n) = jt.indices.iter().find(|n| !at.contains_key(n)) {
        return usage(format!("assignment has no value for {}{n}", jt.alphabet.letter()));
    }
    let value = |n: usize| at.get(&n).copied().unwrap_or_default();
    let partials: Vec<(usize, Complex64)> = jt
        .gradient()
        .into_iter()
        .map(|(n, d)| (n, d.eval(value)))
        .collect();
    let top = jt.indices.iter().map(|&n| kernel.exponent(n)).max().unwrap_or(1);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); top.max(1) + 1];
    for &(n, lambda) in &partials {
        coeffs[kernel.exponent(n)] += lambda;
    }
    Ok(Phi0 {
        poly: TruncatedSeries::new(coeffs)?,
        zero_gradient: partials.iter().all(|(_, l)| *l == Complex64::new(0.0, 0.0)),
        partials: partials.into_iter().map(|(n, l)| (n, [l.re, l.im])).collect(),
    })
}

/// `k |φ₀(z)| / φ₀(z)` on `|z| > 1`.
pub fn extremal_mu(phi0: &TruncatedSeries, k: f64, z: Complex64) -> Result<Complex64> {
    if !(0.0..1.0).contains(&k) {
        return domain(format!("dilatation k = {k} outside [0, 1)"));
    }
    if z.norm() <= 1.0 {
        return domain(format!("extremal_mu is defined for |z| > 1, got |z| = {}", z.norm()));
    }
    let v = phi0.evaluate(z);
    if v == Complex64::new(0.0, 0.0) {
        return Err(GftError::Singularity {
            at: z,
            what: "phi0 vanishes; the Beltrami coefficient is undefined".to_owned(),
        });
    }
    Ok(k * v.norm() / v)
}

/// Where a search candidate came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum Candidate {
    /// `z/(1 - tkz)²` with `t = e^{iθ}`.
    Family { k: f64, theta: f64 },
    /// Solution for a sampled Schwarzian at level `2k`, stream `stream`.
    Sample { k: f64, stream: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub candidate: Candidate,
    pub value: f64,
    /// Refined locally from the best point of a grid of this size.
    pub refined_from_grid: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Largest `|J|` observed; a lower bound for its maximum over the class.
    pub best_value: f64,
    pub argmax: Candidate,
    pub budget: usize,
    pub grid_size: usize,
    pub samples: usize,
    pub trace: Vec<TraceEntry>,
}

/// Sampled streams for the search, disjoint from experiment trials and
/// covering samples.
const SEARCH_STREAM: u64 = 2 << 32;
const REFINE_STEPS: usize = 40;

fn search_series(c: Candidate, order: usize, cfg: &RunConfig, seed: u64) -> Result<TruncatedSeries> {
    match c {
        Candidate::Family { k, theta } => Ok(extremal_fk(ExtremalParams::with_angle(k, theta)?, order)),
        Candidate::Sample { k, stream } => {
            Ok(sample_map(k, cfg.sample_degree, cfg.experiment_order.max(order), seed, stream)?.map)
        }
    }
}

/// Series for a search candidate, long enough to evaluate `j`.
pub fn candidate_series(j: &FunctionalSpec, c: Candidate, cfg: &RunConfig, seed: u64) -> Result<TruncatedSeries> {
    search_series(c, j.max_index().max(8), cfg, seed)
}

fn golden_max(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..REFINE_STEPS {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Lower bound for `max |J|` over maps with `k`-quasiconformal extension.
///
/// Up to half of `budget` (rounded down to a power of two) is spent on an
/// equispaced grid of `t` for
/// `z/(1 - tkz)²` with `|tk| = k`: `J` is a polynomial in `tk`, so its
/// modulus over `k' <= k` peaks on that circle. The rest samples maps from
/// Schwarzians of norm at most `2k`. The best point of each nested subgrid
/// (sizes `g, g/2, ..., 1`) is refined by golden section, so the candidates
/// for a budget are a subset of those for any doubled budget.
pub fn parametric_search(
    j: &FunctionalSpec,
    k: f64,
    budget: usize,
    seed: u64,
    cfg: &RunConfig,
) -> Result<SearchResult> {
    if budget == 0 {
        return usage("parametric_search: budget must be positive");
    }
    if !(0.0..1.0).contains(&k) {
        return domain(format!("dilatation k = {k} outside [0, 1)"));
    }
    let order = extremal_order(k, cfg.eval_order).max(j.max_index());
    let family_value = |theta: f64| -> Result<f64> {
        let f = extremal_fk(ExtremalParams::with_angle(k, theta)?, order);
        Ok(evaluate_functional(j, &f)?.norm())
    };
    let grid = if budget < 2 { 1 } else { 1 << (budget / 2).ilog2() };
    let samples = budget - grid;
    let thetas: Vec<f64> = (0..grid).map(|i| 2.0 * PI * i as f64 / grid as f64).collect();
    let grid_values = thetas
        .par_iter()
        .map(|&th| family_value(th))
        .collect::<Result<Vec<_>>>()?;
    let mut trace: Vec<TraceEntry> = thetas
        .iter()
        .zip(&grid_values)
        .map(|(&theta, &value)| TraceEntry {
            candidate: Candidate::Family { k, theta },
            value,
            refined_from_grid: None,
        })
        .collect();
    let levels: Vec<usize> = (0..=grid.ilog2()).map(|e| 1 << e).collect();
    let refined = levels
        .par_iter()
        .map(|&size| {
            let stride = grid / size;
            let (best_i, _) = (0..size)
                .map(|i| (i, grid_values[i * stride]))
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            let center = 2.0 * PI * best_i as f64 / size as f64;
            let half = 2.0 * PI / size as f64;
            let (theta, value) = golden_max(family_value, center - half, center + half)?;
            Ok(TraceEntry {
                candidate: Candidate::Family { k, theta },
                value,
                refined_from_grid: Some(size),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    trace.extend(refined);
    let sampled = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let candidate = Candidate::Sample {
                k,
                stream: SEARCH_STREAM + i,
            };
            let f = candidate_series(j, candidate, cfg, seed)?;
            Ok(TraceEntry {
                candidate,
                value: evaluate_functional(j, &f)?.norm(),
                refined_from_grid: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    trace.extend(sampled);
    let best = trace
        .iter()
        .fold(None::<&TraceEntry>, |acc, e| match acc {
            Some(b) if b.value >= e.value => Some(b),
            _ => Some(e),
        })
        .expect("budget >= 1 gives a candidate");
    Ok(SearchResult {
        best_value: best.value,
        argmax: best.candidate,
        budget,
        grid_size: grid,
        samples,
        trace,
    })
}

/// One step of the extremal construction: search, transfer `J` to the
/// inverse coefficients, evaluate `φ₀` at the best candidate and sample the
/// resulting Beltrami coefficient. The Beltrami equation is not solved and
/// the step is not iterated.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremalScaffold {
    pub functional: String,
    pub transformed: String,
    pub k: f64,
    pub search_best: f64,
    pub argmax: Candidate,
    /// `|J̃|` at the inverse of the best candidate; equals `search_best`.
    pub transformed_value: f64,
    pub assignment: BTreeMap<usize, [f64; 2]>,
    pub phi0: Phi0,
    /// `(z, μ(z))` on `|z| = 2`; empty when `φ₀ = 0`.
    pub mu_samples: Vec<([f64; 2], [f64; 2])>,
    pub iterated: bool,
}

pub fn extremal_scaffold(
    j: &FunctionalSpec,
    k: f64,
    budget: usize,
    seed: u64,
    kernel: KernelChoice,
    cfg: &RunConfig,
) -> Result<ExtremalScaffold> {
    let search = parametric_search(j, k, budget, seed, cfg)?;
    let table = inversion_polynomials(j.max_index().max(2))?;
    let jt = transform_functional(j, &table)?;
    let f = candidate_series(j, search.argmax, cfg, seed)?;
    let other = match jt.alphabet {
        Alphabet::A => f.truncate(jt.max_index())?,
        Alphabet::B => f.truncate(jt.max_index())?.lagrange_invert()?,
    };
    let at: BTreeMap<usize, Complex64> = jt.indices.iter().map(|&n| (n, other.coeff(n))).collect();
    let p = phi0(&jt, &at, kernel)?;
    let mu_samples = if p.zero_gradient {
        Vec::new()
    } else {
        (0..16)
            .filter_map(|i| {
                let z = Complex64::from_polar(2.0, 2.0 * PI * i as f64 / 16.0);
                extremal_mu(&p.poly, k, z).ok().map(|mu| ([z.re, z.im], [mu.re, mu.im]))
            })
            .collect()
    };
    Ok(ExtremalScaffold {
        functional: j.display(),
        transformed: jt.display(),
        k,
        search_best: search.best_value,
        argmax: search.argmax,
        transformed_value: evaluate_functional(&jt, &f)?.norm(),
        assignment: at.iter().map(|(&n, v)| (n, [v.re, v.im])).collect(),
        phi0: p,
        mu_samples,
        iterated: false,
    })
}
