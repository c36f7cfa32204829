//! Numerical univalence tests, covering radii and biunivalence certificates.
//!
//! None of this is proof-grade: univalence is inferred from simple image
//! curves on a ladder of circles plus an argument-principle count of the
//! critical points inside the outermost circle.

pub mod polyline;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{usage, Result};
use crate::grunsky::{grunsky_form_norm, grunsky_matrix, grunsky_of_inverse};
use crate::report::{ClaimReport, Verdict};
use crate::series::TruncatedSeries;

/// Sharp upper bound of `|a_2|` over biunivalent functions (Netanyahu).
pub const NETANYAHU_BOUND: f64 = 4.0 / 3.0;
/// `|a_2|` at or below this forces biunivalence.
pub const SMALL_A2_BOUND: f64 = 0.5;

/// Image of the circle `|z| = rho` sampled at equispaced angles.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCurve {
    pub points: Vec<Complex64>,
    pub rho: f64,
    pub closed: bool,
}

fn angle(j: usize, m: usize) -> f64 {
    2.0 * PI * j as f64 / m as f64
}

pub fn boundary_curve(f: &TruncatedSeries, rho: f64, m: usize) -> Result<BoundaryCurve> {
    if !(rho > 0.0 && rho < 1.0) {
        return usage(format!("boundary_curve: rho = {rho} outside (0, 1)"));
    }
    if m < 16 {
        return usage(format!("boundary_curve: need at least 16 points, got {m}"));
    }
    let points = (0..m)
        .into_par_iter()
        .map(|j| f.evaluate(Complex64::from_polar(rho, angle(j, m))))
        .collect();
    Ok(BoundaryCurve {
        points,
        rho,
        closed: true,
    })
}

/// Pass iff no two non-adjacent segments of the closed polyline meet.
pub fn jordan_test(curve: &BoundaryCurve) -> Result<Verdict> {
    if !curve.closed {
        return usage("jordan_test expects a closed curve");
    }
    Ok(Verdict::from_bool(
        polyline::first_self_intersection(&curve.points)?.is_none(),
    ))
}

fn wrap_phase(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d < -PI {
        d += 2.0 * PI;
    }
    d
}

/// Winding number of `f'` around 0 along `|z| = rho`, i.e. the number of
/// critical points of `f` in `|z| < rho`. Arcs whose phase jump exceeds
/// π/4 are bisected (up to 16 levels). `None` when `f'` vanishes on the
/// contour (below 1e-15 of its largest sample) or the count does not
/// settle near an integer.
pub fn critical_point_count(f: &TruncatedSeries, rho: f64, m: usize) -> Option<i64> {
    let deriv = |theta: f64| f.evaluate_with_derivative(Complex64::from_polar(rho, theta)).1;
    let values: Vec<Complex64> = (0..m).into_par_iter().map(|j| deriv(angle(j, m))).collect();
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tiny = 1e-15 * scale.max(1e-300);
    if values.iter().any(|v| v.norm() <= tiny) {
        return None;
    }
    fn arc(
        deriv: &dyn Fn(f64) -> Complex64,
        t0: f64,
        v0: Complex64,
        t1: f64,
        v1: Complex64,
        depth: u32,
        tiny: f64,
    ) -> Option<f64> {
        let d = wrap_phase(v1.arg() - v0.arg());
        if d.abs() <= PI / 4.0 || depth == 0 {
            return Some(d);
        }
        let tm = 0.5 * (t0 + t1);
        let vm = deriv(tm);
        if vm.norm() <= tiny {
            return None;
        }
        Some(arc(deriv, t0, v0, tm, vm, depth - 1, tiny)? + arc(deriv, tm, vm, t1, v1, depth - 1, tiny)?)
    }
    let total: Option<f64> = (0..m)
        .into_par_iter()
        .map(|j| {
            let k = (j + 1) % m;
            let t1 = if k == 0 { 2.0 * PI } else { angle(k, m) };
            arc(&deriv, angle(j, m), values[j], t1, values[k], 16, tiny)
        })
        .collect::<Option<Vec<f64>>>()
        .map(|parts| parts.iter().sum());
    let turns = total? / (2.0 * PI);
    let count = turns.round();
    ((turns - count).abs() < 0.25).then_some(count as i64)
}

/// Detail behind a [`numeric_univalence`] verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnivalenceCheck {
    pub rhos: Vec<f64>,
    pub jordan: Vec<Verdict>,
    /// Critical points inside the outermost circle; `None` if undetermined.
    pub critical_points: Option<i64>,
    pub verdict: Verdict,
}

fn check_rhos(rhos: &[f64]) -> Result<()> {
    if rhos.is_empty()
        || rhos.windows(2).any(|w| w[0] >= w[1])
        || rhos.iter().any(|&r| !(r > 0.0 && r < 1.0))
    {
        return usage(format!("radii must be increasing in (0, 1), got {rhos:?}"));
    }
    Ok(())
}

pub fn univalence_check(f: &TruncatedSeries, rhos: &[f64], m: usize) -> Result<UnivalenceCheck> {
    check_rhos(rhos)?;
    let jordan = rhos
        .iter()
        .map(|&rho| jordan_test(&boundary_curve(f, rho, m)?))
        .collect::<Result<Vec<_>>>()?;
    let outer = *rhos.last().expect("non-empty");
    let critical_points = critical_point_count(f, outer, m);
    let verdict = jordan
        .iter()
        .fold(Verdict::Pass, |acc, v| acc.and(*v))
        .and(Verdict::from_bool(critical_points == Some(0)));
    Ok(UnivalenceCheck {
        rhos: rhos.to_vec(),
        jordan,
        critical_points,
        verdict,
    })
}

/// Pass iff every ladder curve is simple and `f'` has no zero inside the
/// outermost circle.
pub fn numeric_univalence(f: &TruncatedSeries, rhos: &[f64], m: usize) -> Result<Verdict> {
    Ok(univalence_check(f, rhos, m)?.verdict)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..50 {
        if fc <= fd {
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
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Distance from 0 to the image of `|z| = rho`, with the nearest sample
/// refined by golden section over the neighbouring arc.
pub fn min_modulus_on_circle(f: &TruncatedSeries, rho: f64, m: usize) -> Result<(f64, f64)> {
    let curve = boundary_curve(f, rho, m)?;
    let (j, _) = curve
        .points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("non-empty curve");
    let sampled = curve.points[j].norm();
    let step = 2.0 * PI / m as f64;
    let t = angle(j, m);
    let (theta, refined) = golden_min(
        |th| f.evaluate(Complex64::from_polar(rho, th)).norm(),
        t - step,
        t + step,
    );
    Ok(if refined < sampled { (refined, theta) } else { (sampled, t) })
}

/// Covering estimate with its ingredients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringEstimate {
    pub radius: f64,
    /// `(rho, min |f| on |z| = rho)` for the rungs used.
    pub rungs: Vec<(f64, f64)>,
    /// Argument of the nearest boundary point on the outermost rung.
    pub argmin_theta: f64,
}

/// Distance from 0 to `∂f(D)`, extrapolated linearly in `rho` to 1 from the
/// last two ladder rungs (the only rung when the ladder has one).
pub fn covering_estimate(f: &TruncatedSeries, ladder: &[f64], m: usize) -> Result<CoveringEstimate> {
    check_rhos(ladder)?;
    let used = &ladder[ladder.len().saturating_sub(2)..];
    let mins = used
        .iter()
        .map(|&r| min_modulus_on_circle(f, r, m))
        .collect::<Result<Vec<_>>>()?;
    let (d2, theta) = *mins.last().expect("non-empty");
    let radius = if let [(d1, _), _] = mins[..] {
        let (r1, r2) = (used[0], used[1]);
        d2 + (d2 - d1) * (1.0 - r2) / (r2 - r1)
    } else {
        d2
    };
    Ok(CoveringEstimate {
        radius,
        rungs: used.iter().zip(&mins).map(|(&r, &(d, _))| (r, d)).collect(),
        argmin_theta: theta,
    })
}

pub fn covering_radius(f: &TruncatedSeries, ladder: &[f64], m: usize) -> Result<f64> {
    Ok(covering_estimate(f, ladder, m)?.radius)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Overall {
    Certified,
    Refuted,
    Indeterminate,
}

/// Evidence for or against membership of `f` in the biunivalent class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiunivalenceCertificate {
    pub a2_modulus: f64,
    pub netanyahu_pass: Verdict,
    pub small_a2_pass: Verdict,
    pub grunsky_f_norm: Option<f64>,
    pub grunsky_inverse_norm: Option<f64>,
    pub covering_radius: Option<f64>,
    pub numeric_univalence: Verdict,
    pub overall: Overall,
    /// Per-field failures; the affected fields are null or indeterminate.
    pub errors: Vec<String>,
}

impl BiunivalenceCertificate {
    fn decide(&mut self, cfg: &RunConfig) {
        self.overall = if self.netanyahu_pass == Verdict::Fail
            || self.numeric_univalence == Verdict::Fail
        {
            Overall::Refuted
        } else if self.numeric_univalence == Verdict::Pass
            && self.grunsky_inverse_norm.is_some_and(|n| n <= 1.0 + cfg.tol_norm)
            && self.covering_radius.is_some_and(|r| r >= 1.0 - cfg.tol_radius)
        {
            Overall::Certified
        } else {
            Overall::Indeterminate
        };
    }
}

/// Runs every biunivalence signal on a normalized `f`. Failures of
/// individual signals are recorded in `errors` rather than aborting.
pub fn biunivalence_certificates(f: &TruncatedSeries, cfg: &RunConfig) -> Result<BiunivalenceCertificate> {
    f.check_normalized("biunivalence_certificates")?;
    let a2 = f.coeff(2).norm();
    let mut errors = Vec::new();
    let n = cfg.grunsky_order;
    let ((f_norm, inv_norm), (univalence, covering)) = rayon::join(
        || {
            let fnorm = grunsky_matrix(f, n).and_then(|g| grunsky_form_norm(&g));
            let inorm = grunsky_of_inverse(f, n).and_then(|g| grunsky_form_norm(&g));
            (fnorm, inorm)
        },
        || {
            rayon::join(
                || numeric_univalence(f, &cfg.ladder, cfg.curve_points),
                || covering_radius(f, &cfg.ladder, cfg.curve_points),
            )
        },
    );
    let mut keep = |name: &str, r: Result<f64>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("{name}: {e}"));
            None
        }
    };
    let grunsky_f_norm = keep("grunsky_f_norm", f_norm);
    let grunsky_inverse_norm = keep("grunsky_inverse_norm", inv_norm);
    let covering_radius = keep("covering_radius", covering);
    let numeric_univalence = univalence.unwrap_or_else(|e| {
        errors.push(format!("numeric_univalence: {e}"));
        Verdict::Indeterminate
    });
    let mut cert = BiunivalenceCertificate {
        a2_modulus: a2,
        netanyahu_pass: Verdict::from_bool(a2 <= NETANYAHU_BOUND),
        small_a2_pass: Verdict::from_bool(a2 <= SMALL_A2_BOUND),
        grunsky_f_norm,
        grunsky_inverse_norm,
        covering_radius,
        numeric_univalence,
        overall: Overall::Indeterminate,
        errors,
    };
    cert.decide(cfg);
    Ok(cert)
}

/// Compares each member's covering radius with `1/(2 max |a_2|)`, the
/// covering predicted for a family by its largest second coefficient.
pub fn family_covering_check(family: &[TruncatedSeries], cfg: &RunConfig) -> Result<ClaimReport> {
    if family.is_empty() {
        return usage("family_covering_check: empty family");
    }
    let tol = cfg.tol_radius;
    let mut report = ClaimReport::new(
        "family-covering",
        "every member of a circularly symmetric family covers |w| < 1/(2 max|a2|); sharp exactly for maximizers",
        tol,
    )
    .input("members", family.len());
    let members = family
        .par_iter()
        .map(|f| {
            let cov = covering_radius(f, &cfg.ladder, cfg.curve_points)?;
            let uni = numeric_univalence(f, &cfg.ladder, cfg.curve_points)?;
            Ok((f.coeff(2).norm(), cov, uni))
        })
        .collect::<Result<Vec<_>>>()?;
    let a2_max = members.iter().map(|m| m.0).fold(0.0, f64::max);
    report.record("a2_max", a2_max);
    for (i, (a2, cov, uni)) in members.iter().enumerate() {
        report.record(&format!("member_{i:02}_a2"), *a2);
        report.record(&format!("member_{i:02}_covering"), *cov);
        if *uni != Verdict::Pass {
            report.note(format!("member {i} is not numerically univalent ({uni:?})"));
            report.require(Verdict::Indeterminate);
        }
    }
    if a2_max == 0.0 {
        report.note("max |a2| = 0: the predicted covering radius 1/(2 max|a2|) is not defined");
        report.require(Verdict::Indeterminate);
        return Ok(report);
    }
    let predicted = 1.0 / (2.0 * a2_max);
    report.record("predicted_covering", predicted);
    for (i, (a2, cov, _)) in members.iter().enumerate() {
        let ok = *cov >= predicted - tol;
        if !ok {
            report.note(format!(
                "member {i}: covering {cov:.6} is below the predicted {predicted:.6}"
            ));
        }
        if (*a2 - a2_max).abs() <= 1e-12 && (cov - predicted).abs() <= tol {
            report.note(format!("member {i} attains the predicted radius (maximizer)"));
        }
        report.require(Verdict::from_bool(ok));
    }
    Ok(report)
}
