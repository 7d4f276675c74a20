//! Learning-curve fitting and the optimal-training-size decision.
//!
//! A learning curve maps training-set size `n` to the held-out error rate
//! of a model fitted on `n` samples. Four classic non-increasing families
//! are supported (`a, b >= 0` in all of them):
//!
//! * power law:    `e(n) = a * n^-b + c`
//! * logarithmic:  `e(n) = a - b * ln(n)`
//! * exponential:  `e(n) = a * exp(-b * n) + c`
//! * inverse:      `e(n) = a / (b + n) + c`
//!
//! Fitting is least squares: the logarithmic family is linear in its
//! coefficients (solved with non-negative least squares); the other three
//! are linear once `b` is fixed, so `b` is located by a coarse log-spaced
//! grid followed by iterative zooming, with an exact 2-coefficient solve
//! per candidate.
//!
//! Each fit also reports a *correlation score*: the Pearson correlation of
//! the curve's linearizing transform of the observed points (e.g.
//! `ln n` vs `ln(e - c)` for the power law). A well-behaved decreasing
//! curve scores close to -1 under the family that matches it, so
//! [`select_family`] picks the family with the most negative score — and
//! callers can keep acquiring samples while the best score is still `>= 0`,
//! i.e. while no family sees a decreasing curve at all. Degenerate fits
//! (flat data) score 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::total_cost;
use crate::nnls::nnls;

/// One observed learning-curve point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningCurvePoint {
    /// Training-set size.
    pub n: usize,
    /// Held-out error rate at that size (>= 0).
    pub error_rate: f64,
}

/// The supported curve families, in selection tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    PowerLaw,
    Logarithmic,
    Exponential,
    Inverse,
}

pub const ALL_KINDS: [CurveKind; 4] = [
    CurveKind::PowerLaw,
    CurveKind::Logarithmic,
    CurveKind::Exponential,
    CurveKind::Inverse,
];

/// A fitted curve plus its goodness diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedCurve {
    pub kind: CurveKind,
    /// `a` in the family's formula (>= 0).
    pub scale: f64,
    /// `b` in the family's formula (>= 0).
    pub rate: f64,
    /// `c` in the family's formula (0 for the logarithmic family).
    pub offset: f64,
    /// Pearson correlation of the linearized observations; negative is
    /// "decreasing curve, family fits".
    pub correlation: f64,
    /// Sum of squared residuals of the fit.
    pub sse: f64,
}

impl FittedCurve {
    /// Projected error rate at training size `n`.
    pub fn value(&self, n: f64) -> f64 {
        match self.kind {
            CurveKind::PowerLaw => self.scale * n.powf(-self.rate) + self.offset,
            CurveKind::Logarithmic => self.scale - self.rate * n.ln(),
            CurveKind::Exponential => self.scale * (-self.rate * n).exp() + self.offset,
            CurveKind::Inverse => self.scale / (self.rate + n) + self.offset,
        }
    }
}

fn check_points(points: &[LearningCurvePoint]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "curve fitting needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut seen = std::collections::HashSet::new();
    for p in points {
        if p.n < 1 {
            return Err(Error::InvalidInput("training sizes must be >= 1".into()));
        }
        if !p.error_rate.is_finite() || p.error_rate < 0.0 {
            return Err(Error::InvalidInput(format!(
                "error rate {} at n={} is not a finite non-negative value",
                p.error_rate, p.n
            )));
        }
        seen.insert(p.n);
    }
    if seen.len() < 3 {
        return Err(Error::InsufficientData(
            "curve fitting needs at least 3 distinct training sizes".into(),
        ));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson correlation; 0 when either side has (numerically) no variance.
fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    let denom = (sxx * syy).sqrt();
    if denom <= f64::EPSILON * x.len() as f64 * (mx.abs() + my.abs() + 1.0) {
        0.0
    } else {
        (sxy / denom).clamp(-1.0, 1.0)
    }
}

/// Least squares of `eps ~ a * regressor + c` with `a` clamped to `>= 0`.
/// Returns (a, c, sse).
fn scaled_regressor_fit(regressor: &[f64], eps: &[f64]) -> (f64, f64, f64) {
    let m = eps.len() as f64;
    let sr: f64 = regressor.iter().sum();
    let srr: f64 = regressor.iter().map(|r| r * r).sum();
    let se: f64 = eps.iter().sum();
    let sre: f64 = regressor.iter().zip(eps).map(|(r, e)| r * e).sum();
    let det = m * srr - sr * sr;
    let (mut a, mut c);
    if det.abs() <= f64::EPSILON * m * srr.max(1.0) {
        a = 0.0;
        c = se / m;
    } else {
        a = (m * sre - sr * se) / det;
        c = (se - a * sr) / m;
        if a < 0.0 {
            a = 0.0;
            c = se / m;
        }
    }
    let sse = regressor
        .iter()
        .zip(eps)
        .map(|(r, e)| {
            let d = a * r + c - e;
            d * d
        })
        .sum();
    (a, c, sse)
}

/// The per-candidate regressor for families that are linear given `b`.
fn regressor(kind: CurveKind, b: f64, ns: &[f64]) -> Vec<f64> {
    match kind {
        CurveKind::PowerLaw => ns.iter().map(|n| n.powf(-b)).collect(),
        CurveKind::Exponential => ns.iter().map(|n| (-b * n).exp()).collect(),
        CurveKind::Inverse => ns.iter().map(|n| 1.0 / (b + n)).collect(),
        CurveKind::Logarithmic => unreachable!("logarithmic family is fully linear"),
    }
}

/// Locate the best rate `b >= 0` by coarse log grid plus zooming rounds.
fn search_rate(kind: CurveKind, ns: &[f64], eps: &[f64]) -> (f64, f64, f64, f64) {
    let (lo, hi): (f64, f64) = match kind {
        CurveKind::PowerLaw => (1e-3, 8.0),
        CurveKind::Exponential => (1e-5, 10.0),
        CurveKind::Inverse => (1e-3, 1e5),
        CurveKind::Logarithmic => unreachable!(),
    };
    let sse_at = |b: f64| {
        let (a, c, sse) = scaled_regressor_fit(&regressor(kind, b, ns), eps);
        (a, c, sse)
    };
    // Coarse pass: log-spaced candidates (plus b = 0 for the inverse family,
    // where the rate is a plain shift and zero is perfectly reasonable).
    let coarse = 96usize;
    let ratio = (hi / lo).ln() / (coarse - 1) as f64;
    let mut candidates: Vec<f64> = (0..coarse).map(|i| lo * (ratio * i as f64).exp()).collect();
    if kind == CurveKind::Inverse {
        candidates.insert(0, 0.0);
    }
    let mut best = (candidates[0], sse_at(candidates[0]));
    let mut best_idx = 0usize;
    for (i, &b) in candidates.iter().enumerate().skip(1) {
        let fit = sse_at(b);
        if fit.2 < best.1 .2 {
            best = (b, fit);
            best_idx = i;
        }
    }
    // Zooming rounds on the bracket around the best coarse cell.
    let mut lo_b = if best_idx == 0 { candidates[0] } else { candidates[best_idx - 1] };
    let mut hi_b = *candidates.get(best_idx + 1).unwrap_or(&hi);
    for _ in 0..8 {
        let steps = 32usize;
        let w = (hi_b - lo_b) / steps as f64;
        let mut round_best = best;
        let mut round_idx = 0usize;
        for i in 0..=steps {
            let b = lo_b + w * i as f64;
            let fit = sse_at(b);
            if fit.2 < round_best.1 .2 {
                round_best = (b, fit);
                round_idx = i;
            }
        }
        best = round_best;
        let new_lo = lo_b + w * round_idx.saturating_sub(1) as f64;
        let new_hi = (lo_b + w * (round_idx + 1) as f64).min(hi_b);
        lo_b = new_lo;
        hi_b = new_hi;
    }
    let (b, (a, c, sse)) = best;
    (a, b, c, sse)
}

/// Correlation of the family's linearizing transform of the observations.
///
/// The x-coordinate is increasing in `n` for every family, so a decreasing
/// curve always yields a negative score. Fitted offsets are pulled just
/// below the smallest observation before taking logs.
fn linearized_correlation(kind: CurveKind, curve: &FittedCurve, ns: &[f64], eps: &[f64]) -> f64 {
    let min_e = eps.iter().cloned().fold(f64::INFINITY, f64::min);
    let margin = 1e-9 * (1.0 + min_e.abs());
    let shift = curve.offset.min(min_e - margin);
    match kind {
        CurveKind::Logarithmic => {
            let x: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
            pearson(&x, eps)
        }
        CurveKind::PowerLaw | CurveKind::Exponential | CurveKind::Inverse => {
            if curve.scale <= 0.0 {
                return 0.0; // flat fit: no decreasing component at all
            }
            let y: Vec<f64> = eps.iter().map(|e| (e - shift).ln()).collect();
            let x: Vec<f64> = match kind {
                CurveKind::PowerLaw => ns.iter().map(|n| n.ln()).collect(),
                CurveKind::Exponential => ns.to_vec(),
                CurveKind::Inverse => ns.iter().map(|n| (curve.rate + n).ln()).collect(),
                CurveKind::Logarithmic => unreachable!(),
            };
            pearson(&x, &y)
        }
    }
}

/// Fit one family to the observed points.
pub fn fit_curve(points: &[LearningCurvePoint], kind: CurveKind) -> Result<FittedCurve> {
    check_points(points)?;
    let ns: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let eps: Vec<f64> = points.iter().map(|p| p.error_rate).collect();

    let mut curve = match kind {
        CurveKind::Logarithmic => {
            // e = a * 1 + b * (-ln n), both coefficients >= 0.
            let rows: Vec<Vec<f64>> = ns.iter().map(|n| vec![1.0, -n.ln()]).collect();
            let fit = nnls(&rows, &eps)?;
            FittedCurve {
                kind,
                scale: fit.coefficients[0],
                rate: fit.coefficients[1],
                offset: 0.0,
                correlation: 0.0,
                sse: fit.residual_norm * fit.residual_norm,
            }
        }
        _ => {
            let (a, b, c, sse) = search_rate(kind, &ns, &eps);
            FittedCurve { kind, scale: a, rate: b, offset: c, correlation: 0.0, sse }
        }
    };
    curve.correlation = linearized_correlation(kind, &curve, &ns, &eps);
    Ok(curve)
}

/// Outcome of evaluating all families on one set of points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySelection {
    /// The winning fit (most negative correlation; SSE breaks near-ties).
    pub best: FittedCurve,
    /// Minimum correlation across all families — the caller's "keep
    /// sampling while this is >= 0" signal.
    pub best_correlation: f64,
    /// Every family's fit, in [`ALL_KINDS`] order.
    pub candidates: Vec<FittedCurve>,
}

/// Fit every family and pick the one that best explains a decreasing curve.
///
/// Families whose projection fails to be non-increasing over the observed
/// range are rejected (cannot happen with the constrained forms above, but
/// the check guards future families). Near-ties in correlation (within
/// 1e-6) fall back to the smaller SSE, then to [`ALL_KINDS`] order.
pub fn select_family(points: &[LearningCurvePoint]) -> Result<FamilySelection> {
    check_points(points)?;
    let n_lo = points.iter().map(|p| p.n).min().unwrap();
    let n_hi = points.iter().map(|p| p.n).max().unwrap();
    let mut candidates = Vec::with_capacity(ALL_KINDS.len());
    for kind in ALL_KINDS {
        candidates.push(fit_curve(points, kind)?);
    }
    let monotone = |c: &FittedCurve| {
        let scale = 1.0 + c.value(n_lo as f64).abs();
        (n_lo..n_hi).all(|n| c.value((n + 1) as f64) <= c.value(n as f64) + 1e-9 * scale)
    };
    let best_correlation = candidates
        .iter()
        .map(|c| c.correlation)
        .fold(f64::INFINITY, f64::min);
    let best = candidates
        .iter()
        .filter(|c| monotone(c))
        .min_by(|a, b| {
            if (a.correlation - b.correlation).abs() <= 1e-6 {
                a.sse.total_cmp(&b.sse)
            } else {
                a.correlation.total_cmp(&b.correlation)
            }
        })
        .ok_or_else(|| Error::FitFailed("no family produced a usable fit".into()))?
        .clone();
    Ok(FamilySelection { best, best_correlation, candidates })
}

/// The training size minimizing projected total cost
/// `2n + e(n) * prediction_set_size * cost_ratio` over `1..=n_max`
/// (exhaustive integer scan; projected error clamped at 0; ties favor the
/// smaller size).
pub fn optimal_n(
    curve: &FittedCurve,
    prediction_set_size: usize,
    cost_ratio: f64,
    n_max: usize,
) -> usize {
    assert!(n_max >= 1, "n_max must be at least 1");
    let mut best_n = 1;
    let mut best_cost = f64::INFINITY;
    for n in 1..=n_max {
        let eps = curve.value(n as f64).max(0.0);
        let cost = total_cost(n, eps, prediction_set_size, cost_ratio);
        if cost < best_cost {
            best_cost = cost;
            best_n = n;
        }
    }
    best_n
}
