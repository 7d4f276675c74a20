//! Non-negative least squares.
//!
//! Minimizes `||A x - b||²` subject to `x >= 0` with the classic active-set
//! strategy: start with every coefficient clamped at zero, repeatedly free
//! the coefficient whose gradient most wants to grow, and solve the
//! unconstrained least-squares subproblem on the free set (via Householder
//! QR), stepping back along the segment to the previous iterate whenever the
//! subproblem turns a freed coefficient negative. Terminates when no clamped
//! coefficient has positive descent direction, i.e. at a KKT point.

use crate::error::{Error, Result};

/// Solution of one non-negative least-squares problem.
#[derive(Debug, Clone)]
pub struct NnlsFit {
    /// Fitted coefficients, all `>= 0`.
    pub coefficients: Vec<f64>,
    /// `||A x - b||_2` at the solution.
    pub residual_norm: f64,
    /// Worst KKT violation: `|gradient_j|` over free coefficients and
    /// `max(0, -gradient_j)` over clamped ones (gradient of the squared
    /// residual). Zero at an exact optimum.
    pub kkt_residual: f64,
    /// Active-set iterations used.
    pub iterations: usize,
}

/// Unconstrained least squares `min ||C z - y||` over the given columns,
/// by Householder QR. Dependent (or empty) columns get coefficient zero.
fn least_squares(columns: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let m = rhs.len();
    let p = columns.len();
    // Column-major working copy; column c occupies a[c*m .. (c+1)*m].
    let mut a: Vec<f64> = Vec::with_capacity(m * p);
    for col in columns {
        a.extend_from_slice(col);
    }
    let mut y = rhs.to_vec();
    let mut rdiag = vec![0.0; p];
    for c in 0..p.min(m) {
        let start = c * m;
        let norm: f64 = (c..m).map(|i| a[start + i] * a[start + i]).sum::<f64>().sqrt();
        if norm <= f64::MIN_POSITIVE {
            continue; // dependent column; rdiag stays 0
        }
        // Reflector v = x - alpha e1 with alpha chosen to avoid cancellation.
        let alpha = if a[start + c] >= 0.0 { -norm } else { norm };
        a[start + c] -= alpha;
        let vnorm2: f64 = (c..m).map(|i| a[start + i] * a[start + i]).sum();
        for cc in (c + 1)..p {
            let s2 = cc * m;
            let dot: f64 = (c..m).map(|i| a[start + i] * a[s2 + i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in c..m {
                a[s2 + i] -= f * a[start + i];
            }
        }
        let dot: f64 = (c..m).map(|i| a[start + i] * y[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in c..m {
            y[i] -= f * a[start + i];
        }
        rdiag[c] = alpha;
    }
    // Back-substitute R z = Q^T b. R's strict upper triangle of row c sits
    // in the later columns at row index c (final after reflection c).
    let mut z = vec![0.0; p];
    for c in (0..p.min(m)).rev() {
        if rdiag[c] == 0.0 {
            continue;
        }
        let mut s = y[c];
        for cc in (c + 1)..p {
            s -= a[cc * m + c] * z[cc];
        }
        z[c] = s / rdiag[c];
    }
    z
}

fn gradient_neg_half(rows: &[Vec<f64>], rhs: &[f64], x: &[f64]) -> Vec<f64> {
    // w = A^T (b - A x); the descent direction, = -grad/2.
    let k = x.len();
    let mut w = vec![0.0; k];
    for (row, &b) in rows.iter().zip(rhs) {
        let pred: f64 = row.iter().zip(x).map(|(a, xi)| a * xi).sum();
        let r = b - pred;
        for (wj, &aj) in w.iter_mut().zip(row) {
            *wj += aj * r;
        }
    }
    w
}

/// Solve `min ||A x - b||²` subject to `x >= 0`.
///
/// `rows` are the rows of `A`; all must share a length, and every entry of
/// `A` and `b` must be finite.
pub fn nnls(rows: &[Vec<f64>], rhs: &[f64]) -> Result<NnlsFit> {
    let m = rows.len();
    if m == 0 || rhs.len() != m {
        return Err(Error::InvalidInput(format!(
            "need matching row/rhs counts, got {m} rows and {} rhs entries",
            rhs.len()
        )));
    }
    let k = rows[0].len();
    if k == 0 {
        return Err(Error::InvalidInput("need at least one column".into()));
    }
    for row in rows {
        if row.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite rhs entry".into()));
    }

    // Tolerance scales with the problem so tiny gradients on tiny data count
    // as converged too.
    let scale = rows
        .iter()
        .flat_map(|r| r.iter())
        .chain(rhs.iter())
        .fold(1.0f64, |acc, &v| acc.max(v.abs()));
    let tol = 1e-12 * scale * scale * m as f64;

    let mut x = vec![0.0f64; k];
    let mut free = vec![false; k];
    let mut iterations = 0usize;
    let max_iterations = 10 * k + 20;

    loop {
        let w = gradient_neg_half(rows, rhs, &x);
        let candidate = (0..k)
            .filter(|&j| !free[j])
            .max_by(|&a, &b| w[a].total_cmp(&w[b]));
        match candidate {
            Some(j) if w[j] > tol => free[j] = true,
            _ => break, // KKT satisfied (or every coefficient already free)
        }

        // Re-solve on the free set until the subproblem stays non-negative.
        loop {
            iterations += 1;
            if iterations > max_iterations {
                return Err(Error::FitFailed(
                    "active-set iteration limit exceeded".into(),
                ));
            }
            let support: Vec<usize> = (0..k).filter(|&j| free[j]).collect();
            let columns: Vec<Vec<f64>> = support
                .iter()
                .map(|&j| rows.iter().map(|r| r[j]).collect())
                .collect();
            let z = least_squares(&columns, rhs);
            if z.iter().all(|&v| v > 0.0) {
                for (&j, &v) in support.iter().zip(&z) {
                    x[j] = v;
                }
                break;
            }
            // Step from x toward z, stopping at the first coefficient that
            // hits zero; clamp it back out of the free set.
            let mut step = 1.0f64;
            for (&j, &v) in support.iter().zip(&z) {
                if v <= 0.0 {
                    let denom = x[j] - v;
                    if denom > 0.0 {
                        step = step.min(x[j] / denom);
                    }
                }
            }
            for (&j, &v) in support.iter().zip(&z) {
                x[j] += step * (v - x[j]);
            }
            for (&j, &v) in support.iter().zip(&z) {
                if v <= 0.0 && x[j] <= tol.max(f64::MIN_POSITIVE) {
                    x[j] = 0.0;
                    free[j] = false;
                }
            }
        }
    }

    let w = gradient_neg_half(rows, rhs, &x);
    let kkt_residual = (0..k)
        .map(|j| {
            // Gradient of ||Ax-b||² is -2w.
            let g = -2.0 * w[j];
            if x[j] > 0.0 {
                g.abs()
            } else {
                (-g).max(0.0)
            }
        })
        .fold(0.0f64, f64::max);
    let residual_norm = rows
        .iter()
        .zip(rhs)
        .map(|(row, &b)| {
            let pred: f64 = row.iter().zip(&x).map(|(a, xi)| a * xi).sum();
            (b - pred) * (b - pred)
        })
        .sum::<f64>()
        .sqrt();

    Ok(NnlsFit { coefficients: x, residual_norm, kkt_residual, iterations })
}
