//! Log-log least squares for scaling exponents, with confidence intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided 97.5% Student-t quantiles by degrees of freedom (95% CI width).
fn t_quantile(dof: usize) -> f64 {
    const TABLE: [(usize, f64); 14] = [
        (1, 12.706),
        (2, 4.303),
        (3, 3.182),
        (4, 2.776),
        (5, 2.571),
        (6, 2.447),
        (7, 2.365),
        (8, 2.306),
        (9, 2.262),
        (10, 2.228),
        (12, 2.179),
        (15, 2.131),
        (20, 2.086),
        (30, 2.042),
    ];
    for &(d, t) in TABLE.iter().rev() {
        if dof >= d {
            if d == 30 {
                return if dof >= 60 { 1.96 } else { t };
            }
            return t;
        }
    }
    12.706
}

/// Solve the symmetric system A x = b in place (Gaussian elimination with
/// partial pivoting); A is row-major p x p.
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<()> {
    let p = b.len();
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col].abs() < 1e-12 * (1.0 + a[col][col].abs()) {
            return Err(Error::Fit("design matrix is singular (collinear sweep)".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..p {
            let f = a[row][col] / a[col][col];
            for c in col..p {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..p).rev() {
        let mut s = b[col];
        for c in col + 1..p {
            s -= a[col][c] * b[c];
        }
        b[col] = s / a[col][col];
    }
    Ok(())
}

/// Multi-regressor power-law fit: ln y = c0 + sum_j p_j ln x_j.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub intercept: f64,
    pub exponents: Vec<f64>,
    /// Half-width of the 95% confidence interval per exponent.
    pub ci95: Vec<f64>,
    /// RMS of the log residuals.
    pub rms: f64,
    pub n_points: usize,
}

/// Fit exponents of y against the regressors; all values must be positive.
pub fn log_log_fit(regressors: &[Vec<f64>], ys: &[f64]) -> Result<PowerLawFit> {
    let n = ys.len();
    if n == 0 || regressors.len() != n {
        return Err(Error::Fit("empty or mismatched fit input".into()));
    }
    let p = regressors[0].len() + 1;
    if n <= p {
        return Err(Error::Fit(format!("{n} samples cannot determine {p} coefficients")));
    }
    let mut design = Vec::with_capacity(n);
    let mut logy = Vec::with_capacity(n);
    for (xs, &y) in regressors.iter().zip(ys) {
        if xs.len() + 1 != p {
            return Err(Error::Fit("ragged regressor row".into()));
        }
        if xs.iter().any(|&x| !(x > 0.0)) || !(y > 0.0) {
            return Err(Error::Fit("log-log fit needs positive samples".into()));
        }
        let mut row = Vec::with_capacity(p);
        row.push(1.0);
        row.extend(xs.iter().map(|&x| x.ln()));
        design.push(row);
        logy.push(y.ln());
    }

    // normal equations
    let mut ata = vec![vec![0.0; p]; p];
    let mut atb = vec![0.0; p];
    for (row, &y) in design.iter().zip(&logy) {
        for i in 0..p {
            atb[i] += row[i] * y;
            for j in 0..p {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let mut coeffs = atb.clone();
    let mut work = ata.clone();
    solve_dense(&mut work, &mut coeffs)?;

    let rss: f64 = design
        .iter()
        .zip(&logy)
        .map(|(row, &y)| {
            let fit: f64 = row.iter().zip(&coeffs).map(|(&r, &c)| r * c).sum();
            (y - fit) * (y - fit)
        })
        .sum();
    let dof = n - p;
    let sigma2 = rss / dof as f64;

    // diagonal of (X^T X)^(-1) via one solve per unit vector
    let mut ci95 = Vec::with_capacity(p - 1);
    let t = t_quantile(dof);
    for j in 1..p {
        let mut e = vec![0.0; p];
        e[j] = 1.0;
        let mut w = ata.clone();
        solve_dense(&mut w, &mut e)?;
        ci95.push(t * (sigma2 * e[j]).max(0.0).sqrt());
    }

    Ok(PowerLawFit {
        intercept: coeffs[0],
        exponents: coeffs[1..].to_vec(),
        ci95,
        rms: (rss / n as f64).sqrt(),
        n_points: n,
    })
}

/// Fitted exponents for one measured quantity against (delta, h).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentPair {
    pub delta_exponent: f64,
    pub delta_ci95: f64,
    pub h_exponent: f64,
    pub h_ci95: f64,
    pub rms: f64,
    pub n_points: usize,
}

/// Empirical scaling of the band and annulus bounds from a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingFits {
    /// |min dv-a on the band| against (delta, h).
    pub band: ExponentPair,
    /// |sup dv-a on the annulus| against (delta, h).
    pub annulus: ExponentPair,
}

/// Regress the measured band and annulus magnitudes from sweep points
/// (delta, h, |band min av|, |annulus sup av|).  Requires at least 8 points
/// with both delta and h actually varying.
pub fn fit_c2_c3(points: &[(f64, f64, f64, f64)]) -> Result<ScalingFits> {
    if points.len() < 8 {
        return Err(Error::Fit(format!(
            "need at least 8 sweep points, got {}",
            points.len()
        )));
    }
    let distinct = |sel: fn(&(f64, f64, f64, f64)) -> f64| {
        let mut v: Vec<f64> = points.iter().map(sel).collect();
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1e-300));
        v.len()
    };
    if distinct(|p| p.0) < 2 || distinct(|p| p.1) < 2 {
        return Err(Error::Fit("degenerate sweep: delta and h must both vary".into()));
    }
    let regressors: Vec<Vec<f64>> = points.iter().map(|&(d, h, _, _)| vec![d, h]).collect();
    let band_y: Vec<f64> = points.iter().map(|p| p.2).collect();
    let annulus_y: Vec<f64> = points.iter().map(|p| p.3).collect();
    let to_pair = |f: PowerLawFit| ExponentPair {
        delta_exponent: f.exponents[0],
        delta_ci95: f.ci95[0],
        h_exponent: f.exponents[1],
        h_ci95: f.ci95[1],
        rms: f.rms,
        n_points: f.n_points,
    };
    Ok(ScalingFits {
        band: to_pair(log_log_fit(&regressors, &band_y)?),
        annulus: to_pair(log_log_fit(&regressors, &annulus_y)?),
    })
}
