//! Least-squares fitting of decay rates and component relations — the
//! machinery that turns theorem orders into checkable numbers.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Functional form selected by a fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FitModel {
    /// `err ≈ c·e^{r·t}`
    PureExponential,
    /// `err ≈ c·t·e^{r·t}`
    ExponentialWithTPrefactor,
    /// `y ≈ Σ cᵢ·x^{qᵢ}`
    PowerLaw,
    /// `y ≈ Σ cᵢ·x^{qᵢ}·ln(x)^{lᵢ}`
    PowerLawWithLog,
}

/// Outcome of a fit: the model, its parameters, and the actual
/// least-squares residual on the window used.
#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub model: FitModel,
    /// Fitted decay rate (exponential models) or leading power.
    pub exponent: f64,
    /// Model coefficients; for exponential models `[log c]`, for power
    /// laws one coefficient per regressor.
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual of the stated model on the window.
    pub residual: f64,
    pub window: (f64, f64),
}

/// Default fit window: the last 60% of the time span.
pub fn default_window(times: &[f64]) -> (f64, f64) {
    let t0 = *times.first().unwrap_or(&0.0);
    let t1 = *times.last().unwrap_or(&1.0);
    (t0 + 0.4 * (t1 - t0), t1)
}

/// Fit the decay rate of a positive error series on a window:
/// least-squares slope of log(err) against t, with an optional linear
/// t-prefactor model selected by residual comparison.
///
/// Points below `100·ε_machine·max(err)` are treated as numerical noise;
/// if the window loses too many points it is shrunk once toward earlier
/// times before giving up.
pub fn fit_decay(times: &[f64], errors: &[f64], window: (f64, f64)) -> Result<FitReport> {
    assert_eq!(times.len(), errors.len());
    let scale = errors.iter().cloned().fold(0.0, f64::max);
    let floor = 100.0 * f64::EPSILON * scale;
    let usable = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
        times
            .iter()
            .zip(errors)
            .filter(|&(&t, &e)| t >= lo && t <= hi && e > floor)
            .map(|(&t, &e)| (t, e))
            .collect()
    };
    let (lo, hi) = window;
    let mut pts = usable(lo, hi);
    if pts.len() < 5 {
        // Underflow inside the window: retry on a window ending at the
        // last usable time.
        let last_usable = times
            .iter()
            .zip(errors)
            .rev()
            .find(|&(_, &e)| e > floor)
            .map(|(&t, _)| t);
        if let Some(t_last) = last_usable {
            let span = t_last - times[0];
            pts = usable(times[0] + 0.3 * span, t_last);
        }
        if pts.len() < 5 {
            return Err(Error::Fit(
                "too few usable points in the fit window (error underflow)".into(),
            ));
        }
    }
    let actual_window = (pts[0].0, pts[pts.len() - 1].0);

    // Model 1: log(err) = c + r·t.
    let (r1, c1, res1) = line_fit(pts.iter().map(|&(t, e)| (t, e.ln())));
    // Model 2: log(err) - log(t) = c + r·t (only where t > 0).
    let positive: Vec<(f64, f64)> = pts.iter().filter(|&&(t, _)| t > 0.0).copied().collect();
    let with_prefactor = if positive.len() >= 5 {
        Some(line_fit(positive.iter().map(|&(t, e)| (t, e.ln() - t.ln()))))
    } else {
        None
    };

    match with_prefactor {
        Some((r2, c2, res2)) if res2 < res1 => Ok(FitReport {
            model: FitModel::ExponentialWithTPrefactor,
            exponent: r2,
            coefficients: vec![c2],
            residual: res2,
            window: actual_window,
        }),
        _ => Ok(FitReport {
            model: FitModel::PureExponential,
            exponent: r1,
            coefficients: vec![c1],
            residual: res1,
            window: actual_window,
        }),
    }
}

/// Pure-exponential fit only (no model selection): least-squares slope
/// of log(err) against t on the window.
pub fn fit_pure_exponential(
    times: &[f64],
    errors: &[f64],
    window: (f64, f64),
) -> Result<FitReport> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(errors)
        .filter(|&(&t, &e)| t >= window.0 && t <= window.1 && e > 0.0)
        .map(|(&t, &e)| (t, e.ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::Fit("too few usable points for a pure-exponential fit".into()));
    }
    let (r, c, res) = line_fit(pts.into_iter());
    Ok(FitReport {
        model: FitModel::PureExponential,
        exponent: r,
        coefficients: vec![c],
        residual: res,
        window,
    })
}

/// Fixed-rate fit with a linear-in-t prefactor: err ≈ (a + b·t)·e^{rate·t},
/// solved by ordinary least squares on err·e^{−rate·t}. The residual is
/// reported in log space so it is comparable with the exponential fits.
pub fn fit_fixed_rate_affine(
    times: &[f64],
    errors: &[f64],
    window: (f64, f64),
    rate: f64,
) -> Result<FitReport> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(errors)
        .filter(|&(&t, &e)| t >= window.0 && t <= window.1 && e > 0.0)
        .map(|(&t, &e)| (t, e * (-rate * t).exp()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::Fit("too few usable points for an affine-prefactor fit".into()));
    }
    let (b, a, _) = line_fit(pts.iter().copied());
    let mut sq = 0.0;
    let mut n = 0usize;
    for &(t, g) in &pts {
        let model = a + b * t;
        if model > 0.0 && g > 0.0 {
            let d = g.ln() - model.ln();
            sq += d * d;
            n += 1;
        }
    }
    if n < 5 {
        return Err(Error::Fit("affine prefactor not positive on the window".into()));
    }
    Ok(FitReport {
        model: FitModel::ExponentialWithTPrefactor,
        exponent: rate,
        coefficients: vec![a, b],
        residual: (sq / n as f64).sqrt(),
        window,
    })
}

/// Ordinary least squares for y = c + r·x; returns (r, c, rms residual).
fn line_fit(pts: impl Iterator<Item = (f64, f64)>) -> (f64, f64, f64) {
    let pts: Vec<(f64, f64)> = pts.collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let r = (n * sxy - sx * sy) / denom;
    let c = (sy - r * sx) / n;
    let rms = (pts
        .iter()
        .map(|&(x, y)| {
            let d = y - (c + r * x);
            d * d
        })
        .sum::<f64>()
        / n)
        .sqrt();
    (r, c, rms)
}

/// One regressor `x^power·ln(x)^logpow` of a relation template.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Regressor {
    pub power: f64,
    pub logpow: u8,
}

/// Linear least squares for `y ≈ Σ cⱼ·x^{qⱼ}·ln(x)^{lⱼ}` over sampled
/// `(x, y)` pairs with x > 0.
///
/// If the regressor matrix is ill-conditioned (condition > 1e12) the
/// sampling range is shrunk toward 0 and the fit retried.
pub fn fit_relation(samples: &[(f64, f64)], regressors: &[Regressor]) -> Result<FitReport> {
    if regressors.is_empty() {
        return Err(Error::Fit("empty regressor template".into()));
    }
    let mut pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(x, _)| x > 0.0)
        .copied()
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    for _attempt in 0..5 {
        if pts.len() < regressors.len() + 2 {
            return Err(Error::Fit(format!(
                "too few samples ({}) for {} regressors",
                pts.len(),
                regressors.len()
            )));
        }
        let m = pts.len();
        let k = regressors.len();
        // Column scaling keeps the condition estimate meaningful across
        // very different power ranges.
        let design = DMatrix::from_fn(m, k, |i, j| {
            let (x, _) = pts[i];
            let r = regressors[j];
            x.powf(r.power) * x.ln().powi(r.logpow as i32)
        });
        let col_scale: Vec<f64> = (0..k)
            .map(|j| {
                let s = design.column(j).amax();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        let scaled = DMatrix::from_fn(m, k, |i, j| design[(i, j)] / col_scale[j]);
        let rhs = DVector::from_fn(m, |i, _| pts[i].1);
        let svd = scaled.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= 0.0 || smax / smin > 1e12 {
            // Shrink toward 0: keep the smaller-x half.
            pts.truncate(pts.len() / 2);
            continue;
        }
        let sol = svd
            .solve(&rhs, 0.0)
            .map_err(|e| Error::Fit(format!("SVD solve failed: {e}")))?;
        let coefficients: Vec<f64> = (0..k).map(|j| sol[j] / col_scale[j]).collect();
        let fitted = design * DVector::from_column_slice(&coefficients);
        let residual = ((&rhs - fitted).norm_squared() / m as f64).sqrt();
        let model = if regressors.iter().any(|r| r.logpow > 0) {
            FitModel::PowerLawWithLog
        } else {
            FitModel::PowerLaw
        };
        return Ok(FitReport {
            model,
            exponent: regressors[0].power,
            coefficients,
            residual,
            window: (pts[0].0, pts[pts.len() - 1].0),
        });
    }
    Err(Error::Fit(
        "regressor matrix remained ill-conditioned after range shrinking".into(),
    ))
}
