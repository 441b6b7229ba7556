//! Adaptive quadrature, including improper integrals with a known
//! exponential decay bound for the tail.

use crate::error::{Error, Result};

/// Upper limit of integration.
#[derive(Clone, Copy, Debug)]
pub enum UpperLimit {
    Finite(f64),
    /// `∞`, with the bound `|f(s)| ≤ coeff·e^{rate·s}` (rate < 0) used to
    /// choose the truncation point so the discarded tail is below tol/2.
    InfiniteWithDecay { rate: f64, coeff: f64 },
}

/// Adaptive Simpson quadrature with absolute error ≤ `tol`.
pub fn quadrature(
    f: impl Fn(f64) -> f64,
    a: f64,
    upper: UpperLimit,
    tol: f64,
) -> Result<f64> {
    match upper {
        UpperLimit::Finite(b) => Ok(adaptive_simpson(&f, a, b, tol)),
        UpperLimit::InfiniteWithDecay { rate, coeff } => {
            if rate >= 0.0 {
                return Err(Error::Quadrature(format!(
                    "tail bound must decay; got rate {rate}"
                )));
            }
            if coeff == 0.0 {
                return Ok(0.0);
            }
            // Tail beyond T is at most coeff·e^{rate·T}/|rate|.
            let t_cut = ((tol / 2.0 * rate.abs() / coeff.abs()).ln() / rate).max(a + 1.0);
            Ok(adaptive_simpson(&f, a, t_cut, tol / 2.0))
        }
    }
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}
