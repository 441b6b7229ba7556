//! The two convolution integrals against the linear semigroup.
//!
//! For a term `c·s^k·e^{rs}` and eigenvalue `λⱼ`, with `μ = r − λⱼ`:
//!
//! * tail:    `∫_t^∞ e^{λⱼ(t−s)} c·s^k·e^{rs} ds = c·e^{rt}·P_k(t)` where
//!   `P₀ = −1/μ` and `P_k(t) = −t^k/μ − (k/μ)·P_{k−1}(t)`, valid for μ < 0;
//! * forward: `∫_0^t e^{λⱼ(t−s)} c·s^k·e^{rs} ds`; off resonance this is
//!   `c·e^{rt}·Q_k(t) − c·Q_k(0)·e^{λⱼt}` with `Q₀ = 1/μ`,
//!   `Q_k(t) = t^k/μ − (k/μ)·Q_{k−1}(t)`; at exact resonance (`r = λⱼ` on
//!   the integer lattice) it is `c·t^{k+1}/(k+1)·e^{λⱼt}`.

use crate::error::{Error, Result};

use super::rate::RateCombo;
use super::series::{ExpSeries, ExpTerm};

/// `∫_t^∞ e^{λⱼ(t−s)} f(s) ds`, defined when every term of `f` decays
/// strictly faster than `e^{λⱼt}`.
pub fn tail_conv(j: usize, f: &ExpSeries) -> Result<ExpSeries> {
    let basis = f.basis().clone();
    assert!(j < basis.len(), "eigenvalue index out of range");
    let lambda = basis.eigenvalue(j);
    let mut out = ExpSeries::zero(basis.clone(), f.nparams());
    for term in f.terms() {
        if !term.rate.decays_faster_than_eigen(j, &basis) {
            return Err(Error::DivergentIntegral {
                j,
                lambda,
                rate: term.rate.value(),
                term: format!("{}·t^{}·e^{{{}t}}", term.coeff, term.tpow, term.rate.value()),
            });
        }
        let mu = term.rate.value() - lambda;
        let p = tail_coeffs(term.tpow, mu);
        let pieces = p.into_iter().enumerate().map(|(i, pi)| ExpTerm {
            coeff: term.coeff.scale(pi),
            tpow: i as u32,
            rate: term.rate.clone(),
        });
        out = out.add(&ExpSeries::from_terms(basis.clone(), f.nparams(), pieces));
    }
    Ok(out)
}

/// `∫_0^t e^{λⱼ(t−s)} f(s) ds`. Always convergent; resonance (decided on
/// the exact integer lattice, never by floating-point coincidence)
/// produces the t-power increment.
pub fn forward_conv(j: usize, f: &ExpSeries) -> ExpSeries {
    let basis = f.basis().clone();
    assert!(j < basis.len(), "eigenvalue index out of range");
    let lambda = basis.eigenvalue(j);
    let mut out = ExpSeries::zero(basis.clone(), f.nparams());
    for term in f.terms() {
        if term.rate.is_eigen_rate(j, &basis) {
            let piece = ExpTerm {
                coeff: term.coeff.scale(1.0 / (term.tpow as f64 + 1.0)),
                tpow: term.tpow + 1,
                rate: term.rate.clone(),
            };
            out = out.add(&ExpSeries::from_terms(basis.clone(), f.nparams(), [piece]));
            continue;
        }
        let mu = term.rate.value() - lambda;
        let q = forward_coeffs(term.tpow, mu);
        let boundary = ExpTerm {
            coeff: term.coeff.scale(-q[0]),
            tpow: 0,
            rate: RateCombo::eigen(j, &basis),
        };
        let mut pieces: Vec<ExpTerm> = q
            .into_iter()
            .enumerate()
            .map(|(i, qi)| ExpTerm {
                coeff: term.coeff.scale(qi),
                tpow: i as u32,
                rate: term.rate.clone(),
            })
            .collect();
        pieces.push(boundary);
        out = out.add(&ExpSeries::from_terms(basis.clone(), f.nparams(), pieces));
    }
    out
}

/// Coefficients of P_k: `∫_t^∞ s^k e^{μs} ds = e^{μt}·Σᵢ P[i]·tⁱ`.
fn tail_coeffs(k: u32, mu: f64) -> Vec<f64> {
    let mut p = vec![-1.0 / mu];
    for j in 1..=k {
        let mut next = vec![0.0; j as usize + 1];
        next[j as usize] = -1.0 / mu;
        for i in 0..j as usize {
            next[i] = -(j as f64) / mu * p[i];
        }
        p = next;
    }
    p
}

/// Coefficients of the antiderivative Q_k: `d/dt [e^{μt}·Σᵢ Q[i]·tⁱ] = t^k·e^{μt}`.
fn forward_coeffs(k: u32, mu: f64) -> Vec<f64> {
    let mut q = vec![1.0 / mu];
    for j in 1..=k {
        let mut next = vec![0.0; j as usize + 1];
        next[j as usize] = 1.0 / mu;
        for i in 0..j as usize {
            next[i] = -(j as f64) / mu * q[i];
        }
        q = next;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expalg::poly::ParamPoly;
    use crate::expalg::rate::RateBasis;

    fn single(basis: &RateBasis, c: f64, tpow: u32, coeffs: Vec<i64>) -> ExpSeries {
        ExpSeries::term(
            basis.clone(),
            ParamPoly::constant(basis.len(), c),
            tpow,
            RateCombo::new(coeffs, basis),
        )
    }

    #[test]
    fn tail_of_plain_exponential() {
        // λⱼ = a = -1, f = e^{2at} → -(1/a)·e^{2at} = e^{-2t}
        let b = RateBasis::new(vec![-1.0]);
        let f = single(&b, 1.0, 0, vec![2]);
        let g = tail_conv(0, &f).unwrap();
        assert_eq!(g.num_terms(), 1);
        assert_eq!(g.terms()[0].rate.value(), -2.0);
        assert_eq!(g.terms()[0].coeff, ParamPoly::constant(1, 1.0));
    }

    #[test]
    fn tail_of_zero_is_zero() {
        let b = RateBasis::new(vec![-1.0]);
        let z = ExpSeries::zero(b, 1);
        assert!(tail_conv(0, &z).unwrap().is_zero());
    }

    #[test]
    fn tail_with_t_power() {
        // λⱼ = -1, f = t·e^{-3t} → e^{-3t}(t/2 + 1/4).
        // Frozen from adaptive quadrature of ∫_t^∞ e^{-(t-s)}·s·e^{-3s} ds
        // at t ∈ {0, 0.5, 1}: 0.25, 0.1116883..., 0.0373262...
        let b = RateBasis::new(vec![-1.0, -3.0]);
        let f = single(&b, 1.0, 1, vec![0, 1]);
        let g = tail_conv(0, &f).unwrap();
        assert_eq!(g.num_terms(), 2);
        for (t, expect) in [
            (0.0, 0.25),
            (0.5, (0.5 / 2.0 + 0.25) * (-1.5f64).exp()),
            (1.0, (1.0 / 2.0 + 0.25) * (-3.0f64).exp()),
        ] {
            assert!((g.eval(t, &[0.0, 0.0]) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn tail_rejects_divergent_integrand() {
        // f = e^{-t} against λⱼ = -2: rate -1 ≥ -2, the integral diverges.
        let b = RateBasis::new(vec![-1.0, -2.0]);
        let f = single(&b, 1.0, 0, vec![1, 0]);
        let err = tail_conv(1, &f).unwrap_err();
        assert!(matches!(err, Error::DivergentIntegral { j: 1, .. }));
    }

    #[test]
    fn forward_resonant_increments_t_power() {
        // λⱼ = 2a via the lattice: basis (a, 2a) with a = -1;
        // f = c·e^{2at} (rate vector (2,0)) resonates with λ₂.
        let b = RateBasis::new(vec![-1.0, -2.0]);
        let f = single(&b, 3.0, 0, vec![2, 0]);
        let g = forward_conv(1, &f);
        assert_eq!(g.num_terms(), 1);
        let t = &g.terms()[0];
        assert_eq!(t.tpow, 1);
        assert_eq!(t.coeff, ParamPoly::constant(2, 3.0));
        assert_eq!(t.rate.value(), -2.0);
    }

    #[test]
    fn forward_nonresonant_has_boundary_term() {
        // λⱼ = κa with κ = 3: f = c·e^{2as} → [c/((2-κ)a)](e^{2at} - e^{κat})
        let a = -1.0;
        let b = RateBasis::new(vec![a, 3.0 * a]);
        let f = single(&b, 5.0, 0, vec![2, 0]);
        let g = forward_conv(1, &f);
        assert_eq!(g.num_terms(), 2);
        let c = 5.0 / ((2.0 - 3.0) * a);
        assert_eq!(g.terms()[0].rate.value(), 2.0 * a);
        assert_eq!(g.terms()[0].coeff, ParamPoly::constant(2, c));
        assert_eq!(g.terms()[1].rate.value(), 3.0 * a);
        assert_eq!(g.terms()[1].coeff, ParamPoly::constant(2, -c));
    }

    #[test]
    fn forward_of_zero_is_zero() {
        let b = RateBasis::new(vec![-1.0]);
        assert!(forward_conv(0, &ExpSeries::zero(b, 1)).is_zero());
    }

    #[test]
    fn no_resonance_by_floating_point_coincidence() {
        // Incommensurate basis with 2λ₁ numerically equal to λ₂ would be a
        // spectrum-policy bug; here 2λ₁ is close but distinct, and the
        // vectors differ, so no t-power appears.
        let b = RateBasis::new(vec![-1.0, -(2.0 - 1e-6)]);
        assert!(!b.is_commensurate());
        let f = single(&b, 1.0, 0, vec![2, 0]);
        let g = forward_conv(1, &f);
        assert!(g.terms().iter().all(|t| t.tpow == 0));
    }
}
