//! Finite sums of terms `p(params)·t^k·e^{rate·t}` — the closure class of
//! every iterate built in this library.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

use super::poly::ParamPoly;
use super::rate::{RateBasis, RateCombo};

/// Hard cap on stored terms per series; exceeding it is a diagnosable
/// error rather than a hang.
pub const TERM_CAP: usize = 10_000;

/// Default slack applied to the truncation boundary. Used only for the
/// rate-threshold filter, never for resonance decisions.
pub const TOL_RATE: f64 = 1e-9;

/// One exponential-polynomial term.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpTerm {
    pub coeff: ParamPoly,
    pub tpow: u32,
    pub rate: RateCombo,
}

/// Canonical-form series: terms sorted by descending rate value then
/// ascending power of t; no two terms share (rate multiplicities, tpow).
#[derive(Clone, Debug, PartialEq)]
pub struct ExpSeries {
    basis: RateBasis,
    nparams: usize,
    terms: Vec<ExpTerm>,
}

/// Machine-readable record for one term, as emitted by the CLI.
#[derive(Debug, Serialize)]
pub struct TermRecord {
    pub rate_coeffs: Vec<i64>,
    pub rate_value: f64,
    pub tpow: u32,
    pub coeff_poly: Vec<(Vec<u32>, f64)>,
}

impl ExpSeries {
    pub fn zero(basis: RateBasis, nparams: usize) -> Self {
        Self { basis, nparams, terms: Vec::new() }
    }

    pub fn from_terms(
        basis: RateBasis,
        nparams: usize,
        terms: impl IntoIterator<Item = ExpTerm>,
    ) -> Self {
        let mut s = Self::zero(basis, nparams);
        s.extend(terms);
        s.canonicalize();
        s
    }

    /// The pure linear-flow component `e^{λⱼt}·pⱼ` where `pⱼ` is the j-th
    /// parameter; the parameter count equals the eigenvalue count.
    pub fn exp_param(basis: &RateBasis, j: usize) -> Self {
        let n = basis.len();
        Self::from_terms(
            basis.clone(),
            n,
            [ExpTerm {
                coeff: ParamPoly::var(n, j),
                tpow: 0,
                rate: RateCombo::eigen(j, basis),
            }],
        )
    }

    /// A single term `p·t^k·e^{rate·t}`.
    pub fn term(basis: RateBasis, coeff: ParamPoly, tpow: u32, rate: RateCombo) -> Self {
        let nparams = coeff.nvars();
        Self::from_terms(basis, nparams, [ExpTerm { coeff, tpow, rate }])
    }

    fn extend(&mut self, terms: impl IntoIterator<Item = ExpTerm>) {
        for t in terms {
            debug_assert_eq!(t.coeff.nvars(), self.nparams);
            debug_assert_eq!(t.rate.coeffs().len(), self.basis.len());
            self.terms.push(t);
        }
    }

    fn canonicalize(&mut self) {
        let mut merged: BTreeMap<(Vec<i64>, u32), ParamPoly> = BTreeMap::new();
        for t in self.terms.drain(..) {
            let key = (t.rate.coeffs().to_vec(), t.tpow);
            match merged.get_mut(&key) {
                Some(p) => *p = p.add(&t.coeff),
                None => {
                    merged.insert(key, t.coeff);
                }
            }
        }
        let basis = &self.basis;
        self.terms = merged
            .into_iter()
            .filter(|(_, p)| !p.is_zero())
            .map(|((coeffs, tpow), coeff)| ExpTerm {
                rate: RateCombo::new(coeffs, basis),
                tpow,
                coeff,
            })
            .collect();
        self.terms.sort_by(|a, b| {
            b.rate
                .value()
                .total_cmp(&a.rate.value())
                .then_with(|| a.rate.coeffs().cmp(b.rate.coeffs()))
                .then_with(|| a.tpow.cmp(&b.tpow))
        });
    }

    fn check_cap(&self) -> Result<()> {
        if self.terms.len() > TERM_CAP {
            Err(Error::TermOverflow { count: self.terms.len(), cap: TERM_CAP })
        } else {
            Ok(())
        }
    }

    fn check_compatible(&self, other: &ExpSeries) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::Dimension(format!(
                "series over different eigenvalue lists ({} vs {})",
                self.basis.len(),
                other.basis.len()
            )));
        }
        if self.nparams != other.nparams {
            return Err(Error::Dimension(format!(
                "series over different parameter sets ({} vs {})",
                self.nparams, other.nparams
            )));
        }
        Ok(())
    }

    pub fn basis(&self) -> &RateBasis {
        &self.basis
    }

    pub fn nparams(&self) -> usize {
        self.nparams
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add(&self, other: &ExpSeries) -> ExpSeries {
        assert!(self.check_compatible(other).is_ok(), "incompatible series");
        let mut out = self.clone();
        out.extend(other.terms.iter().cloned());
        out.canonicalize();
        out
    }

    pub fn sub(&self, other: &ExpSeries) -> ExpSeries {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> ExpSeries {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff = t.coeff.scale(c);
        }
        out.canonicalize();
        out
    }

    pub fn mul_poly(&self, p: &ParamPoly) -> ExpSeries {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff = t.coeff.mul(p);
        }
        out.canonicalize();
        out
    }

    /// Pointwise product: rates add as integer vectors, powers of t add,
    /// coefficient polynomials multiply.
    pub fn mul(&self, other: &ExpSeries) -> Result<ExpSeries> {
        self.check_compatible(other)?;
        let mut out = ExpSeries::zero(self.basis.clone(), self.nparams);
        for a in &self.terms {
            for b in &other.terms {
                out.terms.push(ExpTerm {
                    coeff: a.coeff.mul(&b.coeff),
                    tpow: a.tpow + b.tpow,
                    rate: a.rate.add(&b.rate, &self.basis),
                });
            }
        }
        out.canonicalize();
        out.check_cap()?;
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<ExpSeries> {
        let mut out = ExpSeries::term(
            self.basis.clone(),
            ParamPoly::constant(self.nparams, 1.0),
            0,
            RateCombo::zero(&self.basis),
        );
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Retain exactly the terms with `rate.value ≥ order − tol_rate`;
    /// t-power terms at the boundary rate pass the same filter.
    pub fn truncate(&self, order: f64, tol_rate: f64) -> ExpSeries {
        let mut out = self.clone();
        out.terms.retain(|t| t.rate.value() >= order - tol_rate);
        out
    }

    pub fn eval(&self, t: f64, params: &[f64]) -> f64 {
        assert_eq!(params.len(), self.nparams, "parameter vector length mismatch");
        self.terms
            .iter()
            .map(|term| {
                term.coeff.eval(params)
                    * t.powi(term.tpow as i32)
                    * (term.rate.value() * t).exp()
            })
            .sum()
    }

    /// Symbolic value at t = 0: the sum of coefficient polynomials of the
    /// t⁰ terms (every t^k with k > 0 vanishes, every exponential is 1...
    /// but distinct rates stay distinct terms, so only their coefficients
    /// survive summed).
    pub fn at_zero(&self) -> ParamPoly {
        let mut out = ParamPoly::zero(self.nparams);
        for t in &self.terms {
            if t.tpow == 0 {
                out = out.add(&t.coeff);
            }
        }
        out
    }

    /// d/dt of the series: `c·t^k·e^{rt}` ↦ `c·(k·t^{k-1} + r·t^k)·e^{rt}`.
    pub fn differentiate(&self) -> ExpSeries {
        let mut out = ExpSeries::zero(self.basis.clone(), self.nparams);
        for t in &self.terms {
            out.terms.push(ExpTerm {
                coeff: t.coeff.scale(t.rate.value()),
                tpow: t.tpow,
                rate: t.rate.clone(),
            });
            if t.tpow > 0 {
                out.terms.push(ExpTerm {
                    coeff: t.coeff.scale(t.tpow as f64),
                    tpow: t.tpow - 1,
                    rate: t.rate.clone(),
                });
            }
        }
        out.canonicalize();
        out
    }

    /// Substitute polynomial maps for the parameters; the result is a
    /// series in the arity of the maps.
    pub fn substitute_params(&self, maps: &[ParamPoly]) -> ExpSeries {
        assert_eq!(maps.len(), self.nparams);
        let out_vars = maps.first().map_or(self.nparams, ParamPoly::nvars);
        let mut out = ExpSeries::zero(self.basis.clone(), out_vars);
        for t in &self.terms {
            out.terms.push(ExpTerm {
                coeff: t.coeff.compose(maps),
                tpow: t.tpow,
                rate: t.rate.clone(),
            });
        }
        out.canonicalize();
        out
    }

    /// Keep only the terms satisfying a predicate; used to slice out e.g.
    /// the sector free of a given parameter.
    pub fn filter_terms(&self, mut pred: impl FnMut(&ExpTerm) -> bool) -> ExpSeries {
        let mut out = self.clone();
        out.terms.retain(|t| pred(t));
        out
    }

    /// The coefficient polynomial at an exact rate, summed over
    /// lattice-equal rate vectors.
    pub fn coeff_at_rate(&self, rate: &RateCombo, tpow: u32) -> ParamPoly {
        let mut out = ParamPoly::zero(self.nparams);
        for t in &self.terms {
            if t.tpow == tpow && t.rate.same_rate(rate, &self.basis) {
                out = out.add(&t.coeff);
            }
        }
        out
    }

    /// The coefficient polynomial of one exact multiplicity vector.
    pub fn coeff_at_vector(&self, coeffs: &[i64], tpow: u32) -> ParamPoly {
        self.terms
            .iter()
            .find(|t| t.tpow == tpow && t.rate.coeffs() == coeffs)
            .map_or_else(|| ParamPoly::zero(self.nparams), |t| t.coeff.clone())
    }

    pub fn term_records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|t| TermRecord {
                rate_coeffs: t.rate.coeffs().to_vec(),
                rate_value: t.rate.value(),
                tpow: t.tpow,
                coeff_poly: t.coeff.term_records(),
            })
            .collect()
    }

    /// Render with a parameter prefix, e.g. `y01·e^{-1t} + (1/a)·e^{-2t}`.
    pub fn display_with(&self, prefix: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for t in &self.terms {
            let coeff = t.coeff.display_with(prefix);
            let coeff = if t.coeff.num_terms() > 1 {
                format!("({coeff})")
            } else {
                coeff
            };
            let mut s = coeff;
            if t.tpow == 1 {
                s.push_str("·t");
            } else if t.tpow > 1 {
                s.push_str(&format!("·t^{}", t.tpow));
            }
            s.push_str(&format!("·e^{{{:.6}t}}", t.rate.value()));
            parts.push(s);
        }
        parts.join(" + ")
    }
}

impl fmt::Display for ExpSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with("y0"))
    }
}

/// Substitute the argument series into a polynomial: each monomial
/// `c·x^e` becomes `c·Π argsᵢ^{eᵢ}`, summed and canonicalized.
pub fn substitute_into_poly(b: &ParamPoly, args: &[ExpSeries]) -> Result<ExpSeries> {
    if b.nvars() != args.len() {
        return Err(Error::Dimension(format!(
            "polynomial in {} variables applied to {} series",
            b.nvars(),
            args.len()
        )));
    }
    let first = args.first().ok_or_else(|| {
        Error::Dimension("substitute_into_poly needs at least one argument".into())
    })?;
    for a in args {
        first.check_compatible(a)?;
    }
    let mut out = ExpSeries::zero(first.basis().clone(), first.nparams());
    for (exps, c) in b.terms() {
        let mut m = ExpSeries::term(
            first.basis().clone(),
            ParamPoly::constant(first.nparams(), c),
            0,
            RateCombo::zero(first.basis()),
        );
        for (i, &k) in exps.iter().enumerate() {
            if k > 0 {
                m = m.mul(&args[i].pow(k)?)?;
            }
        }
        out = out.add(&m);
    }
    out.check_cap()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis12() -> RateBasis {
        RateBasis::new(vec![-1.0, -2.0])
    }

    #[test]
    fn mul_adds_rate_vectors() {
        // (e^{at}) · (e^{at}) → e^{2at} with a = -1.
        let b = RateBasis::new(vec![-1.0]);
        let one = ParamPoly::constant(1, 1.0);
        let e_at = ExpSeries::term(b.clone(), one.clone(), 0, RateCombo::eigen(0, &b));
        let sq = e_at.mul(&e_at).unwrap();
        assert_eq!(sq.num_terms(), 1);
        assert_eq!(sq.terms()[0].rate.coeffs(), &[2]);
        assert_eq!(sq.terms()[0].rate.value(), -2.0);
    }

    #[test]
    fn mul_single_terms() {
        // (y01·e^{at}) · (t·e^{2at}) → y01·t·e^{3at}
        let b = RateBasis::new(vec![-1.0]);
        let f = ExpSeries::term(
            b.clone(),
            ParamPoly::var(1, 0),
            0,
            RateCombo::eigen(0, &b),
        );
        let g = ExpSeries::term(
            b.clone(),
            ParamPoly::constant(1, 1.0),
            1,
            RateCombo::new(vec![2], &b),
        );
        let fg = f.mul(&g).unwrap();
        assert_eq!(fg.num_terms(), 1);
        let t = &fg.terms()[0];
        assert_eq!(t.rate.coeffs(), &[3]);
        assert_eq!(t.tpow, 1);
        assert_eq!(t.coeff, ParamPoly::var(1, 0));
    }

    #[test]
    fn mul_by_zero_annihilates() {
        let b = basis12();
        let f = ExpSeries::exp_param(&b, 0);
        let z = ExpSeries::zero(b, 2);
        assert!(f.mul(&z).unwrap().is_zero());
    }

    #[test]
    fn mul_checks_dimensions() {
        let f = ExpSeries::exp_param(&basis12(), 0);
        let g = ExpSeries::exp_param(&RateBasis::new(vec![-1.0]), 0);
        assert!(matches!(f.mul(&g), Err(Error::Dimension(_))));
    }

    #[test]
    fn substitution_monomial_power() {
        // b(x) = x₁², args = (y01·e^{at}, 0) → y01²·e^{2at}
        let b = basis12();
        let args = [ExpSeries::exp_param(&b, 0), ExpSeries::zero(b.clone(), 2)];
        let poly = ParamPoly::monomial(2, vec![2, 0], 1.0);
        let out = substitute_into_poly(&poly, &args).unwrap();
        assert_eq!(out.num_terms(), 1);
        assert_eq!(out.terms()[0].rate.coeffs(), &[2, 0]);
        assert_eq!(out.terms()[0].coeff, ParamPoly::monomial(2, vec![2, 0], 1.0));
    }

    #[test]
    fn substitution_star_node_component() {
        // b₁(x) = x₁² + 8x₁x₂ + x₂², args = (y01 e^{at}, y02 e^{at})
        // → (y01² + 8 y01 y02 + y02²) e^{2at}
        let b = RateBasis::new(vec![-1.0, -1.0]);
        let args = [ExpSeries::exp_param(&b, 0), ExpSeries::exp_param(&b, 1)];
        let poly = ParamPoly::from_terms(
            2,
            [
                (vec![2, 0], 1.0),
                (vec![1, 1], 8.0),
                (vec![0, 2], 1.0),
            ],
        );
        let out = substitute_into_poly(&poly, &args).unwrap();
        // Star node: both eigenvalues equal, lattice merges all order-2
        // rates by vector; (2,0), (1,1), (0,2) stay distinct vectors.
        assert_eq!(out.num_terms(), 3);
        let total: f64 = out.eval(0.3, &[1.0, 2.0]);
        let expect = (1.0 + 16.0 + 4.0) * (-2.0 * 0.3_f64).exp();
        assert!((total - expect).abs() < 1e-14);
    }

    #[test]
    fn substitution_cubic() {
        // b(x) = x₁³ with args = (y01·e^{-t}, anything) → y01³e^{-3t}
        let b = basis12();
        let args = [ExpSeries::exp_param(&b, 0), ExpSeries::exp_param(&b, 1)];
        let poly = ParamPoly::monomial(2, vec![3, 0], 1.0);
        let out = substitute_into_poly(&poly, &args).unwrap();
        assert_eq!(out.num_terms(), 1);
        assert_eq!(out.terms()[0].rate.value(), -3.0);
        assert_eq!(out.terms()[0].coeff, ParamPoly::monomial(2, vec![3, 0], 1.0));
    }

    #[test]
    fn truncate_threshold_filter() {
        // f = e^{-t} + e^{-2t} + e^{-3t}, order = -2 → e^{-t} + e^{-2t}
        let b = RateBasis::new(vec![-1.0]);
        let one = ParamPoly::constant(1, 1.0);
        let f = ExpSeries::from_terms(
            b.clone(),
            1,
            (1..=3).map(|k| ExpTerm {
                coeff: one.clone(),
                tpow: 0,
                rate: RateCombo::new(vec![k], &b),
            }),
        );
        let g = f.truncate(-2.0, TOL_RATE);
        assert_eq!(g.num_terms(), 2);
        assert_eq!(g.terms()[1].rate.value(), -2.0);
        // A t-power term at the boundary rate is retained.
        let h = ExpSeries::term(b.clone(), one, 1, RateCombo::new(vec![2], &b));
        assert_eq!(h.truncate(-2.0, TOL_RATE).num_terms(), 1);
        // Idempotent.
        assert_eq!(g.truncate(-2.0, TOL_RATE), g);
    }

    #[test]
    fn eval_basics() {
        let b = RateBasis::new(vec![-1.0]);
        let f = ExpSeries::term(
            b.clone(),
            ParamPoly::constant(1, 1.0),
            0,
            RateCombo::eigen(0, &b),
        );
        assert_eq!(f.eval(0.0, &[0.0]), 1.0);
        let g = ExpSeries::exp_param(&b, 0);
        assert!((g.eval(1.0, &[2.0]) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn canonical_merges_duplicates() {
        let b = basis12();
        let one = ParamPoly::constant(2, 1.0);
        let t = ExpTerm {
            coeff: one,
            tpow: 0,
            rate: RateCombo::eigen(0, &b),
        };
        let f = ExpSeries::from_terms(b, 2, [t.clone(), t]);
        assert_eq!(f.num_terms(), 1);
        assert_eq!(f.terms()[0].coeff, ParamPoly::constant(2, 2.0));
    }

    #[test]
    fn derivative_matches_closed_form() {
        let b = RateBasis::new(vec![-1.0]);
        let f = ExpSeries::term(
            b.clone(),
            ParamPoly::constant(1, 1.0),
            2,
            RateCombo::new(vec![3], &b),
        );
        let df = f.differentiate();
        // d/dt t²e^{-3t} = (2t - 3t²)e^{-3t}
        for &t in &[0.2f64, 1.0, 2.5] {
            let expect = (2.0 * t - 3.0 * t * t) * (-3.0 * t).exp();
            assert!((df.eval(t, &[0.0]) - expect).abs() < 1e-12);
        }
    }
}
