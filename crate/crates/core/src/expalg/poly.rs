//! Sparse multivariate polynomials in the free parameters (y₀₁…y₀ₙ or
//! x₀₁…x₀ₙ) with real coefficients.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

/// A polynomial stored as a map from exponent vector to coefficient.
/// Canonical form: exponent vectors sorted (BTreeMap order), duplicates
/// merged, no exactly-zero coefficients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl ParamPoly {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.insert(vec![0; nvars], c);
        p
    }

    /// The variable `xᵢ` (0-based).
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars);
        let mut exps = vec![0u32; nvars];
        exps[i] = 1;
        Self::monomial(nvars, exps, 1.0)
    }

    pub fn monomial(nvars: usize, exps: Vec<u32>, coeff: f64) -> Self {
        assert_eq!(exps.len(), nvars);
        let mut p = Self::zero(nvars);
        p.insert(exps, coeff);
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Self {
        let mut p = Self::zero(nvars);
        for (exps, c) in terms {
            assert_eq!(exps.len(), nvars);
            p.insert(exps, c);
        }
        p
    }

    fn insert(&mut self, exps: Vec<u32>, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let entry = self.terms.entry(exps);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = *o.get() + coeff;
                if sum == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    /// Coefficient of a specific monomial (0 if absent).
    pub fn coeff(&self, exps: &[u32]) -> f64 {
        self.terms.get(exps).copied().unwrap_or(0.0)
    }

    pub fn add(&self, other: &ParamPoly) -> ParamPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.insert(e.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &ParamPoly) -> ParamPoly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> ParamPoly {
        if c == 0.0 {
            return ParamPoly::zero(self.nvars);
        }
        let mut out = ParamPoly::zero(self.nvars);
        for (e, &a) in &self.terms {
            out.insert(e.clone(), a * c);
        }
        out
    }

    pub fn mul(&self, other: &ParamPoly) -> ParamPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = ParamPoly::zero(self.nvars);
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.insert(exps, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> ParamPoly {
        let mut out = ParamPoly::constant(self.nvars, 1.0);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn eval(&self, params: &[f64]) -> f64 {
        assert_eq!(params.len(), self.nvars, "parameter vector length mismatch");
        self.terms
            .iter()
            .map(|(e, &c)| {
                c * e
                    .iter()
                    .zip(params)
                    .map(|(&k, &x)| x.powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// Substitute `args[i]` for variable `i`. The result has the arity of
    /// the arguments.
    pub fn compose(&self, args: &[ParamPoly]) -> ParamPoly {
        assert_eq!(args.len(), self.nvars);
        let out_vars = args.first().map_or(self.nvars, ParamPoly::nvars);
        let mut out = ParamPoly::zero(out_vars);
        for (e, &c) in &self.terms {
            let mut m = ParamPoly::constant(out_vars, c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    m = m.mul(&args[i].pow(k));
                }
            }
            out = out.add(&m);
        }
        out
    }

    /// Largest total degree present, or `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Smallest total degree present, or `None` for the zero polynomial.
    pub fn min_total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).min()
    }

    /// Keep only terms with total degree ≤ `max_degree`.
    pub fn truncate_degree(&self, max_degree: u32) -> ParamPoly {
        let mut out = ParamPoly::zero(self.nvars);
        for (e, &c) in &self.terms {
            if e.iter().sum::<u32>() <= max_degree {
                out.insert(e.clone(), c);
            }
        }
        out
    }

    /// Keep only terms whose degree in variable `i` equals `deg`.
    pub fn select_var_degree(&self, i: usize, deg: u32) -> ParamPoly {
        let mut out = ParamPoly::zero(self.nvars);
        for (e, &c) in &self.terms {
            if e[i] == deg {
                out.insert(e.clone(), c);
            }
        }
        out
    }

    /// The homogeneous part of total degree `deg`.
    pub fn homogeneous_part(&self, deg: u32) -> ParamPoly {
        let mut out = ParamPoly::zero(self.nvars);
        for (e, &c) in &self.terms {
            if e.iter().sum::<u32>() == deg {
                out.insert(e.clone(), c);
            }
        }
        out
    }

    /// Term list as (exponents, coefficient) pairs in canonical order.
    pub fn term_records(&self) -> Vec<(Vec<u32>, f64)> {
        self.terms.iter().map(|(e, &c)| (e.clone(), c)).collect()
    }

    /// Render with a parameter name prefix, e.g. `y0` → `y01^2·y02`.
    pub fn display_with(&self, prefix: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (e, &c) in &self.terms {
            let mut factors = Vec::new();
            if (c - 1.0).abs() > 1e-14 || e.iter().all(|&k| k == 0) {
                factors.push(format_coeff(c));
            }
            for (i, &k) in e.iter().enumerate() {
                if k == 1 {
                    factors.push(format!("{prefix}{}", i + 1));
                } else if k > 1 {
                    factors.push(format!("{prefix}{}^{}", i + 1, k));
                }
            }
            parts.push(factors.join("·"));
        }
        parts.join(" + ")
    }
}

fn format_coeff(c: f64) -> String {
    if c == c.round() && c.abs() < 1e12 {
        format!("{}", c as i64)
    } else {
        let s = format!("{c:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl fmt::Display for ParamPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with("y0"))
    }
}
