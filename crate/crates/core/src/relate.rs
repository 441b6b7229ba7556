//! Component-vs-component asymptotic relations: convert the
//! time-parameterized iterate expansions into expansions of one solution
//! component in another, including the resonant logarithm terms and the
//! change-of-basis form for diagonalizable systems.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expalg::ParamPoly;
use crate::iterates::{iterate_closely, iterate_widely_2d, IterateSet};
use crate::system::{Classification, SinkSystem};

/// A relation coefficient: numeric once the initial-condition data is
/// available, or left symbolic (to be fitted) otherwise.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Coefficient {
    Known(f64),
    Unknown(String),
}

impl Coefficient {
    pub fn known(&self) -> Option<f64> {
        match self {
            Coefficient::Known(v) => Some(*v),
            Coefficient::Unknown(_) => None,
        }
    }
}

/// One term `coeff·x^power·ln(x)^logpow` of a relation.
#[derive(Clone, Debug, Serialize)]
pub struct RelationTerm {
    pub power: f64,
    pub logpow: u8,
    pub coeff: Coefficient,
    pub ic_dependent: bool,
}

/// An expansion of component `dep` in component `indep` as the latter
/// tends to 0⁺, with terms sorted by ascending power (the log term after
/// the plain term of equal power) and the remainder order recorded as
/// (power, strict): strict means o(x^power), otherwise O(x^power).
#[derive(Clone, Debug, Serialize)]
pub struct RelationSeries {
    pub indep: usize,
    pub dep: usize,
    pub terms: Vec<RelationTerm>,
    pub remainder_power: f64,
    pub remainder_strict: bool,
}

impl RelationSeries {
    fn sort_terms(&mut self) {
        self.terms.sort_by(|a, b| {
            a.power
                .total_cmp(&b.power)
                .then_with(|| a.logpow.cmp(&b.logpow))
        });
    }

    /// Coefficient of `x^power·ln(x)^logpow` if present and numeric.
    pub fn coeff(&self, power: f64, logpow: u8) -> Option<f64> {
        self.terms
            .iter()
            .find(|t| t.power == power && t.logpow == logpow)
            .and_then(|t| t.coeff.known())
    }

    /// Render as text, e.g. `x2 = 3·x1 + 18·x1^2·ln(x1) + C·x1^2 + o(x1^2)`.
    pub fn render(&self) -> String {
        let xi = format!("x{}", self.indep + 1);
        let xd = format!("x{}", self.dep + 1);
        let mut parts = Vec::new();
        for t in &self.terms {
            let c = match &t.coeff {
                Coefficient::Known(v) => format!("{v:.6}"),
                Coefficient::Unknown(name) => name.clone(),
            };
            let mut s = format!("{c}·{xi}");
            if t.power != 1.0 {
                s.push_str(&format!("^{}", trim_float(t.power)));
            }
            if t.logpow == 1 {
                s.push_str(&format!("·ln({xi})"));
            }
            parts.push(s);
        }
        let rem = if self.remainder_strict { "o" } else { "O" };
        format!(
            "{xd} = {} + {rem}({xi}^{})",
            parts.join(" + "),
            trim_float(self.remainder_power)
        )
    }
}

fn trim_float(v: f64) -> String {
    if v == v.round() {
        format!("{}", v as i64)
    } else {
        format!("{v:.6}")
    }
}

// ---------------------------------------------------------------------------
// Dense truncated power series (index = power, constant term at 0).

pub(crate) fn ps_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for (i, &ai) in a.iter().enumerate().take(n + 1) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(n + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Compose `outer(inner(x))` to order n; `inner` must have zero constant
/// term.
pub(crate) fn ps_compose(outer: &[f64], inner: &[f64], n: usize) -> Vec<f64> {
    assert!(inner.first().is_none_or(|&c| c == 0.0));
    let mut out = vec![0.0; n + 1];
    if let Some(&c0) = outer.first() {
        out[0] = c0;
    }
    let mut power = vec![0.0; n + 1];
    power[0] = 1.0;
    for (_j, &cj) in outer.iter().enumerate().skip(1).take(n) {
        power = ps_mul(&power, inner, n);
        if cj != 0.0 {
            for (k, &pk) in power.iter().enumerate() {
                out[k] += cj * pk;
            }
        }
    }
    out
}

/// Compositional inverse of `f` (f[0] = 0, f[1] ≠ 0) to order n:
/// f(g(x)) = x + O(x^{n+1}).
pub(crate) fn ps_invert(f: &[f64], n: usize) -> Vec<f64> {
    assert!(f[0] == 0.0 && f[1] != 0.0);
    let mut g = vec![0.0; n + 1];
    g[1] = 1.0 / f[1];
    for k in 2..=n {
        let comp = ps_compose(f, &g, k);
        g[k] = -comp[k] / f[1];
    }
    g
}

// ---------------------------------------------------------------------------
// Power series carrying a single logarithm slot at the top order.

/// `Σ_{i≤n} poly[i]·xⁱ + log·xⁿ·ln(x)`: the only shape the resonant
/// expansions need, since logarithms first enter at the resonance order.
#[derive(Clone, Debug)]
struct LogTop {
    n: usize,
    poly: Vec<f64>,
    log: f64,
}

impl LogTop {
    fn from_poly(poly: Vec<f64>, n: usize) -> Self {
        let mut poly = poly;
        poly.resize(n + 1, 0.0);
        Self { n, poly, log: 0.0 }
    }

    fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            poly: self.poly.iter().map(|&v| c * v).collect(),
            log: c * self.log,
        }
    }

    fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            poly: self
                .poly
                .iter()
                .zip(&other.poly)
                .map(|(a, b)| a + b)
                .collect(),
            log: self.log + other.log,
        }
    }

    /// Compositional inverse. A positive leading coefficient is required
    /// when a log is present, since ln of the leading coefficient enters.
    fn invert(&self) -> Result<Self> {
        let a1 = self.poly[1];
        if a1 == 0.0 {
            return Err(Error::Normalization(
                "cannot invert a series with zero leading coefficient".into(),
            ));
        }
        if self.log != 0.0 && a1 < 0.0 {
            return Err(Error::Normalization(
                "log-bearing series needs a positive leading coefficient".into(),
            ));
        }
        let mut out = Self::from_poly(ps_invert(&self.poly, self.n), self.n);
        if self.log != 0.0 {
            let a_pow = a1.powi(self.n as i32 + 1);
            out.log = -self.log / a_pow;
            out.poly[self.n] += self.log * a1.ln() / a_pow;
        }
        Ok(out)
    }

    /// `self(inner(x))` where inner(0) = 0.
    fn compose(&self, inner: &Self) -> Result<Self> {
        assert_eq!(self.n, inner.n);
        let g1 = inner.poly[1];
        let mut poly = ps_compose(&self.poly, &inner.poly, self.n);
        let mut log = self.poly[1] * inner.log;
        if self.log != 0.0 {
            if g1 <= 0.0 {
                return Err(Error::Normalization(
                    "log-bearing composition needs a positive inner leading coefficient".into(),
                ));
            }
            let gp = g1.powi(self.n as i32);
            log += self.log * gp;
            poly[self.n] += self.log * gp * g1.ln();
        }
        Ok(Self { n: self.n, poly, log })
    }
}

// ---------------------------------------------------------------------------
// Slow-direction expansion data extracted from the iterates.

/// Coefficients of the widely-spaced planar expansion in powers of
/// `w = e^{at}y₀₁`:
/// `x₁ = Σ ξᵢwⁱ + …` (ξ₁ = 1) and
/// `x₂ = Σ ρᵢwⁱ + ϱ·e^{κat} + τ·t·e^{κat} + …` (integer κ),
/// with ϱ kept symbolic in y₀ and τ = t_coeff·y₀₁^κ.
#[derive(Clone, Debug)]
pub struct SlowSeries {
    order: u32,
    kappa_int: Option<u32>,
    xi: Vec<f64>,
    rho: Vec<f64>,
    varrho: Option<ParamPoly>,
    t_coeff: f64,
}

impl SlowSeries {
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Integer κ when the spectrum is resonant (λ₂ = κλ₁ exactly).
    pub fn kappa_int(&self) -> Option<u32> {
        self.kappa_int
    }

    /// ξ₁…ξ_order (index 0 unused).
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// ρ₁…ρ_order (ρ₁ = 0; for integer κ only indices < κ are filled).
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// The e^{κat} coefficient, symbolic in y₀ (integer κ only).
    pub fn varrho(&self) -> Option<&ParamPoly> {
        self.varrho.as_ref()
    }

    /// Coefficient c with τ = c·y₀₁^κ multiplying t·e^{κat} (integer κ);
    /// zero when no secondary resonance feeds the fast component.
    pub fn t_coeff(&self) -> f64 {
        self.t_coeff
    }
}

/// Extract the slow-direction series from the planar iterates (the
/// spacing regime picks the construction), to the requested order in w.
pub fn slow_series(sys: &SinkSystem, order: u32) -> Result<SlowSeries> {
    if sys.dim() != 2 {
        return Err(Error::UnsupportedShape(
            "slow-series extraction requires a planar system".into(),
        ));
    }
    if order < 2 {
        return Err(Error::Input("slow-series order must be at least 2".into()));
    }
    let iters = match sys.classification() {
        Classification::WidelySpaced => iterate_widely_2d(sys, order)?,
        Classification::CloselySpaced => iterate_closely(sys, order)?,
    };
    slow_series_from_iterates(sys, &iters, order)
}

fn slow_series_from_iterates(
    sys: &SinkSystem,
    iters: &IterateSet,
    order: u32,
) -> Result<SlowSeries> {
    let basis = sys.spectrum().rate_basis();
    let kappa_int = basis.lattice().and_then(|p| {
        if p[1] % p[0] == 0 && p[1] / p[0] >= 2 {
            Some((p[1] / p[0]) as u32)
        } else {
            None
        }
    });
    let last = iters.m_max();
    let slow = iters.series(last, 0);
    let fast = iters.series(last, 1);

    let mut xi = vec![0.0; order as usize + 1];
    let mut rho = vec![0.0; order as usize + 1];
    for i in 1..=order {
        let mono = vec![i, 0u32];
        let rate = [i as i64, 0i64];
        for (series, store, name) in [(slow, &mut xi, "x1"), (fast, &mut rho, "x2")] {
            // At the resonance order the fast e^{κat} class is handled
            // separately as ϱ.
            if name == "x2" && kappa_int == Some(i) {
                continue;
            }
            let coeff = series.coeff_at_vector(&rate, 0);
            let val = coeff.coeff(&mono);
            for (e, c) in coeff.terms() {
                if e != mono.as_slice() && c != 0.0 {
                    return Err(Error::InternalConsistency(format!(
                        "unexpected monomial {e:?} at rate {rate:?} in {name}"
                    )));
                }
            }
            store[i as usize] = val;
        }
    }
    if (xi[1] - 1.0).abs() > 1e-14 {
        return Err(Error::InternalConsistency(format!(
            "leading slow coefficient ξ₁ = {} ≠ 1",
            xi[1]
        )));
    }

    let (varrho, t_coeff) = match kappa_int {
        Some(k) if k <= order => {
            let eigen_rate = crate::expalg::RateCombo::eigen(1, basis);
            let varrho = fast.coeff_at_rate(&eigen_rate, 0);
            let tpoly = fast.coeff_at_rate(&eigen_rate, 1);
            let mono = vec![k, 0u32];
            let t_coeff = tpoly.coeff(&mono);
            for (e, c) in tpoly.terms() {
                if e != mono.as_slice() && c != 0.0 {
                    return Err(Error::InternalConsistency(format!(
                        "unexpected monomial {e:?} on the resonant t·e^{{κat}} term"
                    )));
                }
            }
            (Some(varrho), t_coeff)
        }
        _ => (None, 0.0),
    };
    Ok(SlowSeries { order, kappa_int, xi, rho, varrho, t_coeff })
}

/// Formal compositional inverse of the slow series: coefficients ν with
/// `e^{at}y₀₁ = Σ νᵢ x₁ⁱ + O(x₁^{order+1})`, ν₁ = 1.
pub fn invert_series(s: &SlowSeries) -> Result<Vec<f64>> {
    if s.xi[1] != 1.0 {
        return Err(Error::Normalization(format!(
            "series inversion requires ξ₁ = 1, got {}",
            s.xi[1]
        )));
    }
    Ok(ps_invert(&s.xi, s.order as usize))
}

// ---------------------------------------------------------------------------
// Star node (closely-spaced, equal eigenvalues, quadratic field).

/// Outcome of the star-node relation: the zero solution, or an expansion
/// with the roles of the components chosen by the initial condition.
#[derive(Clone, Debug, Serialize)]
pub enum StarRelation {
    ZeroSolution,
    Expansion(RelationSeries),
}

/// Quadratic coefficient of the star-node relation
/// `x₂ = (y₀₂/y₀₁)x₁ + [ξ₂/y₀₁² − y₀₂ξ₁/y₀₁³]x₁² + O(x₁³)`,
/// with ξ = (1/a)·b(y₀). `None` when y₀₁ = 0.
pub fn star_quadratic_coeff(sys: &SinkSystem, y0: [f64; 2]) -> Option<f64> {
    if y0[0] == 0.0 {
        return None;
    }
    let a = sys.spectrum().eigenvalues()[0];
    let b = sys.field().eval(&y0);
    let (xi1, xi2) = (b[0] / a, b[1] / a);
    Some(xi2 / (y0[0] * y0[0]) - y0[1] * xi1 / (y0[0] * y0[0] * y0[0]))
}

/// Star-node relation between the two components. Requires equal
/// eigenvalues (κ = 1) and a homogeneous quadratic field. The case
/// y₀₁ = 0 dispatches to the zero solution or to the inverted-role
/// expansion (x₁ in terms of x₂).
pub fn relate_star(sys: &SinkSystem, y0: [f64; 2]) -> Result<StarRelation> {
    if sys.dim() != 2 || sys.spectrum().kappa() != 1.0 {
        return Err(Error::Regime(
            "relate_star requires a planar star node (equal eigenvalues)".into(),
        ));
    }
    if sys.classification() != Classification::CloselySpaced {
        return Err(Error::Regime("star node must be closely-spaced".into()));
    }
    if sys.field().alpha() != 2 || sys.field().max_degree() != 2 {
        return Err(Error::Input(
            "relate_star requires a homogeneous quadratic field".into(),
        ));
    }
    if y0 == [0.0, 0.0] {
        return Ok(StarRelation::ZeroSolution);
    }
    let (indep, dep) = if y0[0] != 0.0 { (0usize, 1usize) } else { (1, 0) };
    let w0 = [y0[indep], y0[dep]];
    let a = sys.spectrum().eigenvalues()[0];
    let b = sys.field().eval(&y0);
    let (xi_i, xi_d) = (b[indep] / a, b[dep] / a);
    let slope = w0[1] / w0[0];
    let quad = xi_d / (w0[0] * w0[0]) - w0[1] * xi_i / (w0[0] * w0[0] * w0[0]);
    let mut series = RelationSeries {
        indep,
        dep,
        terms: vec![
            RelationTerm {
                power: 1.0,
                logpow: 0,
                coeff: Coefficient::Known(slope),
                ic_dependent: true,
            },
            RelationTerm {
                power: 2.0,
                logpow: 0,
                coeff: Coefficient::Known(quad),
                ic_dependent: true,
            },
        ],
        remainder_power: 3.0,
        remainder_strict: false,
    };
    series.sort_terms();
    Ok(StarRelation::Expansion(series))
}

// ---------------------------------------------------------------------------
// Resonant relations in diagonal coordinates and through a basis change.

/// The u-space relation as a log-top series plus bookkeeping on whether
/// the top coefficient is numeric.
struct URelation {
    f: LogTop,
    kappa: u32,
    top_known: bool,
}

fn u_relation(sys: &SinkSystem, slow: &SlowSeries, y0: Option<[f64; 2]>) -> Result<URelation> {
    let kappa = match slow.kappa_int() {
        Some(k) => k,
        None => {
            return Err(Error::Regime(
                "no resonance: κ is not an integer ≥ 2 (use the power-series path)".into(),
            ))
        }
    };
    if slow.order() < kappa {
        return Err(Error::Input(format!(
            "slow series of order {} cannot resolve the resonance at κ = {kappa}",
            slow.order()
        )));
    }
    let a = sys.spectrum().eigenvalues()[0];
    let n = kappa as usize;
    // u₂ as a function of w: ρ-polynomial, the log slot from τ·t·e^{κat},
    // and the w^κ coefficient from ϱ (needs y₀).
    let log_coeff = slow.t_coeff() / a;
    let mut poly = vec![0.0; n + 1];
    for i in 2..kappa {
        poly[i as usize] = slow.rho()[i as usize];
    }
    let mut top_known = false;
    if let Some(y0) = y0 {
        if y0[0] <= 0.0 {
            return Err(Error::Input(format!(
                "slow-direction approach requires y₀₁ > 0, got {}",
                y0[0]
            )));
        }
        let varrho = slow
            .varrho()
            .ok_or_else(|| Error::InternalConsistency("missing ϱ for integer κ".into()))?
            .eval(&y0);
        poly[n] = varrho / y0[0].powi(kappa as i32) - log_coeff * y0[0].ln();
        top_known = true;
    }
    let mut f = LogTop::from_poly(poly, n);
    f.log = log_coeff;
    let mut u1 = LogTop::from_poly(vec![0.0; n + 1], n);
    for (i, u1i) in u1.poly.iter_mut().enumerate().skip(1) {
        *u1i = slow.xi()[i];
    }
    let w_of_u1 = u1.invert()?;
    let f_of_u1 = f.compose(&w_of_u1)?;
    Ok(URelation { f: f_of_u1, kappa, top_known })
}

fn relation_from_logtop(
    f: &LogTop,
    kappa: u32,
    top_known: bool,
    slope: Option<f64>,
    indep: usize,
    dep: usize,
) -> RelationSeries {
    let n = kappa as usize;
    let mut terms = Vec::new();
    if let Some(s) = slope {
        terms.push(RelationTerm {
            power: 1.0,
            logpow: 0,
            coeff: Coefficient::Known(s),
            ic_dependent: false,
        });
    }
    for i in 2..n {
        if f.poly[i] != 0.0 {
            terms.push(RelationTerm {
                power: i as f64,
                logpow: 0,
                coeff: Coefficient::Known(f.poly[i]),
                ic_dependent: false,
            });
        }
    }
    if f.log != 0.0 {
        terms.push(RelationTerm {
            power: kappa as f64,
            logpow: 1,
            coeff: Coefficient::Known(f.log),
            ic_dependent: false,
        });
    }
    terms.push(RelationTerm {
        power: kappa as f64,
        logpow: 0,
        coeff: if top_known {
            Coefficient::Known(f.poly[n])
        } else {
            Coefficient::Unknown("C".into())
        },
        ic_dependent: true,
    });
    // o(x^κ) when the log is present (the next correction is only
    // logarithmically smaller); O(x^{κ+1}) otherwise.
    let (remainder_power, remainder_strict) = if f.log != 0.0 {
        (kappa as f64, true)
    } else {
        (kappa as f64 + 1.0, false)
    };
    let mut series = RelationSeries {
        indep,
        dep,
        terms,
        remainder_power,
        remainder_strict,
    };
    series.sort_terms();
    series
}

/// Relation x₂(x₁) in diagonal coordinates for integer κ ≥ 2: the κ = 2
/// case carries the (b₂₁₁/a)·x₁²ln x₁ term; κ ≥ 3 yields ic-independent
/// c₂…c_{κ−1} plus the ic-dependent x₁^κ coefficient (and a log term at
/// κ whenever the resonant t·e^{κat} coefficient is nonzero).
pub fn relate_resonant(
    sys: &SinkSystem,
    slow: &SlowSeries,
    y0: Option<[f64; 2]>,
) -> Result<RelationSeries> {
    let u = u_relation(sys, slow, y0)?;
    Ok(relation_from_logtop(&u.f, u.kappa, u.top_known, None, 0, 1))
}

/// Relation in original coordinates for a diagonalizable planar system
/// with integer κ ≥ 2 (the change-of-basis form): leading slope
/// p₂₁/p₁₁, log coefficient r₂₁₁·det(P)/(p₁₁³a) at κ = 2, and the
/// ic-dependent top coefficient evaluated from v₀ when supplied.
pub fn relate_via_basis(sys: &SinkSystem, v0: Option<[f64; 2]>) -> Result<RelationSeries> {
    if sys.dim() != 2 {
        return Err(Error::UnsupportedShape(
            "relate_via_basis requires a planar system".into(),
        ));
    }
    let p = sys.spectrum().p_matrix().to_vec();
    if p[0][0] <= 0.0 {
        return Err(Error::Normalization(format!(
            "slow eigenvector must have positive first component, got p₁₁ = {}",
            p[0][0]
        )));
    }
    let diag = sys.diagonal_system()?;
    let kappa_probe = sys
        .spectrum()
        .rate_basis()
        .lattice()
        .map(|l| (l[1] / l[0]) as u32)
        .unwrap_or(0);
    let order = kappa_probe.max(2);
    let slow = slow_series(&diag, order)?;
    let u = u_relation(&diag, &slow, v0)?;
    let n = u.kappa as usize;

    // x₁(u₁) = p₁₁u₁ + p₁₂f(u₁); x₂(u₁) = p₂₁u₁ + p₂₂f(u₁).
    let mut lin = LogTop::from_poly(vec![0.0; n + 1], n);
    lin.poly[1] = 1.0;
    let x1_of_u1 = lin.scale(p[0][0]).add(&u.f.scale(p[0][1]));
    let u1_of_x1 = x1_of_u1.invert()?;
    let f_of_x1 = u.f.compose(&u1_of_x1)?;
    let x2_of_x1 = u1_of_x1.scale(p[1][0]).add(&f_of_x1.scale(p[1][1]));

    let slope = x2_of_x1.poly[1];
    let mut body = x2_of_x1.clone();
    body.poly[1] = 0.0;
    Ok(relation_from_logtop(
        &body,
        u.kappa,
        u.top_known,
        Some(slope),
        0,
        1,
    ))
}

/// Integer-power relation coefficients c₁…c_order in original
/// coordinates from the fast-parameter-free iterate sector (the slow
/// manifold's formal expansion), valid for a planar system in either
/// spacing regime without a resonant logarithm inside the requested
/// order. This is the power-series path used to cross-check the scalar
/// recursion.
pub fn relate_power_series(sys: &SinkSystem, order: u32) -> Result<Vec<f64>> {
    if sys.dim() != 2 {
        return Err(Error::UnsupportedShape(
            "relate_power_series requires a planar system".into(),
        ));
    }
    let p = sys.spectrum().p_matrix().to_vec();
    if p[0][0] <= 0.0 {
        return Err(Error::Normalization(
            "slow eigenvector must have positive first component".into(),
        ));
    }
    let diag = sys.diagonal_system()?;
    let slow = slow_series(&diag, order)?;
    if let Some(k) = slow.kappa_int() {
        if k <= order && slow.t_coeff() != 0.0 {
            return Err(Error::Regime(format!(
                "resonance at κ = {k} puts a logarithm inside the requested order; \
                 use relate_via_basis"
            )));
        }
    }
    let n = order as usize;
    // w-series of x₁ and x₂ through P (the v₀₂-free sector has no ϱ).
    let mut x1 = vec![0.0; n + 1];
    let mut x2 = vec![0.0; n + 1];
    for i in 1..=n {
        x1[i] = p[0][0] * slow.xi()[i] + p[0][1] * slow.rho()[i];
        x2[i] = p[1][0] * slow.xi()[i] + p[1][1] * slow.rho()[i];
    }
    let w_of_x1 = ps_invert(&x1, n);
    Ok(ps_compose(&x2, &w_of_x1, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{build_system, PolyVectorField};

    fn star_eq25() -> SinkSystem {
        build_system(
            vec![vec![-1.0, 0.0], vec![0.0, -1.0]],
            PolyVectorField::new(vec![
                ParamPoly::from_terms(2, [(vec![2, 0], 1.0), (vec![1, 1], 8.0), (vec![0, 2], 1.0)]),
                ParamPoly::from_terms(2, [(vec![2, 0], 8.0), (vec![1, 1], 1.0), (vec![0, 2], 8.0)]),
            ])
            .unwrap(),
        )
        .unwrap()
    }

    fn wide_quadratic(kappa: f64, b: [[f64; 3]; 2]) -> SinkSystem {
        build_system(
            vec![vec![-1.0, 0.0], vec![0.0, -kappa]],
            PolyVectorField::new(vec![
                ParamPoly::from_terms(
                    2,
                    [(vec![2, 0], b[0][0]), (vec![1, 1], b[0][1]), (vec![0, 2], b[0][2])],
                ),
                ParamPoly::from_terms(
                    2,
                    [(vec![2, 0], b[1][0]), (vec![1, 1], b[1][1]), (vec![0, 2], b[1][2])],
                ),
            ])
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn reversion_identities() {
        // ξ = (1, ξ₂) → ν = (1, −ξ₂); ξ = (1, ξ₂, ξ₃) → ν₃ = 2ξ₂² − ξ₃.
        let f = vec![0.0, 1.0, 0.7];
        let g = ps_invert(&f, 2);
        assert!((g[2] + 0.7).abs() < 1e-15);
        let f = vec![0.0, 1.0, 0.7, -0.3];
        let g = ps_invert(&f, 3);
        assert!((g[3] - (2.0 * 0.49 + 0.3)).abs() < 1e-14);
        // Round trip: f∘g = identity through the order.
        let comp = ps_compose(&f, &g, 3);
        assert!((comp[1] - 1.0).abs() < 1e-15);
        assert!(comp[2].abs() < 1e-15);
        assert!(comp[3].abs() < 1e-15);
    }

    #[test]
    fn identity_series_inverts_to_itself() {
        let f = vec![0.0, 1.0, 0.0, 0.0];
        let g = ps_invert(&f, 3);
        assert_eq!(g, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn star_relation_eq26_coefficient() {
        // Coefficient of x₁² is (y₀₂/y₀₁)³ − 8.
        let sys = star_eq25();
        for y0 in [[0.1, 0.3], [1.0, 2.0], [0.2, 0.1]] {
            let c = star_quadratic_coeff(&sys, y0).unwrap();
            let r = y0[1] / y0[0];
            assert!(
                (c - (r * r * r - 8.0)).abs() < 1e-10 * (1.0 + c.abs()),
                "{y0:?}"
            );
        }
        // On the boundary ratio y₀₂/y₀₁ = 2 the coefficient vanishes.
        let c = star_quadratic_coeff(&sys, [1.0, 2.0]).unwrap();
        assert!(c.abs() < 1e-12);
    }

    #[test]
    fn star_relation_dispatch() {
        let sys = star_eq25();
        assert!(matches!(
            relate_star(&sys, [0.0, 0.0]).unwrap(),
            StarRelation::ZeroSolution
        ));
        match relate_star(&sys, [0.0, 0.1]).unwrap() {
            StarRelation::Expansion(series) => {
                assert_eq!(series.indep, 1);
                assert_eq!(series.dep, 0);
            }
            _ => panic!("expected inverted-role expansion"),
        }
        match relate_star(&sys, [0.1, 0.2]).unwrap() {
            StarRelation::Expansion(series) => {
                assert_eq!(series.coeff(1.0, 0), Some(2.0));
                assert!(series.terms.iter().all(|t| t.ic_dependent));
            }
            _ => panic!("expected expansion"),
        }
    }

    #[test]
    fn resonant_kappa2_log_coefficient() {
        // κ=2: coefficient of x₁²ln x₁ is b₂₁₁/a.
        let b211 = 1.3;
        let sys = wide_quadratic(2.0, [[0.7, 0.4, 0.2], [b211, 0.5, 0.3]]);
        let slow = slow_series(&sys, 2).unwrap();
        let y0 = [0.25, 0.1];
        let rel = relate_resonant(&sys, &slow, Some(y0)).unwrap();
        let a = -1.0;
        assert!((rel.coeff(2.0, 1).unwrap() - b211 / a).abs() < 1e-12);
        // Plain x₁² coefficient: y₀₂/y₀₁² − (b₂₁₁/a)·ln y₀₁.
        let expect = y0[1] / (y0[0] * y0[0]) - b211 / a * y0[0].ln();
        assert!((rel.coeff(2.0, 0).unwrap() - expect).abs() < 1e-12);
        assert!(rel.remainder_strict);
        assert_eq!(rel.remainder_power, 2.0);
    }

    #[test]
    fn resonant_kappa3_c2() {
        // κ=3: c₂ = b₂₁₁/((2−κ)a) = −b₂₁₁/a.
        let b211 = 0.9;
        let sys = wide_quadratic(3.0, [[0.3, 0.2, 0.1], [b211, 0.4, 0.2]]);
        let slow = slow_series(&sys, 3).unwrap();
        assert_eq!(slow.kappa_int(), Some(3));
        // ρ₂ invariant: ρ₂ = b₂₁₁/((2−κ)a).
        assert!((slow.rho()[2] - b211 / ((2.0 - 3.0) * -1.0)).abs() < 1e-14);
        let rel = relate_resonant(&sys, &slow, None).unwrap();
        assert!((rel.coeff(2.0, 0).unwrap() - (-b211 / -1.0)).abs() < 1e-12);
        // The top coefficient is symbolic without y₀.
        let top = rel
            .terms
            .iter()
            .find(|t| t.power == 3.0 && t.logpow == 0)
            .unwrap();
        assert!(matches!(top.coeff, Coefficient::Unknown(_)));
        assert!(top.ic_dependent);
    }

    #[test]
    fn resonant_zero_b211_has_zero_log() {
        let sys = wide_quadratic(2.0, [[0.7, 0.4, 0.2], [0.0, 0.5, 0.3]]);
        let slow = slow_series(&sys, 2).unwrap();
        let rel = relate_resonant(&sys, &slow, Some([0.2, 0.1])).unwrap();
        assert!(rel.coeff(2.0, 1).is_none());
        assert!(!rel.remainder_strict);
    }

    #[test]
    fn via_basis_reduces_to_resonant_for_identity_p() {
        let sys = wide_quadratic(2.0, [[0.7, 0.4, 0.2], [1.3, 0.5, 0.3]]);
        let slow = slow_series(&sys, 2).unwrap();
        let y0 = [0.25, 0.1];
        let direct = relate_resonant(&sys, &slow, Some(y0)).unwrap();
        let via = relate_via_basis(&sys, Some(y0)).unwrap();
        // P = I: identical coefficients (plus an explicit zero slope).
        assert!((via.coeff(1.0, 0).unwrap()).abs() < 1e-14);
        assert!((via.coeff(2.0, 1).unwrap() - direct.coeff(2.0, 1).unwrap()).abs() < 1e-12);
        assert!((via.coeff(2.0, 0).unwrap() - direct.coeff(2.0, 0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ic_independent_coefficients_agree_across_ics() {
        // c₂…c_{κ−1} identical for two admissible y₀; the top differs.
        let sys = wide_quadratic(4.0, [[0.5, 0.3, 0.1], [0.8, 0.2, 0.4]]);
        let slow = slow_series(&sys, 4).unwrap();
        let r1 = relate_resonant(&sys, &slow, Some([0.2, 0.05])).unwrap();
        let r2 = relate_resonant(&sys, &slow, Some([0.07, -0.3])).unwrap();
        for i in 2..4 {
            assert_eq!(r1.coeff(i as f64, 0), r2.coeff(i as f64, 0), "c_{i}");
        }
        assert_ne!(r1.coeff(4.0, 0), r2.coeff(4.0, 0));
    }
}
