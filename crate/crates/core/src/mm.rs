//! The Michaelis–Menten application: nondimensionalization, closed-form
//! spectrum, the σ-recursion of the scalar reduction with its resonance
//! pole, the slow-direction expansion templates, and the rate-law
//! comparison.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expalg::ParamPoly;
use crate::numeric::{fit_decay, integrate, FitModel, FitReport, IntegrateOptions, Trajectory};
use crate::relate::{Coefficient, RelationSeries, RelationTerm};
use crate::system::{build_system, PolyVectorField, SinkSystem};

/// Relative width of the band in which κ is treated as the integer it
/// approximates.
pub const INTEGER_KAPPA_TOL: f64 = 1e-6;

/// Band (relative) in which κ is close enough to an integer that both
/// expansion templates are emitted with a warning.
pub const INTEGER_KAPPA_WARN: f64 = 1e-3;

/// Dimensionless Michaelis–Menten parameters: ε = e₀/K_m ∈ (0,∞) and
/// η = k₂/(k₋₁+k₂) ∈ (0,1).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MMParams {
    pub eps: f64,
    pub eta: f64,
}

impl MMParams {
    pub fn new(eps: f64, eta: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Input(format!("ε must be positive, got {eps}")));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::Input(format!("η must lie in (0,1), got {eta}")));
        }
        Ok(Self { eps, eta })
    }
}

/// Result of nondimensionalizing the dimensional rate constants:
/// t = time_scale·τ, x = substrate_scale·s, y = complex_scale·c.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Nondimensional {
    pub params: MMParams,
    pub km: f64,
    pub time_scale: f64,
    pub substrate_scale: f64,
    pub complex_scale: f64,
}

/// Map (k₁, k₋₁, k₂, e₀) to the dimensionless form.
pub fn nondimensionalize(k1: f64, km1: f64, k2: f64, e0: f64) -> Result<Nondimensional> {
    for (name, v) in [("k1", k1), ("k-1", km1), ("k2", k2), ("e0", e0)] {
        if !(v > 0.0) {
            return Err(Error::Input(format!("{name} must be positive, got {v}")));
        }
    }
    let km = (km1 + k2) / k1;
    let params = MMParams::new(e0 / km, k2 / (km1 + k2))?;
    Ok(Nondimensional {
        params,
        km,
        time_scale: k1 * e0,
        substrate_scale: 1.0 / km,
        complex_scale: 1.0 / e0,
    })
}

/// Closed-form spectral data of the planar reduction at (ε, η).
#[derive(Clone, Debug, Serialize)]
pub struct MMSystem {
    pub params: MMParams,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub kappa: f64,
    /// Change of basis with columns (1, σ₊), (1, σ₋).
    pub p: [[f64; 2]; 2],
    pub det_p: f64,
    /// Coefficient of u₁² in the second component of P⁻¹b(Pu).
    pub r211: f64,
}

/// Evaluate the closed forms: λ± = (−(ε+1) ± √((ε+1)²−4εη))/(2ε),
/// σ± = (λ±+1)/(1−η), κ = λ₋/λ₊, r₂₁₁ = σ₊(σ₊+ε⁻¹)/(σ₊−σ₋).
pub fn mm_spectrum(eps: f64, eta: f64) -> Result<MMSystem> {
    let params = MMParams::new(eps, eta)?;
    let disc = (eps + 1.0) * (eps + 1.0) - 4.0 * eps * eta;
    debug_assert!(disc > 0.0, "discriminant is positive on the valid domain");
    let sq = disc.sqrt();
    let lambda_plus = (-(eps + 1.0) + sq) / (2.0 * eps);
    let lambda_minus = (-(eps + 1.0) - sq) / (2.0 * eps);
    let sigma_plus = (lambda_plus + 1.0) / (1.0 - eta);
    let sigma_minus = (lambda_minus + 1.0) / (1.0 - eta);
    let kappa = lambda_minus / lambda_plus;
    let det_p = sigma_minus - sigma_plus;
    let r211 = sigma_plus * (sigma_plus + 1.0 / eps) / (sigma_plus - sigma_minus);
    Ok(MMSystem {
        params,
        lambda_plus,
        lambda_minus,
        sigma_plus,
        sigma_minus,
        kappa,
        p: [[1.0, 1.0], [sigma_plus, sigma_minus]],
        det_p,
        r211,
    })
}

/// The planar reduction ẋ = Ax + b(x) as a [`SinkSystem`]:
/// A = [[−1, 1−η], [ε⁻¹, −ε⁻¹]], b(x) = xy·(1, −ε⁻¹)ᵀ.
pub fn planar_system(eps: f64, eta: f64) -> Result<SinkSystem> {
    MMParams::new(eps, eta)?;
    let a = vec![vec![-1.0, 1.0 - eta], vec![1.0 / eps, -1.0 / eps]];
    let field = PolyVectorField::new(vec![
        ParamPoly::monomial(2, vec![1, 1], 1.0),
        ParamPoly::monomial(2, vec![1, 1], -1.0 / eps),
    ])?;
    build_system(a, field)
}

/// σ₀…σ_N of the power-series ansatz for the scalar reduction, stopping
/// with a pole report if the recursion denominator vanishes (which
/// happens exactly when the index hits κ).
#[derive(Clone, Debug, Serialize)]
pub struct SigmaRecursion {
    /// σ₀, σ₁, … up to N or up to (excluding) the pole index.
    pub sigma: Vec<f64>,
    /// The index n at which the denominator vanished, if any.
    pub pole_index: Option<u32>,
}

/// Evaluate the recursion. The denominator equals λ₊(n−κ), so the pole
/// test |n−κ| < 1e-6 is an exact restatement of the vanishing test.
pub fn sigma_recursion(eps: f64, eta: f64, n_max: u32) -> Result<SigmaRecursion> {
    if n_max < 1 {
        return Err(Error::Input("σ recursion needs N ≥ 1".into()));
    }
    let m = mm_spectrum(eps, eta)?;
    let s1 = m.sigma_plus;
    let mut sigma = vec![0.0, s1];
    for n in 2..=n_max {
        let nf = n as f64;
        let denom = 1.0 / eps + (1.0 - eta) * (nf + 1.0) * s1 - nf;
        if (denom / m.lambda_plus).abs() < INTEGER_KAPPA_TOL {
            return Ok(SigmaRecursion { sigma, pole_index: Some(n) });
        }
        let mut num = 0.0;
        for k in 2..n {
            let kf = k as f64;
            num += ((nf - kf) * sigma[(n - k) as usize]
                + (1.0 - eta) * (nf - kf + 1.0) * sigma[(n - k + 1) as usize])
                * sigma[k as usize];
        }
        num += ((nf - 1.0) * s1 + 1.0 / eps) * sigma[(n - 1) as usize];
        sigma.push(-num / denom);
    }
    Ok(SigmaRecursion { sigma, pole_index: None })
}

/// Which of the three expansion shapes applies at (ε, η).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KappaClass {
    NonInteger,
    KappaTwo,
    IntegerAtLeastThree,
}

/// The slow-direction expansion template for y(x) as x → 0⁺, with the
/// trajectory-dependent constant C left symbolic.
#[derive(Clone, Debug, Serialize)]
pub struct MMExpansion {
    pub kappa: f64,
    pub class: KappaClass,
    pub series: RelationSeries,
    /// Near-integer κ: the alternate template that applies on the other
    /// side of the integer, emitted alongside a warning.
    pub warning: Option<String>,
    pub alternate: Option<RelationSeries>,
}

/// Build the three-case expansion template.
pub fn mm_expansion(eps: f64, eta: f64) -> Result<MMExpansion> {
    let m = mm_spectrum(eps, eta)?;
    let kappa = m.kappa;
    let nearest = kappa.round();
    let rel = (kappa - nearest).abs() / kappa.max(1.0);
    let class = if nearest >= 2.0 && rel < INTEGER_KAPPA_TOL {
        if nearest == 2.0 {
            KappaClass::KappaTwo
        } else {
            KappaClass::IntegerAtLeastThree
        }
    } else {
        KappaClass::NonInteger
    };
    let series = template_for(&m, eps, eta, kappa, class)?;
    let (warning, alternate) = if class == KappaClass::NonInteger
        && nearest >= 2.0
        && rel < INTEGER_KAPPA_WARN
    {
        let alt_class = if nearest == 2.0 {
            KappaClass::KappaTwo
        } else {
            KappaClass::IntegerAtLeastThree
        };
        (
            Some(format!(
                "κ = {kappa:.9} is within {INTEGER_KAPPA_WARN:.0e} of the integer {nearest}; \
                 emitting the resonant template as well"
            )),
            Some(template_for(&m, eps, eta, nearest, alt_class)?),
        )
    } else if class != KappaClass::NonInteger && rel > 0.0 {
        (
            Some(format!(
                "κ = {kappa:.12} treated as the integer {nearest} (within {INTEGER_KAPPA_TOL:.0e})"
            )),
            None,
        )
    } else {
        (None, None)
    };
    Ok(MMExpansion { kappa, class, series, warning, alternate })
}

fn template_for(
    m: &MMSystem,
    eps: f64,
    eta: f64,
    kappa: f64,
    class: KappaClass,
) -> Result<RelationSeries> {
    let mut terms = Vec::new();
    match class {
        KappaClass::NonInteger => {
            let floor = kappa.floor() as u32;
            let rec = sigma_recursion(eps, eta, floor)?;
            for (n, &s) in rec.sigma.iter().enumerate().skip(1) {
                terms.push(RelationTerm {
                    power: n as f64,
                    logpow: 0,
                    coeff: Coefficient::Known(s),
                    ic_dependent: false,
                });
            }
            terms.push(RelationTerm {
                power: kappa,
                logpow: 0,
                coeff: Coefficient::Unknown("C".into()),
                ic_dependent: true,
            });
            Ok(RelationSeries {
                indep: 0,
                dep: 1,
                terms,
                remainder_power: kappa,
                remainder_strict: true,
            })
        }
        KappaClass::KappaTwo => {
            terms.push(RelationTerm {
                power: 1.0,
                logpow: 0,
                coeff: Coefficient::Known(m.sigma_plus),
                ic_dependent: false,
            });
            let log_coeff = m.sigma_plus * (m.sigma_plus + 1.0 / eps) / (-m.lambda_plus);
            terms.push(RelationTerm {
                power: 2.0,
                logpow: 0,
                coeff: Coefficient::Unknown("C".into()),
                ic_dependent: true,
            });
            terms.push(RelationTerm {
                power: 2.0,
                logpow: 1,
                coeff: Coefficient::Known(log_coeff),
                ic_dependent: false,
            });
            Ok(RelationSeries {
                indep: 0,
                dep: 1,
                terms,
                remainder_power: 2.0,
                remainder_strict: true,
            })
        }
        KappaClass::IntegerAtLeastThree => {
            let k = kappa.round() as u32;
            let rec = sigma_recursion(eps, eta, k - 1)?;
            for (n, &s) in rec.sigma.iter().enumerate().skip(1) {
                terms.push(RelationTerm {
                    power: n as f64,
                    logpow: 0,
                    coeff: Coefficient::Known(s),
                    ic_dependent: false,
                });
            }
            terms.push(RelationTerm {
                power: k as f64,
                logpow: 0,
                coeff: Coefficient::Unknown("C".into()),
                ic_dependent: true,
            });
            Ok(RelationSeries {
                indep: 0,
                dep: 1,
                terms,
                remainder_power: k as f64 + 1.0,
                remainder_strict: false,
            })
        }
    }
}

/// The two hyperbolic rate laws: the quasi-steady-state law
/// H(x) = x/(1+x) and the slow-eigenvector law α(x) = x/(σ₊⁻¹+x);
/// H(x) < α(x) for x > 0 since σ₊ > 1.
pub fn rate_laws(sigma_plus: f64, x: f64) -> (f64, f64) {
    assert!(x >= 0.0);
    (x / (1.0 + x), x / (1.0 / sigma_plus + x))
}

/// Predicted decay class of the α-approximation error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AlphaErrorClass {
    /// 1 < κ < 2: O(e^{λ₋t}).
    LambdaMinus,
    /// κ = 2: O(t·e^{2λ₊t}).
    TwoLambdaPlusWithT,
    /// κ > 2: O(e^{2λ₊t}).
    TwoLambdaPlus,
}

/// Rate-law comparison along one trajectory: fitted decay rates of the
/// QSSA error y − H(x) and the α-approximation error y − α(x), against
/// the predicted exponents.
#[derive(Clone, Debug, Serialize)]
pub struct RateLawReport {
    pub kappa: f64,
    pub class: AlphaErrorClass,
    pub predicted_qssa_rate: f64,
    pub predicted_alpha_rate: f64,
    pub alpha_prefactor_expected: bool,
    /// False when the trajectory left the validity ball.
    pub conclusive: bool,
    pub qssa_fit: Option<FitReport>,
    pub alpha_fit: Option<FitReport>,
    /// κ = 2 only: the pinned-rate fit with a linear-in-t prefactor and
    /// the competing pure-exponential fit it must beat by residual.
    pub alpha_affine_fit: Option<FitReport>,
    pub alpha_pure_fit: Option<FitReport>,
}

/// Integrate the planar reduction from `x0` and fit both rate-law error
/// decays on the trailing window.
pub fn rate_law_errors(
    eps: f64,
    eta: f64,
    x0: [f64; 2],
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<RateLawReport> {
    if x0[0] < 0.0 || x0[1] < 0.0 || x0 == [0.0, 0.0] {
        return Err(Error::Input(
            "physically relevant initial conditions require x₀, y₀ ≥ 0, not both zero".into(),
        ));
    }
    let m = mm_spectrum(eps, eta)?;
    let sys = planar_system(eps, eta)?;
    let class = if m.kappa < 2.0 - 1e-9 {
        AlphaErrorClass::LambdaMinus
    } else if (m.kappa - 2.0).abs() <= 1e-9 {
        AlphaErrorClass::TwoLambdaPlusWithT
    } else {
        AlphaErrorClass::TwoLambdaPlus
    };
    let predicted_alpha_rate = match class {
        AlphaErrorClass::LambdaMinus => m.lambda_minus,
        _ => 2.0 * m.lambda_plus,
    };
    let base = RateLawReport {
        kappa: m.kappa,
        class,
        predicted_qssa_rate: m.lambda_plus,
        predicted_alpha_rate,
        alpha_prefactor_expected: class == AlphaErrorClass::TwoLambdaPlusWithT,
        conclusive: false,
        qssa_fit: None,
        alpha_fit: None,
        alpha_affine_fit: None,
        alpha_pure_fit: None,
    };
    let traj = match integrate(&sys, &x0, t_end, opts) {
        Ok(t) => t,
        Err(Error::Escape { .. }) => return Ok(base),
        Err(e) => return Err(e),
    };
    let (times, qssa_err, alpha_err) = rate_law_error_series(&m, &traj);
    // Window past the fast transient but clear of the integration noise
    // floor the deep tail sinks into.
    let window = (0.25 * t_end, 0.7 * t_end);
    let qssa_fit = fit_decay(&times, &qssa_err, window)?;
    let alpha_fit = fit_decay(&times, &alpha_err, window)?;
    let (alpha_affine_fit, alpha_pure_fit) = if class == AlphaErrorClass::TwoLambdaPlusWithT {
        (
            Some(crate::numeric::fit_fixed_rate_affine(
                &times,
                &alpha_err,
                window,
                2.0 * m.lambda_plus,
            )?),
            Some(crate::numeric::fit_pure_exponential(&times, &alpha_err, window)?),
        )
    } else {
        (None, None)
    };
    Ok(RateLawReport {
        conclusive: true,
        qssa_fit: Some(qssa_fit),
        alpha_fit: Some(alpha_fit),
        alpha_affine_fit,
        alpha_pure_fit,
        ..base
    })
}

impl RateLawReport {
    /// Whether the fits match the predicted exponent class: the rate
    /// within `rtol` for the pure-exponential classes, and for κ = 2 the
    /// pinned-rate linear-prefactor fit beating the pure-exponential fit
    /// by residual.
    pub fn alpha_matches_class(&self, rtol: f64) -> bool {
        if !self.conclusive {
            return false;
        }
        match self.class {
            AlphaErrorClass::TwoLambdaPlusWithT => match (&self.alpha_affine_fit, &self.alpha_pure_fit) {
                (Some(affine), Some(pure)) => affine.residual < pure.residual,
                _ => false,
            },
            _ => {
                let fit = self.alpha_fit.as_ref().unwrap();
                fit.model == FitModel::PureExponential
                    && (fit.exponent - self.predicted_alpha_rate).abs()
                        <= rtol * self.predicted_alpha_rate.abs()
            }
        }
    }
}

/// Error time series |y − H(x)| and |y − α(x)| on a dense grid.
pub fn rate_law_error_series(m: &MMSystem, traj: &Trajectory) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let t_end = traj.t_end();
    let samples = 400;
    let mut times = Vec::with_capacity(samples);
    let mut qssa = Vec::with_capacity(samples);
    let mut alpha = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = t_end * (k as f64 + 1.0) / samples as f64;
        let state = traj.eval(t);
        let (x, y) = (state[0], state[1]);
        if x <= 0.0 {
            continue;
        }
        let (h, al) = rate_laws(m.sigma_plus, x);
        times.push(t);
        qssa.push((y - h).abs());
        alpha.push((y - al).abs());
    }
    (times, qssa, alpha)
}

/// Product concentration p(τ) reconstructed after the fact from the
/// complex concentration: p(τ) = p₀ + k₂∫₀^τ c dσ, by quadrature over
/// the dense trajectory output.
pub fn product_from_trajectory(
    k2: f64,
    p0: f64,
    traj: &Trajectory,
    tau: f64,
    complex_index: usize,
) -> Result<f64> {
    let val = crate::numeric::quadrature(
        |s| traj.eval(s)[complex_index],
        0.0,
        crate::numeric::UpperLimit::Finite(tau),
        1e-10,
    )?;
    Ok(p0 + k2 * val)
}
