//! Symbolic construction of the iterate sequences D_m and the
//! near-identity transformation approximations ψ_m, for both eigenvalue
//! spacing regimes, with truncation to the guaranteed orders applied
//! after every step.
//!
//! Everything here operates on systems already in sorted diagonal form;
//! use [`SinkSystem::diagonal_system`] first and the associated-iterate
//! composition layer to map back.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expalg::{
    forward_conv, substitute_into_poly, tail_conv, ExpSeries, ParamPoly, TOL_RATE,
};
use crate::linalg;
use crate::system::{Classification, PolyVectorField, SinkSystem, Spectrum};

/// Which construction produced an iterate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    CloselySpaced,
    Widely2D,
    WidelyNDiag,
}

/// A maximal run of equal eigenvalues, treated as one diagonal block.
#[derive(Clone, Debug, Serialize)]
pub struct Block {
    pub start: usize,
    pub len: usize,
    pub eigenvalue: f64,
}

/// Thresholds controlling the widely-spaced construction: per-block
/// ratios κⱼ, the first wide block j₀, and the iterate indices pⱼ at
/// which each fast block's initial condition enters.
#[derive(Clone, Debug, Serialize)]
pub struct WidePlan {
    blocks: Vec<Block>,
    kappas: Vec<f64>,
    ps: Vec<u32>,
    j0: usize,
}

impl WidePlan {
    /// Number of distinct eigenvalue real parts ℓ.
    pub fn ell(&self) -> usize {
        self.blocks.len()
    }

    /// Index of the first block with κⱼ ≥ α (0-based).
    pub fn j0(&self) -> usize {
        self.j0
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn kappa_of_block(&self, j: usize) -> f64 {
        self.kappas[j]
    }

    pub fn p_of_block(&self, j: usize) -> u32 {
        self.ps[j]
    }

    /// The last block's threshold p_ℓ; in two dimensions this is the p of
    /// the two-group split.
    pub fn p(&self) -> u32 {
        *self.ps.last().unwrap()
    }

    pub fn block_of_component(&self, i: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| i >= b.start && i < b.start + b.len)
            .expect("component index out of range")
    }
}

/// Compute the widely-spaced plan: block partition, κⱼ, j₀, pⱼ.
pub fn plan_wide(spectrum: &Spectrum, field: &PolyVectorField) -> Result<WidePlan> {
    if crate::system::classify(spectrum, field) != Classification::WidelySpaced {
        return Err(Error::Regime(
            "plan_wide called on a closely-spaced system".into(),
        ));
    }
    let alpha = field.alpha();
    let beta = field.beta();
    let eigs = spectrum.eigenvalues();
    let lattice = spectrum.rate_basis().lattice();
    let mut blocks: Vec<Block> = Vec::new();
    for (i, &l) in eigs.iter().enumerate() {
        match blocks.last_mut() {
            Some(b) if b.eigenvalue == l => b.len += 1,
            _ => blocks.push(Block { start: i, len: 1, eigenvalue: l }),
        }
    }
    let mu1 = eigs[0];
    let kappas: Vec<f64> = blocks.iter().map(|b| b.eigenvalue / mu1).collect();
    let j0 = kappas
        .iter()
        .position(|&k| k >= alpha as f64)
        .ok_or_else(|| Error::Regime("widely-spaced system with no wide block".into()))?;
    let ps: Vec<u32> = blocks
        .iter()
        .enumerate()
        .map(|(j, b)| {
            if j < j0 {
                1
            } else {
                // ⌊(κⱼ-α)/β⌋ + 2, computed exactly on the lattice when
                // available.
                let floor = match lattice {
                    Some(p) => {
                        let pj = p[b.start];
                        let p1 = p[0];
                        (pj - alpha as i64 * p1).div_euclid(beta as i64 * p1)
                    }
                    None => ((b.eigenvalue / mu1 - alpha as f64) / beta as f64).floor() as i64,
                };
                floor as u32 + 2
            }
        })
        .collect();
    Ok(WidePlan { blocks, kappas, ps, j0 })
}

/// The constructed iterates D₁…D_{m_max} (each an n-vector of series in
/// the parameters y₀) together with the guaranteed closeness orders.
#[derive(Clone, Debug)]
pub struct IterateSet {
    regime: Regime,
    iterates: Vec<Vec<ExpSeries>>,
    guaranteed: Vec<(f64, f64)>,
}

impl IterateSet {
    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn m_max(&self) -> u32 {
        self.iterates.len() as u32
    }

    /// The m-th iterate (1-based), as one series per component.
    pub fn iterate(&self, m: u32) -> &[ExpSeries] {
        &self.iterates[(m - 1) as usize]
    }

    pub fn series(&self, m: u32, component: usize) -> &ExpSeries {
        &self.iterate(m)[component]
    }

    /// Guaranteed `(rate multiplier, x₀ power)` for ‖ϕ − D_m‖.
    pub fn guaranteed_order(&self, m: u32) -> (f64, f64) {
        self.guaranteed[(m - 1) as usize]
    }

    pub fn eval(&self, m: u32, t: f64, params: &[f64]) -> Vec<f64> {
        self.iterate(m).iter().map(|s| s.eval(t, params)).collect()
    }

    pub fn display_with(&self, prefix: &str) -> String {
        let mut out = String::new();
        for (mi, comps) in self.iterates.iter().enumerate() {
            for (ci, s) in comps.iter().enumerate() {
                out.push_str(&format!(
                    "D_{}[x{}](t) = {}\n",
                    mi + 1,
                    ci + 1,
                    s.display_with(prefix)
                ));
            }
        }
        out
    }
}

/// Iterates composed with the change of basis: evaluates P·D_m(t, v₀)
/// for a non-diagonal original system.
#[derive(Clone, Debug)]
pub struct AssociatedIterates {
    p: Vec<Vec<f64>>,
    iterates: IterateSet,
}

impl AssociatedIterates {
    pub fn new(original: &SinkSystem, iterates: IterateSet) -> Self {
        Self { p: original.spectrum().p_matrix().to_vec(), iterates }
    }

    pub fn inner(&self) -> &IterateSet {
        &self.iterates
    }

    pub fn eval(&self, m: u32, t: f64, v0: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.p, &self.iterates.eval(m, t, v0))
    }
}

/// Guaranteed `(rate multiplier, x₀ power)` of ‖ϕ − D_m‖ for a regime.
pub fn guaranteed_order(
    regime: Regime,
    alpha: u32,
    beta: u32,
    m: u32,
    plan: Option<&WidePlan>,
) -> (f64, f64) {
    let rate = (alpha + (m - 1) * beta) as f64;
    let power = match regime {
        Regime::CloselySpaced => rate,
        Regime::Widely2D | Regime::WidelyNDiag => {
            let p = plan.expect("widely-spaced order needs a plan").p();
            if m < p {
                1.0
            } else {
                ((m + 1 - p) * beta + 1) as f64
            }
        }
    };
    (rate, power)
}

fn require_sorted_diagonal(sys: &SinkSystem, op: &str) -> Result<()> {
    if !sys.is_sorted_diagonal() {
        return Err(Error::Regime(format!(
            "{op} requires the sorted-diagonal system; call diagonal_system() first"
        )));
    }
    Ok(())
}

/// Error rate of the m-th iterate: `[α+(m−1)β]·μ₁`. Retained terms decay
/// strictly slower than this (only those coefficients are pinned by the
/// closeness theorems, and only they survive truncation).
fn guarantee_threshold(alpha: u32, beta: u32, m: u32, mu1: f64) -> f64 {
    (alpha + (m - 1) * beta) as f64 * mu1
}

/// Taylor-truncation degree for the field when building iterate m.
fn step_field_degree(alpha: u32, beta: u32, m: u32) -> u32 {
    (m * beta).max(alpha)
}

/// Discard the terms not guaranteed correct: keep rates strictly above
/// the iterate's error rate.
fn truncate_all(comps: Vec<ExpSeries>, error_rate: f64) -> Vec<ExpSeries> {
    comps
        .into_iter()
        .map(|s| s.filter_terms(|t| t.rate.value() > error_rate + TOL_RATE))
        .collect()
}

/// Closely-spaced iterates per the flipped-integral recursion:
/// D₁ = e^{tΛ}y₀ and D_{m+1} = e^{tΛ}y₀ − ∫_t^∞ e^{(t−s)Λ} b(D_m(s)) ds,
/// with the field Taylor-truncated per step and the output truncated to
/// the guaranteed order.
pub fn iterate_closely(sys: &SinkSystem, m_max: u32) -> Result<IterateSet> {
    if sys.classification() != Classification::CloselySpaced {
        return Err(Error::Regime(
            "iterate_closely called on a widely-spaced system".into(),
        ));
    }
    require_sorted_diagonal(sys, "iterate_closely")?;
    assert!(m_max >= 1);
    let basis = sys.spectrum().rate_basis().clone();
    let n = sys.dim();
    let field = sys.field();
    let (alpha, beta) = (field.alpha(), field.beta());
    let mu1 = basis.eigenvalue(0);

    let mut iterates: Vec<Vec<ExpSeries>> = Vec::with_capacity(m_max as usize);
    let d1: Vec<ExpSeries> = (0..n).map(|j| ExpSeries::exp_param(&basis, j)).collect();
    iterates.push(truncate_all(d1, guarantee_threshold(alpha, beta, 1, mu1)));

    for m in 2..=m_max {
        let b_step = field.taylor_truncate(step_field_degree(alpha, beta, m));
        let prev = &iterates[(m - 2) as usize];
        let mut comps = Vec::with_capacity(n);
        for j in 0..n {
            let g = substitute_into_poly(b_step.component(j), prev)?;
            let tail = tail_conv(j, &g).map_err(|e| {
                Error::InternalConsistency(format!(
                    "divergent tail integral in the closely-spaced recursion (classification bug): {e}"
                ))
            })?;
            comps.push(ExpSeries::exp_param(&basis, j).sub(&tail));
        }
        iterates.push(truncate_all(comps, guarantee_threshold(alpha, beta, m, mu1)));
    }

    let guaranteed = (1..=m_max)
        .map(|m| guaranteed_order(Regime::CloselySpaced, alpha, beta, m, None))
        .collect();
    Ok(IterateSet { regime: Regime::CloselySpaced, iterates, guaranteed })
}

/// The general widely-spaced construction for a sorted diagonal system,
/// dispatching per component on (block vs j₀, m vs pⱼ): slow blocks
/// follow the closely-spaced recursion; fast blocks start at zero, use
/// the forward convolution until pⱼ, gain their initial condition at
/// m = pⱼ, and are corrected with the tail convolution of the field
/// difference afterwards.
fn widely_engine(sys: &SinkSystem, plan: &WidePlan, m_max: u32) -> Result<Vec<Vec<ExpSeries>>> {
    let basis = sys.spectrum().rate_basis().clone();
    let n = sys.dim();
    let field = sys.field();
    let (alpha, beta) = (field.alpha(), field.beta());
    let mu1 = basis.eigenvalue(0);

    let mut iterates: Vec<Vec<ExpSeries>> = Vec::with_capacity(m_max as usize);
    let d1: Vec<ExpSeries> = (0..n)
        .map(|i| {
            if plan.block_of_component(i) < plan.j0() {
                ExpSeries::exp_param(&basis, i)
            } else {
                ExpSeries::zero(basis.clone(), n)
            }
        })
        .collect();
    iterates.push(truncate_all(d1, guarantee_threshold(alpha, beta, 1, mu1)));

    for m in 2..=m_max {
        let b_step = field.taylor_truncate(step_field_degree(alpha, beta, m));
        let prev = &iterates[(m - 2) as usize];
        let mut comps = Vec::with_capacity(n);
        for i in 0..n {
            let j = plan.block_of_component(i);
            let series = if j < plan.j0() {
                let g = substitute_into_poly(b_step.component(i), prev)?;
                let tail = tail_conv(i, &g).map_err(|e| {
                    Error::InternalConsistency(format!(
                        "divergent tail integral on a slow block (classification bug): {e}"
                    ))
                })?;
                ExpSeries::exp_param(&basis, i).sub(&tail)
            } else {
                let p_j = plan.p_of_block(j);
                if m < p_j {
                    let g = substitute_into_poly(b_step.component(i), prev)?;
                    forward_conv(i, &g)
                } else if m == p_j {
                    let base = &iterates[(p_j - 2) as usize];
                    let g = substitute_into_poly(b_step.component(i), base)?;
                    ExpSeries::exp_param(&basis, i).add(&forward_conv(i, &g))
                } else {
                    // The non-decaying rates cancel in the field
                    // difference; a residual one is an ordering bug.
                    let base = &iterates[(p_j - 2) as usize];
                    let g_m = substitute_into_poly(b_step.component(i), prev)?;
                    let g_base = substitute_into_poly(b_step.component(i), base)?;
                    let diff = g_m.sub(&g_base);
                    let tail = tail_conv(i, &diff).map_err(|e| {
                        Error::InternalConsistency(format!(
                            "uncancelled non-decaying term in the second-group difference: {e}"
                        ))
                    })?;
                    iterates[(p_j - 1) as usize][i].sub(&tail)
                }
            };
            comps.push(series);
        }
        iterates.push(truncate_all(comps, guarantee_threshold(alpha, beta, m, mu1)));
    }
    Ok(iterates)
}

/// Widely-spaced iterates for a planar sorted-diagonal system
/// A = diag(a, κa): the first group D₁…D_{p−1} (no dependence on the
/// fast initial condition), the p-th iterate injecting e^{κat}y₀₂, and
/// the subsequent tail-corrected group.
pub fn iterate_widely_2d(sys: &SinkSystem, m_max: u32) -> Result<IterateSet> {
    if sys.dim() != 2 {
        return Err(Error::UnsupportedShape(format!(
            "iterate_widely_2d requires n = 2, got n = {}",
            sys.dim()
        )));
    }
    if sys.classification() != Classification::WidelySpaced {
        return Err(Error::Regime(
            "iterate_widely_2d called on a closely-spaced system".into(),
        ));
    }
    require_sorted_diagonal(sys, "iterate_widely_2d")?;
    let plan = plan_wide(sys.spectrum(), sys.field())?;
    let iterates = widely_engine(sys, &plan, m_max)?;
    let (alpha, beta) = (sys.field().alpha(), sys.field().beta());
    let guaranteed = (1..=m_max)
        .map(|m| guaranteed_order(Regime::Widely2D, alpha, beta, m, Some(&plan)))
        .collect();
    Ok(IterateSet { regime: Regime::Widely2D, iterates, guaranteed })
}

/// Widely-spaced iterates for a sorted-diagonal n-dimensional system
/// with 1×1 blocks.
pub fn iterate_nd_diag(sys: &SinkSystem, plan: &WidePlan, m_max: u32) -> Result<IterateSet> {
    if sys.classification() != Classification::WidelySpaced {
        return Err(Error::Regime(
            "iterate_nd_diag called on a closely-spaced system".into(),
        ));
    }
    require_sorted_diagonal(sys, "iterate_nd_diag")?;
    let iterates = widely_engine(sys, plan, m_max)?;
    let (alpha, beta) = (sys.field().alpha(), sys.field().beta());
    let guaranteed = (1..=m_max)
        .map(|m| guaranteed_order(Regime::WidelyNDiag, alpha, beta, m, Some(plan)))
        .collect();
    Ok(IterateSet { regime: Regime::WidelyNDiag, iterates, guaranteed })
}

/// Polynomial approximations ψ_m of the near-identity transformation,
/// with ψ₁ the identity.
#[derive(Clone, Debug)]
pub struct PsiApprox {
    regime: Regime,
    approximations: Vec<Vec<ParamPoly>>,
}

impl PsiApprox {
    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn m_max(&self) -> u32 {
        self.approximations.len() as u32
    }

    /// The m-th approximation (1-based), one polynomial per component.
    pub fn psi(&self, m: u32) -> &[ParamPoly] {
        &self.approximations[(m - 1) as usize]
    }

    pub fn eval(&self, m: u32, x0: &[f64]) -> Vec<f64> {
        self.psi(m).iter().map(|p| p.eval(x0)).collect()
    }

    pub fn display_with(&self, prefix: &str) -> String {
        let mut out = String::new();
        for (mi, comps) in self.approximations.iter().enumerate() {
            for (ci, p) in comps.iter().enumerate() {
                out.push_str(&format!(
                    "psi_{}[x{}] = {}\n",
                    mi + 1,
                    ci + 1,
                    p.display_with(prefix)
                ));
            }
        }
        out
    }
}

fn identity_map(n: usize) -> Vec<ParamPoly> {
    (0..n).map(|i| ParamPoly::var(n, i)).collect()
}

/// Closely-spaced ψ approximations:
/// ψ₁ = x₀, ψ_{m+1} = x₀ + ∫₀^∞ e^{−sΛ} b(D_m(s, ψ_m(x₀))) ds,
/// the integral evaluated symbolically (the tail convolution at t = 0)
/// and the result truncated at total degree α+(m−1)β.
pub fn psi_closely(sys: &SinkSystem, m_max: u32) -> Result<PsiApprox> {
    if sys.classification() != Classification::CloselySpaced {
        return Err(Error::Regime(
            "psi_closely called on a widely-spaced system".into(),
        ));
    }
    require_sorted_diagonal(sys, "psi_closely")?;
    assert!(m_max >= 1);
    let n = sys.dim();
    let field = sys.field();
    let (alpha, beta) = (field.alpha(), field.beta());
    let iters = if m_max >= 2 {
        Some(iterate_closely(sys, m_max - 1)?)
    } else {
        None
    };

    let mut approximations = vec![identity_map(n)];
    for m in 1..m_max {
        let d_m = iters.as_ref().unwrap().iterate(m);
        let b_step = field.taylor_truncate(step_field_degree(alpha, beta, m + 1));
        let prev = &approximations[(m - 1) as usize];
        let mut comps = Vec::with_capacity(n);
        for j in 0..n {
            let g = substitute_into_poly(b_step.component(j), d_m)?;
            let integral = tail_conv(j, &g)
                .map_err(|e| {
                    Error::InternalConsistency(format!(
                        "divergent ψ integral (classification bug): {e}"
                    ))
                })?
                .at_zero();
            let composed = integral.compose(prev);
            let psi_j = ParamPoly::var(n, j)
                .add(&composed)
                .truncate_degree(alpha + m * beta);
            comps.push(psi_j);
        }
        approximations.push(comps);
    }
    Ok(PsiApprox { regime: Regime::CloselySpaced, approximations })
}

/// Widely-spaced ψ approximations per the block table: slow components
/// integrate the field along D_{m+p_ℓ−2}; fast components integrate the
/// difference of field evaluations at D_{m+p_ℓ−2} and D_{pⱼ−1}, which is
/// finite because the subtraction cancels all non-decaying rates.
pub fn psi_nd(sys: &SinkSystem, plan: &WidePlan, m_max: u32) -> Result<PsiApprox> {
    if sys.classification() != Classification::WidelySpaced {
        return Err(Error::Regime("psi_nd called on a closely-spaced system".into()));
    }
    require_sorted_diagonal(sys, "psi_nd")?;
    assert!(m_max >= 1);
    let n = sys.dim();
    let field = sys.field();
    let (alpha, beta) = (field.alpha(), field.beta());
    let p_ell = plan.p();
    let regime = if n == 2 { Regime::Widely2D } else { Regime::WidelyNDiag };
    let iters = if m_max >= 2 {
        Some(iterate_nd_diag(sys, plan, m_max + p_ell - 2)?)
    } else {
        None
    };

    // ψ_m error order: min(α, β+1) + (m−1)β.
    let base_order = alpha.min(beta + 1);
    let mut approximations = vec![identity_map(n)];
    for m in 2..=m_max {
        let iters = iters.as_ref().unwrap();
        let d_hi = iters.iterate(m + p_ell - 2);
        let b_step = field.taylor_truncate(step_field_degree(alpha, beta, m + p_ell - 2));
        let prev = &approximations[(m - 2) as usize];
        let mut comps = Vec::with_capacity(n);
        for i in 0..n {
            let j = plan.block_of_component(i);
            let g = if j < plan.j0() {
                substitute_into_poly(b_step.component(i), d_hi)?
            } else {
                let d_base = iters.iterate(plan.p_of_block(j) - 1);
                let hi = substitute_into_poly(b_step.component(i), d_hi)?;
                let lo = substitute_into_poly(b_step.component(i), d_base)?;
                hi.sub(&lo)
            };
            let integral = tail_conv(i, &g)
                .map_err(|e| {
                    Error::InternalConsistency(format!(
                        "residual non-decaying term after cancellation in ψ component {i}: {e}"
                    ))
                })?
                .at_zero();
            let composed = integral.compose(prev);
            let psi_i = ParamPoly::var(n, i)
                .add(&composed)
                .truncate_degree(base_order + (m - 1) * beta);
            comps.push(psi_i);
        }
        approximations.push(comps);
    }
    Ok(PsiApprox { regime, approximations })
}
