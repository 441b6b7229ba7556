//! Problem definition: parse (A, b), compute the spectrum, classify the
//! eigenvalue spacing relative to the vector field, detect resonances
//! exactly, and diagonalize.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expalg::{ParamPoly, RateBasis};
use crate::linalg;

/// Polynomial vector field b with every monomial of total degree ≥ 2.
///
/// `alpha` is the lowest total degree present across components (the
/// vanishing order of b at the origin) and `beta = alpha − 1` bounds the
/// Jacobian's vanishing order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolyVectorField {
    n: usize,
    components: Vec<ParamPoly>,
    alpha: u32,
    beta: u32,
}

impl PolyVectorField {
    /// Validate and assemble. For the zero field the conventional
    /// `(alpha, beta) = (2, 1)` is used; every bound holds vacuously.
    pub fn new(components: Vec<ParamPoly>) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(Error::Input("vector field has no components".into()));
        }
        for (i, c) in components.iter().enumerate() {
            if c.nvars() != n {
                return Err(Error::InvalidField(format!(
                    "b[{i}]: polynomial in {} variables, expected {n}",
                    c.nvars()
                )));
            }
            if let Some(d) = c.min_total_degree() {
                if d < 2 {
                    return Err(Error::InvalidField(format!(
                        "b[{i}]: monomial of total degree {d} < 2 violates the vanishing-order requirement"
                    )));
                }
            }
        }
        let alpha = components
            .iter()
            .filter_map(ParamPoly::min_total_degree)
            .min()
            .unwrap_or(2);
        Ok(Self { n, components, alpha, beta: alpha - 1 })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            components: (0..n).map(|_| ParamPoly::zero(n)).collect(),
            alpha: 2,
            beta: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    pub fn beta(&self) -> u32 {
        self.beta
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(ParamPoly::is_zero)
    }

    pub fn component(&self, i: usize) -> &ParamPoly {
        &self.components[i]
    }

    pub fn components(&self) -> &[ParamPoly] {
        &self.components
    }

    /// Highest total degree across components (0 for the zero field).
    pub fn max_degree(&self) -> u32 {
        self.components
            .iter()
            .filter_map(ParamPoly::total_degree)
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    /// The Taylor polynomial of order `max_degree`: homogeneous parts of
    /// degree ≤ `max_degree`.
    pub fn taylor_truncate(&self, max_degree: u32) -> PolyVectorField {
        let components = self
            .components
            .iter()
            .map(|c| c.truncate_degree(max_degree))
            .collect();
        Self { n: self.n, components, alpha: self.alpha, beta: self.beta }
    }
}

/// A detected exact resonance `λ_target = Σ mᵢλᵢ` with `Σ mᵢ ≥ 2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resonance {
    pub multi_index: Vec<u32>,
    pub target: usize,
    pub order: u32,
}

/// A combination within floating-point tolerance of a resonance that the
/// exact rational reconstruction does not confirm. Reported as a warning.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NearResonance {
    pub multi_index: Vec<u32>,
    pub target: usize,
    pub order: u32,
    pub defect: f64,
}

/// Eigenvalue data for the sink, sorted `λₙ ≤ … ≤ λ₁ < 0` with the
/// change of basis `A = P·diag(λ)·P⁻¹`.
#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    kappa: f64,
    p: Vec<Vec<f64>>,
    pinv: Vec<Vec<f64>>,
    basis: RateBasis,
    resonances: Vec<Resonance>,
    near_resonances: Vec<NearResonance>,
}

impl Spectrum {
    /// Sorted eigenvalues, slowest (closest to zero) first.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// μₙ/μ₁ ≥ 1.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn p_matrix(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn pinv_matrix(&self) -> &[Vec<f64>] {
        &self.pinv
    }

    pub fn rate_basis(&self) -> &RateBasis {
        &self.basis
    }

    pub fn resonances(&self) -> &[Resonance] {
        &self.resonances
    }

    pub fn near_resonances(&self) -> &[NearResonance] {
        &self.near_resonances
    }

    pub fn is_resonant(&self) -> bool {
        !self.resonances.is_empty()
    }

    /// e^{tΛ} acting on a vector in diagonal coordinates.
    pub fn exp_diag(&self, t: f64, u: &[f64]) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .zip(u)
            .map(|(&l, &v)| (l * t).exp() * v)
            .collect()
    }
}

/// Eigenvalue spacing relative to the vector field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Classification {
    /// κ < α.
    CloselySpaced,
    /// κ ≥ α.
    WidelySpaced,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Classification::CloselySpaced => write!(f, "closely-spaced"),
            Classification::WidelySpaced => write!(f, "widely-spaced"),
        }
    }
}

/// The assembled problem: matrix, field, spectrum, spacing class, and the
/// conjugated field r(u) = P⁻¹b(Pu).
#[derive(Clone, Debug, Serialize)]
pub struct SinkSystem {
    a: Vec<Vec<f64>>,
    field: PolyVectorField,
    spectrum: Spectrum,
    classification: Classification,
    diagonalized_field: PolyVectorField,
}

impl SinkSystem {
    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn a_matrix(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn field(&self) -> &PolyVectorField {
        &self.field
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn classification(&self) -> Classification {
        self.classification
    }

    pub fn diagonalized_field(&self) -> &PolyVectorField {
        &self.diagonalized_field
    }

    /// Right-hand side Ax + b(x).
    pub fn rhs(&self, x: &[f64]) -> Vec<f64> {
        let mut out = linalg::mat_vec(&self.a, x);
        for (o, b) in out.iter_mut().zip(self.field.eval(x)) {
            *o += b;
        }
        out
    }

    /// Whether A is already the sorted diagonal matrix diag(λ₁…λₙ).
    pub fn is_sorted_diagonal(&self) -> bool {
        linalg::is_diagonal(&self.a)
            && self
                .a
                .iter()
                .enumerate()
                .all(|(i, row)| row[i] == self.spectrum.eigenvalues[i])
    }

    /// The conjugated system u̇ = Λu + r(u) with Λ = diag(λ₁…λₙ) and
    /// r = P⁻¹b(P·). Identity when A is already sorted diagonal.
    pub fn diagonal_system(&self) -> Result<SinkSystem> {
        if self.is_sorted_diagonal() {
            return Ok(self.clone());
        }
        let n = self.dim();
        let mut a = linalg::identity(n);
        for i in 0..n {
            a[i][i] = self.spectrum.eigenvalues[i];
        }
        build_system(a, self.diagonalized_field.clone())
    }

    /// e^{tA}x computed through the diagonalization.
    pub fn linear_flow(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let u = linalg::mat_vec(&self.spectrum.pinv, x);
        let v = self.spectrum.exp_diag(t, &u);
        linalg::mat_vec(&self.spectrum.p, &v)
    }
}

/// Absolute tolerance on the numeric defect when reporting a combination
/// as a near-resonance warning.
const NEAR_RESONANCE_TOL: f64 = 1e-9;

/// Compute the spectrum of A: eigenvalues sorted per the sink ordering,
/// κ, change of basis, and resonances up to order ⌈κ⌉+1.
///
/// Supported shapes: diagonal n×n, and general real 2×2 with distinct
/// real negative eigenvalues.
pub fn analyze(a: &[Vec<f64>]) -> Result<Spectrum> {
    let n = a.len();
    if n == 0 || a.iter().any(|row| row.len() != n) {
        return Err(Error::Input("A must be a nonempty square matrix".into()));
    }
    let (eigenvalues, p) = if linalg::is_diagonal(a) {
        let mut idx: Vec<usize> = (0..n).collect();
        // Slowest (largest, closest to zero) first.
        idx.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
        let eigenvalues: Vec<f64> = idx.iter().map(|&i| a[i][i]).collect();
        // Permutation P with A = P·diag(λ)·P⁻¹ (identity if already sorted).
        let mut p = vec![vec![0.0; n]; n];
        for (col, &i) in idx.iter().enumerate() {
            p[i][col] = 1.0;
        }
        (eigenvalues, p)
    } else if n == 2 {
        eigen_2x2(a)?
    } else {
        return Err(Error::UnsupportedShape(format!(
            "general {n}×{n} matrices are not supported; provide a diagonal matrix or a 2×2"
        )));
    };
    if eigenvalues[0] >= 0.0 {
        return Err(Error::NotASink(eigenvalues[0]));
    }
    let pinv = linalg::mat_inverse(&p)
        .ok_or_else(|| Error::InternalConsistency("singular eigenvector matrix".into()))?;
    // Reconstruction check: P·diag(λ)·P⁻¹ = A to 1e-10 relative.
    let mut lam = linalg::identity(n);
    for i in 0..n {
        lam[i][i] = eigenvalues[i];
    }
    let recon = linalg::mat_mul(&linalg::mat_mul(&p, &lam), &pinv);
    if linalg::rel_matrix_error(&recon, a) > 1e-10 {
        return Err(Error::InternalConsistency(
            "eigendecomposition does not reconstruct A to 1e-10".into(),
        ));
    }
    let kappa = eigenvalues[n - 1] / eigenvalues[0];
    let basis = RateBasis::new(eigenvalues.clone());
    let max_order = kappa.ceil() as u32 + 1;
    let (resonances, near_resonances) = detect_resonance_in_basis(&basis, max_order);
    Ok(Spectrum {
        eigenvalues,
        kappa,
        p,
        pinv,
        basis,
        resonances,
        near_resonances,
    })
}

fn eigen_2x2(a: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (a11, a12, a21, a22) = (a[0][0], a[0][1], a[1][0], a[1][1]);
    let tr = a11 + a22;
    let det = a11 * a22 - a12 * a21;
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        return Err(Error::UnsupportedSpectrum(format!(
            "complex eigenvalues (discriminant {disc:.3e})"
        )));
    }
    if disc == 0.0 {
        return Err(Error::NonDiagonalizable(
            "repeated eigenvalue with non-diagonal 2×2 matrix".into(),
        ));
    }
    let sq = disc.sqrt();
    let slow = (tr + sq) / 2.0;
    let fast = (tr - sq) / 2.0;
    let eigenvector = |lambda: f64| -> Vec<f64> {
        let scale = a11.abs().max(a12.abs()).max(a21.abs()).max(a22.abs());
        if a12.abs() > 1e-14 * scale {
            vec![1.0, (lambda - a11) / a12]
        } else if a21.abs() > 1e-14 * scale {
            let v1 = (lambda - a22) / a21;
            if v1.abs() > 1e-14 {
                vec![1.0, a21 / (lambda - a22)]
            } else {
                vec![0.0, 1.0]
            }
        } else {
            // Diagonal matrices never reach here.
            unreachable!("diagonal 2×2 handled separately")
        }
    };
    let mut vs = eigenvector(slow);
    let vf = eigenvector(fast);
    // Slow eigenvector normalized to positive first component.
    if vs[0] < 0.0 {
        vs = vec![-vs[0], -vs[1]];
    }
    let p = vec![vec![vs[0], vf[0]], vec![vs[1], vf[1]]];
    Ok((vec![slow, fast], p))
}

/// Classify the spacing: closely-spaced iff κ < α.
pub fn classify(spectrum: &Spectrum, field: &PolyVectorField) -> Classification {
    if spectrum.kappa() < field.alpha() as f64 {
        Classification::CloselySpaced
    } else {
        Classification::WidelySpaced
    }
}

/// All resonances `λⱼ = Σ mᵢλᵢ` with `2 ≤ Σ mᵢ ≤ max_order`. Equality is
/// decided on the exact rational reconstruction of the eigenvalue ratios;
/// combinations inside the floating-point tolerance that the
/// reconstruction does not confirm are returned as near-resonance
/// warnings.
pub fn detect_resonance(spectrum: &Spectrum, max_order: u32) -> Vec<Resonance> {
    detect_resonance_in_basis(spectrum.rate_basis(), max_order).0
}

fn detect_resonance_in_basis(
    basis: &RateBasis,
    max_order: u32,
) -> (Vec<Resonance>, Vec<NearResonance>) {
    let n = basis.len();
    let eigs = basis.eigenvalues();
    let mut resonances = Vec::new();
    let mut near = Vec::new();
    let mut multi = vec![0u32; n];
    enumerate_multi_indices(&mut multi, 0, max_order, &mut |m| {
        let order: u32 = m.iter().sum();
        if order < 2 {
            return;
        }
        let value: f64 = m.iter().zip(eigs).map(|(&k, &l)| k as f64 * l).sum();
        let lattice_sum = basis
            .lattice()
            .map(|p| m.iter().zip(p).map(|(&k, &pi)| k as i64 * pi).sum::<i64>());
        for j in 0..n {
            let exact = match (lattice_sum, basis.lattice()) {
                (Some(s), Some(p)) => s == p[j],
                _ => false,
            };
            if exact {
                resonances.push(Resonance { multi_index: m.to_vec(), target: j, order });
            } else {
                let scale: f64 = m
                    .iter()
                    .zip(eigs)
                    .map(|(&k, &l)| k as f64 * l.abs())
                    .sum::<f64>()
                    + eigs[j].abs();
                let defect = value - eigs[j];
                if defect.abs() <= NEAR_RESONANCE_TOL * scale {
                    near.push(NearResonance {
                        multi_index: m.to_vec(),
                        target: j,
                        order,
                        defect,
                    });
                }
            }
        }
    });
    let key = |m: &[u32], t: usize, o: u32| (o, t, m.to_vec());
    resonances.sort_by_key(|r| key(&r.multi_index, r.target, r.order));
    near.sort_by_key(|r| key(&r.multi_index, r.target, r.order));
    (resonances, near)
}

fn enumerate_multi_indices(
    multi: &mut Vec<u32>,
    pos: usize,
    budget: u32,
    visit: &mut impl FnMut(&[u32]),
) {
    if pos == multi.len() {
        visit(multi);
        return;
    }
    for k in 0..=budget {
        multi[pos] = k;
        enumerate_multi_indices(multi, pos + 1, budget - k, visit);
    }
    multi[pos] = 0;
}

/// Assemble a [`SinkSystem`]: spectrum analysis, classification, and the
/// exact polynomial conjugation r(u) = P⁻¹b(Pu).
pub fn build_system(a: Vec<Vec<f64>>, field: PolyVectorField) -> Result<SinkSystem> {
    let n = field.dim();
    if a.len() != n {
        return Err(Error::Dimension(format!(
            "matrix is {}×{} but the field has {} components",
            a.len(),
            a.first().map_or(0, Vec::len),
            n
        )));
    }
    let spectrum = analyze(&a)?;
    let classification = classify(&spectrum, &field);
    let diagonalized_field = conjugate_field(&field, &spectrum)?;
    Ok(SinkSystem { a, field, spectrum, classification, diagonalized_field })
}

/// r(u) = P⁻¹·b(P·u) by exact polynomial composition.
fn conjugate_field(field: &PolyVectorField, spectrum: &Spectrum) -> Result<PolyVectorField> {
    let n = field.dim();
    let p = spectrum.p_matrix();
    let pinv = spectrum.pinv_matrix();
    // Linear forms xₖ = Σ_l P[k][l]·u_l.
    let linear: Vec<ParamPoly> = (0..n)
        .map(|k| {
            let mut form = ParamPoly::zero(n);
            for l in 0..n {
                if p[k][l] != 0.0 {
                    form = form.add(&ParamPoly::var(n, l).scale(p[k][l]));
                }
            }
            form
        })
        .collect();
    let composed: Vec<ParamPoly> = field.components().iter().map(|c| c.compose(&linear)).collect();
    let components: Vec<ParamPoly> = (0..n)
        .map(|j| {
            let mut r = ParamPoly::zero(n);
            for (i, comp) in composed.iter().enumerate() {
                if pinv[j][i] != 0.0 {
                    r = r.add(&comp.scale(pinv[j][i]));
                }
            }
            r
        })
        .collect();
    PolyVectorField::new(components)
}

// ---------------------------------------------------------------------------
// System definition files.

/// One monomial of a field component in the JSON definition.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MonomialDef {
    coeff: f64,
    exps: Vec<u32>,
}

/// `{ "A": row-major array, "b": [per-component monomial lists] }`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDef {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<Vec<MonomialDef>>,
}

/// Parse a system definition from JSON, rejecting unknown keys and
/// reporting degree violations with the offending component and term.
pub fn system_from_json(text: &str) -> Result<SinkSystem> {
    let def: SystemDef = serde_json::from_str(text)?;
    let n = def.b.len();
    if def.a.len() != n || def.a.iter().any(|row| row.len() != n) {
        return Err(Error::Input(format!(
            "field \"A\": expected an {n}×{n} matrix to match the {n} components of \"b\""
        )));
    }
    let mut components = Vec::with_capacity(n);
    for (i, comp) in def.b.iter().enumerate() {
        let mut poly = ParamPoly::zero(n);
        for (k, m) in comp.iter().enumerate() {
            if m.exps.len() != n {
                return Err(Error::Input(format!(
                    "field \"b\"[{i}][{k}].exps: expected {n} exponents, got {}",
                    m.exps.len()
                )));
            }
            let deg: u32 = m.exps.iter().sum();
            if deg < 2 {
                return Err(Error::Input(format!(
                    "field \"b\"[{i}][{k}]: monomial total degree {deg} < 2 (the field must vanish to second order)"
                )));
            }
            poly = poly.add(&ParamPoly::monomial(n, m.exps.clone(), m.coeff));
        }
        components.push(poly);
    }
    build_system(def.a, PolyVectorField::new(components)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn star_node_field() -> PolyVectorField {
        // b from the worked quadratic star-node example.
        PolyVectorField::new(vec![
            ParamPoly::from_terms(2, [(vec![2, 0], 1.0), (vec![1, 1], 8.0), (vec![0, 2], 1.0)]),
            ParamPoly::from_terms(2, [(vec![2, 0], 8.0), (vec![1, 1], 1.0), (vec![0, 2], 8.0)]),
        ])
        .unwrap()
    }

    #[test]
    fn analyze_star_node() {
        let spec = analyze(&[vec![-1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert_eq!(spec.eigenvalues(), &[-1.0, -1.0]);
        assert_eq!(spec.kappa(), 1.0);
        assert_eq!(spec.p_matrix(), &linalg::identity(2)[..]);
        assert!(spec.resonances().is_empty());
    }

    #[test]
    fn analyze_diag_1_2() {
        let spec = analyze(&[vec![-1.0, 0.0], vec![0.0, -2.0]]).unwrap();
        assert_eq!(spec.kappa(), 2.0);
        assert_eq!(
            spec.resonances(),
            &[Resonance { multi_index: vec![2, 0], target: 1, order: 2 }]
        );
    }

    #[test]
    fn analyze_unsorted_diagonal_permutes() {
        let a = vec![vec![-2.0, 0.0], vec![0.0, -1.0]];
        let spec = analyze(&a).unwrap();
        assert_eq!(spec.eigenvalues(), &[-1.0, -2.0]);
        let mut lam = linalg::identity(2);
        lam[0][0] = -1.0;
        lam[1][1] = -2.0;
        let recon = linalg::mat_mul(
            &linalg::mat_mul(spec.p_matrix(), &lam),
            spec.pinv_matrix(),
        );
        assert!(linalg::rel_matrix_error(&recon, &a) < 1e-14);
    }

    #[test]
    fn analyze_michaelis_menten_matrix() {
        // ε = 1, η = 8/9: λ₊ = -2/3, λ₋ = -4/3, κ = 2.
        let eta = 8.0 / 9.0;
        let a = vec![vec![-1.0, 1.0 - eta], vec![1.0, -1.0]];
        let spec = analyze(&a).unwrap();
        assert!((spec.eigenvalues()[0] + 2.0 / 3.0).abs() < 1e-12);
        assert!((spec.eigenvalues()[1] + 4.0 / 3.0).abs() < 1e-12);
        assert!((spec.kappa() - 2.0).abs() < 1e-12);
        // Slow eigenvector (1, σ₊) with σ₊ = 3, fast (1, σ₋) with σ₋ = -3.
        let p = spec.p_matrix();
        assert!((p[0][0] - 1.0).abs() < 1e-12);
        assert!((p[1][0] - 3.0).abs() < 1e-12);
        assert!((p[0][1] - 1.0).abs() < 1e-12);
        assert!((p[1][1] + 3.0).abs() < 1e-12);
        assert!(spec.is_resonant());
    }

    #[test]
    fn analyze_rejects_bad_spectra() {
        // Rotation: complex eigenvalues.
        let err = analyze(&[vec![-1.0, 1.0], vec![-1.0, -1.0]]).unwrap_err();
        assert!(matches!(err, Error::UnsupportedSpectrum(_)));
        // Positive eigenvalue.
        let err = analyze(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap_err();
        assert!(matches!(err, Error::NotASink(_)));
        // Repeated eigenvalue, non-diagonal.
        let err = analyze(&[vec![-1.0, 1.0], vec![0.0, -1.0]]).unwrap_err();
        assert!(matches!(err, Error::NonDiagonalizable(_)));
        // n > 2, non-diagonal.
        let a3 = vec![
            vec![-1.0, 0.5, 0.0],
            vec![0.0, -2.0, 0.0],
            vec![0.0, 0.0, -3.0],
        ];
        let err = analyze(&a3).unwrap_err();
        assert!(matches!(err, Error::UnsupportedShape(_)));
    }

    #[test]
    fn classify_examples() {
        let spec1 = analyze(&[vec![-1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let quad = star_node_field();
        assert_eq!(classify(&spec1, &quad), Classification::CloselySpaced);

        let spec2 = analyze(&[vec![-1.0, 0.0], vec![0.0, -2.0]]).unwrap();
        let cubic = PolyVectorField::new(vec![
            ParamPoly::zero(2),
            ParamPoly::monomial(2, vec![3, 0], 1.0),
        ])
        .unwrap();
        assert_eq!(cubic.alpha(), 3);
        assert_eq!(classify(&spec2, &cubic), Classification::CloselySpaced);
        assert_eq!(classify(&spec2, &quad), Classification::WidelySpaced);
    }

    #[test]
    fn resonance_examples() {
        // λ = (-2/3, -4/3): same lattice as (-1, -2).
        let spec = analyze(&[vec![-2.0 / 3.0, 0.0], vec![0.0, -4.0 / 3.0]]).unwrap();
        assert_eq!(
            spec.resonances(),
            &[Resonance { multi_index: vec![2, 0], target: 1, order: 2 }]
        );
        // Star node: no resonance at any order (Σmᵢ·(-1) ≤ -2 < -1).
        let star = analyze(&[vec![-1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert!(detect_resonance(&star, 10).is_empty());
    }

    #[test]
    fn build_system_diagonal_keeps_field() {
        let sys = build_system(
            vec![vec![-1.0, 0.0], vec![0.0, -1.0]],
            star_node_field(),
        )
        .unwrap();
        assert_eq!(sys.diagonalized_field(), sys.field());
        assert!(sys.is_sorted_diagonal());
    }

    #[test]
    fn build_system_zero_field() {
        let sys = build_system(
            vec![vec![-1.0, 0.0], vec![0.0, -2.0]],
            PolyVectorField::zero(2),
        )
        .unwrap();
        assert!(sys.diagonalized_field().is_zero());
    }

    #[test]
    fn conjugated_field_matches_numeric_composition() {
        // MM-shaped system: r(u) must reproduce P⁻¹b(Pu) pointwise.
        let eta = 8.0 / 9.0;
        let a = vec![vec![-1.0, 1.0 - eta], vec![1.0, -1.0]];
        let field = PolyVectorField::new(vec![
            ParamPoly::monomial(2, vec![1, 1], 1.0),
            ParamPoly::monomial(2, vec![1, 1], -1.0),
        ])
        .unwrap();
        let sys = build_system(a, field).unwrap();
        // r₂₁₁ = σ₊(σ₊+ε⁻¹)/(σ₊-σ₋) = 3·4/6 = 2 for ε = 1.
        let r211 = sys.diagonalized_field().component(1).coeff(&[2, 0]);
        assert!((r211 - 2.0).abs() < 1e-12);
        // Pointwise agreement at pseudo-random points.
        let p = sys.spectrum().p_matrix().to_vec();
        let pinv = sys.spectrum().pinv_matrix().to_vec();
        for k in 0..10 {
            let u = [0.1 * ((k * 7 % 11) as f64 / 11.0 - 0.4), 0.08 * ((k * 5 % 13) as f64 / 13.0 - 0.3)];
            let x = linalg::mat_vec(&p, &u);
            let expected = linalg::mat_vec(&pinv, &sys.field().eval(&x));
            let got = sys.diagonalized_field().eval(&u);
            for (e, g) in expected.iter().zip(&got) {
                assert!((e - g).abs() <= 1e-10 * (1.0 + e.abs()));
            }
        }
    }

    #[test]
    fn operator_norm_of_diagonal_exponential() {
        // ‖e^{tΛ}‖ = e^{μ₁t} and ‖e^{-tΛ}‖ = e^{-κμ₁t} for diagonal Λ.
        let spec = analyze(&[vec![-1.0, 0.0], vec![0.0, -3.0]]).unwrap();
        for &t in &[0.0, 1.0, 5.0] {
            let fwd: f64 = spec
                .eigenvalues()
                .iter()
                .map(|l| (l * t).exp())
                .fold(0.0, f64::max);
            let bwd: f64 = spec
                .eigenvalues()
                .iter()
                .map(|l| (-l * t).exp())
                .fold(0.0, f64::max);
            assert!((fwd - (spec.eigenvalues()[0] * t).exp()).abs() < 1e-14);
            assert!(
                (bwd - (-spec.kappa() * spec.eigenvalues()[0] * t).exp()).abs()
                    < 1e-12 * bwd
            );
        }
    }

    #[test]
    fn json_input_strict() {
        let good = r#"{"A": [[-1.0, 0.0], [0.0, -2.0]],
                       "b": [[], [{"coeff": 1.0, "exps": [3, 0]}]]}"#;
        let sys = system_from_json(good).unwrap();
        assert_eq!(sys.field().alpha(), 3);

        let unknown_key = r#"{"A": [[-1.0]], "b": [[]], "extra": 1}"#;
        assert!(system_from_json(unknown_key).is_err());

        let low_degree = r#"{"A": [[-1.0, 0.0], [0.0, -2.0]],
                             "b": [[{"coeff": 1.0, "exps": [1, 0]}], []]}"#;
        let err = system_from_json(low_degree).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("b\"[0][0]") && msg.contains("degree 1"), "{msg}");
    }
}
