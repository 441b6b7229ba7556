//! Exponential rates as exact integer combinations of eigenvalues.
//!
//! Resonance (`Σ mᵢλᵢ = λⱼ`) is decided structurally: when the eigenvalue
//! ratios admit an exact rational reconstruction, every rate maps to an
//! integer coordinate on the common lattice and equality of rates is
//! integer equality. Floating-point values are carried only for
//! evaluation and ordering, never for resonance decisions.

use serde::Serialize;

/// Largest denominator accepted when reconstructing an eigenvalue ratio
/// as a rational number.
pub const MAX_RATIO_DENOMINATOR: i64 = 64;

/// Absolute tolerance on the ratio for rational reconstruction.
pub const RATIO_TOLERANCE: f64 = 1e-9;

/// Cap on the common lattice denominator; beyond this the spectrum is
/// treated as incommensurate.
const MAX_COMMON_DENOMINATOR: i64 = 1 << 20;

/// The eigenvalue list rates are expressed over, plus the integer lattice
/// coordinates when the eigenvalues are commensurate.
///
/// When `lattice` is `Some(p)`, eigenvalue `λᵢ` equals `pᵢ·g` exactly for
/// the generator `g = λ₁/p₁`, and a combination with multiplicities `m`
/// sits at lattice index `Σ mᵢpᵢ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateBasis {
    eigenvalues: Vec<f64>,
    lattice: Option<Vec<i64>>,
}

impl RateBasis {
    /// Build a basis from an eigenvalue list ordered `λₙ ≤ … ≤ λ₁ < 0`.
    pub fn new(eigenvalues: Vec<f64>) -> Self {
        assert!(!eigenvalues.is_empty(), "empty eigenvalue list");
        let lattice = commensurate_lattice(&eigenvalues);
        Self { eigenvalues, lattice }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, j: usize) -> f64 {
        self.eigenvalues[j]
    }

    /// Lattice coordinates of the eigenvalues, when commensurate.
    pub fn lattice(&self) -> Option<&[i64]> {
        self.lattice.as_deref()
    }

    pub fn is_commensurate(&self) -> bool {
        self.lattice.is_some()
    }
}

/// An exponential rate `Σ mᵢλᵢ` stored as the exact multiplicity vector
/// `m` with its cached numeric value.
#[derive(Clone, Debug, Serialize)]
pub struct RateCombo {
    coeffs: Vec<i64>,
    value: f64,
}

impl RateCombo {
    pub fn new(coeffs: Vec<i64>, basis: &RateBasis) -> Self {
        assert_eq!(coeffs.len(), basis.len(), "rate/basis length mismatch");
        let value = dot(&coeffs, basis.eigenvalues());
        Self { coeffs, value }
    }

    /// The unit combination for eigenvalue `λⱼ`.
    pub fn eigen(j: usize, basis: &RateBasis) -> Self {
        let mut coeffs = vec![0i64; basis.len()];
        coeffs[j] = 1;
        Self::new(coeffs, basis)
    }

    pub fn zero(basis: &RateBasis) -> Self {
        Self::new(vec![0; basis.len()], basis)
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn order(&self) -> i64 {
        self.coeffs.iter().sum()
    }

    /// Sum of two rates; the value is recomputed from the basis so it stays
    /// within 1 ulp of the exact dot product.
    pub fn add(&self, other: &RateCombo, basis: &RateBasis) -> Self {
        let coeffs: Vec<i64> = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Self::new(coeffs, basis)
    }

    /// Integer lattice index `Σ mᵢpᵢ` when the basis is commensurate.
    pub fn lattice_index(&self, basis: &RateBasis) -> Option<i64> {
        basis
            .lattice()
            .map(|p| self.coeffs.iter().zip(p).map(|(m, pi)| m * pi).sum())
    }

    /// Exact equality of rates: lattice indices when commensurate,
    /// multiplicity vectors otherwise. Never a floating-point comparison.
    pub fn same_rate(&self, other: &RateCombo, basis: &RateBasis) -> bool {
        match basis.lattice() {
            Some(_) => self.lattice_index(basis) == other.lattice_index(basis),
            None => self.coeffs == other.coeffs,
        }
    }

    /// Whether this rate equals `λⱼ` exactly (the resonance test).
    pub fn is_eigen_rate(&self, j: usize, basis: &RateBasis) -> bool {
        self.same_rate(&RateCombo::eigen(j, basis), basis)
    }

    /// Whether `e^{rate·t}` decays strictly faster than `e^{λⱼt}`, i.e.
    /// `rate < λⱼ`. Decided on the lattice when commensurate.
    pub fn decays_faster_than_eigen(&self, j: usize, basis: &RateBasis) -> bool {
        match basis.lattice() {
            // g = λ₁/p₁ < 0, so N·g < pⱼ·g  ⟺  N > pⱼ.
            Some(p) => self.lattice_index(basis).unwrap() > p[j],
            None => {
                if self.coeffs == RateCombo::eigen(j, basis).coeffs {
                    false
                } else {
                    self.value < basis.eigenvalue(j)
                }
            }
        }
    }
}

/// Equality of RateCombos is equality of the integer multiplicity vectors.
impl PartialEq for RateCombo {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}

impl Eq for RateCombo {}

fn dot(coeffs: &[i64], eigs: &[f64]) -> f64 {
    coeffs
        .iter()
        .zip(eigs)
        .map(|(&m, &l)| m as f64 * l)
        .sum()
}

/// Continued-fraction reconstruction of `x` as `p/q` in lowest terms with
/// `q ≤ max_den` and `|x − p/q| ≤ tol`.
pub fn rational_reconstruct(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h_prev, mut h) = (1i64, x.floor() as i64);
    let (mut k_prev, mut k) = (0i64, 1i64);
    let mut frac = x - x.floor();
    for _ in 0..64 {
        if (x - h as f64 / k as f64).abs() <= tol {
            let g = gcd(h.abs().max(1), k);
            return Some((h / g, k / g));
        }
        if frac.abs() < f64::EPSILON {
            break;
        }
        let r = 1.0 / frac;
        let a = r.floor() as i64;
        frac = r - r.floor();
        let h_next = a.checked_mul(h)?.checked_add(h_prev)?;
        let k_next = a.checked_mul(k)?.checked_add(k_prev)?;
        if k_next > max_den {
            break;
        }
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
    }
    if (x - h as f64 / k as f64).abs() <= tol {
        let g = gcd(h.abs().max(1), k);
        Some((h / g, k / g))
    } else {
        None
    }
}

/// Lattice coordinates `pᵢ` with `λᵢ = pᵢ·(λ₁/p₁)` exactly, when every
/// ratio `λᵢ/λ₁` reconstructs as a rational with denominator ≤ 64.
pub fn commensurate_lattice(eigenvalues: &[f64]) -> Option<Vec<i64>> {
    let base = eigenvalues[0];
    if base >= 0.0 {
        return None;
    }
    let mut fractions = Vec::with_capacity(eigenvalues.len());
    for &l in eigenvalues {
        let ratio = l / base;
        let (p, q) = rational_reconstruct(ratio, MAX_RATIO_DENOMINATOR, RATIO_TOLERANCE)?;
        if p <= 0 {
            return None;
        }
        fractions.push((p, q));
    }
    let mut denom = 1i64;
    for &(_, q) in &fractions {
        denom = lcm(denom, q);
        if denom > MAX_COMMON_DENOMINATOR {
            return None;
        }
    }
    Some(
        fractions
            .iter()
            .map(|&(p, q)| p * (denom / q))
            .collect(),
    )
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b) * b
}
