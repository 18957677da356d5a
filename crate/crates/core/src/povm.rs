//! Optimal global and separable measurements, their validation, and their
//! success probabilities (exact trace form and closed form).

use crate::error::{Error, Result};
use crate::linalg::{
    compress_to_range, hermitian_eig, kron, operator_norm, ComplexMatrix, EIGEN_CLAMP,
    HERMITICITY_TOL, IDENTITY_TOL,
};
use crate::symmetry::{
    embed_local_product, pair_projectors, DimensionTable, Party, SpaceSpec, SymmetryOperators,
};

/// Coefficients above their bound by less than this are still feasible, so
/// that `2.0 / 3.0` and the saturated `beta` pair pass.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// Measurement outcome: `First`/`Second` name the reference state the input
/// is identified with, `Inconclusive` is the "don't know" answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Inconclusive,
    First,
    Second,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Inconclusive, Outcome::First, Outcome::Second];

    pub fn label(self) -> u8 {
        match self {
            Outcome::Inconclusive => 0,
            Outcome::First => 1,
            Outcome::Second => 2,
        }
    }

    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            0 => Some(Outcome::Inconclusive),
            1 => Some(Outcome::First),
            2 => Some(Outcome::Second),
            _ => None,
        }
    }
}

/// Three-outcome measurement on `(C^d)^{⊗3}`, indexed by [`Outcome`].
#[derive(Clone, Debug)]
pub struct Povm {
    d: usize,
    elements: [ComplexMatrix; 3],
}

impl Povm {
    /// Elements are given in label order `[E0, E1, E2]`.
    pub fn new(d: usize, elements: [ComplexMatrix; 3]) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(d));
        }
        let expected = d.pow(3);
        for e in &elements {
            if e.dim() != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    actual: e.dim(),
                });
            }
        }
        Ok(Self { d, elements })
    }

    /// The trivial measurement that always answers inconclusive.
    pub fn trivial(d: usize) -> Result<Self> {
        let n = d.pow(3);
        Self::new(
            d,
            [
                ComplexMatrix::identity(n),
                ComplexMatrix::zeros(n),
                ComplexMatrix::zeros(n),
            ],
        )
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.d.pow(3)
    }

    pub fn element(&self, outcome: Outcome) -> &ComplexMatrix {
        &self.elements[outcome.label() as usize]
    }

    pub fn elements(&self) -> &[ComplexMatrix; 3] {
        &self.elements
    }

    pub fn completeness_residual(&self) -> f64 {
        let [e0, e1, e2] = &self.elements;
        let sum = &(e0 + e1) + e2;
        operator_norm(&(sum - ComplexMatrix::identity(self.dim())))
    }

    /// Largest `max_mu ||other_mu - self_mu||`.
    pub fn distance(&self, other: &Povm) -> Result<f64> {
        Ok(self
            .element_distances(other)?
            .into_iter()
            .fold(0.0, f64::max))
    }

    pub fn element_distances(&self, other: &Povm) -> Result<[f64; 3]> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(Outcome::ALL.map(|o| operator_norm(&(self.element(o) - other.element(o)))))
    }
}

/// Optimal unambiguous identification measurement for single systems of
/// dimension `d`:
/// `E1 = 2/3 M A(02)`, `E2 = 2/3 M A(01)`, `E0 = 1/3 M (1 + 2 avg) + S + A`,
/// with `avg = (T(01) + T(02)) / 2`.
pub fn global_optimal_povm(d: usize) -> Result<Povm> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    let ops = SymmetryOperators::new(d);
    let mixed = &ops.sectors.mixed;
    let first = (mixed * &ops.pair02.antisymmetric).scale(2.0 / 3.0);
    let second = (mixed * &ops.pair01.antisymmetric).scale(2.0 / 3.0);
    let shifted = &ops.identity() + &ops.swaps.average.scale(2.0);
    let inconclusive = &(&(mixed * &shifted).scale(1.0 / 3.0) + &ops.sectors.symmetric)
        + &ops.sectors.antisymmetric;
    Povm::new(d, [inconclusive, first, second])
}

/// The six nonnegative weights of the unitary-scalar, no-error separable
/// ansatz for the first-outcome element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparableCoefficients {
    /// Weights of `S^a⊗M^bA^b(02)`, `A^a⊗M^bS^b(02)`, `M^aS^a(02)⊗A^b`, `M^aA^a(02)⊗S^b`.
    pub alpha: [f64; 4],
    /// Weights of `M^aS^a(02)⊗M^bA^b(02)` and `M^aA^a(02)⊗M^bS^b(02)`.
    pub beta: [f64; 2],
}

impl SeparableCoefficients {
    pub const ALPHA_MAX: f64 = 2.0 / 3.0;

    pub fn new(alpha: [f64; 4], beta: [f64; 2]) -> Self {
        Self { alpha, beta }
    }

    pub fn zero() -> Self {
        Self::new([0.0; 4], [0.0; 2])
    }

    /// The maximizer: every `alpha = 2/3`, both `beta = 1/2`.
    pub fn optimal() -> Self {
        Self::new([Self::ALPHA_MAX; 4], [0.5, 0.5])
    }

    pub fn beta_mean(&self) -> f64 {
        0.5 * (self.beta[0] + self.beta[1])
    }

    pub fn beta_half_difference(&self) -> f64 {
        0.5 * (self.beta[0] - self.beta[1])
    }

    /// Largest eigenvalue of the mixed-mixed block of `E1 + E2`.
    pub fn mixed_block_max_eigenvalue(&self) -> f64 {
        x_spectrum(self.beta[0], self.beta[1])[3]
    }

    pub fn check_feasible(&self) -> Result<()> {
        if let Some(bad) = self
            .alpha
            .iter()
            .chain(&self.beta)
            .find(|c| c.is_nan() || **c < 0.0)
        {
            return Err(Error::InfeasibleCoefficients(format!(
                "negative or NaN coefficient {bad}"
            )));
        }
        if let Some(k) = self
            .alpha
            .iter()
            .position(|&a| a > Self::ALPHA_MAX + FEASIBILITY_SLACK)
        {
            return Err(Error::InfeasibleCoefficients(format!(
                "alpha[{k}] = {} exceeds 2/3",
                self.alpha[k]
            )));
        }
        let top = self.mixed_block_max_eigenvalue();
        if top > 1.0 + FEASIBILITY_SLACK {
            return Err(Error::InfeasibleCoefficients(format!(
                "beta = {:?} gives mixed-block eigenvalue {top} > 1",
                self.beta
            )));
        }
        Ok(())
    }

    pub fn is_feasible(&self) -> bool {
        self.check_feasible().is_ok()
    }
}

/// First-outcome element of the separable ansatz on the global space.
pub fn separable_first_element(
    spec: &SpaceSpec,
    c: &SeparableCoefficients,
) -> Result<ComplexMatrix> {
    let a = SymmetryOperators::new(spec.d_a());
    let b = SymmetryOperators::new(spec.d_b());
    separable_first_element_with(spec, c, &a, &b)
}

pub(crate) fn separable_first_element_with(
    spec: &SpaceSpec,
    c: &SeparableCoefficients,
    a: &SymmetryOperators,
    b: &SymmetryOperators,
) -> Result<ComplexMatrix> {
    let mixed_sym = |ops: &SymmetryOperators| &ops.sectors.mixed * &ops.pair02.symmetric;
    let mixed_anti = |ops: &SymmetryOperators| &ops.sectors.mixed * &ops.pair02.antisymmetric;
    let (a_ms, a_ma) = (mixed_sym(a), mixed_anti(a));
    let (b_ms, b_ma) = (mixed_sym(b), mixed_anti(b));

    let terms: [(f64, &ComplexMatrix, &ComplexMatrix); 6] = [
        (c.alpha[0], &a.sectors.symmetric, &b_ma),
        (c.alpha[1], &a.sectors.antisymmetric, &b_ms),
        (c.alpha[2], &a_ms, &b.sectors.antisymmetric),
        (c.alpha[3], &a_ma, &b.sectors.symmetric),
        (c.beta[0], &a_ms, &b_ma),
        (c.beta[1], &a_ma, &b_ms),
    ];
    let mut first = ComplexMatrix::zeros(spec.global_dim());
    for (weight, alice, bob) in terms {
        if weight != 0.0 {
            first = first + embed_local_product(alice, bob, spec)?.scale(weight);
        }
    }
    Ok(first)
}

/// `T(12) op T(12)` by index relabeling.
pub(crate) fn exchange_references(op: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let swap = |g: usize| {
        let (i0, i1, i2) = (g / (d * d), (g / d) % d, g % d);
        (i0 * d + i2) * d + i1
    };
    ComplexMatrix::from_fn(op.dim(), |g, h| op.get(swap(g), swap(h)))
}

/// Separable measurement built from the six-term ansatz:
/// `E2 = T(12) E1 T(12)`, `E0 = 1 - E1 - E2`.
pub fn separable_povm(spec: &SpaceSpec, c: &SeparableCoefficients) -> Result<Povm> {
    c.check_feasible()?;
    let first = separable_first_element(spec, c)?;
    povm_from_first_element(spec.d(), first)
}

pub(crate) fn povm_from_first_element(d: usize, first: ComplexMatrix) -> Result<Povm> {
    let second = exchange_references(&first, d);
    let inconclusive = ComplexMatrix::identity(d.pow(3)) - &first - &second;
    Povm::new(d, [inconclusive, first, second])
}

pub fn optimal_separable_povm(spec: &SpaceSpec) -> Result<Povm> {
    separable_povm(spec, &SeparableCoefficients::optimal())
}

/// Haar-averaged mean success probability,
/// `(tr[E1 S(01)] + tr[E2 S(02)]) / (2 d_2 d_1)`.
pub fn exact_success_probability(p: &Povm) -> f64 {
    let d = p.d();
    let s01 = pair_projectors(0, 1, d).expect("valid pair").symmetric;
    let s02 = pair_projectors(0, 2, d).expect("valid pair").symmetric;
    let t1 = p.element(Outcome::First).trace_product(&s01).re;
    let t2 = p.element(Outcome::Second).trace_product(&s02).re;
    let table = DimensionTable::new(d as u64);
    let [d1, d2, _] = table.symmetric_powers;
    (t1 + t2) / (2.0 * d2 as f64 * d1 as f64)
}

/// `(d - 1) / (3d)`.
pub fn closed_form_global(d: u64) -> f64 {
    let d = d as f64;
    (d - 1.0) / (3.0 * d)
}

/// `(11 da^2 db^2 + da^2 + db^2 - 13) / (36 da db (da db + 1))`.
pub fn closed_form_separable(d_a: u64, d_b: u64) -> f64 {
    let (a, b) = (d_a as f64, d_b as f64);
    let (a2, b2) = (a * a, b * b);
    (11.0 * a2 * b2 + a2 + b2 - 13.0) / (36.0 * a * b * (a * b + 1.0))
}

/// `tr[E1^L S(01)]` of the separable ansatz from sector dimensions alone.
pub fn separable_trace_formula(d_a: u64, d_b: u64, c: &SeparableCoefficients) -> f64 {
    let a = DimensionTable::new(d_a);
    let b = DimensionTable::new(d_b);
    let f = |x: u64| x as f64;
    let alpha_part = c.alpha[0] * f(a.symmetric * b.mixed)
        + c.alpha[1] * f(a.antisymmetric * b.mixed)
        + c.alpha[2] * f(a.mixed * b.antisymmetric)
        + c.alpha[3] * f(a.mixed * b.symmetric);
    0.375 * alpha_part + 3.0 / 32.0 * (c.beta[0] + c.beta[1]) * f(a.mixed * b.mixed)
}

/// Success probability of the separable ansatz from [`separable_trace_formula`].
pub fn separable_success_formula(d_a: u64, d_b: u64, c: &SeparableCoefficients) -> f64 {
    let [d1, d2, _] = DimensionTable::new(d_a * d_b).symmetric_powers;
    separable_trace_formula(d_a, d_b, c) / (d1 as f64 * d2 as f64)
}

/// Analytic eigenvalues of the mixed-mixed block operator on one
/// four-dimensional block, ascending:
/// `{0, 3/2 b, 5/4 b ± sqrt(9/16 b^2 + h^2)}` with `b` the mean and `h` the
/// half difference of the two weights.
pub fn x_spectrum(beta1: f64, beta2: f64) -> [f64; 4] {
    let mean = 0.5 * (beta1 + beta2);
    let half_diff = 0.5 * (beta1 - beta2);
    let root = (9.0 / 16.0 * mean * mean + half_diff * half_diff).sqrt();
    let mut values = [0.0, 1.5 * mean, 1.25 * mean - root, 1.25 * mean + root];
    values.sort_by(f64::total_cmp);
    values
}

/// The part of `E1 + E2` living on `V_M^a ⊗ V_M^b`, as a global operator:
/// `beta1 (S^a(02)A^b(02) + S^a(01)A^b(01)) + beta2 (A^a(02)S^b(02) + A^a(01)S^b(01))`,
/// sandwiched by `M^a ⊗ M^b`.
pub fn x_operator(spec: &SpaceSpec, beta1: f64, beta2: f64) -> Result<ComplexMatrix> {
    let a = SymmetryOperators::new(spec.d_a());
    let b = SymmetryOperators::new(spec.d_b());
    let pair_terms = [
        (beta1, &a.pair02.symmetric, &b.pair02.antisymmetric),
        (beta1, &a.pair01.symmetric, &b.pair01.antisymmetric),
        (beta2, &a.pair02.antisymmetric, &b.pair02.symmetric),
        (beta2, &a.pair01.antisymmetric, &b.pair01.symmetric),
    ];
    let mut x = ComplexMatrix::zeros(spec.global_dim());
    for (w, alice, bob) in pair_terms {
        x = x + embed_local_product(alice, bob, spec)?.scale(w);
    }
    let block = embed_local_product(&a.sectors.mixed, &b.sectors.mixed, spec)?;
    Ok(&(&block * &x) * &block)
}

/// Eigenvalues (ascending) of [`x_operator`] restricted to `V_M^a ⊗ V_M^b`.
pub fn x_operator_spectrum(spec: &SpaceSpec, beta1: f64, beta2: f64) -> Result<Vec<f64>> {
    let x = x_operator(spec, beta1, beta2)?;
    let a = SymmetryOperators::new(spec.d_a());
    let b = SymmetryOperators::new(spec.d_b());
    let block = embed_local_product(&a.sectors.mixed, &b.sectors.mixed, spec)?;
    let restricted = compress_to_range(&x, &block)?;
    Ok(hermitian_eig(&restricted)?.eigenvalues)
}

/// Outcome of [`validate`]. Arrays are indexed by outcome label; the
/// no-error pair is `[||E1 S(02)||, ||E2 S(01)||]` and the exchange pair is
/// `[||E2 - T E1 T||, ||E0 - T E0 T||]` with `T = T(12)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub min_eigenvalues: [f64; 3],
    pub hermiticity_residuals: [f64; 3],
    pub completeness_residual: f64,
    pub no_error_residuals: [f64; 2],
    pub exchange_residuals: [f64; 2],
    pub pass: bool,
}

pub fn validate(p: &Povm) -> ValidationReport {
    let d = p.d();
    let hermiticity_residuals = Outcome::ALL.map(|o| p.element(o).hermitian_residual());
    let min_eigenvalues = Outcome::ALL.map(|o| {
        hermitian_eig(p.element(o))
            .map(|e| e.min_eigenvalue())
            .unwrap_or(f64::NAN)
    });
    let s01 = pair_projectors(0, 1, d).expect("valid pair").symmetric;
    let s02 = pair_projectors(0, 2, d).expect("valid pair").symmetric;
    let no_error_residuals = [
        operator_norm(&(p.element(Outcome::First) * &s02)),
        operator_norm(&(p.element(Outcome::Second) * &s01)),
    ];
    let exchange_residuals = [
        operator_norm(
            &(p.element(Outcome::Second) - &exchange_references(p.element(Outcome::First), d)),
        ),
        operator_norm(
            &(p.element(Outcome::Inconclusive)
                - &exchange_references(p.element(Outcome::Inconclusive), d)),
        ),
    ];
    let completeness_residual = p.completeness_residual();

    let pass = hermiticity_residuals.iter().all(|&r| r <= HERMITICITY_TOL)
        && min_eigenvalues.iter().all(|&m| m >= -EIGEN_CLAMP)
        && completeness_residual <= IDENTITY_TOL
        && no_error_residuals.iter().all(|&r| r <= IDENTITY_TOL)
        && exchange_residuals.iter().all(|&r| r <= IDENTITY_TOL);
    ValidationReport {
        min_eigenvalues,
        hermiticity_residuals,
        completeness_residual,
        no_error_residuals,
        exchange_residuals,
        pass,
    }
}

/// `max_mu ||W E_mu W^† - E_mu||` with `W = u^{⊗3}` for a unitary `u` on one system.
pub fn covariance_residual(p: &Povm, u: &ComplexMatrix) -> Result<f64> {
    if u.dim() != p.d() {
        return Err(Error::DimensionMismatch {
            expected: p.d(),
            actual: u.dim(),
        });
    }
    let w = kron(u, &kron(u, u));
    Ok(p.elements()
        .iter()
        .map(|e| operator_norm(&(e.conjugate_by(&w) - e.clone())))
        .fold(0.0, f64::max))
}

/// Party-local unitary `u ⊗ v` on one system `C^{d_a} ⊗ C^{d_b}`.
pub fn local_unitary(
    spec: &SpaceSpec,
    u: &ComplexMatrix,
    v: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    for (party, m) in [(Party::Alice, u), (Party::Bob, v)] {
        if m.dim() != spec.party_dim(party) {
            return Err(Error::DimensionMismatch {
                expected: spec.party_dim(party),
                actual: m.dim(),
            });
        }
    }
    Ok(kron(u, v))
}
