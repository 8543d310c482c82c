//! Dense complex linear algebra with quantum-mechanical contracts.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, NumericConfig, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type StateVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn zeros(dim: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(dim, dim)
}

/// Builds a square matrix from real row-major entries.
pub fn real_matrix(dim: usize, entries: &[f64]) -> ComplexMatrix {
    assert_eq!(entries.len(), dim * dim);
    ComplexMatrix::from_row_iterator(dim, dim, entries.iter().map(|&x| re(x)))
}

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b + b * a
}

pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(m, &m.adjoint())
}

pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

/// `|v⟩⟨v|`
pub fn outer(v: &StateVector) -> ComplexMatrix {
    v * v.adjoint()
}

/// Real part of `Tr[a b]` computed without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn check_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn check_square(m: &ComplexMatrix) -> Result<()> {
    if m.is_square() && m.nrows() > 0 {
        Ok(())
    } else {
        Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

pub(crate) fn ensure_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(hermitize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Applies a real function to a Hermitian matrix through its eigenbasis.
pub fn hermitian_function(m: &ComplexMatrix, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let diag = ComplexMatrix::from_diagonal(&StateVector::from_iterator(
        values.len(),
        values.iter().map(|&x| f(x)),
    ));
    &vectors * diag * vectors.adjoint()
}

/// Square root of a positive semidefinite matrix; negative round-off is clamped.
pub fn psd_sqrt(m: &ComplexMatrix) -> ComplexMatrix {
    hermitian_function(m, |x| re(x.max(0.0).sqrt()))
}

/// `exp(i·G)` for Hermitian `G`.
pub fn unitary_exp(generator: &ComplexMatrix) -> ComplexMatrix {
    hermitian_function(generator, |x| Complex64::from_polar(1.0, x))
}

/// Trace distance `½‖a − b‖₁` between Hermitian matrices.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let (values, _) = hermitian_eigen(&(a - b));
    0.5 * values.iter().map(|x| x.abs()).sum::<f64>()
}

/// A self-adjoint operator with a human-readable label.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: ComplexMatrix,
    label: String,
}

impl Observable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::checked(matrix, &NumericConfig::default())
    }

    pub fn checked(matrix: ComplexMatrix, cfg: &NumericConfig) -> Result<Self> {
        check_square(&matrix)?;
        check_finite(&matrix)?;
        let deviation = hermiticity_defect(&matrix);
        if deviation > cfg.hermiticity_tol {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            matrix: hermitize(&matrix),
            label: String::new(),
        })
    }

    /// Hermitian part of an arbitrary square matrix; never fails on asymmetry.
    pub fn hermitian_part(matrix: &ComplexMatrix) -> Self {
        Self {
            matrix: hermitize(matrix),
            label: String::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: identity(dim),
            label: "I".into(),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let d = StateVector::from_iterator(values.len(), values.iter().map(|&x| re(x)));
        Self {
            matrix: ComplexMatrix::from_diagonal(&d),
            label: String::new(),
        }
    }

    /// `A ⊗ I` or `I ⊗ A` embeddings.
    pub fn embed_first(&self, other_dim: usize) -> Self {
        Self {
            matrix: tensor(&self.matrix, &identity(other_dim)),
            label: format!("{}⊗I", self.label),
        }
    }

    pub fn embed_second(&self, other_dim: usize) -> Self {
        Self {
            matrix: tensor(&identity(other_dim), &self.matrix),
            label: format!("I⊗{}", self.label),
        }
    }

    pub fn add(&self, other: &Observable) -> Result<Self> {
        ensure_dim("observable sum", self.dim(), other.dim())?;
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
            label: format!("{}+{}", self.label, other.label),
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.scale(factor),
            label: self.label.clone(),
        }
    }

    /// Max-norm of `[self, other]`.
    pub fn commutator_norm(&self, other: &Observable) -> f64 {
        max_abs(&commutator(&self.matrix, &other.matrix))
    }
}

/// A positive semidefinite unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::checked(matrix, &NumericConfig::default())
    }

    pub fn checked(matrix: ComplexMatrix, cfg: &NumericConfig) -> Result<Self> {
        check_square(&matrix)?;
        check_finite(&matrix)?;
        let deviation = hermiticity_defect(&matrix);
        if deviation > cfg.hermiticity_tol {
            return Err(Error::NotHermitian { deviation });
        }
        let matrix = hermitize(&matrix);
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > cfg.trace_tol {
            return Err(Error::TraceNotOne { trace });
        }
        let (values, _) = hermitian_eigen(&matrix);
        let min_eigenvalue = values.first().copied().unwrap_or(0.0);
        if min_eigenvalue < -cfg.psd_tol {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(Self { matrix })
    }

    /// Normalises a positive operator of nonzero trace.
    pub fn normalized(matrix: ComplexMatrix) -> Result<Self> {
        let trace = matrix.trace().re;
        if !(trace > 0.0) {
            return Err(Error::TraceNotOne { trace });
        }
        Self::new(matrix.unscale(trace))
    }

    /// `|ψ⟩⟨ψ|` for a nonzero vector, normalised first.
    pub fn pure(psi: &StateVector) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        let unit = psi.unscale(norm);
        Ok(Self {
            matrix: hermitize(&outer(&unit)),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: identity(dim).unscale(dim as f64),
        }
    }

    /// Computational basis state `|index⟩⟨index|`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut matrix = zeros(dim);
        matrix[(index, index)] = ONE;
        Self { matrix }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator {
            matrix: tensor(&self.matrix, &other.matrix),
        }
    }

    /// `Tr[X ρ]`
    pub fn expect(&self, x: &ComplexMatrix) -> Result<Complex64> {
        ensure_dim("expectation value", self.dim(), x.nrows())?;
        ensure_dim("expectation value", self.dim(), x.ncols())?;
        Ok(trace_product(x, &self.matrix))
    }

    pub fn sqrt(&self) -> ComplexMatrix {
        psd_sqrt(&self.matrix)
    }

    /// Returns whether the operator is diagonal in the computational basis.
    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)].norm() <= tol))
    }

    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        Self {
            matrix: hermitize(&matrix),
        }
    }
}

/// Spectral measure of an observable: one projector per distinct eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<ComplexMatrix>,
    /// Orthonormal eigenvectors spanning each projector's range.
    pub eigenvectors: Vec<Vec<StateVector>>,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let dim = self.projectors[0].nrows();
        self.eigenvalues
            .iter()
            .zip(&self.projectors)
            .fold(zeros(dim), |acc, (&l, p)| acc + p.scale(l))
    }

    /// Projector for the eigenvalue nearest to `value`, if within `tol`.
    pub fn projector_for(&self, value: f64, tol: f64) -> Option<&ComplexMatrix> {
        self.eigenvalues
            .iter()
            .position(|&l| (l - value).abs() <= tol)
            .map(|i| &self.projectors[i])
    }
}

pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn tensor_vec(a: &StateVector, b: &StateVector) -> StateVector {
    a.kronecker(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of an operator on `C^d1 ⊗ C^d2`.
pub fn partial_trace(m: &ComplexMatrix, dims: (usize, usize), keep: Keep) -> Result<ComplexMatrix> {
    let (d1, d2) = dims;
    ensure_dim("partial trace rows", d1 * d2, m.nrows())?;
    ensure_dim("partial trace cols", d1 * d2, m.ncols())?;
    Ok(match keep {
        Keep::First => ComplexMatrix::from_fn(d1, d1, |i, j| {
            (0..d2).map(|k| m[(i * d2 + k, j * d2 + k)]).sum()
        }),
        Keep::Second => ComplexMatrix::from_fn(d2, d2, |i, j| {
            (0..d1).map(|k| m[(k * d2 + i, k * d2 + j)]).sum()
        }),
    })
}

/// Spectral measure with eigenvalues closer than `degeneracy_tol` merged.
pub fn spectral(obs: &Observable, cfg: &NumericConfig) -> SpectralDecomposition {
    let (values, vectors) = hermitian_eigen(obs.matrix());
    let n = values.len();
    let mut eigenvalues = Vec::new();
    let mut projectors = Vec::new();
    let mut eigenvectors = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] < cfg.degeneracy_tol {
            end += 1;
        }
        let cluster: Vec<StateVector> = (start..end).map(|k| vectors.column(k).into_owned()).collect();
        let projector = cluster.iter().fold(zeros(n), |acc, v| acc + outer(v));
        let mean = values[start..end].iter().sum::<f64>() / (end - start) as f64;
        eigenvalues.push(mean);
        projectors.push(hermitize(&projector));
        eigenvectors.push(cluster);
        start = end;
    }
    SpectralDecomposition {
        eigenvalues,
        projectors,
        eigenvectors,
    }
}

/// Mean and standard deviation of an observable in a state.
pub fn mean_stddev(obs: &Observable, state: &DensityOperator) -> Result<(f64, f64)> {
    ensure_dim("mean/stddev", obs.dim(), state.dim())?;
    let a = obs.matrix();
    let mean = trace_product(a, state.matrix()).re;
    let second = trace_product(&(a * a), state.matrix()).re;
    Ok((mean, (second - mean * mean).max(0.0).sqrt()))
}

/// `Tr[(AB − BA) ρ]`
pub fn commutator_mean(a: &Observable, b: &Observable, state: &DensityOperator) -> Result<Complex64> {
    ensure_dim("commutator mean", a.dim(), b.dim())?;
    ensure_dim("commutator mean", a.dim(), state.dim())?;
    Ok(trace_product(&commutator(a.matrix(), b.matrix()), state.matrix()))
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Completes a set of orthonormal columns placed at fixed positions into a
/// unitary. Free positions are filled in ascending order by Gram-Schmidt over
/// the standard basis, also taken in ascending order.
pub fn complete_unitary(dim: usize, fixed: &[(usize, StateVector)]) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(dim, dim);
    let mut taken = vec![false; dim];
    let mut basis: Vec<StateVector> = Vec::with_capacity(dim);
    for (pos, col) in fixed {
        u.set_column(*pos, col);
        taken[*pos] = true;
        basis.push(col.clone());
    }
    let mut candidate = 0;
    for pos in 0..dim {
        if taken[pos] {
            continue;
        }
        loop {
            assert!(candidate < dim, "basis completion ran out of candidates");
            let mut v = StateVector::zeros(dim);
            v[candidate] = ONE;
            candidate += 1;
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dotc(&v);
                    v -= b * proj;
                }
            }
            let norm = v.norm();
            if norm > 1e-6 {
                v.unscale_mut(norm);
                u.set_column(pos, &v);
                basis.push(v);
                break;
            }
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tensor_identity_and_pauli() {
        assert_eq!(tensor(&identity(2), &identity(2)), identity(4));
        let zz = tensor(&spin::pauli_z(), &identity(2));
        let expected = Observable::diagonal(&[1.0, 1.0, -1.0, -1.0]);
        assert_eq!(max_abs_diff(&zz, expected.matrix()), 0.0);
    }

    #[test]
    fn tensor_square_of_xx_is_identity() {
        let xx = tensor(&spin::pauli_x(), &spin::pauli_x());
        // oracle: explicit entry-wise product
        let mut sq = zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    sq[(i, j)] += xx[(i, k)] * xx[(k, j)];
                }
            }
        }
        assert!(max_abs_diff(&sq, &identity(4)) < 1e-15);
    }

    #[test]
    fn partial_trace_product_and_bell() {
        let rho = DensityOperator::pure(&StateVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)])).unwrap();
        let sigma = DensityOperator::maximally_mixed(3);
        let joint = rho.tensor(&sigma);
        let first = partial_trace(joint.matrix(), (2, 3), Keep::First).unwrap();
        assert!(max_abs_diff(&first, rho.matrix()) < 1e-15);
        let second = partial_trace(joint.matrix(), (2, 3), Keep::Second).unwrap();
        assert!(max_abs_diff(&second, sigma.matrix()) < 1e-15);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = StateVector::from_vec(vec![re(s), ZERO, ZERO, re(s)]);
        let bell = outer(&phi);
        // oracle: |Φ⁺⟩⟨Φ⁺| has entries ½ at (0,0),(0,3),(3,0),(3,3); tracing the
        // second qubit keeps (0,0)+(1,1) -> ½ and (2,2)+(3,3) -> ½, off-diagonal
        // (0,2)+(1,3) -> 0.
        let reduced = partial_trace(&bell, (2, 2), Keep::First).unwrap();
        assert!(max_abs_diff(&reduced, &identity(2).scale(0.5)) < 1e-15);
        assert_abs_diff_eq!(partial_trace(&bell, (2, 2), Keep::Second).unwrap().trace().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn partial_trace_dimension_mismatch() {
        let err = partial_trace(&identity(5), (2, 2), Keep::First).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn spectral_of_paulis_and_identity() {
        let cfg = NumericConfig::default();
        let z = spectral(&Observable::new(spin::pauli_z()).unwrap(), &cfg);
        assert_eq!(z.len(), 2);
        assert_abs_diff_eq!(z.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(z.eigenvalues[1], 1.0, epsilon = 1e-14);
        assert!(max_abs_diff(&z.projectors[0], &DensityOperator::basis(2, 1).matrix().clone()) < 1e-14);
        assert!(max_abs_diff(&z.projectors[1], &DensityOperator::basis(2, 0).matrix().clone()) < 1e-14);

        // closed form: |∓⟩⟨∓| = ½[[1, ∓1], [∓1, 1]]
        let x = spectral(&Observable::new(spin::pauli_x()).unwrap(), &cfg);
        let minus = real_matrix(2, &[0.5, -0.5, -0.5, 0.5]);
        let plus = real_matrix(2, &[0.5, 0.5, 0.5, 0.5]);
        assert!(max_abs_diff(&x.projectors[0], &minus) < 1e-14);
        assert!(max_abs_diff(&x.projectors[1], &plus) < 1e-14);

        let id = spectral(&Observable::identity(2), &cfg);
        assert_eq!(id.len(), 1);
        assert_abs_diff_eq!(id.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert!(max_abs_diff(&id.projectors[0], &identity(2)) < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = real_matrix(2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(Observable::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn density_operator_contracts() {
        assert!(matches!(
            DensityOperator::new(identity(2)),
            Err(Error::TraceNotOne { .. })
        ));
        assert!(matches!(
            DensityOperator::new(Observable::diagonal(&[1.5, -0.5]).into_matrix()),
            Err(Error::NotPositive { .. })
        ));
        assert!(DensityOperator::new(identity(3).scale(1.0 / 3.0)).is_ok());
    }

    #[test]
    fn mean_stddev_examples() {
        let z = Observable::new(spin::pauli_z()).unwrap();
        let x = Observable::new(spin::pauli_x()).unwrap();
        let zero = DensityOperator::basis(2, 0);
        let (m, s) = mean_stddev(&z, &zero).unwrap();
        assert_abs_diff_eq!(m, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s, 0.0, epsilon = 1e-15);
        let (m, s) = mean_stddev(&x, &zero).unwrap();
        assert_abs_diff_eq!(m, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-15);

        // S_x on |S_y=+½⟩ = (|0⟩ + i|1⟩)/√2: ⟨S_x⟩ = 0, ⟨S_x²⟩ = ¼
        let sx = Observable::new(spin::spin_half().0).unwrap();
        let (m, s) = mean_stddev(&sx, &DensityOperator::pure(&spin::sy_plus()).unwrap()).unwrap();
        assert_abs_diff_eq!(m, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s, 0.5, epsilon = 1e-15);

        assert!(mean_stddev(&z, &DensityOperator::maximally_mixed(3)).is_err());
    }

    #[test]
    fn commutator_mean_examples() {
        let (sx, sy, _) = spin::spin_half();
        let sx = Observable::new(sx).unwrap();
        let sy = Observable::new(sy).unwrap();
        // [S_x, S_y] = i S_z, ⟨0|S_z|0⟩ = ½
        let v = commutator_mean(&sx, &sy, &DensityOperator::basis(2, 0)).unwrap();
        assert_abs_diff_eq!(v.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 0.5, epsilon = 1e-15);
        let a = Observable::diagonal(&[1.0, 2.0]);
        let b = Observable::diagonal(&[-3.0, 0.5]);
        let rho = DensityOperator::maximally_mixed(2);
        assert_eq!(commutator_mean(&a, &b, &rho).unwrap(), ZERO);
        assert_eq!(commutator_mean(&sx, &sx, &rho).unwrap(), ZERO);
    }

    #[test]
    fn hs_norm_examples() {
        assert_abs_diff_eq!(hs_norm(&identity(2)), 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(hs_norm(&zeros(3)), 0.0);
        assert_abs_diff_eq!(hs_norm(&spin::pauli_x()), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn complete_unitary_respects_fixed_columns() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let col = StateVector::from_vec(vec![re(s), ZERO, re(s), ZERO]);
        let u = complete_unitary(4, &[(2, col.clone())]);
        assert!(unitarity_defect(&u) < 1e-14);
        assert_eq!(u.column(2).into_owned(), col);
    }
}
