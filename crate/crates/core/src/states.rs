//! Register states: the ideal all-ground register, thermal product registers and
//! thermal registers carrying residual single-qubit coherence.
//!
//! Basis convention: the ground state of every qubit is basis index 0, and the
//! all-ground register state is index 0 of the 2^N computational basis. Qubit 0 is
//! the most significant bit of the index, matching `a ⊗ b ⊗ ...` ordering.
//!
//! A thermal qubit is described by the single dimensionless product `x = βΔE`.

use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, Matrix, PSD_CLAMP_TOL};
use crate::scalar::{cr, Cplx, Real};

/// Environment variable overriding the dense register cap.
pub const DENSE_CAP_ENV: &str = "THERMOSCALE_DENSE_CAP";

/// Largest register (in qubits) materialized as a dense 2^N x 2^N matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DenseCap(pub usize);

impl DenseCap {
    pub const DEFAULT: DenseCap = DenseCap(7);
    /// Hard ceiling imposed by [`crate::linalg::MAX_KRON_DIM`].
    pub const MAX: DenseCap = DenseCap(14);

    pub fn new(qubits: usize) -> Result<Self> {
        if qubits == 0 || qubits > Self::MAX.0 {
            return Err(Error::param(format!("dense cap must be in 1..={}, got {qubits}", Self::MAX.0)));
        }
        Ok(DenseCap(qubits))
    }

    /// Reads [`DENSE_CAP_ENV`], falling back to the default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(DENSE_CAP_ENV) {
            Ok(v) => {
                let n = v
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::param(format!("{DENSE_CAP_ENV}={v:?} is not a count")))?;
                Self::new(n)
            }
            Err(_) => Ok(Self::DEFAULT),
        }
    }

    pub fn check(self, n: usize) -> Result<()> {
        if n > self.0 {
            Err(Error::DenseCap { n, cap: self.0 })
        } else {
            Ok(())
        }
    }
}

impl Default for DenseCap {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Two-level Gibbs state at `x = βΔE`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalQubit<T: Real> {
    pub x: T,
    pub p_ground: T,
    pub p_excited: T,
}

impl<T: Real> ThermalQubit<T> {
    pub fn new(x: T) -> Result<Self> {
        if !x.is_finite() || x < T::zero() {
            return Err(Error::param(format!("x = βΔE must be finite and >= 0, got {x}")));
        }
        let boltzmann = (-x).exp();
        let p_excited = boltzmann / (T::one() + boltzmann);
        Ok(Self { x, p_ground: T::one() - p_excited, p_excited })
    }

    /// 2x2 dense form, ground first.
    pub fn to_matrix(&self) -> Matrix<T> {
        Matrix::from_real_diag(&[self.p_ground, self.p_excited])
    }
}

pub fn thermal_qubit<T: Real>(x: T) -> Result<ThermalQubit<T>> {
    ThermalQubit::new(x)
}

/// Product of per-qubit diagonal states, stored compactly for any N.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductDiagonalState<T: Real> {
    qubits: Vec<ThermalQubit<T>>,
}

impl<T: Real> ProductDiagonalState<T> {
    pub fn new(qubits: Vec<ThermalQubit<T>>) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::param("register needs at least one qubit"));
        }
        Ok(Self { qubits })
    }

    pub fn qubits(&self) -> &[ThermalQubit<T>] {
        &self.qubits
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    /// Population of the all-ground basis state, `Π p_ground`.
    pub fn ground_population(&self) -> T {
        self.qubits.iter().map(|q| q.p_ground).fold(T::one(), |a, b| a * b)
    }

    /// Diagonal of the dense form, in computational-basis order.
    pub fn diagonal(&self, cap: DenseCap) -> Result<Vec<T>> {
        cap.check(self.n_qubits())?;
        let mut diag = vec![T::one()];
        for q in &self.qubits {
            diag = diag.iter().flat_map(|&d| [d * q.p_ground, d * q.p_excited]).collect();
        }
        Ok(diag)
    }

    pub fn to_dense(&self, cap: DenseCap) -> Result<DensityMatrix<T>> {
        let diag = self.diagonal(cap)?;
        Ok(DensityMatrix::from_parts(Matrix::from_real_diag(&diag), self.n_qubits()))
    }
}

/// `n` identical thermal qubits at a common `x`.
pub fn thermal_register<T: Real>(x: T, n: usize) -> Result<ProductDiagonalState<T>> {
    if n == 0 {
        return Err(Error::param("register needs at least one qubit"));
    }
    ProductDiagonalState::new(vec![ThermalQubit::new(x)?; n])
}

/// Thermal register with one `x` per qubit.
pub fn thermal_register_per_qubit<T: Real>(xs: &[T]) -> Result<ProductDiagonalState<T>> {
    ProductDiagonalState::new(xs.iter().map(|&x| ThermalQubit::new(x)).collect::<Result<_>>()?)
}

pub fn to_dense<T: Real>(s: &ProductDiagonalState<T>, cap: DenseCap) -> Result<DensityMatrix<T>> {
    s.to_dense(cap)
}

/// The ideal register `|0…0><0…0|`.
pub fn target_register<T: Real>(n: usize, cap: DenseCap) -> Result<DensityMatrix<T>> {
    if n == 0 {
        return Err(Error::param("register needs at least one qubit"));
    }
    cap.check(n)?;
    let dim = 1usize << n;
    let mut m = Matrix::zeros(dim, dim);
    m[(0, 0)] = Complex::one();
    Ok(DensityMatrix::from_parts(m, n))
}

/// Thermal qubit with an off-diagonal coherence `eps` on the unnormalized block
/// `[[1, eps*], [eps, e^{-x}]]` (ground first), normalized by `1 + e^{-x}`.
///
/// Requires `|eps|^2 <= e^{-x}` so the block stays positive semidefinite.
pub fn coherent_qubit<T: Real>(x: T, eps: Cplx<T>) -> Result<DensityMatrix<T>> {
    let q = ThermalQubit::new(x)?;
    let boltzmann = (-x).exp();
    if eps.norm_sqr() > boltzmann {
        return Err(Error::InvalidState(format!(
            "|eps|^2 = {} exceeds e^(-x) = {}; block is not positive semidefinite",
            eps.norm_sqr(),
            boltzmann
        )));
    }
    let z = T::one() + boltzmann;
    let mut m = Matrix::zeros(2, 2);
    m[(0, 0)] = cr(q.p_ground);
    m[(1, 1)] = cr(q.p_excited);
    m[(0, 1)] = eps.conj() / z;
    m[(1, 0)] = eps / z;
    Ok(DensityMatrix::from_parts(m, 1))
}

/// Tensor product of coherent qubits sharing `x`, one `eps` per qubit.
pub fn coherent_register<T: Real>(x: T, eps: &[Cplx<T>], cap: DenseCap) -> Result<DensityMatrix<T>> {
    if eps.is_empty() {
        return Err(Error::param("register needs at least one qubit"));
    }
    cap.check(eps.len())?;
    let mut m = Matrix::identity(1);
    for &e in eps {
        m = m.kron(coherent_qubit(x, e)?.matrix())?;
    }
    Ok(DensityMatrix::from_parts(m, eps.len()))
}

/// Which density-matrix invariant a matrix breaks.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Shape(String),
    Hermitian { deviation: f64 },
    Trace { trace: f64 },
    Psd { min_eigenvalue: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape(s) => write!(f, "shape: {s}"),
            Violation::Hermitian { deviation } => write!(f, "hermitian: max |a - a^dagger| = {deviation:e}"),
            Violation::Trace { trace } => write!(f, "trace: {trace}"),
            Violation::Psd { min_eigenvalue } => write!(f, "psd: min eigenvalue {min_eigenvalue:e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub hermitian_deviation: f64,
    pub trace: Complex<f64>,
    /// `None` when the Hermitian check already failed.
    pub min_eigenvalue: Option<f64>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
            Err(Error::InvalidState(msgs.join("; ")))
        }
    }
}

/// Checks Hermiticity, unit trace and positivity (each to 1e-10).
pub fn validate<T: Real>(m: &Matrix<T>) -> ValidationReport {
    let to64 = |v: T| v.to_f64().unwrap_or(f64::NAN);
    let mut violations = Vec::new();
    if !m.is_square() || !m.rows().is_power_of_two() {
        violations.push(Violation::Shape(format!("{}x{} is not a 2^N x 2^N register operator", m.rows(), m.cols())));
        return ValidationReport {
            hermitian_deviation: f64::NAN,
            trace: Complex::new(f64::NAN, f64::NAN),
            min_eigenvalue: None,
            violations,
        };
    }
    let tol = T::tol(1e-10);
    let dev = m.hermitian_deviation().unwrap_or_else(|_| T::infinity());
    let tr = m.trace().unwrap_or_else(|_| Complex::new(T::nan(), T::nan()));
    if !(dev <= tol) {
        violations.push(Violation::Hermitian { deviation: to64(dev) });
    }
    if !((tr.re - T::one()).abs() <= tol && tr.im.abs() <= tol) {
        violations.push(Violation::Trace { trace: to64(tr.re) });
    }
    let mut min_eigenvalue = None;
    if dev <= tol {
        match hermitian_eig(m) {
            Ok(e) => {
                let lo = e.values.first().copied().unwrap_or_else(T::zero);
                min_eigenvalue = Some(to64(lo));
                if lo < -T::tol(PSD_CLAMP_TOL) {
                    violations.push(Violation::Psd { min_eigenvalue: to64(lo) });
                }
            }
            Err(e) => violations.push(Violation::Shape(e.to_string())),
        }
    }
    ValidationReport {
        hermitian_deviation: to64(dev),
        trace: Complex::new(to64(tr.re), to64(tr.im)),
        min_eigenvalue,
        violations,
    }
}

/// Hermitian, trace-one, positive-semidefinite operator on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    matrix: Matrix<T>,
    n_qubits: usize,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates and wraps `matrix`.
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        validate(&matrix).into_result()?;
        let n_qubits = matrix.rows().trailing_zeros() as usize;
        Ok(Self { matrix, n_qubits })
    }

    /// Wraps a matrix that is valid by construction.
    pub(crate) fn from_parts(matrix: Matrix<T>, n_qubits: usize) -> Self {
        debug_assert_eq!(matrix.rows(), 1 << n_qubits);
        Self { matrix, n_qubits }
    }

    /// `|ψ><ψ|`; `psi` must be normalized to 1e-10.
    pub fn pure(psi: &[Cplx<T>]) -> Result<Self> {
        let norm: T = psi.iter().map(|z| z.norm_sqr()).sum();
        if !psi.len().is_power_of_two() {
            return Err(Error::dims(format!("state vector of length {}", psi.len())));
        }
        if !((norm - T::one()).abs() <= T::tol(1e-10)) {
            return Err(Error::param(format!("state vector has squared norm {norm}")));
        }
        let n = psi.len().trailing_zeros() as usize;
        Ok(Self::from_parts(Matrix::outer(psi, psi), n))
    }

    /// Maximally mixed state `I / 2^n`.
    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1usize << n;
        let p = T::one() / T::from_usize(dim).unwrap_or_else(T::nan);
        Self::from_parts(Matrix::from_real_diag(&vec![p; dim]), n)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.matrix
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `Tr[ρ^2]`
    pub fn purity(&self) -> T {
        // Tr[ρ²] = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.entries().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn validate(&self) -> ValidationReport {
        validate(&self.matrix)
    }

    /// `ρ ⊗ other`
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self::from_parts(self.matrix.kron(&other.matrix)?, self.n_qubits + other.n_qubits))
    }

    /// Projection onto the Hermitian part; used after products that are Hermitian
    /// in exact arithmetic.
    pub(crate) fn from_hermitian_product(m: Matrix<T>, n_qubits: usize) -> Result<Self> {
        Ok(Self::from_parts(m.hermitian_part()?, n_qubits))
    }
}

pub fn purity<T: Real>(rho: &DensityMatrix<T>) -> T {
    rho.purity()
}

/// All-ground computational basis vector of `n` qubits.
pub fn ground_ket<T: Real>(n: usize) -> Vec<Cplx<T>> {
    let mut v = vec![Complex::zero(); 1 << n];
    v[0] = Complex::one();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const CAP: DenseCap = DenseCap::DEFAULT;

    #[test]
    fn thermal_qubit_populations() {
        let q = thermal_qubit(0.0).unwrap();
        assert_eq!((q.p_ground, q.p_excited), (0.5, 0.5));

        let q = thermal_qubit(99f64.ln()).unwrap();
        assert_abs_diff_eq!(q.p_excited, 0.01, epsilon = 1e-15);

        let q = thermal_qubit(4.35).unwrap();
        assert_abs_diff_eq!(q.p_ground, 0.98726, epsilon = 5e-6);
        assert_eq!(q.p_ground + q.p_excited, 1.0);

        assert!(thermal_qubit(-0.1).is_err());
        assert!(thermal_qubit(f64::NAN).is_err());
        assert!(thermal_qubit(f64::INFINITY).is_err());
    }

    #[test]
    fn large_x_approaches_pure_ground() {
        let q = thermal_qubit(800.0).unwrap();
        assert_eq!(q.p_ground, 1.0);
        let dense = thermal_register(800.0, 3).unwrap().to_dense(CAP).unwrap();
        assert_eq!(dense, target_register(3, CAP).unwrap());
    }

    #[test]
    fn thermal_register_shapes() {
        assert!(thermal_register(1.0, 0).is_err());
        let reg = thermal_register(4.35f64, 7).unwrap();
        assert!(reg.qubits().iter().all(|q| (q.p_ground - 0.98726).abs() < 5e-6));

        let mixed = thermal_register(0.0, 2).unwrap().to_dense(CAP).unwrap();
        assert_eq!(mixed.matrix(), &Matrix::from_real_diag(&[0.25; 4]));
        assert_abs_diff_eq!(mixed.purity(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn dense_form_is_diagonal_with_thermal_ground_population() {
        for n in 1..=7 {
            for x in [0.0f64, 0.5, 2.48, 4.35, 10.0] {
                let dense = thermal_register(x, n).unwrap().to_dense(CAP).unwrap();
                assert_eq!(dense.matrix().max_off_diagonal(), 0.0);
                assert!((dense.matrix().trace().unwrap().re - 1.0).abs() < 1e-12);
                let want = (1.0 + (-x).exp()).powi(-(n as i32));
                assert!((dense.matrix()[(0, 0)].re - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dense_cap_enforced() {
        assert!(matches!(thermal_register(1.0, 8).unwrap().to_dense(CAP), Err(Error::DenseCap { n: 8, cap: 7 })));
        assert!(target_register::<f64>(8, CAP).is_err());
        assert!(target_register::<f64>(8, DenseCap(8)).is_ok());
        assert!(DenseCap::new(15).is_err());
    }

    #[test]
    fn target_register_is_ground_projector() {
        let t = target_register::<f64>(1, CAP).unwrap();
        assert_eq!(t.matrix(), &Matrix::from_real_diag(&[1.0, 0.0]));
        for n in 1..=4 {
            let t = target_register::<f64>(n, CAP).unwrap();
            assert_eq!(t.matrix()[(0, 0)], Complex::one());
            assert_eq!(t.matrix().max_abs_diff(&Matrix::outer(&ground_ket(n), &ground_ket(n))), Some(0.0));
            assert_eq!(t.purity(), 1.0);
            assert!(t.validate().is_valid());
        }
    }

    #[test]
    fn coherent_qubit_cases() {
        let plain = coherent_qubit(4.35, Complex::zero()).unwrap();
        assert_eq!(plain.matrix(), &thermal_qubit(4.35).unwrap().to_matrix());

        let c = coherent_qubit(4.35, Complex::new(0.1, 0.0)).unwrap();
        assert!(c.validate().is_valid());
        let z = 1.0 + (-4.35f64).exp();
        assert_abs_diff_eq!(c.matrix()[(0, 1)].re, 0.1 / z, epsilon = 1e-15);
        assert_abs_diff_eq!(c.matrix()[(0, 1)].norm(), 0.09873, epsilon = 5e-6);

        assert!(matches!(coherent_qubit(4.35, Complex::new(0.2, 0.0)), Err(Error::InvalidState(_))));
    }

    #[test]
    fn validate_flags_trace() {
        let m = Matrix::<f64>::from_real_diag(&[0.5, 0.4]);
        let r = validate(&m);
        assert!(!r.is_valid());
        assert!(r.violations.iter().any(|v| v.to_string().starts_with("trace")));
        assert!(DensityMatrix::new(m).is_err());

        let neg = Matrix::<f64>::from_real_diag(&[1.5, -0.5]);
        assert!(matches!(validate(&neg).violations[..], [Violation::Psd { .. }]));

        let nh = Matrix::<f64>::from_real_rows(&[&[0.5, 0.3], &[0.0, 0.5]]);
        assert!(matches!(validate(&nh).violations[..], [Violation::Hermitian { .. }]));

        assert!(matches!(validate(&Matrix::<f64>::identity(3)).violations[..], [Violation::Shape(_)]));
    }

    #[test]
    fn single_precision_register() {
        let reg = thermal_register(4.35f32, 3).unwrap().to_dense(CAP).unwrap();
        assert!((reg.matrix()[(0, 0)].re - 0.98726f32.powi(3)).abs() < 1e-5);
    }
}
