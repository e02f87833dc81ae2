//! Unitary and Kraus maps on register density matrices.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::random::haar_unitary_matrix;
use crate::rng;
use crate::scalar::{cr, Cplx, Real};
use crate::states::{ground_ket, DensityMatrix};

/// Completeness / unitality tolerance on the max-entry norm.
pub const KRAUS_TOL: f64 = 1e-9;

/// Above this register size the depolarizing channel is applied as an affine map
/// only; its 4^N Pauli Kraus operators are not materialized.
pub const MAX_MATERIALIZED_DEPOLARIZING_QUBITS: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOp<T: Real> {
    matrix: Matrix<T>,
}

impl<T: Real> UnitaryOp<T> {
    /// Checks `U^dagger U = I` to 1e-10.
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        let dev = matrix.unitarity_deviation()?;
        if !(dev <= T::tol(1e-10)) {
            return Err(Error::NotUnitary(dev.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: Matrix::identity(dim) }
    }

    /// `gate^{⊗n}`
    pub fn on_every_qubit(gate: &Matrix<T>, n: usize) -> Result<Self> {
        Self::new(gate.kron_power(n)?)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `U|0…0>`
    pub fn prepared_ket(&self) -> Vec<Cplx<T>> {
        self.matrix.column(0)
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint() }
    }

    /// `self · other`
    pub fn compose(&self, other: &Self) -> Result<Self> {
        Ok(Self { matrix: self.matrix.matmul(&other.matrix)? })
    }
}

/// `U ρ U^dagger`
pub fn apply_unitary<T: Real>(u: &UnitaryOp<T>, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
    if u.dim() != rho.dim() {
        return Err(Error::dims(format!("unitary of dim {} on state of dim {}", u.dim(), rho.dim())));
    }
    let out = u.matrix.matmul(rho.matrix())?.matmul(&u.matrix.adjoint())?;
    DensityMatrix::from_hermitian_product(out, rho.n_qubits())
}

/// Completely positive trace-preserving map on a register of fixed dimension.
pub trait QuantumChannel<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn label(&self) -> &str;

    fn apply(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>>;

    /// Whether the map fixes the maximally mixed state.
    fn is_unital(&self) -> bool;
}

/// Channel given by Kraus operators `{K_i}` with `Σ K_i^dagger K_i = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel<T: Real> {
    ops: Vec<Matrix<T>>,
    label: String,
    dim: usize,
}

impl<T: Real> KrausChannel<T> {
    pub fn new(ops: Vec<Matrix<T>>, label: impl Into<String>) -> Result<Self> {
        let dim = ops.first().map(|k| k.rows()).ok_or_else(|| Error::param("empty Kraus set"))?;
        if ops.iter().any(|k| k.rows() != dim || k.cols() != dim) {
            return Err(Error::dims("Kraus operators must share one square dimension"));
        }
        let channel = Self { ops, label: label.into(), dim };
        let dev = channel.completeness_deviation();
        if !(dev <= T::tol(KRAUS_TOL)) {
            return Err(Error::IncompleteKraus(dev.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(channel)
    }

    pub fn from_unitary(u: &UnitaryOp<T>) -> Self {
        Self { dim: u.dim(), ops: vec![u.matrix.clone()], label: "unitary".into() }
    }

    pub fn ops(&self) -> &[Matrix<T>] {
        &self.ops
    }

    /// Max-entry norm of `Σ K^dagger K - I`.
    pub fn completeness_deviation(&self) -> T {
        self.gram_deviation(|k| k.adjoint().matmul(k))
    }

    /// Max-entry norm of `Σ K K^dagger - I`.
    pub fn unitality_deviation(&self) -> T {
        self.gram_deviation(|k| k.matmul(&k.adjoint()))
    }

    fn gram_deviation(&self, term: impl Fn(&Matrix<T>) -> Result<Matrix<T>>) -> T {
        let mut acc = Matrix::zeros(self.dim, self.dim);
        for k in &self.ops {
            acc = match term(k).and_then(|t| acc.add(&t)) {
                Ok(m) => m,
                Err(_) => return T::infinity(),
            };
        }
        acc.max_abs_diff(&Matrix::identity(self.dim)).unwrap_or_else(T::infinity)
    }

    /// `second ∘ first`: Kraus operators `{B_j A_i}`.
    pub fn then(&self, second: &Self) -> Result<Self> {
        if self.dim != second.dim {
            return Err(Error::dims("composing channels of different dimension"));
        }
        let mut ops = Vec::with_capacity(self.ops.len() * second.ops.len());
        for b in &second.ops {
            for a in &self.ops {
                ops.push(b.matmul(a)?);
            }
        }
        Ok(Self { ops, label: format!("{} then {}", self.label, second.label), dim: self.dim })
    }
}

impl<T: Real> QuantumChannel<T> for KrausChannel<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn apply(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        if rho.dim() != self.dim {
            return Err(Error::dims(format!("channel of dim {} on state of dim {}", self.dim, rho.dim())));
        }
        let mut acc = Matrix::zeros(self.dim, self.dim);
        for k in &self.ops {
            acc = acc.add(&k.matmul(rho.matrix())?.matmul(&k.adjoint())?)?;
        }
        DensityMatrix::from_hermitian_product(acc, rho.n_qubits())
    }

    fn is_unital(&self) -> bool {
        self.unitality_deviation() <= T::tol(KRAUS_TOL)
    }
}

/// `ρ ↦ (1-λ)ρ + λ Tr[ρ] I / 2^N`, for `0 ≤ λ ≤ 4^N / (4^N - 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DepolarizingChannel<T: Real> {
    lambda: T,
    n_qubits: usize,
    label: String,
}

impl<T: Real> DepolarizingChannel<T> {
    pub fn new(lambda: T, n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 62 {
            return Err(Error::param(format!("depolarizing channel on {n_qubits} qubits")));
        }
        let max = Self::max_lambda(n_qubits);
        if !lambda.is_finite() || lambda < T::zero() || lambda > max {
            return Err(Error::param(format!("lambda = {lambda} outside [0, {max}]")));
        }
        Ok(Self { lambda, n_qubits, label: format!("depolarizing(lambda={lambda}, n={n_qubits})") })
    }

    /// `4^N / (4^N - 1)`
    pub fn max_lambda(n_qubits: usize) -> T {
        let four_n = T::lit(4.0).powi(n_qubits as i32);
        four_n / (four_n - T::one())
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Weights of the Pauli mixture: identity `1 - λ(4^N-1)/4^N`, every other
    /// Pauli string `λ/4^N`. Both are non-negative across the whole admissible λ range.
    pub fn pauli_weights(&self) -> (T, T) {
        let four_n = T::lit(4.0).powi(self.n_qubits as i32);
        let other = self.lambda / four_n;
        ((T::one() - self.lambda * (four_n - T::one()) / four_n).max(T::zero()), other)
    }

    /// Pauli-mixture Kraus form; only for registers of at most
    /// [`MAX_MATERIALIZED_DEPOLARIZING_QUBITS`] qubits.
    pub fn to_kraus(&self) -> Result<KrausChannel<T>> {
        if self.n_qubits > MAX_MATERIALIZED_DEPOLARIZING_QUBITS {
            return Err(Error::DenseCap { n: self.n_qubits, cap: MAX_MATERIALIZED_DEPOLARIZING_QUBITS });
        }
        let (w_id, w_other) = self.pauli_weights();
        let paulis = [Matrix::identity(2), Matrix::pauli_x(), Matrix::pauli_y(), Matrix::pauli_z()];
        let mut strings = vec![Matrix::identity(1)];
        for _ in 0..self.n_qubits {
            strings = strings.iter().flat_map(|s| paulis.iter().map(move |p| s.kron(p))).collect::<Result<_>>()?;
        }
        let ops = strings
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.scale_real(if i == 0 { w_id } else { w_other }.sqrt()))
            .collect();
        KrausChannel::new(ops, self.label.clone())
    }
}

impl<T: Real> QuantumChannel<T> for DepolarizingChannel<T> {
    fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn apply(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        let dim = self.dim();
        if rho.dim() != dim {
            return Err(Error::dims(format!("channel of dim {dim} on state of dim {}", rho.dim())));
        }
        let tr = rho.matrix().trace()?;
        let shift = cr(self.lambda / T::from_usize(dim).unwrap_or_else(T::nan)) * tr;
        let mut m = rho.matrix().scale_real(T::one() - self.lambda);
        for i in 0..dim {
            m[(i, i)] += shift;
        }
        if self.lambda > T::one() {
            DensityMatrix::new(m)
        } else {
            DensityMatrix::from_hermitian_product(m, rho.n_qubits())
        }
    }

    fn is_unital(&self) -> bool {
        true
    }
}

pub fn apply_channel<T: Real, C: QuantumChannel<T> + ?Sized>(
    c: &C,
    rho: &DensityMatrix<T>,
) -> Result<DensityMatrix<T>> {
    c.apply(rho)
}

pub fn is_unital<T: Real, C: QuantumChannel<T> + ?Sized>(c: &C) -> bool {
    c.is_unital()
}

pub fn depolarizing<T: Real>(lambda: T, n: usize) -> Result<DepolarizingChannel<T>> {
    DepolarizingChannel::new(lambda, n)
}

/// `ρ ↦ Σ p_i U_i ρ U_i^dagger`
pub fn mixed_unitary<T: Real>(probs: &[T], unitaries: &[UnitaryOp<T>]) -> Result<KrausChannel<T>> {
    if probs.len() != unitaries.len() || probs.is_empty() {
        return Err(Error::param(format!("{} probabilities for {} unitaries", probs.len(), unitaries.len())));
    }
    if probs.iter().any(|&p| !(p >= T::zero())) {
        return Err(Error::param("negative probability in mixture"));
    }
    let total: T = probs.iter().copied().sum();
    if !((total - T::one()).abs() <= T::tol(1e-12)) {
        return Err(Error::param(format!("mixture probabilities sum to {total}")));
    }
    let ops = probs.iter().zip(unitaries).map(|(&p, u)| u.matrix.scale_real(p.sqrt())).collect();
    KrausChannel::new(ops, "mixed-unitary")
}

/// Maps every state to `|ψ><ψ|`; Kraus operators `{|ψ><k|}`.
pub fn replacement_channel<T: Real>(psi: &[Cplx<T>]) -> Result<KrausChannel<T>> {
    let norm: T = psi.iter().map(|z| z.norm_sqr()).sum();
    if !((norm - T::one()).abs() <= T::tol(1e-10)) {
        return Err(Error::param(format!("replacement target has squared norm {norm}")));
    }
    let ops = (0..psi.len())
        .map(|k| {
            let mut e = vec![cr(T::zero()); psi.len()];
            e[k] = cr(T::one());
            Matrix::outer(psi, &e)
        })
        .collect();
    KrausChannel::new(ops, "replacement")
}

pub fn haar_random_unitary<T: Real>(dim: usize, seed: u64) -> UnitaryOp<T> {
    haar_unitary_with(dim, &mut rng::seeded(seed))
}

pub fn haar_unitary_with<T: Real, R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryOp<T> {
    UnitaryOp { matrix: haar_unitary_matrix(dim.max(1), rng) }
}

/// Channel whose Kraus operators are the `rank` stacked `dim x dim` blocks of a
/// Haar-random isometry `C^dim -> C^(dim·rank)`.
pub fn random_kraus_channel<T: Real>(dim: usize, rank: usize, seed: u64) -> Result<KrausChannel<T>> {
    random_kraus_with(dim, rank, &mut rng::seeded(seed))
}

pub fn random_kraus_with<T: Real, R: rand::Rng + ?Sized>(
    dim: usize,
    rank: usize,
    rng: &mut R,
) -> Result<KrausChannel<T>> {
    if rank == 0 || dim == 0 {
        return Err(Error::param("random Kraus channel needs dim >= 1 and rank >= 1"));
    }
    let w = haar_unitary_matrix::<T, R>(dim * rank, rng);
    let ops = (0..rank)
        .map(|b| {
            let mut k = Matrix::zeros(dim, dim);
            for r in 0..dim {
                for c in 0..dim {
                    k[(r, c)] = w[(b * dim + r, c)];
                }
            }
            k
        })
        .collect();
    KrausChannel::new(ops, format!("random-kraus(rank={rank})"))
}

/// `U|0…0>` for an `n`-qubit unitary.
pub fn prepared_state<T: Real>(u: &UnitaryOp<T>) -> Result<Vec<Cplx<T>>> {
    let n = u.dim().trailing_zeros() as usize;
    u.matrix.mat_vec(&ground_ket(n))
}
