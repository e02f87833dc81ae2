//! Fidelity functionals and the closed forms built on them.
//!
//! The thermal register at `x = βΔE` has initialization fidelity
//! `F_I = (1 + e^{-x})^{-N}` with respect to the all-ground register, independent of
//! any noiseless circuit applied afterwards. Composite initialization + preparation
//! through a channel Φ obeys `F_P·F_I ≤ F ≤ min(F_P, F_I)`; the lower bound holds for
//! every Φ, the `F_I` side of the upper bound for unital Φ.

use serde::Serialize;

use crate::channels::{apply_unitary, DepolarizingChannel, QuantumChannel, UnitaryOp};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, psd_sqrt, Matrix, PSD_CLAMP_TOL};
use crate::scalar::{Cplx, Real};
use crate::states::{target_register, thermal_register, DenseCap, DensityMatrix};

/// Slack used when classifying bound checks.
pub const BOUND_TOL: f64 = 1e-9;

const PURITY_TOL: f64 = 1e-9;

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`, clamped to `[0, 1]`.
pub fn uhlmann<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T> {
    if rho.dim() != sigma.dim() {
        return Err(Error::dims(format!("fidelity of dim {} vs {}", rho.dim(), sigma.dim())));
    }
    let sqrt_rho = psd_sqrt(rho.matrix())?;
    let inner = sqrt_rho.matmul(sigma.matrix())?.matmul(&sqrt_rho)?.hermitian_part()?;
    let eig = hermitian_eig(&inner)?;
    let floor = -T::tol(PSD_CLAMP_TOL);
    let top = eig.values.last().copied().unwrap_or_else(T::zero);
    // Below this the eigenvalue is rounding noise; its square root would not be.
    let noise = T::epsilon() * T::from_usize(4 * inner.rows()).unwrap_or_else(T::one) * top.max(T::zero());
    let mut root_trace = T::zero();
    for &l in &eig.values {
        if l < floor {
            return Err(Error::NotPsd(l.to_f64().unwrap_or(f64::NAN)));
        }
        if l > noise {
            root_trace += l.sqrt();
        }
    }
    Ok(clamp_unit(root_trace * root_trace))
}

/// `Tr[ρσ]` for pure `σ`; agrees with [`uhlmann`] in that case.
pub fn overlap_fidelity<T: Real>(rho: &DensityMatrix<T>, sigma_pure: &DensityMatrix<T>) -> Result<T> {
    if rho.dim() != sigma_pure.dim() {
        return Err(Error::dims(format!("fidelity of dim {} vs {}", rho.dim(), sigma_pure.dim())));
    }
    let purity = sigma_pure.purity();
    if !((purity - T::one()).abs() <= T::tol(PURITY_TOL)) {
        return Err(Error::NotPure(purity.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(clamp_unit(trace_product(rho.matrix(), sigma_pure.matrix())))
}

/// `Re Tr[AB]` without forming the product.
pub(crate) fn trace_product<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> T {
    let n = a.rows();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

/// `<ψ|M|ψ>` (real part).
pub(crate) fn expectation<T: Real>(m: &Matrix<T>, psi: &[Cplx<T>]) -> Result<T> {
    let mpsi = m.mat_vec(psi)?;
    Ok(psi.iter().zip(&mpsi).map(|(a, b)| (a.conj() * b).re).sum())
}

fn clamp_unit<T: Real>(v: T) -> T {
    v.max(T::zero()).min(T::one())
}

fn check_x<T: Real>(x: T) -> Result<()> {
    if !x.is_finite() || x < T::zero() {
        return Err(Error::param(format!("x = βΔE must be finite and >= 0, got {x}")));
    }
    Ok(())
}

/// `ln F = -n · ln(1 + e^{-x})`, finite for every admissible input.
pub fn log_scaling_fidelity<T: Real>(x: T, n: u64) -> Result<T> {
    check_x(x)?;
    let n = T::from_u64(n).ok_or_else(|| Error::param("register size not representable"))?;
    if n == T::zero() {
        return Ok(T::zero());
    }
    Ok(-n * (-x).exp().ln_1p())
}

/// `(1 + e^{-x})^{-n}`, evaluated in log space. Underflows to zero only when the
/// true value is below the smallest positive representable number.
pub fn scaling_fidelity<T: Real>(x: T, n: u64) -> Result<T> {
    Ok(log_scaling_fidelity(x, n)?.exp())
}

/// Initialization fidelity `F_I` of an `n`-qubit thermal register.
pub fn initialization_fidelity<T: Real>(x: T, n: u64) -> Result<T> {
    scaling_fidelity(x, n)
}

/// Single-qubit error rate `η = 1 - (1 + e^{-x})^{-1}`.
pub fn error_rate_from_x<T: Real>(x: T) -> Result<T> {
    check_x(x)?;
    let b = (-x).exp();
    Ok(b / (T::one() + b))
}

/// Inverse of [`error_rate_from_x`]: `x = ln((1-η)/η)` for `η ∈ (0, 1/2]`.
pub fn x_from_error_rate<T: Real>(eta: T) -> Result<T> {
    if !(eta > T::zero() && eta <= T::lit(0.5)) {
        return Err(Error::param(format!("error rate must lie in (0, 0.5], got {eta}")));
    }
    Ok(((T::one() - eta) / eta).ln())
}

fn register_qubits(dim: usize) -> Result<usize> {
    if !dim.is_power_of_two() {
        return Err(Error::dims(format!("dimension {dim} is not a qubit register")));
    }
    Ok(dim.trailing_zeros() as usize)
}

fn check_dims<T: Real, C: QuantumChannel<T> + ?Sized>(c: &C, u: &UnitaryOp<T>) -> Result<usize> {
    if c.dim() != u.dim() {
        return Err(Error::dims(format!("channel of dim {} with unitary of dim {}", c.dim(), u.dim())));
    }
    register_qubits(c.dim())
}

/// Gate fidelity `F_P = <ψ|Φ(σ₀)|ψ>` with `|ψ> = U|0…0>`.
pub fn preparation_fidelity<T: Real, C: QuantumChannel<T> + ?Sized>(c: &C, u: &UnitaryOp<T>) -> Result<T> {
    let n = check_dims(c, u)?;
    let sigma0 = target_register(n, DenseCap::MAX)?;
    Ok(clamp_unit(expectation(c.apply(&sigma0)?.matrix(), &u.prepared_ket())?))
}

/// `<ψ|Φ(ρ₀)|ψ>` for an arbitrary initial state.
pub fn composite_fidelity<T: Real, C: QuantumChannel<T> + ?Sized>(
    c: &C,
    u: &UnitaryOp<T>,
    rho0: &DensityMatrix<T>,
) -> Result<T> {
    check_dims(c, u)?;
    if rho0.dim() != c.dim() {
        return Err(Error::dims(format!("state of dim {} for channel of dim {}", rho0.dim(), c.dim())));
    }
    Ok(clamp_unit(expectation(c.apply(rho0)?.matrix(), &u.prepared_ket())?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub f_composite: f64,
    pub f_i: f64,
    pub f_p: f64,
    /// `f_p · f_i`
    pub lower: f64,
    /// `min(f_p, f_i)`
    pub upper: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// `f_composite ≤ f_i` (the part of the upper bound that unital channels obey).
    pub upper_fi_ok: bool,
    pub channel_unital: bool,
}

impl BoundReport {
    /// Amount by which the lower bound is violated (zero if it holds).
    pub fn lower_violation(&self) -> f64 {
        (self.lower - self.f_composite).max(0.0)
    }

    pub fn upper_violation(&self) -> f64 {
        (self.f_composite - self.upper).max(0.0)
    }

    pub fn upper_fi_violation(&self) -> f64 {
        (self.f_composite - self.f_i).max(0.0)
    }
}

/// Evaluates both sides of `F_P·F_I ≤ F ≤ min(F_P, F_I)` for the thermal register
/// at `x`. Violations are reported, not raised.
pub fn bound_check<T: Real, C: QuantumChannel<T> + ?Sized>(
    c: &C,
    u: &UnitaryOp<T>,
    x: T,
    n: usize,
    cap: DenseCap,
) -> Result<BoundReport> {
    let dims_n = check_dims(c, u)?;
    if dims_n != n {
        return Err(Error::dims(format!("channel acts on {dims_n} qubits, register has {n}")));
    }
    let rho0 = thermal_register(x, n)?.to_dense(cap)?;
    let to64 = |v: T| v.to_f64().unwrap_or(f64::NAN);
    let f_composite = to64(composite_fidelity(c, u, &rho0)?);
    let f_i = to64(initialization_fidelity(x, n as u64)?);
    let f_p = to64(preparation_fidelity(c, u)?);
    let lower = f_p * f_i;
    let upper = f_p.min(f_i);
    Ok(BoundReport {
        f_composite,
        f_i,
        f_p,
        lower,
        upper,
        lower_ok: f_composite >= lower - BOUND_TOL,
        upper_ok: f_composite <= upper + BOUND_TOL,
        upper_fi_ok: f_composite <= f_i + BOUND_TOL,
        channel_unital: c.is_unital(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepolarizingCheck {
    pub f_i: f64,
    /// `(1-λ)F_I + λ/2^N`
    pub closed_form: f64,
    /// `Tr[ε(Uρ₀U†) · Uσ₀U†]` when a dense cross-check was run.
    pub dense: Option<f64>,
    pub holds: bool,
}

impl DepolarizingCheck {
    pub fn dense_deviation(&self) -> Option<f64> {
        self.dense.map(|d| (d - self.closed_form).abs())
    }
}

/// Largest register on which [`depolarizing_inequality_check`] runs the dense cross-check.
pub const DEPOLARIZING_DENSE_QUBITS: usize = 4;

/// Checks `(1-λ)F_I + λ/2^N ≤ F_I` for a gate `U` followed by global depolarizing
/// noise, and for `n ≤ 4` with `u` given compares the closed form with the dense
/// evaluation.
pub fn depolarizing_inequality_check<T: Real>(
    x: T,
    n: usize,
    lambda: T,
    u: Option<&UnitaryOp<T>>,
) -> Result<DepolarizingCheck> {
    let channel = DepolarizingChannel::new(lambda, n)?;
    let to64 = |v: T| v.to_f64().unwrap_or(f64::NAN);
    let f_i = initialization_fidelity(x, n as u64)?;
    let inv_dim = T::lit(0.5).powi(n as i32);
    let closed = (T::one() - lambda) * f_i + lambda * inv_dim;

    let dense = match u {
        Some(u) if n <= DEPOLARIZING_DENSE_QUBITS => {
            if u.dim() != 1 << n {
                return Err(Error::dims(format!("unitary of dim {} on {n} qubits", u.dim())));
            }
            let cap = DenseCap(DEPOLARIZING_DENSE_QUBITS);
            let rho1 = channel.apply(&apply_unitary(u, &thermal_register(x, n)?.to_dense(cap)?)?)?;
            let sigma1 = apply_unitary(u, &target_register(n, cap)?)?;
            Some(to64(trace_product(rho1.matrix(), sigma1.matrix())))
        }
        _ => None,
    };
    let closed = to64(closed);
    let f_i = to64(f_i);
    let tol = crate::suites::INEQUALITY_TOL;
    let holds = closed <= f_i + tol && dense.is_none_or(|d| d <= f_i + tol);
    Ok(DepolarizingCheck { f_i, closed_form: closed, dense, holds })
}
