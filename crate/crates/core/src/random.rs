//! Random matrix ensembles for property suites.

use num_complex::Complex;
use rand::Rng;

use crate::error::Result;
use crate::linalg::Matrix;
use crate::scalar::{Cplx, Real};
use crate::states::DensityMatrix;

fn complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Cplx<T> {
    let h = T::FRAC_1_SQRT_2();
    Complex::new(T::sample_standard_normal(rng) * h, T::sample_standard_normal(rng) * h)
}

/// `rows x cols` matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix<T> {
    let data = (0..rows * cols).map(|_| complex_normal(rng)).collect();
    Matrix::from_vec(rows, cols, data).expect("length matches by construction")
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of `R`'s
/// diagonal moved into `Q`.
///
/// Modified Gram–Schmidt (with one re-orthogonalization pass) yields `R` with a
/// positive real diagonal, so the phase correction is already folded in.
pub fn haar_unitary_matrix<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Matrix<T> {
    loop {
        let g = ginibre::<T, R>(dim, dim, rng);
        if let Some(q) = orthonormalize_columns(&g) {
            return q;
        }
    }
}

// None if the columns are numerically dependent (probability zero for Ginibre input).
fn orthonormalize_columns<T: Real>(g: &Matrix<T>) -> Option<Matrix<T>> {
    let (rows, cols) = (g.rows(), g.cols());
    let mut q: Vec<Vec<Cplx<T>>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut v = g.column(j);
        for _ in 0..2 {
            for qk in &q {
                let proj: Cplx<T> = qk.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(qk) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if !(norm > T::epsilon() * T::lit(1e3)) {
            return None;
        }
        v.iter_mut().for_each(|z| *z /= norm);
        q.push(v);
    }
    let mut m = Matrix::zeros(rows, cols);
    for (j, col) in q.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            m[(i, j)] = *z;
        }
    }
    Some(m)
}

/// Haar-random pure state on `n` qubits.
pub fn random_ket<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Cplx<T>> {
    let mut v: Vec<Cplx<T>> = (0..1usize << n).map(|_| complex_normal(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

/// Random density matrix `G G^dagger / Tr` with `G` a `2^n x rank` Ginibre matrix.
pub fn random_density_matrix<T: Real, R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix<T>> {
    let dim = 1usize << n;
    let g = ginibre::<T, R>(dim, rank.max(1), rng);
    let w = g.matmul(&g.adjoint())?;
    let tr = w.trace()?.re;
    let mut m = w.scale_real(T::one() / tr);
    for i in 0..dim {
        m[(i, i)].im = T::zero();
    }
    DensityMatrix::from_hermitian_product(m, n)
}

/// Random diagonal density matrix with Dirichlet(1,…,1) populations.
pub fn random_diagonal_state<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityMatrix<T> {
    let dim = 1usize << n;
    let w: Vec<T> = (0..dim).map(|_| -T::lit(rng.random::<f64>()).max(T::min_positive_value()).ln()).collect();
    let total: T = w.iter().copied().sum();
    let diag: Vec<T> = w.iter().map(|&v| v / total).collect();
    DensityMatrix::new(Matrix::from_real_diag(&diag)).expect("Dirichlet sample is a valid state")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut r = rng::seeded(1);
        for dim in [1, 2, 5, 16, 64] {
            let u = haar_unitary_matrix::<f64, _>(dim, &mut r);
            assert!(u.unitarity_deviation().unwrap() < 1e-12);
        }
    }

    #[test]
    fn random_states_are_valid() {
        let mut r = rng::seeded(2);
        for n in 1..=4 {
            for rank in [1, 2, 1 << n] {
                let rho = random_density_matrix::<f64, _>(n, rank, &mut r).unwrap();
                assert!(rho.validate().is_valid());
            }
            assert!(random_diagonal_state::<f64, _>(n, &mut r).validate().is_valid());
            let k = random_ket::<f64, _>(n, &mut r);
            assert!((k.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }
}
