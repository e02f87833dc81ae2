//! Dense complex matrices and the handful of kernels the rest of the crate needs:
//! products, Kronecker products, a Hermitian eigensolver and PSD square roots.
//!
//! Storage is row-major. All operations allocate a fresh result; values are never
//! mutated after construction from outside this module.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{cr, Cplx, Real};

/// Largest side length `kron` will produce (2^14).
pub const MAX_KRON_DIM: usize = 1 << 14;

/// Hermiticity tolerance on the max-entry norm of `a - a^dagger`.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues in `[-PSD_CLAMP_TOL, 0)` are numerical noise and clamp to zero.
pub const PSD_CLAMP_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Cplx<T>>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::zero(); rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex::one();
        }
        m
    }

    /// Builds a matrix from row-major entries; the length must be exactly `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Cplx<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    /// Convenience constructor from nested real rows; panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let data = rows
            .iter()
            .flat_map(|row| {
                assert_eq!(row.len(), c, "ragged rows");
                row.iter().map(|&v| cr(T::lit(v)))
            })
            .collect();
        Self { rows: r, cols: c, data }
    }

    pub fn from_diag(diag: &[Cplx<T>]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = cr(d);
        }
        m
    }

    /// `|v><w|`
    pub fn outer(v: &[Cplx<T>], w: &[Cplx<T>]) -> Self {
        let mut m = Self::zeros(v.len(), w.len());
        for (i, vi) in v.iter().enumerate() {
            for (j, wj) in w.iter().enumerate() {
                m[(i, j)] = vi * wj.conj();
            }
        }
        m
    }

    /// Pauli and Hadamard helpers used throughout tests and constructors.
    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn pauli_y() -> Self {
        let i = Complex::i();
        Self { rows: 2, cols: 2, data: vec![Complex::zero(), -i, i, Complex::zero()] }
    }

    pub fn pauli_z() -> Self {
        Self::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_real_rows(&[&[h, h], &[h, -h]])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Cplx<T>] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Cplx<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<Cplx<T>> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare { rows: self.rows, cols: self.cols })
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dims(format!("matmul {}x{} by {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, v: &[Cplx<T>]) -> Result<Vec<Cplx<T>>> {
        if self.cols != v.len() {
            return Err(Error::dims(format!("{}x{} matrix times vector of length {}", self.rows, self.cols, v.len())));
        }
        Ok((0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Result<Cplx<T>> {
        let n = self.require_square()?;
        Ok((0..n).map(|i| self[(i, i)]).sum())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let side = rows.max(cols);
        if side > MAX_KRON_DIM {
            return Err(Error::DimensionCap { dim: side, cap: MAX_KRON_DIM });
        }
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `self^{⊗n}`; `n = 0` gives the 1x1 identity.
    pub fn kron_power(&self, n: usize) -> Result<Self> {
        let mut out = Self::identity(1);
        for _ in 0..n {
            out = out.kron(self)?;
        }
        Ok(out)
    }

    pub fn scale(&self, s: Cplx<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(cr(s))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Cplx<T>, Cplx<T>) -> Cplx<T>) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims(format!("{}x{} vs {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().map(|a| a.norm()).fold(T::zero(), T::max)
    }

    /// Max-entry distance; `None` if shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> Option<T> {
        self.sub(other).ok().map(|d| d.max_abs())
    }

    /// Max-entry norm of `self - self^dagger`.
    pub fn hermitian_deviation(&self) -> Result<T> {
        let n = self.require_square()?;
        let mut dev = T::zero();
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        Ok(dev)
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Result<Self> {
        let n = self.require_square()?;
        let half = T::lit(0.5);
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (self[(i, j)] + self[(j, i)].conj()).scale(half);
            }
        }
        Ok(out)
    }

    /// Max-entry norm of `A^dagger A - I`.
    pub fn unitarity_deviation(&self) -> Result<T> {
        let n = self.require_square()?;
        let gram = self.adjoint().matmul(self)?;
        Ok(gram.max_abs_diff(&Self::identity(n)).unwrap_or_else(T::infinity))
    }

    /// Largest modulus among entries off the main diagonal.
    pub fn max_off_diagonal(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    m = m.max(self[(i, j)].norm());
                }
            }
        }
        m
    }

    /// Converts precision, e.g. to compare an `f32` computation against `f64`.
    pub fn cast<U: Real>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|a| Complex::new(U::from(a.re).unwrap_or_else(U::nan), U::from(a.im).unwrap_or_else(U::nan)))
                .collect(),
        }
    }
}

impl<T: Real> Index<(usize, usize)> for Matrix<T> {
    type Output = Cplx<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cplx<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cplx<T> {
        &mut self.data[i * self.cols + j]
    }
}

pub fn kron<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    a.kron(b)
}

pub fn matmul<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    a.matmul(b)
}

pub fn adjoint<T: Real>(a: &Matrix<T>) -> Matrix<T> {
    a.adjoint()
}

pub fn trace<T: Real>(a: &Matrix<T>) -> Result<Cplx<T>> {
    a.trace()
}

/// Spectral decomposition `A = V diag(values) V^dagger` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEig<T: Real> {
    /// Ascending.
    pub values: Vec<T>,
    /// Unitary; column `k` is the eigenvector of `values[k]`.
    pub vectors: Matrix<T>,
}

impl<T: Real> HermitianEig<T> {
    /// `V diag(f(λ)) V^dagger`.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        let n = self.values.len();
        let v = &self.vectors;
        let fl: Vec<T> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = Complex::zero();
                for (k, &w) in fl.iter().enumerate() {
                    if w != T::zero() {
                        acc += v[(i, k)] * v[(j, k)].conj() * w;
                    }
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
            out[(i, i)].im = T::zero();
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix<T> {
        self.reconstruct_with(|l| l)
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// The input must be Hermitian to within [`HERMITIAN_TOL`] (max-entry norm); its
/// Hermitian part is diagonalized.
pub fn hermitian_eig<T: Real>(a: &Matrix<T>) -> Result<HermitianEig<T>> {
    let n = a.require_square()?;
    let dev = a.hermitian_deviation()?;
    if !(dev <= T::tol(HERMITIAN_TOL)) {
        return Err(Error::NotHermitian(dev.to_f64().unwrap_or(f64::NAN)));
    }
    let mut m = a.hermitian_part()?;
    let mut v = Matrix::<T>::identity(n);

    let fro: T = m.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    let hundred = T::lit(100.0);
    let trivial = n <= 1 || fro == T::zero();

    for sweep in 0..MAX_SWEEPS {
        if trivial {
            break;
        }
        let off: T =
            (0..n).flat_map(|p| ((p + 1)..n).map(move |q| (p, q))).map(|(p, q)| m[(p, q)].norm_sqr()).sum::<T>().sqrt();
        if off <= T::epsilon() * fro {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = m[(p, q)];
                let r = b.norm();
                if r == T::zero() {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                // Late sweeps: drop entries below the precision of both diagonals.
                if sweep > 3 && app.abs() + hundred * r == app.abs() && aqq.abs() + hundred * r == aqq.abs() {
                    m[(p, q)] = Complex::zero();
                    m[(q, p)] = Complex::zero();
                    continue;
                }
                let phase = b / r;
                let tau = (aqq - app) / (r + r);
                let t = if tau.abs() > T::lit(1e150).min(T::max_value().sqrt()) {
                    T::one() / (tau + tau)
                } else {
                    let s = if tau >= T::zero() { T::one() } else { -T::one() };
                    s / (tau.abs() + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s, phase);
                m[(p, p)] = cr(app - t * r);
                m[(q, q)] = cr(aqq + t * r);
                m[(p, q)] = Complex::zero();
                m[(q, p)] = Complex::zero();
            }
        }
        if sweep + 1 == MAX_SWEEPS {
            return Err(Error::NoConvergence(MAX_SWEEPS));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new)] = v[(i, old)];
        }
    }
    Ok(HermitianEig { values, vectors })
}

// A <- J^dagger A J and V <- V J with
// J = [[c, s e], [-s conj(e), c]] acting on indices (p, q), e = a_pq / |a_pq|.
fn rotate<T: Real>(m: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize, c: T, s: T, e: Cplx<T>) {
    let n = m.rows;
    let se = e * s;
    let sec = e.conj() * s;
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * c - sec * akq;
        m[(k, q)] = se * akp + akq * c;
    }
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = apk * c - se * aqk;
        m[(q, k)] = sec * apk + aqk * c;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - sec * vkq;
        v[(k, q)] = se * vkp + vkq * c;
    }
}

/// Principal square root of a Hermitian positive-semidefinite matrix.
///
/// Eigenvalues in `[-1e-10, 0)` are clamped to zero; anything more negative is
/// reported as [`Error::NotPsd`].
pub fn psd_sqrt<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let eig = hermitian_eig(a)?;
    let min = eig.values.first().copied().unwrap_or_else(T::zero);
    if min < -T::tol(PSD_CLAMP_TOL) {
        return Err(Error::NotPsd(min.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(eig.reconstruct_with(|l| l.max(T::zero()).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_abs_diff_eq;

    type M = Matrix<f64>;

    fn random_hermitian(dim: usize, seed: u64) -> M {
        let mut r = rng::seeded(seed);
        let mut m = M::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = Complex::new(f64::sample_standard_normal(&mut r), f64::sample_standard_normal(&mut r));
            }
        }
        m.hermitian_part().unwrap()
    }

    #[test]
    fn kron_identities() {
        let i2 = M::identity(2);
        assert_eq!(kron(&i2, &i2).unwrap(), M::identity(4));
        let p1 = M::from_real_diag(&[0.0, 1.0]);
        assert_eq!(kron(&p1, &p1).unwrap(), M::from_real_diag(&[0.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn kron_x_identity_maps_e0_to_e2() {
        let xi = kron(&M::pauli_x(), &M::identity(2)).unwrap();
        for i in 0..4 {
            let mut e = vec![Complex::zero(); 4];
            e[i] = Complex::one();
            let out = xi.mat_vec(&e).unwrap();
            // X on the leading qubit toggles the high bit: i -> i ^ 2
            let expected = i ^ 2;
            for (k, z) in out.iter().enumerate() {
                let want = if k == expected { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(z.re, want);
                assert_abs_diff_eq!(z.im, 0.0);
            }
        }
    }

    #[test]
    fn kron_respects_dimension_cap() {
        let a = M::identity(1 << 7);
        assert_eq!(a.kron(&a).unwrap().rows(), MAX_KRON_DIM);
        let b = M::identity(1 << 8);
        assert!(matches!(b.kron(&a), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn basic_algebra() {
        assert_eq!(trace(&M::identity(4)).unwrap(), Complex::new(4.0, 0.0));
        let x = M::pauli_x();
        assert_eq!(matmul(&x, &x).unwrap(), M::identity(2));
        assert!(random_hermitian(3, 1).matmul(&M::pauli_y()).is_err());
        let y = M::pauli_y();
        assert_eq!(adjoint(&adjoint(&y)), y);
        assert!(M::zeros(2, 3).trace().is_err());
        assert!(M::from_vec(2, 2, vec![Complex::zero(); 3]).is_err());
    }

    #[test]
    fn eig_of_pauli_x_and_diagonal() {
        let e = hermitian_eig(&M::pauli_x()).unwrap();
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-14);

        let e = hermitian_eig(&M::from_real_diag(&[0.3, 0.7])).unwrap();
        assert_eq!(e.values, vec![0.3, 0.7]);
        assert_eq!(e.vectors, M::identity(2));
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = M::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        for (dim, seed) in [(8, 3), (16, 4), (128, 5)] {
            let a = random_hermitian(dim, seed);
            let e = hermitian_eig(&a).unwrap();
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            let err = e.reconstruct().max_abs_diff(&a).unwrap();
            assert!(err <= 1e-9, "dim {dim}: reconstruction error {err:e}");
            let u = e.vectors.unitarity_deviation().unwrap();
            assert!(u <= 1e-10, "dim {dim}: unitarity {u:e}");
        }
    }

    #[test]
    fn eig_handles_degenerate_spectrum() {
        let h = M::hadamard().kron(&M::hadamard()).unwrap();
        let a = h.matmul(&M::from_real_diag(&[1.0, 1.0, 1.0, 2.0])).unwrap().matmul(&h).unwrap();
        let e = hermitian_eig(&a).unwrap();
        assert!(e.reconstruct().max_abs_diff(&a).unwrap() < 1e-12);
    }

    #[test]
    fn psd_sqrt_cases() {
        let r = psd_sqrt(&M::from_real_diag(&[4.0, 9.0])).unwrap();
        assert!(r.max_abs_diff(&M::from_real_diag(&[2.0, 3.0])).unwrap() < 1e-14);
        assert!(psd_sqrt(&M::identity(5)).unwrap().max_abs_diff(&M::identity(5)).unwrap() < 1e-14);
        // tiny negative noise is clamped, genuine negatives are not
        assert!(psd_sqrt(&M::from_real_diag(&[1.0, -5e-11])).is_ok());
        assert!(matches!(psd_sqrt(&M::from_real_diag(&[1.0, -1e-6])), Err(Error::NotPsd(_))));
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let g = random_hermitian(6, 9);
        let a = g.matmul(&g).unwrap();
        let r = psd_sqrt(&a).unwrap();
        assert!(r.hermitian_deviation().unwrap() < 1e-12);
        assert!(r.matmul(&r).unwrap().max_abs_diff(&a).unwrap() < 1e-9);
    }

    #[test]
    fn single_precision_eigensolver() {
        let a: Matrix<f32> = random_hermitian(8, 11).cast();
        let e = hermitian_eig(&a).unwrap();
        assert!(e.reconstruct().max_abs_diff(&a).unwrap() < 1e-4);
    }
}
