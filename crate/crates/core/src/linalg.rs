//! Dense complex matrix kernels.
//!
//! Matrices are square, row-major and double precision. The largest register
//! handled by the toolkit is 8 qubits, i.e. 256×256, so everything stays dense.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::{Error, Result, MAX_QUBITS};

/// Largest matrix dimension any kernel will produce.
pub const MAX_DIM: usize = 1 << MAX_QUBITS;

/// Hermitian parts whose trace falls below this are rejected by
/// [`hermitize_and_normalize`].
pub const MIN_TRACE: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries; `data.len()` must be a perfect square.
    pub fn from_row_major(data: Vec<Complex64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != data.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// `trace(ρ²)`; real for Hermitian input.
    pub fn purity(&self) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.data[i * n + j] * self.data[j * n + i]).re;
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn one_norm(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `‖M − M†‖_F`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.data[i * n + j] - self.data[j * n + i].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// `self += s·other`.
    pub fn axpy(&mut self, s: f64, other: &ComplexMatrix) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_dims(self, other)?;
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Returns `P M Pᵀ` for the basis permutation `perm`, i.e.
    /// `out[perm[r], perm[c]] = self[r, c]`.
    pub fn permute_basis(&self, perm: &[usize]) -> Result<ComplexMatrix> {
        if perm.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: perm.len(),
            });
        }
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.data[perm[r] * n + perm[c]] = self.data[r * n + c];
            }
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix addition");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix subtraction");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix addition");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("dimension mismatch in matrix product")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector {
    data: Vec<Complex64>,
}

impl ComplexVector {
    pub fn new(data: Vec<Complex64>) -> Self {
        assert!(!data.is_empty(), "vector dimension must be positive");
        Self { data }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut data = vec![ZERO; dim];
        data[index] = ONE;
        Self::new(data)
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self::new(self.data.iter().map(|z| z / n).collect())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &ComplexVector) -> Complex64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn kron(&self, other: &ComplexVector) -> Result<ComplexVector> {
        let dim = self.dim() * other.dim();
        if dim > MAX_DIM {
            return Err(Error::DimensionOverflow { dim, max: MAX_DIM });
        }
        let mut data = Vec::with_capacity(dim);
        for a in &self.data {
            data.extend(other.data.iter().map(|b| a * b));
        }
        Ok(Self::new(data))
    }

    /// Projector `|ψ⟩⟨ψ|`.
    pub fn outer(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim(), |i, j| self.data[i] * self.data[j].conj())
    }
}

impl Index<usize> for ComplexVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.data[i]
    }
}

fn check_dims(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(())
}

/// Kronecker product `a ⊗ b`; `a` is the leftmost (most significant) factor.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = a.dim * b.dim;
    if dim > MAX_DIM {
        return Err(Error::DimensionOverflow { dim, max: MAX_DIM });
    }
    let mut out = ComplexMatrix::zeros(dim);
    for i in 0..a.dim {
        for j in 0..a.dim {
            let aij = a[(i, j)];
            for k in 0..b.dim {
                for l in 0..b.dim {
                    out[(i * b.dim + k, j * b.dim + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// `[h, rho] = h·rho − rho·h`.
pub fn commutator(h: &ComplexMatrix, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_dims(h, rho)?;
    let hr = h.matmul(rho)?;
    let rh = rho.matmul(h)?;
    Ok(&hr - &rh)
}

pub fn frobenius_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    check_dims(a, b)?;
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Projects onto the Hermitian part `(m + m†)/2` and rescales it to unit trace.
pub fn hermitize_and_normalize(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mut out = m.clone();
    hermitize_and_normalize_in_place(&mut out)?;
    Ok(out)
}

/// [`hermitize_and_normalize`] without allocating. `m` is left hermitized but
/// unscaled when the trace is degenerate.
pub fn hermitize_and_normalize_in_place(m: &mut ComplexMatrix) -> Result<()> {
    let n = m.dim;
    for i in 0..n {
        for j in i..n {
            let avg = (m.data[i * n + j] + m.data[j * n + i].conj()) * 0.5;
            m.data[i * n + j] = avg;
            m.data[j * n + i] = avg.conj();
        }
    }
    let trace = m.trace().re;
    if trace.abs() < MIN_TRACE {
        return Err(Error::DegenerateTrace { trace });
    }
    for z in &mut m.data {
        *z /= trace;
    }
    Ok(())
}

/// `exp(m)` by scaling and squaring around a truncated Taylor series.
///
/// The matrix is scaled so that its 1-norm is at most 1/2, where 20 Taylor
/// terms leave a truncation error far below double precision.
pub fn matrix_exponential(m: &ComplexMatrix) -> ComplexMatrix {
    const TAYLOR_TERMS: usize = 20;
    let norm = m.one_norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m.scale_real(1.0 / f64::from(2u32.pow(squarings)));

    let mut result = ComplexMatrix::identity(m.dim);
    let mut term = ComplexMatrix::identity(m.dim);
    for k in 1..=TAYLOR_TERMS {
        term = (&term * &scaled).scale_real(1.0 / k as f64);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Single-qubit Pauli matrices.
pub mod pauli {
    use super::*;

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn y() -> ComplexMatrix {
        let i = Complex64::new(0.0, 1.0);
        ComplexMatrix::from_row_major(vec![ZERO, -i, i, ZERO]).unwrap()
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn matrix_strategy(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_map(move |v| {
            ComplexMatrix::from_row_major(v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap()
        })
    }

    fn hermitian_strategy(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
        matrix_strategy(dim).prop_map(|m| (&m + &m.adjoint()).scale_real(0.5))
    }

    #[test]
    fn kron_identities() {
        let i4 = kron(&pauli::identity(), &pauli::identity()).unwrap();
        assert_eq!(i4, ComplexMatrix::identity(4));

        let xi = kron(&pauli::x(), &pauli::identity()).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                let expected = matches!((r, col), (0, 2) | (1, 3) | (2, 0) | (3, 1));
                assert_eq!(xi[(r, col)], if expected { ONE } else { ZERO });
            }
        }

        let zz = kron(&pauli::z(), &pauli::z()).unwrap();
        let expected =
            ComplexMatrix::from_diagonal(&[c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(zz, expected);
    }

    #[test]
    fn kron_rejects_oversized_result() {
        let big = ComplexMatrix::identity(32);
        let err = kron(&big, &ComplexMatrix::identity(16)).unwrap_err();
        assert!(matches!(err, Error::DimensionOverflow { dim: 512, .. }));
    }

    #[test]
    fn commutator_of_paulis() {
        let zx = commutator(&pauli::z(), &pauli::x()).unwrap();
        let expected = pauli::y().scale(c(0.0, 2.0));
        assert_abs_diff_eq!(zx.max_abs_diff(&expected), 0.0);

        let h = pauli::x().scale_real(0.3);
        let mixed = ComplexMatrix::identity(2).scale_real(0.5);
        assert_eq!(commutator(&h, &mixed).unwrap().frobenius_norm(), 0.0);
    }

    #[test]
    fn commutator_dimension_mismatch() {
        let err = commutator(&ComplexMatrix::zeros(2), &ComplexMatrix::zeros(4)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, found: 4 }));
    }

    #[test]
    fn frobenius_distance_examples() {
        let m = pauli::y();
        assert_eq!(frobenius_distance(&m, &m).unwrap(), 0.0);
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let b = ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]);
        assert_abs_diff_eq!(frobenius_distance(&a, &b).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        assert!(frobenius_distance(&a, &ComplexMatrix::zeros(3)).is_err());
    }

    #[test]
    fn hermitize_examples() {
        let half = hermitize_and_normalize(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(half, ComplexMatrix::identity(2).scale_real(0.5));

        let psi = ComplexVector::new(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let rho = psi.outer();
        let fixed = hermitize_and_normalize(&rho).unwrap();
        assert!(fixed.max_abs_diff(&rho) < 1e-15);

        let traceless = pauli::z();
        assert!(matches!(
            hermitize_and_normalize(&traceless),
            Err(Error::DegenerateTrace { .. })
        ));
    }

    #[test]
    fn exponential_examples() {
        assert_eq!(matrix_exponential(&ComplexMatrix::zeros(3)), ComplexMatrix::identity(3));

        let rot = matrix_exponential(&pauli::x().scale(c(0.0, PI / 2.0)));
        let expected = pauli::x().scale(c(0.0, 1.0));
        assert!(rot.max_abs_diff(&expected) < 1e-14);

        let d = matrix_exponential(&ComplexMatrix::from_diagonal(&[c(1.5, 0.0), c(-2.0, 0.0)]));
        assert!((d[(0, 0)].re - 1.5f64.exp()).abs() < 1e-13 * 1.5f64.exp());
        assert!((d[(1, 1)].re - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(d[(0, 1)], ZERO);
    }

    #[test]
    fn exponential_matches_eigen_decomposition_for_large_norm() {
        // exp(-i θ n·σ) = cos θ I − i sin θ n·σ for unit n
        let theta = 9.0;
        let (nx, nz) = (0.6, 0.8);
        let gen = &pauli::x().scale_real(nx) + &pauli::z().scale_real(nz);
        let u = matrix_exponential(&gen.scale(c(0.0, -theta)));
        let expected = &ComplexMatrix::identity(2).scale_real(theta.cos())
            - &gen.scale(c(0.0, theta.sin()));
        assert!(u.max_abs_diff(&expected) < 1e-12);
    }

    proptest! {
        #[test]
        fn kron_is_associative(a in matrix_strategy(2), b in matrix_strategy(2), m in matrix_strategy(3)) {
            let left = kron(&kron(&a, &b).unwrap(), &m).unwrap();
            let right = kron(&a, &kron(&b, &m).unwrap()).unwrap();
            prop_assert!(left.max_abs_diff(&right) <= 1e-15);
        }

        #[test]
        fn commutator_is_traceless_and_anti_hermitian(h in hermitian_strategy(4), r in hermitian_strategy(4)) {
            let comm = commutator(&h, &r).unwrap();
            prop_assert!(comm.trace().norm() <= 1e-12 * 4.0 * h.frobenius_norm().max(1.0) * r.frobenius_norm().max(1.0));
            let anti = &comm + &comm.adjoint();
            prop_assert!(anti.frobenius_norm() <= 1e-14);
        }

        #[test]
        fn frobenius_distance_is_a_metric(a in matrix_strategy(3), b in matrix_strategy(3), m in matrix_strategy(3)) {
            let ab = frobenius_distance(&a, &b).unwrap();
            let ba = frobenius_distance(&b, &a).unwrap();
            let am = frobenius_distance(&a, &m).unwrap();
            let mb = frobenius_distance(&m, &b).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12);
            prop_assert!(ab <= am + mb + 1e-12);
        }

        #[test]
        fn hermitize_is_idempotent(m in matrix_strategy(4)) {
            let shifted = &m + &ComplexMatrix::identity(4).scale_real(3.0);
            let once = hermitize_and_normalize(&shifted).unwrap();
            let twice = hermitize_and_normalize(&once).unwrap();
            prop_assert!(once.max_abs_diff(&twice) <= 1e-14);
            prop_assert!((once.trace().re - 1.0).abs() <= 1e-14);
            prop_assert_eq!(once.hermiticity_error(), 0.0);
        }

        #[test]
        fn unitary_exponential_of_hermitian(h in hermitian_strategy(4), t in 0.0f64..1.0) {
            let scale = 10.0 * t / h.one_norm().max(1e-12);
            let u = matrix_exponential(&h.scale(c(0.0, -scale)));
            let should_be_identity = &u.adjoint() * &u;
            prop_assert!(should_be_identity.max_abs_diff(&ComplexMatrix::identity(4)) <= 1e-10);
        }
    }
}
