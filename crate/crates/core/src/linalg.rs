//! Dense complex vectors/matrices, Kronecker products, Hermitian quadratic
//! forms, the cyclic down-shift operator, and a complex-Hermitian Jacobi
//! eigensolver (used only by the MUSIC baseline and test oracles).

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{sc, Scalar};

pub type Cx<T> = Complex<T>;

#[inline]
pub fn czero<T: Scalar>() -> Cx<T> {
    Cx::new(T::zero(), T::zero())
}

/// Unit complex number `exp(j·phase)`.
#[inline]
pub fn cis<T: Scalar>(phase: T) -> Cx<T> {
    Cx::from_polar(T::one(), phase)
}

/// Dense complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CVector<T = f64> {
    data: Vec<Cx<T>>,
}

impl<T: Scalar> CVector<T> {
    pub fn new(data: Vec<Cx<T>>) -> Self {
        assert!(!data.is_empty(), "CVector must be non-empty");
        Self { data }
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(vec![czero(); len])
    }

    /// Standard basis vector e_idx.
    pub fn basis(len: usize, idx: usize) -> Self {
        assert!(idx < len, "basis index out of range");
        let mut v = Self::zeros(len);
        v.data[idx] = Cx::new(T::one(), T::zero());
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn as_slice(&self) -> &[Cx<T>] {
        &self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Cx<T>> {
        self.data.iter()
    }

    /// Hermitian inner product `self† rhs`.
    pub fn dot_h(&self, rhs: &Self) -> Cx<T> {
        assert_eq!(self.len(), rhs.len(), "dot_h length mismatch");
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.conj() * *b)
            .sum()
    }

    pub fn norm_sqr(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// Kronecker product: entry `i·len(rhs) + l` is `self[i]·rhs[l]`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let mut data = Vec::with_capacity(self.len() * rhs.len());
        for a in &self.data {
            for b in &rhs.data {
                data.push(*a * *b);
            }
        }
        Self::new(data)
    }

    pub fn scaled(&self, z: Cx<T>) -> Self {
        Self::new(self.data.iter().map(|a| *a * z).collect())
    }

    /// `self − z·rhs`.
    pub fn sub_scaled(&self, z: Cx<T>, rhs: &Self) -> Self {
        assert_eq!(self.len(), rhs.len(), "sub_scaled length mismatch");
        Self::new(
            self.data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a - *b * z)
                .collect(),
        )
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.sub_scaled(Cx::new(T::one(), T::zero()), rhs)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.len(), rhs.len(), "add length mismatch");
        Self::new(
            self.data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a + *b)
                .collect(),
        )
    }

    /// Cyclic down-shift `L x`: last entry wraps to the front. On vectors with
    /// a zero last entry this coincides with the plain down-shift.
    pub fn cyclic_down_shift(&self) -> Self {
        let n = self.len();
        let mut data = Vec::with_capacity(n);
        data.push(self.data[n - 1]);
        data.extend_from_slice(&self.data[..n - 1]);
        Self::new(data)
    }

    /// Append one trailing zero.
    pub fn with_trailing_zero(&self) -> Self {
        let mut data = self.data.clone();
        data.push(czero());
        Self::new(data)
    }
}

impl<T: Scalar> std::ops::Index<usize> for CVector<T> {
    type Output = Cx<T>;
    fn index(&self, i: usize) -> &Cx<T> {
        &self.data[i]
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T = f64> {
    rows: usize,
    cols: usize,
    data: Vec<Cx<T>>,
}

impl<T: Scalar> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "CMatrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![czero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Cx::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cx<T>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
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

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Cx<T> {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, z: Cx<T>) {
        self.data[r * self.cols + c] = z;
    }

    pub fn column(&self, c: usize) -> CVector<T> {
        CVector::new((0..self.rows).map(|r| self.get(r, c)).collect())
    }

    pub fn mul_vec(&self, x: &CVector<T>) -> CVector<T> {
        assert_eq!(self.cols, x.len(), "mul_vec dimension mismatch");
        let xs = x.as_slice();
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = czero();
            for (a, b) in row.iter().zip(xs) {
                acc = acc + *a * *b;
            }
            out.push(acc);
        }
        CVector::new(out)
    }

    /// Hermitian quadratic form `x† R y`.
    pub fn quad_form(&self, x: &CVector<T>, y: &CVector<T>) -> Result<Cx<T>> {
        if !self.is_square() || self.rows != x.len() || self.rows != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "quad_form: R is {}x{}, x has {}, y has {}",
                self.rows,
                self.cols,
                x.len(),
                y.len()
            )));
        }
        Ok(x.dot_h(&self.mul_vec(y)))
    }

    /// `self += weight · x x†`.
    pub fn add_outer(&mut self, x: &CVector<T>, weight: T) {
        assert!(self.is_square() && self.rows == x.len(), "add_outer dims");
        let xs = x.as_slice();
        for r in 0..self.rows {
            let xr = xs[r] * weight;
            for c in 0..self.cols {
                self.data[r * self.cols + c] = self.data[r * self.cols + c] + xr * xs[c].conj();
            }
        }
    }

    pub fn scale_in_place(&mut self, s: T) {
        for z in &mut self.data {
            *z = *z * s;
        }
    }

    pub fn add_diag(&mut self, s: T) {
        assert!(self.is_square(), "add_diag needs a square matrix");
        for i in 0..self.rows {
            let z = self.data[i * self.cols + i];
            self.data[i * self.cols + i] = z + Cx::new(s, T::zero());
        }
    }

    /// `(R + R†)/2`.
    pub fn hermitized(&self) -> Self {
        assert!(self.is_square(), "hermitized needs a square matrix");
        let half = sc::<T>(0.5);
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self.get(r, c) + self.get(c, r).conj()) * half
        })
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> T {
        assert!(self.is_square(), "hermitian_defect needs a square matrix");
        let mut worst = T::zero();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let d = (self.get(r, c) - self.get(c, r).conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<T>()
            .sqrt()
    }

    /// Real part of the trace.
    pub fn trace_re(&self) -> T {
        assert!(self.is_square(), "trace needs a square matrix");
        (0..self.rows).map(|i| self.get(i, i).re).sum()
    }

    pub fn min_diag_re(&self) -> T {
        assert!(self.is_square(), "diag needs a square matrix");
        (0..self.rows)
            .map(|i| self.get(i, i).re)
            .fold(T::infinity(), T::min)
    }

    /// Square submatrix selecting the given row/column indices, in order.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        assert!(self.is_square(), "principal_submatrix needs a square matrix");
        Self::from_fn(idx.len(), idx.len(), |r, c| self.get(idx[r], idx[c]))
    }

    pub fn add_assign(&mut self, rhs: &Self) {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "add dims");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a = *a + *b;
        }
    }
}

/// n×n cyclic down-shift matrix: `(L x)[0] = x[n−1]`, `(L x)[i] = x[i−1]`.
pub fn down_shift_matrix<T: Scalar>(n: usize) -> Result<CMatrix<T>> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "down-shift matrix needs n >= 2, got {n}"
        )));
    }
    let one = Cx::new(T::one(), T::zero());
    let mut m = CMatrix::zeros(n, n);
    m.set(0, n - 1, one);
    for i in 1..n {
        m.set(i, i - 1, one);
    }
    Ok(m)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig<T = f64> {
    /// Eigenvalues, sorted descending.
    pub eigenvalues: Vec<T>,
    /// Orthonormal eigenvectors as matrix columns, matching `eigenvalues`.
    pub eigenvectors: CMatrix<T>,
}

/// Cyclic-by-rows complex Jacobi eigensolver. The input is symmetrized as
/// `(R + R†)/2` first; sweep order is fixed so results are reproducible.
pub fn hermitian_eig<T: Scalar>(r: &CMatrix<T>) -> Result<HermitianEig<T>> {
    if !r.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "hermitian_eig needs a square matrix, got {}x{}",
            r.rows(),
            r.cols()
        )));
    }
    let n = r.rows();
    let mut a = r.hermitized();
    let mut v = CMatrix::<T>::identity(n);

    let scale = a.frobenius_norm();
    // 1e-10 relative off-diagonal norm per the contract; floored at 100·ε so
    // the f32 instantiation terminates.
    let tol = sc::<T>(1e-10).max(T::epsilon() * sc::<T>(100.0)) * scale;
    let max_sweeps = 100;

    if scale > T::zero() {
        for _sweep in 0..max_sweeps {
            let mut off_sq = T::zero();
            for p in 0..n {
                for q in (p + 1)..n {
                    off_sq += a.get(p, q).norm_sqr();
                }
            }
            if (off_sq + off_sq).sqrt() <= tol {
                break;
            }

            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    let rmag = apq.norm();
                    if rmag <= T::epsilon() * scale {
                        continue;
                    }
                    // Phase factor turns the 2x2 block real; then a standard
                    // real Jacobi rotation zeroes it.
                    let phase = apq / Cx::new(rmag, T::zero()); // e^{j·arg(apq)}
                    let app = a.get(p, p).re;
                    let aqq = a.get(q, q).re;
                    let tau = (aqq - app) / (rmag + rmag);
                    let t = {
                        let s = if tau >= T::zero() { T::one() } else { -T::one() };
                        s / (tau.abs() + (T::one() + tau * tau).sqrt())
                    };
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = t * c;

                    // Column update: A <- A·W with W[p][p]=c, W[p][q]=s,
                    // W[q][p]=−s·conj(phase), W[q][q]=c·conj(phase).
                    let sp = phase.conj() * s;
                    let cp = phase.conj() * c;
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, akp * c - akq * sp);
                        a.set(k, q, akp * s + akq * cp);
                    }
                    // Row update: A <- W†·A.
                    let sph = phase * s;
                    let cph = phase * c;
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, apk * c - aqk * sph);
                        a.set(q, k, apk * s + aqk * cph);
                    }
                    // Clean the pivot block.
                    a.set(p, q, czero());
                    a.set(q, p, czero());
                    let dp = a.get(p, p);
                    let dq = a.get(q, q);
                    a.set(p, p, Cx::new(dp.re, T::zero()));
                    a.set(q, q, Cx::new(dq.re, T::zero()));

                    // Accumulate eigenvectors: V <- V·W.
                    for k in 0..n {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, vkp * c - vkq * sp);
                        v.set(k, q, vkp * s + vkq * cp);
                    }
                }
            }
        }
    }

    // Sort descending by eigenvalue; stable so degenerate clusters keep the
    // deterministic sweep ordering.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(j, j)
            .re
            .partial_cmp(&a.get(i, i).re)
            .expect("eigenvalues are finite")
    });
    let eigenvalues: Vec<T> = order.iter().map(|&i| a.get(i, i).re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r_, c_| v.get(r_, order[c_]));

    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}
