//! Dense complex matrices and the operator-algebra primitives built on them.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{dim_check, QrfError, Result};
use crate::scalar::{cabs, re, Real};

/// Square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<T: Real> {
    m: DMatrix<Complex<T>>,
}

impl<T: Real> Operator<T> {
    pub fn from_matrix(m: DMatrix<Complex<T>>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(QrfError::Argument(format!("operator must be square, got {}x{}", m.nrows(), m.ncols())));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QrfError::Argument("operator has non-finite entries".into()));
        }
        Ok(Self { m })
    }

    pub(crate) fn wrap(m: DMatrix<Complex<T>>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self { m }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { m: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: DMatrix::identity(dim, dim) }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        Self { m: DMatrix::from_fn(dim, dim, f) }
    }

    pub fn from_real_diagonal(d: &[T]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { re(d[i]) } else { Complex::default() })
    }

    /// Matrix unit |i⟩⟨j|.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(i, j)] = Complex::new(T::one(), T::zero());
        Self { m }
    }

    /// Projector |ψ⟩⟨ψ| (unnormalized if ψ is).
    pub fn projector(psi: &DVector<Complex<T>>) -> Self {
        Self { m: psi * psi.adjoint() }
    }

    /// |ψ⟩⟨φ|.
    pub fn outer(psi: &DVector<Complex<T>>, phi: &DVector<Complex<T>>) -> Self {
        assert_eq!(psi.len(), phi.len());
        Self { m: psi * phi.adjoint() }
    }

    pub fn basis_ket(dim: usize, i: usize) -> DVector<Complex<T>> {
        let mut v = DVector::zeros(dim);
        v[i] = Complex::new(T::one(), T::zero());
        v
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<Complex<T>> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.m[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn trace(&self) -> Complex<T> {
        self.m.trace()
    }

    pub fn scale(&self, s: T) -> Self {
        Self { m: self.m.map(|z| z * s) }
    }

    pub fn scale_c(&self, s: Complex<T>) -> Self {
        Self { m: self.m.map(|z| z * s) }
    }

    /// In-place `self += s·other`.
    pub fn add_scaled(&mut self, other: &Self, s: T) {
        assert_eq!(self.dim(), other.dim());
        self.m.zip_apply(&other.m, |a, b| *a += b * s);
    }

    pub fn dagger_sandwich(&self, u: &Self) -> Self {
        Self { m: &u.m * &self.m * u.m.adjoint() }
    }

    /// (A + A†)/2.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self { m: (&self.m + self.m.adjoint()).map(|z| z * half) }
    }

    /// (A − A†)/(2i), so that A = H₁ + i·H₂.
    pub fn antihermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        let d = &self.m - self.m.adjoint();
        Self { m: d.map(|z| Complex::new(z.im * half, -z.re * half)) }
    }

    pub fn max_abs(&self) -> T {
        self.m.iter().fold(T::zero(), |acc, &z| acc.max(cabs(z)))
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim(), other.dim(), "max_abs_diff dims");
        self.m.iter().zip(other.m.iter()).fold(T::zero(), |acc, (&a, &b)| acc.max(cabs(a - b)))
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        let n = self.dim();
        (0..n).all(|i| (i..n).all(|j| cabs(self.m[(i, j)] - self.m[(j, i)].conj()) <= tol))
    }

    /// Eigen-decomposition of the Hermitian part, eigenvalues ascending.
    pub fn eigh(&self) -> (Vec<T>, DMatrix<Complex<T>>) {
        let n = self.dim();
        if n == 0 {
            return (Vec::new(), DMatrix::zeros(0, 0));
        }
        // the default epsilon can stall into NaN on large sparse inputs
        let h = self.hermitian_part().m;
        let iters = 64 * n * n + 1000;
        let eig = [T::lit(64.0), T::lit(4096.0)]
            .into_iter()
            .find_map(|k| {
                h.clone()
                    .try_symmetric_eigen(T::default_epsilon() * k, iters)
                    .filter(|e| e.eigenvalues.iter().all(|v| v.is_finite()))
            })
            .expect("Hermitian eigendecomposition converges");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).expect("finite eigenvalues"));
        let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vecs = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        (vals, vecs)
    }

    pub fn eigenvalues_h(&self) -> Vec<T> {
        self.eigh().0
    }

    pub fn is_positive(&self, tol: T) -> bool {
        self.is_hermitian(tol) && self.eigenvalues_h().first().is_none_or(|&l| l >= -tol)
    }

    pub fn is_effect(&self, tol: T) -> bool {
        if !self.is_hermitian(tol) {
            return false;
        }
        let ev = self.eigenvalues_h();
        ev.first().is_none_or(|&l| l >= -tol) && ev.last().is_none_or(|&l| l <= T::one() + tol)
    }

    pub fn is_density(&self, tol: T) -> bool {
        self.is_positive(tol) && cabs(self.trace() - re(T::one())) <= tol
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        let p = self.m.adjoint() * &self.m;
        Self { m: p }.max_abs_diff(&Self::identity(self.dim())) <= tol
    }

    /// tr[A†B].
    pub fn hs_inner(&self, other: &Self) -> Complex<T> {
        assert_eq!(self.dim(), other.dim(), "hs_inner dims");
        self.m.iter().zip(other.m.iter()).fold(Complex::default(), |acc, (&a, &b)| acc + a.conj() * b)
    }

    /// tr[A·B] without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex<T> {
        assert_eq!(self.dim(), other.dim(), "trace_product dims");
        let n = self.dim();
        let mut acc = Complex::default();
        for i in 0..n {
            for j in 0..n {
                acc += self.m[(i, j)] * other.m[(j, i)];
            }
        }
        acc
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> T {
        if self.dim() == 0 {
            return T::zero();
        }
        self.m.singular_values().iter().fold(T::zero(), |a, &s| a.max(s))
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self { m: self.m.kronecker(&other.m) }
    }

    pub fn kron_all(ops: &[&Self]) -> Self {
        ops.iter().fold(Self::identity(1), |acc, op| acc.kron(op))
    }

    /// Partial trace keeping the listed factors (in their original order).
    pub fn partial_trace(&self, shape: &FactorShape, keep: &[usize]) -> Result<Self> {
        shape.check_dim("partial_trace", self.dim())?;
        let k = shape.len();
        let mut keep_mask = vec![false; k];
        for &f in keep {
            if f >= k {
                return Err(QrfError::Argument(format!("partial_trace: factor {f} out of range for {k} factors")));
            }
            keep_mask[f] = true;
        }
        let kept: Vec<usize> = (0..k).filter(|&f| keep_mask[f]).collect();
        let traced: Vec<usize> = (0..k).filter(|&f| !keep_mask[f]).collect();
        let strides = shape.strides();
        let offsets = |factors: &[usize]| -> Vec<usize> {
            let mut offs = vec![0usize];
            for &f in factors {
                let mut next = Vec::with_capacity(offs.len() * shape.dims[f]);
                for &o in &offs {
                    for d in 0..shape.dims[f] {
                        next.push(o + d * strides[f]);
                    }
                }
                offs = next;
            }
            offs
        };
        let ko = offsets(&kept);
        let to = offsets(&traced);
        let n = ko.len();
        let m = DMatrix::from_fn(n, n, |r, c| {
            let (br, bc) = (ko[r], ko[c]);
            to.iter().fold(Complex::default(), |acc, &t| acc + self.m[(br + t, bc + t)])
        });
        Ok(Self { m })
    }

    /// Reorders tensor factors: factor `i` of the result is factor `perm[i]` of `self`.
    pub fn permute_factors(&self, shape: &FactorShape, perm: &[usize]) -> Result<Self> {
        shape.check_dim("permute_factors", self.dim())?;
        let map = shape.permutation_map(perm)?;
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                m[(map[i], map[j])] = self.m[(i, j)];
            }
        }
        Ok(Self { m })
    }

    /// `A` on factor `pos` of `shape`, tensored with `B` on the remaining factors (kept in order).
    pub fn embed(a: &Self, pos: usize, b: &Self, shape: &FactorShape) -> Result<Self> {
        let k = shape.len();
        if pos >= k {
            return Err(QrfError::Argument(format!("embed position {pos} out of range for {k} factors")));
        }
        dim_check("embed", shape.dims[pos], a.dim())?;
        let rest = shape.without(pos);
        dim_check("embed", rest.total(), b.dim())?;
        let joint = a.kron(b);
        if pos == 0 {
            return Ok(joint);
        }
        // joint factor order is [pos, others...]; find where each target factor sits in it
        let mut src_order = vec![pos];
        src_order.extend((0..k).filter(|&f| f != pos));
        let joint_shape = FactorShape::new(src_order.iter().map(|&f| shape.dims[f]).collect());
        let perm: Vec<usize> = (0..k).map(|f| src_order.iter().position(|&s| s == f).expect("factor present")).collect();
        joint.permute_factors(&joint_shape, &perm)
    }

    /// Coordinates with respect to the fixed [`HermitianBasis`] of the Hermitian part.
    pub fn hermitian_coords(&self) -> DVector<T> {
        let n = self.dim();
        let mut v = DVector::zeros(n * n);
        let s2 = T::lit(std::f64::consts::SQRT_2);
        let half = T::lit(0.5);
        for i in 0..n {
            v[i] = self.m[(i, i)].re;
        }
        let mut k = n;
        for i in 0..n {
            for j in i + 1..n {
                let a = (self.m[(i, j)] + self.m[(j, i)].conj()) * half;
                v[k] = s2 * a.re;
                v[k + 1] = s2 * a.im;
                k += 2;
            }
        }
        v
    }

    /// Inverse of [`Self::hermitian_coords`].
    pub fn from_hermitian_coords(dim: usize, v: &DVector<T>) -> Self {
        assert_eq!(v.len(), dim * dim, "coordinate length");
        let mut m = DMatrix::zeros(dim, dim);
        let r2 = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        for i in 0..dim {
            m[(i, i)] = re(v[i]);
        }
        let mut k = dim;
        for i in 0..dim {
            for j in i + 1..dim {
                let z = Complex::new(v[k] * r2, v[k + 1] * r2);
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
                k += 2;
            }
        }
        Self { m }
    }

    /// Real diagonal entries.
    pub fn diagonal_re(&self) -> Vec<T> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_exactly_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.m[(i, j)] == Complex::default()))
    }
}

impl<T: Real> Add for &Operator<T> {
    type Output = Operator<T>;
    fn add(self, rhs: Self) -> Operator<T> {
        Operator { m: &self.m + &rhs.m }
    }
}

impl<T: Real> Sub for &Operator<T> {
    type Output = Operator<T>;
    fn sub(self, rhs: Self) -> Operator<T> {
        Operator { m: &self.m - &rhs.m }
    }
}

impl<T: Real> Mul for &Operator<T> {
    type Output = Operator<T>;
    fn mul(self, rhs: Self) -> Operator<T> {
        Operator { m: &self.m * &rhs.m }
    }
}

impl<T: Real> Neg for &Operator<T> {
    type Output = Operator<T>;
    fn neg(self) -> Operator<T> {
        Operator { m: -&self.m }
    }
}

/// Ordered tensor-factor dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorShape {
    dims: Vec<usize>,
}

impl FactorShape {
    pub fn new(dims: Vec<usize>) -> Self {
        Self { dims }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn check_dim(&self, op: &'static str, dim: usize) -> Result<()> {
        if self.total() == dim {
            Ok(())
        } else {
            Err(QrfError::Argument(format!(
                "{op}: factor shape {:?} has total dimension {} but operator dimension is {dim}",
                self.dims,
                self.total()
            )))
        }
    }

    /// Row-major strides: the last factor varies fastest.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for f in (0..self.dims.len().saturating_sub(1)).rev() {
            s[f] = s[f + 1] * self.dims[f + 1];
        }
        s
    }

    pub fn without(&self, f: usize) -> Self {
        Self { dims: self.dims.iter().enumerate().filter(|&(i, _)| i != f).map(|(_, &d)| d).collect() }
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self { dims: perm.iter().map(|&p| self.dims[p]).collect() }
    }

    /// Basis-index map for reordering factors so that new factor `i` is old factor `perm[i]`.
    pub fn permutation_map(&self, perm: &[usize]) -> Result<Vec<usize>> {
        let k = self.len();
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
            return Err(QrfError::Argument(format!("{perm:?} is not a permutation of {k} factors")));
        }
        let new_shape = self.permuted(perm);
        let new_strides = new_shape.strides();
        let old_strides = self.strides();
        let n = self.total();
        let mut map = vec![0; n];
        for (old, slot) in map.iter_mut().enumerate() {
            let mut idx = 0;
            for (i, &p) in perm.iter().enumerate() {
                let digit = (old / old_strides[p]) % self.dims[p];
                idx += digit * new_strides[i];
            }
            *slot = idx;
        }
        Ok(map)
    }
}

/// HS-orthonormal Hermitian basis built from matrix units.
///
/// Order: diagonal units E_ii, then for each pair i<j the symmetric (E_ij+E_ji)/√2
/// followed by the antisymmetric i(E_ij−E_ji)/√2.
#[derive(Clone, Debug)]
pub struct HermitianBasis<T: Real> {
    dim: usize,
    basis: Vec<Operator<T>>,
}

impl<T: Real> HermitianBasis<T> {
    pub fn new(dim: usize) -> Self {
        let n2 = dim * dim;
        let basis = (0..n2)
            .map(|k| {
                let mut v = DVector::zeros(n2);
                v[k] = T::one();
                Operator::from_hermitian_coords(dim, &v)
            })
            .collect();
        Self { dim, basis }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[Operator<T>] {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
}

pub fn hermitian_basis<T: Real>(dim: usize) -> HermitianBasis<T> {
    HermitianBasis::new(dim)
}

/// Wire format for operators: row-major real and imaginary parts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl OperatorJson {
    pub fn to_operator<T: Real>(&self) -> Result<Operator<T>> {
        let n = self.dim;
        for (name, rows) in [("re", &self.re), ("im", &self.im)] {
            if rows.len() != n {
                return Err(QrfError::Argument(format!("operator JSON: '{name}' has {} rows, expected {n}", rows.len())));
            }
            if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
                return Err(QrfError::Argument(format!(
                    "operator JSON: ragged '{name}' row {i} has length {}, expected {n}",
                    r.len()
                )));
            }
        }
        Operator::from_matrix(DMatrix::from_fn(n, n, |i, j| Complex::new(T::lit(self.re[i][j]), T::lit(self.im[i][j]))))
    }
}

impl<T: Real> From<&Operator<T>> for OperatorJson {
    fn from(a: &Operator<T>) -> Self {
        let n = a.dim();
        Self {
            dim: n,
            re: (0..n).map(|i| (0..n).map(|j| a.get(i, j).re.to_f64_lossy()).collect()).collect(),
            im: (0..n).map(|i| (0..n).map(|j| a.get(i, j).im.to_f64_lossy()).collect()).collect(),
        }
    }
}

/// Sum of per-term operators in a fixed order.
pub(crate) fn sum_ops<T: Real>(dim: usize, terms: impl IntoIterator<Item = Operator<T>>) -> Operator<T> {
    let mut acc = Operator::zeros(dim);
    for t in terms {
        acc.m += t.m;
    }
    acc
}
