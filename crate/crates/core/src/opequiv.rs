//! Effect contexts: spans, kernels and quotient projections in the real space of Hermitian operators.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{dim_check, QrfError, Result};
use crate::operator::{hermitian_basis, sum_ops, FactorShape, Operator};
use crate::quantum::{Frame, UnitaryRep};
use crate::relativize::pair_first_factor;
use crate::scalar::{from_usize, Real};

#[derive(Clone, Debug)]
enum Span<T: Real> {
    /// Orthonormal coordinate columns (dim² × rank).
    Explicit(DMatrix<T>),
    /// Span given by a complex-linear projector; basis materialized on demand.
    Implicit { projector: Projector<T>, rank: usize, basis: Arc<OnceLock<DMatrix<T>>> },
}

#[derive(Clone, Debug)]
enum Projector<T: Real> {
    /// The G-twirl.
    Twirl(Box<UnitaryRep<T>>),
    /// Tensor product of per-factor spans: orthonormal Hermitian F_i at each listed
    /// factor position, the full operator space on the remaining factors.
    Product { shape: FactorShape, factors: Vec<(usize, Vec<Operator<T>>)> },
}

impl<T: Real> Projector<T> {
    fn apply(&self, a: &Operator<T>) -> Operator<T> {
        match self {
            Self::Twirl(rep) => twirl_unchecked(rep, a),
            Self::Product { shape, factors } => {
                let mut x = a.clone();
                for (pos, fs) in factors {
                    x = project_factor(shape, *pos, fs, &x);
                }
                x
            }
        }
    }
}

/// Σ_i F_i ⊗ tr_k[(F_i⊗I)X] with factor `pos` moved to the front and back again.
fn project_factor<T: Real>(shape: &FactorShape, pos: usize, fs: &[Operator<T>], x: &Operator<T>) -> Operator<T> {
    let n = shape.len();
    let mut perm = vec![pos];
    perm.extend((0..n).filter(|&f| f != pos));
    let front = if pos == 0 { x.clone() } else { x.permute_factors(shape, &perm).expect("shape checked") };
    let (dk, dr) = (shape.dims()[pos], shape.total() / shape.dims()[pos]);
    let projected = sum_ops(shape.total(), fs.iter().map(|f| f.kron(&pair_first_factor(f, &front, dk, dr))));
    if pos == 0 {
        return projected;
    }
    let inv: Vec<usize> = (0..n).map(|f| perm.iter().position(|&p| p == f).expect("permutation")).collect();
    projected.permute_factors(&shape.permuted(&perm), &inv).expect("shape checked")
}

/// Finite family of Hermitian effects together with its real span.
#[derive(Clone, Debug)]
pub struct EffectContext<T: Real> {
    dim: usize,
    generators: Vec<Operator<T>>,
    generator_count: usize,
    span: Span<T>,
}

/// Summary record for reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextReport {
    pub rank: usize,
    pub kernel_dim: usize,
    pub generators: usize,
}

fn coords_matrix<T: Real>(dim: usize, ops: &[Operator<T>]) -> DMatrix<T> {
    let mut m = DMatrix::zeros(dim * dim, ops.len());
    for (k, op) in ops.iter().enumerate() {
        m.set_column(k, &op.hermitian_coords());
    }
    m
}

/// Orthonormal basis of the column space, cutting singular values at `rtol · σ_max`.
fn orthonormal_range<T: Real>(m: DMatrix<T>, rtol: T) -> DMatrix<T> {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = m.svd(true, false);
    let smax = svd.singular_values.iter().fold(T::zero(), |a, &s| a.max(s));
    if smax <= T::zero() {
        return DMatrix::zeros(rows, 0);
    }
    let u = svd.u.expect("requested U");
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] > rtol * smax).collect();
    DMatrix::from_fn(rows, keep.len(), |i, j| u[(i, keep[j])])
}

/// Right-singular vectors of `m` whose singular value is at most `cutoff`.
fn null_vectors<T: Real>(m: DMatrix<T>, cutoff: T) -> DMatrix<T> {
    let cols = m.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    // pad rows so the SVD returns a full square V
    let m = if m.nrows() < cols { m.resize_vertically(cols, T::zero()) } else { m };
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let null: Vec<usize> = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] <= cutoff).collect();
    DMatrix::from_fn(cols, null.len(), |i, j| vt[(null[j], i)])
}

impl<T: Real> EffectContext<T> {
    /// Context spanned by Hermitian generators on a `dim`-dimensional space.
    pub fn new(dim: usize, generators: Vec<Operator<T>>) -> Result<Self> {
        for (k, g) in generators.iter().enumerate() {
            dim_check("make_context", dim, g.dim())?;
            if !g.is_hermitian(T::default_tol()) {
                return Err(QrfError::Argument(format!("context generator {k} is not Hermitian")));
            }
        }
        let basis = orthonormal_range(coords_matrix(dim, &generators), T::rank_rtol());
        let generator_count = generators.len();
        Ok(Self { dim, generators, generator_count, span: Span::Explicit(basis) })
    }

    fn from_basis(dim: usize, basis: DMatrix<T>, generator_count: usize) -> Self {
        Self { dim, generators: Vec::new(), generator_count, span: Span::Explicit(basis) }
    }

    /// Context spanned by ⊗_k G_k(x_k) ⊗ B on `shape`, with generator families `G_k` at the
    /// listed factor positions and all operators B on the remaining factors.
    pub fn product(shape: &FactorShape, factors: Vec<(usize, Vec<Operator<T>>)>) -> Result<Self> {
        let mut seen = vec![false; shape.len()];
        let mut orthonormal = Vec::with_capacity(factors.len());
        let mut rank = 1;
        let mut generator_count = 1;
        for (pos, gens) in factors {
            if pos >= shape.len() || seen[pos] {
                return Err(QrfError::Argument(format!("product context: bad or repeated factor position {pos}")));
            }
            seen[pos] = true;
            let local = Self::new(shape.dims()[pos], gens)?;
            rank *= local.rank();
            generator_count *= local.generator_count;
            orthonormal.push((pos, local.span_basis()));
        }
        let free: usize = (0..shape.len()).filter(|&f| !seen[f]).map(|f| shape.dims()[f]).product();
        rank *= free * free;
        generator_count *= free * free;
        Ok(Self {
            dim: shape.total(),
            generators: Vec::new(),
            generator_count,
            span: Span::Implicit {
                projector: Projector::Product { shape: shape.clone(), factors: orthonormal },
                rank,
                basis: Arc::new(OnceLock::new()),
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        match &self.span {
            Span::Explicit(b) => b.ncols(),
            Span::Implicit { rank, .. } => *rank,
        }
    }

    pub fn kernel_dim(&self) -> usize {
        self.dim * self.dim - self.rank()
    }

    /// Generators supplied at construction (empty for derived contexts).
    pub fn generators(&self) -> &[Operator<T>] {
        &self.generators
    }

    pub fn report(&self) -> ContextReport {
        ContextReport { rank: self.rank(), kernel_dim: self.kernel_dim(), generators: self.generator_count }
    }

    /// Orthonormal basis coordinates (dim² × rank).
    pub fn basis_coords(&self) -> &DMatrix<T> {
        match &self.span {
            Span::Explicit(b) => b,
            Span::Implicit { projector, basis, .. } => basis.get_or_init(|| {
                let n = self.dim;
                let projected: Vec<Operator<T>> =
                    hermitian_basis::<T>(n).elements().iter().map(|b| projector.apply(b)).collect();
                orthonormal_range(coords_matrix(n, &projected), T::rank_rtol())
            }),
        }
    }

    /// Orthonormal Hermitian basis of the span.
    pub fn span_basis(&self) -> Vec<Operator<T>> {
        let b = self.basis_coords();
        (0..b.ncols()).map(|k| Operator::from_hermitian_coords(self.dim, &b.column(k).into_owned())).collect()
    }

    fn project_hermitian(&self, h: &Operator<T>) -> Operator<T> {
        match &self.span {
            Span::Explicit(b) => {
                let v = h.hermitian_coords();
                let c = b.tr_mul(&v);
                Operator::from_hermitian_coords(self.dim, &(b * c))
            }
            Span::Implicit { projector, .. } => projector.apply(h),
        }
    }

    /// HS-orthogonal projection onto the complex span, applied to the Hermitian and anti-Hermitian parts.
    pub fn canonical_repr(&self, omega: &Operator<T>) -> Result<Operator<T>> {
        dim_check("canonical_repr", self.dim, omega.dim())?;
        if let Span::Implicit { projector, .. } = &self.span {
            return Ok(projector.apply(omega));
        }
        let h1 = self.project_hermitian(&omega.hermitian_part());
        if omega.is_hermitian(T::zero()) {
            return Ok(h1);
        }
        let h2 = self.project_hermitian(&omega.antihermitian_part());
        Ok(&h1 + &h2.scale_c(num_complex::Complex::new(T::zero(), T::one())))
    }

    /// `X − P(X)`: the component of `X` invisible to every effect of the context.
    pub fn kernel_component(&self, x: &Operator<T>) -> Result<Operator<T>> {
        Ok(x - &self.canonical_repr(x)?)
    }

    /// Largest |tr[(Ω−Ω')B_k]| over an orthonormal basis of the span; for implicit spans the
    /// Hilbert–Schmidt norm of the projected difference (zero exactly when the former is).
    pub fn pairing_deviation(&self, omega: &Operator<T>, other: &Operator<T>) -> Result<T> {
        dim_check("equivalent", self.dim, omega.dim())?;
        dim_check("equivalent", self.dim, other.dim())?;
        let d = omega - other;
        match &self.span {
            Span::Explicit(b) => {
                let c1 = b.tr_mul(&d.hermitian_part().hermitian_coords());
                let c2 = b.tr_mul(&d.antihermitian_part().hermitian_coords());
                Ok(c1.iter().zip(c2.iter()).fold(T::zero(), |acc, (&x, &y)| acc.max((x * x + y * y).sqrt())))
            }
            Span::Implicit { projector, .. } => {
                let p = projector.apply(&d);
                Ok(p.hs_inner(&p).re.sqrt())
            }
        }
    }

    pub fn equivalent(&self, omega: &Operator<T>, other: &Operator<T>, tol: T) -> Result<bool> {
        Ok(self.pairing_deviation(omega, other)? <= tol)
    }

    /// Frobenius distance from `a` to its projection (zero iff `a` lies in the span).
    pub fn residual(&self, a: &Operator<T>) -> Result<T> {
        let k = self.kernel_component(a)?;
        Ok(k.hs_inner(&k).re.sqrt())
    }

    /// Largest residual of either context's basis with respect to the other.
    pub fn mutual_residual(&self, other: &Self) -> Result<T> {
        dim_check("mutual_residual", self.dim, other.dim)?;
        let mut worst = T::zero();
        for (a, b) in [(self, other), (other, self)] {
            for op in a.span_basis() {
                worst = worst.max(b.residual(&op)?);
            }
        }
        Ok(worst)
    }

    /// Columns of `self`'s basis mapped by `I − P_other`.
    fn complement_image(&self, other: &Self) -> DMatrix<T> {
        let a = self.basis_coords();
        match &other.span {
            Span::Explicit(b) => a - b * b.tr_mul(a),
            Span::Implicit { projector, .. } => {
                let mut out = a.clone();
                for k in 0..a.ncols() {
                    let op = Operator::from_hermitian_coords(self.dim, &a.column(k).into_owned());
                    let t = projector.apply(&op).hermitian_coords();
                    out.set_column(k, &(a.column(k) - t));
                }
                out
            }
        }
    }

    /// Intersection of two spans: vectors of the first span annihilated by `I − P₂`.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        dim_check("intersect", self.dim, other.dim)?;
        let (first, second) = match (&self.span, &other.span) {
            (Span::Implicit { .. }, Span::Explicit(_)) => (other, self),
            _ => (self, other),
        };
        let r = first.complement_image(second);
        let null = null_vectors(r, T::rank_rtol());
        let basis = first.basis_coords() * null;
        Ok(Self::from_basis(self.dim, basis, self.generator_count + other.generator_count))
    }
}

/// Effects invariant under `rep`, i.e. the fixed space of the G-twirl.
pub fn invariant_subspace<T: Real>(rep: &UnitaryRep<T>) -> EffectContext<T> {
    EffectContext {
        dim: rep.dim(),
        generators: Vec::new(),
        generator_count: rep.commutant_dim(),
        span: Span::Implicit {
            projector: Projector::Twirl(Box::new(rep.clone())),
            rank: rep.commutant_dim(),
            basis: Arc::new(OnceLock::new()),
        },
    }
}

/// Span of E(x) ⊗ B_k over sample points and a Hermitian basis of the system.
pub fn framed_subspace<T: Real>(frame: &Frame<T>, system_dim: usize) -> Result<EffectContext<T>> {
    if system_dim == 0 {
        return Err(QrfError::Argument("system dimension must be positive".into()));
    }
    let hb = hermitian_basis::<T>(system_dim);
    let gens = frame
        .povm()
        .effects()
        .iter()
        .flat_map(|e| hb.elements().iter().map(move |b| e.kron(b)))
        .collect();
    EffectContext::new(frame.dim() * system_dim, gens)
}

pub fn make_context<T: Real>(dim: usize, generators: Vec<Operator<T>>) -> Result<EffectContext<T>> {
    EffectContext::new(dim, generators)
}

pub(crate) fn twirl_unchecked<T: Real>(rep: &UnitaryRep<T>, a: &Operator<T>) -> Operator<T> {
    let n = rep.group().order();
    sum_ops(a.dim(), (0..n).map(|g| rep.act_op_unchecked(g, a))).scale(T::one() / from_usize::<T>(n))
}

/// 𝒢(A) = (1/|G|) Σ_g U(g) A U(g)*.
pub fn g_twirl<T: Real>(rep: &UnitaryRep<T>, a: &Operator<T>) -> Result<Operator<T>> {
    dim_check("g_twirl", rep.dim(), a.dim())?;
    Ok(twirl_unchecked(rep, a))
}

/// 𝒢_*(ρ) = (1/|G|) Σ_g U(g)* ρ U(g); for finite G this coincides with [`g_twirl`].
pub fn g_twirl_predual<T: Real>(rep: &UnitaryRep<T>, rho: &Operator<T>) -> Result<Operator<T>> {
    dim_check("g_twirl_predual", rep.dim(), rho.dim())?;
    let n = rep.group().order();
    Ok(sum_ops(rho.dim(), (0..n).map(|g| rep.act_state_unchecked(g, rho))).scale(T::one() / from_usize::<T>(n)))
}

/// Hermitian representative paired with the context it is compared in.
#[derive(Clone, Debug)]
pub struct OperationalState<T: Real> {
    representative: Operator<T>,
    context: Arc<EffectContext<T>>,
}

impl<T: Real> OperationalState<T> {
    pub fn new(representative: Operator<T>, context: Arc<EffectContext<T>>) -> Result<Self> {
        dim_check("operational state", context.dim(), representative.dim())?;
        Ok(Self { representative, context })
    }

    pub fn representative(&self) -> &Operator<T> {
        &self.representative
    }

    pub fn context(&self) -> &Arc<EffectContext<T>> {
        &self.context
    }

    pub fn canonical(&self) -> Operator<T> {
        self.context.canonical_repr(&self.representative).expect("dims checked at construction")
    }

    /// Pairing deviation from another state in the same context.
    pub fn deviation(&self, other: &Self) -> Result<T> {
        self.context.pairing_deviation(&self.representative, &other.representative)
    }

    pub fn equivalent(&self, other: &Self, tol: T) -> Result<bool> {
        Ok(self.deviation(other)? <= tol)
    }
}
