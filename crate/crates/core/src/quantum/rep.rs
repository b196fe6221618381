use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{dim_check, QrfError, Result};
use crate::group::{CosetSpace, FiniteGroup};
use crate::operator::Operator;
use crate::scalar::{from_usize, Real};

/// Which built-in construction produced a representation.
#[derive(Clone, Debug, PartialEq)]
pub enum RepKind {
    LeftRegular,
    LeftRight,
    QuasiRegular(CosetSpace),
    Trivial,
    General,
}

/// U|j⟩ = phase[j]·|perm[j]⟩.
#[derive(Clone, Debug)]
struct Monomial<T: Real> {
    perm: Vec<usize>,
    phase: Vec<Complex<T>>,
}

impl<T: Real> Monomial<T> {
    fn detect(u: &Operator<T>) -> Option<Self> {
        let n = u.dim();
        let mut perm = vec![usize::MAX; n];
        let mut phase = vec![Complex::default(); n];
        let zero = Complex::default();
        for j in 0..n {
            for i in 0..n {
                let z = u.get(i, j);
                if z != zero {
                    if perm[j] != usize::MAX {
                        return None;
                    }
                    perm[j] = i;
                    phase[j] = z;
                }
            }
            if perm[j] == usize::MAX {
                return None;
            }
        }
        Some(Self { perm, phase })
    }

    fn conj_op(&self, a: &Operator<T>) -> Operator<T> {
        let n = a.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let (pj, cj) = (self.perm[j], self.phase[j].conj());
            for i in 0..n {
                m[(self.perm[i], pj)] = self.phase[i] * a.get(i, j) * cj;
            }
        }
        Operator::wrap(m)
    }

    fn conj_state(&self, a: &Operator<T>) -> Operator<T> {
        let n = a.dim();
        Operator::from_fn(n, |i, j| self.phase[i].conj() * a.get(self.perm[i], self.perm[j]) * self.phase[j])
    }
}

/// Ordinary unitary representation of a finite group.
#[derive(Clone, Debug)]
pub struct UnitaryRep<T: Real> {
    group: FiniteGroup,
    dim: usize,
    matrices: Vec<Operator<T>>,
    monomial: Vec<Option<Monomial<T>>>,
    kind: RepKind,
}

impl<T: Real> UnitaryRep<T> {
    /// Validates U(e)=I, unitarity and the homomorphism law within the default tolerance.
    pub fn new(group: &FiniteGroup, matrices: Vec<Operator<T>>) -> Result<Self> {
        Self::validated(group, matrices, RepKind::General)
    }

    fn validated(group: &FiniteGroup, matrices: Vec<Operator<T>>, kind: RepKind) -> Result<Self> {
        let n = group.order();
        if matrices.len() != n {
            return Err(QrfError::Construction(format!(
                "representation needs {n} matrices, got {}",
                matrices.len()
            )));
        }
        let dim = matrices[0].dim();
        for u in &matrices {
            dim_check("representation", dim, u.dim())?;
        }
        let tol = T::default_tol();
        let e = group.e();
        let de = matrices[e].max_abs_diff(&Operator::identity(dim));
        if de > tol {
            return Err(QrfError::Construction(format!("U(e) deviates from identity by {de:e}")));
        }
        for (g, u) in matrices.iter().enumerate() {
            if !u.is_unitary(tol) {
                return Err(QrfError::Construction(format!("U({g}) is not unitary")));
            }
        }
        for a in 0..n {
            for b in 0..n {
                let d = (&matrices[a] * &matrices[b]).max_abs_diff(&matrices[group.op(a, b)]);
                if d > tol {
                    return Err(QrfError::Construction(format!(
                        "homomorphism fails at ({a}, {b}): deviation {d:e}"
                    )));
                }
            }
        }
        Ok(Self::unchecked(group, matrices, kind))
    }

    fn unchecked(group: &FiniteGroup, matrices: Vec<Operator<T>>, kind: RepKind) -> Self {
        let dim = matrices.first().map_or(0, Operator::dim);
        let monomial = matrices.iter().map(Monomial::detect).collect();
        Self { group: group.clone(), dim, matrices, monomial, kind }
    }

    fn permutation(group: &FiniteGroup, dim: usize, image: impl Fn(usize, usize) -> usize, kind: RepKind) -> Self {
        let mats = (0..group.order())
            .map(|g| {
                let mut m = Operator::zeros(dim).into_matrix();
                for j in 0..dim {
                    m[(image(g, j), j)] = Complex::new(T::one(), T::zero());
                }
                Operator::wrap(m)
            })
            .collect();
        Self::unchecked(group, mats, kind)
    }

    /// U(g)|h⟩ = |gh⟩.
    pub fn left_regular(group: &FiniteGroup) -> Self {
        Self::permutation(group, group.order(), |g, h| group.op(g, h), RepKind::LeftRegular)
    }

    /// U(g)|h⟩ = |h g⁻¹⟩.
    pub fn left_right(group: &FiniteGroup) -> Self {
        Self::permutation(group, group.order(), |g, h| group.op(h, group.inverse_of(g)), RepKind::LeftRight)
    }

    /// U(g)|c⟩ = |g.c⟩ on ℓ²(G/H).
    pub fn quasi_regular(cosets: &CosetSpace) -> Self {
        Self::permutation(cosets.parent(), cosets.len(), |g, c| cosets.act(g, c), RepKind::QuasiRegular(cosets.clone()))
    }

    pub fn trivial(group: &FiniteGroup, dim: usize) -> Self {
        Self::unchecked(group, vec![Operator::identity(dim); group.order()], RepKind::Trivial)
    }

    /// Diagonal characters g^k ↦ diag(ω^{k·j}), j < dim, of a cyclic group with generator `gen`.
    pub fn cyclic_characters(group: &FiniteGroup, generator: usize, dim: usize) -> Result<Self> {
        let n = group.order();
        if group.element_order(generator) != n {
            return Err(QrfError::Argument(format!("element {generator} does not generate the group")));
        }
        let mut power = vec![0; n];
        let mut x = group.e();
        for k in 0..n {
            power[x] = k;
            x = group.op(x, generator);
        }
        let tau = T::two_pi();
        let mats = (0..n)
            .map(|g| {
                let d: Vec<Complex<T>> = (0..dim)
                    .map(|j| {
                        let theta = tau * from_usize::<T>((power[g] * j) % n) / from_usize::<T>(n);
                        Complex::new(theta.cos(), theta.sin())
                    })
                    .collect();
                Operator::from_fn(dim, |i, k| if i == k { d[i] } else { Complex::default() })
            })
            .collect();
        Ok(Self::unchecked(group, mats, RepKind::General))
    }

    /// U ⊗ V.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        self.same_group(other)?;
        let mats = self.matrices.iter().zip(&other.matrices).map(|(a, b)| a.kron(b)).collect();
        Ok(Self::unchecked(&self.group, mats, RepKind::General))
    }

    pub fn tensor_all(group: &FiniteGroup, reps: &[&Self]) -> Result<Self> {
        let mut acc = Self::trivial(group, 1);
        for r in reps {
            acc = acc.tensor(r)?;
        }
        Ok(acc)
    }

    /// U ⊕ V.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        self.same_group(other)?;
        let (a, b) = (self.dim, other.dim);
        let mats = self
            .matrices
            .iter()
            .zip(&other.matrices)
            .map(|(x, y)| {
                let mut m = Operator::zeros(a + b).into_matrix();
                m.view_mut((0, 0), (a, a)).copy_from(x.matrix());
                m.view_mut((a, a), (b, b)).copy_from(y.matrix());
                Operator::wrap(m)
            })
            .collect();
        Ok(Self::unchecked(&self.group, mats, RepKind::General))
    }

    fn same_group(&self, other: &Self) -> Result<()> {
        if self.group == other.group {
            Ok(())
        } else {
            Err(QrfError::Argument("representations of different groups".into()))
        }
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &RepKind {
        &self.kind
    }

    pub fn matrix(&self, g: usize) -> &Operator<T> {
        &self.matrices[g]
    }

    pub fn matrices(&self) -> &[Operator<T>] {
        &self.matrices
    }

    /// g.A = U(g) A U(g)*.
    pub fn act_op(&self, g: usize, a: &Operator<T>) -> Result<Operator<T>> {
        dim_check("g_act_op", self.dim, a.dim())?;
        self.group.element(g)?;
        Ok(self.act_op_unchecked(g, a))
    }

    /// g.ρ = U(g)* ρ U(g).
    pub fn act_state(&self, g: usize, rho: &Operator<T>) -> Result<Operator<T>> {
        dim_check("g_act_state", self.dim, rho.dim())?;
        self.group.element(g)?;
        Ok(self.act_state_unchecked(g, rho))
    }

    pub(crate) fn act_op_unchecked(&self, g: usize, a: &Operator<T>) -> Operator<T> {
        match &self.monomial[g] {
            Some(m) => m.conj_op(a),
            None => a.dagger_sandwich(&self.matrices[g]),
        }
    }

    pub(crate) fn act_state_unchecked(&self, g: usize, a: &Operator<T>) -> Operator<T> {
        match &self.monomial[g] {
            Some(m) => m.conj_state(a),
            None => a.dagger_sandwich(&self.matrices[g].adjoint()),
        }
    }

    /// max_g ‖g.A − A‖ (entrywise).
    pub fn invariance_deviation(&self, a: &Operator<T>) -> Result<T> {
        dim_check("invariance_deviation", self.dim, a.dim())?;
        Ok((0..self.group.order()).fold(T::zero(), |acc, g| acc.max(self.act_op_unchecked(g, a).max_abs_diff(a))))
    }

    /// (1/|G|) Σ_g |tr U(g)|², the dimension of the commutant.
    pub fn commutant_dim(&self) -> usize {
        let n = self.group.order();
        let s = self.matrices.iter().fold(T::zero(), |acc, u| acc + u.trace().norm_sqr());
        let v = (s / from_usize(n)).to_f64_lossy();
        v.round() as usize
    }

    /// Largest deviation of the character-sum rank estimate from an integer.
    pub fn commutant_dim_residual(&self) -> T {
        let n = self.group.order();
        let s = self.matrices.iter().fold(T::zero(), |acc, u| acc + u.trace().norm_sqr()) / from_usize(n);
        let r = T::lit(s.to_f64_lossy().round());
        crate::scalar::abs(s - r)
    }

    pub fn is_unitary_within(&self, tol: T) -> bool {
        self.matrices.iter().all(|u| u.is_unitary(tol))
    }

    /// max entrywise |U(g)U(h) − U(gh)|.
    pub fn homomorphism_deviation(&self) -> T {
        let n = self.group.order();
        let mut dev = T::zero();
        for a in 0..n {
            for b in 0..n {
                dev = dev.max((&self.matrices[a] * &self.matrices[b]).max_abs_diff(&self.matrices[self.group.op(a, b)]));
            }
        }
        dev
    }
}

/// A representation of the requested dimension used for system factors in test scenarios.
///
/// Cyclic groups get diagonal characters; `dim == |G|` gets the left-regular representation;
/// otherwise the permutation representation on G/H for the subgroup H generated by at most two
/// elements whose index is the largest one not exceeding `dim`, padded with trivial summands.
pub fn standard_system_rep<T: Real>(group: &FiniteGroup, dim: usize) -> Result<UnitaryRep<T>> {
    if dim == 0 {
        return Err(QrfError::Argument("system dimension must be positive".into()));
    }
    let n = group.order();
    if dim == n {
        return Ok(UnitaryRep::left_regular(group));
    }
    if let Some(gen) = (0..n).find(|&g| group.element_order(g) == n) {
        return UnitaryRep::cyclic_characters(group, gen, dim);
    }
    // the whole group (index 1) is always a candidate
    let mut best = (1, group.whole());
    for a in 0..n {
        for b in a..n {
            let sub = group.generated_subgroup(&[a, b]);
            let index = n / sub.order();
            if index <= dim && index > best.0 {
                best = (index, sub);
            }
        }
    }
    let (index, sub) = best;
    let q = UnitaryRep::quasi_regular(&CosetSpace::new(&sub));
    if index == dim {
        Ok(q)
    } else {
        q.direct_sum(&UnitaryRep::trivial(group, dim - index))
    }
}
