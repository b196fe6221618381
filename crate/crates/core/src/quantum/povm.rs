use nalgebra::DVector;
use num_complex::Complex;

use crate::error::{dim_check, QrfError, Result};
use crate::group::{CosetSpace, FiniteGroup};
use crate::operator::{sum_ops, Operator};
use crate::quantum::rep::{RepKind, UnitaryRep};
use crate::scalar::{cabs, Real};

/// Outcome set of a POVM.
#[derive(Clone, Debug, PartialEq)]
pub enum SampleSpace {
    /// The group itself, acted on by left multiplication.
    Group(FiniteGroup),
    /// Left cosets G/H.
    Cosets(CosetSpace),
    /// A bare finite set without group action.
    Points(usize),
}

impl SampleSpace {
    pub fn len(&self) -> usize {
        match self {
            Self::Group(g) => g.order(),
            Self::Cosets(c) => c.len(),
            Self::Points(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn group(&self) -> Option<&FiniteGroup> {
        match self {
            Self::Group(g) => Some(g),
            Self::Cosets(c) => Some(c.parent()),
            Self::Points(_) => None,
        }
    }

    pub fn is_principal(&self) -> bool {
        matches!(self, Self::Group(_))
    }

    /// g.x, or `None` for a bare point set.
    pub fn act(&self, g: usize, x: usize) -> Option<usize> {
        match self {
            Self::Group(grp) => Some(grp.op(g, x)),
            Self::Cosets(c) => Some(c.act(g, x)),
            Self::Points(_) => None,
        }
    }
}

/// Positive operator-valued measure on a finite sample space.
#[derive(Clone, Debug)]
pub struct Povm<T: Real> {
    space: SampleSpace,
    effects: Vec<Operator<T>>,
    dim: usize,
}

impl<T: Real> Povm<T> {
    /// Checks every effect and the normalization Σ E(x) = I within the default tolerance.
    pub fn new(space: SampleSpace, effects: Vec<Operator<T>>) -> Result<Self> {
        if effects.len() != space.len() {
            return Err(QrfError::Construction(format!(
                "POVM needs one effect per sample point: {} points, {} effects",
                space.len(),
                effects.len()
            )));
        }
        let dim = effects.first().map(Operator::dim).ok_or_else(|| QrfError::Construction("POVM has no effects".into()))?;
        let tol = T::default_tol();
        for (x, e) in effects.iter().enumerate() {
            dim_check("POVM", dim, e.dim())?;
            if !e.is_effect(tol) {
                return Err(QrfError::Construction(format!("POVM element {x} is not an effect")));
            }
        }
        let total = sum_ops(dim, effects.iter().cloned());
        let dev = total.max_abs_diff(&Operator::identity(dim));
        if dev > tol {
            return Err(QrfError::Construction(format!("POVM effects sum to I only within {dev:e}")));
        }
        Ok(Self { space, effects, dim })
    }

    pub(crate) fn unchecked(space: SampleSpace, effects: Vec<Operator<T>>, dim: usize) -> Self {
        Self { space, effects, dim }
    }

    pub fn space(&self) -> &SampleSpace {
        &self.space
    }

    pub fn effects(&self) -> &[Operator<T>] {
        &self.effects
    }

    pub fn effect(&self, x: usize) -> &Operator<T> {
        &self.effects[x]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// E(X) for a set of sample points.
    pub fn effect_of_set(&self, xs: &[usize]) -> Operator<T> {
        sum_ops(self.dim, xs.iter().map(|&x| self.effects[x].clone()))
    }
}

/// μ(x) = tr[ρ E(x)].
pub fn born<T: Real>(povm: &Povm<T>, rho: &Operator<T>) -> Result<Vec<T>> {
    dim_check("born", povm.dim(), rho.dim())?;
    Ok(povm.effects().iter().map(|e| rho.trace_product(e).re).collect())
}

/// max over (g, x) of |E(g.x) − U(g)E(x)U(g)*|, or `None` when the spaces do not carry the rep's group.
pub fn covariance_deviation<T: Real>(povm: &Povm<T>, rep: &UnitaryRep<T>) -> Option<T> {
    if povm.dim() != rep.dim() || povm.space().group() != Some(rep.group()) {
        return None;
    }
    let mut dev = T::zero();
    for g in 0..rep.group().order() {
        for x in 0..povm.len() {
            let gx = povm.space().act(g, x)?;
            dev = dev.max(povm.effect(gx).max_abs_diff(&rep.act_op_unchecked(g, povm.effect(x))));
        }
    }
    Some(dev)
}

pub fn is_covariant<T: Real>(povm: &Povm<T>, rep: &UnitaryRep<T>) -> bool {
    covariance_deviation(povm, rep).is_some_and(|d| d <= T::default_tol())
}

/// Sharp covariant POVM of a permutation representation: left-regular |g⟩⟨g|,
/// left-right |g⁻¹⟩⟨g⁻¹|, quasi-regular |c⟩⟨c|.
pub fn canonical_pvm<T: Real>(rep: &UnitaryRep<T>) -> Result<Povm<T>> {
    let g = rep.group();
    let n = rep.dim();
    let proj = |i: usize| Operator::unit(n, i, i);
    match rep.kind() {
        RepKind::LeftRegular => Ok(Povm::unchecked(SampleSpace::Group(g.clone()), (0..n).map(proj).collect(), n)),
        RepKind::LeftRight => Ok(Povm::unchecked(
            SampleSpace::Group(g.clone()),
            (0..n).map(|h| proj(g.inverse_of(h))).collect(),
            n,
        )),
        RepKind::QuasiRegular(cs) => Ok(Povm::unchecked(SampleSpace::Cosets(cs.clone()), (0..n).map(proj).collect(), n)),
        _ => Err(QrfError::Argument(
            "canonical_pvm needs a left-regular, left-right or quasi-regular representation".into(),
        )),
    }
}

/// Normalization constant and effects |φ(g)⟩⟨φ(g)|/λ of a coherent-state system φ(g) = U(g)φ.
pub fn coherent_state_povm<T: Real>(rep: &UnitaryRep<T>, seed: &DVector<Complex<T>>) -> Result<(Povm<T>, T)> {
    dim_check("coherent_state_povm", rep.dim(), seed.len())?;
    let d = rep.dim();
    let projectors: Vec<Operator<T>> =
        rep.matrices().iter().map(|u| Operator::projector(&(u.matrix() * seed))).collect();
    let s = sum_ops(d, projectors.iter().cloned());
    let lambda = s.trace().re / T::lit(d as f64);
    let residual = (&s - &Operator::identity(d).scale(lambda)).op_norm();
    let tol = T::default_tol();
    if residual > tol * lambda.max(T::one()) || lambda <= tol {
        return Err(QrfError::ResolutionOfIdentity { residual: residual.to_f64_lossy() });
    }
    let inv = T::one() / lambda;
    let effects = projectors.into_iter().map(|p| p.scale(inv)).collect();
    Ok((Povm::unchecked(SampleSpace::Group(rep.group().clone()), effects, d), lambda))
}

pub(crate) fn effects_close<T: Real>(a: &Operator<T>, b: &Operator<T>, tol: T) -> bool {
    a.matrix().iter().zip(b.matrix().iter()).all(|(&x, &y)| cabs(x - y) <= tol)
}
