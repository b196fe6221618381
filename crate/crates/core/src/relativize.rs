//! The relativization map ¥ and the constructions built from it.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{dim_check, QrfError, Result};
use crate::operator::{hermitian_basis, sum_ops, FactorShape, Operator};
use crate::opequiv::{framed_subspace, invariant_subspace, EffectContext};
use crate::quantum::{born, Frame, Povm, SampleSpace, UnitaryRep};
use crate::scalar::Real;

/// ¥^R for a principal frame R and a system representation.
#[derive(Clone, Copy, Debug)]
pub struct YenMap<'a, T: Real> {
    frame: &'a Frame<T>,
    system_rep: &'a UnitaryRep<T>,
}

impl<'a, T: Real> YenMap<'a, T> {
    pub fn new(frame: &'a Frame<T>, system_rep: &'a UnitaryRep<T>) -> Result<Self> {
        frame.require_principal("yen")?;
        if frame.rep().group() != system_rep.group() {
            return Err(QrfError::Argument("frame and system representations act by different groups".into()));
        }
        Ok(Self { frame, system_rep })
    }

    pub fn frame(&self) -> &Frame<T> {
        self.frame
    }

    pub fn system_rep(&self) -> &UnitaryRep<T> {
        self.system_rep
    }

    fn order(&self) -> usize {
        self.system_rep.group().order()
    }

    pub fn total_dim(&self) -> usize {
        self.frame.dim() * self.system_rep.dim()
    }

    /// Σ_g E_R(g) ⊗ g.A.
    pub fn apply(&self, a: &Operator<T>) -> Result<Operator<T>> {
        dim_check("yen", self.system_rep.dim(), a.dim())?;
        Ok(sum_ops(
            self.total_dim(),
            (0..self.order()).map(|g| self.frame.effect(g).kron(&self.system_rep.act_op_unchecked(g, a))),
        ))
    }

    /// Σ_g U_S(g)* tr_R[(E_R(g)⊗I)Ω] U_S(g).
    pub fn predual(&self, omega: &Operator<T>) -> Result<Operator<T>> {
        dim_check("yen_predual", self.total_dim(), omega.dim())?;
        let (dr, ds) = (self.frame.dim(), self.system_rep.dim());
        Ok(sum_ops(
            ds,
            (0..self.order()).map(|g| {
                let block = pair_first_factor(self.frame.effect(g), omega, dr, ds);
                self.system_rep.act_state_unchecked(g, &block)
            }),
        ))
    }

    /// ¥_ω(A) = Σ_g μ_ω(g) g.A.
    pub fn conditioned(&self, omega: &Operator<T>, a: &Operator<T>) -> Result<Operator<T>> {
        dim_check("conditioned_yen", self.system_rep.dim(), a.dim())?;
        let mu = born(self.frame.povm(), omega)?;
        Ok(weighted_orbit(a.dim(), &mu, |g| self.system_rep.act_op_unchecked(g, a)))
    }

    /// ρ^(ω) = Σ_g μ_ω(g) g.ρ.
    pub fn product_relative_state(&self, omega: &Operator<T>, rho: &Operator<T>) -> Result<Operator<T>> {
        dim_check("product_relative_state", self.system_rep.dim(), rho.dim())?;
        let mu = born(self.frame.povm(), omega)?;
        Ok(weighted_orbit(rho.dim(), &mu, |g| self.system_rep.act_state_unchecked(g, rho)))
    }

    /// Context spanned by ¥(B_k) over a Hermitian basis of the system.
    pub fn relative_context(&self) -> Result<EffectContext<T>> {
        let gens = hermitian_basis::<T>(self.system_rep.dim())
            .elements()
            .iter()
            .map(|b| self.apply(b))
            .collect::<Result<Vec<_>>>()?;
        EffectContext::new(self.total_dim(), gens)
    }

    /// Diagonal representation U_R ⊗ U_S.
    pub fn diagonal_rep(&self) -> Result<UnitaryRep<T>> {
        self.frame.rep().tensor(self.system_rep)
    }
}

fn weighted_orbit<T: Real>(dim: usize, mu: &[T], f: impl Fn(usize) -> Operator<T>) -> Operator<T> {
    let mut acc = Operator::zeros(dim);
    for (g, &w) in mu.iter().enumerate() {
        if w != T::zero() {
            acc.add_scaled(&f(g), w);
        }
    }
    acc
}

/// tr_R[(E⊗I)Ω] for Ω on R⊗S.
pub(crate) fn pair_first_factor<T: Real>(e: &Operator<T>, omega: &Operator<T>, dr: usize, ds: usize) -> Operator<T> {
    let mut m = DMatrix::<Complex<T>>::zeros(ds, ds);
    let zero = Complex::default();
    for a in 0..dr {
        for b in 0..dr {
            let w = e.get(b, a);
            if w == zero {
                continue;
            }
            for i in 0..ds {
                for j in 0..ds {
                    m[(i, j)] += w * omega.get(a * ds + i, b * ds + j);
                }
            }
        }
    }
    Operator::wrap(m)
}

pub fn yen<T: Real>(frame: &Frame<T>, system_rep: &UnitaryRep<T>, a: &Operator<T>) -> Result<Operator<T>> {
    YenMap::new(frame, system_rep)?.apply(a)
}

pub fn yen_predual<T: Real>(frame: &Frame<T>, system_rep: &UnitaryRep<T>, omega: &Operator<T>) -> Result<Operator<T>> {
    YenMap::new(frame, system_rep)?.predual(omega)
}

pub fn conditioned_yen<T: Real>(
    frame: &Frame<T>,
    system_rep: &UnitaryRep<T>,
    omega: &Operator<T>,
    a: &Operator<T>,
) -> Result<Operator<T>> {
    YenMap::new(frame, system_rep)?.conditioned(omega, a)
}

pub fn product_relative_state<T: Real>(
    frame: &Frame<T>,
    system_rep: &UnitaryRep<T>,
    omega: &Operator<T>,
    rho: &Operator<T>,
) -> Result<Operator<T>> {
    YenMap::new(frame, system_rep)?.product_relative_state(omega, rho)
}

pub fn relative_context<T: Real>(frame: &Frame<T>, system_rep: &UnitaryRep<T>) -> Result<EffectContext<T>> {
    YenMap::new(frame, system_rep)?.relative_context()
}

/// E_S * E_R: the pointwise relativization of a system POVM.
pub fn convolve<T: Real>(e_s: &Povm<T>, frame: &Frame<T>, system_rep: &UnitaryRep<T>) -> Result<Povm<T>> {
    let y = YenMap::new(frame, system_rep)?;
    let effects = e_s.effects().iter().map(|e| y.apply(e)).collect::<Result<Vec<_>>>()?;
    Ok(Povm::unchecked(e_s.space().clone(), effects, y.total_dim()))
}

/// Choi matrix Σ_{ij} |i⟩⟨j| ⊗ ¥(|i⟩⟨j|); positive semidefinite iff ¥ is completely positive.
pub fn yen_choi<T: Real>(frame: &Frame<T>, system_rep: &UnitaryRep<T>) -> Result<Operator<T>> {
    let y = YenMap::new(frame, system_rep)?;
    let d = system_rep.dim();
    let mut terms = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            terms.push(Operator::unit(d, i, j).kron(&y.apply(&Operator::unit(d, i, j))?));
        }
    }
    Ok(sum_ops(d * y.total_dim(), terms))
}

/// E_2 * E_1 = Σ_g E_1(g) ⊗ g.E_2(·) on H_1⊗H_2.
pub fn relative_orientation<T: Real>(frame1: &Frame<T>, frame2: &Frame<T>) -> Result<Povm<T>> {
    if frame1.rep().group() != frame2.rep().group() {
        return Err(QrfError::Argument("relative orientation needs frames of the same group".into()));
    }
    frame2.require_principal("relative_orientation")?;
    convolve(frame2.povm(), frame1, frame2.rep())
}

/// Γ_ω(A) = tr_R[(ω⊗I)A].
pub fn restrict<T: Real>(omega: &Operator<T>, a: &Operator<T>) -> Result<Operator<T>> {
    let dr = omega.dim();
    if dr == 0 || !a.dim().is_multiple_of(dr) {
        return Err(QrfError::Argument(format!(
            "restrict: operator dimension {} is not a multiple of the frame dimension {dr}",
            a.dim()
        )));
    }
    Ok(pair_first_factor(omega, a, dr, a.dim() / dr))
}

/// ¥(Γ_ω(A)).
pub fn relativized_restriction<T: Real>(
    frame: &Frame<T>,
    system_rep: &UnitaryRep<T>,
    omega: &Operator<T>,
    a: &Operator<T>,
) -> Result<Operator<T>> {
    yen(frame, system_rep, &restrict(omega, a)?)
}

/// Largest ‖h.A − A‖ over the isotropy-side subgroup H of a coset frame.
fn h_variance<T: Real>(frame: &Frame<T>, system_rep: &UnitaryRep<T>, a: &Operator<T>) -> T {
    let members: &[usize] = match frame.povm().space() {
        SampleSpace::Cosets(cs) => cs.subgroup().members(),
        _ => &[],
    };
    members.iter().fold(T::zero(), |acc, &h| acc.max(system_rep.act_op_unchecked(h, a).max_abs_diff(a)))
}

/// Σ_{gH} E(gH) ⊗ gH.A for H-invariant A, with the coset representatives supplied.
pub fn yen_homogeneous_with_reps<T: Real>(
    frame: &Frame<T>,
    system_rep: &UnitaryRep<T>,
    a: &Operator<T>,
    reps: &[usize],
) -> Result<Operator<T>> {
    let cs = match frame.povm().space() {
        SampleSpace::Cosets(cs) => cs,
        SampleSpace::Group(_) => return yen(frame, system_rep, a),
        SampleSpace::Points(_) => {
            return Err(QrfError::UnsupportedFrame("yen_homogeneous needs a coset sample space".into()))
        }
    };
    if cs.parent() != system_rep.group() {
        return Err(QrfError::Argument("frame and system representations act by different groups".into()));
    }
    dim_check("yen_homogeneous", system_rep.dim(), a.dim())?;
    if reps.len() != cs.len() || reps.iter().enumerate().any(|(c, &g)| g >= cs.parent().order() || cs.coset_of(g) != c) {
        return Err(QrfError::Argument("coset representatives do not match the coset space".into()));
    }
    let var = h_variance(frame, system_rep, a);
    if var > T::default_tol() {
        return Err(QrfError::Precondition(format!(
            "system operator is not invariant under the subgroup: max ‖h.A − A‖ = {var:e}"
        )));
    }
    Ok(sum_ops(
        frame.dim() * system_rep.dim(),
        (0..cs.len()).map(|c| frame.effect(c).kron(&system_rep.act_op_unchecked(reps[c], a))),
    ))
}

pub fn yen_homogeneous<T: Real>(frame: &Frame<T>, system_rep: &UnitaryRep<T>, a: &Operator<T>) -> Result<Operator<T>> {
    let reps = match frame.povm().space() {
        SampleSpace::Cosets(cs) => cs.reps().to_vec(),
        _ => (0..system_rep.group().order()).collect(),
    };
    yen_homogeneous_with_reps(frame, system_rep, a, &reps)
}

/// Comparison of the homogeneous relative span with the relational (framed ∩ invariant) span.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomogeneousSpanReport {
    pub relative_rank: usize,
    pub relational_rank: usize,
    /// Mutual projector residual between the two spans.
    pub residual: f64,
    pub equal: bool,
}

pub fn homogeneous_exhaustiveness<T: Real>(frame: &Frame<T>, system_rep: &UnitaryRep<T>) -> Result<HomogeneousSpanReport> {
    let members: Vec<usize> = match frame.povm().space() {
        SampleSpace::Cosets(cs) => cs.subgroup().members().to_vec(),
        _ => vec![system_rep.group().e()],
    };
    let ds = system_rep.dim();
    let h_mats: Vec<Operator<T>> = members.iter().map(|&h| system_rep.matrix(h).clone()).collect();
    let h_rep = SubgroupAction { mats: h_mats };
    let sys_basis = h_rep.invariant_basis(ds);
    let gens = sys_basis
        .iter()
        .map(|b| yen_homogeneous(frame, system_rep, b))
        .collect::<Result<Vec<_>>>()?;
    let total = frame.dim() * ds;
    let relative = EffectContext::new(total, gens)?;
    let diag = frame.rep().tensor(system_rep)?;
    let relational = framed_subspace(frame, ds)?.intersect(&invariant_subspace(&diag))?;
    let residual = relative.mutual_residual(&relational)?.to_f64_lossy();
    let equal = relative.rank() == relational.rank() && residual <= T::rank_rtol().to_f64_lossy().max(1e-9);
    Ok(HomogeneousSpanReport { relative_rank: relative.rank(), relational_rank: relational.rank(), residual, equal })
}

struct SubgroupAction<T: Real> {
    mats: Vec<Operator<T>>,
}

impl<T: Real> SubgroupAction<T> {
    fn average(&self, a: &Operator<T>) -> Operator<T> {
        let n = T::lit(self.mats.len() as f64);
        sum_ops(a.dim(), self.mats.iter().map(|u| a.dagger_sandwich(u))).scale(T::one() / n)
    }

    fn invariant_basis(&self, dim: usize) -> Vec<Operator<T>> {
        let gens = hermitian_basis::<T>(dim).elements().iter().map(|b| self.average(b)).collect();
        EffectContext::new(dim, gens).expect("averages are Hermitian").span_basis()
    }
}

/// Shape [d_R, d_S] of a frame-system pair.
pub fn pair_shape<T: Real>(frame: &Frame<T>, system_rep: &UnitaryRep<T>) -> FactorShape {
    FactorShape::new(vec![frame.dim(), system_rep.dim()])
}
