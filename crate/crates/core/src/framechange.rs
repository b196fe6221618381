//! Multi-frame scenarios: lifting, framed relative states, localized frame changes,
//! the coherent comparison map and triangular reconstruction.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{dim_check, QrfError, Result};
use crate::group::FiniteGroup;
use crate::operator::{hermitian_basis, sum_ops, FactorShape, Operator};
use crate::opequiv::{invariant_subspace, EffectContext, OperationalState};
use crate::quantum::{born, localizing_state, Frame, Povm, UnitaryRep};
use crate::relativize::{pair_first_factor, product_relative_state, relative_orientation, yen_predual};
use crate::scalar::Real;

/// Largest total Hilbert-space dimension a scenario may have.
pub const MAX_TOTAL_DIM: usize = 1024;

type ContextKey = (usize, Vec<usize>);

/// Frames R_1..R_N and a system S on H_1⊗…⊗H_N⊗H_S.
///
/// Factor `i < N` is frame `i`; factor `N` is the system. Frame indices are zero-based.
#[derive(Debug)]
pub struct MultiFrameScenario<T: Real> {
    group: FiniteGroup,
    frames: Vec<Frame<T>>,
    system_rep: UnitaryRep<T>,
    shape: FactorShape,
    diagonal_rep: OnceLock<UnitaryRep<T>>,
    complement_reps: Vec<OnceLock<UnitaryRep<T>>>,
    invariant: OnceLock<Arc<EffectContext<T>>>,
    contexts: Mutex<HashMap<ContextKey, Arc<EffectContext<T>>>>,
}

/// Relative state of reference frame `reference`, compared on effects framed by `framed`.
#[derive(Clone, Debug)]
pub struct FramedRelativeState<T: Real> {
    reference: usize,
    framed: Vec<usize>,
    state: OperationalState<T>,
}

impl<T: Real> FramedRelativeState<T> {
    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn framed(&self) -> &[usize] {
        &self.framed
    }

    pub fn state(&self) -> &OperationalState<T> {
        &self.state
    }

    pub fn representative(&self) -> &Operator<T> {
        self.state.representative()
    }

    pub fn context(&self) -> &Arc<EffectContext<T>> {
        self.state.context()
    }
}

/// Comparison of the operational frame change with the coherent map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgreementReport<T> {
    /// Agreement up to the target framed-relative equivalence.
    pub agree: bool,
    /// Largest pairing deviation over the target context.
    pub max_deviation: T,
    /// Entrywise deviation between the operational output and the Lüders mixture of the coherent output.
    pub luders_deviation: T,
}

impl<T: Real> MultiFrameScenario<T> {
    pub fn new(frames: Vec<Frame<T>>, system_rep: UnitaryRep<T>) -> Result<Self> {
        if frames.is_empty() {
            return Err(QrfError::Argument("scenario needs at least one frame".into()));
        }
        let group = system_rep.group().clone();
        for (i, f) in frames.iter().enumerate() {
            if f.rep().group() != &group {
                return Err(QrfError::Argument(format!("frame {i} acts by a different group than the system")));
            }
            if !f.flags().principal {
                return Err(QrfError::UnsupportedFrame(format!("frame {i} is not principal")));
            }
        }
        let mut dims: Vec<usize> = frames.iter().map(Frame::dim).collect();
        dims.push(system_rep.dim());
        let shape = FactorShape::new(dims);
        if shape.total() > MAX_TOTAL_DIM {
            return Err(QrfError::Argument(format!(
                "scenario dimension {} exceeds the cap of {MAX_TOTAL_DIM}",
                shape.total()
            )));
        }
        let n = frames.len();
        Ok(Self {
            group,
            frames,
            system_rep,
            shape,
            diagonal_rep: OnceLock::new(),
            complement_reps: (0..n).map(|_| OnceLock::new()).collect(),
            invariant: OnceLock::new(),
            contexts: Mutex::new(HashMap::new()),
        })
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn frames(&self) -> &[Frame<T>] {
        &self.frames
    }

    pub fn frame(&self, i: usize) -> &Frame<T> {
        &self.frames[i]
    }

    pub fn system_rep(&self) -> &UnitaryRep<T> {
        &self.system_rep
    }

    pub fn shape(&self) -> &FactorShape {
        &self.shape
    }

    pub fn total_dim(&self) -> usize {
        self.shape.total()
    }

    fn factor_rep(&self, f: usize) -> &UnitaryRep<T> {
        if f < self.frames.len() {
            self.frames[f].rep()
        } else {
            &self.system_rep
        }
    }

    fn check_frame(&self, j: usize) -> Result<()> {
        if j < self.frames.len() {
            Ok(())
        } else {
            Err(QrfError::Argument(format!("frame index {j} out of range for {} frames", self.frames.len())))
        }
    }

    /// U_T = U_1 ⊗ … ⊗ U_N ⊗ U_S.
    pub fn diagonal_rep(&self) -> &UnitaryRep<T> {
        self.diagonal_rep.get_or_init(|| {
            let reps: Vec<&UnitaryRep<T>> = (0..self.shape.len()).map(|f| self.factor_rep(f)).collect();
            UnitaryRep::tensor_all(&self.group, &reps).expect("same group checked at construction")
        })
    }

    /// Factor indices of the complement of frame `j`, in order.
    pub fn complement_factors(&self, j: usize) -> Vec<usize> {
        (0..self.shape.len()).filter(|&f| f != j).collect()
    }

    pub fn complement_shape(&self, j: usize) -> FactorShape {
        self.shape.without(j)
    }

    /// Product representation on the complement of frame `j`.
    pub fn complement_rep(&self, j: usize) -> &UnitaryRep<T> {
        self.complement_reps[j].get_or_init(|| {
            let reps: Vec<&UnitaryRep<T>> = self.complement_factors(j).into_iter().map(|f| self.factor_rep(f)).collect();
            UnitaryRep::tensor_all(&self.group, &reps).expect("same group checked at construction")
        })
    }

    /// ¥^{R_j}(A) for A on the complement of frame `j`.
    pub fn yen(&self, j: usize, a: &Operator<T>) -> Result<Operator<T>> {
        self.check_frame(j)?;
        let rep = self.complement_rep(j);
        dim_check("yen", rep.dim(), a.dim())?;
        let frame = &self.frames[j];
        let terms = (0..self.group.order()).map(|g| frame.effect(g).kron(&rep.act_op_unchecked(g, a)));
        let joint = sum_ops(self.total_dim(), terms);
        self.restore_frame_order(j, &joint)
    }

    /// ¥^{R_j}_*(Ω) for Ω on the total space.
    pub fn yen_predual(&self, j: usize, omega: &Operator<T>) -> Result<Operator<T>> {
        self.check_frame(j)?;
        dim_check("yen_predual", self.total_dim(), omega.dim())?;
        let first = self.to_frame_first(j, omega)?;
        let rep = self.complement_rep(j);
        let (dr, ds) = (self.frames[j].dim(), rep.dim());
        Ok(sum_ops(
            ds,
            (0..self.group.order()).map(|g| {
                let block = pair_first_factor(self.frames[j].effect(g), &first, dr, ds);
                rep.act_state_unchecked(g, &block)
            }),
        ))
    }

    fn frame_first_perm(&self, j: usize) -> Vec<usize> {
        let mut p = vec![j];
        p.extend(self.complement_factors(j));
        p
    }

    fn to_frame_first(&self, j: usize, a: &Operator<T>) -> Result<Operator<T>> {
        if j == 0 {
            return Ok(a.clone());
        }
        a.permute_factors(&self.shape, &self.frame_first_perm(j))
    }

    fn restore_frame_order(&self, j: usize, a: &Operator<T>) -> Result<Operator<T>> {
        if j == 0 {
            return Ok(a.clone());
        }
        let p = self.frame_first_perm(j);
        let src = self.shape.permuted(&p);
        let inv: Vec<usize> = (0..p.len()).map(|f| p.iter().position(|&x| x == f).expect("permutation")).collect();
        a.permute_factors(&src, &inv)
    }

    /// Context of invariant effects on the total space.
    pub fn invariant_context(&self) -> Arc<EffectContext<T>> {
        self.invariant.get_or_init(|| Arc::new(invariant_subspace(self.diagonal_rep()))).clone()
    }

    /// L_ω: Ω_rel ↦ [ω ⊗ Ω_rel]_G with ω placed on frame `j`.
    pub fn lift(&self, j: usize, omega: &Operator<T>, rel: &Operator<T>) -> Result<OperationalState<T>> {
        self.check_frame(j)?;
        let rep = Operator::embed(omega, j, rel, &self.shape)?;
        OperationalState::new(rep, self.invariant_context())
    }

    /// Context on the complement of frame `j` spanned by ⊗_{k∈framed} E_k(x_k) ⊗ B_m.
    pub fn relative_context(&self, j: usize, framed: &[usize]) -> Result<Arc<EffectContext<T>>> {
        self.check_frame(j)?;
        let mut key_framed = framed.to_vec();
        key_framed.sort_unstable();
        key_framed.dedup();
        for &k in &key_framed {
            self.check_frame(k)?;
            if k == j {
                return Err(QrfError::Argument(format!("frame {j} cannot be framed relative to itself")));
            }
        }
        let key = (j, key_framed.clone());
        if let Some(c) = self.contexts.lock().expect("context cache").get(&key) {
            return Ok(c.clone());
        }
        let comp = self.complement_factors(j);
        let factors = key_framed
            .iter()
            .map(|&k| (comp.iter().position(|&c| c == k).expect("framed frame in complement"), self.frames[k].povm().effects().to_vec()))
            .collect();
        let ctx = Arc::new(EffectContext::product(&self.complement_shape(j), factors)?);
        self.contexts.lock().expect("context cache").insert(key, ctx.clone());
        Ok(ctx)
    }

    fn relative_generators(&self, j: usize, framed: &[usize]) -> Result<Vec<Operator<T>>> {
        let comp = self.complement_factors(j);
        let rest: Vec<usize> = comp.iter().copied().filter(|f| !framed.contains(f)).collect();
        let mut src: Vec<usize> = framed.to_vec();
        src.extend(&rest);
        let src_shape = FactorShape::new(src.iter().map(|&f| self.shape.dims()[f]).collect());
        let perm: Vec<usize> = comp.iter().map(|c| src.iter().position(|s| s == c).expect("factor present")).collect();
        let rest_dim: usize = rest.iter().map(|&f| self.shape.dims()[f]).product();
        let hb = hermitian_basis::<T>(rest_dim);
        let n = self.group.order();
        let mut gens = Vec::new();
        let mut idx = vec![0usize; framed.len()];
        loop {
            let effects: Vec<&Operator<T>> = framed.iter().zip(&idx).map(|(&k, &x)| self.frames[k].effect(x)).collect();
            let prefix = Operator::kron_all(&effects);
            for b in hb.elements() {
                gens.push(prefix.kron(b).permute_factors(&src_shape, &perm)?);
            }
            let mut carry = 0;
            while carry < idx.len() {
                idx[carry] += 1;
                if idx[carry] < n {
                    break;
                }
                idx[carry] = 0;
                carry += 1;
            }
            if carry == idx.len() {
                break;
            }
        }
        Ok(gens)
    }

    /// Context over the total space spanned by ¥^{R_j}(E_k(x) ⊗ B_m).
    pub fn framed_relative_context(&self, j: usize, k: usize) -> Result<EffectContext<T>> {
        self.relative_context(j, &[k])?;
        let gens = self
            .relative_generators(j, &[k])?
            .iter()
            .map(|g| self.yen(j, g))
            .collect::<Result<Vec<_>>>()?;
        EffectContext::new(self.total_dim(), gens)
    }

    /// Wraps a representative on the complement of `reference` as a framed relative state.
    pub fn framed_relative_state(
        &self,
        reference: usize,
        framed: &[usize],
        representative: Operator<T>,
    ) -> Result<FramedRelativeState<T>> {
        let ctx = self.relative_context(reference, framed)?;
        let mut f = framed.to_vec();
        f.sort_unstable();
        f.dedup();
        Ok(FramedRelativeState { reference, framed: f, state: OperationalState::new(representative, ctx)? })
    }

    /// π_{E_framed} ∘ ¥^{R_j}_*(Ω).
    pub fn relative_state(&self, j: usize, framed: &[usize], omega: &Operator<T>) -> Result<FramedRelativeState<T>> {
        let raw = self.yen_predual(j, omega)?;
        let ctx = self.relative_context(j, framed)?;
        let rep = ctx.canonical_repr(&raw)?;
        self.framed_relative_state(j, framed, rep)
    }

    /// ¥^{R_to}_* ∘ L_{ω_e} without the final projection.
    pub fn frame_change_raw(&self, from: usize, to: usize, rel: &Operator<T>) -> Result<Operator<T>> {
        self.check_frame(from)?;
        self.check_frame(to)?;
        if from == to {
            return Err(QrfError::Argument("frame change needs distinct frames".into()));
        }
        let source = &self.frames[from];
        source.require_localizable("frame_change")?;
        let omega = localizing_state(source, self.group.e())?;
        let global = Operator::embed(&omega, from, rel, &self.shape)?;
        self.yen_predual(to, &global)
    }

    /// Φ_{from→to}: lift through the localized source frame, relativize to the target, project with π_{E_from}.
    pub fn frame_change(&self, from: usize, to: usize, input: &FramedRelativeState<T>) -> Result<FramedRelativeState<T>> {
        if input.reference != from || !input.framed.contains(&to) {
            return Err(QrfError::Argument(format!(
                "frame change {from}→{to} needs a state relative to frame {from} framed by frame {to}"
            )));
        }
        let raw = self.frame_change_raw(from, to, input.representative())?;
        let ctx = self.relative_context(to, &[from])?;
        let rep = ctx.canonical_repr(&raw)?;
        self.framed_relative_state(to, &[from], rep)
    }

    /// Largest pairing deviation between π_{E_mid}∘Φ_{from→to} and Φ_{mid→to}∘Φ_{from→mid}
    /// over effects framed by `from` and `mid` on the complement of `to`.
    pub fn compose_check(&self, from: usize, mid: usize, to: usize, rel: &Operator<T>) -> Result<T> {
        if from == mid || mid == to || from == to {
            return Err(QrfError::Argument("composition needs three distinct frames".into()));
        }
        self.frames[mid].require_localizable("compose_check")?;
        let input = self.framed_relative_state(from, &[mid, to], rel.clone())?;
        let direct = self.frame_change(from, to, &input)?;
        let target = self.relative_context(to, &[from, mid])?;
        let lhs = target.canonical_repr(direct.representative())?;

        let step = self.frame_change(from, mid, &input)?;
        let step = self.framed_relative_state(mid, &[from, to], step.representative().clone())?;
        let rhs = self.frame_change(mid, to, &step)?;
        target.pairing_deviation(&lhs, rhs.representative())
    }

    /// Coherent comparison map from the complement of `from` to the complement of `to`:
    /// λ^{-1/2} Σ_g |φ_from(g⁻¹)⟩⟨ψ_to(g)| ⊗ U_rest(g)*, where φ and ψ are the localized
    /// (respectively coherent) vectors U(g)·ξ of the two frames.
    pub fn coherent_map(&self, from: usize, to: usize) -> Result<DMatrix<Complex<T>>> {
        self.check_frame(from)?;
        self.check_frame(to)?;
        if from == to {
            return Err(QrfError::Argument("coherent map needs distinct frames".into()));
        }
        let (f1, f2) = (&self.frames[from], &self.frames[to]);
        if !f1.flags().ideal || f1.dim() != self.group.order() {
            return Err(QrfError::UnsupportedFrame("coherent comparison needs an ideal source frame with rank-one effects".into()));
        }
        let (seed2, lambda) = if let Some((seed, lambda)) = f2.coherent_seed() {
            (seed.clone(), *lambda)
        } else if f2.flags().ideal && f2.dim() == self.group.order() {
            (localizing_vector(f2)?, T::one())
        } else {
            return Err(QrfError::UnsupportedFrame("coherent comparison needs an ideal or coherent target frame".into()));
        };
        let seed1 = localizing_vector(f1)?;
        let rest: Vec<usize> = (0..self.shape.len()).filter(|&f| f != from && f != to).collect();
        let rest_reps: Vec<&UnitaryRep<T>> = rest.iter().map(|&f| self.factor_rep(f)).collect();
        let rest_rep = UnitaryRep::tensor_all(&self.group, &rest_reps)?;
        let (d1, d2, dr) = (f1.dim(), f2.dim(), rest_rep.dim());

        let scale = T::one() / lambda.sqrt();
        let mut v0 = DMatrix::<Complex<T>>::zeros(d1 * dr, d2 * dr);
        for g in 0..self.group.order() {
            let phi = f1.rep().matrix(self.group.inverse_of(g)).matrix() * &seed1;
            let psi = f2.rep().matrix(g).matrix() * &seed2;
            let outer = &phi * psi.adjoint();
            let block = outer.kronecker(&rest_rep.matrix(g).adjoint().into_matrix());
            v0 += block.map(|z| z * scale);
        }

        // reorder: input layout comp(from) → [to, rest], output layout [from, rest] → comp(to)
        let comp_from = self.complement_factors(from);
        let comp_to = self.complement_factors(to);
        let in_perm: Vec<usize> =
            std::iter::once(to).chain(rest.iter().copied()).map(|f| comp_from.iter().position(|&c| c == f).expect("in complement")).collect();
        let out_perm: Vec<usize> =
            std::iter::once(from).chain(rest.iter().copied()).map(|f| comp_to.iter().position(|&c| c == f).expect("in complement")).collect();
        let in_map = self.complement_shape(from).permutation_map(&in_perm)?;
        let out_map = self.complement_shape(to).permutation_map(&out_perm)?;
        let v = DMatrix::from_fn(out_map.len(), in_map.len(), |i, j| v0[(out_map[i], in_map[j])]);
        Ok(v)
    }

    /// V X V† for the coherent map V.
    pub fn coherent_change(&self, from: usize, to: usize, rel: &Operator<T>) -> Result<Operator<T>> {
        let v = self.coherent_map(from, to)?;
        dim_check("coherent_change", v.ncols(), rel.dim())?;
        Ok(Operator::wrap(&v * rel.matrix() * v.adjoint()))
    }

    /// Compares Φ_{from→to} with π_{E_from}(V · V†) and with the Lüders mixture of V · V†.
    pub fn operational_agreement(&self, from: usize, to: usize, rel: &Operator<T>, tol: T) -> Result<AgreementReport<T>> {
        let raw = self.frame_change_raw(from, to, rel)?;
        let coherent = self.coherent_change(from, to, rel)?;
        let ctx = self.relative_context(to, &[from])?;
        let max_deviation = ctx.pairing_deviation(&raw, &coherent)?;
        let luders = self.luders_mixture(to, from, &coherent)?;
        let luders_deviation = raw.max_abs_diff(&luders);
        Ok(AgreementReport { agree: max_deviation <= tol, max_deviation, luders_deviation })
    }

    /// Σ_x (E_k(x) ⊗ I) X (E_k(x) ⊗ I) on the complement of frame `j`.
    pub fn luders_mixture(&self, j: usize, k: usize, x: &Operator<T>) -> Result<Operator<T>> {
        self.check_frame(j)?;
        self.check_frame(k)?;
        let comp = self.complement_shape(j);
        dim_check("luders_mixture", comp.total(), x.dim())?;
        let pos = self.complement_factors(j).iter().position(|&f| f == k).ok_or_else(|| {
            QrfError::Argument(format!("frame {k} is not in the complement of frame {j}"))
        })?;
        let rest = Operator::identity(comp.total() / self.frames[k].dim());
        let terms = self.frames[k]
            .povm()
            .effects()
            .iter()
            .map(|e| {
                let p = Operator::embed(e, pos, &rest, &comp)?;
                Ok(&(&p * x) * &p)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(sum_ops(comp.total(), terms))
    }
}

fn localizing_vector<T: Real>(frame: &Frame<T>) -> Result<nalgebra::DVector<Complex<T>>> {
    let e = frame.rep().group().e();
    let rho = localizing_state(frame, e)?;
    let (_, vecs) = rho.eigh();
    let n = rho.dim();
    // basis vector if the state is a diagonal projector
    if rho.is_exactly_diagonal() {
        let i = (0..n).find(|&i| rho.get(i, i).re > T::lit(0.5)).expect("pure diagonal state");
        return Ok(Operator::basis_ket(n, i));
    }
    Ok(vecs.column(n - 1).into_owned())
}

/// Σ_{g} |g⁻¹⟩⟨g| ⊗ U_S(g) for two left-right ideal frames on ℓ²(G).
pub fn coherent_frame_change_unitary<T: Real>(system_rep: &UnitaryRep<T>) -> Operator<T> {
    let g = system_rep.group();
    let n = g.order();
    let terms = (0..n).map(|x| Operator::unit(n, g.inverse_of(x), x).kron(system_rep.matrix(x)));
    sum_ops(n * system_rep.dim(), terms)
}

/// Σ_h μ(h)·h.ρ with μ the Born distribution of E_2*E_1 in Ω.
pub fn triangular_reconstruction<T: Real>(
    frame1: &Frame<T>,
    frame2: &Frame<T>,
    system_rep: &UnitaryRep<T>,
    rho_rel1: &Operator<T>,
    omega: &Operator<T>,
) -> Result<Operator<T>> {
    if frame1.rep().group() != system_rep.group() {
        return Err(QrfError::Argument("frames and system act by different groups".into()));
    }
    triangular_reconstruction_with(&relative_orientation(frame1, frame2)?, system_rep, rho_rel1, omega)
}

/// [`triangular_reconstruction`] with a precomputed relative-orientation observable E_2*E_1.
pub fn triangular_reconstruction_with<T: Real>(
    e21: &Povm<T>,
    system_rep: &UnitaryRep<T>,
    rho_rel1: &Operator<T>,
    omega: &Operator<T>,
) -> Result<Operator<T>> {
    dim_check("triangular_reconstruction", system_rep.dim(), rho_rel1.dim())?;
    if e21.len() != system_rep.group().order() {
        return Err(QrfError::Argument("relative-orientation observable must have one outcome per group element".into()));
    }
    let mu = born(e21, omega)?;
    let mut acc = Operator::zeros(rho_rel1.dim());
    for (h, &w) in mu.iter().enumerate() {
        acc.add_scaled(&system_rep.act_state_unchecked(h, rho_rel1), w);
    }
    Ok(acc)
}

/// ¥^{R_2}_*(Ω^{R_1} ⊗ ρ^{R_1}), the product form of the reconstruction.
pub fn reconstruction_product_form<T: Real>(
    frame1: &Frame<T>,
    frame2: &Frame<T>,
    system_rep: &UnitaryRep<T>,
    rho_rel1: &Operator<T>,
    omega: &Operator<T>,
) -> Result<Operator<T>> {
    let omega_rel1 = yen_predual(frame1, frame2.rep(), omega)?;
    product_relative_state(frame2, system_rep, &omega_rel1, rho_rel1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{cyclic_group, symmetric_group};
    use crate::random;

    type Op = Operator<f64>;
    type Rep = UnitaryRep<f64>;

    fn lr_scenario(g: &FiniteGroup, frames: usize, sys: Rep) -> MultiFrameScenario<f64> {
        let f = Frame::canonical(&Rep::left_right(g)).unwrap();
        MultiFrameScenario::new(vec![f; frames], sys).unwrap()
    }

    #[test]
    fn ket_transformation_exact() {
        let s3 = symmetric_group(3).unwrap();
        let sc = lr_scenario(&s3, 3, Rep::trivial(&s3, 1));
        for h2 in 0..6 {
            for h3 in 0..6 {
                let input = Op::unit(6, h2, h2).kron(&Op::unit(6, h3, h3));
                let out = sc.frame_change_raw(0, 1, &input).unwrap();
                let a = s3.inverse_of(h2);
                let b = s3.op(h3, a);
                assert_eq!(out, Op::unit(6, a, a).kron(&Op::unit(6, b, b)));
            }
        }
    }

    #[test]
    fn coherent_map_matches_closed_form() {
        let s3 = symmetric_group(3).unwrap();
        let sys = crate::quantum::standard_system_rep::<f64>(&s3, 2).unwrap();
        let sc = lr_scenario(&s3, 2, sys.clone());
        let v = Operator::from_matrix(sc.coherent_map(0, 1).unwrap()).unwrap();
        let u = coherent_frame_change_unitary(&sys);
        assert!(v.max_abs_diff(&u) < 1e-15);
        assert!(u.is_unitary(1e-12));
    }

    #[test]
    fn scenario_cap() {
        let s4 = symmetric_group(4).unwrap();
        let f = Frame::canonical(&Rep::left_regular(&s4)).unwrap();
        assert!(MultiFrameScenario::new(vec![f.clone(); 2], Rep::trivial(&s4, 2)).is_err());
        assert!(MultiFrameScenario::new(vec![f; 2], Rep::trivial(&s4, 1)).is_ok());
    }

    #[test]
    fn lift_left_inverse() {
        let z3 = cyclic_group(3).unwrap();
        let sys = crate::quantum::standard_system_rep::<f64>(&z3, 2).unwrap();
        let sc = lr_scenario(&z3, 2, sys);
        let omega = localizing_state(sc.frame(0), z3.e()).unwrap();
        let mut r = random::rng(1);
        let rel = random::state::<f64, _>(&mut r, 6);
        let lifted = sc.lift(0, &omega, &rel).unwrap();
        let back = sc.yen_predual(0, lifted.representative()).unwrap();
        assert!(back.max_abs_diff(&rel) < 1e-15);
        assert!(lifted.representative().is_density(1e-12));
    }

    #[test]
    fn diagram_inverse_and_kernel() {
        let s3 = symmetric_group(3).unwrap();
        let sys = crate::quantum::standard_system_rep::<f64>(&s3, 2).unwrap();
        let sc = lr_scenario(&s3, 2, sys);
        let ctx01 = sc.relative_context(0, &[1]).unwrap();
        let ctx10 = sc.relative_context(1, &[0]).unwrap();
        let mut r = random::rng(11);
        for _ in 0..10 {
            let omega = random::state::<f64, _>(&mut r, 72);
            let rel1 = sc.relative_state(0, &[1], &omega).unwrap();
            let direct = sc.relative_state(1, &[0], &omega).unwrap();
            let changed = sc.frame_change(0, 1, &rel1).unwrap();
            assert!(ctx10.pairing_deviation(direct.representative(), changed.representative()).unwrap() < 1e-10);

            let back = sc.frame_change(1, 0, &changed).unwrap();
            assert!(ctx01.pairing_deviation(back.representative(), rel1.representative()).unwrap() < 1e-10);

            let k = ctx01.kernel_component(&random::hermitian::<f64, _>(&mut r, 12)).unwrap();
            let a = sc.frame_change_raw(0, 1, rel1.representative()).unwrap();
            let b = sc.frame_change_raw(0, 1, &(rel1.representative() + &k)).unwrap();
            assert!(ctx10.pairing_deviation(&a, &b).unwrap() < 1e-10);
        }
    }

    #[test]
    fn composition_three_frames() {
        let z3 = cyclic_group(3).unwrap();
        let sys = crate::quantum::standard_system_rep::<f64>(&z3, 2).unwrap();
        let sc = lr_scenario(&z3, 3, sys);
        let mut r = random::rng(12);
        for _ in 0..5 {
            let x = random::state::<f64, _>(&mut r, 18);
            assert!(sc.compose_check(0, 1, 2, &x).unwrap() < 1e-10);
        }
        assert!(sc.compose_check(0, 0, 2, &Op::identity(18)).is_err());
    }

    #[test]
    fn luders_and_coherent_agreement() {
        let z3 = cyclic_group(3).unwrap();
        let sys = crate::quantum::standard_system_rep::<f64>(&z3, 2).unwrap();
        let f1 = Frame::canonical(&Rep::left_regular(&z3)).unwrap();
        let chars = Rep::cyclic_characters(&z3, 1, 2).unwrap();
        let seed = nalgebra::DVector::from_vec(vec![
            Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ]);
        let f2 = Frame::coherent(&chars, &seed).unwrap();
        let sc = MultiFrameScenario::new(vec![f1.clone(), f2], sys.clone()).unwrap();
        let mut r = random::rng(13);
        for _ in 0..10 {
            let x = random::state::<f64, _>(&mut r, 4);
            let rep = sc.operational_agreement(0, 1, &x, 1e-9).unwrap();
            assert!(rep.agree, "{rep:?}");
            assert!(rep.luders_deviation < 1e-12);
        }
        let v = sc.coherent_map(0, 1).unwrap();
        let iso = v.adjoint() * &v;
        assert!((iso - DMatrix::identity(4, 4)).iter().all(|z| z.norm() < 1e-12));

        // ideal pair: pure superposition over the second frame decoheres
        let sc = lr_scenario(&z3, 2, sys);
        let a = 0.6;
        let b = 0.8;
        let mut psi = nalgebra::DVector::<Complex<f64>>::zeros(3);
        psi[0] = Complex::new(a, 0.0);
        psi[2] = Complex::new(0.0, b);
        let input = Op::projector(&psi).kron(&Op::unit(2, 1, 1));
        let raw = sc.frame_change_raw(0, 1, &input).unwrap();
        let coherent = sc.coherent_change(0, 1, &input).unwrap();
        let luders = sc.luders_mixture(1, 0, &coherent).unwrap();
        assert!(raw.max_abs_diff(&luders) < 1e-12);
        assert!(raw.max_abs_diff(&coherent) > 0.1);
        let ctx = sc.relative_context(1, &[0]).unwrap();
        assert!(ctx.pairing_deviation(&raw, &coherent).unwrap() < 1e-12);
    }

    #[test]
    fn triangular_reconstruction_localized() {
        let s3 = symmetric_group(3).unwrap();
        let sys = crate::quantum::standard_system_rep::<f64>(&s3, 2).unwrap();
        let f1 = Frame::canonical(&Rep::left_regular(&s3)).unwrap();
        let f2 = Frame::canonical(&Rep::left_right(&s3)).unwrap();
        let mut r = random::rng(14);
        let rho = random::state::<f64, _>(&mut r, 2);
        let w = localizing_state(&f1, s3.e()).unwrap();
        for h in 0..6 {
            let loc = localizing_state(&f2, s3.e()).unwrap();
            let sigma = f2.rep().act_state(s3.inverse_of(h), &loc).unwrap();
            let omega = w.kron(&sigma);
            let out = triangular_reconstruction(&f1, &f2, &sys, &rho, &omega).unwrap();
            assert!(out.max_abs_diff(&sys.act_state(h, &rho).unwrap()) < 1e-12);
        }
        let omega = random::state::<f64, _>(&mut r, 36);
        let a = triangular_reconstruction(&f1, &f2, &sys, &rho, &omega).unwrap();
        let b = reconstruction_product_form(&f1, &f2, &sys, &rho, &omega).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn no_system_context_matches_relative_orientation() {
        let z3 = cyclic_group(3).unwrap();
        let f1 = Frame::canonical(&Rep::left_regular(&z3)).unwrap();
        let f2 = Frame::canonical(&Rep::left_right(&z3)).unwrap();
        let sc = MultiFrameScenario::new(vec![f1.clone(), f2.clone()], Rep::trivial(&z3, 1)).unwrap();
        let ctx = sc.framed_relative_context(0, 1).unwrap();
        let e21 = relative_orientation(&f1, &f2).unwrap();
        let ctx2 = EffectContext::new(9, e21.effects().to_vec()).unwrap();
        assert_eq!(ctx.rank(), ctx2.rank());
        assert!(ctx.mutual_residual(&ctx2).unwrap() < 1e-10);
    }
}
