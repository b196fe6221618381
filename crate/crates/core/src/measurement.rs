//! Probability and relational reproducibility of measurement schemes.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_check, QrfError, Result};
use crate::group::FiniteGroup;
use crate::operator::{sum_ops, Operator};
use crate::quantum::{canonical_pvm, covariance_deviation, localizing_state, Frame, Povm, UnitaryRep};
use crate::random;
use crate::relativize::{convolve, restrict};
use crate::scalar::Real;

/// Interaction U on H_R⊗H_S, pointer E_R prepared in ω_p, outcome map f: Σ_R → Σ_S, target E_S.
#[derive(Clone, Debug)]
pub struct MeasurementScheme<T: Real> {
    interaction: Operator<T>,
    pointer: Povm<T>,
    pointer_state: Operator<T>,
    outcome_map: Vec<usize>,
    target: Povm<T>,
}

/// Outcome of a reproducibility check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproducibilityReport {
    pub holds: bool,
    pub max_deviation: f64,
    /// `(h, x)` at which the largest deviation occurred.
    pub worst: Option<(usize, usize)>,
    pub checked: usize,
}

impl ReproducibilityReport {
    fn from_deviations(devs: impl IntoIterator<Item = ((usize, usize), f64)>, tol: f64) -> Self {
        let mut worst = None;
        let mut max_deviation = 0.0;
        let mut checked = 0;
        for (at, d) in devs {
            checked += 1;
            if worst.is_none() || d > max_deviation {
                max_deviation = d;
                worst = Some(at);
            }
        }
        Self { holds: max_deviation <= tol, max_deviation, worst, checked }
    }
}

impl<T: Real> MeasurementScheme<T> {
    pub fn new(
        interaction: Operator<T>,
        pointer: Povm<T>,
        pointer_state: Operator<T>,
        outcome_map: Vec<usize>,
        target: Povm<T>,
    ) -> Result<Self> {
        let tol = T::default_tol();
        if !interaction.is_unitary(tol) {
            return Err(QrfError::Argument("interaction is not unitary".into()));
        }
        dim_check("measurement scheme", pointer.dim() * target.dim(), interaction.dim())?;
        dim_check("pointer state", pointer.dim(), pointer_state.dim())?;
        if !pointer_state.is_density(tol) {
            return Err(QrfError::Argument("pointer state is not a density operator".into()));
        }
        if outcome_map.len() != pointer.len() {
            return Err(QrfError::Argument(format!(
                "outcome map has {} entries for {} pointer outcomes",
                outcome_map.len(),
                pointer.len()
            )));
        }
        if let Some(&bad) = outcome_map.iter().find(|&&y| y >= target.len()) {
            return Err(QrfError::Argument(format!("outcome map value {bad} outside the target sample space")));
        }
        Ok(Self { interaction, pointer, pointer_state, outcome_map, target })
    }

    /// Rejects outcome maps that miss a target sample point.
    pub fn require_surjective(self) -> Result<Self> {
        let mut hit = vec![false; self.target.len()];
        for &y in &self.outcome_map {
            hit[y] = true;
        }
        match hit.iter().position(|h| !h) {
            Some(x) => Err(QrfError::Argument(format!("outcome map misses target point {x}"))),
            None => Ok(self),
        }
    }

    pub fn interaction(&self) -> &Operator<T> {
        &self.interaction
    }

    pub fn pointer(&self) -> &Povm<T> {
        &self.pointer
    }

    pub fn pointer_state(&self) -> &Operator<T> {
        &self.pointer_state
    }

    pub fn outcome_map(&self) -> &[usize] {
        &self.outcome_map
    }

    pub fn target(&self) -> &Povm<T> {
        &self.target
    }

    /// Same scheme with a different pointer preparation.
    pub fn with_pointer_state(&self, pointer_state: Operator<T>) -> Result<Self> {
        Self::new(self.interaction.clone(), self.pointer.clone(), pointer_state, self.outcome_map.clone(), self.target.clone())
    }

    /// Γ_ω(U(E_R(S)⊗I)U*), where S are the pointer points with f(shifted(y)) = x.
    fn pulled_back(&self, omega: &Operator<T>, shifted: impl Fn(usize) -> usize, x: usize) -> Operator<T> {
        let (dr, ds) = (self.pointer.dim(), self.target.dim());
        let pre: Vec<usize> = (0..self.pointer.len()).filter(|&y| self.outcome_map[y] == x).collect();
        let f = sum_ops(dr, pre.iter().map(|&y| self.pointer.effect(shifted(y)).clone()));
        // Γ_ω(X) = Σ_k p_k (⟨ψ_k|⊗I) X (|ψ_k⟩⊗I) over the eigendecomposition of ω
        let (vals, vecs) = omega.eigh();
        let u = self.interaction.matrix();
        let mut acc = DMatrix::<Complex<T>>::zeros(ds, ds);
        for (k, &p) in vals.iter().enumerate() {
            if p <= T::default_tol() * T::default_tol() {
                continue;
            }
            let psi = vecs.column(k);
            let w = DMatrix::from_fn(ds, u.ncols(), |s, c| {
                (0..dr).fold(Complex::default(), |a, r| a + psi[r].conj() * u[(r * ds + s, c)])
            });
            let fw = left_mul_first(f.matrix(), &w.adjoint(), dr, ds);
            acc += (&w * fw).map(|z| z * p);
        }
        Operator::wrap(acc)
    }
}

/// (A⊗I)·X for A on the first factor of a dr·ds space.
fn left_mul_first<T: Real>(a: &DMatrix<Complex<T>>, x: &DMatrix<Complex<T>>, dr: usize, ds: usize) -> DMatrix<Complex<T>> {
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for r in 0..dr {
        for rp in 0..dr {
            let c = a[(r, rp)];
            if c == Complex::default() {
                continue;
            }
            for s in 0..ds {
                let src = x.row(rp * ds + s) * c;
                let mut dst = out.row_mut(r * ds + s);
                dst += src;
            }
        }
    }
    out
}

/// Γ_{ω_p}(U·(E_R(f⁻¹(x))⊗I)·U*) = E_S(x) for every target point x.
pub fn check_prc<T: Real>(scheme: &MeasurementScheme<T>, tol: T) -> Result<ReproducibilityReport> {
    let devs = (0..scheme.target.len())
        .map(|x| {
            let g = scheme.pulled_back(&scheme.pointer_state, |y| y, x);
            Ok(((0, x), (&g - scheme.target.effect(x)).op_norm().to_f64_lossy()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReproducibilityReport::from_deviations(devs, tol.to_f64_lossy()))
}

/// Largest Frobenius norm of [U, U_R(g)⊗I] together with the group element attaining it.
pub fn commutation_deviation<T: Real>(scheme: &MeasurementScheme<T>, rep_r: &UnitaryRep<T>) -> Result<(usize, T)> {
    dim_check("commutation", scheme.pointer.dim(), rep_r.dim())?;
    let (dr, ds) = (scheme.pointer.dim(), scheme.target.dim());
    let u = scheme.interaction.matrix();
    let ua = u.adjoint();
    let mut worst = (0, T::zero());
    for g in 0..rep_r.group().order() {
        let a = rep_r.matrix(g).matrix();
        // U(A⊗I) = ((A*⊗I)U*)*
        let uv = left_mul_first(&a.adjoint(), &ua, dr, ds).adjoint();
        let vu = left_mul_first(a, u, dr, ds);
        let d = (uv - vu).iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        if d > worst.1 {
            worst = (g, d);
        }
    }
    Ok(worst)
}

/// Checks the h-shifted reproducibility identity for every h ∈ G and target point.
///
/// The pointer preparation is rotated to U_R(h)ω_pU_R(h)* and the pointer event to h.f⁻¹(x).
pub fn check_rrc<T: Real>(scheme: &MeasurementScheme<T>, rep_r: &UnitaryRep<T>, tol: T) -> Result<ReproducibilityReport> {
    let (g, d) = commutation_deviation(scheme, rep_r)?;
    if d > tol {
        return Err(QrfError::Precondition(format!(
            "interaction does not commute with frame rotations: worst g = {} (deviation {:e})",
            rep_r.group().label(g),
            d.to_f64_lossy()
        )));
    }
    let space = scheme.pointer.space();
    if space.group() != Some(rep_r.group()) {
        return Err(QrfError::Argument("pointer sample space carries no action of the frame group".into()));
    }
    let mut devs = Vec::new();
    for h in 0..rep_r.group().order() {
        let omega = rep_r.act_op_unchecked(h, &scheme.pointer_state);
        for x in 0..scheme.target.len() {
            let gam = scheme.pulled_back(&omega, |y| space.act(h, y).expect("group action"), x);
            devs.push(((h, x), (&gam - scheme.target.effect(x)).op_norm().to_f64_lossy()));
        }
    }
    Ok(ReproducibilityReport::from_deviations(devs, tol.to_f64_lossy()))
}

/// tr[(h.ω⊗ρ)·(E_S*E_R)(h.x)] = tr[ρ·E_S(x)] with ω localized at e, for all h, x and seeded ρ.
///
/// The operator identity behind it is checked as well; the report carries the larger deviation.
pub fn rrc_relative_orientation<T: Real>(
    frame_r: &Frame<T>,
    target: &Povm<T>,
    system_rep: &UnitaryRep<T>,
    seed: u64,
    trials: usize,
    tol: T,
) -> Result<ReproducibilityReport> {
    frame_r.require_localizable("rrc_relative_orientation")?;
    match covariance_deviation(target, system_rep) {
        Some(d) if d <= T::default_tol() => {}
        _ => return Err(QrfError::Argument("target POVM is not covariant for the system representation".into())),
    }
    let conv = convolve(target, frame_r, system_rep)?;
    let group = frame_r.rep().group();
    let omega = localizing_state(frame_r, group.e())?;
    let mut rng = random::rng(seed);
    let rhos: Vec<Operator<T>> = (0..trials).map(|_| random::state(&mut rng, system_rep.dim())).collect();
    let space = target.space();
    let (dr, ds) = (frame_r.dim(), system_rep.dim());
    // tr[(W⊗ρ)C] = tr[W·tr_S[(I⊗ρ)C]], paired on the system side once per (ρ, effect)
    let paired: Vec<Vec<Operator<T>>> =
        rhos.iter().map(|rho| conv.effects().iter().map(|c| pair_second_factor(rho, c, dr, ds)).collect()).collect();
    let mut devs = Vec::new();
    for h in 0..group.order() {
        let wh = frame_r.rep().act_state_unchecked(h, &omega);
        for x in 0..target.len() {
            let hx = space.act(h, x).expect("covariant target has a group action");
            let gam = restrict(&wh, conv.effect(hx))?;
            let mut d = (&gam - target.effect(x)).op_norm();
            for (rho, p) in rhos.iter().zip(&paired) {
                let lhs = wh.trace_product(&p[hx]).re;
                let rhs = rho.trace_product(target.effect(x)).re;
                d = d.max((lhs - rhs).abs());
            }
            devs.push(((h, x), d.to_f64_lossy()));
        }
    }
    Ok(ReproducibilityReport::from_deviations(devs, tol.to_f64_lossy()))
}

/// tr_S[(I⊗ρ)C] for C on H_R⊗H_S.
fn pair_second_factor<T: Real>(rho: &Operator<T>, c: &Operator<T>, dr: usize, ds: usize) -> Operator<T> {
    let mut m = DMatrix::<Complex<T>>::zeros(dr, dr);
    for a in 0..dr {
        for b in 0..dr {
            let mut acc = Complex::default();
            for i in 0..ds {
                for j in 0..ds {
                    acc += rho.get(j, i) * c.get(a * ds + i, b * ds + j);
                }
            }
            m[(a, b)] = acc;
        }
    }
    Operator::wrap(m)
}

/// |g,h⟩ ↦ |gh⁻¹,h⟩ on ℓ²(G)⊗ℓ²(G).
pub fn pointer_shift<T: Real>(group: &FiniteGroup) -> Operator<T> {
    let n = group.order();
    sum_ops(
        n * n,
        (0..n).flat_map(|g| (0..n).map(move |h| (g, h))).map(|(g, h)| {
            let to = group.op(g, group.inverse_of(h)) * n + h;
            Operator::unit(n * n, to, g * n + h)
        }),
    )
}

/// |g,h⟩ ↦ |g,hg⟩ on ℓ²(G)⊗ℓ²(G).
pub fn system_shift<T: Real>(group: &FiniteGroup) -> Operator<T> {
    let n = group.order();
    sum_ops(
        n * n,
        (0..n).flat_map(|g| (0..n).map(move |h| (g, h))).map(|(g, h)| Operator::unit(n * n, g * n + group.op(h, g), g * n + h)),
    )
}

/// Left-regular pointer and system with canonical PVMs, ω_p = |e⟩⟨e|, f = id and the pointer shift.
pub fn canonical_fixture<T: Real>(group: &FiniteGroup) -> Result<(MeasurementScheme<T>, UnitaryRep<T>)> {
    let rep = UnitaryRep::left_regular(group);
    let pvm = canonical_pvm(&rep)?;
    let n = group.order();
    let omega = Operator::unit(n, group.e(), group.e());
    let scheme = MeasurementScheme::new(pointer_shift(group), pvm.clone(), omega, (0..n).collect(), pvm)?;
    Ok((scheme, rep))
}

/// Random pointer preparation for continuity probes.
pub fn perturbed_pointer_state<T: Real, R: Rng + ?Sized>(omega: &Operator<T>, eps: T, rng: &mut R) -> Operator<T> {
    let noise = random::mixed_state::<T, _>(rng, omega.dim());
    &omega.scale(T::one() - eps) + &noise.scale(eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{cyclic_group, symmetric_group};
    use crate::quantum::SampleSpace;

    #[test]
    fn canonical_fixture_reproduces() {
        for g in [cyclic_group(3).unwrap(), symmetric_group(3).unwrap()] {
            let (scheme, rep) = canonical_fixture::<f64>(&g).unwrap();
            let prc = check_prc(&scheme, 1e-10).unwrap();
            assert!(prc.holds && prc.max_deviation < 1e-12, "{prc:?}");
            let rrc = check_rrc(&scheme, &rep, 1e-10).unwrap();
            assert!(rrc.holds, "{rrc:?}");
            assert_eq!(rrc.checked, g.order() * g.order());
        }
    }

    #[test]
    fn system_shift_is_not_a_witness() {
        let s3 = symmetric_group(3).unwrap();
        let (scheme, rep) = canonical_fixture::<f64>(&s3).unwrap();
        let alt = MeasurementScheme::new(
            system_shift(&s3),
            scheme.pointer().clone(),
            scheme.pointer_state().clone(),
            scheme.outcome_map().to_vec(),
            scheme.target().clone(),
        )
        .unwrap();
        assert!(!check_prc(&alt, 1e-10).unwrap().holds);
        match check_rrc(&alt, &rep, 1e-10) {
            Err(QrfError::Precondition(msg)) => assert!(msg.contains("worst g")),
            other => panic!("expected precondition error, got {other:?}"),
        }
    }

    #[test]
    fn prc_deviation_matches_dense_oracle() {
        let z2 = cyclic_group(2).unwrap();
        let pvm = canonical_pvm(&UnitaryRep::<f64>::left_regular(&z2)).unwrap();
        let mut r = random::rng(21);
        let u = random::unitary::<f64, _>(&mut r, 6);
        let omega = random::mixed_state::<f64, _>(&mut r, 2);
        let p0 = Operator::from_real_diagonal(&[1.0, 0.0, 1.0]);
        let target = Povm::new(SampleSpace::Points(2), vec![p0.clone(), &Operator::identity(3) - &p0]).unwrap();
        let scheme = MeasurementScheme::new(u.clone(), pvm.clone(), omega.clone(), vec![0, 1], target.clone()).unwrap();
        let oracle = (0..2)
            .map(|x| {
                let m = &(&u * &pvm.effect(x).kron(&Operator::identity(3))) * &u.adjoint();
                (&restrict(&omega, &m).unwrap() - target.effect(x)).op_norm()
            })
            .fold(0.0, f64::max);
        let rep = check_prc(&scheme, 1e-9).unwrap();
        assert!((rep.max_deviation - oracle).abs() < 1e-12);
    }

    #[test]
    fn decoupled_and_perturbed() {
        let z3 = cyclic_group(3).unwrap();
        let rep = UnitaryRep::<f64>::left_regular(&z3);
        let pvm = canonical_pvm(&rep).unwrap();
        let mut r = random::rng(3);
        let omega = random::mixed_state::<f64, _>(&mut r, 3);
        let probs = crate::quantum::born(&pvm, &omega).unwrap();
        let target = Povm::new(SampleSpace::Points(3), probs.iter().map(|&p| Operator::identity(2).scale(p)).collect()).unwrap();
        let scheme = MeasurementScheme::new(Operator::identity(6), pvm, omega, vec![0, 1, 2], target).unwrap();
        assert!(check_prc(&scheme, 1e-12).unwrap().holds);

        let (fixture, _) = canonical_fixture::<f64>(&z3).unwrap();
        let moved = perturbed_pointer_state(fixture.pointer_state(), 0.1, &mut r);
        let p = check_prc(&fixture.with_pointer_state(moved).unwrap(), 1e-10).unwrap();
        assert!(!p.holds && p.max_deviation > 1e-3);
    }

    #[test]
    fn validation_and_surjectivity() {
        let z2 = cyclic_group(2).unwrap();
        let (s, _) = canonical_fixture::<f64>(&z2).unwrap();
        let bad = &Operator::identity(4) + &Operator::unit(4, 0, 1);
        assert!(matches!(
            MeasurementScheme::new(bad, s.pointer().clone(), s.pointer_state().clone(), vec![0, 1], s.target().clone()),
            Err(QrfError::Argument(_))
        ));
        let constant =
            MeasurementScheme::new(Operator::identity(4), s.pointer().clone(), s.pointer_state().clone(), vec![0, 0], s.target().clone())
                .unwrap();
        assert!(constant.clone().require_surjective().is_err());
        assert!(s.require_surjective().is_ok());
    }

    #[test]
    fn relative_orientation_realizes_rrc() {
        let s3 = symmetric_group(3).unwrap();
        let frame = Frame::canonical(&UnitaryRep::<f64>::left_regular(&s3)).unwrap();
        let sys = UnitaryRep::<f64>::left_right(&s3);
        let target = canonical_pvm(&sys).unwrap();
        let rep = rrc_relative_orientation(&frame, &target, &sys, 5, 4, 1e-10).unwrap();
        assert!(rep.holds && rep.max_deviation < 1e-12, "{rep:?}");

        let uniform = Povm::new(SampleSpace::Group(s3.clone()), vec![Operator::identity(1).scale(1.0 / 6.0); 6]).unwrap();
        let flat = crate::quantum::classify_frame(&UnitaryRep::trivial(&s3, 1), &uniform).unwrap();
        assert!(matches!(rrc_relative_orientation(&flat, &target, &sys, 5, 1, 1e-10), Err(QrfError::UnsupportedFrame(_))));
    }
}
