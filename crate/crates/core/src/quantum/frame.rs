use std::ops::Deref;

use nalgebra::DVector;
use num_complex::Complex;

use crate::error::{QrfError, Result};
use crate::group::Subgroup;
use crate::operator::Operator;
use crate::quantum::povm::{canonical_pvm, coherent_state_povm, covariance_deviation, effects_close, Povm};
use crate::quantum::rep::UnitaryRep;
use crate::scalar::{abs, Real};

/// Density operator.
#[derive(Clone, Debug, PartialEq)]
pub struct State<T: Real>(Operator<T>);

impl<T: Real> State<T> {
    pub fn new(rho: Operator<T>) -> Result<Self> {
        if rho.is_density(T::default_tol()) {
            Ok(Self(rho))
        } else {
            Err(QrfError::Argument("operator is not a density matrix".into()))
        }
    }

    pub fn pure(psi: &DVector<Complex<T>>) -> Result<Self> {
        Self::new(Operator::projector(psi))
    }

    pub fn into_operator(self) -> Operator<T> {
        self.0
    }
}

impl<T: Real> Deref for State<T> {
    type Target = Operator<T>;
    fn deref(&self) -> &Operator<T> {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FrameFlags {
    pub principal: bool,
    pub sharp: bool,
    pub ideal: bool,
    pub localizable: bool,
    pub complete: bool,
    /// Built from a coherent-state system.
    pub coherent: bool,
}

/// Quantum reference frame: a representation with a covariant POVM.
#[derive(Clone, Debug)]
pub struct Frame<T: Real> {
    rep: UnitaryRep<T>,
    povm: Povm<T>,
    flags: FrameFlags,
    isotropy: Subgroup,
    coherent_seed: Option<(DVector<Complex<T>>, T)>,
}

impl<T: Real> Frame<T> {
    /// Frame carrying the canonical PVM of a permutation representation.
    pub fn canonical(rep: &UnitaryRep<T>) -> Result<Self> {
        classify_frame(rep, &canonical_pvm(rep)?)
    }

    /// Frame carrying the coherent-state POVM generated by `seed`.
    pub fn coherent(rep: &UnitaryRep<T>, seed: &DVector<Complex<T>>) -> Result<Self> {
        let (povm, lambda) = coherent_state_povm(rep, seed)?;
        let mut f = classify_frame(rep, &povm)?;
        f.flags.coherent = true;
        f.coherent_seed = Some((seed.clone(), lambda));
        Ok(f)
    }

    pub fn rep(&self) -> &UnitaryRep<T> {
        &self.rep
    }

    pub fn povm(&self) -> &Povm<T> {
        &self.povm
    }

    pub fn flags(&self) -> FrameFlags {
        self.flags
    }

    pub fn isotropy(&self) -> &Subgroup {
        &self.isotropy
    }

    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    pub fn effect(&self, x: usize) -> &Operator<T> {
        self.povm.effect(x)
    }

    /// Seed vector and normalization λ for coherent frames.
    pub fn coherent_seed(&self) -> Option<&(DVector<Complex<T>>, T)> {
        self.coherent_seed.as_ref()
    }

    pub(crate) fn require_principal(&self, op: &str) -> Result<()> {
        if self.flags.principal {
            Ok(())
        } else {
            Err(QrfError::UnsupportedFrame(format!("{op} needs a principal frame (sample space G)")))
        }
    }

    pub(crate) fn require_localizable(&self, op: &str) -> Result<()> {
        if self.flags.localizable {
            Ok(())
        } else {
            Err(QrfError::UnsupportedFrame(format!("{op} needs a localizable frame")))
        }
    }
}

/// Checks covariance and computes the classification flags and isotropy subgroup.
pub fn classify_frame<T: Real>(rep: &UnitaryRep<T>, povm: &Povm<T>) -> Result<Frame<T>> {
    let tol = T::default_tol();
    let dev = covariance_deviation(povm, rep).ok_or_else(|| {
        QrfError::Construction("POVM sample space and representation do not share a group and dimension".into())
    })?;
    if dev > tol {
        return Err(QrfError::Construction(format!("POVM is not covariant: deviation {dev:e}")));
    }
    let principal = povm.space().is_principal();
    let sharp = povm.effects().iter().all(|e| effects_close(&(e * e), e, tol));
    let localizable = povm.effects().iter().all(|e| {
        let n = e.op_norm();
        n <= tol || abs(n - T::one()) <= tol
    });
    let g = rep.group();
    let members: Vec<usize> = (0..g.order())
        .filter(|&h| povm.effects().iter().all(|e| effects_close(&rep.act_op_unchecked(h, e), e, tol)))
        .collect();
    let isotropy = Subgroup::new(g, &members)?;
    let flags = FrameFlags {
        principal,
        sharp,
        ideal: principal && sharp,
        localizable,
        complete: isotropy.is_trivial(),
        coherent: false,
    };
    Ok(Frame { rep: rep.clone(), povm: povm.clone(), flags, isotropy, coherent_seed: None })
}

/// Pure state ξ with ⟨ξ|E(x)|ξ⟩ = ‖E(x)‖ = 1.
pub fn localizing_state<T: Real>(frame: &Frame<T>, x: usize) -> Result<State<T>> {
    frame.require_localizable("localizing_state")?;
    let povm = frame.povm();
    if x >= povm.len() {
        return Err(QrfError::Argument(format!("sample point {x} out of range")));
    }
    let e = povm.effect(x);
    let n = e.dim();
    let psi = if e.is_exactly_diagonal() {
        let d = e.diagonal_re();
        let i = (0..n).fold(0, |b, i| if d[i] > d[b] { i } else { b });
        Operator::basis_ket(n, i)
    } else {
        let (_, vecs) = e.eigh();
        vecs.column(n - 1).into_owned()
    };
    let rho = Operator::projector(&psi);
    let p = rho.trace_product(e).re;
    if p < T::one() - T::default_tol() {
        return Err(QrfError::UnsupportedFrame(format!("effect {x} has no norm-1 eigenvector (max {p})")));
    }
    Ok(State(rho))
}
