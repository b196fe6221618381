//! Operational quantum reference frames for finite groups.
//!
//! Core types are generic over the real scalar ([`Real`], implemented for `f32` and `f64`);
//! the `*64` and `*32` aliases below fix the usual instantiations.

pub mod error;
pub mod framechange;
pub mod group;
pub mod json;
pub mod measurement;
pub mod operator;
pub mod opequiv;
pub mod quantum;
pub mod random;
pub mod relativize;
pub mod scalar;

pub use error::{QrfError, Result};
pub use framechange::{AgreementReport, FramedRelativeState, MultiFrameScenario};
pub use group::{builtin_group, CosetSpace, FiniteGroup, GroupElement, Subgroup, BUILTIN_GROUPS};
pub use measurement::{MeasurementScheme, ReproducibilityReport};
pub use operator::{FactorShape, HermitianBasis, Operator};
pub use opequiv::{ContextReport, EffectContext, OperationalState};
pub use quantum::{Frame, FrameFlags, Povm, SampleSpace, State, UnitaryRep};
pub use scalar::Real;

pub type Operator64 = Operator<f64>;
pub type Operator32 = Operator<f32>;
pub type UnitaryRep64 = UnitaryRep<f64>;
pub type UnitaryRep32 = UnitaryRep<f32>;
pub type Povm64 = Povm<f64>;
pub type Povm32 = Povm<f32>;
pub type Frame64 = Frame<f64>;
pub type Frame32 = Frame<f32>;
pub type EffectContext64 = EffectContext<f64>;
pub type EffectContext32 = EffectContext<f32>;
pub type Scenario64 = MultiFrameScenario<f64>;
pub type Scenario32 = MultiFrameScenario<f32>;
pub type MeasurementScheme64 = MeasurementScheme<f64>;
pub type MeasurementScheme32 = MeasurementScheme<f32>;
