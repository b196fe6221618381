//! Representations, POVMs, covariance and reference-frame classification.

mod frame;
mod povm;
mod rep;

pub use frame::{classify_frame, localizing_state, Frame, FrameFlags, State};
pub use povm::{born, canonical_pvm, coherent_state_povm, covariance_deviation, is_covariant, Povm, SampleSpace};
pub use rep::{standard_system_rep, RepKind, UnitaryRep};
