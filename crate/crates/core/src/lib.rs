//! Finite miquelian Laguerre planes over odd prime fields, the pencil
//! group `Δ(p, K)` and its residual skewaffine space.

pub mod autgroup;
mod bits;
pub mod field;
pub mod plane;
pub mod report;
pub mod skewaffine;
pub mod verify;

pub use autgroup::{AutClass, DeltaGroup, GroupError, PencilAut, PermutationMap};
pub use field::{Fe, FieldError, FieldSpec, SquareClass};
pub use plane::{Circle, DerivedAffine, Generator, Pencil, Plane, PlaneError, Point};
pub use report::{Report, Status, Tally};
pub use skewaffine::{Axiom, Budget, GroupSpace, Line, LineKind, SpaceError};
pub use verify::{
    height_class, opposite_ideals, run_all, thm_check, thm_equiv_rel, thm_tangency_locus, CheckId, EquivBlock,
    EquivPartition, Suite, VerifyError,
};
