//! Exact invariants and normal-form classification of plane curve
//! singularities over fields of arbitrary characteristic.
//!
//! The crate computes, for parametrized plane curve germs over Q, F_p, or
//! F_{p^k}: the value semigroup with conductor and delta invariant,
//! intersection multiplicities, maximal contact multiplicity, determinacy
//! bounds, constructive normal-form reduction under left-right equivalence,
//! an equivalence decider with replayable move certificates, and the
//! classification of irreducible germs into the simple types A, E, W, W#
//! with their characteristic-dependent catalogs.
//!
//! Entry points: [`Parametrization`] / [`Branch`] for input objects,
//! [`invariants`] for the numerical invariants, [`normalform::reduce`] for
//! the reduction engine, [`classify::classify_full`] for the full pipeline,
//! and the `examples/` directory for runnable walkthroughs of each
//! capability.  A thin `singclass` binary exposes the same operations as
//! subcommands.

pub mod bivar;
pub mod classify;
pub mod invariants;
pub mod normalform;
pub mod param;
pub mod semigroup;
pub mod error;
pub mod field;
pub mod series;

pub use error::{Error, Result};
pub use field::{Field, FieldElem, FieldHom};
pub use normalform::{are_equivalent, brute_orbit_oracle, reduce, Equivalence, OrbitOptions, ReduceOptions, ReductionResult, Residual, ScalingPolicy};
pub use param::{Branch, LeftMove, MoveStep, Orientation, Parametrization, RightMove, Transcript};
pub use classify::{catalog, implicitize, simpleness_gate, CatalogRow, NotSimpleCondition, SingularityType};
pub use invariants::{conductor_vector, determinacy_bound, intersection_multiplicity, max_contact, ConductorVector, DeterminacyBound, DeterminacyCase, MaxContact};
pub use semigroup::{value_semigroup, ValueSemigroup};
pub use series::{SeriesOrder, TruncSeries};
