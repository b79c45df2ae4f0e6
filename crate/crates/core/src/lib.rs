//! Transfer-operator numerics for piecewise expanding interval maps.
//!
//! The crate is organised bottom-up:
//!
//! * [`map_model`] builds piecewise monotone maps with explicit inverse
//!   branches and checks their structural conditions (horseshoes, transition
//!   matrices).
//! * [`observables`] holds evaluable observables, `p`-variation and quadrature
//!   against an invariant density.
//! * [`transfer_operator`] implements the Perron-Frobenius operator, the Ulam
//!   discretisation, the normalised operator `P(u) = Φ(uh)/h` and the Koopman
//!   operator `U(w) = w∘T`.
//! * [`basis`] constructs orthonormal bases of `Ker P` and the coefficient
//!   functionals `c_{i,j}(u) = ⟨u, φ_i∘T^j⟩_{hm}`.
//! * [`cohomology`] solves the cohomological equation `v∘T − λv = u` by a
//!   Neumann series and iterates it into the finite depth ladder.
//!
//! Inner loops over grid cells run on rayon when the `parallel` feature is
//! enabled (the default). Reductions are always performed sequentially in
//! index order, so results are bitwise identical with and without it.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod cohomology;
pub mod grid;
pub mod homeo;
pub mod map_model;
pub mod observables;
pub mod par;
pub mod random;
pub mod transfer_operator;
pub mod verify;

pub use grid::{GridFunction, Interpolation, Interval};
pub use homeo::Homeomorphism;
pub use map_model::{build_map, MapKind, MapSpec, PiecewiseMap};
pub use observables::Observable;
pub use transfer_operator::InvariantDensity;
