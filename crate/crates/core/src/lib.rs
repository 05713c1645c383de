//! Finite-state Dirichlet forms and the order isomorphisms that intertwine
//! their semigroups.
//!
//! A Dirichlet form on a finite measured state set is a weighted graph with a
//! killing rate at each vertex. This crate builds the generator and the
//! sub-Markovian semigroup of such a form, decomposes the state space into
//! irreducible invariant components, and implements the three elementary
//! transforms between forms:
//!
//! * the Doob h-transform by an excessive function `h` (`f ↦ f/h`),
//! * a measure-preserving relabeling `j` of the states (`f ↦ f∘j⁻¹`),
//! * a step scaling `φ` that is constant on each irreducible component
//!   (`f ↦ φ·f`).
//!
//! Every order isomorphism `U f = (f/s)∘τ⁻¹` that intertwines two semigroups
//! factors uniquely as `U = U_φ U_j U_h`; [`factorize`] computes that triple and
//! [`synthesize`] goes the other way.
//!
//! On a finite state space with a fully supported measure there are no polar
//! sets, every nest is eventually the whole space, and the absolute continuity
//! condition on transition kernels holds automatically, so none of these are
//! modeled or checked.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod factorize;
pub mod form;
pub mod invariant;
pub mod order_iso;
pub mod semigroup;
pub mod space;
mod tolerance;
pub mod transform;

pub use error::{Error, ErrorKind, Result};
pub use factorize::{
    check_uniqueness, factorize, factorize_componentwise, factorize_irreducible, factorize_unitary,
    step_scaling_from_values, synthesize, ComponentFactorization, Diagnostics, Factorization,
};
pub use form::{build_generator, DirichletForm, Generator};
pub use invariant::{
    irreducible_decomposition, is_invariant, restrict_form, restrict_semigroup,
    IrreducibleDecomposition,
};
pub use order_iso::{
    compose, generator_residual, intertwines, operator_norm_on_component, restrict,
    semigroup_residual, IntertwiningReport, OrderIsomorphism, StepScaling,
};
pub use semigroup::{is_markovian, semigroup_apply, MarkovReport, MarkovSample, Semigroup};
pub use space::{StateSpace, StateSubset, DEFAULT_STATE_CAP};
pub use tolerance::Tolerances;
pub use transform::{
    apply_uh, apply_uh_inverse, apply_uj, apply_uj_inverse, h_semigroup, h_transform, is_excessive,
    pushforward_form, ExcessiveFunction, ExcessiveReport, Relabeling,
};

pub use nalgebra::DMatrix;

/// Time grid used by the sampled semigroup oracles when the caller has no
/// preference. Small times catch first-order violations, large times catch
/// accumulated ones.
pub const DEFAULT_T_GRID: [f64; 6] = [1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0];
