//! Symbolic derivation and numerical simulation of time-dependent
//! dissipative mechanics on cocontact manifolds.
//!
//! The library builds the geometry from symbolic expressions: charts carry
//! named coordinates with roles, differential forms and vector fields are
//! exact symbolic objects, and the dynamical equations come out of the
//! structure rather than being typed in by hand. On top of that sit
//!
//! - Hamiltonian systems on cocontact manifolds ([`cocontact`]), with Reeb
//!   fields, the flat/sharp isomorphism, the Jacobi bracket, and the
//!   Hamiltonian vector field;
//! - Lagrangian systems ([`lagrangian`]), with the contact Lagrangian
//!   one-form, energy, Legendre map, and the Herglotz equations as a second
//!   order field when the Lagrangian is regular;
//! - a constraint algorithm ([`precocontact`]) for singular Lagrangians,
//!   in particular regular Lagrangians made singular by holonomic
//!   constraints and their multipliers, producing a staged ledger of
//!   constraint functions and the dynamics tangent to the final
//!   submanifold;
//! - integrators and diagnostics ([`dynamics`]) that track dissipation
//!   rates, constraint drift, and residuals of the derived equations.
//!
//! The `cocontact` binary drives the same machinery from TOML
//! configurations; the `examples/` directory walks through each capability
//! on worked physical systems.

pub mod chart;
pub mod cli;
pub mod cocontact;
pub mod probe;
pub mod dynamics;
pub mod error;
pub mod exterior;
pub mod lagrangian;
pub mod precocontact;
mod solve;
pub mod symlang;

pub use chart::{Chart, Role};
pub use cocontact::{CocontactSystem, StructureVerdict, SubmanifoldClass, SubmanifoldSpec};
pub use error::{Error, Result};
pub use lagrangian::{LagrangianSystem, LegendreImagePoint, Regularity};
pub use precocontact::{
    holonomic_augment, AlgorithmOptions, AlgorithmStatus, ConstraintLedger, PrecocontactSystem,
};
pub use symlang::eval::{Bindings, ExternalImpl};
pub use symlang::{Expr, Rational};
