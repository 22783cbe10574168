//! Jump kernels with boundary blow-up, sharp two-sided heat-kernel bound
//! forms, Monte Carlo simulators for the associated jump processes, and
//! verification suites that compare them.
//!
//! The deterministic layers (`geometry`, `weights`, `quadrature`, `kernels`,
//! `bounds`) are generic over a [`Real`] scalar. The simulators and suites
//! run in `f64`. Aliases for the common `f64` instantiations live at the
//! crate root.

pub mod error;
pub mod geometry;
pub mod bounds;
pub mod kernels;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod simulate;
pub mod special;
pub mod stats;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Domain = geometry::DomainSpec<f64>;
pub type Domain32 = geometry::DomainSpec<f32>;
pub type Kernel = kernels::Kernel<f64>;
pub type KernelSpec = kernels::KernelSpec<f64>;
pub type BoundSpec = bounds::BoundSpec<f64>;
pub type Weight = weights::WeightSpec<f64>;
pub type Psi = weights::PsiSpec<f64>;
