//! Numerical verification of Einstein, hypercomplex and quaternion-Kähler
//! structures on torus bundles over hyperKähler bases.
//!
//! Geometry is evaluated pointwise on coordinate charts using second-order
//! jets, so derivatives, exterior derivatives and curvature are exact up to
//! rounding.

pub mod calculus;
pub mod curvature;
pub mod einstein_ode;
pub mod error;
pub mod exterior;
pub mod map;
pub mod reduction;
pub mod sampling;
pub mod spaces;

pub use calculus::{finite_difference_check, lift_coordinate, ChartPoint, Field, Jet2, Order, ScalarField};
pub use curvature::{
    acs_from_pair, einstein_residual, holonomy_dim_estimate, killing_residual, nijenhuis,
    riemann_ricci_scalar, CurvatureAtPoint, EndomorphismField, JetMatrix, MetricField,
};
pub use error::{GeomError, Result};
pub use exterior::{ComplexFormField, FormJet, KFormField, VectorField, VectorJet};
pub use sampling::{SampleBox, Worst};
pub use map::ChartMap;
pub use spaces::{BundleKind, HKData, ProfileSet, SpaceModel};
