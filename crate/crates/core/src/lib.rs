//! Geometry, losses and weak-supervision training for learning 3D gaze from
//! scenes where two people look at each other.

pub mod annotate;
pub mod geometry;
pub mod grad;
pub mod losses;
pub mod scalar;
pub mod scene;
pub mod trainer;

/// Default scalar for the concrete aliases below.
pub type Real = f64;

pub type Vec2 = geometry::Vec2<Real>;
pub type Vec3 = geometry::Vec3<Real>;
pub type Mat3 = geometry::Mat3<Real>;
pub type UnitVec3 = geometry::UnitVec3<Real>;
pub type GazeAngles = geometry::GazeAngles<Real>;
pub type FacePlane = geometry::FacePlane<Real>;
pub type GazePrediction = losses::GazePrediction<Real>;
pub type Dual = grad::Dual<Real>;
