//! Planted matching on the complete bipartite graph: exact matchings, the
//! reduced ODE for the recovered fraction, the distributional recursion and
//! its tree message passing.

pub mod bounds;
pub mod dist;
pub mod error;
pub mod matching;
pub mod model;
pub mod ode;
pub mod pwit;
pub mod rde;
pub mod rng;
pub mod scalar;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Instance = model::PlantedInstance<f64>;
pub type Matching = matching::MatchingResult<f64>;
pub type Solution = ode::OdeSolution<f64>;
pub type Solution32 = ode::OdeSolution<f32>;
pub type Instance32 = model::PlantedInstance<f32>;
pub type OdeBoundary = pwit::Boundary<dist::TabulatedCdf, dist::TabulatedCdf>;
pub type PoolBoundary = pwit::Boundary<dist::SampledDistribution, dist::SampledDistribution>;
