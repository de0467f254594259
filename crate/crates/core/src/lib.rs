//! Simulation laboratory for sequential teaching of learners whose inner
//! state can be changed by tutoring.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision used by the command-line tool and the service.

pub mod belief;
pub mod config;
pub mod datagen;
pub mod learner;
pub mod metateach;
pub mod planner;
pub mod rng;
pub mod scalar;

pub use scalar::Scalar;

pub type Dataset64 = datagen::Dataset<f64>;
pub type Dataset32 = datagen::Dataset<f32>;
pub type DatasetSpec64 = datagen::DatasetSpec<f64>;
pub type InnerState64 = learner::InnerState<f64>;
pub type LearnerSim64 = learner::LearnerSim<f64>;
pub type Belief64 = belief::Belief<f64>;
pub type Belief32 = belief::Belief<f32>;
pub type WeightGrid64 = belief::WeightGrid<f64>;
pub type TeacherConfig64 = planner::TeacherConfig<f64>;
pub type TeachingEnv64 = planner::TeachingEnv<f64>;
pub type EpisodeLog64 = planner::EpisodeLog<f64>;
pub type ExperimentSetup64 = planner::ExperimentSetup<f64>;
pub type MetaConfig64 = metateach::MetaConfig<f64>;
pub type NetParams64 = metateach::NetParams<f64>;
