//! Hard-rod gas fluctuation laboratory: exact free-flow dynamics in the
//! reduced point description, fluctuation-field estimators, and the Monte
//! Carlo experiments built on them.

pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod measure;
pub mod observable;
pub mod quad;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use estimators::{FieldSample, MCSummary, PairSummary};
pub use experiments::{ExperimentSpec, StatVerdict, Verdict};
pub use measure::{effective_velocity, Atom, Moments, VelocityLengthMeasure};
pub use observable::{FieldObservable, SpatialProfile};
pub use sampler::{GasParameters, Particle, PointConfiguration};
