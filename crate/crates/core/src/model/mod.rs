//! Fuzz-space and test-document model.

mod space;
mod test_doc;
mod validate;
pub mod vocab;

pub use space::{
    geofence_legal, parse_fuzz_space, DroneSpec, EnvironmentSpace, FenceBoundary, FuzzSpace, Mission,
    ParameterSpace, TaskArguments, TaskTemplate, Waypoint,
};
pub use test_doc::{
    canonical_param, parse_test, DroneConfig, Environment, FuzzTest, Hit, RoleAssignment, TestMetadata,
};
pub use validate::{mode_closure, validate_test, HitReachability, ModeState, ValidityReport};
pub use vocab::{Compass, GeofenceAction, Lifecycle, Mode, Switch, Task, TaskKind, Throttle, UnknownToken, Wind, WindSpeed};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("constraint error: {0}")]
    Constraint(String),
}
