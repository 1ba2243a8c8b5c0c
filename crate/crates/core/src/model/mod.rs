//! Requirements, architecture and trace models with structural validation.

pub mod architecture;
pub mod requirements;
pub mod trace;

pub use architecture::{validate_architecture_model, ArchElement, ArchitectureModel, Connection, PortDirection};
pub use requirements::{
    neighbors, validate_requirements_model, Constraint, Direction, Origin, Property, Relation, RelationKind,
    Requirement, RequirementsModel,
};
pub use trace::{validate_trace_model, Trace, TraceKind, TraceModel};
