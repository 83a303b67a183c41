//! Support library for the `submm` binary: JSON constraint descriptions,
//! the named-graph catalog, and the experiment grid runner.

pub mod constraint_spec;
pub mod experiments;
