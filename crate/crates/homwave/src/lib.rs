//! IO, reference spaces, run configuration, the verification suite and the
//! command implementations behind the `homwave` binary.

pub mod commands;
pub mod config;
pub mod io;
pub mod model;
pub mod reference;
pub mod report;
pub mod suite;

pub use config::RunConfig;
pub use model::Model;
pub use reference::Reference;
