//! Workbench for population protocols: run plain, mediated and
//! immediate-observation mediated protocols, compile two-way protocols into
//! immediate-observation mediated ones, and check the compilation against
//! its source by exhaustive reachability on small populations.

pub mod cli;
pub mod compiler;
pub mod execution;
pub mod format;
pub mod library;
pub mod model;
pub mod translation;
pub mod verifier;
