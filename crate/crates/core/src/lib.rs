//! Type-change refactoring for a Java subset.
//!
//! A catalog of type-change patterns drives the migration of one program
//! element's declared type: references are found, adapted through rewrite
//! rules, and the change is propagated to connected declarations.

pub mod jparse;
pub mod template;
pub mod specmodel;
pub mod refgraph;
pub mod engine;
pub mod modes;
