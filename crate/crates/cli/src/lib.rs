//! Command-line front end, session state and benchmark harness for covmat.

pub mod bench;
pub mod cmd;
pub mod report;
pub mod state;

pub use cmd::run;
