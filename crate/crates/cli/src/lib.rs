//! Library half of the `solenoid` command: spec loading and report builders.

pub mod report;
pub mod spec;

pub use report::{
    cmd_action, cmd_compare, cmd_invariants, verify_report_witness, CompareOptions, CompareReport, Failure, Outcome,
    Relation, Start,
};
pub use spec::{ChainSpecFile, Pattern};
